//! Damped Newton iteration for `f^k(z) = target`, where the target is a
//! fixed point of the sphere or `z` itself (periodic points).
//!
//! Residuals and steps are formed in whichever chart the iterate's jet is
//! in, so seeds close to poles do not overflow.

use num_complex::Complex64;

use crate::fnexpr::{iterate_jet, Expr};
use crate::sphere::{Chart, Jet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Solve `f^k(z) = p`.
    Point(Complex64),
    /// Solve `f^k(z) = z`.
    Identity,
}

impl Target {
    fn at(self, z: Complex64) -> (Complex64, Complex64) {
        match self {
            Target::Point(p) => (p, Complex64::new(0.0, 0.0)),
            Target::Identity => (z, Complex64::new(1.0, 0.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub max_steps: usize,
    /// Converged once `|Δz| ≤ step_tol · max(1, |z|)`.
    pub step_tol: f64,
    /// Seeds whose iterate leaves `|z| ≤ divergence` are abandoned.
    pub divergence: f64,
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            max_steps: 80,
            step_tol: 1e-13,
            divergence: 1e6,
            max_halvings: 10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub z: Complex64,
    /// `|f^k(z) - target|`.
    pub residual: f64,
    /// Jet of `f^k` at `z`.
    pub jet: Jet,
    pub steps: usize,
}

/// Residual `|F(z)|` and Newton step `F/F'` for `F = f^k - target`.
pub fn residual_and_step(jet: &Jet, target: Target) -> (f64, Option<Complex64>) {
    let (t, dt) = target.at(jet.base);
    let (res, step) = match jet.chart {
        Chart::Identity => {
            let f = jet.value - t;
            let df = jet.deriv - dt;
            (f.norm(), f / df)
        }
        Chart::Reciprocal => {
            let w = jet.value;
            // F = 1/w - t, F' = -w'/w² - t'; multiply through by w².
            let res = (Complex64::new(1.0, 0.0) - t * w).norm() / w.norm();
            (res, (w - t * w * w) / (-jet.deriv - dt * w * w))
        }
    };
    let step = (step.re.is_finite() && step.im.is_finite()).then_some(step);
    (if res.is_nan() { f64::INFINITY } else { res }, step)
}

/// Runs damped Newton from `seed` on `f^order(z) = target`.
///
/// Returns the last iterate once the step size falls below tolerance;
/// callers check the residual against their own acceptance rule.
pub fn solve(
    e: &Expr,
    order: usize,
    target: Target,
    seed: Complex64,
    s: &NewtonSettings,
) -> Option<Root> {
    let eval = |z: Complex64| iterate_jet(e, z, order).ok();
    let mut z = seed;
    let mut jet = eval(z)?;
    let (mut res, mut step) = residual_and_step(&jet, target);
    for k in 0..s.max_steps {
        let mut dz = step?;
        let mut accepted = None;
        for _ in 0..=s.max_halvings {
            let cand = z - dz;
            if let Some(j) = eval(cand) {
                let (r, st) = residual_and_step(&j, target);
                if r <= res || r == 0.0 {
                    accepted = Some((cand, j, r, st));
                    break;
                }
            }
            dz *= 0.5;
        }
        let Some((cand, j, r, st)) = accepted else {
            // Stalled: no damped step reduces the residual.
            return Some(Root {
                z,
                residual: res,
                jet,
                steps: k,
            });
        };
        let moved = (cand - z).norm();
        z = cand;
        jet = j;
        res = r;
        step = st;
        if !(z.norm() <= s.divergence) {
            return None;
        }
        if moved <= s.step_tol * z.norm().max(1.0) || res == 0.0 {
            return Some(Root {
                z,
                residual: res,
                jet,
                steps: k + 1,
            });
        }
    }
    Some(Root {
        z,
        residual: res,
        jet,
        steps: s.max_steps,
    })
}

/// Rectangular region of the plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Region {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    /// Square of half-width `r` around `c`.
    pub fn around(c: Complex64, r: f64) -> Self {
        Region::new(c.re - r, c.re + r, c.im - r, c.im + r)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// `nre × nim` lattice including the edges; a count of one places the
    /// single node at the midpoint.
    pub fn lattice(&self, nre: usize, nim: usize) -> Vec<Complex64> {
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            match n {
                0 => vec![],
                1 => vec![0.5 * (lo + hi)],
                _ => (0..n)
                    .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                    .collect(),
            }
        };
        let xs = axis(self.re_min, self.re_max, nre);
        let ys = axis(self.im_min, self.im_max, nim);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y)))
            .collect()
    }
}

/// Sorts points lexicographically by `(re, im)` and keeps one
/// representative per cluster of radius `radius`.
pub fn dedup_points<T>(mut items: Vec<T>, radius: f64, key: impl Fn(&T) -> Complex64) -> Vec<T> {
    items.sort_by(|a, b| {
        let (a, b) = (key(a), key(b));
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
    });
    let mut kept: Vec<T> = Vec::with_capacity(items.len());
    for item in items {
        let z = key(&item);
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| z.re - key(k).re <= radius)
            .any(|k| (key(k) - z).norm() <= radius);
        if !dup {
            kept.push(item);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnexpr::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_tan_fixed_point() {
        let tan = parse("tan(z)").unwrap();
        let r = solve(
            &tan,
            1,
            Target::Identity,
            c(4.4, 0.0),
            &NewtonSettings::default(),
        )
        .unwrap();
        assert!((r.z.re - 4.493409457909064).abs() < 1e-12);
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn solves_preimage_of_pole() {
        let tan = parse("tan(z)").unwrap();
        let p = std::f64::consts::FRAC_PI_2;
        let r = solve(
            &tan,
            1,
            Target::Point(c(p, 0.0)),
            c(0.9, 0.1),
            &NewtonSettings::default(),
        )
        .unwrap();
        assert!((r.z - c(p.atan(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn reciprocal_chart_step_points_at_pole() {
        // Solving 1/z = 5 from a seed near the pole at 0.
        let e = parse("1/z").unwrap();
        let r = solve(
            &e,
            1,
            Target::Point(c(5.0, 0.0)),
            c(0.01, 0.0),
            &NewtonSettings::default(),
        )
        .unwrap();
        assert!((r.z - c(0.2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn divergent_seed_is_dropped() {
        let e = parse("exp(z)").unwrap();
        // e^z = 0 has no root; Newton walks left forever.
        let s = NewtonSettings {
            divergence: 50.0,
            ..Default::default()
        };
        let r = solve(&e, 1, Target::Point(c(0.0, 0.0)), c(0.0, 0.0), &s);
        assert!(r.is_none_or(|r| r.steps == s.max_steps));
    }

    #[test]
    fn lattice_and_dedup() {
        let reg = Region::new(-1.0, 1.0, -2.0, 2.0);
        let l = reg.lattice(3, 5);
        assert_eq!(l.len(), 15);
        assert!(l.contains(&c(0.0, 0.0)));
        assert_eq!(reg.lattice(1, 1), vec![c(0.0, 0.0)]);
        let pts = vec![
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(1.0 + 1e-9, 0.0),
            c(0.0, 1e-9),
            c(0.5, 0.0),
        ];
        let d = dedup_points(pts, 1e-7, |z| *z);
        assert_eq!(d, vec![c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
    }
}
