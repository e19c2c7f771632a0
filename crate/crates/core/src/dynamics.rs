//! Orbits, pre-poles and Marty-criterion Julia rasters.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fnexpr::{eval_jet, finite_value_and_deriv, Expr, FunctionProfile};
use crate::newton::{self, NewtonSettings, Region, Target};
use crate::sphere::marty_derivative;

pub use crate::fnexpr::orbit;

/// Pixel lattice over a rectangle of the plane.
///
/// Pixel `(i, j)` samples the node `center + ((i - ⌊nx/2⌋)·dx, (⌊ny/2⌋ - j)·dy)`
/// with `dx = width/nx`, `dy = height/ny`; row 0 is the top. The grid
/// center is therefore always a sample point, and so are the axes through
/// it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs nx, ny >= 1 (got {nx} x {ny})")]
    Empty { nx: usize, ny: usize },
    #[error("grid width and height must be positive and finite")]
    Extent,
}

impl GridSpec {
    pub fn new(
        center: Complex64,
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 {
            return Err(GridError::Empty { nx, ny });
        }
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(GridError::Extent);
        }
        Ok(GridSpec {
            center: [center.re, center.im],
            width,
            height,
            nx,
            ny,
        })
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }

    pub fn dx(&self) -> f64 {
        self.width / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.height / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let x = self.center[0] + (i as f64 - (self.nx / 2) as f64) * self.dx();
        let y = self.center[1] + ((self.ny / 2) as f64 - j as f64) * self.dy();
        Complex64::new(x, y)
    }

    pub fn point_at(&self, index: usize) -> Complex64 {
        self.point(index % self.nx, index / self.nx)
    }

    /// Pixel whose cell (of size `dx × dy` around its node) contains `z`.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let fi = ((z.re - self.center[0]) / self.dx() + 0.5).floor() + (self.nx / 2) as f64;
        let fj = ((self.center[1] - z.im) / self.dy() + 0.5).floor() + (self.ny / 2) as f64;
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Bounding box of the sample nodes.
    pub fn bounds(&self) -> Region {
        let tl = self.point(0, 0);
        let br = self.point(self.nx - 1, self.ny - 1);
        Region::new(tl.re, br.re, br.im, tl.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelFlag {
    Julia,
    Fatou,
    /// The orbit reached `∞`; such points are pre-poles and lie in the
    /// Julia set.
    PoleOrbit,
}

impl PixelFlag {
    pub fn in_julia(self) -> bool {
        matches!(self, PixelFlag::Julia | PixelFlag::PoleOrbit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JuliaRaster {
    pub grid: GridSpec,
    pub nmax: usize,
    pub growth_threshold: f64,
    /// Natural log of the largest Marty derivative of `f^n` seen.
    pub score: Vec<f64>,
    pub flag: Vec<PixelFlag>,
    pub n_used: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlagCounts {
    pub julia: usize,
    pub fatou: usize,
    pub pole_orbit: usize,
}

impl JuliaRaster {
    pub fn counts(&self) -> FlagCounts {
        let mut c = FlagCounts::default();
        for f in &self.flag {
            match f {
                PixelFlag::Julia => c.julia += 1,
                PixelFlag::Fatou => c.fatou += 1,
                PixelFlag::PoleOrbit => c.pole_orbit += 1,
            }
        }
        c
    }

    pub fn flag_at(&self, i: usize, j: usize) -> PixelFlag {
        self.flag[j * self.grid.nx + i]
    }

    /// Sample points of all pixels counted as Julia.
    pub fn julia_points(&self) -> Vec<Complex64> {
        (0..self.grid.len())
            .filter(|&k| self.flag[k].in_julia())
            .map(|k| self.grid.point_at(k))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelResult {
    pub flag: PixelFlag,
    pub score: f64,
    pub n_used: usize,
}

/// Iterates jets at `z` until the Marty derivative of `f^n` passes
/// `threshold`, the orbit hits `∞`, or `nmax` is reached.
pub fn classify_point(e: &Expr, z: Complex64, nmax: usize, threshold: f64) -> PixelResult {
    let mut best = 1.0 / (1.0 + z.norm_sqr());
    let mut x = z;
    let mut chain = Complex64::new(1.0, 0.0);
    for n in 1..=nmax {
        let Ok(j) = eval_jet(e, x) else {
            return PixelResult {
                flag: PixelFlag::PoleOrbit,
                score: best.ln(),
                n_used: n,
            };
        };
        let jn = crate::sphere::Jet {
            deriv: j.deriv * chain,
            base: z,
            ..j
        };
        let m = marty_derivative(&jn);
        if m > best || m.is_nan() {
            best = if m.is_nan() { f64::INFINITY } else { m };
        }
        if best >= threshold {
            return PixelResult {
                flag: PixelFlag::Julia,
                score: best.ln(),
                n_used: n,
            };
        }
        match finite_value_and_deriv(&j) {
            Some((v, d)) => {
                chain *= d;
                x = v;
            }
            None => {
                return PixelResult {
                    flag: PixelFlag::PoleOrbit,
                    score: best.ln(),
                    n_used: n,
                }
            }
        }
    }
    PixelResult {
        flag: PixelFlag::Fatou,
        score: best.ln(),
        n_used: nmax,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("nmax must be at least 1")]
    ZeroIterations,
    #[error("the profile declares no poles")]
    NoPoles,
    #[error("no Newton run converged to a pre-pole in the region")]
    NoSeedsConverged,
}

/// Marty-criterion rasterisation of the Julia set. Data-parallel over
/// pixels; the output does not depend on the worker count.
pub fn marty_raster(
    e: &Expr,
    grid: &GridSpec,
    nmax: usize,
    growth_threshold: f64,
) -> Result<JuliaRaster, DynamicsError> {
    if nmax == 0 {
        return Err(DynamicsError::ZeroIterations);
    }
    let results: Vec<PixelResult> = (0..grid.len())
        .into_par_iter()
        .map(|k| classify_point(e, grid.point_at(k), nmax, growth_threshold))
        .collect();
    Ok(JuliaRaster {
        grid: *grid,
        nmax,
        growth_threshold,
        score: results.iter().map(|r| r.score).collect(),
        flag: results.iter().map(|r| r.flag).collect(),
        n_used: results.iter().map(|r| r.n_used).collect(),
    })
}

/// A point `q` with `f^depth(q)` equal to a declared pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrePole {
    pub point: Complex64,
    pub depth: usize,
    pub pole: Complex64,
}

impl PrePole {
    /// Number of steps for the orbit to reach `∞` (a pole has order 1).
    pub fn escape_order(&self) -> usize {
        self.depth + 1
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PrePoleSettings {
    pub seeds_re: usize,
    pub seeds_im: usize,
    pub residual_tol: f64,
    pub dedup_radius: f64,
    pub newton: NewtonSettings,
}

impl Default for PrePoleSettings {
    fn default() -> Self {
        PrePoleSettings {
            seeds_re: 81,
            seeds_im: 17,
            residual_tol: 1e-10,
            dedup_radius: 1e-7,
            newton: NewtonSettings {
                max_steps: 50,
                ..Default::default()
            },
        }
    }
}

/// Finite truncation of the backward orbit of `∞`: all points of depth
/// `0..=depth` in `region`, deduplicated, each with its minimal depth.
pub fn find_prepoles(
    e: &Expr,
    profile: &FunctionProfile,
    depth: usize,
    region: &Region,
    s: &PrePoleSettings,
) -> Result<Vec<PrePole>, DynamicsError> {
    if profile.declared_poles.is_empty() {
        return Err(DynamicsError::NoPoles);
    }
    let seeds = region.lattice(s.seeds_re, s.seeds_im);
    let mut found: Vec<PrePole> = Vec::new();
    for k in 0..=depth {
        for &p in &profile.declared_poles {
            if k == 0 {
                if region.contains(p) {
                    found.push(PrePole {
                        point: p,
                        depth: 0,
                        pole: p,
                    });
                }
                continue;
            }
            let roots: Vec<_> = seeds
                .par_iter()
                .map(|&z| newton::solve(e, k, Target::Point(p), z, &s.newton))
                .collect();
            found.extend(
                roots
                    .into_iter()
                    .flatten()
                    .filter(|r| r.residual <= s.residual_tol && region.contains(r.z))
                    .map(|r| PrePole {
                        point: r.z,
                        depth: k,
                        pole: p,
                    }),
            );
        }
    }
    // `found` is ordered by depth, so the first of each cluster is minimal.
    let mut kept: Vec<PrePole> = Vec::new();
    for q in found {
        if !kept
            .iter()
            .any(|k| (k.point - q.point).norm() <= s.dedup_radius)
        {
            kept.push(q);
        }
    }
    if kept.is_empty() {
        return Err(DynamicsError::NoSeedsConverged);
    }
    kept.sort_by(|a, b| {
        a.point
            .re
            .total_cmp(&b.point.re)
            .then(a.point.im.total_cmp(&b.point.im))
    });
    Ok(kept)
}

/// Binary P6 pixmap: Julia black, PoleOrbit red, Fatou grey levels that
/// darken as the score approaches the threshold. `comments` are written
/// as `#` lines in the header.
pub fn raster_ppm(r: &JuliaRaster, comments: &[String]) -> Vec<u8> {
    let mut head = String::from("P6\n");
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(head, "# {line}");
        }
    }
    let _ = write!(head, "{} {}\n255\n", r.grid.nx, r.grid.ny);
    let mut out = head.into_bytes();
    let top = r.growth_threshold.ln().max(1e-300);
    for (flag, score) in r.flag.iter().zip(&r.score) {
        let px = match flag {
            PixelFlag::Julia => [0, 0, 0],
            PixelFlag::PoleOrbit => [255, 0, 0],
            PixelFlag::Fatou => {
                let t = (score / top).clamp(0.0, 1.0);
                let g = (255.0 - 200.0 * t).round() as u8;
                [g, g, g]
            }
        };
        out.extend_from_slice(&px);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnexpr::{classify_profile, parse, PoleCase, ScanSettings};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(nx: usize, ny: usize) -> GridSpec {
        GridSpec::new(c(0.0, 0.0), 4.0, 4.0, nx, ny).unwrap()
    }

    #[test]
    fn grid_mapping_is_invertible() {
        for g in [grid(256, 256), grid(7, 5), grid(1, 1)] {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    assert_eq!(g.pixel_of(g.point(i, j)), Some((i, j)));
                }
            }
        }
        let g = grid(256, 256);
        assert_eq!(g.point(128, 128), c(0.0, 0.0));
        assert_eq!(g.point(0, 0), c(-2.0, 2.0));
        assert!(g.pixel_of(c(10.0, 0.0)).is_none());
        assert!(GridSpec::new(c(0.0, 0.0), 1.0, 1.0, 0, 3).is_err());
        assert!(GridSpec::new(c(0.0, 0.0), -1.0, 1.0, 3, 3).is_err());
    }

    #[test]
    fn pixel_examples() {
        let two_tan = parse("2*tan(z)").unwrap();
        let r = classify_point(&two_tan, c(0.0, 0.0), 60, 1e6);
        assert_eq!(r.flag, PixelFlag::Julia);
        // (f^n)'(0) = 2^n first exceeds 1e6 at n = 20
        assert_eq!(r.n_used, 20);

        let half_sin = parse("(1/2)*sin(z)").unwrap();
        let r = classify_point(&half_sin, c(0.1, 0.0), 60, 1e6);
        assert_eq!(r.flag, PixelFlag::Fatou);
        assert!(r.score < 0.0);

        let tan = parse("tan(z)").unwrap();
        assert_eq!(
            classify_point(&tan, c(FRAC_PI_2, 0.0), 60, 1e6).flag,
            PixelFlag::PoleOrbit
        );
    }

    /// Orbit oracle for (1/2) sin: the iterates contract to 0 and the
    /// derivative products stay below one.
    #[test]
    fn half_sin_orbit_oracle() {
        let (mut x, mut d) = (0.1f64, 1.0f64);
        let mut max_marty = 1.0 / (1.0 + x * x);
        for _ in 0..60 {
            d *= 0.5 * x.cos();
            x = 0.5 * x.sin();
            max_marty = max_marty.max(d.abs() / (1.0 + x * x));
        }
        assert!(x.abs() < 1e-15);
        let r = classify_point(&parse("(1/2)*sin(z)").unwrap(), c(0.1, 0.0), 60, 1e6);
        assert!((r.score - max_marty.ln()).abs() < 1e-12);
    }

    #[test]
    fn raster_is_monotone_in_nmax() {
        let e = parse("2*tan(z)").unwrap();
        let g = grid(32, 33);
        let a = marty_raster(&e, &g, 20, 1e6).unwrap();
        let b = marty_raster(&e, &g, 60, 1e6).unwrap();
        for k in 0..g.len() {
            if a.flag[k] == PixelFlag::Julia {
                assert_eq!(b.flag[k], PixelFlag::Julia);
            }
            assert!(b.score[k] >= a.score[k]);
        }
        assert!(marty_raster(&e, &g, 0, 1e6).is_err());
        assert_eq!(a.flag.len(), g.len());
    }

    #[test]
    fn real_axis_row_is_julia_for_two_tan() {
        let e = parse("2*tan(z)").unwrap();
        let g = grid(64, 64);
        let r = marty_raster(&e, &g, 60, 1e6).unwrap();
        for i in 0..g.nx {
            assert!(r.flag_at(i, 32).in_julia(), "pixel {i}");
        }
        // Off the axis everything is attracted to the fixed points ±1.915i.
        assert_eq!(r.counts().fatou, 64 * 63);
    }

    fn tan_profile() -> FunctionProfile {
        let poles: Vec<_> = [-3.0, -1.0, 1.0, 3.0]
            .iter()
            .map(|k| c(k * FRAC_PI_2, 0.0))
            .collect();
        classify_profile(
            &parse("tan(z)").unwrap(),
            &poles,
            Region::new(-5.0, 5.0, -1.0, 1.0),
            &ScanSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn depth_zero_prepoles_are_the_poles() {
        let prof = tan_profile();
        assert_eq!(prof.case, PoleCase::TwoOrMorePoles);
        let e = parse("tan(z)").unwrap();
        let pts = find_prepoles(
            &e,
            &prof,
            0,
            &Region::new(-5.0, 5.0, -1.0, 1.0),
            &PrePoleSettings::default(),
        )
        .unwrap();
        let xs: Vec<f64> = pts.iter().map(|q| q.point.re).collect();
        // bisection oracle for cos x = 0 on each bracket
        for (k, x) in xs.iter().enumerate() {
            let (mut lo, mut hi) = (-5.0 + PI * k as f64, -5.0 + PI * (k + 1) as f64);
            let s = lo.cos().signum();
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m.cos().signum() == s {
                    lo = m
                } else {
                    hi = m
                }
            }
            assert!((x - lo).abs() < 1e-14);
        }
        assert_eq!(xs.len(), 4);
    }

    #[test]
    fn depth_one_prepoles_solve_tan_equals_half_pi() {
        let prof = tan_profile();
        let e = parse("tan(z)").unwrap();
        let region = Region::new(-5.0, 5.0, -1.0, 1.0);
        let pts = find_prepoles(&e, &prof, 1, &region, &PrePoleSettings::default()).unwrap();
        // real bisection oracle on tan x - π/2 over (0, π/2)
        let (mut lo, mut hi) = (0.0f64, FRAC_PI_2 - 1e-9);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m.tan() < FRAC_PI_2 {
                lo = m
            } else {
                hi = m
            }
        }
        assert!((lo - 1.003884821853887).abs() < 1e-12);
        let hit = pts
            .iter()
            .find(|q| (q.point - c(lo, 0.0)).norm() < 1e-9)
            .expect("arctan(pi/2)");
        assert_eq!(hit.depth, 1);
        assert!(pts.iter().filter(|q| q.depth == 0).count() == 4);
        assert!(pts.iter().all(|q| q.depth <= 1));
    }

    #[test]
    fn prepoles_need_poles() {
        let prof = FunctionProfile {
            declared_poles: vec![],
            case: PoleCase::TwoOrMorePoles,
            scan_region: Region::new(-1.0, 1.0, -1.0, 1.0),
            evidence: vec![],
        };
        let e = parse("exp(z)").unwrap();
        assert_eq!(
            find_prepoles(&e, &prof, 1, &prof.scan_region, &PrePoleSettings::default()),
            Err(DynamicsError::NoPoles)
        );
    }

    #[test]
    fn prepoles_land_on_julia_pixels() {
        let e = parse("2*tan(z)").unwrap();
        let poles = [c(-FRAC_PI_2, 0.0), c(FRAC_PI_2, 0.0)];
        let region = Region::new(-2.0, 2.0, -0.5, 0.5);
        let prof = classify_profile(&e, &poles, region, &ScanSettings::default()).unwrap();
        let pts = find_prepoles(&e, &prof, 2, &region, &PrePoleSettings::default()).unwrap();
        assert!(pts.len() > 4);
        let g = grid(128, 128);
        let r = marty_raster(&e, &g, 60, 1e6).unwrap();
        for q in pts {
            let (i, j) = g.pixel_of(q.point).unwrap();
            assert!(r.flag_at(i, j).in_julia(), "{q:?}");
        }
    }

    #[test]
    fn ppm_layout() {
        let e = parse("2*tan(z)").unwrap();
        let g = grid(4, 3);
        let r = marty_raster(&e, &g, 60, 1e6).unwrap();
        let bytes = raster_ppm(&r, &["hello".to_string()]);
        let header = b"P6\n# hello\n4 3\n255\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 4 * 3 * 3);
    }
}
