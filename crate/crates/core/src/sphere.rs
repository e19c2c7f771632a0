//! Riemann-sphere numerics: chordal distance and spherical derivatives.
//!
//! Distances use the chordal metric of the sphere of diameter 2, so
//! `chordal_distance(0, ∞) == 2`. Function values near a pole are carried
//! in the reciprocal chart (`1/f`) to keep everything inside the unit disc.

use std::fmt;

use num_complex::Complex64;

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    /// Builds a sphere point, mapping overflowed or NaN coordinates to ∞.
    pub fn new(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    pub fn finite(self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    /// The image under `z ↦ 1/z`, with `0 ↔ ∞`.
    pub fn recip(self) -> Self {
        match self {
            SpherePoint::Infinity => SpherePoint::Finite(Complex64::new(0.0, 0.0)),
            SpherePoint::Finite(z) if z.re == 0.0 && z.im == 0.0 => SpherePoint::Infinity,
            SpherePoint::Finite(z) => SpherePoint::new(z.inv()),
        }
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::new(z)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            SpherePoint::Infinity => f.write_str("inf"),
        }
    }
}

/// `sqrt(1 + |z|^2)` without intermediate overflow.
#[inline]
fn lift(z: Complex64) -> f64 {
    1f64.hypot(z.norm())
}

/// Chordal distance on the sphere of diameter 2.
///
/// The result is bit-for-bit symmetric in its arguments.
pub fn chordal_distance(a: SpherePoint, b: SpherePoint) -> f64 {
    match (a, b) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity)
        | (SpherePoint::Infinity, SpherePoint::Finite(z)) => 2.0 / lift(z),
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
            let diff = (z - w).norm();
            if diff == 0.0 {
                return 0.0;
            }
            let (la, lb) = (lift(z), lift(w));
            // Divide by the larger factor first; the order only depends on
            // the unordered pair, which keeps the result symmetric.
            let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
            (2.0 * (diff / hi) / lo).min(2.0)
        }
    }
}

/// Chordal distance between two finite complex numbers.
#[inline]
pub fn chordal(z: Complex64, w: Complex64) -> f64 {
    chordal_distance(SpherePoint::Finite(z), SpherePoint::Finite(w))
}

/// Which chart a [`Jet`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    /// `value = f(z)`, `deriv = f'(z)`.
    Identity,
    /// `value = 1/f(z)`, `deriv = (1/f)'(z)`.
    Reciprocal,
}

/// Value and first derivative of a function at a finite base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub chart: Chart,
    pub value: Complex64,
    pub deriv: Complex64,
    pub base: Complex64,
}

impl Jet {
    pub fn identity(base: Complex64, value: Complex64, deriv: Complex64) -> Self {
        Jet {
            chart: Chart::Identity,
            value,
            deriv,
            base,
        }
    }

    pub fn reciprocal(base: Complex64, value: Complex64, deriv: Complex64) -> Self {
        Jet {
            chart: Chart::Reciprocal,
            value,
            deriv,
            base,
        }
    }

    /// The jet of `z ↦ z` at `base`.
    pub fn variable(base: Complex64) -> Self {
        Jet::identity(base, base, Complex64::new(1.0, 0.0))
    }

    /// The function value as a sphere point.
    pub fn point(&self) -> SpherePoint {
        match self.chart {
            Chart::Identity => SpherePoint::new(self.value),
            Chart::Reciprocal => SpherePoint::new(self.value).recip(),
        }
    }

    /// Re-expresses the jet in the other chart. Returns `None` when the
    /// value is zero, where the other chart is undefined.
    pub fn flipped(&self) -> Option<Jet> {
        let v = self.value;
        if v.re == 0.0 && v.im == 0.0 {
            return None;
        }
        let chart = match self.chart {
            Chart::Identity => Chart::Reciprocal,
            Chart::Reciprocal => Chart::Identity,
        };
        Some(Jet {
            chart,
            value: v.inv(),
            deriv: -self.deriv / (v * v),
            base: self.base,
        })
    }

    /// Moves the jet into the chart selected by the `|f| > 1` switch rule.
    pub fn normalized(self) -> Jet {
        let needs_flip = match self.chart {
            Chart::Identity => self.value.norm() > 1.0,
            Chart::Reciprocal => self.value.norm() > 1.0,
        };
        if needs_flip {
            self.flipped().unwrap_or(self)
        } else {
            self
        }
    }

    /// `|f'|`-free modulus factor `|g'| / (1 + |g|^2)` in the jet's chart.
    #[inline]
    fn chart_ratio(&self) -> f64 {
        let n = self.value.norm();
        let d = self.deriv.norm();
        if n > 1.0 {
            // Avoid squaring a large modulus.
            (d / n) / (n + 1.0 / n)
        } else {
            d / (1.0 + n * n)
        }
    }
}

/// Spherical derivative with the source factor:
/// `|f'(z)| (1 + |z|^2) / (1 + |f(z)|^2)`.
///
/// Evaluated in whichever chart the jet carries; both charts give the same
/// number because `f♯ = (1/f)♯`.
pub fn spherical_derivative(j: &Jet) -> f64 {
    let b = j.base.norm();
    j.chart_ratio() * (1.0 + b * b)
}

/// Marty's spherical derivative `|f'(z)| / (1 + |f(z)|^2)`.
///
/// This is the form that scales covariantly under `z ↦ v + r z`, so all
/// rescaling code works with it.
pub fn marty_derivative(j: &Jet) -> f64 {
    j.chart_ratio()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fin(re: f64, im: f64) -> SpherePoint {
        SpherePoint::Finite(c(re, im))
    }

    #[test]
    fn chordal_examples() {
        assert_eq!(chordal_distance(fin(0.0, 0.0), SpherePoint::Infinity), 2.0);
        assert_eq!(chordal_distance(fin(0.0, 1.0), fin(0.0, 1.0)), 0.0);
        assert!((chordal_distance(fin(1.0, 0.0), fin(-1.0, 0.0)) - 2.0).abs() < 1e-15);
        assert_eq!(
            chordal_distance(SpherePoint::Infinity, SpherePoint::Infinity),
            0.0
        );
    }

    #[test]
    fn chordal_matches_formula() {
        let (a, b) = (c(0.3, -1.2), c(2.0, 0.5));
        let expect = 2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt();
        assert!((chordal(a, b) - expect).abs() < 1e-15);
        let to_inf = chordal_distance(SpherePoint::Finite(a), SpherePoint::Infinity);
        assert!((to_inf - 2.0 / (1.0 + a.norm_sqr()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn huge_values_do_not_overflow() {
        let a = fin(1e200, 0.0);
        let d = chordal_distance(a, SpherePoint::Infinity);
        assert!(d > 0.0 && d < 1e-199);
        assert!(chordal_distance(a, fin(-1e200, 0.0)) <= 2.0);
        assert_eq!(
            SpherePoint::new(c(f64::INFINITY, 0.0)),
            SpherePoint::Infinity
        );
        assert_eq!(SpherePoint::new(c(f64::NAN, 0.0)), SpherePoint::Infinity);
    }

    #[test]
    fn spherical_derivative_examples() {
        // identity at arbitrary z
        let z = c(1.5, -0.7);
        assert!((spherical_derivative(&Jet::variable(z)) - 1.0).abs() < 1e-15);
        // 1/z at 2, as the reciprocal chart of the identity
        let j = Jet::reciprocal(c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0));
        assert!((spherical_derivative(&j) - 1.0).abs() < 1e-15);
        // same function in the identity chart
        let j = Jet::identity(c(2.0, 0.0), c(0.5, 0.0), c(-0.25, 0.0));
        assert!((spherical_derivative(&j) - 1.0).abs() < 1e-15);
        // exp at 0
        let j = Jet::identity(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        assert_eq!(spherical_derivative(&j), 0.5);
    }

    #[test]
    fn marty_examples() {
        assert_eq!(marty_derivative(&Jet::variable(c(0.0, 0.0))), 1.0);
        assert_eq!(marty_derivative(&Jet::variable(c(1.0, 0.0))), 0.5);
        let sq = Jet::identity(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0));
        assert_eq!(marty_derivative(&sq), 1.0);
    }

    #[test]
    fn flip_round_trip() {
        let j = Jet::identity(c(0.2, 0.1), c(3.0, -4.0), c(0.5, 2.0));
        let back = j.flipped().unwrap().flipped().unwrap();
        assert!((back.value - j.value).norm() / j.value.norm() < 1e-12);
        assert!((back.deriv - j.deriv).norm() / j.deriv.norm() < 1e-12);
        assert_eq!(j.normalized().chart, Chart::Reciprocal);
        let zero = Jet::reciprocal(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(zero.flipped().is_none());
        assert_eq!(zero.point(), SpherePoint::Infinity);
    }

    fn point() -> impl Strategy<Value = SpherePoint> {
        prop_oneof![
            1 => Just(SpherePoint::Infinity),
            20 => (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b)| fin(a, b)),
        ]
    }

    proptest! {
        #[test]
        fn chart_choice_does_not_change_derivatives(
            re in -3.0..3.0f64, im in -3.0..3.0f64,
            vr in -10.0..10.0f64, vi in -10.0..10.0f64,
            dr in -5.0..5.0f64, di in -5.0..5.0f64,
        ) {
            prop_assume!(vr.hypot(vi) > 1e-3);
            let j = Jet::identity(c(re, im), c(vr, vi), c(dr, di));
            let k = j.flipped().unwrap();
            let (a, b) = (spherical_derivative(&j), spherical_derivative(&k));
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
            let m = marty_derivative(&j) * (1.0 + j.base.norm_sqr());
            prop_assert!((a - m).abs() <= 1e-12 * a.max(1e-300));
        }

        #[test]
        fn chordal_is_bounded_and_symmetric(a in point(), b in point()) {
            let d = chordal_distance(a, b);
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert_eq!(d.to_bits(), chordal_distance(b, a).to_bits());
        }
    }
}
