//! Forward-mode first-derivative evaluation on the Riemann sphere.
//!
//! Every subexpression is carried as a homogeneous pair `num / den` of
//! first-order duals. Poles become `den = 0` instead of overflow, and the
//! final jet picks the chart from whichever of the two is larger.

use num_complex::Complex64;
use thiserror::Error;

use super::ast::Expr;
use crate::sphere::{Chart, Jet, SpherePoint};

/// Below this modulus of `1/f`, a value is treated as `∞` when it has to be
/// fed back into the function.
pub const POLE_CUTOFF: f64 = 1e-14;

/// Above this `|Im q|`, trigonometric functions switch to their scaled
/// exponential forms.
const TRIG_SPLIT: f64 = 20.0;

/// `tan` leaves the `sin/cos` quotient earlier: its derivative there is
/// `cos² + sin²` formed from terms of size `e^{2|Im q|}`.
const TAN_SPLIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("value at z = {z} is not representable in either chart")]
    NumericalOverflowBothCharts { z: Complex64 },
    #[error("orbit reaches a pole after {step} step(s)")]
    OrbitHitsPole { step: usize },
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy)]
struct Dual {
    v: Complex64,
    d: Complex64,
}

impl Dual {
    const ONE: Dual = Dual { v: ONE, d: ZERO };

    fn constant(v: Complex64) -> Dual {
        Dual { v, d: ZERO }
    }

    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }

    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }

    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }

    fn scale(self, c: Complex64) -> Dual {
        Dual {
            v: self.v * c,
            d: self.d * c,
        }
    }

    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: -self.d,
        }
    }

    fn powi(self, n: u32) -> Dual {
        match n {
            0 => Dual::ONE,
            1 => self,
            _ => Dual {
                v: self.v.powu(n),
                d: self.d * self.v.powu(n - 1) * n as f64,
            },
        }
    }

    fn exp(self) -> Dual {
        let e = self.v.exp();
        Dual {
            v: e,
            d: self.d * e,
        }
    }

    fn sin(self) -> Dual {
        Dual {
            v: self.v.sin(),
            d: self.d * self.v.cos(),
        }
    }

    fn cos(self) -> Dual {
        Dual {
            v: self.v.cos(),
            d: -self.d * self.v.sin(),
        }
    }
}

/// `num / den` with both parts rescaled so that `max(|num|, |den|)` lies in `[1, 2)`.
#[derive(Debug, Clone, Copy)]
struct Proj {
    num: Dual,
    den: Dual,
}

#[derive(Debug)]
struct Unrepresentable;

type Step = Result<Proj, Unrepresentable>;

impl Proj {
    fn finite(v: Dual) -> Step {
        Proj {
            num: v,
            den: Dual::ONE,
        }
        .normalized()
    }

    fn normalized(self) -> Step {
        let s = self.num.v.norm().max(self.den.v.norm());
        if !(s > 0.0 && s.is_finite()) {
            return Err(Unrepresentable);
        }
        // Power-of-two scale: exact, so a quotient of constants keeps every bit.
        let k = Complex64::new(
            2f64.powi(-(s.log2().floor() as i32).clamp(-1000, 1000)),
            0.0,
        );
        let p = Proj {
            num: self.num.scale(k),
            den: self.den.scale(k),
        };
        let ok = [p.num.v, p.num.d, p.den.v, p.den.d]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite());
        if ok {
            Ok(p)
        } else {
            Err(Unrepresentable)
        }
    }

    /// The quotient as a finite dual; fails when the value is at `∞`.
    fn as_finite(self) -> Result<Dual, Unrepresentable> {
        let (n, d) = (self.num, self.den);
        if d.v.norm() <= f64::MIN_POSITIVE * n.v.norm().max(1.0) || d.v == ZERO {
            return Err(Unrepresentable);
        }
        let v = n.v / d.v;
        let dv = (n.d * d.v - n.v * d.d) / (d.v * d.v);
        if v.re.is_finite() && v.im.is_finite() && dv.re.is_finite() && dv.im.is_finite() {
            Ok(Dual { v, d: dv })
        } else {
            Err(Unrepresentable)
        }
    }

    fn add(self, o: Proj) -> Step {
        Proj {
            num: self.num.mul(o.den).add(o.num.mul(self.den)),
            den: self.den.mul(o.den),
        }
        .normalized()
    }

    fn sub(self, o: Proj) -> Step {
        Proj {
            num: self.num.mul(o.den).sub(o.num.mul(self.den)),
            den: self.den.mul(o.den),
        }
        .normalized()
    }

    fn mul(self, o: Proj) -> Step {
        Proj {
            num: self.num.mul(o.num),
            den: self.den.mul(o.den),
        }
        .normalized()
    }

    fn div(self, o: Proj) -> Step {
        Proj {
            num: self.num.mul(o.den),
            den: self.den.mul(o.num),
        }
        .normalized()
    }

    fn neg(self) -> Proj {
        Proj {
            num: self.num.neg(),
            den: self.den,
        }
    }

    fn powi(self, n: i32) -> Step {
        let k = n.unsigned_abs();
        let (a, b) = (self.num.powi(k), self.den.powi(k));
        if n >= 0 {
            Proj { num: a, den: b }.normalized()
        } else {
            Proj { num: b, den: a }.normalized()
        }
    }
}

fn exp(q: Dual) -> Step {
    if q.v.re > 0.0 {
        Proj {
            num: Dual::ONE,
            den: q.neg().exp(),
        }
        .normalized()
    } else {
        Proj::finite(q.exp())
    }
}

// e^{2iq} (upper half plane) or e^{-2iq} (lower), always of modulus ≤ 1.
fn damped(q: Dual, k: f64) -> Dual {
    let s = if q.v.im >= 0.0 { k } else { -k };
    q.scale(I * s).exp()
}

fn sin(q: Dual) -> Step {
    if q.v.im.abs() <= TRIG_SPLIT {
        return Proj::finite(q.sin());
    }
    let (t2, t1) = (damped(q, 2.0), damped(q, 1.0));
    let two_i = Complex64::new(0.0, 2.0);
    let (num, den) = if q.v.im >= 0.0 {
        (t2.sub(Dual::ONE), t1.scale(two_i))
    } else {
        (Dual::ONE.sub(t2), t1.scale(two_i))
    };
    Proj { num, den }.normalized()
}

fn cos(q: Dual) -> Step {
    if q.v.im.abs() <= TRIG_SPLIT {
        return Proj::finite(q.cos());
    }
    let (t2, t1) = (damped(q, 2.0), damped(q, 1.0));
    Proj {
        num: t2.add(Dual::ONE),
        den: t1.scale(Complex64::new(2.0, 0.0)),
    }
    .normalized()
}

fn tan(q: Dual) -> Step {
    if q.v.im.abs() <= TAN_SPLIT {
        return Proj {
            num: q.sin(),
            den: q.cos(),
        }
        .normalized();
    }
    let t = damped(q, 2.0);
    let num = if q.v.im >= 0.0 {
        t.sub(Dual::ONE)
    } else {
        Dual::ONE.sub(t)
    };
    Proj {
        num: num.scale(-I),
        den: t.add(Dual::ONE),
    }
    .normalized()
}

fn eval_proj(e: &Expr, z: Complex64) -> Step {
    match e {
        Expr::Num(x) => Proj::finite(Dual::constant(Complex64::new(*x, 0.0))),
        Expr::ImagUnit => Proj::finite(Dual::constant(I)),
        Expr::Var => Proj::finite(Dual { v: z, d: ONE }),
        Expr::Neg(a) => Ok(eval_proj(a, z)?.neg()),
        Expr::Add(a, b) => eval_proj(a, z)?.add(eval_proj(b, z)?),
        Expr::Sub(a, b) => eval_proj(a, z)?.sub(eval_proj(b, z)?),
        Expr::Mul(a, b) => eval_proj(a, z)?.mul(eval_proj(b, z)?),
        Expr::Div(a, b) => eval_proj(a, z)?.div(eval_proj(b, z)?),
        Expr::Pow(a, n) => eval_proj(a, z)?.powi(*n),
        Expr::Exp(a) => exp(eval_proj(a, z)?.as_finite()?),
        Expr::Sin(a) => sin(eval_proj(a, z)?.as_finite()?),
        Expr::Cos(a) => cos(eval_proj(a, z)?.as_finite()?),
        Expr::Tan(a) => tan(eval_proj(a, z)?.as_finite()?),
    }
}

/// Value and derivative of `e` at `z`, in the identity chart when
/// `|f(z)| ≤ 1` and in the reciprocal chart otherwise.
pub fn eval_jet(e: &Expr, z: Complex64) -> Result<Jet, EvalError> {
    let overflow = EvalError::NumericalOverflowBothCharts { z };
    let p = eval_proj(e, z).map_err(|_| overflow)?;
    let (n, d) = (p.num, p.den);
    let jet = if n.v.norm() <= d.v.norm() {
        Jet::identity(z, n.v / d.v, (n.d * d.v - n.v * d.d) / (d.v * d.v))
    } else {
        Jet::reciprocal(z, d.v / n.v, (d.d * n.v - d.v * n.d) / (n.v * n.v))
    };
    let finite = |c: Complex64| c.re.is_finite() && c.im.is_finite();
    if finite(jet.value) && finite(jet.deriv) {
        Ok(jet)
    } else {
        Err(overflow)
    }
}

/// Finite value and identity-chart derivative of a jet, or `None` if the
/// value counts as `∞` under [`POLE_CUTOFF`].
pub fn finite_value_and_deriv(j: &Jet) -> Option<(Complex64, Complex64)> {
    match j.chart {
        Chart::Identity => Some((j.value, j.deriv)),
        Chart::Reciprocal => {
            let w = j.value;
            if w.norm() < POLE_CUTOFF {
                None
            } else {
                Some((w.inv(), -j.deriv / (w * w)))
            }
        }
    }
}

/// Jet of the `n`-th iterate at `z`; its derivative is the multiplier
/// `(f^n)'(z)` accumulated by the chain rule.
pub fn iterate_jet(e: &Expr, z: Complex64, n: usize) -> Result<Jet, EvalError> {
    let mut x = z;
    let mut chain = ONE;
    for step in 0..n {
        let j = eval_jet(e, x)?;
        if step + 1 == n {
            return Ok(Jet {
                deriv: j.deriv * chain,
                base: z,
                ..j
            });
        }
        let (v, d) =
            finite_value_and_deriv(&j).ok_or(EvalError::OrbitHitsPole { step: step + 1 })?;
        chain *= d;
        x = v;
    }
    Ok(Jet::variable(z))
}

/// Forward orbit `z0, f(z0), …` of at most `nmax + 1` points, truncated
/// right after the first point at `∞`.
pub fn orbit(e: &Expr, z0: Complex64, nmax: usize) -> Vec<SpherePoint> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(SpherePoint::new(z0));
    let mut x = z0;
    for _ in 0..nmax {
        let next = eval_jet(e, x)
            .ok()
            .and_then(|j| finite_value_and_deriv(&j))
            .map(|(v, _)| v);
        match next {
            Some(v) => {
                out.push(SpherePoint::Finite(v));
                x = v;
            }
            None => {
                out.push(SpherePoint::Infinity);
                break;
            }
        }
    }
    out
}
