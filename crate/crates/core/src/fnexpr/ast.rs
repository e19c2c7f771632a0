use std::fmt;

use num_complex::Complex64;

/// Expression tree of a meromorphic function of `z`.
///
/// Numeric literals are non-negative reals; negative and imaginary
/// constants are built from [`Expr::Neg`] and [`Expr::ImagUnit`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    ImagUnit,
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Tan(Box<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Num(x)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        Expr::Pow(Box::new(a), n)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Box::new(a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::Sin(Box::new(a))
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::Cos(Box::new(a))
    }

    pub fn tan(a: Expr) -> Expr {
        Expr::Tan(Box::new(a))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    /// Substitutes `inner` for the variable, giving `self ∘ inner`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.compose(inner));
        match self {
            Expr::Var => inner.clone(),
            Expr::Num(_) | Expr::ImagUnit => self.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, n) => Expr::Pow(sub(a), *n),
            Expr::Exp(a) => Expr::Exp(sub(a)),
            Expr::Sin(a) => Expr::Sin(sub(a)),
            Expr::Cos(a) => Expr::Cos(sub(a)),
            Expr::Tan(a) => Expr::Tan(sub(a)),
        }
    }

    /// Value of a variable-free expression, folded in plain complex
    /// arithmetic. `None` if `z` occurs or the value is not finite.
    pub fn constant_value(&self) -> Option<Complex64> {
        let v = match self {
            Expr::Var => return None,
            Expr::Num(x) => Complex64::new(*x, 0.0),
            Expr::ImagUnit => Complex64::new(0.0, 1.0),
            Expr::Neg(a) => -a.constant_value()?,
            Expr::Add(a, b) => a.constant_value()? + b.constant_value()?,
            Expr::Sub(a, b) => a.constant_value()? - b.constant_value()?,
            Expr::Mul(a, b) => a.constant_value()? * b.constant_value()?,
            Expr::Div(a, b) => a.constant_value()? / b.constant_value()?,
            Expr::Pow(a, n) => a.constant_value()?.powi(*n),
            Expr::Exp(a) => a.constant_value()?.exp(),
            Expr::Sin(a) => a.constant_value()?.sin(),
            Expr::Cos(a) => a.constant_value()?.cos(),
            Expr::Tan(a) => a.constant_value()?.tan(),
        };
        (v.re.is_finite() && v.im.is_finite()).then_some(v)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::ImagUnit | Expr::Var => 1,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Tan(a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

// Printing is fully parenthesised so that `parse(print(e)) == e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::ImagUnit => f.write_str("i"),
            Expr::Var => f.write_str("z"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) if matches!(**a, Expr::Pow(..)) => write!(f, "({a})^{n}"),
            Expr::Pow(a, n) => write!(f, "{a}^{n}"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Tan(a) => write!(f, "tan({a})"),
        }
    }
}
