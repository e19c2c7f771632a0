//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' int)?
//! atom   := number | 'z' | 'i' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'sin' | 'cos' | 'tan'
//! ```

use thiserror::Error;

use super::ast::Expr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input at byte {offset}")]
    EmptyInput { offset: usize },
    #[error("unbalanced parenthesis at byte {offset}")]
    UnbalancedParen { offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("unexpected character `{found}` at byte {offset}")]
    UnexpectedChar { found: char, offset: usize },
    #[error("unexpected end of input at byte {offset}")]
    UnexpectedEnd { offset: usize },
    #[error("invalid number at byte {offset}")]
    InvalidNumber { offset: usize },
    #[error("exponent must be an integer, at byte {offset}")]
    InvalidExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::EmptyInput { offset }
            | ParseError::UnbalancedParen { offset }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::UnexpectedChar { offset, .. }
            | ParseError::UnexpectedEnd { offset }
            | ParseError::InvalidNumber { offset }
            | ParseError::InvalidExponent { offset } => *offset,
        }
    }
}

/// Parses an expression in `z`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        text,
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(ParseError::EmptyInput { offset: p.pos });
    }
    let e = p.expr()?;
    p.skip_ws();
    match p.peek() {
        None => Ok(e),
        Some(b')') => Err(ParseError::UnbalancedParen { offset: p.pos }),
        Some(_) => Err(p.unexpected()),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.text[self.pos..].chars().next() {
            Some(found) => ParseError::UnexpectedChar {
                found,
                offset: self.pos,
            },
            None => ParseError::UnexpectedEnd { offset: self.pos },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::add(lhs, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::mul(lhs, self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::neg(self.factor()?));
        }
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.int()?;
            return Ok(Expr::pow(base, n));
        }
        Ok(base)
    }

    fn int(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        let digits = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == digits || matches!(self.peek(), Some(b'.' | b'e' | b'E')) {
            return Err(ParseError::InvalidExponent { offset: start });
        }
        self.text[start..self.pos]
            .parse()
            .map_err(|_| ParseError::InvalidExponent { offset: start })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(ParseError::UnexpectedEnd { offset: start }),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            Some(b'0'..=b'9' | b'.') => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = &self.text[start..self.pos];
                match name {
                    "z" => Ok(Expr::Var),
                    "i" => Ok(Expr::ImagUnit),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    _ => {
                        self.skip_ws();
                        if self.peek() != Some(b'(') {
                            return Err(ParseError::UnknownIdentifier {
                                name: name.to_owned(),
                                offset: start,
                            });
                        }
                        let wrap: fn(Expr) -> Expr = match name {
                            "exp" => Expr::exp,
                            "sin" => Expr::sin,
                            "cos" => Expr::cos,
                            "tan" => Expr::tan,
                            _ => {
                                return Err(ParseError::UnknownFunction {
                                    name: name.to_owned(),
                                    offset: start,
                                })
                            }
                        };
                        self.pos += 1;
                        let arg = self.expr()?;
                        self.close_paren()?;
                        Ok(wrap(arg))
                    }
                }
            }
            Some(b')') => Err(ParseError::UnbalancedParen { offset: start }),
            Some(_) => Err(self.unexpected()),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b')') => {
                self.pos += 1;
                Ok(())
            }
            None => Err(ParseError::UnbalancedParen { offset: self.pos }),
            Some(_) => Err(self.unexpected()),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                // `2exp(z)` style input: leave the `e` for the caller to reject.
                self.pos = save;
            }
        }
        let x: f64 = self.text[start..self.pos]
            .parse()
            .map_err(|_| ParseError::InvalidNumber { offset: start })?;
        if !x.is_finite() {
            return Err(ParseError::InvalidNumber { offset: start });
        }
        Ok(Expr::Num(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        assert_eq!(parse("tan(z)").unwrap(), Expr::tan(Expr::Var));
        assert_eq!(
            parse("exp(z)/z").unwrap(),
            Expr::div(Expr::exp(Expr::Var), Expr::Var)
        );
        assert_eq!(
            parse("2*tan(z)").unwrap(),
            Expr::mul(Expr::num(2.0), Expr::tan(Expr::Var))
        );
    }

    #[test]
    fn precedence_and_unary_minus() {
        // 1 - 2*z^3 parses as 1 - (2 * (z^3))
        assert_eq!(
            parse("1 - 2*z^3").unwrap(),
            Expr::sub(
                Expr::num(1.0),
                Expr::mul(Expr::num(2.0), Expr::pow(Expr::Var, 3))
            )
        );
        assert_eq!(parse("-z^2").unwrap(), Expr::neg(Expr::pow(Expr::Var, 2)));
        assert_eq!(parse("z^-1").unwrap(), Expr::pow(Expr::Var, -1));
        assert_eq!(
            parse("z - 1 - 2").unwrap(),
            Expr::sub(Expr::sub(Expr::Var, Expr::num(1.0)), Expr::num(2.0))
        );
        assert_eq!(
            parse("(1/2)*sin(z)").unwrap(),
            Expr::mul(
                Expr::div(Expr::num(1.0), Expr::num(2.0)),
                Expr::sin(Expr::Var)
            )
        );
        assert_eq!(parse("1.5e-3").unwrap(), Expr::num(1.5e-3));
        assert_eq!(
            parse("pi/2").unwrap(),
            Expr::div(Expr::num(std::f64::consts::PI), Expr::num(2.0))
        );
    }

    #[test]
    fn error_offsets() {
        assert_eq!(
            parse("2*tan(z"),
            Err(ParseError::UnbalancedParen { offset: 7 })
        );
        assert_eq!(parse("z)"), Err(ParseError::UnbalancedParen { offset: 1 }));
        assert_eq!(parse("(z"), Err(ParseError::UnbalancedParen { offset: 2 }));
        assert_eq!(parse(""), Err(ParseError::EmptyInput { offset: 0 }));
        assert_eq!(parse("   "), Err(ParseError::EmptyInput { offset: 3 }));
        assert_eq!(
            parse("1 + log(z)"),
            Err(ParseError::UnknownFunction {
                name: "log".into(),
                offset: 4
            })
        );
        assert_eq!(parse("2 +"), Err(ParseError::UnexpectedEnd { offset: 3 }));
        assert_eq!(
            parse("z^1.5"),
            Err(ParseError::InvalidExponent { offset: 2 })
        );
        assert_eq!(
            parse("2 $ 3"),
            Err(ParseError::UnexpectedChar {
                found: '$',
                offset: 2
            })
        );
        assert!(matches!(
            parse("x"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert_eq!(parse("2*tan(z").unwrap_err().offset(), 7);
    }

    fn tree() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Var),
            Just(Expr::ImagUnit),
            (0.0..100.0f64).prop_map(Expr::Num),
            (0u32..1000).prop_map(|k| Expr::Num(k as f64)),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Expr::neg),
                (inner.clone(), -4i32..5).prop_map(|(a, n)| Expr::pow(a, n)),
                inner.clone().prop_map(Expr::exp),
                inner.clone().prop_map(Expr::sin),
                inner.clone().prop_map(Expr::cos),
                inner.clone().prop_map(Expr::tan),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::div(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in tree()) {
            let text = e.to_string();
            prop_assert_eq!(parse(&text).unwrap(), e);
        }
    }
}
