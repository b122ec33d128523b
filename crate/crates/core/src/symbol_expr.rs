//! Arithmetic expressions over `z1 … zn` that define multiplier symbols.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr  = term (("+" | "-") term)*
//! term  = unary (("*" | "/") unary)*
//! unary = ("+" | "-") unary | power
//! power = atom ("^" unary)?
//! atom  = number | "z" digits | ("sqrt" | "exp") "(" expr ")" | "(" expr ")"
//! ```
//!
//! Evaluation is in complex arithmetic with principal branches.

use crate::basis::MultiIndex;
use crate::error::{Error, Result};
use crate::multiplier::MultiplierSymbol;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        match self {
            Expr::Const(c) => Complex64::new(*c, 0.0),
            Expr::Var(i) => z[*i],
            Expr::Neg(a) => -a.eval(z),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Div(a, b) => a.eval(z) / b.eval(z),
            Expr::Pow(a, b) => {
                let base = a.eval(z);
                let e = b.eval(z);
                if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 64.0 {
                    base.powi(e.re as i32)
                } else if base == Complex64::new(0.0, 0.0) && e.re > 0.0 {
                    base
                } else {
                    base.powc(e)
                }
            }
            Expr::Sqrt(a) => a.eval(z).sqrt(),
            Expr::Exp(a) => a.eval(z).exp(),
        }
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Exp(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = match self.peek() {
            None => return self.err(self.pos, "unexpected end of expression"),
            Some(_) => self.pos,
        };
        let c = self.src[start];
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'(' {
            self.pos += 1;
            let inner = self.expr()?;
            if !self.eat(b')') {
                return self.err(self.pos, "expected ')'");
            }
            return Ok(inner);
        }
        if c.is_ascii_alphabetic() {
            let mut end = start;
            while end < self.src.len() && self.src[end].is_ascii_alphanumeric() {
                end += 1;
            }
            let word = std::str::from_utf8(&self.src[start..end]).expect("ascii");
            self.pos = end;
            return match word {
                "sqrt" | "exp" => {
                    if !self.eat(b'(') {
                        return self.err(self.pos, format!("expected '(' after {word}"));
                    }
                    let arg = Box::new(self.expr()?);
                    if !self.eat(b')') {
                        return self.err(self.pos, "expected ')'");
                    }
                    Ok(if word == "sqrt" { Expr::Sqrt(arg) } else { Expr::Exp(arg) })
                }
                _ => match word.strip_prefix('z').and_then(|d| d.parse::<usize>().ok()) {
                    Some(i) if i >= 1 => Ok(Expr::Var(i - 1)),
                    _ => self.err(start, format!("unknown identifier {word:?}")),
                },
            };
        }
        self.err(start, format!("unexpected character {:?}", c as char))
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut end = start;
        while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
            end += 1;
        }
        if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
            let mut e = end + 1;
            if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                e += 1;
            }
            if e < self.src.len() && self.src[e].is_ascii_digit() {
                end = e;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..end]).expect("ascii");
        self.pos = end;
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Const(v)),
            Err(_) => self.err(start, format!("malformed number {text:?}")),
        }
    }
}

// Bounds the recursion depth of the parser.
const MAX_LEN: usize = 4096;

/// Parses an expression; error offsets are byte offsets into `src`.
pub fn parse_expr(src: &str) -> Result<Expr> {
    if src.len() > MAX_LEN {
        return Err(Error::Syntax { offset: MAX_LEN, message: format!("expression longer than {MAX_LEN} bytes") });
    }
    if let Some(i) = src.bytes().position(|b| !b.is_ascii()) {
        return Err(Error::Syntax { offset: i, message: "non-ASCII character".into() });
    }
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err(p.pos, format!("unexpected trailing input {:?}", &src[p.pos..]));
    }
    Ok(e)
}

/// Symbol in `dim` variables, checked for finiteness on the lattice `k_j ≤ cap`.
pub fn parse_symbol(src: &str, dim: usize, cap: usize) -> Result<MultiplierSymbol> {
    let expr = parse_expr(src)?;
    if expr.arity() > dim {
        return Err(Error::Syntax {
            offset: src.find(&format!("z{}", expr.arity())).unwrap_or(0),
            message: format!("variable z{} exceeds dimension {dim}", expr.arity()),
        });
    }
    let e = expr.clone();
    let sym = MultiplierSymbol::new(src.trim().to_string(), dim, move |z| e.eval(z))?;
    for k in MultiIndex::all_up_to(dim, cap) {
        let v = sym.eval_lattice(&k);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Domain(format!("{src:?} is not finite at lattice point {:?}", k.lattice_point())));
        }
    }
    Ok(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(src: &str, z: &[f64]) -> Complex64 {
        let z: Vec<Complex64> = z.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        parse_expr(src).unwrap().eval(&z)
    }

    #[test]
    fn examples() {
        let one = parse_symbol("1", 2, 4).unwrap();
        assert_eq!(one.eval_real(&[3.0, 5.0]), Complex64::new(1.0, 0.0));
        let s = parse_symbol("sqrt(z1/(z1+1))", 1, 8).unwrap();
        for z in [1.0, 3.0, 17.0] {
            assert!((s.eval_real(&[z]).re - (z / (z + 1.0)).sqrt()).abs() < 1e-15);
        }
        match parse_expr("z1^") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1+2*3", &[]).re, 7.0);
        assert_eq!(at("2^3^2", &[]).re, 512.0);
        assert_eq!(at("-2^2", &[]).re, -4.0);
        assert_eq!(at("8/4/2", &[]).re, 1.0);
        assert_eq!(at("1/3*3", &[]).re, 1.0);
        assert_eq!(at("z1*z2 - z2", &[3.0, 5.0]).re, 10.0);
        assert!((at("exp(1)", &[]).re - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(at("2.5e1 + 1E-1", &[]).re, 25.1);
        assert!((at("z1^0.5", &[9.0]).re - 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        for (src, off) in [("", 0), ("1 +", 3), ("(1", 2), ("foo(1)", 0), ("1 2", 2), ("sqrt 1", 5), ("z0", 0), ("3 $", 2)] {
            match parse_expr(src) {
                Err(Error::Syntax { offset, .. }) => assert_eq!(offset, off, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
        assert!(matches!(parse_symbol("z3", 2, 2), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_symbol("1/(z1-3)", 1, 3), Err(Error::Domain(_))));
        assert!(parse_symbol("1/(z1-3)", 1, 0).is_ok());
    }

    proptest! {
        #[test]
        fn linear_forms_evaluate(a in -50i32..50, b in 1i32..50, x in 0.5f64..20.0) {
            let src = format!("{a}*z1 + {b}/(z1+1)");
            let got = at(&src, &[x]).re;
            let want = a as f64 * x + b as f64 / (x + 1.0);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }

        #[test]
        fn never_panics(src in "[z0-9+*/^() .sqrtexp-]{0,24}") {
            let _ = parse_expr(&src);
        }
    }
}
