//! Recursive-descent parser for the textual expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_traits::One;

use super::{Arg, DerivativeIndex, Expr, ExprError, FuncSym, Rational, Var, DEFAULT_JET_CAP};

pub fn parse(s: &str) -> Result<Expr, ExprError> {
    parse_with_cap(s, DEFAULT_JET_CAP)
}

pub fn parse_with_cap(s: &str, cap: u32) -> Result<Expr, ExprError> {
    let tokens = lex(s)?;
    let mut p = Parser { tokens, pos: 0, cap, len: s.len() };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            out.push((start, Tok::Num(decimal(&s[start..i], start)?)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(s[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ExprError::Syntax { pos: i, msg: format!("unexpected character `{}`", c) });
        }
    }
    Ok(out)
}

fn decimal(text: &str, pos: usize) -> Result<Rational, ExprError> {
    let bad = || ExprError::Syntax { pos, msg: format!("bad number `{}`", text) };
    let (int, frac) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if frac.contains('.') {
        return Err(bad());
    }
    let digits = format!("{}{}", int, frac);
    let n: BigInt = if digits.is_empty() { return Err(bad()) } else { digits.parse().map_err(|_| bad())? };
    let d = num_traits::pow(BigInt::from(10), frac.len());
    Ok(Rational::new(n, d))
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    cap: u32,
    len: usize,
}

impl Parser {
    fn error(&self, msg: &str) -> ExprError {
        let pos = self.tokens.get(self.pos).map(|t| t.0).unwrap_or(self.len);
        ExprError::Syntax { pos, msg: msg.to_string() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc += &self.term()?;
            } else if self.eat('-') {
                acc -= &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let pos = self.pos;
                let d = self.unary()?;
                acc = acc.try_div(&d).map_err(|e| match e {
                    ExprError::DivisionByZero => ExprError::Syntax {
                        pos: self.tokens.get(pos).map(|t| t.0).unwrap_or(self.len),
                        msg: "division by zero".into(),
                    },
                    other => other,
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exponent = self.unary()?;
        power(&base, &exponent)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(q) => Ok(Expr::constant(q)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => {
                self.pos -= 1;
                Err(self.error(&format!("unexpected `{}`", c)))
            }
            Tok::Ident(name) => {
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    self.call(&name, args)
                } else {
                    self.identifier(&name)
                }
            }
        }
    }

    fn identifier(&self, name: &str) -> Result<Expr, ExprError> {
        match name {
            "t" => return Ok(Expr::var(Var::T)),
            "x" => return Ok(Expr::var(Var::X)),
            "z" => return Ok(Expr::var(Var::Z)),
            "y" => return Ok(Expr::var(Var::Y)),
            "u" => return Ok(Expr::u()),
            "U" => return Ok(Expr::ode(0)),
            _ => {}
        }
        if let Some(suffix) = name.strip_prefix("u_") {
            let idx = DerivativeIndex::from_suffix(suffix)
                .filter(|i| i.order() > 0)
                .ok_or_else(|| self.error(&format!("bad jet `{}`", name)))?;
            if idx.order() > self.cap {
                return Err(ExprError::JetCapExceeded { order: idx.order(), cap: self.cap });
            }
            return Ok(Expr::jet(idx));
        }
        if let Some(suffix) = name.strip_prefix("U_") {
            if !suffix.is_empty() && suffix.chars().all(|c| c == 'y') {
                return Ok(Expr::ode(suffix.len() as u32));
            }
            return Err(self.error(&format!("bad derivative `{}`", name)));
        }
        Ok(Expr::param(name))
    }

    fn call(&self, name: &str, args: Vec<Expr>) -> Result<Expr, ExprError> {
        match name {
            "exp" => {
                let [a] = one_arg(args).map_err(|_| self.error("exp takes one argument"))?;
                return Ok(Expr::exp(a));
            }
            "ln" | "log" => {
                let [a] = one_arg(args).map_err(|_| self.error("ln takes one argument"))?;
                return ln_expr(&a);
            }
            "sqrt" => {
                let [a] = one_arg(args).map_err(|_| self.error("sqrt takes one argument"))?;
                return a.pow_rational(&Rational::new(BigInt::one(), BigInt::from(2)));
            }
            _ => {}
        }
        let coords: Vec<Arg> = args
            .iter()
            .map(|a| a.as_atom().and_then(Arg::from_atom))
            .collect::<Option<_>>()
            .ok_or_else(|| ExprError::Composition(format!("{}(...) needs coordinate arguments", name)))?;
        Ok(Expr::func(func_symbol(name, coords).ok_or_else(|| self.error(&format!("bad function `{}`", name)))?))
    }
}

fn one_arg(args: Vec<Expr>) -> Result<[Expr; 1], ()> {
    args.try_into().map_err(|_| ())
}

fn ln_expr(a: &Expr) -> Result<Expr, ExprError> {
    let unsupported = || ExprError::Unsupported(format!("ln({})", a));
    let (m, c) = a.as_monomial().ok_or_else(unsupported)?;
    if !c.is_one() {
        return Err(unsupported());
    }
    let mut out = Expr::zero();
    for (atom, e) in m.factors() {
        let arg = Arg::from_atom(atom).ok_or_else(unsupported)?;
        out += &Expr::ln(arg).scale(e);
    }
    Ok(out)
}

fn func_symbol(name: &str, args: Vec<Arg>) -> Option<FuncSym> {
    let mut name = name;
    let mut integrals = 0;
    while let Some(rest) = name.strip_prefix("int_") {
        integrals += 1;
        name = rest;
    }
    if args.len() == 1 {
        let first = name.chars().next()?;
        if first.is_ascii_uppercase() {
            let lower = format!("{}{}", first.to_ascii_lowercase(), &name[1..]);
            return Some(FuncSym::unary(lower, args[0], -1 - integrals));
        }
        if integrals > 0 {
            return None;
        }
        if let Some((base, suffix)) = name.rsplit_once('_') {
            if !suffix.is_empty() && suffix.chars().all(|c| c.to_string() == args[0].name()) {
                return Some(FuncSym::unary(base, args[0], suffix.len() as i32));
            }
        }
        let trimmed = name.trim_end_matches('p');
        if trimmed.is_empty() {
            return Some(FuncSym::unary(name, args[0], 0));
        }
        let order = (name.len() - trimmed.len()) as i32;
        return Some(FuncSym::unary(trimmed, args[0], order));
    }
    if integrals > 0 {
        return None;
    }
    let mut f = FuncSym::new(name, args.clone());
    if let Some((base, suffix)) = name.rsplit_once('_') {
        let mut orders = vec![0; args.len()];
        let ok = suffix.chars().all(|c| match args.iter().position(|a| a.name() == c.to_string()) {
            Some(k) => {
                orders[k] += 1;
                true
            }
            None => false,
        });
        if ok {
            f = FuncSym { name: base.to_string(), args, orders };
        }
    }
    Some(f)
}

/// `base^exponent`; non-rational exponents need a coordinate base.
fn power(base: &Expr, exponent: &Expr) -> Result<Expr, ExprError> {
    if let Some(k) = exponent.as_rational() {
        return base.pow_rational(&k);
    }
    if base.is_zero() {
        return Ok(Expr::zero());
    }
    let arg = base
        .as_atom()
        .and_then(Arg::from_atom)
        .ok_or_else(|| ExprError::UnsupportedPower(format!("({})^({})", base, exponent)))?;
    Ok(Expr::exp(exponent * &Expr::ln(arg)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_examples() {
        for s in [
            "u_t + u*u_z + u_zzz + u_xxz",
            "-1/3*x*t^(-4/3) + exp(-mu*u)*u_z",
            "F(U) + fpp(u)*u_x^2 - int_F(U)",
            "b_tx(t,x,z) + lam(t)*u_zzz",
            "t^p + 0.25*kappa^(-1)",
            "ln(t)*x + U_yyy",
        ] {
            let e = parse(s).unwrap();
            let again = parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{} -> {}", s, e);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("u_t +"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("u_zzzzz"), Err(ExprError::JetCapExceeded { .. })));
        assert!(matches!(parse("1/(u+1)"), Err(ExprError::NonMonomialDivision(_))));
        assert!(matches!(parse("f(u+1)"), Err(ExprError::Composition(_))));
        assert!(matches!(parse("u_q"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.5").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse("1.25*x").unwrap(), parse("5/4*x").unwrap());
    }
}
