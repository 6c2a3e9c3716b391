//! Recursive-descent parser for factor expressions.
//!
//! Grammar:
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' ('-'? INT | '(' '-'? INT ')'))?
//! atom  := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'
//! args  := item (',' item)* (';' expr)?
//! ```
//! `x` and `xi` inside function arguments expand to all `d` coordinates.
//! Without `;`, the last comma-separated argument of `snorm`/`snorm_inv` is ε.

use std::collections::BTreeMap;

use super::expr::{Expr, Var, MAX_DIM};
use crate::error::{Error, Result};

/// Dimension and named parameters visible to the parser.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
}

impl ParseContext {
    pub fn new(dim: usize) -> Self {
        ParseContext { dim, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let (tl, tc) = (line, col);
        if ch == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Syntax {
                line: tl,
                column: tc,
                message: format!("malformed number `{text}`"),
            })?;
            col += i - start;
            out.push(Token { tok: Tok::Num(v), line: tl, column: tc });
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        if "+-*/^(),;".contains(ch) {
            out.push(Token { tok: Tok::Sym(ch), line: tl, column: tc });
            i += 1;
            col += 1;
            continue;
        }
        return Err(Error::Syntax { line: tl, column: tc, message: format!("unexpected character `{ch}`") });
    }
    out.push(Token { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    ctx: &'a ParseContext,
}

enum Arg {
    One(Expr),
    Group(Vec<Expr>),
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { line: t.line, column: t.column, message: message.into() })
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            self.err(&t, format!("expected `{c}`, found {}", describe(&t.tok)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let first = self.term()?;
        let mut items = vec![first];
        loop {
            if self.is_sym('+') {
                self.next();
                items.push(self.term()?);
            } else if self.is_sym('-') {
                self.next();
                let t = self.term()?;
                items.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Sum(items) })
    }

    fn term(&mut self) -> Result<Expr> {
        let first = self.unary()?;
        let mut items = vec![first];
        loop {
            if self.is_sym('*') {
                self.next();
                items.push(self.unary()?);
            } else if self.is_sym('/') {
                self.next();
                let d = self.unary()?;
                items.push(Expr::Pow(Box::new(d), -1));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Product(items) })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.is_sym('-') {
            self.next();
            let inner = self.unary()?;
            return Ok(negate(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.is_sym('^') {
            return Ok(base);
        }
        self.next();
        let paren = self.is_sym('(');
        if paren {
            self.next();
        }
        let neg = self.is_sym('-');
        if neg {
            self.next();
        }
        let t = self.next();
        let n = match t.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            _ => return self.err(&t, "exponent must be an integer"),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(Expr::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.next();
        match &t.tok {
            Tok::Num(v) => Ok(Expr::Const(*v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.is_sym('(') {
                    self.next();
                    return self.call(name.clone(), &t);
                }
                match self.ident(name, &t)? {
                    Arg::One(e) => Ok(e),
                    Arg::Group(_) => self.err(&t, format!("coordinate group `{name}` is only allowed as a function argument")),
                }
            }
            other => self.err(&t, format!("unexpected {}", describe(other))),
        }
    }

    fn ident(&self, name: &str, t: &Token) -> Result<Arg> {
        let unknown = || Error::UnknownIdentifier { name: name.to_string(), line: t.line, column: t.column };
        if let Some(v) = self.ctx.params.get(name) {
            return Ok(Arg::One(Expr::Const(*v)));
        }
        let d = self.ctx.dim.min(MAX_DIM);
        match name {
            "x" => return Ok(Arg::Group((0..d).map(Expr::x).collect())),
            "xi" => return Ok(Arg::Group((0..d).map(Expr::xi).collect())),
            _ => {}
        }
        let (kind, rest) = if let Some(r) = name.strip_prefix("xi") {
            (1, r)
        } else if let Some(r) = name.strip_prefix('x') {
            (0, r)
        } else {
            return Err(unknown());
        };
        match rest.parse::<usize>() {
            Ok(i) if (1..=9).contains(&i) && !rest.starts_with('0') => {
                if i > d {
                    return Err(unknown());
                }
                Ok(Arg::One(Expr::Var(if kind == 0 { Var::X(i - 1) } else { Var::Xi(i - 1) })))
            }
            _ => Err(unknown()),
        }
    }

    fn arg_item(&mut self) -> Result<Arg> {
        if let Tok::Ident(name) = self.peek().tok.clone() {
            if matches!(name.as_str(), "x" | "xi") && !self.ctx.params.contains_key(&name) {
                let t = self.next();
                return self.ident(&name, &t);
            }
        }
        Ok(Arg::One(self.expr()?))
    }

    fn call(&mut self, name: String, t: &Token) -> Result<Expr> {
        if !matches!(name.as_str(), "snorm" | "snorm_inv" | "bracket") {
            return Err(Error::UnknownIdentifier { name, line: t.line, column: t.column });
        }
        let mut items: Vec<Arg> = Vec::new();
        let mut eps: Option<Expr> = None;
        if !self.is_sym(')') {
            items.push(self.arg_item()?);
            while self.is_sym(',') {
                self.next();
                items.push(self.arg_item()?);
            }
            if self.is_sym(';') {
                self.next();
                eps = Some(self.expr()?);
            }
        }
        self.expect(')')?;
        if name != "bracket" && eps.is_none() {
            match items.pop() {
                Some(Arg::One(e)) if !items.is_empty() => eps = Some(e),
                _ => return self.err(t, format!("`{name}` needs arguments and an epsilon")),
            }
        }
        let mut args = Vec::new();
        for a in items {
            match a {
                Arg::One(e) => args.push(e),
                Arg::Group(g) => args.extend(g),
            }
        }
        if args.is_empty() {
            return self.err(t, format!("`{name}` needs at least one argument"));
        }
        match name.as_str() {
            "bracket" => {
                if eps.is_some() {
                    return self.err(t, "`bracket` takes no epsilon");
                }
                Ok(Expr::Bracket(args))
            }
            _ => {
                let e = eps.unwrap();
                if e.dependency_mask() != 0 {
                    return self.err(t, "epsilon must be a constant");
                }
                let eps = e.eval(super::expr::Point { x: &[], xi: &[] });
                if !(eps > 0.0) {
                    return self.err(t, format!("epsilon must be positive, got {eps}"));
                }
                Ok(if name == "snorm" { Expr::SmoothNorm { args, eps } } else { Expr::SmoothNormInv { args, eps } })
            }
        }
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        other => Expr::Product(vec![Expr::Const(-1.0), other]),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}

/// Parses a factor expression.
pub fn parse_factor(source: &str, ctx: &ParseContext) -> Result<Expr> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, pos: 0, ctx };
    let e = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return p.err(&t, format!("unexpected {}", describe(&t.tok)));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::super::expr::Point;
    use super::*;

    fn ctx2() -> ParseContext {
        ParseContext::new(2).with_param("eta", 1.0).with_param("eps", 1.0)
    }

    #[test]
    fn arithmetic() {
        let e = parse_factor("xi1^2 + xi2^2", &ctx2()).unwrap();
        assert_eq!(e.eval(Point { x: &[0.0, 0.0], xi: &[1.0, 2.0] }), 5.0);
        let e = parse_factor("2 - 3*x1/4 - -1", &ctx2()).unwrap();
        assert!((e.eval(Point { x: &[2.0], xi: &[] }) - 1.5).abs() < 1e-15);
        let e = parse_factor("-x1^2", &ctx2()).unwrap();
        assert_eq!(e.eval(Point { x: &[3.0], xi: &[] }), -9.0);
        let e = parse_factor("x1^(-2) + x1^-1", &ctx2()).unwrap();
        assert_eq!(e.eval(Point { x: &[2.0], xi: &[] }), 0.75);
        let e = parse_factor("1.5e-1 * 2E1", &ctx2()).unwrap();
        assert!((e.eval(Point { x: &[], xi: &[] }) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn regularized_kinetic_term() {
        let e = parse_factor("eta * snorm_inv(xi,eps) * (xi1^2+xi2^2)", &ctx2()).unwrap();
        let v = e.eval(Point { x: &[0.0, 0.0], xi: &[3.0, 0.0] });
        assert!((v - 3.0).abs() < 1e-14);
        let f = parse_factor("eta * snorm_inv(xi; eps) * (xi1^2+xi2^2)", &ctx2()).unwrap();
        assert_eq!(e, f);
        let g = parse_factor("snorm(xi1, xi2, 1)", &ctx2()).unwrap();
        assert_eq!(g, Expr::SmoothNorm { args: vec![Expr::xi(0), Expr::xi(1)], eps: 1.0 });
        let b = parse_factor("bracket(x1)", &ctx2()).unwrap();
        assert!((b.eval(Point { x: &[1.0], xi: &[] }) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        match parse_factor("xi1 +", &ctx2()) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 6)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_factor("x1 +\n  foo", &ctx2()) {
            Err(Error::UnknownIdentifier { name, line, column }) => {
                assert_eq!((name.as_str(), line, column), ("foo", 2, 3))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_factor("x3", &ctx2()), Err(Error::UnknownIdentifier { .. })));
        assert!(parse_factor("x1^1.5", &ctx2()).is_err());
        assert!(parse_factor("snorm(xi; x1)", &ctx2()).is_err());
        assert!(parse_factor("xi + 1", &ctx2()).is_err());
        assert!(parse_factor("(x1", &ctx2()).is_err());
        assert!(parse_factor("x1 $ 2", &ctx2()).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        for src in [
            "xi1^2 + xi2^2 - 3*x1",
            "eta * snorm_inv(xi; 0.2) * (xi1^2 + xi2^2) - 1.5 * x1 * bracket(x1)",
            "(x1^2)^3 / (2 + xi2) - -4",
            "x1^(-2) * snorm(x1, xi1; 1e-3)",
        ] {
            let e = parse_factor(src, &ctx2()).unwrap();
            let printed = e.to_string();
            let back = parse_factor(&printed, &ctx2()).unwrap();
            assert_eq!(e, back, "{src} -> {printed}");
            assert_eq!(back.to_string(), printed);
        }
    }
}
