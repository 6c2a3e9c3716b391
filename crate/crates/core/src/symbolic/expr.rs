//! Scalar factor expressions over `x_1..x_d, ξ_1..ξ_d` with exact forward-mode
//! derivatives.

use std::fmt;

use super::smooth::smooth_norm_d;

/// Largest spatial dimension supported by expressions.
pub const MAX_DIM: usize = 4;
/// Gradient slots: `x_1..x_4` then `ξ_1..ξ_4`.
pub const SLOTS: usize = 2 * MAX_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Xi(usize),
}

impl Var {
    pub fn slot(self) -> usize {
        match self {
            Var::X(i) => i,
            Var::Xi(i) => MAX_DIM + i,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, i32),
    /// `⟨|args|⟩_ε`.
    SmoothNorm { args: Vec<Expr>, eps: f64 },
    /// `1/⟨|args|⟩_ε`.
    SmoothNormInv { args: Vec<Expr>, eps: f64 },
    /// `√(1 + |args|²)`.
    Bracket(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorClass {
    Const,
    XOnly,
    XiOnly,
    Mixed,
}

/// Value plus gradient over the fixed slot layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: [f64; SLOTS],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { v, g: [0.0; SLOTS] }
    }
}

/// Point in phase space with `x` and `ξ` stored separately; missing trailing
/// coordinates read as zero.
#[derive(Debug, Clone, Copy)]
pub struct Point<'a> {
    pub x: &'a [f64],
    pub xi: &'a [f64],
}

impl Point<'_> {
    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X(i) => self.x.get(i).copied().unwrap_or(0.0),
            Var::Xi(i) => self.xi.get(i).copied().unwrap_or(0.0),
        }
    }
}

impl Expr {
    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::X(i))
    }

    pub fn xi(i: usize) -> Expr {
        Expr::Var(Var::Xi(i))
    }

    /// Bit set of used slots.
    pub fn dependency_mask(&self) -> u16 {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(v) => 1 << v.slot(),
            Expr::Sum(items) | Expr::Product(items) | Expr::Bracket(items) => {
                items.iter().fold(0, |m, e| m | e.dependency_mask())
            }
            Expr::SmoothNorm { args, .. } | Expr::SmoothNormInv { args, .. } => {
                args.iter().fold(0, |m, e| m | e.dependency_mask())
            }
            Expr::Pow(b, _) => b.dependency_mask(),
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.dependency_mask() & (1 << v.slot()) != 0
    }

    pub fn classify(&self) -> FactorClass {
        let m = self.dependency_mask();
        let xm = (1u16 << MAX_DIM) - 1;
        match (m & xm != 0, m & !xm != 0) {
            (false, false) => FactorClass::Const,
            (true, false) => FactorClass::XOnly,
            (false, true) => FactorClass::XiOnly,
            (true, true) => FactorClass::Mixed,
        }
    }

    /// Largest variable index used plus one (0 for constants).
    pub fn max_dim_used(&self) -> usize {
        let m = self.dependency_mask();
        (0..MAX_DIM)
            .filter(|&i| m & (1 << i) != 0 || m & (1 << (MAX_DIM + i)) != 0)
            .map(|i| i + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => p.get(*v),
            Expr::Sum(items) => items.iter().map(|e| e.eval(p)).sum(),
            Expr::Product(items) => items.iter().map(|e| e.eval(p)).product(),
            Expr::Pow(b, n) => b.eval(p).powi(*n),
            Expr::SmoothNorm { args, eps } => smooth_norm_d(norm(args, p), *eps).0,
            Expr::SmoothNormInv { args, eps } => 1.0 / smooth_norm_d(norm(args, p), *eps).0,
            Expr::Bracket(args) => {
                let r = norm(args, p);
                (1.0 + r * r).sqrt()
            }
        }
    }

    pub fn eval_dual(&self, p: Point) -> Dual {
        match self {
            Expr::Const(c) => Dual::constant(*c),
            Expr::Var(v) => {
                let mut d = Dual::constant(p.get(*v));
                d.g[v.slot()] = 1.0;
                d
            }
            Expr::Sum(items) => {
                let mut acc = Dual::constant(0.0);
                for e in items {
                    let t = e.eval_dual(p);
                    acc.v += t.v;
                    for (a, b) in acc.g.iter_mut().zip(t.g) {
                        *a += b;
                    }
                }
                acc
            }
            Expr::Product(items) => {
                let mut acc = Dual::constant(1.0);
                for e in items {
                    let t = e.eval_dual(p);
                    for (a, b) in acc.g.iter_mut().zip(t.g) {
                        *a = *a * t.v + acc.v * b;
                    }
                    acc.v *= t.v;
                }
                acc
            }
            Expr::Pow(b, n) => {
                let t = b.eval_dual(p);
                if *n == 0 {
                    return Dual::constant(1.0);
                }
                let dv = *n as f64 * t.v.powi(n - 1);
                let mut out = Dual::constant(t.v.powi(*n));
                for (a, b) in out.g.iter_mut().zip(t.g) {
                    *a = dv * b;
                }
                out
            }
            Expr::SmoothNorm { args, eps } | Expr::SmoothNormInv { args, eps } => {
                let (r, dr) = norm_dual(args, p);
                let (s, ds) = smooth_norm_d(r, *eps);
                let (v, dv) = if matches!(self, Expr::SmoothNorm { .. }) {
                    (s, ds)
                } else {
                    (1.0 / s, -ds / (s * s))
                };
                let mut out = Dual::constant(v);
                for (a, b) in out.g.iter_mut().zip(dr) {
                    *a = dv * b;
                }
                out
            }
            Expr::Bracket(args) => {
                let (r, dr) = norm_dual(args, p);
                let v = (1.0 + r * r).sqrt();
                let mut out = Dual::constant(v);
                for (a, b) in out.g.iter_mut().zip(dr) {
                    *a = r / v * b;
                }
                out
            }
        }
    }

    /// Replaces every variable `X(i)` with `X(map(i))` (and likewise for ξ).
    pub fn remap(&self, fx: &dyn Fn(Var) -> Var) -> Expr {
        let all = |items: &Vec<Expr>| items.iter().map(|e| e.remap(fx)).collect::<Vec<_>>();
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => Expr::Var(fx(*v)),
            Expr::Sum(items) => Expr::Sum(all(items)),
            Expr::Product(items) => Expr::Product(all(items)),
            Expr::Pow(b, n) => Expr::Pow(Box::new(b.remap(fx)), *n),
            Expr::SmoothNorm { args, eps } => Expr::SmoothNorm { args: all(args), eps: *eps },
            Expr::SmoothNormInv { args, eps } => Expr::SmoothNormInv { args: all(args), eps: *eps },
            Expr::Bracket(args) => Expr::Bracket(all(args)),
        }
    }

    /// Multiplies two expressions, merging constant factors.
    pub fn times(self, other: Expr) -> Expr {
        match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            (Expr::Const(a), e) | (e, Expr::Const(a)) if a == 1.0 => e,
            (Expr::Product(mut a), Expr::Product(b)) => {
                a.extend(b);
                Expr::Product(a)
            }
            (Expr::Product(mut a), e) => {
                a.push(e);
                Expr::Product(a)
            }
            (e, Expr::Product(mut b)) => {
                b.insert(0, e);
                Expr::Product(b)
            }
            (a, b) => Expr::Product(vec![a, b]),
        }
    }
}

fn norm(args: &[Expr], p: Point) -> f64 {
    args.iter().map(|e| e.eval(p).powi(2)).sum::<f64>().sqrt()
}

fn norm_dual(args: &[Expr], p: Point) -> (f64, [f64; SLOTS]) {
    let mut sq = 0.0;
    let mut g = [0.0; SLOTS];
    for e in args {
        let t = e.eval_dual(p);
        sq += t.v * t.v;
        for (a, b) in g.iter_mut().zip(t.g) {
            *a += t.v * b;
        }
    }
    let r = sq.sqrt();
    if r > 0.0 {
        for a in g.iter_mut() {
            *a /= r;
        }
    } else {
        g = [0.0; SLOTS];
    }
    (r, g)
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr], sep: &str) -> fmt::Result {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

/// Canonical text form; parsing it back yields an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Xi(i)) => write!(f, "xi{}", i + 1),
            Expr::Sum(items) => {
                f.write_str("(")?;
                write_list(f, items, " + ")?;
                f.write_str(")")
            }
            Expr::Product(items) => {
                f.write_str("(")?;
                write_list(f, items, " * ")?;
                f.write_str(")")
            }
            Expr::Pow(b, n) => {
                if matches!(**b, Expr::Pow(..)) {
                    write!(f, "({b})")?;
                } else {
                    write!(f, "{b}")?;
                }
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::SmoothNorm { args, eps } => {
                f.write_str("snorm(")?;
                write_list(f, args, ", ")?;
                write!(f, "; {eps:?})")
            }
            Expr::SmoothNormInv { args, eps } => {
                f.write_str("snorm_inv(")?;
                write_list(f, args, ", ")?;
                write!(f, "; {eps:?})")
            }
            Expr::Bracket(args) => {
                f.write_str("bracket(")?;
                write_list(f, args, ", ")?;
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt<'a>(x: &'a [f64], xi: &'a [f64]) -> Point<'a> {
        Point { x, xi }
    }

    #[test]
    fn classification() {
        let e = Expr::Product(vec![Expr::Const(2.0), Expr::x(0)]);
        assert_eq!(e.classify(), FactorClass::XOnly);
        let e = Expr::Sum(vec![Expr::xi(1), Expr::Const(1.0)]);
        assert_eq!(e.classify(), FactorClass::XiOnly);
        let e = Expr::Product(vec![Expr::xi(1), Expr::x(0)]);
        assert_eq!(e.classify(), FactorClass::Mixed);
        assert_eq!(Expr::Const(3.0).classify(), FactorClass::Const);
        assert_eq!(e.max_dim_used(), 2);
    }

    #[test]
    fn dual_matches_value_and_fd() {
        let e = Expr::Product(vec![
            Expr::SmoothNormInv { args: vec![Expr::xi(0), Expr::xi(1)], eps: 0.7 },
            Expr::Sum(vec![Expr::Pow(Box::new(Expr::xi(0)), 2), Expr::Pow(Box::new(Expr::xi(1)), 2)]),
            Expr::Bracket(vec![Expr::x(0)]),
        ]);
        let x = [0.4];
        let xi = [1.3, 1.9];
        let d = e.eval_dual(pt(&x, &xi));
        assert!((d.v - e.eval(pt(&x, &xi))).abs() < 1e-14);
        let h = 1e-6;
        let fd = (e.eval(pt(&x, &[xi[0] + h, xi[1]])) - e.eval(pt(&x, &[xi[0] - h, xi[1]]))) / (2.0 * h);
        assert!((d.g[MAX_DIM] - fd).abs() < 1e-6);
        let fd = (e.eval(pt(&[x[0] + h], &xi)) - e.eval(pt(&[x[0] - h], &xi))) / (2.0 * h);
        assert!((d.g[0] - fd).abs() < 1e-6);
    }

    #[test]
    fn times_merges_constants() {
        assert_eq!(Expr::Const(2.0).times(Expr::Const(3.0)), Expr::Const(6.0));
        assert_eq!(Expr::Const(1.0).times(Expr::x(0)), Expr::x(0));
    }
}
