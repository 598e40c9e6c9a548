//! Expression trees over jet variables with symbolic differentiation.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::JetError;

/// The jet coordinate `x_{var+1}^{(order)}`; `var` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JetVar {
    pub var: usize,
    pub order: u32,
}

impl JetVar {
    pub fn new(var: usize, order: u32) -> Self {
        Self { var, order }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(BigRational),
    Var(JetVar),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    /// Integer power; `Pow(e, -1)` is the reciprocal.
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Tan(Box<Expr>),
    Exp(Box<Expr>),
    /// Natural logarithm.
    Ln(Box<Expr>),
}

/// Below this magnitude `cos` is treated as zero when evaluating `tan`.
const TAN_POLE_EPS: f64 = 1e-12;

impl Expr {
    pub fn zero() -> Self {
        Expr::Const(BigRational::zero())
    }

    pub fn one() -> Self {
        Expr::Const(BigRational::one())
    }

    pub fn int(k: i64) -> Self {
        Expr::Const(BigRational::from_integer(BigInt::from(k)))
    }

    /// Exact rational image of a finite float.
    pub fn num(x: f64) -> Self {
        Expr::Const(BigRational::from_float(x).expect("finite constant"))
    }

    pub fn var(var: usize, order: u32) -> Self {
        Expr::Var(JetVar::new(var, order))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn add(terms: Vec<Expr>) -> Self {
        let mut out = Vec::with_capacity(terms.len());
        let mut c = BigRational::zero();
        for t in terms {
            match t {
                Expr::Add(inner) => {
                    for u in inner {
                        match u {
                            Expr::Const(k) => c += k,
                            u => out.push(u),
                        }
                    }
                }
                Expr::Const(k) => c += k,
                t => out.push(t),
            }
        }
        if !c.is_zero() {
            out.push(Expr::Const(c));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Add(out),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Self {
        let mut out = Vec::with_capacity(factors.len());
        let mut c = BigRational::one();
        for f in factors {
            match f {
                Expr::Mul(inner) => {
                    for u in inner {
                        match u {
                            Expr::Const(k) => c *= k,
                            u => out.push(u),
                        }
                    }
                }
                Expr::Const(k) => c *= k,
                f => out.push(f),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if !c.is_one() || out.is_empty() {
            out.insert(0, Expr::Const(c));
        }
        match out.len() {
            1 => out.pop().unwrap(),
            _ => Expr::Mul(out),
        }
    }

    pub fn neg(e: Expr) -> Self {
        Expr::mul(vec![Expr::int(-1), e])
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::add(vec![a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::mul(vec![a, Expr::pow(b, -1)])
    }

    pub fn pow(base: Expr, k: i32) -> Self {
        match (base, k) {
            (_, 0) => Expr::one(),
            (b, 1) => b,
            (Expr::Const(c), k) if !(c.is_zero() && k < 0) => Expr::Const(rational_powi(&c, k)),
            (Expr::Pow(b, m), k) => Expr::pow(*b, m * k),
            (b, k) => Expr::Pow(Box::new(b), k),
        }
    }

    pub fn sin(e: Expr) -> Self {
        match e.as_const() {
            Some(c) if c.is_zero() => Expr::zero(),
            _ => Expr::Sin(Box::new(e)),
        }
    }

    pub fn cos(e: Expr) -> Self {
        match e.as_const() {
            Some(c) if c.is_zero() => Expr::one(),
            _ => Expr::Cos(Box::new(e)),
        }
    }

    pub fn tan(e: Expr) -> Self {
        match e.as_const() {
            Some(c) if c.is_zero() => Expr::zero(),
            _ => Expr::Tan(Box::new(e)),
        }
    }

    pub fn exp(e: Expr) -> Self {
        match e.as_const() {
            Some(c) if c.is_zero() => Expr::one(),
            _ => Expr::Exp(Box::new(e)),
        }
    }

    pub fn ln(e: Expr) -> Self {
        match e.as_const() {
            Some(c) if c.is_one() => Expr::zero(),
            _ => Expr::Ln(Box::new(e)),
        }
    }

    /// Calls `f` on every jet variable leaf.
    pub fn visit_vars(&self, f: &mut impl FnMut(JetVar)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Add(ts) | Expr::Mul(ts) => ts.iter().for_each(|t| t.visit_vars(f)),
            Expr::Pow(b, _) | Expr::Sin(b) | Expr::Cos(b) | Expr::Tan(b) | Expr::Exp(b) | Expr::Ln(b) => {
                b.visit_vars(f)
            }
        }
    }

    /// Highest derivative order of variable `var`, `None` when absent.
    pub fn order_of(&self, var: usize) -> Option<u32> {
        let mut best = None;
        self.visit_vars(&mut |v| {
            if v.var == var {
                best = Some(best.map_or(v.order, |b: u32| b.max(v.order)));
            }
        });
        best
    }

    pub fn depends_on(&self, v: JetVar) -> bool {
        let mut hit = false;
        self.visit_vars(&mut |w| hit |= w == v);
        hit
    }

    /// Partial derivative with respect to one jet coordinate.
    pub fn diff(&self, v: JetVar) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(ts) => Expr::add(ts.iter().map(|t| t.diff(v)).collect()),
            Expr::Mul(fs) => {
                let mut terms = Vec::new();
                for (k, f) in fs.iter().enumerate() {
                    let df = f.diff(v);
                    if df.is_zero() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = fs
                        .iter()
                        .enumerate()
                        .filter(|&(m, _)| m != k)
                        .map(|(_, g)| g.clone())
                        .collect();
                    prod.push(df);
                    terms.push(Expr::mul(prod));
                }
                Expr::add(terms)
            }
            Expr::Pow(b, k) => Expr::mul(vec![Expr::int(*k as i64), Expr::pow((**b).clone(), k - 1), b.diff(v)]),
            Expr::Sin(b) => Expr::mul(vec![Expr::cos((**b).clone()), b.diff(v)]),
            Expr::Cos(b) => Expr::mul(vec![Expr::int(-1), Expr::sin((**b).clone()), b.diff(v)]),
            Expr::Tan(b) => {
                let t = Expr::tan((**b).clone());
                Expr::mul(vec![Expr::add(vec![Expr::one(), Expr::pow(t, 2)]), b.diff(v)])
            }
            Expr::Exp(b) => Expr::mul(vec![self.clone(), b.diff(v)]),
            Expr::Ln(b) => Expr::mul(vec![Expr::pow((**b).clone(), -1), b.diff(v)]),
        }
    }

    /// Floating-point evaluation; `lookup` supplies jet values.
    pub fn eval(&self, lookup: &impl Fn(JetVar) -> Result<f64, JetError>) -> Result<f64, JetError> {
        let x = match self {
            Expr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            Expr::Var(v) => lookup(*v)?,
            Expr::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval(lookup)?;
                }
                s
            }
            Expr::Mul(fs) => {
                let mut p = 1.0;
                for f in fs {
                    p *= f.eval(lookup)?;
                }
                p
            }
            Expr::Pow(b, k) => {
                let x = b.eval(lookup)?;
                if *k < 0 && x == 0.0 {
                    return Err(JetError::Domain("division by zero".into()));
                }
                x.powi(*k)
            }
            Expr::Sin(b) => b.eval(lookup)?.sin(),
            Expr::Cos(b) => b.eval(lookup)?.cos(),
            Expr::Tan(b) => {
                let x = b.eval(lookup)?;
                if x.cos().abs() < TAN_POLE_EPS {
                    return Err(JetError::Domain(format!("tan evaluated at a pole ({x})")));
                }
                x.tan()
            }
            Expr::Exp(b) => b.eval(lookup)?.exp(),
            Expr::Ln(b) => {
                let x = b.eval(lookup)?;
                if x <= 0.0 {
                    return Err(JetError::Domain(format!("logarithm of a non-positive value ({x})")));
                }
                x.ln()
            }
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(JetError::Domain("non-finite value".into()))
        }
    }

    /// Exact evaluation for the polynomial and rational fragment.
    pub fn eval_exact(
        &self,
        lookup: &impl Fn(JetVar) -> Result<BigRational, JetError>,
    ) -> Result<BigRational, JetError> {
        Ok(match self {
            Expr::Const(c) => c.clone(),
            Expr::Var(v) => lookup(*v)?,
            Expr::Add(ts) => {
                let mut s = BigRational::zero();
                for t in ts {
                    s += t.eval_exact(lookup)?;
                }
                s
            }
            Expr::Mul(fs) => {
                let mut p = BigRational::one();
                for f in fs {
                    p *= f.eval_exact(lookup)?;
                }
                p
            }
            Expr::Pow(b, k) => {
                let x = b.eval_exact(lookup)?;
                if *k < 0 && x.is_zero() {
                    return Err(JetError::Domain("division by zero".into()));
                }
                rational_powi(&x, *k)
            }
            Expr::Sin(_) | Expr::Cos(_) | Expr::Tan(_) | Expr::Exp(_) | Expr::Ln(_) => {
                return Err(JetError::NotRational)
            }
        })
    }

    /// Renders the expression in the input syntax using `names` for variables.
    pub fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        self.write(&mut s, names, 0);
        s
    }

    fn write(&self, s: &mut String, names: &[String], prec: u8) {
        let open = |s: &mut String, p: u8| {
            if prec > p {
                s.push('(');
            }
        };
        let close = |s: &mut String, p: u8| {
            if prec > p {
                s.push(')');
            }
        };
        match self {
            Expr::Const(c) => {
                let neg = c.is_negative();
                if neg || !c.is_integer() {
                    open(s, 2);
                }
                if c.is_integer() {
                    let _ = write!(s, "{}", c.numer());
                } else {
                    let _ = write!(s, "{}/{}", c.numer(), c.denom());
                }
                if neg || !c.is_integer() {
                    close(s, 2);
                }
            }
            Expr::Var(v) => {
                let name = names.get(v.var).cloned().unwrap_or_else(|| format!("x{}", v.var + 1));
                if v.order == 0 {
                    s.push_str(&name);
                } else {
                    let _ = write!(s, "d({name},{})", v.order);
                }
            }
            Expr::Add(ts) => {
                open(s, 1);
                for (k, t) in ts.iter().enumerate() {
                    if k > 0 {
                        s.push_str(" + ");
                    }
                    t.write(s, names, 1);
                }
                close(s, 1);
            }
            Expr::Mul(fs) => {
                open(s, 2);
                for (k, f) in fs.iter().enumerate() {
                    if k > 0 {
                        s.push_str(" * ");
                    }
                    f.write(s, names, 3);
                }
                close(s, 2);
            }
            Expr::Pow(b, k) => {
                open(s, 3);
                b.write(s, names, 4);
                if *k < 0 {
                    let _ = write!(s, "^({k})");
                } else {
                    let _ = write!(s, "^{k}");
                }
                close(s, 3);
            }
            Expr::Sin(b) | Expr::Cos(b) | Expr::Tan(b) | Expr::Exp(b) | Expr::Ln(b) => {
                let f = match self {
                    Expr::Sin(_) => "sin",
                    Expr::Cos(_) => "cos",
                    Expr::Tan(_) => "tan",
                    Expr::Exp(_) => "exp",
                    _ => "ln",
                };
                s.push_str(f);
                s.push('(');
                b.write(s, names, 0);
                s.push(')');
            }
        }
    }
}

pub(crate) fn rational_powi(c: &BigRational, k: i32) -> BigRational {
    let p = num_traits::pow(c.clone(), k.unsigned_abs() as usize);
    if k < 0 {
        p.recip()
    } else {
        p
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
