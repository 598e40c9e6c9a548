//! Differential systems in jet coordinates: parsing, order matrices,
//! Jacobians and truncated determinants at a point.

mod expr;
mod parser;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

pub use expr::{Expr, JetVar};
pub use parser::{parse_jet_ref, parse_system};

use crate::linalg;
use crate::tropical::{jacobi_cover, ExtInt, ExtOrderMatrix, Fin, NegInf, TropicalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("jet variable {0} has no value at this point")]
    Unset(String),
    #[error("exact evaluation only supports rational expressions")]
    NotRational,
    #[error("invalid point: {0}")]
    Point(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
}

/// A system of differential equations `P_i = 0` in the variables `x_1..x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffSystem {
    names: Vec<String>,
    equations: Vec<Expr>,
    labels: Vec<String>,
}

impl DiffSystem {
    /// Builds a system; panics when an equation references an undeclared variable.
    pub fn new(names: Vec<String>, equations: Vec<Expr>, labels: Vec<String>) -> Self {
        assert_eq!(equations.len(), labels.len(), "one label per equation");
        for e in &equations {
            e.visit_vars(&mut |v| assert!(v.var < names.len(), "undeclared variable x{}", v.var + 1));
        }
        Self { names, equations, labels }
    }

    /// A system with default names `x1..xn` and labels `P1..Ps`.
    pub fn from_equations(n: usize, equations: Vec<Expr>) -> Self {
        let names = (1..=n).map(|k| format!("x{k}")).collect();
        let labels = (1..=equations.len()).map(|k| format!("P{k}")).collect();
        Self::new(names, equations, labels)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn equations(&self) -> &[Expr] {
        &self.equations
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_eqs(&self) -> usize {
        self.equations.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// The equations with the given row indices, variables unchanged.
    pub fn subsystem(&self, rows: &[usize]) -> DiffSystem {
        DiffSystem {
            names: self.names.clone(),
            equations: rows.iter().map(|&i| self.equations[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Largest derivative order appearing anywhere in the system.
    pub fn max_order(&self) -> u32 {
        let mut m = 0;
        for e in &self.equations {
            e.visit_vars(&mut |v| m = m.max(v.order));
        }
        m
    }

    /// Text in the input format; parsing it returns an equal system.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut used = 0;
        for e in &self.equations {
            e.visit_vars(&mut |v| used = used.max(v.var + 1));
        }
        let renamed = self.names.iter().enumerate().any(|(k, n)| *n != format!("x{}", k + 1));
        if renamed || used < self.names.len() {
            s.push_str("vars: ");
            s.push_str(&self.names.join(" "));
            s.push('\n');
        }
        for (l, e) in self.labels.iter().zip(&self.equations) {
            s.push_str(&format!("{l}: {}\n", e.render(&self.names)));
        }
        s
    }

    pub fn jet_name(&self, v: JetVar) -> String {
        let n = self.names.get(v.var).cloned().unwrap_or_else(|| format!("x{}", v.var + 1));
        if v.order == 0 {
            n
        } else {
            format!("d({n},{})", v.order)
        }
    }

    fn check_rows_cols(&self, rows: &[usize], cols: &[usize]) -> Result<(), JetError> {
        if let Some(i) = rows.iter().find(|&&i| i >= self.n_eqs()) {
            return Err(JetError::Index(format!("equation {i}")));
        }
        if let Some(j) = cols.iter().find(|&&j| j >= self.n_vars()) {
            return Err(JetError::Index(format!("variable {j}")));
        }
        Ok(())
    }
}

/// Values of jet variables; unset coordinates read as 0 unless `strict`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JetPoint {
    values: BTreeMap<JetVar, f64>,
    strict: bool,
}

impl JetPoint {
    pub fn new() -> Self {
        Self::default()
    }

    /// A point that refuses to read unset coordinates.
    pub fn strict() -> Self {
        Self { values: BTreeMap::new(), strict: true }
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn set(&mut self, v: JetVar, x: f64) {
        self.values.insert(v, x);
    }

    pub fn with(mut self, v: JetVar, x: f64) -> Self {
        self.set(v, x);
        self
    }

    pub fn get(&self, v: JetVar) -> Result<f64, JetError> {
        match self.values.get(&v) {
            Some(&x) => Ok(x),
            None if self.strict => Err(JetError::Unset(format!("x{}^({})", v.var + 1, v.order))),
            None => Ok(0.0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JetVar, &f64)> {
        self.values.iter()
    }

    /// Reads `{"x6": 1, "d(x5,1)": 0.5, ...}` using the system's variable names.
    pub fn from_json(sys: &DiffSystem, value: &serde_json::Value) -> Result<Self, JetError> {
        let obj = value.as_object().ok_or_else(|| JetError::Point("expected a JSON object".into()))?;
        let mut p = JetPoint::new();
        for (k, v) in obj {
            let jv = parse_jet_ref(k, sys.names()).map_err(|e| JetError::Point(e.to_string()))?;
            let x = v.as_f64().ok_or_else(|| JetError::Point(format!("value of '{k}' is not a number")))?;
            if !x.is_finite() {
                return Err(JetError::Point(format!("value of '{k}' is not finite")));
            }
            p.set(jv, x);
        }
        Ok(p)
    }

    fn lookup(&self) -> impl Fn(JetVar) -> Result<f64, JetError> + '_ {
        move |v| self.get(v)
    }

    fn exact_lookup(&self) -> impl Fn(JetVar) -> Result<BigRational, JetError> + '_ {
        move |v| self.get(v).map(linalg::to_rational)
    }
}

/// Entry `(i, j)` is the highest order of `x_j` in `P_i`, `-inf` when absent.
pub fn order_matrix(sys: &DiffSystem) -> ExtOrderMatrix {
    let mut a = ExtOrderMatrix::new(sys.n_eqs(), sys.n_vars(), NegInf);
    for (i, e) in sys.equations.iter().enumerate() {
        for j in 0..sys.n_vars() {
            if let Some(k) = e.order_of(j) {
                a.set(i, j, Fin(k as i64));
            }
        }
    }
    a
}

/// Values of `P_i` at `p`.
pub fn evaluate_at(sys: &DiffSystem, p: &JetPoint) -> Result<Vec<f64>, JetError> {
    sys.equations.iter().map(|e| e.eval(&p.lookup())).collect()
}

/// Matrix of `dP_i/d(jets[j])` at `p` for the given rows.
pub fn jacobian_at(sys: &DiffSystem, rows: &[usize], jets: &[JetVar], p: &JetPoint) -> Result<DMatrix<f64>, JetError> {
    sys.check_rows_cols(rows, &jets.iter().map(|v| v.var).collect::<Vec<_>>())?;
    let mut m = DMatrix::zeros(rows.len(), jets.len());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &v) in jets.iter().enumerate() {
            m[(a, b)] = sys.equations[i].diff(v).eval(&p.lookup())?;
        }
    }
    Ok(m)
}

/// Symbolic truncated Jacobian: entry `(i, j)` is `dP_i/dx_j^(alpha_i + beta_j)`
/// where that order is attained, zero elsewhere.
pub fn truncated_jacobian(sys: &DiffSystem, rows: &[usize], y: &[usize]) -> Result<Vec<Vec<Expr>>, JetError> {
    sys.check_rows_cols(rows, y)?;
    let a = order_matrix(sys).submatrix(rows, y);
    if rows.len() != y.len() {
        return Err(TropicalError::Shape(format!("{} equations, {} variables", rows.len(), y.len())).into());
    }
    let (cover, _) = jacobi_cover(&a)?;
    Ok(rows
        .iter()
        .enumerate()
        .map(|(ri, &i)| {
            y.iter()
                .enumerate()
                .map(|(cj, &j)| match (a.get(ri, cj), cover.mu[ri] + cover.nu[cj]) {
                    (Fin(e), Fin(t)) if e == t => sys.equations[i].diff(JetVar::new(j, e as u32)),
                    _ => Expr::zero(),
                })
                .collect()
        })
        .collect())
}

pub fn truncated_jacobian_at(sys: &DiffSystem, rows: &[usize], y: &[usize], p: &JetPoint) -> Result<DMatrix<f64>, JetError> {
    let t = truncated_jacobian(sys, rows, y)?;
    let mut m = DMatrix::zeros(rows.len(), y.len());
    for (a, row) in t.iter().enumerate() {
        for (b, e) in row.iter().enumerate() {
            m[(a, b)] = e.eval(&p.lookup())?;
        }
    }
    Ok(m)
}

/// `nabla_{Y,S}(p)` for the whole system; `y` lists zero-based variable indices.
pub fn truncated_determinant_at(sys: &DiffSystem, y: &[usize], p: &JetPoint) -> Result<f64, JetError> {
    let rows: Vec<usize> = (0..sys.n_eqs()).collect();
    Ok(linalg::det(&truncated_jacobian_at(sys, &rows, y, p)?))
}

/// Exact counterpart of [`truncated_jacobian_at`]; point values are read as exact binary rationals.
pub fn truncated_jacobian_exact(
    sys: &DiffSystem,
    rows: &[usize],
    y: &[usize],
    p: &JetPoint,
) -> Result<Vec<Vec<BigRational>>, JetError> {
    truncated_jacobian(sys, rows, y)?
        .iter()
        .map(|row| row.iter().map(|e| e.eval_exact(&p.exact_lookup())).collect())
        .collect()
}

pub fn truncated_determinant_exact(sys: &DiffSystem, y: &[usize], p: &JetPoint) -> Result<BigRational, JetError> {
    let rows: Vec<usize> = (0..sys.n_eqs()).collect();
    let m = truncated_jacobian_exact(sys, &rows, y, p)?;
    Ok(if m.is_empty() { BigRational::from_integer(1.into()) } else { linalg::exact_det(&m) })
}

/// Exact Jacobian for rational expressions.
pub fn jacobian_exact(
    sys: &DiffSystem,
    rows: &[usize],
    jets: &[JetVar],
    p: &JetPoint,
) -> Result<Vec<Vec<BigRational>>, JetError> {
    sys.check_rows_cols(rows, &jets.iter().map(|v| v.var).collect::<Vec<_>>())?;
    rows.iter()
        .map(|&i| jets.iter().map(|&v| sys.equations[i].diff(v).eval_exact(&p.exact_lookup())).collect())
        .collect()
}

/// Order of `x_j` in `P_i` as an extended integer.
pub fn ord(sys: &DiffSystem, i: usize, j: usize) -> ExtInt {
    sys.equations[i].order_of(j).map_or(NegInf, |k| Fin(k as i64))
}

/// `true` when every entry of an exact matrix is zero.
pub fn is_zero_matrix(m: &[Vec<BigRational>]) -> bool {
    m.iter().flatten().all(Zero::is_zero)
}
