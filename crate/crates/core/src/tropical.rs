//! Extended-integer order matrices, tropical determinants, canons and covers.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::matching::{hopcroft_karp, ZeroPattern};

/// Largest square size accepted by the exhaustive determinant.
pub const BRUTE_FORCE_MAX_ROWS: usize = 9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TropicalError {
    #[error("brute force limited to {limit} rows, got {rows}")]
    SizeLimit { rows: usize, limit: usize },
    #[error("no transversal family: tropical determinant is -inf")]
    NoTransversal,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An integer or the bottom element `-inf`.
///
/// The derived ordering puts `NegInf` below every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtInt {
    NegInf,
    Fin(i64),
}

pub use ExtInt::{Fin, NegInf};

impl ExtInt {
    pub fn is_finite(self) -> bool {
        matches!(self, Fin(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Fin(v) => Some(v),
            NegInf => None,
        }
    }

    /// Subtraction of a finite amount; `-inf` stays `-inf`.
    pub fn minus(self, k: i64) -> ExtInt {
        match self {
            Fin(v) => Fin(v.saturating_sub(k)),
            NegInf => NegInf,
        }
    }
}

impl Default for ExtInt {
    fn default() -> Self {
        Fin(0)
    }
}

impl Add for ExtInt {
    type Output = ExtInt;
    fn add(self, rhs: ExtInt) -> ExtInt {
        match (self, rhs) {
            (Fin(a), Fin(b)) => Fin(a.saturating_add(b)),
            _ => NegInf,
        }
    }
}

impl Add<i64> for ExtInt {
    type Output = ExtInt;
    fn add(self, rhs: i64) -> ExtInt {
        self + Fin(rhs)
    }
}

impl From<i64> for ExtInt {
    fn from(v: i64) -> Self {
        Fin(v)
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fin(v) => write!(f, "{v}"),
            NegInf => write!(f, "-inf"),
        }
    }
}

impl FromStr for ExtInt {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "-inf" | "-oo" | "N" => Ok(NegInf),
            _ => s
                .parse::<i64>()
                .map(Fin)
                .map_err(|_| format!("bad matrix entry `{s}`")),
        }
    }
}

impl Serialize for ExtInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Fin(v) => s.serialize_i64(*v),
            NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Fin(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Rectangular matrix over `Z ∪ {-inf}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtOrderMatrix {
    rows: usize,
    cols: usize,
    data: Vec<ExtInt>,
}

impl ExtOrderMatrix {
    pub fn new(rows: usize, cols: usize, fill: ExtInt) -> Self {
        Self { rows, cols, data: vec![fill; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<ExtInt>>) -> Result<Self, TropicalError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(TropicalError::Shape("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Build from integer rows where `None` is `-inf`.
    pub fn from_options(rows: &[Vec<Option<i64>>]) -> Self {
        let conv = rows
            .iter()
            .map(|r| r.iter().map(|e| e.map_or(NegInf, Fin)).collect())
            .collect();
        Self::from_rows(conv).expect("rectangular input")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> ExtInt {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: ExtInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[ExtInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<ExtInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::new(rows.len(), cols.len(), NegInf);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    pub fn max_entry(&self) -> ExtInt {
        self.data.iter().copied().max().unwrap_or(NegInf)
    }

    /// Parse the text format: `s n` header, then `s` lines of `n` tokens.
    pub fn parse(text: &str) -> Result<Self, TropicalError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or(TropicalError::Parse { line: 1, msg: "empty input".into() })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| TropicalError::Parse { line: hline, msg: "expected `s n`".into() })?;
        if dims.len() != 2 {
            return Err(TropicalError::Parse { line: hline, msg: "expected `s n`".into() });
        }
        let (s, n) = (dims[0], dims[1]);
        let mut rows = Vec::with_capacity(s);
        for (ln, l) in lines.by_ref().take(s) {
            let row: Vec<ExtInt> = l
                .split_whitespace()
                .map(|t| t.parse::<ExtInt>())
                .collect::<Result<_, _>>()
                .map_err(|msg| TropicalError::Parse { line: ln, msg })?;
            if row.len() != n {
                return Err(TropicalError::Parse {
                    line: ln,
                    msg: format!("expected {n} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != s {
            return Err(TropicalError::Parse {
                line: hline,
                msg: format!("expected {s} rows, found {}", rows.len()),
            });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(TropicalError::Parse { line: ln, msg: "trailing content".into() });
        }
        if s == 0 {
            return Ok(Self::new(0, n, NegInf));
        }
        Self::from_rows(rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let toks: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            out.push_str(&toks.join(" "));
            out.push('\n');
        }
        out
    }

    /// Square matrix obtained by appending rows of zeros.
    fn pad_rows(&self) -> Self {
        let mut out = Self::new(self.cols, self.cols, Fin(0));
        out.data[..self.data.len()].copy_from_slice(&self.data);
        out
    }
}

impl fmt::Display for ExtOrderMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Row shifts making a transversal family of column maxima exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canon {
    pub l: Vec<i64>,
    /// `witness[i]` is the column assigned to row `i`.
    pub witness: Option<Vec<usize>>,
}

/// Row and column weights with `a[i][j] <= mu[i] + nu[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub mu: Vec<ExtInt>,
    pub nu: Vec<ExtInt>,
}

impl Cover {
    pub fn is_cover_of(&self, a: &ExtOrderMatrix) -> bool {
        (0..a.rows()).all(|i| (0..a.cols()).all(|j| a.get(i, j) <= self.mu[i] + self.nu[j]))
    }
}

/// Exhaustive max-plus assignment over all row-to-column injections.
pub fn tropical_det_bruteforce(a: &ExtOrderMatrix) -> Result<ExtInt, TropicalError> {
    let (s, n) = (a.rows(), a.cols());
    if s > n {
        return Ok(NegInf);
    }
    if s > BRUTE_FORCE_MAX_ROWS {
        return Err(TropicalError::SizeLimit { rows: s, limit: BRUTE_FORCE_MAX_ROWS });
    }
    fn rec(a: &ExtOrderMatrix, i: usize, used: &mut Vec<bool>, acc: ExtInt, best: &mut ExtInt) {
        if acc == NegInf {
            return;
        }
        if i == a.rows() {
            *best = (*best).max(acc);
            return;
        }
        for j in 0..a.cols() {
            if !used[j] {
                let e = a.get(i, j);
                if e.is_finite() {
                    used[j] = true;
                    rec(a, i + 1, used, acc + e, best);
                    used[j] = false;
                }
            }
        }
    }
    let mut best = NegInf;
    rec(a, 0, &mut vec![false; n], Fin(0), &mut best);
    Ok(best)
}

fn tight_pattern(a: &ExtOrderMatrix, l: &[i64]) -> (ZeroPattern, Vec<ExtInt>) {
    let (s, n) = (a.rows(), a.cols());
    let mut colmax = vec![NegInf; n];
    for i in 0..s {
        for j in 0..n {
            colmax[j] = colmax[j].max(a.get(i, j) + l[i]);
        }
    }
    let mut pat = ZeroPattern::empty(s, n);
    for i in 0..s {
        for j in 0..n {
            let b = a.get(i, j) + l[i];
            if b.is_finite() && b == colmax[j] {
                pat.set(i, j, true);
            }
        }
    }
    (pat, colmax)
}

/// Lexicographically smallest perfect matching of a square pattern, if any.
fn lex_first_perfect(pat: &ZeroPattern) -> Option<Vec<usize>> {
    let n = pat.rows();
    if hopcroft_karp(pat).size < n {
        return None;
    }
    let mut fixed = pat.clone();
    let mut sigma = vec![0; n];
    for i in 0..n {
        let options: Vec<usize> = (0..n).filter(|&j| fixed.get(i, j)).collect();
        for j in options {
            let mut trial = fixed.clone();
            for jj in 0..n {
                if jj != j {
                    trial.set(i, jj, false);
                }
            }
            for ii in 0..n {
                if ii != i {
                    trial.set(ii, j, false);
                }
            }
            if hopcroft_karp(&trial).size == n {
                fixed = trial;
                sigma[i] = j;
                break;
            }
        }
    }
    Some(sigma)
}

/// Unique componentwise-minimal canon, computed by Jacobi's ascending method.
///
/// Starting from `l = 0`, rows that cannot reach a transversal column maximum
/// (unmatched rows and rows with an alternating path to them) are raised by
/// the smallest amount that creates a new column maximum.
pub fn minimal_canon(a: &ExtOrderMatrix) -> Result<Canon, TropicalError> {
    let (s, n) = (a.rows(), a.cols());
    if s > n {
        return Err(TropicalError::NoTransversal);
    }
    if n == 0 {
        return Ok(Canon { l: vec![], witness: Some(vec![]) });
    }
    let sq = if s < n { a.pad_rows() } else { a.clone() };
    let mut l = vec![0i64; n];
    loop {
        let (pat, colmax) = tight_pattern(&sq, &l);
        let m = hopcroft_karp(&pat);
        if m.size == n {
            let sigma = lex_first_perfect(&pat).expect("perfect matching exists");
            l.truncate(s);
            let mut w = sigma;
            w.truncate(s);
            return Ok(Canon { l, witness: Some(w) });
        }
        // Third class rows: unmatched rows and rows with an alternating path to them.
        let mut zr = vec![false; n];
        let mut zc = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            if m.row_to_col[i].is_none() {
                zr[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if pat.get(i, j) && !zc[j] {
                    zc[j] = true;
                    if let Some(i2) = m.col_to_row[j] {
                        if !zr[i2] {
                            zr[i2] = true;
                            queue.push_back(i2);
                        }
                    }
                }
            }
        }
        let mut delta: Option<i64> = None;
        for i in (0..n).filter(|&i| zr[i]) {
            for j in (0..n).filter(|&j| !zc[j]) {
                if let (Fin(e), Fin(cm)) = (sq.get(i, j), colmax[j]) {
                    let gap = cm - (e + l[i]);
                    delta = Some(delta.map_or(gap, |d| d.min(gap)));
                }
            }
        }
        let delta = delta.ok_or(TropicalError::NoTransversal)?;
        debug_assert!(delta > 0);
        for i in 0..n {
            if zr[i] {
                l[i] += delta;
            }
        }
    }
}

/// Tropical determinant (max-plus assignment value) in polynomial time.
pub fn tropical_det(a: &ExtOrderMatrix) -> ExtInt {
    if a.rows() > a.cols() {
        return NegInf;
    }
    match minimal_canon(a) {
        Ok(c) => witness_sum(a, c.witness.as_deref().unwrap_or(&[])),
        Err(_) => NegInf,
    }
}

/// Sum of the entries selected by an injection.
pub fn witness_sum(a: &ExtOrderMatrix, sigma: &[usize]) -> ExtInt {
    sigma.iter().enumerate().fold(Fin(0), |acc, (i, &j)| acc + a.get(i, j))
}

/// Minimal cover associated with a canon.
pub fn canon_to_cover(a: &ExtOrderMatrix, canon: &Canon) -> Cover {
    let maxl = canon.l.iter().copied().max().unwrap_or(0);
    let mu: Vec<ExtInt> = canon.l.iter().map(|&li| Fin(maxl - li)).collect();
    let nu = (0..a.cols())
        .map(|j| {
            (0..a.rows())
                .map(|i| match (a.get(i, j), mu[i]) {
                    (Fin(e), Fin(m)) => Fin(e - m),
                    _ => NegInf,
                })
                .max()
                .unwrap_or(NegInf)
        })
        .collect();
    Cover { mu, nu }
}

/// Canon associated with the row part of a minimal cover.
pub fn cover_to_canon(mu: &[ExtInt]) -> Canon {
    let vals: Vec<i64> = mu.iter().map(|m| m.finite().expect("finite row weights")).collect();
    let maxm = vals.iter().copied().max().unwrap_or(0);
    Canon { l: vals.iter().map(|&m| maxm - m).collect(), witness: None }
}

/// Jacobi cover `(alpha, beta)` of a square or wide matrix.
pub fn jacobi_cover(a: &ExtOrderMatrix) -> Result<(Cover, Canon), TropicalError> {
    let canon = minimal_canon(a)?;
    Ok((canon_to_cover(a, &canon), canon))
}

/// Witness of a canon candidate: a transversal family of column maxima.
pub fn canon_witness(a: &ExtOrderMatrix, l: &[i64]) -> Option<Vec<usize>> {
    if a.rows() != a.cols() || l.len() != a.rows() || l.iter().any(|&x| x < 0) {
        return None;
    }
    let (pat, _) = tight_pattern(a, l);
    lex_first_perfect(&pat)
}

/// Reflexive-transitive closure of the elementary path relation.
///
/// `reach[i1][i2]` is true when there is a path from row `i1` to row `i2`.
pub fn path_relation(a: &ExtOrderMatrix, canon: &Canon) -> Result<Vec<Vec<bool>>, TropicalError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(TropicalError::Shape("path relation needs a square matrix".into()));
    }
    let sigma = match &canon.witness {
        Some(w) => w.clone(),
        None => canon_witness(a, &canon.l).ok_or(TropicalError::NoTransversal)?,
    };
    let mut reach = vec![vec![false; n]; n];
    for i1 in 0..n {
        reach[i1][i1] = true;
        let j = sigma[i1];
        let top = a.get(i1, j) + canon.l[i1];
        for i2 in 0..n {
            if a.get(i2, j) + canon.l[i2] == top {
                reach[i1][i2] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    Ok(reach)
}

/// Characterization of the minimal canon through the path relation.
pub fn is_minimal_canon(a: &ExtOrderMatrix, l: &[i64]) -> bool {
    let Some(w) = canon_witness(a, l) else {
        return false;
    };
    let canon = Canon { l: l.to_vec(), witness: Some(w) };
    let Ok(reach) = path_relation(a, &canon) else {
        return false;
    };
    (0..a.rows()).all(|i| (0..a.rows()).any(|k| reach[i][k] && l[k] == 0))
}

/// Componentwise comparison helper used by callers checking minimality.
pub fn componentwise_le(x: &[i64], y: &[i64]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a.cmp(b) != Ordering::Greater)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ex_canon() -> ExtOrderMatrix {
        let r = [[1, 2, 7, 3, 4], [10, 4, 9, 3, 5], [2, 3, 2, 3, 0], [8, 7, 5, 4, 1], [1, 6, 2, 4, 2]];
        ExtOrderMatrix::from_rows(r.iter().map(|row| row.iter().map(|&v| Fin(v)).collect()).collect())
            .unwrap()
    }

    fn ex_jac() -> ExtOrderMatrix {
        ExtOrderMatrix::from_options(&[
            vec![Some(0), Some(1), None],
            vec![Some(1), Some(2), Some(0)],
            vec![None, Some(3), Some(1)],
        ])
    }

    #[test]
    fn ext_int_arith() {
        assert_eq!(NegInf + Fin(3), NegInf);
        assert_eq!(Fin(2) + Fin(-5), Fin(-3));
        assert_eq!(NegInf.max(Fin(-7)), Fin(-7));
        assert!(NegInf < Fin(i64::MIN));
        assert_eq!("-inf".parse::<ExtInt>().unwrap(), NegInf);
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(tropical_det_bruteforce(&ex_canon()).unwrap(), Fin(30));
        let neg = ExtOrderMatrix::from_options(&[vec![None]]);
        assert_eq!(tropical_det_bruteforce(&neg).unwrap(), NegInf);
        let mut diag = ExtOrderMatrix::new(4, 4, NegInf);
        for i in 0..4 {
            diag.set(i, i, Fin(0));
        }
        assert_eq!(tropical_det_bruteforce(&diag).unwrap(), Fin(0));
        let big = ExtOrderMatrix::new(10, 10, Fin(0));
        assert!(matches!(tropical_det_bruteforce(&big), Err(TropicalError::SizeLimit { .. })));
        assert_eq!(tropical_det_bruteforce(&ExtOrderMatrix::new(0, 0, Fin(0))).unwrap(), Fin(0));
    }

    #[test]
    fn canon_examples() {
        let c = minimal_canon(&ex_canon()).unwrap();
        assert_eq!(c.l, vec![1, 0, 4, 2, 3]);
        assert_eq!(c.witness.as_deref(), Some(&[4, 2, 3, 0, 1][..]));
        assert_eq!(witness_sum(&ex_canon(), c.witness.as_ref().unwrap()), Fin(30));

        let cj = minimal_canon(&ex_jac()).unwrap();
        assert_eq!(cj.l, vec![2, 1, 0]);

        let z = ExtOrderMatrix::new(3, 3, Fin(0));
        assert_eq!(minimal_canon(&z).unwrap().l, vec![0, 0, 0]);
    }

    #[test]
    fn no_transversal() {
        let a = ExtOrderMatrix::from_options(&[vec![Some(1), None], vec![Some(0), None]]);
        assert_eq!(minimal_canon(&a), Err(TropicalError::NoTransversal));
        assert_eq!(tropical_det(&a), NegInf);
    }

    #[test]
    fn cover_examples() {
        let a = ex_canon();
        let cov = canon_to_cover(&a, &minimal_canon(&a).unwrap());
        assert_eq!(cov.mu, [3, 4, 0, 2, 1].map(Fin).to_vec());
        assert_eq!(cov.nu, [6, 5, 5, 3, 1].map(Fin).to_vec());
        assert!(cov.is_cover_of(&a));

        let (cj, _) = jacobi_cover(&ex_jac()).unwrap();
        assert_eq!(cj.mu, [0, 1, 2].map(Fin).to_vec());
        assert_eq!(cj.nu, [0, 1, -1].map(Fin).to_vec());

        assert_eq!(cover_to_canon(&[3, 4, 0, 2, 1].map(Fin)).l, vec![1, 0, 4, 2, 3]);
        assert_eq!(cover_to_canon(&[Fin(0); 3]).l, vec![0, 0, 0]);
        assert_eq!(cover_to_canon(&[Fin(5), Fin(0)]).l, vec![0, 5]);
    }

    #[test]
    fn path_examples() {
        let a = ex_canon();
        let c = minimal_canon(&a).unwrap();
        let reach = path_relation(&a, &c).unwrap();
        // rows 3 -> 5 -> 4 -> 2 (zero-based 2 -> 4 -> 3 -> 1)
        assert!(reach[2][4] && reach[4][3] && reach[3][1] && reach[2][1]);
        assert!(reach[0][1]);
        assert!(is_minimal_canon(&a, &c.l));
        let bumped: Vec<i64> = c.l.iter().map(|x| x + 1).collect();
        assert!(!is_minimal_canon(&a, &bumped));

        let mut diag = ExtOrderMatrix::new(3, 3, NegInf);
        for i in 0..3 {
            diag.set(i, i, Fin(2));
        }
        let cd = minimal_canon(&diag).unwrap();
        let r = path_relation(&diag, &cd).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r[i][j], i == j);
            }
        }
        assert!(is_minimal_canon(&ExtOrderMatrix::new(3, 3, Fin(0)), &[0, 0, 0]));
    }

    #[test]
    fn rectangular_padding() {
        let a = ExtOrderMatrix::from_options(&[vec![Some(2), Some(0), None], vec![None, Some(1), Some(0)]]);
        let c = minimal_canon(&a).unwrap();
        assert_eq!(c.l.len(), 2);
        assert_eq!(witness_sum(&a, c.witness.as_ref().unwrap()), tropical_det_bruteforce(&a).unwrap());
    }

    #[test]
    fn parse_roundtrip() {
        let text = "2 3\n0 -inf 1\n# comment\n2 3 -inf\n";
        let a = ExtOrderMatrix::parse(text).unwrap();
        assert_eq!(a.get(0, 1), NegInf);
        assert_eq!(ExtOrderMatrix::parse(&a.to_text()).unwrap(), a);
        let err = ExtOrderMatrix::parse("2 2\n0 1\n0 x\n").unwrap_err();
        assert_eq!(err, TropicalError::Parse { line: 3, msg: "bad matrix entry `x`".into() });
    }
}
