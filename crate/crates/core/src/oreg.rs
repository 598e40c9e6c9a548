//! Point regularity of ō-systems: kernel supports, the `Seq` reduction,
//! the recursive regularity test and the blockwise rank criterion.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::jet::{self, DiffSystem, JetError, JetPoint, JetVar};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::matching::{koenig_cover, ZeroPattern};
use crate::osystem::{classify_block_triangular, combinations, OTestResult, OSystemError, Partition};
use crate::tropical::{tropical_det, ExtOrderMatrix, Fin};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    OSystem(#[from] OSystemError),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Numerical settings shared by the regularity routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegOptions {
    /// Relative rank tolerance, also the absolute threshold on the final determinant.
    pub tol: f64,
    /// Use exact rational elimination; point values are read as exact binary fractions.
    pub exact: bool,
}

impl Default for RegOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_RANK_TOL, exact: false }
    }
}

/// A Jacobian block in floating point or exact rational form.
#[derive(Debug, Clone, PartialEq)]
pub enum NumMatrix {
    Float(DMatrix<f64>),
    Exact(Vec<Vec<BigRational>>),
}

impl NumMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        NumMatrix::Float(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn nrows(&self) -> usize {
        match self {
            NumMatrix::Float(m) => m.nrows(),
            NumMatrix::Exact(m) => m.len(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            NumMatrix::Float(m) => m.ncols(),
            NumMatrix::Exact(m) => m.first().map_or(0, Vec::len),
        }
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> NumMatrix {
        match self {
            NumMatrix::Float(m) => NumMatrix::Float(DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])),
            NumMatrix::Exact(m) => {
                NumMatrix::Exact(rows.iter().map(|&i| cols.iter().map(|&j| m[i][j].clone()).collect()).collect())
            }
        }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        use num_traits::ToPrimitive;
        match self {
            NumMatrix::Float(m) => m.clone(),
            NumMatrix::Exact(m) => {
                DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| m[i][j].to_f64().unwrap_or(f64::NAN))
            }
        }
    }

    /// Rank of a row/column selection, thresholded against `scale` in float mode.
    fn rank_of(&self, rows: &[usize], cols: &[usize], tol: f64, scale: f64) -> usize {
        match self.select(rows, cols) {
            NumMatrix::Float(m) => linalg::rank_scaled(&m, tol, scale),
            NumMatrix::Exact(m) => linalg::exact_rank(&m),
        }
    }

    fn scale(&self) -> f64 {
        match self {
            NumMatrix::Float(m) => linalg::spectral_scale(m),
            NumMatrix::Exact(_) => 1.0,
        }
    }

    pub fn rank(&self, tol: f64) -> usize {
        let rows: Vec<usize> = (0..self.nrows()).collect();
        let cols: Vec<usize> = (0..self.ncols()).collect();
        self.rank_of(&rows, &cols, tol, self.scale())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSupport {
    /// Row kernel support, as indices into the input.
    pub r_k: Vec<usize>,
    /// Columns holding a 0 of the pattern in some row of `r_k`.
    pub c_k: Vec<usize>,
    pub rows_kept: Vec<usize>,
    pub cols_kept: Vec<usize>,
    pub b: ZeroPattern,
    pub j: NumMatrix,
}

/// Rows involved in some linear relation between the nontrivial rows of `J`.
///
/// Row `i` lies in the support of the left kernel exactly when deleting it
/// leaves the rank unchanged, which is independent of any kernel basis.
pub fn kernel_support(b: &ZeroPattern, j: &NumMatrix, tol: f64) -> Result<KernelSupport, RegError> {
    if b.rows() != j.nrows() || b.cols() != j.ncols() {
        return Err(RegError::Shape(format!(
            "pattern {}x{} against Jacobian {}x{}",
            b.rows(),
            b.cols(),
            j.nrows(),
            j.ncols()
        )));
    }
    let nontrivial: Vec<usize> = (0..b.rows()).filter(|&i| (0..b.cols()).any(|c| b.get(i, c))).collect();
    let all_cols: Vec<usize> = (0..b.cols()).collect();
    let scale = j.select(&nontrivial, &all_cols).scale();
    let full = j.rank_of(&nontrivial, &all_cols, tol, scale);
    let r_k: Vec<usize> = nontrivial
        .iter()
        .copied()
        .filter(|&i| {
            let others: Vec<usize> = nontrivial.iter().copied().filter(|&k| k != i).collect();
            j.rank_of(&others, &all_cols, tol, scale) == full
        })
        .collect();
    let c_k: Vec<usize> = all_cols.iter().copied().filter(|&c| r_k.iter().any(|&i| b.get(i, c))).collect();
    let rows_kept: Vec<usize> = (0..b.rows()).filter(|i| !r_k.contains(i)).collect();
    let cols_kept: Vec<usize> = all_cols.iter().copied().filter(|c| !c_k.contains(c)).collect();
    Ok(KernelSupport {
        b: b.submatrix(&rows_kept, &cols_kept),
        j: j.select(&rows_kept, &cols_kept),
        r_k,
        c_k,
        rows_kept,
        cols_kept,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqResult {
    /// Surviving rows and columns as indices into the input.
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub b: ZeroPattern,
    pub j: NumMatrix,
    pub iterations: usize,
}

/// Alternates Kőnig reduction and kernel-support removal until nothing changes.
pub fn seq(b: &ZeroPattern, j: &NumMatrix, tol: f64) -> Result<SeqResult, RegError> {
    let mut rows: Vec<usize> = (0..b.rows()).collect();
    let mut cols: Vec<usize> = (0..b.cols()).collect();
    let mut cb = b.clone();
    let mut cj = j.clone();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let k = koenig_cover(&cb);
        let keep_c: Vec<usize> = (0..cb.cols()).filter(|c| !k.c0.contains(c)).collect();
        let hb = cb.submatrix(&k.r0, &keep_c);
        let hj = cj.select(&k.r0, &keep_c);
        let ks = kernel_support(&hb, &hj, tol)?;
        let new_rows: Vec<usize> = ks.rows_kept.iter().map(|&i| rows[k.r0[i]]).collect();
        let new_cols: Vec<usize> = ks.cols_kept.iter().map(|&c| cols[keep_c[c]]).collect();
        let stable = new_rows == rows && new_cols == cols;
        rows = new_rows;
        cols = new_cols;
        cb = ks.b;
        cj = ks.j;
        if stable || rows.is_empty() {
            return Ok(SeqResult { rows, cols, b: cb, j: cj, iterations });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegStatus {
    Found,
    Failed,
    /// Structurally regular but the determinant is below tolerance.
    NearSingular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegLevel {
    /// Equations kept by `Seq` at this level.
    pub sigma: Vec<usize>,
    pub y: Vec<usize>,
    pub seq_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ORegResult {
    pub status: RegStatus,
    pub y: Vec<usize>,
    /// One entry per recursive call, in call order.
    pub levels: Vec<RegLevel>,
    pub nabla: Option<f64>,
    pub depth: usize,
    pub reason: Option<String>,
}

impl ORegResult {
    pub fn found(&self) -> bool {
        self.status == RegStatus::Found
    }
}

fn numeric_jacobian(
    sys: &DiffSystem,
    rows: &[usize],
    jets: &[JetVar],
    p: &JetPoint,
    opts: RegOptions,
) -> Result<NumMatrix, RegError> {
    Ok(if opts.exact {
        NumMatrix::Exact(jet::jacobian_exact(sys, rows, jets, p)?)
    } else {
        NumMatrix::Float(jet::jacobian_at(sys, rows, jets, p)?)
    })
}

/// Columns of `m` kept by a left-to-right rank-increasing scan.
fn greedy_columns(m: &NumMatrix, tol: f64) -> Vec<usize> {
    let rows: Vec<usize> = (0..m.nrows()).collect();
    let scale = m.scale();
    let mut kept: Vec<usize> = Vec::new();
    for c in 0..m.ncols() {
        let mut trial = kept.clone();
        trial.push(c);
        if m.rank_of(&rows, &trial, tol, scale) == trial.len() {
            kept = trial;
        }
    }
    kept
}

/// Searches `Y` with `O_{Y,S} = 0` and `nabla_{Y,S}(p) != 0`.
pub fn o_reg(sys: &DiffSystem, p: &JetPoint, opts: RegOptions) -> Result<ORegResult, RegError> {
    let a = jet::order_matrix(sys);
    let mut rows: Vec<usize> = (0..sys.n_eqs()).collect();
    let mut active: Vec<usize> = (0..sys.n_vars()).collect();
    let mut levels = Vec::new();
    let failed = |levels: Vec<RegLevel>, reason: String| {
        let depth = levels.len() + 1;
        Ok(ORegResult { status: RegStatus::Failed, y: vec![], levels, nabla: None, depth, reason: Some(reason) })
    };

    while !rows.is_empty() {
        let cols: Vec<usize> = active.iter().copied().filter(|&j| rows.iter().any(|&i| a.get(i, j).is_finite())).collect();
        if rows.len() > cols.len() {
            return failed(levels, format!("{} equations but {} variables", rows.len(), cols.len()));
        }
        if let Some(&i) = rows.iter().find(|&&i| cols.iter().all(|&j| !a.get(i, j).is_finite())) {
            return failed(levels, format!("equation {} involves no remaining variable", sys.labels()[i]));
        }
        let bcols: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&j| rows.iter().all(|&i| matches!(a.get(i, j), Fin(0) | crate::tropical::NegInf)))
            .collect();
        let pattern = ZeroPattern::zeros_of(&a.submatrix(&rows, &bcols));
        let jets: Vec<JetVar> = bcols.iter().map(|&j| JetVar::new(j, 0)).collect();
        let jm = numeric_jacobian(sys, &rows, &jets, p, opts)?;
        let sq = seq(&pattern, &jm, opts.tol)?;
        if sq.rows.is_empty() || sq.b.count() == 0 {
            return failed(levels, "the reduced pattern is empty at this point".into());
        }
        let y1: Vec<usize> = greedy_columns(&sq.j, opts.tol).iter().map(|&c| bcols[sq.cols[c]]).collect();
        let sigma: Vec<usize> = sq.rows.iter().map(|&i| rows[i]).collect();
        if y1.len() != sigma.len() {
            return failed(levels, "reduced Jacobian is not of full row rank".into());
        }
        let c1: Vec<usize> = sq.cols.iter().map(|&c| bcols[c]).collect();
        rows.retain(|i| !sigma.contains(i));
        active.retain(|j| !c1.contains(j));
        levels.push(RegLevel { sigma, y: y1, seq_iterations: sq.iterations });
    }

    let mut y: Vec<usize> = levels.iter().flat_map(|l| l.y.iter().copied()).collect();
    y.sort_unstable();
    let depth = levels.len();
    let all_rows: Vec<usize> = (0..sys.n_eqs()).collect();
    if tropical_det(&a.submatrix(&all_rows, &y)) != Fin(0) {
        return Ok(ORegResult {
            status: RegStatus::Failed,
            y,
            levels,
            nabla: None,
            depth,
            reason: Some("assembled set does not have order 0".into()),
        });
    }
    let (nabla, zero) = if opts.exact {
        let d = jet::truncated_determinant_exact(sys, &y, p)?;
        (num_traits::ToPrimitive::to_f64(&d).unwrap_or(f64::NAN), d.is_zero())
    } else {
        let d = jet::truncated_determinant_at(sys, &y, p)?;
        (d, d.abs() < opts.tol)
    };
    let (status, reason) = if zero {
        (RegStatus::NearSingular, Some(format!("|nabla| = {:e} below tolerance", nabla.abs())))
    } else {
        (RegStatus::Found, None)
    };
    Ok(ORegResult { status, y, levels, nabla: Some(nabla), depth, reason })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRank {
    pub level: usize,
    pub rank: usize,
    pub size: usize,
    /// Columns of `Xi_h` chosen by a rank-increasing scan.
    pub y: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficientCheck {
    pub blocks: Vec<BlockRank>,
    pub regular: bool,
    /// Density hypothesis of the corollary.
    pub dense: bool,
    /// Every `(#Sigma_h - 1)`-row subset has full rank on `Xi_h`.
    pub subrank: bool,
    /// The rank condition is also necessary under either hypothesis.
    pub necessary: bool,
    /// Union of the per-block choices when `regular`.
    pub y: Option<Vec<usize>>,
}

/// Blockwise rank test on the partition produced by `o_test`.
pub fn sufficient_regularity_check(
    sys: &DiffSystem,
    blocks: &OTestResult,
    p: &JetPoint,
    opts: RegOptions,
) -> Result<SufficientCheck, RegError> {
    let part: Partition = blocks.partition();
    let mut out = Vec::new();
    let mut subrank = true;
    for (idx, (sigma, xi)) in part.sigma.iter().zip(part.xi.iter().skip(1)).enumerate() {
        let jets: Vec<JetVar> = xi.iter().map(|&j| JetVar::new(j, 0)).collect();
        let m = numeric_jacobian(sys, sigma, &jets, p, opts)?;
        let rank = m.rank(opts.tol);
        let y = greedy_columns(&m, opts.tol).iter().map(|&c| xi[c]).collect();
        let all_cols: Vec<usize> = (0..xi.len()).collect();
        let scale = m.scale();
        if !sigma.is_empty() {
            for sub in combinations(sigma.len(), sigma.len() - 1) {
                subrank &= m.rank_of(&sub, &all_cols, opts.tol, scale) == sigma.len() - 1;
            }
        }
        out.push(BlockRank { level: idx + 1, rank, size: sigma.len(), y });
    }
    let regular = blocks.found() && out.iter().all(|b| b.rank == b.size);
    let dense = blocks.found() && classify_block_triangular(sys, &part)?.dense;
    let y = regular.then(|| {
        let mut y: Vec<usize> = out.iter().flat_map(|b| b.y.iter().copied()).collect();
        y.sort_unstable();
        y
    });
    Ok(SufficientCheck { blocks: out, regular, dense, subrank, necessary: dense || subrank, y })
}

/// Exhaustive reference: every size-`s` set `Y` with order 0 and `|nabla| > tol`.
pub fn regular_sets_bruteforce(sys: &DiffSystem, p: &JetPoint, tol: f64) -> Result<Vec<Vec<usize>>, RegError> {
    let a: ExtOrderMatrix = jet::order_matrix(sys);
    let rows: Vec<usize> = (0..sys.n_eqs()).collect();
    let mut out = Vec::new();
    for y in combinations(sys.n_vars(), sys.n_eqs()) {
        if tropical_det(&a.submatrix(&rows, &y)) != Fin(0) {
            continue;
        }
        if jet::truncated_determinant_at(sys, &y, p)?.abs() > tol {
            out.push(y);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::parse_system;
    use crate::osystem::o_test;

    fn nnr() -> DiffSystem {
        parse_system("x1 + d(x3,1) + x6^2\nx1 + d(x4,1) + x5^3\nd(x1,1) + x3\nd(x2,1) + x4").unwrap()
    }

    fn pat(rows: &[&[u8]]) -> ZeroPattern {
        ZeroPattern::from_bools(&rows.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn kernel_support_examples() {
        let b = pat(&[&[0, 1], &[1, 0]]);
        let j = NumMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let ks = kernel_support(&b, &j, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((ks.r_k.clone(), ks.c_k.clone()), (vec![1], vec![0]));
        assert_eq!(ks.b, pat(&[&[1]]));
        assert_eq!(ks.j, NumMatrix::from_rows(&[vec![1.0]]));

        let b = pat(&[&[1, 0, 0, 0], &[1, 1, 0, 0], &[0, 1, 1, 1]]);
        let j = NumMatrix::from_rows(&[vec![0.; 4], vec![1., 0., 0., 0.], vec![0., 1., 0., 1.]]);
        let ks = kernel_support(&b, &j, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((ks.r_k.clone(), ks.c_k.clone()), (vec![0], vec![0]));
        assert_eq!(ks.b, pat(&[&[1, 0, 0], &[1, 1, 1]]));

        let id = NumMatrix::from_rows(&[vec![1., 0.], vec![0., 1.]]);
        let ks = kernel_support(&pat(&[&[1, 0], &[0, 1]]), &id, DEFAULT_RANK_TOL).unwrap();
        assert!(ks.r_k.is_empty() && ks.c_k.is_empty());
    }

    #[test]
    fn seq_examples() {
        let b = pat(&[&[1, 0, 0, 0], &[1, 1, 0, 0], &[0, 1, 1, 1]]);
        let j = NumMatrix::from_rows(&[vec![0.; 4], vec![1., 0., 0., 0.], vec![0., 1., 0., 1.]]);
        let s = seq(&b, &j, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rows, vec![2]);
        assert_eq!(s.cols, vec![2, 3]);
        assert_eq!(s.j, NumMatrix::from_rows(&[vec![0., 1.]]));
        assert_eq!(s.iterations, 3);

        let id = NumMatrix::from_rows(&[vec![1., 0.], vec![0., 1.]]);
        let s = seq(&pat(&[&[1, 0], &[0, 1]]), &id, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((s.rows, s.cols, s.iterations), (vec![0, 1], vec![0, 1], 1));
    }

    #[test]
    fn o_reg_running_example() {
        let s = nnr();
        let p = JetPoint::new().with(JetVar::new(5, 0), 1.0);
        let r = o_reg(&s, &p, RegOptions::default()).unwrap();
        assert_eq!(r.status, RegStatus::Found);
        assert_eq!(r.y, vec![0, 2, 3, 5]);
        let ys: Vec<Vec<usize>> = r.levels.iter().map(|l| l.y.clone()).collect();
        assert_eq!(ys, vec![vec![5], vec![2], vec![0], vec![3]]);
        assert!((r.nabla.unwrap() + 2.0).abs() < 1e-12);

        let exact = o_reg(&s, &p, RegOptions { exact: true, ..Default::default() }).unwrap();
        assert_eq!(exact.y, r.y);

        let r0 = o_reg(&s, &JetPoint::new(), RegOptions::default()).unwrap();
        assert_eq!(r0.status, RegStatus::Failed);

        let g = JetPoint::new().with(JetVar::new(4, 0), 1.0).with(JetVar::new(5, 0), 1.0);
        let r = o_reg(&s, &g, RegOptions::default()).unwrap();
        assert_eq!(r.y, vec![2, 3, 4, 5]);
        assert_eq!(r.depth, 2);
    }

    #[test]
    fn sufficient_check_examples() {
        let s = nnr();
        let ot = o_test(&jet::order_matrix(&s));
        let p = JetPoint::new().with(JetVar::new(4, 0), 1.0).with(JetVar::new(5, 0), 1.0);
        let c = sufficient_regularity_check(&s, &ot, &p, RegOptions::default()).unwrap();
        assert_eq!(c.blocks.iter().map(|b| b.rank).collect::<Vec<_>>(), vec![2, 2]);
        assert!(c.regular);
        assert_eq!(c.y, Some(vec![2, 3, 4, 5]));

        let q = JetPoint::new().with(JetVar::new(5, 0), 1.0);
        let c = sufficient_regularity_check(&s, &ot, &q, RegOptions::default()).unwrap();
        assert_eq!(c.blocks.iter().map(|b| b.rank).collect::<Vec<_>>(), vec![2, 1]);
        assert!(!c.regular && !c.necessary);
        assert!(o_reg(&s, &q, RegOptions::default()).unwrap().found());
    }
}
