//! Detection of ō-systems (saddle Jacobi number 0) and block-triangular structure.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::jet::DiffSystem;
use crate::matching::{koenig_cover_ordered, ColumnOrder, ZeroPattern};
use crate::tropical::{tropical_det, tropical_det_bruteforce, ExtInt, ExtOrderMatrix, Fin, NegInf, TropicalError};

/// Size guard for the exhaustive saddle number.
pub const SADDLE_MAX_COLS: usize = 12;
pub const SADDLE_MAX_ROWS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OSystemError {
    #[error("exhaustive search limited to {max_rows} rows and {max_cols} columns, got {rows}x{cols}")]
    SizeLimit { rows: usize, cols: usize, max_rows: usize, max_cols: usize },
    #[error("inconsistent partition: {0}")]
    Partition(String),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Found,
    Failed,
}

/// One recursion step: rows `R0`, the columns of `B` outside `C0`, and the chosen `Y1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub sigma: Vec<usize>,
    pub xi: Vec<usize>,
    pub y: Vec<usize>,
    pub c0: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OTestResult {
    pub status: Status,
    /// Sorted column set with `O_{Y,A} = 0` when found.
    pub y: Vec<usize>,
    /// `blocks[h-1]` is `(Sigma_h, Xi_h)`: the last recursion step comes first.
    pub blocks: Vec<Block>,
    /// Columns never selected into a block; candidate flat outputs.
    pub xi0: Vec<usize>,
    /// Number of recursion steps performed, including a failing one.
    pub depth: usize,
    pub reason: Option<String>,
}

impl OTestResult {
    pub fn found(&self) -> bool {
        self.status == Status::Found
    }

    /// Partition usable by [`classify_block_triangular`].
    pub fn partition(&self) -> Partition {
        let mut xi = vec![self.xi0.clone()];
        xi.extend(self.blocks.iter().map(|b| b.xi.clone()));
        Partition { sigma: self.blocks.iter().map(|b| b.sigma.clone()).collect(), xi }
    }
}

/// `sigma[h-1]` holds the rows of `Sigma_h` (h = 1..p), `xi[h]` the columns of `Xi_h` (h = 0..p).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Partition {
    pub sigma: Vec<Vec<usize>>,
    pub xi: Vec<Vec<usize>>,
}

/// Tests whether the saddle Jacobi number of `a` is 0 and returns a witness column set.
pub fn o_test(a: &ExtOrderMatrix) -> OTestResult {
    let s = a.rows();
    let n = a.cols();
    let mut alive_rows: Vec<usize> = (0..s).collect();
    // Per column: remaining finite entries and remaining entries other than 0 / -inf.
    let mut finite = vec![0usize; n];
    let mut positive = vec![0usize; n];
    for i in 0..s {
        for j in 0..n {
            match a.get(i, j) {
                Fin(0) => finite[j] += 1,
                Fin(_) => {
                    finite[j] += 1;
                    positive[j] += 1;
                }
                NegInf => {}
            }
        }
    }
    let mut steps: Vec<Block> = Vec::new();
    let fail = |steps: Vec<Block>, reason: String| {
        let depth = steps.len() + 1;
        OTestResult { status: Status::Failed, y: vec![], blocks: vec![], xi0: vec![], depth, reason: Some(reason) }
    };

    while !alive_rows.is_empty() {
        let cols: Vec<usize> = (0..n).filter(|&j| finite[j] > 0).collect();
        if alive_rows.len() > cols.len() {
            return fail(steps, format!("{} rows but only {} columns", alive_rows.len(), cols.len()));
        }
        if let Some(&i) = alive_rows.iter().find(|&&i| (0..n).all(|j| a.get(i, j) != Fin(0))) {
            return fail(steps, format!("row {i} has no zero entry"));
        }
        let bcols: Vec<usize> = cols.iter().copied().filter(|&j| positive[j] == 0).collect();
        let pattern = ZeroPattern::zeros_of(&a.submatrix(&alive_rows, &bcols));
        let k = koenig_cover_ordered(&pattern, ColumnOrder::Descending);
        if k.r0.is_empty() {
            return fail(steps, "no row is forced by the zero pattern (R0 is empty)".into());
        }
        let r0: Vec<usize> = k.r0.iter().map(|&i| alive_rows[i]).collect();
        let c0: Vec<usize> = k.c0.iter().map(|&j| bcols[j]).collect();
        let xi: Vec<usize> = bcols.iter().copied().filter(|j| !c0.contains(j)).collect();
        let y: Vec<usize> = k.y1().iter().map(|&j| bcols[j]).collect();
        for &i in &r0 {
            for j in 0..n {
                match a.get(i, j) {
                    Fin(0) => finite[j] -= 1,
                    Fin(_) => {
                        finite[j] -= 1;
                        positive[j] -= 1;
                    }
                    NegInf => {}
                }
            }
        }
        alive_rows.retain(|i| !r0.contains(i));
        steps.push(Block { sigma: r0, xi, y, c0 });
    }

    let depth = steps.len();
    let mut y: Vec<usize> = steps.iter().flat_map(|b| b.y.iter().copied()).collect();
    y.sort_unstable();
    let used: BTreeSet<usize> = steps.iter().flat_map(|b| b.xi.iter().copied()).collect();
    let xi0 = (0..n).filter(|j| !used.contains(j)).collect();
    steps.reverse();
    OTestResult { status: Status::Found, y, blocks: steps, xi0, depth, reason: None }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let c = cur.as_mut().unwrap();
        let mut i = k;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for m in i + 1..k {
                    c[m] = c[m - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

/// Minimum of `O_{Y,A}` over size-`s` column sets with a finite value; `-inf` if none.
pub fn saddle_jacobi_bruteforce(a: &ExtOrderMatrix) -> Result<ExtInt, OSystemError> {
    let (s, n) = (a.rows(), a.cols());
    if s > SADDLE_MAX_ROWS || n > SADDLE_MAX_COLS {
        return Err(OSystemError::SizeLimit { rows: s, cols: n, max_rows: SADDLE_MAX_ROWS, max_cols: SADDLE_MAX_COLS });
    }
    if s > n {
        return Ok(NegInf);
    }
    let rows: Vec<usize> = (0..s).collect();
    let mut best = NegInf;
    for y in combinations(n, s) {
        let d = tropical_det_bruteforce(&a.submatrix(&rows, &y))?;
        if d.is_finite() && (best == NegInf || d < best) {
            best = d;
        }
    }
    Ok(best)
}

/// Per-level predicates of the order 1 block triangular structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    /// Equations of `Sigma_h` only use variables of `Xi_0..Xi_h`.
    pub triangular: bool,
    /// Order at most 1 in `Xi_{h-1}` and at most 0 elsewhere.
    pub orders_ok: bool,
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_iii: bool,
    pub dense: bool,
    pub chained: bool,
    pub strictly_chained: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// Conditions i-iii plus the dependency and order requirements hold at every level.
    pub block_triangular: bool,
    pub dense: bool,
    pub chained_everywhere: bool,
    pub strictly_chained_everywhere: bool,
    pub levels: Vec<LevelReport>,
}

/// Orders at which each variable occurs in each equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderSupport {
    support: Vec<Vec<BTreeSet<u32>>>,
}

impl OrderSupport {
    pub fn of_system(sys: &DiffSystem) -> Self {
        let support = sys
            .equations()
            .iter()
            .map(|e| {
                let mut row = vec![BTreeSet::new(); sys.n_vars()];
                e.visit_vars(&mut |v| {
                    row[v.var].insert(v.order);
                });
                row
            })
            .collect();
        Self { support }
    }

    /// Only the highest order of each entry is known for a bare matrix.
    pub fn of_matrix(a: &ExtOrderMatrix) -> Self {
        let support = (0..a.rows())
            .map(|i| (0..a.cols()).map(|j| a.get(i, j).finite().map(|k| k as u32).into_iter().collect()).collect())
            .collect();
        Self { support }
    }

    fn rows(&self) -> usize {
        self.support.len()
    }

    fn cols(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    fn order_matrix(&self) -> ExtOrderMatrix {
        let mut a = ExtOrderMatrix::new(self.rows(), self.cols(), NegInf);
        for (i, row) in self.support.iter().enumerate() {
            for (j, set) in row.iter().enumerate() {
                if let Some(&k) = set.iter().next_back() {
                    a.set(i, j, Fin(k as i64));
                }
            }
        }
        a
    }
}

fn check_partition(sup: &OrderSupport, p: &Partition) -> Result<(), OSystemError> {
    if p.xi.len() != p.sigma.len() + 1 {
        return Err(OSystemError::Partition(format!(
            "{} equation blocks need {} variable blocks, got {}",
            p.sigma.len(),
            p.sigma.len() + 1,
            p.xi.len()
        )));
    }
    let cover = |blocks: &[Vec<usize>], total: usize, what: &str| {
        let mut seen = vec![false; total];
        for &k in blocks.iter().flatten() {
            if k >= total || seen[k] {
                return Err(OSystemError::Partition(format!("{what} {k} out of range or repeated")));
            }
            seen[k] = true;
        }
        if let Some(k) = seen.iter().position(|&b| !b) {
            return Err(OSystemError::Partition(format!("{what} {k} belongs to no block")));
        }
        Ok(())
    };
    cover(&p.sigma, sup.rows(), "equation")?;
    cover(&p.xi, sup.cols(), "variable")
}

pub fn classify_block_triangular(sys: &DiffSystem, p: &Partition) -> Result<Classification, OSystemError> {
    classify_support(&OrderSupport::of_system(sys), p)
}

pub fn classify_support(sup: &OrderSupport, p: &Partition) -> Result<Classification, OSystemError> {
    check_partition(sup, p)?;
    let a = sup.order_matrix();
    let mut block_of = vec![0usize; sup.cols()];
    for (h, b) in p.xi.iter().enumerate() {
        for &j in b {
            block_of[j] = h;
        }
    }
    let mut levels = Vec::new();
    for (idx, rows) in p.sigma.iter().enumerate() {
        let h = idx + 1;
        let prev = &p.xi[h - 1];
        let here = &p.xi[h];
        let mut triangular = true;
        let mut orders_ok = true;
        let mut chained = true;
        let mut strictly = true;
        for &i in rows {
            for (j, set) in sup.support[i].iter().enumerate() {
                let Some(&top) = set.iter().next_back() else { continue };
                let b = block_of[j];
                triangular &= b <= h;
                orders_ok &= if b + 1 == h { top <= 1 } else { top == 0 };
                chained &= b == h || b + 1 == h;
                if b + 1 == h {
                    strictly &= !set.contains(&0);
                }
            }
        }
        let sq = a.submatrix(rows, prev);
        let cond_i = prev.len() == rows.len();
        let cond_ii = cond_i && tropical_det(&sq) == Fin(prev.len() as i64);
        let cond_iii = tropical_det(&a.submatrix(rows, here)) == Fin(0);
        let dense = rows.iter().all(|&i| here.iter().all(|&j| a.get(i, j) == Fin(0)));
        levels.push(LevelReport {
            level: h,
            triangular,
            orders_ok,
            cond_i,
            cond_ii,
            cond_iii,
            dense,
            chained,
            strictly_chained: chained && strictly,
        });
    }
    let all = |f: fn(&LevelReport) -> bool| levels.iter().all(f);
    let block_triangular = all(|l| l.triangular && l.orders_ok && l.cond_i && l.cond_ii && l.cond_iii);
    Ok(Classification {
        block_triangular,
        dense: block_triangular && all(|l| l.dense),
        chained_everywhere: all(|l| l.chained),
        strictly_chained_everywhere: all(|l| l.strictly_chained),
        levels,
    })
}
