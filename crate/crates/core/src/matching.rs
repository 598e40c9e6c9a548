//! Maximum matching on 0/-inf patterns and the canonical Kőnig cover.

use std::collections::VecDeque;

use serde::Serialize;

use crate::tropical::{ExtOrderMatrix, Fin};

/// Boolean grid marking candidate transversal positions (entries equal to 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroPattern {
    rows: usize,
    cols: usize,
    present: Vec<bool>,
}

impl ZeroPattern {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, present: vec![false; rows * cols] }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self { rows, cols, present: vec![true; rows * cols] }
    }

    pub fn from_bools(rows: &[Vec<bool>]) -> Self {
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == c), "rectangular pattern");
        Self { rows: rows.len(), cols: c, present: rows.concat() }
    }

    /// Positions holding exactly 0 in an order matrix.
    pub fn zeros_of(a: &ExtOrderMatrix) -> Self {
        let mut p = Self::empty(a.rows(), a.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                p.set(i, j, a.get(i, j) == Fin(0));
            }
        }
        p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.present[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.present[i * self.cols + j] = v;
    }

    pub fn count(&self) -> usize {
        self.present.iter().filter(|&&b| b).count()
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::empty(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }
}

/// Order in which columns are scanned when extending augmenting paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub row_to_col: Vec<Option<usize>>,
    pub col_to_row: Vec<Option<usize>>,
    pub size: usize,
}

impl Matching {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|j| (i, j)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KoenigResult {
    pub matching: Vec<(usize, usize)>,
    pub r0: Vec<usize>,
    pub c0: Vec<usize>,
    pub size: usize,
}

impl KoenigResult {
    /// Matched columns outside `C0`, i.e. the columns matched to rows of `R0`.
    pub fn y1(&self) -> Vec<usize> {
        let mut y: Vec<usize> = self
            .matching
            .iter()
            .filter(|(i, _)| self.r0.contains(i))
            .map(|&(_, j)| j)
            .collect();
        y.sort_unstable();
        y
    }
}

fn adjacency(p: &ZeroPattern, order: ColumnOrder) -> Vec<Vec<usize>> {
    (0..p.rows())
        .map(|i| {
            let mut v: Vec<usize> = (0..p.cols()).filter(|&j| p.get(i, j)).collect();
            if order == ColumnOrder::Descending {
                v.reverse();
            }
            v
        })
        .collect()
}

/// Hopcroft–Karp maximum matching, rows then columns ascending.
pub fn hopcroft_karp(p: &ZeroPattern) -> Matching {
    hopcroft_karp_ordered(p, ColumnOrder::Ascending)
}

/// Hopcroft–Karp maximum matching with an explicit column scan order.
pub fn hopcroft_karp_ordered(p: &ZeroPattern, order: ColumnOrder) -> Matching {
    let adj = adjacency(p, order);
    let n_left = p.rows();
    let mut row_to_col = vec![None; n_left];
    let mut col_to_row = vec![None; p.cols()];
    let inf = usize::MAX;
    let mut dist = vec![inf; n_left];
    let mut size = 0;

    loop {
        // BFS layering from free rows.
        let mut q = VecDeque::new();
        for u in 0..n_left {
            if row_to_col[u].is_none() {
                dist[u] = 0;
                q.push_back(u);
            } else {
                dist[u] = inf;
            }
        }
        let mut found = false;
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                match col_to_row[v] {
                    Some(u2) if dist[u2] == inf => {
                        dist[u2] = dist[u] + 1;
                        q.push_back(u2);
                    }
                    None => found = true,
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        for u in 0..n_left {
            if row_to_col[u].is_none() && dfs(u, &adj, &mut row_to_col, &mut col_to_row, &mut dist) {
                size += 1;
            }
        }
    }
    Matching { row_to_col, col_to_row, size }
}

fn dfs(
    u: usize,
    adj: &[Vec<usize>],
    row_to_col: &mut [Option<usize>],
    col_to_row: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &v in &adj[u] {
        let ok = match col_to_row[v] {
            None => true,
            Some(u2) => dist[u2] == dist[u].wrapping_add(1) && dfs(u2, adj, row_to_col, col_to_row, dist),
        };
        if ok {
            row_to_col[u] = Some(v);
            col_to_row[v] = Some(u);
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// Kőnig decomposition with `R0` maximal and `C0` minimal for inclusion.
pub fn koenig_cover(p: &ZeroPattern) -> KoenigResult {
    koenig_cover_ordered(p, ColumnOrder::Ascending)
}

/// Kőnig decomposition; the column order only affects which maximum matching is reported.
///
/// Third class rows are the unmatched rows together with every row having an
/// alternating path to one of them. `R0` is the complement of the third class,
/// `C0` the columns reached by those alternating paths.
pub fn koenig_cover_ordered(p: &ZeroPattern, order: ColumnOrder) -> KoenigResult {
    let m = hopcroft_karp_ordered(p, order);
    let (zr, zc) = third_class(p, &m);
    let r0: Vec<usize> = (0..p.rows()).filter(|&i| !zr[i]).collect();
    let c0: Vec<usize> = (0..p.cols()).filter(|&j| zc[j]).collect();
    KoenigResult { matching: m.pairs(), r0, c0, size: m.size }
}

fn third_class(p: &ZeroPattern, m: &Matching) -> (Vec<bool>, Vec<bool>) {
    let mut zr = vec![false; p.rows()];
    let mut zc = vec![false; p.cols()];
    let mut q = VecDeque::new();
    for i in 0..p.rows() {
        if m.row_to_col[i].is_none() {
            zr[i] = true;
            q.push_back(i);
        }
    }
    while let Some(i) = q.pop_front() {
        for j in 0..p.cols() {
            if p.get(i, j) && !zc[j] {
                zc[j] = true;
                if let Some(i2) = m.col_to_row[j] {
                    if !zr[i2] {
                        zr[i2] = true;
                        q.push_back(i2);
                    }
                }
            }
        }
    }
    (zr, zc)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ex_rmax() -> ZeroPattern {
        let r = [[1, 0, 1, 1, 1], [1, 0, 1, 1, 0], [1, 1, 0, 0, 0], [1, 0, 0, 0, 0], [1, 0, 0, 0, 0]];
        ZeroPattern::from_bools(&r.iter().map(|row| row.iter().map(|&v| v == 1).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn matching_sizes() {
        assert_eq!(hopcroft_karp(&ex_rmax()).size, 4);
        assert_eq!(hopcroft_karp(&ZeroPattern::empty(0, 0)).size, 0);
        assert_eq!(hopcroft_karp(&ZeroPattern::full(3, 3)).size, 3);
        assert_eq!(hopcroft_karp_ordered(&ex_rmax(), ColumnOrder::Descending).size, 4);
    }

    #[test]
    fn koenig_examples() {
        let k = koenig_cover(&ex_rmax());
        assert_eq!(k.r0, vec![0, 1, 2]);
        assert_eq!(k.c0, vec![0]);
        assert_eq!(k.size, 4);

        let mut diag = ZeroPattern::empty(4, 4);
        for i in 0..4 {
            diag.set(i, i, true);
        }
        let kd = koenig_cover(&diag);
        assert_eq!(kd.r0, vec![0, 1, 2, 3]);
        assert!(kd.c0.is_empty());

        let ke = koenig_cover(&ZeroPattern::empty(3, 2));
        assert!(ke.r0.is_empty() && ke.c0.is_empty() && ke.size == 0);
    }

    #[test]
    fn single_entry_prefers_row() {
        let mut p = ZeroPattern::empty(2, 2);
        p.set(0, 0, true);
        let k = koenig_cover(&p);
        assert_eq!(k.r0, vec![0]);
        assert!(k.c0.is_empty());
    }
}
