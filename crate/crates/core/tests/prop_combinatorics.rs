use flatchain::matching::{hopcroft_karp, koenig_cover, ZeroPattern};
use flatchain::tropical::*;
use proptest::prelude::*;

fn matrix_strategy(rows: usize, cols: usize, top: i64) -> impl Strategy<Value = ExtOrderMatrix> {
    prop::collection::vec(prop::collection::vec(prop_oneof![Just(None), (0..=top).prop_map(Some)], cols), rows)
        .prop_map(|r| ExtOrderMatrix::from_options(&r))
}

fn pattern_strategy(max: usize) -> impl Strategy<Value = ZeroPattern> {
    (0..=max, 0..=max).prop_flat_map(|(s, n)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), n), s).prop_map(move |r| {
            if s == 0 {
                ZeroPattern::empty(0, n)
            } else {
                ZeroPattern::from_bools(&r)
            }
        })
    })
}

/// Independent minimal-canon oracle: with an optimal assignment sigma fixed, a
/// canon is a nonnegative solution of l[k] - l[i] <= a[i][s(i)] - a[k][s(i)],
/// and the least one is given by shortest paths (Floyd-Warshall).
fn floyd_minimal_canon(a: &ExtOrderMatrix) -> Option<Vec<i64>> {
    let n = a.rows();
    let sigma = best_assignment(a)?;
    const INF: i64 = i64::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        let top = a.get(i, sigma[i]).finite().unwrap();
        for k in 0..n {
            if let Some(e) = a.get(k, sigma[i]).finite() {
                // constraint l[k] <= l[i] + (top - e): edge i -> k
                d[i][k] = d[i][k].min(top - e);
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for k in 0..n {
                if d[i][m] < INF && d[m][k] < INF {
                    d[i][k] = d[i][k].min(d[i][m] + d[m][k]);
                }
            }
        }
    }
    // l[k] >= l[i] - d[k][i]; least solution l[k] = max(0, max_i -d[k][i]).
    Some((0..n).map(|k| (0..n).filter(|&i| d[k][i] < INF).map(|i| -d[k][i]).max().unwrap_or(0).max(0)).collect())
}

fn best_assignment(a: &ExtOrderMatrix) -> Option<Vec<usize>> {
    fn rec(a: &ExtOrderMatrix, i: usize, used: &mut [bool], cur: &mut Vec<usize>, acc: i64, best: &mut Option<(i64, Vec<usize>)>) {
        if i == a.rows() {
            if best.as_ref().map_or(true, |(b, _)| acc > *b) {
                *best = Some((acc, cur.clone()));
            }
            return;
        }
        for j in 0..a.cols() {
            if let (false, Some(e)) = (used[j], a.get(i, j).finite()) {
                used[j] = true;
                cur.push(j);
                rec(a, i + 1, used, cur, acc + e, best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = None;
    rec(a, 0, &mut vec![false; a.cols()], &mut vec![], 0, &mut best);
    best.map(|(_, s)| s)
}

fn brute_matching(p: &ZeroPattern) -> usize {
    fn rec(p: &ZeroPattern, i: usize, used: &mut [bool]) -> usize {
        if i == p.rows() {
            return 0;
        }
        let mut best = rec(p, i + 1, used);
        for j in 0..p.cols() {
            if p.get(i, j) && !used[j] {
                used[j] = true;
                best = best.max(1 + rec(p, i + 1, used));
                used[j] = false;
            }
        }
        best
    }
    rec(p, 0, &mut vec![false; p.cols()])
}

/// Columns forced into a cover once the row set `rows` is chosen.
fn forced_cols(p: &ZeroPattern, rows: u32) -> Vec<usize> {
    (0..p.cols())
        .filter(|&j| (0..p.rows()).any(|i| rows & (1 << i) == 0 && p.get(i, j)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn canon_determinant_matches_brute_force(a in matrix_strategy(6, 6, 9)) {
        let brute = tropical_det_bruteforce(&a).unwrap();
        match minimal_canon(&a) {
            Ok(c) => {
                prop_assert_eq!(witness_sum(&a, c.witness.as_ref().unwrap()), brute);
                prop_assert!(is_minimal_canon(&a, &c.l));
            }
            Err(TropicalError::NoTransversal) => prop_assert_eq!(brute, NegInf),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn canon_matches_shortest_path_oracle(a in matrix_strategy(6, 6, 9)) {
        if let Ok(c) = minimal_canon(&a) {
            prop_assert_eq!(Some(c.l), floyd_minimal_canon(&a));
        }
    }

    #[test]
    fn wide_matrices_pad_correctly(a in matrix_strategy(3, 6, 5)) {
        prop_assert_eq!(tropical_det(&a), tropical_det_bruteforce(&a).unwrap());
    }

    #[test]
    fn cover_roundtrip_and_inequality(a in matrix_strategy(5, 5, 6)) {
        if let Ok(c) = minimal_canon(&a) {
            let cov = canon_to_cover(&a, &c);
            prop_assert!(cov.is_cover_of(&a));
            let w = c.witness.clone().unwrap();
            let mut total = Fin(0);
            for (i, &j) in w.iter().enumerate() {
                prop_assert_eq!(a.get(i, j), cov.mu[i] + cov.nu[j]);
                total = total + cov.mu[i] + cov.nu[j];
            }
            prop_assert_eq!(total, tropical_det_bruteforce(&a).unwrap());
            prop_assert_eq!(cover_to_canon(&cov.mu).l, c.l);
        }
    }

    #[test]
    fn isoperimetric_family(e in prop::collection::vec(0i64..5, 1..=6)) {
        let n = e.len();
        let rows: Vec<Vec<Option<i64>>> = (0..n).map(|i| (0..n).map(|j| Some(e[i] + e[j])).collect()).collect();
        let a = ExtOrderMatrix::from_options(&rows);
        let (cov, canon) = jacobi_cover(&a).unwrap();
        let emax = *e.iter().max().unwrap();
        let emin = *e.iter().min().unwrap();
        prop_assert_eq!(canon.l, e.iter().map(|x| emax - x).collect::<Vec<_>>());
        prop_assert_eq!(cov.mu, e.iter().map(|x| Fin(x - emin)).collect::<Vec<_>>());
        prop_assert_eq!(cov.nu, e.iter().map(|x| Fin(x + emin)).collect::<Vec<_>>());
        prop_assert_eq!(tropical_det(&a), Fin(2 * e.iter().sum::<i64>()));
    }

    #[test]
    fn koenig_properties(p in pattern_strategy(7)) {
        let k = koenig_cover(&p);
        prop_assert_eq!(k.size, brute_matching(&p));
        prop_assert_eq!(hopcroft_karp(&p).size, k.size);
        prop_assert_eq!(k.r0.len() + k.c0.len(), k.size);
        for i in 0..p.rows() {
            for j in 0..p.cols() {
                if p.get(i, j) {
                    prop_assert!(k.r0.contains(&i) || k.c0.contains(&j));
                }
            }
        }
        let mut rows_used = vec![false; p.rows()];
        let mut cols_used = vec![false; p.cols()];
        for &(i, j) in &k.matching {
            prop_assert!(p.get(i, j) && !rows_used[i] && !cols_used[j]);
            rows_used[i] = true;
            cols_used[j] = true;
        }
        // every optimal cover's row part is contained in R0
        let r0_mask: u32 = k.r0.iter().map(|&i| 1u32 << i).sum();
        for mask in 0u32..(1 << p.rows()) {
            if mask.count_ones() as usize + forced_cols(&p, mask).len() == k.size {
                prop_assert_eq!(mask & !r0_mask, 0);
            }
        }
        prop_assert_eq!(forced_cols(&p, r0_mask), k.c0.clone());
    }
}

#[test]
fn minimal_canon_is_below_every_canon_4x4() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let rows: Vec<Vec<Option<i64>>> = (0..4)
            .map(|_| (0..4).map(|_| if rng.gen_bool(0.2) { None } else { Some(rng.gen_range(0..4)) }).collect())
            .collect();
        let a = ExtOrderMatrix::from_options(&rows);
        let Ok(c) = minimal_canon(&a) else { continue };
        let bound = 10;
        let mut found = 0;
        for code in 0..(bound as usize).pow(4) {
            let l: Vec<i64> = (0..4).map(|k| ((code / (bound as usize).pow(k)) % bound as usize) as i64).collect();
            if canon_witness(&a, &l).is_some() {
                found += 1;
                assert!(componentwise_le(&c.l, &l), "{:?} not below {:?}", c.l, l);
            }
        }
        assert!(found > 0);
    }
}
