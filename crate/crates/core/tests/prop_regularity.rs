use flatchain::jet::{self, DiffSystem, Expr, JetPoint, JetVar};
use flatchain::linalg::DEFAULT_RANK_TOL;
use flatchain::matching::ZeroPattern;
use flatchain::oreg::*;
use flatchain::osystem::*;
use flatchain::tropical::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pq_system(s: usize) -> DiffSystem {
    // P1 = x1^2 + x_{2s} + x_{2s+1}',  Pi = x_{i-1} + x_i^2 + x_{2s-i+1} + x_{2s-i+2}'
    let v = |k: usize, o: u32| Expr::var(k - 1, o);
    let mut eqs = vec![Expr::pow(v(1, 0), 2) + v(2 * s, 0) + v(2 * s + 1, 1)];
    for i in 2..=s {
        eqs.push(v(i - 1, 0) + Expr::pow(v(i, 0), 2) + v(2 * s - i + 1, 0) + v(2 * s - i + 2, 1));
    }
    DiffSystem::from_equations(2 * s + 1, eqs)
}

#[test]
fn pq_family_recursion_depth() {
    for s in 3..=5 {
        let sys = pq_system(s);
        let r = o_reg(&sys, &JetPoint::new(), RegOptions::default()).unwrap();
        assert!(r.found(), "s = {s}: {:?}", r.reason);
        assert_eq!(r.depth, s);
        // the first call needs s iterations of the reduction loop
        assert_eq!(r.levels[0].seq_iterations, s);
        let all: Vec<usize> = (0..s).collect();
        let a = jet::order_matrix(&sys);
        assert_eq!(tropical_det(&a.submatrix(&all, &r.y)), Fin(0));
        assert!(jet::truncated_determinant_at(&sys, &r.y, &JetPoint::new()).unwrap().abs() > 1e-9);
        let ex = o_reg(&sys, &JetPoint::new(), RegOptions { exact: true, ..Default::default() }).unwrap();
        assert_eq!(ex.y, r.y);
    }
    let r = o_reg(&pq_system(3), &JetPoint::new(), RegOptions::default()).unwrap();
    assert_eq!(r.y, vec![3, 4, 5]);
}

fn random_matrix(rng: &mut ChaCha8Rng, s: usize, n: usize) -> ExtOrderMatrix {
    let rows: Vec<Vec<Option<i64>>> =
        (0..s)
            .map(|_| {
                (0..n)
                    .map(|_| match rng.gen_range(0..20) {
                        0..=7 => None,
                        8..=15 => Some(0),
                        k => Some(1 + k % 2),
                    })
                    .collect()
            })
            .collect();
    ExtOrderMatrix::from_options(&rows)
}

#[test]
fn o_test_agrees_with_saddle_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut found = 0;
    for _ in 0..2000 {
        let a = random_matrix(&mut rng, 5, 7);
        let r = o_test(&a);
        let saddle = saddle_jacobi_bruteforce(&a).unwrap();
        assert_eq!(r.found(), saddle == Fin(0), "{}", a.to_text());
        if r.found() {
            found += 1;
            let rows: Vec<usize> = (0..5).collect();
            assert_eq!(tropical_det_bruteforce(&a.submatrix(&rows, &r.y)).unwrap(), Fin(0));
            let mut all_rows: Vec<usize> = r.blocks.iter().flat_map(|b| b.sigma.clone()).collect();
            all_rows.sort_unstable();
            assert_eq!(all_rows, rows);
            let mut cols: Vec<usize> = r.blocks.iter().flat_map(|b| b.y.clone()).collect();
            cols.sort_unstable();
            assert_eq!(cols, r.y);
            // triangularity: rows of Sigma_h never use columns of Xi_h' for h' > h
            for (h, b) in r.blocks.iter().enumerate() {
                for later in &r.blocks[h + 1..] {
                    for &i in &b.sigma {
                        for &j in &later.xi {
                            assert_eq!(a.get(i, j), NegInf);
                        }
                    }
                }
            }
        }
    }
    assert!(found > 30, "only {found} positive instances");
}

/// Random system: each equation is a sum of terms `c * v` or `c * v * w` over jets of order <= 1.
fn random_system(rng: &mut ChaCha8Rng, s: usize, n: usize) -> DiffSystem {
    let eqs = (0..s)
        .map(|_| {
            let terms = rng.gen_range(1..=4);
            Expr::add(
                (0..terms)
                    .map(|_| {
                        let c = Expr::int(rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 });
                        let v = Expr::var(rng.gen_range(0..n), rng.gen_range(0..=1));
                        if rng.gen_bool(0.4) {
                            c * v * Expr::var(rng.gen_range(0..n), rng.gen_range(0..=1))
                        } else {
                            c * v
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    DiffSystem::from_equations(n, eqs)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> JetPoint {
    let mut p = JetPoint::new();
    for var in 0..n {
        for order in 0..=2 {
            p.set(JetVar::new(var, order), rng.gen_range(-1..=1) as f64);
        }
    }
    p
}

#[test]
fn o_reg_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut pos, mut neg) = (0, 0);
    for _ in 0..1500 {
        let n = rng.gen_range(2..=6);
        let s = rng.gen_range(1..=n.min(4));
        let sys = random_system(&mut rng, s, n);
        let p = random_point(&mut rng, n);
        let brute = regular_sets_bruteforce(&sys, &p, 1e-9).unwrap();
        let r = o_reg(&sys, &p, RegOptions::default()).unwrap();
        assert_eq!(r.found(), !brute.is_empty(), "{}\n{:?}\n{:?}", sys.render(), p, r);
        if r.found() {
            pos += 1;
            assert!(brute.contains(&r.y));
            assert!(o_test(&jet::order_matrix(&sys)).found());
        } else {
            neg += 1;
        }
    }
    assert!(pos > 100 && neg > 100, "pos {pos}, neg {neg}");
}

/// Union of supports of a randomly mixed left-kernel basis, from the eigenvectors of `J J^T`.
fn eigen_kernel_support(j: &DMatrix<f64>, mix: &DMatrix<f64>) -> Vec<usize> {
    let eig = (j * j.transpose()).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let kernel: Vec<usize> = (0..j.nrows()).filter(|&k| eig.eigenvalues[k].abs() < 1e-9 * scale).collect();
    let basis = eig.eigenvectors.select_columns(&kernel);
    let k = kernel.len();
    let mixed = basis * mix.view((0, 0), (k, k));
    (0..j.nrows()).filter(|&i| (0..k).any(|r| mixed[(i, r)].abs() > 1e-8)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernel_support_is_basis_independent(
        rows in 1usize..6,
        cols in 1usize..6,
        rank in 0usize..4,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = rank.min(rows).min(cols);
        let l = DMatrix::from_fn(rows, rank, |_, _| rng.gen_range(-2i32..=2) as f64);
        let r = DMatrix::from_fn(rank, cols, |_, _| rng.gen_range(-2i32..=2) as f64);
        let j = &l * &r;
        let b = ZeroPattern::full(rows, cols);
        let ks = kernel_support(&b, &NumMatrix::Float(j.clone()), DEFAULT_RANK_TOL).unwrap();
        let mix = DMatrix::from_fn(rows, rows, |i, k| if i == k { 1.0 + rng.gen_range(0.0..1.0) } else { rng.gen_range(-1.0..1.0) });
        prop_assert_eq!(ks.r_k.clone(), eigen_kernel_support(&j, &mix));
        let exact = kernel_support(&b, &NumMatrix::Exact(flatchain::linalg::to_rational_matrix(&j)), 0.0).unwrap();
        prop_assert_eq!(exact.r_k, ks.r_k);
    }
}
