use flatchain::aircraft::{aircraft_system, AircraftParams, Model, ModelSize, RhoModel};
use flatchain::jet::{self, order_matrix, parse_system, DiffSystem, Expr, JetError, JetVar};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn fixture_systems() -> Vec<(String, DiffSystem)> {
    let dir = format!("{}/fixtures", env!("CARGO_MANIFEST_DIR"));
    let mut out: Vec<(String, DiffSystem)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "dsys"))
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), parse_system(&text).unwrap())
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    let prm = AircraftParams {
        rho: RhoModel::Altitude,
        ..AircraftParams::load(format!("{dir}/aircraft/glider_small.json")).unwrap()
    };
    out.push(("aircraft12".into(), aircraft_system(&prm, Model::Full, ModelSize::Twelve)));
    out
}

/// Every jet variable occurring in the system.
fn jets(sys: &DiffSystem) -> Vec<JetVar> {
    let mut seen = std::collections::BTreeSet::new();
    for e in sys.equations() {
        e.visit_vars(&mut |v| {
            seen.insert((v.var, v.order));
        });
    }
    seen.into_iter().map(|(v, o)| JetVar::new(v, o)).collect()
}

fn eval_at(e: &Expr, point: &BTreeMap<(usize, u32), f64>) -> Result<f64, JetError> {
    e.eval(&|v: JetVar| Ok(point.get(&(v.var, v.order)).copied().unwrap_or(0.0)))
}

fn fd_agrees(e: &Expr, v: JetVar, point: &BTreeMap<(usize, u32), f64>) -> Result<bool, JetError> {
    let h = 1e-6;
    let key = (v.var, v.order);
    let at = |dx: f64| {
        let mut p = point.clone();
        *p.entry(key).or_insert(0.0) += dx;
        eval_at(e, &p)
    };
    let fd = (at(h)? - at(-h)?) / (2.0 * h);
    let exact = eval_at(&e.diff(v), point)?;
    let scale = exact.abs().max(at(0.0)?.abs()).max(1.0);
    Ok((fd - exact).abs() <= 1e-6 * scale)
}

#[test]
fn symbolic_derivatives_match_finite_differences_on_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, sys) in fixture_systems() {
        let vars = jets(&sys);
        let mut checked = 0;
        for _ in 0..100 {
            let point: BTreeMap<(usize, u32), f64> =
                vars.iter().map(|v| ((v.var, v.order), rng.gen_range(0.1..1.5))).collect();
            for e in sys.equations() {
                for &v in &vars {
                    if e.depends_on(v) {
                        assert!(fd_agrees(e, v, &point).unwrap(), "{name}: {} at {point:?}", sys.jet_name(v));
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0, "{name}");
    }
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0usize..3, 0u32..3).prop_map(|(v, o)| Expr::var(v, o)),
        (-5i64..6).prop_map(Expr::int),
        (-7i64..8, 1i64..5).prop_map(|(p, q)| Expr::div(Expr::int(p), Expr::int(q))),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), 0i32..4).prop_map(|(a, k)| Expr::pow(a, k)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.prop_map(|a| Expr::exp(Expr::mul(vec![Expr::div(Expr::one(), Expr::int(4)), a]))),
        ]
    })
}

fn system_of(eqs: Vec<Expr>) -> DiffSystem {
    DiffSystem::from_equations(3, eqs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_tree_derivatives(e in expr_strategy(), vals in prop::collection::vec(-1.0f64..1.0, 9)) {
        let point: BTreeMap<(usize, u32), f64> =
            (0..9).map(|k| ((k / 3, (k % 3) as u32), vals[k])).collect();
        for var in 0..3 {
            for order in 0..3 {
                let v = JetVar::new(var, order);
                match fd_agrees(&e, v, &point) {
                    Ok(ok) => prop_assert!(ok, "d/d{v:?} of {}", e.render(&["x1".into(), "x2".into(), "x3".into()])),
                    Err(_) => {}
                }
            }
        }
    }

    #[test]
    fn lower_order_terms_leave_the_order_matrix_unchanged(
        eqs in prop::collection::vec(expr_strategy(), 1..4),
        extra in prop::collection::vec((0usize..3, 1i64..4), 1..4),
    ) {
        let sys = system_of(eqs.clone());
        let a = order_matrix(&sys);
        let augmented: Vec<Expr> = eqs
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut terms = vec![e.clone()];
                for &(var, c) in &extra {
                    // one order below the highest present, if any
                    if let Some(top) = e.order_of(var).filter(|&k| k > 0) {
                        let lower = Expr::var(var, top - 1);
                        terms.push(Expr::mul(vec![Expr::int(c + i as i64), Expr::sin(lower)]));
                    }
                }
                Expr::add(terms)
            })
            .collect();
        prop_assert_eq!(order_matrix(&system_of(augmented)), a);
    }

    #[test]
    fn render_parse_roundtrip(eqs in prop::collection::vec(expr_strategy(), 1..4), vals in prop::collection::vec(-1.0f64..1.0, 9)) {
        let sys = system_of(eqs);
        let text = sys.render();
        let back = parse_system(&text).unwrap();
        prop_assert_eq!(back.render(), text.clone());
        prop_assert_eq!(order_matrix(&back), order_matrix(&sys));
        let point: BTreeMap<(usize, u32), f64> =
            (0..9).map(|k| ((k / 3, (k % 3) as u32), vals[k])).collect();
        for (e, f) in sys.equations().iter().zip(back.equations()) {
            if let (Ok(x), Ok(y)) = (eval_at(e, &point), eval_at(f, &point)) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{} vs {}", x, y);
            }
        }
    }
}

#[test]
fn order_matrix_of_jac_fixture() {
    let text = std::fs::read_to_string(format!("{}/fixtures/ex_jac.dsys", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let sys = parse_system(&text).unwrap();
    let printed =
        std::fs::read_to_string(format!("{}/fixtures/ex_jac.mat", env!("CARGO_MANIFEST_DIR"))).unwrap();
    assert_eq!(jet::order_matrix(&sys), flatchain::tropical::ExtOrderMatrix::parse(&printed).unwrap());
}
