use flatchain::aircraft::*;
use flatchain::jet;
use flatchain::real::Real;
use flatchain::osystem::o_test;
use flatchain::tropical::ExtOrderMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn airframe() -> AircraftParams {
    AircraftParams::load(format!("{}/fixtures/aircraft/glider_small.json", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng) -> AircraftState {
    let d = std::f64::consts::PI / 180.0;
    AircraftState {
        x: rng.gen_range(-100.0..100.0),
        y: rng.gen_range(-100.0..100.0),
        z: rng.gen_range(-2000.0..0.0),
        v: rng.gen_range(5.0..60.0),
        gamma: rng.gen_range(-60.0..60.0) * d,
        chi: rng.gen_range(-180.0..180.0) * d,
        alpha: rng.gen_range(-4.0..30.0) * d,
        beta: rng.gen_range(-20.0..20.0) * d,
        mu: rng.gen_range(-60.0..60.0) * d,
        p: rng.gen_range(-100.0..100.0) * d,
        q: rng.gen_range(-50.0..50.0) * d,
        r: rng.gen_range(-50.0..50.0) * d,
    }
}

fn random_controls(rng: &mut ChaCha8Rng) -> Controls {
    Controls {
        f: rng.gen_range(0.0..30.0),
        delta_l: rng.gen_range(-0.3..0.3),
        delta_m: rng.gen_range(-0.3..0.3),
        delta_n: rng.gen_range(-0.3..0.3),
        eta: 0.0,
    }
}

#[test]
fn generated_order_matrices_partition_like_printed_ones() {
    let prm = AircraftParams { rho: RhoModel::Altitude, ..airframe() };
    for (size, file) in [(ModelSize::Twelve, "aircraft12_printed.mat"), (ModelSize::Nine, "aircraft9_printed.mat")] {
        let sys = aircraft_system(&prm, Model::Simplified, size);
        let derived = o_test(&jet::order_matrix(&sys));
        let printed = o_test(&ExtOrderMatrix::parse(&fixture(file)).unwrap());
        assert!(derived.found() && printed.found());
        assert_eq!(derived.depth, 4);
        assert_eq!(derived.partition(), printed.partition(), "{size:?}");
    }
    let sys = aircraft_system(&prm, Model::Simplified, ModelSize::Twelve);
    let r = o_test(&jet::order_matrix(&sys));
    let names = |cols: &[usize]| cols.iter().map(|&j| sys.names()[j].as_str()).collect::<Vec<_>>();
    assert_eq!(names(&r.xi0), ["x", "y", "z"]);
    let xi: Vec<Vec<&str>> = r.blocks.iter().map(|b| names(&b.xi)).collect();
    assert_eq!(xi, [vec!["V", "gamma", "chi"], vec!["alpha", "beta", "mu", "F"], vec!["p", "q", "r"], vec!["dl", "dm", "dn"]]);
}

#[test]
fn block_determinants_at_random_states() {
    let prm = airframe();
    let sm = SymbolicModel::new(&prm, Model::Simplified);
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..1000 {
        let s = random_state(&mut rng);
        let d = sm.determinants(&s, &random_controls(&mut rng)).unwrap();
        let want = -s.v * s.v * s.gamma.cos();
        assert!((d.position_block - want).abs() < 1e-9 * want.abs());
        assert!((d.rate_block - 1.0 / s.beta.cos()).abs() < 1e-12);
    }
}

#[test]
fn unpowered_energy_decay() {
    let prm = airframe();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        let c = Controls { f: 0.0, ..random_controls(&mut rng) };
        let d = dynamics(&prm, &s, &c, Model::Simplified).unwrap();
        let rate = s.v * d[3] - prm.g * d[2];
        let want = glide_energy_rate(&prm, &s, &c, Model::Simplified);
        assert!((rate - want).abs() < 1e-9 * want.abs().max(1.0), "{rate} vs {want}");
        assert!((specific_energy(&prm, &s) - (0.5 * s.v * s.v - prm.g * s.z)).abs() < 1e-12);
    }
}

fn mirror(s: &AircraftState) -> AircraftState {
    AircraftState { y: -s.y, chi: -s.chi, beta: -s.beta, mu: -s.mu, p: -s.p, r: -s.r, ..*s }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lateral_mirror_symmetry(seed in any::<u64>(), full in any::<bool>()) {
        // the quadratic sideslip term in the yaw polynomial is the only even lateral term
        let mut prm = airframe();
        prm.theta[43] = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng);
        let c = random_controls(&mut rng);
        let cm = Controls { delta_l: -c.delta_l, delta_n: -c.delta_n, ..c };
        let model = if full { Model::Full } else { Model::Simplified };
        let d = dynamics(&prm, &s, &c, model).unwrap();
        let e = dynamics(&prm, &mirror(&s), &cm, model).unwrap();
        let odd = [false, true, false, false, false, true, false, true, true, true, false, true];
        for k in 0..12 {
            let want = if odd[k] { -d[k] } else { d[k] };
            prop_assert!((e[k] - want).abs() < 1e-9 * (1.0 + d[k].abs()), "component {}: {} vs {}", k, e[k], want);
        }
    }

    #[test]
    fn taylor_jacobian_matches_symbolic(seed in any::<u64>()) {
        let prm = AircraftParams { rho: RhoModel::Altitude, ..airframe() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&mut rng);
        let c = random_controls(&mut rng);
        let sm = SymbolicModel::new(&prm, Model::Full);
        let p = sm.point(&s, &c);
        let j = sm.force_jacobian(&p).unwrap();
        // column of d/d alpha computed by dual numbers on the numeric forces
        let x = s.to_array();
        let (_, dx) = directional(
            |a: &[flatchain::real::Taylor<2>; 12]| {
                let u = c.to_array().map(flatchain::real::Taylor::constant);
                let ft = forces_generic(&prm, a, &u, false, None);
                let (sm_, cm_) = (a[8].sin_cos().0, a[8].sin_cos().1);
                [ft.x, sm_ * ft.y + cm_ * ft.z, -(cm_ * ft.y) + sm_ * ft.z]
            },
            &x,
            &std::array::from_fn(|k| if k == 6 { 1.0 } else { 0.0 }),
        );
        for i in 0..3 {
            prop_assert!((j[(i, 0)] - dx[i]).abs() < 1e-8 * (1.0 + dx[i].abs()));
        }
    }
}
