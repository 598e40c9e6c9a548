//! The aircraft equations as a [`DiffSystem`] and the singularity
//! determinants obtained by symbolic differentiation.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    dynamics_generic, rho_exponent, AircraftError, AircraftParams, AircraftState, Controls, Model, RateScaling,
    RhoModel, RHO0, RHO_LAPSE, RHO_T0,
};
use crate::jet::{self, DiffSystem, Expr, JetPoint, JetVar};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum ModelSize {
    /// All twelve states.
    Twelve,
    /// The nine states `z, V, gamma, alpha, beta, mu, p, q, r`.
    Nine,
}

const NAMES_12: [&str; 16] =
    ["x", "y", "z", "V", "gamma", "chi", "alpha", "beta", "mu", "F", "p", "q", "r", "dl", "dm", "dn"];
const NAMES_9: [&str; 13] = ["z", "V", "gamma", "alpha", "beta", "mu", "F", "p", "q", "r", "dl", "dm", "dn"];
const ROWS_12: [&str; 12] = ["x", "y", "z", "V", "gamma", "chi", "alpha", "beta", "mu", "p", "q", "r"];
const ROWS_9: [&str; 9] = ["z", "V", "gamma", "alpha", "beta", "mu", "p", "q", "r"];

struct Vars<'a> {
    names: &'a [&'a str],
}

impl Vars<'_> {
    fn idx(&self, name: &str) -> usize {
        self.names.iter().position(|n| *n == name).expect("known variable")
    }
    fn v(&self, name: &str) -> Expr {
        Expr::var(self.idx(name), 0)
    }
    fn d(&self, name: &str) -> Expr {
        Expr::var(self.idx(name), 1)
    }
}

fn c(x: f64) -> Expr {
    Expr::num(x)
}

fn sum(ts: Vec<Expr>) -> Expr {
    Expr::add(ts)
}

fn prod(fs: Vec<Expr>) -> Expr {
    Expr::mul(fs)
}

struct SymForces {
    x: Expr,
    y: Expr,
    z: Expr,
    l: Expr,
    m: Expr,
    n: Expr,
}

fn rho_expr(prm: &AircraftParams, vars: &Vars) -> Expr {
    match prm.rho {
        RhoModel::Constant(k) => c(k),
        RhoModel::Altitude => {
            let base = sum(vec![c(1.0), prod(vec![c(RHO_LAPSE / RHO_T0), vars.v("z")])]);
            prod(vec![c(RHO0), Expr::exp(prod(vec![c(rho_exponent()), Expr::ln(base)]))])
        }
    }
}

fn sym_forces(prm: &AircraftParams, simplified: bool, vars: &Vars) -> SymForces {
    let th = |i: usize| c(prm.th(i));
    let (al, be, v) = (vars.v("alpha"), vars.v("beta"), vars.v("V"));
    let scale = |len: f64, rate: Expr| match prm.rate_scaling {
        RateScaling::Unnormalized => prod(vec![c(len), rate]),
        RateScaling::Standard => prod(vec![c(len / 2.0), rate, Expr::pow(v.clone(), -1)]),
    };
    let pt = scale(prm.a, vars.v("p"));
    let qt = scale(prm.b, vars.v("q"));
    let rt = scale(prm.a, vars.v("r"));
    let (dl, dm, dn) = (vars.v("dl"), vars.v("dm"), vars.v("dn"));
    let zero = Expr::zero();
    let (fp, fq, fr, fdl, fdm, fdn) = if simplified {
        (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero)
    } else {
        (pt.clone(), qt.clone(), rt.clone(), dl.clone(), dm.clone(), dn.clone())
    };
    let a = |k: i32| Expr::pow(al.clone(), k);
    let c_d = sum(vec![
        th(1),
        prod(vec![th(2), a(1)]),
        prod(vec![th(3), a(1), fq.clone()]),
        prod(vec![th(4), a(1), fdm.clone()]),
        prod(vec![th(5), a(2)]),
        prod(vec![th(6), a(2), fq.clone()]),
        prod(vec![th(7), fdm.clone()]),
        prod(vec![th(8), a(3)]),
        prod(vec![th(9), a(3), fq.clone()]),
        prod(vec![th(10), a(4)]),
    ]);
    let c_side = sum(vec![
        prod(vec![th(11), be.clone()]),
        prod(vec![th(12), fp]),
        prod(vec![th(13), fr]),
        prod(vec![th(14), fdl]),
        prod(vec![th(15), fdn]),
    ]);
    let c_lift = sum(vec![
        th(16),
        prod(vec![th(17), a(1)]),
        prod(vec![th(18), fq.clone()]),
        prod(vec![th(19), fdm]),
        prod(vec![th(20), a(1), fq]),
        prod(vec![th(21), a(2)]),
        prod(vec![th(22), a(3)]),
        prod(vec![th(23), a(4)]),
    ]);
    let c_roll = sum(vec![
        prod(vec![th(24), be.clone()]),
        prod(vec![th(25), pt.clone()]),
        prod(vec![th(26), rt.clone()]),
        prod(vec![th(27), dl.clone()]),
        prod(vec![th(28), dn.clone()]),
    ]);
    let c_pitch = sum(vec![
        th(29),
        prod(vec![th(30), a(1)]),
        prod(vec![th(31), qt.clone()]),
        prod(vec![th(32), dm.clone()]),
        prod(vec![th(33), a(1), qt.clone()]),
        prod(vec![th(34), a(2), qt.clone()]),
        prod(vec![th(35), a(2), dm.clone()]),
        prod(vec![th(36), a(3), qt]),
        prod(vec![th(37), a(3), dm]),
        prod(vec![th(38), a(4)]),
    ]);
    let c_yaw = sum(vec![
        prod(vec![th(39), be.clone()]),
        prod(vec![th(40), pt]),
        prod(vec![th(41), rt]),
        prod(vec![th(42), dl]),
        prod(vec![th(43), dn]),
        prod(vec![th(44), Expr::pow(be.clone(), 2)]),
        prod(vec![th(45), Expr::pow(be.clone(), 3)]),
    ]);
    let (sb, cb) = (Expr::sin(be.clone()), Expr::cos(be));
    let c_x = sum(vec![prod(vec![cb.clone(), c_d.clone()]), Expr::neg(prod(vec![sb.clone(), c_side.clone()]))]);
    let c_y = sum(vec![prod(vec![sb.clone(), c_d]), prod(vec![cb.clone(), c_side])]);
    let qs = prod(vec![c(0.5 * prm.s), rho_expr(prm, vars), Expr::pow(v, 2)]);
    let f = vars.v("F");
    let ae = sum(vec![al, c(prm.eps)]);
    let (sae, cae) = (Expr::sin(ae.clone()), Expr::cos(ae));
    let gam = vars.v("gamma");
    let mu = vars.v("mu");
    let gm = c(prm.g * prm.m);
    let x = sum(vec![
        prod(vec![f.clone(), cae.clone(), cb]),
        Expr::neg(prod(vec![qs.clone(), c_x])),
        Expr::neg(prod(vec![gm.clone(), Expr::sin(gam.clone())])),
    ]);
    let y = sum(vec![
        prod(vec![f.clone(), cae, sb]),
        prod(vec![qs.clone(), c_y]),
        prod(vec![gm.clone(), Expr::cos(gam.clone()), Expr::sin(mu.clone())]),
    ]);
    let z = sum(vec![
        Expr::neg(prod(vec![f, sae])),
        Expr::neg(prod(vec![qs.clone(), c_lift])),
        prod(vec![gm, Expr::cos(gam), Expr::cos(mu)]),
    ]);
    SymForces {
        x,
        y,
        z,
        l: prod(vec![c(prm.a), qs.clone(), c_roll]),
        m: prod(vec![c(prm.b), qs.clone(), c_pitch]),
        n: prod(vec![c(prm.a), qs, c_yaw]),
    }
}

/// Right-hand sides keyed by row name.
fn sym_rhs(prm: &AircraftParams, simplified: bool, vars: &Vars, rows: &[&str]) -> Vec<Expr> {
    let fo = sym_forces(prm, simplified, vars);
    let v = |n: &str| vars.v(n);
    let mv_inv = prod(vec![c(1.0 / prm.m), Expr::pow(v("V"), -1)]);
    let (sg, cg, tg) = (Expr::sin(v("gamma")), Expr::cos(v("gamma")), Expr::tan(v("gamma")));
    let (sa, ca) = (Expr::sin(v("alpha")), Expr::cos(v("alpha")));
    let (sb, cb) = (Expr::sin(v("beta")), Expr::cos(v("beta")));
    let (sm, cm) = (Expr::sin(v("mu")), Expr::cos(v("mu")));
    let (p, q, r) = (v("p"), v("q"), v("r"));
    let ji = prm.inertia_inverse();
    let (ixx, iyy, izz, ixz) = (prm.ixx, prm.iyy, prm.izz, prm.ixz);
    let b0 = sum(vec![prod(vec![c(iyy - izz), q.clone(), r.clone()]), prod(vec![c(ixz), p.clone(), q.clone()]), fo.l]);
    let b1 = sum(vec![
        prod(vec![c(izz - ixx), p.clone(), r.clone()]),
        prod(vec![c(ixz), sum(vec![Expr::pow(r.clone(), 2), Expr::neg(Expr::pow(p.clone(), 2))])]),
        fo.m,
    ]);
    let b2 =
        sum(vec![prod(vec![c(ixx - iyy), p.clone(), q.clone()]), Expr::neg(prod(vec![c(ixz), r.clone(), q.clone()])), fo.n]);
    rows.iter()
        .map(|&row| match row {
            "x" => prod(vec![v("V"), Expr::cos(v("chi")), cg.clone()]),
            "y" => prod(vec![v("V"), Expr::sin(v("chi")), cg.clone()]),
            "z" => Expr::neg(prod(vec![v("V"), sg.clone()])),
            "V" => prod(vec![c(1.0 / prm.m), fo.x.clone()]),
            "gamma" => Expr::neg(prod(vec![
                mv_inv.clone(),
                sum(vec![prod(vec![fo.y.clone(), sm.clone()]), prod(vec![fo.z.clone(), cm.clone()])]),
            ])),
            "chi" => prod(vec![
                mv_inv.clone(),
                Expr::pow(cg.clone(), -1),
                sum(vec![prod(vec![fo.y.clone(), cm.clone()]), Expr::neg(prod(vec![fo.z.clone(), sm.clone()]))]),
            ]),
            "alpha" => prod(vec![
                Expr::pow(cb.clone(), -1),
                sum(vec![
                    Expr::neg(prod(vec![p.clone(), ca.clone(), sb.clone()])),
                    prod(vec![q.clone(), cb.clone()]),
                    Expr::neg(prod(vec![r.clone(), sa.clone(), sb.clone()])),
                    prod(vec![fo.z.clone(), mv_inv.clone()]),
                ]),
            ]),
            "beta" => sum(vec![
                prod(vec![p.clone(), sa.clone()]),
                Expr::neg(prod(vec![r.clone(), ca.clone()])),
                prod(vec![fo.y.clone(), mv_inv.clone()]),
            ]),
            "mu" => prod(vec![
                Expr::pow(cb.clone(), -1),
                sum(vec![
                    prod(vec![p.clone(), ca.clone()]),
                    prod(vec![r.clone(), sa.clone()]),
                    prod(vec![
                        mv_inv.clone(),
                        sum(vec![
                            prod(vec![fo.y.clone(), cm.clone(), tg.clone(), cb.clone()]),
                            Expr::neg(prod(vec![
                                fo.z.clone(),
                                sum(vec![prod(vec![sm.clone(), tg.clone(), cb.clone()]), sb.clone()]),
                            ])),
                        ]),
                    ]),
                ]),
            ]),
            "p" => sum(vec![prod(vec![c(ji[(0, 0)]), b0.clone()]), prod(vec![c(ji[(0, 2)]), b2.clone()])]),
            "q" => prod(vec![c(ji[(1, 1)]), b1.clone()]),
            "r" => sum(vec![prod(vec![c(ji[(2, 0)]), b0.clone()]), prod(vec![c(ji[(2, 2)]), b2.clone()])]),
            other => unreachable!("row {other}"),
        })
        .collect()
}

/// The aircraft model as equations `d(s) - f(s, u) = 0` in jet coordinates,
/// with symmetric thrust.
pub fn aircraft_system(prm: &AircraftParams, model: Model, size: ModelSize) -> DiffSystem {
    let (names, rows): (&[&str], &[&str]) = match size {
        ModelSize::Twelve => (&NAMES_12, &ROWS_12),
        ModelSize::Nine => (&NAMES_9, &ROWS_9),
    };
    let vars = Vars { names };
    let rhs = sym_rhs(prm, model.simplified(), &vars, rows);
    let eqs = rows.iter().zip(rhs).map(|(r, f)| Expr::sub(vars.d(r), f)).collect();
    DiffSystem::new(
        names.iter().map(|s| s.to_string()).collect(),
        eqs,
        rows.iter().map(|s| format!("d{s}")).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityDeterminants {
    /// Minors of the force Jacobian over `(alpha, beta, mu, F)` with one column removed.
    pub delta_alpha: f64,
    pub delta_beta: f64,
    pub delta_mu: f64,
    pub delta_f: f64,
    /// Position rows against `(V, gamma, chi)`.
    pub position_block: f64,
    /// Angle rows `(alpha, beta, mu)` against `(p, q, r)`.
    pub rate_block: f64,
    /// Rate rows `(p, q, r)` against `(dl, dm, dn)`.
    pub control_block: f64,
}

/// Symbolic twelve-state model with its force combinations, built once.
pub struct SymbolicModel {
    pub system: DiffSystem,
    /// `X`, `sin(mu) Y + cos(mu) Z`, `-cos(mu) Y + sin(mu) Z`.
    pub rotated_forces: [Expr; 3],
    prm: AircraftParams,
    model: Model,
}

const DELTA_COLS: [&str; 4] = ["alpha", "beta", "mu", "F"];

impl SymbolicModel {
    pub fn new(prm: &AircraftParams, model: Model) -> Self {
        let vars = Vars { names: &NAMES_12 };
        let fo = sym_forces(prm, model.simplified(), &vars);
        let (sm, cm) = (Expr::sin(vars.v("mu")), Expr::cos(vars.v("mu")));
        let q2 = sum(vec![prod(vec![sm.clone(), fo.y.clone()]), prod(vec![cm.clone(), fo.z.clone()])]);
        let q3 = sum(vec![Expr::neg(prod(vec![cm, fo.y])), prod(vec![sm, fo.z])]);
        Self {
            system: aircraft_system(prm, model, ModelSize::Twelve),
            rotated_forces: [fo.x, q2, q3],
            prm: prm.clone(),
            model,
        }
    }

    /// Jet point with order-0 values from the state and controls and
    /// first derivatives from the dynamics.
    pub fn point(&self, s: &AircraftState, u: &Controls) -> JetPoint {
        let mut p = JetPoint::new();
        let vals = s.to_array();
        let ctrl = [u.f, u.delta_l, u.delta_m, u.delta_n];
        let sym = Controls { eta: 0.0, ..*u };
        let d = dynamics_generic(&self.prm, &vals, &sym.to_array(), self.model.simplified(), None);
        for (k, name) in NAMES_12.iter().enumerate() {
            let v = match ROWS_12.iter().position(|r| r == name) {
                Some(i) => {
                    p.set(JetVar::new(k, 1), d[i]);
                    vals[i]
                }
                None => ctrl[["F", "dl", "dm", "dn"].iter().position(|c| c == name).expect("control name")],
            };
            p.set(JetVar::new(k, 0), v);
        }
        p
    }

    fn col(&self, name: &str) -> usize {
        self.system.var_index(name).expect("known variable")
    }

    /// `dQ_i / d(alpha, beta, mu, F)` at a point.
    pub fn force_jacobian(&self, p: &JetPoint) -> Result<DMatrix<f64>, AircraftError> {
        let mut m = DMatrix::zeros(3, 4);
        for (i, q) in self.rotated_forces.iter().enumerate() {
            for (j, name) in DELTA_COLS.iter().enumerate() {
                m[(i, j)] = q.diff(JetVar::new(self.col(name), 0)).eval(&|v| p.get(v)).map_err(jet_err)?;
            }
        }
        Ok(m)
    }

    fn block(&self, rows: &[&str], cols: &[&str], p: &JetPoint) -> Result<f64, AircraftError> {
        let r: Vec<usize> = rows.iter().map(|n| ROWS_12.iter().position(|x| x == n).unwrap()).collect();
        let c: Vec<JetVar> = cols.iter().map(|n| JetVar::new(self.col(n), 0)).collect();
        Ok(linalg::det(&jet::jacobian_at(&self.system, &r, &c, p).map_err(jet_err)?))
    }

    pub fn determinants(&self, s: &AircraftState, u: &Controls) -> Result<SingularityDeterminants, AircraftError> {
        let p = self.point(s, u);
        let m = self.force_jacobian(&p)?;
        let minor = |drop: usize| {
            let keep: Vec<usize> = (0..4).filter(|&j| j != drop).collect();
            linalg::det(&m.select_columns(&keep))
        };
        Ok(SingularityDeterminants {
            delta_alpha: minor(0),
            delta_beta: minor(1),
            delta_mu: minor(2),
            delta_f: minor(3),
            position_block: self.block(&["x", "y", "z"], &["V", "gamma", "chi"], &p)?,
            rate_block: self.block(&["alpha", "beta", "mu"], &["p", "q", "r"], &p)?,
            control_block: self.block(&["p", "q", "r"], &["dl", "dm", "dn"], &p)?,
        })
    }
}

fn jet_err(e: jet::JetError) -> AircraftError {
    AircraftError::Domain(e.to_string())
}

/// Convenience wrapper building the symbolic model on each call.
pub fn singularity_determinants(
    prm: &AircraftParams,
    s: &AircraftState,
    u: &Controls,
    model: Model,
) -> Result<SingularityDeterminants, AircraftError> {
    s.check_domain()?;
    SymbolicModel::new(prm, model).determinants(s, u)
}
