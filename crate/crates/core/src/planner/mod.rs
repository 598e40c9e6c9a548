//! Flat parametrization of the simplified aircraft model, cascade
//! linearizing feedback and closed-loop simulation.

mod control;
mod reference;
mod sim;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aircraft::{
    dynamics_generic, forces_generic, gna_coefficients, ix, AircraftError, AircraftParams, AircraftState, Controls,
};
use crate::real::{Real, Taylor};

pub use control::{cascade_feedback, jerk_map, rate_map, ControlReference, FeedbackGains, FeedbackOutput, JerkMap};
pub use reference::{FourthOutput, PositionReference, ReferenceTrajectory};
pub use sim::{
    dominant_frequency, load_scenario, simulate_closed_loop, write_outputs, Perturbation, Scenario, SimConfig, SimResult, SimSummary,
    Wind,
};

/// Extra grid samples on each side used by the central differences.
pub const MARGIN: usize = 2;
pub const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 60;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("t = {t}: {msg}")]
    Domain { t: f64, msg: String },
    #[error("t = {t}: force equations did not converge (|Delta_xi| = {delta:.6e})")]
    Newton { t: f64, delta: f64 },
    #[error("t = {t}: singular {what} (determinant {det:.3e})")]
    Singular { t: f64, what: String, det: f64 },
    #[error(transparent)]
    Aircraft(#[from] AircraftError),
    #[error("{0}")]
    Config(String),
}

/// Which element of `(alpha, beta, mu, F)` completes `(x, y, z)` as flat output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputSet {
    Beta,
    Mu,
    #[serde(rename = "F")]
    F,
}

impl OutputSet {
    /// Index of the fourth output in `(alpha, beta, mu, F)`.
    pub fn index(self) -> usize {
        match self {
            OutputSet::Beta => 1,
            OutputSet::Mu => 2,
            OutputSet::F => 3,
        }
    }

    /// The three entries of `(alpha, beta, mu, F)` solved from the force equations.
    pub fn unknowns(self) -> [usize; 3] {
        match self {
            OutputSet::Beta => [0, 2, 3],
            OutputSet::Mu => [0, 1, 3],
            OutputSet::F => [0, 1, 2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputSet::Beta => "beta",
            OutputSet::Mu => "mu",
            OutputSet::F => "F",
        }
    }
}

/// Flight-path quantities with first and second derivatives.
pub fn path_angles(v: [f64; 3], a: [f64; 3], j: [f64; 3]) -> Result<[[f64; 3]; 3], String> {
    let dot = |u: [f64; 3], w: [f64; 3]| u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
    let speed = dot(v, v).sqrt();
    let vh2 = v[0] * v[0] + v[1] * v[1];
    let vh = vh2.sqrt();
    if !(speed > 0.0) {
        return Err("zero reference velocity".into());
    }
    if !(vh > 1e-9 * speed) {
        return Err("vertical reference velocity: heading undefined".into());
    }
    let v_dot = dot(v, a) / speed;
    let v_ddot = (dot(a, a) + dot(v, j)) / speed - v_dot * v_dot / speed;
    let chi = v[1].atan2(v[0]);
    let hdot = v[0] * a[0] + v[1] * a[1];
    let chi_dot = (v[0] * a[1] - v[1] * a[0]) / vh2;
    let chi_ddot = (v[0] * j[1] - v[1] * j[0]) / vh2 - 2.0 * chi_dot * hdot / vh2;
    let gamma = -(v[2] / speed).asin();
    let n = a[2] * speed - v[2] * v_dot;
    let d = speed * vh;
    let n_dot = j[2] * speed - v[2] * v_ddot;
    let d_dot = v_dot * vh + speed * hdot / vh;
    let gamma_dot = -n / d;
    let gamma_ddot = -(n_dot * d - n * d_dot) / (d * d);
    Ok([[speed, v_dot, v_ddot], [gamma, gamma_dot, gamma_ddot], [chi, chi_dot, chi_ddot]])
}

/// Flat-chain values at one sample: each entry is `[value, first derivative(, second)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Chain {
    #[serde(rename = "V")]
    pub v: [f64; 3],
    pub gamma: [f64; 3],
    pub chi: [f64; 3],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub mu: [f64; 2],
    #[serde(rename = "F")]
    pub f: [f64; 2],
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub r: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedSample {
    pub t: f64,
    pub state: AircraftState,
    pub controls: Controls,
    pub chain: Chain,
    /// `det` of the force Jacobian over the solved triple.
    pub delta_xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedTrajectory {
    pub step: f64,
    pub output_set: OutputSet,
    pub samples: Vec<PlannedSample>,
    /// `(alpha, beta, mu, F)` on the grid extended by [`MARGIN`] samples on each side.
    pub xi_extended: Vec<[f64; 4]>,
    pub t_extended0: f64,
}

impl PlannedTrajectory {
    /// One element of `(alpha, beta, mu, F)` as a tabulated reference on the extended grid.
    pub fn tabulated(&self, component: usize) -> FourthOutput {
        FourthOutput::Samples {
            t0: self.t_extended0,
            step: self.step,
            values: self.xi_extended.iter().map(|x| x[component]).collect(),
        }
    }

    pub fn sample_at(&self, t: f64) -> Option<&PlannedSample> {
        let k = ((t - self.samples.first()?.t) / self.step).round();
        if k < 0.0 {
            return None;
        }
        self.samples.get(k as usize)
    }
}

/// Scaled residual of the three force equations at a given `(alpha, beta, mu, F)`.
fn force_residual<T: Real>(prm: &AircraftParams, z: f64, v: f64, gamma: f64, xi: [T; 4], target: [f64; 3]) -> [T; 3] {
    let c = T::cst(0.0);
    let mut s = [c; 12];
    s[ix::Z] = T::cst(z);
    s[ix::V] = T::cst(v);
    s[ix::GAMMA] = T::cst(gamma);
    s[ix::ALPHA] = xi[0];
    s[ix::BETA] = xi[1];
    s[ix::MU] = xi[2];
    let ft = forces_generic(prm, &s, &[xi[3], c, c, c, c], true, None);
    let (sm, cm) = xi[2].sin_cos();
    let w = prm.weight();
    [
        (ft.x - target[0]) / w,
        (sm * ft.y + cm * ft.z - target[1]) / w,
        (cm * ft.y - sm * ft.z - target[2]) / w,
    ]
}

struct ForceSolve<'a> {
    prm: &'a AircraftParams,
    set: OutputSet,
    z: f64,
    v: f64,
    gamma: f64,
    target: [f64; 3],
}

impl ForceSolve<'_> {
    fn eval(&self, xi: [f64; 4]) -> Vector3<f64> {
        Vector3::from(force_residual(self.prm, self.z, self.v, self.gamma, xi, self.target))
    }

    fn jacobian(&self, xi: [f64; 4]) -> Matrix3<f64> {
        let mut j = Matrix3::zeros();
        for (k, &u) in self.set.unknowns().iter().enumerate() {
            let arg: [Taylor<2>; 4] = std::array::from_fn(|i| Taylor([xi[i], if i == u { 1.0 } else { 0.0 }]));
            let r = force_residual(self.prm, self.z, self.v, self.gamma, arg, self.target);
            for i in 0..3 {
                j[(i, k)] = r[i].0[1];
            }
        }
        j
    }

    /// Damped Newton from `xi`; returns the solution or `None`.
    fn newton(&self, mut xi: [f64; 4]) -> Option<[f64; 4]> {
        let mut r = self.eval(xi);
        for _ in 0..NEWTON_MAX_ITER {
            let norm = r.amax();
            if norm < NEWTON_TOL {
                return Some(xi);
            }
            let step = self.jacobian(xi).lu().solve(&r)?;
            let mut t = 1.0;
            loop {
                let mut cand = xi;
                for (k, &u) in self.set.unknowns().iter().enumerate() {
                    cand[u] -= t * step[k];
                }
                let ok = cand[1].abs() < std::f64::consts::FRAC_PI_2;
                if ok {
                    let rc = self.eval(cand);
                    if rc.amax() < norm {
                        xi = cand;
                        r = rc;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-10 {
                    return None;
                }
            }
        }
        (r.amax() < NEWTON_TOL).then_some(xi)
    }
}

/// Starting point for the first sample: level attitude and thrust from the drag-to-lift ratio.
fn initial_guess(prm: &AircraftParams, fourth: f64, set: OutputSet) -> [f64; 4] {
    let c = gna_coefficients(prm, 0.0, 0.0, [0.0; 3], 1.0, [0.0; 3], true);
    let ratio = if c.c_lift.abs() > 1e-6 { (c.c_d / c.c_lift).abs() } else { 0.1 };
    let mut xi = [0.0, 0.0, 0.0, prm.weight() * ratio];
    xi[set.index()] = fourth;
    xi
}

fn central(values: &[f64], k: usize, h: f64) -> f64 {
    (values[k + 1] - values[k - 1]) / (2.0 * h)
}

/// Rates `(p, q, r)` that produce the given `(alpha, beta, mu)` derivatives.
pub fn rates_from_angle_rates(
    prm: &AircraftParams,
    s: &[f64; 12],
    f: f64,
    angle_rates: [f64; 3],
) -> Result<[f64; 3], f64> {
    let rows = [ix::ALPHA, ix::BETA, ix::MU];
    let eval = |pqr: [f64; 3]| {
        let mut st = *s;
        st[ix::P..=ix::R].copy_from_slice(&pqr);
        let d = dynamics_generic(prm, &st, &[f, 0.0, 0.0, 0.0, 0.0], true, None);
        Vector3::from(rows.map(|i| d[i]))
    };
    let b = eval([0.0; 3]);
    let mut m = Matrix3::zeros();
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        m.set_column(k, &(eval(e) - b));
    }
    let det = m.determinant();
    m.lu().solve(&(Vector3::from(angle_rates) - b)).map(|x| [x[0], x[1], x[2]]).ok_or(det)
}

/// Deflections producing the given body angular accelerations.
pub fn deflections_from_rate_derivatives(
    prm: &AircraftParams,
    s: &[f64; 12],
    f: f64,
    eta: f64,
    rate_dots: [f64; 3],
) -> Result<[f64; 3], f64> {
    let (l0, l1) = rate_map(prm, s, f, eta);
    let det = l1.determinant();
    l1.lu().solve(&(Vector3::from(rate_dots) - l0)).map(|x| [x[0], x[1], x[2]]).ok_or(det)
}

/// Plans states and controls of the simplified model along a reference on a uniform grid.
pub fn flat_parametrize(
    prm: &AircraftParams,
    reference: &ReferenceTrajectory,
    set: OutputSet,
    step: f64,
) -> Result<PlannedTrajectory, PlanError> {
    if !(step > 0.0) {
        return Err(PlanError::Config("grid step must be positive".into()));
    }
    let (t0, t1) = reference.span();
    let n_core = ((t1 - t0) / step).round() as usize + 1;
    let n = n_core + 2 * MARGIN;
    let time = |k: usize| t0 + (k as f64 - MARGIN as f64) * step;

    // velocity block and force targets
    let mut angles: Vec<([[f64; 3]; 5], [[f64; 3]; 3])> = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    let mut deltas = Vec::with_capacity(n);
    let mut prev: Option<[f64; 4]> = None;
    for k in 0..n {
        let t = time(k);
        let d = reference.position.derivatives(t);
        let pa = path_angles(d[1], d[2], d[3]).map_err(|msg| PlanError::Domain { t, msg })?;
        let [[v, v_dot, _], [gamma, gamma_dot, _], [_, chi_dot, _]] = pa;
        if gamma.abs() >= std::f64::consts::FRAC_PI_2 - 1e-9 {
            return Err(PlanError::Domain { t, msg: "flight path angle reaches pi/2".into() });
        }
        let m = prm.m;
        let solve = ForceSolve {
            prm,
            set,
            z: d[0][2],
            v,
            gamma,
            target: [m * v_dot, -m * v * gamma_dot, m * v * gamma.cos() * chi_dot],
        };
        let fourth = reference.fourth.value(t);
        let start = match prev {
            Some(mut p) => {
                p[set.index()] = fourth;
                p
            }
            None => initial_guess(prm, fourth, set),
        };
        let sol = solve.newton(start).or_else(|| {
            // coarse search over attitude when the first guess fails
            let deg = std::f64::consts::PI / 180.0;
            (-4..=30).step_by(2).find_map(|a| {
                (-8..=8).find_map(|b| {
                    let mut g = start;
                    g[0] = a as f64 * deg;
                    let other = set.unknowns()[1];
                    if other != 3 {
                        g[other] = b as f64 * 10.0 * deg;
                    }
                    solve.newton(g)
                })
            })
        });
        let Some(sol) = sol else {
            let det = solve.jacobian(start).determinant() * prm.weight().powi(3);
            return Err(PlanError::Newton { t, delta: det });
        };
        deltas.push(solve.jacobian(sol).determinant() * prm.weight().powi(3));
        prev = Some(sol);
        let mut pa = pa;
        if let Some((_, last)) = angles.last() {
            let prev_chi = last[2][0];
            let tau = 2.0 * std::f64::consts::PI;
            pa[2][0] -= tau * ((pa[2][0] - prev_chi) / tau).round();
        }
        angles.push((d, pa));
        xi.push(sol);
    }

    // rates from finite differences of the angles
    let col = |c: usize| xi.iter().map(|x| x[c]).collect::<Vec<f64>>();
    let (al, be, mu, ff) = (col(0), col(1), col(2), col(3));
    let state_at = |k: usize, pqr: [f64; 3]| {
        let (d, pa) = &angles[k];
        AircraftState {
            x: d[0][0],
            y: d[0][1],
            z: d[0][2],
            v: pa[0][0],
            gamma: pa[1][0],
            chi: pa[2][0],
            alpha: al[k],
            beta: be[k],
            mu: mu[k],
            p: pqr[0],
            q: pqr[1],
            r: pqr[2],
        }
    };
    let mut rates = vec![[f64::NAN; 3]; n];
    for k in 1..n - 1 {
        let target = [central(&al, k, step), central(&be, k, step), central(&mu, k, step)];
        let s = state_at(k, [0.0; 3]).to_array();
        rates[k] = rates_from_angle_rates(prm, &s, ff[k], target).map_err(|det| PlanError::Singular {
            t: time(k),
            what: "angle-rate map".into(),
            det,
        })?;
    }
    let rcol = |c: usize| rates.iter().map(|x| x[c]).collect::<Vec<f64>>();
    let (pp, qq, rr) = (rcol(0), rcol(1), rcol(2));
    let mut samples = Vec::with_capacity(n_core);
    for k in MARGIN..n - MARGIN {
        let t = time(k);
        let state = state_at(k, rates[k]);
        let rd = [central(&pp, k, step), central(&qq, k, step), central(&rr, k, step)];
        let defl = deflections_from_rate_derivatives(prm, &state.to_array(), ff[k], 0.0, rd)
            .map_err(|det| PlanError::Singular { t, what: "moment map".into(), det })?;
        let pa = angles[k].1;
        samples.push(PlannedSample {
            t,
            state,
            controls: Controls { f: ff[k], delta_l: defl[0], delta_m: defl[1], delta_n: defl[2], eta: 0.0 },
            chain: Chain {
                v: pa[0],
                gamma: pa[1],
                chi: pa[2],
                alpha: [al[k], central(&al, k, step)],
                beta: [be[k], central(&be, k, step)],
                mu: [mu[k], central(&mu, k, step)],
                f: [ff[k], central(&ff, k, step)],
                p: [pp[k], rd[0]],
                q: [qq[k], rd[1]],
                r: [rr[k], rd[2]],
            },
            delta_xi: deltas[k],
        });
    }
    Ok(PlannedTrajectory { step, output_set: set, samples, xi_extended: xi, t_extended0: time(0) })
}

/// Per-sample max-norm deviation between the simplified dynamics and
/// central differences of the planned states; end samples use one-sided differences.
pub fn planner_residuals(prm: &AircraftParams, plan: &PlannedTrajectory) -> Vec<f64> {
    let s = &plan.samples;
    let h = plan.step;
    (0..s.len())
        .map(|k| {
            let d = dynamics_generic(prm, &s[k].state.to_array(), &s[k].controls.to_array(), true, None);
            let fd: [f64; 12] = if k == 0 || k + 1 == s.len() {
                // second-order one-sided difference
                let (a, b, c, sign) = if k == 0 { (0, 1, 2, 1.0) } else { (k, k - 1, k - 2, -1.0) };
                let (x0, x1, x2) = (s[a].state.to_array(), s[b].state.to_array(), s[c].state.to_array());
                std::array::from_fn(|i| sign * (-3.0 * x0[i] + 4.0 * x1[i] - x2[i]) / (2.0 * h))
            } else {
                let (xp, xm) = (s[k + 1].state.to_array(), s[k - 1].state.to_array());
                std::array::from_fn(|i| (xp[i] - xm[i]) / (2.0 * h))
            };
            (0..12).map(|i| (d[i] - fd[i]).abs()).fold(0.0, f64::max)
        })
        .collect()
}

/// Largest entry of [`planner_residuals`].
pub fn planner_residual(prm: &AircraftParams, plan: &PlannedTrajectory) -> f64 {
    planner_residuals(prm, plan).into_iter().fold(0.0, f64::max)
}
