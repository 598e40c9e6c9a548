//! Cascade linearizing feedback: a slow loop on `(x, y, z, xi)` commanding
//! `(p, q, r, dF/dt)`, and a fast loop on `(p, q, r)` commanding the surfaces.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::{OutputSet, PlanError};
use crate::aircraft::{dynamics_generic, forces_generic, ix, wind_to_earth, AircraftParams};
use crate::real::{Real, Taylor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGains {
    /// Triple pole of the position loop; also the pole of the fourth output.
    pub k1: f64,
    /// Pole of the rate loop.
    pub k2: f64,
}

impl Default for FeedbackGains {
    fn default() -> Self {
        Self { k1: -5.0, k2: -15.0 }
    }
}

impl FeedbackGains {
    /// Coefficients `P0..P3` of `(X - k1)^3`.
    pub fn poly(&self) -> [f64; 4] {
        let k = self.k1;
        [-k * k * k, 3.0 * k * k, -3.0 * k, 1.0]
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.k1 < 0.0 && self.k2 < 0.0 {
            Ok(())
        } else {
            Err(PlanError::Config(format!("gains must be negative, got k1 = {}, k2 = {}", self.k1, self.k2)))
        }
    }
}

/// Earth-frame acceleration of the simplified model from the slow state
/// `(x, y, z, V, gamma, chi, alpha, beta, mu, p, q, r, F)`.
fn acceleration<T: Real>(prm: &AircraftParams, s: &[T; 13], eta: f64) -> [T; 3] {
    let s12: [T; 12] = std::array::from_fn(|i| s[i]);
    let c = T::cst(0.0);
    let ft = forces_generic(prm, &s12, &[s[12], c, c, c, T::cst(eta)], true, None);
    wind_to_earth(s[ix::GAMMA], s[ix::CHI], s[ix::MU], [ft.x, ft.y, ft.z]).map(|a| a / prm.m)
}

/// Velocity and acceleration of the simplified model at a state.
pub fn position_derivatives(prm: &AircraftParams, s: &[f64; 13], eta: f64) -> [[f64; 3]; 2] {
    let v = wind_to_earth(s[ix::GAMMA], s[ix::CHI], s[ix::MU], [s[ix::V], 0.0, 0.0]);
    [v, acceleration(prm, s, eta)]
}

/// `(x''', y''', z''', d xi/dt) = delta0 + delta1 (p, q, r, dF/dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JerkMap {
    pub delta0: Vector4<f64>,
    pub delta1: Matrix4<f64>,
}

/// Exact affine jerk map of the simplified model, by dual numbers along the
/// state derivative for each commanded channel.
pub fn jerk_map(prm: &AircraftParams, s: &[f64; 13], eta: f64, set: OutputSet) -> JerkMap {
    let sdot = |u: [f64; 4]| -> [f64; 13] {
        let mut st: [f64; 12] = std::array::from_fn(|i| s[i]);
        st[ix::P..=ix::R].copy_from_slice(&u[..3]);
        let d = dynamics_generic(prm, &st, &[s[12], 0.0, 0.0, 0.0, eta], true, None);
        std::array::from_fn(|i| if i < 12 { d[i] } else { u[3] })
    };
    let eval = |u: [f64; 4]| -> Vector4<f64> {
        let ds = sdot(u);
        let arg: [Taylor<2>; 13] = std::array::from_fn(|i| Taylor([s[i], ds[i]]));
        let jerk = acceleration(prm, &arg, eta);
        let fourth = match set {
            OutputSet::Beta => ds[ix::BETA],
            OutputSet::Mu => ds[ix::MU],
            OutputSet::F => u[3],
        };
        Vector4::new(jerk[0].0[1], jerk[1].0[1], jerk[2].0[1], fourth)
    };
    let delta0 = eval([0.0; 4]);
    let mut delta1 = Matrix4::zeros();
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        delta1.set_column(k, &(eval(e) - delta0));
    }
    JerkMap { delta0, delta1 }
}

/// `(dp/dt, dq/dt, dr/dt) = lambda0 + lambda1 (dl, dm, dn)`.
pub fn rate_map(prm: &AircraftParams, s: &[f64; 12], f: f64, eta: f64) -> (Vector3<f64>, Matrix3<f64>) {
    let eval = |d: [f64; 3]| {
        let out = dynamics_generic(prm, s, &[f, d[0], d[1], d[2], eta], true, None);
        Vector3::new(out[ix::P], out[ix::Q], out[ix::R])
    };
    let l0 = eval([0.0; 3]);
    let mut l1 = Matrix3::zeros();
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        l1.set_column(k, &(eval(e) - l0));
    }
    (l0, l1)
}

/// Reference values needed by the feedback at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlReference {
    /// Position derivatives of orders 0 to 3.
    pub position: [[f64; 3]; 4],
    pub xi: f64,
    pub xi_dot: f64,
    /// Planned `(p, q, r)` and their derivatives.
    pub rates: [f64; 3],
    pub rate_dots: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackOutput {
    pub deflections: [f64; 3],
    pub f_dot: f64,
    /// Commanded `(p, q, r)`.
    pub rates_cmd: [f64; 3],
    pub det_delta1: f64,
    pub det_lambda1: f64,
}

/// Feedback law at state `s` (twelve states and thrust). `prev_offset` holds
/// the previous difference between commanded and planned rates and is updated;
/// its backward difference over `dt` completes the rate feedforward.
pub fn cascade_feedback(
    prm: &AircraftParams,
    s: &[f64; 13],
    eta: f64,
    r: &ControlReference,
    gains: &FeedbackGains,
    set: OutputSet,
    prev_offset: &mut Option<[f64; 3]>,
    dt: f64,
) -> Result<FeedbackOutput, PlanError> {
    let [p0, p1, p2, p3] = gains.poly();
    let [vel, acc] = position_derivatives(prm, s, eta);
    let mut v = Vector4::zeros();
    for i in 0..3 {
        let e = r.position[0][i] - s[i];
        let ed = r.position[1][i] - vel[i];
        let edd = r.position[2][i] - acc[i];
        v[i] = p0 * e + p1 * ed + p2 * edd + p3 * r.position[3][i];
    }
    let xi = match set {
        OutputSet::Beta => s[ix::BETA],
        OutputSet::Mu => s[ix::MU],
        OutputSet::F => s[12],
    };
    v[3] = -gains.k1 * (r.xi - xi) + r.xi_dot;
    let jm = jerk_map(prm, s, eta, set);
    let det_delta1 = jm.delta1.determinant();
    let u = jm.delta1.lu().solve(&(v - jm.delta0)).ok_or(PlanError::Singular {
        t: f64::NAN,
        what: "jerk map".into(),
        det: det_delta1,
    })?;
    let rates_cmd = [u[0], u[1], u[2]];
    let offset: [f64; 3] = std::array::from_fn(|i| rates_cmd[i] - r.rates[i]);
    let offset_dot = match prev_offset {
        Some(prev) if dt > 0.0 => std::array::from_fn(|i| (offset[i] - prev[i]) / dt),
        _ => [0.0; 3],
    };
    *prev_offset = Some(offset);
    let w: Vector3<f64> = Vector3::from_fn(|i, _| {
        let rate = s[ix::P + i];
        -gains.k2 * (rates_cmd[i] - rate) + r.rate_dots[i] + offset_dot[i]
    });
    let s12: [f64; 12] = std::array::from_fn(|i| s[i]);
    let (l0, l1) = rate_map(prm, &s12, s[12], eta);
    let det_lambda1 = l1.determinant();
    let d = l1.lu().solve(&(w - l0)).ok_or(PlanError::Singular {
        t: f64::NAN,
        what: "moment map".into(),
        det: det_lambda1,
    })?;
    Ok(FeedbackOutput { deflections: [d[0], d[1], d[2]], f_dot: u[3], rates_cmd, det_delta1, det_lambda1 })
}
