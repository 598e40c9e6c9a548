//! Six degree of freedom aircraft model: frames, GNA aerodynamics,
//! forces and torques, full and simplified dynamics.

mod symbolic;
mod trim;

use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{Real, Taylor};

pub use symbolic::{aircraft_system, singularity_determinants, ModelSize, SingularityDeterminants, SymbolicModel};
pub use trim::{stall_analysis, trim_level_flight, trim_sweep, trim_level_flight_at, StallCase, StallResult, TrimPoint};

pub const G0: f64 = 9.80665;
pub const RHO0: f64 = 1.225;
/// Number of GNA coefficients.
pub const N_THETA: usize = 45;

const LB: f64 = 0.453_592_37;
const LBF: f64 = 4.448_221_615_260_5;
const FT: f64 = 0.3048;
const SLUG_FT2: f64 = 1.355_817_948_331_400_4;

#[derive(Debug, Error)]
pub enum AircraftError {
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("trim failed: {0}")]
    Trim(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateScaling {
    /// `p~ = a p`, `q~ = b q`, `r~ = a r`.
    Unnormalized,
    /// `p~ = a p / 2V`, `q~ = b q / 2V`, `r~ = a r / 2V`.
    #[default]
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RhoModel {
    Constant(f64),
    /// `1.225 (1 + 0.0065 z / 288.15)^(9.80665 / (287.053 * 0.0065) - 1)`, `z` negative aloft.
    Altitude,
}

pub const RHO_LAPSE: f64 = 0.0065;
pub const RHO_T0: f64 = 288.15;
pub const RHO_R: f64 = 287.053;

pub fn rho_exponent() -> f64 {
    9.80665 / (RHO_R * RHO_LAPSE) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Full,
    Simplified,
}

impl Model {
    pub fn simplified(self) -> bool {
        self == Model::Simplified
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AircraftParams {
    pub name: String,
    pub m: f64,
    pub s: f64,
    /// Wing span.
    pub a: f64,
    /// Mean aerodynamic chord.
    pub b: f64,
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub ixz: f64,
    pub y_p: f64,
    /// Engine cant angle, radians.
    pub eps: f64,
    pub f_max: Option<f64>,
    pub theta: Vec<f64>,
    pub rate_scaling: RateScaling,
    pub rho: RhoModel,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Units {
    #[default]
    #[serde(alias = "si")]
    SI,
    /// lb, ft, ft², slug·ft², lbf.
    #[serde(alias = "imperial")]
    Imperial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RhoSpec {
    Constant(f64),
    Named(String),
}

/// On-disk parameter record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ParamsFile {
    pub name: String,
    #[serde(default)]
    pub units: Units,
    pub m: f64,
    pub S: f64,
    pub a: f64,
    pub b: f64,
    pub Ixx: f64,
    pub Iyy: f64,
    pub Izz: f64,
    #[serde(default)]
    pub Ixz: f64,
    #[serde(default)]
    pub y_p: f64,
    #[serde(default)]
    pub eps_deg: f64,
    #[serde(default)]
    pub F_max: Option<f64>,
    pub theta: Vec<f64>,
    #[serde(default)]
    pub rate_scaling: RateScaling,
    #[serde(default)]
    rho: Option<RhoSpec>,
}

impl AircraftParams {
    pub fn from_file_record(f: ParamsFile) -> Result<Self, AircraftError> {
        let (mass, len, inertia, force) = match f.units {
            Units::SI => (1.0, 1.0, 1.0, 1.0),
            Units::Imperial => (LB, FT, SLUG_FT2, LBF),
        };
        let rho = match f.rho {
            None => RhoModel::Constant(RHO0),
            Some(RhoSpec::Constant(c)) => RhoModel::Constant(c),
            Some(RhoSpec::Named(n)) if n == "altitude" => RhoModel::Altitude,
            Some(RhoSpec::Named(n)) => return Err(AircraftError::Params(format!("unknown rho model `{n}`"))),
        };
        let p = AircraftParams {
            name: f.name,
            m: f.m * mass,
            s: f.S * len * len,
            a: f.a * len,
            b: f.b * len,
            ixx: f.Ixx * inertia,
            iyy: f.Iyy * inertia,
            izz: f.Izz * inertia,
            ixz: f.Ixz * inertia,
            y_p: f.y_p * len,
            eps: f.eps_deg.to_radians(),
            f_max: f.F_max.map(|x| x * force),
            theta: f.theta,
            rate_scaling: f.rate_scaling,
            rho,
            g: G0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self, AircraftError> {
        Self::from_file_record(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AircraftError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), AircraftError> {
        let bad = |m: &str| Err(AircraftError::Params(m.into()));
        if !(self.m > 0.0 && self.s > 0.0 && self.a > 0.0 && self.b > 0.0) {
            return bad("m, S, a and b must be positive");
        }
        if !(self.ixx > 0.0 && self.iyy > 0.0 && self.izz > 0.0 && self.ixx * self.izz > self.ixz * self.ixz) {
            return bad("the inertia matrix is not positive definite");
        }
        if self.theta.len() != N_THETA {
            return Err(AircraftError::Params(format!(
                "expected {N_THETA} GNA coefficients, found {}",
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return bad("GNA coefficients must be finite");
        }
        Ok(())
    }

    /// GNA coefficient `theta_i`, one-based.
    pub fn th(&self, i: usize) -> f64 {
        self.theta[i - 1]
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::new(self.ixx, 0.0, -self.ixz, 0.0, self.iyy, 0.0, -self.ixz, 0.0, self.izz)
    }

    pub fn inertia_inverse(&self) -> Matrix3<f64> {
        let d = self.ixx * self.izz - self.ixz * self.ixz;
        Matrix3::new(self.izz / d, 0.0, self.ixz / d, 0.0, 1.0 / self.iyy, 0.0, self.ixz / d, 0.0, self.ixx / d)
    }

    pub fn weight(&self) -> f64 {
        self.m * self.g
    }

    pub fn rho_at<T: Real>(&self, z: T) -> T {
        match self.rho {
            RhoModel::Constant(c) => T::cst(c),
            RhoModel::Altitude => (z * (RHO_LAPSE / RHO_T0) + 1.0).powf(rho_exponent()) * RHO0,
        }
    }
}

/// Indices into the 12-component state vector.
pub mod ix {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const Z: usize = 2;
    pub const V: usize = 3;
    pub const GAMMA: usize = 4;
    pub const CHI: usize = 5;
    pub const ALPHA: usize = 6;
    pub const BETA: usize = 7;
    pub const MU: usize = 8;
    pub const P: usize = 9;
    pub const Q: usize = 10;
    pub const R: usize = 11;
}

pub const STATE_NAMES: [&str; 12] = ["x", "y", "z", "V", "gamma", "chi", "alpha", "beta", "mu", "p", "q", "r"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AircraftState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub gamma: f64,
    pub chi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl AircraftState {
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.x, self.y, self.z, self.v, self.gamma, self.chi, self.alpha, self.beta, self.mu, self.p, self.q,
            self.r,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        let [x, y, z, v, gamma, chi, alpha, beta, mu, p, q, r] = a;
        Self { x, y, z, v, gamma, chi, alpha, beta, mu, p, q, r }
    }

    pub fn check_domain(&self) -> Result<(), AircraftError> {
        use std::f64::consts::FRAC_PI_2;
        if !(self.v > 0.0) {
            return Err(AircraftError::Domain(format!("V = {} is not positive", self.v)));
        }
        if !(self.gamma.abs() < FRAC_PI_2) {
            return Err(AircraftError::Domain(format!("|gamma| = {} reaches pi/2", self.gamma.abs())));
        }
        if !(self.beta.abs() < FRAC_PI_2) {
            return Err(AircraftError::Domain(format!("|beta| = {} reaches pi/2", self.beta.abs())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Controls {
    /// Total thrust.
    #[serde(rename = "F")]
    pub f: f64,
    pub delta_l: f64,
    pub delta_m: f64,
    pub delta_n: f64,
    /// Differential thrust ratio `(F1 - F2) / (F1 + F2)`.
    #[serde(default)]
    pub eta: f64,
}

impl Controls {
    pub fn to_array(&self) -> [f64; 5] {
        [self.f, self.delta_l, self.delta_m, self.delta_n, self.eta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aero<T> {
    pub c_d: T,
    pub c_side: T,
    pub c_lift: T,
    pub c_x: T,
    pub c_y: T,
    pub c_z: T,
    pub c_roll: T,
    pub c_pitch: T,
    pub c_yaw: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceTorque<T> {
    /// Wind-frame forces, gravity included.
    pub x: T,
    pub y: T,
    pub z: T,
    /// Body torques.
    pub l: T,
    pub m: T,
    pub n: T,
    pub aero: Aero<T>,
}

/// Wind-frame coefficients from the drag, side and lift coefficients.
pub fn wind_from_gna<T: Real>(beta: T, c_d: T, c_side: T) -> (T, T) {
    let (sb, cb) = beta.sin_cos();
    (cb * c_d - sb * c_side, sb * c_d + cb * c_side)
}

/// Inverse rotation of [`wind_from_gna`].
pub fn gna_from_wind<T: Real>(beta: T, c_x: T, c_y: T) -> (T, T) {
    let (sb, cb) = beta.sin_cos();
    (cb * c_x + sb * c_y, cb * c_y - sb * c_x)
}

/// Scaled angular rates entering the GNA polynomials.
pub fn scaled_rates<T: Real>(p: &AircraftParams, v: T, rates: [T; 3]) -> [T; 3] {
    let [pr, qr, rr] = rates;
    match p.rate_scaling {
        RateScaling::Unnormalized => [pr * p.a, qr * p.b, rr * p.a],
        RateScaling::Standard => {
            let two_v = v * 2.0;
            [pr * p.a / two_v, qr * p.b / two_v, rr * p.a / two_v]
        }
    }
}

/// GNA coefficients; in simplified mode rates and deflections are zeroed
/// inside the force coefficients only.
#[allow(clippy::too_many_arguments)]
pub fn gna_coefficients<T: Real>(
    prm: &AircraftParams,
    alpha: T,
    beta: T,
    rates: [T; 3],
    v: T,
    deflections: [T; 3],
    simplified: bool,
) -> Aero<T> {
    let th = |i: usize| prm.th(i);
    let [pt, qt, rt] = scaled_rates(prm, v, rates);
    let [dl, dm, dn] = deflections;
    let z = T::cst(0.0);
    let (fp, fq, fr, fdl, fdm, fdn) = if simplified { (z, z, z, z, z, z) } else { (pt, qt, rt, dl, dm, dn) };
    let a2 = alpha * alpha;
    let a3 = a2 * alpha;
    let a4 = a3 * alpha;
    let c_d = alpha * th(2)
        + alpha * fq * th(3)
        + alpha * fdm * th(4)
        + a2 * th(5)
        + a2 * fq * th(6)
        + fdm * th(7)
        + a3 * th(8)
        + a3 * fq * th(9)
        + a4 * th(10)
        + th(1);
    let c_side = beta * th(11) + fp * th(12) + fr * th(13) + fdl * th(14) + fdn * th(15);
    let c_lift = alpha * th(17) + fq * th(18) + fdm * th(19) + alpha * fq * th(20) + a2 * th(21) + a3 * th(22)
        + a4 * th(23)
        + th(16);
    let c_roll = beta * th(24) + pt * th(25) + rt * th(26) + dl * th(27) + dn * th(28);
    let c_pitch = alpha * th(30)
        + qt * th(31)
        + dm * th(32)
        + alpha * qt * th(33)
        + a2 * qt * th(34)
        + a2 * dm * th(35)
        + a3 * qt * th(36)
        + a3 * dm * th(37)
        + a4 * th(38)
        + th(29);
    let c_yaw = beta * th(39) + pt * th(40) + rt * th(41) + dl * th(42) + dn * th(43) + beta * beta * th(44)
        + beta * beta * beta * th(45);
    let (c_x, c_y) = wind_from_gna(beta, c_d, c_side);
    Aero { c_d, c_side, c_lift, c_x, c_y, c_z: c_lift, c_roll, c_pitch, c_yaw }
}

/// Forces and torques for a generic state vector `s` and controls
/// `c = [F, dl, dm, dn, eta]`; `external` is an extra wind-frame force.
pub fn forces_generic<T: Real>(
    prm: &AircraftParams,
    s: &[T; 12],
    c: &[T; 5],
    simplified: bool,
    external: Option<[T; 3]>,
) -> ForceTorque<T> {
    use ix::*;
    let v = s[V];
    let aero = gna_coefficients(prm, s[ALPHA], s[BETA], [s[P], s[Q], s[R]], v, [c[1], c[2], c[3]], simplified);
    let qs = prm.rho_at(s[Z]) * v * v * (0.5 * prm.s);
    let f = c[0];
    let (sae, cae) = (s[ALPHA] + prm.eps).sin_cos();
    let (sb, cb) = s[BETA].sin_cos();
    let (sg, cg) = s[GAMMA].sin_cos();
    let (sm, cm) = s[MU].sin_cos();
    let gm = prm.g * prm.m;
    let mut x = f * cae * cb - qs * aero.c_x - sg * gm;
    let mut y = f * cae * sb + qs * aero.c_y + cg * sm * gm;
    let mut z = -(f * sae) - qs * aero.c_z + cg * cm * gm;
    if let Some([ex, ey, ez]) = external {
        x = x + ex;
        y = y + ey;
        z = z + ez;
    }
    let diff = f * c[4];
    let l = -(diff * (prm.y_p * prm.eps.sin())) + qs * aero.c_roll * prm.a;
    let m = qs * aero.c_pitch * prm.b;
    let n = diff * (prm.y_p * prm.eps.cos()) + qs * aero.c_yaw * prm.a;
    ForceTorque { x, y, z, l, m, n, aero }
}

pub fn forces_and_torques(
    prm: &AircraftParams,
    state: &AircraftState,
    controls: &Controls,
    model: Model,
) -> ForceTorque<f64> {
    forces_generic(prm, &state.to_array(), &controls.to_array(), model.simplified(), None)
}

/// Right-hand side of the twelve state equations.
pub fn dynamics_generic<T: Real>(
    prm: &AircraftParams,
    s: &[T; 12],
    c: &[T; 5],
    simplified: bool,
    external: Option<[T; 3]>,
) -> [T; 12] {
    use ix::*;
    let ft = forces_generic(prm, s, c, simplified, external);
    let (v, m) = (s[V], prm.m);
    let (sg, cg) = s[GAMMA].sin_cos();
    let tg = sg / cg;
    let (sx, cx) = s[CHI].sin_cos();
    let (sa, ca) = s[ALPHA].sin_cos();
    let (sb, cb) = s[BETA].sin_cos();
    let (sm, cm) = s[MU].sin_cos();
    let (p, q, r) = (s[P], s[Q], s[R]);
    let mv = v * m;
    let mut d = [T::cst(0.0); 12];
    d[X] = v * cx * cg;
    d[Y] = v * sx * cg;
    d[Z] = -(v * sg);
    d[V] = ft.x / m;
    d[GAMMA] = -(ft.y * sm + ft.z * cm) / mv;
    d[CHI] = (ft.y * cm - ft.z * sm) / (cg * mv);
    d[ALPHA] = (-(p * ca * sb) + q * cb - r * sa * sb + ft.z / mv) / cb;
    d[BETA] = p * sa - r * ca + ft.y / mv;
    d[MU] = (p * ca + r * sa + (ft.y * cm * tg * cb - ft.z * (sm * tg * cb + sb)) / mv) / cb;
    let (ixx, iyy, izz, ixz) = (prm.ixx, prm.iyy, prm.izz, prm.ixz);
    let b0 = q * r * (iyy - izz) + p * q * ixz + ft.l;
    let b1 = p * r * (izz - ixx) + (r * r - p * p) * ixz + ft.m;
    let b2 = p * q * (ixx - iyy) - r * q * ixz + ft.n;
    let ji = prm.inertia_inverse();
    d[P] = b0 * ji[(0, 0)] + b2 * ji[(0, 2)];
    d[Q] = b1 * ji[(1, 1)];
    d[R] = b0 * ji[(2, 0)] + b2 * ji[(2, 2)];
    d
}

/// State derivative; fails outside `V > 0`, `|gamma| < pi/2`, `|beta| < pi/2`.
pub fn dynamics(
    prm: &AircraftParams,
    state: &AircraftState,
    controls: &Controls,
    model: Model,
) -> Result<[f64; 12], AircraftError> {
    state.check_domain()?;
    Ok(dynamics_generic(prm, &state.to_array(), &controls.to_array(), model.simplified(), None))
}

/// Restricted model: derivatives of `(z, V, gamma, alpha, beta, mu, p, q, r)`.
pub fn dynamics_restricted(
    prm: &AircraftParams,
    state: &AircraftState,
    controls: &Controls,
    model: Model,
) -> Result<[f64; 9], AircraftError> {
    let d = dynamics(prm, state, controls, model)?;
    Ok(RESTRICTED.map(|k| d[k]))
}

/// State indices kept by the nine-state model.
pub const RESTRICTED: [usize; 9] = [ix::Z, ix::V, ix::GAMMA, ix::ALPHA, ix::BETA, ix::MU, ix::P, ix::Q, ix::R];

/// Unit vectors of the wind frame expressed in the earth frame.
pub fn wind_axes<T: Real>(gamma: T, chi: T, mu: T) -> [[T; 3]; 3] {
    let (sg, cg) = gamma.sin_cos();
    let (sx, cx) = chi.sin_cos();
    let (sm, cm) = mu.sin_cos();
    let z = T::cst(0.0);
    let xw = [cg * cx, cg * sx, -sg];
    let yk = [-sx, cx, z];
    let zk = [sg * cx, sg * sx, cg];
    let yw = [yk[0] * cm + zk[0] * sm, yk[1] * cm + zk[1] * sm, yk[2] * cm + zk[2] * sm];
    let zw = [zk[0] * cm - yk[0] * sm, zk[1] * cm - yk[1] * sm, zk[2] * cm - yk[2] * sm];
    [xw, yw, zw]
}

/// Wind-frame components of an earth-frame vector.
pub fn earth_to_wind<T: Real>(gamma: T, chi: T, mu: T, v: [T; 3]) -> [T; 3] {
    let ax = wind_axes(gamma, chi, mu);
    ax.map(|e| e[0] * v[0] + e[1] * v[1] + e[2] * v[2])
}

/// Earth-frame components of a wind-frame vector.
pub fn wind_to_earth<T: Real>(gamma: T, chi: T, mu: T, w: [T; 3]) -> [T; 3] {
    let [xw, yw, zw] = wind_axes(gamma, chi, mu);
    [0, 1, 2].map(|k| xw[k] * w[0] + yw[k] * w[1] + zw[k] * w[2])
}

/// Mechanical energy `V^2/2 - g z` per unit mass and its rate
/// `-(rho/2) S V^3 C_x / m` for an unpowered aircraft.
pub fn specific_energy(prm: &AircraftParams, s: &AircraftState) -> f64 {
    0.5 * s.v * s.v - prm.g * s.z
}

pub fn glide_energy_rate(prm: &AircraftParams, s: &AircraftState, c: &Controls, model: Model) -> f64 {
    let ft = forces_and_torques(prm, s, c, model);
    -0.5 * prm.rho_at(s.z) * prm.s * s.v.powi(3) * ft.aero.c_x / prm.m
}

/// Directional derivative of `f` at `x` along `dir` using dual numbers.
pub fn directional<const K: usize, const M: usize>(
    f: impl Fn(&[Taylor<2>; K]) -> [Taylor<2>; M],
    x: &[f64; K],
    dir: &[f64; K],
) -> ([f64; M], [f64; M]) {
    let arg: [Taylor<2>; K] = std::array::from_fn(|i| Taylor([x[i], dir[i]]));
    let out = f(&arg);
    (out.map(|t| t.0[0]), out.map(|t| t.0[1]))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// A light, low-speed airframe with GNA-shaped coefficients.
    pub(crate) fn test_params() -> AircraftParams {
        let mut theta = vec![0.0; N_THETA];
        let set = |t: &mut Vec<f64>, i: usize, v: f64| t[i - 1] = v;
        for (i, v) in [
            (1, 0.03),
            (2, 0.05),
            (3, 0.4),
            (4, 0.1),
            (5, 1.1),
            (6, 0.3),
            (7, 0.02),
            (8, -0.6),
            (10, 0.2),
            (11, -0.6),
            (12, 0.05),
            (13, 0.3),
            (14, 0.02),
            (15, 0.15),
            (16, 0.2),
            (17, 4.8),
            (18, 4.0),
            (19, 0.4),
            (20, 1.0),
            (21, 1.5),
            (22, -15.0),
            (23, 1.0),
            (24, -0.08),
            (25, -0.45),
            (26, 0.1),
            (27, -0.15),
            (28, 0.01),
            (29, 0.04),
            (30, -0.7),
            (31, -12.0),
            (32, -1.2),
            (33, 0.5),
            (34, -1.0),
            (35, 0.3),
            (36, 0.2),
            (37, -0.2),
            (38, -0.3),
            (39, 0.09),
            (40, -0.05),
            (41, -0.15),
            (42, -0.01),
            (43, -0.08),
            (44, 0.02),
            (45, -0.05),
        ] {
            set(&mut theta, i, v);
        }
        AircraftParams {
            name: "test".into(),
            m: 3.0,
            s: 1.6,
            a: 3.0,
            b: 0.55,
            ixx: 0.9,
            iyy: 0.6,
            izz: 1.4,
            ixz: 0.05,
            y_p: 0.4,
            eps: 0.02,
            f_max: None,
            theta,
            rate_scaling: RateScaling::Standard,
            rho: RhoModel::Constant(RHO0),
            g: G0,
        }
    }

    pub(crate) fn sample_state() -> AircraftState {
        AircraftState {
            x: 10.0,
            y: -4.0,
            z: -120.0,
            v: 14.0,
            gamma: 0.2,
            chi: 0.7,
            alpha: 0.08,
            beta: 0.05,
            mu: -0.3,
            p: 0.1,
            q: -0.05,
            r: 0.2,
        }
    }

    pub(crate) fn sample_controls() -> Controls {
        Controls { f: 12.0, delta_l: 0.02, delta_m: -0.05, delta_n: 0.03, eta: 0.0 }
    }

    #[test]
    fn constant_terms_only() {
        let p = test_params();
        let c = gna_coefficients(&p, 0.0, 0.0, [0.0; 3], 20.0, [0.0; 3], false);
        assert_eq!((c.c_d, c.c_side, c.c_lift), (p.th(1), 0.0, p.th(16)));
        assert_eq!((c.c_roll, c.c_pitch, c.c_yaw), (0.0, p.th(29), 0.0));
        assert_eq!((c.c_x, c.c_y, c.c_z), (p.th(1), 0.0, p.th(16)));
    }

    #[test]
    fn simplified_drops_rates_in_forces_only() {
        let p = test_params();
        let (alpha, v) = (0.1, 12.0);
        let full = gna_coefficients(&p, alpha, 0.0, [0.0, 0.3, 0.0], v, [0.0; 3], false);
        let simp = gna_coefficients(&p, alpha, 0.0, [0.0, 0.3, 0.0], v, [0.0; 3], true);
        let qt = p.b * 0.3 / (2.0 * v);
        let want_d = qt * (p.th(3) * alpha + p.th(6) * alpha * alpha + p.th(9) * alpha.powi(3));
        let want_l = qt * (p.th(18) + p.th(20) * alpha);
        assert!((full.c_d - simp.c_d - want_d).abs() < 1e-15);
        assert!((full.c_lift - simp.c_lift - want_l).abs() < 1e-15);
        assert_eq!(full.c_pitch, simp.c_pitch);
        assert_eq!(full.c_side, simp.c_side);
    }

    #[test]
    fn wind_coefficients_round_trip() {
        let (cx, cy) = wind_from_gna(0.3, 0.05, -0.2);
        assert!((cx - (0.3f64.cos() * 0.05 + 0.3f64.sin() * 0.2)).abs() < 1e-16);
        let (cd, cs) = gna_from_wind(0.3, cx, cy);
        assert!((cd - 0.05).abs() < 1e-16 && (cs + 0.2).abs() < 1e-16);
    }

    #[test]
    fn glide_drag_and_symmetric_flight() {
        let p = test_params();
        let s = AircraftState { v: 15.0, gamma: -0.1, alpha: 0.05, z: -50.0, ..Default::default() };
        let c = Controls::default();
        let ft = forces_and_torques(&p, &s, &c, Model::Full);
        let want = -0.5 * RHO0 * p.s * 225.0 * ft.aero.c_x - p.g * p.m * (-0.1f64).sin();
        assert!((ft.x - want).abs() < 1e-12);
        assert_eq!((ft.y, ft.l, ft.n), (0.0, 0.0, 0.0));
        let c = Controls { f: 20.0, eta: 1.0, ..Default::default() };
        let one = forces_and_torques(&p, &s, &c, Model::Full);
        let sym = forces_and_torques(&p, &s, &Controls { eta: 0.0, ..c }, Model::Full);
        assert!((one.n - sym.n - p.y_p * p.eps.cos() * 20.0).abs() < 1e-12);
        assert!((one.l - sym.l + p.y_p * p.eps.sin() * 20.0).abs() < 1e-12);
    }

    #[test]
    fn kinematics_and_domain() {
        let p = test_params();
        let s = AircraftState { v: 20.0, ..Default::default() };
        let d = dynamics(&p, &s, &Controls::default(), Model::Full).unwrap();
        assert_eq!((d[0], d[1], d[2]), (20.0, 0.0, 0.0));
        for bad in [
            AircraftState { v: 0.0, ..s },
            AircraftState { gamma: 1.6, ..s },
            AircraftState { beta: -1.6, ..s },
        ] {
            assert!(matches!(dynamics(&p, &bad, &Controls::default(), Model::Full), Err(AircraftError::Domain(_))));
        }
        let s = sample_state();
        let full = dynamics(&p, &s, &sample_controls(), Model::Simplified).unwrap();
        let nine = dynamics_restricted(&p, &s, &sample_controls(), Model::Simplified).unwrap();
        for (k, &i) in RESTRICTED.iter().enumerate() {
            assert_eq!(nine[k], full[i]);
        }
    }

    #[test]
    fn earth_acceleration_is_force_over_mass() {
        let p = test_params();
        let s = sample_state();
        let c = sample_controls();
        let ft = forces_and_torques(&p, &s, &c, Model::Full);
        let acc = wind_to_earth(s.gamma, s.chi, s.mu, [ft.x, ft.y, ft.z]).map(|f| f / p.m);
        // differentiate the velocity vector V x_w along the dynamics with dual numbers
        let d = dynamics(&p, &s, &c, Model::Full).unwrap();
        let (_, dv) = directional(
            |a: &[Taylor<2>; 3]| {
                let [xw, _, _] = wind_axes(a[1], a[2], Taylor::constant(0.0));
                xw.map(|e| e * a[0])
            },
            &[s.v, s.gamma, s.chi],
            &[d[3], d[4], d[5]],
        );
        for k in 0..3 {
            assert!((acc[k] - dv[k]).abs() < 1e-12, "{k}: {} vs {}", acc[k], dv[k]);
        }
        let g = earth_to_wind(s.gamma, s.chi, s.mu, [0.0, 0.0, p.weight()]);
        assert!((g[0] + p.weight() * s.gamma.sin()).abs() < 1e-12);
        assert!((g[1] - p.weight() * s.gamma.cos() * s.mu.sin()).abs() < 1e-12);
        assert!((g[2] - p.weight() * s.gamma.cos() * s.mu.cos()).abs() < 1e-12);
    }

    #[test]
    fn parameter_files() {
        let mut rec = serde_json::json!({
            "name": "imp", "units": "imperial", "m": 100.0, "S": 10.0, "a": 10.0, "b": 1.0,
            "Ixx": 1.0, "Iyy": 1.0, "Izz": 1.0, "Ixz": 0.0, "y_p": 1.0, "eps_deg": 2.0, "F_max": 50.0,
            "theta": vec![0.0; 45], "rate_scaling": "unnormalized", "rho": "altitude"
        });
        let p = AircraftParams::from_json(&rec.to_string()).unwrap();
        assert!((p.m - 45.359237).abs() < 1e-12);
        assert!((p.s - 0.9290304).abs() < 1e-12);
        assert!((p.f_max.unwrap() - 222.41108076302).abs() < 1e-9);
        assert_eq!(p.rate_scaling, RateScaling::Unnormalized);
        assert!((p.rho_at(-2000.0) - 1.0065).abs() < 1e-3);
        assert_eq!(p.rho_at(0.0), RHO0);
        rec["theta"] = serde_json::json!(vec![0.0; 44]);
        assert!(matches!(AircraftParams::from_json(&rec.to_string()), Err(AircraftError::Params(_))));
        rec["theta"] = serde_json::json!(vec![0.0; 45]);
        rec["Ixz"] = serde_json::json!(2.0);
        assert!(matches!(AircraftParams::from_json(&rec.to_string()), Err(AircraftError::Params(_))));
    }
}
