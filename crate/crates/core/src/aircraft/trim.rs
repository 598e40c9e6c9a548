//! Straight level flight trim and the minimum-speed (stall) analysis.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::{forces_generic, gna_coefficients, ix, AircraftError, AircraftParams, Model};
use crate::real::{Real, Taylor};

pub const TRIM_TOL: f64 = 1e-10;
const TRIM_MAX_ITER: usize = 100;
/// Sweep range and step of the stall analysis, radians.
pub const STALL_ALPHA_MIN: f64 = -4.0 * std::f64::consts::PI / 180.0;
pub const STALL_ALPHA_MAX: f64 = 30.0 * std::f64::consts::PI / 180.0;
pub const STALL_ALPHA_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrimPoint {
    pub alpha: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub delta_m: f64,
    /// Max-norm of the scaled residual at the solution.
    pub residual: f64,
    pub iterations: usize,
}

/// Elevator gain `dC_m/d(delta_m)` at zero pitch rate.
fn pitch_authority(prm: &AircraftParams, alpha: f64) -> f64 {
    prm.th(32) + prm.th(35) * alpha * alpha + prm.th(37) * alpha.powi(3)
}

/// Scaled residual `(X/mg, Z/mg, C_m)` of level flight at `alpha`.
fn residual<T: Real>(prm: &AircraftParams, alpha: f64, z: f64, model: Model, u: [T; 3]) -> [T; 3] {
    let [v, f, dm] = u;
    let c = T::cst(0.0);
    let mut s = [c; 12];
    s[ix::Z] = T::cst(z);
    s[ix::V] = v;
    s[ix::ALPHA] = T::cst(alpha);
    let ft = forces_generic(prm, &s, &[f, c, dm, c, c], model.simplified(), None);
    let w = prm.weight();
    [ft.x / w, ft.z / w, ft.aero.c_pitch]
}

pub fn trim_level_flight(prm: &AircraftParams, alpha: f64, model: Model) -> Result<TrimPoint, AircraftError> {
    trim_level_flight_at(prm, alpha, model, 0.0)
}

/// Solves `X = Z = 0` (and `C_m = 0` when the elevator has authority) for
/// `(V, F, delta_m)` with `gamma = beta = mu = 0` and zero rates, by damped Newton.
pub fn trim_level_flight_at(prm: &AircraftParams, alpha: f64, model: Model, z: f64) -> Result<TrimPoint, AircraftError> {
    let use_dm = pitch_authority(prm, alpha).abs() > 1e-12;
    let dm0 = if use_dm { -(prm.th(29) + prm.th(30) * alpha + prm.th(38) * alpha.powi(4)) / pitch_authority(prm, alpha) } else { 0.0 };
    // existence: the aerodynamic lift-like combination must be positive
    let aero = gna_coefficients(prm, alpha, 0.0, [0.0; 3], 1.0, [0.0, dm0, 0.0], model.simplified());
    let denom = aero.c_z + aero.c_x * (alpha + prm.eps).tan();
    if !(denom > 0.0) || (alpha + prm.eps).cos() <= 0.0 {
        return Err(AircraftError::Trim(format!("no positive-V solution at alpha = {alpha}")));
    }
    let eval = |x: &Vector3<f64>| -> Vector3<f64> {
        let r = residual(prm, alpha, z, model, [x[0], x[1], x[2]]);
        Vector3::new(r[0], r[1], if use_dm { r[2] } else { 0.0 })
    };
    let jac = |x: &Vector3<f64>| -> Matrix3<f64> {
        let mut j = Matrix3::identity();
        let cols = if use_dm { 3 } else { 2 };
        for k in 0..cols {
            let u: [Taylor<2>; 3] = std::array::from_fn(|i| Taylor([x[i], if i == k { 1.0 } else { 0.0 }]));
            let r = residual(prm, alpha, z, model, u);
            for i in 0..cols {
                j[(i, k)] = r[i].0[1];
            }
        }
        j
    };
    let mut x = Vector3::new(100.0, prm.weight() / 10.0, 0.0);
    let mut r = eval(&x);
    for it in 0..TRIM_MAX_ITER {
        let norm = r.amax();
        if norm < TRIM_TOL {
            return Ok(TrimPoint { alpha, v: x[0], f: x[1], delta_m: x[2], residual: norm, iterations: it });
        }
        let step = jac(&x)
            .lu()
            .solve(&r)
            .ok_or_else(|| AircraftError::Trim(format!("singular Jacobian at alpha = {alpha}")))?;
        let mut t = 1.0;
        loop {
            let cand = x - step * t;
            if cand[0] > 0.0 {
                let rc = eval(&cand);
                if rc.amax() < norm {
                    x = cand;
                    r = rc;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(AircraftError::Trim(format!("line search stalled at alpha = {alpha}")));
            }
        }
    }
    Err(AircraftError::Trim(format!("no convergence at alpha = {alpha}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StallCase {
    /// Interior minimum of the trim speed.
    Extremum,
    /// Required thrust reaches `F_max` before the speed minimum.
    ThrustLimited,
    /// Neither happens inside the sweep range.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StallResult {
    pub case: StallCase,
    pub point: Option<TrimPoint>,
    /// The speed minimum, reported also when thrust limits first.
    pub extremum: Option<TrimPoint>,
    /// Number of sweep samples with a valid trim.
    pub valid_samples: usize,
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Level trims on the stall sweep grid; `None` where no trim exists.
pub fn trim_sweep(prm: &AircraftParams, model: Model) -> Vec<Option<TrimPoint>> {
    let n = ((STALL_ALPHA_MAX - STALL_ALPHA_MIN) / STALL_ALPHA_STEP).floor() as usize + 1;
    (0..n).map(|k| trim_level_flight(prm, STALL_ALPHA_MIN + k as f64 * STALL_ALPHA_STEP, model).ok()).collect()
}

/// Sweeps `alpha` over the GNA range, locates the minimum trim speed and
/// checks it against the thrust limit.
pub fn stall_analysis(prm: &AircraftParams, model: Model) -> Result<StallResult, AircraftError> {
    let trims = trim_sweep(prm, model);
    let n = trims.len();
    let valid_samples = trims.iter().flatten().count();
    let speed = |a: f64| trim_level_flight(prm, a, model).map(|t| t.v).unwrap_or(f64::INFINITY);
    let mut extremum = None;
    let mut stall_index = n - 1;
    for k in 1..n - 1 {
        if let (Some(a), Some(b), Some(c)) = (trims[k - 1], trims[k], trims[k + 1]) {
            if a.v > b.v && b.v <= c.v {
                let alpha = golden_min(speed, a.alpha, c.alpha, 1e-10);
                extremum = Some(trim_level_flight(prm, alpha, model)?);
                stall_index = k;
                break;
            }
        }
    }
    if let Some(fmax) = prm.f_max {
        let below: Vec<(usize, TrimPoint)> =
            trims[..=stall_index].iter().enumerate().filter_map(|(k, t)| t.map(|t| (k, t))).collect();
        let (kmin, tmin) = below
            .iter()
            .copied()
            .min_by(|a, b| a.1.f.total_cmp(&b.1.f))
            .ok_or_else(|| AircraftError::Trim("no valid trim in the sweep range".into()))?;
        if tmin.f > fmax {
            return Err(AircraftError::Trim(format!(
                "required thrust {:.6} exceeds F_max = {fmax} everywhere",
                tmin.f
            )));
        }
        for &(k, t) in below.iter().filter(|(k, _)| *k > kmin) {
            if t.f > fmax {
                let (mut lo, mut hi) = (STALL_ALPHA_MIN + (k - 1) as f64 * STALL_ALPHA_STEP, t.alpha);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if trim_level_flight(prm, mid, model)?.f > fmax {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let point = trim_level_flight(prm, lo, model)?;
                return Ok(StallResult { case: StallCase::ThrustLimited, point: Some(point), extremum, valid_samples });
            }
        }
    }
    let case = if extremum.is_some() { StallCase::Extremum } else { StallCase::None };
    Ok(StallResult { case, point: extremum, extremum, valid_samples })
}
