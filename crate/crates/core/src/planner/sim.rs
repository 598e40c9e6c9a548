//! Closed-loop simulation of the aircraft under cascade feedback.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::control::{cascade_feedback, ControlReference, FeedbackGains};
use super::{OutputSet, PlanError, PlannedTrajectory, ReferenceTrajectory};
use crate::aircraft::{dynamics_generic, earth_to_wind, ix, AircraftParams, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wind {
    /// Force amplitude, N.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Earth-frame direction of the force.
    #[serde(default = "default_wind_direction")]
    pub direction: [f64; 3],
}

fn default_wind_direction() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl Wind {
    pub fn force(&self, t: f64) -> [f64; 3] {
        let s = self.amplitude * (2.0 * std::f64::consts::PI * self.frequency * t).sin();
        self.direction.map(|d| d * s)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Perturbation {
    /// Initial position offset, m.
    #[serde(default)]
    pub offset: [f64; 3],
    /// One engine lost: all thrust on one side, `eta = 1`.
    #[serde(default)]
    pub engine_out: bool,
    #[serde(default)]
    pub wind: Option<Wind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step: f64,
    /// Defaults to the end of the plan.
    #[serde(default)]
    pub t_final: Option<f64>,
    pub model: Model,
    #[serde(default)]
    pub gains: FeedbackGains,
    #[serde(default)]
    pub perturbation: Perturbation,
    /// Stop when the state leaves the aerodynamic model's validity envelope.
    #[serde(default = "yes")]
    pub envelope: bool,
}

fn yes() -> bool {
    true
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            t_final: None,
            model: Model::Simplified,
            gains: FeedbackGains::default(),
            perturbation: Perturbation::default(),
            envelope: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub steps: usize,
    pub t_end: f64,
    /// Reason for early termination, if any.
    pub terminated: Option<String>,
    /// Tracking errors `(x, y, z, xi)`.
    pub initial_error: [f64; 4],
    pub max_error: [f64; 4],
    pub final_error: [f64; 4],
    pub max_position_error: f64,
    pub final_position_error: f64,
    pub min_abs_det_delta1: f64,
    pub min_thrust: f64,
    pub max_thrust: f64,
    /// Dominant frequency of planned-minus-actual thrust, Hz; reported under wind.
    pub thrust_ripple_peak: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub output_set: OutputSet,
    pub times: Vec<f64>,
    /// Twelve states followed by the thrust.
    pub states: Vec<[f64; 13]>,
    /// `(F, dF/dt, dl, dm, dn, eta)`.
    pub controls: Vec<[f64; 6]>,
    /// Reference minus actual for `(x, y, z, xi)`.
    pub errors: Vec<[f64; 4]>,
    pub summary: SimSummary,
}

const DEG: f64 = std::f64::consts::PI / 180.0;

fn envelope_violation(s: &[f64; 13]) -> Option<String> {
    let checks = [
        (s[ix::ALPHA] < -4.0 * DEG || s[ix::ALPHA] > 30.0 * DEG, "alpha outside [-4, 30] deg"),
        (s[ix::BETA].abs() > 20.0 * DEG, "|beta| above 20 deg"),
        (s[ix::P].abs() > 100.0 * DEG, "|p| above 100 deg/s"),
        (s[ix::Q].abs() > 50.0 * DEG, "|q| above 50 deg/s"),
        (s[ix::R].abs() > 50.0 * DEG, "|r| above 50 deg/s"),
    ];
    checks.iter().find(|c| c.0).map(|c| c.1.to_string())
}

fn domain_violation(s: &[f64; 13]) -> Option<String> {
    if s.iter().any(|x| !x.is_finite()) {
        return Some("non-finite state".into());
    }
    if s[ix::V] <= 0.0 {
        return Some("V is not positive".into());
    }
    if s[ix::GAMMA].abs() >= std::f64::consts::FRAC_PI_2 {
        return Some("|gamma| reaches pi/2".into());
    }
    if s[ix::BETA].abs() >= std::f64::consts::FRAC_PI_2 {
        return Some("|beta| reaches pi/2".into());
    }
    None
}

fn fourth_of(s: &[f64; 13], set: OutputSet) -> f64 {
    match set {
        OutputSet::Beta => s[ix::BETA],
        OutputSet::Mu => s[ix::MU],
        OutputSet::F => s[12],
    }
}

/// Runs the plant (full or simplified) under cascade feedback with fixed-step RK4;
/// the feedback is evaluated once per step and held over it.
pub fn simulate_closed_loop(
    prm: &AircraftParams,
    plan: &PlannedTrajectory,
    reference: &ReferenceTrajectory,
    cfg: &SimConfig,
) -> Result<SimResult, PlanError> {
    cfg.gains.validate()?;
    if (cfg.step - plan.step).abs() > 1e-12 * plan.step {
        return Err(PlanError::Config(format!("integrator step {} differs from plan step {}", cfg.step, plan.step)));
    }
    let set = plan.output_set;
    let dt = cfg.step;
    let t0 = plan.samples[0].t;
    let last = match cfg.t_final {
        Some(tf) => (((tf - t0) / dt).round() as usize).min(plan.samples.len() - 1),
        None => plan.samples.len() - 1,
    };
    let eta = if cfg.perturbation.engine_out { 1.0 } else { 0.0 };
    let simplified = cfg.model.simplified();
    let wind = cfg.perturbation.wind.clone();
    let rhs = |t: f64, y: &[f64; 13], u: &[f64; 4]| -> [f64; 13] {
        let s: [f64; 12] = std::array::from_fn(|i| y[i]);
        let ext = wind.as_ref().map(|w| earth_to_wind(y[ix::GAMMA], y[ix::CHI], y[ix::MU], w.force(t)));
        let d = dynamics_generic(prm, &s, &[y[12], u[1], u[2], u[3], eta], simplified, ext);
        std::array::from_fn(|i| if i < 12 { d[i] } else { u[0] })
    };

    let first = &plan.samples[0];
    let s0 = first.state.to_array();
    let mut y: [f64; 13] = std::array::from_fn(|i| if i < 12 { s0[i] } else { first.controls.f });
    for i in 0..3 {
        y[i] += cfg.perturbation.offset[i];
    }
    let mut out = SimResult {
        output_set: set,
        times: Vec::with_capacity(last + 1),
        states: Vec::with_capacity(last + 1),
        controls: Vec::with_capacity(last + 1),
        errors: Vec::with_capacity(last + 1),
        summary: SimSummary {
            steps: 0,
            t_end: t0,
            terminated: None,
            initial_error: [0.0; 4],
            max_error: [0.0; 4],
            final_error: [0.0; 4],
            max_position_error: 0.0,
            final_position_error: 0.0,
            min_abs_det_delta1: f64::INFINITY,
            min_thrust: f64::INFINITY,
            max_thrust: f64::NEG_INFINITY,
            thrust_ripple_peak: None,
        },
    };
    let mut prev_offset = None;
    for k in 0..=last {
        let sample = &plan.samples[k];
        let t = sample.t;
        let d = reference.position.derivatives(t);
        let chain = &sample.chain;
        let (xi, xi_dot) = match set {
            OutputSet::Beta => (chain.beta[0], chain.beta[1]),
            OutputSet::Mu => (chain.mu[0], chain.mu[1]),
            OutputSet::F => (chain.f[0], chain.f[1]),
        };
        let err = [d[0][0] - y[0], d[0][1] - y[1], d[0][2] - y[2], xi - fourth_of(&y, set)];
        out.times.push(t);
        out.states.push(y);
        out.errors.push(err);
        let summ = &mut out.summary;
        if k == 0 {
            summ.initial_error = err;
        }
        for i in 0..4 {
            summ.max_error[i] = summ.max_error[i].max(err[i].abs());
        }
        let pos = (err[0] * err[0] + err[1] * err[1] + err[2] * err[2]).sqrt();
        summ.max_position_error = summ.max_position_error.max(pos);
        summ.final_error = err;
        summ.final_position_error = pos;
        summ.t_end = t;
        summ.min_thrust = summ.min_thrust.min(y[12]);
        summ.max_thrust = summ.max_thrust.max(y[12]);
        if let Some(msg) = domain_violation(&y).or_else(|| if cfg.envelope { envelope_violation(&y) } else { None }) {
            summ.terminated = Some(format!("t = {t}: {msg}"));
            break;
        }
        let cref = ControlReference {
            position: [d[0], d[1], d[2], d[3]],
            xi,
            xi_dot,
            rates: [chain.p[0], chain.q[0], chain.r[0]],
            rate_dots: [chain.p[1], chain.q[1], chain.r[1]],
        };
        let fb = match cascade_feedback(prm, &y, eta, &cref, &cfg.gains, set, &mut prev_offset, dt) {
            Ok(fb) => fb,
            Err(PlanError::Singular { what, det, .. }) => {
                return Err(PlanError::Singular { t, what, det });
            }
            Err(e) => return Err(e),
        };
        summ.min_abs_det_delta1 = summ.min_abs_det_delta1.min(fb.det_delta1.abs());
        let u = [fb.f_dot, fb.deflections[0], fb.deflections[1], fb.deflections[2]];
        out.controls.push([y[12], fb.f_dot, u[1], u[2], u[3], eta]);
        if k == last {
            break;
        }
        let add = |a: &[f64; 13], b: &[f64; 13], h: f64| -> [f64; 13] { std::array::from_fn(|i| a[i] + h * b[i]) };
        let k1 = rhs(t, &y, &u);
        let k2 = rhs(t + dt / 2.0, &add(&y, &k1, dt / 2.0), &u);
        let k3 = rhs(t + dt / 2.0, &add(&y, &k2, dt / 2.0), &u);
        let k4 = rhs(t + dt, &add(&y, &k3, dt), &u);
        y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        out.summary.steps += 1;
    }
    // keep the series aligned when the loop stopped before computing controls
    out.times.truncate(out.controls.len());
    out.states.truncate(out.controls.len());
    out.errors.truncate(out.controls.len());
    if wind.is_some() && out.states.len() > 2 {
        let ripple: Vec<f64> = out.states.iter().enumerate().map(|(k, s)| s[12] - plan.samples[k].controls.f).collect();
        out.summary.thrust_ripple_peak = Some(dominant_frequency(&ripple, dt));
    }
    Ok(out)
}

/// A planning and simulation job as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params_file: PathBuf,
    pub reference: ReferenceTrajectory,
    pub output_set: OutputSet,
    #[serde(default)]
    pub gains: FeedbackGains,
    #[serde(default)]
    pub perturbation: Perturbation,
    pub integrator: Integrator,
    pub model: Model,
    #[serde(default = "yes")]
    pub envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub step: f64,
    #[serde(default)]
    pub t_final: Option<f64>,
}

impl Scenario {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            step: self.integrator.step,
            t_final: self.integrator.t_final,
            model: self.model,
            gains: self.gains,
            perturbation: self.perturbation.clone(),
            envelope: self.envelope,
        }
    }
}

/// Reads a scenario; a relative `params_file` is resolved against the scenario's directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<(Scenario, AircraftParams), PlanError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PlanError::Config(format!("{}: {e}", path.display())))?;
    let mut sc: Scenario =
        serde_json::from_str(&text).map_err(|e| PlanError::Config(format!("{}: {e}", path.display())))?;
    if sc.params_file.is_relative() {
        sc.params_file = path.parent().unwrap_or(Path::new(".")).join(&sc.params_file);
    }
    let prm = AircraftParams::load(&sc.params_file)?;
    Ok((sc, prm))
}

/// Writes `states.csv`, `controls.csv`, `errors.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, res: &SimResult, summary_json: &serde_json::Value) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let fourth = res.output_set.name();
    let write = |name: &str, header: Vec<String>, rows: &mut dyn Iterator<Item = Vec<f64>>| -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record(&header)?;
        for r in rows {
            w.write_record(r.iter().map(|&x| crate::report::fmt_num(x)))?;
        }
        w.flush()
    };
    let mut header = vec!["t".to_string()];
    header.extend(crate::aircraft::STATE_NAMES.iter().map(|s| s.to_string()));
    header.push("F".into());
    write(
        "states.csv",
        header,
        &mut res.times.iter().zip(&res.states).map(|(t, s)| std::iter::once(*t).chain(s.iter().copied()).collect()),
    )?;
    write(
        "controls.csv",
        ["t", "F", "F_dot", "delta_l", "delta_m", "delta_n", "eta"].map(String::from).to_vec(),
        &mut res.times.iter().zip(&res.controls).map(|(t, c)| std::iter::once(*t).chain(c.iter().copied()).collect()),
    )?;
    write(
        "errors.csv",
        vec!["t".into(), "e_x".into(), "e_y".into(), "e_z".into(), format!("e_{fourth}")],
        &mut res.times.iter().zip(&res.errors).map(|(t, e)| std::iter::once(*t).chain(e.iter().copied()).collect()),
    )?;
    std::fs::write(dir.join("summary.json"), crate::report::to_json(summary_json)?)
}

/// Frequency of the largest non-zero spectral peak of a uniformly sampled,
/// linearly detrended signal.
pub fn dominant_frequency(signal: &[f64], dt: f64) -> f64 {
    use rustfft::{num_complex::Complex, FftPlanner};
    let n = signal.len();
    let nf = n as f64;
    let tm = (nf - 1.0) / 2.0;
    let mean = signal.iter().sum::<f64>() / nf;
    let var_t: f64 = (0..n).map(|k| (k as f64 - tm).powi(2)).sum();
    let slope = (0..n).map(|k| (k as f64 - tm) * (signal[k] - mean)).sum::<f64>() / var_t;
    let mut buf: Vec<Complex<f64>> =
        (0..n).map(|k| Complex::new(signal[k] - mean - slope * (k as f64 - tm), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let best = (1..n / 2).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap_or(0);
    best as f64 / (nf * dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_peak() {
        let dt = 1e-3;
        let sig: Vec<f64> = (0..30000)
            .map(|k| {
                let t = k as f64 * dt;
                3.0 + 0.2 * t + (2.0 * std::f64::consts::PI * 0.1 * t).sin() + 0.1 * (2.0 * std::f64::consts::PI * 2.0 * t).sin()
            })
            .collect();
        assert!((dominant_frequency(&sig, dt) - 0.1).abs() < 0.01);
    }

    #[test]
    fn wind_force_direction() {
        let w = Wind { amplitude: 2.0, frequency: 0.25, direction: default_wind_direction() };
        let f = w.force(1.0);
        assert!((f[0] - 2.0).abs() < 1e-12);
        assert_eq!(f[1], 0.0);
    }
}
