//! Reference trajectories for the flat outputs.

use serde::{Deserialize, Serialize};

use crate::aircraft::G0;

/// Geometric part of a reference: the three positions as explicit time functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositionReference {
    /// Upward half-turn helix of radius `v1` climbing at `v2`.
    Helix {
        v1: f64,
        v2: f64,
        t_initial: f64,
        t_final: f64,
        #[serde(default = "default_helix_z0")]
        z0: f64,
    },
    /// Ballistic arc `x = vx t`, `z = g t^2 / 2 + z0`.
    Parabola {
        vx: f64,
        #[serde(default = "default_parabola_z0")]
        z0: f64,
        t_initial: f64,
        t_final: f64,
    },
    /// Straight level flight at constant speed and heading.
    Level {
        v: f64,
        #[serde(default)]
        chi: f64,
        z0: f64,
        t_initial: f64,
        t_final: f64,
    },
    /// Polynomials in `t`, coefficients in increasing degree.
    Polynomial { x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, t_initial: f64, t_final: f64 },
}

fn default_helix_z0() -> f64 {
    -1000.0
}

fn default_parabola_z0() -> f64 {
    -2000.0
}

/// Value `sum c_i t^i` differentiated `k` times.
fn poly_deriv(c: &[f64], t: f64, k: usize) -> f64 {
    let mut acc = 0.0;
    for i in (k..c.len()).rev() {
        let falling: f64 = ((i - k + 1)..=i).map(|j| j as f64).product();
        acc = acc * t + c[i] * falling;
    }
    acc
}

impl PositionReference {
    pub fn span(&self) -> (f64, f64) {
        match *self {
            PositionReference::Helix { t_initial, t_final, .. }
            | PositionReference::Parabola { t_initial, t_final, .. }
            | PositionReference::Level { t_initial, t_final, .. }
            | PositionReference::Polynomial { t_initial, t_final, .. } => (t_initial, t_final),
        }
    }

    /// Derivatives of orders 0 through 4 of `(x, y, z)` at `t`.
    pub fn derivatives(&self, t: f64) -> [[f64; 3]; 5] {
        let mut out = [[0.0; 3]; 5];
        match self {
            PositionReference::Helix { v1, v2, t_initial, t_final, z0 } => {
                let w = std::f64::consts::PI / (t_final - t_initial);
                let ph = w * (t - t_initial);
                for (k, o) in out.iter_mut().enumerate() {
                    let a = ph + k as f64 * std::f64::consts::FRAC_PI_2;
                    let amp = v1 * w.powi(k as i32);
                    o[0] = amp * a.cos();
                    o[1] = amp * a.sin();
                }
                out[0][2] = -v2 * t + z0;
                out[1][2] = -v2;
            }
            PositionReference::Parabola { vx, z0, .. } => {
                out[0] = [vx * t, 0.0, 0.5 * G0 * t * t + z0];
                out[1] = [*vx, 0.0, G0 * t];
                out[2][2] = G0;
            }
            PositionReference::Level { v, chi, z0, .. } => {
                out[0] = [v * chi.cos() * t, v * chi.sin() * t, *z0];
                out[1] = [v * chi.cos(), v * chi.sin(), 0.0];
            }
            PositionReference::Polynomial { x, y, z, .. } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = [poly_deriv(x, t, k), poly_deriv(y, t, k), poly_deriv(z, t, k)];
                }
            }
        }
        out
    }
}

/// The fourth flat output as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FourthOutput {
    Constant(f64),
    /// Values on a uniform grid `t0 + k step`; only grid times are evaluated.
    Samples { t0: f64, step: f64, values: Vec<f64> },
}

impl Default for FourthOutput {
    fn default() -> Self {
        FourthOutput::Constant(0.0)
    }
}

impl FourthOutput {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            FourthOutput::Constant(c) => *c,
            FourthOutput::Samples { t0, step, values } => {
                let k = ((t - t0) / step).round();
                let k = k.clamp(0.0, (values.len() - 1) as f64) as usize;
                values[k]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrajectory {
    #[serde(flatten)]
    pub position: PositionReference,
    #[serde(default)]
    pub fourth: FourthOutput,
}

impl ReferenceTrajectory {
    pub fn helix(v1: f64, v2: f64, t_final: f64) -> Self {
        Self {
            position: PositionReference::Helix { v1, v2, t_initial: 0.0, t_final, z0: -1000.0 },
            fourth: FourthOutput::Constant(0.0),
        }
    }

    pub fn span(&self) -> (f64, f64) {
        self.position.span()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(r: &PositionReference, t: f64) {
        let h = 1e-4;
        let d0 = r.derivatives(t);
        let (dp, dm) = (r.derivatives(t + h), r.derivatives(t - h));
        for k in 0..4 {
            for i in 0..3 {
                let fd = (dp[k][i] - dm[k][i]) / (2.0 * h);
                assert!((fd - d0[k + 1][i]).abs() < 1e-6 * (1.0 + d0[k + 1][i].abs()), "{r:?} order {k} axis {i}");
            }
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        fd_check(&ReferenceTrajectory::helix(30.0, 5.0, 30.0).position, 7.3);
        fd_check(&PositionReference::Parabola { vx: 208.0, z0: -2000.0, t_initial: -5.0, t_final: 5.0 }, 1.2);
        fd_check(&PositionReference::Level { v: 20.0, chi: 0.3, z0: -100.0, t_initial: 0.0, t_final: 1.0 }, 0.4);
        fd_check(
            &PositionReference::Polynomial {
                x: vec![1.0, 2.0, 0.5, 0.1, 0.01, 0.002],
                y: vec![0.0, 1.0],
                z: vec![-10.0, 0.0, 0.3],
                t_initial: 0.0,
                t_final: 1.0,
            },
            0.7,
        );
    }

    #[test]
    fn helix_geometry() {
        let r = ReferenceTrajectory::helix(30.0, 5.0, 30.0);
        let d = r.position.derivatives(0.0);
        assert_eq!(d[0], [30.0, 0.0, -1000.0]);
        assert!((d[1][1] - std::f64::consts::PI).abs() < 1e-12);
        let end = r.position.derivatives(30.0);
        assert!((end[0][0] + 30.0).abs() < 1e-9 && end[0][1].abs() < 1e-9);
    }

    #[test]
    fn scenario_syntax() {
        let r: ReferenceTrajectory =
            serde_json::from_str(r#"{"kind":"helix","v1":30,"v2":5,"t_initial":0,"t_final":30}"#).unwrap();
        assert_eq!(r, ReferenceTrajectory::helix(30.0, 5.0, 30.0));
        let s = FourthOutput::Samples { t0: 1.0, step: 0.5, values: vec![1.0, 2.0, 3.0] };
        assert_eq!(s.value(1.5), 2.0);
    }
}
