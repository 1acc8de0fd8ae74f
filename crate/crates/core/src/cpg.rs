//! Chain of coupled phase-amplitude oscillators.
//!
//! Oscillator `i` has phase `θ_i`, amplitude `r_i` and output
//! `x_i = X_i + r_i cos θ_i`:
//!
//! ```text
//! θ̇_i = 2π ν_i + Σ_j r_j w_ij sin(θ_j − θ_i − φ_ij)
//! r̈_i = α (α/4 (R_i − r_i) − ṙ_i)
//! ```
//!
//! The amplitude equation is the critically damped second-order form: `r`
//! converges to `R` without overshoot, with a double pole at `−α/2`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling term in `θ̇_target` driven by `θ_source`. At lock,
/// `θ_source − θ_target = phase_bias`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub target: usize,
    pub source: usize,
    pub weight: f64,
    pub phase_bias: f64,
}

/// Which end of the chain leads in phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseDirection {
    /// Head-to-tail couplings carry `+2π/N`: each oscillator leads its
    /// tail-side neighbour, so the body wave travels from head to tail.
    #[default]
    HeadLeads,
    TailLeads,
}

/// Nearest-neighbour couplings for `n_joints` oscillators on a body of
/// `n_segments` segments. Oscillator 0 is at the head.
pub fn build_chain(
    n_joints: usize,
    n_segments: usize,
    weight: f64,
    direction: PhaseDirection,
) -> Result<Vec<Coupling>> {
    if n_joints < 1 {
        return Err(Error::InvalidParameter("chain needs at least one joint".into()));
    }
    if n_segments != n_joints + 1 {
        return Err(Error::dim("segments (joints + 1)", n_joints + 1, n_segments));
    }
    let phi = match direction {
        PhaseDirection::HeadLeads => TAU / n_segments as f64,
        PhaseDirection::TailLeads => -TAU / n_segments as f64,
    };
    let mut couplings = Vec::with_capacity(2 * (n_joints - 1));
    for i in 0..n_joints - 1 {
        // head-to-tail: i drives i+1
        couplings.push(Coupling {
            target: i + 1,
            source: i,
            weight,
            phase_bias: phi,
        });
        couplings.push(Coupling {
            target: i,
            source: i + 1,
            weight,
            phase_bias: -phi,
        });
    }
    Ok(couplings)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpgParams {
    /// Intrinsic frequencies, Hz.
    pub nu: Vec<f64>,
    /// Attractor amplitudes `R_i`, radians.
    pub amplitudes: Vec<f64>,
    /// Offsets `X_i`, radians.
    pub offsets: Vec<f64>,
    pub alpha: f64,
    pub couplings: Vec<Coupling>,
}

impl CpgParams {
    pub fn n_oscillators(&self) -> usize {
        self.nu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nu.len();
        if self.amplitudes.len() != n {
            return Err(Error::dim("cpg amplitudes", n, self.amplitudes.len()));
        }
        if self.offsets.len() != n {
            return Err(Error::dim("cpg offsets", n, self.offsets.len()));
        }
        if self.amplitudes.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter("cpg amplitudes must be > 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be > 0".into()));
        }
        for c in &self.couplings {
            if c.target >= n || c.source >= n {
                return Err(Error::InvalidParameter(format!(
                    "coupling {}<-{} out of range for {n} oscillators",
                    c.target, c.source
                )));
            }
        }
        Ok(())
    }

    /// Replaces the per-joint amplitude and offset targets.
    pub fn set_targets(&mut self, amplitudes: &[f64], offsets: &[f64]) -> Result<()> {
        let n = self.nu.len();
        if amplitudes.len() != n {
            return Err(Error::dim("cpg amplitudes", n, amplitudes.len()));
        }
        if offsets.len() != n {
            return Err(Error::dim("cpg offsets", n, offsets.len()));
        }
        self.amplitudes.copy_from_slice(amplitudes);
        self.offsets.copy_from_slice(offsets);
        Ok(())
    }
}

/// CPG settings shared by every snake episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpgConfig {
    pub frequency_hz: f64,
    pub alpha: f64,
    pub coupling_weight: f64,
    pub direction: PhaseDirection,
    /// RK4 substeps per control tick.
    pub substeps: usize,
}

impl Default for CpgConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 1.0,
            alpha: 20.0,
            coupling_weight: 20.0,
            direction: PhaseDirection::HeadLeads,
            substeps: 5,
        }
    }
}

impl CpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::Config("cpg.frequency_hz must be > 0".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config("cpg.alpha must be > 0".into()));
        }
        if !self.coupling_weight.is_finite() {
            return Err(Error::Config("cpg.coupling_weight must be finite".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("cpg.substeps must be >= 1".into()));
        }
        Ok(())
    }

    /// Chain parameters for `n_joints` oscillators with unit amplitudes and
    /// zero offsets.
    pub fn chain(&self, n_joints: usize) -> Result<CpgParams> {
        Ok(CpgParams {
            nu: vec![self.frequency_hz; n_joints],
            amplitudes: vec![1.0; n_joints],
            offsets: vec![0.0; n_joints],
            alpha: self.alpha,
            couplings: build_chain(n_joints, n_joints + 1, self.coupling_weight, self.direction)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpgState {
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
    pub r_dot: Vec<f64>,
}

impl CpgState {
    pub fn at_rest(theta: Vec<f64>) -> Self {
        let n = theta.len();
        Self {
            theta,
            r: vec![0.0; n],
            r_dot: vec![0.0; n],
        }
    }

    /// Phases uniform in `[0, 2π)`, amplitudes and their rates zero.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::at_rest((0..n).map(|_| rng.random::<f64>() * TAU).collect())
    }

    /// State whose outputs are the negation of this state's outputs for
    /// negated offsets: every phase shifted by π.
    pub fn mirrored(&self) -> Self {
        Self {
            theta: self.theta.iter().map(|t| t + PI).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpgDerivatives {
    pub d_theta: Vec<f64>,
    pub d_r: Vec<f64>,
    pub d_r_dot: Vec<f64>,
}

fn derivatives_into(params: &CpgParams, theta: &[f64], r: &[f64], r_dot: &[f64], out: &mut [f64]) {
    let n = theta.len();
    let (d_theta, rest) = out.split_at_mut(n);
    let (d_r, d_r_dot) = rest.split_at_mut(n);
    for i in 0..n {
        d_theta[i] = TAU * params.nu[i];
        d_r[i] = r_dot[i];
        let a = params.alpha;
        d_r_dot[i] = a * (a / 4.0 * (params.amplitudes[i] - r[i]) - r_dot[i]);
    }
    for c in &params.couplings {
        d_theta[c.target] +=
            r[c.source] * c.weight * (theta[c.source] - theta[c.target] - c.phase_bias).sin();
    }
}

pub fn cpg_derivatives(state: &CpgState, params: &CpgParams) -> Result<CpgDerivatives> {
    let n = params.n_oscillators();
    for (what, len) in [("theta", state.theta.len()), ("r", state.r.len()), ("r_dot", state.r_dot.len())] {
        if len != n {
            return Err(Error::dim(what, n, len));
        }
    }
    let mut out = vec![0.0; 3 * n];
    derivatives_into(params, &state.theta, &state.r, &state.r_dot, &mut out);
    Ok(CpgDerivatives {
        d_theta: out[..n].to_vec(),
        d_r: out[n..2 * n].to_vec(),
        d_r_dot: out[2 * n..].to_vec(),
    })
}

/// Advances the state by `dt` seconds with `substeps` classical RK4 steps.
pub fn cpg_step(state: &CpgState, params: &CpgParams, dt: f64, substeps: usize) -> Result<CpgState> {
    if !(dt > 0.0) || substeps == 0 {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and substeps >= 1, got dt={dt}, substeps={substeps}"
        )));
    }
    let n = params.n_oscillators();
    cpg_derivatives(state, params)?;
    let h = dt / substeps as f64;
    let mut y: Vec<f64> = state
        .theta
        .iter()
        .chain(&state.r)
        .chain(&state.r_dot)
        .copied()
        .collect();
    let mut k1 = vec![0.0; 3 * n];
    let mut k2 = vec![0.0; 3 * n];
    let mut k3 = vec![0.0; 3 * n];
    let mut k4 = vec![0.0; 3 * n];
    let mut tmp = vec![0.0; 3 * n];
    let eval = |y: &[f64], out: &mut [f64]| {
        derivatives_into(params, &y[..n], &y[n..2 * n], &y[2 * n..], out);
    };
    for _ in 0..substeps {
        eval(&y, &mut k1);
        for i in 0..3 * n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        eval(&tmp, &mut k2);
        for i in 0..3 * n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        eval(&tmp, &mut k3);
        for i in 0..3 * n {
            tmp[i] = y[i] + h * k3[i];
        }
        eval(&tmp, &mut k4);
        for i in 0..3 * n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let names = ["theta", "r", "r_dot"];
    if let Some(idx) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::CpgDiverged {
            component: format!("{}[{}]", names[idx / n], idx % n),
        });
    }
    if let Some(i) = y[n..2 * n].iter().position(|&r| r < 0.0) {
        return Err(Error::CpgDiverged {
            component: format!("r[{i}] became negative"),
        });
    }
    Ok(CpgState {
        theta: y[..n].to_vec(),
        r: y[n..2 * n].to_vec(),
        r_dot: y[2 * n..].to_vec(),
    })
}

/// Joint setpoints `x_i = X_i + r_i cos θ_i`.
pub fn cpg_output(state: &CpgState, params: &CpgParams) -> Vec<f64> {
    params
        .offsets
        .iter()
        .zip(&state.r)
        .zip(&state.theta)
        .map(|((x0, r), th)| x0 + r * th.cos())
        .collect()
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI { PI } else { y }
}
