//! Planar multi-link snake with anisotropic viscous ground friction.
//!
//! Generalized coordinates are the head-link center `p = (p_x, p_y)` and the
//! absolute link headings `ψ_1..ψ_n`; link `i+1` hangs behind link `i`. The
//! equations of motion come from projecting per-link Newton–Euler equations
//! onto the generalized coordinates (`M(q) q̈ = Q − Σ m J_iᵀ J̇_i q̇`), so the
//! joint constraints hold exactly and never drift. Friction acts at every
//! link center; joints are driven by PD servos.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::controller::DEFAULT_OFFSET_CLAMP;
use crate::cpg::{cpg_output, cpg_step, CpgConfig, CpgParams, CpgState};
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnakeConfig {
    pub n_links: usize,
    /// m
    pub link_length: f64,
    /// kg
    pub link_mass: f64,
    /// Tangential viscous coefficient, N·s/m.
    pub c_t: f64,
    /// Normal viscous coefficient, N·s/m.
    pub c_n: f64,
    /// N·m/rad
    pub servo_kp: f64,
    /// N·m·s/rad
    pub servo_kd: f64,
    /// Control tick, s.
    pub dt: f64,
    pub substeps: usize,
}

impl Default for SnakeConfig {
    fn default() -> Self {
        Self {
            n_links: 9,
            link_length: 0.18,
            link_mass: 1.0,
            c_t: 0.3,
            c_n: 6.0,
            servo_kp: 20.0,
            servo_kd: 2.0,
            dt: 0.05,
            substeps: 80,
        }
    }
}

impl SnakeConfig {
    pub fn n_joints(&self) -> usize {
        self.n_links - 1
    }

    pub fn body_length(&self) -> f64 {
        self.n_links as f64 * self.link_length
    }

    pub fn link_inertia(&self) -> f64 {
        self.link_mass * self.link_length * self.link_length / 12.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_links < 2 {
            return Err(Error::Config("snake.n_links must be >= 2".into()));
        }
        let positive = [
            ("link_length", self.link_length),
            ("link_mass", self.link_mass),
            ("servo_kp", self.servo_kp),
            ("servo_kd", self.servo_kd),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("snake.{name} must be > 0")));
            }
        }
        if !(self.c_t > 0.0 && self.c_n > self.c_t && self.c_n.is_finite()) {
            return Err(Error::Config("snake friction needs c_n > c_t > 0".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("snake.substeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Generalized coordinates `[p_x, p_y, ψ_1..ψ_n]` and their rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SnakeState {
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
}

impl SnakeState {
    /// Straight body at rest along +x with the head link centered at the origin.
    pub fn straight(n_links: usize) -> Self {
        Self {
            q: vec![0.0; n_links + 2],
            q_dot: vec![0.0; n_links + 2],
        }
    }

    pub fn n_links(&self) -> usize {
        self.q.len() - 2
    }

    pub fn headings(&self) -> &[f64] {
        &self.q[2..]
    }

    pub fn joint_angles(&self) -> Vec<f64> {
        self.q[2..].windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn joint_rates(&self) -> Vec<f64> {
        self.q_dot[2..].windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Reflection about the x axis.
    pub fn mirrored(&self) -> Self {
        let flip = |v: &[f64]| -> Vec<f64> {
            v.iter().enumerate().map(|(i, &x)| if i == 0 { x } else { -x }).collect()
        };
        Self {
            q: flip(&self.q),
            q_dot: flip(&self.q_dot),
        }
    }
}

/// Why a rollout stopped before its schedule ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbortReason {
    NonFinite,
    /// A joint left `±π/2`; stands in for self-collision.
    JointLimit { joint: usize },
}

pub fn servo_torque(phi_ref: f64, phi: f64, phi_dot: f64, cfg: &SnakeConfig) -> f64 {
    cfg.servo_kp * (phi_ref - phi) - cfg.servo_kd * phi_dot
}

/// Viscous ground reaction on a link moving at `velocity` with the given
/// heading: `−c_t v_t t̂ − c_n v_n n̂`.
pub fn friction_force(velocity: [f64; 2], heading: f64, cfg: &SnakeConfig) -> [f64; 2] {
    let (s, c) = heading.sin_cos();
    let v_t = velocity[0] * c + velocity[1] * s;
    let v_n = -velocity[0] * s + velocity[1] * c;
    [
        -cfg.c_t * v_t * c + cfg.c_n * v_n * s,
        -cfg.c_t * v_t * s - cfg.c_n * v_n * c,
    ]
}

/// Joint actuation during one tick.
#[derive(Debug, Clone, Copy)]
pub enum JointDrive<'a> {
    /// PD servos tracking the given joint angle setpoints.
    Servo(&'a [f64]),
    /// Fixed joint torques.
    Torque(&'a [f64]),
}

/// Geometry and mass properties precomputed for a configuration.
#[derive(Debug, Clone)]
pub struct SnakeModel {
    cfg: SnakeConfig,
    /// `a[i][j]`: link-center offset coefficient, `c_i = p − Σ_j a_ij e(ψ_j)`.
    a: Vec<Vec<f64>>,
    /// Column sums of `a`.
    col_sum: Vec<f64>,
    /// `Σ_i a_ij a_ik`.
    gram: Vec<Vec<f64>>,
}

impl SnakeModel {
    pub fn new(cfg: SnakeConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_links;
        let l = cfg.link_length;
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate().skip(1) {
            row[0] = l / 2.0;
            for entry in row.iter_mut().take(i).skip(1) {
                *entry = l;
            }
            row[i] = l / 2.0;
        }
        let col_sum = (0..n).map(|j| (0..n).map(|i| a[i][j]).sum()).collect();
        let gram = (0..n)
            .map(|j| (0..n).map(|k| (0..n).map(|i| a[i][j] * a[i][k]).sum()).collect())
            .collect();
        Ok(Self {
            cfg,
            a,
            col_sum,
            gram,
        })
    }

    /// The same body with the ground reaction switched off, for checking
    /// conservation laws.
    pub fn without_friction(cfg: SnakeConfig) -> Result<Self> {
        let mut model = Self::new(cfg)?;
        model.cfg.c_t = 0.0;
        model.cfg.c_n = 0.0;
        Ok(model)
    }

    pub fn config(&self) -> &SnakeConfig {
        &self.cfg
    }

    pub fn link_centers(&self, state: &SnakeState) -> Vec<[f64; 2]> {
        let n = self.cfg.n_links;
        let psi = state.headings();
        (0..n)
            .map(|i| {
                let mut c = [state.q[0], state.q[1]];
                for j in 0..n {
                    let (s, co) = psi[j].sin_cos();
                    c[0] -= self.a[i][j] * co;
                    c[1] -= self.a[i][j] * s;
                }
                c
            })
            .collect()
    }

    pub fn link_velocities(&self, state: &SnakeState) -> Vec<[f64; 2]> {
        let n = self.cfg.n_links;
        let psi = state.headings();
        (0..n)
            .map(|i| {
                let mut v = [state.q_dot[0], state.q_dot[1]];
                for j in 0..n {
                    let (s, c) = psi[j].sin_cos();
                    let w = self.a[i][j] * state.q_dot[2 + j];
                    // −a_ij e⊥_j ψ̇_j with e⊥ = (−sin, cos)
                    v[0] += w * s;
                    v[1] -= w * c;
                }
                v
            })
            .collect()
    }

    pub fn center_of_mass(&self, state: &SnakeState) -> [f64; 2] {
        let centers = self.link_centers(state);
        let n = centers.len() as f64;
        let sum = centers
            .iter()
            .fold([0.0, 0.0], |acc, c| [acc[0] + c[0], acc[1] + c[1]]);
        [sum[0] / n, sum[1] / n]
    }

    pub fn linear_momentum(&self, state: &SnakeState) -> [f64; 2] {
        let m = self.cfg.link_mass;
        self.link_velocities(state)
            .iter()
            .fold([0.0, 0.0], |acc, v| [acc[0] + m * v[0], acc[1] + m * v[1]])
    }

    pub fn kinetic_energy(&self, state: &SnakeState) -> f64 {
        let m = self.cfg.link_mass;
        let inertia = self.cfg.link_inertia();
        let translational: f64 = self
            .link_velocities(state)
            .iter()
            .map(|v| 0.5 * m * (v[0] * v[0] + v[1] * v[1]))
            .sum();
        let rotational: f64 = state.q_dot[2..].iter().map(|w| 0.5 * inertia * w * w).sum();
        translational + rotational
    }

    fn mass_matrix(&self, trig: &[(f64, f64)]) -> DMatrix<f64> {
        let n = self.cfg.n_links;
        let m = self.cfg.link_mass;
        let inertia = self.cfg.link_inertia();
        let mut mm = DMatrix::zeros(n + 2, n + 2);
        mm[(0, 0)] = n as f64 * m;
        mm[(1, 1)] = n as f64 * m;
        for j in 0..n {
            let (s, c) = trig[j];
            // −m A_j e⊥_j
            let px = m * self.col_sum[j] * s;
            let py = -m * self.col_sum[j] * c;
            mm[(0, 2 + j)] = px;
            mm[(2 + j, 0)] = px;
            mm[(1, 2 + j)] = py;
            mm[(2 + j, 1)] = py;
            for k in j..n {
                // cos(ψ_j − ψ_k)
                let cos_jk = c * trig[k].1 + s * trig[k].0;
                let mut v = m * self.gram[j][k] * cos_jk;
                if j == k {
                    v += inertia;
                }
                mm[(2 + j, 2 + k)] = v;
                mm[(2 + k, 2 + j)] = v;
            }
        }
        mm
    }

    /// Generalized accelerations for the given state and joint torques.
    fn accelerations(&self, q: &[f64], q_dot: &[f64], torques: &[f64]) -> Option<DVector<f64>> {
        let n = self.cfg.n_links;
        let m = self.cfg.link_mass;
        let psi = &q[2..];
        let psi_dot = &q_dot[2..];
        let trig: Vec<(f64, f64)> = psi.iter().map(|p| p.sin_cos()).collect();

        let mut rhs = DVector::zeros(n + 2);
        for i in 0..n {
            let mut v = [q_dot[0], q_dot[1]];
            for j in 0..=i {
                let w = self.a[i][j] * psi_dot[j];
                v[0] += w * trig[j].0;
                v[1] -= w * trig[j].1;
            }
            let f = friction_force(v, psi[i], &self.cfg);
            rhs[0] += f[0];
            rhs[1] += f[1];
            for k in 0..=i {
                // −a_ik e⊥_k · F_i
                let (s, c) = trig[k];
                rhs[2 + k] -= self.a[i][k] * (-s * f[0] + c * f[1]);
            }
        }
        for j in 0..n {
            let (s, c) = trig[j];
            let w2 = psi_dot[j] * psi_dot[j];
            rhs[0] -= m * self.col_sum[j] * c * w2;
            rhs[1] -= m * self.col_sum[j] * s * w2;
            for k in 0..n {
                // sin(ψ_j − ψ_k)
                let sin_jk = s * trig[k].1 - c * trig[k].0;
                rhs[2 + k] += m * self.gram[k][j] * sin_jk * w2;
            }
        }
        for (joint, &tau) in torques.iter().enumerate() {
            rhs[2 + joint] -= tau;
            rhs[2 + joint + 1] += tau;
        }
        let mm = self.mass_matrix(&trig);
        mm.cholesky().map(|ch| ch.solve(&rhs))
    }

    /// Advances one control tick (`dt`) with RK4 substeps.
    pub fn step(&self, state: &SnakeState, drive: JointDrive<'_>) -> Result<SnakeState, AbortReason> {
        let n = self.cfg.n_links;
        let dim = n + 2;
        let h = self.cfg.dt / self.cfg.substeps as f64;
        let cfg = &self.cfg;
        let deriv = |y: &[f64]| -> Option<Vec<f64>> {
            let (q, q_dot) = y.split_at(dim);
            let torques: Vec<f64> = match drive {
                JointDrive::Servo(setpoints) => (0..n - 1)
                    .map(|k| {
                        let phi = q[3 + k] - q[2 + k];
                        let phi_dot = q_dot[3 + k] - q_dot[2 + k];
                        servo_torque(setpoints[k], phi, phi_dot, cfg)
                    })
                    .collect(),
                JointDrive::Torque(t) => t.to_vec(),
            };
            let acc = self.accelerations(q, q_dot, &torques)?;
            let mut out = Vec::with_capacity(2 * dim);
            out.extend_from_slice(q_dot);
            out.extend(acc.iter().copied());
            Some(out)
        };
        let mut y: Vec<f64> = state.q.iter().chain(&state.q_dot).copied().collect();
        let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
            y.iter().zip(k).map(|(a, b)| a + s * b).collect()
        };
        for _ in 0..self.cfg.substeps {
            let k1 = deriv(&y).ok_or(AbortReason::NonFinite)?;
            let k2 = deriv(&axpy(&y, &k1, 0.5 * h)).ok_or(AbortReason::NonFinite)?;
            let k3 = deriv(&axpy(&y, &k2, 0.5 * h)).ok_or(AbortReason::NonFinite)?;
            let k4 = deriv(&axpy(&y, &k3, h)).ok_or(AbortReason::NonFinite)?;
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(AbortReason::NonFinite);
        }
        let next = SnakeState {
            q: y[..dim].to_vec(),
            q_dot: y[dim..].to_vec(),
        };
        if let Some(joint) = next.joint_angles().iter().position(|p| p.abs() > FRAC_PI_2) {
            return Err(AbortReason::JointLimit { joint });
        }
        Ok(next)
    }
}

/// One control tick with the joints servoed to `joint_setpoints`.
pub fn dynamics_step(
    model: &SnakeModel,
    state: &SnakeState,
    joint_setpoints: &[f64],
) -> Result<Result<SnakeState, AbortReason>> {
    let expected = model.config().n_joints();
    if joint_setpoints.len() != expected {
        return Err(Error::dim("joint setpoints", expected, joint_setpoints.len()));
    }
    Ok(model.step(state, JointDrive::Servo(joint_setpoints)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Straight,
    Left,
    Right,
}

impl Style {
    pub const ALL: [Style; 3] = [Style::Straight, Style::Left, Style::Right];

    /// Sign of the side-shift term in the reward.
    pub fn beta(self) -> f64 {
        match self {
            Style::Straight => 0.0,
            Style::Left => 1.0,
            Style::Right => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Style::Straight => "straight",
            Style::Left => "left",
            Style::Right => "right",
        }
    }
}

impl std::str::FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "straight" => Ok(Style::Straight),
            "left" => Ok(Style::Left),
            "right" => Ok(Style::Right),
            other => Err(Error::InvalidParameter(format!("unknown style {other:?}"))),
        }
    }
}

impl std::fmt::Display for Style {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Decoded amplitudes `R` and offsets `X` for every joint, radians.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub amplitudes: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl JointTable {
    pub fn mirrored(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.clone(),
            offsets: self.offsets.iter().map(|x| -x).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocomotionConfig {
    pub snake: SnakeConfig,
    pub cpg: CpgConfig,
    /// Ticks per episode.
    pub episode_steps: usize,
    /// Heading change that ends a turning episode early, degrees.
    pub turn_limit_deg: f64,
    pub offset_clamp: f64,
    pub r_dist: f64,
    pub r_side: f64,
}

impl Default for LocomotionConfig {
    fn default() -> Self {
        Self {
            snake: SnakeConfig::default(),
            cpg: CpgConfig::default(),
            episode_steps: 120,
            turn_limit_deg: 120.0,
            offset_clamp: DEFAULT_OFFSET_CLAMP,
            r_dist: 10.0,
            r_side: 20.0,
        }
    }
}

impl LocomotionConfig {
    pub fn validate(&self) -> Result<()> {
        self.snake.validate()?;
        self.cpg.validate()?;
        if !(self.turn_limit_deg > 0.0) {
            return Err(Error::Config("turn_limit_deg must be > 0".into()));
        }
        if !(self.offset_clamp > 0.0 && self.offset_clamp.is_finite()) {
            return Err(Error::Config("offset_clamp must be > 0".into()));
        }
        Ok(())
    }

    pub fn turn_limit(&self) -> f64 {
        self.turn_limit_deg * PI / 180.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub t: f64,
    pub head: [f64; 2],
    pub com: [f64; 2],
    pub heading: f64,
    pub joints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    /// Center-of-mass displacement from the start, m.
    pub d: f64,
    /// Lateral center-of-mass displacement in the initial heading frame,
    /// positive to the left, m.
    pub s: f64,
    /// Head-link heading relative to the start, rad (unwrapped).
    pub heading_change: f64,
    pub steps_executed: usize,
    pub early_terminated: bool,
    pub aborted: Option<AbortReason>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Seed stream for initial CPG phases.
const PHASE_STREAM: u64 = 0x5048_4153;

/// Initial CPG state for an episode seed.
pub fn initial_cpg_state(n_joints: usize, seed: u64) -> CpgState {
    let mut rng = rng_from(derive_seed(seed, &[PHASE_STREAM]));
    CpgState::random(n_joints, &mut rng)
}

/// CPG and body advancing together, one control tick at a time.
#[derive(Debug, Clone)]
pub struct LocomotionSim {
    model: SnakeModel,
    cpg: CpgParams,
    cpg_substeps: usize,
    cpg_state: CpgState,
    snake_state: SnakeState,
    start_com: [f64; 2],
    start_heading: f64,
    steps: usize,
    aborted: Option<AbortReason>,
    trajectory: Vec<TrajectoryPoint>,
}

impl LocomotionSim {
    pub fn new(cfg: &LocomotionConfig, initial_cpg: CpgState) -> Result<Self> {
        cfg.validate()?;
        let model = SnakeModel::new(cfg.snake.clone())?;
        let n_joints = cfg.snake.n_joints();
        if initial_cpg.theta.len() != n_joints {
            return Err(Error::dim("initial cpg phases", n_joints, initial_cpg.theta.len()));
        }
        let cpg = cfg.cpg.chain(n_joints)?;
        let snake_state = SnakeState::straight(cfg.snake.n_links);
        Ok(Self {
            start_com: model.center_of_mass(&snake_state),
            start_heading: snake_state.headings()[0],
            model,
            cpg,
            cpg_substeps: cfg.cpg.substeps,
            cpg_state: initial_cpg,
            snake_state,
            steps: 0,
            aborted: None,
            trajectory: Vec::new(),
        })
    }

    pub fn model(&self) -> &SnakeModel {
        &self.model
    }

    pub fn snake_state(&self) -> &SnakeState {
        &self.snake_state
    }

    pub fn cpg_state(&self) -> &CpgState {
        &self.cpg_state
    }

    pub fn aborted(&self) -> Option<AbortReason> {
        self.aborted
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn heading_change(&self) -> f64 {
        self.snake_state.headings()[0] - self.start_heading
    }

    /// Advances CPG and body by one tick with the given joint table. Does
    /// nothing once the rollout has aborted.
    pub fn tick(&mut self, table: &JointTable) -> Result<Option<AbortReason>> {
        if self.aborted.is_some() {
            return Ok(self.aborted);
        }
        self.cpg.set_targets(&table.amplitudes, &table.offsets)?;
        let dt = self.model.config().dt;
        let cpg_next = match cpg_step(&self.cpg_state, &self.cpg, dt, self.cpg_substeps) {
            Ok(s) => s,
            Err(Error::CpgDiverged { .. }) => {
                self.aborted = Some(AbortReason::NonFinite);
                return Ok(self.aborted);
            }
            Err(e) => return Err(e),
        };
        let setpoints = cpg_output(&cpg_next, &self.cpg);
        match dynamics_step(&self.model, &self.snake_state, &setpoints)? {
            Ok(next) => {
                self.cpg_state = cpg_next;
                self.snake_state = next;
                self.steps += 1;
                self.record();
                Ok(None)
            }
            Err(reason) => {
                self.aborted = Some(reason);
                Ok(self.aborted)
            }
        }
    }

    fn record(&mut self) {
        let state = &self.snake_state;
        self.trajectory.push(TrajectoryPoint {
            step: self.steps,
            t: self.steps as f64 * self.model.config().dt,
            head: [state.q[0], state.q[1]],
            com: self.model.center_of_mass(state),
            heading: state.headings()[0],
            joints: state.joint_angles(),
        });
    }

    pub fn outcome(&self, early_terminated: bool) -> EpisodeOutcome {
        let com = self.model.center_of_mass(&self.snake_state);
        let dx = com[0] - self.start_com[0];
        let dy = com[1] - self.start_com[1];
        let (sh, ch) = self.start_heading.sin_cos();
        EpisodeOutcome {
            d: dx.hypot(dy),
            s: -dx * sh + dy * ch,
            heading_change: self.heading_change(),
            steps_executed: self.steps,
            early_terminated,
            aborted: self.aborted,
            trajectory: self.trajectory.clone(),
        }
    }
}

/// Runs one episode from the seeded initial phases.
pub fn run_episode(table: &JointTable, style: Style, cfg: &LocomotionConfig, seed: u64) -> Result<EpisodeOutcome> {
    let phases = initial_cpg_state(cfg.snake.n_joints(), seed);
    run_episode_from(table, style, cfg, phases)
}

/// Runs one episode from an explicit initial CPG state. Turning episodes end
/// early once the head has turned `turn_limit` toward the commanded side.
pub fn run_episode_from(
    table: &JointTable,
    style: Style,
    cfg: &LocomotionConfig,
    initial_cpg: CpgState,
) -> Result<EpisodeOutcome> {
    let n_joints = cfg.snake.n_joints();
    if table.amplitudes.len() != n_joints {
        return Err(Error::dim("table amplitudes", n_joints, table.amplitudes.len()));
    }
    if table.offsets.len() != n_joints {
        return Err(Error::dim("table offsets", n_joints, table.offsets.len()));
    }
    let mut sim = LocomotionSim::new(cfg, initial_cpg)?;
    let limit = cfg.turn_limit();
    let mut early = false;
    for _ in 0..cfg.episode_steps {
        if sim.tick(table)?.is_some() {
            break;
        }
        let turned = style.beta() * sim.heading_change();
        if style != Style::Straight && turned >= limit {
            early = true;
            break;
        }
    }
    Ok(sim.outcome(early))
}

/// Episode reward `R_dist · ln(d + 1) + β · R_side · s`.
pub fn reward(outcome: &EpisodeOutcome, style: Style, cfg: &LocomotionConfig) -> f64 {
    reward_terms(outcome.d, outcome.s, style, cfg.r_dist, cfg.r_side)
}

pub fn reward_terms(d: f64, s: f64, style: Style, r_dist: f64, r_side: f64) -> f64 {
    r_dist * d.ln_1p() + style.beta() * r_side * s
}
