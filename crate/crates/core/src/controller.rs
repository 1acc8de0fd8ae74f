//! Sub-controllers, gating and output composition.
//!
//! The composed output for task `k` is `out = Σ_s w[k][s] · o_s`, where `o_s`
//! is the contribution of sub-controller `s` and `w[k]` is the task's gating
//! row. A gating row is a softmax over the raw coefficients of the
//! sub-controllers trained so far (`s ≤ k`, 1-based); entries for
//! sub-controllers that did not exist when the task was trained are exactly
//! zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default inverse temperature of the gating softmax.
pub const DEFAULT_TAU: f64 = 4.0;

/// Default clamp applied to decoded joint offsets, in radians.
pub const DEFAULT_OFFSET_CLAMP: f64 = std::f64::consts::FRAC_PI_4;

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Shape of a fully connected tanh recurrent network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnShape {
    pub n_neurons: usize,
    pub n_inputs: usize,
    pub output_indices: Vec<usize>,
}

impl Default for RnnShape {
    /// Seven neurons, one input, neuron 0 as the single output.
    fn default() -> Self {
        Self {
            n_neurons: 7,
            n_inputs: 1,
            output_indices: vec![0],
        }
    }
}

impl RnnShape {
    pub fn param_count(&self) -> usize {
        self.n_neurons * self.n_inputs + self.n_neurons * self.n_neurons
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_neurons == 0 {
            return Err(Error::InvalidParameter("n_neurons must be >= 1".into()));
        }
        if self.output_indices.is_empty() {
            return Err(Error::InvalidParameter("output_indices is empty".into()));
        }
        let mut seen = vec![false; self.n_neurons];
        for &i in &self.output_indices {
            if i >= self.n_neurons {
                return Err(Error::InvalidParameter(format!(
                    "output index {i} >= n_neurons {}",
                    self.n_neurons
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate output index {i}"
                )));
            }
        }
        Ok(())
    }
}

/// Weights of a recurrent sub-controller.
///
/// Activation update: `o_i ← tanh(Σ_j v[i][j]·o_j + Σ_k u[i][k]·x_k)`.
/// Both matrices are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    shape: RnnShape,
    input_weights: Vec<f64>,
    recurrent_weights: Vec<f64>,
}

impl RnnParams {
    pub fn new(shape: RnnShape, input_weights: Vec<f64>, recurrent_weights: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        let n = shape.n_neurons;
        if input_weights.len() != n * shape.n_inputs {
            return Err(Error::dim("input_weights", n * shape.n_inputs, input_weights.len()));
        }
        if recurrent_weights.len() != n * n {
            return Err(Error::dim("recurrent_weights", n * n, recurrent_weights.len()));
        }
        check_finite(&input_weights, "input_weights")?;
        check_finite(&recurrent_weights, "recurrent_weights")?;
        Ok(Self {
            shape,
            input_weights,
            recurrent_weights,
        })
    }

    pub fn zeros(shape: RnnShape) -> Result<Self> {
        let n = shape.n_neurons;
        let ni = shape.n_inputs;
        Self::new(shape, vec![0.0; n * ni], vec![0.0; n * n])
    }

    pub fn shape(&self) -> &RnnShape {
        &self.shape
    }

    pub fn n_neurons(&self) -> usize {
        self.shape.n_neurons
    }

    pub fn n_inputs(&self) -> usize {
        self.shape.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.shape.output_indices.len()
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn recurrent_weights(&self) -> &[f64] {
        &self.recurrent_weights
    }

    pub fn param_count(&self) -> usize {
        self.shape.param_count()
    }

    pub fn initial_state(&self) -> RnnState {
        RnnState {
            activations: vec![0.0; self.shape.n_neurons],
        }
    }

    fn step_into(&self, prev: &[f64], inputs: &[f64], next: &mut [f64]) {
        let n = self.shape.n_neurons;
        let ni = self.shape.n_inputs;
        for (i, out) in next.iter_mut().enumerate() {
            let v_row = &self.recurrent_weights[i * n..(i + 1) * n];
            let u_row = &self.input_weights[i * ni..(i + 1) * ni];
            let mut acc = 0.0;
            for (v, o) in v_row.iter().zip(prev) {
                acc += v * o;
            }
            for (u, x) in u_row.iter().zip(inputs) {
                acc += u * x;
            }
            *out = acc.tanh();
        }
    }

    /// One synchronous update of every neuron. Returns the new state and the
    /// activations of the output neurons.
    pub fn step(&self, state: &RnnState, inputs: &[f64]) -> Result<(RnnState, Vec<f64>)> {
        if inputs.len() != self.shape.n_inputs {
            return Err(Error::dim("rnn inputs", self.shape.n_inputs, inputs.len()));
        }
        if state.activations.len() != self.shape.n_neurons {
            return Err(Error::dim(
                "rnn state",
                self.shape.n_neurons,
                state.activations.len(),
            ));
        }
        let mut next = vec![0.0; self.shape.n_neurons];
        self.step_into(&state.activations, inputs, &mut next);
        let outputs = self.shape.output_indices.iter().map(|&i| next[i]).collect();
        Ok((RnnState { activations: next }, outputs))
    }

    /// Runs the network from the all-zero state over an input sequence.
    pub fn rollout(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if inputs.is_empty() {
            return Err(Error::Empty("rollout input sequence"));
        }
        let n = self.shape.n_neurons;
        let mut prev = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in inputs {
            if x.len() != self.shape.n_inputs {
                return Err(Error::dim("rnn inputs", self.shape.n_inputs, x.len()));
            }
            self.step_into(&prev, x, &mut next);
            outputs.push(self.shape.output_indices.iter().map(|&i| next[i]).collect());
            std::mem::swap(&mut prev, &mut next);
        }
        Ok(outputs)
    }

    /// Rollout specialised to one input and the first output neuron; the hot
    /// path of periodic-task training.
    pub(crate) fn rollout_scalar(&self, inputs: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(self.shape.n_inputs, 1);
        let n = self.shape.n_neurons;
        let idx = self.shape.output_indices[0];
        let mut prev = vec![0.0; n];
        let mut next = vec![0.0; n];
        out.clear();
        for &x in inputs {
            self.step_into(&prev, std::slice::from_ref(&x), &mut next);
            out.push(next[idx]);
            std::mem::swap(&mut prev, &mut next);
        }
    }
}

/// Activations of an [`RnnParams`] network. Starts at all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnState {
    pub activations: Vec<f64>,
}

/// Table sub-controller: per-joint amplitude and offset encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct TableParams {
    pub amp_enc: Vec<f64>,
    pub offsets_enc: Vec<f64>,
}

impl TableParams {
    pub fn new(amp_enc: Vec<f64>, offsets_enc: Vec<f64>) -> Result<Self> {
        if amp_enc.len() != offsets_enc.len() {
            return Err(Error::dim("offsets_enc", amp_enc.len(), offsets_enc.len()));
        }
        check_finite(&amp_enc, "amp_enc")?;
        check_finite(&offsets_enc, "offsets_enc")?;
        Ok(Self {
            amp_enc,
            offsets_enc,
        })
    }

    pub fn n_joints(&self) -> usize {
        self.amp_enc.len()
    }

    /// Decodes to `(amplitudes, offsets)` in radians: amplitudes pass through
    /// the logistic function, offsets through `offset_clamp · tanh`.
    pub fn decode(&self, offset_clamp: f64) -> (Vec<f64>, Vec<f64>) {
        let amps = self.amp_enc.iter().map(|&a| logistic(a)).collect();
        let offsets = self
            .offsets_enc
            .iter()
            .map(|&x| offset_clamp * x.tanh())
            .collect();
        (amps, offsets)
    }
}

/// Raw, pre-softmax gating coefficients `g_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GatingCoeffs(pub Vec<f64>);

/// Masked softmax of the gating coefficients for 1-based task `k`.
///
/// Entries `s ≤ k` get `exp(τ g_s) / Σ_{s' ≤ k} exp(τ g_s')`; the rest are 0.
pub fn gating_normalize(coeffs: &GatingCoeffs, k: usize, tau: f64) -> Result<Vec<f64>> {
    let g = &coeffs.0;
    let n = g.len();
    if k == 0 || k > n {
        return Err(Error::TaskIndex { k, n });
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    check_finite(&g[..k], "gating coefficients")?;
    let max = g[..k].iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let mut row = vec![0.0; n];
    let mut total = 0.0;
    for (w, &x) in row.iter_mut().zip(&g[..k]) {
        *w = (tau * (x - max)).exp();
        total += *w;
    }
    for w in &mut row[..k] {
        *w /= total;
    }
    Ok(row)
}

/// Weighted sum of contributions. Sub-controllers with zero weight may pass
/// `None`; every supplied contribution must have the same length.
pub fn compose(weights: &[f64], contributions: &[Option<&[f64]>]) -> Result<Vec<f64>> {
    if contributions.len() > weights.len() {
        return Err(Error::dim("contributions", weights.len(), contributions.len()));
    }
    let mut out: Option<Vec<f64>> = None;
    for (s, &w) in weights.iter().enumerate() {
        let c = contributions.get(s).copied().flatten();
        match c {
            Some(c) => {
                let acc = out.get_or_insert_with(|| vec![0.0; c.len()]);
                if acc.len() != c.len() {
                    return Err(Error::dim("contribution length", acc.len(), c.len()));
                }
                if w != 0.0 {
                    for (a, x) in acc.iter_mut().zip(c) {
                        *a += w * x;
                    }
                }
            }
            None if w != 0.0 => {
                return Err(Error::InvalidParameter(format!(
                    "missing contribution for sub-controller {} with weight {w}",
                    s + 1
                )));
            }
            None => {}
        }
    }
    out.ok_or(Error::Empty("contributions"))
}

/// Per-task gating rows over a fixed number of sub-controller slots.
#[derive(Debug, Clone, PartialEq)]
pub struct GatingTable {
    rows: Vec<Vec<f64>>,
    n_subcontrollers: usize,
    tau: f64,
}

impl GatingTable {
    pub fn new(n_subcontrollers: usize, tau: f64) -> Result<Self> {
        if n_subcontrollers == 0 {
            return Err(Error::InvalidParameter("gating table needs >= 1 slot".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        Ok(Self {
            rows: Vec::new(),
            n_subcontrollers,
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_subcontrollers(&self) -> usize {
        self.n_subcontrollers
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Row for 1-based task `k`.
    pub fn row(&self, k: usize) -> Option<&[f64]> {
        k.checked_sub(1)
            .and_then(|i| self.rows.get(i))
            .map(Vec::as_slice)
    }

    /// Normalizes the active coefficients of the next task and appends the
    /// resulting row.
    pub fn push(&mut self, active_coeffs: &[f64]) -> Result<&[f64]> {
        let k = self.rows.len() + 1;
        if active_coeffs.len() != k {
            return Err(Error::dim("active gating coefficients", k, active_coeffs.len()));
        }
        let row = self.row_for(active_coeffs)?;
        self.rows.push(row);
        Ok(self.rows.last().expect("just pushed"))
    }

    /// The row that `active_coeffs` (length k) would produce, without storing it.
    pub fn row_for(&self, active_coeffs: &[f64]) -> Result<Vec<f64>> {
        let k = active_coeffs.len();
        let mut g = vec![0.0; self.n_subcontrollers];
        if k > self.n_subcontrollers {
            return Err(Error::TaskIndex {
                k,
                n: self.n_subcontrollers,
            });
        }
        g[..k].copy_from_slice(active_coeffs);
        gating_normalize(&GatingCoeffs(g), k, self.tau)
    }

    /// Checks masking and normalization of every stored row.
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            validate_row(row, i + 1)?;
        }
        Ok(())
    }
}

/// A row for 1-based task `k` must be zero beyond `k`, non-negative, and sum
/// to one within 1e-12.
pub fn validate_row(row: &[f64], k: usize) -> Result<()> {
    if k == 0 || k > row.len() {
        return Err(Error::TaskIndex { k, n: row.len() });
    }
    if row[k..].iter().any(|&w| w != 0.0) {
        return Err(Error::Genome(format!("row {k} has nonzero weight for an untrained slot")));
    }
    if row[..k].iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Genome(format!("row {k} has a negative or non-finite weight")));
    }
    let sum: f64 = row[..k].iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Genome(format!("row {k} sums to {sum}")));
    }
    Ok(())
}

/// Sub-controller parameters that flatten into a genotype.
pub trait FlatParams: Sized {
    type Shape: Clone;

    fn shape(&self) -> Self::Shape;
    fn param_count_of(shape: &Self::Shape) -> usize;
    fn to_flat(&self) -> Vec<f64>;
    fn from_flat(shape: &Self::Shape, values: &[f64]) -> Result<Self>;
}

impl FlatParams for RnnParams {
    type Shape = RnnShape;

    fn shape(&self) -> RnnShape {
        self.shape.clone()
    }

    fn param_count_of(shape: &RnnShape) -> usize {
        shape.param_count()
    }

    /// Input weights row-major, then recurrent weights row-major.
    fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(&self.input_weights);
        v.extend_from_slice(&self.recurrent_weights);
        v
    }

    fn from_flat(shape: &RnnShape, values: &[f64]) -> Result<Self> {
        if values.len() != shape.param_count() {
            return Err(Error::dim("rnn parameters", shape.param_count(), values.len()));
        }
        let split = shape.n_neurons * shape.n_inputs;
        Self::new(
            shape.clone(),
            values[..split].to_vec(),
            values[split..].to_vec(),
        )
    }
}

impl FlatParams for TableParams {
    /// Number of joints.
    type Shape = usize;

    fn shape(&self) -> usize {
        self.n_joints()
    }

    fn param_count_of(n_joints: &usize) -> usize {
        2 * n_joints
    }

    /// Amplitude encodings, then offset encodings.
    fn to_flat(&self) -> Vec<f64> {
        let mut v = self.amp_enc.clone();
        v.extend_from_slice(&self.offsets_enc);
        v
    }

    fn from_flat(n_joints: &usize, values: &[f64]) -> Result<Self> {
        if values.len() != 2 * n_joints {
            return Err(Error::dim("table parameters", 2 * n_joints, values.len()));
        }
        Self::new(values[..*n_joints].to_vec(), values[*n_joints..].to_vec())
    }
}

/// Split point of a genotype: sub-controller parameters, then gating
/// coefficients `g_1..g_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenotypeLayout {
    pub sub_params: usize,
    pub gating: usize,
}

impl GenotypeLayout {
    pub fn len(&self) -> usize {
        self.sub_params + self.gating
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn for_task<P: FlatParams>(shape: &P::Shape, k: usize) -> Self {
        Self {
            sub_params: P::param_count_of(shape),
            gating: k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Genotype {
    pub values: Vec<f64>,
    pub layout: GenotypeLayout,
}

impl Genotype {
    pub fn from_values(values: Vec<f64>, layout: GenotypeLayout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::dim("genotype", layout.len(), values.len()));
        }
        Ok(Self { values, layout })
    }

    pub fn sub_params(&self) -> &[f64] {
        &self.values[..self.layout.sub_params]
    }

    pub fn gating(&self) -> &[f64] {
        &self.values[self.layout.sub_params..]
    }
}

pub fn genotype_encode<P: FlatParams>(sub: &P, active_coeffs: &[f64]) -> Genotype {
    let mut values = sub.to_flat();
    let layout = GenotypeLayout {
        sub_params: values.len(),
        gating: active_coeffs.len(),
    };
    values.extend_from_slice(active_coeffs);
    Genotype { values, layout }
}

pub fn genotype_decode<P: FlatParams>(genotype: &Genotype, shape: &P::Shape) -> Result<(P, Vec<f64>)> {
    let layout = genotype.layout;
    if genotype.values.len() != layout.len() {
        return Err(Error::dim("genotype", layout.len(), genotype.values.len()));
    }
    if P::param_count_of(shape) != layout.sub_params {
        return Err(Error::dim(
            "genotype sub-controller block",
            P::param_count_of(shape),
            layout.sub_params,
        ));
    }
    let sub = P::from_flat(shape, genotype.sub_params())?;
    Ok((sub, genotype.gating().to_vec()))
}

/// Append-only collection of trained sub-controllers and their gating rows.
///
/// Task `k` owns sub-controller `k` and gating row `k`; both are frozen once
/// pushed.
#[derive(Debug, Clone, PartialEq)]
pub struct Repertoire<P> {
    task_names: Vec<String>,
    subcontrollers: Vec<P>,
    coefficients: Vec<Vec<f64>>,
    gating: GatingTable,
}

impl<P> Repertoire<P> {
    pub fn new(capacity: usize, tau: f64) -> Result<Self> {
        Ok(Self {
            task_names: Vec::new(),
            subcontrollers: Vec::new(),
            coefficients: Vec::new(),
            gating: GatingTable::new(capacity, tau)?,
        })
    }

    pub fn len(&self) -> usize {
        self.subcontrollers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subcontrollers.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.gating.n_subcontrollers()
    }

    pub fn tau(&self) -> f64 {
        self.gating.tau()
    }

    pub fn task_names(&self) -> &[String] {
        &self.task_names
    }

    /// 1-based index of the task with this name.
    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.task_names.iter().position(|n| n == name).map(|i| i + 1)
    }

    pub fn subcontrollers(&self) -> &[P] {
        &self.subcontrollers
    }

    /// Raw gating coefficients; entry `k-1` has length `k`.
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn gating(&self) -> &GatingTable {
        &self.gating
    }

    pub fn row(&self, k: usize) -> Option<&[f64]> {
        self.gating.row(k)
    }

    /// Adds the next task's sub-controller and raw gating coefficients.
    pub fn push(&mut self, name: impl Into<String>, sub: P, coeffs: Vec<f64>) -> Result<&[f64]> {
        let name = name.into();
        if self.task_names.contains(&name) {
            return Err(Error::InvalidParameter(format!("task {name:?} already trained")));
        }
        self.gating.push(&coeffs)?;
        self.task_names.push(name);
        self.subcontrollers.push(sub);
        self.coefficients.push(coeffs);
        Ok(self.gating.rows().last().expect("row pushed"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn one_neuron(v: f64, u: f64) -> RnnParams {
        let shape = RnnShape {
            n_neurons: 1,
            n_inputs: 1,
            output_indices: vec![0],
        };
        RnnParams::new(shape, vec![u], vec![v]).unwrap()
    }

    #[test]
    fn step_single_neuron() {
        let net = one_neuron(0.5, 1.0);
        let (state, out) = net.step(&net.initial_state(), &[0.5]).unwrap();
        assert_abs_diff_eq!(state.activations[0], 0.46212, epsilon = 1e-5);
        assert_eq!(out, state.activations);
    }

    #[test]
    fn step_zero_weights_gives_zero() {
        let net = RnnParams::zeros(RnnShape::default()).unwrap();
        let state = RnnState {
            activations: vec![0.3, -0.9, 0.1, 0.0, 0.5, 0.2, -0.4],
        };
        let (next, _) = net.step(&state, &[2.5]).unwrap();
        assert!(next.activations.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn step_two_neurons_odd_symmetry() {
        let shape = RnnShape {
            n_neurons: 2,
            n_inputs: 1,
            output_indices: vec![0, 1],
        };
        let net = RnnParams::new(shape, vec![1.0, -1.0], vec![0.0; 4]).unwrap();
        let (_, out) = net.step(&net.initial_state(), &[0.25]).unwrap();
        assert_abs_diff_eq!(out[0], 0.24492, epsilon = 1e-5);
        assert_abs_diff_eq!(out[1], -0.24492, epsilon = 1e-5);
    }

    #[test]
    fn step_dimension_errors() {
        let net = RnnParams::zeros(RnnShape::default()).unwrap();
        let err = net.step(&net.initial_state(), &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::Dimension { what: "rnn inputs", expected: 1, actual: 2 }));
        let bad = RnnState { activations: vec![0.0; 3] };
        let err = net.step(&bad, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Dimension { what: "rnn state", .. }));
    }

    #[test]
    fn shape_validation() {
        let dup = RnnShape { n_neurons: 3, n_inputs: 1, output_indices: vec![1, 1] };
        assert!(dup.validate().is_err());
        let oob = RnnShape { n_neurons: 3, n_inputs: 1, output_indices: vec![3] };
        assert!(oob.validate().is_err());
        let empty = RnnShape { n_neurons: 3, n_inputs: 1, output_indices: vec![] };
        assert!(empty.validate().is_err());
        assert_eq!(RnnShape::default().param_count(), 56);
    }

    #[test]
    fn rollout_examples() {
        let zero = RnnParams::zeros(RnnShape::default()).unwrap();
        let outs = zero.rollout(&[vec![1.0], vec![-2.0], vec![0.3]]).unwrap();
        assert_eq!(outs, vec![vec![0.0]; 3]);

        let net = one_neuron(1.0, 1.0);
        let outs = net.rollout(&[vec![1.0], vec![0.0]]).unwrap();
        assert_abs_diff_eq!(outs[0][0], 0.76159, epsilon = 1e-5);
        assert_abs_diff_eq!(outs[1][0], 0.64201, epsilon = 1e-5);

        let (_, step_out) = net.step(&net.initial_state(), &[0.7]).unwrap();
        assert_eq!(net.rollout(&[vec![0.7]]).unwrap()[0], step_out);

        assert!(matches!(net.rollout(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn scalar_rollout_matches_general() {
        let shape = RnnShape::default();
        let values: Vec<f64> = (0..56).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.13).collect();
        let net = RnnParams::from_flat(&shape, &values).unwrap();
        let xs: Vec<f64> = (0..50).map(|t| (t as f64 * 0.1).cos()).collect();
        let general: Vec<f64> = net
            .rollout(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>())
            .unwrap()
            .into_iter()
            .map(|o| o[0])
            .collect();
        let mut fast = Vec::new();
        net.rollout_scalar(&xs, &mut fast);
        assert_eq!(general, fast);
    }

    #[test]
    fn table_decode_examples() {
        let t = TableParams::new(vec![0.0, 2.0], vec![0.0, 0.0]).unwrap();
        let (amps, offsets) = t.decode(DEFAULT_OFFSET_CLAMP);
        assert_eq!(amps[0], 0.5);
        assert_abs_diff_eq!(amps[1], 0.88080, epsilon = 1e-5);
        assert_eq!(offsets, vec![0.0, 0.0]);
    }

    #[test]
    fn gating_examples() {
        let g = GatingCoeffs(vec![3.0, -1.0, 8.0]);
        assert_eq!(gating_normalize(&g, 1, 4.0).unwrap(), vec![1.0, 0.0, 0.0]);

        let g = GatingCoeffs(vec![0.0; 4]);
        assert_eq!(gating_normalize(&g, 2, 4.0).unwrap(), vec![0.5, 0.5, 0.0, 0.0]);

        let g = GatingCoeffs(vec![0.5, 0.25, 9.9]);
        let row = gating_normalize(&g, 2, 4.0).unwrap();
        // e^2 / (e^2 + e^1) and e^1 / (e^2 + e^1)
        let e2 = 2f64.exp();
        let e1 = 1f64.exp();
        assert_abs_diff_eq!(row[0], e2 / (e2 + e1), epsilon = 1e-15);
        assert_abs_diff_eq!(row[0], 0.73106, epsilon = 1e-5);
        assert_abs_diff_eq!(row[1], 0.26894, epsilon = 1e-5);
        assert_eq!(row[2], 0.0);
    }

    #[test]
    fn gating_errors() {
        let g = GatingCoeffs(vec![0.0, 1.0]);
        assert!(matches!(gating_normalize(&g, 0, 4.0), Err(Error::TaskIndex { .. })));
        assert!(matches!(gating_normalize(&g, 3, 4.0), Err(Error::TaskIndex { .. })));
        assert!(gating_normalize(&g, 1, 0.0).is_err());
        let g = GatingCoeffs(vec![f64::NAN, 1.0]);
        assert!(matches!(gating_normalize(&g, 2, 4.0), Err(Error::NonFinite(_))));
        // masked entries are never inspected
        let g = GatingCoeffs(vec![1.0, f64::INFINITY]);
        assert_eq!(gating_normalize(&g, 1, 4.0).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn gating_survives_large_logits() {
        let g = GatingCoeffs(vec![200.0, 199.0]);
        let row = gating_normalize(&g, 2, 4.0).unwrap();
        assert!(row.iter().all(|w| w.is_finite()));
        assert_abs_diff_eq!(row[0] + row[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn compose_examples() {
        let a = [3.2];
        assert_eq!(compose(&[1.0, 0.0], &[Some(&a), None]).unwrap(), vec![3.2]);

        let one = [1.0];
        let minus = [-1.0];
        assert_eq!(compose(&[0.5, 0.5], &[Some(&one), Some(&minus)]).unwrap(), vec![0.0]);

        let two = [2.0];
        let out = compose(&[0.73106, 0.26894], &[Some(&two), Some(&one)]).unwrap();
        assert_abs_diff_eq!(out[0], 1.73106, epsilon = 1e-12);
    }

    #[test]
    fn compose_errors() {
        let a = [1.0, 2.0];
        let b = [1.0];
        assert!(matches!(
            compose(&[0.5, 0.5], &[Some(&a), Some(&b)]),
            Err(Error::Dimension { .. })
        ));
        assert!(compose(&[0.5, 0.5], &[Some(&a), None]).is_err());
    }

    #[test]
    fn gating_table_push_and_validate() {
        let mut table = GatingTable::new(3, 4.0).unwrap();
        assert_eq!(table.push(&[0.7]).unwrap(), &[1.0, 0.0, 0.0]);
        table.push(&[0.0, 0.0]).unwrap();
        assert!(table.push(&[0.0]).is_err());
        table.push(&[0.1, 0.2, 0.3]).unwrap();
        table.validate().unwrap();
        assert_eq!(table.row(2).unwrap(), &[0.5, 0.5, 0.0]);
        assert!(table.row(0).is_none());
        assert!(table.push(&[0.0; 4]).is_err());
    }

    #[test]
    fn genotype_lengths() {
        let rnn = RnnParams::zeros(RnnShape::default()).unwrap();
        assert_eq!(genotype_encode(&rnn, &[0.0]).values.len(), 57);
        assert_eq!(GenotypeLayout::for_task::<RnnParams>(&RnnShape::default(), 4).len(), 60);
        let table = TableParams::new(vec![0.0; 8], vec![0.0; 8]).unwrap();
        assert_eq!(genotype_encode(&table, &[0.0; 3]).values.len(), 19);
    }

    #[test]
    fn genotype_layout_order() {
        let shape = RnnShape { n_neurons: 2, n_inputs: 1, output_indices: vec![0] };
        let net = RnnParams::new(shape, vec![1.0, 2.0], vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let g = genotype_encode(&net, &[7.0, 8.0]);
        assert_eq!(g.values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let table = TableParams::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(genotype_encode(&table, &[5.0]).values, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn genotype_decode_length_mismatch() {
        let g = Genotype {
            values: vec![0.0; 10],
            layout: GenotypeLayout { sub_params: 56, gating: 1 },
        };
        assert!(genotype_decode::<RnnParams>(&g, &RnnShape::default()).is_err());
        assert!(Genotype::from_values(vec![0.0; 3], GenotypeLayout { sub_params: 2, gating: 2 }).is_err());
    }

    #[test]
    fn repertoire_is_append_only() {
        let mut rep: Repertoire<TableParams> = Repertoire::new(3, 4.0).unwrap();
        let t = TableParams::new(vec![0.0; 2], vec![0.0; 2]).unwrap();
        rep.push("a", t.clone(), vec![0.3]).unwrap();
        assert!(rep.push("b", t.clone(), vec![0.3]).is_err());
        assert!(rep.push("a", t.clone(), vec![0.3, 0.1]).is_err());
        rep.push("b", t.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(rep.len(), 2);
        assert_eq!(rep.task_index("b"), Some(2));
        assert_eq!(rep.row(1).unwrap(), &[1.0, 0.0, 0.0]);
        assert_eq!(rep.row(2).unwrap(), &[0.5, 0.5, 0.0]);
    }

    proptest! {
        #[test]
        fn gating_rows_are_masked_and_normalized(
            g in prop::collection::vec(-20.0f64..20.0, 1..10),
            k_frac in 0.0f64..1.0,
            tau in 0.01f64..20.0,
        ) {
            let n = g.len();
            let k = 1 + ((k_frac * n as f64) as usize).min(n - 1);
            let row = gating_normalize(&GatingCoeffs(g), k, tau).unwrap();
            prop_assert!(row[k..].iter().all(|&w| w == 0.0));
            prop_assert!(row[..k].iter().all(|&w| w >= 0.0));
            let sum: f64 = row[..k].iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn gating_is_shift_invariant(
            g in prop::collection::vec(-5.0f64..5.0, 2..8),
            c in -50.0f64..50.0,
            tau in 0.1f64..10.0,
        ) {
            let k = g.len();
            let a = gating_normalize(&GatingCoeffs(g.clone()), k, tau).unwrap();
            let shifted: Vec<f64> = g.iter().map(|x| x + c).collect();
            let b = gating_normalize(&GatingCoeffs(shifted), k, tau).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn gating_is_monotone_in_own_coefficient(
            g in prop::collection::vec(-2.0f64..2.0, 2..8),
            s_frac in 0.0f64..1.0,
            delta in 0.01f64..1.0,
            tau in 0.1f64..5.0,
        ) {
            let k = g.len();
            let s = ((s_frac * k as f64) as usize).min(k - 1);
            let before = gating_normalize(&GatingCoeffs(g.clone()), k, tau).unwrap();
            let mut bumped = g;
            bumped[s] += delta;
            let after = gating_normalize(&GatingCoeffs(bumped), k, tau).unwrap();
            prop_assert!(after[s] > before[s]);
        }

        #[test]
        fn compose_is_linear(
            w in prop::collection::vec(0.0f64..1.0, 1..6),
            a in prop::collection::vec(-3.0f64..3.0, 18),
            b in prop::collection::vec(-3.0f64..3.0, 18),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let n = w.len();
            let len = 3;
            let ca: Vec<&[f64]> = a.chunks(len).take(n).collect();
            let cb: Vec<&[f64]> = b.chunks(len).take(n).collect();
            let mixed: Vec<Vec<f64>> = ca.iter().zip(&cb)
                .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| alpha * p + beta * q).collect())
                .collect();
            let lhs = compose(&w, &mixed.iter().map(|v| Some(v.as_slice())).collect::<Vec<_>>()).unwrap();
            let ra = compose(&w, &ca.iter().map(|v| Some(*v)).collect::<Vec<_>>()).unwrap();
            let rb = compose(&w, &cb.iter().map(|v| Some(*v)).collect::<Vec<_>>()).unwrap();
            for i in 0..len {
                prop_assert!((lhs[i] - (alpha * ra[i] + beta * rb[i])).abs() <= 1e-12);
            }
        }

        #[test]
        fn rnn_activations_stay_in_open_interval(
            values in prop::collection::vec(-3.0f64..3.0, 56),
            xs in prop::collection::vec(-1.0f64..1.0, 1..30),
        ) {
            let net = RnnParams::from_flat(&RnnShape::default(), &values).unwrap();
            let mut state = net.initial_state();
            for &x in &xs {
                let (next, _) = net.step(&state, &[x]).unwrap();
                prop_assert!(next.activations.iter().all(|a| a.abs() < 1.0));
                state = next;
            }
            let seq: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
            let r1 = net.rollout(&seq).unwrap();
            let r2 = net.rollout(&seq).unwrap();
            prop_assert_eq!(r1, r2);
        }

        #[test]
        fn genotype_round_trip_is_exact(
            values in prop::collection::vec(-1e6f64..1e6, 56),
            coeffs in prop::collection::vec(-10.0f64..10.0, 1..8),
            table in prop::collection::vec(-10.0f64..10.0, 16),
        ) {
            let net = RnnParams::from_flat(&RnnShape::default(), &values).unwrap();
            let g = genotype_encode(&net, &coeffs);
            let (back, c): (RnnParams, _) = genotype_decode(&g, &RnnShape::default()).unwrap();
            prop_assert_eq!(&back, &net);
            prop_assert_eq!(&c, &coeffs);
            prop_assert_eq!(genotype_encode(&back, &c), g);

            let t = TableParams::from_flat(&8, &table).unwrap();
            let g = genotype_encode(&t, &coeffs);
            let (back, c): (TableParams, _) = genotype_decode(&g, &8).unwrap();
            prop_assert_eq!(back.to_flat(), table);
            prop_assert_eq!(c, coeffs);
        }

        #[test]
        fn decoded_amplitudes_in_unit_interval(enc in prop::collection::vec(-30.0f64..30.0, 8)) {
            let t = TableParams::new(enc.clone(), enc).unwrap();
            let (amps, offsets) = t.decode(DEFAULT_OFFSET_CLAMP);
            prop_assert!(amps.iter().all(|&a| a > 0.0 && a < 1.0));
            prop_assert!(offsets.iter().all(|&x| x.abs() <= DEFAULT_OFFSET_CLAMP));
        }
    }
}
