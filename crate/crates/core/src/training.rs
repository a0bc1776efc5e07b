//! Full-batch gradient descent with per-iteration frequency diagnostics.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, Circuit};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::export::fmt_num;
use crate::fourier::{
    dft_uniform, dft_uniform_at, nudft_projected, principal_direction, projected_k_grid,
    relative_error_values, top_peaks, ProjectionDirection, SpectrumSeries,
};

/// Number of frequencies in the grid used for projected (non-uniform) data.
pub const PROJECTED_GRID_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub init_range: (f64, f64),
    pub record_every: usize,
    pub tracked_peaks: usize,
    /// Overrides the ansatz output scale when set.
    pub output_scale: Option<f64>,
    /// Stop once `‖f - y‖ / ‖y‖` falls to this value.
    pub stop_at_relative_l2: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            iterations: 200,
            seed: 0,
            init_range: (0.0, 2.0 * PI),
            record_every: 1,
            tracked_peaks: 3,
            output_scale: None,
            stop_at_relative_l2: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if self.tracked_peaks == 0 {
            return Err(Error::Config("tracked_peaks must be at least 1".into()));
        }
        let (a, b) = self.init_range;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("bad init range ({a}, {b})")));
        }
        if let Some(s) = self.output_scale {
            if !s.is_finite() {
                return Err(Error::Config("output_scale must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn effective_spec(&self, spec: &AnsatzSpec) -> AnsatzSpec {
        match self.output_scale {
            Some(s) => spec.clone().with_output_scale(s),
            None => spec.clone(),
        }
    }
}

/// Seeded uniform draw of `count` angles from `init_range`.
pub fn init_params(count: usize, config: &TrainConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (a, b) = config.init_range;
    (0..count).map(|_| rng.gen_range(a..b)).collect()
}

/// How per-sample vectors are taken to the frequency domain.
#[derive(Debug, Clone)]
pub enum FrequencyFrame {
    /// One-dimensional inputs on `x_i = 2πi/N`: unitary DFT on integer `k`.
    Uniform { n: usize },
    /// Anything else: direct sums along the first principal direction.
    Projected {
        direction: ProjectionDirection,
        points: Vec<Vec<f64>>,
        k_grid: Vec<f64>,
    },
}

impl FrequencyFrame {
    pub fn for_inputs(inputs: &[Vec<f64>]) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Shape("no inputs".into()));
        }
        if is_uniform_grid(inputs) {
            return Ok(FrequencyFrame::Uniform { n: inputs.len() });
        }
        let direction = principal_direction(inputs)?;
        let proj = inputs
            .iter()
            .map(|x| direction.project(x))
            .collect::<Result<Vec<_>>>()?;
        let k_grid = projected_k_grid(&proj, PROJECTED_GRID_SIZE)?;
        Ok(FrequencyFrame::Projected {
            direction,
            points: inputs.to_vec(),
            k_grid,
        })
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, FrequencyFrame::Uniform { .. })
    }

    pub fn transform(&self, values: &[f64]) -> Result<SpectrumSeries> {
        match self {
            FrequencyFrame::Uniform { .. } => dft_uniform(values),
            FrequencyFrame::Projected {
                direction,
                points,
                k_grid,
            } => nudft_projected(points, values, direction, k_grid),
        }
    }

    pub fn transform_at(&self, values: &[f64], k: f64) -> Complex64 {
        match self {
            FrequencyFrame::Uniform { .. } => dft_uniform_at(values, k.round() as i64),
            FrequencyFrame::Projected {
                direction, points, ..
            } => {
                let norm = 1.0 / (values.len() as f64).sqrt();
                points
                    .iter()
                    .zip(values)
                    .map(|(x, &y)| {
                        let t: f64 = x.iter().zip(direction.components()).map(|(a, b)| a * b).sum();
                        Complex64::from_polar(y, -t * k)
                    })
                    .sum::<Complex64>()
                    * norm
            }
        }
    }
}

/// True when inputs are 1-D and equal to `2πi/N` within `1e-12`.
pub fn is_uniform_grid(inputs: &[Vec<f64>]) -> bool {
    let n = inputs.len() as f64;
    inputs
        .iter()
        .enumerate()
        .all(|(i, x)| x.len() == 1 && (x[0] - 2.0 * PI * i as f64 / n).abs() <= 1e-12)
}

/// Outputs and gradient rows `∂f(x_i)/∂θ` for every input.
pub fn jacobian(
    circuit: &Circuit,
    params: &[f64],
    inputs: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let rows = inputs
        .par_iter()
        .map(|x| circuit.value_and_gradient(params, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().unzip())
}

fn outputs(circuit: &Circuit, params: &[f64], inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    inputs
        .par_iter()
        .map(|x| circuit.evaluate(params, x))
        .collect()
}

/// `ε_i = f(x_i, θ) - y_i`.
pub fn residuals(spec: &AnsatzSpec, params: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    let circuit = spec.compile()?;
    let f = outputs(&circuit, params, &data.inputs)?;
    Ok(f.iter().zip(&data.labels).map(|(f, y)| f - y).collect())
}

/// `L = ½ Σ ε_i²`.
pub fn mse_loss(spec: &AnsatzSpec, params: &[f64], data: &Dataset) -> Result<f64> {
    Ok(half_sum_sq(&residuals(spec, params, data)?))
}

fn half_sum_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|e| e * e).sum::<f64>()
}

/// `‖f - y‖ / ‖y‖`.
pub fn relative_l2_error(spec: &AnsatzSpec, params: &[f64], data: &Dataset) -> Result<f64> {
    let r = residuals(spec, params, data)?;
    relative_l2(&r, &data.labels)
}

fn relative_l2(residuals: &[f64], labels: &[f64]) -> Result<f64> {
    let y = labels.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y == 0.0 {
        return Err(Error::DivisionByZero("all labels are zero".into()));
    }
    Ok(residuals.iter().map(|v| v * v).sum::<f64>().sqrt() / y)
}

fn loss_gradient(residuals: &[f64], jac: &[Vec<f64>], num_params: usize) -> Vec<f64> {
    let mut g = vec![0.0; num_params];
    for (e, row) in residuals.iter().zip(jac) {
        for (gl, d) in g.iter_mut().zip(row) {
            *gl += e * d;
        }
    }
    g
}

/// `θ - η Σ_i ε_i ∇f(x_i)`.
pub fn gd_step(spec: &AnsatzSpec, params: &[f64], data: &Dataset, eta: f64) -> Result<Vec<f64>> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("learning rate {eta} must be >= 0")));
    }
    let circuit = spec.compile()?;
    check_data(data)?;
    let (f, jac) = jacobian(&circuit, params, &data.inputs)?;
    let r: Vec<f64> = f.iter().zip(&data.labels).map(|(f, y)| f - y).collect();
    let g = loss_gradient(&r, &jac, circuit.num_params());
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok(params.iter().zip(&g).map(|(p, g)| p - eta * g).collect())
}

fn check_data(data: &Dataset) -> Result<()> {
    if data.inputs.len() != data.labels.len() {
        return Err(Error::Shape("inputs and labels differ in length".into()));
    }
    if data.is_empty() {
        return Err(Error::Shape("empty dataset".into()));
    }
    Ok(())
}

/// `‖Re[ε̂(k)* ∂f̂(k)/∂θ]‖` over parameters, given the residual spectrum
/// value and the gradient rows.
fn per_frequency_gradient(
    frame: &FrequencyFrame,
    eps_hat: Complex64,
    jac: &[Vec<f64>],
    k: f64,
) -> Vec<f64> {
    let num_params = jac.first().map_or(0, Vec::len);
    let mut column = vec![0.0; jac.len()];
    (0..num_params)
        .map(|l| {
            for (c, row) in column.iter_mut().zip(jac) {
                *c = row[l];
            }
            (eps_hat.conj() * frame.transform_at(&column, k)).re
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Signed gradient `∂L̂(k)/∂θ` of the per-frequency loss `½|ε̂(k)|²`.
pub fn freq_gradient(spec: &AnsatzSpec, params: &[f64], data: &Dataset, k: i64) -> Result<Vec<f64>> {
    check_data(data)?;
    if !is_uniform_grid(&data.inputs) {
        return Err(Error::Unsupported(
            "per-frequency gradient needs the uniform curve grid".into(),
        ));
    }
    let n = data.len() as i64;
    if !(-(n / 2)..n - n / 2).contains(&k) {
        return Err(Error::Index(format!("frequency {k} off the {n}-point grid")));
    }
    let circuit = spec.compile()?;
    let frame = FrequencyFrame::Uniform { n: data.len() };
    let (f, jac) = jacobian(&circuit, params, &data.inputs)?;
    let r: Vec<f64> = f.iter().zip(&data.labels).map(|(f, y)| f - y).collect();
    let eps_hat = dft_uniform_at(&r, k);
    Ok(per_frequency_gradient(&frame, eps_hat, &jac, k as f64))
}

pub fn freq_gradient_norm(spec: &AnsatzSpec, params: &[f64], data: &Dataset, k: i64) -> Result<f64> {
    Ok(norm(&freq_gradient(spec, params, data, k)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRecord {
    pub iteration: usize,
    pub loss: f64,
    pub residuals: Vec<f64>,
    /// `Δ_F(k)` per tracked peak.
    pub delta_f: Vec<f64>,
    /// `‖∂L̂(k)/∂θ‖` per tracked peak.
    pub grad_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainLog {
    pub tracked_ks: Vec<f64>,
    pub records: Vec<TrainRecord>,
    pub initial_params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub final_loss: f64,
    pub iterations_run: usize,
    pub complete: bool,
    pub failure: Option<String>,
}

impl TrainLog {
    pub fn initial_loss(&self) -> Option<f64> {
        self.records.first().map(|r| r.loss)
    }

    /// First recorded iteration at which each tracked `Δ_F` is below
    /// `threshold`.
    pub fn first_crossings(&self, threshold: f64) -> Vec<Option<usize>> {
        (0..self.tracked_ks.len())
            .map(|j| {
                self.records
                    .iter()
                    .find(|r| r.delta_f[j] < threshold)
                    .map(|r| r.iteration)
            })
            .collect()
    }

    /// Index into `tracked_ks` of the peak that crosses `threshold` first;
    /// simultaneous crossings go to the earlier-listed peak.
    pub fn first_learned(&self, threshold: f64) -> Option<usize> {
        self.first_crossings(threshold)
            .into_iter()
            .enumerate()
            .filter_map(|(j, t)| t.map(|t| (t, j)))
            .min()
            .map(|(_, j)| j)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["iter".to_string(), "loss".to_string()];
        header.extend(self.tracked_ks.iter().map(|k| format!("delta_f_k{k}")));
        header.extend(self.tracked_ks.iter().map(|k| format!("grad_norm_k{k}")));
        writeln!(w, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![r.iteration.to_string(), fmt_num(r.loss)];
            row.extend(r.delta_f.iter().map(|v| fmt_num(*v)));
            row.extend(r.grad_norms.iter().map(|v| fmt_num(*v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_residuals_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.records.first().map_or(0, |r| r.residuals.len());
        let header: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
        writeln!(w, "iter,{}", header.join(","))?;
        for r in &self.records {
            let row: Vec<String> = r.residuals.iter().map(|v| fmt_num(*v)).collect();
            writeln!(w, "{},{}", r.iteration, row.join(","))?;
        }
        Ok(())
    }
}

/// Runs gradient descent from `init_params`, recording diagnostics every
/// `record_every` iterations (before that iteration's update).
pub fn train(
    spec: &AnsatzSpec,
    init_params: &[f64],
    data: &Dataset,
    config: &TrainConfig,
) -> Result<TrainLog> {
    config.validate()?;
    check_data(data)?;
    let spec = config.effective_spec(spec);
    let circuit = spec.compile()?;
    if init_params.len() != circuit.num_params() {
        return Err(Error::Shape(format!(
            "expected {} initial parameters, got {}",
            circuit.num_params(),
            init_params.len()
        )));
    }

    let frame = FrequencyFrame::for_inputs(&data.inputs)?;
    let label_spectrum = frame.transform(&data.labels)?;
    let tracked_ks = top_peaks(&label_spectrum, config.tracked_peaks);
    let label_at: Vec<Complex64> = tracked_ks
        .iter()
        .map(|&k| label_spectrum.at(k))
        .collect::<Result<_>>()?;

    let mut log = TrainLog {
        tracked_ks: tracked_ks.clone(),
        records: Vec::new(),
        initial_params: init_params.to_vec(),
        final_params: init_params.to_vec(),
        final_loss: f64::NAN,
        iterations_run: 0,
        complete: true,
        failure: None,
    };
    let mut params = init_params.to_vec();

    for t in 0..config.iterations {
        let (f, jac) = jacobian(&circuit, &params, &data.inputs)?;
        let r: Vec<f64> = f.iter().zip(&data.labels).map(|(f, y)| f - y).collect();
        if r.iter().any(|v| !v.is_finite()) {
            log.complete = false;
            log.failure = Some(format!("non-finite residual at iteration {t}"));
            break;
        }
        let loss = half_sum_sq(&r);
        if t % config.record_every == 0 {
            let mut delta_f = Vec::with_capacity(tracked_ks.len());
            let mut grad_norms = Vec::with_capacity(tracked_ks.len());
            for (&k, &y_hat) in tracked_ks.iter().zip(&label_at) {
                let f_hat = frame.transform_at(&f, k);
                delta_f.push(relative_error_values(f_hat, y_hat)?);
                let eps_hat = f_hat - y_hat;
                grad_norms.push(norm(&per_frequency_gradient(&frame, eps_hat, &jac, k)));
            }
            log.records.push(TrainRecord {
                iteration: t,
                loss,
                residuals: r.clone(),
                delta_f,
                grad_norms,
            });
        }
        if let Some(target) = config.stop_at_relative_l2 {
            if relative_l2(&r, &data.labels)? <= target {
                break;
            }
        }
        let g = loss_gradient(&r, &jac, circuit.num_params());
        if g.iter().any(|v| !v.is_finite()) {
            log.complete = false;
            log.failure = Some(format!("non-finite gradient at iteration {t}"));
            break;
        }
        for (p, g) in params.iter_mut().zip(&g) {
            *p -= config.learning_rate * g;
        }
        log.iterations_run = t + 1;
    }

    log.final_loss = half_sum_sq(
        &outputs(&circuit, &params, &data.inputs)?
            .iter()
            .zip(&data.labels)
            .map(|(f, y)| f - y)
            .collect::<Vec<_>>(),
    );
    log.final_params = params;
    Ok(log)
}
