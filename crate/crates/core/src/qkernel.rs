//! Fidelity kernels, kernel-target alignment and a dual SVM solver for
//! precomputed kernels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::error::{Error, Result};
use crate::qntk::KernelMatrix;
use crate::statevector::StateVector;

pub const DEFAULT_C: f64 = 1000.0;
pub const KKT_TOL: f64 = 1e-5;
pub const ALIGNMENT_STEPS: usize = 50;
pub const ALIGNMENT_ETA: f64 = 0.1;

fn states(spec: &AnsatzSpec, params: &[f64], inputs: &[Vec<f64>]) -> Result<Vec<StateVector>> {
    let circuit = spec.compile()?;
    inputs
        .par_iter()
        .map(|x| circuit.prepare_state(params, x))
        .collect()
}

/// `K_ij = |⟨ψ(x_i)|ψ(x_j)⟩|²` from exact statevectors.
pub fn fidelity_kernel(spec: &AnsatzSpec, params: &[f64], inputs: &[Vec<f64>]) -> Result<KernelMatrix> {
    if inputs.is_empty() {
        return Err(Error::Shape("kernel needs at least one input".into()));
    }
    let psi = states(spec, params, inputs)?;
    let n = psi.len();
    let lower = (0..n)
        .into_par_iter()
        .map(|i| (0..i).map(|j| psi[i].fidelity(&psi[j])).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![vec![1.0; n]; n];
    for (i, row) in lower.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            rows[i][j] = *v;
            rows[j][i] = *v;
        }
    }
    KernelMatrix::new(rows)
}

/// `rows[a][i] = |⟨ψ(queries_a)|ψ(train_i)⟩|²`.
pub fn cross_kernel(
    spec: &AnsatzSpec,
    params: &[f64],
    queries: &[Vec<f64>],
    train: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let q = states(spec, params, queries)?;
    let t = states(spec, params, train)?;
    q.par_iter()
        .map(|a| t.iter().map(|b| a.fidelity(b)).collect())
        .collect()
}

/// Kernel integrity report: symmetric, unit diagonal, entries in `[0, 1]`,
/// smallest eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelIntegrity {
    pub max_asymmetry: f64,
    pub max_diagonal_gap: f64,
    pub entries_in_unit_interval: bool,
    pub min_eigenvalue: f64,
}

pub fn fidelity_integrity(kernel: &KernelMatrix) -> Result<KernelIntegrity> {
    let n = kernel.size();
    let mut asym: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for i in 0..n {
        diag = diag.max((kernel.get(i, i) - 1.0).abs());
        for j in 0..i {
            asym = asym.max((kernel.get(i, j) - kernel.get(j, i)).abs());
        }
    }
    Ok(KernelIntegrity {
        max_asymmetry: asym,
        max_diagonal_gap: diag,
        entries_in_unit_interval: kernel
            .entries()
            .iter()
            .flatten()
            .all(|v| (-1e-12..=1.0 + 1e-12).contains(v)),
        min_eigenvalue: kernel.min_eigenvalue()?,
    })
}

fn check_labels(labels: &[f64]) -> Result<()> {
    if let Some(y) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
        return Err(Error::Domain(format!("label {y} is not +1 or -1")));
    }
    Ok(())
}

/// `A = Σ_ij K_ij y_i y_j / (N ‖K‖_F)`.
pub fn alignment(kernel: &KernelMatrix, labels: &[f64]) -> Result<f64> {
    check_labels(labels)?;
    let n = kernel.size();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for a {n}x{n} kernel", labels.len())));
    }
    let norm = kernel.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::DivisionByZero("kernel has zero Frobenius norm".into()));
    }
    Ok(target_sum(kernel.entries(), labels) / (n as f64 * norm))
}

fn target_sum(k: &[Vec<f64>], labels: &[f64]) -> f64 {
    k.iter()
        .zip(labels)
        .map(|(row, yi)| row.iter().zip(labels).map(|(v, yj)| v * yi * yj).sum::<f64>())
        .sum()
}

/// `∂K_ij/∂θ_l` for every `l`, shifting each of the two state preparations in
/// turn.
fn kernel_derivatives(spec: &AnsatzSpec, params: &[f64], inputs: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>> {
    let circuit = spec.compile()?;
    let base = states(spec, params, inputs)?;
    let shifted = inputs
        .par_iter()
        .map(|x| circuit.shifted_states(params, x))
        .collect::<Result<Vec<_>>>()?;
    let n = inputs.len();
    let p = circuit.num_params();
    // one-sided term: d_i[j][l] = ½(|⟨ψ_i^{l+}|ψ_j⟩|² - |⟨ψ_i^{l-}|ψ_j⟩|²)
    let one_sided = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..p)
                        .map(|l| {
                            let (plus, minus) = &shifted[i][l];
                            Ok(0.5 * (plus.fidelity(&base[j])? - minus.fidelity(&base[j])?))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..p).map(|l| one_sided[i][j][l] + one_sided[j][i][l]).collect())
                .collect()
        })
        .collect())
}

/// `∂A/∂θ` with kernel derivatives from the parameter-shift rule.
pub fn alignment_gradient(spec: &AnsatzSpec, params: &[f64], inputs: &[Vec<f64>], labels: &[f64]) -> Result<Vec<f64>> {
    let kernel = fidelity_kernel(spec, params, inputs)?;
    let a = alignment(&kernel, labels)?;
    let dk = kernel_derivatives(spec, params, inputs)?;
    let n = inputs.len();
    let norm = kernel.frobenius_norm();
    let p = spec.parameter_count();
    let mut grad = vec![0.0; p];
    for (l, g) in grad.iter_mut().enumerate() {
        let mut target = 0.0;
        let mut self_term = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = dk[i][j][l];
                target += d * labels[i] * labels[j];
                self_term += kernel.get(i, j) * d;
            }
        }
        *g = target / (n as f64 * norm) - a * self_term / (norm * norm);
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentRun {
    /// Best-scoring parameters seen, including the starting point.
    pub params: Vec<f64>,
    pub initial_alignment: f64,
    pub best_alignment: f64,
    /// Alignment before each step, then after the last.
    pub history: Vec<f64>,
    /// Set when a numeric failure cut the run short.
    pub warning: Option<String>,
}

/// Full-batch gradient ascent on the alignment, returning the best iterate.
pub fn optimize_alignment(
    spec: &AnsatzSpec,
    params0: &[f64],
    inputs: &[Vec<f64>],
    labels: &[f64],
    steps: usize,
    eta: f64,
) -> Result<AlignmentRun> {
    let initial = alignment(&fidelity_kernel(spec, params0, inputs)?, labels)?;
    let mut run = AlignmentRun {
        params: params0.to_vec(),
        initial_alignment: initial,
        best_alignment: initial,
        history: vec![initial],
        warning: None,
    };
    let mut params = params0.to_vec();
    for step in 0..steps {
        let g = match alignment_gradient(spec, &params, inputs, labels) {
            Ok(g) if g.iter().all(|v| v.is_finite()) => g,
            Ok(_) => {
                run.warning = Some(format!("non-finite alignment gradient at step {step}"));
                break;
            }
            Err(e) => {
                run.warning = Some(format!("step {step}: {e}"));
                break;
            }
        };
        for (p, g) in params.iter_mut().zip(&g) {
            *p += eta * g;
        }
        let a = match fidelity_kernel(spec, &params, inputs).and_then(|k| alignment(&k, labels)) {
            Ok(a) if a.is_finite() => a,
            Ok(_) | Err(_) => {
                run.warning = Some(format!("alignment not computable after step {step}"));
                break;
            }
        };
        run.history.push(a);
        if a > run.best_alignment {
            run.best_alignment = a;
            run.params.clone_from(&params);
        }
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub support_indices: Vec<usize>,
    pub labels: Vec<f64>,
}

impl SvmModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C = {} must be positive", self.c)));
        }
        if !self.bias.is_finite() {
            return Err(Error::Numeric("bias is not finite".into()));
        }
        if self.alpha.len() != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} labels",
                self.alpha.len(),
                self.labels.len()
            )));
        }
        check_labels(&self.labels)?;
        if let Some(a) = self.alpha.iter().find(|a| !(0.0..=self.c).contains(*a)) {
            return Err(Error::Domain(format!("coefficient {a} outside [0, {}]", self.c)));
        }
        if let Some(i) = self.support_indices.iter().find(|i| **i >= self.alpha.len()) {
            return Err(Error::Index(format!("support index {i} out of range")));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SvmModel = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// `Σ α_i y_i K(x_i, x) + b`.
    pub fn decision(&self, kernel_row: &[f64]) -> Result<f64> {
        if kernel_row.len() != self.alpha.len() {
            return Err(Error::Shape(format!(
                "kernel row has {} entries, model {}",
                kernel_row.len(),
                self.alpha.len()
            )));
        }
        Ok(self
            .alpha
            .iter()
            .zip(&self.labels)
            .zip(kernel_row)
            .map(|((a, y), k)| a * y * k)
            .sum::<f64>()
            + self.bias)
    }

    /// Sum of `α_i y_i`, zero at a feasible point.
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(&self.labels).map(|(a, y)| a * y).sum()
    }
}

/// `sign(Σ α_i y_i K(x_i, x) + b)` with `sign(0) = +1`.
pub fn svm_predict(model: &SvmModel, kernel_row: &[f64]) -> Result<f64> {
    Ok(if model.decision(kernel_row)? >= 0.0 { 1.0 } else { -1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoTrace {
    pub iterations: usize,
    /// Dual objective after each accepted update, starting from zero.
    pub objective: Vec<f64>,
    pub final_gap: f64,
}

pub fn svm_train(kernel: &KernelMatrix, labels: &[f64], c: f64) -> Result<SvmModel> {
    svm_train_traced(kernel, labels, c).map(|(m, _)| m)
}

/// Sequential minimal optimisation on the dual
/// `max Σα - ½ Σ α_i α_j y_i y_j K_ij, 0 ≤ α ≤ C, Σ α_i y_i = 0`, with
/// second-order working-set selection.
pub fn svm_train_traced(kernel: &KernelMatrix, labels: &[f64], c: f64) -> Result<(SvmModel, SmoTrace)> {
    check_labels(labels)?;
    let n = kernel.size();
    if labels.len() != n || n == 0 {
        return Err(Error::Shape(format!("{} labels for a {n}x{n} kernel", labels.len())));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("C = {c} must be positive")));
    }
    let min_eig = kernel.min_eigenvalue()?;
    if min_eig < -1e-9 {
        return Err(Error::Domain(format!("kernel is not PSD (min eigenvalue {min_eig:e})")));
    }
    let y = labels;
    let q = |i: usize, j: usize| y[i] * y[j] * kernel.get(i, j);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let objective = |alpha: &[f64], grad: &[f64]| {
        alpha.iter().zip(grad).map(|(a, g)| a - 0.5 * a * (g + 1.0)).sum::<f64>()
    };
    let mut trace = SmoTrace {
        iterations: 0,
        objective: vec![0.0],
        final_gap: f64::INFINITY,
    };
    let max_iter = 10 * n * n.max(100);
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let a = kernel.get(i, i) + kernel.get(t, t) - 2.0 * kernel.get(i, t);
                    let a = if a > 0.0 { a } else { 1e-12 };
                    if -b * b / a <= best {
                        best = -b * b / a;
                        j_sel = Some(t);
                    }
                }
            }
        }
        trace.final_gap = gmax - gmin;
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax - gmin >= KKT_TOL => (i, j),
            _ => break,
        };
        if trace.iterations >= max_iter {
            return Err(Error::Convergence(format!(
                "SMO stopped after {max_iter} updates with KKT gap {:e} (tolerance {KKT_TOL:e})",
                gmax - gmin
            )));
        }
        trace.iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let a = kernel.get(i, i) + kernel.get(j, j) - 2.0 * kernel.get(i, j);
            if a > 0.0 { a } else { 1e-12 }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            } else if diff <= 0.0 && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            } else if diff <= 0.0 && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            } else if sum <= c && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            } else if sum <= c && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
        trace.objective.push(objective(&alpha, &grad));
    }

    let bias = bias(&alpha, &grad, y, c);
    let support_indices = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let model = SvmModel {
        alpha,
        bias,
        c,
        support_indices,
        labels: y.to_vec(),
    };
    Ok((model, trace))
}

/// Average of `y_i - Σ_j α_j y_j K_ij` over free support vectors, or the
/// midpoint of the feasible interval when none is free.
fn bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut sum, mut free) = (0.0, 0usize);
    let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += v;
            free += 1;
        } else if (alpha[t] >= c) == (y[t] > 0.0) {
            lb = lb.max(v);
        } else {
            ub = ub.min(v);
        }
    }
    if free > 0 {
        sum / free as f64
    } else if lb.is_finite() && ub.is_finite() {
        0.5 * (lb + ub)
    } else if lb.is_finite() {
        lb
    } else if ub.is_finite() {
        ub
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::GateSlot;
    use crate::datasets::{dlp_dataset, DlpConfig};
    use crate::statevector::{Axis, Observable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn km(rows: Vec<Vec<f64>>) -> KernelMatrix {
        KernelMatrix::new(rows).unwrap()
    }

    #[test]
    fn alignment_examples() {
        let y = [1.0, -1.0, 1.0, -1.0];
        let ideal: Vec<Vec<f64>> = y.iter().map(|a| y.iter().map(|b| a * b).collect()).collect();
        assert!((alignment(&km(ideal), &y).unwrap() - 1.0).abs() < 1e-12);
        let eye: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert!((alignment(&km(eye.clone()), &y).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            alignment(&km(eye), &[1.0, 0.0, 1.0, -1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn smo_identity_two_points() {
        let k = km(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = svm_train(&k, &[1.0, -1.0], 1e6).unwrap();
        assert!((m.alpha[0] - 1.0).abs() < 1e-9 && (m.alpha[1] - 1.0).abs() < 1e-9);
        assert!(m.bias.abs() < 1e-9);
    }

    #[test]
    fn smo_ideal_kernel_separates() {
        let y = [1.0, 1.0, -1.0, 1.0, -1.0, -1.0];
        let k: Vec<Vec<f64>> = y.iter().map(|a| y.iter().map(|b| a * b).collect()).collect();
        let k = km(k);
        let m = svm_train(&k, &y, DEFAULT_C).unwrap();
        for i in 0..6 {
            assert_eq!(svm_predict(&m, &k.entries()[i]).unwrap(), y[i]);
        }
    }

    #[test]
    fn smo_contradictory_duplicates_hit_the_bound() {
        let k = km(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let m = svm_train(&k, &[1.0, -1.0], 5.0).unwrap();
        assert_eq!(m.alpha, vec![5.0, 5.0]);
    }

    #[test]
    fn smo_feasible_and_monotone_on_random_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<f64> = (0..25).map(|_| rng.gen_range(0.0..6.0)).collect();
        let y: Vec<f64> = pts.iter().map(|x| if x.sin() + rng.gen_range(-0.5..0.5) > 0.0 { 1.0 } else { -1.0 }).collect();
        let k = km(pts.iter().map(|a| pts.iter().map(|b| (-(a - b) * (a - b)).exp()).collect()).collect());
        for c in [0.5, 10.0, DEFAULT_C] {
            let (m, trace) = svm_train_traced(&k, &y, c).unwrap();
            assert!(m.equality_residual().abs() < 1e-8);
            assert!(m.alpha.iter().all(|a| (0.0..=c).contains(a)));
            assert!(trace.final_gap < KKT_TOL);
            for w in trace.objective.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    #[test]
    fn predict_zero_row_is_sign_of_bias() {
        let m = SvmModel {
            alpha: vec![1.0, 1.0],
            bias: -0.25,
            c: 10.0,
            support_indices: vec![0, 1],
            labels: vec![1.0, -1.0],
        };
        assert_eq!(svm_predict(&m, &[0.0, 0.0]).unwrap(), -1.0);
        let m = SvmModel { bias: 0.0, ..m };
        assert_eq!(svm_predict(&m, &[0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(svm_predict(&m, &[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn model_json_round_trip_and_validation() {
        let m = SvmModel {
            alpha: vec![0.5, 0.5],
            bias: 0.1,
            c: 1.0,
            support_indices: vec![0, 1],
            labels: vec![1.0, -1.0],
        };
        assert_eq!(SvmModel::from_json(&m.to_json()).unwrap(), m);
        let bad = m.to_json().replace("0.5", "2.5");
        assert!(matches!(SvmModel::from_json(&bad), Err(Error::Domain(_))));
        assert!(matches!(SvmModel::from_json("{"), Err(Error::Parse { .. })));
    }

    #[test]
    fn fidelity_kernel_matches_amplitude_sums() {
        let cfg = DlpConfig::default();
        let data = dlp_dataset(&cfg).unwrap();
        let spec = AnsatzSpec::preset("dlp-8x24").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params: Vec<f64> = (0..192).map(|_| rng.gen_range(0.0..6.28)).collect();
        let xs = &data.inputs[..3];
        let k = fidelity_kernel(&spec, &params, xs).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let a = spec.prepare_state(&params, &xs[i]).unwrap();
                let b = spec.prepare_state(&params, &xs[j]).unwrap();
                let s: num_complex::Complex64 = a
                    .amplitudes()
                    .iter()
                    .zip(b.amplitudes())
                    .map(|(u, v)| u.conj() * v)
                    .sum();
                assert!((k.get(i, j) - s.norm_sqr()).abs() < 1e-12);
            }
        }
        let report = fidelity_integrity(&k).unwrap();
        assert!(report.max_diagonal_gap < 1e-10 && report.min_eigenvalue >= -1e-9);
    }

    fn toy_spec(qubits: usize, trainables: Vec<GateSlot>) -> AnsatzSpec {
        let mut t = vec![GateSlot::Encoding {
            axis: Axis::Y,
            qubit: 0,
            feature_index: 0,
            feature_scale: 1.0,
            feature_stride: 0,
        }];
        t.extend(trainables);
        AnsatzSpec {
            num_qubits: qubits,
            num_layers: 1,
            num_features: 1,
            layer_template: t,
            observable: Observable::FullZString,
            trailing_trainable_block: false,
            output_scale: 1.0,
        }
    }

    #[test]
    fn alignment_gradient_matches_finite_differences() {
        let spec = toy_spec(
            2,
            vec![
                GateSlot::Trainable { axis: Axis::Y, qubit: 1 },
                GateSlot::Entangler { control: 0, target: 1 },
                GateSlot::Trainable { axis: Axis::X, qubit: 0 },
                GateSlot::Trainable { axis: Axis::Z, qubit: 1 },
                GateSlot::Trainable { axis: Axis::Y, qubit: 0 },
            ],
        );
        let xs = vec![vec![0.2], vec![1.1], vec![2.0], vec![2.9]];
        let y = [1.0, -1.0, 1.0, -1.0];
        let p = [0.3, -0.8, 1.4, 0.6];
        let g = alignment_gradient(&spec, &p, &xs, &y).unwrap();
        let h = 1e-5;
        for l in 0..4 {
            let mut a = p;
            a[l] += h;
            let mut b = p;
            b[l] -= h;
            let fa = alignment(&fidelity_kernel(&spec, &a, &xs).unwrap(), &y).unwrap();
            let fb = alignment(&fidelity_kernel(&spec, &b, &xs).unwrap(), &y).unwrap();
            assert!((g[l] - (fa - fb) / (2.0 * h)).abs() < 1e-5);
        }
    }

    #[test]
    fn toy_alignment_reaches_grid_optimum() {
        // RX(θ) before the RY(x) encoding sets how much the two points overlap
        let mut spec = toy_spec(1, vec![]);
        spec.layer_template.insert(0, GateSlot::Trainable { axis: Axis::X, qubit: 0 });
        let xs = vec![vec![0.3], vec![2.9]];
        let y = [1.0, -1.0];
        let k12 = |t: f64| fidelity_kernel(&spec, &[t], &xs).unwrap().get(0, 1);
        let a_of = |t: f64| alignment(&fidelity_kernel(&spec, &[t], &xs).unwrap(), &y).unwrap();
        let grid_best = (0..=20_000)
            .map(|i| a_of(-PI_ + 2.0 * PI_ * i as f64 / 20_000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let run = optimize_alignment(&spec, &[0.5], &xs, &y, 200, 0.5).unwrap();
        assert!(run.best_alignment >= run.initial_alignment);
        assert!((run.best_alignment - grid_best).abs() < 1e-4);
        assert!(k12(run.params[0]) < k12(0.5));
        let none = optimize_alignment(&spec, &[0.5], &xs, &y, 0, 0.5).unwrap();
        assert_eq!(none.params, vec![0.5]);
    }

    const PI_: f64 = std::f64::consts::PI;
}
