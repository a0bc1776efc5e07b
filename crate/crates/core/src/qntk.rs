//! Quantum neural tangent kernels and the linearised residual dynamics they
//! predict.
//!
//! Under gradient descent on `½ Σ ε_i²` the residuals move as
//! `ε(t+1) = ε(t) - η K ε(t)` with `K_{i'i} = ∇f(x_{i'}) · ∇f(x_i)`. The
//! frequency-domain kernel `K̂(k', k)` follows the same index order, so
//! `ε̂(k, t+1) = ε̂(k, t) - η Σ_{k'} K̂(k', k) ε̂(k', t)`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::AnsatzSpec;
use crate::error::{Error, Result};
use crate::export::{fmt_num, write_matrix};
use crate::fourier::{dft_uniform_at, uniform_k_grid, SpectrumSeries};
use crate::linalg::{jacobi_symmetric, min_eigenvalue, real_embedding, SymmetricEigen};
use crate::training::{is_uniform_grid, jacobian, TrainLog};

pub const SYMMETRY_TOL: f64 = 1e-10;

/// Real symmetric kernel over a set of inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: Vec<Vec<f64>>,
}

impl KernelMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let n = entries.len();
        if entries.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("kernel matrix is not square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if (entries[i][j] - entries[j][i]).abs() > SYMMETRY_TOL {
                    return Err(Error::Numeric(format!(
                        "kernel not symmetric at ({i}, {j}): {} vs {}",
                        entries[i][j], entries[j][i]
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖A - B‖_F`.
    pub fn frobenius_distance(&self, other: &KernelMatrix) -> Result<f64> {
        if self.size() != other.size() {
            return Err(Error::Shape(format!(
                "kernel sizes {} and {} differ",
                self.size(),
                other.size()
            )));
        }
        Ok(self
            .entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.entries.iter_mut().flatten().for_each(|v| *v *= factor);
        self
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.entries)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_matrix(w, &self.entries)
    }
}

/// `K_{i'i} = ∇f(x_{i'}) · ∇f(x_i)` from exact gradients at `params`.
pub fn empirical_qntk(spec: &AnsatzSpec, params: &[f64], inputs: &[Vec<f64>]) -> Result<KernelMatrix> {
    if inputs.is_empty() {
        return Err(Error::Shape("empirical QNTK needs at least one input".into()));
    }
    let circuit = spec.compile()?;
    let (_, jac) = jacobian(&circuit, params, inputs)?;
    let n = inputs.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| jac[i].iter().zip(&jac[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    KernelMatrix::new(rows)
}

/// Closed-form constant kernel
/// `2L (D|χ|² - 1) / (D² - 1)² · (D Tr(M²) - (Tr M)²)`, with
/// `χ = ⟨ψ(x_{i'})|ψ(x_i)⟩` at `params_ref` and `M` the scaled observable.
pub fn frozen_qntk(spec: &AnsatzSpec, params_ref: &[f64], inputs: &[Vec<f64>]) -> Result<KernelMatrix> {
    if inputs.is_empty() {
        return Err(Error::Shape("frozen QNTK needs at least one input".into()));
    }
    let circuit = spec.compile()?;
    let states = inputs
        .par_iter()
        .map(|x| circuit.prepare_state(params_ref, x))
        .collect::<Result<Vec<_>>>()?;
    let n = spec.num_qubits;
    let d = spec.dimension() as f64;
    let s = spec.output_scale;
    let tr = s * spec.observable.trace(n)?;
    let tr2 = s * s * spec.observable.trace_squared(n)?;
    let l = spec.parameter_count() as f64;
    let prefactor = 2.0 * l / ((d * d - 1.0) * (d * d - 1.0)) * (d * tr2 - tr * tr);
    let size = inputs.len();
    let lower = (0..size)
        .into_par_iter()
        .map(|i| {
            (0..i)
                .map(|j| Ok(prefactor * (d * states[i].fidelity(&states[j])? - 1.0)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![vec![prefactor * (d - 1.0); size]; size];
    for (i, row) in lower.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            rows[i][j] = *v;
            rows[j][i] = *v;
        }
    }
    KernelMatrix::new(rows)
}

/// Ratio between the kernel of half-angle rotations `exp(-iθP/2)` and the
/// kernel of `exp(-iθP)` generators assumed by the closed form.
pub const HALF_ANGLE_FACTOR: f64 = 0.25;

/// [`frozen_qntk`] for this crate's rotation convention.
pub fn frozen_qntk_half_angle(
    spec: &AnsatzSpec,
    params_ref: &[f64],
    inputs: &[Vec<f64>],
) -> Result<KernelMatrix> {
    Ok(frozen_qntk(spec, params_ref, inputs)?.scaled(HALF_ANGLE_FACTOR))
}

/// Frequency-domain kernel; `entries[a][b]` is `K̂(k'_a, k_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexKernel {
    k_values: Vec<f64>,
    entries: Vec<Vec<Complex64>>,
}

impl ComplexKernel {
    pub fn new(k_values: Vec<f64>, entries: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = k_values.len();
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("complex kernel must be {n}x{n}")));
        }
        let kernel = Self { k_values, entries };
        let gap = kernel.hermiticity_gap();
        if gap > SYMMETRY_TOL * kernel.scale() {
            return Err(Error::Numeric(format!("kernel not Hermitian (gap {gap:e})")));
        }
        Ok(kernel)
    }

    fn scale(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(1.0, f64::max)
    }

    pub fn k_values(&self) -> &[f64] {
        &self.k_values
    }

    pub fn entries(&self) -> &[Vec<Complex64>] {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.k_values.len()
    }

    /// `max |K̂(a, b) - conj(K̂(b, a))|`.
    pub fn hermiticity_gap(&self) -> f64 {
        let n = self.size();
        let mut gap: f64 = 0.0;
        for a in 0..n {
            for b in 0..=a {
                gap = gap.max((self.entries[a][b] - self.entries[b][a].conj()).norm());
            }
        }
        gap
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k_prime,k,re,im")?;
        for (a, row) in self.entries.iter().enumerate() {
            for (b, z) in row.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    self.k_values[a],
                    self.k_values[b],
                    fmt_num(z.re),
                    fmt_num(z.im)
                )?;
            }
        }
        Ok(())
    }
}

/// `K̂(k', k) = (1/N) Σ_{i'i} K(x_{i'}, x_i) e^{i k' x_{i'}} e^{-i k x_i}` on
/// the integer grid of the uniform `inputs`.
pub fn kernel_to_kspace(kernel: &KernelMatrix, inputs: &[Vec<f64>]) -> Result<ComplexKernel> {
    let n = kernel.size();
    if inputs.len() != n {
        return Err(Error::Shape(format!(
            "{n}x{n} kernel for {} inputs",
            inputs.len()
        )));
    }
    if !is_uniform_grid(inputs) {
        return Err(Error::Unsupported(
            "k-space kernel needs the uniform curve grid".into(),
        ));
    }
    let ks = uniform_k_grid(n);
    let phase = |k: i64, i: usize| {
        let m = (k.rem_euclid(n as i64) as usize * i) % n;
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64)
    };
    // half[a][i] = Σ_{i'} e^{i k'_a x_{i'}} K(x_{i'}, x_i)
    let half: Vec<Vec<Complex64>> = ks
        .par_iter()
        .map(|&kp| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|ip| phase(kp, ip) * kernel.get(ip, i))
                        .sum::<Complex64>()
                })
                .collect()
        })
        .collect();
    let entries: Vec<Vec<Complex64>> = half
        .par_iter()
        .map(|row| {
            ks.iter()
                .map(|&k| {
                    row.iter()
                        .enumerate()
                        .map(|(i, v)| v * phase(k, i).conj())
                        .sum::<Complex64>()
                        / n as f64
                })
                .collect()
        })
        .collect();
    ComplexKernel::new(ks.iter().map(|&k| k as f64).collect(), entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMode {
    /// `exp(-η K̂ᵀ t) ε̂(0)`.
    Continuous,
    /// `(I - η K̂ᵀ)^t ε̂(0)`.
    Discrete,
}

/// Eigendecomposition of the residual-update generator, reusable across `t`.
#[derive(Debug, Clone)]
pub struct Propagator {
    k_values: Vec<f64>,
    eigen: SymmetricEigen,
}

impl Propagator {
    pub fn new(kernel: &ComplexKernel) -> Result<Self> {
        let n = kernel.size();
        // generator H(k, k') = K̂(k', k)
        let h: Vec<Vec<Complex64>> = (0..n)
            .map(|a| (0..n).map(|b| kernel.entries[b][a]).collect())
            .collect();
        Ok(Self {
            k_values: kernel.k_values.clone(),
            eigen: jacobi_symmetric(&real_embedding(&h))?,
        })
    }

    /// Eigenvalues of the generator, each listed twice by the real embedding.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn apply(
        &self,
        eps0: &SpectrumSeries,
        eta: f64,
        t: usize,
        mode: PropagationMode,
    ) -> Result<SpectrumSeries> {
        let n = self.k_values.len();
        if eps0.len() != n {
            return Err(Error::Shape(format!(
                "residual spectrum has {} points, kernel {n}",
                eps0.len()
            )));
        }
        let mut v = Vec::with_capacity(2 * n);
        v.extend(eps0.amplitudes().iter().map(|z| z.re));
        v.extend(eps0.amplitudes().iter().map(|z| z.im));
        let vecs = &self.eigen.vectors;
        let mut out = vec![0.0; 2 * n];
        for (j, &lambda) in self.eigen.values.iter().enumerate() {
            let factor = match mode {
                PropagationMode::Continuous => (-eta * lambda * t as f64).exp(),
                PropagationMode::Discrete => (1.0 - eta * lambda).powi(t as i32),
            };
            let coeff: f64 = (0..2 * n).map(|i| vecs[i][j] * v[i]).sum::<f64>() * factor;
            for (i, o) in out.iter_mut().enumerate() {
                *o += coeff * vecs[i][j];
            }
        }
        let amps = (0..n).map(|i| Complex64::new(out[i], out[i + n])).collect();
        SpectrumSeries::new(self.k_values.clone(), amps)
    }
}

pub fn predict_residuals(
    kernel: &ComplexKernel,
    eps0: &SpectrumSeries,
    eta: f64,
    t: usize,
    mode: PropagationMode,
) -> Result<SpectrumSeries> {
    Propagator::new(kernel)?.apply(eps0, eta, t, mode)
}

/// Actual against predicted `|ε̂(k, t)|` at every recorded iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsComparison {
    pub tracked_ks: Vec<f64>,
    pub iterations: Vec<usize>,
    /// `actual[t][j]` for tracked peak `j`.
    pub actual: Vec<Vec<f64>>,
    pub predicted: Vec<Vec<f64>>,
    /// `predicted / actual`; `0 / 0` is reported as 1.
    pub ratio: Vec<Vec<f64>>,
}

fn ratio(predicted: f64, actual: f64) -> f64 {
    if predicted == 0.0 && actual == 0.0 {
        1.0
    } else {
        predicted / actual
    }
}

/// `predicted[r]` is the prediction for `log.records[r]`; residual snapshots
/// must lie on the uniform grid.
pub fn compare_dynamics(
    log: &TrainLog,
    predicted: &[SpectrumSeries],
    tracked_ks: &[f64],
) -> Result<DynamicsComparison> {
    if predicted.len() != log.records.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} recorded iterations",
            predicted.len(),
            log.records.len()
        )));
    }
    let mut out = DynamicsComparison {
        tracked_ks: tracked_ks.to_vec(),
        iterations: Vec::new(),
        actual: Vec::new(),
        predicted: Vec::new(),
        ratio: Vec::new(),
    };
    for (rec, pred) in log.records.iter().zip(predicted) {
        let actual: Vec<f64> = tracked_ks
            .iter()
            .map(|&k| dft_uniform_at(&rec.residuals, k.round() as i64).norm())
            .collect();
        let predicted: Vec<f64> = tracked_ks
            .iter()
            .map(|&k| pred.at(k).map(|z| z.norm()))
            .collect::<Result<_>>()?;
        out.ratio
            .push(predicted.iter().zip(&actual).map(|(p, a)| ratio(*p, *a)).collect());
        out.iterations.push(rec.iteration);
        out.actual.push(actual);
        out.predicted.push(predicted);
    }
    Ok(out)
}

impl DynamicsComparison {
    /// Columns `t`, then `actual_abs_k*` and `predicted_abs_k*` per peak.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["t".to_string()];
        for k in &self.tracked_ks {
            header.push(format!("actual_abs_k{k}"));
            header.push(format!("predicted_abs_k{k}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for (r, t) in self.iterations.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for j in 0..self.tracked_ks.len() {
                row.push(fmt_num(self.actual[r][j]));
                row.push(fmt_num(self.predicted[r][j]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Largest `max(ratio, 1/ratio)` for tracked peak `j` over the first
    /// `window` records.
    pub fn worst_factor(&self, j: usize, window: usize) -> f64 {
        self.ratio
            .iter()
            .take(window)
            .map(|r| {
                let q = r[j];
                if q > 0.0 {
                    q.max(1.0 / q)
                } else {
                    f64::INFINITY
                }
            })
            .fold(1.0, f64::max)
    }
}

/// Coefficient of determination of a least-squares line through `(x, y)`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Shape("line fit needs at least 3 paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateData("constant series in line fit".into()));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (my + slope * (a - mx));
            e * e
        })
        .sum();
    Ok(1.0 - ss_res / syy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::uniform_grid;
    use crate::statevector::{Axis, Observable};
    use crate::ansatz::GateSlot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Vec<Vec<f64>> {
        uniform_grid(n).into_iter().map(|x| vec![x]).collect()
    }

    fn random_symmetric(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    fn two_qubit_spec(l: usize) -> AnsatzSpec {
        let mut t = vec![GateSlot::Encoding {
            axis: Axis::X,
            qubit: 0,
            feature_index: 0,
            feature_scale: 1.0,
            feature_stride: 0,
        }];
        t.extend((0..l).map(|q| GateSlot::Trainable { axis: Axis::Y, qubit: q % 2 }));
        AnsatzSpec {
            num_qubits: 2,
            num_layers: 1,
            num_features: 1,
            layer_template: t,
            observable: Observable::FullZString,
            trailing_trainable_block: false,
            output_scale: 1.0,
        }
    }

    #[test]
    fn empirical_matches_shift_rule_sums() {
        let spec = AnsatzSpec::curve(4, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params: Vec<f64> = (0..160).map(|_| rng.gen_range(0.0..6.28)).collect();
        let xs = vec![vec![0.3], vec![1.7], vec![4.1]];
        let k = empirical_qntk(&spec, &params, &xs).unwrap();
        let grads: Vec<Vec<f64>> = xs.iter().map(|x| spec.gradient(&params, x).unwrap()).collect();
        for i in 0..3 {
            for j in 0..3 {
                let want: f64 = grads[i].iter().zip(&grads[j]).map(|(a, b)| a * b).sum();
                assert!((k.get(i, j) - want).abs() < 1e-10);
            }
        }
        assert!(k.min_eigenvalue().unwrap() >= -1e-9);
    }

    #[test]
    fn empirical_single_input_and_zero_gradient() {
        let spec = AnsatzSpec::curve(2, 2);
        let k = empirical_qntk(&spec, &[0.4; 8], &[vec![0.9]]).unwrap();
        assert!(k.get(0, 0) >= 0.0);
        let k = empirical_qntk(&two_qubit_spec(0), &[], &grid(3)).unwrap();
        assert!(k.entries().iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn frozen_formula_values() {
        let spec = two_qubit_spec(12);
        assert_eq!(spec.parameter_count(), 12);
        // RX(0) and RX(π) on qubit 0 give orthogonal states
        let xs = vec![vec![0.0], vec![std::f64::consts::PI]];
        let k = frozen_qntk(&spec, &[0.0; 12], &xs).unwrap();
        assert!((k.get(0, 0) - 5.12).abs() < 1e-12);
        assert!((k.get(0, 1) + 384.0 / 225.0).abs() < 1e-12);
        let k = frozen_qntk(&two_qubit_spec(0), &[], &xs).unwrap();
        assert!(k.entries().iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn frozen_scales_with_output_scale_squared() {
        let xs = grid(4);
        let a = frozen_qntk(&two_qubit_spec(4), &[0.1, 0.2, 0.3, 0.4], &xs).unwrap();
        let b = frozen_qntk(
            &two_qubit_spec(4).with_output_scale(1.2),
            &[0.1, 0.2, 0.3, 0.4],
            &xs,
        )
        .unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((b.get(i, j) - 1.44 * a.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_angle_frozen_diagonal_matches_random_circuit_average() {
        let spec = AnsatzSpec::curve(4, 20);
        let x = vec![vec![0.7]];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trials = 200;
        let mean = (0..trials)
            .map(|_| {
                let p: Vec<f64> = (0..160).map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI)).collect();
                empirical_qntk(&spec, &p, &x).unwrap().get(0, 0)
            })
            .sum::<f64>()
            / trials as f64;
        let frozen = frozen_qntk_half_angle(&spec, &[0.0; 160], &x).unwrap().get(0, 0);
        assert!((mean / frozen - 1.0).abs() < 0.1);
    }

    #[test]
    fn kspace_identity_and_all_ones() {
        let n = 8;
        let eye: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let g = kernel_to_kspace(&KernelMatrix::new(eye).unwrap(), &grid(n)).unwrap();
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((g.entries()[a][b] - want).norm() < 1e-12);
            }
        }
        let ones = KernelMatrix::new(vec![vec![1.0; n]; n]).unwrap();
        let g = kernel_to_kspace(&ones, &grid(n)).unwrap();
        let zero = g.k_values().iter().position(|k| *k == 0.0).unwrap();
        for a in 0..n {
            for b in 0..n {
                let want = if a == zero && b == zero { n as f64 } else { 0.0 };
                assert!((g.entries()[a][b] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kspace_is_hermitian_and_invertible() {
        let n = 16;
        let k = KernelMatrix::new(random_symmetric(n, 5)).unwrap();
        let g = kernel_to_kspace(&k, &grid(n)).unwrap();
        assert!(g.hermiticity_gap() <= 1e-12);
        let xs = uniform_grid(n);
        for ip in 0..n {
            for i in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for (a, kp) in g.k_values().iter().enumerate() {
                    for (b, kk) in g.k_values().iter().enumerate() {
                        s += g.entries()[a][b]
                            * Complex64::from_polar(1.0, -kp * xs[ip] + kk * xs[i]);
                    }
                }
                assert!((s / n as f64 - k.get(ip, i)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn kspace_rejects_non_uniform_inputs() {
        let k = KernelMatrix::new(vec![vec![1.0; 3]; 3]).unwrap();
        let xs = vec![vec![0.0], vec![0.5], vec![3.0]];
        assert!(matches!(kernel_to_kspace(&k, &xs), Err(Error::Unsupported(_))));
    }

    fn series(n: usize, seed: u64) -> SpectrumSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ks = (0..n).map(|k| k as f64).collect();
        let amps = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectrumSeries::new(ks, amps).unwrap()
    }

    /// Random Hermitian PSD matrix `U diag(λ) U†` with `λ` spread over `[lo, hi]`.
    fn random_hermitian_psd(n: usize, lo: f64, hi: f64, seed: u64) -> ComplexKernel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let h: Vec<Vec<Complex64>> = (0..n)
            .map(|i| (0..n).map(|j| a[i][j] + a[j][i].conj()).collect())
            .collect();
        let eig = jacobi_symmetric(&real_embedding(&h)).unwrap();
        // every eigenvalue appears twice; keep one vector per value pair
        let mut order: Vec<usize> = (0..2 * n).collect();
        order.sort_by(|&x, &y| eig.values[x].total_cmp(&eig.values[y]));
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (m, pair) in order.chunks(2).enumerate() {
            let j = pair[0];
            let u: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(eig.vectors[i][j], eig.vectors[i + n][j]))
                .collect();
            let norm: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let lambda = lo + (hi - lo) * m as f64 / (n - 1) as f64;
            for p in 0..n {
                for q in 0..n {
                    out[p][q] += lambda * u[p] * u[q].conj() / norm;
                }
            }
        }
        ComplexKernel::new((0..n).map(|k| k as f64).collect(), out).unwrap()
    }

    #[test]
    fn propagator_at_zero_time_is_identity() {
        let g = random_hermitian_psd(6, 0.5, 5.0, 1);
        let e = series(6, 2);
        for mode in [PropagationMode::Continuous, PropagationMode::Discrete] {
            let p = predict_residuals(&g, &e, 0.01, 0, mode).unwrap();
            for (a, b) in p.amplitudes().iter().zip(e.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_kernel_decays_exponentially() {
        let n = 3;
        let lambdas = [0.5, 2.0, 7.0];
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Complex64::new(if i == j { lambdas[i] } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        let g = ComplexKernel::new(vec![0.0, 1.0, 2.0], entries).unwrap();
        let e = series(n, 4);
        let p = predict_residuals(&g, &e, 0.01, 37, PropagationMode::Continuous).unwrap();
        for i in 0..n {
            let want = (-0.01 * lambdas[i] * 37.0).exp() * e.amplitudes()[i].norm();
            assert!((p.amplitudes()[i].norm() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_matches_taylor_series() {
        let g = random_hermitian_psd(5, 0.0, 1.0, 9);
        let e = series(5, 10);
        let eta = 0.5;
        let p = predict_residuals(&g, &e, eta, 1, PropagationMode::Continuous).unwrap();
        // Σ_{m<=10} (-η H)^m / m! ε with H(k, k') = K̂(k', k)
        let h = |a: usize, b: usize| g.entries()[b][a];
        let mut term: Vec<Complex64> = e.amplitudes().to_vec();
        let mut sum = term.clone();
        for m in 1..=10 {
            term = (0..5)
                .map(|a| (0..5).map(|b| h(a, b) * term[b]).sum::<Complex64>() * (-eta / m as f64))
                .collect();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        for (a, b) in p.amplitudes().iter().zip(&sum) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn discrete_mode_matches_repeated_updates() {
        let g = random_hermitian_psd(4, 0.0, 3.0, 11);
        let e = series(4, 12);
        let p = predict_residuals(&g, &e, 0.05, 6, PropagationMode::Discrete).unwrap();
        let mut v = e.amplitudes().to_vec();
        for _ in 0..6 {
            v = (0..4)
                .map(|a| v[a] - 0.05 * (0..4).map(|b| g.entries()[b][a] * v[b]).sum::<Complex64>())
                .collect();
        }
        for (a, b) in p.amplitudes().iter().zip(&v) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn continuous_and_discrete_agree_for_small_steps() {
        let g = random_hermitian_psd(8, 0.1, 10.0, 13);
        let e = series(8, 14);
        let prop = Propagator::new(&g).unwrap();
        for t in [1, 10, 50, 100] {
            let c = prop.apply(&e, 0.01, t, PropagationMode::Continuous).unwrap();
            let d = prop.apply(&e, 0.01, t, PropagationMode::Discrete).unwrap();
            let diff: f64 = c
                .amplitudes()
                .iter()
                .zip(d.amplitudes())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let size = c.energy().sqrt();
            assert!(diff / size <= 0.05, "t={t}: gap {}", diff / size);
        }
    }

    #[test]
    fn ratio_convention() {
        assert_eq!(ratio(0.0, 0.0), 1.0);
        assert_eq!(ratio(2.0, 1.0), 2.0);
    }

    #[test]
    fn line_fit_r2() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert!((linear_fit_r2(&x, &[1.0, 3.0, 5.0, 7.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(linear_fit_r2(&x, &[1.0, -1.0, 1.0, -1.0]).unwrap() < 0.5);
    }
}
