//! Experiment pipelines and the file contract of a run directory.
//!
//! Each `*_study` function does the computation and returns everything an
//! output file or check needs; [`run`] calls one of them and writes the CSVs
//! and `manifest.json` into the configured output directory.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ansatz::AnsatzSpec;
use crate::config::{Experiment, RunConfig};
use crate::datasets::{curve_dataset, dlp_dataset, iris_load, CurveKind, Dataset, IRIS_FEATURE_RANGE};
use crate::error::{Error, Result};
use crate::export::fmt_num;
use crate::fourier::{dft_uniform, pqc_fourier_coefficients, top_peaks, uniform_grid, SpectrumSeries};
use crate::qkernel::{
    cross_kernel, fidelity_integrity, fidelity_kernel, optimize_alignment, svm_predict, svm_train,
    AlignmentRun, KernelIntegrity, SvmModel,
};
use crate::qntk::{
    compare_dynamics, empirical_qntk, frozen_qntk_half_angle, kernel_to_kspace, linear_fit_r2,
    DynamicsComparison, KernelMatrix, PropagationMode, Propagator,
};
use crate::training::{init_params, relative_l2_error, train, FrequencyFrame, TrainConfig, TrainLog};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
    pub duration_seconds: f64,
    pub complete: bool,
    pub failure: Option<String>,
    pub metrics: BTreeMap<String, Value>,
    pub files: Vec<FileRecord>,
}

/// Files written so far inside one run directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Outputs {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        drop(w);
        self.files.push(file_record(&path, name)?);
        Ok(())
    }
}

fn file_record(path: &Path, name: &str) -> Result<FileRecord> {
    let data = fs::read(path)?;
    Ok(FileRecord {
        name: name.to_string(),
        bytes: data.len() as u64,
        sha256: format!("{:x}", Sha256::digest(&data)),
    })
}

type Metrics = BTreeMap<String, Value>;

/// Runs the configured experiment. Numeric failures still write whatever
/// outputs exist plus a manifest with `complete = false`, then return the
/// error.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    fs::create_dir_all(&config.out)?;
    let mut out = Outputs {
        dir: config.out.clone(),
        files: Vec::new(),
    };
    let mut metrics = Metrics::new();
    let result = match config.experiment {
        Experiment::FitCurve => fit_curve(config, &mut out, &mut metrics),
        Experiment::Spectrum => spectrum(config, &mut out, &mut metrics),
        Experiment::QntkCompare => qntk_compare(config, &mut out, &mut metrics),
        Experiment::Iris => iris(config, &mut out, &mut metrics),
        Experiment::Dlp => dlp(config, &mut out, &mut metrics),
    };
    let (failure, error) = match result {
        Ok(f) => (f, None),
        Err(e) if e.exit_code() == 3 => (Some(e.to_string()), Some(e)),
        Err(e) => return Err(e),
    };
    let manifest = RunManifest {
        experiment: config.experiment.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: serde_json::to_value(config).expect("config serializes"),
        duration_seconds: start.elapsed().as_secs_f64(),
        complete: failure.is_none(),
        failure,
        metrics,
        files: out.files,
    };
    let mut w = BufWriter::new(File::create(config.out.join(MANIFEST))?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    match error {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

fn write_spectrum_pair<W: Write + ?Sized>(w: &mut W, label: &SpectrumSeries, model: &SpectrumSeries) -> std::io::Result<()> {
    writeln!(w, "k,label_re,label_im,model_re,model_im")?;
    for ((k, y), f) in label.k_values().iter().zip(label.amplitudes()).zip(model.amplitudes()) {
        writeln!(w, "{k},{},{},{},{}", fmt_num(y.re), fmt_num(y.im), fmt_num(f.re), fmt_num(f.im))?;
    }
    Ok(())
}

fn model_outputs(spec: &AnsatzSpec, params: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    let c = spec.compile()?;
    data.inputs.iter().map(|x| c.evaluate(params, x)).collect()
}

/// Tracked peak index → `k`, for the manifest.
fn learned_first(log: &TrainLog, threshold: f64) -> Value {
    log.first_learned(threshold)
        .map_or(Value::Null, |j| json!(log.tracked_ks[j]))
}

pub const LEARNED_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct CurveStudy {
    pub data: Dataset,
    pub spec: AnsatzSpec,
    pub log: TrainLog,
    pub relative_l2: f64,
}

/// Trains `spec` on a curve from the seeded initialisation.
pub fn curve_study(spec: &AnsatzSpec, kind: CurveKind, points: usize, train_cfg: &TrainConfig) -> Result<CurveStudy> {
    let data = curve_dataset(kind, points)?;
    let spec = train_cfg.effective_spec(spec);
    let p0 = init_params(spec.parameter_count(), train_cfg);
    let log = train(&spec, &p0, &data, train_cfg)?;
    let relative_l2 = relative_l2_error(&spec, &log.final_params, &data)?;
    Ok(CurveStudy {
        data,
        spec,
        log,
        relative_l2,
    })
}

fn fit_curve(cfg: &RunConfig, out: &mut Outputs, m: &mut Metrics) -> Result<Option<String>> {
    let s = curve_study(&cfg.ansatz, cfg.curve.kind, cfg.curve.points, &cfg.train)?;
    out.write("train_log.csv", |w| s.log.write_csv(w))?;
    let label = dft_uniform(&s.data.labels)?;
    let model = dft_uniform(&model_outputs(&s.spec, &s.log.final_params, &s.data)?)?;
    out.write("spectrum.csv", |w| write_spectrum_pair(w, &label, &model))?;
    out.write("residuals.csv", |w| s.log.write_residuals_csv(w))?;
    m.insert("tracked_ks".into(), json!(s.log.tracked_ks));
    m.insert("learned_first_k".into(), learned_first(&s.log, LEARNED_THRESHOLD));
    m.insert("initial_loss".into(), json!(s.log.initial_loss()));
    m.insert("final_loss".into(), json!(s.log.final_loss));
    m.insert("relative_l2".into(), json!(s.relative_l2));
    m.insert("iterations_run".into(), json!(s.log.iterations_run));
    Ok(s.log.failure.clone())
}

fn spectrum(cfg: &RunConfig, out: &mut Outputs, m: &mut Metrics) -> Result<Option<String>> {
    let spec = &cfg.ansatz;
    let p = init_params(spec.parameter_count(), &cfg.train);
    let coeffs = pqc_fourier_coefficients(spec, &p)?;
    out.write("spectrum.csv", |w| {
        writeln!(w, "omega,re,im,abs")?;
        for (omega, c) in coeffs.iter() {
            writeln!(w, "{omega},{},{},{}", fmt_num(c.re), fmt_num(c.im), fmt_num(c.norm()))?;
        }
        Ok(())
    })?;
    let e = coeffs.max_frequency();
    // evaluations on a grid wider than the spectrum: nothing beyond |k| = E
    let n = 2 * e as usize + 2;
    let circuit = spec.compile()?;
    let values = uniform_grid(n)
        .iter()
        .map(|&x| circuit.evaluate(&p, &[x]))
        .collect::<Result<Vec<_>>>()?;
    let f_hat = dft_uniform(&values)?;
    let beyond = f_hat
        .k_values()
        .iter()
        .zip(f_hat.amplitudes())
        .filter(|(k, _)| k.abs() > e as f64)
        .map(|(_, a)| a.norm())
        .fold(0.0, f64::max);
    m.insert("max_frequency".into(), json!(e));
    m.insert("encoding_gates".into(), json!(spec.encoding_gate_count()));
    m.insert("max_abs_beyond_spectrum".into(), json!(beyond));
    Ok(None)
}

#[derive(Debug, Clone)]
pub struct QntkStudy {
    pub curve: CurveStudy,
    pub frozen: KernelMatrix,
    pub comparison: DynamicsComparison,
    /// Index of the dominant (first tracked) peak in the comparison.
    pub dominant: usize,
    /// `R²` of a line through the dominant log-residual over the window.
    pub log_residual_r2: f64,
    /// Largest predicted/actual factor for the dominant peak over the window.
    pub worst_factor: f64,
    /// `‖K_emp(θ_T) - K_emp(θ_0)‖_F / ‖K_emp(θ_0)‖_F`.
    pub kernel_drift: f64,
}

pub const QNTK_WINDOW: usize = 100;

/// Trains on a curve, then predicts the residual spectrum from the frozen
/// kernel at the initial parameters.
pub fn qntk_study(
    spec: &AnsatzSpec,
    kind: CurveKind,
    points: usize,
    train_cfg: &TrainConfig,
    mode: PropagationMode,
) -> Result<QntkStudy> {
    let mut train_cfg = train_cfg.clone();
    train_cfg.record_every = 1;
    let curve = curve_study(spec, kind, points, &train_cfg)?;
    let inputs = &curve.data.inputs;
    let frozen = frozen_qntk_half_angle(&curve.spec, &curve.log.initial_params, inputs)?;
    let prop = Propagator::new(&kernel_to_kspace(&frozen, inputs)?)?;
    let first = curve
        .log
        .records
        .first()
        .ok_or_else(|| Error::Numeric("training recorded nothing".into()))?;
    let eps0 = dft_uniform(&first.residuals)?;
    let predicted = curve
        .log
        .records
        .iter()
        .map(|r| prop.apply(&eps0, train_cfg.learning_rate, r.iteration, mode))
        .collect::<Result<Vec<_>>>()?;
    let comparison = compare_dynamics(&curve.log, &predicted, &curve.log.tracked_ks)?;
    let window = QNTK_WINDOW.min(comparison.iterations.len());
    let t: Vec<f64> = comparison.iterations[..window].iter().map(|&t| t as f64).collect();
    let log_r: Vec<f64> = comparison.actual[..window].iter().map(|r| r[0].ln()).collect();
    let log_residual_r2 = linear_fit_r2(&t, &log_r)?;
    let worst_factor = comparison.worst_factor(0, window);
    let k0 = empirical_qntk(&curve.spec, &curve.log.initial_params, inputs)?;
    let k1 = empirical_qntk(&curve.spec, &curve.log.final_params, inputs)?;
    let kernel_drift = k0.frobenius_distance(&k1)? / k0.frobenius_norm();
    Ok(QntkStudy {
        curve,
        frozen,
        comparison,
        dominant: 0,
        log_residual_r2,
        worst_factor,
        kernel_drift,
    })
}

fn qntk_compare(cfg: &RunConfig, out: &mut Outputs, m: &mut Metrics) -> Result<Option<String>> {
    let s = qntk_study(&cfg.ansatz, cfg.curve.kind, cfg.curve.points, &cfg.train, cfg.qntk.mode)?;
    out.write("train_log.csv", |w| s.curve.log.write_csv(w))?;
    out.write("residuals.csv", |w| s.curve.log.write_residuals_csv(w))?;
    out.write("kernel.csv", |w| s.frozen.write_csv(w))?;
    out.write("qntk_compare.csv", |w| s.comparison.write_csv(w))?;
    m.insert("tracked_ks".into(), json!(s.curve.log.tracked_ks));
    m.insert("dominant_k".into(), json!(s.curve.log.tracked_ks[s.dominant]));
    m.insert("log_residual_r2".into(), json!(s.log_residual_r2));
    m.insert("worst_prediction_factor".into(), json!(s.worst_factor));
    m.insert("kernel_drift".into(), json!(s.kernel_drift));
    m.insert("relative_l2".into(), json!(s.curve.relative_l2));
    Ok(s.curve.log.failure.clone())
}

#[derive(Debug, Clone)]
pub struct IrisStudy {
    pub data: Dataset,
    pub label_spectrum: SpectrumSeries,
    pub log: TrainLog,
}

pub fn iris_study(spec: &AnsatzSpec, path: &Path, classes: (&str, &str), train_cfg: &TrainConfig) -> Result<IrisStudy> {
    let data = iris_load(path, classes, IRIS_FEATURE_RANGE)?;
    let frame = FrequencyFrame::for_inputs(&data.inputs)?;
    let label_spectrum = frame.transform(&data.labels)?;
    let spec = train_cfg.effective_spec(spec);
    let p0 = init_params(spec.parameter_count(), train_cfg);
    let log = train(&spec, &p0, &data, train_cfg)?;
    Ok(IrisStudy {
        data,
        label_spectrum,
        log,
    })
}

fn iris(cfg: &RunConfig, out: &mut Outputs, m: &mut Metrics) -> Result<Option<String>> {
    let path = cfg.iris.path.as_deref().expect("validated");
    let classes = (cfg.iris.classes.0.as_str(), cfg.iris.classes.1.as_str());
    let s = iris_study(&cfg.ansatz, path, classes, &cfg.train)?;
    out.write("train_log.csv", |w| s.log.write_csv(w))?;
    out.write("spectrum.csv", |w| s.label_spectrum.write_csv(w))?;
    out.write("residuals.csv", |w| s.log.write_residuals_csv(w))?;
    m.insert("samples".into(), json!(s.data.len()));
    m.insert("top_peak_k".into(), json!(top_peaks(&s.label_spectrum, 1).first()));
    m.insert("tracked_ks".into(), json!(s.log.tracked_ks));
    m.insert("learned_first_k".into(), learned_first(&s.log, LEARNED_THRESHOLD));
    m.insert("initial_loss".into(), json!(s.log.initial_loss()));
    m.insert("final_loss".into(), json!(s.log.final_loss));
    Ok(s.log.failure.clone())
}

#[derive(Debug, Clone)]
pub struct DlpStudy {
    pub data: Dataset,
    pub alignment: AlignmentRun,
    pub kernel: KernelMatrix,
    pub integrity: KernelIntegrity,
    pub model: SvmModel,
    /// `(predicted, true)` per held-out point.
    pub predictions: Vec<(f64, f64)>,
    pub held_out_accuracy: f64,
    pub train_accuracy: f64,
}

/// Alignment-trained fidelity kernel followed by an SVM on the training
/// split, scored on the held-out split.
pub fn dlp_study(cfg: &RunConfig) -> Result<DlpStudy> {
    let data = dlp_dataset(&cfg.dlp)?;
    let held_out = data
        .held_out
        .as_deref()
        .ok_or_else(|| Error::Config("DLP split leaves no held-out points".into()))?;
    let spec = &cfg.ansatz;
    let p0 = init_params(spec.parameter_count(), &cfg.train);
    let alignment = optimize_alignment(
        spec,
        &p0,
        &data.inputs,
        &data.labels,
        cfg.kernel.alignment_steps,
        cfg.kernel.alignment_eta,
    )?;
    let kernel = fidelity_kernel(spec, &alignment.params, &data.inputs)?;
    let integrity = fidelity_integrity(&kernel)?;
    let model = svm_train(&kernel, &data.labels, cfg.kernel.c)?;
    let accuracy = |rows: &[Vec<f64>], labels: &[f64]| -> Result<(Vec<(f64, f64)>, f64)> {
        let pairs = rows
            .iter()
            .zip(labels)
            .map(|(r, y)| Ok((svm_predict(&model, r)?, *y)))
            .collect::<Result<Vec<_>>>()?;
        let hits = pairs.iter().filter(|(p, y)| p == y).count();
        Ok((pairs, hits as f64 / labels.len() as f64))
    };
    let (_, train_accuracy) = accuracy(kernel.entries(), &data.labels)?;
    let rows = cross_kernel(spec, &alignment.params, &held_out.inputs, &data.inputs)?;
    let (predictions, held_out_accuracy) = accuracy(&rows, &held_out.labels)?;
    Ok(DlpStudy {
        data,
        alignment,
        kernel,
        integrity,
        model,
        predictions,
        held_out_accuracy,
        train_accuracy,
    })
}

fn dlp(cfg: &RunConfig, out: &mut Outputs, m: &mut Metrics) -> Result<Option<String>> {
    let s = dlp_study(cfg)?;
    out.write("kernel.csv", |w| s.kernel.write_csv(w))?;
    out.write("model.json", |w| writeln!(w, "{}", s.model.to_json()))?;
    out.write("predictions.csv", |w| {
        writeln!(w, "index,predicted,true")?;
        for (i, (p, y)) in s.predictions.iter().enumerate() {
            writeln!(w, "{i},{p},{y}")?;
        }
        Ok(())
    })?;
    out.write("alignment.csv", |w| {
        writeln!(w, "step,alignment")?;
        for (i, a) in s.alignment.history.iter().enumerate() {
            writeln!(w, "{i},{}", fmt_num(*a))?;
        }
        Ok(())
    })?;
    m.insert("held_out_accuracy".into(), json!(s.held_out_accuracy));
    m.insert("train_accuracy".into(), json!(s.train_accuracy));
    m.insert("initial_alignment".into(), json!(s.alignment.initial_alignment));
    m.insert("final_alignment".into(), json!(s.alignment.best_alignment));
    m.insert("alignment_warning".into(), json!(s.alignment.warning));
    m.insert("kernel_integrity".into(), json!(s.integrity));
    m.insert("support_vectors".into(), json!(s.model.support_indices.len()));
    Ok(None)
}
