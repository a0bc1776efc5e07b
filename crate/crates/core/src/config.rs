//! Run configuration: a TOML document with one table per concern.
//!
//! ```toml
//! experiment = "fit-curve"
//! seed = 7
//! out = "runs/low"
//!
//! [ansatz]
//! preset = "curve-4x20"
//!
//! [train]
//! learning_rate = 0.01
//! iterations = 200
//!
//! [curve]
//! kind = "low"
//! ```
//!
//! Command-line flags take precedence over file values, which take precedence
//! over the per-experiment defaults.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::datasets::{CurveKind, DlpConfig, MIN_CURVE_POINTS};
use crate::error::{Error, Result};
use crate::qkernel::{ALIGNMENT_ETA, ALIGNMENT_STEPS, DEFAULT_C};
use crate::qntk::PropagationMode;
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FitCurve,
    Spectrum,
    QntkCompare,
    Iris,
    Dlp,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::FitCurve => "fit-curve",
            Experiment::Spectrum => "spectrum",
            Experiment::QntkCompare => "qntk-compare",
            Experiment::Iris => "iris",
            Experiment::Dlp => "dlp",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fit-curve" => Experiment::FitCurve,
            "spectrum" => Experiment::Spectrum,
            "qntk-compare" => Experiment::QntkCompare,
            "iris" => Experiment::Iris,
            "dlp" => Experiment::Dlp,
            other => return Err(Error::Config(format!("unknown experiment '{other}'"))),
        })
    }
}

/// A named preset, optionally widened, or a full custom layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub preset: Option<String>,
    /// Replaces the preset's qubit count; per-qubit slots are widened.
    pub qubits: Option<usize>,
    pub layout: Option<AnsatzSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveConfig {
    pub kind: CurveKind,
    pub points: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            kind: CurveKind::Low,
            points: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrisConfig {
    pub path: Option<PathBuf>,
    pub classes: (String, String),
}

impl Default for IrisConfig {
    fn default() -> Self {
        Self {
            path: None,
            classes: ("Iris-setosa".into(), "Iris-versicolor".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub c: f64,
    pub alignment_steps: usize,
    pub alignment_eta: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            alignment_steps: ALIGNMENT_STEPS,
            alignment_eta: ALIGNMENT_ETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QntkConfig {
    pub mode: PropagationMode,
}

impl Default for QntkConfig {
    fn default() -> Self {
        Self {
            mode: PropagationMode::Continuous,
        }
    }
}

/// Raw file contents; every field is optional so flags can fill gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    pub train: Option<TrainConfig>,
    pub curve: Option<CurveConfig>,
    pub iris: Option<IrisConfig>,
    pub dlp: Option<DlpConfig>,
    pub kernel: Option<KernelConfig>,
    pub qntk: Option<QntkConfig>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub iterations: Option<usize>,
    pub eta: Option<f64>,
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub ansatz: AnsatzSpec,
    pub train: TrainConfig,
    pub curve: CurveConfig,
    pub iris: IrisConfig,
    pub dlp: DlpConfig,
    pub kernel: KernelConfig,
    pub qntk: QntkConfig,
}

/// Curve fits and their QNTK comparison use an output scale of 1.2 so the
/// `[-1, 1]` readout can reach the 0.9-amplitude peaks.
pub const CURVE_OUTPUT_SCALE: f64 = 1.2;
/// The QNTK comparison widens the curve layout to this many qubits.
pub const QNTK_QUBITS: usize = 8;
/// Iterations of the QNTK comparison run: `t = 0..=100`.
pub const QNTK_ITERATIONS: usize = 101;

fn default_preset(experiment: Experiment) -> &'static str {
    match experiment {
        Experiment::FitCurve | Experiment::Spectrum | Experiment::QntkCompare => "curve-4x20",
        Experiment::Iris => "iris-2x6",
        Experiment::Dlp => "dlp-8x24",
    }
}

fn build_ansatz(cfg: &AnsatzConfig, experiment: Experiment, dlp: &DlpConfig) -> Result<AnsatzSpec> {
    let mut spec = match (&cfg.layout, &cfg.preset) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("ansatz: give either preset or layout, not both".into()))
        }
        (Some(layout), None) => layout.clone(),
        (None, preset) => {
            let name = preset.as_deref().unwrap_or(default_preset(experiment));
            let spec = AnsatzSpec::preset(name)?;
            let qubits = cfg.qubits.or(match experiment {
                Experiment::QntkCompare if preset.is_none() => Some(QNTK_QUBITS),
                _ => None,
            });
            match (name, qubits) {
                (_, None) => spec,
                ("curve-4x20", Some(q)) => AnsatzSpec::curve(q, spec.num_layers),
                ("dlp-8x24", Some(q)) => AnsatzSpec::dlp(q, spec.num_layers, 1.0),
                (_, Some(_)) => {
                    return Err(Error::Config(format!("preset '{name}' cannot be widened")))
                }
            }
        }
    };
    if cfg.layout.is_some() && cfg.qubits.is_some() {
        return Err(Error::Config("ansatz.qubits only applies to presets".into()));
    }
    if experiment == Experiment::Dlp && cfg.layout.is_none() {
        let scale = 2.0 * std::f64::consts::PI / dlp.feature_period();
        spec = AnsatzSpec::dlp(spec.num_qubits, spec.num_layers, scale);
    }
    spec.validate()?;
    Ok(spec)
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, flags: &Overrides) -> Result<Self> {
        let experiment = flags
            .experiment
            .or(file.experiment)
            .ok_or_else(|| Error::Config("experiment not set".into()))?;
        if let (Some(a), Some(b)) = (flags.experiment, file.experiment) {
            if a != b {
                return Err(Error::Config(format!(
                    "subcommand '{}' does not match config experiment '{}'",
                    a.name(),
                    b.name()
                )));
            }
        }
        let seed = flags.seed.or(file.seed).unwrap_or(0);
        let out = flags
            .out
            .clone()
            .or(file.out)
            .ok_or_else(|| Error::Config("output directory not set (use --out)".into()))?;
        let threads = flags.threads.or(file.threads);
        if threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }

        let curve_like = matches!(experiment, Experiment::FitCurve | Experiment::QntkCompare);
        let mut train = file.train.clone().unwrap_or_else(|| TrainConfig {
            iterations: if experiment == Experiment::QntkCompare {
                QNTK_ITERATIONS
            } else {
                TrainConfig::default().iterations
            },
            ..TrainConfig::default()
        });
        if curve_like && train.output_scale.is_none() {
            train.output_scale = Some(CURVE_OUTPUT_SCALE);
        }
        train.seed = seed;
        if let Some(n) = flags.iterations {
            train.iterations = n;
        }
        if let Some(eta) = flags.eta {
            train.learning_rate = eta;
        }
        train.validate()?;

        let mut dlp = file.dlp.clone().unwrap_or_default();
        dlp.seed = seed;
        dlp.validate()?;
        let curve = file.curve.clone().unwrap_or_default();
        if curve.points < MIN_CURVE_POINTS {
            return Err(Error::Config(format!(
                "curve.points must be at least {MIN_CURVE_POINTS}"
            )));
        }
        let kernel = file.kernel.clone().unwrap_or_default();
        if !(kernel.c > 0.0 && kernel.c.is_finite()) {
            return Err(Error::Config("kernel.c must be positive".into()));
        }
        if !(kernel.alignment_eta >= 0.0 && kernel.alignment_eta.is_finite()) {
            return Err(Error::Config("kernel.alignment_eta must be >= 0".into()));
        }
        let iris = file.iris.clone().unwrap_or_default();
        if experiment == Experiment::Iris && iris.path.is_none() {
            return Err(Error::Config("iris.path is required for the iris experiment".into()));
        }
        let ansatz = build_ansatz(&file.ansatz, experiment, &dlp)?;

        Ok(Self {
            experiment,
            seed,
            out,
            threads,
            ansatz,
            train,
            curve,
            iris,
            dlp,
            kernel,
            qntk: file.qntk.clone().unwrap_or_default(),
        })
    }

    pub fn from_toml(text: &str, flags: &Overrides) -> Result<Self> {
        Self::resolve(ConfigFile::parse(text)?, flags)
    }
}
