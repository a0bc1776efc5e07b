//! Synthetic curves, Iris ingestion and the discrete-logarithm dataset.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::uniform_grid;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub held_out: Option<Box<Dataset>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::Numeric("non-finite label".into()));
        }
        Ok(Self {
            inputs,
            labels,
            held_out: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// Writes `x0,...,x{d-1},label`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.feature_dim();
        let header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
        writeln!(w, "{},label", header.join(","))?;
        for (x, y) in self.inputs.iter().zip(&self.labels) {
            let row: Vec<String> = x.iter().map(|v| crate::export::fmt_num(*v)).collect();
            writeln!(w, "{},{}", row.join(","), crate::export::fmt_num(*y))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Low,
    Mid,
    High,
}

impl CurveKind {
    /// Weights of `sin(x)`, `sin(3x)`, `sin(8x)`.
    pub fn weights(self) -> [f64; 3] {
        match self {
            CurveKind::Low => [0.9, 0.1, 0.1],
            CurveKind::Mid => [0.1, 0.9, 0.1],
            CurveKind::High => [0.1, 0.1, 0.9],
        }
    }

    pub fn dominant_frequency(self) -> f64 {
        match self {
            CurveKind::Low => 1.0,
            CurveKind::Mid => 3.0,
            CurveKind::High => 8.0,
        }
    }

    pub fn label(self, x: f64) -> f64 {
        let [a, b, c] = self.weights();
        a * x.sin() + b * (3.0 * x).sin() + c * (8.0 * x).sin()
    }
}

impl std::str::FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(CurveKind::Low),
            "mid" => Ok(CurveKind::Mid),
            "high" => Ok(CurveKind::High),
            other => Err(Error::Config(format!("unknown curve kind '{other}'"))),
        }
    }
}

pub const MIN_CURVE_POINTS: usize = 17;

/// Labels on `x_i = 2πi/N`.
pub fn curve_dataset(kind: CurveKind, n: usize) -> Result<Dataset> {
    if n < MIN_CURVE_POINTS {
        return Err(Error::Config(format!(
            "{n} curve points cannot resolve k = 8 (need >= {MIN_CURVE_POINTS})"
        )));
    }
    let xs = uniform_grid(n);
    let labels = xs.iter().map(|&x| kind.label(x)).collect();
    Dataset::new(xs.into_iter().map(|x| vec![x]).collect(), labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrisRow {
    pub features: [f64; 4],
    pub class: String,
}

/// Parses 5-column Iris CSV: four numeric features and a class name. Blank
/// lines are skipped; a non-numeric first line is treated as a header.
pub fn parse_iris_csv(text: &str) -> Result<Vec<IrisRow>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            if line_no == 1 && fields[0].parse::<f64>().is_err() {
                continue;
            }
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let mut features = [0.0; 4];
        let mut header = false;
        for (j, f) in fields[..4].iter().enumerate() {
            match f.parse::<f64>() {
                Ok(v) if v.is_finite() => features[j] = v,
                _ if line_no == 1 && j == 0 => {
                    header = true;
                    break;
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("feature {j} is not a finite number: '{f}'"),
                    })
                }
            }
        }
        if header {
            continue;
        }
        if fields[4].is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty class name".into(),
            });
        }
        rows.push(IrisRow {
            features,
            class: fields[4].to_string(),
        });
    }
    Ok(rows)
}

/// Filters to two classes (first → +1, second → -1) and min-max scales each
/// feature into `feature_range`. Constant columns map to the range start.
pub fn iris_from_rows(
    rows: &[IrisRow],
    class_pair: (&str, &str),
    feature_range: (f64, f64),
) -> Result<Dataset> {
    let kept: Vec<&IrisRow> = rows
        .iter()
        .filter(|r| r.class == class_pair.0 || r.class == class_pair.1)
        .collect();
    for name in [class_pair.0, class_pair.1] {
        if !kept.iter().any(|r| r.class == name) {
            return Err(Error::Config(format!("class '{name}' not present")));
        }
    }
    if class_pair.0 == class_pair.1 {
        return Err(Error::Config("class pair must name two classes".into()));
    }
    let (lo, hi) = feature_range;
    let mut inputs = vec![vec![0.0; 4]; kept.len()];
    for j in 0..4 {
        let min = kept.iter().map(|r| r.features[j]).fold(f64::INFINITY, f64::min);
        let max = kept.iter().map(|r| r.features[j]).fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        for (row, r) in inputs.iter_mut().zip(&kept) {
            row[j] = if span > 0.0 {
                lo + (hi - lo) * (r.features[j] - min) / span
            } else {
                lo
            };
        }
    }
    let labels = kept
        .iter()
        .map(|r| if r.class == class_pair.0 { 1.0 } else { -1.0 })
        .collect();
    Dataset::new(inputs, labels)
}

pub fn iris_load(
    path: &Path,
    class_pair: (&str, &str),
    feature_range: (f64, f64),
) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    iris_from_rows(&parse_iris_csv(&text)?, class_pair, feature_range)
}

pub const IRIS_FEATURE_RANGE: (f64, f64) = (0.0, PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlpFeatures {
    /// The group element β itself.
    GroupElement,
    /// Its discrete logarithm.
    Logarithm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DlpConfig {
    pub prime: u64,
    pub generator: u64,
    pub start: u64,
    pub samples: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub features: DlpFeatures,
}

impl Default for DlpConfig {
    fn default() -> Self {
        Self {
            prime: 67,
            generator: 2,
            start: 0,
            samples: 40,
            seed: 0,
            train_fraction: 0.75,
            features: DlpFeatures::GroupElement,
        }
    }
}

pub const MAX_DLP_PRIME: u64 = 1_000_000;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// `α` generates `Z_p*` iff `α^((p-1)/q) ≠ 1` for every prime `q | p-1`.
pub fn is_generator(alpha: u64, p: u64) -> bool {
    if alpha % p == 0 {
        return false;
    }
    prime_factors(p - 1)
        .into_iter()
        .all(|q| mod_pow(alpha, (p - 1) / q, p) != 1)
}

/// `table[β] = log_α β` for `β ∈ 1..p`, built from the power sequence
/// `α^0, α^1, ...`. Index 0 is unused.
pub fn discrete_log_table(p: u64, alpha: u64) -> Vec<u64> {
    let mut table = vec![0u64; p as usize];
    let mut power = 1u64;
    for e in 0..p - 1 {
        table[power as usize] = e;
        power = power * alpha % p;
    }
    table
}

/// `+1` iff `(log - start) mod (p-1) ∈ [0, (p-3)/2]`.
pub fn dlp_label(log: u64, start: u64, p: u64) -> f64 {
    let order = p - 1;
    let offset = (log + order - start % order) % order;
    if offset <= (p - 3) / 2 {
        1.0
    } else {
        -1.0
    }
}

impl DlpConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.prime;
        if p > MAX_DLP_PRIME {
            return Err(Error::Config(format!("prime {p} exceeds {MAX_DLP_PRIME}")));
        }
        if !is_prime(p) || p < 5 {
            return Err(Error::Config(format!("{p} is not an odd prime >= 5")));
        }
        if !is_generator(self.generator, p) {
            return Err(Error::Config(format!(
                "{} does not generate Z_{p}*",
                self.generator
            )));
        }
        if self.samples == 0 || self.samples as u64 > p - 1 {
            return Err(Error::Config(format!(
                "sample count {} outside 1..={}",
                self.samples,
                p - 1
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Period of the encoded feature: `p` for group elements, `p - 1` for logs.
    pub fn feature_period(&self) -> f64 {
        match self.features {
            DlpFeatures::GroupElement => self.prime as f64,
            DlpFeatures::Logarithm => (self.prime - 1) as f64,
        }
    }
}

/// Samples `β` without replacement from `Z_p*`; the first
/// `⌊train_fraction · samples⌋` form the training set, the rest `held_out`.
pub fn dlp_dataset(config: &DlpConfig) -> Result<Dataset> {
    config.validate()?;
    let p = config.prime;
    let logs = discrete_log_table(p, config.generator);
    let mut elements: Vec<u64> = (1..p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    elements.shuffle(&mut rng);
    elements.truncate(config.samples);

    let make = |betas: &[u64]| -> Result<Dataset> {
        let inputs = betas
            .iter()
            .map(|&b| match config.features {
                DlpFeatures::GroupElement => vec![b as f64],
                DlpFeatures::Logarithm => vec![logs[b as usize] as f64],
            })
            .collect();
        let labels = betas
            .iter()
            .map(|&b| dlp_label(logs[b as usize], config.start, p))
            .collect();
        Dataset::new(inputs, labels)
    };
    let n_train = ((config.train_fraction * config.samples as f64).floor() as usize).max(1);
    let mut train = make(&elements[..n_train])?;
    if n_train < elements.len() {
        train.held_out = Some(Box::new(make(&elements[n_train..])?));
    }
    Ok(train)
}
