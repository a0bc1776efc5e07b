//! Frequency-domain tools: unitary DFT on the uniform `[0, 2π)` grid,
//! projected non-uniform DFT for multi-dimensional inputs, principal
//! direction, relative errors, peak picking and circuit Fourier coefficients.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::ansatz::AnsatzSpec;
use crate::error::{Error, Result};
use crate::export::fmt_num;

/// Frequencies with complex amplitudes `A(k) e^{iφ(k)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    k_values: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl SpectrumSeries {
    pub fn new(k_values: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if k_values.len() != amplitudes.len() {
            return Err(Error::Shape(format!(
                "{} frequencies but {} amplitudes",
                k_values.len(),
                amplitudes.len()
            )));
        }
        if k_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Shape("frequencies must be strictly increasing".into()));
        }
        Ok(Self {
            k_values,
            amplitudes,
        })
    }

    pub fn k_values(&self) -> &[f64] {
        &self.k_values
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }

    pub fn index_of(&self, k: f64) -> Result<usize> {
        self.k_values
            .iter()
            .position(|&v| (v - k).abs() <= 1e-9 * (1.0 + k.abs()))
            .ok_or_else(|| Error::Index(format!("frequency {k} not on grid")))
    }

    pub fn at(&self, k: f64) -> Result<Complex64> {
        Ok(self.amplitudes[self.index_of(k)?])
    }

    pub fn energy(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// The `k >= 0` half.
    pub fn non_negative(&self) -> SpectrumSeries {
        let start = self.k_values.partition_point(|&k| k < 0.0);
        SpectrumSeries {
            k_values: self.k_values[start..].to_vec(),
            amplitudes: self.amplitudes[start..].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,re,im,abs")?;
        for (k, a) in self.k_values.iter().zip(&self.amplitudes) {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_num(*k),
                fmt_num(a.re),
                fmt_num(a.im),
                fmt_num(a.norm())
            )?;
        }
        Ok(())
    }
}

/// Unit-norm projection direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDirection(Vec<f64>);

impl ProjectionDirection {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateData("zero projection direction".into()));
        }
        Ok(Self(components.into_iter().map(|c| c / norm).collect()))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn project(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.0.len() {
            return Err(Error::Shape(format!(
                "point of dimension {} against direction of dimension {}",
                point.len(),
                self.0.len()
            )));
        }
        Ok(point.iter().zip(&self.0).map(|(a, b)| a * b).sum())
    }
}

/// Integer frequency grid of an `n`-point unitary DFT.
pub fn uniform_k_grid(n: usize) -> Vec<i64> {
    let half = (n / 2) as i64;
    (-half..n as i64 - half).collect()
}

/// Sample positions `2πi/n`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// `ŷ(k) = (1/√N) Σ_i y_i e^{-ik x_i}` with `x_i = 2πi/N`.
pub fn dft_uniform<T: Copy + Into<Complex64>>(values: &[T]) -> Result<SpectrumSeries> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Shape("DFT of an empty sequence".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let ks = uniform_k_grid(n);
    let amplitudes = ks
        .iter()
        .map(|&k| {
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| v.into() * twiddle(k, i, n))
                .sum::<Complex64>()
                * norm
        })
        .collect();
    SpectrumSeries::new(ks.into_iter().map(|k| k as f64).collect(), amplitudes)
}

/// DFT of uniform samples at a single integer frequency.
pub fn dft_uniform_at<T: Copy + Into<Complex64>>(values: &[T], k: i64) -> Complex64 {
    let n = values.len();
    let norm = 1.0 / (n as f64).sqrt();
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| v.into() * twiddle(k, i, n))
        .sum::<Complex64>()
        * norm
}

/// `e^{-i k 2π i / n}`, with the phase reduced mod `n` before the float step.
fn twiddle(k: i64, i: usize, n: usize) -> Complex64 {
    let r = (k * i as i64).rem_euclid(n as i64);
    Complex64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64)
}

/// Inverse of [`dft_uniform`].
pub fn idft_uniform(series: &SpectrumSeries) -> Vec<Complex64> {
    let n = series.len();
    let norm = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| {
            series
                .k_values
                .iter()
                .zip(&series.amplitudes)
                .map(|(&k, a)| a * twiddle(k as i64, i, n).conj())
                .sum::<Complex64>()
                * norm
        })
        .collect()
}

/// `ŷ_p(k) = (1/√N) Σ_i y_i e^{-i (p·x_i) k}`, evaluated directly.
pub fn nudft_projected(
    points: &[Vec<f64>],
    values: &[f64],
    direction: &ProjectionDirection,
    k_grid: &[f64],
) -> Result<SpectrumSeries> {
    if points.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    if k_grid.is_empty() {
        return Err(Error::Shape("empty frequency grid".into()));
    }
    let proj = points
        .iter()
        .map(|p| direction.project(p))
        .collect::<Result<Vec<_>>>()?;
    let norm = if values.is_empty() {
        0.0
    } else {
        1.0 / (values.len() as f64).sqrt()
    };
    let amplitudes = k_grid
        .iter()
        .map(|&k| {
            proj.iter()
                .zip(values)
                .map(|(&t, &y)| Complex64::from_polar(y, -t * k))
                .sum::<Complex64>()
                * norm
        })
        .collect();
    SpectrumSeries::new(k_grid.to_vec(), amplitudes)
}

/// `count` uniform frequencies on `[0, π / s]`, `s` the median
/// nearest-neighbour spacing of the projected coordinates.
pub fn projected_k_grid(projections: &[f64], count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::Config("k grid needs at least 2 frequencies".into()));
    }
    let mut sorted = projections.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let mut nearest: Vec<f64> = (0..sorted.len())
        .filter_map(|i| {
            let left = i.checked_sub(1).map(|j| gaps[j]);
            let right = gaps.get(i).copied();
            match (left, right) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            }
        })
        .filter(|&d| d > 0.0)
        .collect();
    if nearest.is_empty() {
        return Err(Error::DegenerateData(
            "projected points have no positive spacing".into(),
        ));
    }
    nearest.sort_by(f64::total_cmp);
    let mid = nearest.len() / 2;
    let median = if nearest.len() % 2 == 0 {
        0.5 * (nearest[mid - 1] + nearest[mid])
    } else {
        nearest[mid]
    };
    let k_max = PI / median;
    Ok((0..count)
        .map(|j| k_max * j as f64 / (count - 1) as f64)
        .collect())
}

/// Leading eigenvector of the sample covariance by power iteration, sign
/// fixed so the largest-magnitude component is positive.
pub fn principal_direction(points: &[Vec<f64>]) -> Result<ProjectionDirection> {
    if points.len() < 2 {
        return Err(Error::DegenerateData("need at least two points".into()));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("points must share a nonzero dimension".into()));
    }
    let n = points.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n)
        .collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for p in points {
        for a in 0..dim {
            for b in 0..dim {
                cov[a][b] += (p[a] - mean[a]) * (p[b] - mean[b]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    let scale = cov.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::DegenerateData("zero covariance".into()));
    }

    let matvec = |v: &[f64]| -> Vec<f64> {
        cov.iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    };
    let normalize = |v: Vec<f64>| -> Vec<f64> {
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.into_iter().map(|c| c / norm).collect()
    };

    // Start from the heaviest covariance column, nudged off any exact
    // orthogonality to the leading eigenvector.
    let heaviest = (0..dim)
        .max_by(|&a, &b| cov[a][a].total_cmp(&cov[b][b]))
        .unwrap_or(0);
    let mut v: Vec<f64> = (0..dim)
        .map(|j| cov[j][heaviest] + 1e-3 * scale * (1.0 + j as f64 / dim as f64))
        .collect();
    v = normalize(v);
    for _ in 0..1000 {
        let next = normalize(matvec(&v));
        // eigenvectors are sign-ambiguous; compare up to sign
        let same = next.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let flip = next.iter().zip(&v).map(|(a, b)| (a + b).powi(2)).sum::<f64>();
        v = next;
        if same.min(flip).sqrt() < 1e-12 {
            break;
        }
    }
    let lead = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if lead < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    ProjectionDirection::new(v)
}

/// `Δ_F(k) = |f̂(k) - ŷ(k)| / |ŷ(k)|`.
pub fn relative_error(f_hat: &SpectrumSeries, y_hat: &SpectrumSeries, k: f64) -> Result<f64> {
    let y = y_hat.at(k)?;
    let f = f_hat.at(k)?;
    relative_error_values(f, y)
}

pub fn relative_error_values(f: Complex64, y: Complex64) -> Result<f64> {
    if y.norm() <= 1e-12 {
        return Err(Error::DivisionByZero(format!(
            "label amplitude {} too small",
            y.norm()
        )));
    }
    Ok((f - y).norm() / y.norm())
}

/// Frequencies of the `m` highest strict local maxima of `|amplitude|` over
/// the `k >= 0` half, in descending amplitude; near-ties go to smaller `k`.
pub fn top_peaks(series: &SpectrumSeries, m: usize) -> Vec<f64> {
    let half = series.non_negative();
    let mags: Vec<f64> = half.amplitudes.iter().map(|a| a.norm()).collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    if m == 0 || max == 0.0 {
        return Vec::new();
    }
    let tol = 1e-9 * max;
    let n = mags.len();
    let mut peaks: Vec<(f64, f64)> = (0..n)
        .filter(|&i| {
            let left = i == 0 || mags[i] > mags[i - 1] + tol;
            let right = i + 1 == n || mags[i] > mags[i + 1] + tol;
            left && right && (n > 1 || mags[i] > 0.0)
        })
        .map(|i| (half.k_values[i], mags[i]))
        .collect();
    peaks.sort_by(|a, b| {
        if (a.1 - b.1).abs() <= tol {
            a.0.total_cmp(&b.0)
        } else {
            b.1.total_cmp(&a.1)
        }
    });
    peaks.into_iter().take(m).map(|(k, _)| k).collect()
}

/// `|Σ|ε(x)|² - Σ|ε̂(k)|²|`.
pub fn parseval_gap(x_residuals: &[f64], k_residuals: &SpectrumSeries) -> f64 {
    let x_energy: f64 = x_residuals.iter().map(|e| e * e).sum();
    (x_energy - k_residuals.energy()).abs()
}

/// Coefficients `C(ω)` of `f(x) = Σ_ω C(ω) e^{iωx}` for `ω ∈ [-E, E]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    max_frequency: i64,
    coefficients: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn max_frequency(&self) -> i64 {
        self.max_frequency
    }

    pub fn get(&self, omega: i64) -> Complex64 {
        if omega.abs() > self.max_frequency {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients[(omega + self.max_frequency) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(move |(j, c)| (j as i64 - self.max_frequency, *c))
    }

    /// `Σ_ω C(ω) e^{iωx}`; the imaginary part is rounding noise for real `f`.
    pub fn reconstruct(&self, x: f64) -> Complex64 {
        self.iter()
            .map(|(w, c)| c * Complex64::from_polar(1.0, w as f64 * x))
            .sum()
    }

    pub fn to_series(&self) -> SpectrumSeries {
        let (ks, amps) = self.iter().map(|(w, c)| (w as f64, c)).unzip();
        SpectrumSeries {
            k_values: ks,
            amplitudes: amps,
        }
    }
}

/// Exact coefficients from `2E + 1` samples of the circuit output.
pub fn pqc_fourier_coefficients(spec: &AnsatzSpec, params: &[f64]) -> Result<FourierCoefficients> {
    let e = spec.spectrum()?.max_frequency;
    sampled_fourier_coefficients(spec, params, (2 * e + 1) as usize)
}

/// Coefficients for `|ω| <= (samples - 1) / 2` from `samples` uniform
/// evaluations. `samples` must be odd.
pub fn sampled_fourier_coefficients(
    spec: &AnsatzSpec,
    params: &[f64],
    samples: usize,
) -> Result<FourierCoefficients> {
    spec.spectrum()?;
    if samples % 2 == 0 {
        return Err(Error::Config("sample count must be odd".into()));
    }
    let circuit = spec.compile()?;
    let xs = uniform_grid(samples);
    let values = xs
        .iter()
        .map(|&x| circuit.evaluate(params, &[x]))
        .collect::<Result<Vec<_>>>()?;
    let max_frequency = ((samples - 1) / 2) as i64;
    let coefficients = (-max_frequency..=max_frequency)
        .map(|w| dft_uniform_at(&values, w) / (samples as f64).sqrt())
        .collect();
    Ok(FourierCoefficients {
        max_frequency,
        coefficients,
    })
}
