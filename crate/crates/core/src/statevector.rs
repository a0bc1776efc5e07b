//! Dense statevector simulation.
//!
//! Qubit 0 is the leftmost (most significant) bit of a basis label, so on
//! `n` qubits qubit `q` addresses bit `n - 1 - q` of the amplitude index.
//! Rotations follow `R_A(phi) = exp(-i phi A / 2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Single-qubit rotation matrix `[[m00, m01], [m10, m11]]`.
    pub fn rotation(self, angle: f64) -> [[Complex64; 2]; 2] {
        let (s, c) = (angle / 2.0).sin_cos();
        match self {
            Axis::X => [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
            Axis::Y => [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
            Axis::Z => [
                [Complex64::new(c, -s), ZERO],
                [ZERO, Complex64::new(c, s)],
            ],
        }
    }
}

/// Pauli-Z string observables. All are diagonal in the computational basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    FullZString,
    SingleZ(usize),
    ZSubset(Vec<usize>),
}

impl Observable {
    fn qubits(&self, num_qubits: usize) -> Vec<usize> {
        match self {
            Observable::FullZString => (0..num_qubits).collect(),
            Observable::SingleZ(q) => vec![*q],
            Observable::ZSubset(qs) => qs.clone(),
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        for q in self.qubits(num_qubits) {
            if q >= num_qubits {
                return Err(Error::Index(format!(
                    "observable qubit {q} out of range for {num_qubits} qubits"
                )));
            }
        }
        Ok(())
    }

    /// Bit mask over amplitude indices; the eigenvalue of basis state `i`
    /// is `(-1)^popcount(i & mask)`.
    pub fn mask(&self, num_qubits: usize) -> Result<usize> {
        self.validate(num_qubits)?;
        Ok(self
            .qubits(num_qubits)
            .into_iter()
            .fold(0usize, |m, q| m ^ (1 << (num_qubits - 1 - q))))
    }

    pub fn eigenvalue(mask: usize, index: usize) -> f64 {
        if (index & mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `Tr M` over the full `2^n` space.
    pub fn trace(&self, num_qubits: usize) -> Result<f64> {
        let mask = self.mask(num_qubits)?;
        Ok((0..1usize << num_qubits)
            .map(|i| Self::eigenvalue(mask, i))
            .sum())
    }

    /// `Tr M^2`; every Z string squares to the identity.
    pub fn trace_squared(&self, num_qubits: usize) -> Result<f64> {
        self.validate(num_qubits)?;
        Ok((1usize << num_qubits) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn init_zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {num_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the caller is
    /// responsible for normalization.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::Config(format!("{num_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn stride(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Applies an arbitrary 2x2 matrix to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) -> Result<()> {
        self.check_qubit(qubit)?;
        self.apply_single_unchecked(qubit, m);
        Ok(())
    }

    pub(crate) fn apply_single_unchecked(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) {
        let stride = self.stride(qubit);
        let amps = &mut self.amplitudes;
        let mut base = 0;
        while base < amps.len() {
            for i in base..base + stride {
                let a0 = amps[i];
                let a1 = amps[i + stride];
                amps[i] = m[0][0] * a0 + m[0][1] * a1;
                amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    pub fn apply_rotation(&mut self, axis: Axis, qubit: usize, angle: f64) -> Result<()> {
        if !angle.is_finite() {
            return Err(Error::Numeric(format!("non-finite rotation angle {angle}")));
        }
        self.apply_single(qubit, &axis.rotation(angle))
    }

    /// Applies the Pauli matrix of `axis` (not a rotation) to `qubit`.
    pub(crate) fn apply_pauli_unchecked(&mut self, axis: Axis, qubit: usize) {
        let stride = self.stride(qubit);
        let amps = &mut self.amplitudes;
        let mut base = 0;
        while base < amps.len() {
            for i in base..base + stride {
                let j = i + stride;
                match axis {
                    Axis::X => amps.swap(i, j),
                    Axis::Y => {
                        let (a0, a1) = (amps[i], amps[j]);
                        amps[i] = Complex64::new(a1.im, -a1.re);
                        amps[j] = Complex64::new(-a0.im, a0.re);
                    }
                    Axis::Z => amps[j] = -amps[j],
                }
            }
            base += 2 * stride;
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!(
                "cnot control and target both {control}"
            )));
        }
        self.apply_cnot_unchecked(control, target);
        Ok(())
    }

    pub(crate) fn apply_cnot_unchecked(&mut self, control: usize, target: usize) {
        let cbit = self.stride(control);
        let tbit = self.stride(target);
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        let mask = obs.mask(self.num_qubits)?;
        Ok(self.diagonal_expectation(mask))
    }

    pub(crate) fn diagonal_expectation(&self, mask: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| Observable::eigenvalue(mask, i) * a.norm_sqr())
            .sum()
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::Shape(format!(
                "inner product of {}- and {}-qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }
}
