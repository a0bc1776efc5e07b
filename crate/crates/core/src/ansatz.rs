//! Declarative data-reuploading circuit layouts.
//!
//! An [`AnsatzSpec`] is a layer template repeated `num_layers` times. It is
//! compiled into a flat [`Circuit`] whose rotation angles are either a
//! trainable parameter or a scaled input feature. Parameters are numbered in
//! gate order.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{Axis, Observable, StateVector, MAX_QUBITS};

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum GateSlot {
    Trainable {
        axis: Axis,
        qubit: usize,
    },
    /// Rotation by `feature_scale * x[f]` where
    /// `f = (feature_index + layer * feature_stride) % num_features`.
    Encoding {
        axis: Axis,
        qubit: usize,
        feature_index: usize,
        #[serde(default = "unit_scale")]
        feature_scale: f64,
        #[serde(default)]
        feature_stride: usize,
    },
    Entangler {
        control: usize,
        target: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub num_qubits: usize,
    pub num_layers: usize,
    #[serde(default = "one_feature")]
    pub num_features: usize,
    pub layer_template: Vec<GateSlot>,
    pub observable: Observable,
    #[serde(default)]
    pub trailing_trainable_block: bool,
    #[serde(default = "unit_scale")]
    pub output_scale: f64,
}

fn one_feature() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Curve4x20,
    Iris2x6,
    Dlp8x24,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curve-4x20" => Ok(Preset::Curve4x20),
            "iris-2x6" => Ok(Preset::Iris2x6),
            "dlp-8x24" => Ok(Preset::Dlp8x24),
            other => Err(Error::Config(format!("unknown ansatz preset '{other}'"))),
        }
    }
}

/// Default prime for the discrete-log layout's angle normalization.
pub const DLP_DEFAULT_PRIME: u64 = 67;

impl AnsatzSpec {
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name.parse::<Preset>()? {
            Preset::Curve4x20 => Self::curve(4, 20),
            Preset::Iris2x6 => Self::iris(6),
            Preset::Dlp8x24 => Self::dlp(8, 24, 2.0 * PI / DLP_DEFAULT_PRIME as f64),
        })
    }

    /// Curve-fitting layout: per layer `RZ(θ)` on all qubits, a CNOT chain,
    /// `RY(θ)` on all qubits, then `RX(x)` on all qubits.
    ///
    /// With only real rotations between `RX(x)` encodings the model is even in
    /// `x`; the `RZ` block is what lets it represent odd targets.
    pub fn curve(num_qubits: usize, num_layers: usize) -> Self {
        let mut t = Vec::new();
        t.extend((0..num_qubits).map(|q| GateSlot::Trainable { axis: Axis::Z, qubit: q }));
        t.extend((0..num_qubits.saturating_sub(1)).map(|q| GateSlot::Entangler {
            control: q,
            target: q + 1,
        }));
        t.extend((0..num_qubits).map(|q| GateSlot::Trainable { axis: Axis::Y, qubit: q }));
        t.extend((0..num_qubits).map(|q| GateSlot::Encoding {
            axis: Axis::X,
            qubit: q,
            feature_index: 0,
            feature_scale: 1.0,
            feature_stride: 0,
        }));
        Self {
            num_qubits,
            num_layers,
            num_features: 1,
            layer_template: t,
            observable: Observable::FullZString,
            trailing_trainable_block: false,
            output_scale: 1.0,
        }
    }

    /// Two-qubit Iris layout cycling the four features through `cycles`
    /// cycles of `RY(x)` encoding, `RY(θ)` and a CNOT.
    pub fn iris(cycles: usize) -> Self {
        let enc = |q: usize| GateSlot::Encoding {
            axis: Axis::Y,
            qubit: q,
            feature_index: q,
            feature_scale: 1.0,
            feature_stride: 2,
        };
        Self {
            num_qubits: 2,
            num_layers: cycles,
            num_features: 4,
            layer_template: vec![
                enc(0),
                enc(1),
                GateSlot::Trainable { axis: Axis::Y, qubit: 0 },
                GateSlot::Trainable { axis: Axis::Y, qubit: 1 },
                GateSlot::Entangler { control: 0, target: 1 },
            ],
            observable: Observable::FullZString,
            trailing_trainable_block: false,
            output_scale: 1.0,
        }
    }

    /// Kernel-embedding layout: per layer `RY(θ)` on all qubits, a CNOT ring,
    /// then `RX(angle_scale · x)` on all qubits.
    pub fn dlp(num_qubits: usize, num_layers: usize, angle_scale: f64) -> Self {
        let mut t = Vec::new();
        t.extend((0..num_qubits).map(|q| GateSlot::Trainable { axis: Axis::Y, qubit: q }));
        if num_qubits == 2 {
            t.push(GateSlot::Entangler { control: 0, target: 1 });
        } else if num_qubits > 2 {
            t.extend((0..num_qubits).map(|q| GateSlot::Entangler {
                control: q,
                target: (q + 1) % num_qubits,
            }));
        }
        t.extend((0..num_qubits).map(|q| GateSlot::Encoding {
            axis: Axis::X,
            qubit: q,
            feature_index: 0,
            feature_scale: angle_scale,
            feature_stride: 0,
        }));
        Self {
            num_qubits,
            num_layers,
            num_features: 1,
            layer_template: t,
            observable: Observable::FullZString,
            trailing_trainable_block: false,
            output_scale: 1.0,
        }
    }

    pub fn with_output_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    fn trainable_per_layer(&self) -> usize {
        self.layer_template
            .iter()
            .filter(|s| matches!(s, GateSlot::Trainable { .. }))
            .count()
    }

    pub fn parameter_count(&self) -> usize {
        let blocks = self.num_layers + usize::from(self.trailing_trainable_block);
        blocks * self.trainable_per_layer()
    }

    pub fn encoding_gate_count(&self) -> usize {
        self.num_layers
            * self
                .layer_template
                .iter()
                .filter(|s| matches!(s, GateSlot::Encoding { .. }))
                .count()
    }

    pub fn dimension(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Config(format!("qubit count {n} outside 1..={MAX_QUBITS}")));
        }
        if self.num_features == 0 {
            return Err(Error::Config("num_features must be at least 1".into()));
        }
        if !self.output_scale.is_finite() {
            return Err(Error::Config("output_scale must be finite".into()));
        }
        self.observable.validate(n)?;
        let check = |q: usize| {
            if q >= n {
                Err(Error::Index(format!("slot qubit {q} out of range for {n} qubits")))
            } else {
                Ok(())
            }
        };
        for slot in &self.layer_template {
            match *slot {
                GateSlot::Trainable { qubit, .. } => check(qubit)?,
                GateSlot::Encoding {
                    qubit,
                    feature_index,
                    feature_scale,
                    ..
                } => {
                    check(qubit)?;
                    if feature_index >= self.num_features {
                        return Err(Error::Config(format!(
                            "feature_index {feature_index} >= feature dimension {}",
                            self.num_features
                        )));
                    }
                    if !feature_scale.is_finite() {
                        return Err(Error::Config("feature_scale must be finite".into()));
                    }
                }
                GateSlot::Entangler { control, target } => {
                    check(control)?;
                    check(target)?;
                    if control == target {
                        return Err(Error::Index(format!(
                            "entangler control and target both {control}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn compile(&self) -> Result<Circuit> {
        self.validate()?;
        let mut ops = Vec::new();
        let mut next_param = 0;
        let mut emit = |slot: &GateSlot, layer: usize, skip_encoding: bool, ops: &mut Vec<Op>| {
            match *slot {
                GateSlot::Trainable { axis, qubit } => {
                    ops.push(Op::Rotation {
                        axis,
                        qubit,
                        angle: Angle::Param(next_param),
                    });
                    next_param += 1;
                }
                GateSlot::Encoding {
                    axis,
                    qubit,
                    feature_index,
                    feature_scale,
                    feature_stride,
                } if !skip_encoding => ops.push(Op::Rotation {
                    axis,
                    qubit,
                    angle: Angle::Feature {
                        index: (feature_index + layer * feature_stride) % self.num_features,
                        scale: feature_scale,
                    },
                }),
                GateSlot::Entangler { control, target } if !skip_encoding => {
                    ops.push(Op::Cnot { control, target })
                }
                _ => {}
            }
        };
        for layer in 0..self.num_layers {
            for slot in &self.layer_template {
                emit(slot, layer, false, &mut ops);
            }
        }
        if self.trailing_trainable_block {
            for slot in &self.layer_template {
                emit(slot, self.num_layers, true, &mut ops);
            }
        }
        Ok(Circuit {
            num_qubits: self.num_qubits,
            num_features: self.num_features,
            num_params: self.parameter_count(),
            mask: self.observable.mask(self.num_qubits)?,
            output_scale: self.output_scale,
            ops,
        })
    }

    pub fn evaluate(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        self.compile()?.evaluate(params, x)
    }

    pub fn prepare_state(&self, params: &[f64], x: &[f64]) -> Result<StateVector> {
        self.compile()?.prepare_state(params, x)
    }

    pub fn gradient(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.compile()?.gradient(params, x)
    }

    /// Accessible integer spectrum `{-E, ..., E}`, `E` = number of encoding
    /// gates. Only defined for single-feature, unit-scale encodings.
    pub fn spectrum(&self) -> Result<FrequencySpectrum> {
        self.validate()?;
        if self.num_features != 1 {
            return Err(Error::Unsupported(
                "spectrum of a multi-feature encoding".into(),
            ));
        }
        for slot in &self.layer_template {
            if let GateSlot::Encoding { feature_scale, .. } = slot {
                if *feature_scale != 1.0 {
                    return Err(Error::Unsupported(format!(
                        "spectrum with non-unit feature scale {feature_scale}"
                    )));
                }
            }
        }
        Ok(FrequencySpectrum::new(self.encoding_gate_count() as i64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySpectrum {
    pub max_frequency: i64,
    pub frequencies: Vec<i64>,
}

impl FrequencySpectrum {
    pub fn new(max_frequency: i64) -> Self {
        Self {
            max_frequency,
            frequencies: (-max_frequency..=max_frequency).collect(),
        }
    }

    pub fn contains(&self, k: i64) -> bool {
        k.abs() <= self.max_frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Param(usize),
    Feature { index: usize, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Rotation { axis: Axis, qubit: usize, angle: Angle },
    Cnot { control: usize, target: usize },
}

/// A compiled, validated circuit.
#[derive(Debug, Clone)]
pub struct Circuit {
    num_qubits: usize,
    num_features: usize,
    num_params: usize,
    mask: usize,
    output_scale: f64,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() != self.num_params {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.num_params,
                params.len()
            )));
        }
        if x.len() != self.num_features {
            return Err(Error::Shape(format!(
                "expected {} features, got {}",
                self.num_features,
                x.len()
            )));
        }
        if let Some(v) = params.iter().chain(x).find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite input {v}")));
        }
        Ok(())
    }

    fn angle(&self, angle: Angle, params: &[f64], x: &[f64]) -> f64 {
        match angle {
            Angle::Param(l) => params[l],
            Angle::Feature { index, scale } => scale * x[index],
        }
    }

    fn apply_op(&self, state: &mut StateVector, op: &Op, params: &[f64], x: &[f64]) {
        match *op {
            Op::Rotation { axis, qubit, angle } => {
                state.apply_single_unchecked(qubit, &axis.rotation(self.angle(angle, params, x)))
            }
            Op::Cnot { control, target } => state.apply_cnot_unchecked(control, target),
        }
    }

    fn apply_op_inverse(&self, state: &mut StateVector, op: &Op, params: &[f64], x: &[f64]) {
        match *op {
            Op::Rotation { axis, qubit, angle } => state
                .apply_single_unchecked(qubit, &axis.rotation(-self.angle(angle, params, x))),
            Op::Cnot { control, target } => state.apply_cnot_unchecked(control, target),
        }
    }

    pub fn prepare_state(&self, params: &[f64], x: &[f64]) -> Result<StateVector> {
        self.check(params, x)?;
        let mut state = StateVector::init_zero(self.num_qubits)?;
        for op in &self.ops {
            self.apply_op(&mut state, op, params, x);
        }
        Ok(state)
    }

    pub fn evaluate(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        let state = self.prepare_state(params, x)?;
        Ok(self.output_scale * state.diagonal_expectation(self.mask))
    }

    /// Parameter-shift gradient: `[f(θ_l + π/2) - f(θ_l - π/2)] / 2`.
    pub fn gradient(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check(params, x)?;
        let mut shifted = params.to_vec();
        let mut grad = Vec::with_capacity(self.num_params);
        for l in 0..self.num_params {
            shifted[l] = params[l] + FRAC_PI_2;
            let plus = self.evaluate(&shifted, x)?;
            shifted[l] = params[l] - FRAC_PI_2;
            let minus = self.evaluate(&shifted, x)?;
            shifted[l] = params[l];
            grad.push(0.5 * (plus - minus));
        }
        Ok(grad)
    }

    /// Output and exact gradient in one forward and one backward sweep.
    ///
    /// With `λ = s·M|ψ⟩` carried backwards alongside `|ψ⟩`, the derivative
    /// with respect to a rotation `exp(-iθA/2)` is `Im⟨λ|A|ψ⟩` evaluated
    /// just after that gate. Agrees with [`Circuit::gradient`] to rounding.
    pub fn value_and_gradient(&self, params: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut psi = self.prepare_state(params, x)?;
        let value = self.output_scale * psi.diagonal_expectation(self.mask);
        let lambda_amps: Vec<Complex64> = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a * (self.output_scale * Observable::eigenvalue(self.mask, i)))
            .collect();
        let mut lambda = StateVector::from_amplitudes(lambda_amps)?;
        let mut grad = vec![0.0; self.num_params];
        let mut scratch = psi.clone();
        for op in self.ops.iter().rev() {
            if let Op::Rotation {
                axis,
                qubit,
                angle: Angle::Param(l),
            } = *op
            {
                scratch.clone_from(&psi);
                scratch.apply_pauli_unchecked(axis, qubit);
                grad[l] += lambda.inner_product(&scratch)?.im;
            }
            self.apply_op_inverse(&mut psi, op, params, x);
            self.apply_op_inverse(&mut lambda, op, params, x);
        }
        Ok((value, grad))
    }

    /// Final states with parameter `l` shifted by `+π/2` and `-π/2`, for every
    /// `l`. The unshifted prefix is shared between all shifts.
    pub fn shifted_states(
        &self,
        params: &[f64],
        x: &[f64],
    ) -> Result<Vec<(StateVector, StateVector)>> {
        self.check(params, x)?;
        let mut prefix = StateVector::init_zero(self.num_qubits)?;
        let mut out = Vec::with_capacity(self.num_params);
        for (pos, op) in self.ops.iter().enumerate() {
            if let Op::Rotation {
                axis,
                qubit,
                angle: Angle::Param(l),
            } = *op
            {
                let mut pair = Vec::with_capacity(2);
                for shift in [FRAC_PI_2, -FRAC_PI_2] {
                    let mut s = prefix.clone();
                    s.apply_single_unchecked(qubit, &axis.rotation(params[l] + shift));
                    for rest in &self.ops[pos + 1..] {
                        self.apply_op(&mut s, rest, params, x);
                    }
                    pair.push(s);
                }
                let minus = pair.pop().expect("two shifts");
                let plus = pair.pop().expect("two shifts");
                out.push((plus, minus));
            }
            self.apply_op(&mut prefix, op, params, x);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(template: Vec<GateSlot>) -> AnsatzSpec {
        AnsatzSpec {
            num_qubits: 1,
            num_layers: 1,
            num_features: 1,
            layer_template: template,
            observable: Observable::SingleZ(0),
            trailing_trainable_block: false,
            output_scale: 1.0,
        }
    }

    fn rx_enc() -> GateSlot {
        GateSlot::Encoding {
            axis: Axis::X,
            qubit: 0,
            feature_index: 0,
            feature_scale: 1.0,
            feature_stride: 0,
        }
    }

    fn ry() -> GateSlot {
        GateSlot::Trainable { axis: Axis::Y, qubit: 0 }
    }

    #[test]
    fn preset_counts() {
        let c = AnsatzSpec::preset("curve-4x20").unwrap();
        assert_eq!(c.parameter_count(), 160);
        assert_eq!(c.encoding_gate_count(), 80);
        let i = AnsatzSpec::preset("iris-2x6").unwrap();
        assert_eq!(i.num_qubits, 2);
        assert_eq!(i.parameter_count(), 12);
        let d = AnsatzSpec::preset("dlp-8x24").unwrap();
        assert_eq!(d.num_layers, 24);
        assert_eq!(d.parameter_count(), 192);
        assert!(matches!(AnsatzSpec::preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn iris_cycles_features() {
        let circuit = AnsatzSpec::iris(6).compile().unwrap();
        let features: Vec<(usize, usize)> = circuit
            .ops()
            .iter()
            .filter_map(|op| match op {
                Op::Rotation {
                    qubit,
                    angle: Angle::Feature { index, .. },
                    ..
                } => Some((*qubit, *index)),
                _ => None,
            })
            .collect();
        let expected: Vec<(usize, usize)> = (0..6)
            .flat_map(|c| [(0, (2 * c) % 4), (1, (2 * c + 1) % 4)])
            .collect();
        assert_eq!(features, expected);
    }

    #[test]
    fn evaluate_examples() {
        let s = single(vec![ry()]);
        assert_eq!(s.evaluate(&[0.0], &[0.0]).unwrap(), 1.0);

        let s = single(vec![rx_enc(), ry()]);
        for x in [0.0, 0.4, 1.3, 2.9, 5.0] {
            assert!((s.evaluate(&[0.0], &[x]).unwrap() - x.cos()).abs() < 1e-12);
        }

        let c = AnsatzSpec::preset("curve-4x20").unwrap();
        assert!((c.evaluate(&[0.0; 160], &[0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(c.evaluate(&[0.0; 3], &[0.0]), Err(Error::Shape(_))));
        assert!(matches!(c.evaluate(&[0.0; 160], &[0.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn prepare_state_examples() {
        let s = single(vec![rx_enc()]);
        let st = s.prepare_state(&[], &[PI]).unwrap();
        assert!(st.amplitudes()[0].norm() < 1e-12);
        assert!((st.amplitudes()[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        let st = s.prepare_state(&[], &[0.0]).unwrap();
        assert_eq!(st.amplitudes()[0], Complex64::new(1.0, 0.0));

        let c = AnsatzSpec::preset("curve-4x20").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<f64> = (0..160).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let st = c.prepare_state(&p, &[rng.gen_range(0.0..2.0 * PI)]).unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gradient_examples() {
        let s = single(vec![ry()]);
        let g = s.gradient(&[FRAC_PI_2], &[0.0]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12);

        // second RY acts on a qubit the observable never reads
        let s = AnsatzSpec {
            num_qubits: 2,
            layer_template: vec![ry(), GateSlot::Trainable { axis: Axis::Y, qubit: 1 }],
            ..single(vec![])
        };
        let g = s.gradient(&[0.3, 1.1], &[0.0]).unwrap();
        assert!(g[1].abs() < 1e-12);
    }

    #[test]
    fn adjoint_matches_parameter_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [
            AnsatzSpec::preset("curve-4x20").unwrap().with_output_scale(1.2),
            AnsatzSpec::iris(6),
            AnsatzSpec::dlp(3, 4, 0.3),
        ] {
            let circuit = spec.compile().unwrap();
            let p: Vec<f64> = (0..circuit.num_params())
                .map(|_| rng.gen_range(0.0..2.0 * PI))
                .collect();
            let x: Vec<f64> = (0..spec.num_features).map(|_| rng.gen_range(0.0..PI)).collect();
            let shift = circuit.gradient(&p, &x).unwrap();
            let (value, adj) = circuit.value_and_gradient(&p, &x).unwrap();
            assert_eq!(value, circuit.evaluate(&p, &x).unwrap());
            for (a, b) in shift.iter().zip(&adj) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn shifted_states_match_direct_preparation() {
        let spec = AnsatzSpec::dlp(3, 2, 0.5);
        let circuit = spec.compile().unwrap();
        let p: Vec<f64> = (0..circuit.num_params()).map(|l| 0.1 * l as f64 + 0.2).collect();
        let pairs = circuit.shifted_states(&p, &[1.7]).unwrap();
        assert_eq!(pairs.len(), circuit.num_params());
        for (l, (plus, minus)) in pairs.iter().enumerate() {
            let mut q = p.clone();
            q[l] += FRAC_PI_2;
            let direct = circuit.prepare_state(&q, &[1.7]).unwrap();
            assert!((plus.fidelity(&direct).unwrap() - 1.0).abs() < 1e-12);
            q[l] = p[l] - FRAC_PI_2;
            let direct = circuit.prepare_state(&q, &[1.7]).unwrap();
            assert!((minus.fidelity(&direct).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_examples() {
        let mut s = single(vec![rx_enc()]);
        s.num_layers = 3;
        assert_eq!(s.spectrum().unwrap().frequencies, vec![-3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(
            AnsatzSpec::preset("curve-4x20").unwrap().spectrum().unwrap().max_frequency,
            80
        );
        assert_eq!(single(vec![ry()]).spectrum().unwrap().frequencies, vec![0]);
        assert!(matches!(AnsatzSpec::iris(6).spectrum(), Err(Error::Unsupported(_))));
        assert!(matches!(
            AnsatzSpec::preset("dlp-8x24").unwrap().spectrum(),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn trailing_block_adds_trainables_only() {
        let mut s = AnsatzSpec::curve(2, 3);
        s.trailing_trainable_block = true;
        assert_eq!(s.parameter_count(), 16);
        let c = s.compile().unwrap();
        assert_eq!(c.num_params(), 16);
        assert_eq!(s.encoding_gate_count(), 6);
    }

    #[test]
    fn validation_rejects_bad_layouts() {
        let mut s = single(vec![GateSlot::Encoding {
            axis: Axis::X,
            qubit: 0,
            feature_index: 1,
            feature_scale: 1.0,
            feature_stride: 0,
        }]);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        s.layer_template = vec![GateSlot::Entangler { control: 0, target: 0 }];
        assert!(s.validate().is_err());
        s.layer_template = vec![GateSlot::Trainable { axis: Axis::Z, qubit: 4 }];
        assert!(matches!(s.validate(), Err(Error::Index(_))));
    }

    #[test]
    fn layout_parses_from_toml() {
        let doc = r#"
            num_qubits = 1
            num_layers = 2
            observable = "full_z_string"
            layer_template = [
                { role = "encoding", axis = "x", qubit = 0, feature_index = 0 },
                { role = "trainable", axis = "y", qubit = 0 },
            ]
        "#;
        let spec: AnsatzSpec = toml::from_str(doc).unwrap();
        assert_eq!(spec.parameter_count(), 2);
        assert_eq!(spec.spectrum().unwrap().max_frequency, 2);
    }
}
