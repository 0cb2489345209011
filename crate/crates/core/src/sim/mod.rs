//! Statevector simulation of the brickwork ansatz.
//!
//! Amplitude index bit `q` is qubit `q` (qubit 0 least significant). Gates:
//!
//! - `Rot(A, q, s)` = `exp(−i θ_s A_q / 2)`
//! - `Ms(a, b, θ, φa, φb)` = `exp(−i (θ/2) A(φa)_a ⊗ A(φb)_b)`, `A(φ) = cos φ X + sin φ Y`
//!
//! Both generators square to the identity, so every gate is `cos·I − i sin·G`.

mod gradient;

pub use gradient::{
    apply_observable, evaluate, loss_and_gradient, loss_and_gradient_parameter_shift, observable_gradient,
    Evaluation, ShotBudget,
};

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution};

use crate::encoding::{Axis, Encoding, FamilyCounts, FamilySamples, PauliString};
use crate::error::{Error, Result};
use crate::rng;

/// Largest register the simulator accepts.
pub const SIM_QUBIT_LIMIT: usize = 24;

const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    Rot {
        axis: Axis,
        qubit: usize,
        slot: usize,
    },
    Ms {
        a: usize,
        b: usize,
        angle: usize,
        phase_a: usize,
        phase_b: usize,
    },
}

impl Gate {
    fn slots(&self) -> impl Iterator<Item = usize> {
        let (arr, len) = match *self {
            Gate::Rot { slot, .. } => ([slot, 0, 0], 1),
            Gate::Ms {
                angle,
                phase_a,
                phase_b,
                ..
            } => ([angle, phase_a, phase_b], 3),
        };
        arr.into_iter().take(len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

impl Circuit {
    /// Validate qubit indices and that parameter slots cover `[0, P)`.
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 || n > SIM_QUBIT_LIMIT {
            return Err(Error::TooLarge {
                what: "simulated register",
                size: n,
                limit: SIM_QUBIT_LIMIT,
                hint: "use a higher body order k to reduce the qubit count",
            });
        }
        let mut used = Vec::new();
        for (i, g) in gates.iter().enumerate() {
            match *g {
                Gate::Rot { qubit, .. } if qubit >= n => {
                    return Err(Error::InvalidArgument(format!("gate {i}: qubit {qubit} out of range")))
                }
                Gate::Ms { a, b, .. } if a >= n || b >= n || a == b => {
                    return Err(Error::InvalidArgument(format!("gate {i}: bad MS pair ({a}, {b})")))
                }
                _ => {}
            }
            for s in g.slots() {
                if s >= used.len() {
                    used.resize(s + 1, false);
                }
                used[s] = true;
            }
        }
        if let Some(gap) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidArgument(format!("parameter slot {gap} is unused")));
        }
        Ok(Circuit {
            n,
            num_params: used.len(),
            gates,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Ms { .. })).count()
    }
}

/// Brickwork: per layer `ℓ`, one rotation per qubit about X, Y, Z cycling with
/// `ℓ`, then MS gates on `(0,1),(2,3),…` for even `ℓ` and `(1,2),(3,4),…` for odd `ℓ`.
pub fn build_brickwork(n: usize, num_layers: usize) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("brickwork needs n ≥ 2, got {n}")));
    }
    if num_layers == 0 {
        return Err(Error::InvalidArgument("brickwork needs at least one layer".into()));
    }
    let mut gates = Vec::new();
    let mut slot = 0;
    for layer in 0..num_layers {
        let axis = Axis::from_index(layer);
        for qubit in 0..n {
            gates.push(Gate::Rot { axis, qubit, slot });
            slot += 1;
        }
        let mut a = layer % 2;
        while a + 1 < n {
            gates.push(Gate::Ms {
                a,
                b: a + 1,
                angle: slot,
                phase_a: slot + 1,
                phase_b: slot + 2,
            });
            slot += 3;
            a += 2;
        }
    }
    Circuit::new(n, gates)
}

/// Layer count `⌈c·m/n⌉`, at least one.
pub fn default_layers(m: usize, n: usize, c: f64) -> usize {
    ((c * m as f64 / n as f64).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {i} is not finite")));
        }
        Ok(ParamVector(values))
    }

    pub fn zeros(p: usize) -> Self {
        ParamVector(vec![0.0; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let d = amps.len();
        if d == 0 || !d.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{d} amplitudes is not a power of two")));
        }
        Ok(StateVector {
            n: d.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Little-endian interleaved `re, im` doubles.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.amps.len() * 16);
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(16) {
            return Err(Error::InvalidArgument("state dump length is not a multiple of 16".into()));
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        StateVector::from_amplitudes(amps)
    }

    /// Apply a 2×2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    fn apply_single(&mut self, q: usize, m: [Complex64; 4]) {
        let bit = 1usize << q;
        let kernel = |chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(bit);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m[0] * x0 + m[1] * x1;
                *a1 = m[2] * x0 + m[3] * x1;
            }
        };
        if self.amps.len() >= PAR_THRESHOLD {
            use rayon::prelude::*;
            self.amps.par_chunks_mut(2 * bit).for_each(kernel);
        } else {
            self.amps.chunks_mut(2 * bit).for_each(kernel);
        }
    }

    /// `exp(−i θ A_q / 2)`.
    pub fn apply_rotation(&mut self, axis: Axis, q: usize, theta: f64) {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let zero = Complex64::new(0.0, 0.0);
        let m = match axis {
            Axis::X => [Complex64::new(c, 0.0), Complex64::new(0.0, -s), Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            Axis::Y => [Complex64::new(c, 0.0), Complex64::new(-s, 0.0), Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            Axis::Z => [Complex64::new(c, -s), zero, zero, Complex64::new(c, s)],
        };
        self.apply_single(q, m);
    }

    /// `cos(θ/2)·I − i sin(θ/2)·M` with `M = A(φa)_a ⊗ A(φb)_b`.
    pub fn apply_ms(&mut self, a: usize, b: usize, theta: f64, phi_a: f64, phi_b: f64) {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        self.apply_ms_generic(a, b, Complex64::new(c, 0.0), Complex64::new(0.0, -s), phi_a, phi_b);
    }

    /// `M = A(φa)_a ⊗ A(φb)_b` applied directly.
    pub fn apply_ms_generator(&mut self, a: usize, b: usize, phi_a: f64, phi_b: f64) {
        self.apply_ms_generic(a, b, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), phi_a, phi_b);
    }

    /// `diag·I + off·M`. `A(φ)` sends `|0⟩ → e^{iφ}|1⟩` and `|1⟩ → e^{−iφ}|0⟩`.
    fn apply_ms_generic(&mut self, a: usize, b: usize, diag: Complex64, off: Complex64, phi_a: f64, phi_b: f64) {
        let (ba, bb) = (1usize << a, 1usize << b);
        let sum = Complex64::from_polar(1.0, phi_a + phi_b);
        let diff = Complex64::from_polar(1.0, phi_a - phi_b);
        let (sum_c, diff_c) = (sum.conj(), diff.conj());
        for i in 0..self.amps.len() {
            if i & ba != 0 || i & bb != 0 {
                continue;
            }
            let (i00, i01, i10, i11) = (i, i | bb, i | ba, i | ba | bb);
            let (x00, x01, x10, x11) = (self.amps[i00], self.amps[i01], self.amps[i10], self.amps[i11]);
            self.amps[i00] = diag * x00 + off * sum_c * x11;
            self.amps[i11] = diag * x11 + off * sum * x00;
            // source |a=0,b=1⟩ lands on |a=1,b=0⟩ with e^{iφa} e^{−iφb}
            self.amps[i10] = diag * x10 + off * diff * x01;
            self.amps[i01] = diag * x01 + off * diff_c * x10;
        }
    }

    pub fn apply_pauli(&mut self, p: &PauliString) {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (l, &a) in self.amps.iter().enumerate() {
            let (row, c) = p.apply_to_basis(l);
            out[row] = c * a;
        }
        self.amps = out;
    }

    /// Multiply by `Z_q`.
    pub fn apply_z(&mut self, q: usize) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = -*a;
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate, theta: &[f64]) {
        match *gate {
            Gate::Rot { axis, qubit, slot } => self.apply_rotation(axis, qubit, theta[slot]),
            Gate::Ms {
                a,
                b,
                angle,
                phase_a,
                phase_b,
            } => self.apply_ms(a, b, theta[angle], theta[phase_a], theta[phase_b]),
        }
    }

    pub fn apply_gate_inverse(&mut self, gate: &Gate, theta: &[f64]) {
        match *gate {
            Gate::Rot { axis, qubit, slot } => self.apply_rotation(axis, qubit, -theta[slot]),
            Gate::Ms {
                a,
                b,
                angle,
                phase_a,
                phase_b,
            } => self.apply_ms(a, b, -theta[angle], theta[phase_a], theta[phase_b]),
        }
    }

    /// Rotate every qubit so that measuring `axis` becomes measuring Z:
    /// `H` for X, `H·S†` for Y.
    pub fn rotate_to_z(&mut self, axis: Axis) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let zero = Complex64::new(0.0, 0.0);
        let hm = [Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(-h, 0.0)];
        let s_dag = [Complex64::new(1.0, 0.0), zero, zero, Complex64::new(0.0, -1.0)];
        for q in 0..self.n {
            match axis {
                Axis::Z => {}
                Axis::X => self.apply_single(q, hm),
                Axis::Y => {
                    self.apply_single(q, s_dag);
                    self.apply_single(q, hm);
                }
            }
        }
    }

    /// Inverse of [`StateVector::rotate_to_z`].
    pub fn rotate_from_z(&mut self, axis: Axis) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let zero = Complex64::new(0.0, 0.0);
        let hm = [Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(-h, 0.0)];
        let s = [Complex64::new(1.0, 0.0), zero, zero, Complex64::new(0.0, 1.0)];
        for q in 0..self.n {
            match axis {
                Axis::Z => {}
                Axis::X => self.apply_single(q, hm),
                Axis::Y => {
                    self.apply_single(q, hm);
                    self.apply_single(q, s);
                }
            }
        }
    }
}

/// Evolve `|0…0⟩` through the circuit.
pub fn run(c: &Circuit, theta: &ParamVector) -> Result<StateVector> {
    check_params(c, theta)?;
    let mut psi = StateVector::zero(c.n);
    for g in &c.gates {
        psi.apply_gate(g, theta.as_slice());
    }
    Ok(psi)
}

pub(crate) fn check_params(c: &Circuit, theta: &ParamVector) -> Result<()> {
    if theta.len() != c.num_params {
        return Err(Error::LengthMismatch {
            expected: c.num_params,
            actual: theta.len(),
        });
    }
    Ok(())
}

/// `⟨ψ|P|ψ⟩` by direct summation over basis states.
pub fn expectation(s: &StateVector, p: &PauliString) -> f64 {
    s.amps
        .iter()
        .enumerate()
        .map(|(l, &a)| {
            let (row, c) = p.apply_to_basis(l);
            (s.amps[row].conj() * c * a).re
        })
        .sum()
}

/// In-place Walsh–Hadamard transform: `f[s] ← Σ_l f[l] (−1)^{|l ∧ s|}`.
pub(crate) fn walsh_hadamard(f: &mut [f64]) {
    let mut h = 1;
    while h < f.len() {
        for chunk in f.chunks_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

/// Measurement distribution in the given basis.
pub fn basis_probabilities(s: &StateVector, axis: Axis) -> Vec<f64> {
    let mut rotated = s.clone();
    rotated.rotate_to_z(axis);
    rotated.probabilities()
}

/// All encoded correlators, one basis rotation and one Walsh–Hadamard
/// transform per family.
pub fn encoding_expectations(s: &StateVector, enc: &Encoding) -> Vec<f64> {
    let mut out = vec![0.0; enc.len()];
    for axis in Axis::ALL {
        let members = enc.family(axis);
        if members.is_empty() {
            continue;
        }
        let mut f = basis_probabilities(s, axis);
        walsh_hadamard(&mut f);
        for &i in members {
            out[i] = f[enc.strings()[i].mask() as usize];
        }
    }
    out
}

/// Computational-basis shots after rotating `axis` to Z. Each outcome is a
/// bitmask with bit `q` set when qubit `q` read −1.
pub fn sample(s: &StateVector, axis: Axis, shots: usize, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be ≥ 1".into()));
    }
    let probs = basis_probabilities(s, axis);
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let mut r = rng::seeded(seed);
    Ok((0..shots)
        .map(|_| {
            let u = r.random::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(probs.len() - 1) as u64
        })
        .collect())
}

/// Outcome histogram of `shots` samples, drawn as a multinomial by sequential binomials.
pub fn sample_counts(s: &StateVector, axis: Axis, shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be ≥ 1".into()));
    }
    let probs = basis_probabilities(s, axis);
    let mut r = rng::seeded(seed);
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(&mut r);
        counts[i] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(counts)
}

/// Shots for all three families with seeds derived from `seed`.
pub fn sample_families(s: &StateVector, shots: usize, seed: u64) -> Result<FamilySamples> {
    let mut outcomes: [Vec<u64>; 3] = Default::default();
    for axis in Axis::ALL {
        outcomes[axis.index()] = sample(s, axis, shots, rng::derive_seed(seed, &[axis.index() as u64]))?;
    }
    Ok(FamilySamples { outcomes })
}

pub fn sample_family_counts(s: &StateVector, shots: u64, seed: u64) -> Result<FamilyCounts> {
    let mut counts: [Vec<u64>; 3] = Default::default();
    for axis in Axis::ALL {
        counts[axis.index()] = sample_counts(s, axis, shots, rng::derive_seed(seed, &[axis.index() as u64]))?;
    }
    Ok(FamilyCounts { counts })
}
