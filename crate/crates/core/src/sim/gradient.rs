//! Loss gradients with respect to circuit parameters.
//!
//! The loss depends on the state only through the correlators `e_i`, so its
//! gradient equals the gradient of `⟨ψ|O|ψ⟩` with the fixed observable
//! `O = Σ_i (∂L/∂e_i) Π_i`. The adjoint sweep evaluates that with one forward
//! and one backward pass. For a gate `exp(−iθG/2)` applied last-before-`λ`,
//! `∂⟨O⟩/∂θ = Im⟨λ|G|ψ⟩`.
//!
//! [`loss_and_gradient_parameter_shift`] is the independent route: two-term
//! shift rules per generator, optionally from sampled expectations.

use num_complex::Complex64;

use super::{check_params, encoding_expectations, run, sample_family_counts, Circuit, Gate, ParamVector, StateVector};
use crate::encoding::{estimate_from_counts, Axis, Encoding};
use crate::error::{Error, Result};
use crate::loss::{loss_grad_expectations, loss_value, LossSpec};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotBudget {
    /// Exact expectations from the statevector.
    Exact,
    /// Per-family shot count for every expectation estimate.
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub expectations: Vec<f64>,
}

fn check_spec(c: &Circuit, spec: &LossSpec<'_>) -> Result<()> {
    let n = spec.encoding().num_qubits();
    if n != c.num_qubits() {
        return Err(Error::InvalidArgument(format!(
            "encoding is on {n} qubits but the circuit has {}",
            c.num_qubits()
        )));
    }
    Ok(())
}

/// `O|ψ⟩` for `O = Σ_i g_i Π_i`, one diagonalizing rotation per family.
pub fn apply_observable(psi: &StateVector, enc: &Encoding, g: &[f64]) -> StateVector {
    let d = psi.amps.len();
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for axis in Axis::ALL {
        let mut spectrum = vec![0.0; d];
        let mut any = false;
        for &i in enc.family(axis) {
            if g[i] != 0.0 {
                spectrum[enc.strings()[i].mask() as usize] += g[i];
                any = true;
            }
        }
        if !any {
            continue;
        }
        // diagonal of Σ g_i Z_{S_i}: D[l] = Σ_S G[S] (−1)^{|l ∧ S|}
        super::walsh_hadamard(&mut spectrum);
        let mut phi = psi.clone();
        phi.rotate_to_z(axis);
        for (a, dl) in phi.amps.iter_mut().zip(&spectrum) {
            *a *= dl;
        }
        phi.rotate_from_z(axis);
        for (o, a) in out.iter_mut().zip(phi.amps) {
            *o += a;
        }
    }
    StateVector { n: psi.n, amps: out }
}

/// `⟨λ|A_q|ψ⟩` for a single-qubit Pauli.
fn pauli_inner(lam: &StateVector, psi: &StateVector, axis: Axis, q: usize) -> Complex64 {
    let bit = 1usize << q;
    let i = Complex64::new(0.0, 1.0);
    lam.amps
        .iter()
        .enumerate()
        .map(|(l, la)| {
            let set = l & bit != 0;
            let applied = match axis {
                Axis::X => psi.amps[l ^ bit],
                Axis::Y => psi.amps[l ^ bit] * if set { i } else { -i },
                Axis::Z => psi.amps[l] * if set { -1.0 } else { 1.0 },
            };
            la.conj() * applied
        })
        .sum()
}

/// Gradient of `⟨ψ(θ)|O|ψ(θ)⟩` given the final state and `λ = O|ψ⟩`.
pub fn observable_gradient(c: &Circuit, theta: &ParamVector, mut psi: StateVector, mut lam: StateVector) -> Vec<f64> {
    let th = theta.as_slice();
    let mut grad = vec![0.0; c.num_params()];
    for gate in c.gates().iter().rev() {
        match *gate {
            Gate::Rot { axis, qubit, slot } => {
                grad[slot] += pauli_inner(&lam, &psi, axis, qubit).im;
                psi.apply_gate_inverse(gate, th);
                lam.apply_gate_inverse(gate, th);
            }
            Gate::Ms {
                a,
                b,
                angle,
                phase_a,
                phase_b,
            } => {
                let mut generated = psi.clone();
                generated.apply_ms_generator(a, b, th[phase_a], th[phase_b]);
                grad[angle] += lam.inner(&generated).im;
                // U = R V R†, so ∂/∂φ splits into an outer and an inner Z term
                let za = pauli_inner(&lam, &psi, Axis::Z, a).im;
                let zb = pauli_inner(&lam, &psi, Axis::Z, b).im;
                psi.apply_gate_inverse(gate, th);
                lam.apply_gate_inverse(gate, th);
                grad[phase_a] += za - pauli_inner(&lam, &psi, Axis::Z, a).im;
                grad[phase_b] += zb - pauli_inner(&lam, &psi, Axis::Z, b).im;
            }
        }
    }
    grad
}

/// Loss, exact gradient and final expectations in one forward and one reverse sweep.
pub fn evaluate(c: &Circuit, theta: &ParamVector, spec: &LossSpec<'_>) -> Result<Evaluation> {
    check_spec(c, spec)?;
    let psi = run(c, theta)?;
    let expectations = encoding_expectations(&psi, spec.encoding());
    let value = loss_value(&expectations, spec)?;
    let g = loss_grad_expectations(&expectations, spec)?;
    let lam = apply_observable(&psi, spec.encoding(), &g);
    let gradient = observable_gradient(c, theta, psi, lam);
    Ok(Evaluation {
        value,
        gradient,
        expectations,
    })
}

pub fn loss_and_gradient(c: &Circuit, theta: &ParamVector, spec: &LossSpec<'_>) -> Result<(f64, Vec<f64>)> {
    let ev = evaluate(c, theta, spec)?;
    Ok((ev.value, ev.gradient))
}

/// Which copy of a parameter a shift acts on.
#[derive(Debug, Clone, Copy)]
enum Part {
    Angle,
    /// `(qubit is b, inner)`: inner copies sit in `R†` before the XX rotation.
    Phase(bool, bool),
}

fn run_shifted(c: &Circuit, theta: &[f64], target: usize, part: Part, delta: f64) -> StateVector {
    let mut psi = StateVector::zero(c.num_qubits());
    for (idx, gate) in c.gates().iter().enumerate() {
        if idx != target {
            psi.apply_gate(gate, theta);
            continue;
        }
        match (*gate, part) {
            (Gate::Rot { axis, qubit, slot }, _) => psi.apply_rotation(axis, qubit, theta[slot] + delta),
            (
                Gate::Ms {
                    a,
                    b,
                    angle,
                    phase_a,
                    phase_b,
                },
                Part::Angle,
            ) => psi.apply_ms(a, b, theta[angle] + delta, theta[phase_a], theta[phase_b]),
            (
                Gate::Ms {
                    a,
                    b,
                    angle,
                    phase_a,
                    phase_b,
                },
                Part::Phase(on_b, inner),
            ) => {
                let shift = |is_b: bool, is_inner: bool| if is_b == on_b && is_inner == inner { delta } else { 0.0 };
                psi.apply_rotation(Axis::Z, a, -(theta[phase_a] + shift(false, true)));
                psi.apply_rotation(Axis::Z, b, -(theta[phase_b] + shift(true, true)));
                psi.apply_ms(a, b, theta[angle], 0.0, 0.0);
                psi.apply_rotation(Axis::Z, a, theta[phase_a] + shift(false, false));
                psi.apply_rotation(Axis::Z, b, theta[phase_b] + shift(true, false));
            }
        }
    }
    psi
}

fn expectations_for(psi: &StateVector, enc: &Encoding, budget: ShotBudget, stream: &[u64]) -> Result<Vec<f64>> {
    match budget {
        ShotBudget::Exact => Ok(encoding_expectations(psi, enc)),
        ShotBudget::Shots { shots, seed } => {
            let counts = sample_family_counts(psi, shots, rng::derive_seed(seed, stream))?;
            estimate_from_counts(enc, &counts)
        }
    }
}

/// Loss and gradient by parameter-shift rules, with exact or sampled expectations.
///
/// Each rotation and MS angle gets one `±π/2` pair; each MS phase gets two,
/// one per occurrence of its `Z/2` generator.
pub fn loss_and_gradient_parameter_shift(
    c: &Circuit,
    theta: &ParamVector,
    spec: &LossSpec<'_>,
    budget: ShotBudget,
) -> Result<(f64, Vec<f64>)> {
    check_spec(c, spec)?;
    check_params(c, theta)?;
    let enc = spec.encoding();
    let th = theta.as_slice();
    let psi = run(c, theta)?;
    let e = expectations_for(&psi, enc, budget, &[u64::MAX])?;
    let value = loss_value(&e, spec)?;
    let g = loss_grad_expectations(&e, spec)?;

    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut grad = vec![0.0; c.num_params()];
    let shift_pair = |gate_idx: usize, part: Part, tag: u64| -> Result<f64> {
        let plus = run_shifted(c, th, gate_idx, part, half_pi);
        let minus = run_shifted(c, th, gate_idx, part, -half_pi);
        let ep = expectations_for(&plus, enc, budget, &[gate_idx as u64, tag, 0])?;
        let em = expectations_for(&minus, enc, budget, &[gate_idx as u64, tag, 1])?;
        Ok(g.iter().zip(ep.iter().zip(&em)).map(|(gi, (p, m))| gi * (p - m) / 2.0).sum())
    };
    for (idx, gate) in c.gates().iter().enumerate() {
        match *gate {
            Gate::Rot { slot, .. } => grad[slot] += shift_pair(idx, Part::Angle, 0)?,
            Gate::Ms {
                angle,
                phase_a,
                phase_b,
                ..
            } => {
                grad[angle] += shift_pair(idx, Part::Angle, 0)?;
                grad[phase_a] += shift_pair(idx, Part::Phase(false, false), 1)? + shift_pair(idx, Part::Phase(false, true), 2)?;
                grad[phase_b] += shift_pair(idx, Part::Phase(true, false), 3)? + shift_pair(idx, Part::Phase(true, true), 4)?;
            }
        }
    }
    Ok((value, grad))
}
