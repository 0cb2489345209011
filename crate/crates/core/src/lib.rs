//! Qubit-efficient variational MaxCut solving with Pauli-correlation encodings.
//!
//! `m` binary variables are encoded in the signs of `k`-body Pauli correlators
//! of an `n`-qubit register, with `3·C(n, k) ≥ m`. A brickwork circuit of
//! single-qubit rotations and Mølmer–Sørensen gates is trained against a
//! smooth `tanh` relaxation of the cut objective, the correlator signs are read
//! out as a bit string, and one round of single-bit-flip local search refines
//! the result.
//!
//! Module map:
//!
//! - [`graph`]: instances, Gset parsing, cut values, classical bounds, exact oracle.
//! - [`encoding`]: Pauli-correlation encodings, sign readout, shot estimators, witnesses.
//! - [`sim`]: statevector simulation of the brickwork ansatz and adjoint gradients.
//! - [`loss`]: the relaxed loss, its regularizer and partial derivatives.
//! - [`training`]: Adam with the windowed cumulative-improvement stopping rule.
//! - [`solver`]: the end-to-end pipeline and local search.
//! - [`experiments`]: variance plateaus, sample bounds, parent Hamiltonians, ablations, sweeps.
//! - [`record`]: run configuration and line-delimited JSON result records for the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encoding;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod loss;
pub mod record;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod training;

pub use encoding::{Axis, Encoding, PauliString};
pub use error::{Error, Result};
pub use graph::{Assignment, Edge, Graph, GraphFormat};
pub use loss::{LossForm, LossSpec};
pub use sim::{Circuit, Gate, ParamVector, StateVector};
pub use solver::{SolveOptions, SolveResult};
pub use training::{StopRule, TrainConfig, TrainTrace};
