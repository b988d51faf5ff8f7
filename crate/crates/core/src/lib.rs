//! Approximate decomposition of matrix product states into staircase
//! circuits of two-qubit unitaries.
//!
//! Qubit 0 is the most significant bit of every basis index. A circuit with
//! layers `L_1 ... L_K` prepares `L_1 L_2 ... L_K |0...0>`, so layer `K`
//! acts first; inside a layer the gates act on pairs `(0,1), (1,2), ...` in
//! that order.

pub mod analytic;
pub mod backend;
pub mod bench;
pub mod circuit;
pub mod error;
pub mod linalg;
pub mod mps;
pub mod protocols;
pub mod statevector;
pub mod sweep;
pub mod targets;

pub use analytic::{
    analytic_decompose, chi2_mps_to_layer, disentangle_step, AnalyticConfig,
    AnalyticDecomposition, DisentangleTrace, StopMode,
};
pub use backend::{Backend, QuantumState};
pub use bench::{estimate_cost, emit_plot_data, run_benchmark, BenchmarkPlan, CostEstimate};
pub use circuit::{
    apply_layer, circuit_fidelity, circuit_state, identity_layer, random_layer, LinearLayer,
    StaircaseCircuit, TwoQubitUnitary,
};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Matrix4c, C64};
pub use mps::{Mps, SchmidtSpectrum};
pub use protocols::{matched_budget, run_protocol, DecompositionReport, ProtocolKind, ProtocolSpec};
pub use statevector::StateVector;
pub use sweep::{sweep_optimize, FidelityTrace, Scope, SweepConfig};
pub use targets::{GridSpec, TargetDescriptor};
