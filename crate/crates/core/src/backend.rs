//! Exact contraction backends shared by circuit evaluation and the sweep
//! optimizer.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{Matrix4c, C64};
use crate::mps::{two_site_environment, Mps};
use crate::statevector::StateVector;

/// A pure state that two-qubit gates can act on exactly.
pub trait QuantumState: Clone + Send + Sync + Sized {
    fn zero_state(num_sites: usize) -> Result<Self>;
    fn from_mps(mps: &Mps) -> Result<Self>;
    fn num_sites(&self) -> usize;
    fn apply_gate(&mut self, gate: &Matrix4c, site: usize, adjoint: bool) -> Result<()>;
    /// `<self|other>`.
    fn overlap(&self, other: &Self) -> Result<C64>;
    /// `F` with `<bra| U^dagger |ket> = tr(U^dagger F)` for `U` on
    /// `(site, site + 1)`.
    fn environment(bra: &Self, ket: &Self, site: usize) -> Result<Matrix4c>;
}

impl QuantumState for Mps {
    fn zero_state(num_sites: usize) -> Result<Self> {
        Mps::zero_state(num_sites)
    }

    fn from_mps(mps: &Mps) -> Result<Self> {
        Ok(mps.clone())
    }

    fn num_sites(&self) -> usize {
        Mps::num_sites(self)
    }

    fn apply_gate(&mut self, gate: &Matrix4c, site: usize, adjoint: bool) -> Result<()> {
        self.apply_two_qubit_gate(gate, site, None, adjoint)
    }

    fn overlap(&self, other: &Self) -> Result<C64> {
        self.inner_product(other)
    }

    fn environment(bra: &Self, ket: &Self, site: usize) -> Result<Matrix4c> {
        two_site_environment(bra, ket, site)
    }
}

impl QuantumState for StateVector {
    fn zero_state(num_sites: usize) -> Result<Self> {
        StateVector::zero_state(num_sites)
    }

    fn from_mps(mps: &Mps) -> Result<Self> {
        StateVector::from_mps(mps)
    }

    fn num_sites(&self) -> usize {
        StateVector::num_sites(self)
    }

    fn apply_gate(&mut self, gate: &Matrix4c, site: usize, adjoint: bool) -> Result<()> {
        StateVector::apply_gate(self, gate, site, adjoint)
    }

    fn overlap(&self, other: &Self) -> Result<C64> {
        self.inner(other)
    }

    fn environment(bra: &Self, ket: &Self, site: usize) -> Result<Matrix4c> {
        StateVector::environment(bra, ket, site)
    }
}

/// Which representation holds intermediate states during optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dense up to [`AUTO_DENSE_MAX_SITES`], MPS beyond.
    #[default]
    Auto,
    Mps,
    Dense,
}

pub const AUTO_DENSE_MAX_SITES: usize = 16;

impl Backend {
    pub fn resolve(self, num_sites: usize) -> Backend {
        match self {
            Backend::Auto if num_sites <= AUTO_DENSE_MAX_SITES => Backend::Dense,
            Backend::Auto => Backend::Mps,
            other => other,
        }
    }
}
