//! Dense statevectors, used as an exact contraction backend for small
//! systems and as an oracle in tests.

use crate::error::{Error, Result};
use crate::linalg::{Matrix4c, C64};
use crate::mps::{Mps, STATEVECTOR_CAP};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_sites: usize,
    amps: Vec<C64>,
}

pub fn dense_inner(bra: &[C64], ket: &[C64]) -> C64 {
    bra.iter().zip(ket).map(|(a, b)| a.conj() * b).sum()
}

impl StateVector {
    pub fn zero_state(num_sites: usize) -> Result<Self> {
        if num_sites == 0 || num_sites > STATEVECTOR_CAP {
            return Err(Error::TooLarge {
                num_sites,
                cap: STATEVECTOR_CAP,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << num_sites];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { num_sites, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || len & (len - 1) != 0 {
            return Err(Error::InvalidArgument(format!(
                "statevector length {len} is not a power of two"
            )));
        }
        Ok(Self {
            num_sites: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn from_mps(mps: &Mps) -> Result<Self> {
        Self::from_amplitudes(mps.to_statevector()?)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.num_sites != other.num_sites {
            return Err(Error::Shape("inner product of different sizes".into()));
        }
        Ok(dense_inner(&self.amps, &other.amps))
    }

    fn pair_strides(&self, site: usize) -> Result<(usize, usize)> {
        let n = self.num_sites;
        if n < 2 || site > n - 2 {
            return Err(Error::SiteOutOfRange { site, num_sites: n });
        }
        let lo = 1usize << (n - 2 - site);
        Ok((2 * lo, lo))
    }

    /// Apply `gate` (or its adjoint) to qubits `(site, site + 1)`, with basis
    /// index `2 * bit(site) + bit(site + 1)`.
    pub fn apply_gate(&mut self, gate: &Matrix4c, site: usize, adjoint: bool) -> Result<()> {
        let (hi, lo) = self.pair_strides(site)?;
        let g = if adjoint { gate.adjoint() } else { *gate };
        let block = 2 * hi;
        let mut base = 0;
        while base < self.amps.len() {
            for inner in 0..lo {
                let i0 = base + inner;
                let idx = [i0, i0 + lo, i0 + hi, i0 + hi + lo];
                let v = idx.map(|i| self.amps[i]);
                for (t, &dst) in idx.iter().enumerate() {
                    self.amps[dst] =
                        g[(t, 0)] * v[0] + g[(t, 1)] * v[1] + g[(t, 2)] * v[2] + g[(t, 3)] * v[3];
                }
            }
            base += block;
        }
        Ok(())
    }

    /// `F[t, s] = sum_rest ket[t, rest] conj(bra[s, rest])` on the pair
    /// `(site, site + 1)`.
    pub fn environment(bra: &StateVector, ket: &StateVector, site: usize) -> Result<Matrix4c> {
        if bra.num_sites != ket.num_sites {
            return Err(Error::Shape("environment of states with different sizes".into()));
        }
        let (hi, lo) = bra.pair_strides(site)?;
        let block = 2 * hi;
        let mut f = Matrix4c::zeros();
        let mut base = 0;
        while base < bra.amps.len() {
            for inner in 0..lo {
                let i0 = base + inner;
                let idx = [i0, i0 + lo, i0 + hi, i0 + hi + lo];
                let k = idx.map(|i| ket.amps[i]);
                let b = idx.map(|i| bra.amps[i].conj());
                for t in 0..4 {
                    for s in 0..4 {
                        f[(t, s)] += k[t] * b[s];
                    }
                }
            }
            base += block;
        }
        Ok(f)
    }

    pub fn to_mps(&self, max_chi: usize) -> Result<Mps> {
        Mps::from_statevector(&self.amps, max_chi)
    }
}
