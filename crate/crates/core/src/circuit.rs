//! Two-qubit unitaries, staircase layers and stacked-layer circuits.
//!
//! Ordering follows the ket convention throughout:
//!
//! * A [`LinearLayer`] acts on a ket with its gates in ascending pair order,
//!   `(0,1)` first and `(N-2,N-1)` last. Its adjoint applies the conjugated
//!   gates in the reverse order.
//! * A [`StaircaseCircuit`] stores layers `L_1 .. L_K` and prepares
//!   `L_1 L_2 ... L_K |0...0>`: layer `K` touches the initial state first,
//!   layer 1 last.
//!
//! Flattened gate indices `m = 0 .. M-1` follow the same application order.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::QuantumState;
use crate::error::{Error, Result};
use crate::linalg::{random_unitary, to_matrix4, unitarity_deviation4, Matrix4c, C64, TOL};
use crate::mps::Mps;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitUnitary {
    matrix: Matrix4c,
    first_qubit: usize,
}

impl TwoQubitUnitary {
    /// Acts on `(first_qubit, first_qubit + 1)`.
    pub fn new(matrix: Matrix4c, first_qubit: usize) -> Result<Self> {
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("two-qubit gate"));
        }
        let deviation = unitarity_deviation4(&matrix);
        if deviation > TOL.unitarity {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            matrix,
            first_qubit,
        })
    }

    pub(crate) fn new_unchecked(matrix: Matrix4c, first_qubit: usize) -> Self {
        Self {
            matrix,
            first_qubit,
        }
    }

    pub fn identity(first_qubit: usize) -> Self {
        Self::new_unchecked(Matrix4c::identity(), first_qubit)
    }

    pub fn matrix(&self) -> &Matrix4c {
        &self.matrix
    }

    pub fn first_qubit(&self) -> usize {
        self.first_qubit
    }

    pub fn qubit_pair(&self) -> (usize, usize) {
        (self.first_qubit, self.first_qubit + 1)
    }

    pub(crate) fn set_matrix(&mut self, matrix: Matrix4c) {
        self.matrix = matrix;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    num_sites: usize,
    gates: Vec<TwoQubitUnitary>,
}

impl LinearLayer {
    pub fn new(num_sites: usize, gates: Vec<TwoQubitUnitary>) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::InvalidArgument(
                "a staircase layer needs at least two sites".into(),
            ));
        }
        if gates.len() != num_sites - 1 {
            return Err(Error::Shape(format!(
                "{} gates for a {num_sites}-site layer",
                gates.len()
            )));
        }
        for (q, g) in gates.iter().enumerate() {
            if g.first_qubit != q {
                return Err(Error::Shape(format!(
                    "gate {q} acts on pair starting at {}",
                    g.first_qubit
                )));
            }
        }
        Ok(Self { num_sites, gates })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn gates(&self) -> &[TwoQubitUnitary] {
        &self.gates
    }

    pub(crate) fn gates_mut(&mut self) -> &mut [TwoQubitUnitary] {
        &mut self.gates
    }
}

/// A layer of identity gates.
pub fn identity_layer(num_sites: usize) -> Result<LinearLayer> {
    if num_sites < 2 {
        return Err(Error::InvalidArgument(
            "a staircase layer needs at least two sites".into(),
        ));
    }
    LinearLayer::new(
        num_sites,
        (0..num_sites - 1).map(TwoQubitUnitary::identity).collect(),
    )
}

/// Independent random gates: complex Gaussian 4x4 matrices orthonormalized
/// by QR with a non-negative real `R` diagonal.
pub fn random_layer(num_sites: usize, seed: u64) -> Result<LinearLayer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_layer_with(num_sites, &mut rng)
}

pub fn random_layer_with<R: Rng + ?Sized>(num_sites: usize, rng: &mut R) -> Result<LinearLayer> {
    if num_sites < 2 {
        return Err(Error::InvalidArgument(
            "a staircase layer needs at least two sites".into(),
        ));
    }
    let gates = (0..num_sites - 1)
        .map(|q| {
            let u = random_unitary(4, rng);
            Ok(TwoQubitUnitary::new_unchecked(to_matrix4(&u)?, q))
        })
        .collect::<Result<Vec<_>>>()?;
    LinearLayer::new(num_sites, gates)
}

/// Apply a layer (or its adjoint) to any exact backend.
pub fn apply_layer_in<S: QuantumState>(state: &mut S, layer: &LinearLayer, adjoint: bool) -> Result<()> {
    if state.num_sites() != layer.num_sites {
        return Err(Error::Shape(format!(
            "{}-site layer on a {}-site state",
            layer.num_sites,
            state.num_sites()
        )));
    }
    if adjoint {
        for g in layer.gates.iter().rev() {
            state.apply_gate(&g.matrix, g.first_qubit, true)?;
        }
    } else {
        for g in &layer.gates {
            state.apply_gate(&g.matrix, g.first_qubit, false)?;
        }
    }
    Ok(())
}

/// Exact layer application on an MPS.
pub fn apply_layer(psi: &Mps, layer: &LinearLayer, adjoint: bool) -> Result<Mps> {
    let mut out = psi.clone();
    apply_layer_in(&mut out, layer, adjoint)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseCircuit {
    num_sites: usize,
    /// `layers[k - 1]` is layer `L_k`.
    layers: Vec<LinearLayer>,
}

impl StaircaseCircuit {
    pub fn new(num_sites: usize, layers: Vec<LinearLayer>) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::InvalidArgument(
                "a staircase circuit needs at least two sites".into(),
            ));
        }
        if let Some(bad) = layers.iter().find(|l| l.num_sites != num_sites) {
            return Err(Error::Shape(format!(
                "{}-site layer in a {num_sites}-site circuit",
                bad.num_sites
            )));
        }
        Ok(Self { num_sites, layers })
    }

    pub fn empty(num_sites: usize) -> Result<Self> {
        Self::new(num_sites, Vec::new())
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LinearLayer] {
        &self.layers
    }

    /// Append `L_{K+1}`, which becomes the first layer to act on `|0...0>`.
    pub fn push_layer(&mut self, layer: LinearLayer) -> Result<()> {
        if layer.num_sites != self.num_sites {
            return Err(Error::Shape("layer size mismatch".into()));
        }
        self.layers.push(layer);
        Ok(())
    }

    pub fn num_gates(&self) -> usize {
        self.layers.len() * (self.num_sites - 1)
    }

    /// `(layer index into layers(), gate index)` of flattened gate `m`.
    pub fn gate_position(&self, m: usize) -> (usize, usize) {
        let per = self.num_sites - 1;
        (self.layers.len() - 1 - m / per, m % per)
    }

    /// Flattened indices of the gates of `layers()[layer]`.
    pub fn layer_gate_range(&self, layer: usize) -> std::ops::Range<usize> {
        let per = self.num_sites - 1;
        let start = (self.layers.len() - 1 - layer) * per;
        start..start + per
    }

    pub fn gate(&self, m: usize) -> &TwoQubitUnitary {
        let (l, g) = self.gate_position(m);
        &self.layers[l].gates[g]
    }

    pub(crate) fn gate_mut(&mut self, m: usize) -> &mut TwoQubitUnitary {
        let (l, g) = self.gate_position(m);
        &mut self.layers[l].gates_mut()[g]
    }

    pub fn to_file(&self) -> CircuitFile {
        CircuitFile {
            format_version: CIRCUIT_FORMAT_VERSION,
            num_sites: self.num_sites,
            num_layers: self.layers.len(),
            application_order: APPLICATION_ORDER_NOTE.to_string(),
            layers: self
                .layers
                .iter()
                .enumerate()
                .map(|(k, layer)| LayerFile {
                    index: k + 1,
                    gates: layer
                        .gates
                        .iter()
                        .map(|g| GateFile {
                            qubits: [g.first_qubit, g.first_qubit + 1],
                            matrix: (0..16)
                                .map(|i| {
                                    let z = g.matrix[(i / 4, i % 4)];
                                    [z.re, z.im]
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &CircuitFile) -> Result<Self> {
        if file.format_version != CIRCUIT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported circuit format version {}",
                file.format_version
            )));
        }
        if file.layers.len() != file.num_layers {
            return Err(Error::Format("num_layers does not match layer list".into()));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for (k, lf) in file.layers.iter().enumerate() {
            if lf.index != k + 1 {
                return Err(Error::Format(format!(
                    "layer {} stored at position {}",
                    lf.index,
                    k + 1
                )));
            }
            let gates = lf
                .gates
                .iter()
                .map(|gf| {
                    if gf.matrix.len() != 16 || gf.qubits[1] != gf.qubits[0] + 1 {
                        return Err(Error::Format("gate must be 16 entries on adjacent qubits".into()));
                    }
                    let m = Matrix4c::from_fn(|i, j| {
                        let p = gf.matrix[i * 4 + j];
                        C64::new(p[0], p[1])
                    });
                    TwoQubitUnitary::new(m, gf.qubits[0])
                })
                .collect::<Result<Vec<_>>>()?;
            layers.push(LinearLayer::new(file.num_sites, gates)?);
        }
        Self::new(file.num_sites, layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_file())?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: CircuitFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(&file)
    }

    /// Plain gate list, one gate per line:
    /// `layer q0 q1` followed by 16 `re im` pairs of the row-major matrix.
    pub fn to_gate_list(&self) -> String {
        let mut out = String::new();
        out.push_str("# stairmps gate list v1\n");
        out.push_str(&format!(
            "# num_sites {} num_layers {}; {}\n",
            self.num_sites,
            self.layers.len(),
            APPLICATION_ORDER_NOTE
        ));
        out.push_str("# layer q0 q1 re(u00) im(u00) ... re(u33) im(u33)\n");
        for (k, layer) in self.layers.iter().enumerate() {
            for g in &layer.gates {
                out.push_str(&format!("{} {} {}", k + 1, g.first_qubit, g.first_qubit + 1));
                for i in 0..16 {
                    let z = g.matrix[(i / 4, i % 4)];
                    out.push_str(&format!(" {:e} {:e}", z.re, z.im));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// `L_1 ... L_K |0...0>` in the chosen backend.
pub fn circuit_state_in<S: QuantumState>(circuit: &StaircaseCircuit) -> Result<S> {
    let mut state = S::zero_state(circuit.num_sites)?;
    for layer in circuit.layers.iter().rev() {
        apply_layer_in(&mut state, layer, false)?;
    }
    Ok(state)
}

pub fn circuit_state(circuit: &StaircaseCircuit) -> Result<Mps> {
    circuit_state_in::<Mps>(circuit)
}

/// `|<psi_circuit|target>|` by preparing the circuit state.
pub fn circuit_fidelity_in<S: QuantumState>(circuit: &StaircaseCircuit, target: &S) -> Result<f64> {
    if circuit.num_sites != target.num_sites() {
        return Err(Error::Shape("circuit and target sizes differ".into()));
    }
    let psi = circuit_state_in::<S>(circuit)?;
    Ok(psi.overlap(target)?.norm())
}

pub fn circuit_fidelity(circuit: &StaircaseCircuit, target: &Mps) -> Result<f64> {
    circuit_fidelity_in(circuit, target)
}

/// `|<0...0| L_K^dagger ... L_1^dagger |target>|` by disentangling the target.
pub fn circuit_fidelity_disentangling_in<S: QuantumState>(
    circuit: &StaircaseCircuit,
    target: &S,
) -> Result<f64> {
    if circuit.num_sites != target.num_sites() {
        return Err(Error::Shape("circuit and target sizes differ".into()));
    }
    let mut residual = target.clone();
    for layer in &circuit.layers {
        apply_layer_in(&mut residual, layer, true)?;
    }
    let zero = S::zero_state(circuit.num_sites)?;
    Ok(zero.overlap(&residual)?.norm())
}

pub fn circuit_fidelity_disentangling(circuit: &StaircaseCircuit, target: &Mps) -> Result<f64> {
    circuit_fidelity_disentangling_in(circuit, target)
}

pub const CIRCUIT_FORMAT_VERSION: u32 = 1;
pub const APPLICATION_ORDER_NOTE: &str =
    "layers stored as k = 1..K; layer K acts on |0...0> first and layer 1 last; gates within a layer act in ascending pair order";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    pub format_version: u32,
    pub num_sites: usize,
    pub num_layers: usize,
    pub application_order: String,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub index: usize,
    pub gates: Vec<GateFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateFile {
    pub qubits: [usize; 2],
    /// Row-major `[re, im]` pairs.
    pub matrix: Vec<[f64; 2]>,
}
