//! Local Pauli noise channels and cross-talk mixtures.
//!
//! Channels are stored as Kraus sets; application goes through the 4x4
//! single-qubit superoperator `sum_k K (x) conj(K)`, so each local step
//! costs one pass over the matrix regardless of the Kraus rank.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{ComplexMatrix, DensityMatrix};

const RANGE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Dephasing,
    Depolarizing,
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Dephasing => "dephasing",
            NoiseKind::Depolarizing => "depolarizing",
        }
    }

    /// Allowed range of the effective parameter `q`.
    pub fn q_range(&self) -> (f64, f64) {
        match self {
            NoiseKind::Dephasing => (0.0, 1.0),
            NoiseKind::Depolarizing => (1.0 / 3.0, 1.0),
        }
    }
}

/// Channel kind and effective strength: `q_phi` scales coherences for
/// dephasing, `q_r` scales the Bloch vector for depolarizing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub q: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, q: f64) -> Result<Self> {
        let spec = Self { kind, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dephasing(q: f64) -> Result<Self> {
        Self::new(NoiseKind::Dephasing, q)
    }

    pub fn depolarizing(q: f64) -> Result<Self> {
        Self::new(NoiseKind::Depolarizing, q)
    }

    pub fn validate(&self) -> Result<()> {
        let (min, max) = self.kind.q_range();
        check_range("q", self.q, min, max)
    }

    /// Weight of the identity Kraus operator.
    pub fn p(&self) -> f64 {
        match self.kind {
            NoiseKind::Dephasing => (1.0 + self.q) / 2.0,
            NoiseKind::Depolarizing => (1.0 + 3.0 * self.q) / 4.0,
        }
    }

    /// Probabilities of `(I, X, Y, Z)`.
    pub fn pauli_weights(&self) -> [f64; 4] {
        let p = self.p();
        match self.kind {
            NoiseKind::Dephasing => [p, 0.0, 0.0, 1.0 - p],
            NoiseKind::Depolarizing => {
                let e = (1.0 - p) / 3.0;
                [p, e, e, e]
            }
        }
    }
}

fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    if !(value >= min - RANGE_SLACK && value <= max + RANGE_SLACK) {
        return Err(Error::NoiseOutOfRange {
            name,
            value,
            min,
            max,
        });
    }
    Ok(())
}

/// Implementation imperfections: depolarizing preparation noise `q_a` on
/// every ancilla and the no-swap probability `s` of the cross-talk model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

impl RobustnessSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(q_a) = self.q_a {
            check_range("q_a", q_a, 1.0 / 3.0, 1.0)?;
        }
        if let Some(s) = self.s {
            check_range("s", s, 0.0, 1.0)?;
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.q_a.is_none_or(|q| q == 1.0) && self.s.is_none_or(|s| s == 1.0)
    }
}

/// Single-qubit Kraus operators with their probabilities folded in.
#[derive(Clone, Debug)]
pub struct KrausSet {
    ops: Vec<ComplexMatrix>,
    superop: [[C64; 4]; 4],
}

impl KrausSet {
    pub fn new(ops: Vec<ComplexMatrix>) -> Self {
        let mut superop = [[C64::new(0.0, 0.0); 4]; 4];
        for k in &ops {
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            superop[2 * a + b][2 * c + d] += k[(a, c)] * k[(b, d)].conj();
                        }
                    }
                }
            }
        }
        Self { ops, superop }
    }

    pub fn identity() -> Self {
        Self::new(vec![ComplexMatrix::identity(2)])
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// `max |sum_k K^dagger K - I|`
    pub fn completeness_error(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(2);
        for k in &self.ops {
            acc = acc.add(&k.dagger().matmul(k));
        }
        acc.max_abs_diff(&ComplexMatrix::identity(2))
    }

    fn superop(&self) -> &[[C64; 4]; 4] {
        &self.superop
    }
}

pub fn kraus_set(spec: &NoiseSpec) -> Result<KrausSet> {
    spec.validate()?;
    let p = spec.p().clamp(0.0, 1.0);
    let id = ComplexMatrix::identity(2);
    let ops = match spec.kind {
        NoiseKind::Dephasing => {
            let mut ops = vec![id.scale_real(p.sqrt())];
            if p < 1.0 {
                ops.push(ComplexMatrix::pauli_z().scale_real((1.0 - p).sqrt()));
            }
            ops
        }
        NoiseKind::Depolarizing => {
            let mut ops = vec![id.scale_real(p.sqrt())];
            if p < 1.0 {
                let w = ((1.0 - p) / 3.0).sqrt();
                ops.push(ComplexMatrix::pauli_x().scale_real(w));
                ops.push(ComplexMatrix::pauli_y().scale_real(w));
                ops.push(ComplexMatrix::pauli_z().scale_real(w));
            }
            ops
        }
    };
    Ok(KrausSet::new(ops))
}

/// `sum_k K_k rho K_k^dagger` with `K_k` acting on `qubit`. Linear in
/// `rho`, so it also propagates derivatives and off-diagonal blocks.
pub fn apply_local_matrix(rho: &ComplexMatrix, kraus: &KrausSet, qubit: usize) -> ComplexMatrix {
    let n = rho
        .num_qubits()
        .expect("operator dimension must be a power of two");
    assert!(qubit < n, "qubit {qubit} out of range for {n} qubits");
    let dim = rho.dim();
    let st = 1 << (n - 1 - qubit);
    let s = kraus.superop();
    let mut out = ComplexMatrix::zeros(dim);
    let src = rho.as_slice();
    let dst = out.as_mut_slice();
    for i in (0..dim).filter(|i| i & st == 0) {
        for j in (0..dim).filter(|j| j & st == 0) {
            let block = [
                src[i * dim + j],
                src[i * dim + (j | st)],
                src[(i | st) * dim + j],
                src[(i | st) * dim + (j | st)],
            ];
            let pos = [
                i * dim + j,
                i * dim + (j | st),
                (i | st) * dim + j,
                (i | st) * dim + (j | st),
            ];
            for (row, &p) in s.iter().zip(&pos) {
                dst[p] = row[0] * block[0] + row[1] * block[1] + row[2] * block[2] + row[3] * block[3];
            }
        }
    }
    out
}

pub fn apply_iid_matrix(rho: &ComplexMatrix, kraus: &KrausSet, qubits: &[usize]) -> ComplexMatrix {
    let mut out = rho.clone();
    for &q in qubits {
        out = apply_local_matrix(&out, kraus, q);
    }
    out
}

pub fn apply_local(rho: &DensityMatrix, kraus: &KrausSet, qubit: usize) -> Result<DensityMatrix> {
    check_qubit(qubit, rho.num_qubits())?;
    rewrap(rho, apply_local_matrix(rho.matrix(), kraus, qubit))
}

pub fn apply_iid(rho: &DensityMatrix, kraus: &KrausSet, qubits: &[usize]) -> Result<DensityMatrix> {
    for &q in qubits {
        check_qubit(q, rho.num_qubits())?;
    }
    rewrap(rho, apply_iid_matrix(rho.matrix(), kraus, qubits))
}

fn rewrap(like: &DensityMatrix, mat: ComplexMatrix) -> Result<DensityMatrix> {
    let mat = mat.hermitized();
    if like.is_normalized() {
        // trace drift stays far below the constructor tolerance
        DensityMatrix::new(mat)
    } else {
        DensityMatrix::unnormalized(mat)
    }
}

fn check_qubit(qubit: usize, num_qubits: usize) -> Result<()> {
    if qubit >= num_qubits {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            num_qubits,
        });
    }
    Ok(())
}

/// Basis-index permutation exchanging qubits `a` and `b`.
pub fn swap_index(index: usize, a: usize, b: usize, num_qubits: usize) -> usize {
    let (sa, sb) = (1 << (num_qubits - 1 - a), 1 << (num_qubits - 1 - b));
    let (ba, bb) = (index & sa != 0, index & sb != 0);
    if ba == bb {
        index
    } else {
        index ^ sa ^ sb
    }
}

/// `SWAP(a,b) rho SWAP(a,b)`
pub fn swap_conjugate(rho: &ComplexMatrix, a: usize, b: usize) -> ComplexMatrix {
    let n = rho.num_qubits().expect("power-of-two dimension");
    let perm: Vec<usize> = (0..rho.dim()).map(|i| swap_index(i, a, b, n)).collect();
    ComplexMatrix::from_fn(rho.dim(), |i, j| rho[(perm[i], perm[j])])
}

/// `s rho + sum_a (1-s)/n SWAP(signal,a) rho SWAP(signal,a)`
pub fn swap_mixture_matrix(
    rho: &ComplexMatrix,
    s: f64,
    signal: usize,
    ancillas: &[usize],
) -> Result<ComplexMatrix> {
    check_range("s", s, 0.0, 1.0)?;
    if ancillas.is_empty() {
        if s < 1.0 {
            return Err(Error::SwapWithoutAncillas(s));
        }
        return Ok(rho.clone());
    }
    let n = rho.num_qubits().expect("power-of-two dimension");
    check_qubit(signal, n)?;
    for &a in ancillas {
        check_qubit(a, n)?;
        if a == signal {
            return Err(Error::OverlappingQubits(ancillas.to_vec()));
        }
    }
    let mut out = rho.scale_real(s);
    let w = (1.0 - s) / ancillas.len() as f64;
    if w > 0.0 {
        for &a in ancillas {
            out.add_scaled(&swap_conjugate(rho, signal, a), w);
        }
    }
    Ok(out)
}

pub fn swap_mixture(
    rho: &DensityMatrix,
    s: f64,
    signal: usize,
    ancillas: &[usize],
) -> Result<DensityMatrix> {
    rewrap(rho, swap_mixture_matrix(rho.matrix(), s, signal, ancillas)?)
}
