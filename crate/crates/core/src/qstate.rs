//! Dense complex linear algebra for small multi-qubit registers.
//!
//! Qubit `0` is the most significant bit of a basis index. Registers that
//! carry a reference qubit put it at position 0, the signal next and the
//! ancillas last.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIG_HERMITIAN_TOL: f64 = 1e-10;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// `|a><b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut data = Vec::with_capacity(dim * dim);
        for x in a {
            for y in b {
                data.push(x * y.conj());
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits when the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        self.dim
            .is_power_of_two()
            .then(|| self.dim.trailing_zeros() as usize)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * n..(k + 1) * n];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// Kronecker product; `self` is the most significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `u * self * u^dagger`
    pub fn conjugated_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.dagger())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `<a| self |b>`
    pub fn sandwich(&self, a: &[C64], b: &[C64]) -> C64 {
        let mb = self.apply(b);
        a.iter().zip(&mb).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(M + M^dagger) / 2`
    pub fn hermitized(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `max |U^dagger U - I|`
    pub fn unitarity_error(&self) -> f64 {
        self.dagger()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    /// Distance to `other` after removing the best global phase.
    pub fn phase_distance(&self, other: &Self) -> f64 {
        let overlap: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.scale(phase).max_abs_diff(other)
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Normalized state vector on `k` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    vec: Vec<C64>,
}

impl PureState {
    pub fn new(vec: Vec<C64>) -> Result<Self> {
        if !vec.len().is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: vec.len().next_power_of_two(),
                actual: vec.len(),
            });
        }
        let norm = vec.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized { value: norm });
        }
        Ok(Self { vec })
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut vec = vec![ZERO; 1 << num_qubits];
        vec[index] = ONE;
        Self { vec }
    }

    /// `(|00> + |11>)/sqrt(2)`
    pub fn phi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            vec: vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)],
        }
    }

    /// `(|01> + |10>)/sqrt(2)`
    pub fn psi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            vec: vec![ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO],
        }
    }

    /// `exp(-i theta sigma_y / 2)|0> = cos(theta/2)|0> + sin(theta/2)|1>`
    pub fn theta_state(theta: f64) -> Self {
        Self {
            vec: vec![
                C64::new((theta / 2.0).cos(), 0.0),
                C64::new((theta / 2.0).sin(), 0.0),
            ],
        }
    }

    /// `d/dtheta` of [`PureState::theta_state`]; not normalized.
    pub fn theta_state_derivative(theta: f64) -> Vec<C64> {
        vec![
            C64::new(-0.5 * (theta / 2.0).sin(), 0.0),
            C64::new(0.5 * (theta / 2.0).cos(), 0.0),
        ]
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let vec = self
            .vec
            .iter()
            .flat_map(|a| other.vec.iter().map(move |b| a * b))
            .collect();
        Self { vec }
    }

    /// Appends `n` qubits in `|0>`.
    pub fn with_zero_ancillas(&self, n: usize) -> Self {
        self.tensor(&Self::basis(n, 0))
    }

    pub fn num_qubits(&self) -> usize {
        self.vec.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.vec
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: ComplexMatrix::outer(&self.vec, &self.vec),
            num_qubits: self.num_qubits(),
            normalized: true,
        }
    }
}

/// Hermitian, positive semidefinite operator on `num_qubits` qubits.
///
/// `normalized == false` marks post-selection blocks whose trace is the
/// success probability rather than one.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    num_qubits: usize,
    normalized: bool,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let num_qubits = qubits_of(&mat)?;
        let deviation = mat.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized { value: tr });
        }
        Ok(Self {
            mat: mat.hermitized(),
            num_qubits,
            normalized: true,
        })
    }

    pub fn unnormalized(mat: ComplexMatrix) -> Result<Self> {
        let num_qubits = qubits_of(&mat)?;
        let deviation = mat.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            mat: mat.hermitized(),
            num_qubits,
            normalized: false,
        })
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        Self {
            mat: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
            num_qubits,
            normalized: true,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Rescales to unit trace.
    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::NotNormalized { value: tr });
        }
        Ok(Self {
            mat: self.mat.scale_real(1.0 / tr),
            num_qubits: self.num_qubits,
            normalized: true,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.kron(&other.mat),
            num_qubits: self.num_qubits + other.num_qubits,
            normalized: self.normalized && other.normalized,
        }
    }

    /// `<psi| rho |psi>`
    pub fn expectation_pure(&self, psi: &PureState) -> f64 {
        self.mat.sandwich(psi.amplitudes(), psi.amplitudes()).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = eig_hermitian(&self.mat)?;
        Ok(*vals.last().unwrap())
    }
}

fn qubits_of(mat: &ComplexMatrix) -> Result<usize> {
    mat.num_qubits().ok_or(Error::DimensionMismatch {
        expected: mat.dim().next_power_of_two(),
        actual: mat.dim(),
    })
}

fn check_indices(indices: &[usize], num_qubits: usize) -> Result<()> {
    for (k, &q) in indices.iter().enumerate() {
        if q >= num_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits,
            });
        }
        if indices[..k].contains(&q) {
            return Err(Error::OverlappingQubits(indices.to_vec()));
        }
    }
    Ok(())
}

/// Gathers the bits of `index` at `qubits` (first listed = most significant).
fn gather_bits(index: usize, qubits: &[usize], num_qubits: usize) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | ((index >> (num_qubits - 1 - q)) & 1))
}

/// Inverse of [`gather_bits`] for a complementary split of the register.
fn scatter_bits(value: usize, qubits: &[usize], num_qubits: usize) -> usize {
    let k = qubits.len();
    qubits.iter().enumerate().fold(0, |acc, (pos, &q)| {
        let bit = (value >> (k - 1 - pos)) & 1;
        acc | (bit << (num_qubits - 1 - q))
    })
}

/// Reduced state on `keep` (sorted ascending; register order is preserved).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(rho.matrix(), keep)?;
    Ok(DensityMatrix {
        num_qubits: reduced.num_qubits().unwrap(),
        mat: reduced,
        normalized: rho.normalized,
    })
}

pub fn partial_trace_matrix(mat: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let n = qubits_of(mat)?;
    check_indices(keep, n)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let kd = 1 << keep.len();
    let td = 1 << traced.len();
    let mut out = ComplexMatrix::zeros(kd);
    for i in 0..kd {
        let ib = scatter_bits(i, &keep, n);
        for j in 0..kd {
            let jb = scatter_bits(j, &keep, n);
            let mut acc = ZERO;
            for t in 0..td {
                let tb = scatter_bits(t, &traced, n);
                acc += mat[(ib | tb, jb | tb)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Applies `|0><0|` on every listed qubit and returns the block on the
/// remaining qubits (unnormalized) together with its trace.
pub fn project_ancillas_zero(
    rho: &DensityMatrix,
    ancillas: &[usize],
) -> Result<(DensityMatrix, f64)> {
    let block = project_zero_matrix(rho.matrix(), ancillas)?;
    let p = block.trace().re;
    let nq = block.num_qubits().unwrap();
    Ok((
        DensityMatrix {
            mat: block,
            num_qubits: nq,
            normalized: false,
        },
        p,
    ))
}

pub fn project_zero_matrix(mat: &ComplexMatrix, ancillas: &[usize]) -> Result<ComplexMatrix> {
    let n = qubits_of(mat)?;
    check_indices(ancillas, n)?;
    let remaining: Vec<usize> = (0..n).filter(|q| !ancillas.contains(q)).collect();
    if remaining.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let rd = 1 << remaining.len();
    let idx: Vec<usize> = (0..rd).map(|i| scatter_bits(i, &remaining, n)).collect();
    Ok(ComplexMatrix::from_fn(rd, |i, j| mat[(idx[i], idx[j])]))
}

/// Bit pattern of the qubits `qubits` in basis index `index`.
pub fn bits_of(index: usize, qubits: &[usize], num_qubits: usize) -> usize {
    gather_bits(index, qubits, num_qubits)
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues in descending
/// order and the matching orthonormal eigenvectors as columns.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let deviation = m.hermitian_deviation();
    if deviation > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let h = m.hermitized();
    let n = h.dim();
    let dm = DMatrix::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn tensor_of_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_ordering_is_most_significant_first() {
        let proj0 = ComplexMatrix::diag(&[ONE, ZERO]);
        let m = tensor(&ComplexMatrix::pauli_z(), &proj0);
        assert_eq!(m, ComplexMatrix::diag(&[c(1.0), ZERO, c(-1.0), ZERO]));
    }

    #[test]
    fn double_bit_flip() {
        let xx = tensor(&ComplexMatrix::pauli_x(), &ComplexMatrix::pauli_x());
        let out = xx.apply(PureState::basis(2, 0).amplitudes());
        assert_eq!(out, PureState::basis(2, 3).amplitudes());
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = PureState::phi_plus().density();
        let red = partial_trace(&rho, &[0]).unwrap();
        assert!(red.matrix().max_abs_diff(DensityMatrix::maximally_mixed(1).matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = DensityMatrix::new(ComplexMatrix::from_rows(&[
            vec![c(0.7), C64::new(0.1, 0.2)],
            vec![C64::new(0.1, -0.2), c(0.3)],
        ]).unwrap())
        .unwrap();
        let b = PureState::theta_state(0.4).density();
        let ab = a.tensor(&b);
        let ra = partial_trace(&ab, &[0]).unwrap();
        assert!(ra.matrix().max_abs_diff(a.matrix()) < 1e-15);
        let rb = partial_trace(&ab, &[1]).unwrap();
        assert!(rb.matrix().max_abs_diff(b.matrix()) < 1e-15);
    }

    #[test]
    fn ghz_single_qubit_marginal() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![ZERO; 8];
        v[0] = c(h);
        v[7] = c(h);
        let ghz = PureState::new(v).unwrap().density();
        for q in 0..3 {
            let red = partial_trace(&ghz, &[q]).unwrap();
            let want = ComplexMatrix::diag(&[c(0.5), c(0.5)]);
            assert!(red.matrix().max_abs_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_rejects_empty_keep() {
        let rho = PureState::phi_plus().density();
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::EmptyKeepSet)));
        assert!(matches!(
            partial_trace(&rho, &[2]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let rho = PureState::basis(2, 0).density();
        let (blk, p) = project_ancillas_zero(&rho, &[1]).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(blk.matrix(), &ComplexMatrix::diag(&[ONE, ZERO]));
        assert!(!blk.is_normalized());

        let rho = PureState::basis(2, 1).density();
        let (blk, p) = project_ancillas_zero(&rho, &[1]).unwrap();
        assert_eq!(p, 0.0);
        assert_eq!(blk.matrix(), &ComplexMatrix::zeros(2));

        let rho = PureState::phi_plus().density();
        let (blk, p) = project_ancillas_zero(&rho, &[1]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(blk.matrix().max_abs_diff(&ComplexMatrix::diag(&[c(0.5), ZERO])) < 1e-15);
    }

    #[test]
    fn eig_examples() {
        let (vals, _) = eig_hermitian(&ComplexMatrix::pauli_z()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);

        let (vals, vecs) = eig_hermitian(DensityMatrix::maximally_mixed(1).matrix()).unwrap();
        assert!(vals.iter().all(|v| (v - 0.5).abs() < 1e-14));
        assert!(vecs.unitarity_error() < 1e-14);

        let rho = ComplexMatrix::diag(&[c(0.1), c(0.9)]);
        let (vals, _) = eig_hermitian(&rho).unwrap();
        assert!((vals[0] - 0.9).abs() < 1e-14 && (vals[1] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::diag(&[c(0.5), c(0.6)]);
        assert!(matches!(DensityMatrix::new(bad), Err(Error::NotNormalized { .. })));
        assert!(PureState::new(vec![ONE, ONE]).is_err());
    }
}
