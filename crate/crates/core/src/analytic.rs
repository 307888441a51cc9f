//! Closed-form figures of merit for the parity encodings, the encodings
//! themselves, and an independent Pauli-twirl evaluation for one ancilla.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{NoiseKind, NoiseSpec};
use crate::error::{Error, Result};
use crate::qstate::{ComplexMatrix, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzVariant {
    DephasingBell,
    TwoAncillaDephasing,
    TwoAncillaDepolarizing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzUnitary {
    pub n_ancillas: usize,
    pub variant: AnsatzVariant,
    /// `w_1..w_6`; when set, the two-ancilla encoding is rebuilt from
    /// these phases instead of the default sign pattern.
    pub phases: Option<[C64; 6]>,
}

/// Even-parity outputs in the order `w_1..w_3` refer to (after `|000>`).
const EVEN: [usize; 4] = [0b000, 0b011, 0b101, 0b110];
/// Odd-parity outputs in the order `w_4..w_6` refer to (after `|001>`).
const ODD: [usize; 4] = [0b001, 0b010, 0b100, 0b111];
/// Inputs feeding each sector; the first entry of each is the encoded
/// `|0>|00>` or `|1>|00>`.
const EVEN_IN: [usize; 4] = [0b000, 0b011, 0b101, 0b110];
const ODD_IN: [usize; 4] = [0b100, 0b111, 0b001, 0b010];

impl AnsatzUnitary {
    pub fn new(n_ancillas: usize, kind: NoiseKind) -> Result<Self> {
        let variant = match (n_ancillas, kind) {
            (1, _) => AnsatzVariant::DephasingBell,
            (2, NoiseKind::Dephasing) => AnsatzVariant::TwoAncillaDephasing,
            (2, NoiseKind::Depolarizing) => AnsatzVariant::TwoAncillaDepolarizing,
            _ => {
                return Err(Error::Unsupported(format!(
                    "no reference encoding with {n_ancillas} ancillas"
                )))
            }
        };
        Ok(Self {
            n_ancillas,
            variant,
            phases: None,
        })
    }

    pub fn with_phases(mut self, phases: [C64; 6]) -> Result<Self> {
        if self.n_ancillas != 2 {
            return Err(Error::Unsupported(
                "phase weights only apply to the two-ancilla encoding".into(),
            ));
        }
        if let Some(w) = phases.iter().find(|w| (w.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::NotNormalized { value: w.norm() });
        }
        self.phases = Some(phases);
        Ok(self)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        if let Some(w) = self.phases {
            return parity_fourier(&w);
        }
        match self.variant {
            AnsatzVariant::DephasingBell => bell_encoding(),
            AnsatzVariant::TwoAncillaDephasing => two_ancilla_matrix(),
            AnsatzVariant::TwoAncillaDepolarizing => {
                let (p, m) = (ONE, -ONE);
                parity_fourier(&[p, p, p, m, p, m])
            }
        }
    }
}

pub fn ansatz_unitary(n_ancillas: usize, kind: NoiseKind) -> Result<ComplexMatrix> {
    Ok(AnsatzUnitary::new(n_ancillas, kind)?.matrix())
}

/// `|jk> -> Phi_jk` with `Phi_00 = Phi+`, `Phi_01 = Phi-`,
/// `Phi_10 = Psi+`, `Phi_11 = Psi-`.
fn bell_encoding() -> ComplexMatrix {
    let h = FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[
        &[h, h, 0.0, 0.0],
        &[0.0, 0.0, h, h],
        &[0.0, 0.0, h, -h],
        &[h, -h, 0.0, 0.0],
    ])
    .expect("4x4")
}

fn two_ancilla_matrix() -> ComplexMatrix {
    let (o, z, m, i, mi) = (ONE, ZERO, -ONE, I, -I);
    let rows = [
        [o, z, z, o, z, o, o, z],
        [z, o, m, z, o, z, z, m],
        [z, o, mi, z, m, z, z, i],
        [o, z, z, i, z, m, mi, z],
        [z, o, o, z, o, z, z, o],
        [o, z, z, m, z, o, m, z],
        [o, z, z, mi, z, m, i, z],
        [z, o, i, z, m, z, z, mi],
    ];
    let rows: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * 0.5).collect())
        .collect();
    ComplexMatrix::from_rows(&rows).expect("8x8")
}

/// Diagonal phases times the 4-point Fourier matrix on each parity sector.
fn parity_fourier(w: &[C64; 6]) -> ComplexMatrix {
    let even_w = [ONE, w[0], w[1], w[2]];
    let odd_w = [ONE, w[3], w[4], w[5]];
    let mut u = ComplexMatrix::zeros(8);
    for (outs, ins, ws) in [(EVEN, EVEN_IN, even_w), (ODD, ODD_IN, odd_w)] {
        for (j, &row) in outs.iter().enumerate() {
            for (k, &col) in ins.iter().enumerate() {
                u[(row, col)] = ws[j] * I.powu(((j * k) % 4) as u32) * 0.5;
            }
        }
    }
    u
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    P,
    F,
    BetaFix,
}

pub fn closed_form(metric: Metric, n: usize, noise: &NoiseSpec) -> Result<f64> {
    noise.validate()?;
    let q = noise.q;
    let q2 = q * q;
    let unsupported = || {
        Err(Error::Unsupported(format!(
            "no closed form for {metric:?} with {n} ancillas under {} noise",
            noise.kind.name()
        )))
    };
    use Metric::*;
    use NoiseKind::*;
    let v = match (metric, n, noise.kind) {
        (P, 0, _) => 1.0,
        (F, 0, Dephasing) => (1.0 + q) / 2.0,
        (F, 0, Depolarizing) => (1.0 + 3.0 * q) / 4.0,
        (P, 1, _) => (1.0 + q2) / 2.0,
        (F, 1, Dephasing) => 0.5 + q / (1.0 + q2),
        (F, 1, Depolarizing) => (1.0 + 2.0 * q + 5.0 * q2) / (4.0 * (1.0 + q2)),
        (P, 2, Dephasing) => (1.0 + 3.0 * q2) / 4.0,
        (F, 2, Dephasing) => (1.0 + q).powi(3) / (6.0 * q2 + 2.0),
        (P, 2, Depolarizing) => (1.0 + q2 + 2.0 * q2 * q) / 4.0,
        (F, 2, Depolarizing) => (1.0 + 7.0 * q2) / (4.0 * (1.0 - q + 2.0 * q2)),
        (BetaFix, 0, Dephasing) => 2.0 * (1.0 + q2).sqrt(),
        (BetaFix, 0, Depolarizing) => 2.0 * SQRT_2 * q,
        (BetaFix, 1, Dephasing) => (6.0 * q2 + 2.0) / (1.0 + q2).powf(1.5),
        (BetaFix, 1, Depolarizing) => 2.0 * SQRT_2 * q * (1.0 + q) / (1.0 + q2),
        (BetaFix, 2, Dephasing) => {
            2.0 * (1.0 + 6.0 * q2 + q2 * q2) / ((1.0 + 3.0 * q2) * (1.0 + q2).sqrt())
        }
        _ => return unsupported(),
    };
    Ok(v)
}

/// QFI after filtration with the Bell encoding, input angle zero.
pub fn closed_form_qfi(n: usize, q_r: f64) -> Result<f64> {
    NoiseSpec::depolarizing(q_r)?;
    let q2 = q_r * q_r;
    match n {
        0 => Ok(q2),
        1 => Ok(2.0 * q2 / (1.0 + q2)),
        _ => Err(Error::Unsupported(format!("no closed form for the QFI with {n} ancillas"))),
    }
}

/// `(P_1, F_1)` by summing over every pair of Pauli errors on the encoded
/// pair, weighted by the channel's Pauli probabilities.
pub fn pauli_average_oracle(encoding: &ComplexMatrix, noise: &NoiseSpec) -> Result<(f64, f64)> {
    noise.validate()?;
    if encoding.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: encoding.dim(),
        });
    }
    let paulis = [
        ComplexMatrix::identity(2),
        ComplexMatrix::pauli_x(),
        ComplexMatrix::pauli_y(),
        ComplexMatrix::pauli_z(),
    ];
    let weights = noise.pauli_weights();
    let u = encoding;
    let ud = u.dagger();
    let (mut p, mut f) = (0.0, 0.0);
    for (a, v1) in paulis.iter().enumerate() {
        for (b, v2) in paulis.iter().enumerate() {
            let w = weights[a] * weights[b];
            if w == 0.0 {
                continue;
            }
            let m = ud.matmul(&v1.kron(v2)).matmul(u);
            // psi[r][j] = <j0| m |r0> / sqrt 2
            let psi = |r: usize, j: usize| m[(2 * j, 2 * r)] * FRAC_1_SQRT_2;
            let norm: f64 = (0..2)
                .flat_map(|r| (0..2).map(move |j| (r, j)))
                .map(|(r, j)| psi(r, j).norm_sqr())
                .sum();
            let overlap = (psi(0, 0) + psi(1, 1)) * FRAC_1_SQRT_2;
            p += w * norm;
            f += w * overlap.norm_sqr();
        }
    }
    Ok((p, f / p))
}
