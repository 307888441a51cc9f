//! Parameterized unitary synthesis.
//!
//! Two qubits use the three-CNOT minimal circuit; three and four qubits use
//! the recursive Shannon decomposition built on top of it. Parameters are
//! consumed depth first:
//!
//! * minimal circuit: `U1` (3 Euler angles), `U2` (3), middle `R_Z`, `R_Y`,
//!   `R_Y`, then `U3` (3), `U4` (3), 15 in total;
//! * Shannon step on `m` qubits: `V1`, multiplexed `R_Z` angles, `V2`,
//!   multiplexed `R_Y` angles, `V3`, multiplexed `R_Z` angles, `V4`, where
//!   each `V` is an `(m-1)`-qubit circuit and each multiplexor carries
//!   `2^(m-1)` angles.
//!
//! The `V` blocks act on the first `m-1` qubits of the block; the
//! multiplexed rotations target its last qubit and are controlled by the
//! others.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{ComplexMatrix, ONE, ZERO};

type Mat2 = [C64; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

fn rotation2(axis: Axis, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        Axis::X => [
            C64::new(c, 0.0),
            C64::new(0.0, -s),
            C64::new(0.0, -s),
            C64::new(c, 0.0),
        ],
        Axis::Y => [
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ],
        Axis::Z => [C64::new(c, -s), ZERO, ZERO, C64::new(c, s)],
    }
}

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn euler2(alpha: f64, beta: f64, gamma: f64) -> Mat2 {
    mul2(
        &mul2(&rotation2(Axis::Z, alpha), &rotation2(Axis::Y, beta)),
        &rotation2(Axis::Z, gamma),
    )
}

fn to_matrix(m: &Mat2) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![m[0], m[1]], vec![m[2], m[3]]]).unwrap()
}

/// `exp(-i angle sigma_axis / 2)`
pub fn rotation(axis: Axis, angle: f64) -> ComplexMatrix {
    to_matrix(&rotation2(axis, angle))
}

/// `R_Z(alpha) R_Y(beta) R_Z(gamma)`
pub fn one_qubit_unitary(alpha: f64, beta: f64, gamma: f64) -> ComplexMatrix {
    to_matrix(&euler2(alpha, beta, gamma))
}

/// Elementary gate on a register of `num_qubits` qubits.
#[derive(Clone, Debug)]
pub enum Gate {
    Single { qubit: usize, m: Mat2 },
    Cnot { control: usize, target: usize },
    Multiplexed {
        target: usize,
        controls: Vec<usize>,
        blocks: Vec<Mat2>,
    },
}

/// Flattened gate list; applied to state vectors without forming the
/// full unitary.
#[derive(Clone, Debug)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    fn stride(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    pub fn apply(&self, v: &mut [C64]) {
        assert_eq!(v.len(), self.dim());
        for gate in &self.gates {
            match gate {
                Gate::Single { qubit, m } => {
                    let st = self.stride(*qubit);
                    for i in 0..v.len() {
                        if i & st == 0 {
                            let (a, b) = (v[i], v[i | st]);
                            v[i] = m[0] * a + m[1] * b;
                            v[i | st] = m[2] * a + m[3] * b;
                        }
                    }
                }
                Gate::Cnot { control, target } => {
                    let (cs, ts) = (self.stride(*control), self.stride(*target));
                    for i in 0..v.len() {
                        if i & cs != 0 && i & ts == 0 {
                            v.swap(i, i | ts);
                        }
                    }
                }
                Gate::Multiplexed {
                    target,
                    controls,
                    blocks,
                } => {
                    let ts = self.stride(*target);
                    let cstrides: Vec<usize> = controls.iter().map(|&c| self.stride(c)).collect();
                    for i in 0..v.len() {
                        if i & ts != 0 {
                            continue;
                        }
                        let sel = cstrides
                            .iter()
                            .fold(0, |acc, &s| (acc << 1) | usize::from(i & s != 0));
                        let m = &blocks[sel];
                        let (a, b) = (v[i], v[i | ts]);
                        v[i] = m[0] * a + m[1] * b;
                        v[i | ts] = m[2] * a + m[3] * b;
                    }
                }
            }
        }
    }

    /// `U |index>`
    pub fn column(&self, index: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim()];
        v[index] = ONE;
        self.apply(&mut v);
        v
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for j in 0..dim {
            for (i, a) in self.column(j).into_iter().enumerate() {
                m[(i, j)] = a;
            }
        }
        m
    }

    fn push_euler(&mut self, qubit: usize, p: &[f64]) {
        self.push(Gate::Single {
            qubit,
            m: euler2(p[0], p[1], p[2]),
        });
    }

    fn push_rotation(&mut self, qubit: usize, axis: Axis, angle: f64) {
        self.push(Gate::Single {
            qubit,
            m: rotation2(axis, angle),
        });
    }

    fn push_minimal(&mut self, a: usize, b: usize, p: &[f64]) {
        self.push_euler(a, &p[0..3]);
        self.push_euler(b, &p[3..6]);
        self.push(Gate::Cnot {
            control: b,
            target: a,
        });
        self.push_rotation(a, Axis::Z, p[6]);
        self.push_rotation(b, Axis::Y, p[7]);
        self.push(Gate::Cnot {
            control: a,
            target: b,
        });
        self.push_rotation(b, Axis::Y, p[8]);
        self.push(Gate::Cnot {
            control: b,
            target: a,
        });
        self.push_euler(a, &p[9..12]);
        self.push_euler(b, &p[12..15]);
    }

    fn push_multiplexed(&mut self, axis: Axis, target: usize, controls: &[usize], angles: &[f64]) {
        self.push(Gate::Multiplexed {
            target,
            controls: controls.to_vec(),
            blocks: angles.iter().map(|&a| rotation2(axis, a)).collect(),
        });
    }

    /// Appends the decomposition for `qubits` and returns the number of
    /// parameters consumed.
    fn push_recursive(&mut self, qubits: &[usize], p: &[f64]) -> usize {
        match qubits.len() {
            1 => 0,
            2 => {
                self.push_minimal(qubits[0], qubits[1], &p[..15]);
                15
            }
            m => {
                let (top, target) = (&qubits[..m - 1], qubits[m - 1]);
                let k = 1 << (m - 1);
                let mut at = 0;
                for axis in [Some(Axis::Z), Some(Axis::Y), Some(Axis::Z), None] {
                    at += self.push_recursive(top, &p[at..]);
                    if let Some(axis) = axis {
                        self.push_multiplexed(axis, target, top, &p[at..at + k]);
                        at += k;
                    }
                }
                at
            }
        }
    }
}

/// Number of angles used by the decomposition on `num_qubits` qubits.
pub fn param_count(num_qubits: usize) -> usize {
    match num_qubits {
        0 | 1 => 0,
        2 => 15,
        n => 4 * param_count(n - 1) + 3 * (1 << (n - 1)),
    }
}

pub fn minimal_two_qubit(params: &[f64]) -> Result<ComplexMatrix> {
    check_len(params, 15)?;
    let mut c = Circuit::new(2);
    c.push_minimal(0, 1, params);
    Ok(c.matrix())
}

pub fn qsd_unitary(params: &[f64], num_qubits: usize) -> Result<ComplexMatrix> {
    if !(3..=4).contains(&num_qubits) {
        return Err(Error::UnsupportedQubits(num_qubits));
    }
    Ok(ParamCircuit::new(num_qubits, params.to_vec())?.compile().matrix())
}

fn check_len(params: &[f64], expected: usize) -> Result<()> {
    if params.len() != expected {
        return Err(Error::ParamCount {
            expected,
            actual: params.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexedRotation {
    pub axis: Axis,
    pub angles: Vec<f64>,
}

/// Block-diagonal rotation on `target`, selected by the computational
/// state of `controls` (first control = most significant selector bit).
pub fn multiplexed_rotation_matrix(
    mr: &MultiplexedRotation,
    total_qubits: usize,
    target: usize,
    controls: &[usize],
) -> Result<ComplexMatrix> {
    if mr.angles.len() != 1 << controls.len() {
        return Err(Error::ParamCount {
            expected: 1 << controls.len(),
            actual: mr.angles.len(),
        });
    }
    let mut all = controls.to_vec();
    all.push(target);
    for (k, &q) in all.iter().enumerate() {
        if q >= total_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: total_qubits,
            });
        }
        if all[..k].contains(&q) {
            return Err(Error::OverlappingQubits(all));
        }
    }
    let mut c = Circuit::new(total_qubits);
    c.push_multiplexed(mr.axis, target, controls, &mr.angles);
    Ok(c.matrix())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recipe {
    /// Single signal qubit, no encoding.
    Identity,
    Minimal2Q,
    Qsd,
}

/// Parameter vector plus the recipe that turns it into a unitary on
/// `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCircuit {
    num_qubits: usize,
    params: Vec<f64>,
    recipe: Recipe,
}

impl ParamCircuit {
    pub fn new(num_qubits: usize, params: Vec<f64>) -> Result<Self> {
        let recipe = match num_qubits {
            1 => Recipe::Identity,
            2 => Recipe::Minimal2Q,
            3 | 4 => Recipe::Qsd,
            n => return Err(Error::UnsupportedQubits(n)),
        };
        check_len(&params, param_count(num_qubits))?;
        Ok(Self {
            num_qubits,
            params,
            recipe,
        })
    }

    pub fn zeros(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, vec![0.0; param_count(num_qubits)])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn recipe(&self) -> Recipe {
        self.recipe
    }

    pub fn compile(&self) -> Circuit {
        compile_params(self.num_qubits, &self.params)
    }

    pub fn unitary(&self) -> ComplexMatrix {
        self.compile().matrix()
    }
}

/// Builds the gate list without copying `params`; the caller guarantees
/// the length matches [`param_count`].
pub fn compile_params(num_qubits: usize, params: &[f64]) -> Circuit {
    debug_assert_eq!(params.len(), param_count(num_qubits));
    let mut c = Circuit::new(num_qubits);
    let qubits: Vec<usize> = (0..num_qubits).collect();
    c.push_recursive(&qubits, params);
    c
}
