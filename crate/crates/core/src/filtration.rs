//! End-to-end filtration pipelines.
//!
//! Register layout: for the fidelity and CHSH tasks qubit 0 is the
//! reference `R`, qubit 1 the signal `S` and qubits `2..` the ancillas.
//! The QFI task has no reference, so the signal is qubit 0.
//!
//! Two evaluators live here. [`run_filtration`] carries the whole density
//! matrix through every stage and is the reference implementation.
//! [`run_fast`] and [`run_fast_unitary`] compute the same post-selected
//! block from a handful of columns of `U` and are what the optimizers call.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{
    apply_iid_matrix, kraus_set, swap_index, swap_mixture_matrix, NoiseSpec, RobustnessSpec,
};
use crate::error::{Error, Result};
use crate::gates::{Circuit, ParamCircuit};
use crate::qstate::{project_zero_matrix, ComplexMatrix, DensityMatrix, PureState, ZERO};

/// Post-selection probabilities below this are treated as failure.
pub const MIN_PROBABILITY: f64 = 1e-15;

pub const MAX_ANCILLAS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[serde(rename = "fidelity")]
    FidelityWithReference,
    Chsh,
    Qfi,
}

impl Task {
    pub fn has_reference(&self) -> bool {
        !matches!(self, Task::Qfi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_ancillas: usize,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub robustness: Option<RobustnessSpec>,
    pub task: Task,
    pub post_select: bool,
    /// Apply `U^dagger` after the channel. Always on for post-selected
    /// tasks; off by default for QFI.
    pub decode: bool,
}

impl PipelineConfig {
    pub fn new(task: Task, n_ancillas: usize, noise: NoiseSpec) -> Self {
        let post_selected = task.has_reference();
        Self {
            n_ancillas,
            noise,
            robustness: None,
            task,
            post_select: post_selected,
            decode: post_selected,
        }
    }

    pub fn fidelity(n_ancillas: usize, noise: NoiseSpec) -> Self {
        Self::new(Task::FidelityWithReference, n_ancillas, noise)
    }

    pub fn qfi(n_ancillas: usize, noise: NoiseSpec) -> Self {
        Self::new(Task::Qfi, n_ancillas, noise)
    }

    pub fn with_robustness(mut self, robustness: RobustnessSpec) -> Self {
        self.robustness = Some(robustness);
        self
    }

    pub fn with_decode(mut self, decode: bool) -> Self {
        self.decode = decode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ancillas > MAX_ANCILLAS {
            return Err(Error::InvalidPipeline(format!(
                "at most {MAX_ANCILLAS} ancillas are supported, got {}",
                self.n_ancillas
            )));
        }
        self.noise.validate()?;
        if let Some(r) = &self.robustness {
            r.validate()?;
        }
        match self.task {
            Task::Qfi if self.post_select => Err(Error::InvalidPipeline(
                "the QFI task keeps the ancillas and cannot post-select".into(),
            )),
            Task::FidelityWithReference | Task::Chsh if !self.post_select => {
                Err(Error::InvalidPipeline(format!(
                    "{:?} requires post-selection on the ancillas",
                    self.task
                )))
            }
            _ => Ok(()),
        }
    }

    /// Qubits in the simulated register.
    pub fn num_qubits(&self) -> usize {
        self.n_ancillas + 1 + usize::from(self.task.has_reference())
    }

    pub fn signal(&self) -> usize {
        usize::from(self.task.has_reference())
    }

    pub fn ancillas(&self) -> Vec<usize> {
        let s = self.signal();
        (s + 1..=s + self.n_ancillas).collect()
    }

    /// Signal plus ancillas: the qubits `U` and the channel act on.
    pub fn encoded_qubits(&self) -> Vec<usize> {
        let s = self.signal();
        (s..=s + self.n_ancillas).collect()
    }

    /// Swap mixture probability, if it actually does something here.
    fn active_swap(&self) -> Option<f64> {
        match self.robustness.and_then(|r| r.s) {
            Some(s) if self.n_ancillas > 0 && s < 1.0 => Some(s),
            _ => None,
        }
    }

    fn active_prep(&self) -> Option<f64> {
        match self.robustness.and_then(|r| r.q_a) {
            Some(q) if self.n_ancillas > 0 && q < 1.0 => Some(q),
            _ => None,
        }
    }

    /// The input the task prescribes: `|Phi+>_RS |0..0>` or
    /// `|psi_theta>_S |0..0>`.
    pub fn default_input(&self, theta: f64) -> PureState {
        let head = if self.task.has_reference() {
            PureState::phi_plus()
        } else {
            PureState::theta_state(theta)
        };
        head.with_zero_ancillas(self.n_ancillas)
    }
}

#[derive(Clone, Debug)]
pub struct FiltrationOutcome {
    pub state: DensityMatrix,
    pub probability: f64,
    pub raw_trace: f64,
}

pub fn run_filtration(
    cfg: &PipelineConfig,
    circuit: &ParamCircuit,
    input: &PureState,
) -> Result<FiltrationOutcome> {
    run_filtration_unitary(cfg, &circuit.unitary(), input)
}

pub fn run_filtration_unitary(
    cfg: &PipelineConfig,
    u: &ComplexMatrix,
    input: &PureState,
) -> Result<FiltrationOutcome> {
    run_filtration_density(cfg, u, &input.density())
}

/// Reference pipeline on an arbitrary (possibly mixed) input state.
pub fn run_filtration_density(
    cfg: &PipelineConfig,
    u: &ComplexMatrix,
    input: &DensityMatrix,
) -> Result<FiltrationOutcome> {
    let out = propagate(cfg, u, input.matrix())?;
    finish(cfg, out)
}

/// Every stage before post-selection. The map is linear in `rho`, so it
/// also carries derivatives and unnormalized operators.
pub fn propagate(cfg: &PipelineConfig, u: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    cfg.validate()?;
    let nq = cfg.num_qubits();
    let enc_dim = 1 << (cfg.n_ancillas + 1);
    if u.dim() != enc_dim {
        return Err(Error::DimensionMismatch {
            expected: enc_dim,
            actual: u.dim(),
        });
    }
    if rho.dim() != 1 << nq {
        return Err(Error::DimensionMismatch {
            expected: 1 << nq,
            actual: rho.dim(),
        });
    }
    let ancillas = cfg.ancillas();
    let signal = cfg.signal();
    let noise = kraus_set(&cfg.noise)?;
    let full_u = if cfg.task.has_reference() {
        ComplexMatrix::identity(2).kron(u)
    } else {
        u.clone()
    };

    let mut m = rho.clone();
    if let Some(q_a) = cfg.active_prep() {
        let prep = kraus_set(&NoiseSpec::depolarizing(q_a).map_err(rename_qa)?)?;
        m = apply_iid_matrix(&m, &prep, &ancillas);
    }
    if let Some(s) = cfg.active_swap() {
        m = swap_mixture_matrix(&m, s, signal, &ancillas)?;
    }
    m = m.conjugated_by(&full_u);
    m = apply_iid_matrix(&m, &noise, &cfg.encoded_qubits());
    if cfg.decode {
        m = m.conjugated_by(&full_u.dagger());
        if let Some(s) = cfg.active_swap() {
            m = swap_mixture_matrix(&m, s, signal, &ancillas)?;
        }
    }
    Ok(m)
}

fn rename_qa(e: Error) -> Error {
    match e {
        Error::NoiseOutOfRange {
            value, min, max, ..
        } => Error::NoiseOutOfRange {
            name: "q_a",
            value,
            min,
            max,
        },
        other => other,
    }
}

fn finish(cfg: &PipelineConfig, out: ComplexMatrix) -> Result<FiltrationOutcome> {
    if cfg.post_select {
        let block = project_zero_matrix(&out, &cfg.ancillas())?;
        normalize_block(block)
    } else {
        let t = out.trace().re;
        let state = DensityMatrix::new(out.hermitized().scale_real(1.0 / t))?;
        Ok(FiltrationOutcome {
            state,
            probability: 1.0,
            raw_trace: 1.0,
        })
    }
}

fn normalize_block(block: ComplexMatrix) -> Result<FiltrationOutcome> {
    let raw = block.trace().re;
    if !(raw >= MIN_PROBABILITY) {
        return Err(Error::PostSelectionImpossible { raw_trace: raw });
    }
    let state = DensityMatrix::new(block.hermitized().scale_real(1.0 / raw))?;
    Ok(FiltrationOutcome {
        state,
        probability: raw,
        raw_trace: raw,
    })
}

/// `(rho_out, d rho_out / d theta)` for the QFI task with input
/// `|psi_theta>|0..0>`.
pub fn derivative_pipeline(
    cfg: &PipelineConfig,
    circuit: &ParamCircuit,
    theta: f64,
) -> Result<(DensityMatrix, ComplexMatrix)> {
    derivative_pipeline_unitary(cfg, &circuit.unitary(), theta)
}

pub fn derivative_pipeline_unitary(
    cfg: &PipelineConfig,
    u: &ComplexMatrix,
    theta: f64,
) -> Result<(DensityMatrix, ComplexMatrix)> {
    if cfg.task != Task::Qfi {
        return Err(Error::InvalidPipeline(
            "derivatives are only defined for the QFI task".into(),
        ));
    }
    let (psi, dpsi) = theta_input(cfg.n_ancillas, theta);
    let rho = ComplexMatrix::outer(&psi, &psi);
    let drho = ComplexMatrix::outer(&dpsi, &psi).add(&ComplexMatrix::outer(&psi, &dpsi));
    let rho_out = propagate(cfg, u, &rho)?;
    let drho_out = propagate(cfg, u, &drho)?;
    Ok((DensityMatrix::new(rho_out.hermitized())?, drho_out.hermitized()))
}

fn theta_input(n_ancillas: usize, theta: f64) -> (Vec<C64>, Vec<C64>) {
    let psi = PureState::theta_state(theta).with_zero_ancillas(n_ancillas);
    let d1 = PureState::theta_state_derivative(theta);
    let mut dpsi = vec![ZERO; 1 << (n_ancillas + 1)];
    dpsi[0] = d1[0];
    dpsi[1 << n_ancillas] = d1[1];
    (psi.amplitudes().to_vec(), dpsi)
}

/// QFI state and derivative straight from the circuit: `v = U psi`,
/// `rho = E(v v^dagger)`, `drho = E(dv v^dagger + v dv^dagger)`. Falls back
/// to the reference pipeline when robustness noise or decoding is enabled.
pub fn qfi_state_fast(
    cfg: &PipelineConfig,
    circuit: &Circuit,
    theta: f64,
) -> Result<(DensityMatrix, ComplexMatrix)> {
    cfg.validate()?;
    if cfg.task != Task::Qfi {
        return Err(Error::InvalidPipeline(
            "derivatives are only defined for the QFI task".into(),
        ));
    }
    if cfg.decode || cfg.active_prep().is_some() || cfg.active_swap().is_some() {
        return derivative_pipeline_unitary(cfg, &circuit.matrix(), theta);
    }
    if circuit.num_qubits() != cfg.n_ancillas + 1 {
        return Err(Error::DimensionMismatch {
            expected: 1 << (cfg.n_ancillas + 1),
            actual: circuit.dim(),
        });
    }
    let (mut v, mut dv) = theta_input(cfg.n_ancillas, theta);
    circuit.apply(&mut v);
    circuit.apply(&mut dv);
    let noise = kraus_set(&cfg.noise)?;
    let qubits = cfg.encoded_qubits();
    let rho = apply_iid_matrix(&ComplexMatrix::outer(&v, &v), &noise, &qubits);
    let drho_in = ComplexMatrix::outer(&dv, &v).add(&ComplexMatrix::outer(&v, &dv));
    let drho = apply_iid_matrix(&drho_in, &noise, &qubits);
    Ok((DensityMatrix::new(rho.hermitized())?, drho.hermitized()))
}

/// Post-selected outcome for the fidelity and CHSH tasks computed from
/// columns of the compiled circuit. Equal to [`run_filtration`] with the
/// `|Phi+>|0..0>` input.
pub fn run_fast(cfg: &PipelineConfig, circuit: &Circuit) -> Result<FiltrationOutcome> {
    if circuit.num_qubits() != cfg.n_ancillas + 1 {
        return Err(Error::DimensionMismatch {
            expected: 1 << (cfg.n_ancillas + 1),
            actual: circuit.dim(),
        });
    }
    fast_block(cfg, |idx| circuit.column(idx)).and_then(normalize_block)
}

pub fn run_fast_unitary(cfg: &PipelineConfig, u: &ComplexMatrix) -> Result<FiltrationOutcome> {
    let expected = 1 << (cfg.n_ancillas + 1);
    if u.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: u.dim(),
        });
    }
    fast_block(cfg, |idx| u.column(idx)).and_then(normalize_block)
}

/// Unnormalized `R,S` block after post-selection:
///
/// `O[(r,s),(r',s')] = 1/2 sum w_b w_c w_c' <x_{c',s}| E(|y_{c,r,b}><y_{c,r',b}|) |x_{c',s'}>`
///
/// with `y = U S_c |r,b>` and `x = U S_c' |s,0>`, where `b` runs over the
/// ancilla preparation outcomes and `c, c'` over the swap branches.
fn fast_block(cfg: &PipelineConfig, column: impl Fn(usize) -> Vec<C64>) -> Result<ComplexMatrix> {
    cfg.validate()?;
    if !cfg.task.has_reference() {
        return Err(Error::InvalidPipeline(
            "the column evaluator only handles post-selected tasks".into(),
        ));
    }
    let n = cfg.n_ancillas;
    let nq = n + 1;
    let dim = 1 << nq;
    let noise = kraus_set(&cfg.noise)?;

    let prep: Vec<(usize, f64)> = match cfg.active_prep() {
        Some(q) => {
            if !(1.0 / 3.0 - 1e-12..=1.0).contains(&q) {
                return Err(rename_qa(NoiseSpec::depolarizing(q).unwrap_err()));
            }
            let (w0, w1) = ((1.0 + q) / 2.0, (1.0 - q) / 2.0);
            (0..1usize << n)
                .map(|b| {
                    let ones = b.count_ones() as i32;
                    (b, w0.powi(n as i32 - ones) * w1.powi(ones))
                })
                .collect()
        }
        None => vec![(0, 1.0)],
    };
    let swaps: Vec<(Option<usize>, f64)> = match cfg.active_swap() {
        Some(s) => {
            let mut v = vec![(None, s)];
            v.extend((1..=n).map(|a| (Some(a), (1.0 - s) / n as f64)));
            v.retain(|&(_, w)| w > 0.0);
            v
        }
        None => vec![(None, 1.0)],
    };
    let permute = |idx: usize, c: Option<usize>| match c {
        Some(a) => swap_index(idx, 0, a, nq),
        None => idx,
    };

    let mut cache: Vec<Option<Vec<C64>>> = vec![None; dim];
    let mut col = |idx: usize| -> Vec<C64> {
        cache[idx].get_or_insert_with(|| column(idx)).clone()
    };

    // A_{rr'} = sum_{b,c} w_b w_c y_{c,r,b} y_{c,r',b}^dagger, then E(A)
    let mut a = [
        ComplexMatrix::zeros(dim),
        ComplexMatrix::zeros(dim),
        ComplexMatrix::zeros(dim),
    ];
    for &(b, wb) in &prep {
        for &(c, wc) in &swaps {
            let y0 = col(permute(b, c));
            let y1 = col(permute((1 << n) | b, c));
            let w = wb * wc;
            accumulate_outer(&mut a[0], &y0, &y0, w);
            accumulate_outer(&mut a[1], &y0, &y1, w);
            accumulate_outer(&mut a[2], &y1, &y1, w);
        }
    }
    let qubits: Vec<usize> = (0..nq).collect();
    let e: Vec<ComplexMatrix> = a
        .iter()
        .map(|m| apply_iid_matrix(m, &noise, &qubits))
        .collect();
    let e_rr = |r: usize, rp: usize| -> ComplexMatrix {
        match (r, rp) {
            (0, 0) => e[0].clone(),
            (0, 1) => e[1].clone(),
            (1, 0) => e[1].dagger(),
            _ => e[2].clone(),
        }
    };

    let decode_swaps: Vec<(Option<usize>, f64)> = if cfg.decode {
        swaps.clone()
    } else {
        vec![(None, 1.0)]
    };
    let mut out = ComplexMatrix::zeros(4);
    for &(c, wc) in &decode_swaps {
        let xs: Vec<Vec<C64>> = (0..2)
            .map(|s| {
                let idx = permute(s << n, c);
                if cfg.decode {
                    col(idx)
                } else {
                    let mut e = vec![ZERO; dim];
                    e[idx] = C64::new(1.0, 0.0);
                    e
                }
            })
            .collect();
        for r in 0..2 {
            for rp in 0..2 {
                let m = e_rr(r, rp);
                for s in 0..2 {
                    for sp in 0..2 {
                        let val = m.sandwich(&xs[s], &xs[sp]);
                        out[(2 * r + s, 2 * rp + sp)] += val * (0.5 * wc);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn accumulate_outer(m: &mut ComplexMatrix, a: &[C64], b: &[C64], w: f64) {
    let dim = a.len();
    let data = m.as_mut_slice();
    for i in 0..dim {
        let ai = a[i] * w;
        if ai == ZERO {
            continue;
        }
        let row = &mut data[i * dim..(i + 1) * dim];
        for (cell, bj) in row.iter_mut().zip(b) {
            *cell += ai * bj.conj();
        }
    }
}
