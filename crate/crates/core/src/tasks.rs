//! Figures of merit as named strategies: each one knows which pipeline it
//! needs, how many extra parameters it appends to the circuit, and how to
//! score a parameter vector or a fixed unitary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::NoiseSpec;
use crate::error::{Error, Result};
use crate::filtration::{
    derivative_pipeline_unitary, qfi_state_fast, run_fast, run_fast_unitary, FiltrationOutcome,
    PipelineConfig, Task,
};
use crate::gates::{compile_params, param_count};
use crate::metrics::{
    chsh_value, fidelity_phi_plus, fixed_settings, qfi, MeasurementSettings, MetricKind,
    MetricValue,
};
use crate::optimizer::{optimize_with, OptimizationResult, OptimizerConfig, OptimizerRegistry};
use crate::qstate::ComplexMatrix;

/// Everything a figure of merit needs besides the parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalContext {
    pub pipeline: PipelineConfig,
    /// Input angle of `|psi_theta>` for the QFI task.
    pub theta: f64,
}

impl EvalContext {
    pub fn new(pipeline: PipelineConfig) -> Self {
        Self {
            pipeline,
            theta: 0.0,
        }
    }

    pub fn circuit_params(&self) -> usize {
        param_count(self.pipeline.n_ancillas + 1)
    }
}

pub trait FigureOfMerit: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> MetricKind;
    fn task(&self) -> Task;

    /// Parameters appended after the circuit parameters.
    fn extra_params(&self) -> usize {
        0
    }

    /// Score the circuit/extra parameter vector.
    fn evaluate(&self, ctx: &EvalContext, params: &[f64]) -> Result<MetricValue>;

    /// Score a fixed encoding unitary. `extra` may be empty, in which case
    /// merits with extra parameters fall back to their defaults.
    fn evaluate_unitary(
        &self,
        ctx: &EvalContext,
        u: &ComplexMatrix,
        extra: &[f64],
    ) -> Result<MetricValue>;

    fn pipeline(&self, n_ancillas: usize, noise: NoiseSpec) -> PipelineConfig {
        PipelineConfig::new(self.task(), n_ancillas, noise)
    }

    fn dim(&self, ctx: &EvalContext) -> usize {
        ctx.circuit_params() + self.extra_params()
    }
}

fn split<'a>(ctx: &EvalContext, params: &'a [f64], extra: usize) -> Result<(&'a [f64], &'a [f64])> {
    let n = ctx.circuit_params();
    if params.len() != n + extra {
        return Err(Error::ParamCount {
            expected: n + extra,
            actual: params.len(),
        });
    }
    Ok(params.split_at(n))
}

fn post_selected(ctx: &EvalContext, circuit_params: &[f64]) -> Result<FiltrationOutcome> {
    let circuit = compile_params(ctx.pipeline.n_ancillas + 1, circuit_params);
    run_fast(&ctx.pipeline, &circuit)
}

fn value(kind: MetricKind, value: f64, probability: f64) -> MetricValue {
    MetricValue {
        value,
        probability,
        kind,
    }
}

pub struct Fidelity;

impl FigureOfMerit for Fidelity {
    fn name(&self) -> &'static str {
        "fidelity"
    }
    fn kind(&self) -> MetricKind {
        MetricKind::Fidelity
    }
    fn task(&self) -> Task {
        Task::FidelityWithReference
    }
    fn evaluate(&self, ctx: &EvalContext, params: &[f64]) -> Result<MetricValue> {
        let (c, _) = split(ctx, params, 0)?;
        let out = post_selected(ctx, c)?;
        Ok(value(self.kind(), fidelity_phi_plus(&out.state)?, out.probability))
    }
    fn evaluate_unitary(&self, ctx: &EvalContext, u: &ComplexMatrix, _: &[f64]) -> Result<MetricValue> {
        let out = run_fast_unitary(&ctx.pipeline, u)?;
        Ok(value(self.kind(), fidelity_phi_plus(&out.state)?, out.probability))
    }
}

pub struct ChshFixed;

impl FigureOfMerit for ChshFixed {
    fn name(&self) -> &'static str {
        "chsh-fixed"
    }
    fn kind(&self) -> MetricKind {
        MetricKind::ChshFixed
    }
    fn task(&self) -> Task {
        Task::Chsh
    }
    fn evaluate(&self, ctx: &EvalContext, params: &[f64]) -> Result<MetricValue> {
        let (c, _) = split(ctx, params, 0)?;
        let out = post_selected(ctx, c)?;
        let s = fixed_settings(&ctx.pipeline.noise);
        Ok(value(self.kind(), chsh_value(&out.state, &s)?, out.probability))
    }
    fn evaluate_unitary(&self, ctx: &EvalContext, u: &ComplexMatrix, _: &[f64]) -> Result<MetricValue> {
        let out = run_fast_unitary(&ctx.pipeline, u)?;
        let s = fixed_settings(&ctx.pipeline.noise);
        Ok(value(self.kind(), chsh_value(&out.state, &s)?, out.probability))
    }
}

/// CHSH value with the eight measurement angles optimized jointly with the
/// circuit; they follow the circuit parameters as thetas then phis, both
/// row-major.
pub struct ChshOpt;

impl FigureOfMerit for ChshOpt {
    fn name(&self) -> &'static str {
        "chsh-opt"
    }
    fn kind(&self) -> MetricKind {
        MetricKind::ChshOpt
    }
    fn task(&self) -> Task {
        Task::Chsh
    }
    fn extra_params(&self) -> usize {
        8
    }
    fn evaluate(&self, ctx: &EvalContext, params: &[f64]) -> Result<MetricValue> {
        let (c, angles) = split(ctx, params, 8)?;
        let out = post_selected(ctx, c)?;
        let s = MeasurementSettings::from_flat(angles)?;
        Ok(value(self.kind(), chsh_value(&out.state, &s)?, out.probability))
    }
    fn evaluate_unitary(
        &self,
        ctx: &EvalContext,
        u: &ComplexMatrix,
        extra: &[f64],
    ) -> Result<MetricValue> {
        let out = run_fast_unitary(&ctx.pipeline, u)?;
        let s = if extra.is_empty() {
            fixed_settings(&ctx.pipeline.noise)
        } else {
            MeasurementSettings::from_flat(extra)?
        };
        Ok(value(self.kind(), chsh_value(&out.state, &s)?, out.probability))
    }
}

pub struct Qfi;

impl FigureOfMerit for Qfi {
    fn name(&self) -> &'static str {
        "qfi"
    }
    fn kind(&self) -> MetricKind {
        MetricKind::Qfi
    }
    fn task(&self) -> Task {
        Task::Qfi
    }
    fn evaluate(&self, ctx: &EvalContext, params: &[f64]) -> Result<MetricValue> {
        let (c, _) = split(ctx, params, 0)?;
        let circuit = compile_params(ctx.pipeline.n_ancillas + 1, c);
        let (rho, drho) = qfi_state_fast(&ctx.pipeline, &circuit, ctx.theta)?;
        Ok(value(self.kind(), qfi(&rho, &drho)?, 1.0))
    }
    fn evaluate_unitary(&self, ctx: &EvalContext, u: &ComplexMatrix, _: &[f64]) -> Result<MetricValue> {
        let (rho, drho) = derivative_pipeline_unitary(&ctx.pipeline, u, ctx.theta)?;
        Ok(value(self.kind(), qfi(&rho, &drho)?, 1.0))
    }
}

pub struct MeritRegistry {
    entries: BTreeMap<&'static str, Box<dyn FigureOfMerit>>,
}

impl MeritRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Fidelity));
        r.register(Box::new(ChshFixed));
        r.register(Box::new(ChshOpt));
        r.register(Box::new(Qfi));
        r
    }

    pub fn register(&mut self, merit: Box<dyn FigureOfMerit>) {
        self.entries.insert(merit.name(), merit);
    }

    pub fn get(&self, name: &str) -> Result<&dyn FigureOfMerit> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "figure of merit",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

/// Maximize `merit` over circuit (and extra) parameters.
pub fn optimize_merit(
    merit: &dyn FigureOfMerit,
    ctx: &EvalContext,
    cfg: &OptimizerConfig,
    optimizers: &OptimizerRegistry,
) -> Result<OptimizationResult> {
    ctx.pipeline.validate()?;
    if ctx.pipeline.task != merit.task() {
        return Err(Error::InvalidPipeline(format!(
            "{} needs the {:?} pipeline",
            merit.name(),
            merit.task()
        )));
    }
    let objective = |p: &[f64]| merit.evaluate(ctx, p).map(|m| (m.value, m.probability));
    optimize_with(optimizers, &objective, merit.dim(ctx), cfg)
}
