//! Config-driven noise sweeps, single-point optimizations and the
//! closed-form verification table.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{ansatz_unitary, closed_form, closed_form_qfi, pauli_average_oracle, Metric};
use crate::channels::{NoiseKind, NoiseSpec, RobustnessSpec};
use crate::error::{Error, Result};
use crate::filtration::{
    derivative_pipeline_unitary, run_filtration_unitary, PipelineConfig, MAX_ANCILLAS,
};
use crate::metrics::{chsh_value, fidelity_phi_plus, fixed_settings, qfi};
use crate::optimizer::{OptimizationResult, OptimizerConfig, OptimizerRegistry};
use crate::qstate::ComplexMatrix;
use crate::tasks::{optimize_merit, EvalContext, FigureOfMerit, MeritRegistry};

pub const CSV_HEADER: [&str; 12] = [
    "task",
    "kind",
    "n",
    "q",
    "q_a",
    "s",
    "value",
    "probability",
    "source",
    "restarts",
    "iterations",
    "seed",
];

/// Largest closed-form residual `verify` accepts.
pub const VERIFY_TOL: f64 = 1e-10;

const DEFAULT_POINTS: usize = 21;
const ROBUSTNESS_CHANNEL_Q: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Range { min: f64, max: f64, points: usize },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Values(v) => v.clone(),
            GridSpec::Range { min, max, points } => match points {
                0 => Vec::new(),
                1 => vec![*min],
                &p => (0..p)
                    .map(|i| {
                        if i == p - 1 {
                            *max
                        } else {
                            min + (max - min) * i as f64 / (p - 1) as f64
                        }
                    })
                    .collect(),
            },
        }
    }

    fn check(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        let v = self.values();
        if v.is_empty() {
            return Err(Error::Config(format!("{name} grid is empty")));
        }
        for x in v {
            if !(x >= lo - 1e-12 && x <= hi + 1e-12) {
                return Err(Error::Config(format!(
                    "{name} grid value {x} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RobustnessParam {
    #[serde(rename = "q_a")]
    QA,
    #[serde(rename = "s")]
    S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSweep {
    pub param: RobustnessParam,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Channel strength held fixed while the robustness parameter varies.
    #[serde(default = "default_channel_q")]
    pub q: f64,
}

fn default_channel_q() -> f64 {
    ROBUSTNESS_CHANNEL_Q
}

impl RobustnessSweep {
    pub fn grid(&self) -> GridSpec {
        self.grid.clone().unwrap_or(match self.param {
            RobustnessParam::QA => GridSpec::Range {
                min: 1.0 / 3.0,
                max: 1.0,
                points: DEFAULT_POINTS,
            },
            RobustnessParam::S => GridSpec::Range {
                min: 0.5,
                max: 1.0,
                points: DEFAULT_POINTS,
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Optimized,
    Ansatz,
    ClosedForm,
}

impl Source {
    pub fn label(&self) -> &'static str {
        match self {
            Source::Optimized => "optimized",
            Source::Ansatz => "ansatz",
            Source::ClosedForm => "closed_form",
        }
    }
}

fn default_sources() -> Vec<Source> {
    vec![Source::Optimized, Source::Ansatz, Source::ClosedForm]
}

fn default_ns() -> Vec<usize> {
    vec![0, 1, 2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub task: String,
    pub kind: NoiseKind,
    #[serde(default)]
    pub q: Option<GridSpec>,
    #[serde(default = "default_ns")]
    pub n: Vec<usize>,
    #[serde(default)]
    pub robustness: Option<RobustnessSweep>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_sources")]
    pub sources: Vec<Source>,
    /// Input angle for the QFI task.
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub output: Option<String>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn q_grid(&self) -> GridSpec {
        self.q.clone().unwrap_or_else(|| {
            let (min, max) = self.kind.q_range();
            GridSpec::Range {
                min,
                max,
                points: DEFAULT_POINTS,
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        MeritRegistry::builtin().get(&self.task)?;
        let (lo, hi) = self.kind.q_range();
        match &self.robustness {
            None => self.q_grid().check("q", lo, hi)?,
            Some(r) => {
                if !(r.q >= lo && r.q <= hi) {
                    return Err(Error::Config(format!(
                        "robustness channel q {} outside [{lo}, {hi}]",
                        r.q
                    )));
                }
                match r.param {
                    RobustnessParam::QA => r.grid().check("q_a", 1.0 / 3.0, 1.0)?,
                    RobustnessParam::S => r.grid().check("s", 0.0, 1.0)?,
                }
            }
        }
        if self.n.is_empty() {
            return Err(Error::Config("n list is empty".into()));
        }
        if let Some(&bad) = self.n.iter().find(|&&n| n > MAX_ANCILLAS) {
            return Err(Error::Config(format!(
                "n = {bad} exceeds the {MAX_ANCILLAS}-ancilla limit"
            )));
        }
        self.optimizer.validate()?;
        if let Some(m) = &self.optimizer.method {
            OptimizerRegistry::builtin().get(m)?;
        }
        Ok(())
    }

    /// `(q, robustness)` for every grid point.
    fn points(&self) -> Vec<(f64, Option<RobustnessSpec>)> {
        match &self.robustness {
            None => self.q_grid().values().into_iter().map(|q| (q, None)).collect(),
            Some(r) => r
                .grid()
                .values()
                .into_iter()
                .map(|x| {
                    let spec = match r.param {
                        RobustnessParam::QA => RobustnessSpec {
                            q_a: Some(x),
                            s: None,
                        },
                        RobustnessParam::S => RobustnessSpec {
                            q_a: None,
                            s: Some(x),
                        },
                    };
                    (r.q, Some(spec))
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub task: String,
    pub kind: NoiseKind,
    pub n: usize,
    pub q: f64,
    pub q_a: Option<f64>,
    pub s: Option<f64>,
    pub value: f64,
    pub probability: f64,
    pub source: Source,
    pub restarts: Option<usize>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

impl SweepRow {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        let f = |a: f64, b: f64| a.total_cmp(&b);
        let o = |a: Option<f64>, b: Option<f64>| f(a.unwrap_or(-1.0), b.unwrap_or(-1.0));
        self.n
            .cmp(&other.n)
            .then(f(self.q, other.q))
            .then(o(self.q_a, other.q_a))
            .then(o(self.s, other.s))
            .then(self.source.cmp(&other.source))
    }

    fn record(&self) -> [String; 12] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.task.clone(),
            self.kind.name().to_string(),
            self.n.to_string(),
            self.q.to_string(),
            opt(self.q_a),
            opt(self.s),
            self.value.to_string(),
            self.probability.to_string(),
            self.source.label().to_string(),
            self.restarts.map(|r| r.to_string()).unwrap_or_default(),
            self.iterations.map(|r| r.to_string()).unwrap_or_default(),
            self.seed.map(|r| r.to_string()).unwrap_or_default(),
        ]
    }
}

/// The encoding used for "ansatz" rows; `None` when no encoding is known.
pub fn reference_encoding(n: usize, kind: NoiseKind) -> Option<ComplexMatrix> {
    match n {
        0 => Some(ComplexMatrix::identity(2)),
        1 | 2 => ansatz_unitary(n, kind).ok(),
        _ => None,
    }
}

/// Closed form for `(task, n)` at this grid point, if one exists.
pub fn closed_form_row(
    merit: &str,
    n: usize,
    noise: &NoiseSpec,
    robustness: Option<RobustnessSpec>,
    theta: f64,
) -> Option<(f64, f64)> {
    if robustness.is_some_and(|r| !r.is_trivial()) {
        return None;
    }
    let p = || closed_form(Metric::P, n, noise).ok();
    match merit {
        "fidelity" => Some((closed_form(Metric::F, n, noise).ok()?, p()?)),
        "chsh-fixed" => Some((closed_form(Metric::BetaFix, n, noise).ok()?, p()?)),
        "qfi" if noise.kind == NoiseKind::Depolarizing && theta == 0.0 => {
            Some((closed_form_qfi(n, noise.q).ok()?, 1.0))
        }
        _ => None,
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let merits = MeritRegistry::builtin();
    let optimizers = OptimizerRegistry::builtin();
    let merit = merits.get(&cfg.task)?;

    let jobs: Vec<(usize, f64, Option<RobustnessSpec>)> = cfg
        .points()
        .into_iter()
        .flat_map(|(q, r)| cfg.n.iter().map(move |&n| (n, q, r)))
        .collect();

    let rows: Result<Vec<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|&(n, q, r)| sweep_point(cfg, merit, &optimizers, n, q, r))
        .collect();
    let mut rows: Vec<SweepRow> = rows?.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.sort_key_cmp(b));
    Ok(rows)
}

fn sweep_point(
    cfg: &SweepConfig,
    merit: &dyn FigureOfMerit,
    optimizers: &OptimizerRegistry,
    n: usize,
    q: f64,
    robustness: Option<RobustnessSpec>,
) -> Result<Vec<SweepRow>> {
    let noise = NoiseSpec::new(cfg.kind, q)?;
    let mut pipeline = merit.pipeline(n, noise);
    pipeline.robustness = robustness;
    let ctx = EvalContext {
        pipeline,
        theta: cfg.theta,
    };
    let row = |value: f64, probability: f64, source: Source| SweepRow {
        task: cfg.task.clone(),
        kind: cfg.kind,
        n,
        q,
        q_a: robustness.and_then(|r| r.q_a),
        s: robustness.and_then(|r| r.s),
        value,
        probability,
        source,
        restarts: None,
        iterations: None,
        seed: None,
    };
    let mut out = Vec::new();
    for source in &cfg.sources {
        match source {
            Source::Optimized => {
                let res = optimize_merit(merit, &ctx, &cfg.optimizer, optimizers)?;
                out.push(SweepRow {
                    restarts: Some(res.restart_values.len()),
                    iterations: Some(res.iterations_used),
                    seed: Some(res.seed),
                    ..row(res.best_value, res.best_probability, Source::Optimized)
                });
            }
            Source::Ansatz => {
                if merit.extra_params() > 0 {
                    continue;
                }
                if let Some(u) = reference_encoding(n, cfg.kind) {
                    let v = merit.evaluate_unitary(&ctx, &u, &[])?;
                    out.push(row(v.value, v.probability, Source::Ansatz));
                }
            }
            Source::ClosedForm => {
                if let Some((v, p)) = closed_form_row(merit.name(), n, &noise, robustness, cfg.theta)
                {
                    out.push(row(v, p, Source::ClosedForm));
                }
            }
        }
    }
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("{other:?}")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub task: String,
    pub kind: NoiseKind,
    pub q: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl OptimizeConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.context().map_err(as_config)?;
        cfg.optimizer.validate()?;
        Ok(cfg)
    }

    pub fn context(&self) -> Result<EvalContext> {
        let merit = MeritRegistry::builtin().get(&self.task).map(|m| m.task())?;
        let noise = NoiseSpec::new(self.kind, self.q)?;
        let mut pipeline = PipelineConfig::new(merit, self.n, noise);
        if self.q_a.is_some() || self.s.is_some() {
            pipeline.robustness = Some(RobustnessSpec {
                q_a: self.q_a,
                s: self.s,
            });
        }
        pipeline.validate()?;
        Ok(EvalContext {
            pipeline,
            theta: self.theta,
        })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub config: OptimizeConfig,
    pub result: OptimizationResult,
}

pub fn run_optimize(cfg: &OptimizeConfig) -> Result<OptimizeReport> {
    let ctx = cfg.context()?;
    let merits = MeritRegistry::builtin();
    let merit = merits.get(&cfg.task)?;
    let result = optimize_merit(merit, &ctx, &cfg.optimizer, &OptimizerRegistry::builtin())?;
    Ok(OptimizeReport {
        config: cfg.clone(),
        result,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRow {
    pub metric: &'static str,
    pub n: usize,
    pub kind: NoiseKind,
    /// `None` when no closed form exists.
    pub residual: Option<f64>,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        self.residual.is_none_or(|r| r < VERIFY_TOL)
    }
}

pub fn verify_passed(rows: &[VerifyRow]) -> bool {
    rows.iter().all(VerifyRow::passed)
}

/// Uniform grid over the kind's range.
pub fn q_grid(kind: NoiseKind, points: usize) -> Vec<f64> {
    let (min, max) = kind.q_range();
    GridSpec::Range { min, max, points }.values()
}

/// Max `|closed form - simulation|` over a 50-point grid for every
/// `(metric, n, kind)`, simulating the reference encodings with the full
/// density-matrix pipeline.
pub fn verify_table() -> Result<Vec<VerifyRow>> {
    const POINTS: usize = 50;
    let mut rows = Vec::new();
    for kind in [NoiseKind::Dephasing, NoiseKind::Depolarizing] {
        for (metric, label) in [(Metric::P, "P"), (Metric::F, "F"), (Metric::BetaFix, "beta_fix")] {
            for n in 0..=MAX_ANCILLAS {
                let supported = closed_form(metric, n, &NoiseSpec::new(kind, 1.0)?).is_ok()
                    && reference_encoding(n, kind).is_some();
                let residual = if supported {
                    let u = reference_encoding(n, kind).expect("checked above");
                    let mut worst: f64 = 0.0;
                    for q in q_grid(kind, POINTS) {
                        let noise = NoiseSpec::new(kind, q)?;
                        let want = closed_form(metric, n, &noise)?;
                        let got = simulate_metric(metric, n, &noise, &u)?;
                        worst = worst.max((want - got).abs());
                    }
                    Some(worst)
                } else {
                    None
                };
                rows.push(VerifyRow {
                    metric: label,
                    n,
                    kind,
                    residual,
                });
            }
        }
    }
    for n in 0..=MAX_ANCILLAS {
        let residual = match (n, reference_encoding(n, NoiseKind::Depolarizing)) {
            (0 | 1, Some(u)) => {
                let mut worst: f64 = 0.0;
                for q in q_grid(NoiseKind::Depolarizing, POINTS) {
                    let noise = NoiseSpec::depolarizing(q)?;
                    let cfg = PipelineConfig::qfi(n, noise);
                    let (rho, drho) = derivative_pipeline_unitary(&cfg, &u, 0.0)?;
                    worst = worst.max((qfi(&rho, &drho)? - closed_form_qfi(n, q)?).abs());
                }
                Some(worst)
            }
            _ => None,
        };
        rows.push(VerifyRow {
            metric: "Q",
            n,
            kind: NoiseKind::Depolarizing,
            residual,
        });
    }
    // Pauli-twirl evaluation against the one-ancilla closed forms
    for kind in [NoiseKind::Dephasing, NoiseKind::Depolarizing] {
        let u = ansatz_unitary(1, kind)?;
        let mut worst: f64 = 0.0;
        for q in q_grid(kind, POINTS) {
            let noise = NoiseSpec::new(kind, q)?;
            let (p, f) = pauli_average_oracle(&u, &noise)?;
            worst = worst
                .max((p - closed_form(Metric::P, 1, &noise)?).abs())
                .max((f - closed_form(Metric::F, 1, &noise)?).abs());
        }
        rows.push(VerifyRow {
            metric: "pauli_oracle",
            n: 1,
            kind,
            residual: Some(worst),
        });
    }
    Ok(rows)
}

/// Reference-pipeline value of `metric` for encoding `u`.
pub fn simulate_metric(metric: Metric, n: usize, noise: &NoiseSpec, u: &ComplexMatrix) -> Result<f64> {
    let cfg = PipelineConfig::fidelity(n, *noise);
    let out = run_filtration_unitary(&cfg, u, &cfg.default_input(0.0))?;
    match metric {
        Metric::P => Ok(out.probability),
        Metric::F => fidelity_phi_plus(&out.state),
        Metric::BetaFix => chsh_value(&out.state, &fixed_settings(noise)),
    }
}

pub struct VerifyTable<'a>(pub &'a [VerifyRow]);

impl fmt::Display for VerifyTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14} {:>2}  {:<13} {:>14}  status", "metric", "n", "kind", "max_residual")?;
        for r in self.0 {
            let (res, status) = match r.residual {
                Some(x) => (format!("{x:.3e}"), if r.passed() { "ok" } else { "FAIL" }),
                None => ("-".to_string(), "unsupported"),
            };
            writeln!(
                f,
                "{:<14} {:>2}  {:<13} {:>14}  {}",
                r.metric,
                r.n,
                r.kind.name(),
                res,
                status
            )?;
        }
        Ok(())
    }
}

/// Matrix printout with fixed precision; tiny entries print as zero.
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let mut s = String::new();
    for i in 0..m.dim() {
        let cells: Vec<String> = (0..m.dim())
            .map(|j| {
                let z = m[(i, j)];
                format!("{:+.4}{:+.4}i", clean(z.re), clean(z.im))
            })
            .collect();
        s.push_str(&cells.join("  "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = GridSpec::Range {
            min: 1.0 / 3.0,
            max: 1.0,
            points: 21,
        }
        .values();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 1.0 / 3.0);
        assert_eq!(g[20], 1.0);
        assert_eq!(GridSpec::Values(vec![0.5]).values(), vec![0.5]);
    }

    #[test]
    fn config_parsing() {
        let c = SweepConfig::from_json(
            r#"{"task": "fidelity", "kind": "dephasing", "q": [0.5], "n": [1]}"#,
        )
        .unwrap();
        assert_eq!(c.optimizer.restarts, 8);
        assert!(SweepConfig::from_json(r#"{"task": "fidelity", "kind": "depolarizing", "q": [0.2]}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"task": "nope", "kind": "dephasing"}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"task": "qfi", "kind": "dephasing", "n": [4]}"#).is_err());
        let r = SweepConfig::from_json(
            r#"{"task": "fidelity", "kind": "depolarizing", "robustness": {"param": "s"}}"#,
        )
        .unwrap();
        assert_eq!(r.points().len(), 21);
        assert_eq!(r.points()[0].1.unwrap().s, Some(0.5));
    }

    #[test]
    fn closed_form_rows() {
        let noise = NoiseSpec::depolarizing(0.6).unwrap();
        assert!(closed_form_row("qfi", 1, &noise, None, 0.0).is_some());
        assert!(closed_form_row("qfi", 1, &noise, None, 0.3).is_none());
        assert!(closed_form_row("chsh-fixed", 2, &noise, None, 0.0).is_none());
        let r = RobustnessSpec {
            q_a: Some(0.5),
            s: None,
        };
        assert!(closed_form_row("fidelity", 1, &noise, Some(r), 0.0).is_none());
    }

    #[test]
    fn verify_table_marks_unsupported() {
        let rows = verify_table().unwrap();
        assert!(verify_passed(&rows));
        let beta3 = rows
            .iter()
            .find(|r| r.metric == "beta_fix" && r.n == 3 && r.kind == NoiseKind::Dephasing)
            .unwrap();
        assert!(beta3.residual.is_none());
        let text = VerifyTable(&rows).to_string();
        assert!(text.contains("unsupported"));
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            task: "qfi".into(),
            kind: NoiseKind::Depolarizing,
            n: 0,
            q: 0.6,
            q_a: None,
            s: None,
            value: 0.36,
            probability: 1.0,
            source: Source::ClosedForm,
            restarts: None,
            iterations: None,
            seed: None,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "task,kind,n,q,q_a,s,value,probability,source,restarts,iterations,seed\n\
             qfi,depolarizing,0,0.6,,,0.36,1,closed_form,,,\n"
        );
    }
}
