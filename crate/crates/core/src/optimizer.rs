//! Multi-start maximizers behind a name-keyed registry.
//!
//! An objective maps a parameter vector to `(value, probability)`; errors
//! score as negative infinity. Each restart draws its own starting point
//! from a ChaCha8 stream seeded with `seed + restart`, and restarts run in
//! parallel with results merged by index.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Objective<'a> = dyn Fn(&[f64]) -> Result<(f64, f64)> + Sync + 'a;

/// Above this many parameters the default method switches to SPSA.
pub const GRADIENT_DIM_LIMIT: usize = 80;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Registry name; `None` picks by dimension.
    pub method: Option<String>,
    pub max_iters: usize,
    pub step: f64,
    /// Per-iteration step decay for SPSA.
    pub step_decay: f64,
    pub fd_step: f64,
    pub spsa_perturbation: f64,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    /// Window (iterations) over which the best value must improve by `tol`.
    pub patience: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: None,
            max_iters: 5000,
            step: 0.05,
            step_decay: 0.999,
            fd_step: 1e-5,
            spsa_perturbation: 0.1,
            restarts: 8,
            seed: 0,
            tol: 1e-8,
            patience: 100,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("optimizer {what} must be positive")));
        if self.max_iters == 0 {
            return bad("max_iters");
        }
        if self.restarts == 0 {
            return bad("restarts");
        }
        if self.patience == 0 {
            return bad("patience");
        }
        if !(self.step > 0.0) {
            return bad("step");
        }
        if !(self.fd_step > 0.0) {
            return bad("fd_step");
        }
        if !(self.spsa_perturbation > 0.0) {
            return bad("spsa_perturbation");
        }
        if !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return Err(Error::Config("step_decay must lie in (0, 1]".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config("tol must be non-negative".into()));
        }
        Ok(())
    }

    pub fn method_for(&self, dim: usize) -> &str {
        match &self.method {
            Some(m) => m,
            None if dim <= GRADIENT_DIM_LIMIT => GradientAscent::NAME,
            None => Spsa::NAME,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub method: String,
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub best_probability: f64,
    pub iterations_used: usize,
    /// One entry per restart; failed restarts hold `null`.
    pub restart_values: Vec<Option<f64>>,
    pub seed: u64,
    /// Best-so-far value per iteration of the winning restart.
    #[serde(skip)]
    pub history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub params: Vec<f64>,
    pub value: f64,
    pub probability: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

impl RestartOutcome {
    pub fn failed(&self) -> bool {
        !self.value.is_finite()
    }
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Maximize from `init`. `rng` is this restart's private stream.
    fn run(
        &self,
        objective: &Objective<'_>,
        init: Vec<f64>,
        cfg: &OptimizerConfig,
        rng: &mut ChaCha8Rng,
    ) -> RestartOutcome;
}

pub struct OptimizerRegistry {
    entries: BTreeMap<&'static str, Box<dyn Optimizer>>,
}

impl OptimizerRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(GradientAscent));
        r.register(Box::new(Spsa));
        r
    }

    pub fn register(&mut self, opt: Box<dyn Optimizer>) {
        self.entries.insert(opt.name(), opt);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Optimizer> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "optimizer",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

/// Objective value with failures mapped to negative infinity.
fn score(objective: &Objective<'_>, p: &[f64]) -> (f64, f64) {
    match objective(p) {
        Ok((v, prob)) if v.is_finite() => (v, prob),
        _ => (f64::NEG_INFINITY, 0.0),
    }
}

/// Tracks the best point and the stopping rule shared by every method.
struct Tracker {
    best: Vec<f64>,
    value: f64,
    probability: f64,
    history: Vec<f64>,
}

impl Tracker {
    fn new(params: &[f64], (value, probability): (f64, f64)) -> Self {
        Self {
            best: params.to_vec(),
            value,
            probability,
            history: Vec::new(),
        }
    }

    fn offer(&mut self, params: &[f64], (value, probability): (f64, f64)) {
        if value > self.value {
            self.value = value;
            self.probability = probability;
            self.best.clear();
            self.best.extend_from_slice(params);
        }
        self.history.push(self.value);
    }

    fn stalled(&self, cfg: &OptimizerConfig) -> bool {
        let h = &self.history;
        if h.len() <= cfg.patience {
            return false;
        }
        let then = h[h.len() - 1 - cfg.patience];
        let now = h[h.len() - 1];
        if !now.is_finite() {
            // nothing finite seen for a whole window
            return true;
        }
        now - then < cfg.tol
    }

    fn finish(self) -> RestartOutcome {
        RestartOutcome {
            iterations: self.history.len(),
            params: self.best,
            value: self.value,
            probability: self.probability,
            history: self.history,
        }
    }
}

pub struct GradientAscent;

impl GradientAscent {
    pub const NAME: &'static str = "gradient-ascent";
}

impl Optimizer for GradientAscent {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    /// Adam steps along central finite-difference gradients.
    fn run(
        &self,
        objective: &Objective<'_>,
        init: Vec<f64>,
        cfg: &OptimizerConfig,
        _rng: &mut ChaCha8Rng,
    ) -> RestartOutcome {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let mut p = init;
        let mut tracker = Tracker::new(&p, score(objective, &p));
        let mut m = vec![0.0; p.len()];
        let mut v = vec![0.0; p.len()];
        let f = |x: &[f64]| score(objective, x).0;
        for t in 1..=cfg.max_iters {
            let g = gradient_fd(&f, &p, cfg.fd_step);
            let (c1, c2) = (1.0 - B1.powi(t as i32), 1.0 - B2.powi(t as i32));
            for i in 0..p.len() {
                m[i] = B1 * m[i] + (1.0 - B1) * g[i];
                v[i] = B2 * v[i] + (1.0 - B2) * g[i] * g[i];
                p[i] += cfg.step * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
            }
            tracker.offer(&p, score(objective, &p));
            if tracker.stalled(cfg) {
                break;
            }
        }
        tracker.finish()
    }
}

pub struct Spsa;

impl Spsa {
    pub const NAME: &'static str = "spsa";
}

impl Optimizer for Spsa {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn run(
        &self,
        objective: &Objective<'_>,
        init: Vec<f64>,
        cfg: &OptimizerConfig,
        rng: &mut ChaCha8Rng,
    ) -> RestartOutcome {
        let mut p = init;
        let mut tracker = Tracker::new(&p, score(objective, &p));
        let mut a = cfg.step;
        let mut plus = vec![0.0; p.len()];
        let mut minus = vec![0.0; p.len()];
        let mut delta = vec![0.0; p.len()];
        for k in 0..cfg.max_iters {
            let c = cfg.spsa_perturbation / ((k + 1) as f64).powf(0.101);
            for d in delta.iter_mut() {
                *d = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            }
            for i in 0..p.len() {
                plus[i] = p[i] + c * delta[i];
                minus[i] = p[i] - c * delta[i];
            }
            let fp = score(objective, &plus).0;
            let fm = score(objective, &minus).0;
            if fp.is_finite() && fm.is_finite() {
                let slope = (fp - fm) / (2.0 * c);
                for i in 0..p.len() {
                    p[i] += a * slope * delta[i];
                }
            }
            a *= cfg.step_decay;
            tracker.offer(&p, score(objective, &p));
            if tracker.stalled(cfg) {
                break;
            }
        }
        tracker.finish()
    }
}

/// Central differences `(f(p + h e_i) - f(p - h e_i)) / 2h`. Coordinates
/// with a non-finite probe get a zero entry.
pub fn gradient_fd(f: &dyn Fn(&[f64]) -> f64, params: &[f64], fd_step: f64) -> Vec<f64> {
    gradient_fd_flagged(f, params, fd_step).0
}

/// As [`gradient_fd`], also returning the indices that were zeroed.
pub fn gradient_fd_flagged(
    f: &dyn Fn(&[f64]) -> f64,
    params: &[f64],
    fd_step: f64,
) -> (Vec<f64>, Vec<usize>) {
    let mut x = params.to_vec();
    let mut grad = vec![0.0; params.len()];
    let mut flagged = Vec::new();
    for i in 0..params.len() {
        x[i] = params[i] + fd_step;
        let up = f(&x);
        x[i] = params[i] - fd_step;
        let down = f(&x);
        x[i] = params[i];
        let g = (up - down) / (2.0 * fd_step);
        if g.is_finite() {
            grad[i] = g;
        } else {
            flagged.push(i);
        }
    }
    (grad, flagged)
}

pub fn initial_point(dim: usize, seed: u64) -> (Vec<f64>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (0..dim).map(|_| rng.gen_range(0.0..TAU)).collect();
    (p, rng)
}

/// Multi-start maximization with the built-in registry.
pub fn optimize(objective: &Objective<'_>, dim: usize, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    optimize_with(&OptimizerRegistry::builtin(), objective, dim, cfg)
}

pub fn optimize_with(
    registry: &OptimizerRegistry,
    objective: &Objective<'_>,
    dim: usize,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let method = registry.get(cfg.method_for(dim))?;
    if dim == 0 {
        let (value, probability) = score(objective, &[]);
        if !value.is_finite() {
            return Err(Error::AllRestartsFailed);
        }
        return Ok(OptimizationResult {
            method: method.name().to_string(),
            best_params: Vec::new(),
            best_value: value,
            best_probability: probability,
            iterations_used: 0,
            restart_values: vec![Some(value)],
            seed: cfg.seed,
            history: vec![value],
        });
    }
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let (init, mut rng) = initial_point(dim, cfg.seed.wrapping_add(r as u64));
            method.run(objective, init, cfg, &mut rng)
        })
        .collect();

    let mut winner: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if o.failed() {
            continue;
        }
        // strict comparison keeps the lowest index on ties
        if winner.is_none_or(|w| o.value > outcomes[w].value) {
            winner = Some(i);
        }
    }
    let w = winner.ok_or(Error::AllRestartsFailed)?;
    let restart_values = outcomes
        .iter()
        .map(|o| (!o.failed()).then_some(o.value))
        .collect();
    let iterations_used = outcomes.iter().map(|o| o.iterations).sum();
    let best = &outcomes[w];
    Ok(OptimizationResult {
        method: method.name().to_string(),
        best_params: best.params.clone(),
        best_value: best.value,
        best_probability: best.probability,
        iterations_used,
        restart_values,
        seed: cfg.seed,
        history: best.history.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(c: Vec<f64>) -> impl Fn(&[f64]) -> Result<(f64, f64)> + Sync {
        move |p: &[f64]| {
            let d: f64 = p.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
            Ok((-d, 1.0))
        }
    }

    #[test]
    fn fd_gradient_of_quadratic() {
        let c = [0.3, -1.2, 2.0];
        let f = |p: &[f64]| -p.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let p = [1.0, 1.0, 1.0];
        let g = gradient_fd(&f, &p, 1e-5);
        for i in 0..3 {
            assert!((g[i] + 2.0 * (p[i] - c[i])).abs() < 1e-6);
        }
        let flat = gradient_fd(&|_: &[f64]| 4.2, &p, 1e-5);
        assert!(flat.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fd_flags_non_finite_probes() {
        let f = |p: &[f64]| if p[1] > 0.5 { f64::NEG_INFINITY } else { p[0] };
        let (g, flagged) = gradient_fd_flagged(&f, &[0.0, 0.5], 1e-3);
        assert_eq!(flagged, vec![1]);
        assert_eq!(g[1], 0.0);
        assert!((g[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn both_methods_find_a_quadratic_peak() {
        let obj = quadratic(vec![1.0, 2.0, 3.0, 4.0]);
        for method in ["gradient-ascent", "spsa"] {
            let cfg = OptimizerConfig {
                method: Some(method.into()),
                restarts: 2,
                max_iters: 3000,
                ..Default::default()
            };
            let r = optimize(&obj, 4, &cfg).unwrap();
            assert!(r.best_value > -1e-4, "{method}: {}", r.best_value);
            assert_eq!(r.method, method);
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let obj = |p: &[f64]| Ok((p.iter().map(|x| x.sin()).sum::<f64>(), 0.5));
        let cfg = OptimizerConfig {
            restarts: 3,
            max_iters: 300,
            seed: 11,
            ..Default::default()
        };
        let a = optimize(&obj, 5, &cfg).unwrap();
        let b = optimize(&obj, 5, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        let max = a.restart_values.iter().flatten().fold(f64::MIN, |m, &v| m.max(v));
        assert_eq!(max, a.best_value);
    }

    #[test]
    fn failing_objective() {
        let obj = |_: &[f64]| Err(Error::PostSelectionImpossible { raw_trace: 0.0 });
        let cfg = OptimizerConfig {
            restarts: 2,
            max_iters: 50,
            ..Default::default()
        };
        assert!(matches!(optimize(&obj, 3, &cfg), Err(Error::AllRestartsFailed)));
    }

    #[test]
    fn registry_lookup() {
        let reg = OptimizerRegistry::builtin();
        assert_eq!(reg.names(), vec!["gradient-ascent", "spsa"]);
        assert!(matches!(reg.get("newton"), Err(Error::UnknownName { .. })));
        let cfg = OptimizerConfig::default();
        assert_eq!(cfg.method_for(72), "gradient-ascent");
        assert_eq!(cfg.method_for(312), "spsa");
    }

    #[test]
    fn zero_dimensional_problem() {
        let obj = |_: &[f64]| Ok((0.75, 1.0));
        let r = optimize(&obj, 0, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.best_value, 0.75);
        assert!(r.best_params.is_empty());
    }
}
