mod common;

use rand::Rng;

use qfilt::channels::NoiseSpec;
use qfilt::optimizer::{
    gradient_fd, optimize_with, GradientAscent, Optimizer, OptimizerConfig, OptimizerRegistry,
    RestartOutcome, Spsa,
};
use qfilt::tasks::{optimize_merit, ChshOpt, EvalContext, FigureOfMerit, Fidelity};
use qfilt::Result;

use common::{oracle, rng};

fn fidelity_ctx(n: usize, q: f64) -> EvalContext {
    EvalContext::new(Fidelity.pipeline(n, NoiseSpec::dephasing(q).unwrap()))
}

fn quick(restarts: usize) -> OptimizerConfig {
    OptimizerConfig {
        restarts,
        max_iters: 400,
        ..OptimizerConfig::default()
    }
}

#[test]
fn central_differences_agree_with_fourth_order_stencil() {
    let ctx = fidelity_ctx(1, 0.6);
    let f = |p: &[f64]| Fidelity.evaluate(&ctx, p).unwrap().value;
    let mut r = rng(17);
    for _ in 0..10 {
        let p: Vec<f64> = (0..15).map(|_| r.gen_range(0.0..6.3)).collect();
        let g = gradient_fd(&f, &p, 1e-5);
        let h = 1e-3;
        for i in 0..p.len() {
            let at = |k: f64| {
                let mut x = p.clone();
                x[i] += k * h;
                f(&x)
            };
            let stencil = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
            assert!((g[i] - stencil).abs() < 1e-4, "coordinate {i}: {} vs {stencil}", g[i]);
        }
    }
}

#[test]
fn reruns_are_bit_identical() {
    let ctx = fidelity_ctx(1, 0.4);
    let reg = OptimizerRegistry::builtin();
    for method in [GradientAscent::NAME, Spsa::NAME] {
        let cfg = OptimizerConfig {
            method: Some(method.into()),
            seed: 99,
            ..quick(3)
        };
        let a = optimize_merit(&Fidelity, &ctx, &cfg, &reg).unwrap();
        let b = optimize_merit(&Fidelity, &ctx, &cfg, &reg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history, b.history);
    }
}

#[test]
fn best_so_far_never_decreases() {
    let ctx = fidelity_ctx(1, 0.3);
    let reg = OptimizerRegistry::builtin();
    for method in [GradientAscent::NAME, Spsa::NAME] {
        let cfg = OptimizerConfig {
            method: Some(method.into()),
            ..quick(2)
        };
        let res = optimize_merit(&Fidelity, &ctx, &cfg, &reg).unwrap();
        assert!(!res.history.is_empty());
        assert!(res.history.windows(2).all(|w| w[1] >= w[0]), "{method}");
        assert_eq!(*res.history.last().unwrap(), res.best_value);
    }
}

/// Keeps the starting point; lets the test confirm that custom strategies
/// are reachable by name.
struct StayPut;

impl Optimizer for StayPut {
    fn name(&self) -> &'static str {
        "stay-put"
    }

    fn run(
        &self,
        objective: &qfilt::optimizer::Objective<'_>,
        init: Vec<f64>,
        _cfg: &OptimizerConfig,
        _rng: &mut rand_chacha::ChaCha8Rng,
    ) -> RestartOutcome {
        let (value, probability) = objective(&init).unwrap_or((f64::NAN, 0.0));
        RestartOutcome {
            params: init,
            value,
            probability,
            iterations: 1,
            history: vec![value],
        }
    }
}

#[test]
fn custom_strategies_plug_into_the_registry() {
    let mut reg = OptimizerRegistry::builtin();
    reg.register(Box::new(StayPut));
    assert!(reg.names().contains(&"stay-put"));
    let objective = |p: &[f64]| -> Result<(f64, f64)> { Ok((-p.iter().map(|x| x * x).sum::<f64>(), 1.0)) };
    let cfg = OptimizerConfig {
        method: Some("stay-put".into()),
        restarts: 4,
        ..OptimizerConfig::default()
    };
    let res = optimize_with(&reg, &objective, 3, &cfg).unwrap();
    assert_eq!(res.method, "stay-put");
    assert_eq!(res.iterations_used, 4);
    let best = res.restart_values.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best, res.best_value);
}

#[test]
fn baseline_needs_no_search() {
    for q in common::grid(0.0, 1.0, 5) {
        let ctx = fidelity_ctx(0, q);
        let res = optimize_merit(&Fidelity, &ctx, &OptimizerConfig::default(), &OptimizerRegistry::builtin()).unwrap();
        assert!((res.best_value - (1.0 + q) / 2.0).abs() <= f64::EPSILON, "{}", res.best_value);
        assert!(res.best_params.is_empty());
    }
}

#[test]
fn more_ancillas_never_do_worse_at_the_optimum() {
    let reg = OptimizerRegistry::builtin();
    let cfg = OptimizerConfig {
        restarts: 4,
        ..OptimizerConfig::default()
    };
    for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let best: Vec<f64> = (0..=2)
            .map(|n| optimize_merit(&Fidelity, &fidelity_ctx(n, q), &cfg, &reg).unwrap().best_value)
            .collect();
        assert!(best[1] >= best[0] - 1e-3, "q={q}: {best:?}");
        assert!(best[2] >= best[1] - 1e-3, "q={q}: {best:?}");
    }
}

#[test]
fn optimized_angles_reach_the_fixed_setting_value() {
    let q = 0.6;
    let ctx = EvalContext::new(ChshOpt.pipeline(1, NoiseSpec::dephasing(q).unwrap()));
    let res = optimize_merit(&ChshOpt, &ctx, &OptimizerConfig::default(), &OptimizerRegistry::builtin()).unwrap();
    assert!(res.best_value >= oracle::deph_beta(1, q) - 1e-3, "{}", res.best_value);
    assert!(res.best_value <= 2.0 * std::f64::consts::SQRT_2 + 1e-12);
}
