use serde::{Deserialize, Serialize};

use super::checks::{self, SuiteHooks};
use super::config::ExperimentConfig;
use super::report::GofReport;
use crate::planar::SystemKind;
use crate::rng::SeedSpec;

/// Sample sizes of the Monte Carlo checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub draws: usize,
    pub euler_paths: usize,
    pub euler_steps: usize,
    pub equivalence_configs: usize,
    pub local_time_paths: usize,
    pub reversal_paths: usize,
    pub reversal_steps: usize,
    pub bridge_paths: usize,
    pub invariant_paths: usize,
}

impl SuiteSizes {
    /// Sizes of the acceptance battery.
    pub fn full() -> Self {
        Self {
            draws: 100_000,
            euler_paths: 100_000,
            euler_steps: 1000,
            equivalence_configs: 10_000,
            local_time_paths: 2000,
            reversal_paths: 100_000,
            reversal_steps: 1000,
            bridge_paths: 2000,
            invariant_paths: 4000,
        }
    }

    /// `paths` and `steps` of the config drive the sampling checks; the
    /// longer path studies use a tenth of `paths`.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let tenth = (cfg.paths / 10).max(100);
        Self {
            draws: cfg.paths,
            euler_paths: cfg.paths,
            euler_steps: cfg.steps,
            equivalence_configs: 10_000,
            local_time_paths: tenth,
            reversal_paths: cfg.paths,
            reversal_steps: cfg.steps,
            bridge_paths: tenth,
            invariant_paths: tenth,
        }
    }
}

/// [`run_validation_suite_with`] with sizes from the config and no faults.
pub fn run_validation_suite(cfg: &ExperimentConfig) -> Vec<GofReport> {
    run_validation_suite_with(cfg, &SuiteSizes::from_config(cfg), &SuiteHooks::default())
}

/// Every cross-check, in a fixed order. Failures are collected, never
/// short-circuited; each check draws from its own sub-stream of the seed.
pub fn run_validation_suite_with(cfg: &ExperimentConfig, sizes: &SuiteSizes, hooks: &SuiteHooks) -> Vec<GofReport> {
    let seed = SeedSpec::new(cfg.seed);
    let (p, s0, t) = (&cfg.params, cfg.initial, cfg.horizon);
    let lambda = p.lambda();
    let mut out = checks::check_classifier_counts();
    out.push(checks::check_criterion_equivalence(sizes.equivalence_configs, seed.child(1)));
    out.extend(checks::check_normalization(hooks));
    out.push(checks::check_chapman_kolmogorov());
    out.extend(checks::check_sampler_vs_density("config", p, s0, t, sizes.draws, seed.child(2)));
    out.extend(checks::check_euler_vs_exact(
        "config",
        p,
        s0,
        t,
        sizes.euler_paths,
        sizes.euler_steps,
        &[SystemKind::B, SystemKind::W, SystemKind::V],
        seed.child(3),
    ));
    out.extend(checks::check_path_identities(p, s0, t, sizes.euler_steps, seed.child(4)));
    out.push(checks::check_tanaka_vs_occupation(lambda, sizes.local_time_paths, seed.child(5)));
    out.push(checks::check_brownian_local_time(sizes.local_time_paths, seed.child(6)));
    let rates = checks::local_time_rates(lambda, 1.0, &checks::RATE_DTS, sizes.local_time_paths, seed.child(7));
    out.push(checks::rate_report(
        "Skorokhod formula vs Tanaka residual",
        &rates.dts,
        &rates.rms_skorokhod,
        sizes.local_time_paths,
    ));
    out.extend(checks::check_time_reversal_analytic());
    out.push(checks::check_steady_reversal(p, 1.0, sizes.reversal_steps, sizes.reversal_paths, seed.child(8)));
    out.extend(checks::check_transient_reversal(
        p,
        1.0,
        sizes.reversal_steps,
        sizes.bridge_paths,
        sizes.reversal_paths,
        seed.child(9),
    ));
    out.push(checks::check_invariant_law(lambda, sizes.invariant_paths, seed.child(10)));
    out
}
