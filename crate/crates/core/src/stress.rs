//! Seeded ratio stress runs over a mixed instance pool.
//!
//! Each trial draws its instance from a ChaCha8 stream selected by the trial
//! index, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::simulate;
use crate::error::{Error, Result};
use crate::instances::{
    gen_case1, gen_case2, gen_one_one_two, gen_random, jitter_releases, ProcDistribution, RandomSpec,
};
use crate::model::{Instance, PolicyParams};
use crate::opt::{exact_opt, lower_bound};

#[derive(Debug, Clone, PartialEq)]
pub struct StressConfig {
    pub policies: Vec<(String, PolicyParams)>,
    pub m: usize,
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub node_budget: u64,
    /// Release jitter for perturbed hard instances and the release gap of one-one-two.
    pub eps: f64,
    pub lower_bound_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolKind {
    Random,
    OneOneTwo,
    Case1,
    Case2,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub kind: PoolKind,
    pub policy: String,
    pub n: usize,
    pub alg: f64,
    pub opt: f64,
    pub ratio: f64,
    pub certified: bool,
}

impl TrialRow {
    pub const CSV_HEADER: &'static str = "trial,kind,policy,n,alg,opt,ratio,certified";

    pub fn csv_line(&self) -> String {
        let kind = serde_json::to_value(self.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.trial, kind, self.policy, self.n, self.alg, self.opt, self.ratio, self.certified
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub trials: usize,
    pub certified_count: usize,
    /// Worst ratio over certified trials (1 when none are certified).
    pub worst_ratio: f64,
    pub worst_trial: Option<usize>,
    pub worst_instance: Option<Instance>,
    /// Worst ratio against a lower bound only; an upper bound on the true ratio.
    pub worst_uncertified: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressReport {
    pub trials: usize,
    pub worst_ratio: f64,
    pub worst_instance: Option<Instance>,
    pub certified_count: usize,
    pub per_policy: Vec<PolicySummary>,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

/// The instance for one trial.
pub fn pool_instance(cfg: &StressConfig, trial: usize) -> Result<(PoolKind, Instance)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let m = cfg.m;
    let mut hard: Vec<(PoolKind, Instance)> = Vec::new();
    if m >= 2 && m < cfg.n_max {
        hard.push((PoolKind::OneOneTwo, gen_one_one_two(m, cfg.eps)?));
    }
    if m >= 2 && m <= cfg.n_max {
        hard.push((PoolKind::Case1, gen_case1(m)?));
    }
    if m >= 6 && m + 3 <= cfg.n_max {
        hard.push((PoolKind::Case2, gen_case2(m, 1.0 / (2.0 * (m as f64 - 1.0)), cfg.eps)?));
    }

    let slot = trial % 10;
    if !hard.is_empty() && slot < 2 {
        let (kind, inst) = hard[(trial / 10) % hard.len()].clone();
        if slot == 0 {
            return Ok((kind, inst));
        }
        let jitter_seed = rng.gen();
        return Ok((PoolKind::Perturbed, jitter_releases(&inst, cfg.eps, jitter_seed)));
    }

    let proc = match rng.gen_range(0..3) {
        0 => ProcDistribution::Uniform { lo: 0.1, hi: 1.0 },
        1 => ProcDistribution::Geometric { ratio: 0.5 },
        _ => ProcDistribution::TwoClass { small: 1.0, large: 2.0, fraction: 0.3 },
    };
    let release_span = [0.0, 0.5, 1.0, 2.0][rng.gen_range(0..4)];
    let spec = RandomSpec { seed: rng.gen(), n: rng.gen_range(1..=cfg.n_max), m, release_span, proc };
    Ok((PoolKind::Random, gen_random(&spec)?))
}

fn run_trial(cfg: &StressConfig, trial: usize) -> Result<(Instance, Vec<TrialRow>)> {
    let (kind, inst) = pool_instance(cfg, trial)?;
    let (opt, certified) = if cfg.lower_bound_only {
        (lower_bound(&inst), false)
    } else {
        let r = exact_opt(&inst, cfg.node_budget)?;
        (r.value, r.exact)
    };
    let rows = cfg
        .policies
        .iter()
        .map(|(name, params)| {
            let alg = simulate(&inst, params)?.makespan;
            Ok(TrialRow { trial, kind, policy: name.clone(), n: inst.n(), alg, opt, ratio: alg / opt, certified })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((inst, rows))
}

pub fn run_stress(cfg: &StressConfig) -> Result<StressReport> {
    if cfg.policies.is_empty() {
        return Err(Error::InvalidArgument("stress needs at least one policy".into()));
    }
    if cfg.m == 0 || cfg.n_max == 0 {
        return Err(Error::InvalidArgument("stress needs m >= 1 and n >= 1".into()));
    }
    for (_, p) in &cfg.policies {
        p.validate()?;
    }
    let results = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<Vec<_>>>()?;

    let mut per_policy: Vec<PolicySummary> = cfg
        .policies
        .iter()
        .map(|(name, _)| PolicySummary {
            policy: name.clone(),
            trials: 0,
            certified_count: 0,
            worst_ratio: 1.0,
            worst_trial: None,
            worst_instance: None,
            worst_uncertified: None,
        })
        .collect();
    let mut rows = Vec::new();
    let mut certified_trials = 0;
    for (inst, trial_rows) in results {
        if trial_rows.first().is_some_and(|r| r.certified) {
            certified_trials += 1;
        }
        for (summary, row) in per_policy.iter_mut().zip(&trial_rows) {
            summary.trials += 1;
            if row.certified {
                summary.certified_count += 1;
                if row.ratio > summary.worst_ratio || summary.worst_trial.is_none() {
                    summary.worst_ratio = row.ratio;
                    summary.worst_trial = Some(row.trial);
                    summary.worst_instance = Some(inst.clone());
                }
            } else {
                summary.worst_uncertified = Some(summary.worst_uncertified.map_or(row.ratio, |w| w.max(row.ratio)));
            }
        }
        rows.extend(trial_rows);
    }

    let worst =
        per_policy.iter().filter(|s| s.worst_trial.is_some()).max_by(|a, b| a.worst_ratio.total_cmp(&b.worst_ratio));
    Ok(StressReport {
        trials: cfg.trials,
        worst_ratio: worst.map_or(1.0, |s| s.worst_ratio),
        worst_instance: worst.and_then(|s| s.worst_instance.clone()),
        certified_count: certified_trials,
        per_policy,
        rows,
    })
}
