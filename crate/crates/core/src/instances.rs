//! Hard instances for the policy family and seeded random instances.
//!
//! Random instances use ChaCha8 seeded from a `u64`, which produces the same
//! stream on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Job};

pub const DEFAULT_EPS: f64 = 1e-6;

/// Two unit jobs at time 0, then `m − 1` jobs of size 2 released at `eps`.
pub fn gen_one_one_two(m: usize, eps: f64) -> Result<Instance> {
    if m < 2 {
        return Err(Error::InvalidArgument("one-one-two needs m >= 2".into()));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let mut pairs = vec![(0.0, 1.0), (0.0, 1.0)];
    pairs.extend(std::iter::repeat_n((eps, 2.0), m - 1));
    Ok(Instance::from_pairs(m, &pairs))
}

/// `m` unit jobs released at time 0.
pub fn gen_case1(m: usize) -> Result<Instance> {
    if m < 2 {
        return Err(Error::InvalidArgument("case 1 needs m >= 2".into()));
    }
    Ok(Instance::from_pairs(m, &vec![(0.0, 1.0); m]))
}

/// Size of the first job of the geometric prefix in [`gen_case2`].
pub fn case2_p1(alpha: f64) -> f64 {
    1.0 / (1.0 + (1.0 - alpha).powi(5))
}

/// Six jobs at time 0 with geometrically shrinking sizes `(1−α)^(i−1)·p₁`, so
/// that under static locking they all finish at `p₁`, followed by `m − 3`
/// equal jobs released just after the sixth one starts. Jobs are numbered
/// `1..=m+3`.
pub fn gen_case2(m: usize, alpha: f64, eps: f64) -> Result<Instance> {
    if m < 6 {
        return Err(Error::InvalidArgument("case 2 needs m >= 6".into()));
    }
    let upper = 1.0 / (2.0 * (m as f64 - 1.0));
    if !(alpha > 0.0 && alpha <= upper) {
        return Err(Error::InvalidArgument(format!("case 2 needs 0 < alpha <= {upper}, got {alpha}")));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let p1 = case2_p1(alpha);
    let head = 1.0 - (1.0 - alpha).powi(5);
    let mut jobs: Vec<Job> = (1..=6).map(|i| Job::new(i, 0.0, (1.0 - alpha).powi(i as i32 - 1) * p1)).collect();
    let late_release = head * p1 + eps;
    let late_proc = 1.0 - head * p1;
    jobs.extend((7..=m as u64 + 3).map(|i| Job::new(i, late_release, late_proc)));
    Ok(Instance::new(m, jobs))
}

/// Limit ratio of the static policy on the case 2 family as `eps → 0`.
pub fn f_case2(alpha: f64) -> f64 {
    let q = (1.0 - alpha).powi(5);
    1.0 / (1.0 + q) + (1.0 + 2.0 * alpha) * (1.0 - (1.0 - q) / (1.0 + q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `ratio^k` with `k` uniform in `0..8`.
    Geometric {
        ratio: f64,
    },
    /// `large` with probability `fraction`, else `small`.
    TwoClass {
        small: f64,
        large: f64,
        fraction: f64,
    },
}

impl ProcDistribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProcDistribution::Uniform { lo, hi } => lo > 0.0 && hi >= lo && hi.is_finite(),
            ProcDistribution::Geometric { ratio } => ratio > 0.0 && ratio.is_finite(),
            ProcDistribution::TwoClass { small, large, fraction } => {
                small > 0.0 && large > 0.0 && large.is_finite() && (0.0..=1.0).contains(&fraction)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid processing-time distribution {self:?}")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ProcDistribution::Uniform { lo, hi } if lo == hi => lo,
            ProcDistribution::Uniform { lo, hi } => rng.gen_range(lo..hi),
            ProcDistribution::Geometric { ratio } => ratio.powi(rng.gen_range(0..8)),
            ProcDistribution::TwoClass { small, large, fraction } => {
                if rng.gen_bool(fraction) {
                    large
                } else {
                    small
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub release_span: f64,
    pub proc: ProcDistribution,
}

/// Releases uniform in `[0, release_span]`, sizes drawn from `proc`.
pub fn gen_random(spec: &RandomSpec) -> Result<Instance> {
    if spec.n == 0 {
        return Err(Error::InvalidArgument("random instance needs n >= 1".into()));
    }
    if spec.m == 0 {
        return Err(Error::InvalidArgument("random instance needs m >= 1".into()));
    }
    if !(spec.release_span >= 0.0 && spec.release_span.is_finite()) {
        return Err(Error::InvalidArgument("release span must be non-negative".into()));
    }
    spec.proc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let jobs = (1..=spec.n as u64)
        .map(|id| {
            let release = if spec.release_span > 0.0 { rng.gen_range(0.0..=spec.release_span) } else { 0.0 };
            let proc = spec.proc.sample(&mut rng);
            Job::new(id, release, proc)
        })
        .collect();
    Ok(Instance::new(spec.m, jobs))
}

/// Moves every release by at most `eps` (never below zero), deterministically from `seed`.
pub fn jitter_releases(inst: &Instance, eps: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs =
        inst.jobs.iter().map(|j| Job { release: (j.release + rng.gen_range(-eps..=eps)).max(0.0), ..*j }).collect();
    Instance::new(inst.m, jobs)
}
