//! Efficiency functionals of a schedule and the trace-level inequality checks
//! built on them.
//!
//! Every functional is piecewise constant between breakpoints (releases,
//! starts, completions, lock bounds), so integrals are exact sums over
//! elementary segments rather than numeric quadrature.

mod chain;
mod diagnose;

pub use chain::{extract_chain, ChainReport};
pub use diagnose::{diagnose_counterexample, Diagnosis, DiagnosticItem};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{JobId, ScheduleTrace, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalReport {
    pub t1: f64,
    pub t2: f64,
    pub busy_work: f64,
    pub waste: f64,
    pub extended_work: f64,
}

/// Outcome of checking `lhs <= rhs + TAU` over `[t1, t2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub t1: f64,
    pub t2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

impl InequalityCheck {
    fn new(t1: f64, t2: f64, lhs: f64, rhs: f64) -> Self {
        InequalityCheck { t1, t2, lhs, rhs, ok: lhs <= rhs + TAU }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeftoverReport {
    pub checks: Vec<InequalityCheck>,
    pub ok: bool,
}

impl LeftoverReport {
    pub fn tightest(&self) -> Option<&InequalityCheck> {
        self.checks.iter().min_by(|a, b| a.slack().total_cmp(&b.slack()))
    }
}

/// Per-segment machine counts of a trace.
#[derive(Debug, Clone)]
pub struct Profile {
    breakpoints: Vec<f64>,
    busy: Vec<f64>,
    waste: Vec<f64>,
    idle: Vec<f64>,
    busy_prefix: Vec<f64>,
    waste_prefix: Vec<f64>,
}

impl Profile {
    pub fn new(trace: &ScheduleTrace) -> Self {
        let breakpoints = breakpoints(trace);
        let m = trace.m();
        let releases = trace.records_by_job();
        let pending: Vec<(f64, f64)> = trace
            .instance
            .jobs
            .iter()
            .filter_map(|j| releases.get(&j.id).map(|s| (j.release, s.start)))
            .filter(|(r, s)| s > r)
            .collect();

        let segments = breakpoints.len().saturating_sub(1);
        let (mut busy, mut waste, mut idle) = (vec![0.0; segments], vec![0.0; segments], vec![0.0; segments]);
        for k in 0..segments {
            let mid = 0.5 * (breakpoints[k] + breakpoints[k + 1]);
            let mut busy_machines = vec![false; m];
            for s in &trace.starts {
                if s.start <= mid && mid < s.completion && s.machine < m {
                    busy_machines[s.machine] = true;
                }
            }
            let locked: Vec<bool> =
                trace.locks.iter().map(|list| list.iter().any(|l| l.from <= mid && mid < l.until)).collect();
            let n_busy = busy_machines.iter().filter(|&&b| b).count();
            let any_pending = pending.iter().any(|&(r, s)| r <= mid && mid < s);
            busy[k] = n_busy as f64;
            waste[k] = if any_pending { (m - n_busy) as f64 } else { 0.0 };
            idle[k] = (0..m).filter(|&i| !busy_machines[i] && !locked.get(i).copied().unwrap_or(false)).count() as f64;
        }
        let busy_prefix = prefix(&breakpoints, &busy);
        let waste_prefix = prefix(&breakpoints, &waste);
        Profile { breakpoints, busy, waste, idle, busy_prefix, waste_prefix }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn busy_work(&self, t1: f64, t2: f64) -> f64 {
        self.cumulative(&self.busy, &self.busy_prefix, t2) - self.cumulative(&self.busy, &self.busy_prefix, t1)
    }

    pub fn waste(&self, t1: f64, t2: f64) -> f64 {
        self.cumulative(&self.waste, &self.waste_prefix, t2) - self.cumulative(&self.waste, &self.waste_prefix, t1)
    }

    /// Maximal intervals (each longer than `TAU`) during which at least one machine is idle.
    pub fn idle_periods(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (k, &count) in self.idle.iter().enumerate() {
            let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
            if count == 0.0 || b - a <= TAU {
                continue;
            }
            match out.last_mut() {
                Some(last) if (last.1 - a).abs() <= TAU => last.1 = b,
                _ => out.push((a, b)),
            }
        }
        out
    }

    /// Segments inside `(t1, t2)` longer than `TAU` where some machine is idle.
    fn idle_within(&self, t1: f64, t2: f64) -> Option<f64> {
        self.idle.iter().enumerate().find_map(|(k, &count)| {
            let a = self.breakpoints[k].max(t1);
            let b = self.breakpoints[k + 1].min(t2);
            (count > 0.0 && b - a > TAU).then_some(a)
        })
    }

    fn cumulative(&self, counts: &[f64], prefix: &[f64], t: f64) -> f64 {
        let bp = &self.breakpoints;
        if counts.is_empty() || t <= bp[0] {
            return 0.0;
        }
        let last = bp.len() - 1;
        if t >= bp[last] {
            return prefix[last];
        }
        let k = bp.partition_point(|&b| b <= t) - 1;
        prefix[k] + counts[k] * (t - bp[k])
    }
}

fn prefix(bp: &[f64], counts: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(bp.len());
    out.push(0.0);
    for (k, c) in counts.iter().enumerate() {
        out.push(out[k] + c * (bp[k + 1] - bp[k]));
    }
    out
}

/// Sorted distinct event times of a trace: 0, releases, starts, completions and lock bounds.
pub fn breakpoints(trace: &ScheduleTrace) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend(trace.instance.jobs.iter().map(|j| j.release));
    for s in &trace.starts {
        v.push(s.start);
        v.push(s.completion);
    }
    for list in &trace.locks {
        for l in list {
            v.push(l.from);
            v.push(l.until);
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn check_interval(t1: f64, t2: f64) -> Result<()> {
    if t1 > t2 {
        Err(Error::InvalidArgument(format!("interval start {t1} exceeds end {t2}")))
    } else {
        Ok(())
    }
}

/// Machine time spent processing within `[t1, t2)`.
pub fn busy_work(trace: &ScheduleTrace, t1: f64, t2: f64) -> Result<f64> {
    check_interval(t1, t2)?;
    Ok(trace.starts.iter().map(|s| (s.completion.min(t2) - s.start.max(t1)).max(0.0)).sum())
}

/// Machine time within `[t1, t2)` spent not processing while some job is pending.
pub fn waste(trace: &ScheduleTrace, t1: f64, t2: f64) -> Result<f64> {
    check_interval(t1, t2)?;
    Ok(Profile::new(trace).waste(t1, t2))
}

/// Work of jobs started in `[t1, t2)` plus the remainder of jobs straddling `t1`.
pub fn extended_work(trace: &ScheduleTrace, t1: f64, t2: f64) -> Result<f64> {
    check_interval(t1, t2)?;
    Ok(trace
        .starts
        .iter()
        .map(|s| {
            if t1 <= s.start && s.start < t2 {
                s.proc()
            } else if s.start < t1 && t1 < s.completion {
                s.completion - t1
            } else {
                0.0
            }
        })
        .sum())
}

pub fn interval_report(trace: &ScheduleTrace, t1: f64, t2: f64) -> Result<IntervalReport> {
    Ok(IntervalReport {
        t1,
        t2,
        busy_work: busy_work(trace, t1, t2)?,
        waste: waste(trace, t1, t2)?,
        extended_work: extended_work(trace, t1, t2)?,
    })
}

/// Waste against `(m − 1)·α·P̂` over `[t1, t2)`, with α the policy's base parameter.
pub fn check_waste_bound(trace: &ScheduleTrace, t1: f64, t2: f64) -> Result<InequalityCheck> {
    let profile = Profile::new(trace);
    waste_bound_with(trace, &profile, t1, t2)
}

/// Same as [`check_waste_bound`] reusing a precomputed profile.
pub fn waste_bound_with(trace: &ScheduleTrace, profile: &Profile, t1: f64, t2: f64) -> Result<InequalityCheck> {
    check_interval(t1, t2)?;
    let alpha = trace.policy.map_or(0.0, |p| p.alpha);
    let lhs = profile.waste(t1, t2);
    let rhs = (trace.m() as f64 - 1.0) * alpha * extended_work(trace, t1, t2)?;
    Ok(InequalityCheck::new(t1, t2, lhs, rhs))
}

/// Left-over inequality `P_opt(0,t) − P_alg(0,t) <= m·t/4 + W_alg(0,t)` at every
/// breakpoint of either trace up to `t`, and at `t` itself.
pub fn check_leftover(alg: &ScheduleTrace, opt: &ScheduleTrace, t: f64) -> Result<LeftoverReport> {
    if alg.instance != opt.instance {
        return Err(Error::InvalidArgument("traces belong to different instances".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    let alg_profile = Profile::new(alg);
    let opt_profile = Profile::new(opt);
    let mut points: Vec<f64> =
        alg_profile.breakpoints().iter().chain(opt_profile.breakpoints()).copied().filter(|&b| b <= t).collect();
    points.push(t);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let m = alg.m() as f64;
    let checks: Vec<InequalityCheck> = points
        .into_iter()
        .map(|x| {
            let lhs = opt_profile.busy_work(0.0, x) - alg_profile.busy_work(0.0, x);
            let rhs = 0.25 * m * x + alg_profile.waste(0.0, x);
            InequalityCheck::new(0.0, x, lhs, rhs)
        })
        .collect();
    let ok = checks.iter().all(|c| c.ok);
    Ok(LeftoverReport { checks, ok })
}

/// Jobs whose delay `(r_j, s_j)` contains an instant with an idle machine
/// (neither busy nor locked), with the first such instant.
pub fn idle_during_delay(trace: &ScheduleTrace) -> Vec<(JobId, f64)> {
    let profile = Profile::new(trace);
    let by_job = trace.records_by_job();
    trace
        .instance
        .jobs
        .iter()
        .filter_map(|j| {
            let s = by_job.get(&j.id)?;
            profile.idle_within(j.release, s.start).map(|t| (j.id, t))
        })
        .collect()
}
