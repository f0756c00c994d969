use std::collections::HashMap;

use serde::Serialize;

use super::Profile;
use crate::model::{JobId, ScheduleTrace, StartReason, StartRecord, TAU};

/// Backward locking chain from the last job and the critical jobs around it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    /// `n₁ = n, n₂, …, n_k`: each job was locked by the next one.
    pub chain: Vec<JobId>,
    /// Largest `α_j` over the chain.
    pub chain_alpha_max: f64,
    pub critical_jobs: Vec<JobId>,
    pub early: Vec<JobId>,
    pub late: Vec<JobId>,
    pub gamma: f64,
    pub gamma_prime: f64,
    /// End of the last idle period before `s_n`, or 0 when there is none.
    pub theta_plus: f64,
    /// `s_{n_{i−1}} − (s_{n_i} + α_{n_i}·p_{n_i})` for each link.
    pub link_gaps: Vec<f64>,
}

impl ChainReport {
    pub fn k(&self) -> usize {
        self.chain.len()
    }

    pub fn last_job(&self) -> JobId {
        self.chain[0]
    }

    pub fn links_ok(&self) -> bool {
        self.link_gaps.iter().all(|g| g.abs() <= 2.0 * TAU)
    }
}

/// The job finishing last: latest completion, then latest start, then highest id.
pub(crate) fn last_record(trace: &ScheduleTrace) -> Option<&StartRecord> {
    let latest = trace.starts.iter().map(|s| s.completion).fold(f64::NEG_INFINITY, f64::max);
    trace
        .starts
        .iter()
        .filter(|s| s.completion >= latest - TAU)
        .max_by(|a, b| a.start.total_cmp(&b.start).then(a.job.cmp(&b.job)))
}

/// Builds the chain report of a complete trace. Returns `None` for an empty trace.
pub fn extract_chain(trace: &ScheduleTrace, gamma: f64) -> Option<ChainReport> {
    let by_job: HashMap<JobId, &StartRecord> = trace.starts.iter().map(|s| (s.job, s)).collect();
    let last = last_record(trace)?;

    let mut chain = vec![last.job];
    let mut link_gaps = Vec::new();
    let mut current = last;
    while let StartReason::Locked(setter) = current.reason {
        let Some(prev) = by_job.get(&setter).copied() else { break };
        if chain.contains(&prev.job) {
            break;
        }
        link_gaps.push(current.start - (prev.start + prev.alpha_j * prev.proc()));
        chain.push(prev.job);
        current = prev;
    }

    let chain_alpha_max = chain.iter().map(|id| by_job[id].alpha_j).fold(0.0, f64::max);
    let chain_tail: f64 = chain.iter().skip(1).map(|id| by_job[id].proc()).sum();
    let gamma_prime = gamma - chain_alpha_max * chain_tail;

    let head_start = current.start;
    let mut critical_jobs = chain.clone();
    let mut running: Vec<&StartRecord> = trace
        .starts
        .iter()
        .filter(|s| s.start < head_start && head_start <= s.completion && !chain.contains(&s.job))
        .collect();
    running.sort_by_key(|s| s.machine);
    critical_jobs.extend(running.iter().map(|s| s.job));

    let r_n = trace.instance.job(last.job).map_or(0.0, |j| j.release);
    let (early, late): (Vec<JobId>, Vec<JobId>) = critical_jobs.iter().partition(|id| by_job[id].start < r_n);

    let theta_plus = Profile::new(trace)
        .idle_periods()
        .into_iter()
        .filter(|&(a, _)| a < last.start)
        .map(|(_, b)| b.min(last.start))
        .next_back()
        .unwrap_or(0.0);

    Some(ChainReport { chain, chain_alpha_max, critical_jobs, early, late, gamma, gamma_prime, theta_plus, link_gaps })
}
