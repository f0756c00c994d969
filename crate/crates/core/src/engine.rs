//! Discrete-event simulator for the Generalized SLEEPY family.
//!
//! Decision epochs are release times, completion times and lock expiries.
//! Event times within [`TAU`] of each other collapse into one epoch located
//! at the latest of them, so every start is exactly at or after the release,
//! completion and lock expiry it waited for. Within an epoch, state changes
//! (completions, expiries) apply first, then releases are admitted, then the
//! dispatch loop runs to a fixpoint.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::{
    ensure_valid, Instance, Job, JobId, LockInterval, PolicyParams, ScheduleTrace, StartReason, StartRecord, TAU,
};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MachineState {
    pub busy_until: f64,
    pub busy_job: Option<JobId>,
    pub lock_until: f64,
    /// Job whose lock expires last.
    pub lock_setter: Option<JobId>,
}

impl MachineState {
    fn is_idle(&self, t: f64) -> bool {
        let free = self.busy_job.is_none() || self.busy_until <= t;
        let unlocked = self.lock_setter.is_none() || self.lock_until <= t;
        free && unlocked
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Epoch(f64);

impl Eq for Epoch {}

impl PartialOrd for Epoch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Epoch {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Min-queue of pending event times with tolerance merging on pop.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Epoch>>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: f64) {
        self.heap.push(Reverse(Epoch(t)));
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Removes the earliest event together with every event within `TAU`
    /// of it and returns the latest removed time.
    pub fn pop_epoch(&mut self) -> Option<f64> {
        let Reverse(Epoch(first)) = self.heap.pop()?;
        let mut t = first;
        while let Some(Reverse(Epoch(next))) = self.heap.peek().copied() {
            if next > first + TAU {
                break;
            }
            self.heap.pop();
            t = t.max(next);
        }
        Some(t)
    }
}

/// Locking parameter `λ^(−s/p)·α` of a job of size `p` started at `s`.
pub fn alpha_of(params: &PolicyParams, s: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::InvalidArgument(format!("processing time must be positive, got {p}")));
    }
    if params.lambda == 1.0 || params.alpha == 0.0 {
        return Ok(params.alpha);
    }
    Ok(params.alpha * params.lambda.powf(-s / p))
}

/// Classifies the start of `job` at `t` on a machine in state `machine`
/// (the state just before the start).
pub fn classify_start(machine: &MachineState, job: &Job, t: f64) -> StartReason {
    let busy = machine.busy_job.map(|k| (k, machine.busy_until));
    let lock = machine.lock_setter.map(|k| (k, machine.lock_until));
    let latest = busy.iter().chain(lock.iter()).map(|&(_, until)| until).fold(f64::NEG_INFINITY, f64::max);
    if (t - job.release).abs() <= TAU && latest < t - TAU {
        return StartReason::Immediate;
    }
    match (busy, lock) {
        (None, None) => StartReason::Immediate,
        (Some((b, _)), None) => StartReason::Pushed(b),
        (None, Some((l, _))) => StartReason::Locked(l),
        (Some((b, busy_until)), Some((l, lock_until))) => {
            if lock_until >= busy_until - TAU {
                StartReason::Locked(l)
            } else {
                StartReason::Pushed(b)
            }
        }
    }
}

/// Runs the policy on the instance and returns the full trace.
pub fn simulate(inst: &Instance, params: &PolicyParams) -> Result<ScheduleTrace> {
    ensure_valid(inst)?;
    params.validate()?;

    let jobs = &inst.jobs;
    let mut by_release: Vec<usize> = (0..jobs.len()).collect();
    by_release.sort_by(|&a, &b| jobs[a].release.total_cmp(&jobs[b].release).then(jobs[a].id.cmp(&jobs[b].id)));

    let mut queue = EventQueue::new();
    for j in jobs {
        queue.push(j.release);
    }

    let mut machines = vec![MachineState::default(); inst.m];
    let mut locks: Vec<Vec<LockInterval>> = vec![Vec::new(); inst.m];
    let mut starts = Vec::with_capacity(jobs.len());
    let mut pending: Vec<usize> = Vec::new();
    let mut next_release = 0;

    while let Some(t) = queue.pop_epoch() {
        while next_release < by_release.len() && jobs[by_release[next_release]].release <= t {
            pending.push(by_release[next_release]);
            next_release += 1;
        }

        while !pending.is_empty() {
            let Some(machine) = machines.iter().position(|ms| ms.is_idle(t)) else {
                break;
            };
            let slot = longest_pending(jobs, &pending);
            let idx = pending.swap_remove(slot);
            let job = &jobs[idx];

            let reason = classify_start(&machines[machine], job, t);
            let alpha_j = alpha_of(params, t, job.proc)?;
            let completion = t + job.proc;
            starts.push(StartRecord { job: job.id, machine, start: t, completion, alpha_j, reason });

            machines[machine].busy_until = completion;
            machines[machine].busy_job = Some(job.id);
            if completion > t {
                queue.push(completion);
            }

            let until = t + alpha_j * job.proc;
            if alpha_j > 0.0 && until > t {
                for (ms, list) in machines.iter_mut().zip(locks.iter_mut()) {
                    if ms.lock_setter.is_some() && until < ms.lock_until {
                        continue;
                    }
                    ms.lock_until = until;
                    ms.lock_setter = Some(job.id);
                    if let Some(last) = list.last_mut() {
                        if last.until > t {
                            last.until = t;
                        }
                        if last.until <= last.from {
                            list.pop();
                        }
                    }
                    list.push(LockInterval { from: t, until });
                }
                queue.push(until);
            }
        }
    }

    if !pending.is_empty() || starts.len() != jobs.len() {
        return Err(Error::Contract("simulation ended with unstarted jobs".into()));
    }

    let makespan = starts.iter().map(|s| s.completion).fold(f64::NEG_INFINITY, f64::max);
    Ok(ScheduleTrace { instance: inst.clone(), policy: Some(*params), starts, locks, makespan })
}

/// Index into `pending` of the longest job; ties go to the earlier release, then the lower id.
fn longest_pending(jobs: &[Job], pending: &[usize]) -> usize {
    let key = |&i: &usize| (jobs[i].proc, Reverse(Epoch(jobs[i].release)), Reverse(jobs[i].id));
    pending
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            let (pa, ra, ia) = key(a);
            let (pb, rb, ib) = key(b);
            pa.total_cmp(&pb).then(ra.cmp(&rb)).then(ia.cmp(&ib))
        })
        .map(|(slot, _)| slot)
        .expect("pending is non-empty")
}
