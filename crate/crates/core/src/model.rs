//! Domain types shared by every part of the laboratory: jobs, instances,
//! locking policies and schedule traces, plus their text formats.
//!
//! Times are `f64` in abstract units. Two times closer than [`TAU`] are
//! treated as the same instant.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute coincidence tolerance for event times.
pub const TAU: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    #[serde(rename = "r")]
    pub release: f64,
    #[serde(rename = "p")]
    pub proc: f64,
}

impl Job {
    pub fn new(id: u64, release: f64, proc: f64) -> Self {
        Job { id: JobId(id), release, proc }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub m: usize,
    pub jobs: Vec<Job>,
}

impl Instance {
    pub fn new(m: usize, jobs: Vec<Job>) -> Self {
        Instance { m, jobs }
    }

    /// Builds an instance from `(release, proc)` pairs, numbering jobs from 1.
    pub fn from_pairs(m: usize, pairs: &[(f64, f64)]) -> Self {
        let jobs = pairs.iter().enumerate().map(|(i, &(r, p))| Job::new(i as u64 + 1, r, p)).collect();
        Instance { m, jobs }
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn job(&self, id: JobId) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn total_work(&self) -> f64 {
        self.jobs.iter().map(|j| j.proc).sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// One broken instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MachineCount(usize),
    NoJobs,
    NonPositiveProc(JobId),
    NegativeRelease(JobId),
    NonFinite(JobId),
    DuplicateId(JobId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MachineCount(m) => write!(f, "machine count {m} < 1"),
            Violation::NoJobs => write!(f, "instance has no jobs"),
            Violation::NonPositiveProc(id) => write!(f, "job {id}: non-positive processing time"),
            Violation::NegativeRelease(id) => write!(f, "job {id}: negative release time"),
            Violation::NonFinite(id) => write!(f, "job {id}: non-finite time value"),
            Violation::DuplicateId(id) => write!(f, "job {id}: duplicate id"),
        }
    }
}

/// Reports every invariant violation of `inst`; an empty list means valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    if inst.m < 1 {
        out.push(Violation::MachineCount(inst.m));
    }
    if inst.jobs.is_empty() {
        out.push(Violation::NoJobs);
    }
    let mut seen = HashSet::new();
    for j in &inst.jobs {
        if !j.release.is_finite() || !j.proc.is_finite() {
            out.push(Violation::NonFinite(j.id));
            continue;
        }
        if j.proc <= 0.0 {
            out.push(Violation::NonPositiveProc(j.id));
        }
        if j.release < 0.0 {
            out.push(Violation::NegativeRelease(j.id));
        }
        if !seen.insert(j.id) {
            out.push(Violation::DuplicateId(j.id));
        }
    }
    out
}

pub(crate) fn ensure_valid(inst: &Instance) -> Result<()> {
    let v = validate_instance(inst);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(v))
    }
}

/// Multiplies every release and processing time by `c`.
pub fn scale_instance(inst: &Instance, c: f64) -> Result<Instance> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {c}")));
    }
    let jobs = inst.jobs.iter().map(|j| Job { id: j.id, release: j.release * c, proc: j.proc * c }).collect();
    Ok(Instance { m: inst.m, jobs })
}

/// A member of the Generalized SLEEPY family. `lambda == 1` is static locking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub alpha: f64,
    pub lambda: f64,
}

impl PolicyParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        let p = PolicyParams { alpha, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1), got {}", self.alpha)));
        }
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn is_dynamic(&self) -> bool {
        self.lambda > 1.0
    }
}

/// Why a job started when it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ReasonRepr", into = "ReasonRepr")]
pub enum StartReason {
    Immediate,
    /// Waited for the completion of the given job on the chosen machine.
    Pushed(JobId),
    /// Waited for the lock set by the given job to expire.
    Locked(JobId),
}

impl StartReason {
    pub fn by(&self) -> Option<JobId> {
        match *self {
            StartReason::Immediate => None,
            StartReason::Pushed(k) | StartReason::Locked(k) => Some(k),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            StartReason::Immediate => "Immediate",
            StartReason::Pushed(_) => "Pushed",
            StartReason::Locked(_) => "Locked",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ReasonRepr {
    tag: String,
    by: Option<JobId>,
}

impl From<StartReason> for ReasonRepr {
    fn from(r: StartReason) -> Self {
        ReasonRepr { tag: r.tag().to_string(), by: r.by() }
    }
}

impl TryFrom<ReasonRepr> for StartReason {
    type Error = String;

    fn try_from(r: ReasonRepr) -> std::result::Result<Self, String> {
        match (r.tag.as_str(), r.by) {
            ("Immediate", _) => Ok(StartReason::Immediate),
            ("Pushed", Some(k)) => Ok(StartReason::Pushed(k)),
            ("Locked", Some(k)) => Ok(StartReason::Locked(k)),
            (t, None) => Err(format!("reason {t} needs a `by` job id")),
            (t, _) => Err(format!("unknown start reason {t}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    #[serde(rename = "id")]
    pub job: JobId,
    pub machine: usize,
    #[serde(rename = "s")]
    pub start: f64,
    #[serde(rename = "C")]
    pub completion: f64,
    pub alpha_j: f64,
    pub reason: StartReason,
}

impl StartRecord {
    pub fn proc(&self) -> f64 {
        self.completion - self.start
    }
}

/// Half-open interval `[from, until)` during which a machine may not start a job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct LockInterval {
    pub from: f64,
    pub until: f64,
}

impl From<(f64, f64)> for LockInterval {
    fn from((from, until): (f64, f64)) -> Self {
        LockInterval { from, until }
    }
}

impl From<LockInterval> for (f64, f64) {
    fn from(l: LockInterval) -> Self {
        (l.from, l.until)
    }
}

/// A complete schedule of an instance. `policy` is `None` for offline-optimal traces.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTrace {
    pub instance: Instance,
    pub policy: Option<PolicyParams>,
    /// One record per job, in start order.
    pub starts: Vec<StartRecord>,
    /// Per machine, disjoint lock intervals in time order.
    pub locks: Vec<Vec<LockInterval>>,
    pub makespan: f64,
}

impl ScheduleTrace {
    pub fn m(&self) -> usize {
        self.instance.m
    }

    pub fn record(&self, id: JobId) -> Option<&StartRecord> {
        self.starts.iter().find(|s| s.job == id)
    }

    pub fn records_by_job(&self) -> HashMap<JobId, &StartRecord> {
        self.starts.iter().map(|s| (s.job, s)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TraceFile::from(self)).expect("trace serializes")
    }

    /// Parses a trace file. The instance comes from the file's embedded copy
    /// unless `instance` is supplied, in which case the two must agree.
    pub fn from_json(text: &str, instance: Option<&Instance>) -> Result<Self> {
        let file: TraceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_trace(instance)
    }
}

/// Returns `max_j C_j` of a complete trace.
pub fn makespan(trace: &ScheduleTrace) -> Result<f64> {
    if trace.starts.len() != trace.instance.n() {
        return Err(Error::Contract(format!(
            "trace has {} start records for {} jobs",
            trace.starts.len(),
            trace.instance.n()
        )));
    }
    Ok(trace.starts.iter().map(|s| s.completion).fold(f64::NEG_INFINITY, f64::max))
}

/// Checks feasibility of a trace against its instance. Empty means feasible.
pub fn trace_violations(trace: &ScheduleTrace) -> Vec<String> {
    let inst = &trace.instance;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for s in &trace.starts {
        if !seen.insert(s.job) {
            out.push(format!("job {} started twice", s.job));
        }
        let Some(job) = inst.job(s.job) else {
            out.push(format!("job {} not in instance", s.job));
            continue;
        };
        if s.machine >= inst.m {
            out.push(format!("job {} on machine {} >= m", s.job, s.machine));
        }
        if s.start < job.release - TAU {
            out.push(format!("job {} starts at {} before release {}", s.job, s.start, job.release));
        }
        if (s.completion - (s.start + job.proc)).abs() > TAU {
            out.push(format!("job {} completion {} != start + proc", s.job, s.completion));
        }
    }
    for j in &inst.jobs {
        if !seen.contains(&j.id) {
            out.push(format!("job {} never started", j.id));
        }
    }
    for machine in 0..inst.m {
        let mut busy: Vec<&StartRecord> = trace.starts.iter().filter(|s| s.machine == machine).collect();
        busy.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in busy.windows(2) {
            if w[1].start < w[0].completion - TAU {
                out.push(format!("jobs {} and {} overlap on machine {machine}", w[0].job, w[1].job));
            }
        }
    }
    if let Ok(mk) = makespan(trace) {
        if (mk - trace.makespan).abs() > TAU {
            out.push(format!("recorded makespan {} != max completion {mk}", trace.makespan));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TraceFile {
    policy: Option<PolicyParams>,
    makespan: f64,
    starts: Vec<StartRecord>,
    locks: Vec<Vec<LockInterval>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<Instance>,
}

impl From<&ScheduleTrace> for TraceFile {
    fn from(t: &ScheduleTrace) -> Self {
        TraceFile {
            policy: t.policy,
            makespan: t.makespan,
            starts: t.starts.clone(),
            locks: t.locks.clone(),
            instance: Some(t.instance.clone()),
        }
    }
}

impl TraceFile {
    fn into_trace(self, supplied: Option<&Instance>) -> Result<ScheduleTrace> {
        let instance = match (supplied, self.instance) {
            (Some(given), Some(embedded)) if *given != embedded => {
                return Err(Error::Contract("trace was produced for a different instance".into()))
            }
            (Some(given), _) => given.clone(),
            (None, Some(embedded)) => embedded,
            (None, None) => return Err(Error::Contract("trace carries no instance and none was supplied".into())),
        };
        if self.locks.len() != instance.m {
            return Err(Error::Contract(format!(
                "trace has lock lists for {} machines, instance has {}",
                self.locks.len(),
                instance.m
            )));
        }
        let trace = ScheduleTrace {
            instance,
            policy: self.policy,
            starts: self.starts,
            locks: self.locks,
            makespan: self.makespan,
        };
        let problems = trace_violations(&trace);
        if !problems.is_empty() {
            return Err(Error::Contract(problems.join("; ")));
        }
        Ok(trace)
    }
}
