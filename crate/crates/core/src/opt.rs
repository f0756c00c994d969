//! Exact offline optimum by branch and bound over job-to-machine assignments.
//!
//! Once a machine's job set is fixed, processing it in release order with no
//! voluntary idling minimizes that machine's completion, so the search only
//! has to enumerate assignments.

use crate::engine::simulate;
use crate::error::{Error, Result};
use crate::model::{ensure_valid, Instance, Job, PolicyParams, ScheduleTrace, StartReason, StartRecord, TAU};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct OptResult {
    /// The optimum when `exact`, otherwise a certified lower bound.
    pub value: f64,
    /// Makespan of the best schedule found.
    pub upper_bound: f64,
    pub exact: bool,
    /// An optimal schedule; present iff `exact`.
    pub trace: Option<ScheduleTrace>,
    pub nodes_explored: u64,
}

/// Completion of one machine processing `jobs` back to back in release order
/// (ties by id). Empty input gives 0.
pub fn single_machine_makespan(jobs: &[Job]) -> f64 {
    let mut sorted: Vec<&Job> = jobs.iter().collect();
    sorted.sort_by(|a, b| a.release.total_cmp(&b.release).then(a.id.cmp(&b.id)));
    sorted.iter().fold(0.0, |t: f64, j| t.max(j.release) + j.proc)
}

/// Combined release and load lower bound on the optimal makespan.
pub fn lower_bound(inst: &Instance) -> f64 {
    let m = inst.m.max(1) as f64;
    let mut by_release: Vec<&Job> = inst.jobs.iter().collect();
    by_release.sort_by(|a, b| b.release.total_cmp(&a.release));
    let mut best = inst.jobs.iter().map(|j| j.release + j.proc).fold(0.0, f64::max);
    // suffix sums over descending release: all jobs released at or after r
    let mut tail = 0.0;
    for (i, j) in by_release.iter().enumerate() {
        tail += j.proc;
        let last_of_group = by_release.get(i + 1).is_none_or(|next| next.release != j.release);
        if last_of_group {
            best = best.max(j.release + tail / m);
        }
    }
    best
}

struct Search<'a> {
    jobs: &'a [Job],
    /// Job indices in branching order: descending proc, then release, then id.
    order: Vec<usize>,
    /// Position of each job in (release, id) order, used to keep machine lists sequenced.
    seq_rank: Vec<usize>,
    machines: Vec<Vec<usize>>,
    completion: Vec<f64>,
    assignment: Vec<usize>,
    best: f64,
    best_assignment: Vec<usize>,
    root_lb: f64,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl<'a> Search<'a> {
    fn completion_with(&self, machine: usize, extra: Option<usize>) -> f64 {
        let set = &self.machines[machine];
        let mut t: f64 = 0.0;
        let mut pending_extra = extra;
        for &j in set {
            if let Some(x) = pending_extra {
                if self.seq_rank[x] < self.seq_rank[j] {
                    t = t.max(self.jobs[x].release) + self.jobs[x].proc;
                    pending_extra = None;
                }
            }
            t = t.max(self.jobs[j].release) + self.jobs[j].proc;
        }
        if let Some(x) = pending_extra {
            t = t.max(self.jobs[x].release) + self.jobs[x].proc;
        }
        t
    }

    fn insert(&mut self, machine: usize, j: usize) {
        let rank = self.seq_rank[j];
        let list = &mut self.machines[machine];
        let pos = list.partition_point(|&k| self.seq_rank[k] < rank);
        list.insert(pos, j);
    }

    fn remove(&mut self, machine: usize, j: usize) {
        let list = &mut self.machines[machine];
        let pos = list.iter().position(|&k| k == j).expect("job on machine");
        list.remove(pos);
    }

    fn node_bound(&self, depth: usize) -> f64 {
        let mut lb = self.completion.iter().copied().fold(self.root_lb, f64::max);
        for &j in &self.order[depth..] {
            let cheapest =
                (0..self.machines.len()).map(|i| self.completion_with(i, Some(j))).fold(f64::INFINITY, f64::min);
            lb = lb.max(cheapest);
        }
        lb
    }

    fn dfs(&mut self, depth: usize) {
        if self.aborted || self.best <= self.root_lb + TAU {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        if depth == self.order.len() {
            let value = self.completion.iter().copied().fold(0.0, f64::max);
            if value < self.best {
                self.best = value;
                self.best_assignment = self.assignment.clone();
            }
            return;
        }
        if self.node_bound(depth) >= self.best {
            return;
        }

        let j = self.order[depth];
        let first_empty = self.machines.iter().position(|l| l.is_empty());
        let mut children: Vec<(f64, usize)> = (0..self.machines.len())
            .filter(|&i| !self.machines[i].is_empty() || Some(i) == first_empty)
            .map(|i| (self.completion_with(i, Some(j)), i))
            .filter(|&(c, _)| c < self.best)
            .collect();
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        for (c, i) in children {
            if c >= self.best {
                continue;
            }
            let saved = self.completion[i];
            self.insert(i, j);
            self.completion[i] = c;
            self.assignment[j] = i;
            self.dfs(depth + 1);
            self.remove(i, j);
            self.completion[i] = saved;
            if self.aborted {
                return;
            }
        }
    }
}

/// Makespan of the assignment `machine_of[j]` (indexed like `inst.jobs`)
/// with every machine sequenced in release order.
pub fn assignment_makespan(inst: &Instance, machine_of: &[usize]) -> f64 {
    (0..inst.m)
        .map(|i| {
            let set: Vec<Job> = inst.jobs.iter().zip(machine_of).filter(|(_, &k)| k == i).map(|(j, _)| *j).collect();
            single_machine_makespan(&set)
        })
        .fold(0.0, f64::max)
}

/// Builds the trace of an assignment with release-order sequencing on each machine.
pub fn assignment_trace(inst: &Instance, machine_of: &[usize]) -> ScheduleTrace {
    let mut starts = Vec::with_capacity(inst.n());
    for i in 0..inst.m {
        let mut set: Vec<&Job> = inst.jobs.iter().zip(machine_of).filter(|(_, &k)| k == i).map(|(j, _)| j).collect();
        set.sort_by(|a, b| a.release.total_cmp(&b.release).then(a.id.cmp(&b.id)));
        let mut t = f64::NEG_INFINITY;
        let mut prev = None;
        for j in set {
            let start = t.max(j.release);
            let reason = match prev {
                Some(k) if start > j.release + TAU || t >= start - TAU => StartReason::Pushed(k),
                _ => StartReason::Immediate,
            };
            let completion = start + j.proc;
            starts.push(StartRecord { job: j.id, machine: i, start, completion, alpha_j: 0.0, reason });
            t = completion;
            prev = Some(j.id);
        }
    }
    starts.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.machine.cmp(&b.machine)));
    let makespan = starts.iter().map(|s| s.completion).fold(0.0, f64::max);
    ScheduleTrace { instance: inst.clone(), policy: None, starts, locks: vec![Vec::new(); inst.m], makespan }
}

/// Solves the offline problem exactly unless more than `node_budget` search
/// nodes are needed, in which case the result carries a lower bound only.
pub fn exact_opt(inst: &Instance, node_budget: u64) -> Result<OptResult> {
    ensure_valid(inst)?;
    if node_budget == 0 {
        return Err(Error::InvalidArgument("node budget must be positive".into()));
    }
    let jobs = &inst.jobs;
    let n = jobs.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        jobs[b]
            .proc
            .total_cmp(&jobs[a].proc)
            .then(jobs[a].release.total_cmp(&jobs[b].release))
            .then(jobs[a].id.cmp(&jobs[b].id))
    });
    let mut seq: Vec<usize> = (0..n).collect();
    seq.sort_by(|&a, &b| jobs[a].release.total_cmp(&jobs[b].release).then(jobs[a].id.cmp(&jobs[b].id)));
    let mut seq_rank = vec![0; n];
    for (rank, &j) in seq.iter().enumerate() {
        seq_rank[j] = rank;
    }

    let mut search = Search {
        jobs,
        order,
        seq_rank,
        machines: vec![Vec::new(); inst.m],
        completion: vec![0.0; inst.m],
        assignment: vec![0; n],
        best: f64::INFINITY,
        best_assignment: Vec::new(),
        root_lb: lower_bound(inst),
        nodes: 0,
        budget: node_budget,
        aborted: false,
    };

    // greedy incumbent: each job, in branching order, to the machine finishing it earliest
    let order = search.order.clone();
    for &j in &order {
        let (c, i) = (0..inst.m)
            .map(|i| (search.completion_with(i, Some(j)), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("m >= 1");
        search.insert(i, j);
        search.completion[i] = c;
        search.assignment[j] = i;
    }
    search.best = search.completion.iter().copied().fold(0.0, f64::max);
    search.best_assignment = search.assignment.clone();
    search.machines.iter_mut().for_each(Vec::clear);
    search.completion.iter_mut().for_each(|c| *c = 0.0);

    search.dfs(0);

    if search.aborted {
        return Ok(OptResult {
            value: search.root_lb,
            upper_bound: search.best,
            exact: false,
            trace: None,
            nodes_explored: search.nodes,
        });
    }
    let trace = assignment_trace(inst, &search.best_assignment);
    Ok(OptResult {
        value: trace.makespan,
        upper_bound: trace.makespan,
        exact: true,
        trace: Some(trace),
        nodes_explored: search.nodes,
    })
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub alg: f64,
    pub opt: OptResult,
    /// `alg / opt.value`; an upper bound on the true ratio when not certified.
    pub ratio: f64,
    pub certified: bool,
}

pub fn ratio(inst: &Instance, params: &PolicyParams, node_budget: u64) -> Result<RatioReport> {
    let alg = simulate(inst, params)?.makespan;
    let opt = exact_opt(inst, node_budget)?;
    Ok(RatioReport { alg, ratio: alg / opt.value, certified: opt.exact, opt })
}
