//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use gsleepy::instances::{gen_random, ProcDistribution, RandomSpec};
use gsleepy::{Instance, JobId, PolicyParams};

/// Optimal makespan by enumerating all `m^n` machine assignments, each machine
/// processing its jobs in release order.
pub fn brute_force_opt(inst: &Instance) -> f64 {
    let n = inst.n();
    let m = inst.m;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inst.jobs[a].release.total_cmp(&inst.jobs[b].release));
    let mut assignment = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut free = vec![0.0f64; m];
        for &j in &order {
            let job = &inst.jobs[j];
            let i = assignment[j];
            free[i] = free[i].max(job.release) + job.proc;
        }
        best = best.min(free.iter().cloned().fold(0.0, f64::max));
        // odometer increment
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            assignment[k] += 1;
            if assignment[k] < m {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}

/// One start of the reference simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefStart {
    pub id: JobId,
    pub machine: usize,
    pub start: f64,
}

/// Policy semantics written as a sequential dispatcher: the next start happens
/// at the first instant where a machine is free, the lock has expired and a
/// job is released; it takes the longest released job on the lowest free machine.
pub fn reference_simulate(inst: &Instance, params: &PolicyParams) -> (Vec<RefStart>, f64) {
    let mut free = vec![0.0f64; inst.m];
    let mut lock = 0.0f64;
    let mut left: Vec<usize> = (0..inst.n()).collect();
    let mut out = Vec::new();
    let mut makespan = 0.0f64;
    while !left.is_empty() {
        let earliest_free = free.iter().cloned().fold(f64::INFINITY, f64::min);
        let earliest_release = left.iter().map(|&j| inst.jobs[j].release).fold(f64::INFINITY, f64::min);
        let t = earliest_free.max(lock).max(earliest_release);
        let pick = *left
            .iter()
            .filter(|&&j| inst.jobs[j].release <= t)
            .min_by(|&&a, &&b| {
                let (x, y) = (&inst.jobs[a], &inst.jobs[b]);
                y.proc.total_cmp(&x.proc).then(x.release.total_cmp(&y.release)).then(x.id.cmp(&y.id))
            })
            .unwrap();
        let machine = (0..inst.m).find(|&i| free[i] <= t).unwrap();
        let job = &inst.jobs[pick];
        let alpha_j = params.alpha * params.lambda.powf(-t / job.proc);
        free[machine] = t + job.proc;
        lock = lock.max(t + alpha_j * job.proc);
        makespan = makespan.max(t + job.proc);
        out.push(RefStart { id: job.id, machine, start: t });
        left.retain(|&j| j != pick);
    }
    (out, makespan)
}

pub fn distribution(k: u64) -> ProcDistribution {
    match k % 3 {
        0 => ProcDistribution::Uniform { lo: 0.1, hi: 1.0 },
        1 => ProcDistribution::Geometric { ratio: 0.5 },
        _ => ProcDistribution::TwoClass { small: 1.0, large: 2.0, fraction: 0.3 },
    }
}

/// Deterministic random instance number `k` with `n` and `m` drawn from the given ranges.
pub fn seeded_instance(k: u64, n_max: usize, m_max: usize) -> Instance {
    let n = 1 + (k as usize * 7 + 3) % n_max;
    let m = 1 + (k as usize * 5 + 1) % m_max;
    let release_span = [0.0, 0.5, 1.0, 3.0][(k % 4) as usize];
    gen_random(&RandomSpec { seed: 1000 + k, n, m, release_span, proc: distribution(k / 4) }).unwrap()
}
