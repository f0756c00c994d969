use std::cmp::Ordering;

use serde::Serialize;

use super::chain::last_record;
use super::idle_during_delay;
use crate::model::{JobId, ScheduleTrace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticItem {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

/// Structural facts every schedule exceeding `(1 + γ)·OPT` must satisfy.
/// A failing item points at a bug in the engine or in the analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub ratio: f64,
    pub gamma: f64,
    pub triggered: bool,
    pub last_job: Option<JobId>,
    pub items: Vec<DiagnosticItem>,
}

impl Diagnosis {
    pub fn violations(&self) -> impl Iterator<Item = &DiagnosticItem> {
        self.items.iter().filter(|i| !i.holds)
    }

    pub fn summary(&self) -> String {
        if !self.triggered {
            return "no violation; diagnostics skipped".into();
        }
        let bad: Vec<&str> = self.violations().map(|i| i.name).collect();
        if bad.is_empty() {
            format!("ratio {:.6} exceeds 1+gamma; all diagnostics hold", self.ratio)
        } else {
            format!("ratio {:.6} exceeds 1+gamma; violated: {}", self.ratio, bad.join(", "))
        }
    }
}

pub fn diagnose_counterexample(trace: &ScheduleTrace, opt_value: f64, gamma: f64) -> Diagnosis {
    let ratio = trace.makespan / opt_value;
    let skipped = Diagnosis { ratio, gamma, triggered: false, last_job: None, items: Vec::new() };
    let threshold = (1.0 + gamma) * opt_value;
    if trace.makespan.partial_cmp(&threshold) != Some(Ordering::Greater) {
        return skipped;
    }
    let Some(last) = last_record(trace) else { return skipped };
    let r_n = trace.instance.job(last.job).map_or(0.0, |j| j.release);
    let p_n = last.proc();
    let mut items = Vec::new();

    let delay = last.start - r_n;
    items.push(DiagnosticItem {
        name: "delay",
        holds: delay > gamma * opt_value,
        detail: format!("s_n - r_n = {delay} vs gamma*opt = {}", gamma * opt_value),
    });

    let idle = idle_during_delay(trace);
    items.push(DiagnosticItem {
        name: "no-idle",
        holds: idle.is_empty(),
        detail: match idle.first() {
            None => "no machine idle while a job waits".into(),
            Some((id, t)) => format!("machine idle at {t} while job {id} waits ({} jobs affected)", idle.len()),
        },
    });

    let m = trace.m() as f64;
    let alpha = trace.policy.map_or(0.0, |p| p.alpha);
    let denom = 0.75 * m - 1.0 - (m - 1.0) * alpha;
    if denom > 0.0 {
        let bound = (m * gamma - m / 4.0 - m * (m - 1.0) * alpha) / denom;
        let scaled = p_n / opt_value;
        items.push(DiagnosticItem {
            name: "p_n-lower-bound",
            holds: scaled > bound,
            detail: format!("p_n/opt = {scaled} vs bound {bound}"),
        });
    }

    Diagnosis { ratio, gamma, triggered: true, last_job: Some(last.job), items }
}
