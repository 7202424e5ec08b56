//! Per-step epidemic bookkeeping checks run alongside every scenario.

use crate::epidemic::EpidemicState;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantReport {
    pub checked_steps: usize,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: InvariantReport) {
        self.checked_steps += other.checked_steps;
        self.violations.extend(other.violations);
    }
}

/// Tracks one trajectory: S+I+R = n with disjoint compartments, and the
/// cumulative infection count `I + R` never decreases and grows by exactly
/// the number of new infections.
#[derive(Debug, Clone)]
pub struct InvariantTracker {
    label: String,
    cumulative: Option<usize>,
    report: InvariantReport,
}

impl InvariantTracker {
    pub fn new(label: impl Into<String>) -> Self {
        InvariantTracker {
            label: label.into(),
            cumulative: None,
            report: InvariantReport::default(),
        }
    }

    pub fn observe(&mut self, step: usize, state: &EpidemicState, new_infections: usize) {
        self.report.checked_steps += 1;
        let n = state.len();
        let mut fail = |msg: String| self.report.violations.push(format!("{} step {step}: {msg}", self.label));
        if let Err(e) = state.check() {
            fail(e.to_string());
        }
        let (mut s, mut i, mut r) = (0, 0, 0);
        for v in 0..n {
            match (state.infected[v], state.recovered[v]) {
                (false, false) => s += 1,
                (true, false) => i += 1,
                (false, true) => r += 1,
                (true, true) => {}
            }
        }
        if s + i + r != n {
            fail(format!("S+I+R = {s}+{i}+{r} != {n}"));
        }
        let cumulative = i + r;
        if let Some(prev) = self.cumulative {
            if cumulative < prev {
                fail(format!("cumulative infections fell from {prev} to {cumulative}"));
            } else if cumulative != prev + new_infections {
                fail(format!("cumulative infections {prev} -> {cumulative} with {new_infections} new"));
            }
        }
        self.cumulative = Some(cumulative);
    }

    pub fn finish(self) -> InvariantReport {
        self.report
    }
}
