//! Reporting for the `acceptance` test target: each criterion yields one
//! `PASS` or `FAIL` line with its measured values and wall-clock time.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// Sub-checks of one criterion. The criterion passes when all of them do.
#[derive(Debug, Default)]
pub struct Verdict {
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Verdict {
    pub fn new() -> Verdict {
        Verdict::default()
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    /// A measured value shown on the verdict line whether or not it passes.
    pub fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub budget: Duration,
    pub run: fn() -> Verdict,
}

pub struct Line {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

/// Runs one criterion. A panic counts as a failure; so does overrunning the budget.
pub fn evaluate(c: &Criterion) -> Line {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(c.run));
    let elapsed = start.elapsed();
    let (mut pass, mut parts) = match outcome {
        Ok(v) => {
            let pass = v.pass();
            let mut parts: Vec<String> = v.failures.iter().map(|f| format!("FAILED {f}")).collect();
            parts.extend(v.notes);
            (pass, parts)
        }
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, vec![format!("panicked: {msg}")])
        }
    };
    if elapsed > c.budget {
        pass = false;
        parts.insert(0, format!("FAILED runtime over budget {} s", c.budget.as_secs()));
    }
    Line { id: c.id, title: c.title, pass, detail: parts.join("; "), elapsed, budget: c.budget }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {}: {} ({:.1} s of {} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}
