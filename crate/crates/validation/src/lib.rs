//! Reporting helpers for the acceptance suite in `tests/acceptance.rs`.

use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::Duration;

static SERIAL: Mutex<()> = Mutex::new(());

/// Holds the suite lock so criteria run one at a time and their wall-clock
/// budgets are measured without interference.
pub fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Outcome of one acceptance criterion, assembled clause by clause.
#[derive(Debug)]
pub struct Verdict {
    id: u32,
    title: &'static str,
    clauses: Vec<(bool, String)>,
}

impl Verdict {
    pub fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            clauses: Vec::new(),
        }
    }

    pub fn check(&mut self, ok: bool, detail: impl Into<String>) -> &mut Self {
        self.clauses.push((ok, detail.into()));
        self
    }

    pub fn within(&mut self, elapsed: Duration, budget: Duration) -> &mut Self {
        self.check(
            elapsed < budget,
            format!("runtime {:.1} s (budget {} s)", elapsed.as_secs_f64(), budget.as_secs()),
        )
    }

    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|(ok, _)| *ok)
    }

    /// The PASS/FAIL line. Written straight to stderr so it shows up even
    /// when the test harness captures output.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let clauses: Vec<String> = self
            .clauses
            .iter()
            .map(|(ok, d)| format!("[{}] {d}", if *ok { "ok" } else { "x" }))
            .collect();
        format!("criterion {:>2} {status}: {}; {}", self.id, self.title, clauses.join("; "))
    }

    /// Prints the line and panics if any clause failed.
    pub fn finish(&self) {
        let line = self.line();
        let _ = writeln!(std::io::stderr().lock(), "\n{line}");
        assert!(self.passed(), "{line}");
    }
}
