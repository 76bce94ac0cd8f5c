//! Bookkeeping for the acceptance run: one PASS/FAIL line per criterion and a
//! summary exit status.

use std::time::Instant;

/// Relative difference |a − b| / max(|a|, |b|).
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Collects criterion outcomes and prints them as they arrive.
#[derive(Debug, Default)]
pub struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `check`, which returns (passed, detail); an `Err` counts as a
    /// failure with the error as detail.
    pub fn run<F>(&mut self, id: usize, title: &str, check: F)
    where
        F: FnOnce() -> Result<(bool, String), String>,
    {
        let t0 = Instant::now();
        let (passed, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let o = Outcome {
            id,
            title: title.to_string(),
            passed,
            detail,
            seconds: t0.elapsed().as_secs_f64(),
        };
        println!(
            "{} [{:>2}] {} -- {} ({:.1} s)",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail,
            o.seconds
        );
        self.outcomes.push(o);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }

    /// Prints the summary line; returns true if every criterion passed.
    pub fn summarize(&self) -> bool {
        let failed = self.failures();
        println!(
            "acceptance: {} passed, {} failed",
            self.outcomes.len() - failed.len(),
            failed.len()
        );
        for f in &failed {
            println!("  failed: [{}] {}", f.id, f.title);
        }
        failed.is_empty()
    }
}
