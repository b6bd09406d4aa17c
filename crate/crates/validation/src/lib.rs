//! Runner for the acceptance criteria.
//!
//! Each criterion is a plain function returning a [`Verdict`]. The runner
//! times it, applies the runtime limit and prints one line per criterion
//! followed by indented detail lines.

use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub details: Vec<String>,
}

impl Verdict {
    pub fn new() -> Self {
        Verdict { passed: true, details: Vec::new() }
    }

    /// Records a sub-check; any failing sub-check fails the criterion.
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        let tag = if ok { "ok  " } else { "FAIL" };
        self.details.push(format!("{tag} {}", what.into()));
        self.passed &= ok;
        ok
    }

    /// Records a number that is reported but not judged.
    pub fn note(&mut self, what: impl Into<String>) {
        self.details.push(format!("info {}", what.into()));
    }
}

impl Default for Verdict {
    fn default() -> Self {
        Self::new()
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub limit: Option<Duration>,
    pub check: fn() -> Verdict,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
    pub details: Vec<String>,
}

impl Outcome {
    pub fn headline(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let limit = match self.limit {
            Some(l) => format!(", limit {:.0} s", l.as_secs_f64()),
            None => String::new(),
        };
        format!(
            "{status} criterion {}: {} ({:.2} s{limit})",
            self.id,
            self.name,
            self.elapsed.as_secs_f64()
        )
    }
}

pub fn evaluate(c: &Criterion) -> Outcome {
    let start = Instant::now();
    let mut verdict = (c.check)();
    let elapsed = start.elapsed();
    if let Some(limit) = c.limit {
        verdict.check(
            elapsed <= limit,
            format!("runtime {:.2} s within {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()),
        );
    }
    Outcome {
        id: c.id,
        name: c.name,
        passed: verdict.passed,
        elapsed,
        limit: c.limit,
        details: verdict.details,
    }
}

/// Runs every criterion in order, prints the report and returns the
/// outcomes.
pub fn run_all(criteria: &[Criterion]) -> Vec<Outcome> {
    let mut outcomes = Vec::new();
    for c in criteria {
        let o = evaluate(c);
        println!("{}", o.headline());
        for d in &o.details {
            println!("    {d}");
        }
        outcomes.push(o);
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    println!(
        "\nacceptance: {} passed, {} failed{}",
        outcomes.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" (criteria {})", failed.join(", ")) }
    );
    outcomes
}
