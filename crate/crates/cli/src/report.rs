//! Check results of a `--check` run. The printed form is deterministic;
//! timings only go to the manifest.

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// Computed and shown, never asserted.
    Info,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    /// Grouping key, e.g. `c9c` for part (c) of criterion 9.
    pub tag: String,
    pub name: String,
    pub status: Status,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}: {}", self.status.label(), self.tag, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckLog {
    pub checks: Vec<Check>,
}

impl CheckLog {
    pub fn record(&mut self, tag: &str, name: impl Into<String>, ok: bool, detail: impl Into<String>, spent: Duration) {
        self.push(tag, name, if ok { Status::Pass } else { Status::Fail }, detail, spent);
    }

    pub fn info(&mut self, tag: &str, name: impl Into<String>, detail: impl Into<String>, spent: Duration) {
        self.push(tag, name, Status::Info, detail, spent);
    }

    fn push(&mut self, tag: &str, name: impl Into<String>, status: Status, detail: impl Into<String>, spent: Duration) {
        self.checks.push(Check {
            tag: tag.to_string(),
            name: name.into(),
            status,
            detail: detail.into(),
            seconds: spent.as_secs_f64(),
        });
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn passed(&self) -> bool {
        self.count(Status::Fail) == 0
    }

    /// One line per check and a summary line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out.push_str(&format!(
            "summary: {} passed, {} failed, {} reported\n",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Info)
        ));
        out
    }
}

/// Stopwatch for attributing compute time to the next recorded check.
pub struct Clock(Instant);

impl Clock {
    pub fn start() -> Self {
        Clock(Instant::now())
    }

    /// Time since the last lap (or start).
    pub fn lap(&mut self) -> Duration {
        let now = Instant::now();
        let d = now - self.0;
        self.0 = now;
        d
    }
}

/// `max |f - p| / se` with `se` floored at the binomial error of `p` over
/// `n` draws, so atoms never visited in any batch still get a scale.
pub fn max_atom_z(freqs: &[(f64, f64)], probs: &[f64], n: usize) -> f64 {
    freqs
        .iter()
        .zip(probs)
        .map(|(&(f, se), &p)| {
            let floor = (p * (1.0 - p) / n as f64).sqrt();
            let s = se.max(floor);
            if s == 0.0 {
                if f == p {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (f - p).abs() / s
            }
        })
        .fold(0.0, f64::max)
}

/// Probability that the largest of `atoms` independent standard normal
/// deviations reaches `max_z` in absolute value.
pub fn family_p(max_z: f64, atoms: usize) -> f64 {
    let single = libm::erfc(max_z / std::f64::consts::SQRT_2);
    1.0 - (1.0 - single).powi(atoms as i32)
}

/// Total variation distance between two atom vectors.
pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
