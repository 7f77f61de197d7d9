//! One module per subcommand. Each turns the resolved configuration into a
//! CSV table and, in check mode, a list of assertions on the same data.

pub mod berbee;
pub mod factor;
pub mod ising;
pub mod rc;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::report::CheckLog;

/// Top-level seed streams, one per subcommand.
pub(crate) const ISING_STREAM: u64 = 1;
pub(crate) const BERBEE_STREAM: u64 = 2;
pub(crate) const RC_STREAM: u64 = 3;
pub(crate) const FACTOR_STREAM: u64 = 4;

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub csv: String,
    pub checks: CheckLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Ising,
    Berbee,
    Rc,
    Factor,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Ising => "ising",
            Subcommand::Berbee => "berbee",
            Subcommand::Rc => "rc",
            Subcommand::Factor => "factor",
        }
    }

    pub fn run(self, cfg: &ExperimentConfig, check: bool) -> CliResult<Outcome> {
        match self {
            Subcommand::Ising => ising::run(cfg, check),
            Subcommand::Berbee => berbee::run(cfg, check),
            Subcommand::Rc => rc::run(cfg, check),
            Subcommand::Factor => factor::run(cfg, check),
        }
    }
}

/// `3.0000e-1`-style short form for check details.
pub(crate) fn short(x: f64) -> String {
    format!("{x:.4e}")
}
