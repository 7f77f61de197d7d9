//! Run configuration: one TOML file with a block per subcommand. Every field
//! has a default, so an empty file (or no file) gives the acceptance setup.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Master seed used when neither the file nor `--seed` gives one.
pub const DEFAULT_SEED: u64 = 20261016;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Independent repetitions of each grid point (ising and factor grids).
    pub replications: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub ising: IsingConfig,
    pub berbee: BerbeeConfig,
    pub rc: RcConfig,
    pub factor: FactorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            replications: 1,
            out: None,
            ising: IsingConfig::default(),
            berbee: BerbeeConfig::default(),
            rc: RcConfig::default(),
            factor: FactorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryName {
    Plus,
    Minus,
    Free,
}

impl BoundaryName {
    pub fn label(self) -> &'static str {
        match self {
            BoundaryName::Plus => "plus",
            BoundaryName::Minus => "minus",
            BoundaryName::Free => "free",
        }
    }
}

/// A window compared atom by atom with exact enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleWindow {
    pub n: usize,
    pub beta: f64,
    pub boundary: BoundaryName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsingConfig {
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub boundaries: Vec<BoundaryName>,
    pub sweeps: usize,
    pub burn_in: usize,
    pub batches: usize,
    /// Grid windows up to this length also get the enumeration columns.
    pub exact_max_n: usize,
    pub exact_sweeps: usize,
    pub oracle: Vec<OracleWindow>,
}

impl Default for IsingConfig {
    fn default() -> Self {
        IsingConfig {
            alpha: 2.0,
            betas: vec![0.0, 0.25, 0.5, 1.0],
            sizes: vec![16, 64],
            boundaries: vec![BoundaryName::Plus, BoundaryName::Minus, BoundaryName::Free],
            sweeps: 100_000,
            burn_in: 1_000,
            batches: 50,
            exact_max_n: 8,
            exact_sweeps: 1_000_000,
            oracle: vec![
                OracleWindow { n: 8, beta: 0.5, boundary: BoundaryName::Plus },
                OracleWindow { n: 4, beta: 1.0, boundary: BoundaryName::Free },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    /// `r_n = c`.
    Constant,
    /// `r_n = c / n`.
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub c: f64,
}

impl SequenceSpec {
    pub fn label(&self) -> &'static str {
        match self.kind {
            SequenceKind::Constant => "constant",
            SequenceKind::Harmonic => "harmonic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerbeeConfig {
    pub sequences: Vec<SequenceSpec>,
    pub starts: Vec<usize>,
    pub k_max: usize,
    pub n_max: usize,
    /// Length of the partial-sum diagnostic.
    pub partial_sum_m: usize,
    pub mc_cases: usize,
    pub mc_paths: usize,
}

impl Default for BerbeeConfig {
    fn default() -> Self {
        BerbeeConfig {
            sequences: vec![
                SequenceSpec { kind: SequenceKind::Constant, c: 0.0 },
                SequenceSpec { kind: SequenceKind::Constant, c: 1.0 },
                SequenceSpec { kind: SequenceKind::Harmonic, c: 1.0 },
                SequenceSpec { kind: SequenceKind::Harmonic, c: 2.0 },
            ],
            starts: vec![3, 5],
            k_max: 200,
            n_max: 10_000,
            partial_sum_m: 100_000,
            mc_cases: 10,
            mc_paths: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Window length of the Monte Carlo dominance and percolation runs.
    pub mc_n: usize,
    pub grid_p: Vec<f64>,
    pub grid_q: Vec<f64>,
    pub chains: usize,
    pub samples_per_chain: usize,
    pub burn_in: usize,
    pub batches_per_chain: usize,
    pub es_sizes: Vec<usize>,
    pub es_beta: f64,
    pub es_sweeps: usize,
    pub fold_half_width: usize,
    pub fold_beta: f64,
    pub fold_samples: usize,
    pub chain_n: usize,
    pub percolation_betas: Vec<f64>,
    pub percolation_distances: Vec<usize>,
}

impl Default for RcConfig {
    fn default() -> Self {
        RcConfig {
            alpha: 2.0,
            beta: 1.0,
            mc_n: 64,
            grid_p: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            grid_q: vec![1.0, 1.5, 2.0, 3.0, 5.0],
            chains: 4,
            samples_per_chain: 5_000,
            burn_in: 200,
            batches_per_chain: 25,
            es_sizes: vec![4, 6],
            es_beta: 1.0,
            es_sweeps: 400_000,
            fold_half_width: 16,
            fold_beta: 1.0,
            fold_samples: 100_000,
            chain_n: 64,
            percolation_betas: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            percolation_distances: vec![8, 16, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorConfig {
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub chains: usize,
    pub sweeps_per_chain: usize,
    pub burn_in: usize,
    pub batches_per_chain: usize,
    /// Inverse temperatures of the normalisation, sup and variation checks.
    pub check_betas: Vec<f64>,
    pub norm_tails: usize,
    pub sup_tails: usize,
    pub variation_max_n: usize,
    pub variation_seeds: usize,
    pub variation_trials: usize,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            alpha: 2.0,
            betas: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
            sizes: vec![8, 32, 128],
            chains: 4,
            sweeps_per_chain: 25_000,
            burn_in: 2_500,
            batches_per_chain: 25,
            check_betas: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
            norm_tails: 10_000,
            sup_tails: 100_000,
            variation_max_n: 64,
            variation_seeds: 5,
            variation_trials: 200,
        }
    }
}

/// A parsed configuration with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: Option<PathBuf>,
    /// SHA-256 of the file contents, if a file was given.
    pub file_sha256: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let at = e.span().map(|s| field_at(text, s.start)).unwrap_or_default();
            CliError::usage(format!("config{at}: {}", e.message().trim()))
        })
    }

    pub fn load(path: Option<&Path>) -> CliResult<LoadedConfig> {
        match path {
            None => Ok(LoadedConfig { config: ExperimentConfig::default(), path: None, file_sha256: None }),
            Some(p) => {
                let bytes = fs::read(p).map_err(|e| CliError::usage(format!("cannot read config {}: {e}", p.display())))?;
                let text = String::from_utf8(bytes.clone())
                    .map_err(|_| CliError::usage(format!("config {} is not UTF-8", p.display())))?;
                Ok(LoadedConfig {
                    config: ExperimentConfig::parse(&text)?,
                    path: Some(p.to_path_buf()),
                    file_sha256: Some(sha256_hex(&bytes)),
                })
            }
        }
    }

    /// Canonical TOML of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Hash of the resolved configuration, independent of file formatting.
    pub fn resolved_sha256(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }
}

/// ` at section.key` for the key on the line holding byte `pos`.
fn field_at(text: &str, pos: usize) -> String {
    let before = &text[..pos.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let key = line.split('=').next().unwrap_or("").trim();
    let section = before[..line_start]
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')))
        .map(str::trim);
    match (section, key.is_empty() || key.starts_with('[')) {
        (_, true) => String::new(),
        (Some(sec), false) => format!(" at {sec}.{key}"),
        (None, false) => format!(" at {key}"),
    }
}

pub(crate) fn require(ok: bool, field: &str, what: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!("{field}: {what}")))
    }
}

pub(crate) fn require_budget(value: usize, limit: usize, field: &str) -> CliResult<()> {
    if value > limit {
        Err(CliError::Resource(format!("{field} = {value} exceeds the limit {limit}")))
    } else {
        Ok(())
    }
}

pub(crate) fn finite_nonneg(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite() && *x >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn partial_blocks_keep_other_defaults() {
        let c = ExperimentConfig::parse("seed = 7\n[factor]\nbetas = [0.0, 1.0]\nsizes = [8]\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.factor.betas, vec![0.0, 1.0]);
        assert_eq!(c.factor.chains, 4);
        assert_eq!(c.ising, IsingConfig::default());
    }

    #[test]
    fn unknown_fields_name_the_field() {
        let e = ExperimentConfig::parse("[factor]\nbeta = 1.0\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("at factor.beta:"), "{e}");
        let e = ExperimentConfig::parse("[ising]\nboundaries = [\"up\"]\n").unwrap_err();
        assert!(e.to_string().contains("at ising.boundaries:") && e.to_string().contains("up"), "{e}");
        let e = ExperimentConfig::parse("seed = -1\n").unwrap_err();
        assert!(e.to_string().contains("at seed:"), "{e}");
    }

    #[test]
    fn round_trip_and_hash() {
        let mut c = ExperimentConfig::default();
        c.out = Some(PathBuf::from("x.csv"));
        let back = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.resolved_sha256(), c.resolved_sha256());
        c.seed += 1;
        assert_ne!(back.resolved_sha256(), c.resolved_sha256());
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
