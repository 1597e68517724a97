//! Longest k-length path averages.
//!
//! `F_k(j, t) = max over i in pred(j) of D_t^{ij} + F_{k-1}(i, t-1)` with
//! `F_0 = 0`, and `H_k = F_k / k`. The exact engine keeps all layers
//! `F_0..F_k` at the current time and advances them one edge field at a
//! time. Engines count time in consumed edge fields: the first field pushed
//! is step 1 and `H_k` becomes available once `k` fields have been consumed.

mod brute;
mod exact;
mod streaming;
mod viterbi;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use brute::{count_paths, lpa_bruteforce, PATH_LIMIT};
pub use exact::{ExactEngine, LpaTables};
pub use streaming::StreamingEngine;
pub use viterbi::{viterbi_mode_run, ViterbiEngine, ViterbiStep};

use crate::edge::EdgeField;
use crate::topology::Topology;
use crate::{Error, Registry, Result};

/// A k-edge path ending at `terminal`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub terminal: usize,
    /// The `k + 1` visited states, oldest first.
    pub states: Vec<usize>,
    /// The `k` edge weights, oldest first.
    pub weights: Vec<f64>,
    pub sum: f64,
}

impl PathRecord {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.weights.len() as f64
    }
}

/// Which LPA computation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineMode {
    #[default]
    Exact,
    /// Streaming approximation with periodic exact refresh.
    Approx,
    /// Path length grows with time (`k = t`).
    Viterbi,
}

impl EngineMode {
    pub fn name(self) -> &'static str {
        match self {
            EngineMode::Exact => "exact",
            EngineMode::Approx => "approx",
            EngineMode::Viterbi => "viterbi",
        }
    }
}

impl FromStr for EngineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "approx" => Ok(Self::Approx),
            "viterbi" => Ok(Self::Viterbi),
            other => Err(Error::Config(format!(
                "unknown engine mode '{other}' (available: approx, exact, viterbi)"
            ))),
        }
    }
}

impl fmt::Display for EngineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub k: usize,
    pub mode: EngineMode,
    /// Exact refresh interval of the streaming approximation; `None` means
    /// `ceil(k / 2)`.
    pub refresh: Option<usize>,
    pub backpointers: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            k: 50,
            mode: EngineMode::Exact,
            refresh: None,
            backpointers: false,
        }
    }
}

impl EngineConfig {
    pub fn refresh_interval(&self) -> usize {
        self.refresh.unwrap_or(self.k.div_ceil(2)).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 && self.mode != EngineMode::Viterbi {
            return Err(Error::Config("engine.k must be at least 1".into()));
        }
        if self.refresh == Some(0) {
            return Err(Error::Config("engine.refresh must be at least 1".into()));
        }
        Ok(())
    }
}

/// What an engine factory receives.
#[derive(Debug, Clone)]
pub struct EngineSetup {
    pub config: EngineConfig,
    pub topology: Arc<Topology>,
}

/// A streaming LPA computation over a fixed topology.
pub trait LpaEngine: Send + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Path length of the current output (grows with time in Viterbi mode).
    fn k(&self) -> usize;

    /// Edge fields consumed so far.
    fn consumed(&self) -> usize;

    /// Consumes the next edge field; its `t` must follow the previous one.
    fn step(&mut self, field: &EdgeField) -> Result<()>;

    fn ready(&self) -> bool {
        self.consumed() >= self.k().max(1)
    }

    /// `H_k(j, t)` for every state at the current time.
    fn field(&self) -> Result<Vec<f64>>;

    /// Candidate evaluations `D + F` performed so far.
    fn relaxations(&self) -> u64;

    /// The path realizing the current value at `j`.
    fn path(&self, _j: usize) -> Result<PathRecord> {
        Err(Error::Capability(
            "path tracking (enable engine.backpointers)",
        ))
    }
}

fn make_exact(setup: &EngineSetup) -> Result<Box<dyn LpaEngine>> {
    Ok(Box::new(ExactEngine::new(
        setup.topology.clone(),
        setup.config.k,
        setup.config.backpointers,
    )?))
}

fn make_approx(setup: &EngineSetup) -> Result<Box<dyn LpaEngine>> {
    Ok(Box::new(StreamingEngine::new(
        setup.topology.clone(),
        setup.config.k,
        setup.config.refresh_interval(),
    )?))
}

fn make_viterbi(setup: &EngineSetup) -> Result<Box<dyn LpaEngine>> {
    Ok(Box::new(ViterbiEngine::new(setup.topology.clone())))
}

/// Engine modes selectable by `engine.mode`.
pub fn engines() -> Registry<EngineSetup, dyn LpaEngine> {
    Registry::new("engine mode")
        .with("exact", make_exact)
        .with("approx", make_approx)
        .with("viterbi", make_viterbi)
}

/// Builds the engine named by `config.mode`.
pub fn create_engine(config: &EngineConfig, topology: Arc<Topology>) -> Result<Box<dyn LpaEngine>> {
    config.validate()?;
    let setup = EngineSetup {
        config: config.clone(),
        topology,
    };
    engines().create(config.mode.name(), &setup)
}

pub(crate) fn check_sequence(last: Option<usize>, field: &EdgeField, edges: usize) -> Result<()> {
    if let Some(t) = last {
        if field.t != t + 1 {
            return Err(Error::Sequencing {
                expected: t + 1,
                got: field.t,
            });
        }
    }
    if field.values.len() != edges {
        return Err(Error::Domain(format!(
            "edge field has {} values, topology has {edges} edges",
            field.values.len()
        )));
    }
    Ok(())
}

/// Index of the first maximum; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refresh_default_is_half_k_rounded_up() {
        let mut c = EngineConfig {
            k: 7,
            ..Default::default()
        };
        assert_eq!(c.refresh_interval(), 4);
        c.refresh = Some(1);
        assert_eq!(c.refresh_interval(), 1);
        c.refresh = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn registry_and_modes() {
        assert_eq!(engines().names(), vec!["approx", "exact", "viterbi"]);
        assert_eq!("approx".parse::<EngineMode>().unwrap(), EngineMode::Approx);
        assert!("fast".parse::<EngineMode>().is_err());
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }
}
