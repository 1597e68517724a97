//! Edge observations `D_t^{ij}` on the trellis.
//!
//! A constructor turns two consecutive frames into an [`EdgeField`]; the
//! [`EdgeProcessor`] then applies background normalization and the upper
//! clamp, in that order, so the clamp value is in normalized units.

mod background;
mod integration;
mod npi;
mod viterbi;

use std::fmt;
use std::str::FromStr;

pub use background::{BackgroundStats, NormalizeMode, Normalizer, StatsMode};
pub use integration::StateIntegration;
pub use npi::Npi;
pub use viterbi::{
    viterbi_weights, viterbi_weights_from_loglik, GaussianPixelLikelihood, LikelihoodModel,
    TableTransition, TransitionModel, UniformTransition, ViterbiConstructor,
};

use crate::observation::{Frame, FrameSequence};
use crate::space::StateSpace;
use crate::{Error, Registry, Result};

/// All edge observations for one time step, in the topology's predecessor
/// layout: the weight of `i -> j` is at `pred_range(j).start + slot(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    pub t: usize,
    pub values: Vec<f64>,
}

impl EdgeField {
    /// Weight of edge `i -> j`, if that edge exists.
    pub fn get(&self, space: &StateSpace, i: usize, j: usize) -> Option<f64> {
        space.topology().edge_index(i, j).map(|e| self.values[e])
    }

    pub fn map(mut self, f: impl Fn(f64) -> f64) -> Self {
        self.values.iter_mut().for_each(|v| *v = f(*v));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsConfig {
    pub mode: StatsMode,
    /// Exponential-window factor in `(0, 1]`; 1 is an unweighted running mean.
    pub decay: f64,
    /// Edge fields used only to prime the statistics.
    pub warmup: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            mode: StatsMode::PerEdge,
            decay: 0.99,
            warmup: 10,
        }
    }
}

/// Gaussian pixel model used by the Viterbi constructor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViterbiModelConfig {
    pub amplitude: f64,
    pub sigma: f64,
    pub background: f64,
    /// Side of the square target footprint, anchored top-left at the state.
    pub size: usize,
}

impl Default for ViterbiModelConfig {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            sigma: 1.0,
            background: 0.0,
            size: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeObsConfig {
    pub constructor: String,
    pub r: usize,
    pub b: f64,
    pub epsilon: f64,
    /// Upper clamp; `None` disables clamping.
    pub lambda: Option<f64>,
    /// Apply `max(D, lambda)` instead of the upper clamp `min(D, lambda)`.
    pub literal_max: bool,
    pub normalize: NormalizeMode,
    pub stats: StatsConfig,
    pub viterbi: ViterbiModelConfig,
}

impl Default for EdgeObsConfig {
    fn default() -> Self {
        Self {
            constructor: "npi".into(),
            r: 1,
            b: 1e-5,
            epsilon: 0.04,
            lambda: Some(3.0),
            literal_max: false,
            normalize: NormalizeMode::Signed,
            stats: StatsConfig::default(),
            viterbi: ViterbiModelConfig::default(),
        }
    }
}

impl EdgeObsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Config(format!(
                "edge.b must be positive, got {}",
                self.b
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "edge.epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(l) = self.lambda {
            if l.is_nan() {
                return Err(Error::Config("edge.lambda is NaN".into()));
            }
        }
        if !(self.stats.decay > 0.0 && self.stats.decay <= 1.0) {
            return Err(Error::Config(format!(
                "edge.stats.decay must lie in (0, 1], got {}",
                self.stats.decay
            )));
        }
        let v = &self.viterbi;
        if !(v.sigma > 0.0) || !v.amplitude.is_finite() || v.size == 0 {
            return Err(Error::Config(
                "viterbi model needs sigma > 0, finite amplitude and size >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Builds edge fields from consecutive frames.
pub trait EdgeConstructor: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Edge field for the transition from `prev` (time `t-1`) to `cur`
    /// (time `t`).
    fn build(&self, prev: &Frame, cur: &Frame, t: usize, space: &StateSpace) -> Result<EdgeField>;

    /// Edge field for time `t` of a sequence; needs `1 <= t < T`.
    fn build_at(&self, seq: &FrameSequence, t: usize, space: &StateSpace) -> Result<EdgeField> {
        if t == 0 || t >= seq.len() {
            return Err(Error::Domain(format!(
                "edge fields exist for 1 <= t < {}, got t={t}",
                seq.len()
            )));
        }
        self.build(seq.frame(t - 1), seq.frame(t), t, space)
    }
}

pub(crate) fn check_frame(frame: &Frame, space: &StateSpace) -> Result<()> {
    if frame.height() != space.height() || frame.width() != space.width() {
        return Err(Error::Domain(format!(
            "frame is {}x{}, state space is {}x{}",
            frame.height(),
            frame.width(),
            space.height(),
            space.width()
        )));
    }
    Ok(())
}

fn make_integration(cfg: &EdgeObsConfig) -> Result<Box<dyn EdgeConstructor>> {
    Ok(Box::new(StateIntegration { r: cfg.r }))
}

fn make_npi(cfg: &EdgeObsConfig) -> Result<Box<dyn EdgeConstructor>> {
    Ok(Box::new(Npi::new(cfg.r, cfg.b, cfg.epsilon)?))
}

fn make_viterbi(cfg: &EdgeObsConfig) -> Result<Box<dyn EdgeConstructor>> {
    let v = cfg.viterbi;
    Ok(Box::new(ViterbiConstructor::new(
        Box::new(UniformTransition),
        Box::new(GaussianPixelLikelihood::new(
            v.amplitude,
            v.sigma,
            v.background,
            v.size,
        )?),
    )))
}

/// Edge constructors selectable by `edge.constructor`.
pub fn constructors() -> Registry<EdgeObsConfig, dyn EdgeConstructor> {
    Registry::new("edge constructor")
        .with("state-integration", make_integration)
        .with("npi", make_npi)
        .with("viterbi", make_viterbi)
}

/// `min(D, lambda)` on every weight.
pub fn clamp_upper(mut field: EdgeField, lambda: f64) -> EdgeField {
    field.values.iter_mut().for_each(|v| *v = v.min(lambda));
    field
}

/// `max(D, lambda)` on every weight: the literal reading of the clamp rule.
pub fn clamp_literal_max(mut field: EdgeField, lambda: f64) -> EdgeField {
    field.values.iter_mut().for_each(|v| *v = v.max(lambda));
    field
}

/// Constructor, normalization and clamp for a stream of frames.
#[derive(Debug)]
pub struct EdgeProcessor {
    constructor: Box<dyn EdgeConstructor>,
    normalizer: Option<Normalizer>,
    lambda: Option<f64>,
    literal_max: bool,
    floored: usize,
}

impl EdgeProcessor {
    pub fn new(cfg: &EdgeObsConfig, space: &StateSpace) -> Result<Self> {
        cfg.validate()?;
        let constructor = constructors().create(&cfg.constructor, cfg)?;
        let normalizer = match cfg.normalize {
            NormalizeMode::None => None,
            mode => Some(Normalizer::new(
                mode,
                cfg.stats,
                space.topology().num_edges(),
            )),
        };
        Ok(Self {
            constructor,
            normalizer,
            lambda: cfg.lambda,
            literal_max: cfg.literal_max,
            floored: 0,
        })
    }

    pub fn constructor(&self) -> &dyn EdgeConstructor {
        self.constructor.as_ref()
    }

    /// Edge fields consumed before the processor emits output.
    pub fn warmup(&self) -> usize {
        self.normalizer.as_ref().map_or(0, |n| n.warmup())
    }

    /// Edges whose normalization hit the standard-deviation floor so far.
    pub fn floored_edges(&self) -> usize {
        self.floored
    }

    /// Processes the transition `prev -> cur`. Returns `None` while the
    /// background statistics are still warming up.
    pub fn process(
        &mut self,
        prev: &Frame,
        cur: &Frame,
        t: usize,
        space: &StateSpace,
    ) -> Result<Option<EdgeField>> {
        let raw = self.constructor.build(prev, cur, t, space)?;
        let field = match &mut self.normalizer {
            None => raw,
            Some(n) => match n.apply(raw)? {
                None => return Ok(None),
                Some((field, floored)) => {
                    self.floored += floored;
                    field
                }
            },
        };
        Ok(Some(match self.lambda {
            None => field,
            Some(l) if self.literal_max => clamp_literal_max(field, l),
            Some(l) => clamp_upper(field, l),
        }))
    }
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "signed" => Ok(Self::Signed),
            "absolute" => Ok(Self::Absolute),
            other => Err(Error::Config(format!(
                "unknown normalize mode '{other}' (available: none, signed, absolute)"
            ))),
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Signed => "signed",
            Self::Absolute => "absolute",
        })
    }
}

impl FromStr for StatsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-edge" => Ok(Self::PerEdge),
            "global" => Ok(Self::Global),
            other => Err(Error::Config(format!(
                "unknown stats mode '{other}' (available: per-edge, global)"
            ))),
        }
    }
}

impl fmt::Display for StatsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerEdge => "per-edge",
            Self::Global => "global",
        })
    }
}
