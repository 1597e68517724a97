//! Frame-by-frame detection: edge observations, LPA-k engine, detector.

use crate::detector::{DetectConfig, DetectionResult, Detector};
use crate::edge::{EdgeObsConfig, EdgeProcessor};
use crate::engine::{create_engine, EngineConfig, EngineMode, ExactEngine, LpaEngine};
use crate::observation::FrameSequence;
use crate::space::{Metric, SpaceKind, StateSpace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub v1: usize,
    pub a1: usize,
    pub metric: Metric,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            kind: SpaceKind::Position,
            v1: 2,
            a1: 2,
            metric: Metric::Chebyshev,
        }
    }
}

impl SpaceConfig {
    pub fn build(&self, height: usize, width: usize) -> Result<StateSpace> {
        match self.kind {
            SpaceKind::Position => StateSpace::position(height, width, self.v1, self.metric),
            SpaceKind::PositionVelocity => {
                StateSpace::position_velocity(height, width, self.v1, self.a1, self.metric)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub space: SpaceConfig,
    pub edge: EdgeObsConfig,
    pub engine: EngineConfig,
    pub detect: DetectConfig,
    /// Run an exact engine alongside an approximate one and report the
    /// largest per-state difference each frame.
    pub track_drift: bool,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.space.v1 == 0 {
            return Err(Error::Config("space.v1 must be at least 1".into()));
        }
        self.edge.validate()?;
        self.engine.validate()?;
        self.detect.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    /// Background statistics still warming up; no edge field was produced.
    Warmup,
    /// Fewer than `k` fields consumed.
    NotReady,
    Detected,
    /// Segmentation found no background states.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub t: usize,
    pub status: FrameStatus,
    /// Detection field over positions (velocity states projected out).
    pub field: Option<Vec<f64>>,
    pub detection: Option<DetectionResult>,
    /// Largest `|exact - approx|` over states, when drift is tracked.
    pub drift: Option<f64>,
    pub since_refresh: Option<usize>,
}

impl FrameOutput {
    /// Positive pixels as a row-major mask, all false when nothing was
    /// detected.
    pub fn mask(&self, pixels: usize) -> Vec<bool> {
        self.detection
            .as_ref()
            .map_or_else(|| vec![false; pixels], |d| d.positive.clone())
    }
}

#[derive(Debug)]
pub struct Pipeline {
    space: StateSpace,
    positions: StateSpace,
    processor: EdgeProcessor,
    engine: Box<dyn LpaEngine>,
    shadow: Option<ExactEngine>,
    detector: Detector,
    next_t: usize,
}

impl Pipeline {
    pub fn new(cfg: &PipelineConfig, height: usize, width: usize) -> Result<Self> {
        cfg.validate()?;
        let space = cfg.space.build(height, width)?;
        let positions = space.position_space()?;
        let processor = EdgeProcessor::new(&cfg.edge, &space)?;
        let engine = create_engine(&cfg.engine, space.topology().clone())?;
        let shadow = if cfg.track_drift && cfg.engine.mode == EngineMode::Approx {
            Some(ExactEngine::new(
                space.topology().clone(),
                cfg.engine.k,
                false,
            )?)
        } else {
            None
        };
        Ok(Self {
            space,
            positions,
            processor,
            engine,
            shadow,
            detector: Detector::new(cfg.detect)?,
            next_t: 1,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn engine(&self) -> &dyn LpaEngine {
        self.engine.as_ref()
    }

    pub fn processor(&self) -> &EdgeProcessor {
        &self.processor
    }

    /// Consumes frame `t` of `seq` (the transition from `t - 1`).
    pub fn step(&mut self, seq: &FrameSequence, t: usize) -> Result<FrameOutput> {
        if t != self.next_t {
            return Err(Error::Sequencing {
                expected: self.next_t,
                got: t,
            });
        }
        self.next_t += 1;
        let mut out = FrameOutput {
            t,
            status: FrameStatus::Warmup,
            field: None,
            detection: None,
            drift: None,
            since_refresh: None,
        };
        let Some(edges) = self
            .processor
            .process(seq.frame(t - 1), seq.frame(t), t, &self.space)?
        else {
            return Ok(out);
        };
        self.engine.step(&edges)?;
        if let Some(shadow) = &mut self.shadow {
            shadow.step(&edges)?;
        }
        if !self.engine.ready() {
            out.status = FrameStatus::NotReady;
            return Ok(out);
        }
        let h = self.engine.field()?;
        if let Some(shadow) = &self.shadow {
            let exact = shadow.field()?;
            out.drift = Some(
                exact
                    .iter()
                    .zip(&h)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        let field = self.space.project_to_position(&h)?;
        match self.detector.detect(&field, self.positions.topology(), t) {
            Ok((_, det)) => {
                out.status = FrameStatus::Detected;
                out.detection = Some(det);
            }
            Err(Error::DegenerateSegmentation { .. }) => out.status = FrameStatus::Degenerate,
            Err(e) => return Err(e),
        }
        out.field = Some(field);
        Ok(out)
    }

    /// Runs over every transition of `seq`.
    pub fn run(&mut self, seq: &FrameSequence) -> Result<Vec<FrameOutput>> {
        (1..seq.len()).map(|t| self.step(seq, t)).collect()
    }
}
