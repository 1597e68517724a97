//! From an LPA field to detections.
//!
//! States above a lower detection limit `L` are grouped into connected
//! target segments; everything else is background. Each segment `w` gets the
//! threshold `delta_w = alpha * max_w H + (1 - alpha) * mean_bg H`, and its
//! states with `H > delta_w` are positive.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::topology::Topology;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionLimit {
    Absolute(f64),
    /// Field mean plus this many field standard deviations, per frame.
    Sigma(f64),
}

impl Default for DetectionLimit {
    fn default() -> Self {
        DetectionLimit::Sigma(2.0)
    }
}

impl DetectionLimit {
    /// The limit for one field.
    pub fn resolve(&self, field: &[f64]) -> f64 {
        match *self {
            DetectionLimit::Absolute(l) => l,
            DetectionLimit::Sigma(s) => {
                let n = field.len() as f64;
                let m = field.iter().sum::<f64>() / n;
                let var = field.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                m + s * var.sqrt()
            }
        }
    }
}

impl FromStr for DetectionLimit {
    type Err = Error;

    /// `auto-2sigma` (any `auto-<x>sigma`) or a number.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(x) = s
            .strip_prefix("auto-")
            .and_then(|r| r.strip_suffix("sigma"))
        {
            let k: f64 = x
                .parse()
                .map_err(|_| Error::Config(format!("bad detection limit '{s}'")))?;
            return Ok(DetectionLimit::Sigma(k));
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(DetectionLimit::Absolute(v)),
            _ => Err(Error::Config(format!(
                "bad detection limit '{s}' (expected a number or auto-2sigma)"
            ))),
        }
    }
}

impl fmt::Display for DetectionLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectionLimit::Absolute(v) => write!(f, "{v}"),
            DetectionLimit::Sigma(k) => write!(f, "auto-{k}sigma"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub alpha: f64,
    pub limit: DetectionLimit,
    /// Frames averaged into the background estimate; 1 disables smoothing.
    pub smoothing: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            limit: DetectionLimit::default(),
            smoothing: 1,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "detect.alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.smoothing == 0 {
            return Err(Error::Config("detect.smoothing must be at least 1".into()));
        }
        Ok(())
    }
}

/// Target segments and background of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Segment id per state, `None` for background.
    pub labels: Vec<Option<u32>>,
    /// States of each target segment, ascending.
    pub segments: Vec<Vec<usize>>,
    pub background: Vec<usize>,
    pub limit: f64,
}

impl Segmentation {
    pub fn segment_of(&self, state: usize) -> Option<usize> {
        self.labels[state].map(|l| l as usize)
    }
}

/// Connected components of `{H > limit}` under the topology's adjacency
/// (edges taken in either direction).
pub fn segment(field: &[f64], topology: &Topology, limit: f64) -> Result<Segmentation> {
    let n = topology.num_states();
    if field.len() != n {
        return Err(Error::Domain(format!(
            "field has {} values for {n} states",
            field.len()
        )));
    }
    let above = |s: usize| field[s] > limit;
    let mut labels = vec![None; n];
    let mut segments = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if labels[seed].is_some() || !above(seed) {
            continue;
        }
        let id = segments.len() as u32;
        let mut members = vec![seed];
        labels[seed] = Some(id);
        queue.push_back(seed);
        while let Some(s) = queue.pop_front() {
            for &nb in topology.succs(s).iter().chain(topology.preds(s)) {
                let nb = nb as usize;
                if labels[nb].is_none() && above(nb) {
                    labels[nb] = Some(id);
                    members.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        members.sort_unstable();
        segments.push(members);
    }
    let background: Vec<usize> = (0..n).filter(|&s| labels[s].is_none()).collect();
    if background.is_empty() {
        return Err(Error::DegenerateSegmentation { states: n, limit });
    }
    Ok(Segmentation {
        labels,
        segments,
        background,
        limit,
    })
}

/// `(max of H over segment w, mean of H over the background)`.
pub fn mixing_estimates(field: &[f64], seg: &Segmentation, w: usize) -> Result<(f64, f64)> {
    let members = seg
        .segments
        .get(w)
        .ok_or_else(|| Error::Domain(format!("no target segment {w}")))?;
    let target = members
        .iter()
        .map(|&s| field[s])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((target, background_mean(field, seg)?))
}

pub fn background_mean(field: &[f64], seg: &Segmentation) -> Result<f64> {
    if seg.background.is_empty() {
        return Err(Error::DegenerateSegmentation {
            states: field.len(),
            limit: seg.limit,
        });
    }
    Ok(seg.background.iter().map(|&s| field[s]).sum::<f64>() / seg.background.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub size: usize,
    pub peak_value: f64,
    pub peak_state: usize,
    pub delta: f64,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub t: usize,
    pub limit: f64,
    pub background_est: f64,
    pub segments: Vec<SegmentSummary>,
    /// Positive flag per state.
    pub positive: Vec<bool>,
}

impl DetectionResult {
    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.positive
            .iter()
            .enumerate()
            .filter_map(|(s, &p)| p.then_some(s))
    }
}

/// Per-segment thresholds and the positive mask, using the field's own
/// background mean.
pub fn threshold(
    field: &[f64],
    seg: &Segmentation,
    alpha: f64,
    t: usize,
) -> Result<DetectionResult> {
    let bg = background_mean(field, seg)?;
    threshold_with_background(field, seg, alpha, bg, t)
}

/// As [`threshold`], with the background estimate supplied.
pub fn threshold_with_background(
    field: &[f64],
    seg: &Segmentation,
    alpha: f64,
    background_est: f64,
    t: usize,
) -> Result<DetectionResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let mut positive = vec![false; field.len()];
    let mut segments = Vec::with_capacity(seg.segments.len());
    for members in &seg.segments {
        let mut peak_state = members[0];
        for &s in members {
            if field[s] > field[peak_state] {
                peak_state = s;
            }
        }
        let peak_value = field[peak_state];
        let delta = alpha * peak_value + (1.0 - alpha) * background_est;
        let mut count = 0;
        for &s in members {
            if field[s] > delta {
                positive[s] = true;
                count += 1;
            }
        }
        segments.push(SegmentSummary {
            size: members.len(),
            peak_value,
            peak_state,
            delta,
            positives: count,
        });
    }
    Ok(DetectionResult {
        t,
        limit: seg.limit,
        background_est,
        segments,
        positive,
    })
}

/// Segmentation plus thresholding with optional temporal smoothing of the
/// background estimate.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectConfig,
    history: VecDeque<f64>,
}

impl Detector {
    pub fn new(cfg: DetectConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            history: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &DetectConfig {
        &self.cfg
    }

    pub fn detect(
        &mut self,
        field: &[f64],
        topology: &Topology,
        t: usize,
    ) -> Result<(Segmentation, DetectionResult)> {
        let limit = self.cfg.limit.resolve(field);
        let seg = segment(field, topology, limit)?;
        let bg = background_mean(field, &seg)?;
        self.history.push_back(bg);
        if self.history.len() > self.cfg.smoothing {
            self.history.pop_front();
        }
        let smoothed = self.history.iter().sum::<f64>() / self.history.len() as f64;
        let result = threshold_with_background(field, &seg, self.cfg.alpha, smoothed, t)?;
        Ok((seg, result))
    }
}
