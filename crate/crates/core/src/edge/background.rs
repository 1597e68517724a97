use super::{EdgeField, StatsConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizeMode {
    None,
    /// `(D - mu) / sigma`
    #[default]
    Signed,
    /// `|D - mu| / sigma`
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StatsMode {
    /// One mean and variance per edge.
    #[default]
    PerEdge,
    /// One mean and variance over all edges.
    Global,
}

/// Exponentially weighted running mean and variance of prior edge
/// observations (weighted Welford update).
#[derive(Debug, Clone)]
pub struct BackgroundStats {
    mode: StatsMode,
    decay: f64,
    warmup: usize,
    frames: usize,
    weight: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl BackgroundStats {
    pub fn new(cfg: StatsConfig, num_edges: usize) -> Self {
        let n = match cfg.mode {
            StatsMode::PerEdge => num_edges,
            StatsMode::Global => 1,
        };
        Self {
            mode: cfg.mode,
            decay: cfg.decay,
            warmup: cfg.warmup,
            frames: 0,
            weight: 0.0,
            mean: vec![0.0; n],
            m2: vec![0.0; n],
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
        }
    }

    pub fn mode(&self) -> StatsMode {
        self.mode
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// True once `warmup` fields (and at least one) have been absorbed.
    pub fn ready(&self) -> bool {
        self.frames >= self.warmup.max(1)
    }

    /// Smallest standard deviation used when dividing.
    pub fn sigma_floor(&self) -> f64 {
        let range = if self.hi > self.lo {
            self.hi - self.lo
        } else {
            0.0
        };
        (1e-6 * range).max(1e-12)
    }

    /// Running mean for edge `e`.
    pub fn mean(&self, e: usize) -> f64 {
        self.mean[self.slot(e)]
    }

    /// Running standard deviation for edge `e`, before flooring.
    pub fn std(&self, e: usize) -> f64 {
        let s = self.slot(e);
        if self.weight > 0.0 {
            (self.m2[s] / self.weight).max(0.0).sqrt()
        } else {
            0.0
        }
    }

    fn slot(&self, e: usize) -> usize {
        match self.mode {
            StatsMode::PerEdge => e,
            StatsMode::Global => 0,
        }
    }

    /// Absorbs one field of raw (pre-normalization) values.
    pub fn update(&mut self, values: &[f64]) -> Result<()> {
        for &v in values {
            self.lo = self.lo.min(v);
            self.hi = self.hi.max(v);
        }
        let g = self.decay;
        match self.mode {
            StatsMode::PerEdge => {
                if values.len() != self.mean.len() {
                    return Err(Error::Domain(format!(
                        "edge field has {} values, statistics track {}",
                        values.len(),
                        self.mean.len()
                    )));
                }
                let w = g * self.weight + 1.0;
                for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
                    let d = x - *m;
                    *m += d / w;
                    *s = g * *s + d * (x - *m);
                }
                self.weight = w;
            }
            StatsMode::Global => {
                let n = values.len() as f64;
                if n == 0.0 {
                    return Ok(());
                }
                let mb = values.iter().sum::<f64>() / n;
                let sb: f64 = values.iter().map(|x| (x - mb) * (x - mb)).sum();
                let old = g * self.weight;
                let w = old + n;
                let d = mb - self.mean[0];
                self.mean[0] += d * n / w;
                self.m2[0] = g * self.m2[0] + sb + d * d * old * n / w;
                self.weight = w;
            }
        }
        self.frames += 1;
        Ok(())
    }
}

/// Normalizes `field` against `stats`. Returns the new field and the number
/// of edges whose standard deviation was raised to the floor.
pub fn normalize(
    field: &EdgeField,
    stats: &BackgroundStats,
    mode: NormalizeMode,
) -> Result<(EdgeField, usize)> {
    if !stats.ready() {
        return Err(Error::NotReady {
            consumed: stats.frames(),
            k: stats.warmup.max(1),
        });
    }
    let floor = stats.sigma_floor();
    let mut floored = 0;
    let values = field
        .values
        .iter()
        .enumerate()
        .map(|(e, &d)| {
            let mut sd = stats.std(e);
            if !(sd >= floor) {
                sd = floor;
                floored += 1;
            }
            let z = d - stats.mean(e);
            match mode {
                NormalizeMode::Absolute => z.abs() / sd,
                NormalizeMode::Signed => z / sd,
                NormalizeMode::None => d,
            }
        })
        .collect();
    Ok((EdgeField { t: field.t, values }, floored))
}

/// Running statistics plus the normalization applied to each new field.
#[derive(Debug, Clone)]
pub struct Normalizer {
    mode: NormalizeMode,
    stats: BackgroundStats,
}

impl Normalizer {
    pub fn new(mode: NormalizeMode, cfg: StatsConfig, num_edges: usize) -> Self {
        Self {
            mode,
            stats: BackgroundStats::new(cfg, num_edges),
        }
    }

    pub fn warmup(&self) -> usize {
        self.stats.warmup
    }

    pub fn stats(&self) -> &BackgroundStats {
        &self.stats
    }

    /// Normalizes with statistics of prior fields only, then absorbs the raw
    /// field. Returns `None` during warmup.
    pub fn apply(&mut self, raw: EdgeField) -> Result<Option<(EdgeField, usize)>> {
        let out = if self.stats.ready() {
            Some(normalize(&raw, &self.stats, self.mode)?)
        } else {
            None
        };
        self.stats.update(&raw.values)?;
        Ok(out)
    }
}
