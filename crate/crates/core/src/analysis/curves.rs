use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detector::{background_mean, segment, DetectionLimit};
use crate::edge::{EdgeObsConfig, EdgeProcessor, StatsConfig};
use crate::engine::LpaTables;
use crate::space::{Metric, StateSpace};
use crate::synth::{
    gen_trajectory, render_sequence, sigma_for_snr, Background, SceneSpec, TargetSpec, Trajectory,
    Walk,
};
use crate::{Error, Result};

/// Wilson score interval for `x` successes out of `n` at normal quantile `z`.
pub fn wilson(x: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = x as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept,
        r2,
    }
}

/// Fit of `log(rate)` against `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub se: f64,
}

impl LogRateFit {
    /// Upper end of the two-sided 95% interval of the slope.
    pub fn upper95(&self) -> f64 {
        self.slope + 1.959964 * self.se
    }
}

/// Weighted least squares of `log((x + 0.5) / (n + 1))` on `k`, weighting
/// each point by the inverse delta-method variance `n p / (1 - p)`.
pub fn log_rate_fit(points: &[(f64, u64, u64)]) -> LogRateFit {
    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(k, x, n)| {
            let p = (x as f64 + 0.5) / (n as f64 + 1.0);
            let w = n as f64 * p / (1.0 - p);
            (k, p.ln(), w)
        })
        .collect();
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let mx = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let my = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - mx) * (r.1 - my)).sum();
    let slope = sxy / sxx;
    LogRateFit {
        slope,
        intercept: my - slope * mx,
        se: (1.0 / sxx).sqrt(),
    }
}

/// Linear-interpolated quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Largest Euclidean distance from `target` to any of `positives`
/// (pixel indices in a `width`-wide frame); `None` when there are none.
pub fn positive_region_radius(
    positives: &[usize],
    width: usize,
    target: (usize, usize),
) -> Option<f64> {
    positives
        .iter()
        .map(|&p| {
            let dr = (p / width) as f64 - target.0 as f64;
            let dc = (p % width) as f64 - target.1 as f64;
            (dr * dr + dc * dc).sqrt()
        })
        .reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSummary {
    pub mean: f64,
    pub p90: f64,
    pub p99: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Mean, 90th and 99th percentile over trials with a radius.
pub fn radius_stats(radii: &[Option<f64>]) -> RadiusSummary {
    let mut v: Vec<f64> = radii.iter().flatten().copied().collect();
    v.sort_by(f64::total_cmp);
    let mean = if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    };
    RadiusSummary {
        mean,
        p90: quantile(&v, 0.90),
        p99: quantile(&v, 0.99),
        used: v.len(),
        excluded: radii.len() - v.len(),
    }
}

/// Monte Carlo setup for false positive / false negative curves.
#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub height: usize,
    pub width: usize,
    pub target_size: usize,
    pub amplitude: f64,
    /// `a / sigma`; infinite for noiseless scenes.
    pub snr: f64,
    pub background: f64,
    pub v1: usize,
    pub edge: EdgeObsConfig,
    pub alpha: f64,
    pub limit: DetectionLimit,
    pub ks: Vec<usize>,
    pub n: f64,
    pub trials: usize,
    /// Far states sampled per trial and per `k`.
    pub fp_samples: usize,
    /// Width of the distance band just beyond `2k/n` that far states are
    /// drawn from.
    pub band: u32,
    /// Ranges for the target's starting row and column; whole frame when
    /// `None`.
    pub start_region: Option<((usize, usize), (usize, usize))>,
    pub seed: u64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            target_size: 2,
            amplitude: 20.0,
            snr: 1.5,
            background: 100.0,
            v1: 2,
            edge: EdgeObsConfig {
                stats: StatsConfig {
                    warmup: 60,
                    ..Default::default()
                },
                ..Default::default()
            },
            alpha: 0.8,
            limit: DetectionLimit::default(),
            ks: vec![5, 10, 15, 20, 30, 40],
            n: 2.0,
            trials: 200,
            fp_samples: 200,
            band: 2,
            start_region: Some(((16, 32), (16, 32))),
            seed: 0,
        }
    }
}

impl CurveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("analysis.trials must be at least 1".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config(
                "analysis.k needs positive path lengths".into(),
            ));
        }
        if !(self.n >= 1.0) {
            return Err(Error::Config(format!(
                "analysis.n must be >= 1, got {}",
                self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        self.edge.validate()
    }

    /// Distance band `(lo, hi]` of far states for path length `k`.
    pub fn far_band(&self, k: usize) -> (u32, u32) {
        let lo = (2.0 * k as f64 / self.n).floor() as u32;
        (lo, lo + self.band)
    }
}

/// Outcome of one trial at one `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub k: usize,
    pub false_negative: bool,
    pub fp_hits: u64,
    pub fp_total: u64,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub k: usize,
    pub trials: usize,
    pub fn_count: u64,
    pub fn_rate: f64,
    pub fn_lo: f64,
    pub fn_hi: f64,
    pub fp_hits: u64,
    pub fp_total: u64,
    pub fp_rate: f64,
    pub fp_lo: f64,
    pub fp_hi: f64,
    pub radius: RadiusSummary,
}

/// Runs one trial: one scene, one staircase up to the largest `k`, and the
/// classification of the target and of far states at every `k`.
///
/// The threshold used for every state is the one of the segment holding
/// the true target state; if the target is in no segment it is a false
/// negative and the lower detection limit serves as threshold.
pub fn run_trial(cfg: &CurveConfig, trial: u64) -> Result<Vec<TrialOutcome>> {
    let seed = cfg
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = *cfg.ks.iter().max().unwrap();
    let warmup = match cfg.edge.normalize {
        crate::edge::NormalizeMode::None => 0,
        _ => cfg.edge.stats.warmup.max(1),
    };
    let frames = warmup + kmax + 1;
    let space = StateSpace::position(cfg.height, cfg.width, cfg.v1, Metric::Chebyshev)?;
    let walk = Walk::for_space(&space, cfg.target_size)?;
    let start = cfg
        .start_region
        .map(|((r0, r1), (c0, c1))| (rng.random_range(r0..=r1), rng.random_range(c0..=c1)));
    let traj: Trajectory = gen_trajectory(&walk, frames, start, rng.random())?;
    let spec = SceneSpec {
        height: cfg.height,
        width: cfg.width,
        frames,
        background: Background::Constant(cfg.background),
        targets: vec![TargetSpec {
            size: cfg.target_size,
            amplitude: cfg.amplitude,
            start,
            motion_seed: None,
        }],
        sigma: sigma_for_snr(cfg.amplitude, cfg.snr),
        v1: cfg.v1,
        metric: Metric::Chebyshev,
        seed: rng.random(),
    };
    let scene = render_sequence(&spec, std::slice::from_ref(&traj))?;
    let seq = &scene.sequence;

    let mut proc = EdgeProcessor::new(&cfg.edge, &space)?;
    let mut tables = LpaTables::new(space.topology().clone(), kmax, false)?;
    for t in 1..seq.len() {
        if let Some(field) = proc.process(seq.frame(t - 1), seq.frame(t), t, &space)? {
            tables.lpa_step(&field)?;
        }
    }
    let (yr, yc) = traj.states[frames - 1];
    let y = yr * cfg.width + yc;
    let dist = space.distances_from(y);

    let mut out = Vec::with_capacity(cfg.ks.len());
    for &k in &cfg.ks {
        let h: Vec<f64> = tables.layer(k).iter().map(|v| v / k as f64).collect();
        let limit = cfg.limit.resolve(&h);
        let seg = segment(&h, space.topology(), limit)?;
        let bg = background_mean(&h, &seg)?;
        let (delta, members) = match seg.segment_of(y) {
            Some(w) => {
                let members = &seg.segments[w];
                let peak = members
                    .iter()
                    .map(|&s| h[s])
                    .fold(f64::NEG_INFINITY, f64::max);
                (cfg.alpha * peak + (1.0 - cfg.alpha) * bg, Some(members))
            }
            None => (limit, None),
        };
        let false_negative = members.is_none() || !(h[y] > delta);
        let radius = members.and_then(|m| {
            let pos: Vec<usize> = m.iter().copied().filter(|&s| h[s] > delta).collect();
            positive_region_radius(&pos, cfg.width, (yr, yc))
        });
        let (lo, hi) = cfg.far_band(k);
        let far: Vec<usize> = (0..h.len())
            .filter(|&s| dist[s].is_some_and(|d| d > lo && d <= hi))
            .collect();
        let (mut fp_hits, mut fp_total) = (0, 0);
        for &s in far.choose_multiple(&mut rng, cfg.fp_samples) {
            fp_total += 1;
            if h[s] > delta {
                fp_hits += 1;
            }
        }
        out.push(TrialOutcome {
            k,
            false_negative,
            fp_hits,
            fp_total,
            radius,
        });
    }
    Ok(out)
}

/// Aggregates trial outcomes into one point per `k`.
pub fn aggregate(ks: &[usize], trials: &[Vec<TrialOutcome>]) -> Vec<CurvePoint> {
    ks.iter()
        .enumerate()
        .map(|(i, &k)| {
            let rows: Vec<&TrialOutcome> = trials.iter().map(|t| &t[i]).collect();
            let n = rows.len() as u64;
            let fn_count = rows.iter().filter(|r| r.false_negative).count() as u64;
            let fp_hits: u64 = rows.iter().map(|r| r.fp_hits).sum();
            let fp_total: u64 = rows.iter().map(|r| r.fp_total).sum();
            let (fn_lo, fn_hi) = wilson(fn_count, n, 1.959964);
            let (fp_lo, fp_hi) = wilson(fp_hits, fp_total, 1.959964);
            let radii: Vec<Option<f64>> = rows.iter().map(|r| r.radius).collect();
            CurvePoint {
                k,
                trials: rows.len(),
                fn_count,
                fn_rate: fn_count as f64 / n as f64,
                fn_lo,
                fn_hi,
                fp_hits,
                fp_total,
                fp_rate: if fp_total == 0 {
                    0.0
                } else {
                    fp_hits as f64 / fp_total as f64
                },
                fp_lo,
                fp_hi,
                radius: radius_stats(&radii),
            }
        })
        .collect()
}

/// False positive / false negative rates and positive-region radii as a
/// function of `k`.
pub fn error_curves(cfg: &CurveConfig) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    let trials: Vec<Vec<TrialOutcome>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect::<Result<_>>()?;
    Ok(aggregate(&cfg.ks, &trials))
}
