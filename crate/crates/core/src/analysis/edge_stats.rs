use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::edge::{EdgeObsConfig, EdgeProcessor};
use crate::space::StateSpace;
use crate::synth::Scene;
use crate::{Error, Result};

/// Graph distance from the target at or below which a destination counts
/// as near the target.
pub const NEAR_DISTANCE: u32 = 2;

/// Minimum samples per edge class.
pub const MIN_SAMPLES: usize = 1000;

/// Edge weights gathered from scenes with known target trajectories.
#[derive(Debug, Clone, Default)]
pub struct EdgeSamples {
    /// Weights of the true target edge `y_{t-1} -> y_t`, per time step.
    pub target: BTreeMap<usize, Vec<f64>>,
    /// Weights of edges into non-target destinations, keyed by the
    /// destination's graph distance from the target.
    pub by_distance: BTreeMap<u32, Vec<f64>>,
}

impl EdgeSamples {
    pub fn target_count(&self) -> usize {
        self.target.values().map(Vec::len).sum()
    }

    pub fn nontarget_count(&self) -> usize {
        self.by_distance.values().map(Vec::len).sum()
    }

    pub fn merge(&mut self, other: EdgeSamples) {
        for (t, v) in other.target {
            self.target.entry(t).or_default().extend(v);
        }
        for (d, v) in other.by_distance {
            self.by_distance.entry(d).or_default().extend(v);
        }
    }
}

/// Runs the edge processor over `scene` (target 0) and records target-edge
/// weights plus `per_frame` randomly chosen non-target edges per field.
pub fn collect_edge_samples(
    scene: &Scene,
    space: &StateSpace,
    cfg: &EdgeObsConfig,
    per_frame: usize,
    seed: u64,
) -> Result<EdgeSamples> {
    let traj = scene
        .trajectories
        .first()
        .ok_or_else(|| Error::Domain("scene has no target".into()))?;
    let mut proc = EdgeProcessor::new(cfg, space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = space.topology();
    let seq = &scene.sequence;
    let mut out = EdgeSamples::default();
    let all: Vec<usize> = (0..topo.num_states()).collect();
    let state_at = |t: usize| {
        let (r, c) = traj.states[t];
        r * space.width() + c
    };
    if space.kind() != crate::space::SpaceKind::Position {
        return Err(Error::Domain(
            "edge statistics need a position space".into(),
        ));
    }
    for t in 1..seq.len() {
        let Some(field) = proc.process(seq.frame(t - 1), seq.frame(t), t, space)? else {
            continue;
        };
        let (y0, y1) = (state_at(t - 1), state_at(t));
        if let Some(e) = topo.edge_index(y0, y1) {
            out.target.entry(t).or_default().push(field.values[e]);
        }
        let dist = space.distances_from(y1);
        for &j in all.choose_multiple(&mut rng, per_frame) {
            let Some(d) = dist[j] else { continue };
            if d == 0 {
                continue;
            }
            let preds = topo.pred_range(j);
            let e = preds.start + (rand::Rng::random_range(&mut rng, 0..preds.len()));
            out.by_distance.entry(d).or_default().push(field.values[e]);
        }
    }
    Ok(out)
}

/// How the subgaussian scale is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleEstimator {
    /// Sample standard deviation times a safety factor.
    #[default]
    GaussianProxy,
    /// `max over even p <= 8 of ||X - mean||_p / sqrt(p)`.
    Moments,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStats {
    pub mu1: f64,
    pub mu2: f64,
    pub mu2_near: f64,
    pub mu2_far: f64,
    /// Scale before the safety factor.
    pub c_raw: f64,
    pub c: f64,
    pub m: usize,
    pub dp_snr: f64,
}

pub fn dp_snr(mu1: f64, mu2: f64, c: f64, m: usize) -> f64 {
    (mu1 - mu2).powi(2) / (4.0 * c * c * (m as f64).ln())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0).max(1.0)).sqrt()
}

fn moment_scale(v: &[f64]) -> f64 {
    let m = mean(v);
    [2, 4, 6, 8]
        .iter()
        .map(|&p| {
            let norm = (v.iter().map(|x| (x - m).abs().powi(p)).sum::<f64>() / v.len() as f64)
                .powf(1.0 / p as f64);
            norm / (p as f64).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Empirical `mu1`, `mu2`, `C` and DP-SNR for neighborhood bound `m`.
///
/// `mu1` is the smallest per-time mean of target-edge weights; `mu2` the
/// largest mean over non-target distance classes, reported separately for
/// near (`d <= 2`) and far classes; `C` the largest per-class scale times
/// `safety` (1.1 by default).
pub fn estimate_edge_stats(
    samples: &EdgeSamples,
    m: usize,
    estimator: ScaleEstimator,
    safety: f64,
) -> Result<EdgeStats> {
    let nt = samples.target_count();
    if nt < MIN_SAMPLES {
        return Err(Error::Insufficient {
            class: "target edges".into(),
            have: nt,
            need: MIN_SAMPLES,
        });
    }
    let nn = samples.nontarget_count();
    if nn < MIN_SAMPLES {
        return Err(Error::Insufficient {
            class: "non-target edges".into(),
            have: nn,
            need: MIN_SAMPLES,
        });
    }
    let mu1 = samples
        .target
        .values()
        .filter(|v| !v.is_empty())
        .map(|v| mean(v))
        .fold(f64::INFINITY, f64::min);
    let class_max = |near: bool| {
        samples
            .by_distance
            .iter()
            .filter(|(&d, v)| (d <= NEAR_DISTANCE) == near && v.len() >= 2)
            .map(|(_, v)| mean(v))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (mu2_near, mu2_far) = (class_max(true), class_max(false));
    let mu2 = mu2_near.max(mu2_far);
    let scale = |v: &[f64]| match estimator {
        ScaleEstimator::GaussianProxy => std(v),
        ScaleEstimator::Moments => moment_scale(v),
    };
    let all_target: Vec<f64> = samples.target.values().flatten().copied().collect();
    let c_raw = samples
        .by_distance
        .values()
        .filter(|v| v.len() >= 2)
        .map(|v| scale(v))
        .fold(scale(&all_target), f64::max);
    let c = c_raw * safety;
    Ok(EdgeStats {
        mu1,
        mu2,
        mu2_near,
        mu2_far,
        c_raw,
        c,
        m,
        dp_snr: dp_snr(mu1, mu2, c, m),
    })
}

/// Whether `(mu1 - mu2) / n > sqrt(4 C^2 ln M)`, with the margin
/// `(mu1 - mu2) / n - sqrt(4 C^2 ln M)`.
pub fn convergence_criterion(stats: &EdgeStats, n: f64) -> (bool, f64) {
    criterion(stats.mu1, stats.mu2, stats.c, stats.m as f64, n)
}

pub fn criterion(mu1: f64, mu2: f64, c: f64, m: f64, n: f64) -> (bool, f64) {
    let margin = (mu1 - mu2) / n - (4.0 * c * c * m.ln()).sqrt();
    (margin > 0.0, margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge::NormalizeMode;
    use crate::space::Metric;
    use crate::synth::{generate, Background, SceneSpec, TargetSpec};

    fn integration_cfg() -> EdgeObsConfig {
        EdgeObsConfig {
            constructor: "state-integration".into(),
            r: 0,
            lambda: None,
            normalize: NormalizeMode::None,
            ..Default::default()
        }
    }

    fn scene(sigma: f64, seed: u64) -> Scene {
        generate(&SceneSpec {
            height: 32,
            width: 32,
            frames: 60,
            background: Background::Constant(10.0),
            targets: vec![TargetSpec {
                amplitude: 5.0,
                size: 1,
                ..Default::default()
            }],
            sigma,
            v1: 1,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    fn pooled(sigma: f64, scenes: u64) -> EdgeSamples {
        let space = StateSpace::position(32, 32, 1, Metric::Chebyshev).unwrap();
        let mut all = EdgeSamples::default();
        for s in 0..scenes {
            all.merge(
                collect_edge_samples(&scene(sigma, s), &space, &integration_cfg(), 200, s).unwrap(),
            );
        }
        all
    }

    #[test]
    fn noiseless_constant_target() {
        let st =
            estimate_edge_stats(&pooled(0.0, 20), 9, ScaleEstimator::GaussianProxy, 1.1).unwrap();
        assert_eq!(st.mu1, 15.0);
        assert_eq!(st.mu2, 10.0);
        assert_eq!(st.c, 0.0);
    }

    #[test]
    fn pure_noise_is_insufficient() {
        let samples = EdgeSamples {
            target: BTreeMap::new(),
            by_distance: BTreeMap::from([(3, vec![0.0; 5000])]),
        };
        assert!(matches!(
            estimate_edge_stats(&samples, 25, ScaleEstimator::GaussianProxy, 1.1),
            Err(Error::Insufficient { .. })
        ));
    }

    #[test]
    fn gaussian_scale_matches_sigma() {
        let st =
            estimate_edge_stats(&pooled(2.0, 20), 9, ScaleEstimator::GaussianProxy, 1.1).unwrap();
        assert!((st.c_raw - 2.0).abs() < 0.2, "c_raw {}", st.c_raw);
        assert!((st.c - 1.1 * st.c_raw).abs() < 1e-12);
    }

    #[test]
    fn criterion_examples() {
        let e = std::f64::consts::E;
        let (ok, margin) = criterion(2.0, 0.0, 0.5, e, 1.0);
        assert!(ok);
        assert!((margin - 1.0).abs() < 1e-12);
        assert!(!criterion(2.0, 0.0, 0.5, e, 1e12).0);
        // Equality is classified false.
        let (eq, m) = criterion(0.5, 0.5, 0.5, 1.0, 1.0);
        assert!(!eq && m == 0.0);
        let st = EdgeStats {
            mu1: 3.0,
            mu2: 0.0,
            mu2_near: 0.0,
            mu2_far: 0.0,
            c_raw: 0.5,
            c: 0.5,
            m: 25,
            dp_snr: dp_snr(3.0, 0.0, 0.5, 25),
        };
        assert!(convergence_criterion(&st, 1.0).0);
        assert!(!convergence_criterion(&st, 2.0).0);
    }

    #[test]
    fn moment_scale_of_gaussian() {
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..50_000)
            .map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut rng))
            .collect();
        // E|X|^p for standard Gaussians: p=2 gives 1/sqrt(2), p=8 gives 105^(1/8)/sqrt(8).
        let expect = (105f64).powf(1.0 / 8.0) / 8f64.sqrt();
        assert!((moment_scale(&v) - expect.max(0.5f64.sqrt())).abs() < 0.03);
    }
}
