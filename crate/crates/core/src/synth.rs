//! Synthetic scenes: square constant-amplitude targets on a background with
//! i.i.d. Gaussian pixel noise.
//!
//! A target at state `(row, col)` covers the `size x size` square whose
//! top-left pixel is `(row, col)`. Frame noise comes from a per-frame
//! ChaCha stream, so frames can be rendered in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::observation::{Frame, FrameSequence};
use crate::space::{ball_offsets, Metric, StateSpace};
use crate::{Error, Result};

/// `a / sigma`; infinite when `sigma = 0` and `a > 0`, zero when `a = 0`.
pub fn snr_of(a: f64, sigma: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if sigma == 0.0 {
        f64::INFINITY
    } else {
        a / sigma
    }
}

/// Noise level giving `snr` for amplitude `a`.
pub fn sigma_for_snr(a: f64, snr: f64) -> f64 {
    if snr.is_infinite() {
        0.0
    } else {
        a / snr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Constant(f64),
    Image(Frame),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub size: usize,
    pub amplitude: f64,
    /// Initial top-left position; random when `None`.
    pub start: Option<(usize, usize)>,
    /// Seed of the motion; derived from the scene seed when `None`.
    pub motion_seed: Option<u64>,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            size: 2,
            amplitude: 1.0,
            start: None,
            motion_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub background: Background,
    pub targets: Vec<TargetSpec>,
    pub sigma: f64,
    /// Speed bound of the target random walks.
    pub v1: usize,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            frames: 20,
            background: Background::Constant(0.0),
            targets: vec![TargetSpec::default()],
            sigma: 0.0,
            v1: 2,
            metric: Metric::Chebyshev,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.frames < 2 {
            return Err(Error::Scene(format!(
                "a scene needs positive frame size and at least 2 frames, got {}x{}x{}",
                self.frames, self.height, self.width
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Scene(format!(
                "noise sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if let Background::Image(img) = &self.background {
            if img.height() != self.height || img.width() != self.width {
                return Err(Error::Scene(format!(
                    "background image is {}x{}, scene is {}x{}",
                    img.height(),
                    img.width(),
                    self.height,
                    self.width
                )));
            }
        }
        for (n, t) in self.targets.iter().enumerate() {
            if !(t.amplitude > 0.0 && t.amplitude.is_finite()) {
                return Err(Error::Scene(format!(
                    "target {n} amplitude must be positive, got {}",
                    t.amplitude
                )));
            }
            if t.size == 0 || t.size > self.height || t.size > self.width {
                return Err(Error::Scene(format!(
                    "target {n} of size {} does not fit a {}x{} frame",
                    t.size, self.height, self.width
                )));
            }
            if let Some((r, c)) = t.start {
                if r + t.size > self.height || c + t.size > self.width {
                    return Err(Error::Scene(format!(
                        "target {n} starts at ({r}, {c}), outside the frame"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Seed of target `n`'s motion.
    pub fn motion_seed(&self, n: usize) -> u64 {
        self.targets[n]
            .motion_seed
            .unwrap_or_else(|| splitmix(self.seed ^ splitmix(n as u64 + 1)))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Where a walk may go: positions `0..height` by `0..width`, steps of
/// metric length at most `v1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walk {
    pub height: usize,
    pub width: usize,
    pub v1: usize,
    pub metric: Metric,
}

impl Walk {
    /// Walk of a `footprint`-sized target in `space`.
    pub fn for_space(space: &StateSpace, footprint: usize) -> Result<Self> {
        if footprint == 0 || footprint > space.height() || footprint > space.width() {
            return Err(Error::Scene(format!(
                "footprint {footprint} does not fit the frame"
            )));
        }
        Ok(Self {
            height: space.height() + 1 - footprint,
            width: space.width() + 1 - footprint,
            v1: space.v1(),
            metric: space.metric(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// Top-left position at each frame.
    pub states: Vec<(usize, usize)>,
}

fn reflect(x: i64, max: i64) -> usize {
    let mut y = x;
    if y < 0 {
        y = -y;
    }
    if y > max {
        y = 2 * max - y;
    }
    y.clamp(0, max) as usize
}

/// Random walk with displacements uniform over the `v1` ball, reflecting at
/// the borders. Deterministic per seed.
pub fn gen_trajectory(
    walk: &Walk,
    frames: usize,
    start: Option<(usize, usize)>,
    seed: u64,
) -> Result<Trajectory> {
    if frames == 0 {
        return Err(Error::Scene("a trajectory needs at least one frame".into()));
    }
    if walk.height == 0 || walk.width == 0 {
        return Err(Error::Scene("walk area is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = match start {
        Some((r, c)) if r < walk.height && c < walk.width => (r, c),
        Some(s) => return Err(Error::Scene(format!("start {s:?} outside the walk area"))),
        None => (
            rng.random_range(0..walk.height),
            rng.random_range(0..walk.width),
        ),
    };
    let offsets = ball_offsets(walk.v1 as i64, walk.metric, false);
    let mut states = Vec::with_capacity(frames);
    states.push(cur);
    for _ in 1..frames {
        let (dr, dc) = offsets[rng.random_range(0..offsets.len())];
        cur = (
            reflect(cur.0 as i64 + dr, walk.height as i64 - 1),
            reflect(cur.1 as i64 + dc, walk.width as i64 - 1),
        );
        states.push(cur);
    }
    Ok(Trajectory { states })
}

/// A rendered scene with ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub sequence: FrameSequence,
    /// Footprint union per frame, row-major.
    pub masks: Vec<Vec<bool>>,
    pub trajectories: Vec<Trajectory>,
}

/// Trajectories for every target of `spec`.
pub fn scene_trajectories(spec: &SceneSpec) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    (0..spec.targets.len())
        .map(|n| {
            let t = &spec.targets[n];
            let walk = Walk {
                height: spec.height + 1 - t.size,
                width: spec.width + 1 - t.size,
                v1: spec.v1,
                metric: spec.metric,
            };
            gen_trajectory(&walk, spec.frames, t.start, spec.motion_seed(n))
        })
        .collect()
}

/// Renders frames and masks for the given trajectories.
pub fn render_sequence(spec: &SceneSpec, trajectories: &[Trajectory]) -> Result<Scene> {
    spec.validate()?;
    if trajectories.len() != spec.targets.len() {
        return Err(Error::Scene(format!(
            "{} trajectories for {} targets",
            trajectories.len(),
            spec.targets.len()
        )));
    }
    let (h, w) = (spec.height, spec.width);
    for (n, (tr, tg)) in trajectories.iter().zip(&spec.targets).enumerate() {
        if tr.states.len() < spec.frames {
            return Err(Error::Scene(format!(
                "trajectory {n} is shorter than the scene"
            )));
        }
        if let Some(t) = tr.states[..spec.frames]
            .iter()
            .position(|&(r, c)| r + tg.size > h || c + tg.size > w)
        {
            return Err(Error::Scene(format!(
                "target {n} leaves the frame at t={t}"
            )));
        }
    }
    let noise = if spec.sigma > 0.0 {
        Some(Normal::new(0.0, spec.sigma).map_err(|e| Error::Scene(e.to_string()))?)
    } else {
        None
    };
    let rendered: Vec<(Frame, Vec<bool>)> = (0..spec.frames)
        .into_par_iter()
        .map(|t| {
            let mut data: Vec<f64> = match &spec.background {
                Background::Constant(c) => vec![*c; h * w],
                Background::Image(img) => img.data().iter().map(|&v| v as f64).collect(),
            };
            let mut mask = vec![false; h * w];
            for (tr, tg) in trajectories.iter().zip(&spec.targets) {
                let (r0, c0) = tr.states[t];
                for r in r0..r0 + tg.size {
                    for c in c0..c0 + tg.size {
                        data[r * w + c] += tg.amplitude;
                        mask[r * w + c] = true;
                    }
                }
            }
            if let Some(noise) = &noise {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(t as u64 + 1);
                for v in &mut data {
                    *v += noise.sample(&mut rng);
                }
            }
            let frame = Frame::new(h, w, data.into_iter().map(|v| v as f32).collect())?;
            Ok((frame, mask))
        })
        .collect::<Result<_>>()?;
    let (frames, masks): (Vec<_>, Vec<_>) = rendered.into_iter().unzip();
    Ok(Scene {
        sequence: FrameSequence::new(frames)?,
        masks,
        trajectories: trajectories.to_vec(),
    })
}

/// Trajectories and rendering in one call.
pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    let tr = scene_trajectories(spec)?;
    render_sequence(spec, &tr)
}
