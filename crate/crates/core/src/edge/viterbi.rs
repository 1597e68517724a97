use std::fmt;

use super::{check_frame, EdgeConstructor, EdgeField};
use crate::observation::Frame;
use crate::space::StateSpace;
use crate::topology::Topology;
use crate::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-9;

/// Transition probabilities `P(x_t = j | x_{t-1} = i)` on the edges of a
/// topology.
pub trait TransitionModel: Send + Sync + fmt::Debug {
    /// Probabilities in successor layout: entry `e` of `succ_range(i)` is
    /// the probability of moving from `i` to `succs(i)[e - start]`.
    fn probabilities(&self, topology: &Topology) -> Result<Vec<f64>>;
}

/// Every successor of `i` equally likely.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformTransition;

impl TransitionModel for UniformTransition {
    fn probabilities(&self, topology: &Topology) -> Result<Vec<f64>> {
        let mut p = vec![0.0; topology.num_edges()];
        for i in 0..topology.num_states() {
            let n = topology.out_degree(i) as f64;
            p[topology.succ_range(i)].fill(1.0 / n);
        }
        Ok(p)
    }
}

/// Explicit probabilities in successor layout.
#[derive(Debug, Clone)]
pub struct TableTransition {
    pub probs: Vec<f64>,
}

impl TransitionModel for TableTransition {
    fn probabilities(&self, topology: &Topology) -> Result<Vec<f64>> {
        if self.probs.len() != topology.num_edges() {
            return Err(Error::Config(format!(
                "transition table has {} entries for {} edges",
                self.probs.len(),
                topology.num_edges()
            )));
        }
        Ok(self.probs.clone())
    }
}

fn validate_rows(topology: &Topology, probs: &[f64]) -> Result<()> {
    for i in 0..topology.num_states() {
        let row = &probs[topology.succ_range(i)];
        if let Some(p) = row.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::Config(format!(
                "transition probability {p} out of state {i} is not positive"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::Config(format!(
                "transitions out of state {i} sum to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

/// Per-state observation log-likelihoods for one frame. Any per-frame
/// constant offset is allowed; it does not change the Viterbi argmax.
pub trait LikelihoodModel: Send + Sync + fmt::Debug {
    fn log_likelihood(&self, frame: &Frame, space: &StateSpace) -> Result<Vec<f64>>;
}

/// Independent Gaussian pixels: background `background` everywhere, plus
/// `amplitude` on the `size x size` footprint anchored top-left at the
/// state. Reported as the log-likelihood ratio against the target-free
/// frame, `sum over footprint of a * (z - bg - a/2) / sigma^2`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPixelLikelihood {
    amplitude: f64,
    sigma: f64,
    background: f64,
    size: usize,
}

impl GaussianPixelLikelihood {
    pub fn new(amplitude: f64, sigma: f64, background: f64, size: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || size == 0 || !amplitude.is_finite() {
            return Err(Error::Config(format!(
                "gaussian likelihood needs sigma > 0 and size >= 1, got sigma={sigma}, size={size}"
            )));
        }
        Ok(Self {
            amplitude,
            sigma,
            background,
            size,
        })
    }

    /// Log-likelihood ratio contributed by one observed pixel.
    pub fn pixel_term(&self, z: f64) -> f64 {
        let a = self.amplitude;
        a * (z - self.background - a / 2.0) / (self.sigma * self.sigma)
    }
}

impl LikelihoodModel for GaussianPixelLikelihood {
    fn log_likelihood(&self, frame: &Frame, space: &StateSpace) -> Result<Vec<f64>> {
        check_frame(frame, space)?;
        let (h, w) = (space.height(), space.width());
        let terms: Vec<f64> = frame
            .data()
            .iter()
            .map(|&z| self.pixel_term(z as f64))
            .collect();
        // Footprint pixels falling outside the frame contribute nothing.
        let per_pixel: Vec<f64> = (0..h * w)
            .map(|p| {
                let (r0, c0) = (p / w, p % w);
                let mut s = 0.0;
                for r in r0..(r0 + self.size).min(h) {
                    for c in c0..(c0 + self.size).min(w) {
                        s += terms[r * w + c];
                    }
                }
                s
            })
            .collect();
        Ok((0..space.len())
            .map(|j| per_pixel[space.pixel_of(j)])
            .collect())
    }
}

/// `D_t^{ij} = log P(j | i) + loglik[j]`, in predecessor layout.
pub fn viterbi_weights_from_loglik(
    topology: &Topology,
    transition: &dyn TransitionModel,
    loglik: &[f64],
    t: usize,
) -> Result<EdgeField> {
    if loglik.len() != topology.num_states() {
        return Err(Error::Domain(format!(
            "{} log-likelihoods for {} states",
            loglik.len(),
            topology.num_states()
        )));
    }
    let probs = transition.probabilities(topology)?;
    validate_rows(topology, &probs)?;
    let mut values = vec![0.0; topology.num_edges()];
    for i in 0..topology.num_states() {
        for (e, &j) in topology.succ_range(i).zip(topology.succs(i)) {
            values[topology.succ_edge_to_field(e)] = probs[e].ln() + loglik[j as usize];
        }
    }
    Ok(EdgeField { t, values })
}

/// Viterbi edge weights for frame `cur` at time `t`.
pub fn viterbi_weights(
    cur: &Frame,
    t: usize,
    space: &StateSpace,
    transition: &dyn TransitionModel,
    likelihood: &dyn LikelihoodModel,
) -> Result<EdgeField> {
    let loglik = likelihood.log_likelihood(cur, space)?;
    viterbi_weights_from_loglik(space.topology(), transition, &loglik, t)
}

#[derive(Debug)]
pub struct ViterbiConstructor {
    transition: Box<dyn TransitionModel>,
    likelihood: Box<dyn LikelihoodModel>,
}

impl ViterbiConstructor {
    pub fn new(transition: Box<dyn TransitionModel>, likelihood: Box<dyn LikelihoodModel>) -> Self {
        Self {
            transition,
            likelihood,
        }
    }
}

impl EdgeConstructor for ViterbiConstructor {
    fn name(&self) -> &'static str {
        "viterbi"
    }

    fn build(&self, _prev: &Frame, cur: &Frame, t: usize, space: &StateSpace) -> Result<EdgeField> {
        viterbi_weights(
            cur,
            t,
            space,
            self.transition.as_ref(),
            self.likelihood.as_ref(),
        )
    }
}
