use std::sync::Arc;

use rayon::prelude::*;

use super::{argmax, check_sequence, LpaEngine};
use crate::edge::EdgeField;
use crate::topology::Topology;
use crate::{Error, Result};

/// Growing path length: after `t` fields the value at `j` is the best
/// t-edge path sum `V(j)`, reported as `H_t = V / t`.
///
/// With Viterbi edge weights `V` is the log of the maximum path probability
/// up to a constant, so `argmax_j H_t(j)` is the MAP final state.
#[derive(Debug, Clone)]
pub struct ViterbiEngine {
    topology: Arc<Topology>,
    v: Vec<f64>,
    consumed: usize,
    t: Option<usize>,
    relaxations: u64,
}

impl ViterbiEngine {
    pub fn new(topology: Arc<Topology>) -> Self {
        let n = topology.num_states();
        Self {
            topology,
            v: vec![0.0; n],
            consumed: 0,
            t: None,
            relaxations: 0,
        }
    }

    /// Starts from per-state log-priors (for example `log pi(j)` plus the
    /// log-likelihood of the first frame) instead of zero.
    pub fn with_initial(topology: Arc<Topology>, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != topology.num_states() {
            return Err(Error::Domain(format!(
                "{} initial values for {} states",
                initial.len(),
                topology.num_states()
            )));
        }
        let mut e = Self::new(topology);
        e.v = initial;
        Ok(e)
    }

    /// Unnormalized path sums `V(j)`.
    pub fn values(&self) -> &[f64] {
        &self.v
    }

    /// MAP final state at the current time, lowest index on ties.
    pub fn map_state(&self) -> usize {
        argmax(&self.v).unwrap_or(0)
    }
}

impl LpaEngine for ViterbiEngine {
    fn name(&self) -> &'static str {
        "viterbi"
    }

    fn k(&self) -> usize {
        self.consumed
    }

    fn consumed(&self) -> usize {
        self.consumed
    }

    fn step(&mut self, field: &EdgeField) -> Result<()> {
        check_sequence(self.t, field, self.topology.num_edges())?;
        let topo = &*self.topology;
        let v = &self.v;
        let d = &field.values;
        self.v = (0..topo.num_states())
            .into_par_iter()
            .map(|j| {
                topo.pred_range(j)
                    .zip(topo.preds(j))
                    .map(|(e, &i)| d[e] + v[i as usize])
                    .fold(f64::NEG_INFINITY, |best, c| if c > best { c } else { best })
            })
            .collect();
        self.relaxations += topo.num_edges() as u64;
        self.consumed += 1;
        self.t = Some(field.t);
        Ok(())
    }

    fn field(&self) -> Result<Vec<f64>> {
        if self.consumed == 0 {
            return Err(Error::NotReady { consumed: 0, k: 1 });
        }
        let t = self.consumed as f64;
        Ok(self.v.iter().map(|x| x / t).collect())
    }

    fn relaxations(&self) -> u64 {
        self.relaxations
    }
}

/// Per-time output of [`viterbi_mode_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiStep {
    pub t: usize,
    /// `H_t(j, t)` for every state.
    pub values: Vec<f64>,
    pub map_state: usize,
}

/// Runs the growing-length recursion over `fields`, reporting the field and
/// the MAP final state after each one.
pub fn viterbi_mode_run(
    topology: Arc<Topology>,
    fields: &[EdgeField],
    initial: Option<Vec<f64>>,
) -> Result<Vec<ViterbiStep>> {
    let mut engine = match initial {
        Some(v0) => ViterbiEngine::with_initial(topology, v0)?,
        None => ViterbiEngine::new(topology),
    };
    fields
        .iter()
        .map(|f| {
            engine.step(f)?;
            let values = engine.field()?;
            Ok(ViterbiStep {
                t: f.t,
                map_state: argmax(&values).unwrap_or(0),
                values,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_likelihood_ties_to_first_state() {
        let topo = Arc::new(
            Topology::from_successors((0..4).map(|_| (0..4).collect()).collect()).unwrap(),
        );
        let fields: Vec<_> = (1..=3)
            .map(|t| EdgeField {
                t,
                values: vec![(0.25f64).ln(); 16],
            })
            .collect();
        let run = viterbi_mode_run(topo, &fields, None).unwrap();
        for s in &run {
            assert!(s.values.iter().all(|&v| v == s.values[0]));
            assert_eq!(s.map_state, 0);
        }
    }

    #[test]
    fn k_grows_with_time() {
        let topo = Arc::new(Topology::from_successors(vec![vec![0]]).unwrap());
        let mut e = ViterbiEngine::new(topo);
        assert!(e.field().is_err());
        for (t, w) in [2.0, 4.0, 6.0].into_iter().enumerate() {
            e.step(&EdgeField {
                t: t + 1,
                values: vec![w],
            })
            .unwrap();
        }
        assert_eq!(e.k(), 3);
        assert_eq!(e.field().unwrap(), vec![4.0]);
    }
}
