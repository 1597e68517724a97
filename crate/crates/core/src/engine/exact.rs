use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use super::{check_sequence, LpaEngine, PathRecord};
use crate::edge::EdgeField;
use crate::topology::Topology;
use crate::{Error, Result};

/// Argmax slots of one step plus the field that produced them.
#[derive(Debug, Clone)]
struct StepTrace {
    slots: Vec<u16>,
    field: EdgeField,
}

/// The staircase `F_0..F_k` at the current time, stored `[state][kappa]`.
#[derive(Debug, Clone)]
pub struct LpaTables {
    topology: Arc<Topology>,
    k: usize,
    f: Vec<f64>,
    next: Vec<f64>,
    consumed: usize,
    t: Option<usize>,
    relaxations: u64,
    trace: Option<VecDeque<StepTrace>>,
}

impl LpaTables {
    pub fn new(topology: Arc<Topology>, k: usize, backpointers: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("path length k must be at least 1".into()));
        }
        if backpointers && topology.max_in_degree() > u16::MAX as usize + 1 {
            return Err(Error::Config(format!(
                "backpointers support in-degree up to {}, topology has {}",
                u16::MAX as usize + 1,
                topology.max_in_degree()
            )));
        }
        let stride = k + 1;
        let n = topology.num_states();
        let mut f = vec![f64::NEG_INFINITY; n * stride];
        f.chunks_exact_mut(stride).for_each(|row| row[0] = 0.0);
        Ok(Self {
            next: f.clone(),
            f,
            topology,
            k,
            consumed: 0,
            t: None,
            relaxations: 0,
            trace: backpointers.then(VecDeque::new),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    /// Time index of the last consumed field.
    pub fn t(&self) -> Option<usize> {
        self.t
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn relaxations(&self) -> u64 {
        self.relaxations
    }

    pub fn backpointers(&self) -> bool {
        self.trace.is_some()
    }

    /// `F_kappa(j)` at the current time (`-inf` where no kappa-path exists yet).
    pub fn get(&self, kappa: usize, j: usize) -> f64 {
        self.f[j * (self.k + 1) + kappa]
    }

    /// `F_kappa` for every state.
    pub fn layer(&self, kappa: usize) -> Vec<f64> {
        assert!(kappa <= self.k, "layer {kappa} beyond k={}", self.k);
        self.f
            .chunks_exact(self.k + 1)
            .map(|row| row[kappa])
            .collect()
    }

    /// Advances every layer by one edge field.
    pub fn lpa_step(&mut self, field: &EdgeField) -> Result<()> {
        check_sequence(self.t, field, self.topology.num_edges())?;
        let stride = self.k + 1;
        let topo = &*self.topology;
        let f = &self.f;
        let d = &field.values;
        let count = AtomicU64::new(0);
        let k = self.k;

        let relax = |j: usize, out: &mut [f64], mut slots: Option<&mut [u16]>| {
            out[0] = 0.0;
            out[1..].fill(f64::NEG_INFINITY);
            let range = topo.pred_range(j);
            for (slot, (e, &i)) in range.clone().zip(topo.preds(j)).enumerate() {
                let w = d[e];
                let src = &f[i as usize * stride..(i as usize + 1) * stride];
                match slots.as_deref_mut() {
                    None => {
                        for (o, &s) in out[1..].iter_mut().zip(&src[..k]) {
                            let c = w + s;
                            if c > *o {
                                *o = c;
                            }
                        }
                    }
                    Some(sl) => {
                        for kappa in 1..=k {
                            let c = w + src[kappa - 1];
                            if c > out[kappa] {
                                out[kappa] = c;
                                sl[kappa] = slot as u16;
                            }
                        }
                    }
                }
            }
            count.fetch_add((k * range.len()) as u64, Ordering::Relaxed);
        };

        match &mut self.trace {
            None => {
                self.next
                    .par_chunks_mut(stride)
                    .enumerate()
                    .for_each(|(j, out)| relax(j, out, None));
            }
            Some(trace) => {
                let mut slots = if trace.len() == self.k {
                    trace.pop_front().unwrap().slots
                } else {
                    vec![0u16; self.next.len()]
                };
                slots.fill(0);
                self.next
                    .par_chunks_mut(stride)
                    .zip(slots.par_chunks_mut(stride))
                    .enumerate()
                    .for_each(|(j, (out, sl))| relax(j, out, Some(sl)));
                trace.push_back(StepTrace {
                    slots,
                    field: field.clone(),
                });
            }
        }
        std::mem::swap(&mut self.f, &mut self.next);
        self.relaxations += count.into_inner();
        self.consumed += 1;
        self.t = Some(field.t);
        Ok(())
    }

    pub fn ready(&self) -> bool {
        self.consumed >= self.k
    }

    /// `H_k = F_k / k` for every state.
    pub fn lpa_field(&self) -> Result<Vec<f64>> {
        if !self.ready() {
            return Err(Error::NotReady {
                consumed: self.consumed,
                k: self.k,
            });
        }
        let k = self.k as f64;
        Ok(self
            .f
            .chunks_exact(self.k + 1)
            .map(|row| row[self.k] / k)
            .collect())
    }

    /// The argmax k-path ending at `j` at the current time.
    pub fn track_path(&self, j: usize) -> Result<PathRecord> {
        let trace = self.trace.as_ref().ok_or(Error::Capability(
            "path tracking (enable engine.backpointers)",
        ))?;
        if !self.ready() {
            return Err(Error::NotReady {
                consumed: self.consumed,
                k: self.k,
            });
        }
        if j >= self.topology.num_states() {
            return Err(Error::Domain(format!("state {j} out of range")));
        }
        let stride = self.k + 1;
        let mut states = vec![j];
        let mut weights = Vec::with_capacity(self.k);
        let mut cur = j;
        for (m, step) in trace.iter().rev().enumerate() {
            let kappa = self.k - m;
            let slot = step.slots[cur * stride + kappa] as usize;
            let e = self.topology.pred_range(cur).start + slot;
            weights.push(step.field.values[e]);
            cur = self.topology.preds(cur)[slot] as usize;
            states.push(cur);
        }
        states.reverse();
        weights.reverse();
        // Same association order as the recursion, so the sum equals F_k.
        let sum = weights.iter().fold(0.0, |acc, &w| w + acc);
        Ok(PathRecord {
            terminal: j,
            states,
            weights,
            sum,
        })
    }
}

/// [`LpaTables`] behind the engine interface.
#[derive(Debug, Clone)]
pub struct ExactEngine {
    tables: LpaTables,
}

impl ExactEngine {
    pub fn new(topology: Arc<Topology>, k: usize, backpointers: bool) -> Result<Self> {
        Ok(Self {
            tables: LpaTables::new(topology, k, backpointers)?,
        })
    }

    pub fn tables(&self) -> &LpaTables {
        &self.tables
    }
}

impl LpaEngine for ExactEngine {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn k(&self) -> usize {
        self.tables.k
    }

    fn consumed(&self) -> usize {
        self.tables.consumed
    }

    fn step(&mut self, field: &EdgeField) -> Result<()> {
        self.tables.lpa_step(field)
    }

    fn field(&self) -> Result<Vec<f64>> {
        self.tables.lpa_field()
    }

    fn relaxations(&self) -> u64 {
        self.tables.relaxations
    }

    fn path(&self, j: usize) -> Result<PathRecord> {
        self.tables.track_path(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Metric, StateSpace};

    fn grid(n: usize) -> Arc<Topology> {
        StateSpace::position(n, n, 1, Metric::Chebyshev)
            .unwrap()
            .topology()
            .clone()
    }

    fn constant(topo: &Topology, t: usize, c: f64) -> EdgeField {
        EdgeField {
            t,
            values: vec![c; topo.num_edges()],
        }
    }

    #[test]
    fn k1_is_max_over_predecessors() {
        let topo = grid(4);
        let mut tab = LpaTables::new(topo.clone(), 1, false).unwrap();
        let values: Vec<f64> = (0..topo.num_edges())
            .map(|e| ((e * 31) % 17) as f64)
            .collect();
        tab.lpa_step(&EdgeField {
            t: 1,
            values: values.clone(),
        })
        .unwrap();
        let h = tab.lpa_field().unwrap();
        for (j, hj) in h.iter().enumerate() {
            let m = topo
                .pred_range(j)
                .map(|e| values[e])
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(*hj, m);
        }
    }

    #[test]
    fn constant_field_and_readiness() {
        let topo = grid(5);
        let mut tab = LpaTables::new(topo.clone(), 3, true).unwrap();
        for t in 1..=2 {
            tab.lpa_step(&constant(&topo, t, 0.7)).unwrap();
            assert!(matches!(tab.lpa_field(), Err(Error::NotReady { .. })));
        }
        tab.lpa_step(&constant(&topo, 3, 0.7)).unwrap();
        let h = tab.lpa_field().unwrap();
        assert!(h.iter().all(|&v| (v - 0.7).abs() < 1e-15));
        let p = tab.track_path(12).unwrap();
        assert_eq!(p.states.len(), 4);
        assert_eq!(p.sum, tab.get(3, 12));
        assert_eq!(tab.layer(0), vec![0.0; 25]);
    }

    #[test]
    fn sequencing_error() {
        let topo = grid(3);
        let mut tab = LpaTables::new(topo.clone(), 2, false).unwrap();
        tab.lpa_step(&constant(&topo, 4, 1.0)).unwrap();
        let err = tab.lpa_step(&constant(&topo, 6, 1.0)).unwrap_err();
        assert!(matches!(
            err,
            Error::Sequencing {
                expected: 5,
                got: 6
            }
        ));
    }

    #[test]
    fn dominant_trajectory_is_tracked() {
        let topo = grid(6);
        let path = [0usize, 7, 14, 15, 16];
        let mut tab = LpaTables::new(topo.clone(), 4, true).unwrap();
        for t in 1..=4 {
            let mut f = constant(&topo, t, 0.0);
            let e = topo.edge_index(path[t - 1], path[t]).unwrap();
            f.values[e] = 1.0;
            tab.lpa_step(&f).unwrap();
        }
        let p = tab.track_path(16).unwrap();
        assert_eq!(p.states, path.to_vec());
        assert_eq!(p.weights, vec![1.0; 4]);
        assert_eq!(tab.lpa_field().unwrap()[16], 1.0);
    }

    #[test]
    fn capability_error_without_backpointers() {
        let topo = grid(3);
        let mut tab = LpaTables::new(topo.clone(), 1, false).unwrap();
        tab.lpa_step(&constant(&topo, 1, 1.0)).unwrap();
        assert!(matches!(tab.track_path(0), Err(Error::Capability(_))));
    }

    #[test]
    fn relaxation_count() {
        let topo = grid(5);
        let mut tab = LpaTables::new(topo.clone(), 3, false).unwrap();
        for t in 1..=4 {
            tab.lpa_step(&constant(&topo, t, 1.0)).unwrap();
        }
        assert_eq!(tab.relaxations(), 4 * 3 * topo.num_edges() as u64);
    }
}
