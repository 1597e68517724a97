use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;

use super::{check_sequence, LpaEngine, PathRecord};
use crate::edge::EdgeField;
use crate::topology::Topology;
use crate::{Error, Result};

/// Streaming approximation of `H_k`.
///
/// Every state keeps one k-edge path record. A step extends each state `j`
/// from the predecessor `i` maximizing `(sum_i - oldest_i) + D^{ij}`, the
/// recursion with `F_{k-1}(i)` replaced by the record of `i` minus its
/// oldest edge. Every `refresh` steps the records are rebuilt exactly from
/// the last `k` fields.
#[derive(Debug, Clone)]
pub struct StreamingEngine {
    topology: Arc<Topology>,
    k: usize,
    refresh: usize,
    window: VecDeque<EdgeField>,
    consumed: usize,
    t: Option<usize>,
    relaxations: u64,
    /// `[state][k]` weights, oldest first.
    weights: Vec<f64>,
    /// `[state][k + 1]` visited states, oldest first.
    states: Vec<u32>,
    sums: Vec<f64>,
    since_refresh: usize,
    initialized: bool,
}

impl StreamingEngine {
    pub fn new(topology: Arc<Topology>, k: usize, refresh: usize) -> Result<Self> {
        if k == 0 || refresh == 0 {
            return Err(Error::Config(
                "streaming approximation needs k >= 1 and refresh >= 1".into(),
            ));
        }
        let n = topology.num_states();
        Ok(Self {
            topology,
            k,
            refresh,
            window: VecDeque::with_capacity(k),
            consumed: 0,
            t: None,
            relaxations: 0,
            weights: vec![0.0; n * k],
            states: vec![0; n * (k + 1)],
            sums: vec![0.0; n],
            since_refresh: 0,
            initialized: false,
        })
    }

    pub fn refresh_interval(&self) -> usize {
        self.refresh
    }

    /// Steps since the last exact refresh (0 right after one).
    pub fn since_refresh(&self) -> usize {
        self.since_refresh
    }

    /// Current record of state `j`.
    pub fn record(&self, j: usize) -> Result<PathRecord> {
        if !self.initialized {
            return Err(Error::NotReady {
                consumed: self.consumed,
                k: self.k,
            });
        }
        let k = self.k;
        Ok(PathRecord {
            terminal: j,
            states: self.states[j * (k + 1)..(j + 1) * (k + 1)]
                .iter()
                .map(|&s| s as usize)
                .collect(),
            weights: self.weights[j * k..(j + 1) * k].to_vec(),
            sum: self.sums[j],
        })
    }

    /// Rebuilds every record exactly from the fields in the window.
    fn rebuild(&mut self) {
        let topo = &*self.topology;
        let n = topo.num_states();
        let k = self.k;
        let mut v = vec![0.0f64; n];
        let mut next = vec![0.0f64; n];
        let mut slots = vec![0u32; n * k];
        for (s, field) in self.window.iter().enumerate() {
            let d = &field.values;
            let vs = &v;
            next.par_iter_mut()
                .zip(slots[s * n..(s + 1) * n].par_iter_mut())
                .enumerate()
                .for_each(|(j, (out, slot_out))| {
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = 0;
                    for (slot, (e, &i)) in topo.pred_range(j).zip(topo.preds(j)).enumerate() {
                        let c = d[e] + vs[i as usize];
                        if c > best {
                            best = c;
                            arg = slot;
                        }
                    }
                    *out = best;
                    *slot_out = arg as u32;
                });
            std::mem::swap(&mut v, &mut next);
            self.relaxations += topo.num_edges() as u64;
        }
        let window = &self.window;
        self.weights
            .par_chunks_mut(k)
            .zip(self.states.par_chunks_mut(k + 1))
            .enumerate()
            .for_each(|(j, (w, st))| {
                let mut cur = j;
                st[k] = j as u32;
                for s in (0..k).rev() {
                    let slot = slots[s * n + cur] as usize;
                    w[s] = window[s].values[topo.pred_range(cur).start + slot];
                    cur = topo.preds(cur)[slot] as usize;
                    st[s] = cur as u32;
                }
            });
        self.sums = v;
        self.since_refresh = 0;
        self.initialized = true;
    }

    /// One approximate extension of every record by the newest field.
    fn extend(&mut self, field: &EdgeField) {
        let topo = &*self.topology;
        let k = self.k;
        let (weights, states, sums) = (&self.weights, &self.states, &self.sums);
        let d = &field.values;
        let mut new_w = vec![0.0; weights.len()];
        let mut new_s = vec![0u32; states.len()];
        let new_sums: Vec<f64> = new_w
            .par_chunks_mut(k)
            .zip(new_s.par_chunks_mut(k + 1))
            .enumerate()
            .map(|(j, (w, st))| {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0usize;
                let mut arg_e = 0usize;
                for (e, &i) in topo.pred_range(j).zip(topo.preds(j)) {
                    let i = i as usize;
                    let c = (sums[i] - weights[i * k]) + d[e];
                    if c > best {
                        best = c;
                        arg = i;
                        arg_e = e;
                    }
                }
                w[..k - 1].copy_from_slice(&weights[arg * k + 1..(arg + 1) * k]);
                w[k - 1] = d[arg_e];
                st[..k].copy_from_slice(&states[arg * (k + 1) + 1..(arg + 1) * (k + 1)]);
                st[k] = j as u32;
                best
            })
            .collect();
        self.weights = new_w;
        self.states = new_s;
        self.sums = new_sums;
        self.relaxations += topo.num_edges() as u64;
        self.since_refresh += 1;
    }
}

impl LpaEngine for StreamingEngine {
    fn name(&self) -> &'static str {
        "approx"
    }

    fn k(&self) -> usize {
        self.k
    }

    fn consumed(&self) -> usize {
        self.consumed
    }

    fn step(&mut self, field: &EdgeField) -> Result<()> {
        check_sequence(self.t, field, self.topology.num_edges())?;
        if self.window.len() == self.k {
            self.window.pop_front();
        }
        self.window.push_back(field.clone());
        self.consumed += 1;
        self.t = Some(field.t);
        if self.consumed < self.k {
            return Ok(());
        }
        if !self.initialized || self.since_refresh + 1 >= self.refresh {
            self.rebuild();
        } else {
            self.extend(field);
        }
        Ok(())
    }

    fn field(&self) -> Result<Vec<f64>> {
        if !self.initialized {
            return Err(Error::NotReady {
                consumed: self.consumed,
                k: self.k,
            });
        }
        let k = self.k as f64;
        Ok(self.sums.iter().map(|s| s / k).collect())
    }

    fn relaxations(&self) -> u64 {
        self.relaxations
    }

    fn path(&self, j: usize) -> Result<PathRecord> {
        self.record(j)
    }
}
