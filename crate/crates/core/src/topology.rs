//! Transition graph `G(V, E)` in compressed adjacency form.
//!
//! Edge fields are laid out in *predecessor order*: all edges entering state
//! 0, then all edges entering state 1, and so on, each run sorted by source
//! index. That layout is what the dynamic program reads, so a field value for
//! edge `i -> j` lives at `pred_range(j).start + slot`.

use std::collections::VecDeque;
use std::ops::Range;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Topology {
    pred_offsets: Vec<usize>,
    preds: Vec<u32>,
    succ_offsets: Vec<usize>,
    succs: Vec<u32>,
    succ_to_pred: Vec<u32>,
}

impl Topology {
    /// Builds the graph from forward neighborhoods `N(i)`.
    ///
    /// Successor lists are sorted and deduplicated. Empty lists are allowed:
    /// position-velocity states at the border can have nowhere to go.
    pub fn from_successors(successors: Vec<Vec<usize>>) -> Result<Self> {
        let n = successors.len();
        if n == 0 {
            return Err(Error::Config("topology needs at least one state".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::Config(format!("too many states: {n}")));
        }
        let mut succ_offsets = Vec::with_capacity(n + 1);
        let mut succs = Vec::new();
        let mut in_degree = vec![0usize; n];
        succ_offsets.push(0);
        for (i, mut list) in successors.into_iter().enumerate() {
            list.sort_unstable();
            list.dedup();
            for &j in &list {
                if j >= n {
                    return Err(Error::Config(format!(
                        "state {i} lists successor {j} outside 0..{n}"
                    )));
                }
                in_degree[j] += 1;
                succs.push(j as u32);
            }
            succ_offsets.push(succs.len());
        }

        let mut pred_offsets = Vec::with_capacity(n + 1);
        pred_offsets.push(0);
        for d in &in_degree {
            pred_offsets.push(pred_offsets.last().unwrap() + d);
        }
        let mut fill = pred_offsets[..n].to_vec();
        let mut preds = vec![0u32; succs.len()];
        let mut succ_to_pred = vec![0u32; succs.len()];
        // Scanning sources in ascending order keeps each predecessor run sorted.
        for i in 0..n {
            for e in succ_offsets[i]..succ_offsets[i + 1] {
                let j = succs[e] as usize;
                let slot = fill[j];
                preds[slot] = i as u32;
                succ_to_pred[e] = slot as u32;
                fill[j] += 1;
            }
        }
        Ok(Self {
            pred_offsets,
            preds,
            succ_offsets,
            succs,
            succ_to_pred,
        })
    }

    pub fn num_states(&self) -> usize {
        self.pred_offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.preds.len()
    }

    /// Sources of the edges entering `j`, ascending.
    pub fn preds(&self, j: usize) -> &[u32] {
        &self.preds[self.pred_range(j)]
    }

    /// Edge-field indices of the edges entering `j`.
    pub fn pred_range(&self, j: usize) -> Range<usize> {
        self.pred_offsets[j]..self.pred_offsets[j + 1]
    }

    /// Destinations reachable from `i` in one step, ascending.
    pub fn succs(&self, i: usize) -> &[u32] {
        &self.succs[self.succ_range(i)]
    }

    /// Indices into the successor layout for the edges leaving `i`.
    pub fn succ_range(&self, i: usize) -> Range<usize> {
        self.succ_offsets[i]..self.succ_offsets[i + 1]
    }

    /// Edge-field index (predecessor layout) of successor-layout edge `e`.
    pub fn succ_edge_to_field(&self, e: usize) -> usize {
        self.succ_to_pred[e] as usize
    }

    /// Field index of edge `i -> j`, if it exists.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.pred_range(j);
        self.preds[r.clone()]
            .binary_search(&(i as u32))
            .ok()
            .map(|slot| r.start + slot)
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.pred_offsets[j + 1] - self.pred_offsets[j]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.succ_offsets[i + 1] - self.succ_offsets[i]
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.num_states())
            .map(|i| self.out_degree(i))
            .max()
            .unwrap_or(0)
    }

    pub fn max_in_degree(&self) -> usize {
        (0..self.num_states())
            .map(|j| self.in_degree(j))
            .max()
            .unwrap_or(0)
    }

    /// Minimum number of forward edges from `from` to every state; `None`
    /// where unreachable.
    pub fn bfs_distances(&self, from: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.num_states()];
        let mut queue = VecDeque::new();
        dist[from] = Some(0);
        queue.push_back(from);
        while let Some(i) = queue.pop_front() {
            let d = dist[i].unwrap() + 1;
            for &j in self.succs(i) {
                let j = j as usize;
                if dist[j].is_none() {
                    dist[j] = Some(d);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    /// Splits a predecessor-layout buffer into one run per destination.
    pub fn pred_runs_mut<'a, T>(&self, data: &'a mut [T]) -> Vec<&'a mut [T]> {
        split_runs(data, &self.pred_offsets)
    }

    /// Splits a successor-layout buffer into one run per source.
    pub fn succ_runs_mut<'a, T>(&self, data: &'a mut [T]) -> Vec<&'a mut [T]> {
        split_runs(data, &self.succ_offsets)
    }

    /// Keeps only the edges accepted by `keep(i, j)`. Fails if any state is
    /// left without a successor.
    pub fn filtered(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let lists = (0..self.num_states())
            .map(|i| {
                self.succs(i)
                    .iter()
                    .map(|&j| j as usize)
                    .filter(|&j| keep(i, j))
                    .collect()
            })
            .collect();
        Self::from_successors(lists)
    }
}

fn split_runs<'a, T>(mut data: &'a mut [T], offsets: &[usize]) -> Vec<&'a mut [T]> {
    assert_eq!(
        data.len(),
        *offsets.last().unwrap(),
        "buffer does not match edge count"
    );
    let mut runs = Vec::with_capacity(offsets.len() - 1);
    for w in offsets.windows(2) {
        let (head, tail) = std::mem::take(&mut data).split_at_mut(w[1] - w[0]);
        runs.push(head);
        data = tail;
    }
    runs
}
