use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edge::EdgeField;
use crate::topology::Topology;
use crate::{Error, Result};

/// Slack on top of the `2 C^2 / k` bound.
pub const VARIANCE_SLACK: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRow {
    pub k: usize,
    /// Mean over paths of the temporal variance of the path average.
    pub variance: f64,
    /// `VARIANCE_SLACK * 2 C_emp^2 / k`.
    pub bound: f64,
    pub samples: usize,
}

impl VarianceRow {
    pub fn pass(&self) -> bool {
        self.variance <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    /// Mean over edges of the temporal variance of single edge weights.
    pub c_emp2: f64,
    pub rows: Vec<VarianceRow>,
}

impl VarianceReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(VarianceRow::pass)
    }
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// Random spatial path of `k` edges, as field indices of its edges.
fn random_path(topology: &Topology, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut s = rng.random_range(0..topology.num_states());
    let mut edges = Vec::with_capacity(k);
    for _ in 0..k {
        let range = topology.succ_range(s);
        let e = rng.random_range(range);
        s = topology.succs(s)[e - topology.succ_range(s).start] as usize;
        edges.push(topology.succ_edge_to_field(e));
    }
    edges
}

/// Variance of `h`, the mean weight along a path, for paths fixed in
/// space and slid over time through `fields`.
///
/// For each `k`, `paths` random paths are drawn once and evaluated at every
/// start time that fits; the per-path temporal variances are averaged. The
/// scale `C_emp^2` is the mean temporal variance of single edges.
pub fn variance_scaling_check(
    fields: &[EdgeField],
    topology: &Topology,
    ks: &[usize],
    paths: usize,
    seed: u64,
) -> Result<VarianceReport> {
    let edges = topology.num_edges();
    if fields.iter().any(|f| f.values.len() != edges) {
        return Err(Error::Domain(
            "edge field size does not match the topology".into(),
        ));
    }
    let kmax = ks.iter().copied().max().unwrap_or(0);
    if ks.contains(&0) || fields.len() < kmax + 2 {
        return Err(Error::Domain(format!(
            "need positive k and at least {} fields, have {}",
            kmax + 2,
            fields.len()
        )));
    }
    let c_emp2 = (0..edges)
        .map(|e| sample_var(&fields.iter().map(|f| f.values[e]).collect::<Vec<_>>()))
        .sum::<f64>()
        / edges as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = ks
        .iter()
        .map(|&k| {
            let offsets = fields.len() - k + 1;
            let mut total = 0.0;
            for _ in 0..paths {
                let path = random_path(topology, k, &mut rng);
                let h: Vec<f64> = (0..offsets)
                    .map(|t0| {
                        path.iter()
                            .enumerate()
                            .map(|(i, &e)| fields[t0 + i].values[e])
                            .sum::<f64>()
                            / k as f64
                    })
                    .collect();
                total += sample_var(&h);
            }
            VarianceRow {
                k,
                variance: total / paths as f64,
                bound: VARIANCE_SLACK * 2.0 * c_emp2 / k as f64,
                samples: paths * offsets,
            }
        })
        .collect();
    Ok(VarianceReport { c_emp2, rows })
}
