use crate::edge::EdgeField;
use crate::topology::Topology;
use crate::{Error, Result};

/// Largest number of paths [`lpa_bruteforce`] will enumerate.
pub const PATH_LIMIT: f64 = 1e7;

/// Number of k-edge paths ending at `j`.
pub fn count_paths(topology: &Topology, j: usize, k: usize) -> f64 {
    // Paths of length m ending at j, counted backwards from j.
    let mut ways = vec![0.0f64; topology.num_states()];
    ways[j] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0; ways.len()];
        for (v, &w) in ways.iter().enumerate() {
            if w > 0.0 {
                for &i in topology.preds(v) {
                    next[i as usize] += w;
                }
            }
        }
        ways = next;
    }
    ways.iter().sum()
}

/// `H_k(j, t)` by exhaustive enumeration of every k-edge path ending at
/// `(j, t)`. `fields` must hold the consecutive fields `t-k+1 ..= t`
/// (others are ignored).
pub fn lpa_bruteforce(
    topology: &Topology,
    fields: &[EdgeField],
    j: usize,
    t: usize,
    k: usize,
) -> Result<f64> {
    if k == 0 || k > t {
        return Err(Error::Domain(format!("need 1 <= k <= t, got k={k}, t={t}")));
    }
    let window: Vec<&EdgeField> = (t + 1 - k..=t)
        .map(|tau| {
            fields
                .iter()
                .find(|f| f.t == tau)
                .ok_or_else(|| Error::Domain(format!("no edge field for t={tau}")))
        })
        .collect::<Result<_>>()?;
    let paths = count_paths(topology, j, k);
    if paths > PATH_LIMIT {
        return Err(Error::GuardExceeded {
            paths,
            limit: PATH_LIMIT,
        });
    }
    let mut best = f64::NEG_INFINITY;
    walk(topology, &window, j, k, 0.0, &mut best);
    Ok(best / k as f64)
}

fn walk(
    topology: &Topology,
    window: &[&EdgeField],
    j: usize,
    depth: usize,
    acc: f64,
    best: &mut f64,
) {
    if depth == 0 {
        *best = best.max(acc);
        return;
    }
    let field = window[depth - 1];
    for (e, &i) in topology.pred_range(j).zip(topology.preds(j)) {
        walk(
            topology,
            window,
            i as usize,
            depth - 1,
            acc + field.values[e],
            best,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state_self_loop() {
        let topo = Topology::from_successors(vec![vec![0]]).unwrap();
        let fields: Vec<_> = [1.0, 4.0, 2.0, 6.0]
            .iter()
            .enumerate()
            .map(|(t, &v)| EdgeField {
                t: t + 1,
                values: vec![v],
            })
            .collect();
        assert_eq!(lpa_bruteforce(&topo, &fields, 0, 4, 3).unwrap(), 4.0);
        assert_eq!(lpa_bruteforce(&topo, &fields, 0, 2, 1).unwrap(), 4.0);
    }

    #[test]
    fn k1_is_max_predecessor_weight() {
        let topo = Topology::from_successors(vec![vec![0, 1], vec![1], vec![1, 2]]).unwrap();
        let f = EdgeField {
            t: 1,
            values: (0..topo.num_edges()).map(|e| e as f64 * 0.5).collect(),
        };
        let m = topo
            .pred_range(1)
            .map(|e| f.values[e])
            .fold(f64::MIN, f64::max);
        assert_eq!(lpa_bruteforce(&topo, &[f], 1, 1, 1).unwrap(), m);
    }

    #[test]
    fn guard_refuses_large_instances() {
        let n = 50;
        let topo = Topology::from_successors((0..n).map(|_| (0..n).collect()).collect()).unwrap();
        assert_eq!(count_paths(&topo, 0, 2), 2500.0);
        let fields: Vec<_> = (1..=5)
            .map(|t| EdgeField {
                t,
                values: vec![0.0; topo.num_edges()],
            })
            .collect();
        let err = lpa_bruteforce(&topo, &fields, 0, 5, 5).unwrap_err();
        assert!(matches!(err, Error::GuardExceeded { .. }), "{err}");
    }
}
