use rayon::prelude::*;

use super::{check_frame, EdgeConstructor, EdgeField};
use crate::observation::{Frame, PaddedFrame};
use crate::space::StateSpace;
use crate::{Error, Result};

/// Normalized path integration.
///
/// The weight of `i -> j` is the window similarity
/// `exp(-b * |Z_t^j - Z_{t-1}^i|^2)` divided by `epsilon` plus the sum of the
/// similarities from `i` to every state of its forward neighborhood.
#[derive(Debug, Clone, Copy)]
pub struct Npi {
    r: usize,
    b: f64,
    epsilon: f64,
}

impl Npi {
    pub fn new(r: usize, b: f64, epsilon: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "npi needs b > 0 and epsilon > 0, got b={b}, epsilon={epsilon}"
            )));
        }
        Ok(Self { r, b, epsilon })
    }
}

impl EdgeConstructor for Npi {
    fn name(&self) -> &'static str {
        "npi"
    }

    fn build(&self, prev: &Frame, cur: &Frame, t: usize, space: &StateSpace) -> Result<EdgeField> {
        check_frame(prev, space)?;
        check_frame(cur, space)?;
        let before = PaddedFrame::new(prev, self.r);
        let after = PaddedFrame::new(cur, self.r);
        let topo = space.topology();
        let width = space.width();

        // Similarities in successor layout, then one denominator per source.
        let mut sims = vec![0.0; topo.num_edges()];
        let mut denoms = vec![0.0; topo.num_states()];
        topo.succ_runs_mut(&mut sims)
            .into_par_iter()
            .zip(denoms.par_iter_mut())
            .enumerate()
            .for_each(|(i, (run, den))| {
                let pi = space.pixel_of(i);
                let (ri, ci) = (pi / width, pi % width);
                let mut sum = 0.0;
                for (s, &j) in run.iter_mut().zip(topo.succs(i)) {
                    let pj = space.pixel_of(j as usize);
                    let d2 = after.window_dist2(pj / width, pj % width, &before, ri, ci);
                    *s = (-self.b * d2).exp();
                    sum += *s;
                }
                *den = self.epsilon + sum;
            });

        let mut values = vec![0.0; topo.num_edges()];
        for (i, den) in denoms.iter().enumerate() {
            for e in topo.succ_range(i) {
                values[topo.succ_edge_to_field(e)] = sims[e] / den;
            }
        }
        Ok(EdgeField { t, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Metric, State};

    fn space(n: usize, v1: usize) -> StateSpace {
        StateSpace::position(n, n, v1, Metric::Chebyshev).unwrap()
    }

    #[test]
    fn identical_windows_interior() {
        let sp = space(9, 2);
        let f = Frame::filled(9, 9, 3.0).unwrap();
        let d = Npi::new(1, 1e-5, 0.04)
            .unwrap()
            .build(&f, &f, 1, &sp)
            .unwrap();
        let c = sp.index(&State::pos(4, 4)).unwrap();
        for &j in sp.topology().succs(c) {
            let w = d.get(&sp, c, j as usize).unwrap();
            assert!((w - 1.0 / 25.04).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_match_dominates_with_large_b() {
        let sp = space(7, 1);
        let prev = Frame::new(7, 7, (0..49).map(|v| (v * 37 % 101) as f32).collect()).unwrap();
        // Shift content one column left: the window at (3,3) moves to (3,2).
        let cur = Frame::new(
            7,
            7,
            (0..49)
                .map(|p| prev.get_clamped((p / 7) as i64, (p % 7) as i64 + 1))
                .collect(),
        )
        .unwrap();
        let eps = 0.04;
        let d = Npi::new(1, 50.0, eps)
            .unwrap()
            .build(&prev, &cur, 1, &sp)
            .unwrap();
        let i = sp.index(&State::pos(3, 3)).unwrap();
        let target = sp.index(&State::pos(3, 2)).unwrap();
        for &j in sp.topology().succs(i) {
            let w = d.get(&sp, i, j as usize).unwrap();
            if j as usize == target {
                assert!((w - 1.0 / (1.0 + eps)).abs() < 1e-12);
            } else {
                assert!(w < 1e-12);
            }
        }
    }

    #[test]
    fn small_b_ignores_content() {
        let sp = space(6, 1);
        let prev = Frame::new(6, 6, (0..36).map(|v| v as f32).collect()).unwrap();
        let cur = Frame::new(6, 6, (0..36).map(|v| (35 - v) as f32).collect()).unwrap();
        let d = Npi::new(1, 1e-14, 0.04)
            .unwrap()
            .build(&prev, &cur, 1, &sp)
            .unwrap();
        for i in 0..36 {
            let n = sp.topology().out_degree(i) as f64;
            for &j in sp.topology().succs(i) {
                let w = d.get(&sp, i, j as usize).unwrap();
                assert!((w - 1.0 / (0.04 + n)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Npi::new(1, 0.0, 0.04).is_err());
        assert!(Npi::new(1, 1e-5, 0.0).is_err());
    }
}
