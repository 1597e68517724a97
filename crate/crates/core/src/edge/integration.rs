use rayon::prelude::*;

use super::{check_frame, EdgeConstructor, EdgeField};
use crate::observation::{Frame, PaddedFrame};
use crate::space::StateSpace;
use crate::Result;

/// `D_t^{ij}` = mean of the destination window. With `r = 0` this is pixel
/// integration.
#[derive(Debug, Clone, Copy)]
pub struct StateIntegration {
    pub r: usize,
}

impl EdgeConstructor for StateIntegration {
    fn name(&self) -> &'static str {
        "state-integration"
    }

    fn build(&self, _prev: &Frame, cur: &Frame, t: usize, space: &StateSpace) -> Result<EdgeField> {
        check_frame(cur, space)?;
        let padded = PaddedFrame::new(cur, self.r);
        let width = space.width();
        let means: Vec<f64> = (0..space.num_positions())
            .into_par_iter()
            .map(|p| padded.window_mean(p / width, p % width))
            .collect();
        let topo = space.topology();
        let mut values = vec![0.0; topo.num_edges()];
        topo.pred_runs_mut(&mut values)
            .into_par_iter()
            .enumerate()
            .for_each(|(j, run)| run.fill(means[space.pixel_of(j)]));
        Ok(EdgeField { t, values })
    }
}
