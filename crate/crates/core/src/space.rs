//! Target state sets, transition neighborhoods and the graph metric.
//!
//! Position states are pixels `(row, col)`; a target may move at most `v1`
//! pixels per frame. Position-velocity states add an integer velocity with
//! `|v| < v1` per component, and a transition may change velocity by less
//! than `a1` while moving by exactly the new velocity. Neighborhoods are
//! clipped at the frame border; there is no wraparound.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::topology::Topology;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Chebyshev,
    /// Euclidean length rounded to the nearest integer.
    EuclideanRounded,
}

impl Metric {
    /// Integer length of the offset `(dr, dc)`.
    pub fn length(self, dr: i64, dc: i64) -> i64 {
        match self {
            Metric::Chebyshev => dr.abs().max(dc.abs()),
            Metric::EuclideanRounded => (((dr * dr + dc * dc) as f64).sqrt()).round() as i64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Chebyshev => "chebyshev",
            Metric::EuclideanRounded => "euclidean-rounded",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" => Ok(Metric::Chebyshev),
            "euclidean-rounded" | "euclidean" => Ok(Metric::EuclideanRounded),
            other => Err(Error::Config(format!(
                "unknown metric '{other}' (available: chebyshev, euclidean-rounded)"
            ))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpaceKind {
    #[default]
    Position,
    PositionVelocity,
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "position" => Ok(SpaceKind::Position),
            "position-velocity" => Ok(SpaceKind::PositionVelocity),
            other => Err(Error::Config(format!(
                "unknown space kind '{other}' (available: position, position-velocity)"
            ))),
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::Position => "position",
            SpaceKind::PositionVelocity => "position-velocity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PositionState {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PosVelState {
    pub row: usize,
    pub col: usize,
    pub vrow: i32,
    pub vcol: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    Position(PositionState),
    PosVel(PosVelState),
}

impl State {
    pub fn pos(row: usize, col: usize) -> Self {
        State::Position(PositionState { row, col })
    }

    pub fn pos_vel(row: usize, col: usize, vrow: i32, vcol: i32) -> Self {
        State::PosVel(PosVelState {
            row,
            col,
            vrow,
            vcol,
        })
    }

    pub fn row(&self) -> usize {
        match self {
            State::Position(s) => s.row,
            State::PosVel(s) => s.row,
        }
    }

    pub fn col(&self) -> usize {
        match self {
            State::Position(s) => s.col,
            State::PosVel(s) => s.col,
        }
    }
}

/// Immutable state space plus its transition graph.
#[derive(Debug, Clone)]
pub struct StateSpace {
    kind: SpaceKind,
    height: usize,
    width: usize,
    v1: usize,
    a1: usize,
    metric: Metric,
    topology: Arc<Topology>,
}

impl StateSpace {
    /// Position space: `N(i)` holds every pixel within `v1` of `i`.
    pub fn position(height: usize, width: usize, v1: usize, metric: Metric) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Config(format!(
                "frame dimensions must be positive, got {height}x{width}"
            )));
        }
        if v1 == 0 {
            return Err(Error::Config("space.v1 must be at least 1".into()));
        }
        let offsets = ball_offsets(v1 as i64, metric, false);
        let mut succ = Vec::with_capacity(height * width);
        for row in 0..height as i64 {
            for col in 0..width as i64 {
                succ.push(
                    offsets
                        .iter()
                        .filter_map(|&(dr, dc)| {
                            let (r, c) = (row + dr, col + dc);
                            (r >= 0 && c >= 0 && r < height as i64 && c < width as i64)
                                .then(|| r as usize * width + c as usize)
                        })
                        .collect(),
                );
            }
        }
        Ok(Self {
            kind: SpaceKind::Position,
            height,
            width,
            v1,
            a1: 0,
            metric,
            topology: Arc::new(Topology::from_successors(succ)?),
        })
    }

    /// Position-velocity space with speed bound `|v| < v1` per component and
    /// velocity changes of metric length `< a1`.
    pub fn position_velocity(
        height: usize,
        width: usize,
        v1: usize,
        a1: usize,
        metric: Metric,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Config(format!(
                "frame dimensions must be positive, got {height}x{width}"
            )));
        }
        if v1 == 0 || a1 == 0 {
            return Err(Error::Config(
                "space.v1 and space.a1 must be at least 1".into(),
            ));
        }
        let mut space = Self {
            kind: SpaceKind::PositionVelocity,
            height,
            width,
            v1,
            a1,
            metric,
            topology: Arc::new(Topology::from_successors(vec![vec![0]])?),
        };
        let succ = (0..space.len())
            .map(|idx| {
                let s = space.state_unchecked(idx);
                space
                    .pos_vel_successors(s)
                    .into_iter()
                    .map(|t| space.index_unchecked(&t))
                    .collect()
            })
            .collect();
        space.topology = Arc::new(Topology::from_successors(succ)?);
        Ok(space)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn v1(&self) -> usize {
        self.v1
    }

    pub fn a1(&self) -> usize {
        self.a1
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    /// Velocity values per component: `-(v1-1) ..= v1-1`.
    fn vel_span(&self) -> usize {
        2 * self.v1 - 1
    }

    pub fn len(&self) -> usize {
        match self.kind {
            SpaceKind::Position => self.height * self.width,
            SpaceKind::PositionVelocity => self.height * self.width * self.vel_span().pow(2),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_positions(&self) -> usize {
        self.height * self.width
    }

    /// Neighborhood size `M` of an interior state.
    pub fn interior_neighborhood_size(&self) -> usize {
        match self.kind {
            SpaceKind::Position => ball_offsets(self.v1 as i64, self.metric, false).len(),
            SpaceKind::PositionVelocity => self.topology.max_out_degree(),
        }
    }

    fn state_unchecked(&self, idx: usize) -> State {
        match self.kind {
            SpaceKind::Position => State::pos(idx / self.width, idx % self.width),
            SpaceKind::PositionVelocity => {
                let span = self.vel_span();
                let vcol = (idx % span) as i32 - (self.v1 as i32 - 1);
                let vrow = ((idx / span) % span) as i32 - (self.v1 as i32 - 1);
                let pix = idx / (span * span);
                State::pos_vel(pix / self.width, pix % self.width, vrow, vcol)
            }
        }
    }

    fn index_unchecked(&self, s: &State) -> usize {
        match *s {
            State::Position(p) => p.row * self.width + p.col,
            State::PosVel(p) => {
                let span = self.vel_span();
                let off = self.v1 as i32 - 1;
                ((p.row * self.width + p.col) * span + (p.vrow + off) as usize) * span
                    + (p.vcol + off) as usize
            }
        }
    }

    pub fn state(&self, idx: usize) -> Result<State> {
        if idx >= self.len() {
            return Err(Error::Domain(format!(
                "state index {idx} outside 0..{}",
                self.len()
            )));
        }
        Ok(self.state_unchecked(idx))
    }

    pub fn contains(&self, s: &State) -> bool {
        match (self.kind, s) {
            (SpaceKind::Position, State::Position(p)) => p.row < self.height && p.col < self.width,
            (SpaceKind::PositionVelocity, State::PosVel(p)) => {
                let lim = self.v1 as i32;
                p.row < self.height
                    && p.col < self.width
                    && p.vrow.abs() < lim
                    && p.vcol.abs() < lim
            }
            _ => false,
        }
    }

    pub fn index(&self, s: &State) -> Result<usize> {
        if !self.contains(s) {
            return Err(Error::Domain(format!(
                "state {s:?} is not in the {} space",
                self.kind
            )));
        }
        Ok(self.index_unchecked(s))
    }

    /// Pixel index `row * width + col` of the state with index `idx`.
    pub fn pixel_of(&self, idx: usize) -> usize {
        match self.kind {
            SpaceKind::Position => idx,
            SpaceKind::PositionVelocity => idx / self.vel_span().pow(2),
        }
    }

    /// Forward neighborhood `N(i)` in enumeration order (row-major offsets).
    pub fn neighbors(&self, s: &State) -> Result<Vec<State>> {
        let idx = self.index(s)?;
        Ok(self
            .topology
            .succs(idx)
            .iter()
            .map(|&j| self.state_unchecked(j as usize))
            .collect())
    }

    fn pos_vel_successors(&self, s: State) -> Vec<State> {
        let State::PosVel(p) = s else {
            unreachable!("position-velocity space holds PosVel states")
        };
        let lim = self.v1 as i32 - 1;
        let mut out = Vec::new();
        for vr in -lim..=lim {
            for vc in -lim..=lim {
                let change = self
                    .metric
                    .length((vr - p.vrow) as i64, (vc - p.vcol) as i64);
                if change >= self.a1 as i64 {
                    continue;
                }
                let r = p.row as i64 + vr as i64;
                let c = p.col as i64 + vc as i64;
                if r < 0 || c < 0 || r >= self.height as i64 || c >= self.width as i64 {
                    continue;
                }
                out.push(State::pos_vel(r as usize, c as usize, vr, vc));
            }
        }
        out
    }

    /// Graph distance `d_G(i, j)`: the fewest transitions from `i` to `j`.
    /// `None` means unreachable.
    pub fn graph_distance(&self, i: &State, j: &State) -> Result<Option<u32>> {
        let a = self.index(i)?;
        let b = self.index(j)?;
        if let Some(d) = self.closed_form_distance(a, b) {
            return Ok(Some(d));
        }
        Ok(self.topology.bfs_distances(a)[b])
    }

    fn closed_form_distance(&self, a: usize, b: usize) -> Option<u32> {
        if self.kind != SpaceKind::Position || self.metric != Metric::Chebyshev {
            return None;
        }
        let (ra, ca) = ((a / self.width) as i64, (a % self.width) as i64);
        let (rb, cb) = ((b / self.width) as i64, (b % self.width) as i64);
        let cheb = (ra - rb).abs().max((ca - cb).abs()) as u64;
        Some(cheb.div_ceil(self.v1 as u64) as u32)
    }

    /// Graph distance from state index `from` to every state.
    pub fn distances_from(&self, from: usize) -> Vec<Option<u32>> {
        if self.kind == SpaceKind::Position && self.metric == Metric::Chebyshev {
            return (0..self.len())
                .map(|b| self.closed_form_distance(from, b))
                .collect();
        }
        self.topology.bfs_distances(from)
    }

    /// Collapses a per-state field to positions by maximizing over velocity.
    pub fn project_to_position(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.len() {
            return Err(Error::Domain(format!(
                "field has {} values, space has {} states",
                field.len(),
                self.len()
            )));
        }
        Ok(match self.kind {
            SpaceKind::Position => field.to_vec(),
            SpaceKind::PositionVelocity => field
                .chunks_exact(self.vel_span().pow(2))
                .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect(),
        })
    }

    /// The position space on the same frame with the same speed bound.
    pub fn position_space(&self) -> Result<StateSpace> {
        match self.kind {
            SpaceKind::Position => Ok(self.clone()),
            SpaceKind::PositionVelocity => {
                StateSpace::position(self.height, self.width, self.v1, self.metric)
            }
        }
    }
}

/// Offsets of the closed (or open, if `strict`) ball of radius `radius`,
/// in row-major order.
pub fn ball_offsets(radius: i64, metric: Metric, strict: bool) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            let len = metric.length(dr, dc);
            if (strict && len < radius) || (!strict && len <= radius) {
                out.push((dr, dc));
            }
        }
    }
    out
}
