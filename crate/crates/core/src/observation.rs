//! Frames, frame sequences and windowed state observations.

use crate::space::State;
use crate::{Error, Result};

/// One intensity image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Domain(format!(
                "frame dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::Domain(format!(
                "frame {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite intensity at pixel ({}, {})",
                pos / width,
                pos % width
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    /// Intensity at a possibly out-of-frame position, replicating the
    /// nearest edge pixel.
    pub fn get_clamped(&self, row: i64, col: i64) -> f32 {
        let r = row.clamp(0, self.height as i64 - 1) as usize;
        let c = col.clamp(0, self.width as i64 - 1) as usize;
        self.data[r * self.width + c]
    }
}

/// Frames in temporal order, all of one size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
}

impl FrameSequence {
    /// Needs at least two frames so that edge observations exist.
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::Domain(format!(
                "a sequence needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        let (h, w) = (frames[0].height, frames[0].width);
        for (t, f) in frames.iter().enumerate().skip(1) {
            if f.height != h || f.width != w {
                return Err(Error::Ingest {
                    frame: t,
                    reason: format!(
                        "size {}x{} differs from frame 0 ({h}x{w})",
                        f.height, f.width
                    ),
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn frame(&self, t: usize) -> &Frame {
        &self.frames[t]
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// The `(2r+1)^2` intensities around a state, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub center: State,
    pub r: usize,
    pub values: Vec<f64>,
}

impl ObservationWindow {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Window of radius `r` around the position of `state` in frame `t`.
/// Out-of-frame samples replicate the nearest edge pixel.
pub fn state_window(seq: &FrameSequence, t: usize, state: State, r: usize) -> ObservationWindow {
    let frame = seq.frame(t);
    let (row, col) = (state.row() as i64, state.col() as i64);
    let ri = r as i64;
    let mut values = Vec::with_capacity((2 * r + 1).pow(2));
    for dr in -ri..=ri {
        for dc in -ri..=ri {
            values.push(frame.get_clamped(row + dr, col + dc) as f64);
        }
    }
    ObservationWindow {
        center: state,
        r,
        values,
    }
}

/// A frame padded by `r` pixels of edge replication, in double precision,
/// so every window is a plain rectangular slice.
#[derive(Debug, Clone)]
pub struct PaddedFrame {
    r: usize,
    stride: usize,
    data: Vec<f64>,
}

impl PaddedFrame {
    pub fn new(frame: &Frame, r: usize) -> Self {
        let ri = r as i64;
        let stride = frame.width + 2 * r;
        let mut data = Vec::with_capacity(stride * (frame.height + 2 * r));
        for row in -ri..frame.height as i64 + ri {
            for col in -ri..frame.width as i64 + ri {
                data.push(frame.get_clamped(row, col) as f64);
            }
        }
        Self { r, stride, data }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Calls `f` with each window row of the window centered at `(row, col)`.
    #[inline]
    pub fn window_rows(&self, row: usize, col: usize) -> impl Iterator<Item = &[f64]> + '_ {
        let side = 2 * self.r + 1;
        (0..side).map(move |dr| {
            let start = (row + dr) * self.stride + col;
            &self.data[start..start + side]
        })
    }

    /// Window centered at `(row, col)` copied out row-major.
    pub fn window(&self, row: usize, col: usize) -> Vec<f64> {
        self.window_rows(row, col).flatten().copied().collect()
    }

    /// Mean of the window centered at `(row, col)`.
    pub fn window_mean(&self, row: usize, col: usize) -> f64 {
        let side = 2 * self.r + 1;
        self.window_rows(row, col)
            .map(|w| w.iter().sum::<f64>())
            .sum::<f64>()
            / (side * side) as f64
    }

    /// Squared Euclidean distance between the windows centered at `(ra, ca)`
    /// here and at `(rb, cb)` in `other`.
    #[inline]
    pub fn window_dist2(
        &self,
        ra: usize,
        ca: usize,
        other: &PaddedFrame,
        rb: usize,
        cb: usize,
    ) -> f64 {
        self.window_rows(ra, ca)
            .zip(other.window_rows(rb, cb))
            .map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum()
    }
}
