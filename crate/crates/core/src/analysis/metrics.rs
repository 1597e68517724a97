use crate::{Error, Result};

/// Pixel-level confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    /// `TP / (TP + FP)`, or 1 when nothing was detected.
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    /// `TP / (TP + FN)`, or 1 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// Confusion counts of detected against true masks, summed over frames.
pub fn confusion(detected: &[Vec<bool>], truth: &[Vec<bool>]) -> Result<Confusion> {
    if detected.len() != truth.len() {
        return Err(Error::Domain(format!(
            "{} detection frames for {} truth frames",
            detected.len(),
            truth.len()
        )));
    }
    let mut c = Confusion::default();
    for (t, (d, g)) in detected.iter().zip(truth).enumerate() {
        if d.len() != g.len() {
            return Err(Error::Domain(format!(
                "frame {t}: detection mask has {} pixels, truth has {}",
                d.len(),
                g.len()
            )));
        }
        for (&p, &q) in d.iter().zip(g) {
            match (p, q) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                _ => {}
            }
        }
    }
    Ok(c)
}

/// `(Pr, Re)` of detected against true masks.
pub fn precision_recall(detected: &[Vec<bool>], truth: &[Vec<bool>]) -> Result<(f64, f64)> {
    let c = confusion(detected, truth)?;
    Ok((c.precision(), c.recall()))
}

/// Fraction of detections lying within Euclidean distance `m` of a true
/// footprint pixel of the same frame (1 when there are no detections).
pub fn m_precision(
    detected: &[Vec<bool>],
    truth: &[Vec<bool>],
    width: usize,
    m: f64,
) -> Result<f64> {
    let (hit, total) = m_counts(detected, truth, width, m)?;
    Ok(if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    })
}

/// `(TP_m, TP_m + FP_m)` for [`m_precision`].
pub fn m_counts(
    detected: &[Vec<bool>],
    truth: &[Vec<bool>],
    width: usize,
    m: f64,
) -> Result<(u64, u64)> {
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("radius m must be >= 0, got {m}")));
    }
    if detected.len() != truth.len() {
        return Err(Error::Domain(format!(
            "{} detection frames for {} truth frames",
            detected.len(),
            truth.len()
        )));
    }
    let m2 = m * m;
    let (mut hit, mut total) = (0u64, 0u64);
    for (d, g) in detected.iter().zip(truth) {
        let targets: Vec<(f64, f64)> = pixels(g, width)
            .map(|(r, c)| (r as f64, c as f64))
            .collect();
        for (r, c) in pixels(d, width) {
            total += 1;
            let (r, c) = (r as f64, c as f64);
            if targets
                .iter()
                .any(|&(tr, tc)| (r - tr).powi(2) + (c - tc).powi(2) <= m2)
            {
                hit += 1;
            }
        }
    }
    Ok((hit, total))
}

fn pixels(mask: &[bool], width: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    mask.iter()
        .enumerate()
        .filter_map(move |(p, &on)| on.then_some((p / width, p % width)))
}

/// One row of an evaluation table: recall and m-precision per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub recall: f64,
    pub m_precision: Vec<(f64, f64)>,
}

pub fn evaluate(
    detected: &[Vec<bool>],
    truth: &[Vec<bool>],
    width: usize,
    radii: &[f64],
) -> Result<EvalRow> {
    let recall = confusion(detected, truth)?.recall();
    let m_precision = radii
        .iter()
        .map(|&m| Ok((m, m_precision(detected, truth, width, m)?)))
        .collect::<Result<_>>()?;
    Ok(EvalRow {
        recall,
        m_precision,
    })
}

/// Fraction of an `height x width` frame within distance `m` of a centered
/// `s x s` footprint, counted exactly over pixels.
pub fn disk_area_fraction(height: usize, width: usize, s: usize, m: f64) -> f64 {
    let (r0, c0) = ((height - s) / 2, (width - s) / 2);
    let mut mask = vec![false; height * width];
    for r in r0..r0 + s {
        for c in c0..c0 + s {
            mask[r * width + c] = true;
        }
    }
    let all = vec![true; height * width];
    m_precision(&[all], &[mask], width, m).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(n: usize, on: &[usize]) -> Vec<bool> {
        let mut m = vec![false; n];
        for &p in on {
            m[p] = true;
        }
        m
    }

    #[test]
    fn precision_recall_examples() {
        // TP=8, FP=2, FN=2
        let truth = vec![mask(20, &(0..10).collect::<Vec<_>>())];
        let det = vec![mask(20, &(2..12).collect::<Vec<_>>())];
        let (pr, re) = precision_recall(&det, &truth).unwrap();
        assert!((pr - 0.8).abs() < 1e-15 && (re - 0.8).abs() < 1e-15);

        let (pr, re) = precision_recall(&truth, &truth).unwrap();
        assert_eq!((pr, re), (1.0, 1.0));

        let (pr, re) = precision_recall(&[vec![false; 20]], &truth).unwrap();
        assert_eq!((pr, re), (1.0, 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(precision_recall(&[vec![false; 3]], &[vec![false; 4]]).is_err());
        assert!(precision_recall(&[], &[vec![false; 4]]).is_err());
    }

    #[test]
    fn m_precision_basics() {
        let w = 10;
        let truth = vec![mask(100, &[44, 45, 54, 55])];
        let det = vec![mask(100, &[44, 46, 0, 99])];
        let p0 = m_precision(&det, &truth, w, 0.0).unwrap();
        let (pr, _) = precision_recall(&det, &truth).unwrap();
        assert_eq!(p0, pr);
        assert_eq!(m_precision(&det, &truth, w, 1.0).unwrap(), 0.5);
        let mut last = 0.0;
        for m in [0.0, 1.0, 2.0, 5.0, 7.0, 20.0] {
            let p = m_precision(&det, &truth, w, m).unwrap();
            assert!(p >= last);
            last = p;
        }
        assert_eq!(last, 1.0);
        assert_eq!(m_precision(&truth, &truth, w, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn area_fraction_of_small_disk() {
        // 2x2 footprint, m = 1: the footprint plus its 8 edge neighbors.
        assert_eq!(disk_area_fraction(10, 10, 2, 1.0), 12.0 / 100.0);
    }
}
