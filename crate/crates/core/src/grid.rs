use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid whose nodes are integer multiples of the spacing:
/// `s_i = (first + i) · h`.
///
/// Anchoring nodes to multiples of `h` makes every grid with the same spacing
/// a sub-grid of every wider one, so tables built on a wide auxiliary grid
/// restrict exactly onto a simulation grid without interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub h: f64,
    pub first: i64,
    pub len: usize,
}

impl Grid {
    /// Smallest aligned grid covering `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {h}")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("empty grid interval [{lo}, {hi}]")));
        }
        let first = (lo / h).floor() as i64;
        let last = (hi / h).ceil() as i64;
        Ok(Self {
            h,
            first,
            len: (last - first + 1) as usize,
        })
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.h
    }

    pub fn s_min(&self) -> f64 {
        self.s(0)
    }

    pub fn s_max(&self) -> f64 {
        self.s(self.len - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.s(i)).collect()
    }

    /// Index of the node at `s = 0`, if the grid contains it.
    pub fn zero_index(&self) -> Option<usize> {
        (self.first <= 0 && self.first + self.len as i64 > 0).then(|| (-self.first) as usize)
    }

    /// Index of the node nearest to `s`, clamped to the grid.
    pub fn nearest(&self, s: f64) -> usize {
        let k = (s / self.h).round() as i64 - self.first;
        k.clamp(0, self.len as i64 - 1) as usize
    }

    /// Offset of `sub` inside `self` when `sub` is an aligned sub-grid.
    pub fn offset_of(&self, sub: &Grid) -> Option<usize> {
        let same_h = (self.h - sub.h).abs() <= 1e-15 * self.h;
        let inside = sub.first >= self.first
            && sub.first + sub.len as i64 <= self.first + self.len as i64;
        (same_h && inside).then(|| (sub.first - self.first) as usize)
    }

    /// Doubled-resolution grid over the same interval.
    pub fn refined(&self) -> Grid {
        Grid {
            h: self.h / 2.0,
            first: self.first * 2,
            len: 2 * self.len - 1,
        }
    }
}

/// Sample `values` (on `from`) at the nodes of `to`.
///
/// Exact restriction when `to` is an aligned sub-grid of `from`; otherwise
/// four-point Lagrange (cubic) interpolation.
pub fn resample(from: &Grid, values: &[f64], to: &Grid) -> Result<Vec<f64>> {
    if let Some(off) = from.offset_of(to) {
        return Ok(values[off..off + to.len].to_vec());
    }
    if to.s_min() < from.s_min() || to.s_max() > from.s_max() || from.len < 4 {
        return Err(Error::Domain(format!(
            "cannot resample [{}, {}] from [{}, {}]",
            to.s_min(),
            to.s_max(),
            from.s_min(),
            from.s_max()
        )));
    }
    Ok((0..to.len)
        .map(|j| {
            let s = to.s(j);
            let x = s / from.h - from.first as f64;
            let base = (x.floor() as i64 - 1).clamp(0, from.len as i64 - 4) as usize;
            let t = x - base as f64;
            let w = [
                -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
                t * (t - 2.0) * (t - 3.0) / 2.0,
                -t * (t - 1.0) * (t - 3.0) / 2.0,
                t * (t - 1.0) * (t - 2.0) / 6.0,
            ];
            (0..4).map(|m| w[m] * values[base + m]).sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_is_aligned_and_contains_interval() {
        let g = Grid::covering(-3.01, 2.5, 0.02).unwrap();
        assert!(g.s_min() <= -3.01 && g.s_max() >= 2.5);
        let z = g.zero_index().unwrap();
        assert_eq!(g.s(z), 0.0);
    }

    #[test]
    fn subgrid_restriction_is_exact() {
        let big = Grid::covering(-10.0, 10.0, 0.1).unwrap();
        let small = Grid::covering(-2.0, 3.0, 0.1).unwrap();
        let vals: Vec<f64> = big.nodes().iter().map(|s| s.sin()).collect();
        let out = resample(&big, &vals, &small).unwrap();
        for (j, v) in out.iter().enumerate() {
            assert_eq!(*v, small.s(j).sin());
        }
    }

    #[test]
    fn cubic_resample_reproduces_cubics() {
        let big = Grid::covering(-5.0, 5.0, 0.1).unwrap();
        let cubic = |s: f64| 0.5 * s * s * s - s + 2.0;
        let vals: Vec<f64> = big.nodes().into_iter().map(cubic).collect();
        let off = Grid {
            h: 0.07,
            first: -40,
            len: 100,
        };
        let out = resample(&big, &vals, &off).unwrap();
        for (j, v) in out.iter().enumerate() {
            assert!((v - cubic(off.s(j))).abs() < 1e-11);
        }
    }
}
