//! Semi-global aggregation.
//!
//! Along each direction `r` the path cost is
//!
//! ```text
//! L_r(p, d) = c(p, d) + min(L_r(p−r, d),
//!                           L_r(p−r, d±1) + λ1,
//!                           min_k L_r(p−r, k) + λ2) − min_k L_r(p−r, k)
//! ```
//!
//! and the aggregated volume is the sum of `L_r` over all directions, added
//! in a fixed direction order. Invalid hypotheses stay invalid and are
//! skipped by the minimizations; a path restarts (`L_r = c`) after a pixel
//! with no valid hypothesis.

use serde::{Deserialize, Serialize};

use super::volume::{CostVolume, INVALID_COST};
use crate::error::{Result, StereoError};
use crate::parallel::Executor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathSet {
    Four,
    Eight,
}

impl PathSet {
    pub fn directions(&self) -> &'static [Direction] {
        use Direction::*;
        match self {
            PathSet::Four => &[LeftToRight, RightToLeft, TopToBottom, BottomToTop],
            PathSet::Eight => &[
                LeftToRight,
                RightToLeft,
                TopToBottom,
                BottomToTop,
                TopLeftToBottomRight,
                TopRightToBottomLeft,
                BottomLeftToTopRight,
                BottomRightToTopLeft,
            ],
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            4 => Ok(PathSet::Four),
            8 => Ok(PathSet::Eight),
            _ => Err(StereoError::InvalidParameter(format!("path count must be 4 or 8, got {n}"))),
        }
    }

    pub fn count(&self) -> usize {
        self.directions().len()
    }
}

/// Traversal direction; the predecessor of `p` is `p − step()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
    TopToBottom,
    BottomToTop,
    TopLeftToBottomRight,
    TopRightToBottomLeft,
    BottomLeftToTopRight,
    BottomRightToTopLeft,
}

impl Direction {
    pub fn step(&self) -> (isize, isize) {
        match self {
            Direction::LeftToRight => (1, 0),
            Direction::RightToLeft => (-1, 0),
            Direction::TopToBottom => (0, 1),
            Direction::BottomToTop => (0, -1),
            Direction::TopLeftToBottomRight => (1, 1),
            Direction::TopRightToBottomLeft => (-1, 1),
            Direction::BottomLeftToTopRight => (1, -1),
            Direction::BottomRightToTopLeft => (-1, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgmParams {
    pub lambda1: f32,
    pub lambda2: f32,
    pub paths: PathSet,
}

impl Default for SgmParams {
    fn default() -> Self {
        SgmParams { lambda1: 8.0, lambda2: 32.0, paths: PathSet::Eight }
    }
}

impl SgmParams {
    pub fn scaled(&self, factor: f32) -> Self {
        SgmParams { lambda1: self.lambda1 * factor, lambda2: self.lambda2 * factor, paths: self.paths }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lambda1 && self.lambda1 <= self.lambda2 && self.lambda2.is_finite()) {
            return Err(StereoError::InvalidParameter(format!(
                "penalties need 0 <= λ1 <= λ2 (got {}, {})",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }
}

/// One step of the path recursion for a single pixel.
#[inline]
fn path_step(prev: Option<&[f32]>, cost: &[f32], out: &mut [f32], p1: f32, p2: f32) {
    let prev_min = prev.map(|p| p.iter().copied().fold(INVALID_COST, f32::min));
    match (prev, prev_min) {
        (Some(prev), Some(m)) if m < INVALID_COST => {
            let n = cost.len();
            for d in 0..n {
                if cost[d] == INVALID_COST {
                    out[d] = INVALID_COST;
                    continue;
                }
                let mut best = m + p2;
                if prev[d] < best {
                    best = prev[d];
                }
                if d > 0 && prev[d - 1] != INVALID_COST && prev[d - 1] + p1 < best {
                    best = prev[d - 1] + p1;
                }
                if d + 1 < n && prev[d + 1] != INVALID_COST && prev[d + 1] + p1 < best {
                    best = prev[d + 1] + p1;
                }
                out[d] = cost[d] + (best - m);
            }
        }
        _ => out.copy_from_slice(cost),
    }
}

#[inline]
fn accumulate(acc: &mut [f32], l: &[f32]) {
    for (a, &x) in acc.iter_mut().zip(l) {
        *a = if *a == INVALID_COST || x == INVALID_COST { INVALID_COST } else { *a + x };
    }
}

/// Pixels per parallel chunk when a whole row is processed at once.
const PIXEL_CHUNK: usize = 64;

/// Adds `L_r` for direction `dir` into `acc`.
fn add_direction(vol: &CostVolume, dir: Direction, p1: f32, p2: f32, acc: &mut CostVolume, exec: &Executor) {
    let (w, h, levels) = (vol.width(), vol.height(), vol.levels());
    let (du, dv) = dir.step();
    if dv == 0 {
        // rows are independent scanlines
        exec.for_each_chunk(acc.as_mut_slice(), w * levels, |v, acc_row| {
            let mut prev = vec![0.0f32; levels];
            let mut cur = vec![0.0f32; levels];
            let order: Box<dyn Iterator<Item = usize>> = if du > 0 { Box::new(0..w) } else { Box::new((0..w).rev()) };
            for (i, u) in order.enumerate() {
                path_step((i > 0).then_some(&prev[..]), vol.costs(u, v), &mut cur, p1, p2);
                accumulate(&mut acc_row[u * levels..(u + 1) * levels], &cur);
                std::mem::swap(&mut prev, &mut cur);
            }
        });
        return;
    }
    // rows in path order; every pixel of a row depends only on the previous row
    let mut prev_row = vec![0.0f32; w * levels];
    let mut cur_row = vec![0.0f32; w * levels];
    let rows: Vec<usize> = if dv > 0 { (0..h).collect() } else { (0..h).rev().collect() };
    for (i, &v) in rows.iter().enumerate() {
        let have_prev = i > 0;
        let prev_ref = &prev_row;
        exec.for_each_chunk(&mut cur_row, PIXEL_CHUNK * levels, |chunk, out| {
            for (k, px) in out.chunks_mut(levels).enumerate() {
                let u = chunk * PIXEL_CHUNK + k;
                let pu = u as isize - du;
                let prev = (have_prev && pu >= 0 && (pu as usize) < w)
                    .then(|| &prev_ref[pu as usize * levels..(pu as usize + 1) * levels]);
                path_step(prev, vol.costs(u, v), px, p1, p2);
            }
        });
        let acc_row = &mut acc.as_mut_slice()[v * w * levels..(v + 1) * w * levels];
        accumulate(acc_row, &cur_row);
        std::mem::swap(&mut prev_row, &mut cur_row);
    }
}

/// Path costs `L_r` along a single direction.
pub fn path_costs(vol: &CostVolume, dir: Direction, lambda1: f32, lambda2: f32, exec: &Executor) -> Result<CostVolume> {
    SgmParams { lambda1, lambda2, paths: PathSet::Four }.validate()?;
    let mut acc = CostVolume::filled(vol.width(), vol.height(), vol.d_max(), 0.0);
    add_direction(vol, dir, lambda1, lambda2, &mut acc, exec);
    Ok(acc)
}

/// Sums the path costs over all directions of `params.paths`.
pub fn sgm_aggregate(vol: &CostVolume, params: &SgmParams, exec: &Executor) -> Result<CostVolume> {
    params.validate()?;
    let mut acc = CostVolume::filled(vol.width(), vol.height(), vol.d_max(), 0.0);
    for &dir in params.paths.directions() {
        add_direction(vol, dir, params.lambda1, params.lambda2, &mut acc, exec);
    }
    Ok(acc)
}
