//! Disparity post-processing: left-right consistency, parabolic subpixel
//! interpolation and valid-only median filtering.
//!
//! Every step reads an immutable input and writes a fresh output row by row.

use serde::{Deserialize, Serialize};

use crate::disparity::{is_valid_disparity, DisparityImage, INVALID_DISPARITY};
use crate::error::{Result, StereoError};
use crate::matching::{CostVolume, INVALID_COST};
use crate::parallel::Executor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub lr_check: bool,
    pub lr_threshold: f64,
    pub subpixel: bool,
    pub median: bool,
    pub median_window: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams { lr_check: true, lr_threshold: 1.0, subpixel: true, median: true, median_window: 3 }
    }
}

impl RefineParams {
    pub fn none() -> Self {
        RefineParams { lr_check: false, subpixel: false, median: false, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_threshold >= 0.0) {
            return Err(StereoError::InvalidParameter(format!("lr threshold must be >= 0, got {}", self.lr_threshold)));
        }
        check_window(self.median_window)
    }
}

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(StereoError::InvalidParameter(format!("median window must be odd and >= 3, got {window}")));
    }
    Ok(())
}

/// Keeps `D_L(u, v)` only where the right map, sampled at `u − round(D_L)`,
/// agrees within `tau`.
pub fn lr_consistency_check(
    left: &DisparityImage,
    right: &DisparityImage,
    tau: f64,
    exec: &Executor,
) -> Result<DisparityImage> {
    left.check_same_size(right)?;
    if !(tau >= 0.0) {
        return Err(StereoError::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    let w = left.width();
    let mut out = DisparityImage::invalid(w, left.height());
    exec.for_each_chunk(out.as_mut_slice(), w.max(1), |v, row| {
        for (u, px) in row.iter_mut().enumerate() {
            let Some(dl) = left.valid(u, v) else { continue };
            let x = u as i64 - dl.round() as i64;
            if x < 0 || x >= w as i64 {
                continue;
            }
            if let Some(dr) = right.valid(x as usize, v) {
                if ((dl - dr) as f64).abs() <= tau {
                    *px = dl;
                }
            }
        }
    });
    Ok(out)
}

/// Vertex offset of the parabola through `(−1, c₋), (0, c₀), (1, c₊)`.
/// `None` for non-convex or degenerate triples.
pub fn parabola_offset(c_minus: f64, c0: f64, c_plus: f64) -> Option<f64> {
    let den = c_minus - 2.0 * c0 + c_plus;
    if !(den > 0.0) {
        return None;
    }
    Some(((c_minus - c_plus) / (2.0 * den)).clamp(-0.5, 0.5))
}

pub fn subpixel_refine(vol: &CostVolume, disp: &DisparityImage, exec: &Executor) -> Result<DisparityImage> {
    if vol.width() != disp.width() || vol.height() != disp.height() {
        return Err(StereoError::SizeMismatch(vol.width(), vol.height(), disp.width(), disp.height()));
    }
    let w = disp.width();
    let mut out = disp.clone();
    exec.for_each_chunk(out.as_mut_slice(), w.max(1), |v, row| {
        for (u, px) in row.iter_mut().enumerate() {
            let Some(d) = disp.valid(u, v) else { continue };
            if d.fract() != 0.0 {
                continue;
            }
            let d = d as usize;
            if d == 0 || d >= vol.d_max() {
                continue;
            }
            let c = vol.costs(u, v);
            if c[d - 1] == INVALID_COST || c[d] == INVALID_COST || c[d + 1] == INVALID_COST {
                continue;
            }
            if let Some(off) = parabola_offset(c[d - 1] as f64, c[d] as f64, c[d + 1] as f64) {
                *px = (d as f64 + off) as f32;
            }
        }
    });
    Ok(out)
}

/// Lower-middle element of `values` (which it reorders).
fn lower_median(values: &mut [f32]) -> f32 {
    let k = (values.len() - 1) / 2;
    *values.select_nth_unstable_by(k, f32::total_cmp).1
}

/// Median filter over valid samples. Invalid pixels are filled only when at
/// least half of the in-bounds window is valid.
pub fn median_fill(disp: &DisparityImage, window: usize, exec: &Executor) -> Result<DisparityImage> {
    check_window(window)?;
    let (w, h) = (disp.width(), disp.height());
    let r = window / 2;
    let mut out = DisparityImage::invalid(w, h);
    exec.for_each_chunk(out.as_mut_slice(), w.max(1), |v, row| {
        let mut buf = Vec::with_capacity(window * window);
        for (u, px) in row.iter_mut().enumerate() {
            buf.clear();
            let (v0, v1) = (v.saturating_sub(r), (v + r).min(h - 1));
            let (u0, u1) = (u.saturating_sub(r), (u + r).min(w - 1));
            for qv in v0..=v1 {
                for qu in u0..=u1 {
                    if let Some(d) = disp.valid(qu, qv) {
                        buf.push(d);
                    }
                }
            }
            let total = (v1 - v0 + 1) * (u1 - u0 + 1);
            let center_valid = is_valid_disparity(disp.get(u, v));
            *px = if buf.is_empty() || (!center_valid && 2 * buf.len() < total) {
                INVALID_DISPARITY
            } else {
                lower_median(&mut buf)
            };
        }
    });
    Ok(out)
}

/// Runs the enabled steps in order LRDCC, subpixel, median.
///
/// `volume` is the left-referenced volume the left map was selected from;
/// subpixel refinement is skipped without it.
pub fn refine(
    left: &DisparityImage,
    right: Option<&DisparityImage>,
    volume: Option<&CostVolume>,
    params: &RefineParams,
    exec: &Executor,
) -> Result<DisparityImage> {
    params.validate()?;
    let mut d = left.clone();
    if params.lr_check {
        let right = right.ok_or_else(|| StereoError::InvalidParameter("consistency check needs a right map".into()))?;
        d = lr_consistency_check(&d, right, params.lr_threshold, exec)?;
    }
    if params.subpixel {
        if let Some(vol) = volume {
            d = subpixel_refine(vol, &d, exec)?;
        }
    }
    if params.median {
        d = median_fill(&d, params.median_window, exec)?;
    }
    Ok(d)
}
