//! Random-dot stereograms with known ground truth.
//!
//! The disparity field is left-referenced. Each row of the left image is a
//! piecewise-linear surface; neighbors whose disparities differ by more than
//! one pixel are treated as a depth discontinuity and not connected. The
//! right image is rendered by forward-warping those segments with a
//! nearest-surface-wins depth test; right pixels not covered by any segment
//! get fresh random values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disparity::{DisparityImage, INVALID_DISPARITY};
use crate::error::{Result, StereoError};
use crate::image::GrayImage;

/// Left pixels hidden in the right view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl OcclusionMask {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&o| o).count()
    }
}

#[derive(Debug, Clone)]
pub struct RandomDotPair {
    pub left: GrayImage,
    pub right: GrayImage,
    /// The input field with occluded pixels set invalid.
    pub ground_truth: DisparityImage,
    pub occlusion: OcclusionMask,
}

/// Depth-test margin for the occlusion decision.
const OCCLUSION_EPS: f64 = 1e-6;

struct Segment {
    s0: f64,
    s1: f64,
    d0: f64,
    d1: f64,
    u: usize,
}

impl Segment {
    /// Parameter in `[0, 1]` of the point imaged at right column `x`.
    fn param_at(&self, x: f64) -> Option<f64> {
        if x < self.s0 || x > self.s1 {
            return None;
        }
        if self.s1 == self.s0 {
            return Some(0.0);
        }
        Some((x - self.s0) / (self.s1 - self.s0))
    }

    fn disparity(&self, t: f64) -> f64 {
        self.d0 + t * (self.d1 - self.d0)
    }
}

fn row_segments(field: &DisparityImage, v: usize) -> Vec<Segment> {
    (0..field.width().saturating_sub(1))
        .filter_map(|u| {
            let (d0, d1) = (field.get(u, v) as f64, field.get(u + 1, v) as f64);
            ((d1 - d0).abs() <= 1.0).then(|| Segment { s0: u as f64 - d0, s1: (u + 1) as f64 - d1, d0, d1, u })
        })
        .collect()
}

fn validate_field(field: &DisparityImage) -> Result<()> {
    if field.width() == 0 || field.height() == 0 {
        return Err(StereoError::InvalidDisparityField("empty field".into()));
    }
    if field.valid_count() != field.width() * field.height() {
        return Err(StereoError::InvalidDisparityField("field contains invalid samples".into()));
    }
    let d_max = field.max_valid().unwrap_or(0.0);
    if d_max as f64 >= field.width() as f64 {
        return Err(StereoError::InvalidDisparityField(format!(
            "maximum disparity {d_max} must be below the width {}",
            field.width()
        )));
    }
    Ok(())
}

pub fn generate_random_dot_pair(width: usize, height: usize, field: &DisparityImage, seed: u64) -> Result<RandomDotPair> {
    if field.width() != width || field.height() != height {
        return Err(StereoError::InvalidDisparityField(format!(
            "field is {}x{}, expected {width}x{height}",
            field.width(),
            field.height()
        )));
    }
    validate_field(field)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left = GrayImage::from_vec(width, height, (0..width * height).map(|_| rng.gen()).collect())?;
    let mut right = GrayImage::new(width, height)?;
    let mut ground_truth = field.clone();
    let mut occluded = vec![false; width * height];

    for v in 0..height {
        let segments = row_segments(field, v);
        for x in 0..width {
            let xf = x as f64;
            let mut best: Option<(f64, f64)> = None;
            for seg in &segments {
                if let Some(t) = seg.param_at(xf) {
                    let d = seg.disparity(t);
                    if best.is_none_or(|(bd, _)| d > bd) {
                        let a = left.get(seg.u, v) as f64;
                        let b = left.get(seg.u + 1, v) as f64;
                        best = Some((d, a + t * (b - a)));
                    }
                }
            }
            let value = match best {
                Some((_, i)) => i.round() as u8,
                None => rng.gen(),
            };
            right.set(x, v, value);
        }
        for u in 0..width {
            let d = field.get(u, v) as f64;
            let x = u as f64 - d;
            let hidden = x < 0.0
                || segments.iter().any(|seg| seg.param_at(x).is_some_and(|t| seg.disparity(t) > d + OCCLUSION_EPS));
            if hidden {
                occluded[v * width + u] = true;
                ground_truth.set(u, v, INVALID_DISPARITY);
            }
        }
    }
    Ok(RandomDotPair { left, right, ground_truth, occlusion: OcclusionMask { width, height, data: occluded } })
}

/// Horizontal ramp from `d_lo` at the left border to `d_hi` at the right.
pub fn ramp_field(width: usize, height: usize, d_lo: f32, d_hi: f32) -> DisparityImage {
    let span = (width.max(2) - 1) as f32;
    DisparityImage::from_fn(width, height, |u, _| d_lo + (d_hi - d_lo) * u as f32 / span)
}

/// Ramp plus a centered square whose disparity exceeds the ramp at its left
/// edge by `step`.
pub fn ramp_with_occluder(width: usize, height: usize, d_lo: f32, d_hi: f32, step: f32) -> DisparityImage {
    let ramp = ramp_field(width, height, d_lo, d_hi);
    let side = width.min(height) / 4;
    let (u0, v0) = ((width - side) / 2, (height - side) / 2);
    let front = ramp.get(u0, 0) + step;
    DisparityImage::from_fn(width, height, |u, v| {
        if (u0..u0 + side).contains(&u) && (v0..v0 + side).contains(&v) {
            front
        } else {
            ramp.get(u, v)
        }
    })
}
