//! Pinhole projection, lens distortion correction and dense remapping.
//!
//! Distortion coefficients follow the correction convention: applied to
//! distorted normalized coordinates they produce undistorted ones. The
//! forward model used throughout is radial correction followed by
//! tangential correction, with the tangential term evaluated on the
//! radially corrected point.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StereoError};
use crate::geometry::{Mat3, Vec3};
use crate::image::GrayImage;
use crate::parallel::Executor;

/// Sub-pixel image location.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub const fn new(u: f64, v: f64) -> Self {
        Pixel { u, v }
    }

    pub fn homogeneous(&self) -> Vec3 {
        Vec3::new(self.u, self.v, 1.0)
    }
}

/// Camera matrix `K` without skew.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicMatrix {
    fx: f64,
    fy: f64,
    u0: f64,
    v0: f64,
}

impl IntrinsicMatrix {
    pub fn new(fx: f64, fy: f64, u0: f64, v0: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(StereoError::InvariantViolation(format!(
                "focal lengths must be positive and finite (fx = {fx}, fy = {fy})"
            )));
        }
        if !(u0.is_finite() && v0.is_finite()) {
            return Err(StereoError::InvariantViolation("principal point is not finite".into()));
        }
        Ok(IntrinsicMatrix { fx, fy, u0, v0 })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn u0(&self) -> f64 {
        self.u0
    }
    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn with_principal_point(&self, u0: f64, v0: f64) -> Result<Self> {
        Self::new(self.fx, self.fy, u0, v0)
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.u0, 0.0, self.fy, self.v0, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Mat3 {
        Mat3::new(
            1.0 / self.fx,
            0.0,
            -self.u0 / self.fx,
            0.0,
            1.0 / self.fy,
            -self.v0 / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Projects a camera-frame point to pixel coordinates.
    pub fn project(&self, pc: &Vec3) -> Result<Pixel> {
        if !(pc.z > 0.0) {
            return Err(StereoError::NonPositiveDepth(pc.z));
        }
        Ok(Pixel::new(self.fx * pc.x / pc.z + self.u0, self.fy * pc.y / pc.z + self.v0))
    }

    /// `K⁻¹ (u, v, 1)ᵀ`; the third component is exactly one.
    pub fn normalize(&self, p: Pixel) -> Vec3 {
        Vec3::new((p.u - self.u0) / self.fx, (p.v - self.v0) / self.fy, 1.0)
    }

    pub fn denormalize(&self, x: f64, y: f64) -> Pixel {
        Pixel::new(self.fx * x + self.u0, self.fy * y + self.v0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistortionCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl DistortionCoefficients {
    pub fn new(k1: f64, k2: f64, k3: f64, p1: f64, p2: f64) -> Result<Self> {
        let d = DistortionCoefficients { k1, k2, k3, p1, p2 };
        if [k1, k2, k3, p1, p2].iter().any(|c| !c.is_finite()) {
            return Err(StereoError::InvariantViolation("distortion coefficient is not finite".into()));
        }
        Ok(d)
    }

    pub fn radial(k1: f64) -> Self {
        DistortionCoefficients { k1, ..Default::default() }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    fn radial_factor(&self, r2: f64) -> f64 {
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    fn tangential_delta(&self, x: f64, y: f64) -> (f64, f64) {
        let r2 = x * x + y * y;
        (
            2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x),
            self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y,
        )
    }
}

pub fn correct_radial(d: &DistortionCoefficients, x: f64, y: f64) -> (f64, f64) {
    let s = d.radial_factor(x * x + y * y);
    (x * s, y * s)
}

pub fn correct_tangential(d: &DistortionCoefficients, x: f64, y: f64) -> (f64, f64) {
    let (dx, dy) = d.tangential_delta(x, y);
    (x + dx, y + dy)
}

/// Full correction of a distorted normalized point: radial, then tangential.
pub fn undistort_normalized(d: &DistortionCoefficients, x: f64, y: f64) -> (f64, f64) {
    let (xr, yr) = correct_radial(d, x, y);
    correct_tangential(d, xr, yr)
}

pub const INVERSION_MAX_ITER: usize = 50;
pub const INVERSION_STEP_TOL: f64 = 1e-8;
pub const INVERSION_RESIDUAL_TOL: f64 = 1e-6;

/// Finds the distorted normalized point whose correction is `(xu, yu)`.
///
/// Fixed-point iteration `x ← (target − tangential(x·s)) / s`, with `s` the
/// radial factor at the current estimate. Returns `None` when the iteration
/// does not settle within [`INVERSION_MAX_ITER`] steps.
pub fn distort_normalized(d: &DistortionCoefficients, xu: f64, yu: f64) -> Option<(f64, f64)> {
    if d.is_zero() {
        return Some((xu, yu));
    }
    let (mut x, mut y) = (xu, yu);
    for _ in 0..INVERSION_MAX_ITER {
        let s = d.radial_factor(x * x + y * y);
        if !(s.abs() > 1e-12) {
            return None;
        }
        let (dx, dy) = d.tangential_delta(x * s, y * s);
        let nx = (xu - dx) / s;
        let ny = (yu - dy) / s;
        if !(nx.is_finite() && ny.is_finite()) {
            return None;
        }
        let step = (nx - x).abs().max((ny - y).abs());
        x = nx;
        y = ny;
        if step < INVERSION_STEP_TOL {
            let (fx, fy) = undistort_normalized(d, x, y);
            let residual = (fx - xu).abs().max((fy - yu).abs());
            return (residual < INVERSION_RESIDUAL_TOL).then_some((x, y));
        }
    }
    None
}

/// Dense inverse map: for each output pixel, where to sample the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct RemapField {
    width: usize,
    height: usize,
    entries: Vec<Option<[f64; 2]>>,
}

impl RemapField {
    pub fn identity(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |u, v| Some([u as f64, v as f64]))
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> Option<[f64; 2]>) -> Self {
        let mut entries = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                entries.push(f(u, v));
            }
        }
        RemapField { width, height, entries }
    }

    /// Builds the field row by row on `exec`.
    pub fn build(
        width: usize,
        height: usize,
        exec: &Executor,
        f: impl Fn(usize, usize) -> Option<[f64; 2]> + Sync + Send,
    ) -> Self {
        let mut entries = vec![None; width * height];
        exec.for_each_chunk(&mut entries, width.max(1), |v, row| {
            for (u, e) in row.iter_mut().enumerate() {
                *e = f(u, v);
            }
        });
        RemapField { width, height, entries }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> Option<[f64; 2]> {
        self.entries[v * self.width + u]
    }

    pub fn entries(&self) -> &[Option<[f64; 2]>] {
        &self.entries
    }

    /// Largest coordinate difference to the identity map; `inf` if any entry is flagged.
    pub fn max_identity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for v in 0..self.height {
            for u in 0..self.width {
                match self.get(u, v) {
                    Some([su, sv]) => worst = worst.max((su - u as f64).abs()).max((sv - v as f64).abs()),
                    None => return f64::INFINITY,
                }
            }
        }
        worst
    }
}

/// Maps every pixel of an undistorted `width × height` image to its location
/// in the distorted input image.
pub fn build_undistort_map(
    k: &IntrinsicMatrix,
    d: &DistortionCoefficients,
    width: usize,
    height: usize,
    exec: &Executor,
) -> Result<RemapField> {
    if width == 0 || height == 0 {
        return Err(StereoError::InvalidParameter("map size must be at least 1x1".into()));
    }
    if d.is_zero() {
        return Ok(RemapField::identity(width, height));
    }
    Ok(RemapField::build(width, height, exec, |u, v| {
        let target = k.normalize(Pixel::new(u as f64, v as f64));
        distort_normalized(d, target.x, target.y).map(|(x, y)| {
            let p = k.denormalize(x, y);
            [p.u, p.v]
        })
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

fn sample(img: &GrayImage, x: f64, y: f64, interp: Interpolation) -> u8 {
    let (w, h) = (img.width() as f64, img.height() as f64);
    if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
        return 0;
    }
    match interp {
        Interpolation::Nearest => img.get(x.round() as usize, y.round() as usize),
        Interpolation::Bilinear => {
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (ax, ay) = (x - x0 as f64, y - y0 as f64);
            let x1 = (x0 + 1).min(img.width() - 1);
            let y1 = (y0 + 1).min(img.height() - 1);
            let top = img.get(x0, y0) as f64 * (1.0 - ax) + img.get(x1, y0) as f64 * ax;
            let bottom = img.get(x0, y1) as f64 * (1.0 - ax) + img.get(x1, y1) as f64 * ax;
            let value = top * (1.0 - ay) + bottom * ay;
            value.round().clamp(0.0, 255.0) as u8
        }
    }
}

/// Resamples `img` through `map`; flagged or out-of-image sources give 0.
pub fn remap(img: &GrayImage, map: &RemapField, interp: Interpolation, exec: &Executor) -> Result<GrayImage> {
    let mut out = GrayImage::new(map.width(), map.height())?;
    let width = map.width();
    exec.for_each_chunk(out.as_mut_slice(), width, |v, row| {
        for (u, px) in row.iter_mut().enumerate() {
            *px = match map.get(u, v) {
                Some([x, y]) => sample(img, x, y, interp),
                None => 0,
            };
        }
    });
    Ok(out)
}
