use crate::error::{Result, StereoError};

/// Marker for pixels without a disparity estimate.
pub const INVALID_DISPARITY: f32 = -1.0;

#[inline]
pub fn is_valid_disparity(d: f32) -> bool {
    d >= 0.0 && d.is_finite()
}

/// Dense disparity map, row-major; invalid pixels hold [`INVALID_DISPARITY`].
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DisparityImage {
    pub fn invalid(width: usize, height: usize) -> Self {
        DisparityImage { width, height, data: vec![INVALID_DISPARITY; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        DisparityImage { width, height, data: vec![value; width * height] }
    }

    /// Negative or non-finite samples are stored as invalid.
    pub fn from_vec(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(StereoError::InvalidParameter(format!(
                "{} samples do not form a {width}x{height} disparity map",
                data.len()
            )));
        }
        for d in &mut data {
            if !is_valid_disparity(*d) {
                *d = INVALID_DISPARITY;
            }
        }
        Ok(DisparityImage { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                let d = f(u, v);
                data.push(if is_valid_disparity(d) { d } else { INVALID_DISPARITY });
            }
        }
        DisparityImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn valid(&self, u: usize, v: usize) -> Option<f32> {
        let d = self.get(u, v);
        is_valid_disparity(d).then_some(d)
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, d: f32) {
        self.data[v * self.width + u] = if is_valid_disparity(d) { d } else { INVALID_DISPARITY };
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| is_valid_disparity(**d)).count()
    }

    pub fn max_valid(&self) -> Option<f32> {
        self.data.iter().copied().filter(|d| is_valid_disparity(*d)).reduce(f32::max)
    }

    pub fn same_size(&self, other: &DisparityImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_size(&self, other: &DisparityImage) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(StereoError::SizeMismatch(self.width, self.height, other.width, other.height))
        }
    }
}
