use super::{CostKind, MatchParams};
use crate::disparity::{DisparityImage, INVALID_DISPARITY};
use crate::error::{Result, StereoError};
use crate::image::GrayImage;
use crate::parallel::Executor;

/// Cost of a hypothesis that cannot be evaluated. Finite, so min-reductions
/// need no special cases; it must never take part in arithmetic.
pub const INVALID_COST: f32 = f32::MAX;

/// `height × width × (d_max + 1)` matching costs, disparity fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    d_max: usize,
    data: Vec<f32>,
}

impl CostVolume {
    pub fn filled(width: usize, height: usize, d_max: usize, value: f32) -> Self {
        CostVolume { width, height, d_max, data: vec![value; width * height * (d_max + 1)] }
    }

    pub fn from_vec(width: usize, height: usize, d_max: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * (d_max + 1) {
            return Err(StereoError::InvalidParameter("cost volume length does not match its shape".into()));
        }
        if data.iter().any(|c| c.is_nan()) {
            return Err(StereoError::InvalidParameter("cost volume contains NaN".into()));
        }
        Ok(CostVolume { width, height, d_max, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn d_max(&self) -> usize {
        self.d_max
    }
    pub fn levels(&self) -> usize {
        self.d_max + 1
    }

    /// `(height, width, levels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.levels())
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize, d: usize) -> f32 {
        self.data[(v * self.width + u) * self.levels() + d]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, d: usize, c: f32) {
        let l = self.levels();
        self.data[(v * self.width + u) * l + d] = c;
    }

    /// All hypotheses of one pixel.
    pub fn costs(&self, u: usize, v: usize) -> &[f32] {
        let l = self.levels();
        let i = (v * self.width + u) * l;
        &self.data[i..i + l]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Cost plane at disparity `d`, row-major.
    pub fn plane(&self, d: usize) -> Vec<f32> {
        self.data.iter().skip(d).step_by(self.levels()).copied().collect()
    }

    /// Mirrors the volume left-right.
    pub fn flip_horizontal(&self) -> CostVolume {
        let l = self.levels();
        let mut data = Vec::with_capacity(self.data.len());
        for v in 0..self.height {
            for u in (0..self.width).rev() {
                data.extend_from_slice(self.costs(u, v));
            }
        }
        debug_assert_eq!(data.len(), self.width * self.height * l);
        CostVolume { data, ..*self }
    }

    pub fn bytes(width: usize, height: usize, d_max: usize) -> u128 {
        width as u128 * height as u128 * (d_max as u128 + 1) * std::mem::size_of::<f32>() as u128
    }
}

/// Window sums of `x` and `x²` for every pixel whose window fits the image.
struct BoxSums {
    width: usize,
    sum: Vec<i64>,
    sum_sq: Vec<i64>,
}

impl BoxSums {
    fn new(img: &GrayImage, r: usize) -> Self {
        let (w, h) = (img.width(), img.height());
        // integral images with a zero border row/column
        let mut s = vec![0i64; (w + 1) * (h + 1)];
        let mut s2 = vec![0i64; (w + 1) * (h + 1)];
        for v in 0..h {
            let (mut row, mut row2) = (0i64, 0i64);
            for u in 0..w {
                let x = img.get(u, v) as i64;
                row += x;
                row2 += x * x;
                s[(v + 1) * (w + 1) + u + 1] = s[v * (w + 1) + u + 1] + row;
                s2[(v + 1) * (w + 1) + u + 1] = s2[v * (w + 1) + u + 1] + row2;
            }
        }
        let mut sum = vec![0i64; w * h];
        let mut sum_sq = vec![0i64; w * h];
        for v in r..h.saturating_sub(r) {
            for u in r..w.saturating_sub(r) {
                let (u0, v0, u1, v1) = (u - r, v - r, u + r + 1, v + r + 1);
                let at = |t: &[i64], uu: usize, vv: usize| t[vv * (w + 1) + uu];
                sum[v * w + u] = at(&s, u1, v1) - at(&s, u0, v1) - at(&s, u1, v0) + at(&s, u0, v0);
                sum_sq[v * w + u] = at(&s2, u1, v1) - at(&s2, u0, v1) - at(&s2, u1, v0) + at(&s2, u0, v0);
            }
        }
        BoxSums { width: w, sum, sum_sq }
    }

    #[inline]
    fn get(&self, u: usize, v: usize) -> (i64, i64) {
        let i = v * self.width + u;
        (self.sum[i], self.sum_sq[i])
    }
}

fn ncc_cost(n: i64, sl: (i64, i64), sr: (i64, i64), cross: i64) -> f32 {
    let var_l = (n * sl.1 - sl.0 * sl.0) as f64;
    let var_r = (n * sr.1 - sr.0 * sr.0) as f64;
    let nf = n as f64;
    // σ_L·σ_R = sqrt(var_l · var_r) / n²
    let sigma = (var_l / (nf * nf)).max(0.0).sqrt() * (var_r / (nf * nf)).max(0.0).sqrt();
    let sim = if sigma < 1e-12 {
        0.0
    } else {
        ((n * cross - sl.0 * sr.0) as f64 / (var_l.sqrt() * var_r.sqrt())).clamp(-1.0, 1.0)
    };
    (1.0 - sim) as f32
}

/// Left-referenced cost volume: `cost(u, v, d)` compares the left pixel
/// `(u, v)` with the right pixel `(u − d, v)`.
pub fn build_cost_volume(left: &GrayImage, right: &GrayImage, params: &MatchParams, exec: &Executor) -> Result<CostVolume> {
    if !left.same_size(right) {
        return Err(StereoError::ImageSizeMismatch(left.width(), left.height(), right.width(), right.height()));
    }
    params.validate()?;
    let (w, h) = (left.width(), left.height());
    let r = params.effective_radius();
    let d_max = params.d_max;
    if w <= d_max + 2 * params.block_radius {
        return Err(StereoError::InvalidParameter(format!(
            "width {w} must exceed d_max + 2·radius = {}",
            d_max + 2 * params.block_radius
        )));
    }
    let needed = CostVolume::bytes(w, h, d_max);
    if needed > params.volume_cap_bytes {
        return Err(StereoError::VolumeTooLarge { needed, cap: params.volume_cap_bytes });
    }

    let levels = d_max + 1;
    let mut vol = CostVolume::filled(w, h, d_max, INVALID_COST);
    let boxes = (params.cost == CostKind::Ncc).then(|| (BoxSums::new(left, r), BoxSums::new(right, r)));
    let n = ((2 * r + 1) * (2 * r + 1)) as i64;

    exec.for_each_chunk(vol.as_mut_slice(), w * levels, |v, row| {
        if v < r || v + r >= h {
            return;
        }
        match params.cost {
            CostKind::Fbs => fbs_row(left, right, params, v, row),
            kind => {
                let mut colsum = vec![0i64; w];
                for d in 0..=d_max {
                    // column sums over the window rows, for columns u' >= d
                    for (u, c) in colsum.iter_mut().enumerate().skip(d) {
                        let mut acc = 0i64;
                        for qv in v - r..=v + r {
                            let a = left.get(u, qv) as i64;
                            let b = right.get(u - d, qv) as i64;
                            acc += match kind {
                                CostKind::Ad | CostKind::Sad => (a - b).abs(),
                                CostKind::Sd | CostKind::Ssd => (a - b) * (a - b),
                                CostKind::Ncc => a * b,
                                CostKind::Fbs => unreachable!(),
                            };
                        }
                        *c = acc;
                    }
                    let first = d + r;
                    if first + r >= w {
                        continue;
                    }
                    let mut window: i64 = colsum[first - r..=first + r].iter().sum();
                    for u in first..w - r {
                        if u > first {
                            window += colsum[u + r] - colsum[u - r - 1];
                        }
                        row[u * levels + d] = match (kind, &boxes) {
                            (CostKind::Ncc, Some((bl, br))) => ncc_cost(n, bl.get(u, v), br.get(u - d, v), window),
                            _ => window as f32,
                        };
                    }
                }
            }
        }
    });
    Ok(vol)
}

fn fbs_row(left: &GrayImage, right: &GrayImage, params: &MatchParams, v: usize, row: &mut [f32]) {
    let w = left.width();
    let r = params.block_radius;
    let levels = params.d_max + 1;
    let side = 2 * r + 1;
    let inv_s = 1.0 / (2.0 * params.fbs_sigma_s * params.fbs_sigma_s);
    let inv_r = 1.0 / (2.0 * params.fbs_sigma_r * params.fbs_sigma_r);
    let mut weights = vec![0.0f64; side * side];
    for u in r..w - r {
        let center = left.get(u, v) as f64;
        let mut den = 0.0;
        for (k, wk) in weights.iter_mut().enumerate() {
            let (du, dv) = ((k % side) as f64 - r as f64, (k / side) as f64 - r as f64);
            let q = left.get(u + k % side - r, v + k / side - r) as f64;
            *wk = (-(du * du + dv * dv) * inv_s - (q - center) * (q - center) * inv_r).exp();
            den += *wk;
        }
        for d in 0..=params.d_max.min(u - r) {
            let mut num = 0.0;
            for (k, wk) in weights.iter().enumerate() {
                let (qu, qv) = (u + k % side - r, v + k / side - r);
                num += wk * (left.get(qu, qv) as f64 - right.get(qu - d, qv) as f64).abs();
            }
            row[u * levels + d] = (num / den) as f32;
        }
    }
}

/// Right-referenced cost volume: `cost(u, v, d)` compares the right pixel
/// `(u, v)` with the left pixel `(u + d, v)`.
pub fn build_right_cost_volume(
    left: &GrayImage,
    right: &GrayImage,
    params: &MatchParams,
    exec: &Executor,
) -> Result<CostVolume> {
    let mirrored = build_cost_volume(&right.flip_horizontal(), &left.flip_horizontal(), params, exec)?;
    Ok(mirrored.flip_horizontal())
}

/// Winner-take-all: per-pixel argmin, ties to the smallest disparity.
pub fn wta(vol: &CostVolume, exec: &Executor) -> DisparityImage {
    let (w, h) = (vol.width(), vol.height());
    let mut out = DisparityImage::invalid(w, h);
    exec.for_each_chunk(out.as_mut_slice(), w, |v, row| {
        for (u, px) in row.iter_mut().enumerate() {
            let mut best = INVALID_COST;
            let mut arg = None;
            for (d, &c) in vol.costs(u, v).iter().enumerate() {
                if c < best {
                    best = c;
                    arg = Some(d);
                }
            }
            *px = arg.map_or(INVALID_DISPARITY, |d| d as f32);
        }
    });
    out
}
