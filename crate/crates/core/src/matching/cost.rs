//! Single-pixel reference evaluations of the matching costs.
//!
//! The volume builder uses faster sliding-window code; these functions are
//! the direct definitions and back its tests.

use crate::error::{Result, StereoError};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelCost {
    Ad,
    Sd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxCost {
    Sad,
    Ssd,
}

fn check_window(left: &GrayImage, right: &GrayImage, u: usize, v: usize, d: usize, r: usize) -> Result<()> {
    let oob = || StereoError::OutOfBounds { u: u as i64, v: v as i64, d: d as i64 };
    if !left.same_size(right) {
        return Err(StereoError::ImageSizeMismatch(left.width(), left.height(), right.width(), right.height()));
    }
    if u + r >= left.width() || v + r >= left.height() || v < r || u < d + r {
        return Err(oob());
    }
    Ok(())
}

/// Absolute or squared intensity difference between `left(u, v)` and `right(u − d, v)`.
pub fn cost_pixel(left: &GrayImage, right: &GrayImage, u: usize, v: usize, d: usize, kind: PixelCost) -> Result<f64> {
    check_window(left, right, u, v, d, 0)?;
    let diff = left.get(u, v) as f64 - right.get(u - d, v) as f64;
    Ok(match kind {
        PixelCost::Ad => diff.abs(),
        PixelCost::Sd => diff * diff,
    })
}

/// Sum of pixel costs over the `(2r+1)²` window centered at `(u, v)`.
pub fn aggregate_box(
    left: &GrayImage,
    right: &GrayImage,
    u: usize,
    v: usize,
    d: usize,
    radius: usize,
    kind: BoxCost,
) -> Result<f64> {
    check_window(left, right, u, v, d, radius)?;
    let pixel = match kind {
        BoxCost::Sad => PixelCost::Ad,
        BoxCost::Ssd => PixelCost::Sd,
    };
    let mut sum = 0.0;
    for qv in v - radius..=v + radius {
        for qu in u - radius..=u + radius {
            sum += cost_pixel(left, right, qu, qv, d, pixel)?;
        }
    }
    Ok(sum)
}

/// Normalized cross-correlation of the left block at `(u, v)` and the right
/// block at `(u − d, v)`, in `[−1, 1]`. Textureless blocks
/// (`σ_L·σ_R < 1e-12`) score 0.
pub fn similarity_ncc(left: &GrayImage, right: &GrayImage, u: usize, v: usize, d: usize, radius: usize) -> Result<f64> {
    check_window(left, right, u, v, d, radius)?;
    let n = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let window = || (v - radius..=v + radius).flat_map(move |qv| (u - radius..=u + radius).map(move |qu| (qu, qv)));
    let mu_l = window().map(|(qu, qv)| left.get(qu, qv) as f64).sum::<f64>() / n;
    let mu_r = window().map(|(qu, qv)| right.get(qu - d, qv) as f64).sum::<f64>() / n;
    let (mut cov, mut var_l, mut var_r) = (0.0, 0.0, 0.0);
    for (qu, qv) in window() {
        let a = left.get(qu, qv) as f64 - mu_l;
        let b = right.get(qu - d, qv) as f64 - mu_r;
        cov += a * b;
        var_l += a * a;
        var_r += b * b;
    }
    let sigma = (var_l / n).sqrt() * (var_r / n).sqrt();
    if sigma < 1e-12 {
        return Ok(0.0);
    }
    Ok((cov / (n * sigma)).clamp(-1.0, 1.0))
}

/// Bilateral weighted mean of a cost plane around `(u, v)`.
///
/// `plane` holds one cost per pixel of `guide` (row-major). Weights are
/// `exp(−|q−p|²/2σ_s²) · exp(−(I(q)−I(p))²/2σ_r²)` with `I` the guide image.
pub fn aggregate_bilateral(
    plane: &[f32],
    guide: &GrayImage,
    u: usize,
    v: usize,
    radius: usize,
    sigma_s: f64,
    sigma_r: f64,
) -> Result<f64> {
    let (w, h) = (guide.width(), guide.height());
    if plane.len() != w * h {
        return Err(StereoError::InvalidParameter("cost plane does not match guide image".into()));
    }
    if u < radius || v < radius || u + radius >= w || v + radius >= h {
        return Err(StereoError::OutOfBounds { u: u as i64, v: v as i64, d: 0 });
    }
    let center = guide.get(u, v) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for qv in v - radius..=v + radius {
        for qu in u - radius..=u + radius {
            let ds = ((qu as f64 - u as f64).powi(2) + (qv as f64 - v as f64).powi(2)) / (2.0 * sigma_s * sigma_s);
            let dr = (guide.get(qu, qv) as f64 - center).powi(2) / (2.0 * sigma_r * sigma_r);
            let weight = (-ds - dr).exp();
            num += weight * plane[qv * w + qu] as f64;
            den += weight;
        }
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(l: u8, r: u8) -> (GrayImage, GrayImage) {
        (GrayImage::filled(4, 4, l).unwrap(), GrayImage::filled(4, 4, r).unwrap())
    }

    #[test]
    fn pixel_cost_examples() {
        let (l, r) = pair(120, 100);
        assert_eq!(cost_pixel(&l, &r, 2, 1, 1, PixelCost::Ad).unwrap(), 20.0);
        assert_eq!(cost_pixel(&l, &r, 2, 1, 1, PixelCost::Sd).unwrap(), 400.0);
        let (l, r) = pair(77, 77);
        assert_eq!(cost_pixel(&l, &r, 2, 1, 0, PixelCost::Ad).unwrap(), 0.0);
        assert_eq!(cost_pixel(&l, &r, 2, 1, 0, PixelCost::Sd).unwrap(), 0.0);
        assert!(matches!(cost_pixel(&l, &r, 1, 1, 2, PixelCost::Ad), Err(StereoError::OutOfBounds { .. })));
    }

    #[test]
    fn box_examples() {
        let img = GrayImage::from_fn(12, 7, |u, v| (u * 31 + v * 17) as u8).unwrap();
        assert_eq!(aggregate_box(&img, &img, 5, 3, 0, 2, BoxCost::Sad).unwrap(), 0.0);
        let right = GrayImage::from_fn(12, 7, |u, v| img.get((u + 5).min(11), v)).unwrap();
        assert_eq!(aggregate_box(&img, &right, 6, 3, 5, 1, BoxCost::Ssd).unwrap(), 0.0);
        let (l, r) = pair(12, 10);
        assert_eq!(aggregate_box(&l, &r, 2, 2, 1, 1, BoxCost::Sad).unwrap(), 18.0);
        assert!(aggregate_box(&l, &r, 1, 1, 1, 1, BoxCost::Sad).is_err());
    }

    #[test]
    fn ncc_examples() {
        let left = GrayImage::from_fn(7, 7, |u, v| (u * 29 + v * v * 13 + 5) as u8).unwrap();
        assert!((similarity_ncc(&left, &left, 3, 3, 0, 2).unwrap() - 1.0).abs() < 1e-12);
        let neg = GrayImage::from_fn(7, 7, |u, v| 255 - left.get(u, v)).unwrap();
        assert!((similarity_ncc(&left, &neg, 3, 3, 0, 2).unwrap() + 1.0).abs() < 1e-12);
        let small = GrayImage::from_fn(7, 7, |u, v| ((u * 7 + v * v * 3) % 90) as u8).unwrap();
        let affine = GrayImage::from_fn(7, 7, |u, v| small.get(u, v) * 2 + 40).unwrap();
        assert!((similarity_ncc(&small, &affine, 3, 3, 0, 2).unwrap() - 1.0).abs() < 1e-9);
        let flat = GrayImage::filled(7, 7, 9).unwrap();
        assert_eq!(similarity_ncc(&flat, &left, 3, 3, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn bilateral_uniform_limit() {
        let guide = GrayImage::from_fn(5, 5, |u, v| (u * 40 + v * 7) as u8).unwrap();
        let plane: Vec<f32> = (0..25).map(|i| (i * i % 17) as f32).collect();
        let mean = [6, 7, 8, 11, 12, 13, 16, 17, 18].iter().map(|&i| plane[i] as f64).sum::<f64>() / 9.0;
        let got = aggregate_bilateral(&plane, &guide, 2, 2, 1, 1e9, 1e9).unwrap();
        assert!((got - mean).abs() < 1e-6);
        let constant = vec![4.5f32; 25];
        let got = aggregate_bilateral(&constant, &guide, 2, 2, 2, 0.7, 3.0).unwrap();
        assert!((got - 4.5).abs() < 1e-12);
    }

    #[test]
    fn bilateral_hand_evaluated() {
        // neighbors differ by 30 grey levels; range weight exp(-30²/2σ²) = 1/8
        let guide = GrayImage::from_fn(3, 3, |u, v| if (u, v) == (1, 1) { 100 } else { 130 }).unwrap();
        let mut plane = vec![10.0f32; 9];
        plane[4] = 0.0;
        let sigma_r = 30.0 / (2.0 * 8f64.ln()).sqrt();
        let got = aggregate_bilateral(&plane, &guide, 1, 1, 1, 1e9, sigma_r).unwrap();
        assert!((got - 5.0).abs() < 1e-9, "{got}");
    }

    proptest! {
        #[test]
        fn ncc_stays_in_range_and_is_affine_invariant(
            data in proptest::collection::vec(0u8..100, 25),
            other in proptest::collection::vec(0u8..=255, 25),
            a in 1u8..3, b in 0u8..50,
        ) {
            let l = GrayImage::from_vec(5, 5, data.clone()).unwrap();
            let r = GrayImage::from_vec(5, 5, other).unwrap();
            let s = similarity_ncc(&l, &r, 2, 2, 0, 2).unwrap();
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&s));
            let la = GrayImage::from_vec(5, 5, data.iter().map(|x| x * a + b).collect()).unwrap();
            let sa = similarity_ncc(&la, &r, 2, 2, 0, 2).unwrap();
            prop_assert!((s - sa).abs() < 1e-9);
        }

        #[test]
        fn sad_nonnegative_and_zero_iff_identical(
            a in proptest::collection::vec(0u8..=255, 9),
            b in proptest::collection::vec(0u8..=255, 9),
        ) {
            let l = GrayImage::from_vec(3, 3, a.clone()).unwrap();
            let r = GrayImage::from_vec(3, 3, b.clone()).unwrap();
            for kind in [BoxCost::Sad, BoxCost::Ssd] {
                let c = aggregate_box(&l, &r, 1, 1, 0, 1, kind).unwrap();
                prop_assert!(c >= 0.0);
                prop_assert_eq!(c == 0.0, a == b);
            }
        }
    }
}
