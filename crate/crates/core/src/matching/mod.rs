//! Matching cost computation, aggregation and disparity optimization.
//!
//! Every cost volume stores "lower is better"; NCC similarity is turned
//! into the cost `1 − similarity`. Hypotheses whose support window would
//! read outside either image hold [`INVALID_COST`] instead of a clamped
//! estimate.

mod cost;
mod sgm;
mod volume;

pub use cost::{aggregate_bilateral, aggregate_box, cost_pixel, similarity_ncc, BoxCost, PixelCost};
pub use sgm::{path_costs, sgm_aggregate, Direction, PathSet, SgmParams};
pub use volume::{build_cost_volume, build_right_cost_volume, wta, CostVolume, INVALID_COST};

use serde::{Deserialize, Serialize};

use crate::disparity::DisparityImage;
use crate::error::{Result, StereoError};
use crate::image::GrayImage;
use crate::parallel::Executor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Ad,
    Sd,
    Sad,
    Ssd,
    Ncc,
    Fbs,
}

impl CostKind {
    pub fn name(&self) -> &'static str {
        match self {
            CostKind::Ad => "ad",
            CostKind::Sd => "sd",
            CostKind::Sad => "sad",
            CostKind::Ssd => "ssd",
            CostKind::Ncc => "ncc",
            CostKind::Fbs => "fbs",
        }
    }

    /// Factor converting a penalty in 8-bit intensity units into this
    /// kind's cost units. NCC costs span `[0, 2]` instead of `[0, 255]`.
    pub fn penalty_scale(&self) -> f32 {
        match self {
            CostKind::Ncc => 2.0 / 255.0,
            _ => 1.0,
        }
    }

    /// Pixel-wise kinds ignore the block radius.
    pub fn is_pixelwise(&self) -> bool {
        matches!(self, CostKind::Ad | CostKind::Sd)
    }
}

impl std::str::FromStr for CostKind {
    type Err = StereoError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ad" => CostKind::Ad,
            "sd" => CostKind::Sd,
            "sad" => CostKind::Sad,
            "ssd" => CostKind::Ssd,
            "ncc" => CostKind::Ncc,
            "fbs" => CostKind::Fbs,
            other => return Err(StereoError::InvalidParameter(format!("unknown cost kind '{other}'"))),
        })
    }
}

pub const DEFAULT_VOLUME_CAP_BYTES: u128 = 2 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub d_max: usize,
    pub block_radius: usize,
    pub cost: CostKind,
    pub fbs_sigma_s: f64,
    pub fbs_sigma_r: f64,
    /// Upper bound on the size of one cost volume.
    pub volume_cap_bytes: u128,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            d_max: 64,
            block_radius: 2,
            cost: CostKind::Sad,
            fbs_sigma_s: 3.0,
            fbs_sigma_r: 10.0,
            volume_cap_bytes: DEFAULT_VOLUME_CAP_BYTES,
        }
    }
}

impl MatchParams {
    pub fn new(d_max: usize, block_radius: usize, cost: CostKind) -> Self {
        MatchParams { d_max, block_radius, cost, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_max < 1 {
            return Err(StereoError::InvalidParameter("d_max must be at least 1".into()));
        }
        if self.cost == CostKind::Fbs && !(self.fbs_sigma_s > 0.0 && self.fbs_sigma_r > 0.0) {
            return Err(StereoError::InvalidParameter("bilateral sigmas must be positive".into()));
        }
        Ok(())
    }

    /// Support radius actually used by the cost kind.
    pub fn effective_radius(&self) -> usize {
        if self.cost.is_pixelwise() {
            0
        } else {
            self.block_radius
        }
    }
}

#[derive(Debug, Clone)]
pub struct StereoMatch {
    pub left: DisparityImage,
    pub right: DisparityImage,
    /// Left-referenced volume after aggregation, kept for subpixel refinement.
    pub left_volume: CostVolume,
}

/// Computes left- and right-referenced disparity maps.
///
/// SGM penalties are given in 8-bit intensity units and rescaled with
/// [`CostKind::penalty_scale`] before aggregation.
pub fn match_stereo(
    left: &GrayImage,
    right: &GrayImage,
    params: &MatchParams,
    sgm: Option<&SgmParams>,
    exec: &Executor,
) -> Result<StereoMatch> {
    let sgm = sgm.map(|p| p.scaled(params.cost.penalty_scale()));
    let optimize = |vol: CostVolume| -> Result<CostVolume> {
        match &sgm {
            Some(p) => sgm_aggregate(&vol, p, exec),
            None => Ok(vol),
        }
    };
    let left_volume = optimize(build_cost_volume(left, right, params, exec)?)?;
    let left_disp = wta(&left_volume, exec);
    let right_volume = optimize(build_right_cost_volume(left, right, params, exec)?)?;
    let right_disp = wta(&right_volume, exec);
    Ok(StereoMatch { left: left_disp, right: right_disp, left_volume })
}
