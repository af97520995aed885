//! Stereo rectification and rectified-rig disparity/depth relations.
//!
//! The rectified world frame has its origin halfway along the baseline,
//! `z` along the optical axes and `x` pointing from the left to the right
//! camera center.

use crate::camera::{distort_normalized, DistortionCoefficients, IntrinsicMatrix, Pixel, RemapField};
use crate::error::{Result, StereoError};
use crate::geometry::{is_rotation, Mat3, PoseSE3, Vec3, ROTATION_TOL};
use crate::parallel::Executor;

pub const BASELINE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    left: IntrinsicMatrix,
    right: IntrinsicMatrix,
    pose: PoseSE3,
    baseline: f64,
    rectified: bool,
}

impl StereoRig {
    /// `pose` maps left-camera coordinates into the right camera frame.
    pub fn new(
        left: IntrinsicMatrix,
        right: IntrinsicMatrix,
        pose: PoseSE3,
        baseline: f64,
        rectified: bool,
    ) -> Result<Self> {
        if !(baseline > 0.0) || !baseline.is_finite() {
            return Err(StereoError::InvariantViolation(format!("baseline Tc = {baseline} must be positive")));
        }
        let tn = pose.translation().norm();
        if (tn - baseline).abs() > BASELINE_TOL {
            return Err(StereoError::InvariantViolation(format!(
                "baseline Tc = {baseline} disagrees with |t| = {tn}"
            )));
        }
        if rectified {
            if (pose.rotation() - Mat3::identity()).amax() > ROTATION_TOL {
                return Err(StereoError::InvariantViolation("rectified rig needs R = I".into()));
            }
            if (pose.translation() - Vec3::new(-baseline, 0.0, 0.0)).amax() > ROTATION_TOL {
                return Err(StereoError::InvariantViolation("rectified rig needs t = (-Tc, 0, 0)".into()));
            }
            if left != right {
                return Err(StereoError::InvariantViolation("rectified rig needs identical intrinsics".into()));
            }
        }
        Ok(StereoRig { left, right, pose, baseline, rectified })
    }

    pub fn rectified(k: IntrinsicMatrix, baseline: f64) -> Result<Self> {
        Self::new(k, k, PoseSE3::from_translation(Vec3::new(-baseline, 0.0, 0.0)), baseline, true)
    }

    pub fn left(&self) -> &IntrinsicMatrix {
        &self.left
    }
    pub fn right(&self) -> &IntrinsicMatrix {
        &self.right
    }
    pub fn pose(&self) -> &PoseSE3 {
        &self.pose
    }
    pub fn baseline(&self) -> f64 {
        self.baseline
    }
    pub fn is_rectified(&self) -> bool {
        self.rectified
    }

    /// Right camera center in left-camera coordinates, `−Rᵀ t`.
    pub fn right_center(&self) -> Vec3 {
        -(self.pose.rotation().transpose() * self.pose.translation())
    }

    fn require_rectified(&self) -> Result<()> {
        if self.rectified {
            Ok(())
        } else {
            Err(StereoError::InvalidParameter("operation needs a rectified rig".into()))
        }
    }
}

/// Rotation whose first row is `t̂`, second row `ẑ × t̂` normalized and
/// third row completing a right-handed basis. `R·t = (|t|, 0, 0)`.
pub fn compute_rectifying_rotation(t: &Vec3) -> Result<Mat3> {
    let n = t.norm();
    if !(n > 0.0) {
        return Err(StereoError::DegenerateBaseline);
    }
    let e1 = t / n;
    let e2 = Vec3::z().cross(&e1);
    if e2.norm() < 1e-9 {
        return Err(StereoError::DegenerateBaseline);
    }
    let e2 = e2.normalize();
    let e3 = e1.cross(&e2);
    Ok(Mat3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]))
}

#[derive(Debug, Clone)]
pub struct RectificationResult {
    /// Rotation applied to the left camera.
    pub left_rotation: Mat3,
    /// Rotation applied to the right camera, `R_rect · R⁻¹`.
    pub right_rotation: Mat3,
    pub intrinsics: IntrinsicMatrix,
    pub left_map: RemapField,
    pub right_map: RemapField,
    pub rig: StereoRig,
    source_left: IntrinsicMatrix,
    source_right: IntrinsicMatrix,
}

impl RectificationResult {
    /// Pixel homographies original → rectified for the left and right views.
    pub fn homographies(&self) -> (Mat3, Mat3) {
        let k = self.intrinsics.matrix();
        (
            k * self.left_rotation * self.source_left.inverse_matrix(),
            k * self.right_rotation * self.source_right.inverse_matrix(),
        )
    }
}

/// Rectifies a rig without lens distortion.
pub fn rectify_rig(rig: &StereoRig, out_width: usize, out_height: usize, exec: &Executor) -> Result<RectificationResult> {
    let zero = DistortionCoefficients::default();
    rectify_rig_with_distortion(rig, &zero, &zero, out_width, out_height, exec)
}

/// Rectifies a rig, folding undistortion of each camera into its map.
///
/// Both cameras end up sharing `K_new`, which keeps the left focal lengths
/// and puts the principal point at the center of the output image.
pub fn rectify_rig_with_distortion(
    rig: &StereoRig,
    left_distortion: &DistortionCoefficients,
    right_distortion: &DistortionCoefficients,
    out_width: usize,
    out_height: usize,
    exec: &Executor,
) -> Result<RectificationResult> {
    if out_width == 0 || out_height == 0 {
        return Err(StereoError::InvalidParameter("output size must be at least 1x1".into()));
    }
    let left_rotation = compute_rectifying_rotation(&rig.right_center())?;
    let right_rotation = left_rotation * rig.pose.rotation().transpose();
    debug_assert!(is_rotation(&left_rotation, ROTATION_TOL) && is_rotation(&right_rotation, 10.0 * ROTATION_TOL));
    let k_new = rig
        .left
        .with_principal_point((out_width as f64 - 1.0) / 2.0, (out_height as f64 - 1.0) / 2.0)?;

    let build = |src_k: IntrinsicMatrix, to_source: Mat3, dist: DistortionCoefficients| {
        RemapField::build(out_width, out_height, exec, move |u, v| {
            let ray = to_source * k_new.normalize(Pixel::new(u as f64, v as f64));
            if !(ray.z > 0.0) {
                return None;
            }
            let (x, y) = distort_normalized(&dist, ray.x / ray.z, ray.y / ray.z)?;
            let p = src_k.denormalize(x, y);
            Some([p.u, p.v])
        })
    };
    let left_map = build(rig.left, left_rotation.transpose(), *left_distortion);
    let right_map = build(rig.right, right_rotation.transpose(), *right_distortion);

    Ok(RectificationResult {
        left_rotation,
        right_rotation,
        intrinsics: k_new,
        left_map,
        right_map,
        rig: StereoRig::rectified(k_new, rig.baseline)?,
        source_left: rig.left,
        source_right: rig.right,
    })
}

/// Projects a world point (origin mid-baseline) into both rectified views.
pub fn project_to_stereo(rig: &StereoRig, pw: &Vec3) -> Result<(Pixel, Pixel)> {
    rig.require_rectified()?;
    if !(pw.z > 0.0) {
        return Err(StereoError::NonPositiveDepth(pw.z));
    }
    let k = rig.left;
    let half = k.fx() * rig.baseline / (2.0 * pw.z);
    let u = k.fx() * pw.x / pw.z + k.u0();
    let v = k.fy() * pw.y / pw.z + k.v0();
    Ok((Pixel::new(u + half, v), Pixel::new(u - half, v)))
}

/// `z = f·Tc / d`.
pub fn depth_from_disparity(rig: &StereoRig, d: f64) -> Result<f64> {
    rig.require_rectified()?;
    if !(d > 0.0) {
        return Err(StereoError::NonPositiveDisparity(d));
    }
    Ok(rig.left.fx() * rig.baseline / d)
}
