//! Small fixed-size algebra for rigid 3D geometry.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{Result, StereoError};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when validating rotations at construction time.
pub const ROTATION_TOL: f64 = 1e-9;

/// The cross-product matrix `[a]x`, so that `skew(a) * b == a x b`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -a.z, a.y, //
        a.z, 0.0, -a.x, //
        -a.y, a.x, 0.0,
    )
}

pub fn cross_via_skew(a: &Vec3, b: &Vec3) -> Vec3 {
    skew(a) * b
}

/// True when `RᵀR` is the identity and `|det R|` is one, both within `tol`.
pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    debug_assert!(tol > 0.0);
    if r.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let residual = (r.transpose() * r - Mat3::identity()).amax();
    residual <= tol && (r.determinant().abs() - 1.0).abs() <= tol
}

/// Rotation by `angle` radians about the x axis.
pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rigid transform `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3 {
    rotation: Mat3,
    translation: Vec3,
}

impl PoseSE3 {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !is_rotation(&rotation, ROTATION_TOL) {
            return Err(StereoError::InvariantViolation(format!(
                "rotation fails orthogonality/determinant check at tolerance {ROTATION_TOL:e}"
            )));
        }
        if translation.iter().any(|x| !x.is_finite()) {
            return Err(StereoError::InvariantViolation("translation is not finite".into()));
        }
        Ok(PoseSE3 { rotation, translation })
    }

    pub fn identity() -> Self {
        PoseSE3 { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn from_translation(t: Vec3) -> Self {
        PoseSE3 { rotation: Mat3::identity(), translation: t }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn transform_point(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    pub fn inverse(&self) -> PoseSE3 {
        let rt = self.rotation.transpose();
        PoseSE3 { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PoseSE3) -> PoseSE3 {
        PoseSE3 {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// The 4x4 homogeneous matrix `[R t; 0 1]`.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn transform_point_homogeneous(&self, x: &Vec3) -> Vec3 {
        let h = self.to_homogeneous() * Vector4::new(x.x, x.y, x.z, 1.0);
        Vec3::new(h.x / h.w, h.y / h.w, h.z / h.w)
    }
}
