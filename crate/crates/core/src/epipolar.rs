//! Essential, fundamental and homography matrices.
//!
//! Pose convention: `p_R = R p_L + t` maps left-camera coordinates into the
//! right camera frame. The epipolar constraint reads `p̃_Rᵀ F p̃_L = 0`.

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::camera::{IntrinsicMatrix, Pixel};
use crate::error::{Result, StereoError};
use crate::geometry::{is_rotation, skew, Mat3, Vec3, ROTATION_TOL};

/// Singular-value ratio below which a design matrix direction counts as null.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub left: Pixel,
    pub right: Pixel,
}

impl Correspondence {
    pub fn new(ul: f64, vl: f64, ur: f64, vr: f64) -> Self {
        Correspondence { left: Pixel::new(ul, vl), right: Pixel::new(ur, vr) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialMatrix(Mat3);

impl EssentialMatrix {
    /// `E = [t]x R`.
    pub fn from_pose(r: &Mat3, t: &Vec3) -> Result<Self> {
        if !is_rotation(r, ROTATION_TOL) {
            return Err(StereoError::InvariantViolation("R is not a rotation".into()));
        }
        let n = t.norm();
        if n < 1e-12 {
            return Err(StereoError::DegenerateTranslation(n));
        }
        Ok(EssentialMatrix(skew(t) * r))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// `p̂_Rᵀ E p̂_L` on normalized coordinates.
    pub fn residual(&self, left: &Vec3, right: &Vec3) -> f64 {
        (right.transpose() * self.0 * left)[(0, 0)]
    }
}

pub fn essential_from_pose(r: &Mat3, t: &Vec3) -> Result<EssentialMatrix> {
    EssentialMatrix::from_pose(r, t)
}

/// Fundamental matrix scaled so its largest-magnitude entry is `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(Mat3);

/// Divides by the largest-magnitude entry; the zero matrix is returned unchanged.
pub fn normalize_scale(m: &Mat3) -> Mat3 {
    let (mut best, mut val) = (0.0f64, 0.0f64);
    for x in m.iter() {
        if x.abs() > best {
            best = x.abs();
            val = *x;
        }
    }
    if best == 0.0 {
        *m
    } else {
        m / val
    }
}

impl FundamentalMatrix {
    /// Wraps a raw matrix after scale normalization. No rank projection.
    pub fn from_matrix(m: Mat3) -> Self {
        FundamentalMatrix(normalize_scale(&m))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Signed algebraic residual `p̃_Rᵀ F p̃_L`.
    pub fn residual(&self, c: &Correspondence) -> f64 {
        (c.right.homogeneous().transpose() * self.0 * c.left.homogeneous())[(0, 0)]
    }

    /// Epipolar line `F p̃_L` in the right image.
    pub fn right_line(&self, left: &Pixel) -> Vec3 {
        self.0 * left.homogeneous()
    }

    /// Null vectors `(e_L, e_R)` with `F e_L = 0` and `Fᵀ e_R = 0`.
    pub fn epipoles(&self) -> (Vec3, Vec3) {
        let svd = self.0.svd(true, true);
        let (imin, _) = svd.singular_values.argmin();
        let v_t = svd.v_t.expect("requested");
        let u = svd.u.expect("requested");
        (v_t.row(imin).transpose().into_owned(), u.column(imin).into_owned())
    }
}

pub fn fundamental_from_essential(
    e: &EssentialMatrix,
    kl: &IntrinsicMatrix,
    kr: &IntrinsicMatrix,
) -> FundamentalMatrix {
    let f = kr.inverse_matrix().transpose() * e.matrix() * kl.inverse_matrix();
    FundamentalMatrix::from_matrix(f)
}

pub fn epipolar_residual(f: &FundamentalMatrix, c: &Correspondence) -> f64 {
    f.residual(c)
}

/// Similarity moving the centroid to the origin with mean distance √2.
fn isotropic_normalization(points: impl Iterator<Item = Pixel> + Clone) -> Result<Mat3> {
    let n = points.clone().count() as f64;
    let (mut cu, mut cv) = (0.0, 0.0);
    for p in points.clone() {
        cu += p.u;
        cv += p.v;
    }
    cu /= n;
    cv /= n;
    let mean_dist = points.map(|p| ((p.u - cu).powi(2) + (p.v - cv).powi(2)).sqrt()).sum::<f64>() / n;
    if !(mean_dist > 0.0) || !mean_dist.is_finite() {
        return Err(StereoError::DegenerateConfiguration("all points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Mat3::new(s, 0.0, -s * cu, 0.0, s, -s * cv, 0.0, 0.0, 1.0))
}

fn apply(t: &Mat3, p: &Pixel) -> Vec3 {
    let q = t * p.homogeneous();
    q / q.z
}

/// Unit-norm minimizer of `|A x|` for a design matrix with 9 columns.
///
/// Fails when more than one singular value is negligible, i.e. the
/// solution is not unique.
fn solve_null_vector(mut a: DMatrix<f64>, what: &str) -> Result<Mat3> {
    if a.nrows() < 9 {
        let rows = a.nrows();
        a = a.resize_vertically(9, 0.0);
        debug_assert_eq!(a.nrows(), 9, "padded from {rows}");
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let largest = sv[order[0]];
    let second_smallest = sv[order[order.len() - 2]];
    if !(largest > 0.0) || second_smallest <= RANK_TOL * largest {
        return Err(StereoError::DegenerateConfiguration(format!(
            "{what} design matrix has a null space of dimension > 1 (σ8/σ1 = {:e})",
            second_smallest / largest
        )));
    }
    let h = v_t.row(order[order.len() - 1]);
    Ok(Matrix3::from_row_slice(h.transpose().as_slice()))
}

/// Normalized eight-point estimate with rank-2 enforcement.
pub fn estimate_fundamental_8pt(cs: &[Correspondence]) -> Result<FundamentalMatrix> {
    if cs.len() < 8 {
        return Err(StereoError::InsufficientPoints { needed: 8, got: cs.len() });
    }
    let tl = isotropic_normalization(cs.iter().map(|c| c.left))?;
    let tr = isotropic_normalization(cs.iter().map(|c| c.right))?;
    let mut a = DMatrix::zeros(cs.len(), 9);
    for (i, c) in cs.iter().enumerate() {
        let l = apply(&tl, &c.left);
        let r = apply(&tr, &c.right);
        let row = [r.x * l.x, r.x * l.y, r.x, r.y * l.x, r.y * l.y, r.y, l.x, l.y, 1.0];
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let f_hat = solve_null_vector(a, "eight-point")?;
    let mut svd = f_hat.svd(true, true);
    let (imin, _) = svd.singular_values.argmin();
    svd.singular_values[imin] = 0.0;
    let f_rank2 = svd.recompose().map_err(|e| StereoError::DegenerateConfiguration(e.into()))?;
    Ok(FundamentalMatrix::from_matrix(tr.transpose() * f_rank2 * tl))
}

/// `H = (z_L/z_R) K_R (R − t nᵀ / b) K_L⁻¹` for the plane `nᵀ p + b = 0`
/// expressed in the left camera frame.
pub fn homography_from_plane(
    r: &Mat3,
    t: &Vec3,
    n: &Vec3,
    b: f64,
    kl: &IntrinsicMatrix,
    kr: &IntrinsicMatrix,
    depth_ratio: f64,
) -> Result<Mat3> {
    if b == 0.0 {
        return Err(StereoError::ZeroPlaneOffset);
    }
    if n.norm() == 0.0 {
        return Err(StereoError::InvalidParameter("plane normal is zero".into()));
    }
    Ok(depth_ratio * kr.matrix() * (r - t * n.transpose() / b) * kl.inverse_matrix())
}

pub fn apply_homography(h: &Mat3, p: &Pixel) -> Result<Pixel> {
    let q = h * p.homogeneous();
    if q.z.abs() < 1e-12 {
        return Err(StereoError::PointAtInfinity(q.z));
    }
    Ok(Pixel::new(q.x / q.z, q.y / q.z))
}

fn collinear(a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let area = (b - a).cross(&(c - a)).z.abs();
    let scale = (b - a).norm().max((c - a).norm()).max(1e-300);
    area <= 1e-9 * scale * scale
}

/// Normalized direct linear transform. The result maps left to right
/// pixels and is scaled so its largest-magnitude entry is `+1`.
pub fn estimate_homography_4pt(cs: &[Correspondence]) -> Result<Mat3> {
    if cs.len() < 4 {
        return Err(StereoError::InsufficientPoints { needed: 4, got: cs.len() });
    }
    let tl = isotropic_normalization(cs.iter().map(|c| c.left))?;
    let tr = isotropic_normalization(cs.iter().map(|c| c.right))?;
    let ls: Vec<Vec3> = cs.iter().map(|c| apply(&tl, &c.left)).collect();
    let rs: Vec<Vec3> = cs.iter().map(|c| apply(&tr, &c.right)).collect();
    if cs.len() == 4 {
        for side in [&ls, &rs] {
            for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
                if collinear(&side[i], &side[j], &side[k]) {
                    return Err(StereoError::DegenerateConfiguration(format!(
                        "points {i}, {j}, {k} are collinear"
                    )));
                }
            }
        }
    }
    let mut a = DMatrix::zeros(2 * cs.len(), 9);
    for (i, (l, r)) in ls.iter().zip(&rs).enumerate() {
        let (x, y) = (l.x, l.y);
        let (xp, yp) = (r.x, r.y);
        let r0 = [-x, -y, -1.0, 0.0, 0.0, 0.0, xp * x, xp * y, xp];
        let r1 = [0.0, 0.0, 0.0, -x, -y, -1.0, yp * x, yp * y, yp];
        for j in 0..9 {
            a[(2 * i, j)] = r0[j];
            a[(2 * i + 1, j)] = r1[j];
        }
    }
    let h_hat = solve_null_vector(a, "homography")?;
    let tr_inv = tr
        .try_inverse()
        .ok_or_else(|| StereoError::DegenerateConfiguration("singular normalization".into()))?;
    Ok(normalize_scale(&(tr_inv * h_hat * tl)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rot_x, rot_y, rot_z};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Rig {
        r: Mat3,
        t: Vec3,
        kl: IntrinsicMatrix,
        kr: IntrinsicMatrix,
    }

    fn random_rig(rng: &mut ChaCha8Rng) -> Rig {
        let r = rot_z(rng.gen_range(-0.1..0.1)) * rot_y(rng.gen_range(-0.2..0.2)) * rot_x(rng.gen_range(-0.1..0.1));
        let t = Vec3::new(rng.gen_range(-1.0..-0.2), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        let kl = IntrinsicMatrix::new(rng.gen_range(300.0..700.0), rng.gen_range(300.0..700.0), 320.0, 240.0).unwrap();
        let kr = IntrinsicMatrix::new(rng.gen_range(300.0..700.0), rng.gen_range(300.0..700.0), 310.0, 250.0).unwrap();
        Rig { r, t, kl, kr }
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0), rng.gen_range(4.0..20.0)))
            .collect()
    }

    fn correspondences(rig: &Rig, pts: &[Vec3]) -> Vec<Correspondence> {
        pts.iter()
            .map(|p| {
                let l = rig.kl.project(p).unwrap();
                let r = rig.kr.project(&(rig.r * p + rig.t)).unwrap();
                Correspondence { left: l, right: r }
            })
            .collect()
    }

    #[test]
    fn essential_examples() {
        let e = essential_from_pose(&Mat3::identity(), &Vec3::x()).unwrap();
        assert_eq!(*e.matrix(), Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
        let e = essential_from_pose(&Mat3::identity(), &Vec3::z()).unwrap();
        assert_eq!(*e.matrix(), Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(matches!(
            essential_from_pose(&Mat3::identity(), &Vec3::new(1e-13, 0.0, 0.0)),
            Err(StereoError::DegenerateTranslation(_))
        ));
    }

    #[test]
    fn essential_has_rank_two_with_equal_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rig = random_rig(&mut rng);
        let e = essential_from_pose(&rig.r, &rig.t).unwrap();
        let mut sv: Vec<f64> = e.matrix().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[2] <= 1e-9 * sv[0]);
        assert!((sv[0] - sv[1]).abs() <= 1e-6 * sv[0]);
    }

    #[test]
    fn essential_constraint_on_generated_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rig = random_rig(&mut rng);
        let e = essential_from_pose(&rig.r, &rig.t).unwrap();
        for p in random_points(&mut rng, 100) {
            let pr = rig.r * p + rig.t;
            let res = e.residual(&(p / p.z), &(pr / pr.z));
            assert!(res.abs() < 1e-10 * e.matrix().norm());
        }
    }

    #[test]
    fn fundamental_with_identity_intrinsics_is_scaled_essential() {
        let e = essential_from_pose(&rot_y(0.1), &Vec3::new(-1.0, 0.2, 0.1)).unwrap();
        let id = IntrinsicMatrix::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let f = fundamental_from_essential(&e, &id, &id);
        assert!((f.matrix() - normalize_scale(e.matrix())).amax() < 1e-15);
    }

    #[test]
    fn fundamental_residuals_on_projected_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let kk = IntrinsicMatrix::new(100.0, 100.0, 64.0, 64.0).unwrap();
        let rig = Rig { r: rot_y(0.05), t: Vec3::new(-0.5, 0.02, 0.01), kl: kk, kr: kk };
        let f = fundamental_from_essential(&essential_from_pose(&rig.r, &rig.t).unwrap(), &rig.kl, &rig.kr);
        assert!(f.matrix().determinant().abs() <= 1e-9 * f.matrix().norm().powi(3));
        for c in correspondences(&rig, &random_points(&mut rng, 50)) {
            assert!(epipolar_residual(&f, &c).abs() < 1e-9);
        }
    }

    #[test]
    fn residual_is_constant_along_epipolar_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rig = random_rig(&mut rng);
        let f = fundamental_from_essential(&essential_from_pose(&rig.r, &rig.t).unwrap(), &rig.kl, &rig.kr);
        for c in correspondences(&rig, &random_points(&mut rng, 20)) {
            let line = f.right_line(&c.left);
            // direction of the line a u + b v + c = 0 is (b, -a)
            let dir = Pixel::new(line.y, -line.x);
            for s in [-50.0, -1.0, 3.0, 120.0] {
                let moved = Correspondence {
                    left: c.left,
                    right: Pixel::new(c.right.u + s * dir.u, c.right.v + s * dir.v),
                };
                assert!((f.residual(&moved) - f.residual(&c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_fundamental_residual() {
        let f = FundamentalMatrix::from_matrix(Mat3::zeros());
        assert_eq!(f.residual(&Correspondence::new(1.0, 2.0, 3.0, 4.0)), 0.0);
    }

    #[test]
    fn eight_point_recovers_ground_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rig = random_rig(&mut rng);
        let truth = fundamental_from_essential(&essential_from_pose(&rig.r, &rig.t).unwrap(), &rig.kl, &rig.kr);
        let cs = correspondences(&rig, &random_points(&mut rng, 20));
        let est = estimate_fundamental_8pt(&cs).unwrap();
        assert!((est.matrix() - truth.matrix()).amax() < 1e-6);
        assert!(est.matrix().determinant().abs() < 1e-9);
        for c in &cs {
            assert!(est.residual(c).abs() < 1e-6);
        }
    }

    #[test]
    fn eight_point_needs_eight() {
        let cs = vec![Correspondence::new(0.0, 0.0, 1.0, 1.0); 7];
        assert!(matches!(
            estimate_fundamental_8pt(&cs),
            Err(StereoError::InsufficientPoints { needed: 8, got: 7 })
        ));
    }

    #[test]
    fn eight_point_rejects_planar_scene() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rig = random_rig(&mut rng);
        // plane z = 10 + 0.1 x
        let pts: Vec<Vec3> = (0..20)
            .map(|_| {
                let x = rng.gen_range(-3.0..3.0);
                Vec3::new(x, rng.gen_range(-2.0..2.0), 10.0 + 0.1 * x)
            })
            .collect();
        let cs = correspondences(&rig, &pts);
        // oracle: the normalized design matrix of a planar scene has rank 6
        let tl = isotropic_normalization(cs.iter().map(|c| c.left)).unwrap();
        let tr = isotropic_normalization(cs.iter().map(|c| c.right)).unwrap();
        let mut a = DMatrix::zeros(cs.len(), 9);
        for (i, c) in cs.iter().enumerate() {
            let (l, r) = (apply(&tl, &c.left), apply(&tr, &c.right));
            let row = [r.x * l.x, r.x * l.y, r.x, r.y * l.x, r.y * l.y, r.y, l.x, l.y, 1.0];
            for j in 0..9 {
                a[(i, j)] = row[j];
            }
        }
        let sv = a.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[0] / sv[7] > 1e8, "design matrix condition {}", sv[0] / sv[7]);
        assert!(matches!(estimate_fundamental_8pt(&cs), Err(StereoError::DegenerateConfiguration(_))));
    }

    #[test]
    fn eight_point_rejects_coincident_points() {
        let cs = vec![Correspondence::new(5.0, 5.0, 6.0, 5.0); 10];
        assert!(matches!(estimate_fundamental_8pt(&cs), Err(StereoError::DegenerateConfiguration(_))));
    }

    #[test]
    fn plane_homography_on_rectified_rig_is_disparity_shift() {
        let (f, tc, z0) = (120.0, 0.3, 6.0);
        let kk = IntrinsicMatrix::new(f, f, 64.0, 48.0).unwrap();
        let h = homography_from_plane(
            &Mat3::identity(),
            &Vec3::new(-tc, 0.0, 0.0),
            &Vec3::z(),
            -z0,
            &kk,
            &kk,
            1.0,
        )
        .unwrap();
        let expected = Mat3::new(1.0, 0.0, -f * tc / z0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!((h - expected).amax() < 1e-12);
    }

    #[test]
    fn plane_homography_without_parallax() {
        let kl = IntrinsicMatrix::new(100.0, 110.0, 30.0, 20.0).unwrap();
        let kr = IntrinsicMatrix::new(90.0, 95.0, 33.0, 22.0).unwrap();
        let h = homography_from_plane(&Mat3::identity(), &Vec3::zeros(), &Vec3::new(0.2, 0.1, 1.0), -4.0, &kl, &kr, 1.0)
            .unwrap();
        assert!((h - kr.matrix() * kl.inverse_matrix()).amax() < 1e-15);
        assert!(matches!(
            homography_from_plane(&Mat3::identity(), &Vec3::x(), &Vec3::z(), 0.0, &kl, &kr, 1.0),
            Err(StereoError::ZeroPlaneOffset)
        ));
    }

    #[test]
    fn plane_homography_maps_plane_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rig = random_rig(&mut rng);
        let n = Vec3::new(0.1, -0.8, 0.3).normalize();
        let b = 2.5;
        let h = homography_from_plane(&rig.r, &rig.t, &n, b, &rig.kl, &rig.kr, 1.0).unwrap();
        for _ in 0..30 {
            // point on the plane nᵀp + b = 0 seen in front of both cameras
            let (x, z) = (rng.gen_range(-2.0..2.0), rng.gen_range(5.0..15.0));
            let y = -(b + n.x * x + n.z * z) / n.y;
            let p = Vec3::new(x, y, z);
            let l = rig.kl.project(&p).unwrap().homogeneous();
            let r = rig.kr.project(&(rig.r * p + rig.t)).unwrap().homogeneous();
            let mapped = h * l;
            let cross = mapped.cross(&r);
            assert!(cross.amax() < 1e-9 * mapped.norm(), "cross residual {}", cross.amax());
        }
    }

    #[test]
    fn homography_minimal_translation() {
        let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let cs: Vec<_> = square.iter().map(|&(u, v)| Correspondence::new(u, v, u + 3.0, v - 2.0)).collect();
        let h = estimate_homography_4pt(&cs).unwrap();
        let expected = normalize_scale(&Mat3::new(1.0, 0.0, 3.0, 0.0, 1.0, -2.0, 0.0, 0.0, 1.0));
        assert!((h - expected).amax() < 1e-9);

        let cs: Vec<_> = [(10.0, 3.0), (50.0, 7.0), (42.0, 60.0), (5.0, 40.0)]
            .iter()
            .map(|&(u, v)| Correspondence::new(u, v, u, v))
            .collect();
        let h = estimate_homography_4pt(&cs).unwrap();
        assert!((h - normalize_scale(&Mat3::identity())).amax() < 1e-9);
    }

    #[test]
    fn homography_errors() {
        let cs = vec![Correspondence::new(0.0, 0.0, 0.0, 0.0); 3];
        assert!(matches!(estimate_homography_4pt(&cs), Err(StereoError::InsufficientPoints { .. })));
        let cs: Vec<_> = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 5.0)]
            .iter()
            .map(|&(u, v)| Correspondence::new(u, v, u + 1.0, v))
            .collect();
        assert!(matches!(estimate_homography_4pt(&cs), Err(StereoError::DegenerateConfiguration(_))));
    }

    #[test]
    fn homography_recovers_random_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let truth = Mat3::new(1.1, 0.05, 12.0, -0.03, 0.95, -7.0, 1e-4, -2e-4, 1.0);
        let cs: Vec<_> = (0..12)
            .map(|_| {
                let p = Pixel::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
                let q = apply_homography(&truth, &p).unwrap();
                Correspondence { left: p, right: q }
            })
            .collect();
        let h = estimate_homography_4pt(&cs).unwrap();
        for c in &cs {
            let q = apply_homography(&h, &c.left).unwrap();
            assert!((q.u - c.right.u).abs() < 1e-6 && (q.v - c.right.v).abs() < 1e-6);
        }
    }

    #[test]
    fn apply_homography_examples() {
        let p = Pixel::new(3.5, -2.0);
        assert_eq!(apply_homography(&Mat3::identity(), &p).unwrap(), p);
        let t = Mat3::new(1.0, 0.0, 4.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0);
        assert_eq!(apply_homography(&t, &p).unwrap(), Pixel::new(7.5, -1.0));
        let h = Mat3::new(1.2, 0.1, 3.0, -0.2, 0.9, 5.0, 1e-3, 2e-3, 1.0);
        let back = apply_homography(&h.try_inverse().unwrap(), &apply_homography(&h, &p).unwrap()).unwrap();
        assert!((back.u - p.u).abs() < 1e-9 && (back.v - p.v).abs() < 1e-9);
        let inf = Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        assert!(matches!(apply_homography(&inf, &Pixel::new(0.0, 1.0)), Err(StereoError::PointAtInfinity(_))));
    }

    #[test]
    fn epipoles_are_null_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rig = random_rig(&mut rng);
        let f = fundamental_from_essential(&essential_from_pose(&rig.r, &rig.t).unwrap(), &rig.kl, &rig.kr);
        let (el, er) = f.epipoles();
        assert!((f.matrix() * el).amax() < 1e-12);
        assert!((f.matrix().transpose() * er).amax() < 1e-12);
    }
}
