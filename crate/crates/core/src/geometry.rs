//! Ellipsoid landmarks as dual quadrics and stereo triangulation of detections.
//!
//! A dual quadric `Q` built from centre `mu` and shape `P` (the squared-radius
//! matrix) is `T · diag(P, -1) · Tᵀ` with `T = [[I, mu], [0, 1]]`, i.e.
//! `Q = [[P - mu muᵀ, -mu], [-muᵀ, -1]]`. Rigid motions act as `Q ↦ T Q Tᵀ`.

use nalgebra::{Isometry3, Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

/// Minimum disparity, in pixels, for a stereo pair to be triangulated.
pub const MIN_DISPARITY: f64 = 0.5;

/// An ellipsoid in dual-quadric form, with its centre and shape cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    q: Matrix4<f64>,
    mu: Vector3<f64>,
    p: Matrix3<f64>,
}

impl Ellipsoid {
    /// Builds from a centre and a symmetric positive-definite shape matrix.
    pub fn from_center_shape(mu: Vector3<f64>, p: Matrix3<f64>) -> Result<Self> {
        let p = symmetric_part(&p);
        if p.iter().any(|v| !v.is_finite()) || mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateQuadric(
                "non-finite centre or shape".into(),
            ));
        }
        if p.cholesky().is_none() {
            return Err(Error::DegenerateQuadric(
                "shape matrix is not positive-definite".into(),
            ));
        }
        let mut q = Matrix4::zeros();
        q.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(p - mu * mu.transpose()));
        q.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-mu));
        q.fixed_view_mut::<1, 3>(3, 0).copy_from(&(-mu.transpose()));
        q[(3, 3)] = -1.0;
        Ok(Self { q, mu, p })
    }

    /// Axis-aligned ellipsoid with the given semi-axis lengths.
    pub fn from_center_radii(mu: Vector3<f64>, radii: Vector3<f64>) -> Result<Self> {
        Self::from_center_shape(mu, Matrix3::from_diagonal(&radii.component_mul(&radii)))
    }

    /// Builds from any non-zero multiple of a dual quadric.
    pub fn from_dual(q: &Matrix4<f64>) -> Result<Self> {
        let (mu, p) = extract_center_shape(q)?;
        Self::from_center_shape(mu, p)
    }

    /// The dual quadric, normalised so that `Q[3][3] = -1`.
    pub fn dual(&self) -> &Matrix4<f64> {
        &self.q
    }

    pub fn center(&self) -> &Vector3<f64> {
        &self.mu
    }

    pub fn shape(&self) -> &Matrix3<f64> {
        &self.p
    }

    /// Applies a rigid motion: the result is the image of this ellipsoid under `pose`.
    pub fn transform(&self, pose: &Isometry3<f64>) -> Ellipsoid {
        let r = pose.rotation.to_rotation_matrix();
        let p = symmetric_part(&(r.matrix() * self.p * r.matrix().transpose()));
        let mu = pose * nalgebra::Point3::from(self.mu);
        Self::from_center_shape(mu.coords, p).expect("rigid motions preserve definiteness")
    }

    /// `Q ↦ T Q Tᵀ` on the dual quadric itself, then re-extracted.
    pub fn transform_dual(&self, pose: &Isometry3<f64>) -> Result<Ellipsoid> {
        let t = pose.to_homogeneous();
        Self::from_dual(&(t * self.q * t.transpose()))
    }
}

fn symmetric_part(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

/// Centre and shape of a dual quadric given up to scale.
pub fn extract_center_shape(q: &Matrix4<f64>) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateQuadric("non-finite entries".into()));
    }
    let q33 = q[(3, 3)];
    let scale = q.amax();
    if q33 == 0.0 || q33.abs() <= scale * 1e-14 {
        return Err(Error::DegenerateQuadric("Q[3][3] is zero".into()));
    }
    let asym = (q - q.transpose()).amax();
    if asym > scale * 1e-9 {
        return Err(Error::DegenerateQuadric(format!("asymmetric by {asym:e}")));
    }
    let q = (q + q.transpose()) * (-0.5 / q33);
    let mu: Vector3<f64> = -q.fixed_view::<3, 1>(0, 3).into_owned();
    let p = q.fixed_view::<3, 3>(0, 0) + mu * mu.transpose();
    if p.cholesky().is_none() {
        return Err(Error::DegenerateQuadric(
            "shape matrix is not positive-definite".into(),
        ));
    }
    Ok((mu, p))
}

/// `(mu_a - mu_b)ᵀ (P_a + P_b)⁻¹ (mu_a - mu_b)`.
pub fn ellipsoid_distance(a: &Ellipsoid, b: &Ellipsoid) -> Result<f64> {
    let d = a.mu - b.mu;
    let chol = (a.p + b.p)
        .cholesky()
        .ok_or_else(|| Error::DegenerateQuadric("P_a + P_b is singular".into()))?;
    Ok(d.dot(&chol.solve(&d)).max(0.0))
}

/// Rectified pinhole stereo pair. The right camera sits `baseline` metres
/// along the left camera's x axis; both share intrinsics.
#[derive(Clone, Copy, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
pub struct StereoCamera {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub baseline: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for StereoCamera {
    fn default() -> Self {
        Self {
            focal: 720.0,
            cx: 620.0,
            cy: 188.0,
            baseline: 0.54,
            width: 1240.0,
            height: 376.0,
        }
    }
}

/// Axis-aligned image box, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub half_width: f64,
    pub half_height: f64,
}

impl StereoCamera {
    /// Whether a pixel lies inside the image.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        (0.0..self.width).contains(&u) && (0.0..self.height).contains(&v)
    }

    /// The left/right boxes of an ellipsoid given in the left camera frame:
    /// the centre projects through each camera and the half-sizes are the
    /// projected x/y standard extents at the centre's depth. `None` if the
    /// centre is not in front of the camera.
    pub fn stereo_boxes(&self, e: &Ellipsoid) -> Option<(BoundingBox, BoundingBox)> {
        let mu = e.center();
        let z = mu.z;
        if !(z > 0.0) {
            return None;
        }
        let half_width = self.focal * e.shape()[(0, 0)].sqrt() / z;
        let half_height = self.focal * e.shape()[(1, 1)].sqrt() / z;
        let left = BoundingBox {
            cx: self.focal * mu.x / z + self.cx,
            cy: self.focal * mu.y / z + self.cy,
            half_width,
            half_height,
        };
        let right = BoundingBox {
            cx: self.focal * (mu.x - self.baseline) / z + self.cx,
            ..left
        };
        Some((left, right))
    }
}

/// Ellipsoid in the left camera frame from a pair of associated boxes.
///
/// Depth comes from the centre disparity; the x/y semi-axes are the box
/// half-sizes back-projected to that depth and the unobservable depth
/// semi-axis is their geometric mean.
pub fn triangulate_measurement(
    left: &BoundingBox,
    right: &BoundingBox,
    camera: &StereoCamera,
) -> Result<Ellipsoid> {
    let disparity = left.cx - right.cx;
    if !(disparity > MIN_DISPARITY) {
        return Err(Error::Untriangulatable { disparity });
    }
    let z = camera.focal * camera.baseline / disparity;
    let mu = Vector3::new(
        (left.cx - camera.cx) * z / camera.focal,
        (left.cy - camera.cy) * z / camera.focal,
        z,
    );
    let a = left.half_width.abs() * z / camera.focal;
    let b = left.half_height.abs() * z / camera.focal;
    Ellipsoid::from_center_radii(mu, Vector3::new(a, b, (a * b).sqrt()))
}
