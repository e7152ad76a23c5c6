//! Rigid motion parameters and camera poses.

use nalgebra::{Matrix3, Matrix3x4, Rotation3, Vector3};

/// Six-parameter frame-to-frame motion: Euler angles `r = (rx, ry, rz)` in
/// radians and translation `t` in meters. The rotation is `Rx(rx) * Ry(ry) * Rz(rz)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotionParams {
    pub r: [f64; 3],
    pub t: [f64; 3],
}

impl MotionParams {
    pub const ZERO: MotionParams = MotionParams {
        r: [0.0; 3],
        t: [0.0; 3],
    };

    pub fn new(r: [f64; 3], t: [f64; 3]) -> Self {
        MotionParams { r, t }
    }

    pub fn from_vector(v: &[f64; 6]) -> Self {
        MotionParams {
            r: [v[0], v[1], v[2]],
            t: [v[3], v[4], v[5]],
        }
    }

    pub fn to_vector(&self) -> [f64; 6] {
        [self.r[0], self.r[1], self.r[2], self.t[0], self.t[1], self.t[2]]
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.t.iter()).all(|v| v.is_finite())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_xyz(self.r[0], self.r[1], self.r[2])
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::from(self.t)
    }

    /// The rigid transform `X -> R X + t` described by these parameters.
    pub fn to_transform(&self) -> Pose {
        motion_to_transform(self)
    }
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Rx(rx) * Ry(ry) * Rz(rz)`.
pub fn rotation_xyz(rx: f64, ry: f64, rz: f64) -> Matrix3<f64> {
    rot_x(rx) * rot_y(ry) * rot_z(rz)
}

pub fn motion_to_transform(m: &MotionParams) -> Pose {
    Pose {
        rotation: m.rotation(),
        translation: m.translation(),
    }
}

/// Rigid transform `[R | t]`. Trajectory poses map camera coordinates to
/// world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    /// Builds a pose from 12 row-major values of a 3x4 matrix.
    pub fn from_row_major(v: &[f64; 12]) -> Self {
        let m = Matrix3x4::from_row_slice(v);
        Pose {
            rotation: m.fixed_view::<3, 3>(0, 0).into_owned(),
            translation: m.column(3).into_owned(),
        }
    }

    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
        ]
    }

    pub fn to_matrix(&self) -> Matrix3x4<f64> {
        Matrix3x4::from_row_slice(&self.to_row_major())
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Re-orthonormalises the rotation part, removing accumulated round-off.
    pub fn orthonormalized(&self) -> Pose {
        let rot = Rotation3::from_matrix(&self.rotation);
        Pose {
            rotation: rot.into_inner(),
            translation: self.translation,
        }
    }

    /// Largest absolute entry of `RᵀR - I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.orthonormality_error() <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Rotation angle in radians, from `acos((trace - 1) / 2)` with the
    /// argument clamped to `[-1, 1]`.
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

/// `parent * child`.
pub fn compose(parent: &Pose, child: &Pose) -> Pose {
    Pose {
        rotation: parent.rotation * child.rotation,
        translation: parent.rotation * child.translation + parent.translation,
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        compose(&self, &rhs)
    }
}

impl std::ops::Mul for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        compose(self, rhs)
    }
}
