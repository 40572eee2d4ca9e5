//! Articulated lower body seen by a binocular pinhole observer.
//!
//! State: 10 joint angles in radians, ordered
//!
//! | index | joint                          |
//! |-------|--------------------------------|
//! | 0, 1  | pelvis about world Z, then Y   |
//! | 2..=4 | left hip, intrinsic Z-X-Y      |
//! | 5..=7 | right hip, intrinsic Z-X-Y     |
//! | 8     | left knee hinge (local X)      |
//! | 9     | right knee hinge (local X)     |
//!
//! Coordinates are camera-centered with the optical axes along +Y and Z up.
//! The pelvis is centered on the spine anchor; the hips sit half a pelvis
//! width to either side, and thigh and shin hang along -Z at rest.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{require_positive, ModelError};
use crate::filter::StateSpaceModel;
use crate::transforms::isotropic_step_into;

pub const ANGLE_COUNT: usize = 10;
pub const MARKER_COUNT: usize = 6;
const CAMERAS: usize = 2;

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

/// Marker order in [`BodyModel::forward_kinematics`] output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    LeftHip = 0,
    RightHip = 1,
    LeftKnee = 2,
    RightKnee = 3,
    LeftAnkle = 4,
    RightAnkle = 5,
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn rot_x(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn rot_y(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn rot_z(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

const X: Vec3 = [1.0, 0.0, 0.0];
const Y: Vec3 = [0.0, 1.0, 0.0];
const Z: Vec3 = [0.0, 0.0, 1.0];
const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Limb lengths and viewing geometry, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyGeometry {
    pub pelvis_width: f64,
    pub thigh_length: f64,
    pub shin_length: f64,
    /// Depth of the spine anchor in front of the cameras.
    pub camera_distance: f64,
    /// Separation of the two camera centers along X.
    pub camera_baseline: f64,
    /// Height of both cameras and of the spine anchor.
    pub camera_height: f64,
}

impl Default for BodyGeometry {
    fn default() -> Self {
        Self {
            pelvis_width: 0.30,
            thigh_length: 0.45,
            shin_length: 0.45,
            camera_distance: 2.5,
            camera_baseline: 0.06,
            camera_height: 1.0,
        }
    }
}

impl BodyGeometry {
    pub fn spine_anchor(&self) -> Vec3 {
        [0.0, self.camera_distance, self.camera_height]
    }

    pub fn cameras(&self) -> [Vec3; CAMERAS] {
        let half = 0.5 * self.camera_baseline;
        [[-half, 0.0, self.camera_height], [half, 0.0, self.camera_height]]
    }
}

/// Two cameras times six markers of 2-D image coordinates, camera-major.
pub type BodyFrame = [[f64; 2]; CAMERAS * MARKER_COUNT];

#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    pub geometry: BodyGeometry,
    /// Image-plane noise standard deviation.
    pub sigma_obs: f64,
    /// Filter random-walk standard deviation per angle.
    pub sigma_a: f64,
    /// Simulated ground-truth random-walk standard deviation per angle.
    pub sigma_truth: f64,
    pub initial_angles: [f64; ANGLE_COUNT],
}

impl Default for BodyModel {
    fn default() -> Self {
        Self {
            geometry: BodyGeometry::default(),
            sigma_obs: 0.002,
            sigma_a: 0.1,
            sigma_truth: 0.05,
            initial_angles: [0.0; ANGLE_COUNT],
        }
    }
}

/// Joint frames produced while walking the chain.
struct Pose {
    pelvis_z: Mat3,
    pelvis: Mat3,
    hip_z: [Mat3; 2],
    hip_zx: [Mat3; 2],
    hip: [Mat3; 2],
    markers: [Vec3; MARKER_COUNT],
}

/// Perspective projection for a camera looking along +Y.
pub fn project(marker: [f64; 3], camera: [f64; 3]) -> Result<[f64; 2], ModelError> {
    let depth = marker[1] - camera[1];
    if depth == 0.0 {
        return Err(ModelError::ProjectionSingularity);
    }
    Ok([(marker[0] - camera[0]) / depth, (marker[2] - camera[2]) / depth])
}

impl BodyModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let g = &self.geometry;
        require_positive("pelvis_width", g.pelvis_width)?;
        require_positive("thigh_length", g.thigh_length)?;
        require_positive("shin_length", g.shin_length)?;
        require_positive("camera_distance", g.camera_distance)?;
        require_positive("camera_baseline", g.camera_baseline)?;
        require_positive("sigma_obs", self.sigma_obs)?;
        require_positive("sigma_a", self.sigma_a)?;
        if self.sigma_truth.is_nan() || self.sigma_truth < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "sigma_truth",
                reason: "must be nonnegative".into(),
            });
        }
        Ok(())
    }

    fn pose(&self, angles: &[f64], anchor: Vec3) -> Pose {
        assert_eq!(angles.len(), ANGLE_COUNT);
        let g = &self.geometry;
        let pelvis_z = rot_z(angles[0]);
        let pelvis = mat_mul(&pelvis_z, &rot_y(angles[1]));
        let half = 0.5 * g.pelvis_width;
        let thigh = [0.0, 0.0, -g.thigh_length];
        let shin = [0.0, 0.0, -g.shin_length];
        let mut markers = [[0.0; 3]; MARKER_COUNT];
        let mut hip_z = [IDENTITY; 2];
        let mut hip_zx = [IDENTITY; 2];
        let mut hip = [IDENTITY; 2];
        for side in 0..2 {
            let offset = if side == 0 { half } else { -half };
            let base = 2 + 3 * side;
            hip_z[side] = mat_mul(&pelvis, &rot_z(angles[base]));
            hip_zx[side] = mat_mul(&hip_z[side], &rot_x(angles[base + 1]));
            hip[side] = mat_mul(&hip_zx[side], &rot_y(angles[base + 2]));
            let knee_frame = mat_mul(&hip[side], &rot_x(angles[8 + side]));
            let hip_pos = add(anchor, mat_vec(&pelvis, [offset, 0.0, 0.0]));
            let knee_pos = add(hip_pos, mat_vec(&hip[side], thigh));
            let ankle_pos = add(knee_pos, mat_vec(&knee_frame, shin));
            markers[side] = hip_pos;
            markers[2 + side] = knee_pos;
            markers[4 + side] = ankle_pos;
        }
        Pose {
            pelvis_z,
            pelvis,
            hip_z,
            hip_zx,
            hip,
            markers,
        }
    }

    /// Marker positions in [`Marker`] order.
    pub fn forward_kinematics(&self, angles: &[f64]) -> [[f64; 3]; MARKER_COUNT] {
        self.pose(angles, self.geometry.spine_anchor()).markers
    }

    /// Same chain hung from an arbitrary spine anchor.
    pub fn forward_kinematics_from(&self, angles: &[f64], anchor: [f64; 3]) -> [[f64; 3]; MARKER_COUNT] {
        self.pose(angles, anchor).markers
    }

    /// Noise-free observations for `angles`.
    pub fn predict(&self, angles: &[f64]) -> Result<BodyFrame, ModelError> {
        let markers = self.forward_kinematics(angles);
        let mut out = [[0.0; 2]; CAMERAS * MARKER_COUNT];
        for (c, cam) in self.geometry.cameras().iter().enumerate() {
            for (j, m) in markers.iter().enumerate() {
                out[c * MARKER_COUNT + j] = project(*m, *cam)?;
            }
        }
        Ok(out)
    }

    /// `-sum ||d - d_hat(angles)||^2 / (2 sigma^2)` over both cameras.
    pub fn log_likelihood(&self, frame: &BodyFrame, angles: &[f64]) -> Result<f64, ModelError> {
        let predicted = self.predict(angles)?;
        let sse: f64 = frame
            .iter()
            .zip(&predicted)
            .map(|(d, p)| (d[0] - p[0]).powi(2) + (d[1] - p[1]).powi(2))
            .sum();
        Ok(-sse / (2.0 * self.sigma_obs * self.sigma_obs))
    }

    /// Log-likelihood and its gradient with respect to the angles.
    ///
    /// Each joint angle rotates its descendants about a world axis through
    /// the joint pivot, so `dp/dtheta = axis x (p - pivot)`.
    pub fn log_likelihood_gradient(
        &self,
        frame: &BodyFrame,
        angles: &[f64],
    ) -> Result<(f64, [f64; ANGLE_COUNT]), ModelError> {
        let pose = self.pose(angles, self.geometry.spine_anchor());
        let m = &pose.markers;
        let anchor = self.geometry.spine_anchor();

        // (axis, pivot, affected markers) for every angle.
        let mut joints: Vec<(Vec3, Vec3, Vec<usize>)> = Vec::with_capacity(ANGLE_COUNT);
        joints.push((Z, anchor, (0..MARKER_COUNT).collect()));
        joints.push((mat_vec(&pose.pelvis_z, Y), anchor, (0..MARKER_COUNT).collect()));
        for (side, &hip) in m.iter().take(2).enumerate() {
            let below = vec![2 + side, 4 + side];
            joints.push((mat_vec(&pose.pelvis, Z), hip, below.clone()));
            joints.push((mat_vec(&pose.hip_z[side], X), hip, below.clone()));
            joints.push((mat_vec(&pose.hip_zx[side], Y), hip, below));
        }
        for side in 0..2 {
            joints.push((mat_vec(&pose.hip[side], X), m[2 + side], vec![4 + side]));
        }

        let inv_var = 1.0 / (self.sigma_obs * self.sigma_obs);
        let mut value = 0.0;
        // dL/dp for each marker, accumulated over cameras.
        let mut marker_grad = [[0.0; 3]; MARKER_COUNT];
        for (c, cam) in self.geometry.cameras().iter().enumerate() {
            for (j, p) in m.iter().enumerate() {
                let v = sub(*p, *cam);
                if v[1] == 0.0 {
                    return Err(ModelError::ProjectionSingularity);
                }
                let inv_depth = 1.0 / v[1];
                let pred = [v[0] * inv_depth, v[2] * inv_depth];
                let d = frame[c * MARKER_COUNT + j];
                let r = [d[0] - pred[0], d[1] - pred[1]];
                value -= 0.5 * inv_var * (r[0] * r[0] + r[1] * r[1]);
                // dL/dpred = r / sigma^2; chain through the projection Jacobian.
                let g = [r[0] * inv_var, r[1] * inv_var];
                marker_grad[j][0] += g[0] * inv_depth;
                marker_grad[j][1] -= (g[0] * v[0] + g[1] * v[2]) * inv_depth * inv_depth;
                marker_grad[j][2] += g[1] * inv_depth;
            }
        }

        let mut grad = [0.0; ANGLE_COUNT];
        for (k, (axis, pivot, affected)) in joints.iter().enumerate() {
            grad[k] = affected
                .iter()
                .map(|&j| {
                    let dp = cross(*axis, sub(m[j], *pivot));
                    (0..3).map(|i| marker_grad[j][i] * dp[i]).sum::<f64>()
                })
                .sum();
        }
        Ok((value, grad))
    }
}

impl StateSpaceModel for BodyModel {
    type Observation = BodyFrame;

    fn state_dim(&self) -> usize {
        ANGLE_COUNT
    }

    fn initial_state(&self) -> Vec<f64> {
        self.initial_angles.to_vec()
    }

    fn transform(&self, u: &[f64], prev: &[f64], out: &mut [f64]) {
        isotropic_step_into(u, prev, self.sigma_a, out);
    }

    fn log_likelihood(&self, y: &BodyFrame, x: &[f64]) -> f64 {
        BodyModel::log_likelihood(self, y, x).unwrap_or(f64::NEG_INFINITY)
    }

    fn simulate_transition(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        x.iter()
            .map(|&a| {
                let z: f64 = StandardNormal.sample(rng);
                a + self.sigma_truth * z
            })
            .collect()
    }

    fn simulate_observation(&self, x: &[f64], rng: &mut dyn RngCore) -> BodyFrame {
        let mut frame = self
            .predict(x)
            .expect("simulated pose stays in front of the cameras");
        for d in frame.iter_mut() {
            for c in d.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *c += self.sigma_obs * z;
            }
        }
        frame
    }

    fn accepts_truth(&self, x: &[f64]) -> bool {
        self.predict(x).is_ok()
    }
}
