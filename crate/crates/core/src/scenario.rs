//! Synthetic stereo scenarios: ellipsoid landmarks seen from a moving camera,
//! turned into association problems with known ground truth.
//!
//! The world frame has z up. A camera pose maps camera coordinates (x right,
//! y down, z forward) into the world.

use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ellipsoid_distance, triangulate_measurement, BoundingBox, Ellipsoid, StereoCamera,
};
use crate::par::{self, Execution};
use crate::problem::{AssignmentProblem, Target, DEFAULT_NULL_LOG_LIK};

pub const DEFAULT_GATE: f64 = 50.0;

/// Detector noise model.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of box-centre pixel noise.
    pub pixel_sigma: f64,
    /// Relative standard deviation of box half-sizes.
    pub size_sigma: f64,
    /// Probability that a visible landmark is detected.
    pub detection_prob: f64,
    /// Mean number of false detections per frame.
    pub clutter_rate: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            pixel_sigma: 1.0,
            size_sigma: 0.1,
            detection_prob: 0.9,
            clutter_rate: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkSpec {
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub category: String,
    /// Rotation about the world z axis, radians.
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Camera positions; the camera faces along each segment and frames are
    /// spread evenly by arc length.
    Waypoints(Vec<[f64; 3]>),
    /// Explicit 4x4 camera-to-world matrices, one per frame.
    Poses(Vec<[[f64; 4]; 4]>),
}

fn default_detection_range() -> f64 {
    18.0
}

fn default_landmark_range() -> f64 {
    30.0
}

fn default_null() -> f64 {
    DEFAULT_NULL_LOG_LIK
}

fn default_gate() -> f64 {
    DEFAULT_GATE
}

/// On-disk scenario description.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub camera: StereoCamera,
    #[serde(default)]
    pub noise: NoiseModel,
    pub landmarks: Vec<LandmarkSpec>,
    pub trajectory: TrajectorySpec,
    /// Frame count; for explicit poses, defaults to one frame per pose.
    #[serde(default)]
    pub frames: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Landmarks farther than this (metres along the optical axis) are not detected.
    #[serde(default = "default_detection_range")]
    pub detection_range: f64,
    /// Map landmarks within this distance of the camera form the prior set.
    #[serde(default = "default_landmark_range")]
    pub landmark_range: f64,
    #[serde(default = "default_null")]
    pub null_log_lik: f64,
    #[serde(default = "default_gate")]
    pub gate: f64,
}

impl ScenarioConfig {
    /// Parses JSON, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::config(field, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// A gently curving street lined with parked cars, signs, trees and the
    /// odd pedestrian, laid out in blocks that range from empty to packed.
    /// Some empty blocks have a car park set back from the road, in the map
    /// but mostly outside the camera's field of view.
    pub fn demo(frames: usize, seed: u64) -> Self {
        let step = 1.5;
        let length = frames as f64 * step + 120.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed0f5ce7e);
        let mut landmarks = Vec::new();
        let car = |rng: &mut ChaCha8Rng, x: f64, y: f64, yaw: f64| LandmarkSpec {
            center: [x, y, 0.75],
            radii: [
                rng.random_range(2.0..2.4),
                rng.random_range(0.85..0.95),
                rng.random_range(0.7..0.8),
            ],
            category: "car".into(),
            yaw: yaw + rng.random_range(-0.08..0.08),
        };
        // next free kerb and verge positions, per side
        let mut kerb = [-30.0f64; 2];
        let mut verge = [-30.0f64; 2];
        let mut block_start = -30.0;
        while block_start < length {
            let block_end = block_start + rng.random_range(50.0..140.0);
            // 0 = empty, 3 = packed
            let density = rng.random_range(0..4usize);
            for (s, side) in [-1.0, 1.0].into_iter().enumerate() {
                let gap = [f64::INFINITY, 22.0, 13.0, 7.5][density];
                kerb[s] = kerb[s].max(block_start + rng.random_range(0.0..7.5));
                while kerb[s] < block_end {
                    let y = side * rng.random_range(4.2..5.0);
                    landmarks.push(car(&mut rng, kerb[s], y, 0.0));
                    kerb[s] += gap + rng.random_range(0.0..3.0);
                }
                kerb[s] = kerb[s].min(block_end + 7.5);
                let gap = if density == 0 { 45.0 } else { 14.0 };
                verge[s] = verge[s].max(block_start + rng.random_range(0.0..9.0));
                while verge[s] < block_end {
                    let (category, radii, z) = if rng.random_bool(0.5) {
                        ("sign", [0.35, 0.35, 1.2], 1.8)
                    } else {
                        ("tree", [1.2, 1.2, 2.5], 3.0)
                    };
                    landmarks.push(LandmarkSpec {
                        center: [verge[s], side * rng.random_range(6.3..7.2), z],
                        radii,
                        category: category.into(),
                        yaw: 0.0,
                    });
                    verge[s] += gap + rng.random_range(0.0..8.0);
                }
                verge[s] = verge[s].min(block_end + 9.0);
                if rng.random_bool(0.4) {
                    landmarks.push(LandmarkSpec {
                        center: [
                            rng.random_range(block_start..block_end),
                            side * rng.random_range(5.8..8.0),
                            0.9,
                        ],
                        radii: [0.3, 0.3, 0.9],
                        category: "person".into(),
                        yaw: 0.0,
                    });
                }
            }
            if density == 0 && rng.random_bool(0.7) {
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let lot_len = rng.random_range(15.0..27.0);
                let lot_start = rng.random_range(block_start..block_end - lot_len);
                for row in 0..2 {
                    let mut x = lot_start;
                    while x < lot_start + lot_len {
                        if rng.random_bool(0.85) {
                            let y = side * (16.0 + 6.0 * row as f64);
                            landmarks.push(car(&mut rng, x, y, std::f64::consts::FRAC_PI_2));
                        }
                        x += 3.0;
                    }
                }
            }
            block_start = block_end;
        }
        let y = |x: f64| 0.8 * (x / 70.0).sin();
        let waypoints = (0..=((frames as f64 * step) / 10.0).ceil() as usize + 1)
            .map(|i| {
                let x = i as f64 * 10.0;
                [x, y(x), 1.65]
            })
            .collect();
        Self {
            camera: StereoCamera::default(),
            noise: NoiseModel::default(),
            landmarks,
            trajectory: TrajectorySpec::Waypoints(waypoints),
            frames: Some(frames),
            seed,
            detection_range: default_detection_range(),
            landmark_range: default_landmark_range(),
            null_log_lik: DEFAULT_NULL_LOG_LIK,
            gate: DEFAULT_GATE,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Landmark {
    pub ellipsoid: Ellipsoid,
    pub category: String,
}

/// A map landmark as seen from one frame, tagged with its scenario index.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior {
    pub landmark: usize,
    pub ellipsoid: Ellipsoid,
    pub category: String,
}

/// A validated scenario with one camera pose per frame.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub landmarks: Vec<Landmark>,
    /// Camera-to-world pose of each frame.
    pub trajectory: Vec<Isometry3<f64>>,
    pub camera: StereoCamera,
    pub noise: NoiseModel,
    pub detection_range: f64,
    pub landmark_range: f64,
    pub seed: u64,
}

/// Camera-to-world rotation for a camera level with the ground facing `forward`.
fn level_camera(forward: Vector3<f64>) -> UnitQuaternion<f64> {
    let f = Vector3::new(forward.x, forward.y, 0.0).normalize();
    let down = Vector3::new(0.0, 0.0, -1.0);
    let right = down.cross(&f);
    let m = Matrix3::from_columns(&[right, down, f]);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

fn waypoint_poses(points: &[[f64; 3]], frames: usize) -> Result<Vec<Isometry3<f64>>> {
    let pts: Vec<Vector3<f64>> = points.iter().map(|p| Vector3::from(*p)).collect();
    if pts.len() < 2 {
        return Err(Error::config(
            "trajectory.waypoints",
            "needs at least two waypoints",
        ));
    }
    let seg: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    if seg.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::config(
            "trajectory.waypoints",
            "consecutive waypoints must differ",
        ));
    }
    if pts.windows(2).any(|w| (w[1] - w[0]).xy().norm() == 0.0) {
        return Err(Error::config(
            "trajectory.waypoints",
            "segments must not be vertical",
        ));
    }
    let total: f64 = seg.iter().sum();
    let mut poses = Vec::with_capacity(frames);
    let mut i = 0;
    let mut start = 0.0;
    for f in 0..frames {
        let s = if frames > 1 {
            total * f as f64 / (frames - 1) as f64
        } else {
            0.0
        };
        while i + 1 < seg.len() && s > start + seg[i] {
            start += seg[i];
            i += 1;
        }
        let dir = pts[i + 1] - pts[i];
        let pos = pts[i] + dir * ((s - start) / seg[i]).clamp(0.0, 1.0);
        poses.push(Isometry3::from_parts(
            Translation3::from(pos),
            level_camera(dir),
        ));
    }
    Ok(poses)
}

fn matrix_pose(m: &[[f64; 4]; 4], idx: usize) -> Result<Isometry3<f64>> {
    let field = || format!("trajectory.poses[{idx}]");
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::config(field(), "non-finite entry"));
    }
    let r = Matrix3::from_fn(|i, j| m[i][j]);
    if (r.transpose() * r - Matrix3::identity()).amax() > 1e-6 || r.determinant() < 0.0 {
        return Err(Error::config(field(), "rotation block is not a rotation"));
    }
    if m[3] != [0.0, 0.0, 0.0, 1.0] {
        return Err(Error::config(field(), "last row must be 0 0 0 1"));
    }
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix(&r));
    Ok(Isometry3::from_parts(
        Translation3::new(m[0][3], m[1][3], m[2][3]),
        rot,
    ))
}

impl Scenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let cam = &cfg.camera;
        if !(cam.baseline > 0.0) {
            return Err(Error::config("camera.baseline", "must be positive"));
        }
        if !(cam.focal > 0.0) {
            return Err(Error::config("camera.focal", "must be positive"));
        }
        if !(cam.width > 0.0 && cam.height > 0.0) {
            return Err(Error::config("camera.width", "image size must be positive"));
        }
        let n = &cfg.noise;
        if !(n.detection_prob > 0.0 && n.detection_prob <= 1.0) {
            return Err(Error::config("noise.detection_prob", "must lie in (0, 1]"));
        }
        if !(n.pixel_sigma >= 0.0) || !(n.size_sigma >= 0.0) {
            return Err(Error::config(
                "noise.pixel_sigma",
                "noise levels must be non-negative",
            ));
        }
        if !(n.clutter_rate >= 0.0) || !n.clutter_rate.is_finite() {
            return Err(Error::config("noise.clutter_rate", "must be non-negative"));
        }
        if !(cfg.detection_range > 0.0) || !(cfg.landmark_range > 0.0) {
            return Err(Error::config("detection_range", "ranges must be positive"));
        }
        if !cfg.null_log_lik.is_finite() {
            return Err(Error::config("null_log_lik", "must be finite"));
        }
        if !(cfg.gate > 0.0) {
            return Err(Error::config("gate", "must be positive"));
        }
        let landmarks = cfg
            .landmarks
            .iter()
            .enumerate()
            .map(|(i, l)| {
                if l.radii.iter().any(|r| !(*r > 0.0)) {
                    return Err(Error::config(
                        format!("landmarks[{i}].radii"),
                        "must be positive",
                    ));
                }
                let local = Ellipsoid::from_center_radii(Vector3::zeros(), Vector3::from(l.radii))
                    .map_err(|e| Error::config(format!("landmarks[{i}]"), e.to_string()))?;
                let pose = Isometry3::new(Vector3::from(l.center), Vector3::z() * l.yaw);
                Ok(Landmark {
                    ellipsoid: local.transform(&pose),
                    category: l.category.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let trajectory = match &cfg.trajectory {
            TrajectorySpec::Waypoints(w) => {
                let frames = cfg
                    .frames
                    .ok_or_else(|| Error::config("frames", "required with waypoints"))?;
                waypoint_poses(w, frames)?
            }
            TrajectorySpec::Poses(p) => {
                let frames = cfg.frames.unwrap_or(p.len());
                if frames > p.len() {
                    return Err(Error::config("frames", "more frames than poses"));
                }
                p[..frames]
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix_pose(m, i))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self {
            landmarks,
            trajectory,
            camera: cfg.camera,
            noise: cfg.noise,
            detection_range: cfg.detection_range,
            landmark_range: cfg.landmark_range,
            seed: cfg.seed,
        })
    }

    pub fn frames(&self) -> usize {
        self.trajectory.len()
    }

    /// Map landmarks within `landmark_range` of the camera, in the world frame.
    pub fn priors(&self, frame: usize) -> Vec<Prior> {
        let pos = self.trajectory[frame].translation.vector;
        self.landmarks
            .iter()
            .enumerate()
            .filter(|(_, l)| (l.ellipsoid.center() - pos).norm() <= self.landmark_range)
            .map(|(i, l)| Prior {
                landmark: i,
                ellipsoid: l.ellipsoid.clone(),
                category: l.category.clone(),
            })
            .collect()
    }
}

/// Per-frame seed: the frame index hashed into the scenario seed.
pub fn frame_seed(seed: u64, frame: usize) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(frame as u64))
}

struct Detection {
    ellipsoid: Ellipsoid,
    category: String,
    source: Option<usize>,
}

fn noisy_box(b: BoundingBox, dx: f64, dy: f64, sx: f64, sy: f64) -> BoundingBox {
    BoundingBox {
        cx: b.cx + dx,
        cy: b.cy + dy,
        half_width: b.half_width * sx,
        half_height: b.half_height * sy,
    }
}

fn simulate_detections(s: &Scenario, frame: usize, rng: &mut ChaCha8Rng) -> Vec<Detection> {
    let cam = &s.camera;
    let cam_from_world = s.trajectory[frame].inverse();
    let pixel = Normal::new(0.0, s.noise.pixel_sigma).expect("validated sigma");
    let size = Normal::new(0.0, s.noise.size_sigma).expect("validated sigma");
    let mut out = Vec::new();
    for (i, l) in s.landmarks.iter().enumerate() {
        let e = l.ellipsoid.transform(&cam_from_world);
        let z = e.center().z;
        if !(z > 0.0 && z <= s.detection_range) {
            continue;
        }
        let Some((left, right)) = cam.stereo_boxes(&e) else {
            continue;
        };
        if !cam.contains(left.cx, left.cy) || !cam.contains(right.cx, right.cy) {
            continue;
        }
        // Every visible landmark consumes the same draws, detected or not.
        let detected = rng.random::<f64>() < s.noise.detection_prob;
        let (dx, dy, dr) = (pixel.sample(rng), pixel.sample(rng), pixel.sample(rng));
        let sx = (1.0 + size.sample(rng)).max(0.2);
        let sy = (1.0 + size.sample(rng)).max(0.2);
        if !detected {
            continue;
        }
        let left = noisy_box(left, dx, dy, sx, sy);
        let right = BoundingBox {
            cx: right.cx + dr,
            ..left
        };
        if let Ok(ellipsoid) = triangulate_measurement(&left, &right, cam) {
            out.push(Detection {
                ellipsoid,
                category: l.category.clone(),
                source: Some(i),
            });
        }
    }
    if s.noise.clutter_rate > 0.0 && !s.landmarks.is_empty() {
        let n = Poisson::new(s.noise.clutter_rate)
            .expect("validated rate")
            .sample(rng) as usize;
        for _ in 0..n {
            let template = &s.landmarks[rng.random_range(0..s.landmarks.len())];
            let z = rng.random_range(3.0..s.detection_range.max(3.5));
            let u = rng.random_range(0.0..cam.width);
            let v = rng.random_range(0.0..cam.height);
            let shape = template.ellipsoid.shape();
            let left = BoundingBox {
                cx: u,
                cy: v,
                half_width: cam.focal * shape[(0, 0)].sqrt() / z,
                half_height: cam.focal * shape[(2, 2)].sqrt() / z,
            };
            let right = BoundingBox {
                cx: u - cam.focal * cam.baseline / z,
                ..left
            };
            if let Ok(ellipsoid) = triangulate_measurement(&left, &right, cam) {
                out.push(Detection {
                    ellipsoid,
                    category: template.category.clone(),
                    source: None,
                });
            }
        }
    }
    out.shuffle(rng);
    out
}

/// Simulates one frame and scores its detections against `priors`.
///
/// Pairs of different category or with distance above `gate` are infeasible;
/// otherwise the log-likelihood is minus half the ellipsoid distance. The
/// true target of a detection is its source landmark when that landmark is
/// among the priors and the pair is feasible, and null otherwise.
pub fn build_problem(
    s: &Scenario,
    frame: usize,
    priors: &[Prior],
    null_log_lik: f64,
    gate: f64,
    seed: u64,
) -> Result<AssignmentProblem> {
    if frame >= s.frames() {
        return Err(Error::Usage(format!(
            "frame {frame} outside a trajectory of {} frames",
            s.frames()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let detections = simulate_detections(s, frame, &mut rng);
    let cam_from_world = s.trajectory[frame].inverse();
    let local: Vec<Ellipsoid> = priors
        .iter()
        .map(|p| p.ellipsoid.transform(&cam_from_world))
        .collect();
    let (n, m) = (detections.len(), priors.len());
    let mut log_lik = vec![f64::NEG_INFINITY; n * m];
    let mut truth = Vec::with_capacity(n);
    for (k, d) in detections.iter().enumerate() {
        for (j, p) in priors.iter().enumerate() {
            if p.category != d.category {
                continue;
            }
            let dist = ellipsoid_distance(&d.ellipsoid, &local[j])?;
            if dist <= gate {
                log_lik[k * m + j] = -0.5 * dist;
            }
        }
        let target = d
            .source
            .and_then(|src| priors.iter().position(|p| p.landmark == src))
            .filter(|&j| log_lik[k * m + j].is_finite())
            .map_or(Target::Null, Target::Landmark);
        truth.push(target);
    }
    let pos = Point3::from(s.trajectory[frame].translation.vector);
    AssignmentProblem::with_uniform_null(n, m, log_lik, null_log_lik)?
        .with_truth(truth)
        .map(|p| {
            p.with_meta("id", frame)
                .with_meta("frame", frame)
                .with_meta("camera_xy", vec![round3(pos.x), round3(pos.y)])
        })
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// All non-empty problems of a scenario config, in frame order.
pub fn generate_corpus(cfg: &ScenarioConfig, exec: Execution) -> Result<Vec<AssignmentProblem>> {
    let s = Scenario::from_config(cfg)?;
    let problems = par::map_range(exec, s.frames(), |f| {
        build_problem(
            &s,
            f,
            &s.priors(f),
            cfg.null_log_lik,
            cfg.gate,
            frame_seed(cfg.seed, f),
        )
    });
    let mut out = Vec::new();
    for p in problems {
        let p = p?;
        if !p.is_empty() {
            out.push(p);
        }
    }
    Ok(out)
}
