//! Synthetic survey flights: ground-truth humans and clutter projected through
//! both cameras, with a configurable detector noise model.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::{BoundingBox, Detection, Spectrum};
use crate::evaluation::{Annotation, Posture};
use crate::fusion::{FusionError, RigExtrinsics};
use crate::geometry::{project, CameraIntrinsics, GeometryError, Pose, WorldPoint};
use crate::io::{CalibrationFile, HistogramEntry, SCHEMA_VERSION};
use crate::reid::{center_prior_mask, histogram_of, HistogramLayout, Patch, ReidError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Reid(#[from] ReidError),
}

/// Piecewise-linear ground track `(x, y)` walked at constant speed; holds the last waypoint afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundPath {
    pub points: Vec<[f64; 2]>,
    pub speed: f64,
}

/// Piecewise-linear camera trajectory `(x, y, z)` flown at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPath {
    pub points: Vec<[f64; 3]>,
    pub speed: f64,
}

impl GroundPath {
    pub fn stationary(p: [f64; 2]) -> Self {
        Self {
            points: vec![p],
            speed: 0.0,
        }
    }

    pub fn length(&self) -> f64 {
        path_length(&self.points)
    }

    pub fn at(&self, t: f64) -> [f64; 2] {
        path_at(&self.points, self.speed, t)
    }
}

impl FlightPath {
    pub fn length(&self) -> f64 {
        path_length(&self.points)
    }

    pub fn at(&self, t: f64) -> [f64; 3] {
        path_at(&self.points, self.speed, t)
    }
}

fn path_length<const N: usize>(points: &[[f64; N]]) -> f64 {
    points.windows(2).map(|w| dist(&w[0], &w[1])).sum()
}

fn path_at<const N: usize>(points: &[[f64; N]], speed: f64, t: f64) -> [f64; N] {
    let mut remaining = (t * speed).max(0.0);
    for w in points.windows(2) {
        let seg = dist(&w[0], &w[1]);
        if remaining <= seg && seg > 0.0 {
            let f = remaining / seg;
            return std::array::from_fn(|i| w[0][i] + f * (w[1][i] - w[0][i]));
        }
        remaining -= seg;
    }
    *points.last().expect("validated non-empty")
}

fn dist<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSpec {
    pub id: u64,
    pub path: GroundPath,
    pub posture: Posture,
    pub color: [u8; 3],
    #[serde(default)]
    pub visible_from: f64,
    #[serde(default)]
    pub visible_until: Option<f64>,
}

impl HumanSpec {
    /// Body extent (along x, along y, height) in meters.
    pub fn dimensions(&self) -> [f64; 3] {
        match self.posture {
            Posture::Upright => [0.5, 0.35, 1.75],
            Posture::Sitting => [0.6, 0.8, 1.0],
            Posture::Lying => [1.8, 0.55, 0.3],
        }
    }

    pub fn present_at(&self, t: f64) -> bool {
        t >= self.visible_from && self.visible_until.is_none_or(|u| t <= u)
    }

    /// Body center at time `t`.
    pub fn position(&self, t: f64) -> WorldPoint {
        let [x, y] = self.path.at(t);
        WorldPoint::new(x, y, 0.5 * self.dimensions()[2])
    }
}

/// Static non-human object the detector fires on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub center: [f64; 2],
    pub size: [f64; 3],
    pub color: [u8; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Per-object, per-spectrum probability of a missed detection.
    pub miss_rate: f64,
    /// Mean number of random false positives per image and spectrum.
    pub fp_rate: f64,
    /// Standard deviation of the box-center jitter in pixels.
    pub jitter_px: f64,
    pub tp_score: [f64; 2],
    pub fp_score: [f64; 2],
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            miss_rate: 0.0,
            fp_rate: 0.0,
            jitter_px: 0.0,
            tp_score: [0.6, 1.0],
            fp_score: [0.3, 0.8],
        }
    }
}

impl NoiseModel {
    pub fn noisy() -> Self {
        Self {
            miss_rate: 0.5,
            fp_rate: 0.5,
            jitter_px: 1.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub frame_rate_hz: f64,
    pub camera: FlightPath,
    pub humans: Vec<HumanSpec>,
    #[serde(default)]
    pub clutter: Vec<ClutterSpec>,
    #[serde(default)]
    pub noise: NoiseModel,
    pub optical: CameraIntrinsics,
    pub thermal: CameraIntrinsics,
    pub t_thermal_optical: [[f64; 4]; 4],
    pub assumed_scene_depth: f64,
    /// Thermal capture delay relative to the optical shutter, seconds.
    #[serde(default)]
    pub thermal_delay: f64,
    #[serde(default = "default_background")]
    pub background: [u8; 3],
}

fn default_background() -> [u8; 3] {
    [70, 115, 55]
}

pub const RED: [u8; 3] = [205, 35, 30];
pub const BLUE: [u8; 3] = [35, 70, 200];
pub const YELLOW: [u8; 3] = [225, 200, 40];
pub const ORANGE: [u8; 3] = [240, 120, 20];
pub const MAGENTA: [u8; 3] = [190, 40, 170];
pub const WHITE: [u8; 3] = [235, 235, 235];
pub const CYAN: [u8; 3] = [40, 190, 210];

fn rig_matrix(baseline: f64, yaw_deg: f64) -> [[f64; 4]; 4] {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    [
        [c, -s, 0.0, -baseline],
        [s, c, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

impl ScenarioSpec {
    /// Nadir flight at 100 m with a 1600x1200 optical and 640x512 thermal camera of equal field of view.
    pub fn base(seed: u64) -> Self {
        Self {
            seed,
            frame_rate_hz: 4.0,
            camera: FlightPath {
                points: vec![[-40.0, 0.0, 100.0], [40.0, 0.0, 100.0]],
                speed: 20.0,
            },
            humans: Vec::new(),
            clutter: Vec::new(),
            noise: NoiseModel::default(),
            optical: CameraIntrinsics::pinhole(2790.0, 2790.0, 800.0, 600.0, 1600, 1200).expect("valid"),
            thermal: CameraIntrinsics::pinhole(1116.0, 1116.0, 320.0, 256.0, 640, 512).expect("valid"),
            t_thermal_optical: rig_matrix(0.08, 0.3),
            assumed_scene_depth: 100.0,
            thermal_delay: 0.01,
            background: default_background(),
        }
    }

    /// Straight survey leg over humans spaced 25 m apart, alternating sides of the track.
    pub fn survey(seed: u64, n_humans: usize) -> Self {
        let colors = [RED, BLUE, YELLOW, ORANGE, MAGENTA, WHITE, CYAN];
        let postures = [Posture::Upright, Posture::Lying, Posture::Sitting];
        let humans = (0..n_humans)
            .map(|i| {
                let x = 25.0 * i as f64;
                let y = if i % 2 == 0 { -8.0 } else { 9.0 };
                let walking = i % 3 == 0;
                HumanSpec {
                    id: i as u64 + 1,
                    path: if walking {
                        GroundPath {
                            points: vec![[x, y], [x + 30.0, y]],
                            speed: 0.8,
                        }
                    } else {
                        GroundPath::stationary([x, y])
                    },
                    posture: if walking { Posture::Upright } else { postures[i % 3] },
                    color: colors[i % colors.len()],
                    visible_from: 0.0,
                    visible_until: None,
                }
            })
            .collect();
        let end = 25.0 * n_humans.saturating_sub(1) as f64 + 40.0;
        Self {
            camera: FlightPath {
                points: vec![[-40.0, 0.0, 100.0], [end, 0.0, 100.0]],
                speed: 20.0,
            },
            humans,
            clutter: vec![
                ClutterSpec {
                    center: [12.0, 4.0],
                    size: [4.5, 1.8, 1.5],
                    color: [90, 90, 95],
                },
                ClutterSpec {
                    center: [-20.0, -12.0],
                    size: [2.5, 2.0, 0.8],
                    color: [120, 100, 80],
                },
            ],
            ..Self::base(seed)
        }
    }

    /// Flies out and back over a red human; a green human appears near it only after the turn.
    pub fn revisit(seed: u64) -> Self {
        Self {
            camera: FlightPath {
                points: vec![[-50.0, 0.0, 100.0], [230.0, 0.0, 100.0], [-50.0, 0.0, 100.0]],
                speed: 20.0,
            },
            humans: vec![
                HumanSpec {
                    id: 1,
                    path: GroundPath::stationary([0.0, 0.0]),
                    posture: Posture::Upright,
                    color: RED,
                    visible_from: 0.0,
                    visible_until: None,
                },
                HumanSpec {
                    id: 2,
                    path: GroundPath::stationary([20.0, 15.0]),
                    posture: Posture::Sitting,
                    color: [40, 170, 60],
                    visible_from: 14.0,
                    visible_until: None,
                },
            ],
            ..Self::base(seed)
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSpec(m.into()));
        if !(self.frame_rate_hz > 0.0) {
            return bad("frame_rate_hz must be positive");
        }
        if self.camera.points.is_empty() || !(self.camera.speed > 0.0) {
            return bad("camera path needs waypoints and a positive speed");
        }
        if self
            .humans
            .iter()
            .any(|h| h.path.points.is_empty() || h.path.speed < 0.0)
        {
            return bad("human paths need waypoints and a non-negative speed");
        }
        let n = &self.noise;
        for (name, v) in [("miss_rate", n.miss_rate), ("fp_rate", n.fp_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidSpec(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(n.jitter_px >= 0.0) {
            return bad("jitter_px must be >= 0");
        }
        for r in [n.tp_score, n.fp_score] {
            if !(0.0 <= r[0] && r[0] <= r[1] && r[1] <= 1.0) {
                return bad("score ranges must satisfy 0 <= lo <= hi <= 1");
            }
        }
        self.optical.validate()?;
        self.thermal.validate()?;
        self.rig()?;
        Ok(())
    }

    pub fn rig(&self) -> Result<RigExtrinsics, FusionError> {
        RigExtrinsics::from_matrix(self.t_thermal_optical, self.assumed_scene_depth)
    }

    pub fn calibration(&self) -> CalibrationFile {
        CalibrationFile {
            schema_version: SCHEMA_VERSION,
            optical: self.optical,
            thermal: self.thermal,
            t_thermal_optical: self.t_thermal_optical,
            assumed_scene_depth: self.assumed_scene_depth,
        }
    }

    pub fn frame_count(&self) -> usize {
        let duration = self.camera.length() / self.camera.speed;
        (duration * self.frame_rate_hz + 1e-9).floor() as usize + 1
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 / self.frame_rate_hz
    }

    pub fn pose_at(&self, k: usize) -> Pose {
        let t = self.frame_time(k);
        Pose::nadir(Vector3::from(self.camera.at(t)), t)
    }
}

/// Ground-truth position of one human at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub frame: u64,
    pub t: f64,
    pub human_id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub in_view: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub optical: Vec<Detection>,
    pub thermal: Vec<Detection>,
    pub annotations: Vec<Annotation>,
    pub poses: Vec<Pose>,
    pub calibration: CalibrationFile,
    pub histograms: Vec<HistogramEntry>,
    pub truth: Vec<TruthRecord>,
}

fn box_corners(center: [f64; 2], size: [f64; 3]) -> [WorldPoint; 8] {
    let [cx, cy] = center;
    let [sx, sy, sz] = size;
    std::array::from_fn(|i| {
        let x = cx + if i & 1 == 0 { -0.5 } else { 0.5 } * sx;
        let y = cy + if i & 2 == 0 { -0.5 } else { 0.5 } * sy;
        let z = if i & 4 == 0 { 0.0 } else { sz };
        WorldPoint::new(x, y, z)
    })
}

type Projector<'a> = dyn Fn(&WorldPoint) -> Result<(f64, f64), GeometryError> + 'a;

/// (optical box, thermal box, color, human id or None for clutter)
type SimObject = (Option<BoundingBox>, Option<BoundingBox>, [u8; 3], Option<u64>);

/// Image box of a 3-D box through a camera; `None` unless at least half of it is inside the image.
fn image_box(corners: &[WorldPoint; 8], to_pixel: &Projector, intr: &CameraIntrinsics) -> Option<BoundingBox> {
    let pts: Vec<(f64, f64)> = corners.iter().map(to_pixel).collect::<Result<_, _>>().ok()?;
    let hull = BoundingBox::hull(pts)?;
    let clamped = hull.clamp_to(intr.width as f64, intr.height as f64)?;
    (clamped.area() >= 0.5 * hull.area()).then_some(clamped)
}

struct Visible {
    bbox: BoundingBox,
    color: [u8; 3],
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn jittered(rng: &mut ChaCha8Rng, b: &BoundingBox, sigma: f64, intr: &CameraIntrinsics) -> Option<BoundingBox> {
    let moved = if sigma > 0.0 {
        let n = Normal::new(0.0, sigma).expect("sigma >= 0");
        b.translate(n.sample(rng), n.sample(rng))
    } else {
        *b
    };
    moved.clamp_to(intr.width as f64, intr.height as f64)
}

fn random_box(rng: &mut ChaCha8Rng, intr: &CameraIntrinsics, scale: f64) -> BoundingBox {
    let w = rng.random_range(8.0..30.0) * scale;
    let h = rng.random_range(8.0..30.0) * scale;
    let x = rng.random_range(0.0..(intr.width as f64 - w));
    let y = rng.random_range(0.0..(intr.height as f64 - h));
    BoundingBox::new(x, y, x + w, y + h)
}

/// Renders the optical image content under `bbox` and returns its masked histogram.
fn render_histogram(
    rng: &mut ChaCha8Rng,
    bbox: &BoundingBox,
    objects: &[Visible],
    background: [u8; 3],
) -> Result<crate::reid::ColorHistogram, SimError> {
    let w = (bbox.width().round() as usize).max(4);
    let h = (bbox.height().round() as usize).max(4);
    let mut pixels = Vec::with_capacity(w * h);
    for py in 0..h {
        for px in 0..w {
            let u = bbox.x_min + (px as f64 + 0.5) * bbox.width() / w as f64;
            let v = bbox.y_min + (py as f64 + 0.5) * bbox.height() / h as f64;
            let base = objects
                .iter()
                .rev()
                .find(|o| u >= o.bbox.x_min && u < o.bbox.x_max && v >= o.bbox.y_min && v < o.bbox.y_max)
                .map_or(background, |o| o.color);
            pixels.push(base.map(|c| (c as i32 + rng.random_range(-12..=12)).clamp(0, 255) as u8));
        }
    }
    let patch = Patch::new(w, h, pixels)?;
    let mask = center_prior_mask(w, h, 0.8);
    Ok(histogram_of(&patch, Some(&mask), HistogramLayout::default())?)
}

pub fn simulate(spec: &ScenarioSpec) -> Result<SimOutput, SimError> {
    spec.validate()?;
    let rig = spec.rig()?;
    let noise = spec.noise;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let thermal_scale = spec.thermal.fx / spec.optical.fx;
    let fp_count = (noise.fp_rate > 0.0).then(|| Poisson::new(noise.fp_rate).expect("positive rate"));

    let mut out = SimOutput {
        optical: Vec::new(),
        thermal: Vec::new(),
        annotations: Vec::new(),
        poses: Vec::new(),
        calibration: spec.calibration(),
        histograms: Vec::new(),
        truth: Vec::new(),
    };

    for k in 0..spec.frame_count() {
        let pose = spec.pose_at(k);
        let t = pose.timestamp;
        let frame = k as u64;
        out.poses.push(pose);
        let to_optical = |p: &WorldPoint| project(p, &pose, &spec.optical);
        let to_thermal = |p: &WorldPoint| {
            spec.thermal
                .camera_to_pixel(&rig.transform(&pose.world_to_camera(&p.to_vector())))
        };

        let mut objects: Vec<SimObject> = Vec::new();
        for c in &spec.clutter {
            let corners = box_corners(c.center, c.size);
            objects.push((
                image_box(&corners, &to_optical, &spec.optical),
                image_box(&corners, &to_thermal, &spec.thermal),
                c.color,
                None,
            ));
        }
        for h in &spec.humans {
            let present = h.present_at(t);
            let pos = h.position(t);
            let corners = box_corners([pos.x, pos.y], h.dimensions());
            let ob = present
                .then(|| image_box(&corners, &to_optical, &spec.optical))
                .flatten();
            let tb = present
                .then(|| image_box(&corners, &to_thermal, &spec.thermal))
                .flatten();
            out.truth.push(TruthRecord {
                frame,
                t,
                human_id: h.id,
                x: pos.x,
                y: pos.y,
                z: pos.z,
                in_view: ob.is_some(),
            });
            if let Some(b) = ob {
                out.annotations.push(Annotation {
                    frame,
                    bbox: b,
                    human_id: h.id,
                    posture: h.posture,
                    occluded: false,
                });
            }
            objects.push((ob, tb, h.color, Some(h.id)));
        }

        let visible: Vec<Visible> = objects
            .iter()
            .filter_map(|(ob, _, color, _)| ob.map(|bbox| Visible { bbox, color: *color }))
            .collect();

        for (ob, tb, _, _) in &objects {
            if let Some(b) = ob {
                if rng.random::<f64>() >= noise.miss_rate {
                    if let Some(jb) = jittered(&mut rng, b, noise.jitter_px, &spec.optical) {
                        let score = uniform(&mut rng, noise.tp_score);
                        out.optical.push(Detection::new(jb, score, Spectrum::Optical, frame, t));
                    }
                }
            }
            if let Some(b) = tb {
                if rng.random::<f64>() >= noise.miss_rate {
                    if let Some(jb) = jittered(&mut rng, b, noise.jitter_px, &spec.thermal) {
                        let score = uniform(&mut rng, noise.tp_score);
                        out.thermal.push(Detection::new(
                            jb,
                            score,
                            Spectrum::Thermal,
                            frame,
                            t + spec.thermal_delay,
                        ));
                    }
                }
            }
        }
        if let Some(p) = &fp_count {
            for _ in 0..p.sample(&mut rng) as usize {
                let b = random_box(&mut rng, &spec.optical, 1.0);
                let score = uniform(&mut rng, noise.fp_score);
                out.optical.push(Detection::new(b, score, Spectrum::Optical, frame, t));
            }
            for _ in 0..p.sample(&mut rng) as usize {
                let b = random_box(&mut rng, &spec.thermal, thermal_scale);
                let score = uniform(&mut rng, noise.fp_score);
                out.thermal.push(Detection::new(
                    b,
                    score,
                    Spectrum::Thermal,
                    frame,
                    t + spec.thermal_delay,
                ));
            }
        }
        for d in out.optical.iter().filter(|d| d.frame == frame) {
            let histogram = render_histogram(&mut rng, &d.bbox, &visible, spec.background)?;
            out.histograms.push(HistogramEntry {
                frame,
                bbox: d.bbox,
                histogram,
            });
        }
    }
    Ok(out)
}

/// Pixel of a world point in the optical image of frame `k`.
pub fn project_truth(spec: &ScenarioSpec, k: usize, p: &WorldPoint) -> Result<(f64, f64), GeometryError> {
    project(p, &spec.pose_at(k), &spec.optical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::iou;
    use nalgebra::Matrix3;

    fn assert_nadir(p: &Pose) -> bool {
        (p.rotation - Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0))
            .abs()
            .max()
            < 1e-12
    }

    #[test]
    fn waypoint_interpolation() {
        let w = GroundPath {
            points: vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]],
            speed: 2.0,
        };
        assert_eq!(w.length(), 20.0);
        assert_eq!(w.at(0.0), [0.0, 0.0]);
        assert_eq!(w.at(2.5), [5.0, 0.0]);
        assert_eq!(w.at(7.5), [10.0, 5.0]);
        assert_eq!(w.at(100.0), [10.0, 10.0]);
        assert_eq!(GroundPath::stationary([1.0, 2.0]).at(5.0), [1.0, 2.0]);
    }

    fn one_static_human() -> ScenarioSpec {
        ScenarioSpec {
            humans: vec![HumanSpec {
                id: 1,
                path: GroundPath::stationary([3.0, -2.0]),
                posture: Posture::Upright,
                color: RED,
                visible_from: 0.0,
                visible_until: None,
            }],
            ..ScenarioSpec::base(5)
        }
    }

    #[test]
    fn zero_noise_detections_sit_on_projected_truth() {
        let spec = one_static_human();
        let out = simulate(&spec).unwrap();
        assert_eq!(out.poses.len(), spec.frame_count());
        assert!(!out.annotations.is_empty());
        for a in &out.annotations {
            let d = out.optical.iter().find(|d| d.frame == a.frame).unwrap();
            assert_eq!(d.bbox, a.bbox);
        }
        assert_eq!(out.optical.len(), out.annotations.len());
        assert_eq!(out.histograms.len(), out.optical.len());
        // Thermal boxes agree with optical boxes after mapping at the true depth.
        let rig = spec.rig().unwrap();
        for d in &out.thermal {
            let o = out.optical.iter().find(|o| o.frame == d.frame).unwrap();
            let mapped = crate::fusion::map_bbox(&o.bbox, &rig, &spec.optical, &spec.thermal).unwrap();
            assert!(iou(&mapped, &d.bbox) > 0.9);
        }
        assert!(out.poses.iter().all(assert_nadir));
    }

    #[test]
    fn full_miss_rate_means_no_detections() {
        let mut spec = ScenarioSpec::survey(1, 3);
        spec.noise.miss_rate = 1.0;
        let out = simulate(&spec).unwrap();
        assert!(out.optical.is_empty() && out.thermal.is_empty());
        assert!(!out.annotations.is_empty());
    }

    #[test]
    fn same_seed_same_output() {
        let mut spec = ScenarioSpec::survey(9, 3);
        spec.noise = NoiseModel::noisy();
        assert_eq!(simulate(&spec).unwrap(), simulate(&spec).unwrap());
        let mut other = spec.clone();
        other.seed = 10;
        assert_ne!(simulate(&spec).unwrap().optical, simulate(&other).unwrap().optical);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = ScenarioSpec::base(0);
        spec.noise.miss_rate = 1.5;
        assert!(matches!(simulate(&spec), Err(SimError::InvalidSpec(_))));
        let mut spec = ScenarioSpec::base(0);
        spec.noise.jitter_px = -1.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn human_histograms_are_dominated_by_their_color() {
        let spec = one_static_human();
        let out = simulate(&spec).unwrap();
        let layout = HistogramLayout::default();
        let (h, s, _) = crate::reid::rgb_to_hsv(RED);
        let red_bin = layout.index(h, s);
        for e in &out.histograms {
            let top = e
                .histogram
                .bins
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(top / layout.sat_bins, red_bin / layout.sat_bins);
        }
    }
}
