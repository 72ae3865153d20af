//! End-to-end run: fuse optical and thermal detections, track, geo-localize,
//! reject by metric area, re-identify and evaluate.
//!
//! Poses define the frame timeline: pose `k` belongs to optical frame `k`.
//! Thermal detections are paired with the pose closest in time.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bbox::{iou, BoundingBox, Detection, Spectrum};
use crate::evaluation::{
    curve_svg, fppi_missrate_curve, match_frame, per_id_missrate, score_thresholds, totals_at, Annotation, EvalCurve,
    EvalFrame, EvalOptions,
};
use crate::fusion::{cross_match, merge, MergeMode, WindowConfig};
use crate::geometry::{
    depth_of, ground_plane_transfer, metric_bbox_area, reject_by_area, triangulate_with_min_angle, AreaVerdict,
    Observation, Pose, WorldPoint,
};
use crate::io::{
    particle_writer, write_histograms, write_jsonl, write_particles, write_poses, AnnotationRecord, CalibrationFile,
    DetectionRecord, HistogramEntry, IdentityRecord, IoError, LocalizationRecord, SCHEMA_VERSION,
};
use crate::particle_filter::{Estimate, GroundPoint, PfConfig};
use crate::reid::{ColorHistogram, HumanRegistry, ReidConfig, ReidObservation};
use crate::sim::ScenarioSpec;
use crate::tracking::{IouTracker, Tracker, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    /// Boxes whose metric area exceeds this (m^2) are rejected.
    pub area_threshold: f64,
    pub min_ray_angle_deg: f64,
    /// Ground height used for ego-motion transfer between frames.
    pub ground_z: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            area_threshold: 3.0,
            min_ray_angle_deg: 0.1,
            ground_z: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Maximum |t_detection - t_pose| in seconds when assigning detections to frames.
    pub pairing_tolerance: f64,
    pub window: WindowConfig,
    pub merge_mode: MergeMode,
    pub tracker: TrackerConfig,
    pub geometry: GeometryConfig,
    pub pf: PfConfig,
    pub reid: ReidConfig,
    pub eval: EvalOptions,
    /// Score threshold for the per-ID and box-level summary numbers.
    pub eval_threshold: f64,
    pub dump_particles: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            pairing_tolerance: 0.125,
            window: WindowConfig::default(),
            merge_mode: MergeMode::Or,
            tracker: TrackerConfig::default(),
            geometry: GeometryConfig::default(),
            pf: PfConfig::default(),
            reid: ReidConfig::default(),
            eval: EvalOptions::default(),
            eval_threshold: 0.0,
            dump_particles: true,
        }
    }
}

impl RunConfig {
    pub fn from_yaml(s: &str) -> Result<Self, IoError> {
        let de = serde_yaml::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| IoError::Schema {
            line: e.inner().location().map_or(0, |l| l.line()),
            field: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), StageError> {
        let bad = |m: String| StageError::new(Stage::Input, m);
        self.tracker.validate().map_err(|e| bad(e.to_string()))?;
        self.pf.validate().map_err(|e| bad(e.to_string()))?;
        self.reid.validate().map_err(|e| bad(e.to_string()))?;
        if !(self.pairing_tolerance >= 0.0) {
            return Err(bad("pairing_tolerance must be non-negative".into()));
        }
        if !(self.geometry.area_threshold > 0.0) {
            return Err(bad("geometry.area_threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Input,
    Fuse,
    Track,
    Localize,
    Reid,
    Evaluate,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Input => "input",
            Stage::Fuse => "fuse",
            Stage::Track => "track",
            Stage::Localize => "localize",
            Stage::Reid => "reid",
            Stage::Evaluate => "evaluate",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage} stage failed: {message}")]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        Self {
            stage,
            message: message.into(),
        }
    }
}

/// Scenario simulated by `pipeline` when no input files are given: a six-person
/// survey leg under the noisy detector model.
pub fn default_scenario(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        noise: crate::sim::NoiseModel::noisy(),
        ..ScenarioSpec::survey(seed, 6)
    }
}

/// Everything a run consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInputs {
    pub optical: Vec<Detection>,
    pub thermal: Vec<Detection>,
    pub poses: Vec<Pose>,
    pub calibration: CalibrationFile,
    pub histograms: Vec<HistogramEntry>,
    pub annotations: Option<Vec<Annotation>>,
}

impl PipelineInputs {
    pub fn from_sim(out: crate::sim::SimOutput) -> Self {
        Self {
            optical: out.optical,
            thermal: out.thermal,
            poses: out.poses,
            calibration: out.calibration,
            histograms: out.histograms,
            annotations: Some(out.annotations),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSummary {
    pub human_id: u64,
    pub estimate: Estimate,
    pub observations: usize,
    pub first_seen_t: f64,
    pub last_seen_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub threshold: f64,
    pub frames: usize,
    pub ground_truth: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub fppi: f64,
    pub missrate: f64,
    pub per_id_missrate: f64,
    pub log_average_missrate: f64,
    pub missrate_at_1_fppi: f64,
    pub annotated_humans: usize,
    pub identified_humans: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub summary: EvalSummary,
    pub curve: EvalCurve,
}

/// Stage outputs; later fields stay empty when an earlier stage fails.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineOutput {
    pub frames: usize,
    /// Merged detections in optical coordinates, stamped with the optical frame.
    pub fused: Vec<Detection>,
    /// Fused detections with `human_id` set to the track ID.
    pub tracked: Vec<Detection>,
    pub localizations: Vec<LocalizationRecord>,
    pub identities: Vec<IdentityRecord>,
    /// Kept detections with `human_id` set to the re-identified human.
    pub final_detections: Vec<Detection>,
    pub humans: Vec<HumanSummary>,
    pub particles_csv: Option<String>,
    pub evaluation: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct PipelineFailure {
    pub error: StageError,
    pub partial: Box<PipelineOutput>,
}

fn check_poses(poses: &[Pose]) -> Result<(), StageError> {
    if poses.is_empty() {
        return Err(StageError::new(Stage::Input, "no poses"));
    }
    for (k, w) in poses.windows(2).enumerate() {
        if !(w[1].timestamp > w[0].timestamp) {
            return Err(StageError::new(
                Stage::Input,
                format!("pose timestamps must increase (row {})", k + 1),
            ));
        }
    }
    Ok(())
}

/// Index of the pose whose timestamp is nearest to `t`, if within `tol`.
fn nearest_pose(poses: &[Pose], t: f64, tol: f64) -> Option<usize> {
    let i = poses.partition_point(|p| p.timestamp < t);
    [i.checked_sub(1), (i < poses.len()).then_some(i)]
        .into_iter()
        .flatten()
        .min_by(|&a, &b| {
            (poses[a].timestamp - t)
                .abs()
                .total_cmp(&(poses[b].timestamp - t).abs())
                .then(a.cmp(&b))
        })
        .filter(|&k| (poses[k].timestamp - t).abs() <= tol)
}

/// Groups detections of one spectrum by frame index.
///
/// Optical detections must carry a frame with a pose at (nearly) the same time;
/// thermal detections are assigned to the nearest pose.
fn frame_buckets(
    dets: &[Detection],
    poses: &[Pose],
    tol: f64,
    spectrum: Spectrum,
) -> Result<Vec<Vec<Detection>>, StageError> {
    let mut out = vec![Vec::new(); poses.len()];
    for (i, d) in dets.iter().enumerate() {
        if d.spectrum != spectrum {
            return Err(StageError::new(
                Stage::Input,
                format!("{spectrum} detection {i} is labelled {}", d.spectrum),
            ));
        }
        if !d.bbox.is_valid() || !d.timestamp.is_finite() {
            return Err(StageError::new(
                Stage::Input,
                format!("{spectrum} detection {i} is malformed"),
            ));
        }
        let k = match spectrum {
            Spectrum::Optical => {
                let k = d.frame as usize;
                if k >= poses.len() || (poses[k].timestamp - d.timestamp).abs() > tol {
                    return Err(StageError::new(
                        Stage::Input,
                        format!(
                            "optical detection {i} (frame {}, t={}) has no matching pose",
                            d.frame, d.timestamp
                        ),
                    ));
                }
                k
            }
            Spectrum::Thermal => nearest_pose(poses, d.timestamp, tol).ok_or_else(|| {
                StageError::new(
                    Stage::Input,
                    format!("thermal detection {i} (t={}) has no pose within {tol} s", d.timestamp),
                )
            })?,
        };
        out[k].push(*d);
    }
    Ok(out)
}

/// Cross-spectral fusion per frame. Output detections carry the optical frame and time.
pub fn fuse_frames(
    optical: &[Detection],
    thermal: &[Detection],
    poses: &[Pose],
    cal: &CalibrationFile,
    cfg: &RunConfig,
) -> Result<Vec<Detection>, StageError> {
    check_poses(poses)?;
    cal.validate()
        .map_err(|e| StageError::new(Stage::Input, e.to_string()))?;
    let rig = cal.rig().map_err(|e| StageError::new(Stage::Input, e.to_string()))?;
    let opt = frame_buckets(optical, poses, cfg.pairing_tolerance, Spectrum::Optical)?;
    let thm = frame_buckets(thermal, poses, cfg.pairing_tolerance, Spectrum::Thermal)?;
    let mut fused = Vec::new();
    for (k, (o, t)) in opt.iter().zip(&thm).enumerate() {
        let matches = cross_match(o, t, &rig, &cal.optical, &cal.thermal, &cfg.window);
        for mut d in merge(cfg.merge_mode, o, t, &matches) {
            d.frame = k as u64;
            d.timestamp = poses[k].timestamp;
            d.spectrum = Spectrum::Optical;
            d.human_id = None;
            fused.push(d);
        }
    }
    Ok(fused)
}

/// Maps a box between consecutive views through the ground plane; identity when that fails.
fn ego_motion(b: &BoundingBox, from: &Pose, to: &Pose, cal: &CalibrationFile, ground_z: f64) -> BoundingBox {
    let moved: Result<Vec<(f64, f64)>, _> = b
        .corners()
        .into_iter()
        .map(|c| ground_plane_transfer(c, from, to, &cal.optical, ground_z))
        .collect();
    moved.ok().and_then(BoundingBox::hull).unwrap_or(*b)
}

/// Frame-by-frame IOU tracking with ego-motion compensation.
pub fn track_detections(
    fused: &[Detection],
    poses: &[Pose],
    cal: &CalibrationFile,
    cfg: &RunConfig,
) -> Result<Vec<Detection>, StageError> {
    check_poses(poses)?;
    let mut by_frame: Vec<Vec<Detection>> = vec![Vec::new(); poses.len()];
    for d in fused {
        let k = d.frame as usize;
        if k >= poses.len() {
            return Err(StageError::new(
                Stage::Input,
                format!("detection frame {} has no pose", d.frame),
            ));
        }
        by_frame[k].push(*d);
    }
    let mut tracker = IouTracker::new(cfg.tracker).map_err(|e| StageError::new(Stage::Input, e.to_string()))?;
    let mut out = Vec::with_capacity(fused.len());
    for (k, dets) in by_frame.iter().enumerate() {
        let prev = &poses[k.saturating_sub(1)];
        let cur = &poses[k];
        let motion = |b: &BoundingBox| ego_motion(b, prev, cur, cal, cfg.geometry.ground_z);
        let ids = tracker
            .step_with_motion(dets, k as u64, &motion)
            .map_err(|e| StageError::new(Stage::Track, e.to_string()))?;
        out.extend(dets.iter().zip(ids).map(|(d, id)| Detection {
            human_id: Some(id),
            ..*d
        }));
    }
    Ok(out)
}

fn tracks_of(tracked: &[Detection]) -> BTreeMap<u64, Vec<Detection>> {
    let mut m: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    for d in tracked {
        if let Some(id) = d.human_id {
            m.entry(id).or_default().push(*d);
        }
    }
    for v in m.values_mut() {
        v.sort_by_key(|d| d.frame);
    }
    m
}

/// Triangulates each track observation against its neighbour and applies the area check.
///
/// Observation `i > 0` pairs with `i - 1`; the first observation reuses the point
/// from the pair `(0, 1)`. Single-observation tracks and pairs that fail to
/// triangulate in front of both cameras produce no record.
pub fn localize_tracks(
    tracked: &[Detection],
    poses: &[Pose],
    cal: &CalibrationFile,
    cfg: &RunConfig,
) -> Result<Vec<LocalizationRecord>, StageError> {
    let mut out = Vec::new();
    for (track_id, obs) in tracks_of(tracked) {
        let pose_of = |d: &Detection| {
            poses
                .get(d.frame as usize)
                .copied()
                .ok_or_else(|| StageError::new(Stage::Input, format!("detection frame {} has no pose", d.frame)))
        };
        let mut points: Vec<Option<WorldPoint>> = vec![None; obs.len()];
        for i in 1..obs.len() {
            let (a, b) = (&obs[i - 1], &obs[i]);
            let (pa, pb) = (pose_of(a)?, pose_of(b)?);
            let p = triangulate_with_min_angle(
                &Observation {
                    pixel: a.bbox.center(),
                    pose: pa,
                },
                &Observation {
                    pixel: b.bbox.center(),
                    pose: pb,
                },
                &cal.optical,
                cfg.geometry.min_ray_angle_deg,
            );
            if let Ok(p) = p {
                let in_front = |pose: &Pose| pose.world_to_camera(&p.to_vector()).z > 0.0;
                if p.is_finite() && in_front(&pa) && in_front(&pb) {
                    points[i] = Some(p);
                }
            }
        }
        if obs.len() > 1 {
            points[0] = points[1];
        }
        for (d, p) in obs.iter().zip(points) {
            let Some(p) = p else { continue };
            let pose = pose_of(d)?;
            let depth = depth_of(&p, &pose);
            let area = metric_bbox_area(&d.bbox, depth, &pose, &cal.optical)
                .map_err(|e| StageError::new(Stage::Localize, format!("track {track_id}: {e}")))?;
            out.push(LocalizationRecord {
                schema_version: SCHEMA_VERSION,
                frame: d.frame,
                t: d.timestamp,
                track_id,
                bbox: [d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max],
                x: p.x,
                y: p.y,
                z: p.z,
                depth,
                metric_area: area,
                kept: reject_by_area(area, cfg.geometry.area_threshold) == AreaVerdict::Keep,
            });
        }
    }
    out.sort_by(|a, b| a.frame.cmp(&b.frame).then(a.track_id.cmp(&b.track_id)));
    Ok(out)
}

/// Histogram of the same-frame entry overlapping `bbox` most (IOU >= 0.5).
fn lookup_histogram<'a>(entries: &'a [HistogramEntry], frame: u64, bbox: &BoundingBox) -> Option<&'a ColorHistogram> {
    entries
        .iter()
        .filter(|e| e.frame == frame)
        .map(|e| (iou(&e.bbox, bbox), e))
        .filter(|(v, _)| *v >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| &e.histogram)
}

#[derive(Debug, Clone)]
pub struct ReidOutcome {
    pub identities: Vec<IdentityRecord>,
    pub registry: HumanRegistry,
    pub particles_csv: Option<String>,
}

/// Re-identification over kept localizations in time order.
///
/// A track's first kept localization is associated through the registry; its
/// later ones update the chosen human's filter directly.
pub fn reidentify(
    localizations: &[LocalizationRecord],
    histograms: &[HistogramEntry],
    cfg: &RunConfig,
) -> Result<ReidOutcome, StageError> {
    let err = |e: crate::reid::ReidError| StageError::new(Stage::Reid, e.to_string());
    let mut registry = HumanRegistry::new(cfg.reid, cfg.pf, cfg.seed).map_err(err)?;
    let mut track_human: BTreeMap<u64, u64> = BTreeMap::new();
    let mut identities = Vec::new();
    let mut dump = if cfg.dump_particles {
        Some(particle_writer(Vec::new()).map_err(|e| StageError::new(Stage::Reid, e.to_string()))?)
    } else {
        None
    };

    let mut order: Vec<&LocalizationRecord> = localizations.iter().filter(|l| l.kept).collect();
    order.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.frame.cmp(&b.frame))
            .then(a.track_id.cmp(&b.track_id))
    });

    for (step, l) in order.into_iter().enumerate() {
        let bbox = BoundingBox::new(l.bbox[0], l.bbox[1], l.bbox[2], l.bbox[3]);
        let obs = ReidObservation {
            location: GroundPoint::new(l.x, l.y),
            timestamp: l.t,
            frame: l.frame,
            histogram: lookup_histogram(histograms, l.frame, &bbox).cloned(),
        };
        let (human_id, is_new) = match track_human.get(&l.track_id) {
            Some(&h) => {
                registry.observe(h, &obs).map_err(err)?;
                (h, false)
            }
            None => {
                let a = registry.associate(&obs).map_err(err)?;
                track_human.insert(l.track_id, a.human_id);
                (a.human_id, a.is_new)
            }
        };
        if let (Some(w), Some(h)) = (dump.as_mut(), registry.get(human_id)) {
            write_particles(w, step, l.t, human_id, &h.filter)
                .map_err(|e| StageError::new(Stage::Reid, e.to_string()))?;
        }
        identities.push(IdentityRecord {
            schema_version: SCHEMA_VERSION,
            frame: l.frame,
            t: l.t,
            track_id: l.track_id,
            human_id,
            is_new,
            x: l.x,
            y: l.y,
        });
    }
    let particles_csv = match dump {
        Some(w) => {
            let bytes = w
                .into_inner()
                .map_err(|e| StageError::new(Stage::Reid, e.to_string()))?;
            Some(String::from_utf8(bytes).map_err(|e| StageError::new(Stage::Reid, e.to_string()))?)
        }
        None => None,
    };
    Ok(ReidOutcome {
        identities,
        registry,
        particles_csv,
    })
}

pub fn summarize_humans(registry: &HumanRegistry, identities: &[IdentityRecord]) -> Vec<HumanSummary> {
    registry
        .humans
        .iter()
        .map(|h| {
            let seen: Vec<&IdentityRecord> = identities.iter().filter(|r| r.human_id == h.human_id).collect();
            HumanSummary {
                human_id: h.human_id,
                estimate: h.estimate(),
                observations: seen.len(),
                first_seen_t: seen.first().map_or(h.last_seen_time, |r| r.t),
                last_seen_t: h.last_seen_time,
            }
        })
        .collect()
}

/// Tracked detections that survived the area check, relabelled with their human ID.
pub fn final_detections(tracked: &[Detection], identities: &[IdentityRecord]) -> Vec<Detection> {
    let key: BTreeMap<(u64, u64), u64> = identities.iter().map(|r| ((r.track_id, r.frame), r.human_id)).collect();
    tracked
        .iter()
        .filter_map(|d| {
            let h = key.get(&(d.human_id?, d.frame))?;
            Some(Detection {
                human_id: Some(*h),
                ..*d
            })
        })
        .collect()
}

/// One evaluation frame per pose, including frames with nothing in them.
pub fn eval_frames(n_frames: usize, dets: &[Detection], anns: &[Annotation]) -> Vec<EvalFrame> {
    let mut frames: Vec<EvalFrame> = (0..n_frames as u64)
        .map(|frame| EvalFrame {
            frame,
            detections: Vec::new(),
            annotations: Vec::new(),
        })
        .collect();
    for d in dets {
        if let Some(f) = frames.get_mut(d.frame as usize) {
            f.detections.push(*d);
        }
    }
    for a in anns {
        if let Some(f) = frames.get_mut(a.frame as usize) {
            f.annotations.push(*a);
        }
    }
    frames
}

pub fn evaluate(
    n_frames: usize,
    dets: &[Detection],
    anns: &[Annotation],
    cfg: &RunConfig,
) -> Result<EvalReport, StageError> {
    let err = |e: crate::evaluation::EvalError| StageError::new(Stage::Evaluate, e.to_string());
    let frames = eval_frames(n_frames, dets, anns);
    let curve = fppi_missrate_curve(&frames, &score_thresholds(&frames), &cfg.eval).map_err(err)?;
    let totals = totals_at(&frames, cfg.eval_threshold, &cfg.eval);
    let per_id = per_id_missrate(&frames, cfg.eval_threshold, &cfg.eval).map_err(err)?;
    let annotated: std::collections::BTreeSet<u64> = anns.iter().map(|a| a.human_id).collect();
    let identified: std::collections::BTreeSet<u64> = dets.iter().filter_map(|d| d.human_id).collect();
    Ok(EvalReport {
        summary: EvalSummary {
            threshold: cfg.eval_threshold,
            frames: frames.len(),
            ground_truth: totals.gt(),
            tp: totals.tp,
            fp: totals.fp,
            fn_: totals.fn_,
            fppi: totals.fppi(),
            missrate: totals.missrate(),
            per_id_missrate: per_id,
            log_average_missrate: curve.log_average_missrate,
            missrate_at_1_fppi: curve.missrate_at_fppi(1.0),
            annotated_humans: annotated.len(),
            identified_humans: identified.len(),
        },
        curve,
    })
}

/// Runs every stage. On failure, the outputs of the stages that finished are returned.
pub fn run(inputs: &PipelineInputs, cfg: &RunConfig) -> Result<PipelineOutput, PipelineFailure> {
    let mut out = PipelineOutput {
        frames: inputs.poses.len(),
        ..Default::default()
    };
    macro_rules! stage {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => {
                    return Err(PipelineFailure {
                        error,
                        partial: Box::new(out),
                    })
                }
            }
        };
    }
    stage!(cfg.validate());
    out.fused = stage!(fuse_frames(
        &inputs.optical,
        &inputs.thermal,
        &inputs.poses,
        &inputs.calibration,
        cfg
    ));
    out.tracked = stage!(track_detections(&out.fused, &inputs.poses, &inputs.calibration, cfg));
    out.localizations = stage!(localize_tracks(&out.tracked, &inputs.poses, &inputs.calibration, cfg));
    let reid = stage!(reidentify(&out.localizations, &inputs.histograms, cfg));
    out.identities = reid.identities;
    out.particles_csv = reid.particles_csv;
    out.humans = summarize_humans(&reid.registry, &out.identities);
    out.final_detections = final_detections(&out.tracked, &out.identities);
    if let Some(anns) = &inputs.annotations {
        out.evaluation = Some(stage!(evaluate(out.frames, &out.final_detections, anns, cfg)));
    }
    Ok(out)
}

/// Per-frame TP/FP/FN counts of `dets` against `anns`, for reporting.
pub fn frame_counts(n_frames: usize, dets: &[Detection], anns: &[Annotation], opts: &EvalOptions) -> Vec<[usize; 3]> {
    eval_frames(n_frames, dets, anns)
        .iter()
        .map(|f| {
            let m = match_frame(&f.detections, &f.annotations, opts);
            [m.tp, m.fp, m.fn_]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Where the inputs of a run came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum RunSource {
    Scenario { scenario: ScenarioSpec },
    Files { inputs: BTreeMap<String, String> },
}

/// Written as `manifest.json`; contains no wall-clock data so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub seed: u64,
    pub config: RunConfig,
    pub source: RunSource,
    pub failed_stage: Option<Stage>,
    pub outputs: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>, IoError> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    Ok(buf)
}

fn det_records(dets: &[Detection]) -> Vec<DetectionRecord> {
    dets.iter().map(DetectionRecord::from).collect()
}

/// Serializes every artifact of `out` in a fixed order.
pub fn render_artifacts(out: &PipelineOutput) -> Result<Vec<(String, Vec<u8>)>, IoError> {
    let mut files = vec![
        ("fused.jsonl".to_string(), jsonl(&det_records(&out.fused))?),
        ("tracks.jsonl".to_string(), jsonl(&det_records(&out.tracked))?),
        ("localizations.jsonl".to_string(), jsonl(&out.localizations)?),
        ("identities.jsonl".to_string(), jsonl(&out.identities)?),
        (
            "final_detections.jsonl".to_string(),
            jsonl(&det_records(&out.final_detections))?,
        ),
        ("humans.json".to_string(), to_json(&out.humans)?),
    ];
    if let Some(p) = &out.particles_csv {
        files.push(("particles.csv".to_string(), p.clone().into_bytes()));
    }
    if let Some(e) = &out.evaluation {
        files.push(("eval_curve.csv".to_string(), e.curve.to_csv().into_bytes()));
        files.push(("eval_summary.json".to_string(), to_json(&e.summary)?));
        files.push((
            "curve.svg".to_string(),
            curve_svg(&[("pipeline", &e.curve)]).into_bytes(),
        ));
    }
    Ok(files)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>, IoError> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| IoError::Io(std::io::Error::other(e)))?;
    s.push(b'\n');
    Ok(s)
}

/// Writes the artifacts plus `manifest.json` into `dir`.
pub fn write_run(
    dir: &Path,
    out: &PipelineOutput,
    cfg: &RunConfig,
    source: RunSource,
    failed_stage: Option<Stage>,
) -> Result<RunManifest, IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::File {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut outputs = Vec::new();
    for (name, bytes) in render_artifacts(out)? {
        crate::io::write_bytes(&dir.join(&name), &bytes)?;
        outputs.push(ArtifactEntry {
            name,
            bytes: bytes.len(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        config: *cfg,
        source,
        failed_stage,
        outputs,
    };
    crate::io::write_bytes(&dir.join("manifest.json"), &to_json(&manifest)?)?;
    Ok(manifest)
}

/// Writes a scenario's simulated inputs in the on-disk formats the pipeline reads.
pub fn write_inputs(dir: &Path, inputs: &PipelineInputs) -> Result<Vec<(String, String)>, IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::File {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<(), IoError> {
        crate::io::write_bytes(&dir.join(name), &bytes)?;
        written.push((name.to_string(), sha256_hex(&bytes)));
        Ok(())
    };
    put("optical.jsonl", jsonl(&det_records(&inputs.optical))?)?;
    put("thermal.jsonl", jsonl(&det_records(&inputs.thermal))?)?;
    let mut poses = Vec::new();
    write_poses(&mut poses, &inputs.poses)?;
    put("poses.csv", poses)?;
    let cal = serde_yaml::to_string(&inputs.calibration).map_err(|e| IoError::Calibration(e.to_string()))?;
    put("calibration.yaml", cal.into_bytes())?;
    let mut hist = Vec::new();
    write_histograms(&mut hist, &inputs.histograms)?;
    put("histograms.csv", hist)?;
    if let Some(anns) = &inputs.annotations {
        let recs: Vec<AnnotationRecord> = anns.iter().map(AnnotationRecord::from).collect();
        put("annotations.jsonl", jsonl(&recs)?)?;
    }
    Ok(written)
}
