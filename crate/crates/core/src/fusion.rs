//! Optical/thermal detection fusion.
//!
//! A detection from one spectrum is transferred into the other camera through
//! the rig calibration, then matched against that camera's detections with a
//! sliding window that absorbs small calibration and trigger offsets. Matched
//! pairs are merged by averaging their scores.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::{iou, BoundingBox, Detection, Spectrum};
use crate::geometry::{CameraIntrinsics, GeometryError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("mapped box lies entirely outside the destination image")]
    OutsideImage,
    #[error("invalid rig extrinsics: {0}")]
    InvalidRig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Rigid transform from the optical camera frame into the thermal camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigExtrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Depth at which boxes are transferred between the cameras (m).
    pub assumed_scene_depth: f64,
}

impl RigExtrinsics {
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        assumed_scene_depth: f64,
    ) -> Result<Self, FusionError> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(ortho <= 1e-9) || !((rotation.determinant() - 1.0).abs() <= 1e-9) {
            return Err(FusionError::InvalidRig("rotation is not orthonormal".into()));
        }
        if !(assumed_scene_depth > 0.0) {
            return Err(FusionError::InvalidRig(format!(
                "scene depth must be positive, got {assumed_scene_depth}"
            )));
        }
        Ok(Self {
            rotation,
            translation,
            assumed_scene_depth,
        })
    }

    pub fn identity(assumed_scene_depth: f64) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            assumed_scene_depth,
        }
    }

    /// From a row-major homogeneous 4x4 matrix.
    pub fn from_matrix(m: [[f64; 4]; 4], assumed_scene_depth: f64) -> Result<Self, FusionError> {
        let m = Matrix4::from_fn(|r, c| m[r][c]);
        if m.row(3)
            .iter()
            .zip([0.0, 0.0, 0.0, 1.0])
            .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(FusionError::InvalidRig("last row must be [0, 0, 0, 1]".into()));
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
            assumed_scene_depth,
        )
    }

    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate().take(3) {
            for (c, v) in row.iter_mut().enumerate().take(3) {
                *v = self.rotation[(r, c)];
            }
            row[3] = self.translation[r];
        }
        out[3][3] = 1.0;
        out
    }

    /// Thermal-to-optical transform at the same scene depth.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
            assumed_scene_depth: self.assumed_scene_depth,
        }
    }

    pub fn with_depth(&self, assumed_scene_depth: f64) -> Self {
        Self {
            assumed_scene_depth,
            ..*self
        }
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Transfers a box into the destination camera.
///
/// Each corner is back-projected at the assumed scene depth, moved through the
/// rig and re-projected; the result is the axis-aligned hull clipped to the
/// destination image.
pub fn map_bbox(
    bbox: &BoundingBox,
    rig: &RigExtrinsics,
    src: &CameraIntrinsics,
    dst: &CameraIntrinsics,
) -> Result<BoundingBox, FusionError> {
    let mut pixels = Vec::with_capacity(4);
    for (u, v) in bbox.corners() {
        let p_src = src.pixel_to_camera(u, v, rig.assumed_scene_depth)?;
        pixels.push(dst.camera_to_pixel(&rig.transform(&p_src))?);
    }
    BoundingBox::hull(pixels)
        .and_then(|h| h.clamp_to(dst.width as f64, dst.height as f64))
        .ok_or(FusionError::OutsideImage)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    /// Cells per axis of the search region; `grid * grid` sliding steps.
    pub grid: usize,
    /// Search region side relative to the mapped box side (3 gives nine times the area).
    pub region_scale: f64,
    pub iou_threshold: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            grid: 6,
            region_scale: 3.0,
            iou_threshold: 0.5,
        }
    }
}

/// Search region around a mapped box.
pub fn search_region(mapped: &BoundingBox, cfg: &WindowConfig) -> BoundingBox {
    let (cx, cy) = mapped.center();
    BoundingBox::from_center(
        cx,
        cy,
        cfg.region_scale * mapped.width(),
        cfg.region_scale * mapped.height(),
    )
}

/// All window placements: the mapped box itself followed by the
/// `grid x grid` steps, row-major. The search region is split into
/// `grid x grid` equal cells and one window is centered in each cell.
pub fn window_placements(mapped: &BoundingBox, cfg: &WindowConfig) -> Vec<BoundingBox> {
    let (w, h) = (mapped.width(), mapped.height());
    let (cx, cy) = mapped.center();
    let n = cfg.grid as f64;
    let offsets = |side: f64| -> Vec<f64> {
        let region = cfg.region_scale * side;
        (0..cfg.grid)
            .map(|i| -0.5 * region + (i as f64 + 0.5) * region / n)
            .collect()
    };
    let mut out = vec![*mapped];
    for dy in offsets(h) {
        for dx in offsets(w) {
            out.push(BoundingBox::from_center(cx + dx, cy + dy, w, h));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchResult {
    /// Index of the matched candidate.
    pub matched: Option<usize>,
    /// Search region that was scanned.
    pub window: BoundingBox,
    /// Placement that produced the match.
    pub placement: Option<BoundingBox>,
    pub iou_at_match: f64,
}

/// Finds the candidate with the highest IOU against any window placement.
///
/// Ties go to the higher score, then the lower index. Candidates whose best
/// IOU stays below the threshold never match.
pub fn sliding_window_match(mapped: &BoundingBox, candidates: &[Detection], cfg: &WindowConfig) -> MatchResult {
    let placements = window_placements(mapped, cfg);
    let mut best: Option<(usize, f64, BoundingBox)> = None;
    for (ci, cand) in candidates.iter().enumerate() {
        let mut cand_best: Option<(f64, BoundingBox)> = None;
        for p in &placements {
            let v = iou(p, &cand.bbox);
            if cand_best.is_none_or(|(b, _)| v > b) {
                cand_best = Some((v, *p));
            }
        }
        let Some((v, placement)) = cand_best else { continue };
        if v < cfg.iou_threshold {
            continue;
        }
        let better = match best {
            None => true,
            Some((bi, bv, _)) => v > bv || (v == bv && cand.score > candidates[bi].score),
        };
        if better {
            best = Some((ci, v, placement));
        }
    }
    MatchResult {
        matched: best.map(|b| b.0),
        window: search_region(mapped, cfg),
        placement: best.map(|b| b.2),
        iou_at_match: best.map_or(0.0, |b| b.1),
    }
}

/// Plain one-to-one IOU matching against a single box; reference for the
/// sliding-window search.
pub fn plain_iou_match(mapped: &BoundingBox, candidates: &[Detection], threshold: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (ci, c) in candidates.iter().enumerate() {
        let v = iou(mapped, &c.bbox);
        if v >= threshold && best.is_none_or(|(bi, bv)| v > bv || (v == bv && c.score > candidates[bi].score)) {
            best = Some((ci, v));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FusedPair {
    pub optical: usize,
    pub thermal: usize,
    pub iou: f64,
}

/// Result of matching both directions for one frame pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossMatches {
    /// One-to-one pairs, each detection used at most once.
    pub pairs: Vec<FusedPair>,
    /// Each thermal detection transferred into the optical image, when visible there.
    pub thermal_in_optical: Vec<Option<BoundingBox>>,
}

/// Matches optical to thermal and thermal to optical detections.
///
/// Pairs found in both directions are kept once. When a detection ends up in
/// several candidate pairs, pairs are accepted greedily by descending IOU.
pub fn cross_match(
    optical: &[Detection],
    thermal: &[Detection],
    rig: &RigExtrinsics,
    intr_optical: &CameraIntrinsics,
    intr_thermal: &CameraIntrinsics,
    cfg: &WindowConfig,
) -> CrossMatches {
    let mut candidates: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut note = |key: (usize, usize), v: f64| {
        let e = candidates.entry(key).or_insert(v);
        *e = e.max(v);
    };

    for (oi, d) in optical.iter().enumerate() {
        if let Ok(mapped) = map_bbox(&d.bbox, rig, intr_optical, intr_thermal) {
            let m = sliding_window_match(&mapped, thermal, cfg);
            if let Some(ti) = m.matched {
                note((oi, ti), m.iou_at_match);
            }
        }
    }
    let inverse = rig.inverse();
    let thermal_in_optical: Vec<Option<BoundingBox>> = thermal
        .iter()
        .map(|d| map_bbox(&d.bbox, &inverse, intr_thermal, intr_optical).ok())
        .collect();
    for (ti, mapped) in thermal_in_optical.iter().enumerate() {
        if let Some(mapped) = mapped {
            let m = sliding_window_match(mapped, optical, cfg);
            if let Some(oi) = m.matched {
                note((oi, ti), m.iou_at_match);
            }
        }
    }

    let mut ranked: Vec<((usize, usize), f64)> = candidates.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut used_o = vec![false; optical.len()];
    let mut used_t = vec![false; thermal.len()];
    let mut pairs = Vec::new();
    for ((oi, ti), v) in ranked {
        if !used_o[oi] && !used_t[ti] {
            used_o[oi] = true;
            used_t[ti] = true;
            pairs.push(FusedPair {
                optical: oi,
                thermal: ti,
                iou: v,
            });
        }
    }
    pairs.sort_by_key(|p| (p.optical, p.thermal));
    CrossMatches {
        pairs,
        thermal_in_optical,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    #[default]
    Or,
    And,
}

fn fused(opt: &Detection, thm: &Detection) -> Detection {
    Detection {
        score: 0.5 * (opt.score + thm.score),
        spectrum: Spectrum::Optical,
        human_id: None,
        ..*opt
    }
}

/// Keeps every detection of both spectra; matched pairs become one detection
/// in optical coordinates carrying the mean score.
///
/// Output order: optical detections by index (fused or passed through), then
/// unmatched thermal detections transferred into the optical image. Thermal
/// detections that do not land inside the optical image are dropped.
pub fn merge_or(optical: &[Detection], thermal: &[Detection], matches: &CrossMatches) -> Vec<Detection> {
    let mut partner: Vec<Option<usize>> = vec![None; optical.len()];
    let mut thermal_used = vec![false; thermal.len()];
    for p in &matches.pairs {
        partner[p.optical] = Some(p.thermal);
        thermal_used[p.thermal] = true;
    }
    let mut out: Vec<Detection> = optical
        .iter()
        .zip(&partner)
        .map(|(o, p)| match p {
            Some(ti) => fused(o, &thermal[*ti]),
            None => *o,
        })
        .collect();
    for (ti, t) in thermal.iter().enumerate() {
        if thermal_used[ti] {
            continue;
        }
        if let Some(Some(bbox)) = matches.thermal_in_optical.get(ti) {
            out.push(Detection {
                bbox: *bbox,
                spectrum: Spectrum::Optical,
                human_id: None,
                ..*t
            });
        }
    }
    out
}

/// Keeps matched pairs only, with mean scores.
pub fn merge_and(optical: &[Detection], thermal: &[Detection], matches: &CrossMatches) -> Vec<Detection> {
    matches
        .pairs
        .iter()
        .map(|p| fused(&optical[p.optical], &thermal[p.thermal]))
        .collect()
}

pub fn merge(mode: MergeMode, optical: &[Detection], thermal: &[Detection], matches: &CrossMatches) -> Vec<Detection> {
    match mode {
        MergeMode::Or => merge_or(optical, thermal, matches),
        MergeMode::And => merge_and(optical, thermal, matches),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(b: BoundingBox, score: f64, spectrum: Spectrum) -> Detection {
        Detection::new(b, score, spectrum, 0, 0.0)
    }

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::pinhole(1000.0, 1000.0, 320.0, 256.0, 640, 512).unwrap()
    }

    #[test]
    fn identity_mapping() {
        let b = BoundingBox::new(100.0, 120.0, 130.5, 170.25);
        let m = map_bbox(&b, &RigExtrinsics::identity(50.0), &cam(), &cam()).unwrap();
        for (a, e) in m.corners().iter().zip(b.corners()) {
            assert!((a.0 - e.0).abs() < 1e-6 && (a.1 - e.1).abs() < 1e-6);
        }
    }

    #[test]
    fn horizontal_baseline_shifts_by_disparity() {
        let (b, d) = (0.2, 40.0);
        let rig = RigExtrinsics::new(Matrix3::identity(), Vector3::new(-b, 0.0, 0.0), d).unwrap();
        let src = BoundingBox::new(300.0, 200.0, 340.0, 260.0);
        let m = map_bbox(&src, &rig, &cam(), &cam()).unwrap();
        let shift = 1000.0 * b / d;
        assert!((m.x_min - (src.x_min - shift)).abs() < 1e-9);
        assert!((m.x_max - (src.x_max - shift)).abs() < 1e-9);
        assert!((m.y_min - src.y_min).abs() < 1e-9);
    }

    #[test]
    fn mapping_off_image() {
        let rig = RigExtrinsics::new(Matrix3::identity(), Vector3::new(-20.0, 0.0, 0.0), 10.0).unwrap();
        let src = BoundingBox::new(10.0, 10.0, 40.0, 40.0);
        assert_eq!(map_bbox(&src, &rig, &cam(), &cam()), Err(FusionError::OutsideImage));
    }

    #[test]
    fn rig_matrix_round_trip_and_inverse() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.01, -0.02, 0.03);
        let rig = RigExtrinsics::new(*rot.matrix(), Vector3::new(0.1, -0.05, 0.02), 30.0).unwrap();
        let back = RigExtrinsics::from_matrix(rig.to_matrix(), 30.0).unwrap();
        assert!((back.rotation - rig.rotation).abs().max() < 1e-15);
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert!((rig.inverse().transform(&rig.transform(&p)) - p).norm() < 1e-12);
    }

    /// Independent enumeration of the 36 placement offsets in units of the box side.
    fn oracle_offsets() -> Vec<(f64, f64)> {
        let steps = [-1.25, -0.75, -0.25, 0.25, 0.75, 1.25];
        steps
            .iter()
            .flat_map(|&dy| steps.iter().map(move |&dx| (dx, dy)))
            .collect()
    }

    fn oracle_best_iou(mapped: &BoundingBox, cand: &BoundingBox) -> f64 {
        let (w, h) = (mapped.width(), mapped.height());
        let mut best = iou(mapped, cand);
        for (dx, dy) in oracle_offsets() {
            best = best.max(iou(&mapped.translate(dx * w, dy * h), cand));
        }
        best
    }

    #[test]
    fn placements_layout() {
        let mapped = BoundingBox::new(0.0, 0.0, 10.0, 20.0);
        let p = window_placements(&mapped, &WindowConfig::default());
        assert_eq!(p.len(), 37);
        assert_eq!(p[0], mapped);
        for (got, (dx, dy)) in p[1..].iter().zip(oracle_offsets()) {
            let want = mapped.translate(dx * 10.0, dy * 20.0);
            assert!((got.x_min - want.x_min).abs() < 1e-12 && (got.y_min - want.y_min).abs() < 1e-12);
        }
        let region = search_region(&mapped, &WindowConfig::default());
        assert!((region.area() - 9.0 * mapped.area()).abs() < 1e-9);
        let centers_inside = p.iter().all(|w| {
            let (x, y) = w.center();
            x > region.x_min && x < region.x_max && y > region.y_min && y < region.y_max
        });
        assert!(centers_inside);
    }

    #[test]
    fn match_examples() {
        let mapped = BoundingBox::new(100.0, 100.0, 120.0, 140.0);
        let cfg = WindowConfig::default();

        let exact = [det(mapped, 0.9, Spectrum::Thermal)];
        let m = sliding_window_match(&mapped, &exact, &cfg);
        assert_eq!(m.matched, Some(0));
        assert_eq!(m.iou_at_match, 1.0);

        let off = [det(mapped.translate(0.8 * 20.0, 0.0), 0.9, Spectrum::Thermal)];
        assert!(iou(&mapped, &off[0].bbox) < 0.5);
        let m = sliding_window_match(&mapped, &off, &cfg);
        assert_eq!(m.matched, Some(0));
        assert!((m.iou_at_match - oracle_best_iou(&mapped, &off[0].bbox)).abs() < 1e-12);
        assert!(plain_iou_match(&mapped, &off, 0.5).is_none());

        let far = [det(mapped.translate(3.0 * 20.0, 0.0), 0.9, Spectrum::Thermal)];
        assert!(oracle_best_iou(&mapped, &far[0].bbox) < 0.5);
        let m = sliding_window_match(&mapped, &far, &cfg);
        assert_eq!(m.matched, None);
        assert_eq!(m.iou_at_match, 0.0);
    }

    #[test]
    fn match_ties_prefer_higher_score() {
        let mapped = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let c = [
            det(mapped, 0.4, Spectrum::Thermal),
            det(mapped, 0.8, Spectrum::Thermal),
            det(mapped, 0.8, Spectrum::Thermal),
        ];
        assert_eq!(
            sliding_window_match(&mapped, &c, &WindowConfig::default()).matched,
            Some(1)
        );
    }

    fn two_by_two() -> (Vec<Detection>, Vec<Detection>) {
        let a = BoundingBox::new(100.0, 100.0, 120.0, 140.0);
        let b = BoundingBox::new(400.0, 300.0, 420.0, 340.0);
        let c = BoundingBox::new(200.0, 50.0, 215.0, 80.0);
        let opt = vec![det(a, 0.8, Spectrum::Optical), det(b, 0.5, Spectrum::Optical)];
        let thm = vec![
            det(a.translate(3.0, 0.0), 0.6, Spectrum::Thermal),
            det(c, 0.7, Spectrum::Thermal),
        ];
        (opt, thm)
    }

    #[test]
    fn merge_counts_and_scores() {
        let (opt, thm) = two_by_two();
        let rig = RigExtrinsics::identity(50.0);
        let m = cross_match(&opt, &thm, &rig, &cam(), &cam(), &WindowConfig::default());
        assert_eq!(m.pairs.len(), 1);
        assert_eq!((m.pairs[0].optical, m.pairs[0].thermal), (0, 0));

        let or = merge_or(&opt, &thm, &m);
        assert_eq!(or.len(), 3);
        assert!((or[0].score - 0.7).abs() < 1e-15);
        assert_eq!(or[0].bbox, opt[0].bbox);
        assert_eq!(or[1], opt[1]);
        assert_eq!(or[2].score, 0.7);

        let and = merge_and(&opt, &thm, &m);
        assert_eq!(and.len(), 1);
        assert!((and[0].score - 0.7).abs() < 1e-15);
    }

    #[test]
    fn merge_edge_cases() {
        let (opt, _) = two_by_two();
        let rig = RigExtrinsics::identity(50.0);
        let m = cross_match(&opt, &[], &rig, &cam(), &cam(), &WindowConfig::default());
        assert_eq!(merge_or(&opt, &[], &m), opt);
        assert!(merge_and(&opt, &[], &m).is_empty());

        let thm: Vec<Detection> = opt
            .iter()
            .map(|d| Detection {
                spectrum: Spectrum::Thermal,
                ..*d
            })
            .collect();
        let m = cross_match(&opt, &thm, &rig, &cam(), &cam(), &WindowConfig::default());
        assert_eq!(merge_and(&opt, &thm, &m).len(), opt.len());
        assert_eq!(merge_or(&opt, &thm, &m).len(), opt.len());
    }

    fn arb_dets(spectrum: Spectrum) -> impl Strategy<Value = Vec<Detection>> {
        proptest::collection::vec(
            (0.0..600.0f64, 0.0..480.0f64, 4.0..40.0f64, 4.0..40.0f64, 0.0..=1.0f64),
            0..8,
        )
        .prop_map(move |v| {
            v.into_iter()
                .map(|(x, y, w, h, s)| {
                    det(
                        BoundingBox::new(x, y, (x + w).min(639.0), (y + h).min(511.0)),
                        s,
                        spectrum,
                    )
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn and_is_subset_of_or_and_scores_bounded(
            opt in arb_dets(Spectrum::Optical), thm in arb_dets(Spectrum::Thermal)
        ) {
            let rig = RigExtrinsics::identity(50.0);
            let m = cross_match(&opt, &thm, &rig, &cam(), &cam(), &WindowConfig::default());
            let or = merge_or(&opt, &thm, &m);
            let and = merge_and(&opt, &thm, &m);
            for d in &and {
                prop_assert!(or.contains(d));
            }
            prop_assert!(or.len() <= opt.len() + thm.len());
            prop_assert_eq!(or.len(), opt.len() + thm.len() - m.pairs.len());
            for p in &m.pairs {
                let (a, b) = (opt[p.optical].score, thm[p.thermal].score);
                let s = or[p.optical].score;
                prop_assert!(s >= a.min(b) && s <= a.max(b));
            }
            let mut seen_o = std::collections::HashSet::new();
            let mut seen_t = std::collections::HashSet::new();
            for p in &m.pairs {
                prop_assert!(seen_o.insert(p.optical) && seen_t.insert(p.thermal));
            }
        }

        #[test]
        fn window_match_translation_invariant(
            cands in arb_dets(Spectrum::Thermal),
            x in 50.0..500.0f64, y in 50.0..400.0f64, w in 5.0..40.0f64, h in 5.0..40.0f64,
            dx in -300.0..300.0f64, dy in -300.0..300.0f64,
        ) {
            // Integer-valued translation keeps float arithmetic exact enough for ties.
            let (dx, dy) = (dx.round(), dy.round());
            let mapped = BoundingBox::new(x, y, x + w, y + h);
            let cfg = WindowConfig::default();
            let a = sliding_window_match(&mapped, &cands, &cfg);
            let moved: Vec<Detection> = cands
                .iter()
                .map(|d| Detection { bbox: d.bbox.translate(dx, dy), ..*d })
                .collect();
            let b = sliding_window_match(&mapped.translate(dx, dy), &moved, &cfg);
            prop_assert_eq!(a.matched, b.matched);
            prop_assert!((a.iou_at_match - b.iou_at_match).abs() < 1e-9);
        }

        #[test]
        fn single_placement_equals_plain_matching(
            cands in arb_dets(Spectrum::Thermal),
            x in 0.0..500.0f64, y in 0.0..400.0f64, w in 5.0..40.0f64, h in 5.0..40.0f64,
        ) {
            let mapped = BoundingBox::new(x, y, x + w, y + h);
            let cfg = WindowConfig { grid: 1, ..WindowConfig::default() };
            let a = sliding_window_match(&mapped, &cands, &cfg);
            let b = plain_iou_match(&mapped, &cands, 0.5);
            prop_assert_eq!(a.matched, b.map(|m| m.0));
            prop_assert_eq!(a.iou_at_match, b.map_or(0.0, |m| m.1));
        }
    }
}
