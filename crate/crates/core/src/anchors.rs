//! Anchor generation, the two detector assignment rules, k-means anchor
//! clustering and assignment coverage statistics.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::{iou, BoundingBox};

/// IOU at or above which an anchor is assigned to a ground-truth box.
pub const POSITIVE_IOU: f64 = 0.5;
/// IOU below which an anchor is background.
pub const NEGATIVE_IOU: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnchorError {
    #[error("anchor configuration is empty or has non-positive entries")]
    EmptyConfig,
    #[error("{levels} pyramid levels but {strides} strides")]
    StrideMismatch { levels: usize, strides: usize },
    #[error("stride {stride} does not divide the {width}x{height} image")]
    StrideDoesNotDivide { stride: u32, width: u32, height: u32 },
    #[error("k-means needs at least k = {k} samples, got {n}")]
    TooFewSamples { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    /// Anchor side length at scale 1 for each pyramid level (px).
    pub base_sizes: Vec<f64>,
    /// Height / width ratios.
    pub aspect_ratios: Vec<f64>,
    pub scale_multipliers: Vec<f64>,
}

impl AnchorConfig {
    /// The five-level detector layout with the original scale set {2^0, 2^(1/3), 2^(2/3)}.
    pub fn standard() -> Self {
        Self {
            base_sizes: vec![32.0, 64.0, 128.0, 256.0, 512.0],
            aspect_ratios: vec![0.5, 1.0, 2.0],
            scale_multipliers: vec![1.0, 2f64.powf(1.0 / 3.0), 2f64.powf(2.0 / 3.0)],
        }
    }

    /// Same levels with the small-object scale set {2^-2, 2^-1, 2^0}.
    pub fn custom() -> Self {
        Self {
            scale_multipliers: vec![0.25, 0.5, 1.0],
            ..Self::standard()
        }
    }

    /// Strides paired with [`standard`](Self::standard) base sizes.
    pub fn standard_strides() -> Vec<u32> {
        vec![8, 16, 32, 64, 128]
    }

    pub fn anchors_per_cell(&self) -> usize {
        self.aspect_ratios.len() * self.scale_multipliers.len()
    }

    fn validate(&self) -> Result<(), AnchorError> {
        let all_positive = |v: &[f64]| !v.is_empty() && v.iter().all(|&x| x > 0.0 && x.is_finite());
        if all_positive(&self.base_sizes) && all_positive(&self.aspect_ratios) && all_positive(&self.scale_multipliers)
        {
            Ok(())
        } else {
            Err(AnchorError::EmptyConfig)
        }
    }
}

/// Centered anchors for every grid cell of every level.
///
/// Ordering is level-major, then row, column, aspect ratio and scale.
pub fn generate_anchors(
    config: &AnchorConfig,
    width: u32,
    height: u32,
    strides: &[u32],
) -> Result<Vec<BoundingBox>, AnchorError> {
    config.validate()?;
    if strides.len() != config.base_sizes.len() {
        return Err(AnchorError::StrideMismatch {
            levels: config.base_sizes.len(),
            strides: strides.len(),
        });
    }
    let mut anchors = Vec::new();
    for (&base, &stride) in config.base_sizes.iter().zip(strides) {
        if stride == 0 || !width.is_multiple_of(stride) || !height.is_multiple_of(stride) {
            return Err(AnchorError::StrideDoesNotDivide { stride, width, height });
        }
        let shapes: Vec<(f64, f64)> = config
            .aspect_ratios
            .iter()
            .flat_map(|&ratio| {
                config.scale_multipliers.iter().map(move |&scale| {
                    let side = base * scale;
                    (side / ratio.sqrt(), side * ratio.sqrt())
                })
            })
            .collect();
        let s = stride as f64;
        for row in 0..height / stride {
            for col in 0..width / stride {
                let cx = (col as f64 + 0.5) * s;
                let cy = (row as f64 + 0.5) * s;
                anchors.extend(shapes.iter().map(|&(w, h)| BoundingBox::from_center(cx, cy, w, h)));
            }
        }
    }
    Ok(anchors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtStatus {
    /// At least one anchor is matched to the box.
    Assigned { anchor: usize },
    /// Some anchor overlaps in the ignore band but none is matched.
    Ignored,
    /// No anchor reaches the ignore band.
    BackgroundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentReport {
    pub total_gt: usize,
    pub assigned: usize,
    pub ignored: usize,
    pub background_only: usize,
    pub coverage: f64,
}

impl AssignmentReport {
    fn from_status(status: &[GtStatus]) -> Self {
        let mut r = Self {
            total_gt: status.len(),
            assigned: 0,
            ignored: 0,
            background_only: 0,
            coverage: 0.0,
        };
        for s in status {
            match s {
                GtStatus::Assigned { .. } => r.assigned += 1,
                GtStatus::Ignored => r.ignored += 1,
                GtStatus::BackgroundOnly => r.background_only += 1,
            }
        }
        if r.total_gt > 0 {
            r.coverage = r.assigned as f64 / r.total_gt as f64;
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub report: AssignmentReport,
    pub gt_status: Vec<GtStatus>,
    /// Anchors excluded from the loss (ignore band, or non-best overlaps for the best-match rule).
    pub ignored_anchors: Vec<usize>,
}

/// Dual-threshold rule: an anchor goes to its best ground truth when the IOU
/// is at least 0.5, is ignored in `[0.4, 0.5)` and is background below 0.4.
pub fn assign_retinanet(gt: &[BoundingBox], anchors: &[BoundingBox]) -> Assignment {
    let mut best_anchor: Vec<Option<(usize, f64)>> = vec![None; gt.len()];
    let mut max_iou = vec![0.0f64; gt.len()];
    let mut ignored_anchors = Vec::new();

    for (ai, anchor) in anchors.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gt.iter().enumerate() {
            let v = iou(anchor, g);
            if v > max_iou[gi] {
                max_iou[gi] = v;
            }
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        match best {
            Some((gi, v)) if v >= POSITIVE_IOU => {
                if best_anchor[gi].is_none_or(|(_, b)| v > b) {
                    best_anchor[gi] = Some((ai, v));
                }
            }
            Some((_, v)) if v >= NEGATIVE_IOU => ignored_anchors.push(ai),
            _ => {}
        }
    }

    let gt_status: Vec<GtStatus> = best_anchor
        .iter()
        .zip(&max_iou)
        .map(|(m, &mx)| match m {
            Some((anchor, _)) => GtStatus::Assigned { anchor: *anchor },
            None if mx >= NEGATIVE_IOU => GtStatus::Ignored,
            None => GtStatus::BackgroundOnly,
        })
        .collect();
    Assignment {
        report: AssignmentReport::from_status(&gt_status),
        gt_status,
        ignored_anchors,
    }
}

/// Best-match rule: every ground truth takes its highest-IOU anchor; other
/// anchors overlapping it above 0.5 are ignored.
pub fn assign_yolo(gt: &[BoundingBox], anchors: &[BoundingBox]) -> Assignment {
    let mut gt_status = Vec::with_capacity(gt.len());
    let mut best_for_any = vec![false; anchors.len()];
    let mut high_overlap = vec![false; anchors.len()];
    for g in gt {
        let mut best: Option<(usize, f64)> = None;
        for (ai, anchor) in anchors.iter().enumerate() {
            let v = iou(anchor, g);
            if v > POSITIVE_IOU {
                high_overlap[ai] = true;
            }
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((ai, v));
            }
        }
        gt_status.push(match best {
            Some((anchor, _)) => {
                best_for_any[anchor] = true;
                GtStatus::Assigned { anchor }
            }
            None => GtStatus::BackgroundOnly,
        });
    }
    let ignored_anchors = (0..anchors.len())
        .filter(|&i| high_overlap[i] && !best_for_any[i])
        .collect();
    Assignment {
        report: AssignmentReport::from_status(&gt_status),
        gt_status,
        ignored_anchors,
    }
}

/// Dual-threshold coverage summed over several images of the same size.
pub fn dataset_coverage(
    images: &[Vec<BoundingBox>],
    config: &AnchorConfig,
    width: u32,
    height: u32,
    strides: &[u32],
) -> Result<AssignmentReport, AnchorError> {
    let anchors = generate_anchors(config, width, height, strides)?;
    let status: Vec<GtStatus> = images
        .iter()
        .flat_map(|gt| assign_retinanet(gt, &anchors).gt_status)
        .collect();
    Ok(AssignmentReport::from_status(&status))
}

/// IOU of two boxes sharing their top-left corner.
pub fn shape_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = a.0.min(b.0) * a.1.min(b.1);
    let union = a.0 * a.1 + b.0 * b.1 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Mean `1 - IOU` from each shape to its nearest centroid.
pub fn kmeans_objective(shapes: &[(f64, f64)], centroids: &[(f64, f64)]) -> f64 {
    if shapes.is_empty() {
        return 0.0;
    }
    let total: f64 = shapes.iter().map(|&s| nearest(s, centroids).1).sum();
    total / shapes.len() as f64
}

fn nearest(s: (f64, f64), centroids: &[(f64, f64)]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &c) in centroids.iter().enumerate() {
        let d = 1.0 - shape_iou(s, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// `(w, h)` centroids sorted by area, ascending.
    pub anchors: Vec<(f64, f64)>,
    /// Objective after initialization and after every iteration.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

const KMEANS_MAX_ITERS: usize = 300;

/// Clusters ground-truth shapes with distance `1 - IOU` and component-wise
/// median updates. Stops once neither centroids nor labels change.
pub fn kmeans_anchors(gt: &[BoundingBox], k: usize, seed: u64) -> Result<KMeansResult, AnchorError> {
    if k == 0 || gt.len() < k {
        return Err(AnchorError::TooFewSamples { k, n: gt.len() });
    }
    let shapes: Vec<(f64, f64)> = gt.iter().map(|b| (b.width(), b.height())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init: Vec<usize> = sample(&mut rng, shapes.len(), k).into_vec();
    init.sort_unstable();
    let mut centroids: Vec<(f64, f64)> = init.iter().map(|&i| shapes[i]).collect();

    let mut history = vec![kmeans_objective(&shapes, &centroids)];
    let mut labels: Vec<usize> = shapes.iter().map(|&s| nearest(s, &centroids).0).collect();
    let mut iterations = 0;

    for _ in 0..KMEANS_MAX_ITERS {
        iterations += 1;
        let mut changed = false;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<(f64, f64)> = labels
                .iter()
                .zip(&shapes)
                .filter(|(&l, _)| l == c)
                .map(|(_, &s)| s)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut ws: Vec<f64> = members.iter().map(|s| s.0).collect();
            let mut hs: Vec<f64> = members.iter().map(|s| s.1).collect();
            let candidate = (median(&mut ws), median(&mut hs));
            if candidate != *centroid {
                *centroid = candidate;
                changed = true;
            }
        }
        let new_labels: Vec<usize> = shapes.iter().map(|&s| nearest(s, &centroids).0).collect();
        changed |= new_labels != labels;
        labels = new_labels;
        history.push(kmeans_objective(&shapes, &centroids));
        if !changed {
            break;
        }
    }

    centroids.sort_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)));
    Ok(KMeansResult {
        anchors: centroids,
        objective_history: history,
        iterations,
    })
}
