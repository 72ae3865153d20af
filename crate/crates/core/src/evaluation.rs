//! Detection scoring against annotations: per-frame matching, fppi/miss-rate
//! curves, per-ID miss rate and box-size breakdowns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::{iou, BoundingBox, Detection};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no ground-truth boxes to evaluate against")]
    EmptyGroundTruth,
    #[error("no frames to evaluate")]
    NoFrames,
    #[error("bin width must be positive, got {0}")]
    InvalidBinWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Posture {
    Upright,
    Sitting,
    Lying,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub frame: u64,
    pub bbox: BoundingBox,
    pub human_id: u64,
    pub posture: Posture,
    pub occluded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub iou_threshold: f64,
    pub exclude_occluded: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            exclude_occluded: false,
        }
    }
}

/// Outcome for one detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetOutcome {
    Tp(usize),
    Fp,
    /// Overlapped an excluded annotation; neither TP nor FP.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMatch {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Per annotation: matched, unmatched, or `None` when excluded.
    pub gt_matched: Vec<Option<bool>>,
    pub det_outcomes: Vec<DetOutcome>,
}

/// Greedy one-to-one matching: detections by descending score (ties to input
/// order), each to the still-unmatched annotation of highest IOU at or above
/// the threshold.
pub fn match_frame(dets: &[Detection], gts: &[Annotation], opts: &EvalOptions) -> FrameMatch {
    let excluded: Vec<bool> = gts.iter().map(|g| opts.exclude_occluded && g.occluded).collect();
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));

    let mut taken = vec![false; gts.len()];
    let mut det_outcomes = vec![DetOutcome::Fp; dets.len()];
    for di in order {
        let mut best: Option<(usize, f64)> = None;
        let mut hits_excluded = false;
        for (gi, g) in gts.iter().enumerate() {
            let v = iou(&dets[di].bbox, &g.bbox);
            if v < opts.iou_threshold {
                continue;
            }
            if excluded[gi] {
                hits_excluded = true;
                continue;
            }
            if taken[gi] {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((gi, v));
            }
        }
        det_outcomes[di] = match best {
            Some((gi, _)) => {
                taken[gi] = true;
                DetOutcome::Tp(gi)
            }
            None if hits_excluded => DetOutcome::Ignored,
            None => DetOutcome::Fp,
        };
    }
    let gt_matched: Vec<Option<bool>> = taken
        .iter()
        .zip(&excluded)
        .map(|(&t, &ex)| (!ex).then_some(t))
        .collect();
    FrameMatch {
        tp: det_outcomes.iter().filter(|o| matches!(o, DetOutcome::Tp(_))).count(),
        fp: det_outcomes.iter().filter(|o| **o == DetOutcome::Fp).count(),
        fn_: gt_matched.iter().filter(|m| **m == Some(false)).count(),
        gt_matched,
        det_outcomes,
    }
}

/// Detections and annotations of one image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalFrame {
    pub frame: u64,
    pub detections: Vec<Detection>,
    pub annotations: Vec<Annotation>,
}

/// Buckets records by frame; every frame mentioned by either side counts as an image.
pub fn group_frames(dets: &[Detection], anns: &[Annotation]) -> Vec<EvalFrame> {
    let mut by: BTreeMap<u64, EvalFrame> = BTreeMap::new();
    for d in dets {
        by.entry(d.frame)
            .or_insert_with(|| EvalFrame {
                frame: d.frame,
                ..Default::default()
            })
            .detections
            .push(*d);
    }
    for a in anns {
        by.entry(a.frame)
            .or_insert_with(|| EvalFrame {
                frame: a.frame,
                ..Default::default()
            })
            .annotations
            .push(*a);
    }
    by.into_values().collect()
}

fn above(dets: &[Detection], threshold: f64) -> Vec<Detection> {
    dets.iter().copied().filter(|d| d.score >= threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub frames: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Totals {
    pub fn gt(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn fppi(&self) -> f64 {
        self.fp as f64 / self.frames.max(1) as f64
    }

    pub fn missrate(&self) -> f64 {
        if self.gt() == 0 {
            0.0
        } else {
            self.fn_ as f64 / self.gt() as f64
        }
    }
}

pub fn totals_at(frames: &[EvalFrame], threshold: f64, opts: &EvalOptions) -> Totals {
    let mut t = Totals {
        frames: frames.len(),
        ..Default::default()
    };
    for f in frames {
        let m = match_frame(&above(&f.detections, threshold), &f.annotations, opts);
        t.tp += m.tp;
        t.fp += m.fp;
        t.fn_ += m.fn_;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub fppi: f64,
    pub missrate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    /// Ordered by ascending threshold.
    pub points: Vec<CurvePoint>,
    pub log_average_missrate: f64,
}

impl EvalCurve {
    /// Miss rate at the highest-fppi point not exceeding `max_fppi` (1.0 if none).
    pub fn missrate_at_fppi(&self, max_fppi: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.fppi <= max_fppi)
            .map(|p| p.missrate)
            .fold(1.0, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fppi,missrate\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{}", p.threshold, p.fppi, p.missrate);
        }
        s
    }
}

/// Every distinct detection score, ascending, followed by `+inf` (no detections).
pub fn score_thresholds(frames: &[EvalFrame]) -> Vec<f64> {
    let mut s: Vec<f64> = frames
        .iter()
        .flat_map(|f| f.detections.iter().map(|d| d.score))
        .collect();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s.push(f64::INFINITY);
    s
}

pub fn fppi_missrate_curve(
    frames: &[EvalFrame],
    thresholds: &[f64],
    opts: &EvalOptions,
) -> Result<EvalCurve, EvalError> {
    if frames.is_empty() {
        return Err(EvalError::NoFrames);
    }
    let mut ths = thresholds.to_vec();
    ths.sort_by(f64::total_cmp);
    ths.dedup();
    let mut points = Vec::with_capacity(ths.len());
    for th in ths {
        let t = totals_at(frames, th, opts);
        if t.gt() == 0 {
            return Err(EvalError::EmptyGroundTruth);
        }
        points.push(CurvePoint {
            threshold: th,
            fppi: t.fppi(),
            missrate: t.missrate(),
        });
    }
    if points.is_empty() {
        let t = totals_at(frames, f64::INFINITY, opts);
        if t.gt() == 0 {
            return Err(EvalError::EmptyGroundTruth);
        }
    }
    let log_average_missrate = log_average_missrate(&points);
    Ok(EvalCurve {
        points,
        log_average_missrate,
    })
}

/// Geometric mean of the miss rate sampled at 9 fppi references spaced evenly in log space over [0.01, 1].
pub fn log_average_missrate(points: &[CurvePoint]) -> f64 {
    let refs = (0..9).map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / 8.0));
    let curve = EvalCurve {
        points: points.to_vec(),
        log_average_missrate: f64::NAN,
    };
    let mean_log = refs.map(|r| curve.missrate_at_fppi(r).max(1e-10).ln()).sum::<f64>() / 9.0;
    mean_log.exp()
}

/// Fraction of human IDs with no true positive anywhere in the sequence.
pub fn per_id_missrate(frames: &[EvalFrame], threshold: f64, opts: &EvalOptions) -> Result<f64, EvalError> {
    let mut all = BTreeSet::new();
    let mut hit = BTreeSet::new();
    for f in frames {
        let m = match_frame(&above(&f.detections, threshold), &f.annotations, opts);
        for (a, matched) in f.annotations.iter().zip(&m.gt_matched) {
            match matched {
                Some(true) => {
                    all.insert(a.human_id);
                    hit.insert(a.human_id);
                }
                Some(false) => {
                    all.insert(a.human_id);
                }
                None => {}
            }
        }
    }
    if all.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    Ok((all.len() - hit.len()) as f64 / all.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBin {
    pub lo: f64,
    pub hi: f64,
    pub tp: usize,
    pub fn_: usize,
}

/// Annotations bucketed by pixel area `[k*w, (k+1)*w)`; only non-empty buckets are returned.
pub fn size_histogram(
    frames: &[EvalFrame],
    threshold: f64,
    bin_width: f64,
    opts: &EvalOptions,
) -> Result<Vec<SizeBin>, EvalError> {
    if !(bin_width > 0.0) {
        return Err(EvalError::InvalidBinWidth(bin_width));
    }
    let mut bins: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for f in frames {
        let m = match_frame(&above(&f.detections, threshold), &f.annotations, opts);
        for (a, matched) in f.annotations.iter().zip(&m.gt_matched) {
            let Some(hit) = matched else { continue };
            let e = bins.entry((a.bbox.area() / bin_width).floor() as u64).or_default();
            if *hit {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    Ok(bins
        .into_iter()
        .map(|(k, (tp, fn_))| SizeBin {
            lo: k as f64 * bin_width,
            hi: (k + 1) as f64 * bin_width,
            tp,
            fn_,
        })
        .collect())
}

/// Log-log miss rate versus fppi plot.
pub fn curve_svg(curves: &[(&str, &EvalCurve)]) -> String {
    let (w, h, m) = (560.0, 420.0, 60.0);
    let (x0, x1) = (-2.0f64, 1.0f64);
    let (y0, y1) = (-2.0f64, 0.0f64);
    let px = |f: f64| m + (f.max(1e-2).log10().clamp(x0, x1) - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |r: f64| h - m - (r.max(1e-2).log10().clamp(y0, y1) - y0) / (y1 - y0) * (h - 2.0 * m);
    let palette = ["#c0392b", "#2471a3", "#229954", "#7d3c98", "#b9770e"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for e in -2..=1 {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{m}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"##,
            h - m,
            h - m + 18.0
        );
    }
    for r in [0.01, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let y = py(r);
        let _ = writeln!(
            s,
            r##"<line x1="{m}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{r}</text>"##,
            w - m,
            m - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">false positives per image</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">miss rate</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, (label, c)) in curves.iter().enumerate() {
        let color = palette[i % palette.len()];
        let mut pts: Vec<&CurvePoint> = c.points.iter().collect();
        pts.sort_by(|a, b| a.fppi.total_cmp(&b.fppi).then(b.missrate.total_cmp(&a.missrate)));
        let path: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.1},{:.1}", px(p.fppi), py(p.missrate)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{:.1}% {}</text>"#,
            w - m - 150.0,
            m + 16.0 * (i as f64 + 1.0),
            100.0 * c.log_average_missrate,
            xml_escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::Spectrum;
    use proptest::prelude::*;

    fn det(b: BoundingBox, score: f64, frame: u64) -> Detection {
        Detection::new(b, score, Spectrum::Optical, frame, frame as f64 * 0.25)
    }

    fn gt(b: BoundingBox, id: u64, frame: u64) -> Annotation {
        Annotation {
            frame,
            bbox: b,
            human_id: id,
            posture: Posture::Upright,
            occluded: false,
        }
    }

    fn sq(x: f64, y: f64, s: f64) -> BoundingBox {
        BoundingBox::new(x, y, x + s, y + s)
    }

    #[test]
    fn match_examples() {
        let o = EvalOptions::default();
        let g = vec![gt(sq(0.0, 0.0, 10.0), 1, 0), gt(sq(50.0, 0.0, 10.0), 2, 0)];
        let d: Vec<Detection> = g.iter().map(|a| det(a.bbox, 0.9, 0)).collect();
        let m = match_frame(&d, &g, &o);
        assert_eq!((m.tp, m.fp, m.fn_), (2, 0, 0));

        let g = vec![gt(sq(0.0, 0.0, 10.0), 1, 0)];
        let d = vec![det(sq(0.0, 0.0, 10.0), 0.6, 0), det(sq(1.0, 0.0, 10.0), 0.9, 0)];
        let m = match_frame(&d, &g, &o);
        assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 0));
        assert_eq!(m.det_outcomes, vec![DetOutcome::Fp, DetOutcome::Tp(0)]);
    }

    #[test]
    fn occluded_exclusion_ignores_detections() {
        let mut a = gt(sq(0.0, 0.0, 10.0), 1, 0);
        a.occluded = true;
        let d = vec![det(sq(0.0, 0.0, 10.0), 0.9, 0), det(sq(80.0, 0.0, 10.0), 0.9, 0)];
        let o = EvalOptions {
            exclude_occluded: true,
            ..Default::default()
        };
        let m = match_frame(&d, &[a], &o);
        assert_eq!((m.tp, m.fp, m.fn_), (0, 1, 0));
        assert_eq!(m.det_outcomes[0], DetOutcome::Ignored);
        assert_eq!(m.gt_matched, vec![None]);
        let m = match_frame(&d, &[a], &EvalOptions::default());
        assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 0));
    }

    /// 10 annotations over 4 frames; 8 hit, 2 missed, 2 stray detections.
    pub(crate) fn hand_counted() -> Vec<EvalFrame> {
        let per_frame = [3usize, 3, 2, 2];
        let mut dets = Vec::new();
        let mut anns = Vec::new();
        let mut id = 0;
        for (f, &n) in per_frame.iter().enumerate() {
            let f = f as u64;
            for k in 0..n {
                id += 1;
                let b = sq(100.0 * k as f64, 0.0, 20.0);
                anns.push(gt(b, id, f));
                if !(f == 1 && k == 2) && !(f == 3 && k == 1) {
                    dets.push(det(b, 0.8, f));
                }
            }
        }
        dets.push(det(sq(500.0, 500.0, 20.0), 0.7, 0));
        dets.push(det(sq(500.0, 500.0, 20.0), 0.7, 2));
        group_frames(&dets, &anns)
    }

    #[test]
    fn hand_counted_curve_point() {
        let frames = hand_counted();
        let t = totals_at(&frames, 0.5, &EvalOptions::default());
        assert_eq!((t.frames, t.tp, t.fp, t.fn_), (4, 8, 2, 2));
        let c = fppi_missrate_curve(&frames, &[0.5], &EvalOptions::default()).unwrap();
        assert_eq!(c.points[0].fppi, 0.5);
        assert!((c.points[0].missrate - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_detections_curve() {
        let anns = vec![gt(sq(0.0, 0.0, 10.0), 1, 0), gt(sq(0.0, 0.0, 10.0), 1, 1)];
        let frames = group_frames(&[], &anns);
        let c = fppi_missrate_curve(&frames, &[0.0, 0.5, 1.0], &EvalOptions::default()).unwrap();
        assert!(c.points.iter().all(|p| p.missrate == 1.0 && p.fppi == 0.0));
        assert_eq!(c.log_average_missrate, 1.0);
        assert_eq!(
            fppi_missrate_curve(
                &group_frames(&[det(sq(0.0, 0.0, 5.0), 0.5, 0)], &[]),
                &[0.1],
                &EvalOptions::default()
            ),
            Err(EvalError::EmptyGroundTruth)
        );
        assert_eq!(
            fppi_missrate_curve(&[], &[0.1], &EvalOptions::default()),
            Err(EvalError::NoFrames)
        );
    }

    #[test]
    fn log_average_of_flat_curve() {
        let pts = vec![
            CurvePoint {
                threshold: 0.1,
                fppi: 2.0,
                missrate: 0.1,
            },
            CurvePoint {
                threshold: 0.5,
                fppi: 0.001,
                missrate: 0.25,
            },
        ];
        // Every reference fppi lies between the two points, so each samples 0.25.
        assert!((log_average_missrate(&pts) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn per_id_examples() {
        let o = EvalOptions::default();
        let mut anns = Vec::new();
        let mut dets = Vec::new();
        for id in 1..=10u64 {
            let b = sq(40.0 * id as f64, 0.0, 20.0);
            anns.push(gt(b, id, 0));
            if id <= 7 {
                dets.push(det(b, 0.9, 0));
            }
        }
        let frames = group_frames(&dets, &anns);
        assert!((per_id_missrate(&frames, 0.5, &o).unwrap() - 0.3).abs() < 1e-15);
        let all = group_frames(
            &anns.iter().map(|a| det(a.bbox, 0.9, a.frame)).collect::<Vec<_>>(),
            &anns,
        );
        assert_eq!(per_id_missrate(&all, 0.5, &o).unwrap(), 0.0);

        // ID 3 is present in frames 0..5 but only detected in the last one.
        let mut anns = Vec::new();
        let mut dets = Vec::new();
        for f in 0..5u64 {
            let b = sq(10.0 * f as f64, 0.0, 20.0);
            anns.push(gt(b, 3, f));
            if f == 4 {
                dets.push(det(b, 0.9, f));
            }
        }
        let frames = group_frames(&dets, &anns);
        assert_eq!(per_id_missrate(&frames, 0.5, &o).unwrap(), 0.0);
        assert_eq!(per_id_missrate(&[], 0.5, &o), Err(EvalError::EmptyGroundTruth));
    }

    #[test]
    fn size_histogram_examples() {
        let o = EvalOptions::default();
        let anns: Vec<Annotation> = (0..4).map(|i| gt(sq(40.0 * i as f64, 0.0, 30.0), i, 0)).collect();
        let frames = group_frames(&[], &anns);
        let h = size_histogram(&frames, 0.5, 500.0, &o).unwrap();
        assert_eq!(
            h,
            vec![SizeBin {
                lo: 500.0,
                hi: 1000.0,
                tp: 0,
                fn_: 4
            }]
        );
        assert!(size_histogram(&[], 0.5, 500.0, &o).unwrap().is_empty());
        assert!(size_histogram(&[], 0.5, 0.0, &o).is_err());

        let mut anns = Vec::new();
        let mut dets = Vec::new();
        for i in 0..6u64 {
            let small = sq(100.0 * i as f64, 0.0, 15.0);
            let large = sq(100.0 * i as f64, 100.0, 60.0);
            anns.push(gt(small, 2 * i, 0));
            anns.push(gt(large, 2 * i + 1, 0));
            dets.push(det(large, 0.9, 0));
        }
        let h = size_histogram(&group_frames(&dets, &anns), 0.5, 1000.0, &o).unwrap();
        let max_fn_bin = h.iter().filter(|b| b.fn_ > 0).map(|b| b.hi).fold(0.0, f64::max);
        let min_tp_bin = h
            .iter()
            .filter(|b| b.tp > 0)
            .map(|b| b.lo)
            .fold(f64::INFINITY, f64::min);
        assert!(max_fn_bin <= min_tp_bin);
    }

    #[test]
    fn svg_has_one_polyline_per_curve() {
        let frames = hand_counted();
        let c = fppi_missrate_curve(&frames, &score_thresholds(&frames), &EvalOptions::default()).unwrap();
        let svg = curve_svg(&[("a<b", &c), ("b", &c)]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }

    /// Maximum bipartite matching size by exhaustive search.
    pub(crate) fn brute_force_tp(dets: &[Detection], gts: &[Annotation], thr: f64) -> usize {
        fn go(i: usize, dets: &[Detection], gts: &[Annotation], used: &mut Vec<bool>, thr: f64) -> usize {
            if i == dets.len() {
                return 0;
            }
            let mut best = go(i + 1, dets, gts, used, thr);
            for g in 0..gts.len() {
                if !used[g] && iou(&dets[i].bbox, &gts[g].bbox) >= thr {
                    used[g] = true;
                    best = best.max(1 + go(i + 1, dets, gts, used, thr));
                    used[g] = false;
                }
            }
            best
        }
        go(0, dets, gts, &mut vec![false; gts.len()], thr)
    }

    fn arb_frame() -> impl Strategy<Value = (Vec<Detection>, Vec<Annotation>)> {
        let gts = proptest::collection::vec((0.0..80.0f64, 0.0..80.0f64, 10.0..30.0f64), 0..=6);
        let dets = proptest::collection::vec((0.0..80.0f64, 0.0..80.0f64, 10.0..30.0f64, 0.0..1.0f64), 0..=6);
        (gts, dets).prop_map(|(g, d)| {
            let anns = g
                .into_iter()
                .enumerate()
                .map(|(i, (x, y, s))| gt(sq(x, y, s), i as u64, 0))
                .collect();
            let dets = d.into_iter().map(|(x, y, s, sc)| det(sq(x, y, s), sc, 0)).collect();
            (dets, anns)
        })
    }

    proptest! {
        #[test]
        fn frame_counts_balance((dets, anns) in arb_frame()) {
            let m = match_frame(&dets, &anns, &EvalOptions::default());
            prop_assert_eq!(m.tp + m.fn_, anns.len());
            prop_assert_eq!(m.tp + m.fp, dets.len());
            let opt = brute_force_tp(&dets, &anns, 0.5);
            prop_assert!(m.tp <= opt && opt - m.tp <= 1);
        }

        #[test]
        fn fppi_monotone_in_threshold(frames in proptest::collection::vec(arb_frame(), 1..6)) {
            let frames: Vec<EvalFrame> = frames
                .into_iter()
                .enumerate()
                .map(|(f, (d, a))| EvalFrame { frame: f as u64, detections: d, annotations: a })
                .collect();
            let ths: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
            let fp: Vec<f64> = ths.iter().map(|&t| totals_at(&frames, t, &EvalOptions::default()).fppi()).collect();
            prop_assert!(fp.windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn curve_invariant_to_frame_order(frames in proptest::collection::vec(arb_frame(), 1..6)) {
            let mut frames: Vec<EvalFrame> = frames
                .into_iter()
                .enumerate()
                .map(|(f, (d, a))| EvalFrame { frame: f as u64, detections: d, annotations: a })
                .collect();
            prop_assume!(frames.iter().any(|f| !f.annotations.is_empty()));
            let ths = score_thresholds(&frames);
            let a = fppi_missrate_curve(&frames, &ths, &EvalOptions::default()).unwrap();
            frames.reverse();
            let b = fppi_missrate_curve(&frames, &ths, &EvalOptions::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
