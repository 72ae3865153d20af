//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Boxes cross the boundary as flat `[x_min, y_min, x_max, y_max, ...]`
//! arrays; structured results come back as JSON strings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use aerial_sar::anchors::{assign_retinanet, generate_anchors, AnchorConfig, GtStatus};
use aerial_sar::bbox::{BoundingBox, Detection, Spectrum};
use aerial_sar::fusion::{plain_iou_match, sliding_window_match, window_placements, WindowConfig};
use aerial_sar::particle_filter::{GroundPoint, ParticleSet, PfConfig, ResamplePolicy};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn boxes(flat: &[f64]) -> Result<Vec<BoundingBox>, String> {
    if !flat.len().is_multiple_of(4) {
        return Err(format!("box array length {} is not a multiple of 4", flat.len()));
    }
    flat.chunks_exact(4)
        .map(|c| {
            if c.iter().all(|v| v.is_finite()) {
                Ok(BoundingBox::new(c[0], c[1], c[2], c[3]))
            } else {
                Err(format!("non-finite box {c:?}"))
            }
        })
        .collect()
}

fn flatten(b: &BoundingBox) -> [f64; 4] {
    [b.x_min, b.y_min, b.x_max, b.y_max]
}

#[wasm_bindgen]
pub struct ParticleFilter {
    set: ParticleSet,
    cfg: PfConfig,
    t: f64,
}

#[wasm_bindgen]
impl ParticleFilter {
    /// Starts a filter around the first measurement at time 0.
    #[wasm_bindgen(constructor)]
    pub fn new(x: f64, y: f64, sigma_z: f64, v_max: f64, n: usize, seed: u64) -> Result<ParticleFilter, String> {
        let cfg = PfConfig {
            sigma_z,
            v_max,
            n,
            resample: ResamplePolicy::EveryUpdate,
        };
        let mut set = ParticleSet::init(GroundPoint::new(x, y), &cfg, seed).map_err(|e| e.to_string())?;
        set.advance_to(0.0, &cfg).map_err(|e| e.to_string())?;
        Ok(Self { set, cfg, t: 0.0 })
    }

    /// Moves time forward by `dt` and applies a measurement.
    pub fn observe(&mut self, dt: f64, x: f64, y: f64) -> Result<(), String> {
        self.t += dt.max(0.0);
        self.set
            .update(GroundPoint::new(x, y), self.t, &self.cfg)
            .map_err(|e| e.to_string())
    }

    /// Moves time forward without a measurement; the cloud spreads.
    pub fn predict(&mut self, dt: f64) -> Result<(), String> {
        self.t += dt.max(0.0);
        self.set.advance_to(self.t, &self.cfg).map_err(|e| e.to_string())
    }

    /// Interleaved `[x0, y0, x1, y1, ...]`.
    pub fn particles(&self) -> Vec<f64> {
        self.set.particles.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.set.weights.clone()
    }

    /// `[mean_x, mean_y, var_x, cov_xy, var_y]`.
    pub fn estimate(&self) -> Vec<f64> {
        let e = self.set.estimate();
        vec![
            e.mean.x,
            e.mean.y,
            e.covariance[0][0],
            e.covariance[0][1],
            e.covariance[1][1],
        ]
    }

    pub fn time(&self) -> f64 {
        self.t
    }
}

/// Matches a mapped optical box against thermal candidates, with and without
/// the sliding window.
#[wasm_bindgen]
pub fn window_match(
    mapped: &[f64],
    candidates: &[f64],
    grid: usize,
    region_scale: f64,
    iou_threshold: f64,
) -> Result<String, String> {
    let mapped = match boxes(mapped)?.as_slice() {
        [b] => *b,
        _ => return Err("mapped must hold exactly one box".into()),
    };
    if grid == 0 || !(region_scale >= 1.0) || !(0.0..=1.0).contains(&iou_threshold) {
        return Err("need grid >= 1, region_scale >= 1 and iou_threshold in [0, 1]".into());
    }
    let cfg = WindowConfig {
        grid,
        region_scale,
        iou_threshold,
    };
    let dets: Vec<Detection> = boxes(candidates)?
        .into_iter()
        .map(|b| Detection::new(b, 1.0, Spectrum::Thermal, 0, 0.0))
        .collect();
    let m = sliding_window_match(&mapped, &dets, &cfg);
    let plain = plain_iou_match(&mapped, &dets, iou_threshold);
    Ok(json!({
        "matched": m.matched,
        "iou": m.iou_at_match,
        "region": flatten(&m.window),
        "placement": m.placement.as_ref().map(flatten),
        "placements": window_placements(&mapped, &cfg).iter().map(flatten).collect::<Vec<_>>(),
        "plain_matched": plain.map(|p| p.0),
        "plain_iou": plain.map_or(0.0, |p| p.1),
    })
    .to_string())
}

/// Dual-threshold anchor assignment of ground-truth boxes in a `width` x `height` image.
#[wasm_bindgen]
pub fn anchor_coverage(gt: &[f64], width: u32, height: u32, custom_scales: bool) -> Result<String, String> {
    let gt = boxes(gt)?;
    let cfg = if custom_scales {
        AnchorConfig::custom()
    } else {
        AnchorConfig::standard()
    };
    let anchors =
        generate_anchors(&cfg, width, height, &AnchorConfig::standard_strides()).map_err(|e| e.to_string())?;
    let a = assign_retinanet(&gt, &anchors);
    let status: Vec<_> = a
        .gt_status
        .iter()
        .map(|s| match s {
            GtStatus::Assigned { anchor } => json!({ "status": "assigned", "anchor": flatten(&anchors[*anchor]) }),
            GtStatus::Ignored => json!({ "status": "ignored" }),
            GtStatus::BackgroundOnly => json!({ "status": "background" }),
        })
        .collect();
    Ok(json!({ "report": a.report, "anchors": anchors.len(), "boxes": status }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_follows_a_walker() {
        let mut pf = ParticleFilter::new(0.0, 0.0, 1.0, 1.2, 200, 3).unwrap();
        for k in 1..=20 {
            pf.observe(0.25, 0.1 * k as f64, 0.0).unwrap();
        }
        let e = pf.estimate();
        assert!((e[0] - 2.0).abs() < 1.0 && e[1].abs() < 1.0, "{e:?}");
        assert_eq!(pf.particles().len(), 400);
        assert!((pf.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prediction_spreads_the_cloud() {
        let mut pf = ParticleFilter::new(0.0, 0.0, 1.0, 1.2, 300, 1).unwrap();
        let before = pf.estimate()[2];
        pf.predict(2.0).unwrap();
        assert!(pf.estimate()[2] > before);
    }

    #[test]
    fn bad_filter_config_is_an_error() {
        assert!(ParticleFilter::new(0.0, 0.0, -1.0, 1.2, 10, 0).is_err());
        assert!(ParticleFilter::new(0.0, 0.0, 1.0, 1.2, 0, 0).is_err());
    }

    #[test]
    fn window_recovers_offset_box() {
        let mapped = [100.0, 100.0, 120.0, 140.0];
        let shifted = [116.0, 100.0, 136.0, 140.0];
        let v: serde_json::Value =
            serde_json::from_str(&window_match(&mapped, &shifted, 6, 3.0, 0.5).unwrap()).unwrap();
        assert_eq!(v["matched"], 0);
        assert!(v["plain_matched"].is_null());
        assert!(v["placements"].as_array().unwrap().len() >= 36);
    }

    #[test]
    fn window_rejects_malformed_input() {
        assert!(window_match(&[0.0, 0.0, 1.0], &[], 6, 3.0, 0.5).is_err());
        assert!(window_match(&[0.0, 0.0, 1.0, 1.0], &[], 0, 3.0, 0.5).is_err());
        assert!(window_match(&[f64::NAN, 5.0, 1.0, 1.0], &[], 6, 3.0, 0.5).is_err());
    }

    #[test]
    fn small_boxes_need_custom_scales() {
        let gt = [300.0, 200.0, 310.0, 212.0, 40.0, 40.0, 52.0, 50.0];
        let cov = |custom| {
            let v: serde_json::Value = serde_json::from_str(&anchor_coverage(&gt, 640, 512, custom).unwrap()).unwrap();
            v["report"]["assigned"].as_u64().unwrap()
        };
        assert!(cov(true) > cov(false));
    }
}
