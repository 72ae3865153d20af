//! Re-identification of geo-located detections: spatial likelihood from each
//! human's particle filter times a color-histogram appearance prior.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::particle_filter::{Estimate, GroundPoint, ParticleSet, PfConfig, PfError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReidError {
    #[error("mask selects no foreground pixels")]
    EmptyForeground,
    #[error("histogram layouts differ: {0:?} vs {1:?}")]
    LayoutMismatch(HistogramLayout, HistogramLayout),
    #[error("patch of {width}x{height} needs {expected} pixels, got {got}")]
    InvalidPatch {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("mask is {0}x{1} but patch is {2}x{3}")]
    MaskMismatch(usize, usize, usize, usize),
    #[error("invalid reid config: {0}")]
    InvalidConfig(String),
    #[error("no human with id {0}")]
    UnknownHuman(u64),
    #[error(transparent)]
    ParticleFilter(#[from] PfError),
}

/// Row-major RGB pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Patch {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ReidError> {
        let expected = width * height;
        if expected == 0 || pixels.len() != expected {
            return Err(ReidError::InvalidPatch {
                width,
                height,
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![rgb; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchMask {
    pub width: usize,
    pub height: usize,
    pub foreground: Vec<bool>,
}

impl PatchMask {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            foreground: vec![true; width * height],
        }
    }

    pub fn count(&self) -> usize {
        self.foreground.iter().filter(|&&f| f).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.foreground.len().max(1) as f64
    }
}

/// Centered ellipse with semi-axes `scale * (w/2, h/2)`, tested at pixel centers.
pub fn center_prior_mask(width: usize, height: usize, scale: f64) -> PatchMask {
    let mut foreground = vec![false; width * height];
    if scale > 0.0 {
        let (ax, ay) = (scale * width as f64 / 2.0, scale * height as f64 / 2.0);
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        for y in 0..height {
            for x in 0..width {
                let dx = (x as f64 + 0.5 - cx) / ax;
                let dy = (y as f64 + 0.5 - cy) / ay;
                foreground[y * width + x] = dx * dx + dy * dy <= 1.0;
            }
        }
    }
    PatchMask {
        width,
        height,
        foreground,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramLayout {
    pub hue_bins: usize,
    pub sat_bins: usize,
}

impl Default for HistogramLayout {
    fn default() -> Self {
        Self {
            hue_bins: 30,
            sat_bins: 32,
        }
    }
}

impl HistogramLayout {
    pub fn len(&self) -> usize {
        self.hue_bins * self.sat_bins
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, hue_deg: f64, sat: f64) -> usize {
        let h = ((hue_deg / 360.0 * self.hue_bins as f64) as usize).min(self.hue_bins - 1);
        let s = ((sat * self.sat_bins as f64) as usize).min(self.sat_bins - 1);
        h * self.sat_bins + s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorHistogram {
    pub layout: HistogramLayout,
    pub bins: Vec<f64>,
    pub total: f64,
    pub normalized: bool,
}

impl ColorHistogram {
    pub fn from_counts(layout: HistogramLayout, bins: Vec<f64>) -> Result<Self, ReidError> {
        if bins.len() != layout.len() {
            return Err(ReidError::InvalidConfig(format!(
                "{} bins do not fit a {}x{} layout",
                bins.len(),
                layout.hue_bins,
                layout.sat_bins
            )));
        }
        let total = bins.iter().sum();
        Ok(Self {
            layout,
            bins,
            total,
            normalized: false,
        })
    }

    pub fn normalize(&mut self) {
        if self.total > 0.0 {
            for b in &mut self.bins {
                *b /= self.total;
            }
            self.total = self.bins.iter().sum();
        }
        self.normalized = true;
    }
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    (hue, sat, max)
}

/// Normalized hue-saturation histogram over the foreground pixels.
pub fn histogram_of(
    patch: &Patch,
    mask: Option<&PatchMask>,
    layout: HistogramLayout,
) -> Result<ColorHistogram, ReidError> {
    if let Some(m) = mask {
        if m.width != patch.width || m.height != patch.height {
            return Err(ReidError::MaskMismatch(m.width, m.height, patch.width, patch.height));
        }
    }
    let mut bins = vec![0.0; layout.len()];
    let mut count = 0usize;
    for (i, px) in patch.pixels.iter().enumerate() {
        if mask.is_some_and(|m| !m.foreground[i]) {
            continue;
        }
        let (h, s, _) = rgb_to_hsv(*px);
        bins[layout.index(h, s)] += 1.0;
        count += 1;
    }
    if count == 0 {
        return Err(ReidError::EmptyForeground);
    }
    let mut hist = ColorHistogram::from_counts(layout, bins)?;
    hist.normalize();
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMetric {
    Correlation,
    ChiSquare,
    Intersection,
    Bhattacharyya,
}

impl HistogramMetric {
    pub const ALL: [HistogramMetric; 4] = [
        HistogramMetric::Correlation,
        HistogramMetric::ChiSquare,
        HistogramMetric::Intersection,
        HistogramMetric::Bhattacharyya,
    ];

    /// Maps a raw comparison value onto a similarity where larger means closer.
    pub fn to_similarity(self, value: f64) -> f64 {
        match self {
            HistogramMetric::Correlation | HistogramMetric::Intersection => value,
            HistogramMetric::ChiSquare => 1.0 / (1.0 + value),
            HistogramMetric::Bhattacharyya => 1.0 - value,
        }
    }
}

impl std::fmt::Display for HistogramMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HistogramMetric::Correlation => "correlation",
            HistogramMetric::ChiSquare => "chi_square",
            HistogramMetric::Intersection => "intersection",
            HistogramMetric::Bhattacharyya => "bhattacharyya",
        })
    }
}

pub fn compare(a: &ColorHistogram, b: &ColorHistogram, metric: HistogramMetric) -> Result<f64, ReidError> {
    if a.layout != b.layout || a.bins.len() != b.bins.len() {
        return Err(ReidError::LayoutMismatch(a.layout, b.layout));
    }
    let (x, y) = (&a.bins, &b.bins);
    Ok(match metric {
        HistogramMetric::Correlation => {
            let m = x.len() as f64;
            let mx = x.iter().sum::<f64>() / m;
            let my = y.iter().sum::<f64>() / m;
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for (p, q) in x.iter().zip(y) {
                let (dp, dq) = (p - mx, q - my);
                sxy += dp * dq;
                sxx += dp * dp;
                syy += dq * dq;
            }
            let denom = (sxx * syy).sqrt();
            if denom == 0.0 {
                if x == y {
                    1.0
                } else {
                    0.0
                }
            } else {
                sxy / denom
            }
        }
        HistogramMetric::ChiSquare => x
            .iter()
            .zip(y)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| (p - q) * (p - q) / p)
            .sum(),
        HistogramMetric::Intersection => x.iter().zip(y).map(|(p, q)| p.min(*q)).sum(),
        HistogramMetric::Bhattacharyya => {
            let coeff: f64 = x.iter().zip(y).map(|(p, q)| (p * q).sqrt()).sum();
            // sqrt(mean_a * mean_b * M^2) == sqrt(sum_a * sum_b)
            let norm = (x.iter().sum::<f64>() * y.iter().sum::<f64>()).sqrt();
            if norm == 0.0 {
                1.0
            } else {
                (1.0 - coeff / norm).max(0.0).sqrt()
            }
        }
    })
}

/// All four metrics of `query` against each reference, in [`HistogramMetric::ALL`] order.
pub fn similarity_table(query: &ColorHistogram, refs: &[ColorHistogram]) -> Result<Vec<[f64; 4]>, ReidError> {
    refs.iter()
        .map(|r| {
            let mut row = [0.0; 4];
            for (slot, m) in row.iter_mut().zip(HistogramMetric::ALL) {
                *slot = compare(query, r, m)?;
            }
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReidConfig {
    pub t_redetect: f64,
    pub sigmoid_scale: f64,
    pub sigmoid_center: f64,
    pub metric: HistogramMetric,
    pub max_references: usize,
    pub mask_scale: f64,
    pub layout: HistogramLayout,
}

impl Default for ReidConfig {
    fn default() -> Self {
        Self {
            t_redetect: 1e-4,
            sigmoid_scale: 0.25,
            sigmoid_center: 0.5,
            metric: HistogramMetric::Intersection,
            max_references: 5,
            mask_scale: 0.8,
            layout: HistogramLayout::default(),
        }
    }
}

impl ReidConfig {
    pub fn validate(&self) -> Result<(), ReidError> {
        if !(self.t_redetect > 0.0 && self.t_redetect < 1.0) {
            return Err(ReidError::InvalidConfig("t_redetect must lie in (0, 1)".into()));
        }
        if !(self.sigmoid_scale > 0.0) {
            return Err(ReidError::InvalidConfig("sigmoid_scale must be positive".into()));
        }
        if self.max_references == 0 {
            return Err(ReidError::InvalidConfig("max_references must be >= 1".into()));
        }
        if self.layout.is_empty() {
            return Err(ReidError::InvalidConfig("histogram layout has no bins".into()));
        }
        Ok(())
    }
}

/// Logistic map of a similarity onto `(0, 1)`.
pub fn appearance_prior(sim: f64, cfg: &ReidConfig) -> f64 {
    1.0 / (1.0 + (-(sim - cfg.sigmoid_center) / cfg.sigmoid_scale).exp())
}

/// Density of `z` under `N(mean, covariance + sigma_z^2 I)`.
pub fn spatial_likelihood(z: GroundPoint, est: &Estimate, sigma_z: f64) -> f64 {
    let r = sigma_z * sigma_z;
    let (a, b, d) = (est.covariance[0][0] + r, est.covariance[0][1], est.covariance[1][1] + r);
    let det = a * d - b * b;
    let (dx, dy) = (z.x - est.mean.x, z.y - est.mean.y);
    let maha = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
    (-0.5 * maha).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

#[derive(Debug, Clone)]
pub struct HumanRecord {
    pub human_id: u64,
    pub filter: ParticleSet,
    pub references: VecDeque<ColorHistogram>,
    pub last_seen_frame: u64,
    pub last_seen_time: f64,
}

impl HumanRecord {
    pub fn estimate(&self) -> Estimate {
        self.filter.estimate()
    }

    /// Best similarity of `h` against the stored references, if any.
    pub fn best_similarity(&self, h: &ColorHistogram, metric: HistogramMetric) -> Result<Option<f64>, ReidError> {
        let mut best: Option<f64> = None;
        for r in &self.references {
            let s = metric.to_similarity(compare(h, r, metric)?);
            best = Some(best.map_or(s, |b| b.max(s)));
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReidObservation {
    pub location: GroundPoint,
    pub timestamp: f64,
    pub frame: u64,
    pub histogram: Option<ColorHistogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub human_id: u64,
    pub likelihood: f64,
    pub prior: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub human_id: u64,
    pub is_new: bool,
    pub candidates: Vec<CandidateScore>,
    /// Normalized posterior over candidates (empty when no score is positive).
    pub posterior: Vec<f64>,
}

/// Outcome of thresholding per-candidate scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    New,
    Existing(usize),
}

/// New unless some score reaches `t_redetect`; otherwise the argmax, ties to the lower index.
pub fn decide(scores: &[f64], t_redetect: f64) -> Decision {
    if scores.iter().all(|&s| s < t_redetect) {
        return Decision::New;
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Decision::Existing(best)
}

pub fn posterior(scores: &[f64]) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter().map(|s| s / total).collect()
    } else {
        Vec::new()
    }
}

/// Registry of known humans; single writer per run.
#[derive(Debug, Clone)]
pub struct HumanRegistry {
    pub humans: Vec<HumanRecord>,
    pub reid: ReidConfig,
    pub pf: PfConfig,
    seed: u64,
    next_id: u64,
}

impl HumanRegistry {
    pub fn new(reid: ReidConfig, pf: PfConfig, seed: u64) -> Result<Self, ReidError> {
        reid.validate()?;
        pf.validate()?;
        Ok(Self {
            humans: Vec::new(),
            reid,
            pf,
            seed,
            next_id: 1,
        })
    }

    pub fn get(&self, id: u64) -> Option<&HumanRecord> {
        self.humans.iter().find(|h| h.human_id == id)
    }

    /// Scores every known human against `obs` without mutating anything.
    pub fn score(&self, obs: &ReidObservation) -> Result<Vec<CandidateScore>, ReidError> {
        self.humans
            .iter()
            .map(|h| {
                let mut predicted = h.filter.clone();
                predicted.advance_to(obs.timestamp, &self.pf)?;
                let likelihood = spatial_likelihood(obs.location, &predicted.estimate(), self.pf.sigma_z);
                let prior = match &obs.histogram {
                    Some(hist) => match h.best_similarity(hist, self.reid.metric)? {
                        Some(sim) => appearance_prior(sim, &self.reid),
                        None => 0.5,
                    },
                    None => 0.5,
                };
                Ok(CandidateScore {
                    human_id: h.human_id,
                    likelihood,
                    prior,
                    score: likelihood * prior,
                })
            })
            .collect()
    }

    /// Assigns `obs` to a known human (updating its filter) or creates a new one.
    pub fn associate(&mut self, obs: &ReidObservation) -> Result<Association, ReidError> {
        let candidates = self.score(obs)?;
        let scores: Vec<f64> = candidates.iter().map(|c| c.score).collect();
        let post = posterior(&scores);
        match decide(&scores, self.reid.t_redetect) {
            Decision::Existing(i) => {
                let human_id = self.humans[i].human_id;
                self.observe(human_id, obs)?;
                Ok(Association {
                    human_id,
                    is_new: false,
                    candidates,
                    posterior: post,
                })
            }
            Decision::New => {
                let id = self.create(obs)?;
                Ok(Association {
                    human_id: id,
                    is_new: true,
                    candidates,
                    posterior: post,
                })
            }
        }
    }

    /// Feeds an observation already known to belong to `human_id` into its record.
    ///
    /// A filter whose weights collapse is re-initialized at the observation.
    pub fn observe(&mut self, human_id: u64, obs: &ReidObservation) -> Result<(), ReidError> {
        let pf = self.pf;
        let max_refs = self.reid.max_references;
        let seed = self.seed;
        let h = self
            .humans
            .iter_mut()
            .find(|h| h.human_id == human_id)
            .ok_or(ReidError::UnknownHuman(human_id))?;
        match h.filter.update(obs.location, obs.timestamp, &pf) {
            Ok(()) => {}
            Err(PfError::DegenerateWeights) => {
                h.filter = ParticleSet::init_stream(obs.location, &pf, seed, h.human_id)?;
                h.filter.timestamp = Some(obs.timestamp);
            }
            Err(e) => return Err(e.into()),
        }
        if let Some(hist) = &obs.histogram {
            h.references.push_back(hist.clone());
            while h.references.len() > max_refs {
                h.references.pop_front();
            }
        }
        h.last_seen_frame = obs.frame;
        h.last_seen_time = obs.timestamp;
        Ok(())
    }

    fn create(&mut self, obs: &ReidObservation) -> Result<u64, ReidError> {
        let id = self.next_id;
        self.next_id += 1;
        let mut filter = ParticleSet::init_stream(obs.location, &self.pf, self.seed, id)?;
        filter.timestamp = Some(obs.timestamp);
        self.humans.push(HumanRecord {
            human_id: id,
            filter,
            references: obs.histogram.iter().cloned().collect(),
            last_seen_frame: obs.frame,
            last_seen_time: obs.timestamp,
        });
        Ok(id)
    }
}
