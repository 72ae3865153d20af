//! Frame-to-frame identity maintenance.
//!
//! [`Tracker`] is the contract downstream stages rely on: every detection of a
//! frame receives exactly one human ID, IDs are never reused, and frames are
//! processed in increasing order. [`IouTracker`] is the detection-only baseline
//! behind it: greedy IOU association against constant-velocity predictions,
//! optionally compensated for camera motion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::{iou, BoundingBox, Detection};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error("frame {frame} is not after the last processed frame {last}")]
    NonMonotonicFrame { frame: u64, last: u64 },
    #[error("invalid tracker config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub downsample_factor: f64,
    pub iou_gate: f64,
    pub max_missed_frames: u64,
    pub frame_rate_hz: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            downsample_factor: 2.0,
            iou_gate: 0.3,
            max_missed_frames: 8,
            frame_rate_hz: 4.0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackingError> {
        if !(self.downsample_factor >= 1.0) {
            return Err(TrackingError::InvalidConfig("downsample_factor must be >= 1".into()));
        }
        if !(self.iou_gate > 0.0 && self.iou_gate < 1.0) {
            return Err(TrackingError::InvalidConfig("iou_gate must lie in (0, 1)".into()));
        }
        if !(self.frame_rate_hz > 0.0) {
            return Err(TrackingError::InvalidConfig("frame_rate_hz must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackState {
    Active,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackObservation {
    pub frame: u64,
    pub bbox: BoundingBox,
    pub score: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub human_id: u64,
    pub observations: Vec<TrackObservation>,
    pub state: TrackState,
    pub frames_since_seen: u64,
    /// Last observed box carried through ego-motion only (downsampled coordinates).
    carried: BoundingBox,
    /// Residual center velocity, downsampled px per second.
    velocity: (f64, f64),
}

impl Track {
    pub fn last(&self) -> &TrackObservation {
        self.observations.last().expect("tracks always hold an observation")
    }
}

pub fn downsample_bbox(b: &BoundingBox, factor: f64) -> BoundingBox {
    b.scale(1.0 / factor)
}

pub fn upsample_bbox(b: &BoundingBox, factor: f64) -> BoundingBox {
    b.scale(factor)
}

/// Per-frame identity assignment.
pub trait Tracker {
    /// Associates the detections of `frame`, returning one human ID per detection.
    fn step(&mut self, detections: &[Detection], frame: u64) -> Result<Vec<u64>, TrackingError>;

    /// Like [`step`](Self::step), with `motion` mapping boxes from the previous
    /// processed frame into the current one (camera ego-motion).
    fn step_with_motion(
        &mut self,
        detections: &[Detection],
        frame: u64,
        motion: &dyn Fn(&BoundingBox) -> BoundingBox,
    ) -> Result<Vec<u64>, TrackingError>;

    fn tracks(&self) -> &[Track];
}

#[derive(Debug, Clone)]
pub struct IouTracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    last_frame: Option<u64>,
    next_id: u64,
}

impl IouTracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackingError> {
        config.validate()?;
        Ok(Self {
            config,
            tracks: Vec::new(),
            last_frame: None,
            next_id: 1,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn into_tracks(self) -> Vec<Track> {
        self.tracks
    }
}

impl Tracker for IouTracker {
    fn step(&mut self, detections: &[Detection], frame: u64) -> Result<Vec<u64>, TrackingError> {
        self.step_with_motion(detections, frame, &|b| *b)
    }

    fn step_with_motion(
        &mut self,
        detections: &[Detection],
        frame: u64,
        motion: &dyn Fn(&BoundingBox) -> BoundingBox,
    ) -> Result<Vec<u64>, TrackingError> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(TrackingError::NonMonotonicFrame { frame, last });
            }
        }
        let factor = self.config.downsample_factor;
        let rate = self.config.frame_rate_hz;

        for t in self.tracks.iter_mut().filter(|t| t.state == TrackState::Active) {
            t.carried = downsample_bbox(&motion(&upsample_bbox(&t.carried, factor)), factor);
        }
        let predicted: Vec<BoundingBox> = self
            .tracks
            .iter()
            .map(|t| {
                let dt = frame.saturating_sub(t.last().frame) as f64 / rate;
                t.carried.translate(t.velocity.0 * dt, t.velocity.1 * dt)
            })
            .collect();

        let dets_small: Vec<BoundingBox> = detections.iter().map(|d| downsample_bbox(&d.bbox, factor)).collect();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            if t.state != TrackState::Active {
                continue;
            }
            for (di, d) in dets_small.iter().enumerate() {
                let v = iou(&predicted[ti], d);
                if v >= self.config.iou_gate {
                    pairs.push((v, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut det_track: Vec<Option<usize>> = vec![None; detections.len()];
        let mut track_used = vec![false; self.tracks.len()];
        for (_, ti, di) in pairs {
            if !track_used[ti] && det_track[di].is_none() {
                track_used[ti] = true;
                det_track[di] = Some(ti);
            }
        }

        let mut ids = Vec::with_capacity(detections.len());
        for (di, d) in detections.iter().enumerate() {
            let obs = TrackObservation {
                frame,
                bbox: d.bbox,
                score: d.score,
                timestamp: d.timestamp,
            };
            match det_track[di] {
                Some(ti) => {
                    let t = &mut self.tracks[ti];
                    let prev = t.last();
                    let dt = (frame - prev.frame) as f64 / rate;
                    // Residual motion left over after ego-motion compensation.
                    let (pcx, pcy) = t.carried.center();
                    let (ocx, ocy) = dets_small[di].center();
                    t.velocity = ((ocx - pcx) / dt, (ocy - pcy) / dt);
                    t.carried = dets_small[di];
                    t.frames_since_seen = 0;
                    t.observations.push(obs);
                    ids.push(t.human_id);
                }
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    self.tracks.push(Track {
                        human_id: id,
                        observations: vec![obs],
                        state: TrackState::Active,
                        frames_since_seen: 0,
                        carried: dets_small[di],
                        velocity: (0.0, 0.0),
                    });
                    track_used.push(true);
                    ids.push(id);
                }
            }
        }

        for (t, used) in self.tracks.iter_mut().zip(&track_used) {
            if !used && t.state == TrackState::Active {
                t.frames_since_seen = frame - t.last().frame;
                if t.frames_since_seen >= self.config.max_missed_frames {
                    t.state = TrackState::Lost;
                }
            }
        }
        self.last_frame = Some(frame);
        Ok(ids)
    }

    fn tracks(&self) -> &[Track] {
        &self.tracks
    }
}
