//! On-disk formats: JSONL records, YAML calibration, CSV poses, histograms and particle dumps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::{BoundingBox, Detection, Spectrum};
use crate::evaluation::{Annotation, Posture};
use crate::fusion::{FusionError, RigExtrinsics};
use crate::geometry::{CameraIntrinsics, GeometryError, Pose};
use crate::particle_filter::ParticleSet;
use crate::reid::{ColorHistogram, HistogramLayout};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("calibration: {0}")]
    Calibration(String),
}

impl IoError {
    pub fn line(&self) -> Option<usize> {
        match self {
            IoError::Parse { line, .. } | IoError::Schema { line, .. } => Some(*line),
            _ => None,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            IoError::Schema { field, .. } => Some(field),
            _ => None,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| IoError::File {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Semantic checks beyond what deserialization enforces; returns the offending field.
pub trait Record: Serialize + DeserializeOwned {
    fn check(&self) -> Result<(), (&'static str, String)> {
        Ok(())
    }
}

fn check_version(v: u32) -> Result<(), (&'static str, String)> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(("schema_version", format!("unsupported version {v}")))
    }
}

fn check_bbox(b: &[f64; 4]) -> Result<(), (&'static str, String)> {
    if !b.iter().all(|v| v.is_finite()) {
        return Err(("bbox", "non-finite coordinate".into()));
    }
    if b[2] < b[0] || b[3] < b[1] {
        return Err(("bbox", "expected [x_min, y_min, x_max, y_max] with min <= max".into()));
    }
    Ok(())
}

/// Parses one JSON object per non-blank line; line numbers are 1-based.
pub fn read_jsonl<T: Record, R: BufRead>(reader: R) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let rec: T = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "record".to_string() } else { path };
            IoError::Schema {
                line: line_no,
                field,
                message: e.into_inner().to_string(),
            }
        })?;
        rec.check().map_err(|(field, message)| IoError::Schema {
            line: line_no,
            field: field.into(),
            message,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, records: &[T]) -> Result<(), IoError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_jsonl_file<T: Record>(path: &Path) -> Result<Vec<T>, IoError> {
    read_jsonl(open(path)?)
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    write_jsonl(create(path)?, records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub schema_version: u32,
    pub frame: u64,
    pub t: f64,
    pub spectrum: Spectrum,
    pub bbox: [f64; 4],
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
}

impl Record for DetectionRecord {
    fn check(&self) -> Result<(), (&'static str, String)> {
        check_version(self.schema_version)?;
        check_bbox(&self.bbox)?;
        if !self.t.is_finite() {
            return Err(("t", "non-finite timestamp".into()));
        }
        if !self.score.is_finite() {
            return Err(("score", "non-finite score".into()));
        }
        Ok(())
    }
}

impl From<&Detection> for DetectionRecord {
    fn from(d: &Detection) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            frame: d.frame,
            t: d.timestamp,
            spectrum: d.spectrum,
            bbox: [d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max],
            score: d.score,
            id: d.human_id,
        }
    }
}

impl From<&DetectionRecord> for Detection {
    fn from(r: &DetectionRecord) -> Self {
        let [x0, y0, x1, y1] = r.bbox;
        Detection {
            bbox: BoundingBox::new(x0, y0, x1, y1),
            score: r.score,
            spectrum: r.spectrum,
            frame: r.frame,
            timestamp: r.t,
            human_id: r.id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub schema_version: u32,
    pub frame: u64,
    pub bbox: [f64; 4],
    pub human_id: u64,
    pub posture: Posture,
    pub occluded: bool,
}

impl Record for AnnotationRecord {
    fn check(&self) -> Result<(), (&'static str, String)> {
        check_version(self.schema_version)?;
        check_bbox(&self.bbox)
    }
}

impl From<&Annotation> for AnnotationRecord {
    fn from(a: &Annotation) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            frame: a.frame,
            bbox: [a.bbox.x_min, a.bbox.y_min, a.bbox.x_max, a.bbox.y_max],
            human_id: a.human_id,
            posture: a.posture,
            occluded: a.occluded,
        }
    }
}

impl From<&AnnotationRecord> for Annotation {
    fn from(r: &AnnotationRecord) -> Self {
        let [x0, y0, x1, y1] = r.bbox;
        Annotation {
            frame: r.frame,
            bbox: BoundingBox::new(x0, y0, x1, y1),
            human_id: r.human_id,
            posture: r.posture,
            occluded: r.occluded,
        }
    }
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>, IoError> {
    Ok(read_jsonl_file::<DetectionRecord>(path)?
        .iter()
        .map(Detection::from)
        .collect())
}

pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<(), IoError> {
    let recs: Vec<DetectionRecord> = dets.iter().map(DetectionRecord::from).collect();
    write_jsonl_file(path, &recs)
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>, IoError> {
    Ok(read_jsonl_file::<AnnotationRecord>(path)?
        .iter()
        .map(Annotation::from)
        .collect())
}

pub fn write_annotations(path: &Path, anns: &[Annotation]) -> Result<(), IoError> {
    let recs: Vec<AnnotationRecord> = anns.iter().map(AnnotationRecord::from).collect();
    write_jsonl_file(path, &recs)
}

/// Source of annotations in some dataset-specific layout.
pub trait AnnotationImporter {
    fn name(&self) -> &str;
    fn import(&self, path: &Path) -> Result<Vec<Annotation>, IoError>;
}

/// The native JSONL annotation format.
#[derive(Debug, Clone, Copy, Default)]
pub struct JsonlImporter;

impl AnnotationImporter for JsonlImporter {
    fn name(&self) -> &str {
        "jsonl"
    }

    fn import(&self, path: &Path) -> Result<Vec<Annotation>, IoError> {
        read_annotations(path)
    }
}

/// Triangulated, area-checked position of a tracked detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    pub schema_version: u32,
    pub frame: u64,
    pub t: f64,
    pub track_id: u64,
    pub bbox: [f64; 4],
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub depth: f64,
    pub metric_area: f64,
    pub kept: bool,
}

impl Record for LocalizationRecord {
    fn check(&self) -> Result<(), (&'static str, String)> {
        check_version(self.schema_version)?;
        check_bbox(&self.bbox)
    }
}

/// Final identity decision for one localization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub schema_version: u32,
    pub frame: u64,
    pub t: f64,
    pub track_id: u64,
    pub human_id: u64,
    pub is_new: bool,
    pub x: f64,
    pub y: f64,
}

impl Record for IdentityRecord {
    fn check(&self) -> Result<(), (&'static str, String)> {
        check_version(self.schema_version)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub schema_version: u32,
    pub optical: CameraIntrinsics,
    pub thermal: CameraIntrinsics,
    /// Homogeneous transform taking optical-camera points into the thermal frame.
    pub t_thermal_optical: [[f64; 4]; 4],
    pub assumed_scene_depth: f64,
}

impl CalibrationFile {
    pub fn rig(&self) -> Result<RigExtrinsics, FusionError> {
        RigExtrinsics::from_matrix(self.t_thermal_optical, self.assumed_scene_depth)
    }

    pub fn validate(&self) -> Result<(), IoError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(IoError::Calibration(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let bad = |e: GeometryError| IoError::Calibration(e.to_string());
        self.optical.validate().map_err(bad)?;
        self.thermal.validate().map_err(bad)?;
        self.rig().map_err(|e| IoError::Calibration(e.to_string()))?;
        Ok(())
    }
}

pub fn read_calibration(path: &Path) -> Result<CalibrationFile, IoError> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s)?;
    parse_calibration(&s)
}

pub fn parse_calibration(s: &str) -> Result<CalibrationFile, IoError> {
    let de = serde_yaml::Deserializer::from_str(s);
    let cal: CalibrationFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let line = e.inner().location().map_or(0, |l| l.line());
        IoError::Schema {
            line,
            field: e.path().to_string(),
            message: e.into_inner().to_string(),
        }
    })?;
    cal.validate()?;
    Ok(cal)
}

pub fn write_calibration(path: &Path, cal: &CalibrationFile) -> Result<(), IoError> {
    let s = serde_yaml::to_string(cal).map_err(|e| IoError::Calibration(e.to_string()))?;
    create(path)?.write_all(s.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PoseRow {
    timestamp: f64,
    tx: f64,
    ty: f64,
    tz: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
}

fn csv_error(e: csv::Error) -> IoError {
    csv_error_named(e, None)
}

/// Resolves column indices to header names where available.
fn csv_error_named(e: csv::Error, headers: Option<&csv::StringRecord>) -> IoError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => IoError::Schema {
            line,
            field: match err.field() {
                Some(i) => headers
                    .and_then(|h| h.get(i as usize))
                    .map_or_else(|| format!("column {i}"), str::to_string),
                None => "record".to_string(),
            },
            message: err.to_string(),
        },
        csv::ErrorKind::Io(_) => IoError::Io(std::io::Error::other(e.to_string())),
        _ => IoError::Parse {
            line,
            message: e.to_string(),
        },
    }
}

/// Poses as `timestamp,tx,ty,tz,qw,qx,qy,qz` rows (camera-to-world).
pub fn read_poses<R: Read>(reader: R) -> Result<Vec<Pose>, IoError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<PoseRow>().enumerate() {
        let r = row.map_err(|e| csv_error_named(e, Some(&headers)))?;
        let pose = Pose::from_quaternion([r.tx, r.ty, r.tz], [r.qw, r.qx, r.qy, r.qz], r.timestamp).map_err(|e| {
            IoError::Schema {
                line: i + 2,
                field: "q".into(),
                message: e.to_string(),
            }
        })?;
        out.push(pose);
    }
    Ok(out)
}

pub fn write_poses<W: Write>(writer: W, poses: &[Pose]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    for p in poses {
        let q = p.quaternion();
        w.serialize(PoseRow {
            timestamp: p.timestamp,
            tx: p.translation.x,
            ty: p.translation.y,
            tz: p.translation.z,
            qw: q[0],
            qx: q[1],
            qy: q[2],
            qz: q[3],
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_poses_file(path: &Path) -> Result<Vec<Pose>, IoError> {
    read_poses(open(path)?)
}

pub fn write_poses_file(path: &Path, poses: &[Pose]) -> Result<(), IoError> {
    write_poses(create(path)?, poses)
}

/// Appearance histogram of the detection at `frame` / `bbox`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramEntry {
    pub frame: u64,
    pub bbox: BoundingBox,
    pub histogram: ColorHistogram,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HistogramRow {
    frame: u64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    hue_bins: usize,
    sat_bins: usize,
    /// Space-separated bin values, hue-major.
    bins: String,
}

pub fn read_histograms<R: Read>(reader: R) -> Result<Vec<HistogramEntry>, IoError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<HistogramRow>().enumerate() {
        let r = row.map_err(|e| csv_error_named(e, Some(&headers)))?;
        let line = i + 2;
        let schema = |message: String| IoError::Schema {
            line,
            field: "bins".into(),
            message,
        };
        let bins = r
            .bins
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| schema(e.to_string())))
            .collect::<Result<Vec<f64>, IoError>>()?;
        let layout = HistogramLayout {
            hue_bins: r.hue_bins,
            sat_bins: r.sat_bins,
        };
        let mut histogram = ColorHistogram::from_counts(layout, bins).map_err(|e| schema(e.to_string()))?;
        histogram.normalize();
        out.push(HistogramEntry {
            frame: r.frame,
            bbox: BoundingBox::new(r.x_min, r.y_min, r.x_max, r.y_max),
            histogram,
        });
    }
    Ok(out)
}

pub fn write_histograms<W: Write>(writer: W, entries: &[HistogramEntry]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    for e in entries {
        let bins: Vec<String> = e.histogram.bins.iter().map(|b| b.to_string()).collect();
        w.serialize(HistogramRow {
            frame: e.frame,
            x_min: e.bbox.x_min,
            y_min: e.bbox.y_min,
            x_max: e.bbox.x_max,
            y_max: e.bbox.y_max,
            hue_bins: e.histogram.layout.hue_bins,
            sat_bins: e.histogram.layout.sat_bins,
            bins: bins.join(" "),
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_histograms_file(path: &Path) -> Result<Vec<HistogramEntry>, IoError> {
    read_histograms(open(path)?)
}

pub fn write_histograms_file(path: &Path, entries: &[HistogramEntry]) -> Result<(), IoError> {
    write_histograms(create(path)?, entries)
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct GtBoxRow {
    image: u64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

/// Ground-truth boxes as `image,x_min,y_min,x_max,y_max` rows, grouped by image ID (ascending).
pub fn read_gt_boxes<R: Read>(reader: R) -> Result<Vec<Vec<BoundingBox>>, IoError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut images: std::collections::BTreeMap<u64, Vec<BoundingBox>> = Default::default();
    for (i, row) in rdr.deserialize::<GtBoxRow>().enumerate() {
        let r = row.map_err(|e| csv_error_named(e, Some(&headers)))?;
        let b = BoundingBox {
            x_min: r.x_min,
            y_min: r.y_min,
            x_max: r.x_max,
            y_max: r.y_max,
        };
        if !b.is_valid() {
            return Err(IoError::Schema {
                line: i + 2,
                field: "x_min".into(),
                message: "box must be finite with min <= max".into(),
            });
        }
        images.entry(r.image).or_default().push(b);
    }
    Ok(images.into_values().collect())
}

pub fn read_gt_boxes_file(path: &Path) -> Result<Vec<Vec<BoundingBox>>, IoError> {
    read_gt_boxes(open(path)?)
}

/// Appends one particle set snapshot as `step,t,human_id,index,x,y,weight` rows.
pub fn write_particles<W: Write>(
    w: &mut csv::Writer<W>,
    step: usize,
    t: f64,
    human_id: u64,
    set: &ParticleSet,
) -> Result<(), IoError> {
    for (i, (p, wt)) in set.particles.iter().zip(&set.weights).enumerate() {
        w.write_record(&[
            step.to_string(),
            t.to_string(),
            human_id.to_string(),
            i.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            wt.to_string(),
        ])
        .map_err(csv_error)?;
    }
    Ok(())
}

pub fn particle_writer<W: Write>(writer: W) -> Result<csv::Writer<W>, IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "t", "human_id", "index", "x", "y", "weight"])
        .map_err(csv_error)?;
    Ok(w)
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>, IoError> {
    create(path)
}

pub fn write_string(path: &Path, s: &str) -> Result<(), IoError> {
    write_bytes(path, s.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut f = create(path)?;
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn round_trip<T: Record + PartialEq + std::fmt::Debug>(recs: &[T]) -> Vec<T> {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, recs).unwrap();
        read_jsonl(buf.as_slice()).unwrap()
    }

    #[test]
    fn detection_line_format() {
        let line = r#"{"schema_version":1,"frame":3,"t":0.75,"spectrum":"thermal","bbox":[1,2,3,4],"score":0.5}"#;
        let recs: Vec<DetectionRecord> = read_jsonl(line.as_bytes()).unwrap();
        assert_eq!(recs[0].spectrum, Spectrum::Thermal);
        assert_eq!(recs[0].id, None);
        let d = Detection::from(&recs[0]);
        assert_eq!(d.bbox, BoundingBox::new(1.0, 2.0, 3.0, 4.0));
        let mut out = Vec::new();
        write_jsonl(&mut out, &recs).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap().trim_end(),
            line.replace("[1,2,3,4]", "[1.0,2.0,3.0,4.0]")
        );
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let good =
            r#"{"schema_version":1,"frame":0,"bbox":[0,0,1,1],"human_id":1,"posture":"upright","occluded":false}"#;
        let mut text = String::new();
        for _ in 0..16 {
            text.push_str(good);
            text.push('\n');
        }
        text.push_str("{\"schema_version\":1,\"frame\":\n");
        let err = read_jsonl::<AnnotationRecord, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 17, .. }), "{err}");
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = r#"{"schema_version":1,"frame":0,"bbox":[0,0,1,1],"human_id":1,"posture":"flying","occluded":false}"#;
        let err = read_jsonl::<AnnotationRecord, _>(bad.as_bytes()).unwrap_err();
        assert_eq!(err.field(), Some("posture"));
        assert_eq!(err.line(), Some(1));

        let unordered = r#"{"schema_version":1,"frame":0,"t":0,"spectrum":"optical","bbox":[5,0,1,1],"score":0.5}"#;
        let err = read_jsonl::<DetectionRecord, _>(unordered.as_bytes()).unwrap_err();
        assert_eq!(err.field(), Some("bbox"));

        let version = r#"{"schema_version":9,"frame":0,"t":0,"spectrum":"optical","bbox":[0,0,1,1],"score":0.5}"#;
        let err = read_jsonl::<DetectionRecord, _>(version.as_bytes()).unwrap_err();
        assert_eq!(err.field(), Some("schema_version"));

        let spectrum = r#"{"schema_version":1,"frame":0,"t":0,"spectrum":"uv","bbox":[0,0,1,1],"score":0.5}"#;
        let err = read_jsonl::<DetectionRecord, _>(spectrum.as_bytes()).unwrap_err();
        assert_eq!(err.field(), Some("spectrum"));
    }

    fn calibration() -> CalibrationFile {
        CalibrationFile {
            schema_version: SCHEMA_VERSION,
            optical: CameraIntrinsics::pinhole(1000.0, 1000.0, 640.0, 512.0, 1280, 1024).unwrap(),
            thermal: CameraIntrinsics::new(400.0, 400.0, 320.0, 256.0, [0.01, -0.002, 0.0005, 0.0], 640, 512).unwrap(),
            t_thermal_optical: [
                [1.0, 0.0, 0.0, -0.05],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
            assumed_scene_depth: 100.0,
        }
    }

    #[test]
    fn calibration_round_trip_and_errors() {
        let cal = calibration();
        let text = serde_yaml::to_string(&cal).unwrap();
        let back = parse_calibration(&text).unwrap();
        assert_eq!(back, cal);
        assert_eq!(back.rig().unwrap().to_matrix(), cal.t_thermal_optical);

        let broken = text.replace("fx: 400.0", "fx: -4.0");
        assert!(matches!(parse_calibration(&broken), Err(IoError::Calibration(_))));
        let missing = text.replace("assumed_scene_depth: 100.0", "");
        let err = parse_calibration(&missing).unwrap_err();
        assert!(matches!(err, IoError::Schema { .. }), "{err}");
    }

    #[test]
    fn pose_csv_round_trip() {
        let poses = vec![
            Pose::nadir(nalgebra::Vector3::new(10.0, 20.0, 100.0), 0.0),
            Pose::from_quaternion([1.0, 2.0, 3.0], [0.9, 0.1, -0.2, 0.3], 0.25).unwrap(),
        ];
        let mut buf = Vec::new();
        write_poses(&mut buf, &poses).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp,tx,ty,tz,qw,qx,qy,qz\n"));
        let back = read_poses(buf.as_slice()).unwrap();
        for (a, b) in poses.iter().zip(&back) {
            assert_eq!(a.timestamp, b.timestamp);
            assert_eq!(a.translation, b.translation);
            assert!((a.rotation - b.rotation).abs().max() < 1e-12);
        }
        let err = read_poses("timestamp,tx,ty,tz,qw,qx,qy,qz\n0,1,2,x,1,0,0,0\n".as_bytes()).unwrap_err();
        assert_eq!(err.field(), Some("tz"));
    }

    #[test]
    fn histogram_csv_round_trip() {
        let layout = HistogramLayout {
            hue_bins: 2,
            sat_bins: 3,
        };
        let mut h = ColorHistogram::from_counts(layout, vec![1.0, 0.0, 2.0, 0.0, 0.0, 1.0]).unwrap();
        h.normalize();
        let entries = vec![HistogramEntry {
            frame: 4,
            bbox: BoundingBox::new(1.5, 2.0, 30.0, 60.25),
            histogram: h,
        }];
        let mut buf = Vec::new();
        write_histograms(&mut buf, &entries).unwrap();
        assert_eq!(read_histograms(buf.as_slice()).unwrap(), entries);
    }

    fn arb_detection_record() -> impl Strategy<Value = DetectionRecord> {
        (
            any::<u32>(),
            -1e6..1e6f64,
            any::<bool>(),
            (-1e4..1e4f64, -1e4..1e4f64, 0.0..1e3f64, 0.0..1e3f64),
            0.0..1.0f64,
            proptest::option::of(any::<u64>()),
        )
            .prop_map(|(frame, t, thermal, (x, y, w, h), score, id)| DetectionRecord {
                schema_version: SCHEMA_VERSION,
                frame: frame as u64,
                t,
                spectrum: if thermal { Spectrum::Thermal } else { Spectrum::Optical },
                bbox: [x, y, x + w, y + h],
                score,
                id,
            })
    }

    fn arb_annotation_record() -> impl Strategy<Value = AnnotationRecord> {
        (
            any::<u64>(),
            (-1e4..1e4f64, -1e4..1e4f64, 0.0..1e3f64, 0.0..1e3f64),
            any::<u64>(),
            0..3u8,
            any::<bool>(),
        )
            .prop_map(|(frame, (x, y, w, h), human_id, p, occluded)| AnnotationRecord {
                schema_version: SCHEMA_VERSION,
                frame,
                bbox: [x, y, x + w, y + h],
                human_id,
                posture: [Posture::Upright, Posture::Sitting, Posture::Lying][p as usize],
                occluded,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn thousand_records_round_trip(
            dets in proptest::collection::vec(arb_detection_record(), 1000),
            anns in proptest::collection::vec(arb_annotation_record(), 1000),
        ) {
            prop_assert_eq!(round_trip(&dets), dets);
            prop_assert_eq!(round_trip(&anns), anns);
        }
    }
}
