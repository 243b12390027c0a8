//! Gaze sample CSV: `subject_id,frame_index,lat_rad,lon_rad`, where `lat` is
//! the polar angle in `[0, π]` and `lon` the azimuth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::GazeSample;
use crate::sphere::SphereCoord;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    subject_id: String,
    frame_index: usize,
    lat_rad: f64,
    lon_rad: f64,
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn parse_gaze_csv(path: &Path, bytes: &[u8]) -> Result<Vec<GazeSample>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader.headers().map_err(|e| format_err(path, e))?.clone();
    let expected = ["subject_id", "frame_index", "lat_rad", "lon_rad"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(format_err(path, format!("expected header '{}'", expected.join(","))));
    }
    let mut out = Vec::new();
    for rec in reader.deserialize::<Row>() {
        let row = rec.map_err(|e| format_err(path, e))?;
        let coord = SphereCoord::new(row.lat_rad, row.lon_rad).map_err(|e| format_err(path, e))?;
        out.push(GazeSample {
            subject_id: row.subject_id,
            frame_index: row.frame_index,
            coord,
        });
    }
    Ok(out)
}

pub fn read_gaze_csv(path: &Path) -> Result<Vec<GazeSample>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_gaze_csv(path, &bytes)
}

pub fn gaze_csv_bytes(samples: &[GazeSample]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in samples {
        w.serialize(Row {
            subject_id: s.subject_id.clone(),
            frame_index: s.frame_index,
            lat_rad: s.coord.phi(),
            lon_rad: s.coord.theta(),
        })
        .map_err(|e| Error::invalid(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::invalid(e.to_string()))
}

pub fn write_gaze_csv(path: &Path, samples: &[GazeSample]) -> Result<()> {
    super::write_atomic(path, &gaze_csv_bytes(samples)?)
}
