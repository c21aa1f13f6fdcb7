//! On-disk formats: feature records (JSON lines / CSV), measure planes as
//! PGM or CSV, and code images as CSV.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::descriptor::{FeatureVector, Segment};
use crate::lbp::CodeImage;
use crate::plane::Plane;

/// One extracted image as written to a feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
    pub config_digest: String,
    pub vector: Vec<f64>,
}

impl FeatureRecord {
    pub fn new(path: String, label: Option<String>, config_digest: String, fv: &FeatureVector) -> Self {
        FeatureRecord {
            path,
            label,
            config_digest,
            vector: fv.values.clone(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

/// CSV header: `path,label,config_digest` then one column per bin.
pub fn csv_header(layout: &[Segment]) -> Vec<String> {
    let mut cols = vec!["path".to_string(), "label".into(), "config_digest".into()];
    cols.extend(layout.iter().flat_map(|s| (0..s.bins).map(move |b| s.column_name(b))));
    cols
}

pub fn csv_row(record: &FeatureRecord) -> Vec<String> {
    let mut row = vec![
        record.path.clone(),
        record.label.clone().unwrap_or_default(),
        record.config_digest.clone(),
    ];
    row.extend(record.vector.iter().map(|v| v.to_string()));
    row
}

/// Min-max scaling to `[0, 255]`; a flat plane maps to all zeros.
pub fn scale_to_gray(plane: &Plane<f64>) -> Vec<u8> {
    let (lo, hi) = plane
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    plane
        .as_slice()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Binary (P5) portable graymap of the min-max scaled plane.
pub fn write_pgm(plane: &Plane<f64>, mut w: impl Write) -> io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", plane.width(), plane.height())?;
    w.write_all(&scale_to_gray(plane))
}

/// One CSV row per image row, raw values.
pub fn write_plane_csv(plane: &Plane<f64>, mut w: impl Write) -> io::Result<()> {
    for row in plane.as_slice().chunks(plane.width()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// One CSV row per image row; masked pixels are written as `-1`.
pub fn write_code_csv(codes: &CodeImage, mut w: impl Write) -> io::Result<()> {
    let width = codes.codes.width();
    for (row, mask) in codes.codes.as_slice().chunks(width).zip(codes.valid.as_slice().chunks(width)) {
        let line: Vec<String> = row
            .iter()
            .zip(mask)
            .map(|(c, &ok)| if ok { c.to_string() } else { "-1".into() })
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
