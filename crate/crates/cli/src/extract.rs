use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cnlbp::export::{csv_header, csv_row, FeatureRecord};
use cnlbp::{extract, load_image, DatasetManifest, FeatureVector};
use rayon::prelude::*;

use crate::settings::{Format, Settings};

/// An input image with an optional class label.
#[derive(Debug, Clone)]
pub struct Input {
    pub path: PathBuf,
    pub label: Option<String>,
}

pub fn inputs_from(paths: &[PathBuf], manifest: Option<&Path>) -> Result<Vec<Input>> {
    let mut inputs: Vec<Input> = paths
        .iter()
        .map(|p| Input {
            path: p.clone(),
            label: None,
        })
        .collect();
    if let Some(m) = manifest {
        let m = DatasetManifest::read(m).with_context(|| format!("reading manifest {}", m.display()))?;
        inputs.extend(m.entries.into_iter().map(|e| Input {
            path: e.path,
            label: Some(e.label),
        }));
    }
    Ok(inputs)
}

/// Extracts every input in parallel; results keep input order.
pub fn extract_all(inputs: &[Input], settings: &Settings) -> Vec<cnlbp::Result<FeatureVector>> {
    inputs
        .par_iter()
        .map(|inp| load_image(&inp.path).and_then(|img| extract(&img, &settings.descriptor)))
        .collect()
}

pub fn error_log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".errors.log");
    PathBuf::from(s)
}

pub fn config_echo_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

/// Writes the feature file. Per-image failures go to `<out>.errors.log` and
/// do not stop the batch. Returns `(written, failed)`.
pub fn run(inputs: &[Input], settings: &Settings, out: &Path) -> Result<(usize, usize)> {
    let digest = settings.descriptor.digest();
    let results = extract_all(inputs, settings);

    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut errors = Vec::new();
    let mut written = 0;
    match settings.format {
        Format::Jsonl => {
            let mut w = BufWriter::new(file);
            for (inp, res) in inputs.iter().zip(results) {
                match res {
                    Ok(fv) => {
                        let rec = FeatureRecord::new(display(&inp.path), inp.label.clone(), digest.clone(), &fv);
                        writeln!(w, "{}", rec.to_json_line())?;
                        written += 1;
                    }
                    Err(e) => errors.push(format!("{}\t{e}", inp.path.display())),
                }
            }
            w.flush()?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(file);
            let mut header_len = None;
            for (inp, res) in inputs.iter().zip(results) {
                let fv = match res {
                    Ok(fv) => fv,
                    Err(e) => {
                        errors.push(format!("{}\t{e}", inp.path.display()));
                        continue;
                    }
                };
                match header_len {
                    None => {
                        w.write_record(csv_header(&fv.layout))?;
                        header_len = Some(fv.len());
                    }
                    Some(n) if n != fv.len() => {
                        errors.push(format!(
                            "{}\tvector length {} does not match the header ({n})",
                            inp.path.display(),
                            fv.len()
                        ));
                        continue;
                    }
                    Some(_) => {}
                }
                let rec = FeatureRecord::new(display(&inp.path), inp.label.clone(), digest.clone(), &fv);
                w.write_record(csv_row(&rec))?;
                written += 1;
            }
            w.flush()?;
        }
    }

    std::fs::write(config_echo_path(out), settings.canonical())?;
    let log = error_log_path(out);
    if errors.is_empty() {
        if log.exists() {
            std::fs::remove_file(&log)?;
        }
    } else {
        std::fs::write(&log, errors.join("\n") + "\n")?;
        for e in &errors {
            eprintln!("warning: {e}");
        }
    }
    Ok((written, errors.len()))
}

fn display(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}
