//! Dataset manifests, stratified splitting, kNN classification and scoring,
//! plus a small synthetic texture generator for smoke tests.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::RasterImage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
}

/// Labeled image list, read from and written to `path,label` CSV.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ManifestRow {
    path: String,
    label: String,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = DatasetManifest { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.path) {
                return Err(Error::InvalidDataset(format!("duplicate path {}", e.path.display())));
            }
        }
        Ok(())
    }

    /// Distinct labels in sorted order.
    pub fn classes(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Reads a manifest; relative paths are taken relative to the manifest's
    /// directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut reader = csv::Reader::from_path(path)?;
        let mut entries = Vec::new();
        for row in reader.deserialize() {
            let row: ManifestRow = row?;
            let p = PathBuf::from(row.path.trim());
            entries.push(ManifestEntry {
                path: if p.is_absolute() { p } else { base.join(p) },
                label: row.label.trim().to_string(),
            });
        }
        DatasetManifest::new(entries)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(ManifestRow {
                path: e.path.to_string_lossy().into_owned(),
                label: e.label.clone(),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stratified split: per class (in sorted label order), `round(count ·
/// test_fraction)` entries picked by a seeded shuffle go to the test side.
/// Both sides keep manifest order. Returns `(train, test)` index lists.
pub fn split_indices(labels: &[String], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 classes, found {}",
            by_class.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; labels.len()];
    for (label, mut idx) in by_class {
        if idx.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "class {label:?} has {} sample(s), need at least 2",
                idx.len()
            )));
        }
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        idx.shuffle(&mut rng);
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| is_test[i]);
    Ok((train, test))
}

pub fn split(manifest: &DatasetManifest, test_fraction: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    let labels: Vec<String> = manifest.entries.iter().map(|e| e.label.clone()).collect();
    let (train, test) = split_indices(&labels, test_fraction, seed)?;
    let pick = |idx: Vec<usize>| DatasetManifest {
        entries: idx.into_iter().map(|i| manifest.entries[i].clone()).collect(),
    };
    Ok((pick(train), pick(test)))
}

/// A feature vector with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub label: String,
    pub features: Vec<f64>,
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Majority vote among the `k` nearest training vectors (Euclidean).
///
/// Equidistant neighbors are ranked by training order. Vote ties go to the
/// label with the smaller mean neighbor distance, then to the
/// lexicographically smaller label.
pub fn knn_classify(train: &[Labeled], query: &[f64], k: usize) -> Result<String> {
    if k == 0 || k > train.len() {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={}, got {k}",
            train.len()
        )));
    }
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.len());
    for (i, t) in train.iter().enumerate() {
        if t.features.len() != query.len() {
            return Err(Error::DimensionMismatch {
                expected: query.len(),
                actual: t.features.len(),
            });
        }
        dist.push((squared_euclidean(&t.features, query), i));
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.sort_by(cmp);

    // label -> (votes, summed distance)
    let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for &(d2, i) in &dist {
        let e = tally.entry(train[i].label.as_str()).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += d2.sqrt();
    }
    let best = tally
        .into_iter()
        .min_by(|(la, (va, sa)), (lb, (vb, sb))| {
            vb.cmp(va)
                .then((sa / *va as f64).total_cmp(&(sb / *vb as f64)))
                .then(la.cmp(lb))
        })
        .expect("k >= 1");
    Ok(best.0.to_string())
}

pub fn micro_accuracy(predictions: &[String], truth: &[String]) -> Result<f64> {
    if predictions.len() != truth.len() || truth.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: truth.len().max(1),
            actual: predictions.len(),
        });
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Outcome of one or more train/test evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro_accuracy: f64,
    /// Row = true class, column = predicted class, both in `classes` order.
    pub confusion: Vec<Vec<usize>>,
    pub classes: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    pub k: usize,
    pub seed: u64,
    /// Accuracy of each repeat; the first repeat fills the fields above.
    pub repeat_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
}

pub fn confusion_matrix(classes: &[String], predictions: &[String], truth: &[String]) -> Vec<Vec<usize>> {
    let pos = |l: &String| classes.iter().position(|c| c == l);
    let mut m = vec![vec![0; classes.len()]; classes.len()];
    for (p, t) in predictions.iter().zip(truth) {
        if let (Some(pi), Some(ti)) = (pos(p), pos(t)) {
            m[ti][pi] += 1;
        }
    }
    m
}

/// Classifies every test vector against the training set.
pub fn evaluate(train: &[Labeled], test: &[Labeled], k: usize, seed: u64) -> Result<EvalReport> {
    use rayon::prelude::*;
    let predictions: Vec<String> = test
        .par_iter()
        .map(|q| knn_classify(train, &q.features, k))
        .collect::<Result<_>>()?;
    let truth: Vec<String> = test.iter().map(|t| t.label.clone()).collect();
    let acc = micro_accuracy(&predictions, &truth)?;
    let classes: Vec<String> = train
        .iter()
        .chain(test)
        .map(|l| l.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(EvalReport {
        micro_accuracy: acc,
        confusion: confusion_matrix(&classes, &predictions, &truth),
        classes,
        n_train: train.len(),
        n_test: test.len(),
        k,
        seed,
        repeat_accuracies: vec![acc],
        mean_accuracy: acc,
        std_accuracy: 0.0,
        config_digest: None,
    })
}

/// Repeats a seeded stratified split `repeats` times (seeds `seed`,
/// `seed + 1`, ...) over one pool of labeled vectors.
pub fn evaluate_split(
    samples: &[Labeled],
    test_fraction: f64,
    k: usize,
    seed: u64,
    repeats: usize,
) -> Result<EvalReport> {
    let labels: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    let mut report: Option<EvalReport> = None;
    let mut accs = Vec::with_capacity(repeats.max(1));
    for r in 0..repeats.max(1) {
        let (tr, te) = split_indices(&labels, test_fraction, seed.wrapping_add(r as u64))?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
        let rep = evaluate(&pick(&tr), &pick(&te), k, seed)?;
        accs.push(rep.micro_accuracy);
        report.get_or_insert(rep);
    }
    let mut report = report.expect("at least one repeat");
    let n = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / n;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    report.mean_accuracy = mean;
    report.std_accuracy = var.sqrt();
    report.repeat_accuracies = accs;
    Ok(report)
}

/// Built-in synthetic texture classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynthClass {
    HorizontalStripes,
    VerticalStripes,
    Checkerboard,
    UniformNoise,
}

impl SynthClass {
    pub const ALL: [SynthClass; 4] = [
        SynthClass::HorizontalStripes,
        SynthClass::VerticalStripes,
        SynthClass::Checkerboard,
        SynthClass::UniformNoise,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SynthClass::HorizontalStripes => "hstripes",
            SynthClass::VerticalStripes => "vstripes",
            SynthClass::Checkerboard => "checker",
            SynthClass::UniformNoise => "noise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    /// Stripe / square size in pixels.
    pub period: usize,
    /// Additive noise is uniform in `[-amplitude, amplitude]` gray levels (at most 10).
    pub noise_amplitude: u8,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            width: 128,
            height: 128,
            bands: 3,
            period: 8,
            noise_amplitude: 10,
        }
    }
}

const DARK: i32 = 70;
const BRIGHT: i32 = 180;

/// Renders one image of `class`; all randomness comes from `rng`.
pub fn synth_image(class: SynthClass, opts: &SynthOptions, rng: &mut impl Rng) -> Result<RasterImage> {
    let period = opts.period.max(1);
    let (px, py) = (rng.random_range(0..2 * period), rng.random_range(0..2 * period));
    let amp = opts.noise_amplitude.min(10) as i32;
    let mut bands = Vec::with_capacity(opts.bands);
    for _ in 0..opts.bands {
        let mut data = Vec::with_capacity(opts.width * opts.height);
        for y in 0..opts.height {
            for x in 0..opts.width {
                let on = |v: usize, phase: usize| ((v + phase) / period) % 2 == 1;
                let base = match class {
                    SynthClass::HorizontalStripes => if on(y, py) { BRIGHT } else { DARK },
                    SynthClass::VerticalStripes => if on(x, px) { BRIGHT } else { DARK },
                    SynthClass::Checkerboard => if on(x, px) ^ on(y, py) { BRIGHT } else { DARK },
                    SynthClass::UniformNoise => rng.random_range(0..=255),
                };
                let v = if class == SynthClass::UniformNoise || amp == 0 {
                    base
                } else {
                    base + rng.random_range(-amp..=amp)
                };
                data.push(v.clamp(0, 255) as u8);
            }
        }
        bands.push(crate::plane::Plane::from_vec(opts.width, opts.height, data));
    }
    RasterImage::new(bands)
}

/// A generated labeled image.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub label: String,
    pub image: RasterImage,
}

/// `n_per_class` images of each class, class-major, fully determined by `seed`.
pub fn synth_textures(
    classes: &[SynthClass],
    n_per_class: usize,
    opts: &SynthOptions,
    seed: u64,
) -> Result<Vec<SynthSample>> {
    if n_per_class < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 images per class, got {n_per_class}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(classes.len() * n_per_class);
    for &class in classes {
        for _ in 0..n_per_class {
            out.push(SynthSample {
                label: class.label().to_string(),
                image: synth_image(class, opts, &mut rng)?,
            });
        }
    }
    Ok(out)
}

/// Writes samples as PNGs under `dir` plus `dir/manifest.csv`.
pub fn write_synth_dataset(samples: &[SynthSample], dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(samples.len());
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    for s in samples {
        let n = counters.entry(&s.label).or_default();
        let name = format!("{}_{:04}.png", s.label, n);
        *n += 1;
        s.image.save(dir.join(&name))?;
        entries.push(ManifestEntry {
            path: PathBuf::from(name),
            label: s.label.clone(),
        });
    }
    let manifest = DatasetManifest::new(entries)?;
    manifest.write(dir.join("manifest.csv"))?;
    Ok(manifest)
}
