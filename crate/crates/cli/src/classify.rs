use std::path::Path;

use anyhow::{bail, Context, Result};
use cnlbp::eval::{evaluate, evaluate_split};
use cnlbp::{EvalReport, Labeled};

use crate::extract::{extract_all, inputs_from, Input};
use crate::settings::Settings;

fn labeled(inputs: &[Input], settings: &Settings) -> Result<Vec<Labeled>> {
    extract_all(inputs, settings)
        .into_iter()
        .zip(inputs)
        .map(|(res, inp)| {
            let fv = res.with_context(|| format!("extracting {}", inp.path.display()))?;
            Ok(Labeled {
                label: inp.label.clone().expect("manifest entries carry labels"),
                features: fv.values,
            })
        })
        .collect()
}

/// kNN evaluation on a held-out manifest, or on seeded stratified splits of
/// the training manifest when no test manifest is given.
pub fn run(train: &Path, test: Option<&Path>, settings: &Settings) -> Result<EvalReport> {
    let train_inputs = inputs_from(&[], Some(train))?;
    let train_set = labeled(&train_inputs, settings)?;
    let mut report = match test {
        Some(t) => {
            if settings.k > train_set.len() {
                bail!("k = {} exceeds the {} training samples", settings.k, train_set.len());
            }
            let test_set = labeled(&inputs_from(&[], Some(t))?, settings)?;
            evaluate(&train_set, &test_set, settings.k, settings.seed)?
        }
        None => {
            let n_train = train_set.len() - (train_set.len() as f64 * settings.test_fraction).round() as usize;
            if settings.k > n_train {
                bail!("k = {} exceeds the roughly {n_train} training samples left after the split", settings.k);
            }
            evaluate_split(&train_set, settings.test_fraction, settings.k, settings.seed, settings.repeats)?
        }
    };
    report.config_digest = Some(settings.descriptor.digest());
    Ok(report)
}
