use std::path::Path;

use anyhow::{bail, Context, Result};
use cnlbp::DescriptorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

/// Effective run settings: descriptor config plus harness knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub descriptor: DescriptorConfig,
    pub workers: usize,
    pub seed: u64,
    pub format: Format,
    pub test_fraction: f64,
    pub k: usize,
    pub repeats: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            descriptor: DescriptorConfig::default(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            seed: 0,
            format: Format::Jsonl,
            test_fraction: 0.3,
            k: 5,
            repeats: 1,
        }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "workers" => self.workers = v.parse().context("workers")?,
            "seed" => self.seed = v.parse().context("seed")?,
            "test_fraction" => self.test_fraction = v.parse().context("test_fraction")?,
            "k" => self.k = v.parse().context("k")?,
            "repeats" => self.repeats = v.parse().context("repeats")?,
            "format" => {
                self.format = match v {
                    "jsonl" => Format::Jsonl,
                    "csv" => Format::Csv,
                    other => bail!("unknown format {other:?}"),
                }
            }
            other => self.descriptor.set(other, v)?,
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("{}:{}: expected key=value", path.display(), n + 1);
            };
            self.set(k, v)
                .with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    /// Effective settings in the same `key=value` form the loader reads.
    pub fn canonical(&self) -> String {
        let format = match self.format {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        };
        format!(
            "{}seed={}\ntest_fraction={}\nk={}\nrepeats={}\nformat={}\n",
            self.descriptor.canonical(),
            self.seed,
            self.test_fraction,
            self.k,
            self.repeats,
            format
        )
    }
}
