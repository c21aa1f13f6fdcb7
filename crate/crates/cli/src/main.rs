//! `cnlbp`: batch CN-LBP descriptor extraction, graph inspection and kNN
//! evaluation.

mod classify;
mod extract;
mod inspect;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cnlbp::eval::{synth_textures, write_synth_dataset, SynthClass, SynthOptions};

use crate::settings::{Format, Settings};

#[derive(Debug, Parser)]
#[command(name = "cnlbp", version, about = "Complex-network LBP texture descriptors")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command; each has a `key=value` config twin.
#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key=value config file; flags override its values
    #[arg(long, global = true, env = "CNLBP_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Search radius in pixels
    #[arg(long, global = true)]
    q: Option<f64>,
    /// Similarity threshold
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Gradient-magnitude difference threshold
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Gradient-angle difference threshold in degrees
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    gray_levels: Option<f64>,
    /// Comma-separated P:R list, e.g. 8:1,16:2,24:3
    #[arg(long, global = true)]
    scales: Option<String>,
    /// Keep raw histogram counts
    #[arg(long, global = true)]
    no_normalize: bool,
    /// WxH or "none"
    #[arg(long, global = true)]
    resize: Option<String>,
    #[arg(long, global = true)]
    ec_tol: Option<f64>,
    #[arg(long, global = true)]
    ec_max_iter: Option<usize>,
    /// "in" or "out"
    #[arg(long, global = true)]
    ec_direction: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract feature vectors for images and/or a manifest
    Extract {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print graph size and degree statistics for one band
    GraphStats {
        image: PathBuf,
        #[arg(long, default_value_t = 0)]
        band: usize,
        /// Append the edge list
        #[arg(long)]
        dump: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export feature planes and code images
    Maps {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// kNN evaluation, writes a JSON report
    Classify {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the embedded oracle checks
    Selftest,
    /// Generate the synthetic texture set and its manifest
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 10)]
        noise: u8,
    },
}

fn settings_from(common: &CommonArgs) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &common.config {
        s.load_file(path)?;
    }
    let mut set = |key: &str, value: Option<String>| -> Result<()> {
        match value {
            Some(v) => s.set(key, &v).with_context(|| format!("--{}", key.replace('_', "-"))),
            None => Ok(()),
        }
    };
    set("workers", common.workers.map(|v| v.to_string()))?;
    set("seed", common.seed.map(|v| v.to_string()))?;
    set("q", common.q.map(|v| v.to_string()))?;
    set("r", common.r.map(|v| v.to_string()))?;
    set("s", common.s.map(|v| v.to_string()))?;
    set("t", common.t.map(|v| v.to_string()))?;
    set("gray_levels", common.gray_levels.map(|v| v.to_string()))?;
    set("scales", common.scales.clone())?;
    set("resize", common.resize.clone())?;
    set("ec_tol", common.ec_tol.map(|v| v.to_string()))?;
    set("ec_max_iter", common.ec_max_iter.map(|v| v.to_string()))?;
    set("ec_direction", common.ec_direction.clone())?;
    if common.no_normalize {
        s.descriptor.normalize = false;
    }
    s.descriptor.validate()?;
    Ok(s)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut settings = settings_from(&cli.common)?;
    match &cli.command {
        Command::Extract { format: Some(f), .. } => settings.format = *f,
        Command::Classify {
            test_fraction,
            k,
            repeats,
            ..
        } => {
            if let Some(v) = test_fraction {
                settings.test_fraction = *v;
            }
            if let Some(v) = k {
                settings.k = *v;
            }
            if let Some(v) = repeats {
                settings.repeats = *v;
            }
        }
        _ => {}
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers.max(1))
        .build()
        .context("building worker pool")?;

    pool.install(|| match cli.command {
        Command::Extract {
            inputs, manifest, out, ..
        } => {
            let inputs = extract::inputs_from(&inputs, manifest.as_deref())?;
            let (ok, failed) = extract::run(&inputs, &settings, &out)?;
            eprintln!("extracted {ok} image(s), {failed} failed -> {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::GraphStats { image, band, dump, out } => {
            let report = inspect::graph_stats(&image, band, &settings.descriptor, dump)?;
            match out {
                Some(p) => std::fs::write(&p, report).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{report}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Maps { image, out } => {
            let n = inspect::maps(&image, &settings.descriptor, &out)?;
            eprintln!("wrote {n} file(s) to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify { train, test, out, .. } => {
            let report = classify::run(&train, test.as_deref(), &settings)?;
            let json = serde_json::to_string_pretty(&report)? + "\n";
            match out {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{json}"),
            }
            eprintln!("micro accuracy {:.4}", report.micro_accuracy);
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let report = cnlbp::selftest::run();
            print!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Synth {
            out,
            per_class,
            size,
            noise,
        } => {
            let opts = SynthOptions {
                width: size,
                height: size,
                noise_amplitude: noise,
                ..SynthOptions::default()
            };
            let samples = synth_textures(&SynthClass::ALL, per_class, &opts, settings.seed)?;
            let manifest = write_synth_dataset(&samples, &out)?;
            eprintln!("wrote {} image(s) and manifest.csv to {}", manifest.entries.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
