//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cnlbp::eval::{evaluate_split, SynthOptions};
use cnlbp::{
    build_graph, clustering_coefficient, degrees, eigenvector_centrality, extract, sobel_field, synth_textures,
    DescriptorConfig, DirectedPixelGraph, EcOptions, GraphParams, Labeled, NeighborhoodSpec, Plane, RasterImage,
    SynthClass, UniformTable,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("one-thread pool")
        .install(f)
}

fn random_rgb(seed: u64, w: usize, h: usize) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RasterImage::from_fn(w, h, 3, |_, _, _| rng.random()).unwrap()
}

// 1

fn vector_length() -> Outcome {
    let start = Instant::now();
    let cfg = DescriptorConfig::default();
    let fv = extract(&random_rgb(1, 128, 128), &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let bins: Vec<usize> = cfg.scales.iter().map(|s| s.bin_count()).collect();
    let analytic: Vec<usize> = cfg.scales.iter().map(|s| (s.points * (s.points - 1) + 3) as usize).collect();
    ensure(fv.len() == 15426, format!("length {}", fv.len()))?;
    ensure(bins == [59, 243, 555] && bins == analytic, format!("bins {bins:?}"))?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("length 15426, bins {bins:?}, {elapsed:.2?}"))
}

// 2 and 3: literal all-pairs evaluation with its own Sobel

fn oracle_sobel(band: &Plane<u8>) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (band.width() as isize, band.height() as isize);
    let px = |x: isize, y: isize| band.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize) as f64;
    let mut mag = Vec::new();
    let mut ang = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1))
                - (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1));
            mag.push((gx * gx + gy * gy).sqrt());
            let mut a = gy.atan2(gx).to_degrees();
            if a <= -180.0 {
                a += 360.0;
            }
            ang.push(if gx == 0.0 && gy == 0.0 { 0.0 } else { a });
        }
    }
    (mag, ang)
}

fn oracle_edges(band: &Plane<u8>, p: &GraphParams) -> BTreeSet<(usize, usize)> {
    let (mag, ang) = oracle_sobel(band);
    let w = band.width();
    let n = band.len();
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dx = (i % w) as f64 - (j % w) as f64;
            let dy = (i / w) as f64 - (j / w) as f64;
            let d = (dx * dx + dy * dy).sqrt();
            let di = (band.as_slice()[i] as f64 - band.as_slice()[j] as f64).abs();
            let weight = (d * d + p.q * p.q * di / p.gray_levels) / (2.0 * p.q * p.q);
            let g = mag[i] - mag[j];
            let mut theta = ang[i] - ang[j];
            while theta > 180.0 {
                theta -= 360.0;
            }
            while theta <= -180.0 {
                theta += 360.0;
            }
            if d <= p.q && weight <= p.r && g <= p.s && theta <= p.t {
                out.insert((i, j));
            }
        }
    }
    out
}

fn built_edges(band: &Plane<u8>, p: &GraphParams) -> Result<BTreeSet<(usize, usize)>, String> {
    let img = RasterImage::new(vec![band.clone()]).map_err(|e| e.to_string())?;
    let field = sobel_field(&img);
    let g = build_graph(band, field.band(0), p).map_err(|e| e.to_string())?;
    Ok(g.edges().collect())
}

fn graph_oracle() -> Outcome {
    let p = GraphParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut total = 0;
    for trial in 0..20 {
        let band = Plane::from_fn(12, 12, |_, _| rng.random::<u8>());
        let fast = built_edges(&band, &p)?;
        let slow = oracle_edges(&band, &p);
        ensure(
            fast == slow,
            format!(
                "image {trial}: {} extra, {} missing",
                fast.difference(&slow).count(),
                slow.difference(&fast).count()
            ),
        )?;
        total += slow.len();
    }
    Ok(format!("20 random 12x12 bands, {total} edges, identical sets"))
}

fn constant_image() -> Outcome {
    let p = GraphParams::default();
    let band = Plane::filled(16, 16, 100u8);
    ensure(built_edges(&band, &p)? == oracle_edges(&band, &p), "edge set differs from oracle")?;
    let img = RasterImage::new(vec![band.clone()]).unwrap();
    let g = build_graph(&band, sobel_field(&img).band(0), &p).map_err(|e| e.to_string())?;
    let deg = degrees(&g);
    let mut interior = 0;
    for y in 3..13 {
        for x in 3..13 {
            let d = deg[y * 16 + x];
            ensure(d.k_in == 20 && d.k_out == 20, format!("({x},{y}) has in {} out {}", d.k_in, d.k_out))?;
            interior += 1;
        }
    }
    Ok(format!("{interior} interior pixels at k_in = k_out = 20"))
}

// 4

fn cc_oracle(n: usize, adj: &[Vec<bool>]) -> Vec<f64> {
    let l = |i: usize, j: usize| adj[i][j] as u8 as f64;
    (0..n)
        .map(|i| {
            let mut tri = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let aij = (l(i, j) + l(j, i)).cbrt();
                if aij == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if k != i && k != j {
                        tri += aij * (l(i, k) + l(k, i)).cbrt() * (l(j, k) + l(k, j)).cbrt();
                    }
                }
            }
            let k_tot: f64 = (0..n).filter(|&j| j != i).map(|j| l(i, j) + l(j, i)).sum();
            let bilateral: f64 = (0..n).filter(|&j| j != i).map(|j| l(i, j) * l(j, i)).sum();
            let den = k_tot * (k_tot - 1.0) - 2.0 * bilateral;
            if den > 0.0 {
                tri / (2.0 * den)
            } else {
                0.0
            }
        })
        .collect()
}

fn graph_from_adj(adj: &[Vec<bool>]) -> DirectedPixelGraph {
    let n = adj.len();
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| adj[i][j])
        .collect();
    DirectedPixelGraph::from_edges(n, &edges).unwrap()
}

fn clustering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let n = rng.random_range(2..=200);
        let p = rng.random_range(0.01..0.6);
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| i != j && rng.random_bool(p)).collect())
            .collect();
        let fast = clustering_coefficient(&graph_from_adj(&adj)).values;
        for (a, b) in fast.as_slice().iter().zip(cc_oracle(n, &adj)) {
            ensure((0.0..=1.0).contains(a), format!("graph {trial}: value {a} outside [0, 1]"))?;
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max |diff| {worst:e}"))?;

    let cycle = vec![vec![false, true, false], vec![false, false, true], vec![true, false, false]];
    let full = vec![vec![false, true, true], vec![true, false, true], vec![true, true, false]];
    for (adj, want, name) in [(cycle, 0.5, "3-cycle"), (full, 0.25, "bidirectional triangle")] {
        let got = clustering_coefficient(&graph_from_adj(&adj)).values;
        let oracle = cc_oracle(3, &adj);
        for (a, b) in got.as_slice().iter().zip(&oracle) {
            ensure(
                (a - want).abs() <= 1e-12 && (b - want).abs() <= 1e-12,
                format!("{name}: got {a}, oracle {b}, want {want}"),
            )?;
        }
    }
    Ok(format!("50 random graphs, max |diff| {worst:.1e}; 3-cycle 0.5, bidirectional triangle 0.25"))
}

// 5

/// Dominant eigenvector of `m` through a Schur eigenvalue and an SVD null vector.
fn dense_dominant(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let lambda = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted = m - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let v: Vec<f64> = v_t.row(idx).iter().copied().collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn eigenvector() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = EcOptions {
        tol: 1e-14,
        max_iter: 100_000,
        ..EcOptions::default()
    };
    let (mut worst_res, mut worst_diff) = (0.0f64, 0.0f64);
    for trial in 0..10 {
        let n = rng.random_range(10..=500);
        let p = rng.random_range(1.0..6.0) / n as f64;
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        // a Hamiltonian cycle through a random order keeps it strongly connected
        let mut edges: BTreeSet<(usize, usize)> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(p) {
                    edges.insert((i, j));
                }
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        let g = DirectedPixelGraph::from_edges(n, &edges).unwrap();
        let c = eigenvector_centrality(&g, &opts).map_err(|e| format!("graph {trial}: {e}"))?.values.into_vec();

        // scores flow along edges: (A^T c)_i = Σ_{j→i} c_j
        let mut at = DMatrix::<f64>::zeros(n, n);
        for &(i, j) in &edges {
            at[(j, i)] = 1.0;
        }
        let atc: Vec<f64> = (0..n).map(|i| (0..n).map(|j| at[(i, j)] * c[j]).sum()).collect();
        let lambda: f64 = atc.iter().zip(&c).map(|(a, b)| a * b).sum();
        let res = atc.iter().zip(&c).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        worst_res = worst_res.max(res);

        let oracle = dense_dominant(&at);
        let sign = if oracle.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let diff = c.iter().zip(&oracle).map(|(a, b)| (a - sign * b).abs()).fold(0.0, f64::max);
        worst_diff = worst_diff.max(diff);
        ensure(res <= 1e-5, format!("graph {trial} (n={n}): residual {res:e}"))?;
        ensure(diff <= 1e-6, format!("graph {trial} (n={n}): oracle diff {diff:e}"))?;
    }

    for n in [3, 10, 101] {
        let edges: Vec<_> = (0..n).flat_map(|i| [(i, (i + 1) % n), ((i + 1) % n, i)]).collect();
        let g = DirectedPixelGraph::from_edges(n, &edges).unwrap();
        let c = eigenvector_centrality(&g, &EcOptions::default()).map_err(|e| e.to_string())?.values;
        let want = 1.0 / (n as f64).sqrt();
        let off = c.as_slice().iter().map(|v| (v - want).abs()).fold(0.0, f64::max);
        ensure(off <= 1e-9, format!("bidirectional {n}-cycle off by {off:e}"))?;
    }
    Ok(format!(
        "10 graphs: residual {worst_res:.1e}, oracle diff {worst_diff:.1e}; bidirectional cycles uniform"
    ))
}

// 6

fn transitions(code: u32, p: u32) -> u32 {
    (0..p).filter(|&i| (code >> i) & 1 != (code >> ((i + 1) % p)) & 1).count() as u32
}

fn census() -> Outcome {
    let eight = (0..256u32).filter(|&c| transitions(c, 8) <= 2).count();
    ensure(eight == 58, format!("P=8 enumeration found {eight}"))?;
    let mut bins = Vec::new();
    for p in [8u32, 16, 24] {
        let table = UniformTable::new(p).map_err(|e| e.to_string())?;
        let analytic = (p * (p - 1) + 2) as usize;
        ensure(table.uniform_codes().len() == analytic, format!("P={p}: table has {}", table.uniform_codes().len()))?;
        if p <= 16 {
            let listed: Vec<u32> = (0..1u32 << p).filter(|&c| transitions(c, p) <= 2).collect();
            ensure(listed == table.uniform_codes(), format!("P={p}: table differs from enumeration"))?;
        }
        let spec = NeighborhoodSpec::new(p, 1).unwrap();
        ensure(table.bin_count() == spec.bin_count(), format!("P={p}: bin counts disagree"))?;
        bins.push(table.bin_count());
    }
    ensure(bins == [59, 243, 555], format!("bins {bins:?}"))?;
    Ok("58 / 242 / 554 uniform codes, bins 59 / 243 / 555".into())
}

// 7

fn classification() -> Outcome {
    let start = Instant::now();
    let opts = SynthOptions::default();
    let (width, height) = (opts.width, opts.height);
    let samples = synth_textures(&SynthClass::ALL, 30, &opts, 7).map_err(|e| e.to_string())?;
    let cfg = DescriptorConfig::default();
    let labeled = single_thread(|| {
        samples
            .iter()
            .map(|s| {
                extract(&s.image, &cfg).map(|fv| Labeled {
                    label: s.label.clone(),
                    features: fv.values,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(|e| e.to_string())?;
    let report = evaluate_split(&labeled, 0.3, 5, 7, 1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let acc = report.micro_accuracy;
    ensure(acc >= 0.95, format!("micro accuracy {acc:.4}"))?;
    ensure(elapsed <= Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!(
        "4 x 30 at {width}x{height}, {} test images, micro accuracy {acc:.4}, {elapsed:.1?}",
        report.n_test
    ))
}

// 8

fn run_extract(manifest: &Path, out: &Path, workers: usize) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_cnlbp"))
        .args(["--workers", &workers.to_string(), "extract", "--manifest"])
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        status.status.success(),
        format!("extract failed: {}", String::from_utf8_lossy(&status.stderr)),
    )?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let samples = synth_textures(&SynthClass::ALL, 2, &SynthOptions::default(), 8).map_err(|e| e.to_string())?;
    let manifest = cnlbp::eval::write_synth_dataset(&samples, dir.path().join("data")).map_err(|e| e.to_string())?;
    let manifest_path = dir.path().join("data").join("manifest.csv");
    let max = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let mut outputs = Vec::new();
    for (run, workers) in [1, max, 1, max].into_iter().enumerate() {
        let out = dir.path().join(format!("run{run}.jsonl"));
        outputs.push(run_extract(&manifest_path, &out, workers)?);
    }
    ensure(!outputs[0].is_empty(), "empty output")?;
    ensure(outputs.iter().all(|o| *o == outputs[0]), "outputs differ between runs")?;
    Ok(format!(
        "{} images, workers 1 and {max} twice each, {} identical bytes",
        manifest.entries.len(),
        outputs[0].len()
    ))
}

// 9

fn performance() -> Outcome {
    let img = synth_textures(&[SynthClass::Checkerboard], 2, &SynthOptions::default(), 9)
        .map_err(|e| e.to_string())?
        .remove(0)
        .image;
    let cfg = DescriptorConfig::default();
    let elapsed = single_thread(|| {
        let start = Instant::now();
        extract(&img, &cfg).map(|_| start.elapsed())
    })
    .map_err(|e| e.to_string())?;
    ensure(elapsed <= Duration::from_secs(2), format!("took {elapsed:?}"))?;
    Ok(format!("one 128x128 RGB image in {elapsed:.2?} on one thread"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("vector length", vector_length),
        ("graph oracle equivalence", graph_oracle),
        ("constant-image structure", constant_image),
        ("clustering oracle", clustering),
        ("eigenvector fixed point", eigenvector),
        ("uniform-pattern census", census),
        ("smoke classification", classification),
        ("determinism", determinism),
        ("performance budget", performance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("NOTE 10 published benchmark tables need the full datasets and an SVM; use the JSONL/CSV export");
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
