use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cnlbp::export::{write_code_csv, write_pgm, write_plane_csv};
use cnlbp::{
    build_graph, compute_map_families, degrees, encode_image, load_image, resize_bilinear, sobel_field, Degree,
    DescriptorConfig,
};

fn summary(name: &str, values: impl Iterator<Item = usize> + Clone) -> String {
    let n = values.clone().count();
    if n == 0 {
        return format!("{name} count=0");
    }
    let min = values.clone().min().unwrap();
    let max = values.clone().max().unwrap();
    let mean = values.sum::<usize>() as f64 / n as f64;
    format!("{name} count={n} min={min} max={max} mean={mean:.4}")
}

/// Node/edge counts and degree summaries of one band's graph at native
/// resolution; the edge dump is appended when `dump` is set.
pub fn graph_stats(image: &Path, band: usize, cfg: &DescriptorConfig, dump: bool) -> Result<String> {
    let img = load_image(image)?;
    if band >= img.band_count() {
        bail!("band {band} out of range: image has {} band(s)", img.band_count());
    }
    let field = sobel_field(&img);
    let g = build_graph(img.band(band), field.band(band), &cfg.graph)?;
    let deg = degrees(&g);
    let (w, h) = (img.width(), img.height());

    // nodes whose whole search window lies inside the image
    let reach = cfg.graph.q.floor() as usize;
    let interior: Vec<Degree> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| x >= reach && y >= reach && x + reach < w && y + reach < h)
        .map(|(x, y)| deg[y * w + x])
        .collect();

    let mut s = String::new();
    writeln!(s, "image={} width={w} height={h} band={band}", image.display())?;
    writeln!(s, "nodes={} edges={}", g.node_count(), g.edge_count())?;
    writeln!(s, "{}", summary("in_degree", deg.iter().map(|d| d.k_in)))?;
    writeln!(s, "{}", summary("out_degree", deg.iter().map(|d| d.k_out)))?;
    writeln!(s, "{}", summary("interior_in_degree", interior.iter().map(|d| d.k_in)))?;
    writeln!(s, "{}", summary("interior_out_degree", interior.iter().map(|d| d.k_out)))?;
    if dump {
        s.push_str(&g.dump());
    }
    Ok(s)
}

/// Writes every family plane (PGM + CSV) and every code image (CSV) into `dir`.
/// Returns the number of files written.
pub fn maps(image: &Path, cfg: &DescriptorConfig, dir: &Path) -> Result<usize> {
    let mut img = load_image(image)?;
    if let Some((w, h)) = cfg.resize_to {
        img = resize_bilinear(&img, w, h)?;
    }
    let families = compute_map_families(&img, cfg)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let create = |name: String| -> Result<BufWriter<File>> {
        let p = dir.join(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    };
    let mut n = 0;
    for (family, planes) in &families.families {
        for (b, plane) in planes.iter().enumerate() {
            write_pgm(plane, create(format!("{family}_b{b}.pgm"))?)?;
            write_plane_csv(plane, create(format!("{family}_b{b}.csv"))?)?;
            n += 2;
            for spec in &cfg.scales {
                let codes = encode_image(plane, spec)?;
                write_code_csv(&codes, create(format!("{family}_{}_{}_b{b}_codes.csv", spec.points, spec.radius))?)?;
                n += 1;
            }
        }
    }
    Ok(n)
}
