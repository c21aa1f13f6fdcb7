//! Embedded oracle checks run by `cnlbp selftest`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descriptor::{extract, DescriptorConfig};
use crate::imagecore::{sobel_band, RasterImage};
use crate::lbp::{uniformity, NeighborhoodSpec, UniformTable};
use crate::netmeasures::clustering_coefficient;
use crate::pixelgraph::{DirectedPixelGraph, GraphParams};
use crate::plane::Plane;
use crate::build_graph;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        let n_ok = self.checks.iter().filter(|c| c.passed).count();
        writeln!(f, "{n_ok}/{} checks passed", self.checks.len())
    }
}

pub fn run() -> SelftestReport {
    run_with_tables(&|p| UniformTable::new(p).expect("supported P"))
}

/// Runs every check, building uniform tables through `make_table`.
pub fn run_with_tables(make_table: &dyn Fn(u32) -> UniformTable) -> SelftestReport {
    SelftestReport {
        checks: vec![
            check_graph_oracle(),
            check_clustering_oracle(),
            check_uniform_census(make_table),
            check_vector_length(make_table),
        ],
    }
}

/// All ordered pairs, gates evaluated literally.
fn all_pairs_edges(band: &Plane<u8>, params: &GraphParams) -> Vec<(usize, usize)> {
    let field = sobel_band(band);
    let w = band.width();
    let n = band.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (xi, yi, xj, yj) = ((i % w) as f64, (i / w) as f64, (j % w) as f64, (j / w) as f64);
            let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
            if i == j || d > params.q {
                continue;
            }
            let q2 = params.q * params.q;
            let di = (band.as_slice()[i] as f64 - band.as_slice()[j] as f64).abs();
            let weight = (d * d + q2 * di / params.gray_levels) / (2.0 * q2);
            let g = field.magnitude.as_slice()[i] - field.magnitude.as_slice()[j];
            let mut theta = field.angle_deg.as_slice()[i] - field.angle_deg.as_slice()[j];
            if theta > 180.0 {
                theta -= 360.0;
            } else if theta <= -180.0 {
                theta += 360.0;
            }
            if weight <= params.r && g <= params.s && theta <= params.t {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn check_graph_oracle() -> CheckResult {
    let params = GraphParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6170);
    let mut mismatches = 0;
    let mut total_edges = 0;
    for _ in 0..5 {
        let band = Plane::from_fn(12, 12, |_, _| rng.random_range(0..=255u8));
        let g = build_graph(&band, &sobel_band(&band), &params).expect("valid params");
        let fast: Vec<_> = g.edges().collect();
        let slow = all_pairs_edges(&band, &params);
        total_edges += slow.len();
        if fast != slow {
            mismatches += 1;
        }
    }
    CheckResult {
        name: "graph-brute-force",
        passed: mismatches == 0,
        detail: format!("5 random 12x12 bands, {total_edges} edges, {mismatches} mismatching"),
    }
}

fn cc_triple_loop(g: &DirectedPixelGraph) -> Vec<f64> {
    let n = g.node_count();
    let l = |i: usize, j: usize| g.has_edge(i, j) as u8 as f64;
    (0..n)
        .map(|i| {
            let mut num = 0.0;
            for j in 0..n {
                for k in 0..n {
                    if k == i || k == j || j == i {
                        continue;
                    }
                    num += (l(i, j) + l(j, i)).cbrt() * (l(i, k) + l(k, i)).cbrt() * (l(j, k) + l(k, j)).cbrt();
                }
            }
            let k_tot: f64 = (0..n).map(|j| l(i, j) + l(j, i)).sum();
            let bil: f64 = (0..n).map(|j| l(i, j) * l(j, i)).sum();
            let den = k_tot * (k_tot - 1.0) - 2.0 * bil;
            if den > 0.0 {
                0.5 * num / den
            } else {
                0.0
            }
        })
        .collect()
}

fn check_clustering_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6363);
    let mut worst = 0.0f64;
    let mut out_of_range = 0;
    for _ in 0..5 {
        let n = rng.random_range(10..40);
        let p = rng.random_range(0.05..0.5);
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && rng.random_bool(p))
            .collect();
        let g = DirectedPixelGraph::from_edges(n, &edges).expect("valid edges");
        let fast = clustering_coefficient(&g).values;
        for (a, b) in fast.as_slice().iter().zip(cc_triple_loop(&g)) {
            worst = worst.max((a - b).abs());
            if !(0.0..=1.0).contains(a) {
                out_of_range += 1;
            }
        }
    }
    let cycle = DirectedPixelGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
    let cyc = clustering_coefficient(&cycle).values.get(0, 0);
    let passed = worst <= 1e-12 && out_of_range == 0 && (cyc - 0.5).abs() <= 1e-12;
    CheckResult {
        name: "clustering-triple-loop",
        passed,
        detail: format!("max |diff| {worst:e}, {out_of_range} out of [0,1], 3-cycle {cyc}"),
    }
}

fn check_uniform_census(make_table: &dyn Fn(u32) -> UniformTable) -> CheckResult {
    let mut notes = Vec::new();
    let mut passed = true;
    for p in [8u32, 16, 24] {
        let enumerated: Vec<u32> = (0..1u32 << p).filter(|&c| uniformity(c, p) <= 2).collect();
        let table = make_table(p);
        let expected = (p * (p - 1) + 2) as usize;
        let ok = enumerated.len() == expected
            && table.uniform_codes() == enumerated.as_slice()
            && table.bin_count() == expected + 1;
        passed &= ok;
        notes.push(format!("P={p}: {} uniform, {} bins", enumerated.len(), table.bin_count()));
    }
    CheckResult {
        name: "uniform-census",
        passed,
        detail: notes.join("; "),
    }
}

fn check_vector_length(make_table: &dyn Fn(u32) -> UniformTable) -> CheckResult {
    let img = RasterImage::from_fn(128, 128, 3, |x, y, b| ((x * 5 + y * 3 + b * 40) % 251) as u8)
        .expect("valid image");
    let cfg = DescriptorConfig::default();
    let bins: Vec<usize> = NeighborhoodSpec::default_scales()
        .iter()
        .map(|s| make_table(s.points).bin_count())
        .collect();
    match extract(&img, &cfg) {
        Ok(fv) => CheckResult {
            name: "vector-length",
            passed: fv.len() == 15426 && bins == [59, 243, 555],
            detail: format!("length {} with bins {:?}", fv.len(), bins),
        },
        Err(e) => CheckResult {
            name: "vector-length",
            passed: false,
            detail: format!("extraction failed: {e}"),
        },
    }
}
