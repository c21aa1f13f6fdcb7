//! Directed pixel graphs gated by distance, intensity similarity and
//! gradient agreement.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{GradientBand, MAX_GRAY};
use crate::plane::Plane;

/// Linking thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    /// Search radius in pixels.
    pub q: f64,
    /// Similarity threshold on the edge weight.
    pub r: f64,
    /// Gradient-magnitude difference threshold (intensity units).
    pub s: f64,
    /// Gradient-angle difference threshold (degrees).
    pub t: f64,
    /// Maximum gray level.
    pub gray_levels: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            q: 3.0,
            r: 0.315,
            s: 5.0,
            t: 45.0,
            gray_levels: MAX_GRAY as f64,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.q > 0.0
            && self.r > 0.0
            && self.s >= 0.0
            && self.t >= 0.0
            && self.gray_levels > 0.0
            && [self.q, self.r, self.s, self.t, self.gray_levels]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "need q > 0, r > 0, s >= 0, t >= 0, L > 0 (got {self:?})"
            )))
        }
    }
}

/// Euclidean distance between row-major pixel indices `i` and `j`.
#[inline]
pub fn pixel_distance(i: usize, j: usize, width: usize) -> f64 {
    let (xi, yi) = ((i % width) as f64, (i / width) as f64);
    let (xj, yj) = ((j % width) as f64, (j / width) as f64);
    ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()
}

/// Similarity weight of a pair at distance `0 < d <= q`.
///
/// Pairs beyond the radius are never weighted; callers gate on `d` first.
#[inline]
pub fn edge_weight(ii: f64, ij: f64, d: f64, params: &GraphParams) -> f64 {
    let q2 = params.q * params.q;
    (d * d + q2 * (ii - ij).abs() / params.gray_levels) / (2.0 * q2)
}

/// Wraps an angle difference into `(-180, 180]`.
#[inline]
pub fn wrap_angle_deg(a: f64) -> f64 {
    if a > 180.0 {
        a - 360.0
    } else if a <= -180.0 {
        a + 360.0
    } else {
        a
    }
}

/// Whether pixel `i` links to pixel `j`.
///
/// The gradient and angle gates use signed differences `value(i) - value(j)`,
/// so the relation is not symmetric.
pub fn link_predicate(
    i: usize,
    j: usize,
    band: &Plane<u8>,
    field: &GradientBand,
    params: &GraphParams,
) -> bool {
    let d = pixel_distance(i, j, band.width());
    if d == 0.0 || d > params.q {
        return false;
    }
    let (bi, mi, ai) = pixel_attrs(band, field, i);
    let (bj, mj, aj) = pixel_attrs(band, field, j);
    gates_pass(d, bi, bj, mi - mj, wrap_angle_deg(ai - aj), params)
}

#[inline]
fn pixel_attrs(band: &Plane<u8>, field: &GradientBand, i: usize) -> (f64, f64, f64) {
    (
        band.as_slice()[i] as f64,
        field.magnitude.as_slice()[i],
        field.angle_deg.as_slice()[i],
    )
}

#[inline]
fn gates_pass(d: f64, ii: f64, ij: f64, g: f64, theta: f64, params: &GraphParams) -> bool {
    edge_weight(ii, ij, d, params) <= params.r && g <= params.s && theta <= params.t
}

/// Sparse directed graph over pixel nodes, stored as sorted CSR lists in
/// both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedPixelGraph {
    width: usize,
    height: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl DirectedPixelGraph {
    /// Builds a graph from an arbitrary edge list over `node_count` nodes
    /// laid out as a single row. Duplicate edges are collapsed.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize)> = edges.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &(i, j) in &sorted {
            if i >= node_count || j >= node_count {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for {node_count} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop at node {i}")));
            }
        }
        let mut lists = vec![Vec::new(); node_count];
        for (i, j) in sorted {
            lists[i].push(j as u32);
        }
        Ok(Self::from_out_lists(node_count, 1, lists))
    }

    fn from_out_lists(width: usize, height: usize, lists: Vec<Vec<u32>>) -> Self {
        let n = lists.len();
        let mut out_offsets = Vec::with_capacity(n + 1);
        out_offsets.push(0);
        let mut out_targets = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for l in lists {
            out_targets.extend_from_slice(&l);
            out_offsets.push(out_targets.len());
        }
        Self::from_csr(width, height, out_offsets, out_targets)
    }

    fn from_csr(width: usize, height: usize, out_offsets: Vec<usize>, out_targets: Vec<u32>) -> Self {
        let n = out_offsets.len() - 1;
        let mut in_counts = vec![0usize; n + 1];
        for &t in &out_targets {
            in_counts[t as usize + 1] += 1;
        }
        for k in 1..=n {
            in_counts[k] += in_counts[k - 1];
        }
        let in_offsets = in_counts.clone();
        let mut cursor = in_counts;
        let mut in_sources = vec![0u32; out_targets.len()];
        // sources visited in ascending order keep each in-list sorted
        for src in 0..n {
            for &t in &out_targets[out_offsets[src]..out_offsets[src + 1]] {
                in_sources[cursor[t as usize]] = src as u32;
                cursor[t as usize] += 1;
            }
        }
        DirectedPixelGraph {
            width,
            height,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn node_count(&self) -> usize {
        self.out_offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    /// Width of the pixel grid the nodes are laid out on.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn out_neighbors(&self, i: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, i: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    #[inline]
    pub fn out_degree(&self, i: usize) -> usize {
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    #[inline]
    pub fn in_degree(&self, i: usize) -> usize {
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out_neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// All edges in `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count())
            .flat_map(move |i| self.out_neighbors(i).iter().map(move |&j| (i, j as usize)))
    }

    /// The same node set with every edge reversed.
    pub fn transpose(&self) -> DirectedPixelGraph {
        DirectedPixelGraph {
            width: self.width,
            height: self.height,
            out_offsets: self.in_offsets.clone(),
            out_targets: self.in_sources.clone(),
            in_offsets: self.out_offsets.clone(),
            in_sources: self.out_targets.clone(),
        }
    }

    /// Text dump: a `nodes=<n> edges=<e>` header, then one `i j` line per
    /// edge sorted by `(i, j)`.
    pub fn dump(&self) -> String {
        let mut s = String::with_capacity(16 + self.edge_count() * 12);
        writeln!(s, "nodes={} edges={}", self.node_count(), self.edge_count()).unwrap();
        for (i, j) in self.edges() {
            writeln!(s, "{i} {j}").unwrap();
        }
        s
    }
}

/// In- and out-degree of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Degree {
    pub k_in: usize,
    pub k_out: usize,
}

impl Degree {
    pub fn total(&self) -> usize {
        self.k_in + self.k_out
    }
}

pub fn degrees(g: &DirectedPixelGraph) -> Vec<Degree> {
    (0..g.node_count())
        .map(|i| Degree {
            k_in: g.in_degree(i),
            k_out: g.out_degree(i),
        })
        .collect()
}

/// Integer offsets `(dx, dy)` with `0 < d <= q`, ordered by `(dy, dx)` so that
/// neighbor indices come out ascending.
pub fn window_offsets(q: f64) -> Vec<(isize, isize, f64)> {
    let reach = q.floor() as isize;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            if d > 0.0 && d <= q {
                out.push((dx, dy, d));
            }
        }
    }
    out
}

/// Maps one band to its directed pixel graph.
///
/// Only the `(2⌊q⌋+1)²` window around each pixel is scanned; pairs outside it
/// are beyond the radius and can never link. Rows are processed in parallel
/// and stitched in node order, so the result does not depend on the thread
/// count.
pub fn build_graph(
    band: &Plane<u8>,
    field: &GradientBand,
    params: &GraphParams,
) -> Result<DirectedPixelGraph> {
    params.validate()?;
    if !band.same_dims(&field.magnitude) || !band.same_dims(&field.angle_deg) {
        return Err(Error::DimensionMismatch {
            expected: band.len(),
            actual: field.magnitude.len(),
        });
    }
    let (w, h) = (band.width(), band.height());
    let offsets = window_offsets(params.q);
    let intensity = band.as_slice();
    let mag = field.magnitude.as_slice();
    let ang = field.angle_deg.as_slice();

    let rows: Vec<(Vec<usize>, Vec<u32>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut counts = Vec::with_capacity(w);
            let mut targets = Vec::with_capacity(w * offsets.len() / 2);
            for x in 0..w {
                let i = y * w + x;
                let before = targets.len();
                let (ii, mi, ai) = (intensity[i] as f64, mag[i], ang[i]);
                for &(dx, dy, d) in &offsets {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    let theta = wrap_angle_deg(ai - ang[j]);
                    if gates_pass(d, ii, intensity[j] as f64, mi - mag[j], theta, params) {
                        targets.push(j as u32);
                    }
                }
                counts.push(targets.len() - before);
            }
            (counts, targets)
        })
        .collect();

    let mut out_offsets = Vec::with_capacity(w * h + 1);
    out_offsets.push(0);
    let mut out_targets = Vec::with_capacity(rows.iter().map(|r| r.1.len()).sum());
    for (counts, targets) in rows {
        for c in counts {
            out_offsets.push(out_offsets.last().unwrap() + c);
        }
        out_targets.extend_from_slice(&targets);
    }
    Ok(DirectedPixelGraph::from_csr(w, h, out_offsets, out_targets))
}
