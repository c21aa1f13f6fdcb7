//! Per-pixel complex-network measures: clustering coefficient, in/out degree
//! centrality and eigenvector centrality.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixelgraph::DirectedPixelGraph;
use crate::plane::Plane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureKind {
    Cc,
    Idc,
    Odc,
    Ec,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [MeasureKind::Cc, MeasureKind::Idc, MeasureKind::Odc, MeasureKind::Ec];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Cc => "CC",
            MeasureKind::Idc => "IDC",
            MeasureKind::Odc => "ODC",
            MeasureKind::Ec => "EC",
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measure evaluated at every node of a band's graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureImage {
    pub kind: MeasureKind,
    pub values: Plane<f64>,
}

fn measure_plane(g: &DirectedPixelGraph, values: Vec<f64>) -> Plane<f64> {
    Plane::from_vec(g.width(), g.height(), values)
}

/// How the pair terms `l_ij + l_ji` enter the triangle sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleWeighting {
    /// Cube root of each pair sum, the default.
    CubeRootSum,
    /// Plain pair sums: the usual binary directed clustering coefficient.
    /// Only differs from [`TriangleWeighting::CubeRootSum`] on bilateral pairs.
    PlainSum,
}

impl TriangleWeighting {
    /// Weight of a pair sum in `{0, 1, 2}`.
    fn table(self) -> [f64; 3] {
        match self {
            TriangleWeighting::CubeRootSum => [0.0, 1.0, 2f64.cbrt()],
            TriangleWeighting::PlainSum => [0.0, 1.0, 2.0],
        }
    }
}

/// Directed clustering coefficient with cube-rooted pair sums.
///
/// For node `i` with union neighborhood `U` (in- or out-neighbors):
///
/// ```text
///          1/2 · Σ_{j≠k ∈ U} a_ij^{1/3} a_ik^{1/3} a_jk^{1/3}
/// CC(i) = ----------------------------------------------------,   a_xy = l_xy + l_yx
///             k_tot (k_tot − 1) − 2 · #bilateral(i)
/// ```
///
/// A non-positive denominator gives 0.
pub fn clustering_coefficient(g: &DirectedPixelGraph) -> MeasureImage {
    clustering_coefficient_with(g, TriangleWeighting::CubeRootSum)
}

pub fn clustering_coefficient_with(g: &DirectedPixelGraph, weighting: TriangleWeighting) -> MeasureImage {
    let n = g.node_count();
    let table = weighting.table();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || ClusterScratch::new(n),
            |scratch, i| scratch.node(g, i, &table),
        )
        .collect();
    MeasureImage {
        kind: MeasureKind::Cc,
        values: measure_plane(g, values),
    }
}

struct ClusterScratch {
    /// Position in the current neighborhood, plus one; 0 when absent.
    slot: Vec<u32>,
    members: Vec<u32>,
    /// `a_ij` for each member `j`.
    pair_to_center: Vec<u8>,
    /// `a_jk` for the member `j` being scanned, indexed by member slot.
    pair_row: Vec<u8>,
}

impl ClusterScratch {
    fn new(n: usize) -> Self {
        ClusterScratch {
            slot: vec![0; n],
            members: Vec::new(),
            pair_to_center: Vec::new(),
            pair_row: Vec::new(),
        }
    }

    fn add(&mut self, v: u32) {
        let s = &mut self.slot[v as usize];
        if *s == 0 {
            self.members.push(v);
            self.pair_to_center.push(0);
            *s = self.members.len() as u32;
        }
        self.pair_to_center[*s as usize - 1] += 1;
    }

    fn node(&mut self, g: &DirectedPixelGraph, i: usize, table: &[f64; 3]) -> f64 {
        let out = g.out_neighbors(i);
        let inn = g.in_neighbors(i);
        let k_tot = (out.len() + inn.len()) as f64;
        self.members.clear();
        self.pair_to_center.clear();
        for &v in out.iter().chain(inn) {
            self.add(v);
        }
        let bilateral = self.pair_to_center.iter().filter(|&&a| a == 2).count() as f64;
        let denom = k_tot * (k_tot - 1.0) - 2.0 * bilateral;

        let m = self.members.len();
        let mut sum = 0.0;
        if denom > 0.0 {
            self.pair_row.clear();
            self.pair_row.resize(m, 0);
            for a in 0..m {
                let j = self.members[a] as usize;
                for &k in g.out_neighbors(j).iter().chain(g.in_neighbors(j)) {
                    let s = self.slot[k as usize];
                    if s != 0 {
                        self.pair_row[s as usize - 1] += 1;
                    }
                }
                let wa = table[self.pair_to_center[a] as usize];
                let mut row = 0.0;
                for b in 0..m {
                    let ajk = self.pair_row[b];
                    if ajk != 0 {
                        row += table[self.pair_to_center[b] as usize] * table[ajk as usize];
                        self.pair_row[b] = 0;
                    }
                }
                sum += wa * row;
            }
        }
        for &v in &self.members {
            self.slot[v as usize] = 0;
        }
        if denom > 0.0 {
            0.5 * sum / denom
        } else {
            0.0
        }
    }
}

/// In- and out-degree divided by `node_count − 1`.
pub fn degree_centrality(g: &DirectedPixelGraph) -> Result<(MeasureImage, MeasureImage)> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::DegenerateGraph(n));
    }
    let norm = (n - 1) as f64;
    let idc = (0..n).map(|i| g.in_degree(i) as f64 / norm).collect();
    let odc = (0..n).map(|i| g.out_degree(i) as f64 / norm).collect();
    Ok((
        MeasureImage {
            kind: MeasureKind::Idc,
            values: measure_plane(g, idc),
        },
        MeasureImage {
            kind: MeasureKind::Odc,
            values: measure_plane(g, odc),
        },
    ))
}

/// Which neighbors feed a node's score in the power step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EcDirection {
    /// `u'(i) = Σ_{j→i} u(j)`: scores flow along edges (the graph-toolkit convention).
    #[default]
    InEdges,
    /// `u'(i) = Σ_{i→j} u(j)`: the adjacency matrix applied as written.
    OutEdges,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub direction: EcDirection,
    /// Uniform teleport mixed in on the single retry after a failed run.
    pub retry_teleport: f64,
}

impl Default for EcOptions {
    fn default() -> Self {
        EcOptions {
            tol: 1e-6,
            max_iter: 1000,
            direction: EcDirection::InEdges,
            retry_teleport: 1e-9,
        }
    }
}

/// Power-iteration state after the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterState {
    /// Non-negative, unit Euclidean norm.
    pub vector: Vec<f64>,
    /// Dominant-eigenvalue estimate `‖L'u‖₂`.
    pub lambda_inv: f64,
    pub iteration: usize,
    /// L1 change of the last step.
    pub residual: f64,
    pub converged: bool,
}

/// One application of the transfer operator `L'` (no shift).
pub fn transfer(g: &DirectedPixelGraph, direction: EcDirection, u: &[f64], out: &mut [f64]) {
    out.par_iter_mut().with_min_len(1024).enumerate().for_each(|(i, o)| {
        let nbrs = match direction {
            EcDirection::InEdges => g.in_neighbors(i),
            EcDirection::OutEdges => g.out_neighbors(i),
        };
        *o = nbrs.iter().map(|&j| u[j as usize]).sum();
    });
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs power iteration on `L' + I`, from `start` or the uniform vector.
///
/// The identity shift leaves the eigenvectors unchanged and removes the
/// oscillation that bipartite or periodic components cause on plain `L'`.
/// Stops when the L1 change drops below `node_count · tol`.
pub fn power_iteration(
    g: &DirectedPixelGraph,
    opts: &EcOptions,
    teleport: f64,
    start: Option<Vec<f64>>,
) -> PowerIterState {
    let n = g.node_count();
    let mut u = start.unwrap_or_else(|| vec![1.0 / (n as f64).sqrt(); n]);
    debug_assert_eq!(u.len(), n);
    let mut next = vec![0.0; n];
    let threshold = n as f64 * opts.tol;
    let mut state = PowerIterState {
        vector: Vec::new(),
        lambda_inv: 0.0,
        iteration: 0,
        residual: f64::INFINITY,
        converged: false,
    };
    for it in 1..=opts.max_iter {
        transfer(g, opts.direction, &u, &mut next);
        if teleport > 0.0 {
            let mass = u.iter().sum::<f64>() / n as f64;
            for x in next.iter_mut() {
                *x = (1.0 - teleport) * *x + teleport * mass;
            }
        }
        for (x, &prev) in next.iter_mut().zip(&u) {
            *x += prev;
        }
        let norm = l2_norm(&next);
        if norm == 0.0 {
            break;
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        let change: f64 = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut u, &mut next);
        state.iteration = it;
        state.residual = change;
        if change < threshold {
            state.converged = true;
            break;
        }
    }
    transfer(g, opts.direction, &u, &mut next);
    state.lambda_inv = l2_norm(&next);
    state.vector = u;
    state
}

/// Dominant non-negative eigenvector of the transfer operator, unit norm.
///
/// An edgeless graph gives all zeros. If the first run does not converge, a
/// second run of up to `max_iter` steps resumes from the last iterate with a
/// small uniform teleport mixed in; failure of that run is an error.
pub fn eigenvector_centrality(g: &DirectedPixelGraph, opts: &EcOptions) -> Result<MeasureImage> {
    eigenvector_state(g, opts).map(|state| MeasureImage {
        kind: MeasureKind::Ec,
        values: measure_plane(g, state.vector),
    })
}

pub fn eigenvector_state(g: &DirectedPixelGraph, opts: &EcOptions) -> Result<PowerIterState> {
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::InvalidArgument(format!(
            "eigenvector centrality needs tol > 0 and max_iter >= 1 (got {}, {})",
            opts.tol, opts.max_iter
        )));
    }
    let n = g.node_count();
    if g.edge_count() == 0 {
        return Ok(PowerIterState {
            vector: vec![0.0; n],
            lambda_inv: 0.0,
            iteration: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let first = power_iteration(g, opts, 0.0, None);
    if first.converged {
        return Ok(first);
    }
    let spent = first.iteration;
    let mut retry = power_iteration(g, opts, opts.retry_teleport, Some(first.vector));
    retry.iteration += spent;
    if retry.converged {
        Ok(retry)
    } else {
        Err(Error::NotConverged {
            iterations: retry.iteration,
        })
    }
}

/// Applies `kind` to every band graph independently. `Idc`/`Odc` share one
/// degree pass per band.
pub fn measure_stack(
    graphs: &[DirectedPixelGraph],
    kinds: &[MeasureKind],
    ec: &EcOptions,
) -> Result<Vec<MeasureImage>> {
    let mut out = Vec::with_capacity(graphs.len() * kinds.len());
    for &kind in kinds {
        for g in graphs {
            out.push(measure(g, kind, ec)?);
        }
    }
    Ok(out)
}

pub fn measure(g: &DirectedPixelGraph, kind: MeasureKind, ec: &EcOptions) -> Result<MeasureImage> {
    match kind {
        MeasureKind::Cc => Ok(clustering_coefficient(g)),
        MeasureKind::Idc => degree_centrality(g).map(|(i, _)| i),
        MeasureKind::Odc => degree_centrality(g).map(|(_, o)| o),
        MeasureKind::Ec => eigenvector_centrality(g, ec),
    }
}
