//! Feature-map families and assembly of the concatenated histogram vector.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imagecore::{resize_bilinear, sobel_field, RasterImage};
use crate::lbp::{encode_image, CodeImage, NeighborhoodSpec, UniformTable};
use crate::netmeasures::{
    clustering_coefficient, degree_centrality, eigenvector_centrality, EcDirection, EcOptions,
};
use crate::pixelgraph::{build_graph, GraphParams};
use crate::plane::Plane;

/// The six per-band planes that get ULBP-encoded, in concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapFamily {
    /// Raw intensities.
    Ti,
    /// Sobel gradient magnitude.
    Gi,
    Cc,
    Idc,
    Odc,
    Ec,
}

impl MapFamily {
    pub const ALL: [MapFamily; 6] = [
        MapFamily::Ti,
        MapFamily::Gi,
        MapFamily::Cc,
        MapFamily::Idc,
        MapFamily::Odc,
        MapFamily::Ec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MapFamily::Ti => "TI",
            MapFamily::Gi => "GI",
            MapFamily::Cc => "CC",
            MapFamily::Idc => "IDC",
            MapFamily::Odc => "ODC",
            MapFamily::Ec => "EC",
        }
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorConfig {
    pub graph: GraphParams,
    pub scales: Vec<NeighborhoodSpec>,
    pub normalize: bool,
    /// Target size applied before anything else; `None` keeps the input size.
    pub resize_to: Option<(usize, usize)>,
    pub ec_tol: f64,
    pub ec_max_iter: usize,
    pub ec_direction: EcDirection,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            graph: GraphParams::default(),
            scales: NeighborhoodSpec::default_scales(),
            normalize: true,
            resize_to: Some((128, 128)),
            ec_tol: 1e-6,
            ec_max_iter: 1000,
            ec_direction: EcDirection::InEdges,
        }
    }
}

pub fn format_scales(scales: &[NeighborhoodSpec]) -> String {
    scales.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_scales(s: &str) -> Result<Vec<NeighborhoodSpec>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.scales.is_empty() {
            return Err(Error::InvalidNeighborhood("at least one scale is required".into()));
        }
        for s in &self.scales {
            NeighborhoodSpec::new(s.points, s.radius)?;
        }
        if let Some((w, h)) = self.resize_to {
            if w == 0 || h == 0 {
                return Err(Error::InvalidArgument("resize target must be non-zero".into()));
            }
        }
        if self.ec_tol.is_nan() || self.ec_tol <= 0.0 || self.ec_max_iter == 0 {
            return Err(Error::InvalidArgument("ec_tol must be > 0 and ec_max_iter >= 1".into()));
        }
        Ok(())
    }

    pub fn ec_options(&self) -> EcOptions {
        EcOptions {
            tol: self.ec_tol,
            max_iter: self.ec_max_iter,
            direction: self.ec_direction,
            ..EcOptions::default()
        }
    }

    /// Sets one field from its `key=value` text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::InvalidArgument(format!("bad value {value:?} for {what}"));
        let float = |what: &str| value.parse::<f64>().map_err(|_| bad(what));
        match key.trim() {
            "q" => self.graph.q = float("q")?,
            "r" => self.graph.r = float("r")?,
            "s" => self.graph.s = float("s")?,
            "t" => self.graph.t = float("t")?,
            "gray_levels" => self.graph.gray_levels = float("gray_levels")?,
            "scales" => self.scales = parse_scales(value)?,
            "normalize" => self.normalize = value.parse().map_err(|_| bad("normalize"))?,
            "resize" => {
                self.resize_to = if value == "none" {
                    None
                } else {
                    let (w, h) = value.split_once('x').ok_or_else(|| bad("resize"))?;
                    Some((
                        w.parse().map_err(|_| bad("resize"))?,
                        h.parse().map_err(|_| bad("resize"))?,
                    ))
                }
            }
            "ec_tol" => self.ec_tol = float("ec_tol")?,
            "ec_max_iter" => self.ec_max_iter = value.parse().map_err(|_| bad("ec_max_iter"))?,
            "ec_direction" => {
                self.ec_direction = match value {
                    "in" => EcDirection::InEdges,
                    "out" => EcDirection::OutEdges,
                    _ => return Err(bad("ec_direction")),
                }
            }
            other => return Err(Error::InvalidArgument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Canonical `key=value` lines; the digest is computed over this text.
    pub fn canonical(&self) -> String {
        let resize = match self.resize_to {
            Some((w, h)) => format!("{w}x{h}"),
            None => "none".into(),
        };
        let direction = match self.ec_direction {
            EcDirection::InEdges => "in",
            EcDirection::OutEdges => "out",
        };
        format!(
            "q={}\nr={}\ns={}\nt={}\ngray_levels={}\nscales={}\nnormalize={}\nresize={}\nec_tol={}\nec_max_iter={}\nec_direction={}\n",
            self.graph.q,
            self.graph.r,
            self.graph.s,
            self.graph.t,
            self.graph.gray_levels,
            format_scales(&self.scales),
            self.normalize,
            resize,
            self.ec_tol,
            self.ec_max_iter,
            direction
        )
    }

    /// First 16 hex digits of the SHA-256 of [`DescriptorConfig::canonical`].
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Feature length for `bands` bands: `6 · B · Σ [P(P−1)+3]`.
pub fn feature_length(bands: usize, scales: &[NeighborhoodSpec]) -> usize {
    MapFamily::ALL.len() * bands * scales.iter().map(NeighborhoodSpec::bin_count).sum::<usize>()
}

/// Six families of `B` real-valued planes each.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFamilies {
    pub families: Vec<(MapFamily, Vec<Plane<f64>>)>,
}

impl MapFamilies {
    pub fn get(&self, family: MapFamily) -> &[Plane<f64>] {
        &self
            .families
            .iter()
            .find(|(f, _)| *f == family)
            .expect("all families present")
            .1
    }

    pub fn plane_count(&self) -> usize {
        self.families.iter().map(|(_, p)| p.len()).sum()
    }
}

struct BandMaps {
    cc: Plane<f64>,
    idc: Plane<f64>,
    odc: Plane<f64>,
    ec: Plane<f64>,
}

/// Computes every family on `img` as given (no resizing).
pub fn compute_map_families(img: &RasterImage, cfg: &DescriptorConfig) -> Result<MapFamilies> {
    cfg.validate()?;
    let field = sobel_field(img);
    let ec = cfg.ec_options();
    let per_band: Vec<BandMaps> = (0..img.band_count())
        .into_par_iter()
        .map(|b| {
            let g = build_graph(img.band(b), field.band(b), &cfg.graph)?;
            let cc = clustering_coefficient(&g).values;
            let (idc, odc) = degree_centrality(&g)?;
            let ec = eigenvector_centrality(&g, &ec)?.values;
            Ok(BandMaps {
                cc,
                idc: idc.values,
                odc: odc.values,
                ec,
            })
        })
        .collect::<Result<_>>()?;

    let ti = img.bands().iter().map(|p| p.map(|v| v as f64)).collect();
    let gi = field.bands.iter().map(|b| b.magnitude.clone()).collect();
    let mut families = vec![(MapFamily::Ti, ti), (MapFamily::Gi, gi)];
    let pick = |f: fn(&BandMaps) -> &Plane<f64>| per_band.iter().map(f).cloned().collect();
    families.push((MapFamily::Cc, pick(|m| &m.cc)));
    families.push((MapFamily::Idc, pick(|m| &m.idc)));
    families.push((MapFamily::Odc, pick(|m| &m.odc)));
    families.push((MapFamily::Ec, pick(|m| &m.ec)));
    Ok(MapFamilies { families })
}

/// Uniform-bin counts over valid pixels, optionally divided by the valid count.
pub fn histogram(code_img: &CodeImage, table: &UniformTable, normalize: bool) -> Result<Vec<f64>> {
    if code_img.spec.points != table.points() {
        return Err(Error::DimensionMismatch {
            expected: table.points() as usize,
            actual: code_img.spec.points as usize,
        });
    }
    let mut counts = vec![0u64; table.bin_count()];
    let mut total = 0u64;
    for code in code_img.valid_codes() {
        counts[table.bin_of(code)] += 1;
        total += 1;
    }
    let scale = if normalize && total > 0 { 1.0 / total as f64 } else { 1.0 };
    Ok(counts.into_iter().map(|c| c as f64 * scale).collect())
}

/// Position of one histogram inside a [`FeatureVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub family: MapFamily,
    pub scale: NeighborhoodSpec,
    pub band: usize,
    pub offset: usize,
    pub bins: usize,
}

impl Segment {
    /// Column name of bin `bin`: `<family>_<P>_<R>_<band>_<bin>`.
    pub fn column_name(&self, bin: usize) -> String {
        format!(
            "{}_{}_{}_{}_{}",
            self.family, self.scale.points, self.scale.radius, self.band, bin
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<Segment>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment(&self, seg: &Segment) -> &[f64] {
        &self.values[seg.offset..seg.offset + seg.bins]
    }

    pub fn column_names(&self) -> Vec<String> {
        self.layout
            .iter()
            .flat_map(|s| (0..s.bins).map(move |b| s.column_name(b)))
            .collect()
    }
}

/// Segment order for `bands` bands: family, then scale, then band.
pub fn layout_for(bands: usize, scales: &[NeighborhoodSpec]) -> Vec<Segment> {
    let mut offset = 0;
    let mut layout = Vec::with_capacity(MapFamily::ALL.len() * scales.len() * bands);
    for family in MapFamily::ALL {
        for &scale in scales {
            for band in 0..bands {
                let bins = scale.bin_count();
                layout.push(Segment {
                    family,
                    scale,
                    band,
                    offset,
                    bins,
                });
                offset += bins;
            }
        }
    }
    layout
}

/// Full pipeline: resize, gradients, per-band graphs and measures, ULBP
/// histograms of every family at every scale.
pub fn extract(img: &RasterImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let resized;
    let img = match cfg.resize_to {
        Some((w, h)) => {
            resized = resize_bilinear(img, w, h)?;
            &resized
        }
        None => img,
    };
    let maps = compute_map_families(img, cfg)?;
    let layout = layout_for(img.band_count(), &cfg.scales);
    let tables = cfg
        .scales
        .iter()
        .map(|s| UniformTable::new(s.points))
        .collect::<Result<Vec<_>>>()?;

    let histograms: Vec<Vec<f64>> = layout
        .par_iter()
        .map(|seg| {
            let si = cfg.scales.iter().position(|s| *s == seg.scale).unwrap();
            let plane = &maps.get(seg.family)[seg.band];
            let codes = encode_image(plane, &seg.scale)?;
            histogram(&codes, &tables[si], cfg.normalize)
        })
        .collect::<Result<_>>()?;

    let values = histograms.concat();
    debug_assert_eq!(values.len(), feature_length(img.band_count(), &cfg.scales));
    Ok(FeatureVector { values, layout })
}
