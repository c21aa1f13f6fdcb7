//! CN-LBP texture descriptors.
//!
//! Each band of an image is mapped to a directed pixel graph whose edges are
//! gated by spatial distance, intensity similarity and Sobel gradient
//! agreement. Four network measures (clustering coefficient, in/out degree
//! centrality, eigenvector centrality) turn each graph into feature planes.
//! Those planes, the raw intensities and the gradient magnitude are encoded
//! with uniform local binary patterns at several scales, and the normalized
//! histograms are concatenated into one feature vector.
//!
//! ```no_run
//! use cnlbp::{extract, load_image, DescriptorConfig};
//!
//! let img = load_image("texture.png")?;
//! let fv = extract(&img, &DescriptorConfig::default())?;
//! assert_eq!(fv.len(), 15426);
//! # Ok::<(), cnlbp::Error>(())
//! ```

pub mod descriptor;
pub mod error;
pub mod eval;
pub mod export;
pub mod imagecore;
pub mod lbp;
pub mod netmeasures;
pub mod pixelgraph;
pub mod plane;
pub mod selftest;

pub use descriptor::{
    compute_map_families, extract, feature_length, histogram, DescriptorConfig, FeatureVector, MapFamilies,
    MapFamily, Segment,
};
pub use error::{Error, Result};
pub use eval::{
    knn_classify, micro_accuracy, split, synth_textures, DatasetManifest, EvalReport, Labeled, SynthClass,
    SynthOptions,
};
pub use imagecore::{load_image, resize_bilinear, sobel_field, GradientBand, GradientField, RasterImage};
pub use lbp::{encode_image, lbp_code, sample_circle, uniformity, CodeImage, NeighborhoodSpec, UniformTable};
pub use netmeasures::{
    clustering_coefficient, degree_centrality, eigenvector_centrality, measure_stack, EcDirection, EcOptions,
    MeasureImage, MeasureKind, PowerIterState,
};
pub use pixelgraph::{build_graph, degrees, edge_weight, link_predicate, pixel_distance, Degree, DirectedPixelGraph, GraphParams};
pub use plane::Plane;
