//! Fixtures shared by the criterion benches.

use cnlbp::{RasterImage, SynthClass, SynthOptions};
use rand::SeedableRng;

/// A deterministic 128×128 checkerboard-with-noise image.
pub fn fixture_image(bands: usize) -> RasterImage {
    let opts = SynthOptions {
        bands,
        ..SynthOptions::default()
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    cnlbp::eval::synth_image(SynthClass::Checkerboard, &opts, &mut rng).expect("valid options")
}
