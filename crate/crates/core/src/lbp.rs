//! Circular local binary patterns and the uniform-pattern bin mapping.
//!
//! Neighbor `p` of `P` sits at `(cx + R·cos(2πp/P), cy − R·sin(2πp/P))`,
//! i.e. sample 0 is to the right and the samples run counter-clockwise on
//! screen. A neighbor contributes bit `p` only when it is strictly greater
//! than the center, so ties encode as 0 (unlike the common `>=` convention).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Sample count and radius of a circular neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub points: u32,
    pub radius: u32,
}

impl NeighborhoodSpec {
    pub const MAX_POINTS: u32 = 24;

    pub fn new(points: u32, radius: u32) -> Result<Self> {
        if !(2..=Self::MAX_POINTS).contains(&points) || radius == 0 {
            return Err(Error::InvalidNeighborhood(format!(
                "need 2 <= P <= {} and R >= 1, got ({points}, {radius})",
                Self::MAX_POINTS
            )));
        }
        Ok(NeighborhoodSpec { points, radius })
    }

    /// The three scales (8,1), (16,2), (24,3).
    pub fn default_scales() -> Vec<NeighborhoodSpec> {
        vec![
            NeighborhoodSpec { points: 8, radius: 1 },
            NeighborhoodSpec { points: 16, radius: 2 },
            NeighborhoodSpec { points: 24, radius: 3 },
        ]
    }

    /// Histogram length `P(P−1)+3`.
    pub fn bin_count(&self) -> usize {
        uniform_bin_count(self.points)
    }

    /// Width of the masked border.
    pub fn border(&self) -> usize {
        self.radius as usize
    }

    /// Offsets `(dx, dy)` of every sample, with values within `1e-9` of an
    /// integer snapped to it.
    pub fn offsets(&self) -> Vec<(f64, f64)> {
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() < 1e-9 {
                r
            } else {
                v
            }
        };
        let (p, r) = (self.points as f64, self.radius as f64);
        (0..self.points)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / p;
                // `0.0 - x` keeps a snapped zero positive
                (snap(r * a.cos()), snap(0.0 - r * a.sin()))
            })
            .collect()
    }
}

impl fmt::Display for NeighborhoodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.points, self.radius)
    }
}

impl std::str::FromStr for NeighborhoodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidNeighborhood(format!("expected P:R, got {s:?}"));
        let (p, r) = s.trim().split_once(':').ok_or_else(bad)?;
        NeighborhoodSpec::new(p.trim().parse().map_err(|_| bad())?, r.trim().parse().map_err(|_| bad())?)
    }
}

pub fn uniform_bin_count(points: u32) -> usize {
    let p = points as usize;
    p * (p - 1) + 3
}

/// Precomputed bilinear taps of one sample point relative to the center.
#[derive(Debug, Clone, Copy)]
struct Tap {
    dx0: isize,
    dy0: isize,
    fx: f64,
    fy: f64,
}

impl Tap {
    fn new(dx: f64, dy: f64) -> Self {
        let (x0, y0) = (dx.floor(), dy.floor());
        Tap {
            dx0: x0 as isize,
            dy0: y0 as isize,
            fx: dx - x0,
            fy: dy - y0,
        }
    }

    /// Bilinear read of `f(value)` at the sample around `(cx, cy)`.
    #[inline]
    fn read(&self, plane: &Plane<f64>, cx: usize, cy: usize, f: impl Fn(f64) -> f64) -> f64 {
        let x0 = (cx as isize + self.dx0) as usize;
        let y0 = (cy as isize + self.dy0) as usize;
        let v00 = f(plane.get(x0, y0));
        if self.fx == 0.0 && self.fy == 0.0 {
            return v00;
        }
        if self.fy == 0.0 {
            return v00 + self.fx * (f(plane.get(x0 + 1, y0)) - v00);
        }
        let v10 = f(plane.get(x0, y0 + 1));
        if self.fx == 0.0 {
            return v00 + self.fy * (v10 - v00);
        }
        let top = v00 + self.fx * (f(plane.get(x0 + 1, y0)) - v00);
        let bottom = v10 + self.fx * (f(plane.get(x0 + 1, y0 + 1)) - v10);
        top + self.fy * (bottom - top)
    }
}

fn check_interior(plane: &Plane<f64>, cx: usize, cy: usize, spec: &NeighborhoodSpec) -> Result<()> {
    let r = spec.border();
    if cx < r || cy < r || cx + r >= plane.width() || cy + r >= plane.height() {
        return Err(Error::InvalidArgument(format!(
            "({cx}, {cy}) is closer than {r} to the border of a {}x{} plane",
            plane.width(),
            plane.height()
        )));
    }
    Ok(())
}

/// The `P` circular samples around `(cx, cy)`.
pub fn sample_circle(plane: &Plane<f64>, cx: usize, cy: usize, spec: &NeighborhoodSpec) -> Result<Vec<f64>> {
    check_interior(plane, cx, cy, spec)?;
    Ok(spec
        .offsets()
        .into_iter()
        .map(|(dx, dy)| Tap::new(dx, dy).read(plane, cx, cy, |v| v))
        .collect())
}

/// `Σ_p [samples[p] > center] · 2^p`.
pub fn lbp_code(samples: &[f64], center: f64) -> u32 {
    samples
        .iter()
        .enumerate()
        .fold(0, |code, (p, &s)| if s - center > 0.0 { code | (1 << p) } else { code })
}

/// Circular 0/1 transition count of the low `points` bits.
pub fn uniformity(code: u32, points: u32) -> u32 {
    let mask = if points == 32 { u32::MAX } else { (1u32 << points) - 1 };
    let code = code & mask;
    let rotated = ((code >> 1) | ((code & 1) << (points - 1))) & mask;
    (code ^ rotated).count_ones()
}

/// Bin assignment for `P`-bit codes: uniform codes (at most two circular
/// transitions) get one bin each in ascending code order, all others share
/// the last bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformTable {
    points: u32,
    uniform_codes: Vec<u32>,
}

impl UniformTable {
    pub fn new(points: u32) -> Result<Self> {
        if !(2..=NeighborhoodSpec::MAX_POINTS).contains(&points) {
            return Err(Error::InvalidNeighborhood(format!("unsupported P = {points}")));
        }
        // all-zero, all-one, and every circular run of 1..P-1 ones
        let full = (1u32 << points) - 1;
        let mut codes = vec![0, full];
        for len in 1..points {
            let run = (1u32 << len) - 1;
            for start in 0..points {
                codes.push(((run << start) | (run >> (points - start))) & full);
            }
        }
        codes.sort_unstable();
        codes.dedup();
        Ok(UniformTable {
            points,
            uniform_codes: codes,
        })
    }

    /// A table from an explicit list of uniform codes. Intended for checking
    /// that consumers notice a broken table.
    pub fn from_codes(points: u32, mut codes: Vec<u32>) -> Self {
        codes.sort_unstable();
        codes.dedup();
        UniformTable {
            points,
            uniform_codes: codes,
        }
    }

    pub fn points(&self) -> u32 {
        self.points
    }

    pub fn uniform_codes(&self) -> &[u32] {
        &self.uniform_codes
    }

    pub fn bin_count(&self) -> usize {
        self.uniform_codes.len() + 1
    }

    #[inline]
    pub fn bin_of(&self, code: u32) -> usize {
        self.uniform_codes
            .binary_search(&code)
            .unwrap_or(self.uniform_codes.len())
    }
}

/// Per-pixel codes with a mask over the `R`-wide border.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeImage {
    pub codes: Plane<u32>,
    pub valid: Plane<bool>,
    pub spec: NeighborhoodSpec,
}

impl CodeImage {
    pub fn valid_count(&self) -> usize {
        self.valid.as_slice().iter().filter(|&&v| v).count()
    }

    pub fn valid_codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.codes
            .as_slice()
            .iter()
            .zip(self.valid.as_slice())
            .filter_map(|(&c, &v)| v.then_some(c))
    }
}

/// Encodes every pixel with a complete neighborhood.
///
/// Samples are interpolated from differences to the center, so adding a
/// constant to an integer-valued plane leaves every code unchanged.
pub fn encode_image(plane: &Plane<f64>, spec: &NeighborhoodSpec) -> Result<CodeImage> {
    let r = spec.border();
    let (w, h) = (plane.width(), plane.height());
    let needed = 2 * r + 1;
    if w < needed || h < needed {
        return Err(Error::PlaneTooSmall {
            width: w,
            height: h,
            radius: spec.radius,
            needed,
        });
    }
    let taps: Vec<Tap> = spec.offsets().into_iter().map(|(dx, dy)| Tap::new(dx, dy)).collect();
    let mut codes = Plane::filled(w, h, 0u32);
    let mut valid = Plane::filled(w, h, false);
    for cy in r..h - r {
        for cx in r..w - r {
            let c = plane.get(cx, cy);
            let mut code = 0u32;
            for (p, tap) in taps.iter().enumerate() {
                if tap.read(plane, cx, cy, |v| v - c) > 0.0 {
                    code |= 1 << p;
                }
            }
            codes.set(cx, cy, code);
            valid.set(cx, cy, true);
        }
    }
    Ok(CodeImage {
        codes,
        valid,
        spec: *spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec(p: u32, r: u32) -> NeighborhoodSpec {
        NeighborhoodSpec::new(p, r).unwrap()
    }

    #[test]
    fn parse_scales() {
        assert_eq!("16:2".parse::<NeighborhoodSpec>().unwrap(), spec(16, 2));
        assert!("16".parse::<NeighborhoodSpec>().is_err());
        assert!("40:1".parse::<NeighborhoodSpec>().is_err());
        assert!("8:0".parse::<NeighborhoodSpec>().is_err());
    }

    #[test]
    fn constant_plane_samples() {
        let plane = Plane::filled(9, 9, 3.25);
        let s = sample_circle(&plane, 4, 4, &spec(24, 3)).unwrap();
        assert_eq!(s, vec![3.25; 24]);
        assert!(sample_circle(&plane, 2, 4, &spec(24, 3)).is_err());
    }

    #[test]
    fn axis_samples_hit_pixels() {
        let plane = Plane::from_fn(3, 3, |x, y| (10 * y + x) as f64);
        let s = sample_circle(&plane, 1, 1, &spec(8, 1)).unwrap();
        // right, up, left, down
        assert_eq!(s[0], plane.get(2, 1));
        assert_eq!(s[2], plane.get(1, 0));
        assert_eq!(s[4], plane.get(0, 1));
        assert_eq!(s[6], plane.get(1, 2));
    }

    #[test]
    fn diagonal_sample_matches_hand_bilinear() {
        let vals = [[1.0, 7.0, 2.0], [4.0, 5.0, 9.0], [3.0, 8.0, 6.0]];
        let plane = Plane::from_fn(3, 3, |x, y| vals[y][x]);
        let s = sample_circle(&plane, 1, 1, &spec(8, 1)).unwrap();
        // sample 1 sits at (1 + c, 1 - c), c = cos 45°; cell spanned by
        // (1,0),(2,0),(1,1),(2,1) with tx = c, ty = 1 - c
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let (tx, ty) = (c, 1.0 - c);
        let expected = vals[0][1] * (1.0 - tx) * (1.0 - ty)
            + vals[0][2] * tx * (1.0 - ty)
            + vals[1][1] * (1.0 - tx) * ty
            + vals[1][2] * tx * ty;
        assert_abs_diff_eq!(s[1], expected, epsilon = 1e-12);
    }

    #[test]
    fn code_examples() {
        assert_eq!(lbp_code(&[5.0; 8], 5.0), 0);
        assert_eq!(lbp_code(&[6.0; 8], 5.0), 255);
        let alt: Vec<f64> = (0..8).map(|p| if p % 2 == 0 { 6.0 } else { 4.0 }).collect();
        assert_eq!(lbp_code(&alt, 5.0), 0b0101_0101);
    }

    #[test]
    fn uniformity_examples() {
        assert_eq!(uniformity(0, 8), 0);
        assert_eq!(uniformity(255, 8), 0);
        assert_eq!(uniformity(0b0000_1111, 8), 2);
        assert_eq!(uniformity(85, 8), 8);
        assert_eq!(uniformity(1 << 23, 24), 2);
    }

    #[test]
    fn table_sizes_match_closed_form() {
        for p in [8u32, 16, 24] {
            let t = UniformTable::new(p).unwrap();
            assert_eq!(t.uniform_codes().len(), (p * (p - 1) + 2) as usize);
            assert_eq!(t.bin_count(), uniform_bin_count(p));
            assert!(t.uniform_codes().iter().all(|&c| uniformity(c, p) <= 2));
        }
        let t = UniformTable::new(8).unwrap();
        assert_eq!(t.bin_of(0), 0);
        assert_eq!(t.bin_of(85), 58);
        assert_eq!(t.bin_of(255), 57);
    }

    #[test]
    fn table_matches_enumeration_for_p8() {
        let t = UniformTable::new(8).unwrap();
        let enumerated: Vec<u32> = (0..256).filter(|&c| uniformity(c, 8) <= 2).collect();
        assert_eq!(enumerated.len(), 58);
        assert_eq!(t.uniform_codes(), enumerated.as_slice());
    }

    #[test]
    fn encode_border_and_size() {
        let plane = Plane::filled(128, 128, 1.0);
        let ci = encode_image(&plane, &spec(24, 3)).unwrap();
        assert_eq!(ci.valid_count(), 122 * 122);
        assert!(ci.valid_codes().all(|c| c == 0));
        assert!(!ci.valid.get(2, 60) && ci.valid.get(3, 3));
        assert!(matches!(
            encode_image(&Plane::filled(6, 10, 0.0), &spec(24, 3)),
            Err(Error::PlaneTooSmall { needed: 7, .. })
        ));
    }

    #[test]
    fn single_bright_pixel() {
        let plane = Plane::from_fn(7, 7, |x, y| if (x, y) == (3, 3) { 100.0 } else { 0.0 });
        let s8 = spec(8, 1);
        // each axis neighbor hits the bright pixel exactly with one sample;
        // the two diagonal samples beside it pick up an interpolated share
        for ((cx, cy), hit) in [((4, 3), 4), ((3, 2), 6), ((2, 3), 0), ((3, 4), 2)] {
            let s = sample_circle(&plane, cx, cy, &s8).unwrap();
            let (before, after) = ((hit + 7) % 8, (hit + 1) % 8);
            for (p, &v) in s.iter().enumerate() {
                if p == hit {
                    assert_eq!(v, 100.0);
                } else if p == before || p == after {
                    assert!(v > 0.0 && v < 100.0);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
            let ci = encode_image(&plane, &s8).unwrap();
            assert_eq!(ci.codes.get(cx, cy), (1 << hit) | (1 << before) | (1 << after));
        }
        assert_eq!(encode_image(&plane, &s8).unwrap().codes.get(3, 3), 0);
    }

    proptest! {
        #[test]
        fn code_shift_invariant(s in proptest::collection::vec(-50i32..50, 8), c in -50i32..50, k in -100i32..100) {
            let a: Vec<f64> = s.iter().map(|&v| v as f64).collect();
            let b: Vec<f64> = s.iter().map(|&v| (v + k) as f64).collect();
            prop_assert_eq!(lbp_code(&a, c as f64), lbp_code(&b, (c + k) as f64));
        }

        #[test]
        fn uniformity_rotation_invariant(code in 0u32..(1 << 16), rot in 0u32..16) {
            let mask = (1u32 << 16) - 1;
            let r = ((code << rot) | (code >> ((16 - rot) % 16))) & mask;
            prop_assert_eq!(uniformity(code, 16), uniformity(r, 16));
        }

        #[test]
        fn encode_gray_shift_invariant(data in proptest::collection::vec(0u8..=200, 100), k in 0u8..=55, si in 0usize..3) {
            let s = NeighborhoodSpec::default_scales()[si];
            let a = Plane::from_vec(10, 10, data.iter().map(|&v| v as f64).collect());
            let b = a.map(|v| v + k as f64);
            prop_assert_eq!(encode_image(&a, &s).unwrap(), encode_image(&b, &s).unwrap());
        }
    }
}
