//! A from-scratch ORB feature pipeline: FAST corner detection,
//! intensity-centroid orientation, steered binary descriptors, and
//! brute-force Hamming matching, collapsed into the frame-to-reference
//! distance `D ∈ [0, 1]` used by the realism reward.
//!
//! Everything here is deterministic: the descriptor sampling pattern comes
//! from a fixed, documented linear congruential generator, so descriptors
//! are stable across runs and machines and may be persisted.

mod brief;
mod fast;
mod matching;

pub use brief::{compute_orientation, BRIEF_PAIRS};
pub use fast::detect_fast;
pub use matching::{hamming, match_bf, MatchSet, PairMatch};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagekit::{box_filter_5x5, downscale_bilinear, to_grayscale, Image, ImageError};

/// Minimum image side for detection: the 18-pixel patch margin on both
/// sides plus the center pixel.
pub const MIN_IMAGE_SIDE: u32 = 37;
/// Patch-feasibility margin: keypoints keep at least this many pixels
/// between themselves and every image border.
pub const BORDER_MARGIN: u32 = 18;

#[derive(Debug, Error)]
pub enum OrbError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("image {width}x{height} is too small for detection (needs {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE})")]
    ImageTooSmall { width: u32, height: u32 },
}

/// Detection and matching parameters, with the defaults used throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrbParams {
    /// FAST intensity threshold `t` (a circle pixel must differ from the
    /// center by more than this to vote).
    pub threshold: u8,
    /// Keypoint budget per pyramid level, kept by descending corner score.
    pub max_keypoints: usize,
    /// Pyramid depth; level `n` is the source downscaled by
    /// `scale_factor^n`.
    pub levels: u32,
    /// Pyramid downscale factor between levels.
    pub scale_factor: f64,
    /// The distance aggregate averages over at most this many best matches.
    pub top_matches: usize,
    /// Fewer mutual matches than this scores the maximal distance 1.0.
    pub min_matches: usize,
}

impl Default for OrbParams {
    fn default() -> Self {
        Self {
            threshold: 20,
            max_keypoints: 256,
            levels: 2,
            scale_factor: 1.2,
            top_matches: 32,
            min_matches: 8,
        }
    }
}

/// A detected corner. Coordinates are in source-image scale (multiply a
/// level-local position by `scale_factor^octave` to get here); `angle` is
/// the intensity-centroid orientation in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub score: f64,
    pub angle: f64,
    pub octave: u32,
}

/// A 256-bit binary descriptor, bit `i` stored at `words[i / 64]` bit
/// `i % 64` (least significant bit first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Descriptor {
    words: [u64; 4],
}

impl Descriptor {
    pub const BITS: u32 = 256;

    pub fn from_words(words: [u64; 4]) -> Self {
        Self { words }
    }

    pub fn words(&self) -> [u64; 4] {
        self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < 256);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

/// Keypoints with their descriptors, pooled across pyramid levels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrbFeatures {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

/// Runs the full pipeline on one image: build the pyramid, detect FAST
/// corners per level, orient them, and extract steered descriptors from a
/// 5x5-box-smoothed copy of each level.
///
/// Infallible by design: color input is grayscaled, and levels too small
/// to detect on are skipped (an undetectable image yields empty features,
/// which the distance aggregate treats as maximally distant).
pub fn describe_image(image: &Image, params: &OrbParams) -> OrbFeatures {
    let gray = to_grayscale(image);
    let mut features = OrbFeatures::default();
    let mut level_img = gray;
    for level in 0..params.levels.max(1) {
        if level > 0 {
            level_img = match downscale_bilinear(&level_img, params.scale_factor) {
                Ok(img) => img,
                Err(_) => break,
            };
        }
        if level_img.width() < MIN_IMAGE_SIDE || level_img.height() < MIN_IMAGE_SIDE {
            break;
        }
        let kps = match detect_fast(&level_img, params.threshold, params.max_keypoints) {
            Ok(kps) => kps,
            Err(_) => break,
        };
        if kps.is_empty() {
            continue;
        }
        let smoothed = box_filter_5x5(&level_img).expect("pyramid levels are grayscale");
        let scale = params.scale_factor.powi(level as i32);
        for kp in kps {
            let angle = compute_orientation(&level_img, &kp);
            let oriented = Keypoint { angle, octave: level, ..kp };
            let desc = brief::describe_keypoint(&smoothed, &oriented);
            features.keypoints.push(Keypoint {
                x: oriented.x * scale,
                y: oriented.y * scale,
                ..oriented
            });
            features.descriptors.push(desc);
        }
    }
    features
}

/// Aggregates a cross-checked match set into the scalar distance `D`:
/// the mean normalized Hamming distance over the best `top_matches`
/// matches (fewer, if fewer exist), or 1.0 when mutual matches are scarcer
/// than `min_matches`.
pub fn features_distance(a: &OrbFeatures, b: &OrbFeatures, params: &OrbParams) -> f64 {
    let matches = match_bf(&a.descriptors, &b.descriptors);
    if matches.pairs().len() < params.min_matches.max(1) {
        return 1.0;
    }
    let mut pairs: Vec<&PairMatch> = matches.pairs().iter().collect();
    pairs.sort_by_key(|p| (p.hamming, p.a));
    let k = pairs.len().min(params.top_matches.max(1));
    let sum: u32 = pairs[..k].iter().map(|p| p.hamming).sum();
    sum as f64 / (k as f64 * f64::from(Descriptor::BITS))
}

/// Morphological distance between a frame and a reference image through
/// the full detect/describe/match pipeline. Always in `[0, 1]`; degenerate
/// images (too blank or too small to detect on) score 1.0.
pub fn frame_ref_distance(frame: &Image, reference: &Image, params: &OrbParams) -> f64 {
    let fa = describe_image(frame, params);
    let fb = describe_image(reference, params);
    features_distance(&fa, &fb, params)
}

/// Debug dump of keypoints as CSV with header `x,y,score,angle,octave`.
pub fn keypoints_csv(kps: &[Keypoint]) -> String {
    let mut out = String::from("x,y,score,angle,octave\n");
    for kp in kps {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            kp.x, kp.y, kp.score, kp.angle, kp.octave
        ));
    }
    out
}
