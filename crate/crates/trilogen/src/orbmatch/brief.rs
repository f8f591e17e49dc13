//! Intensity-centroid orientation and the steered 256-bit descriptor.
//!
//! The sampling pattern is wire-stable: 256 point pairs drawn once from a
//! linear congruential generator (seed `0x4F52425F`, modulus 2³²,
//! multiplier 1664525, increment 1013904223). Each coordinate consumes two
//! generator steps `u = (state + 0.5) / 2³²` and becomes
//! `clamp(round(6.2 · √(−2 ln u₁) · cos(2π u₂)), −15, 15)` — a discretized
//! Gaussian with σ = 31/5 confined to the 31×31 patch (the Box–Muller sine
//! companion is discarded). Coordinates are drawn in the order
//! `p.x, p.y, q.x, q.y` per pair. Changing any of this invalidates every
//! stored descriptor.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use super::{Descriptor, Keypoint};
use crate::imagekit::Image;

/// Number of point-pair intensity tests per descriptor.
pub const BRIEF_PAIRS: usize = 256;
/// Orientation quantization: 30 steering bins of 12° each.
const STEERING_BINS: usize = 30;
/// Radius of the orientation disc and half-extent of the sampling patch.
const PATCH_RADIUS: i64 = 15;

struct Lcg(u32);

impl Lcg {
    fn next_unit(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
        (f64::from(self.0) + 0.5) / 4_294_967_296.0
    }

    fn next_coord(&mut self) -> i32 {
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        let z = (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos();
        (6.2 * z).round().clamp(-15.0, 15.0) as i32
    }
}

/// `[p.x, p.y, q.x, q.y]` per pair.
type Pattern = [[i32; 4]; BRIEF_PAIRS];

fn base_pattern() -> &'static Pattern {
    static PATTERN: OnceLock<Pattern> = OnceLock::new();
    PATTERN.get_or_init(|| {
        let mut lcg = Lcg(0x4F52_425F);
        let mut pattern = [[0i32; 4]; BRIEF_PAIRS];
        for pair in &mut pattern {
            for coord in pair.iter_mut() {
                *coord = lcg.next_coord();
            }
        }
        pattern
    })
}

/// The base pattern rotated to each steering bin's angle, rounded to the
/// pixel grid. Rotated corners may poke past the patch (up to ~21 px);
/// sampling clamps at image borders, which the 18-px keypoint margin makes
/// a rare, edge-replicated read rather than an error.
fn steered_patterns() -> &'static [Pattern; STEERING_BINS] {
    static STEERED: OnceLock<[Pattern; STEERING_BINS]> = OnceLock::new();
    STEERED.get_or_init(|| {
        let base = base_pattern();
        std::array::from_fn(|bin| {
            let phi = TAU * bin as f64 / STEERING_BINS as f64;
            let (sin, cos) = phi.sin_cos();
            let rot = |x: i32, y: i32| -> (i32, i32) {
                let rx = f64::from(x) * cos - f64::from(y) * sin;
                let ry = f64::from(x) * sin + f64::from(y) * cos;
                (rx.round() as i32, ry.round() as i32)
            };
            let mut pattern = [[0i32; 4]; BRIEF_PAIRS];
            for (i, &[px, py, qx, qy]) in base.iter().enumerate() {
                let (rpx, rpy) = rot(px, py);
                let (rqx, rqy) = rot(qx, qy);
                pattern[i] = [rpx, rpy, rqx, rqy];
            }
            pattern
        })
    })
}

/// Intensity-centroid orientation: image moments `m₁₀ = Σ x·I`,
/// `m₀₁ = Σ y·I` over the radius-15 disc around the keypoint (offsets
/// relative to the center), mapped to `[0, 2π)` via `atan2(m₀₁, m₁₀)`.
/// A patch with both moments zero gets angle 0.
pub fn compute_orientation(gray: &Image, kp: &Keypoint) -> f64 {
    let cx = kp.x.round() as i64;
    let cy = kp.y.round() as i64;
    let mut m10 = 0i64;
    let mut m01 = 0i64;
    for dy in -PATCH_RADIUS..=PATCH_RADIUS {
        for dx in -PATCH_RADIUS..=PATCH_RADIUS {
            if dx * dx + dy * dy > PATCH_RADIUS * PATCH_RADIUS {
                continue;
            }
            let i = i64::from(gray.sample_clamped(cx + dx, cy + dy, 0));
            m10 += dx * i;
            m01 += dy * i;
        }
    }
    if m10 == 0 && m01 == 0 {
        return 0.0;
    }
    let angle = (m01 as f64).atan2(m10 as f64);
    if angle < 0.0 {
        angle + TAU
    } else {
        angle
    }
}

/// Extracts the steered descriptor for one keypoint from a pre-smoothed
/// grayscale image (the caller applies the 5x5 box filter once per image).
/// Bit `i` is 1 iff the smoothed intensity at `p_i` is strictly below the
/// one at `q_i`.
pub(crate) fn describe_keypoint(smoothed: &Image, kp: &Keypoint) -> Descriptor {
    let bin_width = TAU / STEERING_BINS as f64;
    let bin = ((kp.angle / bin_width).round() as i64).rem_euclid(STEERING_BINS as i64) as usize;
    let pattern = &steered_patterns()[bin];
    let cx = kp.x.round() as i64;
    let cy = kp.y.round() as i64;
    let mut words = [0u64; 4];
    for (i, &[px, py, qx, qy]) in pattern.iter().enumerate() {
        let ip = smoothed.sample_clamped(cx + i64::from(px), cy + i64::from(py), 0);
        let iq = smoothed.sample_clamped(cx + i64::from(qx), cy + i64::from(qy), 0);
        if ip < iq {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    Descriptor::from_words(words)
}
