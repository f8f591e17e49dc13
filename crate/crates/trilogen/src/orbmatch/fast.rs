//! FAST-9 corner detection on the 16-pixel Bresenham circle of radius 3.
//!
//! A pixel `p` is a corner iff at least 9 contiguous circle pixels are all
//! brighter than `p + t` or all darker than `p − t`. Its score is the
//! largest, over maximal qualifying arcs, of `Σ (|circle − p| − t)`; a 3x3
//! non-maximum suppression keeps only local score maxima. Points closer
//! than 18 pixels to a border are discarded so that orientation discs and
//! steered descriptor patches always fit.

use super::{Keypoint, OrbError, BORDER_MARGIN, MIN_IMAGE_SIDE};
use crate::imagekit::{Image, ImageError};

/// The radius-3 Bresenham circle, clockwise from 12 o'clock.
pub(crate) const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const MIN_ARC: usize = 9;

/// FAST-9 corner score of the pixel at `(x, y)`, or 0.0 if it is not a
/// corner. `x`/`y` must be at least 3 pixels inside the image.
fn corner_score(gray: &Image, x: u32, y: u32, threshold: u8) -> f64 {
    let p = i32::from(gray.at(x, y, 0));
    let t = i32::from(threshold);
    let mut class = [0i8; 16];
    let mut excess = [0i32; 16]; // |diff| − t where the pixel qualifies
    for (k, &(dx, dy)) in CIRCLE.iter().enumerate() {
        let c = i32::from(gray.at((x as i32 + dx) as u32, (y as i32 + dy) as u32, 0));
        let d = c - p;
        if d > t {
            class[k] = 1;
            excess[k] = d - t;
        } else if d < -t {
            class[k] = -1;
            excess[k] = -d - t;
        }
    }

    let mut best = 0i32;
    if class.iter().all(|&c| c == class[0]) {
        // Uniform circle: one full-length run (or none at all).
        if class[0] != 0 {
            best = excess.iter().sum();
        }
    } else {
        // Anchor the circular run enumeration at some run boundary.
        let start = (0..16)
            .find(|&k| class[k] != class[(k + 15) % 16])
            .expect("non-uniform circle has a boundary");
        let mut k = 0;
        while k < 16 {
            let c = class[(start + k) % 16];
            let mut len = 1;
            while k + len < 16 && class[(start + k + len) % 16] == c {
                len += 1;
            }
            if c != 0 && len >= MIN_ARC {
                let sum: i32 = (0..len).map(|j| excess[(start + k + j) % 16]).sum();
                best = best.max(sum);
            }
            k += len;
        }
    }
    f64::from(best.max(0))
}

/// Detects FAST-9 corners, suppresses non-maxima over 3x3 neighborhoods,
/// and returns at most `max_keypoints` keypoints ordered by descending
/// score (ties by ascending `y`, then `x`). Angles are left at 0 for the
/// orientation pass.
pub fn detect_fast(
    gray: &Image,
    threshold: u8,
    max_keypoints: usize,
) -> Result<Vec<Keypoint>, OrbError> {
    if gray.channels() != 1 {
        return Err(ImageError::NotGrayscale(gray.channels()).into());
    }
    let (w, h) = (gray.width(), gray.height());
    if w < MIN_IMAGE_SIDE || h < MIN_IMAGE_SIDE {
        return Err(OrbError::ImageTooSmall { width: w, height: h });
    }

    // Score only the patch-feasible interior; everything else stays 0.
    let mut scores = vec![0.0f64; (w * h) as usize];
    for y in BORDER_MARGIN..h - BORDER_MARGIN {
        for x in BORDER_MARGIN..w - BORDER_MARGIN {
            scores[(y * w + x) as usize] = corner_score(gray, x, y, threshold);
        }
    }

    let score_at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            scores[(y as u32 * w + x as u32) as usize]
        }
    };

    let mut kps = Vec::new();
    for y in BORDER_MARGIN..h - BORDER_MARGIN {
        for x in BORDER_MARGIN..w - BORDER_MARGIN {
            let s = scores[(y * w + x) as usize];
            if s <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nms: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx, dy) == (0, 0) {
                        continue;
                    }
                    if score_at(x as i64 + dx, y as i64 + dy) > s {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                kps.push(Keypoint {
                    x: f64::from(x),
                    y: f64::from(y),
                    score: s,
                    angle: 0.0,
                    octave: 0,
                });
            }
        }
    }

    kps.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    kps.truncate(max_keypoints);
    Ok(kps)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent FAST-9 oracle: for every start offset and arc length,
    /// test the contiguous window directly; score by summing over the
    /// longest qualifying window per polarity.
    fn naive_fast9(gray: &Image, x: u32, y: u32, t: u8) -> f64 {
        let p = i32::from(gray.at(x, y, 0));
        let t = i32::from(t);
        let vals: Vec<i32> = CIRCLE
            .iter()
            .map(|&(dx, dy)| i32::from(gray.at((x as i32 + dx) as u32, (y as i32 + dy) as u32, 0)))
            .collect();
        let mut best = 0i32;
        for start in 0..16 {
            for len in 9..=16usize {
                let window: Vec<i32> = (0..len).map(|j| vals[(start + j) % 16]).collect();
                if window.iter().all(|&v| v > p + t) || window.iter().all(|&v| v < p - t) {
                    let sum: i32 = window.iter().map(|&v| (v - p).abs() - t).sum();
                    best = best.max(sum);
                }
            }
        }
        f64::from(best)
    }

    #[test]
    fn constant_image_has_no_corners() {
        let img = Image::filled(40, 40, 1, 100);
        assert!(detect_fast(&img, 20, 100).unwrap().is_empty());
    }

    #[test]
    fn max_threshold_suppresses_everything() {
        let img = Image::from_gray_fn(40, 40, |x, y| if (x / 4 + y / 4) % 2 == 0 { 0 } else { 255 });
        assert!(detect_fast(&img, 255, 100).unwrap().is_empty());
    }

    #[test]
    fn small_image_is_rejected() {
        let img = Image::filled(36, 40, 1, 0);
        assert!(matches!(
            detect_fast(&img, 20, 10),
            Err(OrbError::ImageTooSmall { width: 36, height: 40 })
        ));
        let rgb = Image::filled(40, 40, 3, 0);
        assert!(matches!(detect_fast(&rgb, 20, 10), Err(OrbError::Image(_))));
    }

    #[test]
    fn white_square_corners_match_naive_oracle() {
        // 5x5 white square centered in a 64x64 black image.
        let img = Image::from_gray_fn(64, 64, |x, y| {
            if (30..35).contains(&x) && (30..35).contains(&y) {
                255
            } else {
                0
            }
        });
        let t = 20u8;

        // Oracle: score every feasible pixel, then 3x3 non-max suppress.
        let mut oracle = std::collections::BTreeMap::new();
        for y in 18..64 - 18 {
            for x in 18..64 - 18 {
                let s = naive_fast9(&img, x, y, t);
                if s > 0.0 {
                    oracle.insert((x, y), s);
                }
            }
        }
        let oracle_nms: Vec<((u32, u32), f64)> = oracle
            .iter()
            .filter(|(&(x, y), &s)| {
                (-1i32..=1).all(|dy| {
                    (-1i32..=1).all(|dx| {
                        (dx, dy) == (0, 0)
                            || oracle
                                .get(&((x as i32 + dx) as u32, (y as i32 + dy) as u32))
                                .is_none_or(|&n| n <= s)
                    })
                })
            })
            .map(|(&k, &s)| (k, s))
            .collect();

        let detected = detect_fast(&img, t, usize::MAX).unwrap();
        let mut got: Vec<((u32, u32), f64)> = detected
            .iter()
            .map(|kp| ((kp.x as u32, kp.y as u32), kp.score))
            .collect();
        got.sort_by_key(|&(pos, _)| pos);
        assert_eq!(got, oracle_nms);

        // And the qualitative claim: at least 4 keypoints near the corners.
        assert!(detected.len() >= 4, "got {}", detected.len());
        for kp in &detected {
            let close = [(30f64, 30f64), (34.0, 30.0), (30.0, 34.0), (34.0, 34.0)]
                .iter()
                .any(|&(cx, cy)| (kp.x - cx).abs() <= 2.0 && (kp.y - cy).abs() <= 2.0);
            assert!(close, "keypoint at ({}, {}) not near a square corner", kp.x, kp.y);
        }
    }

    #[test]
    fn scores_match_oracle_on_noise() {
        let img = Image::from_gray_fn(48, 48, |x, y| {
            (crate::util::splitmix64((u64::from(x) << 32) | u64::from(y)) % 256) as u8
        });
        for y in 18..30 {
            for x in 18..30 {
                assert_eq!(
                    super::corner_score(&img, x, y, 25),
                    naive_fast9(&img, x, y, 25),
                    "at ({x},{y})"
                );
            }
        }
    }

    #[test]
    fn budget_keeps_highest_scores() {
        let img = Image::from_gray_fn(64, 64, |x, y| {
            if (28..36).contains(&x) && (28..36).contains(&y) {
                255
            } else if (40..43).contains(&x) && (20..23).contains(&y) {
                90
            } else {
                0
            }
        });
        let all = detect_fast(&img, 20, usize::MAX).unwrap();
        let two = detect_fast(&img, 20, 2).unwrap();
        assert_eq!(two.len(), 2.min(all.len()));
        assert_eq!(&all[..two.len()], &two[..]);
        // Descending score order.
        for w in all.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
    }

    #[test]
    fn keypoints_respect_border_margin() {
        // Corners right at the feasibility boundary are kept or dropped by
        // position, never out of range.
        let img = Image::from_gray_fn(60, 60, |x, y| {
            if x >= 10 && y >= 10 && x < 50 && y < 50 && (x + y) % 7 == 0 {
                200
            } else {
                15
            }
        });
        for kp in detect_fast(&img, 20, usize::MAX).unwrap() {
            assert!(kp.x >= 18.0 && kp.x <= 41.0);
            assert!(kp.y >= 18.0 && kp.y <= 41.0);
        }
    }
}
