//! The procedural trilobite renderer: a segmented elliptical sprite
//! translating across a static textured seabed, with token-controlled
//! detail, jitter, speed, and clip-boundary continuity.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use super::{RenderConfig, SimError};
use crate::imagekit::{encode_pnm, Image, Video, DEFAULT_FPS};
use crate::script::{clip_frame_ranges, PromptScript};
use crate::util::{mix_seed, splitmix64, unit_f64};

/// Sprite semi-axes at scale 1, in pixels.
const SPRITE_A: f64 = 32.0;
const SPRITE_B: f64 = 20.0;

/// The sprite's intrinsic speckle pattern is anchored to this fixed
/// seed so every render — video frames and corpus stills alike — shows
/// the same body texture and stays mutually matchable.
const SPRITE_TEXTURE_SEED: u64 = 0x5EA_BED;

/// The sprite center is kept at least `SPRITE_A + EDGE_MARGIN` from the
/// frame edges so the whole body sits inside the feature detector's
/// feasible region (18 px) with a pixel to spare.
const EDGE_MARGIN: f64 = 19.0;

/// Per-purpose seed streams, so that changing a prompt token never
/// shifts the random values used elsewhere (this is what makes the
/// token-monotonicity comparisons pointwise).
const JITTER_STREAM: u64 = 1;
const RESET_STREAM: u64 = 2;
const BACKGROUND_STREAM: u64 = 3;

/// Clips whose smear floor (cruise speed and jitter envelope, in px per
/// frame) stays at or below this render crisp, pixel-aligned sprites;
/// anything faster is motion-blurred.
const CRISP_SMEAR_LIMIT: f64 = 0.75;

/// Rendering detail derived from a clip's text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailLevel {
    /// Keyword score: "hard shell" 4, "longitudinal lobes" 3,
    /// "segmented" 2, summed over the keywords present.
    pub points: u32,
    /// Transverse segment lines on the thorax; 0 for a plain body.
    pub segment_lines: u32,
    /// Texture contrast in [0.25, 1], scaling every marking's strength.
    pub contrast: f64,
}

/// Maps clip text to rendering detail by keyword. A text with no detail
/// keyword (e.g. "plain") renders a featureless body whose markings all
/// stay below the corner detector's threshold.
pub fn detail_level(text: &str) -> DetailLevel {
    let t = text.to_ascii_lowercase();
    let mut points = 0;
    if t.contains("hard shell") {
        points += 4;
    }
    if t.contains("longitudinal lobes") {
        points += 3;
    }
    if t.contains("segmented") {
        points += 2;
    }
    let segment_lines = if points == 0 { 0 } else { points + 2 };
    let contrast = (0.25 + 0.10 * f64::from(points)).min(1.0);
    DetailLevel { points, segment_lines, contrast }
}

/// Positional-jitter multiplier for a clip's transition phrase:
/// "smoothly" 0.2×, "gradually" 0.6×, "abruptly" 2×, otherwise 1×.
/// The first phrase found (in that order) wins.
pub fn jitter_scale(text: &str) -> f64 {
    let t = text.to_ascii_lowercase();
    if t.contains("smoothly") {
        0.2
    } else if t.contains("gradually") {
        0.6
    } else if t.contains("abruptly") {
        2.0
    } else {
        1.0
    }
}

/// Horizontal cruise speed in pixels per frame for a clip's movement
/// verb: "darts" 2.4, "glides" 1.2, "crawls" 0.5, otherwise 0.9.
pub fn movement_speed(text: &str) -> f64 {
    let t = text.to_ascii_lowercase();
    if t.contains("darts") {
        2.4
    } else if t.contains("crawls") {
        0.5
    } else if t.contains("glides") {
        1.2
    } else {
        0.9
    }
}

/// Whether a clip's transition phrase carries the sprite position across
/// the preceding clip boundary instead of cutting to a fresh one.
pub fn keeps_continuity(text: &str) -> bool {
    let t = text.to_ascii_lowercase();
    t.contains("smoothly") || t.contains("gradually")
}

fn hash01(x: i64, y: i64, salt: u64) -> f64 {
    let mixed = splitmix64(
        salt ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (y as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9),
    );
    unit_f64(mixed)
}

/// The static seabed: a dim base with two slow sinusoids and ±5 hashed
/// speckle — textured enough to look like ground, smooth enough to
/// yield no corners. Identical for every frame of a video.
fn background(width: u32, height: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, BACKGROUND_STREAM));
    let phase_x: f64 = rng.gen::<f64>() * TAU;
    let phase_y: f64 = rng.gen::<f64>() * TAU;
    let salt: u64 = rng.gen();
    let mut values = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        for x in 0..width {
            let v = 64.0
                + 14.0 * (TAU * f64::from(x) / 31.0 + phase_x).sin()
                + 10.0 * (TAU * f64::from(y) / 23.0 + phase_y).sin()
                + (hash01(i64::from(x), i64::from(y), salt) * 10.0 - 5.0);
            values.push(v);
        }
    }
    values
}

#[derive(Debug, Clone, Copy)]
struct SpritePose {
    x: f64,
    y: f64,
    angle: f64,
    scale: f64,
}

/// Shell intensity at normalized body coordinates. `nu, nv` are the
/// ellipse-normalized coordinates (|nu|,|nv| ≤ 1 inside), `su, sv` the
/// canonical-scale local coordinates used to anchor the speckle grid.
fn sprite_value(nu: f64, nv: f64, su: f64, sv: f64, q: f64, level: &DetailLevel) -> f64 {
    let c = level.contrast;
    // The carapace darkens as its markings strengthen, so a detailed
    // body disturbs the seabed's cell statistics *less* than a bright
    // featureless one — detail must never trade against smoothness.
    let mut val = 150.0 - 70.0 * c + 36.0 * (1.0 - q);
    if nu < -0.4 {
        // Cephalon highlight toward the head end.
        val += 12.0;
    }
    if q >= 0.80 {
        // Rim contour around the whole outline.
        val -= 45.0 * c;
    }
    let lines = level.segment_lines;
    if lines > 0 {
        // Transverse segment lines across the thorax.
        if nu >= -0.25 {
            let wpos = (nu + 0.25) / 1.25;
            let k = (wpos * f64::from(lines + 1)).round();
            if k >= 1.0 && k <= f64::from(lines) {
                let center = k / f64::from(lines + 1);
                if (wpos - center).abs() < 0.024 {
                    val -= 55.0 * c;
                }
            }
        }
        // Two axial furrows running head to tail.
        if nu <= 0.92 && ((nv - 0.40).abs() < 0.06 || (nv + 0.40).abs() < 0.06) {
            val -= 45.0 * c;
        }
        // Speckle anchored to the canonical sprite grid, so the texture
        // translates and rotates rigidly with the body.
        let gx = su.round() as i64;
        let gy = sv.round() as i64;
        val += (hash01(gx, gy, SPRITE_TEXTURE_SEED) * 2.0 - 1.0) * 12.0 * c;
    }
    val.clamp(0.0, 255.0)
}

/// Paints the sprite at `pose` into `acc` with the given blending
/// weight, relative to the untouched background `bg`.
fn draw_sprite(
    acc: &mut [f64],
    bg: &[f64],
    width: u32,
    height: u32,
    pose: &SpritePose,
    level: &DetailLevel,
    weight: f64,
) {
    let a = SPRITE_A * pose.scale;
    let b = SPRITE_B * pose.scale;
    let radius = a.max(b) + 1.0;
    let x0 = ((pose.x - radius).floor().max(0.0)) as u32;
    let y0 = ((pose.y - radius).floor().max(0.0)) as u32;
    let x1 = ((pose.x + radius).ceil() as u32).min(width.saturating_sub(1));
    let y1 = ((pose.y + radius).ceil() as u32).min(height.saturating_sub(1));
    let (sin_t, cos_t) = pose.angle.sin_cos();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = f64::from(x) - pose.x;
            let dy = f64::from(y) - pose.y;
            let u = dx * cos_t + dy * sin_t;
            let v = -dx * sin_t + dy * cos_t;
            let nu = u / a;
            let nv = v / b;
            let q = nu * nu + nv * nv;
            if q > 1.0 {
                continue;
            }
            let val = sprite_value(nu, nv, u / pose.scale, v / pose.scale, q, level);
            let idx = (y * width + x) as usize;
            acc[idx] += weight * (val - bg[idx]);
        }
    }
}

fn quantize(values: &[f64], width: u32, height: u32) -> Image {
    let pixels: Vec<u8> = values
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    Image::from_pixels(width, height, 1, pixels).expect("buffer sized to dimensions")
}

#[derive(Debug, Clone, Copy)]
struct FramePose {
    cur: (f64, f64),
    prev: (f64, f64),
    /// Sign of the clip's horizontal travel at this frame, used to
    /// orient the minimum exposure smear when the realized path is
    /// shorter than the clip's smear floor.
    dir: f64,
    clip: usize,
}

fn sprite_bounds(cfg: &RenderConfig, scale: f64) -> Result<(f64, f64, f64, f64), SimError> {
    let xmin = SPRITE_A * scale + EDGE_MARGIN;
    let xmax = f64::from(cfg.width) - 1.0 - SPRITE_A * scale - EDGE_MARGIN;
    let ymin = SPRITE_B * scale + EDGE_MARGIN;
    let ymax = f64::from(cfg.height) - 1.0 - SPRITE_B * scale - EDGE_MARGIN;
    if xmin >= xmax || ymin >= ymax {
        return Err(SimError::BadConfig(format!(
            "frame {}x{} too small for the sprite and its edge margin",
            cfg.width, cfg.height
        )));
    }
    Ok((xmin, xmax, ymin, ymax))
}

/// Computes every frame's sprite position in one deterministic pass.
///
/// Randomness comes from two independent streams: per-frame jitter
/// (always two draws per frame) and per-clip reset candidates (always
/// three draws per clip). Draw counts never depend on the clip text, so
/// two scripts differing only in a token see the same underlying values
/// — jitter is the *same* offset sequence, scaled per clip.
fn plan_trajectory(script: &PromptScript, cfg: &RenderConfig) -> Result<Vec<FramePose>, SimError> {
    let ranges = clip_frame_ranges(script, cfg.total_frames)?;
    let (xmin, xmax, ymin, ymax) = sprite_bounds(cfg, 1.0)?;
    let mut jitter_rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, JITTER_STREAM));
    let mut reset_rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, RESET_STREAM));

    let mut poses = Vec::with_capacity(cfg.total_frames as usize);
    let mut cx = (xmin + 2.0).round();
    let mut cy = ((ymin + ymax) / 2.0).round();
    let mut dir = 1.0;
    let mut prev: Option<(f64, f64)> = None;
    for (clip, &(lo, hi)) in ranges.ranges().iter().enumerate() {
        let text = &script.clips()[clip].text;
        let speed = movement_speed(text);
        let amplitude = jitter_scale(text) * cfg.base_jitter;
        // Reset candidates are drawn for every boundary to keep the
        // stream aligned; they take effect only on a discontinuous cut.
        let rx = xmin + reset_rng.gen::<f64>() * (xmax - xmin);
        let ry = ymin + reset_rng.gen::<f64>() * (ymax - ymin);
        let rdir: f64 = reset_rng.gen();
        if clip > 0 && !keeps_continuity(text) {
            cx = rx;
            cy = ry;
            dir = if rdir < 0.5 { 1.0 } else { -1.0 };
            prev = None; // hard cut: no motion blur across the jump
        }
        for _frame in lo..=hi {
            cx += dir * speed;
            if cx > xmax {
                cx = 2.0 * xmax - cx;
                dir = -1.0;
            }
            if cx < xmin {
                cx = 2.0 * xmin - cx;
                dir = 1.0;
            }
            let jx = (jitter_rng.gen::<f64>() * 2.0 - 1.0) * amplitude;
            let jy = (jitter_rng.gen::<f64>() * 2.0 - 1.0) * amplitude;
            let fx = (cx + jx).clamp(xmin, xmax);
            let fy = (cy + jy).clamp(ymin, ymax);
            let cur = (fx, fy);
            poses.push(FramePose { cur, prev: prev.unwrap_or(cur), dir, clip });
            prev = Some(cur);
        }
    }
    Ok(poses)
}

/// Renders a script into a grayscale video. Pure in (script, cfg):
/// identical inputs produce bit-identical videos.
pub fn render_script(script: &PromptScript, cfg: &RenderConfig) -> Result<Video, SimError> {
    cfg.validate()?;
    let poses = plan_trajectory(script, cfg)?;
    let bg = background(cfg.width, cfg.height, cfg.seed);
    let levels: Vec<DetailLevel> =
        script.clips().iter().map(|c| detail_level(&c.text)).collect();
    // A clip's exposure smear spans at least its cruise speed and its
    // jitter envelope: a fast or twitchy gait never yields a crisp
    // frame, even when two consecutive positions happen to coincide.
    let smear_floor: Vec<f64> = script
        .clips()
        .iter()
        .map(|c| movement_speed(&c.text).max(jitter_scale(&c.text) * cfg.base_jitter))
        .collect();
    let frames: Vec<Image> = poses
        .par_iter()
        .map(|pose| {
            let mut acc = bg.clone();
            let floor = smear_floor[pose.clip];
            // Sub-pixel smear leaves no streak: a slow, steady clip is
            // drawn crisp, snapped to the pixel grid — the same sampling
            // phase as the reference stills. Anything faster integrates
            // continuous sub-pixel motion over at least the smear floor
            // and so never reproduces a still exactly.
            if floor <= CRISP_SMEAR_LIMIT {
                let sub = SpritePose {
                    x: pose.cur.0.round(),
                    y: pose.cur.1.round(),
                    angle: 0.0,
                    scale: 1.0,
                };
                draw_sprite(&mut acc, &bg, cfg.width, cfg.height, &sub, &levels[pose.clip], 1.0);
                return quantize(&acc, cfg.width, cfg.height);
            }
            let (mut vx, mut vy) = (pose.cur.0 - pose.prev.0, pose.cur.1 - pose.prev.1);
            let path = (vx * vx + vy * vy).sqrt();
            if path < floor {
                vx = pose.dir * floor;
                vy = 0.0;
            }
            let subs = 3;
            for k in 1..=subs {
                let t = f64::from(k) / f64::from(subs);
                let sub = SpritePose {
                    x: pose.cur.0 - (1.0 - t) * vx,
                    y: pose.cur.1 - (1.0 - t) * vy,
                    angle: 0.0,
                    scale: 1.0,
                };
                draw_sprite(
                    &mut acc,
                    &bg,
                    cfg.width,
                    cfg.height,
                    &sub,
                    &levels[pose.clip],
                    1.0 / f64::from(subs),
                );
            }
            quantize(&acc, cfg.width, cfg.height)
        })
        .collect();
    Ok(Video::new(frames, DEFAULT_FPS)?)
}

/// Renders a single still of the sprite at an arbitrary pose — the
/// building block of the reference corpus.
pub fn render_still(
    width: u32,
    height: u32,
    pose_x: f64,
    pose_y: f64,
    angle: f64,
    scale: f64,
    level: &DetailLevel,
    background_seed: u64,
) -> Image {
    let bg = background(width, height, background_seed);
    let mut acc = bg.clone();
    let pose = SpritePose { x: pose_x, y: pose_y, angle, scale };
    draw_sprite(&mut acc, &bg, width, height, &pose, level, 1.0);
    quantize(&acc, width, height)
}

/// Detail texts cycled across corpus entries, so the references span
/// several segment-line counts and contrast levels.
const CORPUS_DETAILS: [&str; 3] = [
    "hard shell",
    "hard shell segmented",
    "hard shell longitudinal lobes segmented",
];

/// Scales cycled across corpus entries. Starting the cycle at 1.0
/// guarantees references at the videos' native sprite scale while the
/// rest add size diversity.
const CORPUS_SCALES: [f64; 4] = [1.0, 0.9, 1.1, 1.15];

/// Writes `count` high-detail stills at varied positions and scales into
/// `dir` as `ref_NNNNNN.pgm`, creating the directory if needed. All
/// stills use the standardized dorsal orientation of fossil-plate
/// photography (anterior left), matching the videos' convention.
/// Deterministic in (cfg, count, seed): reruns produce identical bytes.
pub fn make_reference_corpus(
    dir: &Path,
    cfg: &RenderConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<PathBuf>, SimError> {
    cfg.validate()?;
    if count == 0 {
        return Err(SimError::BadConfig("corpus count must be at least 1".into()));
    }
    let max_scale = CORPUS_SCALES.iter().fold(1.0, |m: f64, &s| m.max(s));
    sprite_bounds(cfg, max_scale)?;
    std::fs::create_dir_all(dir)
        .map_err(|source| SimError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = Vec::with_capacity(count);
    for i in 0..count {
        let entry_seed = mix_seed(seed, i as u64);
        let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(entry_seed, 1));
        // Specimens are centered on the pixel grid: integer positions
        // keep a still's texture in the same sampling phase as a video
        // frame whose sprite lands on a whole-pixel position.
        let cx = (f64::from(cfg.width) / 2.0 + (rng.gen::<f64>() * 2.0 - 1.0) * 6.0).round();
        let cy = (f64::from(cfg.height) / 2.0 + (rng.gen::<f64>() * 2.0 - 1.0) * 6.0).round();
        let scale = CORPUS_SCALES[i % CORPUS_SCALES.len()];
        let level = detail_level(CORPUS_DETAILS[i % CORPUS_DETAILS.len()]);
        let image = render_still(
            cfg.width,
            cfg.height,
            cx,
            cy,
            0.0,
            scale,
            &level,
            mix_seed(entry_seed, 2),
        );
        let path = dir.join(format!("ref_{i:06}.pgm"));
        std::fs::write(&path, encode_pnm(&image))
            .map_err(|source| SimError::Io { path: path.clone(), source })?;
        paths.push(path);
    }
    Ok(paths)
}
