//! Transition smoothness: per-frame embeddings, the adjacent-frame FID
//! curve `FID_t = ||z_t − z_{t+1}||²`, and the reward `r_s = −Σ_t FID_t`,
//! totally and split per clip.
//!
//! The default embedder is a deterministic grid descriptor: the frame is
//! grayscaled, cut into `cells × cells` rectangles, and each cell emits
//! `(mean/255, stddev/255, mean Sobel magnitude/1020)`, concatenated
//! row-major into one `3·cells²`-dimensional vector. A precomputed table
//! loaded from disk can stand in when externally computed features (e.g.
//! from a pretrained network) are preferred.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::imagekit::{sobel_magnitude, to_grayscale, Image, ImageError, Video};
use crate::script::ClipRanges;

/// Number of grid cells per side used by the default embedder.
pub const DEFAULT_GRID_CELLS: u32 = 8;
/// Features emitted per grid cell (mean, stddev, mean gradient magnitude).
pub const FEATURES_PER_CELL: usize = 3;

#[derive(Debug, Error)]
pub enum SmoothnessError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("frame {width}x{height} is smaller than the {cells}x{cells} descriptor grid")]
    FrameTooSmall { width: u32, height: u32, cells: u32 },
    #[error("descriptor grid must have at least 1 cell per side")]
    ZeroGrid,
    #[error("precomputed table holds {available} embeddings but frame index {needed} was requested")]
    PrecomputedExhausted { available: usize, needed: usize },
    #[error("clip ranges end at frame {ranges_end} but the curve spans {frames} frames")]
    RangesMismatch { ranges_end: u32, frames: u32 },
    #[error("embedding rows must share one nonzero dimension (row {row} has {got}, expected {expected})")]
    RaggedRows { row: usize, got: usize, expected: usize },
    #[error("non-finite embedding value in row {row}")]
    NonFinite { row: usize },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid embedding table: {reason}")]
    BadTable { path: PathBuf, reason: String },
}

/// One frame's feature vector `z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Squared Euclidean distance `||a − b||²` between two embeddings.
fn squared_distance(a: &Embedding, b: &Embedding) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// A table of externally computed embeddings, one row per frame.
///
/// On-disk layout (little endian): `u64` row count, `u64` dimension, then
/// `count · dim` IEEE-754 `f64` values row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedEmbeddings {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl PrecomputedEmbeddings {
    /// Validates that rows are nonempty, uniform in dimension, and finite.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, SmoothnessError> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(SmoothnessError::RaggedRows { row: 0, got: 0, expected: 1 });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(SmoothnessError::RaggedRows { row: i, got: row.len(), expected: dim });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(SmoothnessError::NonFinite { row: i });
            }
        }
        Ok(Self { dim, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, index: usize) -> Option<&[f64]> {
        self.rows.get(index).map(Vec::as_slice)
    }

    pub fn load(path: &Path) -> Result<Self, SmoothnessError> {
        let bad = |reason: String| SmoothnessError::BadTable { path: path.to_path_buf(), reason };
        let data = fs::read(path).map_err(|source| SmoothnessError::File {
            path: path.to_path_buf(),
            source,
        })?;
        if data.len() < 16 {
            return Err(bad(format!("header needs 16 bytes, file has {}", data.len())));
        }
        let count = u64::from_le_bytes(data[0..8].try_into().expect("slice of 8"));
        let dim = u64::from_le_bytes(data[8..16].try_into().expect("slice of 8"));
        if count == 0 || dim == 0 {
            return Err(bad(format!("count {count} and dim {dim} must both be nonzero")));
        }
        let values = count
            .checked_mul(dim)
            .filter(|&n| n <= (1 << 31))
            .ok_or_else(|| bad(format!("table of {count}x{dim} values is implausibly large")))?;
        let expected = 16 + values as usize * 8;
        if data.len() != expected {
            return Err(bad(format!(
                "expected {expected} bytes for {count} rows of dim {dim}, found {}",
                data.len()
            )));
        }
        let mut rows = Vec::with_capacity(count as usize);
        let mut off = 16;
        for _ in 0..count {
            let mut row = Vec::with_capacity(dim as usize);
            for _ in 0..dim {
                row.push(f64::from_le_bytes(
                    data[off..off + 8].try_into().expect("slice of 8"),
                ));
                off += 8;
            }
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn save(&self, path: &Path) -> Result<(), SmoothnessError> {
        let mut data = Vec::with_capacity(16 + self.rows.len() * self.dim * 8);
        data.extend_from_slice(&(self.rows.len() as u64).to_le_bytes());
        data.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for row in &self.rows {
            for v in row {
                data.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, data).map_err(|source| SmoothnessError::File {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// How frames are turned into embeddings.
#[derive(Debug, Clone)]
pub enum EmbedderSpec {
    /// The deterministic `cells × cells` grid descriptor.
    Grid { cells: u32 },
    /// Row `t` of a precomputed table stands in for frame `t` (0-based).
    Precomputed(PrecomputedEmbeddings),
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        Self::Grid { cells: DEFAULT_GRID_CELLS }
    }
}

/// Splits `extent` pixels into `cells` contiguous runs; remainder pixels
/// are folded into the final run.
fn cell_bounds(extent: u32, cells: u32) -> Vec<(u32, u32)> {
    let base = extent / cells;
    (0..cells)
        .map(|i| {
            let lo = i * base;
            let hi = if i + 1 == cells { extent } else { lo + base };
            (lo, hi)
        })
        .collect()
}

/// Embeds one frame. `frame_index` selects the row for a precomputed
/// embedder and is ignored by the grid descriptor.
pub fn embed_frame(
    frame: &Image,
    frame_index: usize,
    spec: &EmbedderSpec,
) -> Result<Embedding, SmoothnessError> {
    match spec {
        EmbedderSpec::Grid { cells } => {
            let cells = *cells;
            if cells == 0 {
                return Err(SmoothnessError::ZeroGrid);
            }
            if frame.width() < cells || frame.height() < cells {
                return Err(SmoothnessError::FrameTooSmall {
                    width: frame.width(),
                    height: frame.height(),
                    cells,
                });
            }
            let gray = to_grayscale(frame);
            let grad = sobel_magnitude(&gray)?;
            let cols = cell_bounds(gray.width(), cells);
            let rows = cell_bounds(gray.height(), cells);
            let mut values = Vec::with_capacity(cells as usize * cells as usize * FEATURES_PER_CELL);
            for &(y0, y1) in &rows {
                for &(x0, x1) in &cols {
                    let n = ((x1 - x0) * (y1 - y0)) as f64;
                    let mut sum = 0.0;
                    let mut grad_sum = 0.0;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            sum += gray.at(x, y, 0) as f64;
                            grad_sum += grad.value(x, y);
                        }
                    }
                    let mean = sum / n;
                    let mut var = 0.0;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            let d = gray.at(x, y, 0) as f64 - mean;
                            var += d * d;
                        }
                    }
                    values.push(mean / 255.0);
                    values.push((var / n).sqrt() / 255.0);
                    values.push(grad_sum / n / 1020.0);
                }
            }
            Ok(Embedding { values })
        }
        EmbedderSpec::Precomputed(table) => match table.row(frame_index) {
            Some(row) => Ok(Embedding { values: row.to_vec() }),
            None => Err(SmoothnessError::PrecomputedExhausted {
                available: table.len(),
                needed: frame_index,
            }),
        },
    }
}

/// Embeds every frame of a video, in order.
pub fn embed_video(video: &Video, spec: &EmbedderSpec) -> Result<Vec<Embedding>, SmoothnessError> {
    video
        .frames()
        .iter()
        .enumerate()
        .map(|(t, frame)| embed_frame(frame, t, spec))
        .collect()
}

/// The adjacent-frame FID curve. `scores()[t]` is the squared embedding
/// distance across the transition between 1-based frames `t+1` and `t+2`;
/// a single-frame video yields an empty curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FidCurve {
    scores: Vec<f64>,
}

impl FidCurve {
    /// Builds a curve from raw transition scores (all must be ≥ 0).
    pub fn from_scores(scores: Vec<f64>) -> Self {
        debug_assert!(scores.iter().all(|&s| s >= 0.0));
        Self { scores }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Number of frames in the video the curve was computed from.
    pub fn frame_count(&self) -> u32 {
        self.scores.len() as u32 + 1
    }

    /// CSV rendering: header `frame_id,fid`, one row per transition,
    /// identified by the 1-based left frame of the transition.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_id,fid\n");
        for (i, s) in self.scores.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, s));
        }
        out
    }
}

/// Computes `FID_t = ||z_t − z_{t+1}||²` for every adjacent frame pair.
pub fn fid_adjacent(video: &Video, spec: &EmbedderSpec) -> Result<FidCurve, SmoothnessError> {
    let embeddings = embed_video(video, spec)?;
    let scores = embeddings
        .windows(2)
        .map(|w| squared_distance(&w[0], &w[1]))
        .collect();
    Ok(FidCurve { scores })
}

/// Total smoothness reward `r_s = −Σ_t FID_t`; 0 for an empty curve.
pub fn smoothness_reward(curve: &FidCurve) -> f64 {
    let total: f64 = curve.scores.iter().sum();
    if total == 0.0 {
        0.0
    } else {
        -total
    }
}

/// Splits the smoothness reward over clips: each transition is charged to
/// the clip owning its left frame, so the per-clip values decompose the
/// total. The ranges must partition exactly the frames the curve spans.
pub fn smoothness_reward_per_clip(
    curve: &FidCurve,
    ranges: &ClipRanges,
) -> Result<Vec<f64>, SmoothnessError> {
    let frames = curve.frame_count();
    let ranges_end = ranges.ranges().last().map_or(0, |&(_, hi)| hi);
    if ranges_end != frames {
        return Err(SmoothnessError::RangesMismatch { ranges_end, frames });
    }
    let last_transition = frames - 1; // transitions are 1..=f-1
    Ok(ranges
        .ranges()
        .iter()
        .map(|&(lo, hi)| {
            let hi = hi.min(last_transition);
            if hi < lo {
                return 0.0; // a one-frame final clip owns no transition
            }
            let sum: f64 = (lo..=hi).map(|t| curve.scores[(t - 1) as usize]).sum();
            if sum == 0.0 {
                0.0
            } else {
                -sum
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::{clip_frame_ranges, parse_script};
    use proptest::prelude::*;

    fn grid(cells: u32) -> EmbedderSpec {
        EmbedderSpec::Grid { cells }
    }

    #[test]
    fn constant_frame_embedding_is_means_only() {
        let img = Image::filled(32, 32, 1, 128);
        let e = embed_frame(&img, 0, &grid(8)).unwrap();
        assert_eq!(e.len(), 192);
        for cell in e.values().chunks_exact(3) {
            assert_eq!(cell[0], 128.0 / 255.0);
            assert_eq!(cell[1], 0.0);
            assert_eq!(cell[2], 0.0);
        }
    }

    #[test]
    fn embedding_is_deterministic() {
        let img = Image::from_gray_fn(24, 24, |x, y| (x * 7 + y * 13) as u8);
        let a = embed_frame(&img, 0, &grid(8)).unwrap();
        let b = embed_frame(&img, 5, &grid(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_split_means_follow_cells() {
        // Left half black, right half white, 2x2 grid: row-major cell means
        // are (0, 1, 0, 1); pure cells have zero stddev.
        let img = Image::from_gray_fn(16, 16, |x, _| if x < 8 { 0 } else { 255 });
        let e = embed_frame(&img, 0, &grid(2)).unwrap();
        let means: Vec<f64> = e.values().iter().step_by(3).copied().collect();
        assert_eq!(means, vec![0.0, 1.0, 0.0, 1.0]);
        let stddevs: Vec<f64> = e.values().iter().skip(1).step_by(3).copied().collect();
        assert_eq!(stddevs, vec![0.0, 0.0, 0.0, 0.0]);
        // The vertical edge contributes gradient mass to every cell.
        assert!(e.values().iter().skip(2).step_by(3).all(|&g| g > 0.0));
    }

    #[test]
    fn remainder_pixels_fold_into_last_cells() {
        // 10 pixels over a 3-cell grid: bounds 0..3, 3..6, 6..10.
        assert_eq!(cell_bounds(10, 3), vec![(0, 3), (3, 6), (6, 10)]);
        // A 10x10 frame embeds fine on a 3x3 grid (dim 27).
        let img = Image::from_gray_fn(10, 10, |x, y| (x * 25 + y) as u8);
        assert_eq!(embed_frame(&img, 0, &grid(3)).unwrap().len(), 27);
    }

    #[test]
    fn tiny_frame_is_rejected() {
        let img = Image::filled(4, 4, 1, 0);
        assert!(matches!(
            embed_frame(&img, 0, &grid(8)),
            Err(SmoothnessError::FrameTooSmall { .. })
        ));
    }

    #[test]
    fn identical_frames_give_zero_curve() {
        let frames = vec![Image::filled(16, 16, 1, 90); 4];
        let video = Video::new(frames, 8.0).unwrap();
        let curve = fid_adjacent(&video, &grid(8)).unwrap();
        assert_eq!(curve.scores(), &[0.0, 0.0, 0.0]);
        assert_eq!(smoothness_reward(&curve), 0.0);
        assert!(smoothness_reward(&curve).is_sign_positive());
    }

    #[test]
    fn single_coordinate_offset_squares() {
        let mut row0 = vec![0.0; 4];
        let mut row1 = vec![0.0; 4];
        row0[2] = 0.25;
        row1[2] = 0.35;
        let table = PrecomputedEmbeddings::new(vec![row0, row1]).unwrap();
        let frames = vec![Image::filled(8, 8, 1, 0); 2];
        let video = Video::new(frames, 8.0).unwrap();
        let curve = fid_adjacent(&video, &EmbedderSpec::Precomputed(table)).unwrap();
        assert_eq!(curve.scores().len(), 1);
        assert!((curve.scores()[0] - 0.01).abs() < 1e-15);

        // Exactly representable offset: (0.5 - 0.25)^2 = 0.0625.
        let table = PrecomputedEmbeddings::new(vec![vec![0.5], vec![0.25]]).unwrap();
        let frames = vec![Image::filled(8, 8, 1, 0); 2];
        let video = Video::new(frames, 8.0).unwrap();
        let curve = fid_adjacent(&video, &EmbedderSpec::Precomputed(table)).unwrap();
        assert_eq!(curve.scores()[0], 0.0625);
    }

    #[test]
    fn curve_matches_brute_force_recomputation() {
        let frames: Vec<Image> = (0..5)
            .map(|t| Image::from_gray_fn(16, 16, |x, y| ((x + y) * 9 + t * 31) as u8))
            .collect();
        let video = Video::new(frames.clone(), 8.0).unwrap();
        let spec = grid(4);
        let curve = fid_adjacent(&video, &spec).unwrap();

        // Independent recomputation: embed every frame, then loop over pairs.
        for t in 0..frames.len() - 1 {
            let a = embed_frame(&frames[t], t, &spec).unwrap();
            let b = embed_frame(&frames[t + 1], t + 1, &spec).unwrap();
            let mut d = 0.0;
            for k in 0..a.len() {
                d += (a.values()[k] - b.values()[k]).powi(2);
            }
            assert_eq!(curve.scores()[t], d);
        }
    }

    #[test]
    fn reward_sums_and_negates() {
        let curve = FidCurve::from_scores(vec![1.0, 2.5]);
        assert_eq!(smoothness_reward(&curve), -3.5);
        let empty = FidCurve::from_scores(vec![]);
        assert_eq!(smoothness_reward(&empty), 0.0);
        assert_eq!(empty.frame_count(), 1);
    }

    #[test]
    fn per_clip_charges_left_frame_owner() {
        let curve = FidCurve::from_scores(vec![1.0; 99]);
        let script = parse_script("1: a; 49: b").unwrap();
        let ranges = clip_frame_ranges(&script, 100).unwrap();
        let per = smoothness_reward_per_clip(&curve, &ranges).unwrap();
        assert_eq!(per, vec![-48.0, -51.0]);
    }

    #[test]
    fn single_clip_gets_total() {
        let curve = FidCurve::from_scores(vec![0.5, 0.25, 0.125]);
        let script = parse_script("1: only").unwrap();
        let ranges = clip_frame_ranges(&script, 4).unwrap();
        let per = smoothness_reward_per_clip(&curve, &ranges).unwrap();
        assert_eq!(per, vec![smoothness_reward(&curve)]);
    }

    #[test]
    fn one_frame_final_clip_gets_zero() {
        let curve = FidCurve::from_scores(vec![2.0, 3.0]);
        let script = parse_script("1: a; 3: b").unwrap();
        let ranges = clip_frame_ranges(&script, 3).unwrap();
        let per = smoothness_reward_per_clip(&curve, &ranges).unwrap();
        // Clip [1,2] owns transitions 1 and 2; clip [3,3] owns none.
        assert_eq!(per, vec![-5.0, 0.0]);
        assert!(per[1].is_sign_positive());
    }

    #[test]
    fn mismatched_ranges_are_rejected() {
        let curve = FidCurve::from_scores(vec![1.0; 9]);
        let script = parse_script("1: a").unwrap();
        let ranges = clip_frame_ranges(&script, 12).unwrap();
        assert!(matches!(
            smoothness_reward_per_clip(&curve, &ranges),
            Err(SmoothnessError::RangesMismatch { ranges_end: 12, frames: 10 })
        ));
    }

    #[test]
    fn csv_shape() {
        let curve = FidCurve::from_scores(vec![0.5, 0.25]);
        assert_eq!(curve.to_csv(), "frame_id,fid\n1,0.5\n2,0.25\n");
    }

    #[test]
    fn precomputed_round_trips_and_validates() {
        let table =
            PrecomputedEmbeddings::new(vec![vec![1.0, -2.5, 3.25], vec![0.0, 0.5, -0.125]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        table.save(&path).unwrap();

        let raw = std::fs::read(&path).unwrap();
        assert_eq!(raw.len(), 16 + 2 * 3 * 8);
        assert_eq!(u64::from_le_bytes(raw[0..8].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(raw[8..16].try_into().unwrap()), 3);

        let back = PrecomputedEmbeddings::load(&path).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn precomputed_load_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");

        std::fs::write(&path, [0u8; 10]).unwrap();
        assert!(matches!(
            PrecomputedEmbeddings::load(&path),
            Err(SmoothnessError::BadTable { .. })
        ));

        let mut data = Vec::new();
        data.extend_from_slice(&3u64.to_le_bytes());
        data.extend_from_slice(&2u64.to_le_bytes());
        data.extend_from_slice(&[0u8; 5 * 8]); // one value short of 3x2
        std::fs::write(&path, data).unwrap();
        assert!(matches!(
            PrecomputedEmbeddings::load(&path),
            Err(SmoothnessError::BadTable { .. })
        ));

        let missing = dir.path().join("nope.bin");
        assert!(matches!(
            PrecomputedEmbeddings::load(&missing),
            Err(SmoothnessError::File { .. })
        ));
    }

    #[test]
    fn precomputed_rejects_ragged_or_nonfinite_rows() {
        assert!(matches!(
            PrecomputedEmbeddings::new(vec![vec![1.0], vec![1.0, 2.0]]),
            Err(SmoothnessError::RaggedRows { row: 1, .. })
        ));
        assert!(matches!(
            PrecomputedEmbeddings::new(vec![vec![f64::NAN]]),
            Err(SmoothnessError::NonFinite { row: 0 })
        ));
        assert!(matches!(
            PrecomputedEmbeddings::new(vec![]),
            Err(SmoothnessError::RaggedRows { row: 0, .. })
        ));
    }

    #[test]
    fn precomputed_must_cover_every_frame() {
        let table = PrecomputedEmbeddings::new(vec![vec![1.0, 0.0]]).unwrap();
        let frames = vec![Image::filled(8, 8, 1, 0); 3];
        let video = Video::new(frames, 8.0).unwrap();
        assert!(matches!(
            fid_adjacent(&video, &EmbedderSpec::Precomputed(table)),
            Err(SmoothnessError::PrecomputedExhausted { available: 1, needed: 1 })
        ));
    }

    proptest! {
        #[test]
        fn prop_fid_is_symmetric_and_nonnegative(
            a in proptest::collection::vec(-3.0..3.0f64, 6),
            b in proptest::collection::vec(-3.0..3.0f64, 6),
        ) {
            let ea = Embedding { values: a };
            let eb = Embedding { values: b };
            let d_ab = squared_distance(&ea, &eb);
            let d_ba = squared_distance(&eb, &ea);
            prop_assert!(d_ab >= 0.0);
            prop_assert_eq!(d_ab, d_ba);
            prop_assert_eq!(squared_distance(&ea, &ea), 0.0);
        }

        #[test]
        fn prop_per_clip_rewards_decompose_total(
            scores in proptest::collection::vec(0.0..4.0f64, 1..40),
            cuts in proptest::collection::vec(2u32..40, 0..4),
        ) {
            let frames = scores.len() as u32 + 1;
            // Build strictly increasing clip starts inside [1, frames].
            let mut starts: Vec<u32> = cuts.into_iter().filter(|&c| c <= frames).collect();
            starts.sort_unstable();
            starts.dedup();
            starts.insert(0, 1);
            let script = parse_script(
                &starts
                    .iter()
                    .enumerate()
                    .map(|(i, s)| format!("{s}: clip {i}"))
                    .collect::<Vec<_>>()
                    .join("; "),
            )
            .unwrap();
            let ranges = clip_frame_ranges(&script, frames).unwrap();
            let curve = FidCurve::from_scores(scores);
            let per = smoothness_reward_per_clip(&curve, &ranges).unwrap();
            let total = smoothness_reward(&curve);
            let sum: f64 = per.iter().sum();
            prop_assert!(per.iter().all(|&v| v <= 0.0));
            let tol = 1e-12 * total.abs().max(1.0);
            prop_assert!((sum - total).abs() <= tol, "sum {} vs total {}", sum, total);
        }
    }
}
