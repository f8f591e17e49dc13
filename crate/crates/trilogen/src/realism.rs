//! Visual realism against a reference corpus: the max–min reward
//! `r_a = −max_x min_r D(x, r)` over the frames `x` of a video and the
//! corpus entries `r`, plus the `1 / min D` match score used in reports.
//!
//! The corpus is described once at build time; scoring a video then costs
//! one descriptor extraction per frame and one brute-force matching per
//! (frame, reference) pair.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::imagekit::{decode_pnm, Image, ImageError, Video};
use crate::orbmatch::{describe_image, features_distance, OrbFeatures, OrbParams};
use crate::script::ClipRanges;

/// Distances below this floor are clamped when inverting into a match
/// score, capping the score at 10⁶.
pub const MATCH_SCORE_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RealismError {
    #[error("no reference images (*.pgm / *.ppm) in {0}")]
    EmptyCorpus(PathBuf),
    #[error("reference corpus needs at least one image")]
    NoEntries,
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("clip ranges end at frame {ranges_end} but the video has {frames} frames")]
    RangesMismatch { ranges_end: u32, frames: u32 },
}

/// One reference image with its precomputed features.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    id: String,
    image: Image,
    features: OrbFeatures,
    low_feature: bool,
}

impl CorpusEntry {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn features(&self) -> &OrbFeatures {
        &self.features
    }

    /// True when the entry yielded fewer keypoints than the mutual-match
    /// floor; such an entry can never beat the maximal distance 1.0.
    pub fn low_feature(&self) -> bool {
        self.low_feature
    }
}

/// An immutable, pre-described set of reference images.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCorpus {
    entries: Vec<CorpusEntry>,
    params: OrbParams,
}

impl ReferenceCorpus {
    /// Builds a corpus from in-memory `(id, image)` pairs, sorted by id.
    pub fn from_images(
        images: Vec<(String, Image)>,
        params: &OrbParams,
    ) -> Result<Self, RealismError> {
        if images.is_empty() {
            return Err(RealismError::NoEntries);
        }
        let mut images = images;
        images.sort_by(|a, b| a.0.cmp(&b.0));
        let entries = images
            .into_par_iter()
            .map(|(id, image)| {
                let features = describe_image(&image, params);
                let low_feature = features.keypoints.len() < params.min_matches;
                CorpusEntry { id, image, features, low_feature }
            })
            .collect();
        Ok(Self { entries, params: params.clone() })
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn params(&self) -> &OrbParams {
        &self.params
    }
}

/// Ingests every `*.pgm` / `*.ppm` file of a directory, in lexicographic
/// filename order, describing each with the default detection parameters.
/// Entry ids are the filename stems.
pub fn build_corpus(dir: &Path) -> Result<ReferenceCorpus, RealismError> {
    build_corpus_with_params(dir, &OrbParams::default())
}

/// [`build_corpus`] with explicit detection/matching parameters.
pub fn build_corpus_with_params(
    dir: &Path,
    params: &OrbParams,
) -> Result<ReferenceCorpus, RealismError> {
    let read_err = |source| ImageError::File { path: dir.to_path_buf(), source };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(read_err)? {
        let path = entry.map_err(read_err)?.path();
        if matches!(path.extension().and_then(|e| e.to_str()), Some("pgm") | Some("ppm")) {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(RealismError::EmptyCorpus(dir.to_path_buf()));
    }
    paths.sort();
    let entries = paths
        .into_par_iter()
        .map(|path| -> Result<CorpusEntry, RealismError> {
            let data = fs::read(&path).map_err(|source| ImageError::File {
                path: path.clone(),
                source,
            })?;
            let image = decode_pnm(&data).map_err(|source| ImageError::Pnm {
                path: path.clone(),
                source,
            })?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let features = describe_image(&image, params);
            let low_feature = features.keypoints.len() < params.min_matches;
            Ok(CorpusEntry { id, image, features, low_feature })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReferenceCorpus { entries, params: params.clone() })
}

/// A frame's best distance to the corpus and which entry attained it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRealism {
    pub min_distance: f64,
    pub argmin_id: String,
}

fn realism_of_features(features: &OrbFeatures, corpus: &ReferenceCorpus) -> FrameRealism {
    let mut best: Option<(f64, &str)> = None;
    for entry in &corpus.entries {
        let d = features_distance(features, &entry.features, &corpus.params);
        let better = match best {
            None => true,
            // Ties go to the lexicographically smallest id (entry order is
            // by filename, which can differ from id order at ties).
            Some((bd, bid)) => d < bd || (d == bd && entry.id.as_str() < bid),
        };
        if better {
            best = Some((d, &entry.id));
        }
    }
    let (min_distance, argmin_id) = best.expect("corpus is nonempty by construction");
    FrameRealism { min_distance, argmin_id: argmin_id.to_string() }
}

/// `min_r D(frame, r)` with the attaining entry id; ties resolve to the
/// lexicographically smallest id.
pub fn frame_realism(frame: &Image, corpus: &ReferenceCorpus) -> FrameRealism {
    realism_of_features(&describe_image(frame, &corpus.params), corpus)
}

/// Inverts a minimum distance into Fig.-2-style match score
/// `1 / max(d, 1e−6)`, capped at 10⁶ for a perfect match.
pub fn match_score_from_distance(min_distance: f64) -> f64 {
    1.0 / min_distance.max(MATCH_SCORE_FLOOR)
}

/// Match score of a single frame against the corpus.
pub fn match_score(frame: &Image, corpus: &ReferenceCorpus) -> f64 {
    match_score_from_distance(frame_realism(frame, corpus).min_distance)
}

/// Per-frame realism of a whole video plus the max–min aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct RealismReport {
    per_frame: Vec<FrameRealism>,
    worst_frame_index: usize,
    reward: f64,
}

impl RealismReport {
    pub fn per_frame(&self) -> &[FrameRealism] {
        &self.per_frame
    }

    /// 1-based index of the earliest frame attaining the worst (largest)
    /// minimum distance.
    pub fn worst_frame_index(&self) -> usize {
        self.worst_frame_index
    }

    /// `r_a = −max_x min_r D(x, r)`, in `[−1, 0]`.
    pub fn reward(&self) -> f64 {
        self.reward
    }

    /// Structured text record: one CSV row per frame, then the aggregate
    /// footer.
    pub fn to_text(&self) -> String {
        let mut out = String::from("frame_id,min_distance,argmin_reference_id\n");
        for (i, fr) in self.per_frame.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, fr.min_distance, fr.argmin_id));
        }
        out.push_str(&format!("worst_frame,{}\n", self.worst_frame_index));
        out.push_str(&format!("r_a,{}\n", self.reward));
        out
    }
}

/// Scores every frame of a video against the corpus and aggregates the
/// max–min reward.
pub fn realism_reward(video: &Video, corpus: &ReferenceCorpus) -> RealismReport {
    let per_frame: Vec<FrameRealism> = video
        .frames()
        .par_iter()
        .map(|frame| frame_realism(frame, corpus))
        .collect();
    report_from_frames(per_frame)
}

fn report_from_frames(per_frame: Vec<FrameRealism>) -> RealismReport {
    let mut worst = 0usize;
    for (i, fr) in per_frame.iter().enumerate() {
        if fr.min_distance > per_frame[worst].min_distance {
            worst = i;
        }
    }
    let max_d = per_frame[worst].min_distance;
    RealismReport {
        per_frame,
        worst_frame_index: worst + 1,
        reward: if max_d == 0.0 { 0.0 } else { -max_d },
    }
}

/// Restricts the max–min reward to each clip's frame range. The ranges
/// must partition exactly the frames of the report's video.
pub fn realism_reward_per_clip(
    report: &RealismReport,
    ranges: &ClipRanges,
) -> Result<Vec<f64>, RealismError> {
    let frames = report.per_frame.len() as u32;
    let ranges_end = ranges.ranges().last().map_or(0, |&(_, hi)| hi);
    if ranges_end != frames {
        return Err(RealismError::RangesMismatch { ranges_end, frames });
    }
    Ok(ranges
        .ranges()
        .iter()
        .map(|&(lo, hi)| {
            let max_d = (lo..=hi)
                .map(|t| report.per_frame[(t - 1) as usize].min_distance)
                .fold(0.0f64, f64::max);
            if max_d == 0.0 {
                0.0
            } else {
                -max_d
            }
        })
        .collect())
}
