//! Prompt scripts: the timed text format shared by the policy, the
//! generator, and per-clip reward accounting.
//!
//! A script is a list of clips `"t1: text1; t2: text2; …"` where `t_n` is
//! the 1-based frame at which clip `n` starts. Start frames are strictly
//! increasing and the first is always 1, so the clips partition the video.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from parsing or validating a prompt script. Parse errors name the
/// offending entry by its 1-based ordinal.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("empty script")]
    Empty,
    #[error("missing ':' separator at entry {entry}")]
    MissingColon { entry: usize },
    #[error("non-integer start_frame at entry {entry}")]
    BadIndex { entry: usize },
    #[error("first start_frame must be 1 (got {got}) at entry 1")]
    FirstIndex { got: u32 },
    #[error("non-increasing start_frame at entry {entry}")]
    NonIncreasing { entry: usize },
    #[error("empty clip text at entry {entry}")]
    EmptyText { entry: usize },
    #[error("reserved character '{ch}' in clip text at entry {entry}")]
    ReservedChar { entry: usize, ch: char },
    #[error("total_frames {total_frames} is less than the last start_frame {last_start}")]
    FrameBudget { last_start: u32, total_frames: u32 },
}

/// One clip: the frame its animation starts on and its prompt text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    pub start_frame: u32,
    pub text: String,
}

/// A validated prompt script: at least one clip, strictly increasing start
/// frames beginning at 1, every text nonempty (stored trimmed) and free of
/// the reserved delimiters `':'` and `';'`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Clip>", into = "Vec<Clip>")]
pub struct PromptScript {
    clips: Vec<Clip>,
}

impl PromptScript {
    /// Builds a script from clips, enforcing every invariant. Clip text is
    /// trimmed, so construction and parsing agree on the canonical form.
    pub fn new(clips: Vec<Clip>) -> Result<Self, ScriptError> {
        if clips.is_empty() {
            return Err(ScriptError::Empty);
        }
        let mut normalized: Vec<Clip> = Vec::with_capacity(clips.len());
        for (i, clip) in clips.into_iter().enumerate() {
            let entry = i + 1;
            let text = clip.text.trim().to_string();
            if text.is_empty() {
                return Err(ScriptError::EmptyText { entry });
            }
            if let Some(ch) = text.chars().find(|&c| c == ':' || c == ';') {
                return Err(ScriptError::ReservedChar { entry, ch });
            }
            if i == 0 {
                if clip.start_frame != 1 {
                    return Err(ScriptError::FirstIndex { got: clip.start_frame });
                }
            } else if clip.start_frame <= normalized[i - 1].start_frame {
                return Err(ScriptError::NonIncreasing { entry });
            }
            normalized.push(Clip { start_frame: clip.start_frame, text });
        }
        Ok(Self { clips: normalized })
    }

    pub fn clips(&self) -> &[Clip] {
        &self.clips
    }

    /// Start frame of the final clip (the largest `t_n`).
    pub fn last_start(&self) -> u32 {
        self.clips.last().expect("at least one clip").start_frame
    }
}

impl TryFrom<Vec<Clip>> for PromptScript {
    type Error = ScriptError;
    fn try_from(clips: Vec<Clip>) -> Result<Self, Self::Error> {
        Self::new(clips)
    }
}

impl From<PromptScript> for Vec<Clip> {
    fn from(s: PromptScript) -> Self {
        s.clips
    }
}

impl std::fmt::Display for PromptScript {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&serialize_script(self))
    }
}

impl std::str::FromStr for PromptScript {
    type Err = ScriptError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_script(s)
    }
}

/// Parses `"t1: text1; t2: text2; …"`. Surrounding whitespace around
/// entries, indices, and texts is ignored; all script invariants are
/// enforced. Errors name the offending 1-based entry.
pub fn parse_script(src: &str) -> Result<PromptScript, ScriptError> {
    if src.trim().is_empty() {
        return Err(ScriptError::Empty);
    }
    let mut clips = Vec::new();
    for (i, raw) in src.split(';').enumerate() {
        let entry = i + 1;
        let (idx, text) = raw
            .split_once(':')
            .ok_or(ScriptError::MissingColon { entry })?;
        let start_frame: u32 = idx
            .trim()
            .parse()
            .map_err(|_| ScriptError::BadIndex { entry })?;
        clips.push(Clip {
            start_frame,
            text: text.to_string(),
        });
    }
    PromptScript::new(clips)
}

/// Canonical text form: `"t1: text1; t2: text2"` with a single space after
/// each `':'` and each `';'`. Inverse of [`parse_script`].
pub fn serialize_script(script: &PromptScript) -> String {
    script
        .clips
        .iter()
        .map(|c| format!("{}: {}", c.start_frame, c.text))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Inclusive frame intervals, one per clip, partitioning `[1, total_frames]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipRanges {
    ranges: Vec<(u32, u32)>,
}

impl ClipRanges {
    /// `(lo, hi)` inclusive bounds per clip, in clip order.
    pub fn ranges(&self) -> &[(u32, u32)] {
        &self.ranges
    }

    /// Index of the clip owning 1-based `frame`, if it is in budget.
    pub fn clip_index_of(&self, frame: u32) -> Option<usize> {
        self.ranges
            .iter()
            .position(|&(lo, hi)| (lo..=hi).contains(&frame))
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// Computes which frames each clip owns: clip `n` covers
/// `[t_n, t_{n+1} − 1]` and the last clip runs to `total_frames`. A final
/// clip of a single frame (`t_N = total_frames`) is valid.
pub fn clip_frame_ranges(
    script: &PromptScript,
    total_frames: u32,
) -> Result<ClipRanges, ScriptError> {
    let last_start = script.last_start();
    if total_frames < last_start {
        return Err(ScriptError::FrameBudget { last_start, total_frames });
    }
    let mut ranges = Vec::with_capacity(script.clips.len());
    for (i, clip) in script.clips.iter().enumerate() {
        let hi = match script.clips.get(i + 1) {
            Some(next) => next.start_frame - 1,
            None => total_frames,
        };
        ranges.push((clip.start_frame, hi));
    }
    Ok(ClipRanges { ranges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_two_clip_script() {
        let s = parse_script("1: a trilobite glides over sand; 49: it burrows").unwrap();
        assert_eq!(s.clips().len(), 2);
        assert_eq!(s.clips()[0].start_frame, 1);
        assert_eq!(s.clips()[0].text, "a trilobite glides over sand");
        assert_eq!(s.clips()[1].start_frame, 49);
        assert_eq!(s.clips()[1].text, "it burrows");
    }

    #[test]
    fn non_increasing_start_names_entry() {
        let err = parse_script("1: a; 1: b").unwrap_err();
        assert_eq!(err.to_string(), "non-increasing start_frame at entry 2");
        let err = parse_script("1: a; 9: b; 3: c").unwrap_err();
        assert_eq!(err, ScriptError::NonIncreasing { entry: 3 });
    }

    #[test]
    fn first_start_must_be_one() {
        assert_eq!(
            parse_script("2: late start").unwrap_err(),
            ScriptError::FirstIndex { got: 2 }
        );
    }

    #[test]
    fn rejects_malformed_entries() {
        assert_eq!(parse_script("").unwrap_err(), ScriptError::Empty);
        assert_eq!(parse_script("  \n ").unwrap_err(), ScriptError::Empty);
        assert_eq!(
            parse_script("1 swim").unwrap_err(),
            ScriptError::MissingColon { entry: 1 }
        );
        assert_eq!(
            parse_script("1: a; x: b").unwrap_err(),
            ScriptError::BadIndex { entry: 2 }
        );
        assert_eq!(
            parse_script("1: a;  : b").unwrap_err(),
            ScriptError::BadIndex { entry: 2 }
        );
        assert_eq!(
            parse_script("1: a; 5:   ").unwrap_err(),
            ScriptError::EmptyText { entry: 2 }
        );
        // A second ':' inside an entry lands in the text and is reserved.
        assert_eq!(
            parse_script("1: a: b").unwrap_err(),
            ScriptError::ReservedChar { entry: 1, ch: ':' }
        );
    }

    #[test]
    fn constructor_rejects_reserved_text() {
        let err = PromptScript::new(vec![Clip { start_frame: 1, text: "a;b".into() }]).unwrap_err();
        assert_eq!(err, ScriptError::ReservedChar { entry: 1, ch: ';' });
    }

    #[test]
    fn serializes_canonically() {
        let one = PromptScript::new(vec![Clip { start_frame: 1, text: "x y".into() }]).unwrap();
        assert_eq!(serialize_script(&one), "1: x y");

        let three = parse_script("1:a;4:  b ;9:c").unwrap();
        let text = serialize_script(&three);
        assert_eq!(text, "1: a; 4: b; 9: c");
        assert_eq!(text.matches(';').count(), 2);
    }

    #[test]
    fn round_trips_through_canonical_form() {
        let s = parse_script("1: slow glide;  7: abrupt dart ; 30: rest").unwrap();
        assert_eq!(parse_script(&serialize_script(&s)).unwrap(), s);
    }

    #[test]
    fn ranges_match_definition() {
        let s = parse_script("1: a; 49: b").unwrap();
        assert_eq!(clip_frame_ranges(&s, 100).unwrap().ranges(), &[(1, 48), (49, 100)]);

        let single = parse_script("1: a").unwrap();
        assert_eq!(clip_frame_ranges(&single, 16).unwrap().ranges(), &[(1, 16)]);

        let s3 = parse_script("1: a; 5: b; 9: c").unwrap();
        assert_eq!(
            clip_frame_ranges(&s3, 12).unwrap().ranges(),
            &[(1, 4), (5, 8), (9, 12)]
        );
    }

    #[test]
    fn one_frame_final_clip_is_valid_but_shorter_budget_is_not() {
        let s = parse_script("1: a; 10: b").unwrap();
        assert_eq!(clip_frame_ranges(&s, 10).unwrap().ranges(), &[(1, 9), (10, 10)]);
        assert_eq!(
            clip_frame_ranges(&s, 9).unwrap_err(),
            ScriptError::FrameBudget { last_start: 10, total_frames: 9 }
        );
    }

    #[test]
    fn clip_index_lookup() {
        let s = parse_script("1: a; 5: b; 9: c").unwrap();
        let r = clip_frame_ranges(&s, 12).unwrap();
        assert_eq!(r.clip_index_of(1), Some(0));
        assert_eq!(r.clip_index_of(4), Some(0));
        assert_eq!(r.clip_index_of(5), Some(1));
        assert_eq!(r.clip_index_of(12), Some(2));
        assert_eq!(r.clip_index_of(13), None);
        assert_eq!(r.clip_index_of(0), None);
    }

    #[test]
    fn serde_json_rejects_invalid_clip_lists() {
        let ok: PromptScript = serde_json::from_str(
            r#"[{"start_frame":1,"text":"a"},{"start_frame":3,"text":"b"}]"#,
        )
        .unwrap();
        assert_eq!(ok.clips().len(), 2);
        let bad = serde_json::from_str::<PromptScript>(
            r#"[{"start_frame":1,"text":"a"},{"start_frame":1,"text":"b"}]"#,
        );
        assert!(bad.is_err());
    }

    fn valid_script_strategy() -> impl Strategy<Value = PromptScript> {
        let text = proptest::string::string_regex("[a-z][a-z0-9 ]{0,18}[a-z0-9]").unwrap();
        (1usize..6, proptest::collection::vec(1u32..40, 0..5), text)
            .prop_flat_map(|(n, _, _)| {
                let texts = proptest::collection::vec(
                    proptest::string::string_regex("[a-z][a-z0-9 ]{0,18}[a-z0-9]").unwrap(),
                    n,
                );
                let gaps = proptest::collection::vec(1u32..30, n.saturating_sub(1));
                (texts, gaps)
            })
            .prop_map(|(texts, gaps)| {
                let mut start = 1u32;
                let mut clips = Vec::new();
                for (i, text) in texts.into_iter().enumerate() {
                    if i > 0 {
                        start += gaps[i - 1];
                    }
                    clips.push(Clip { start_frame: start, text });
                }
                PromptScript::new(clips).expect("strategy builds valid scripts")
            })
    }

    proptest! {
        #[test]
        fn prop_round_trip_identity(s in valid_script_strategy()) {
            prop_assert_eq!(parse_script(&serialize_script(&s)).unwrap(), s);
        }

        #[test]
        fn prop_ranges_partition_frame_budget(s in valid_script_strategy(), extra in 0u32..50) {
            let f = s.last_start() + extra;
            let ranges = clip_frame_ranges(&s, f).unwrap();
            // Contiguous cover of [1, f]: each lo follows the previous hi.
            let mut expect_lo = 1u32;
            for &(lo, hi) in ranges.ranges() {
                prop_assert_eq!(lo, expect_lo);
                prop_assert!(hi >= lo);
                expect_lo = hi + 1;
            }
            prop_assert_eq!(expect_lo, f + 1);
            // Every frame belongs to exactly one clip.
            for frame in 1..=f {
                prop_assert!(ranges.clip_index_of(frame).is_some());
            }
        }
    }
}
