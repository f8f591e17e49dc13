//! Parsing, validating, and serializing timestamped prompt scripts.
//!
//! A script is a `;`-separated list of `start_frame: prompt text`
//! entries: the first clip must start at frame 1 and starts must be
//! strictly increasing. Frame ranges are derived against a total frame
//! budget: clip `n` covers `[start_n, start_{n+1} - 1]` and the last
//! clip runs to the budget.

use trilogen::script::{clip_frame_ranges, parse_script, serialize_script};

fn main() -> anyhow::Result<()> {
    let src = "1: crawls hard shell smoothly; 25: glides segmented gradually; 40: darts abruptly";
    let script = parse_script(src)?;

    println!("parsed {} clips from {src:?}", script.clips().len());
    for (i, clip) in script.clips().iter().enumerate() {
        println!("  clip {i}: start {:>2}  {:?}", clip.start_frame, clip.text);
    }

    // Frame ranges depend on the video's total frame budget.
    for budget in [48u32, 60] {
        let ranges = clip_frame_ranges(&script, budget)?;
        let text: Vec<String> = ranges
            .ranges()
            .iter()
            .map(|(lo, hi)| format!("[{lo}, {hi}]"))
            .collect();
        println!("budget {budget}: ranges {}", text.join(" "));
    }

    // clip_index_of maps a frame back to the clip that owns it.
    let ranges = clip_frame_ranges(&script, 48)?;
    for frame in [1u32, 24, 25, 48] {
        println!(
            "  frame {frame:>2} belongs to clip {:?}",
            ranges.clip_index_of(frame)
        );
    }

    // Serialization is the exact inverse of parsing.
    let round = serialize_script(&script);
    println!("serialized: {round:?}");
    assert_eq!(parse_script(&round)?, script);

    // Malformed scripts fail with specific errors instead of guessing.
    for bad in ["", "2: late start", "1: a; 1: not increasing", "1: a; nonsense"] {
        println!("parse({bad:?}) -> {}", parse_script(bad).unwrap_err());
    }
    Ok(())
}
