//! Scoring morphological realism against a reference corpus of stills.
//!
//! Every video frame is ORB-described and compared with each reference;
//! a frame's score is its distance to the closest reference, and the
//! video's reward is `r_a = -max_frames min_refs D` — the whole clip is
//! only as realistic as its least realistic frame. Match scores
//! (`1 / min_distance`) mirror how retrieval quality is usually read:
//! bigger is better.

use trilogen::realism::{build_corpus, match_score, realism_reward};
use trilogen::script::parse_script;
use trilogen::simgen::{make_reference_corpus, render_script, RenderConfig};

fn main() -> anyhow::Result<()> {
    let cfg = RenderConfig { total_frames: 12, seed: 21, ..RenderConfig::default() };

    // A small corpus of high-detail reference stills, then load it back
    // the way any external corpus directory would be.
    let dir = std::env::temp_dir().join("trilogen_realism_corpus");
    let paths = make_reference_corpus(&dir, &cfg, 12, 7)?;
    let corpus = build_corpus(&dir)?;
    println!("corpus: {} stills in {}", paths.len(), dir.display());

    // Slow, crisp, detail-rich footage scores near the references;
    // a featureless body cannot produce enough matches and hits the
    // floor r_a = -1.
    for text in [
        "1: crawls hard shell smoothly",
        "1: crawls hard shell longitudinal lobes segmented smoothly",
        "1: crawls smoothly",
    ] {
        let video = render_script(&parse_script(text)?, &cfg)?;
        let report = realism_reward(&video, &corpus);
        let best = report
            .per_frame()
            .iter()
            .map(|f| f.min_distance)
            .fold(f64::INFINITY, f64::min);
        println!(
            "{text:?}: r_a = {:+.4}, worst frame {}, best frame match score {:.1}",
            report.reward(),
            report.worst_frame_index(),
            1.0 / best.max(1e-6),
        );
    }

    // Per-frame scoring works on single images too.
    let video = render_script(&parse_script("1: crawls hard shell smoothly")?, &cfg)?;
    let score = match_score(&video.frames()[0], &corpus);
    println!("frame 1 match score: {score:.1}");
    Ok(())
}
