//! Scoring transition smoothness with adjacent-frame embedding distances.
//!
//! Each frame is embedded with a coarse grid descriptor (per-cell mean,
//! spread, and gradient energy); the FID curve is the squared embedding
//! distance between consecutive frames, and the smoothness reward is its
//! negated sum. Still footage scores exactly zero; jittery footage pays
//! for every jump.

use trilogen::imagekit::{Image, Video};
use trilogen::script::{clip_frame_ranges, parse_script};
use trilogen::simgen::{render_script, RenderConfig};
use trilogen::smoothness::{
    fid_adjacent, smoothness_reward, smoothness_reward_per_clip, EmbedderSpec,
};

fn main() -> anyhow::Result<()> {
    let cfg = RenderConfig { total_frames: 32, seed: 5, ..RenderConfig::default() };
    let spec = EmbedderSpec::default();

    // A perfectly static video is perfectly smooth.
    let frame = Image::filled(64, 64, 1, 90);
    let still = Video::new(vec![frame; 8], 12.0)?;
    let r_still = smoothness_reward(&fid_adjacent(&still, &spec)?);
    println!("static video: r_s = {r_still}");
    assert_eq!(r_still, 0.0);

    // Smooth motion beats abrupt motion on the same trajectory seed.
    let mut rewards = Vec::new();
    for text in ["1: crawls smoothly", "1: darts abruptly"] {
        let video = render_script(&parse_script(text)?, &cfg)?;
        let curve = fid_adjacent(&video, &spec)?;
        let r_s = smoothness_reward(&curve);
        println!("{text:?}: r_s = {r_s:.5}");
        rewards.push(r_s);
    }
    assert!(rewards[0] > rewards[1], "smooth crawling must out-score abrupt darting");

    // The reward decomposes exactly across clips.
    let script = parse_script("1: crawls smoothly; 17: darts abruptly")?;
    let video = render_script(&script, &cfg)?;
    let curve = fid_adjacent(&video, &spec)?;
    let ranges = clip_frame_ranges(&script, cfg.total_frames)?;
    let per_clip = smoothness_reward_per_clip(&curve, &ranges)?;
    println!(
        "two-clip video: total {:.5} = {:.5} + {:.5}",
        smoothness_reward(&curve),
        per_clip[0],
        per_clip[1]
    );

    // The curve exports as CSV for plotting.
    let csv = curve.to_csv();
    println!("FID curve head:\n{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
