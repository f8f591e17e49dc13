//! Diffusion-style forward noising and its effect on both rewards.
//!
//! The schedule follows the standard linear-beta construction: at step
//! `t`, each pixel `x` becomes `sqrt(alpha_bar_t) x + sqrt(1 -
//! alpha_bar_t) eps`. As `t` grows the frames drown in noise, and both
//! the smoothness and the realism rewards fall — this degradation link
//! is what makes them usable as rewards.

use trilogen::realism::{build_corpus, realism_reward};
use trilogen::script::parse_script;
use trilogen::simgen::{forward_noise, make_reference_corpus, render_script, NoiseSchedule, RenderConfig};
use trilogen::smoothness::{fid_adjacent, smoothness_reward, EmbedderSpec};

fn main() -> anyhow::Result<()> {
    let cfg = RenderConfig { total_frames: 12, seed: 4242, ..RenderConfig::default() };
    let video = render_script(
        &parse_script("1: crawls hard shell segmented smoothly")?,
        &cfg,
    )?;

    let dir = std::env::temp_dir().join("trilogen_noising_corpus");
    make_reference_corpus(&dir, &cfg, 8, 7)?;
    let corpus = build_corpus(&dir)?;

    // The canonical schedule: 1000 steps, beta from 1e-4 to 0.02.
    let schedule = NoiseSchedule::new(1000, 1e-4, 0.02)?;
    for t in [50usize, 200, 400, 800] {
        println!(
            "t = {t:>3}: alpha_bar = {:.4} (signal keeps {:>5.1}% of its variance)",
            schedule.alpha_bar(t)?,
            schedule.alpha_bar(t)? * 100.0
        );
    }

    println!("\n  t | r_s        | r_a");
    let spec = EmbedderSpec::default();
    let clean_rs = smoothness_reward(&fid_adjacent(&video, &spec)?);
    let clean_ra = realism_reward(&video, &corpus).reward();
    println!("  0 | {clean_rs:>10.4} | {clean_ra:>7.4}   (clean render)");
    for t in [50usize, 200, 400, 800] {
        let noised = forward_noise(&video, t, &schedule, 99)?;
        let r_s = smoothness_reward(&fid_adjacent(&noised, &spec)?);
        let r_a = realism_reward(&noised, &corpus).reward();
        println!("{t:>4} | {r_s:>10.4} | {r_a:>7.4}");
    }

    // Determinism: the same (video, t, seed) noises identically.
    let a = forward_noise(&video, 200, &schedule, 99)?;
    let b = forward_noise(&video, 200, &schedule, 99)?;
    assert_eq!(a.frames()[0].pixels(), b.frames()[0].pixels());
    println!("\nnoising is deterministic in (video, t, schedule, seed)");
    Ok(())
}
