//! Rendering a prompt script into a deterministic grayscale video.
//!
//! The renderer is the stand-in for a generative video model: a
//! segmented trilobite sprite crosses a textured seabed, and the prompt
//! tokens steer its cruise speed (`crawls`/`glides`/`darts`), carapace
//! detail (`hard shell`, `longitudinal lobes`, `segmented`), and
//! transition style (`smoothly`/`gradually`/`abruptly`). Slow, smooth
//! clips render crisp pixel-aligned sprites; fast or jittery clips are
//! motion-blurred.

use trilogen::imagekit::write_frames_dir;
use trilogen::script::parse_script;
use trilogen::simgen::{
    detail_level, jitter_scale, movement_speed, render_script, RenderConfig,
};

fn main() -> anyhow::Result<()> {
    let src = "1: crawls hard shell segmented smoothly; 25: darts abruptly";
    let script = parse_script(src)?;

    // Per-clip token effects, straight from the text.
    for clip in script.clips() {
        let level = detail_level(&clip.text);
        println!(
            "{:?}: speed {:.1} px/frame, jitter x{:.1}, {} segment lines, contrast {:.2}",
            clip.text,
            movement_speed(&clip.text),
            jitter_scale(&clip.text),
            level.segment_lines,
            level.contrast,
        );
    }

    let cfg = RenderConfig { total_frames: 48, seed: 11, ..RenderConfig::default() };
    let video = render_script(&script, &cfg)?;
    println!(
        "rendered {} frames of {}x{} at {} fps",
        video.frames().len(),
        cfg.width,
        cfg.height,
        video.fps()
    );

    // Same config, same bytes: the renderer is pure in (script, config).
    let again = render_script(&script, &cfg)?;
    assert_eq!(video.frames()[0].pixels(), again.frames()[0].pixels());
    println!("re-render is bit-identical");

    let out = std::env::temp_dir().join("trilogen_render_video");
    write_frames_dir(&out, &video)?;
    println!("frames written to {} (PGM, one file per frame)", out.display());
    Ok(())
}
