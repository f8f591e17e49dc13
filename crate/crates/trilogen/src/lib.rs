//! Reward-driven prompt optimization for procedural trilobite animation.
//!
//! The crate closes a full optimization loop around a deterministic stand-in
//! for a video generator:
//!
//! * [`script`] parses timestamped prompt scripts of the form
//!   `"1: crawls smoothly; 49: darts abruptly"` into per-clip frame ranges.
//! * [`simgen`] renders those scripts as short grayscale videos of a segmented
//!   trilobite sprite translating over a textured seabed, and provides a
//!   diffusion-style forward-noising operator for degradation studies.
//! * [`smoothness`] embeds each frame with a coarse grid descriptor and scores
//!   transition smoothness as the negative sum of squared embedding distances
//!   between adjacent frames.
//! * [`orbmatch`] is a from-scratch ORB pipeline (FAST-9 detection, intensity
//!   centroid orientation, steered binary descriptors, brute-force Hamming
//!   matching) used by [`realism`] to score frames against a reference corpus
//!   of high-detail still renders.
//! * [`prefopt`] holds the factored categorical prompt policy plus the
//!   preference-optimization losses (Bradley-Terry, DPO, KTO) with analytic
//!   gradients.
//! * [`orchestrator`] samples prompts from the policy, scores them, builds
//!   preference datasets by reward ordering, applies one KTO step per
//!   iteration, and writes a reproducible run manifest.
//!
//! Each major capability has a runnable demo under `examples/`:
//!
//! ```text
//! cargo run -p trilogen --example script_basics
//! cargo run -p trilogen --example render_video
//! cargo run -p trilogen --example smoothness_scoring
//! cargo run -p trilogen --example orb_matching
//! cargo run -p trilogen --example realism_scoring
//! cargo run -p trilogen --example forward_noising
//! cargo run -p trilogen --example preference_training
//! cargo run -p trilogen --example closed_loop
//! ```
//!
//! The `trilogen` binary exposes the same functionality as subcommands
//! (`parse`, `render`, `build-corpus`, `score-smoothness`, `score-realism`,
//! `kto-step`, `run-loop`).

pub mod imagekit;
pub mod orbmatch;
pub mod orchestrator;
pub mod prefopt;
pub mod realism;
pub mod script;
pub mod simgen;
pub mod smoothness;
pub mod util;
