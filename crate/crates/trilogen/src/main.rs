//! Thin command-line front end: each subcommand wraps one library entry
//! point and prints a short, stable summary. Exit codes: 0 on success,
//! 2 on usage errors (malformed arguments), 3 on data errors (missing or
//! malformed inputs, failed runs).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use trilogen::imagekit::{read_frames_dir, write_frames_dir};
use trilogen::orchestrator::{run_loop_with, RunConfig};
use trilogen::prefopt::{
    gradient_step, kto_loss, load_checkpoint, save_checkpoint, KtoConfig, PreferenceDataset,
};
use trilogen::realism::{build_corpus, realism_reward};
use trilogen::script::{clip_frame_ranges, parse_script};
use trilogen::simgen::{make_reference_corpus, render_script, RenderConfig};
use trilogen::smoothness::{fid_adjacent, smoothness_reward, EmbedderSpec};

#[derive(Parser)]
#[command(
    name = "trilogen",
    version,
    about = "Reward-driven prompt optimization for procedural trilobite animation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a prompt script and list its clips.
    Parse {
        /// Path to a script like "1: crawls smoothly; 49: darts abruptly".
        script_file: PathBuf,
        /// Frame budget; when given, each clip's frame range is printed too.
        #[arg(long)]
        frames: Option<u32>,
    },
    /// Render a prompt script to a directory of PGM frames.
    Render {
        script_file: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = RenderConfig::default().width)]
        width: u32,
        #[arg(long, default_value_t = RenderConfig::default().height)]
        height: u32,
        /// Total frames of the video.
        #[arg(long, default_value_t = RenderConfig::default().total_frames)]
        frames: u32,
        #[arg(long, default_value_t = RenderConfig::default().base_jitter)]
        jitter: f64,
        #[arg(long, default_value_t = RenderConfig::default().seed)]
        seed: u64,
    },
    /// Render a reference corpus of high-detail stills.
    BuildCorpus {
        out_dir: PathBuf,
        #[arg(long, default_value_t = RunConfig::default().corpus_count)]
        count: usize,
        #[arg(long, default_value_t = RunConfig::default().corpus_seed)]
        seed: u64,
        #[arg(long, default_value_t = RenderConfig::default().width)]
        width: u32,
        #[arg(long, default_value_t = RenderConfig::default().height)]
        height: u32,
    },
    /// Score transition smoothness of a rendered frame directory.
    ScoreSmoothness {
        frames_dir: PathBuf,
        /// Also write the per-transition FID curve as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Score morphological realism of a frame directory against a corpus.
    ScoreRealism {
        frames_dir: PathBuf,
        corpus_dir: PathBuf,
    },
    /// Apply one KTO gradient step to a policy checkpoint.
    KtoStep {
        /// Policy checkpoint (JSON) to step.
        policy: PathBuf,
        /// Preference dataset (JSON) to step on.
        dataset: PathBuf,
        /// Reference policy checkpoint; defaults to the input policy.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = RunConfig::default().learning_rate)]
        learning_rate: f64,
        #[arg(long, default_value_t = KtoConfig::default().beta)]
        beta: f64,
        /// Where to write the updated checkpoint; losses print either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the closed sample-render-score-update loop from a JSON config.
    RunLoop {
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Parse { script_file, frames } => {
            let src = fs::read_to_string(&script_file)
                .with_context(|| format!("reading script {}", script_file.display()))?;
            let script = parse_script(&src)?;
            let ranges = frames.map(|f| clip_frame_ranges(&script, f)).transpose()?;
            println!("{} clips", script.clips().len());
            for (i, clip) in script.clips().iter().enumerate() {
                match &ranges {
                    Some(r) => {
                        let (lo, hi) = r.ranges()[i];
                        println!("clip {i}: start {} frames [{lo}, {hi}] text {:?}", clip.start_frame, clip.text);
                    }
                    None => println!("clip {i}: start {} text {:?}", clip.start_frame, clip.text),
                }
            }
        }
        Command::Render { script_file, out_dir, width, height, frames, jitter, seed } => {
            let src = fs::read_to_string(&script_file)
                .with_context(|| format!("reading script {}", script_file.display()))?;
            let script = parse_script(&src)?;
            let cfg = RenderConfig {
                width,
                height,
                total_frames: frames,
                base_jitter: jitter,
                seed,
            };
            let video = render_script(&script, &cfg)?;
            write_frames_dir(&out_dir, &video)?;
            println!("wrote {} frames to {}", video.frames().len(), out_dir.display());
        }
        Command::BuildCorpus { out_dir, count, seed, width, height } => {
            let cfg = RenderConfig { width, height, ..RenderConfig::default() };
            let paths = make_reference_corpus(&out_dir, &cfg, count, seed)?;
            println!("wrote {} reference stills to {}", paths.len(), out_dir.display());
        }
        Command::ScoreSmoothness { frames_dir, csv } => {
            let video = read_frames_dir(&frames_dir)?;
            let curve = fid_adjacent(&video, &EmbedderSpec::default())?;
            if let Some(path) = csv {
                fs::write(&path, curve.to_csv())?;
                println!("wrote FID curve to {}", path.display());
            }
            println!("r_s = {}", smoothness_reward(&curve));
        }
        Command::ScoreRealism { frames_dir, corpus_dir } => {
            let video = read_frames_dir(&frames_dir)?;
            let corpus = build_corpus(&corpus_dir)?;
            let report = realism_reward(&video, &corpus);
            print!("{}", report.to_text());
            println!("r_a = {}", report.reward());
        }
        Command::KtoStep { policy, dataset, reference, learning_rate, beta, out } => {
            let policy = load_checkpoint(&policy)?;
            let reference = match reference {
                Some(path) => load_checkpoint(&path)?,
                None => policy.clone(),
            };
            let text = fs::read_to_string(&dataset)
                .with_context(|| format!("reading dataset {}", dataset.display()))?;
            let dataset: PreferenceDataset = serde_json::from_str(&text)
                .with_context(|| format!("parsing dataset {}", dataset.display()))?;
            let kto = KtoConfig { beta, ..KtoConfig::default() };
            let (before, grad, z0) = kto_loss(&policy, &reference, &dataset, kto)?;
            let updated = gradient_step(&policy, &grad, learning_rate)?;
            let (after, _, _) = kto_loss(&updated, &reference, &dataset, kto)?;
            println!("z0 = {z0}");
            println!("loss before = {before}");
            println!("loss after = {after}");
            if let Some(path) = out {
                save_checkpoint(&updated, &path)?;
                println!("wrote updated policy to {}", path.display());
            }
        }
        Command::RunLoop { config } => {
            let cfg = RunConfig::load(&config)?;
            let manifest = run_loop_with(&cfg, |rec| {
                println!(
                    "iteration {:>3}: mean r_total {:+.6} max {:+.6} loss {:.6} -> {:.6}",
                    rec.iteration, rec.mean_reward, rec.max_reward, rec.loss_before, rec.loss_after
                );
            })?;
            println!(
                "wrote manifest for {} iterations to {}",
                manifest.iterations.len(),
                cfg.output_dir.join("manifest.json").display()
            );
        }
    }
    Ok(())
}
