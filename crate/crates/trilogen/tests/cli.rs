//! End-to-end tests of the `trilogen` binary: every subcommand's happy
//! path plus the exit-code contract (2 for usage errors, 3 for data
//! errors such as missing files or malformed inputs).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trilogen::prefopt::{
    load_checkpoint, save_checkpoint, ContextPolicy, PolicyParams, PreferenceDataset,
    PreferenceExample, PreferencePair, PromptChoice, SlotPolicy,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trilogen"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("spawn trilogen");
    assert!(
        out.status.success(),
        "trilogen {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn run_err(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn trilogen")
}

fn write_script(dir: &Path, text: &str) -> String {
    let path = dir.join("script.txt");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Extracts the f64 following `prefix` on the matching stdout line.
fn value_after(stdout: &str, prefix: &str) -> f64 {
    let line = stdout
        .lines()
        .find(|l| l.starts_with(prefix))
        .unwrap_or_else(|| panic!("no line starting with {prefix:?} in:\n{stdout}"));
    line[prefix.len()..].trim().parse().expect("numeric value")
}

#[test]
fn parse_lists_clips_and_frame_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let script = write_script(dir.path(), "1: crawls smoothly; 5: darts abruptly");

    let plain = run_ok(&["parse", &script]);
    assert!(plain.contains("2 clips"), "stdout: {plain}");
    assert!(plain.contains("start 1"), "stdout: {plain}");
    assert!(plain.contains("start 5"), "stdout: {plain}");

    let ranged = run_ok(&["parse", &script, "--frames", "8"]);
    assert!(ranged.contains("[1, 4]"), "stdout: {ranged}");
    assert!(ranged.contains("[5, 8]"), "stdout: {ranged}");
}

#[test]
fn parse_rejects_malformed_scripts_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let script = write_script(dir.path(), "2: starts too late");
    let out = run_err(&["parse", &script]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("error:"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_input_file_exits_3() {
    let out = run_err(&["parse", "/nonexistent/script.txt"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    let unknown = run_err(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    let missing_args = run_err(&["render"]);
    assert_eq!(missing_args.status.code(), Some(2));
}

#[test]
fn render_then_score_smoothness_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let script = write_script(dir.path(), "1: glides smoothly");
    let frames = dir.path().join("frames");
    let frames_arg = frames.to_str().unwrap();

    let rendered = run_ok(&["render", &script, frames_arg, "--frames", "6"]);
    assert!(rendered.contains("wrote 6 frames"), "stdout: {rendered}");
    assert_eq!(fs::read_dir(&frames).unwrap().count(), 6);

    let csv = dir.path().join("fid.csv");
    let scored = run_ok(&[
        "score-smoothness",
        frames_arg,
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let r_s = value_after(&scored, "r_s =");
    assert!(r_s <= 0.0, "smoothness reward must be non-positive, got {r_s}");

    let curve = fs::read_to_string(&csv).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("frame_id,fid"));
    assert_eq!(lines.count(), 5, "one row per adjacent frame pair");
}

#[test]
fn build_corpus_then_score_realism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let corpus_arg = corpus.to_str().unwrap();

    let built = run_ok(&["build-corpus", corpus_arg, "--count", "4"]);
    assert!(built.contains("wrote 4 reference stills"), "stdout: {built}");
    assert_eq!(fs::read_dir(&corpus).unwrap().count(), 4);

    let script = write_script(dir.path(), "1: crawls hard shell smoothly");
    let frames = dir.path().join("frames");
    let frames_arg = frames.to_str().unwrap();
    run_ok(&["render", &script, frames_arg, "--frames", "4"]);

    let scored = run_ok(&["score-realism", frames_arg, corpus_arg]);
    let r_a = value_after(&scored, "r_a =");
    assert!(
        (-1.0..=0.0).contains(&r_a),
        "realism reward must lie in [-1, 0], got {r_a}"
    );
    assert!(scored.contains("worst_frame,"), "stdout: {scored}");
}

fn two_token_policy() -> PolicyParams {
    let slot = SlotPolicy::uniform("motion", vec!["calm".into(), "wild".into()]);
    PolicyParams::new(vec![ContextPolicy::new("c", vec![slot])]).unwrap()
}

fn calm_vs_wild_dataset() -> PreferenceDataset {
    let calm = PromptChoice { context: "c".into(), selections: vec![0] };
    let wild = PromptChoice { context: "c".into(), selections: vec![1] };
    PreferenceDataset::new(
        vec![
            PreferenceExample { choice: calm.clone(), desirable: true },
            PreferenceExample { choice: wild.clone(), desirable: false },
        ],
        vec![PreferencePair { winner: calm, loser: wild }],
    )
    .unwrap()
}

#[test]
fn kto_step_reports_losses_and_writes_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let policy_path = dir.path().join("policy.json");
    let dataset_path = dir.path().join("dataset.json");
    let out_path = dir.path().join("updated.json");
    save_checkpoint(&two_token_policy(), &policy_path).unwrap();
    fs::write(
        &dataset_path,
        serde_json::to_string(&calm_vs_wild_dataset()).unwrap(),
    )
    .unwrap();

    let stdout = run_ok(&[
        "kto-step",
        policy_path.to_str().unwrap(),
        dataset_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    // Against itself as reference every example sits at the baseline, so
    // the loss opens at exactly 1/2 and one step must improve it.
    assert_eq!(value_after(&stdout, "loss before ="), 0.5);
    assert!(value_after(&stdout, "loss after =") < 0.5);
    assert_eq!(value_after(&stdout, "z0 ="), 0.0);

    let updated = load_checkpoint(&out_path).unwrap();
    let probs = updated.contexts()[0].slots()[0].probabilities();
    assert!(
        probs[0] > probs[1],
        "desirable token should gain mass: {probs:?}"
    );
}

#[test]
fn kto_step_rejects_empty_dataset_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let policy_path = dir.path().join("policy.json");
    let dataset_path = dir.path().join("empty.json");
    save_checkpoint(&two_token_policy(), &policy_path).unwrap();
    fs::write(&dataset_path, r#"{"examples": [], "pairs": []}"#).unwrap();

    let out = run_err(&[
        "kto-step",
        policy_path.to_str().unwrap(),
        dataset_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_loop_emits_progress_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let config_path = dir.path().join("config.json");
    let config = serde_json::json!({
        "iterations": 2,
        "samples_per_context": 4,
        "corpus_count": 4,
        "clip_count": 1,
        "frames_per_clip": 6,
        "width": 122,
        "height": 122,
        "output_dir": out_dir,
    });
    fs::write(&config_path, config.to_string()).unwrap();

    let stdout = run_ok(&["run-loop", config_path.to_str().unwrap()]);
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("iteration")).count(),
        2,
        "stdout: {stdout}"
    );
    assert!(stdout.contains("wrote manifest for 2 iterations"), "stdout: {stdout}");
    assert!(out_dir.join("manifest.json").is_file());
    assert!(out_dir.join("policy_final.json").is_file());
}
