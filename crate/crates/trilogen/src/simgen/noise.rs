//! Forward diffusion noising: `√ᾱ_t · x + √(1 − ᾱ_t) · ε` per pixel in
//! [0, 1] scale, clamped back to [0, 1] and requantized to 8 bits. The
//! clamp is a documented deviation from the unbounded latent of the
//! underlying formula — there is no autoencoder here, and the op's job
//! is graded degradation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::SimError;
use crate::imagekit::{Image, Video};
use crate::util::mix_seed;

/// A linear-β forward schedule holding `β_t` and the cumulative products
/// `ᾱ_t`, with `ᾱ_0 = 1` and `ᾱ_t` strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl Default for NoiseSchedule {
    /// The canonical schedule: T = 1000, β linear from 1e−4 to 0.02.
    fn default() -> Self {
        Self::new(1000, 1e-4, 0.02).expect("canonical schedule is valid")
    }
}

impl NoiseSchedule {
    pub fn new(t_steps: usize, beta_start: f64, beta_end: f64) -> Result<Self, SimError> {
        if t_steps == 0 {
            return Err(SimError::BadConfig("schedule needs at least one step".into()));
        }
        if !(beta_start.is_finite() && beta_end.is_finite())
            || beta_start <= 0.0
            || beta_end >= 1.0
            || beta_start > beta_end
        {
            return Err(SimError::BadConfig(format!(
                "betas must satisfy 0 < start <= end < 1, got {beta_start}..{beta_end}"
            )));
        }
        let mut betas = Vec::with_capacity(t_steps);
        let mut alpha_bars = Vec::with_capacity(t_steps + 1);
        alpha_bars.push(1.0);
        let mut product = 1.0;
        for t in 0..t_steps {
            let frac = if t_steps == 1 { 0.0 } else { t as f64 / (t_steps - 1) as f64 };
            let beta = beta_start + (beta_end - beta_start) * frac;
            betas.push(beta);
            product *= 1.0 - beta;
            alpha_bars.push(product);
        }
        Ok(Self { betas, alpha_bars })
    }

    /// Number of diffusion steps T.
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// `β_t` for `t` in `1..=T`.
    pub fn beta(&self, t: usize) -> Result<f64, SimError> {
        self.check_step(t)?;
        Ok(self.betas[t - 1])
    }

    /// `ᾱ_t` for `t` in `0..=T` (`ᾱ_0 = 1`).
    pub fn alpha_bar(&self, t: usize) -> Result<f64, SimError> {
        if t > self.len() {
            return Err(SimError::BadStep { t, max: self.len() });
        }
        Ok(self.alpha_bars[t])
    }

    fn check_step(&self, t: usize) -> Result<(), SimError> {
        if t == 0 || t > self.len() {
            return Err(SimError::BadStep { t, max: self.len() });
        }
        Ok(())
    }
}

/// The per-sample mixing formula in [0, 1] scale, before clamping:
/// `√ᾱ · x + √(1 − ᾱ) · ε`.
pub fn noise_mix(x: f64, alpha_bar: f64, eps: f64) -> f64 {
    alpha_bar.sqrt() * x + (1.0 - alpha_bar).sqrt() * eps
}

/// One standard-normal draw via the Box–Muller cosine branch.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn noised_frame<F>(frame: &Image, alpha_bar: f64, mut eps: F) -> Image
where
    F: FnMut() -> f64,
{
    let pixels: Vec<u8> = frame
        .pixels()
        .iter()
        .map(|&p| {
            let x = f64::from(p) / 255.0;
            let mixed = noise_mix(x, alpha_bar, eps()).clamp(0.0, 1.0);
            (mixed * 255.0).round() as u8
        })
        .collect();
    Image::from_pixels(frame.width(), frame.height(), frame.channels(), pixels)
        .expect("same dimensions as the input frame")
}

/// Applies forward noising at step `t` (`1..=T`) to every frame. Frame
/// `f` draws its Gaussian noise from a generator seeded with
/// `mix_seed(seed, f)`, so frames are perturbed independently and the
/// whole operation is deterministic in (video, t, schedule, seed).
pub fn forward_noise(
    video: &Video,
    t: usize,
    schedule: &NoiseSchedule,
    seed: u64,
) -> Result<Video, SimError> {
    schedule.check_step(t)?;
    let alpha_bar = schedule.alpha_bars[t];
    let frames = video
        .frames()
        .iter()
        .enumerate()
        .map(|(f, frame)| {
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, f as u64));
            noised_frame(frame, alpha_bar, || standard_normal(&mut rng))
        })
        .collect();
    Ok(Video::new(frames, video.fps())?)
}

/// Test hook: forward noising with caller-supplied noise. `eps` is
/// called once per sample in (frame, row-major pixel, channel) order.
pub fn forward_noise_with_eps<F>(
    video: &Video,
    t: usize,
    schedule: &NoiseSchedule,
    mut eps: F,
) -> Result<Video, SimError>
where
    F: FnMut() -> f64,
{
    schedule.check_step(t)?;
    let alpha_bar = schedule.alpha_bars[t];
    let frames = video
        .frames()
        .iter()
        .map(|frame| noised_frame(frame, alpha_bar, &mut eps))
        .collect();
    Ok(Video::new(frames, video.fps())?)
}
