use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard normal samples from PCG-64 (XSL-RR 128/64) through the
/// Box–Muller transform. The stream for a given seed is part of the
/// public contract and does not change between releases.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: Pcg64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Pcg64::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1], u2 in [0, 1).
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Measurement noise at a target signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Target SNR in dB; `+∞` disables the noise.
    pub snr_db: f64,
    pub sample_period: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise sample period must be positive, got {}",
                self.sample_period
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidInput(format!("invalid SNR target {}", self.snr_db)));
        }
        Ok(())
    }
}

/// `10·log10((y − μ)ᵀ(y − μ) / ηᵀη)`; `+∞` when `η = 0`.
pub fn snr_db(y: &[f64], eta: &[f64]) -> f64 {
    let signal = centered_energy(y);
    let noise: f64 = eta.iter().map(|v| v * v).sum();
    if noise == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (signal / noise).log10()
}

pub(crate) fn centered_energy(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mu = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mu) * (v - mu)).sum()
}

/// Scale for unit-variance samples `raw` such that
/// `10·log10((y − μ)ᵀ(y − μ) / (σ²·rawᵀraw))` equals the target exactly.
pub(crate) fn noise_sigma(y: &[f64], raw: &[f64], snr_db: f64) -> Result<f64> {
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    let energy = centered_energy(y);
    if !(energy > 0.0) {
        return Err(Error::Degenerate(
            "output is constant, so a finite SNR target is undefined".into(),
        ));
    }
    let raw_energy: f64 = raw.iter().map(|v| v * v).sum();
    if !(raw_energy > 0.0) {
        return Err(Error::Degenerate("noise realization is identically zero".into()));
    }
    Ok((energy / raw_energy / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Noisy samples and the SNR they realize.
#[derive(Debug, Clone)]
pub struct NoisyOutput {
    pub y_meas: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma: f64,
    pub realized_snr_db: f64,
}

/// Adds one Gaussian draw per sample of `y`; each sample stands for one
/// noise hold interval.
pub fn add_output_noise(y: &[f64], spec: &NoiseSpec) -> Result<NoisyOutput> {
    spec.validate()?;
    let mut stream = GaussianStream::new(spec.seed);
    let raw: Vec<f64> = y.iter().map(|_| stream.sample()).collect();
    let sigma = noise_sigma(y, &raw, spec.snr_db)?;
    let eta: Vec<f64> = raw.iter().map(|v| sigma * v).collect();
    let y_meas = y.iter().zip(&eta).map(|(a, b)| a + b).collect();
    let realized_snr_db = snr_db(y, &eta);
    Ok(NoisyOutput {
        y_meas,
        eta,
        sigma,
        realized_snr_db,
    })
}
