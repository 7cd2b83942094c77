use crate::error::{FbfError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseFamily {
    Gaussian,
    Laplacian,
    Uniform,
    AlphaStable,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 4] = [Self::Gaussian, Self::Laplacian, Self::Uniform, Self::AlphaStable];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Laplacian => "laplacian",
            Self::Uniform => "uniform",
            Self::AlphaStable => "alpha_stable",
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown noise family `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// Stable index, used only by [`NoiseFamily::AlphaStable`].
    pub alpha: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, alpha: f64) -> Result<Self> {
        if family == NoiseFamily::AlphaStable && !(alpha > 0.0 && alpha <= 2.0) {
            return Err(FbfError::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0, 2], got {alpha}"),
            });
        }
        Ok(Self { family, alpha })
    }

    pub fn gaussian() -> Self {
        Self {
            family: NoiseFamily::Gaussian,
            alpha: 2.0,
        }
    }

    /// One draw with unit standard deviation (unit scale for the stable family).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Laplacian => {
                let b = std::f64::consts::FRAC_1_SQRT_2;
                let u: f64 = rng.random_range(-0.5..0.5);
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            NoiseFamily::Uniform => {
                let w = 3f64.sqrt();
                rng.random_range(-w..w)
            }
            NoiseFamily::AlphaStable => symmetric_stable(self.alpha, rng),
        }
    }
}

/// Chambers–Mallows–Stuck draw from the symmetric stable law `S(α, 0, 1)`.
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v: f64 = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
    let w: f64 = Exp1.sample(rng);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Mean of the squared entries.
pub fn signal_power(signal: &[f64]) -> f64 {
    signal.iter().map(|x| x * x).sum::<f64>() / signal.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisySignal {
    pub noisy: Vec<f64>,
    /// `σ_n²` with `P / σ_n² = 10^(snr/10)`; the squared scale for the stable family.
    pub noise_scale2: f64,
}

/// Adds i.i.d. noise whose standard deviation (scale, for the stable family) sets the SNR
/// against the mean-square power of `signal`. `snr_db = +∞` returns the signal unchanged.
pub fn add_noise(signal: &[f64], spec: &NoiseSpec, snr_db: f64, seed: u64) -> Result<NoisySignal> {
    if snr_db == f64::INFINITY {
        return Ok(NoisySignal {
            noisy: signal.to_vec(),
            noise_scale2: 0.0,
        });
    }
    if !snr_db.is_finite() {
        return Err(FbfError::InvalidParameter {
            name: "snr_db",
            reason: format!("must be finite or +inf, got {snr_db}"),
        });
    }
    let power = signal_power(signal);
    if power.is_nan() || power <= 0.0 {
        return Err(FbfError::InvalidParameter {
            name: "signal",
            reason: "zero power".into(),
        });
    }
    let scale2 = power / 10f64.powf(snr_db / 10.0);
    let scale = scale2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = signal.iter().map(|x| x + scale * spec.sample(&mut rng)).collect();
    Ok(NoisySignal {
        noisy,
        noise_scale2: scale2,
    })
}
