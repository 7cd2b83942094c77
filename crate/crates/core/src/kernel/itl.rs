//! Parzen-window estimators from information theoretic learning.
//!
//! These use the normalized Gaussian `G_σ(d) = (2π σ²)^(-dim/2) exp(-||d||² / 2σ²)`,
//! not the filter kernel.

use super::sq_dist;
use crate::error::{check_dim, check_positive, FbfError, Result};
use std::f64::consts::PI;

/// Normalized Gaussian density of a difference vector with squared norm `d2`.
#[inline]
fn parzen(d2: f64, sigma: f64, dim: usize) -> f64 {
    let norm = (2.0 * PI * sigma * sigma).powf(-(dim as f64) / 2.0);
    norm * (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Information potential `(1/N²) Σᵢ Σⱼ G_{√2σ}(xᵢ - xⱼ)`.
pub fn information_potential<S: AsRef<[f64]>>(samples: &[S], sigma: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(FbfError::Empty("information potential samples"));
    }
    check_positive("sigma", sigma)?;
    let dim = samples[0].as_ref().len();
    for s in samples {
        check_dim("information_potential sample", dim, s.as_ref().len())?;
    }
    let width = std::f64::consts::SQRT_2 * sigma;
    let n = samples.len();
    let mut total = 0.0;
    for (i, xi) in samples.iter().enumerate() {
        // diagonal terms contribute G(0); off-diagonal pairs are counted twice
        total += parzen(0.0, width, dim);
        for xj in &samples[i + 1..] {
            total += 2.0 * parzen(sq_dist(xi.as_ref(), xj.as_ref()), width, dim);
        }
    }
    Ok(total / (n * n) as f64)
}

/// Renyi quadratic entropy estimate, `-ln IP`.
pub fn renyi_quadratic_entropy<S: AsRef<[f64]>>(samples: &[S], sigma: f64) -> Result<f64> {
    Ok(-information_potential(samples, sigma)?.ln())
}

/// Sample correntropy `(1/N) Σ G_σ(xᵢ - yᵢ)` between two scalar sequences.
pub fn correntropy(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(FbfError::Empty("correntropy samples"));
    }
    check_dim("correntropy", x.len(), y.len())?;
    check_positive("sigma", sigma)?;
    let sum: f64 = x.iter().zip(y).map(|(a, b)| parzen((a - b) * (a - b), sigma, 1)).sum();
    Ok(sum / x.len() as f64)
}
