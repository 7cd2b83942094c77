//! Gaussian and tensor-product kernels.
//!
//! The filter-facing kernel is the unnormalized exponential
//! `K_a(x, y) = exp(-a * ||x - y||^2)`, whose gradient with respect to `y`
//! is `2a (x - y) K_a(x, y)`. The normalized Parzen kernel used by the
//! information-theoretic estimators lives in [`itl`].

pub mod itl;

use crate::error::{check_dim, check_positive, FbfError, Result};

/// Widths of the state and input Gaussian kernels forming the tensor-product kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    a_s: f64,
    a_u: f64,
}

impl KernelParams {
    pub fn new(a_s: f64, a_u: f64) -> Result<Self> {
        check_positive("a_s", a_s)?;
        check_positive("a_u", a_u)?;
        Ok(Self { a_s, a_u })
    }

    /// State kernel width.
    pub fn a_s(&self) -> f64 {
        self.a_s
    }

    /// Input kernel width.
    pub fn a_u(&self) -> f64 {
        self.a_u
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(-a * ||x - y||^2)`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], a: f64) -> Result<f64> {
    check_dim("gaussian_kernel", x.len(), y.len())?;
    check_positive("a", a)?;
    Ok((-a * sq_dist(x, y)).exp())
}

/// Product of the state kernel on `(s, s2)` and the input kernel on `(u, u2)`.
pub fn tensor_kernel(s: &[f64], u: &[f64], s2: &[f64], u2: &[f64], kp: &KernelParams) -> Result<f64> {
    check_dim("tensor_kernel state", s.len(), s2.len())?;
    check_dim("tensor_kernel input", u.len(), u2.len())?;
    Ok(tensor_kernel_unchecked(s, u, s2, u2, kp))
}

#[inline]
pub(crate) fn tensor_kernel_unchecked(s: &[f64], u: &[f64], s2: &[f64], u2: &[f64], kp: &KernelParams) -> f64 {
    (-kp.a_s * sq_dist(s, s2) - kp.a_u * sq_dist(u, u2)).exp()
}

/// Tensor-kernel evaluations of the query `(s, u)` against every dictionary center.
pub fn kernel_vector<S, U>(
    centers_s: &[S],
    centers_u: &[U],
    s: &[f64],
    u: &[f64],
    kp: &KernelParams,
) -> Result<Vec<f64>>
where
    S: AsRef<[f64]>,
    U: AsRef<[f64]>,
{
    if centers_s.is_empty() {
        return Err(FbfError::Empty("kernel dictionary"));
    }
    check_dim("kernel_vector centers", centers_s.len(), centers_u.len())?;
    centers_s
        .iter()
        .zip(centers_u)
        .map(|(cs, cu)| tensor_kernel(cs.as_ref(), cu.as_ref(), s, u, kp))
        .collect()
}
