use crate::error::{check_positive, FbfError, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Sub-steps per sample in the delay-ODE integrator.
pub const MG_SUBSTEPS: usize = 10;

/// Samples `x(j·dt)`, `j = 0..n`, of `ẋ = β x(t−τ)/(1 + x(t−τ)ⁿ) − γ x(t)` with `x(t) = x0` for
/// `t ≤ 0`.
///
/// RK4 runs at `h = dt/10`; the delayed value is linearly interpolated between stored grid points.
/// A delayed time that falls after the current grid point (only when `0 < τ < h`) reads the
/// current grid value.
pub fn mackey_glass(n: usize, beta: f64, gamma: f64, tau: f64, power: f64, dt: f64, x0: f64) -> Result<Vec<f64>> {
    check_positive("dt", dt)?;
    if !tau.is_finite() || tau < 0.0 {
        return Err(FbfError::InvalidParameter {
            name: "tau",
            reason: format!("must be finite and non-negative, got {tau}"),
        });
    }
    if n == 0 {
        return Err(FbfError::Empty("mackey_glass samples"));
    }
    let h = dt / MG_SUBSTEPS as f64;
    let rhs = |x: f64, xd: f64| beta * xd / (1.0 + xd.powf(power)) - gamma * x;
    let mut grid = vec![x0];
    let delayed = |grid: &[f64], t: f64| -> f64 {
        let k = grid.len() - 1;
        let pos = t / h;
        if pos <= 0.0 {
            return x0;
        }
        if pos >= k as f64 {
            return grid[k];
        }
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        grid[lo] + frac * (grid[lo + 1] - grid[lo])
    };
    let mut out = Vec::with_capacity(n);
    out.push(x0);
    let steps = (n - 1) * MG_SUBSTEPS;
    for k in 0..steps {
        let t = k as f64 * h;
        let x = grid[k];
        let (k1, k2, k3, k4);
        if tau == 0.0 {
            k1 = rhs(x, x);
            let x2 = x + 0.5 * h * k1;
            k2 = rhs(x2, x2);
            let x3 = x + 0.5 * h * k2;
            k3 = rhs(x3, x3);
            let x4 = x + h * k3;
            k4 = rhs(x4, x4);
        } else {
            let d1 = delayed(&grid, t - tau);
            let d2 = delayed(&grid, t + 0.5 * h - tau);
            let d4 = delayed(&grid, t + h - tau);
            k1 = rhs(x, d1);
            k2 = rhs(x + 0.5 * h * k1, d2);
            k3 = rhs(x + 0.5 * h * k2, d2);
            k4 = rhs(x + h * k3, d4);
        }
        let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        grid.push(next);
        if (k + 1) % MG_SUBSTEPS == 0 {
            out.push(next);
        }
    }
    Ok(out)
}

/// `n` points of the Ikeda map, starting with `[x0, y0]`.
pub fn ikeda(n: usize, u: f64, x0: f64, y0: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(n);
    let mut p = [x0, y0];
    for _ in 0..n {
        out.push(p);
        p = ikeda_map(p, u);
    }
    out
}

pub fn ikeda_map(p: [f64; 2], u: f64) -> [f64; 2] {
    let [x, y] = p;
    let t = 0.4 - 6.0 / (1.0 + x * x + y * y);
    let (s, c) = t.sin_cos();
    [1.0 + u * (x * c - y * s), u * (x * s + y * c)]
}

pub const ARM_R1: f64 = 0.8;
pub const ARM_R2: f64 = 0.2;
pub const ARM_ALPHA1_RANGE: (f64, f64) = (0.3, 1.2);
pub const ARM_ALPHA2_RANGE: (f64, f64) = (PI / 2.0, 3.0 * PI / 2.0);
/// Standard deviations of the joint random walk.
pub const ARM_WALK_STD: [f64; 2] = [0.01, 0.1];
pub const ARM_MEAS_VAR: f64 = 0.005;

/// End-effector position for joint angles `(α₁, α₂)`.
pub fn robot_arm_forward(alpha1: f64, alpha2: f64, r1: f64, r2: f64) -> [f64; 2] {
    [
        r1 * alpha1.cos() - r2 * (alpha1 + alpha2).cos(),
        r1 * alpha1.sin() - r2 * (alpha1 + alpha2).sin(),
    ]
}

pub fn robot_arm_jacobian(alpha1: f64, alpha2: f64, r1: f64, r2: f64) -> DMatrix<f64> {
    let (s1, c1) = alpha1.sin_cos();
    let (s12, c12) = (alpha1 + alpha2).sin_cos();
    DMatrix::from_row_slice(2, 2, &[-r1 * s1 + r2 * s12, r2 * s12, r1 * c1 - r2 * c12, -r2 * c12])
}

pub fn arm_forward_vec(x: &DVector<f64>) -> DVector<f64> {
    let y = robot_arm_forward(x[0], x[1], ARM_R1, ARM_R2);
    DVector::from_vec(y.to_vec())
}

/// Joint random walk with the printed process noise, clipped to the joint ranges.
pub fn arm_trajectory<R: Rng + ?Sized>(n: usize, start: [f64; 2], rng: &mut R) -> Vec<[f64; 2]> {
    let n1 = Normal::new(0.0, ARM_WALK_STD[0]).expect("valid normal");
    let n2 = Normal::new(0.0, ARM_WALK_STD[1]).expect("valid normal");
    let mut a = start;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(a);
        a[0] = (a[0] + n1.sample(rng)).clamp(ARM_ALPHA1_RANGE.0, ARM_ALPHA1_RANGE.1);
        a[1] = (a[1] + n2.sample(rng)).clamp(ARM_ALPHA2_RANGE.0, ARM_ALPHA2_RANGE.1);
    }
    out
}

/// Uniform draw over the joint ranges.
pub fn arm_random_start<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    [
        rng.random_range(ARM_ALPHA1_RANGE.0..ARM_ALPHA1_RANGE.1),
        rng.random_range(ARM_ALPHA2_RANGE.0..ARM_ALPHA2_RANGE.1),
    ]
}
