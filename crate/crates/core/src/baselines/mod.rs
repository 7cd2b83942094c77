//! Nonlinear Kalman filters for systems with known dynamics: EKF and third-degree cubature.

use crate::error::{check_dim, check_finite, FbfError, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type VectorFn = Box<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type MatrixFn = Box<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// `x' = f(x, u) + w`, `y = h(x, u) + v` with `w ~ N(0, Q)`, `v ~ N(0, R)`.
pub struct KnownSsm {
    f: VectorFn,
    h: VectorFn,
    jacobian_f: Option<MatrixFn>,
    jacobian_h: Option<MatrixFn>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    n_x: usize,
    n_y: usize,
}

fn check_covariance(name: &'static str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    check_dim(name, n, m.nrows())?;
    check_dim(name, n, m.ncols())?;
    check_finite(name, m.iter())?;
    if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(FbfError::InvalidParameter {
            name,
            reason: "must be symmetric".into(),
        });
    }
    let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
    if min < -1e-12 {
        return Err(FbfError::InvalidParameter {
            name,
            reason: format!("must be positive semidefinite, min eigenvalue {min:e}"),
        });
    }
    Ok(())
}

impl KnownSsm {
    pub fn new(n_x: usize, n_y: usize, f: VectorFn, h: VectorFn, q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        check_covariance("Q", &q, n_x)?;
        check_covariance("R", &r, n_y)?;
        Ok(Self {
            f,
            h,
            jacobian_f: None,
            jacobian_h: None,
            q,
            r,
            n_x,
            n_y,
        })
    }

    pub fn with_jacobians(mut self, jacobian_f: MatrixFn, jacobian_h: MatrixFn) -> Self {
        self.jacobian_f = Some(jacobian_f);
        self.jacobian_h = Some(jacobian_h);
        self
    }

    /// Same system with a different process covariance.
    pub fn set_q(&mut self, q: DMatrix<f64>) -> Result<()> {
        check_covariance("Q", &q, self.n_x)?;
        self.q = q;
        Ok(())
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn transition(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.f)(x, u)
    }

    pub fn measure(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.h)(x, u)
    }

    fn jac_f(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian_f {
            Some(j) => j(x, u),
            None => finite_difference_jacobian(&self.f, x, u),
        }
    }

    fn jac_h(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian_h {
            Some(j) => j(x, u),
            None => finite_difference_jacobian(&self.h, x, u),
        }
    }
}

/// Central differences with step `1e−6·(1 + |xⱼ|)`.
pub fn finite_difference_jacobian<F>(g: &F, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + ?Sized,
{
    let base = g(x, u);
    let mut jac = DMatrix::zeros(base.len(), x.len());
    for j in 0..x.len() {
        let h = 1e-6 * (1.0 + x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (g(&xp, u) - g(&xm, u)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEstimate {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineStep {
    pub x_prior: DVector<f64>,
    pub estimate: GaussianEstimate,
    /// Smallest eigenvalue of the posterior covariance.
    pub min_eig: f64,
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn finish(x_prior: DVector<f64>, x: DVector<f64>, p: DMatrix<f64>) -> Result<BaselineStep> {
    let p = symmetrize(p);
    check_finite("posterior state", x.iter())?;
    check_finite("posterior covariance", p.iter())?;
    let min_eig = SymmetricEigen::new(p.clone()).eigenvalues.min();
    Ok(BaselineStep {
        x_prior,
        estimate: GaussianEstimate { x, p },
        min_eig,
    })
}

fn check_inputs(ssm: &KnownSsm, est: &GaussianEstimate, y: Option<&DVector<f64>>) -> Result<()> {
    check_dim("state", ssm.n_x, est.x.len())?;
    check_dim("covariance", ssm.n_x, est.p.nrows())?;
    check_dim("covariance", ssm.n_x, est.p.ncols())?;
    if let Some(y) = y {
        check_dim("measurement", ssm.n_y, y.len())?;
        check_finite("measurement", y.iter())?;
    }
    Ok(())
}

fn kalman_update(
    x: DVector<f64>,
    p: DMatrix<f64>,
    y: &DVector<f64>,
    y_pred: &DVector<f64>,
    cross: &DMatrix<f64>,
    s: DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s_inv = s
        .clone()
        .cholesky()
        .ok_or(FbfError::Factorization("innovation covariance"))?
        .inverse();
    let k = cross * s_inv;
    let x_post = x + &k * (y - y_pred);
    let p_post = p - &k * s * k.transpose();
    Ok((x_post, p_post))
}

/// One extended Kalman predict/update. `y = None` skips the update.
pub fn ekf_step(
    ssm: &KnownSsm,
    est: &GaussianEstimate,
    u: &DVector<f64>,
    y: Option<&DVector<f64>>,
) -> Result<BaselineStep> {
    check_inputs(ssm, est, y)?;
    let x_prior = ssm.transition(&est.x, u);
    let f = ssm.jac_f(&est.x, u);
    let p_prior = symmetrize(&f * &est.p * f.transpose() + &ssm.q);
    let Some(y) = y else {
        return finish(x_prior.clone(), x_prior, p_prior);
    };
    let h = ssm.jac_h(&x_prior, u);
    let y_pred = ssm.measure(&x_prior, u);
    let cross = &p_prior * h.transpose();
    let s = &h * &cross + &ssm.r;
    let (x, p) = kalman_update(x_prior.clone(), p_prior, y, &y_pred, &cross, s)?;
    finish(x_prior, x, p)
}

/// `2n` points `m ± √n · Sⱼ` with `S Sᵀ = P`; jitter `1e−12 I` is added once if needed.
pub fn cubature_points(m: &DVector<f64>, p: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let n = m.len();
    let sqrt = match p.clone().cholesky() {
        Some(c) => c.unpack(),
        None => (p + DMatrix::identity(n, n) * 1e-12)
            .cholesky()
            .ok_or(FbfError::Factorization("cubature covariance"))?
            .unpack(),
    };
    let scale = (n as f64).sqrt();
    let mut pts = Vec::with_capacity(2 * n);
    for j in 0..n {
        let d = sqrt.column(j) * scale;
        pts.push(m + &d);
        pts.push(m - &d);
    }
    Ok(pts)
}

fn moments(points: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let w = 1.0 / points.len() as f64;
    let mean = points.iter().fold(DVector::zeros(points[0].len()), |acc, p| acc + p) * w;
    let mut cov = DMatrix::zeros(mean.len(), mean.len());
    for p in points {
        let d = p - &mean;
        cov += &d * d.transpose() * w;
    }
    (mean, cov)
}

/// One cubature Kalman predict/update. `y = None` skips the update.
pub fn ckf_step(
    ssm: &KnownSsm,
    est: &GaussianEstimate,
    u: &DVector<f64>,
    y: Option<&DVector<f64>>,
) -> Result<BaselineStep> {
    check_inputs(ssm, est, y)?;
    let prop: Vec<DVector<f64>> = cubature_points(&est.x, &est.p)?
        .iter()
        .map(|x| ssm.transition(x, u))
        .collect();
    let (x_prior, p) = moments(&prop);
    let p_prior = symmetrize(p + &ssm.q);
    let Some(y) = y else {
        return finish(x_prior.clone(), x_prior, p_prior);
    };
    let pts = cubature_points(&x_prior, &p_prior)?;
    let zs: Vec<DVector<f64>> = pts.iter().map(|x| ssm.measure(x, u)).collect();
    let (y_pred, pzz) = moments(&zs);
    let w = 1.0 / pts.len() as f64;
    let mut cross = DMatrix::zeros(ssm.n_x, ssm.n_y);
    for (x, z) in pts.iter().zip(&zs) {
        cross += (x - &x_prior) * (z - &y_pred).transpose() * w;
    }
    let s = pzz + &ssm.r;
    let (x, p) = kalman_update(x_prior.clone(), p_prior, y, &y_pred, &cross, s)?;
    finish(x_prior, x, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Ekf,
    Ckf,
}

/// Runs one filter over a sequence, returning every step.
pub fn run_baseline(
    kind: BaselineKind,
    ssm: &KnownSsm,
    init: GaussianEstimate,
    inputs: &[DVector<f64>],
    measurements: &[Option<DVector<f64>>],
) -> Result<Vec<BaselineStep>> {
    check_dim("measurement count", inputs.len(), measurements.len())?;
    let step = match kind {
        BaselineKind::Ekf => ekf_step,
        BaselineKind::Ckf => ckf_step,
    };
    let mut est = init;
    let mut out = Vec::with_capacity(inputs.len());
    for (u, y) in inputs.iter().zip(measurements) {
        let r = step(ssm, &est, u, y.as_ref())?;
        est = r.estimate.clone();
        out.push(r);
    }
    Ok(out)
}
