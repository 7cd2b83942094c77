use super::FbfHyperParams;
use crate::error::{check_dim, check_finite, FbfError, Result};
use crate::ssm::RkhsModel;
use nalgebra::{DMatrix, DVector};

/// Extended Kalman filter over the state of a fixed learned model.
#[derive(Debug, Clone)]
pub struct StateFilter<'a> {
    model: &'a RkhsModel,
    hp: FbfHyperParams,
    s: DVector<f64>,
    p1: DMatrix<f64>,
    n_obs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferStep {
    pub s_prior: DVector<f64>,
    pub s_post: DVector<f64>,
    pub p1_post: DMatrix<f64>,
    pub innovation: Option<DVector<f64>>,
}

impl<'a> StateFilter<'a> {
    pub fn new(model: &'a RkhsModel, hp: FbfHyperParams, s0: DVector<f64>, p1_0: DMatrix<f64>) -> Result<Self> {
        hp.validate()?;
        let n_s = model.n_s();
        check_dim("initial state", n_s, s0.len())?;
        check_dim("initial covariance rows", n_s, p1_0.nrows())?;
        check_dim("initial covariance cols", n_s, p1_0.ncols())?;
        check_finite("initial state", s0.iter())?;
        check_finite("initial covariance", p1_0.iter())?;
        Ok(Self {
            model,
            hp,
            s: s0,
            p1: p1_0,
            n_obs: model.n_y(),
        })
    }

    /// Observe only the last `n_obs` state components instead of the model's `n_y`.
    pub fn with_observed(mut self, n_obs: usize) -> Result<Self> {
        if n_obs == 0 || n_obs > self.model.n_s() {
            return Err(FbfError::InvalidParameter {
                name: "n_obs",
                reason: format!("must lie in 1..={}, got {n_obs}", self.model.n_s()),
            });
        }
        self.n_obs = n_obs;
        Ok(self)
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.p1
    }

    pub fn step(&mut self, u: &[f64], d: Option<&[f64]>) -> Result<InferStep> {
        let n_s = self.model.n_s();
        let n_o = self.n_obs;
        let off = n_s - n_o;
        check_dim("input", self.model.n_u(), u.len())?;
        check_finite("input", u)?;
        let k = self.model.kernel_vector_unchecked(self.s.as_slice(), u);
        let s_prior = self.model.combine(&k);
        let lambda = self.model.gradient_with_kernel(self.s.as_slice(), &k);
        let mut p = &lambda * &self.p1 * lambda.transpose();
        for i in 0..n_s {
            p[(i, i)] += self.hp.sigma2_s;
        }
        let (s_post, innovation) = match d {
            None => (s_prior.clone(), None),
            Some(d) => {
                check_dim("measurement", n_o, d.len())?;
                check_finite("measurement", d)?;
                let e = DVector::from_column_slice(d) - s_prior.rows(off, n_o);
                let mut s_mat = p.view((off, off), (n_o, n_o)).into_owned();
                for i in 0..n_o {
                    s_mat[(i, i)] += self.hp.sigma2_y;
                }
                let n_mat = s_mat
                    .cholesky()
                    .ok_or(FbfError::Factorization("innovation covariance"))?
                    .inverse();
                let l1 = p.columns(off, n_o).into_owned();
                let k1 = &l1 * n_mat * self.hp.eta_k1;
                p -= &k1 * l1.transpose();
                (&s_prior + &k1 * &e, Some(e))
            }
        };
        let t = p.transpose();
        p = (p + t) * 0.5;
        check_finite("posterior state", s_post.iter())?;
        check_finite("posterior covariance", p.iter())?;
        self.s = s_post.clone();
        self.p1 = p.clone();
        Ok(InferStep {
            s_prior,
            s_post,
            p1_post: p,
            innovation,
        })
    }
}

/// Runs [`StateFilter`] over a whole sequence.
pub fn infer(
    model: &RkhsModel,
    hp: FbfHyperParams,
    s0: DVector<f64>,
    p1_0: DMatrix<f64>,
    inputs: &[Vec<f64>],
    measurements: &[Option<Vec<f64>>],
) -> Result<Vec<InferStep>> {
    check_dim("measurement count", inputs.len(), measurements.len())?;
    let mut f = StateFilter::new(model, hp, s0, p1_0)?;
    inputs
        .iter()
        .zip(measurements)
        .map(|(u, d)| f.step(u, d.as_deref()))
        .collect()
}
