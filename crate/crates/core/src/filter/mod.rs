//! The functional Bayesian filter: joint Kalman estimation of the kernel state `s` and the
//! RKHS weights `Ω` over the super-augmented state `[s; Ω]`.
//!
//! The weight covariance is never materialized. For each state component `k` the filter keeps
//!
//! * `P1` — the dense `n_s × n_s` state covariance,
//! * `V⁽ᵏ⁾` — an `n_s × N` factor with `P2⁽ᵏ⁾ = V⁽ᵏ⁾ Ψᵀ` over the dictionary features `Ψ`,
//! * `ρₖ` — a scalar with `P4⁽ᵏ⁾ = ρₖ I`.
//!
//! `V` is stored in its prior form; the measurement correction `P2⁺ = (I − K1 𝕀) P2⁻` is folded
//! into the next prediction through `Λ' = Λ (I − K1 𝕀)`. The scalar `ς²ₖ` subtracted from `ρₖ` at
//! each update is the trace of `P2⁽ᵏ⁾ᵀ 𝕀ᵀ N 𝕀 P2⁽ᵏ⁾`; it is computed from `Zₖ = V⁽ᵏ⁾ G V⁽ᵏ⁾ᵀ`
//! (`G` the Gram matrix of the dictionary), which admits an O(N) recursion alongside `V`.

mod checkpoint;
mod infer;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_HEADER};
pub use infer::{infer, InferStep, StateFilter};
pub use train::{train_epochs, train_epochs_observed, TrainReport};

use crate::error::{check_dim, check_finite, check_positive, FbfError, Result};
use crate::kernel::KernelParams;
use crate::ssm::{RkhsModel, INIT_STD};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Lower bound applied to every `ρₖ` after the measurement update.
pub const RHO_MIN: f64 = 1e-8;

/// Variances and gain scales of the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbfHyperParams {
    /// State process variance, also the initial `P1` diagonal.
    pub sigma2_s: f64,
    /// Weight process variance, also the initial `ρ`.
    pub sigma2_omega: f64,
    /// Measurement variance.
    pub sigma2_y: f64,
    /// Scale applied to the state gain `K1`.
    pub eta_k1: f64,
    /// Scale applied to the weight gain `K2`.
    pub eta_k2: f64,
}

impl Default for FbfHyperParams {
    fn default() -> Self {
        Self {
            sigma2_s: 1.0,
            sigma2_omega: 1.0,
            sigma2_y: 1.0,
            eta_k1: 0.5,
            eta_k2: 0.1,
        }
    }
}

impl FbfHyperParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("sigma2_s", self.sigma2_s)?;
        check_positive("sigma2_omega", self.sigma2_omega)?;
        check_positive("sigma2_y", self.sigma2_y)?;
        for (name, eta) in [("eta_k1", self.eta_k1), ("eta_k2", self.eta_k2)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(FbfError::InvalidParameter {
                    name,
                    reason: format!("must lie in (0, 1], got {eta}"),
                });
            }
        }
        Ok(())
    }
}

/// Which covariance recursion drives the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recursion {
    /// Full Bayesian recursion.
    #[default]
    Full,
    /// State gain forced to zero and unit weight variance held fixed: the weight update
    /// becomes the kernel adaptive ARMA gradient step.
    GradientDescent,
}

/// Dictionary growth control.
///
/// Once the dictionary holds `max_size` centers, a new center whose largest kernel value
/// against the existing centers exceeds `coherence` is not appended; its weight increment is
/// folded into the most coherent existing center instead. The defaults never merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictionaryPolicy {
    pub max_size: Option<usize>,
    pub coherence: f64,
}

impl Default for DictionaryPolicy {
    fn default() -> Self {
        Self {
            max_size: None,
            coherence: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FbfOptions {
    pub recursion: Recursion,
    pub dictionary: DictionaryPolicy,
}

/// Factored block covariance of the super-augmented state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    p1: DMatrix<f64>,
    v: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    rho: DVector<f64>,
    k1_last: DMatrix<f64>,
}

impl CovarianceState {
    fn initial(n_s: usize, n_y: usize, n: usize, hp: &FbfHyperParams) -> Self {
        Self {
            p1: DMatrix::identity(n_s, n_s) * hp.sigma2_s,
            v: vec![DMatrix::zeros(n_s, n); n_s],
            z: vec![DMatrix::zeros(n_s, n_s); n_s],
            rho: DVector::from_element(n_s, hp.sigma2_omega),
            k1_last: DMatrix::zeros(n_s, n_y),
        }
    }

    /// State covariance block.
    pub fn p1(&self) -> &DMatrix<f64> {
        &self.p1
    }

    /// Prior-form factor of `P2⁽ᵏ⁾`.
    pub fn v(&self, k: usize) -> &DMatrix<f64> {
        &self.v[k]
    }

    /// Scalar weight variances `ρₖ`.
    pub fn rho(&self) -> &DVector<f64> {
        &self.rho
    }

    /// State gain of the most recent measurement update (zero after a deferred step).
    pub fn k1_last(&self) -> &DMatrix<f64> {
        &self.k1_last
    }

    /// Factor of the posterior block, `P2⁽ᵏ⁾⁺ = (I − K1 𝕀) V⁽ᵏ⁾ Ψᵀ`.
    pub fn p2_posterior_factor(&self, k: usize) -> DMatrix<f64> {
        correction(&self.k1_last, self.p1.nrows()) * &self.v[k]
    }
}

/// `I − K1 𝕀` for an `n_s × n_y` gain.
fn correction(k1: &DMatrix<f64>, n_s: usize) -> DMatrix<f64> {
    let n_y = k1.ncols();
    let mut m = DMatrix::identity(n_s, n_s);
    let mut block = m.columns_mut(n_s - n_y, n_y);
    block -= k1;
    m
}

fn symmetrize(m: &mut DMatrix<f64>) -> f64 {
    let asym = (&*m - m.transpose()).amax();
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
    asym
}

/// Where the feature of the current step lands in the dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterSlot {
    Append,
    Merge(usize),
}

/// Output of the time update, consumed by [`FbfFilter::update`].
#[derive(Debug, Clone)]
pub struct Prediction {
    pub s_prior: DVector<f64>,
    pub lambda: DMatrix<f64>,
    pub k_vec: Vec<f64>,
    pub p1_prior: DMatrix<f64>,
    pub v_prior: Vec<DMatrix<f64>>,
    pub rho_prior: DVector<f64>,
    pub slot: CenterSlot,
    z_prior: Vec<DMatrix<f64>>,
    query_s: Vec<f64>,
    query_u: Vec<f64>,
    step: usize,
}

impl Prediction {
    /// Prior output `𝕀 s⁻`.
    pub fn y_prior(&self, n_y: usize) -> DVector<f64> {
        let n_s = self.s_prior.len();
        self.s_prior.rows(n_s - n_y, n_y).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub y_pred: DVector<f64>,
    /// `d − y_pred`; absent for a deferred step.
    pub e: Option<DVector<f64>>,
    pub s_post: DVector<f64>,
    pub gain_norm_k1: f64,
    pub gain_norm_k2: f64,
}

/// Running covariance-health counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterHealth {
    pub steps: usize,
    pub updates: usize,
    /// Largest `max|P1 − P1ᵀ|` seen before symmetrization.
    pub max_asymmetry: f64,
    /// Smallest `λ_min(M + σ²_y I) − σ²_y` seen.
    pub min_innovation_margin: f64,
    pub rho_clamps: usize,
    pub merges: usize,
}

impl Default for FilterHealth {
    fn default() -> Self {
        Self {
            steps: 0,
            updates: 0,
            max_asymmetry: 0.0,
            min_innovation_margin: f64::INFINITY,
            rho_clamps: 0,
            merges: 0,
        }
    }
}

impl FilterHealth {
    pub fn merge(&mut self, other: &FilterHealth) {
        self.steps += other.steps;
        self.updates += other.updates;
        self.max_asymmetry = self.max_asymmetry.max(other.max_asymmetry);
        self.min_innovation_margin = self.min_innovation_margin.min(other.min_innovation_margin);
        self.rho_clamps += other.rho_clamps;
        self.merges += other.merges;
    }

    /// Fraction of `(update, component)` pairs in which `ρ` hit its floor.
    pub fn clamp_rate(&self, n_s: usize) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.rho_clamps as f64 / (self.updates * n_s) as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct FbfFilter {
    model: RkhsModel,
    cov: CovarianceState,
    s: DVector<f64>,
    hp: FbfHyperParams,
    options: FbfOptions,
    step_count: usize,
    health: FilterHealth,
}

impl FbfFilter {
    /// Starts from `model` with `P1 = σ²_s I`, `P2 = 0`, `P4 = σ²_Ω I` and initial state `s0`.
    pub fn new(model: RkhsModel, hp: FbfHyperParams, s0: DVector<f64>) -> Result<Self> {
        Self::with_options(model, hp, s0, FbfOptions::default())
    }

    pub fn with_options(model: RkhsModel, hp: FbfHyperParams, s0: DVector<f64>, options: FbfOptions) -> Result<Self> {
        hp.validate()?;
        check_dim("initial state", model.n_s(), s0.len())?;
        check_finite("initial state", s0.iter())?;
        let mut cov = CovarianceState::initial(model.n_s(), model.n_y(), model.len(), &hp);
        if options.recursion == Recursion::GradientDescent {
            cov.rho.fill(1.0);
        }
        Ok(Self {
            model,
            cov,
            s: s0,
            hp,
            options,
            step_count: 0,
            health: FilterHealth::default(),
        })
    }

    /// Random center, coefficients and initial state, all `N(0, 0.1²)`.
    pub fn random<R: Rng + ?Sized>(
        kp: KernelParams,
        n_s: usize,
        n_u: usize,
        n_y: usize,
        hp: FbfHyperParams,
        rng: &mut R,
    ) -> Result<Self> {
        let model = RkhsModel::random(kp, n_s, n_u, n_y, rng)?;
        let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
        let s0 = DVector::from_fn(n_s, |_, _| normal.sample(rng));
        Self::new(model, hp, s0)
    }

    pub(crate) fn from_parts(
        model: RkhsModel,
        cov: CovarianceState,
        s: DVector<f64>,
        hp: FbfHyperParams,
        options: FbfOptions,
        step_count: usize,
    ) -> Self {
        Self {
            model,
            cov,
            s,
            hp,
            options,
            step_count,
            health: FilterHealth::default(),
        }
    }

    pub fn model(&self) -> &RkhsModel {
        &self.model
    }

    pub fn into_model(self) -> RkhsModel {
        self.model
    }

    pub fn covariance(&self) -> &CovarianceState {
        &self.cov
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn hyper_params(&self) -> &FbfHyperParams {
        &self.hp
    }

    pub fn options(&self) -> &FbfOptions {
        &self.options
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn health(&self) -> &FilterHealth {
        &self.health
    }

    /// Bytes held by the model, the state and the covariance factors.
    pub fn memory_bytes(&self) -> usize {
        let c = &self.cov;
        let floats = c.p1.len()
            + c.v.iter().map(|m| m.len()).sum::<usize>()
            + c.z.iter().map(|m| m.len()).sum::<usize>()
            + c.rho.len()
            + c.k1_last.len()
            + self.s.len();
        floats * std::mem::size_of::<f64>() + self.model.memory_bytes()
    }

    pub fn n_s(&self) -> usize {
        self.model.n_s()
    }

    pub fn n_y(&self) -> usize {
        self.model.n_y()
    }

    /// Current output estimate `𝕀 s`.
    pub fn output(&self) -> DVector<f64> {
        let (n_s, n_y) = (self.n_s(), self.n_y());
        self.s.rows(n_s - n_y, n_y).into_owned()
    }

    /// Starts a new trajectory from `s0`: the state covariance returns to `σ²_s I` and the
    /// state/weight cross-covariance to zero. Weights and `ρ` are kept.
    pub fn reset_trajectory(&mut self, s0: DVector<f64>) -> Result<()> {
        check_dim("trajectory state", self.n_s(), s0.len())?;
        check_finite("trajectory state", s0.iter())?;
        let (n_s, n_y, n) = (self.n_s(), self.n_y(), self.model.len());
        self.s = s0;
        self.cov.p1 = DMatrix::identity(n_s, n_s) * self.hp.sigma2_s;
        self.cov.v = vec![DMatrix::zeros(n_s, n); n_s];
        self.cov.z = vec![DMatrix::zeros(n_s, n_s); n_s];
        self.cov.k1_last = DMatrix::zeros(n_s, n_y);
        Ok(())
    }

    fn gradient_descent(&self) -> bool {
        self.options.recursion == Recursion::GradientDescent
    }

    fn choose_slot(&self, k: &[f64]) -> CenterSlot {
        let policy = &self.options.dictionary;
        let (best, coherence) = k.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc },
        );
        let full = policy.max_size.is_some_and(|m| self.model.len() >= m);
        if full && coherence > policy.coherence {
            CenterSlot::Merge(best)
        } else {
            CenterSlot::Append
        }
    }

    /// Time update for input `u`. Does not mutate the filter.
    pub fn predict(&self, u: &[f64]) -> Result<Prediction> {
        let n_s = self.n_s();
        check_dim("input", self.model.n_u(), u.len())?;
        check_finite("input", u)?;
        let s = self.s.as_slice();
        let k = self.model.kernel_vector_unchecked(s, u);
        let s_prior = self.model.combine(&k);
        let lambda = self.model.gradient_with_kernel(s, &k);
        let imk = correction(&self.cov.k1_last, n_s);
        let lambda_p = &lambda * &imk;
        let slot = self.choose_slot(&k);
        let gd = self.gradient_descent();
        let rho_old = if gd {
            DVector::from_element(n_s, 1.0)
        } else {
            self.cov.rho.clone()
        };

        let kv = DVector::from_column_slice(&k);
        let merge_col = match slot {
            CenterSlot::Merge(j) => Some(DVector::from_vec(self.model.gram_column(j))),
            CenterSlot::Append => None,
        };
        let mut y = DMatrix::zeros(n_s, n_s);
        let mut v_prior = Vec::with_capacity(n_s);
        let mut z_prior = Vec::with_capacity(n_s);
        for c in 0..n_s {
            let v = &self.cov.v[c];
            let w = v * &kv;
            let y_c = &imk * &w;
            y.set_column(c, &y_c);

            let mut v_new = &lambda_p * v;
            // column of the new feature, and the kernel of that feature against the dictionary
            let cross = match (slot, &merge_col) {
                (CenterSlot::Append, _) => {
                    let last = v_new.ncols();
                    v_new = v_new.insert_column(last, 0.0);
                    v_new[(c, last)] = rho_old[c];
                    &lambda * &y_c
                }
                (CenterSlot::Merge(j), Some(g)) => {
                    v_new[(c, j)] += rho_old[c];
                    &lambda_p * (v * g)
                }
                (CenterSlot::Merge(_), None) => unreachable!(),
            };
            let mut z = &lambda_p * &self.cov.z[c] * lambda_p.transpose();
            for i in 0..n_s {
                z[(i, c)] += rho_old[c] * cross[i];
                z[(c, i)] += rho_old[c] * cross[i];
            }
            z[(c, c)] += rho_old[c] * rho_old[c];
            v_prior.push(v_new);
            z_prior.push(z);
        }

        let ly = &lambda * &y;
        let mut p1 = &lambda * &self.cov.p1 * lambda.transpose() + &ly + ly.transpose();
        for c in 0..n_s {
            p1[(c, c)] += rho_old[c] + self.hp.sigma2_s;
        }
        check_finite("prior state", s_prior.iter())?;
        check_finite("prior state covariance", p1.iter())?;
        check_finite("state-transition gradient", lambda.iter())?;

        let rho_prior = if gd {
            rho_old
        } else {
            self.cov.rho.add_scalar(self.hp.sigma2_omega)
        };
        Ok(Prediction {
            s_prior,
            lambda,
            k_vec: k,
            p1_prior: p1,
            v_prior,
            rho_prior,
            slot,
            z_prior,
            query_s: s.to_vec(),
            query_u: u.to_vec(),
            step: self.step_count,
        })
    }

    fn check_prediction(&self, pred: &Prediction) -> Result<()> {
        if pred.step != self.step_count {
            return Err(FbfError::InvalidParameter {
                name: "prediction",
                reason: format!("computed at step {}, filter is at step {}", pred.step, self.step_count),
            });
        }
        Ok(())
    }

    fn commit_center(&mut self, pred: &Prediction) -> Result<()> {
        match pred.slot {
            CenterSlot::Append => {
                let zeros = vec![0.0; self.n_s()];
                self.model.add_center(&pred.query_s, &pred.query_u, &zeros)
            }
            CenterSlot::Merge(_) => {
                self.health.merges += 1;
                Ok(())
            }
        }
    }

    fn record_asymmetry(&mut self, p1: &mut DMatrix<f64>) {
        let asym = symmetrize(p1);
        self.health.max_asymmetry = self.health.max_asymmetry.max(asym);
    }

    /// Measurement update with desired output `d`.
    pub fn update(&mut self, d: &[f64], pred: Prediction) -> Result<StepResult> {
        self.check_prediction(&pred)?;
        let (n_s, n_y) = (self.n_s(), self.n_y());
        let off = n_s - n_y;
        check_dim("desired output", n_y, d.len())?;
        check_finite("desired output", d)?;
        let mut pred = pred;
        self.record_asymmetry(&mut pred.p1_prior);

        let y_pred = pred.y_prior(n_y);
        let e = DVector::from_column_slice(d) - &y_pred;
        let m = pred.p1_prior.view((off, off), (n_y, n_y)).into_owned();
        let mut s_mat = m;
        for i in 0..n_y {
            s_mat[(i, i)] += self.hp.sigma2_y;
        }
        let margin = SymmetricEigen::new(s_mat.clone()).eigenvalues.min() - self.hp.sigma2_y;
        self.health.min_innovation_margin = self.health.min_innovation_margin.min(margin);
        let n_mat = s_mat
            .cholesky()
            .ok_or(FbfError::Factorization("innovation covariance"))?
            .inverse();

        let l1 = pred.p1_prior.columns(off, n_y).into_owned();
        let k1 = if self.gradient_descent() {
            DMatrix::zeros(n_s, n_y)
        } else {
            &l1 * &n_mat * self.hp.eta_k1
        };
        let s_post = &pred.s_prior + &k1 * &e;
        let mut p1_post = &pred.p1_prior - &k1 * l1.transpose();
        self.record_asymmetry(&mut p1_post);
        check_finite("posterior state", s_post.iter())?;
        check_finite("posterior state covariance", p1_post.iter())?;

        self.commit_center(&pred)?;
        let ne = &n_mat * &e;
        let mut rho = pred.rho_prior.clone();
        let mut k2_norm2 = 0.0;
        for c in 0..n_s {
            let w = pred.v_prior[c].rows(off, n_y);
            let delta = w.transpose() * &ne * self.hp.eta_k2;
            for (j, dj) in delta.iter().enumerate() {
                *self.model.coeff_mut(j, c) += dj;
            }
            let z_out = pred.z_prior[c].view((off, off), (n_y, n_y));
            let varsigma = (&n_mat * z_out).trace();
            k2_norm2 += (&n_mat * z_out * &n_mat).trace();
            if !self.gradient_descent() {
                rho[c] -= varsigma;
                if rho[c] < RHO_MIN {
                    rho[c] = RHO_MIN;
                    self.health.rho_clamps += 1;
                }
            }
        }
        check_finite("weight variance", rho.iter())?;

        let gain_norm_k1 = k1.norm();
        self.cov.p1 = p1_post;
        self.cov.v = pred.v_prior;
        self.cov.z = pred.z_prior;
        self.cov.rho = rho;
        self.cov.k1_last = k1;
        self.s = s_post.clone();
        self.step_count += 1;
        self.health.steps += 1;
        self.health.updates += 1;
        Ok(StepResult {
            y_pred,
            e: Some(e),
            s_post,
            gain_norm_k1,
            gain_norm_k2: self.hp.eta_k2 * k2_norm2.max(0.0).sqrt(),
        })
    }

    /// Accepts the prediction without a measurement: the new center joins with zero coefficients.
    pub fn commit_deferred(&mut self, pred: Prediction) -> Result<StepResult> {
        self.check_prediction(&pred)?;
        let n_y = self.n_y();
        let mut pred = pred;
        self.record_asymmetry(&mut pred.p1_prior);
        self.commit_center(&pred)?;
        let y_pred = pred.y_prior(n_y);
        self.cov.p1 = pred.p1_prior;
        self.cov.v = pred.v_prior;
        self.cov.z = pred.z_prior;
        self.cov.rho = pred.rho_prior;
        self.cov.k1_last = DMatrix::zeros(self.n_s(), n_y);
        self.s = pred.s_prior.clone();
        self.step_count += 1;
        self.health.steps += 1;
        Ok(StepResult {
            y_pred,
            e: None,
            s_post: pred.s_prior,
            gain_norm_k1: 0.0,
            gain_norm_k2: 0.0,
        })
    }

    /// One predict/update cycle; `d = None` marks a deferred output.
    pub fn step(&mut self, u: &[f64], d: Option<&[f64]>) -> Result<StepResult> {
        let pred = self.predict(u)?;
        match d {
            Some(d) => self.update(d, pred),
            None => self.commit_deferred(pred),
        }
    }

    /// Innovation precision `N = (M + σ²_y I)⁻¹` for a prediction.
    pub fn innovation_precision(&self, pred: &Prediction) -> Result<DMatrix<f64>> {
        let (n_s, n_y) = (self.n_s(), self.n_y());
        let mut s_mat = pred.p1_prior.view((n_s - n_y, n_s - n_y), (n_y, n_y)).into_owned();
        for i in 0..n_y {
            s_mat[(i, i)] += self.hp.sigma2_y;
        }
        Ok(s_mat
            .cholesky()
            .ok_or(FbfError::Factorization("innovation covariance"))?
            .inverse())
    }

    /// `ς²ₖ` from the recursively maintained `Zₖ`, as the update would subtract it.
    pub fn varsigma(&self, pred: &Prediction) -> Result<Vec<f64>> {
        let n_mat = self.innovation_precision(pred)?;
        let off = self.n_s() - self.n_y();
        Ok(pred
            .z_prior
            .iter()
            .map(|z| (&n_mat * z.view((off, off), (self.n_y(), self.n_y()))).trace())
            .collect())
    }

    /// Direct O(N²) double sum `Σᵢⱼ bᵢⱼ K(cᵢ, cⱼ)`, `B = Vᵀ 𝕀ᵀ N 𝕀 V`, over the dictionary plus
    /// the pending center of `pred`.
    pub fn varsigma_direct(&self, pred: &Prediction) -> Result<Vec<f64>> {
        let n_mat = self.innovation_precision(pred)?;
        let n_y = self.n_y();
        let n_dict = self.model.len();
        let kernel = |i: usize, j: usize| -> f64 {
            match (i == n_dict, j == n_dict) {
                (true, true) => 1.0,
                (true, false) => pred.k_vec[j],
                (false, true) => pred.k_vec[i],
                (false, false) => self.model.center_kernel(i, j),
            }
        };
        Ok(pred
            .v_prior
            .iter()
            .map(|v| {
                let w = v.rows(v.nrows() - n_y, n_y);
                let b = w.transpose() * &n_mat * w;
                let mut total = 0.0;
                for i in 0..b.nrows() {
                    for j in 0..b.ncols() {
                        total += b[(i, j)] * kernel(i, j);
                    }
                }
                total
            })
            .collect())
    }
}
