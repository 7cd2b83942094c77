use super::config::{ExperimentConfig, Method, SystemKind};
use super::metrics::{mean, mean_std, ErrorNorm};
use super::noise::{add_noise, NoiseFamily};
use super::systems::{
    arm_forward_vec, arm_random_start, arm_trajectory, ikeda, ikeda_map, mackey_glass, robot_arm_jacobian,
    ARM_MEAS_VAR, ARM_R1, ARM_R2, ARM_WALK_STD,
};
use crate::baselines::{run_baseline, BaselineKind, GaussianEstimate, KnownSsm};
use crate::error::{FbfError, Result};
use crate::filter::{train_epochs_observed, FbfFilter, FbfOptions, FilterHealth, StateFilter};
use crate::kernel::KernelParams;
use crate::ssm::RkhsModel;
use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Samples discarded from the start of the Mackey-Glass integration.
pub const MG_WASHOUT: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    /// Squared error of every scored step.
    pub sq_errors: Vec<f64>,
    pub mse: f64,
    pub rmse: f64,
    /// Error level the estimator's own covariance implies; NaN when it has none.
    pub est_rmse: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub dict_size: usize,
    pub wall_ms: f64,
    /// Test MSE after each training batch (FBF on Mackey-Glass).
    pub curve: Vec<f64>,
    pub health: Option<FilterHealth>,
}

impl ResultRecord {
    fn new(method: Method, trial: usize, seed: u64, sq_errors: Vec<f64>, est_var: Option<f64>) -> Self {
        let mse = mean(&sq_errors);
        Self {
            method,
            trial,
            seed,
            mse,
            rmse: mse.sqrt(),
            est_rmse: est_var.map_or(f64::NAN, f64::sqrt),
            sq_errors,
            n_train: 0,
            n_test: 0,
            dict_size: 0,
            wall_ms: 0.0,
            curve: Vec::new(),
            health: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub method: Method,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub rmse_mean: f64,
    pub est_rmse_mean: f64,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub records: Vec<ResultRecord>,
    pub failures: Vec<TrialFailure>,
    pub summaries: Vec<MethodSummary>,
    /// Process variance chosen by the baseline grid search, per trial and method.
    pub chosen_q: Vec<(Method, usize, f64)>,
}

impl ExperimentOutcome {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn records_for(&self, method: Method) -> impl Iterator<Item = &ResultRecord> {
        self.records.iter().filter(move |r| r.method == method)
    }
}

/// Seed of trial `trial` under master seed `master`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64 + 1);
    rng.next_u64()
}

fn is_numerical(e: &FbfError) -> bool {
    matches!(e, FbfError::NonFinite(_) | FbfError::Factorization(_))
}

type TrialOutput = Vec<(Method, Result<ResultRecord>, Option<f64>)>;

/// Runs all trials, `jobs` at a time (0 = rayon default). Deterministic given `cfg.seed`.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| FbfError::InvalidParameter {
            name: "jobs",
            reason: e.to_string(),
        })?;
    let per_trial: Vec<TrialOutput> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect());

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut chosen_q = Vec::new();
    for (trial, outputs) in per_trial.into_iter().enumerate() {
        for (method, res, q) in outputs {
            if let Some(q) = q {
                chosen_q.push((method, trial, q));
            }
            match res {
                Ok(r) => records.push(r),
                Err(e) if is_numerical(&e) => failures.push(TrialFailure {
                    method,
                    trial,
                    message: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    records.sort_by_key(|r| (r.method, r.trial));
    let summaries = cfg.methods.iter().map(|&m| summarize(m, &records, &failures)).collect();
    Ok(ExperimentOutcome {
        records,
        failures,
        summaries,
        chosen_q,
    })
}

fn summarize(method: Method, records: &[ResultRecord], failures: &[TrialFailure]) -> MethodSummary {
    let rs: Vec<&ResultRecord> = records.iter().filter(|r| r.method == method).collect();
    let mses: Vec<f64> = rs.iter().map(|r| r.mse).collect();
    let (mse_mean, mse_std) = mean_std(&mses);
    let rmse: Vec<f64> = rs.iter().map(|r| r.rmse).collect();
    let est: Vec<f64> = rs.iter().map(|r| r.est_rmse).collect();
    MethodSummary {
        method,
        mse_mean,
        mse_std,
        rmse_mean: mean_std(&rmse).0,
        est_rmse_mean: mean_std(&est).0,
        completed: rs.len(),
        failed: failures.iter().filter(|f| f.method == method).count(),
    }
}

/// Data of trial `trial`, generated from its seed.
pub fn trial_data(cfg: &ExperimentConfig, trial: usize) -> Result<TrialData> {
    let seed = trial_seed(cfg.seed, trial);
    match cfg.system {
        SystemKind::MackeyGlass => mg_data(cfg, seed),
        SystemKind::Ikeda => ikeda_data(cfg, seed),
        SystemKind::RobotArm => arm_data(cfg, seed),
    }
}

/// The FBF that trial `trial` trains, before any test-time filtering.
pub fn train_filter(cfg: &ExperimentConfig, trial: usize) -> Result<FbfFilter> {
    cfg.validate()?;
    let seed = trial_seed(cfg.seed, trial);
    let data = trial_data(cfg, trial)?;
    match cfg.system {
        SystemKind::MackeyGlass => mg_train(cfg, &data, seed, |_| Ok(())),
        SystemKind::Ikeda => ikeda_train(cfg, &data, seed),
        SystemKind::RobotArm => arm_train(cfg, &data, seed),
    }
}

/// Runs every configured method on one trial's data.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> TrialOutput {
    let seed = trial_seed(cfg.seed, trial);
    let data = match trial_data(cfg, trial) {
        Ok(d) => d,
        Err(e) => return cfg.methods.iter().map(|&m| (m, Err(e.clone()), None)).collect(),
    };
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let (res, q) = match (cfg.system, method) {
                (_, Method::Raw) => (Ok(raw_record(cfg, &data, trial, seed)), None),
                (SystemKind::MackeyGlass, Method::Fbf) => (mg_fbf(cfg, &data, trial, seed), None),
                (SystemKind::Ikeda, Method::Fbf) => (ikeda_fbf(cfg, &data, trial, seed), None),
                (SystemKind::Ikeda, kf) => match ikeda_baseline(cfg, &data, trial, seed, kf) {
                    Ok((r, q)) => (Ok(r), Some(q)),
                    Err(e) => (Err(e), None),
                },
                (SystemKind::RobotArm, Method::Fbf) => (arm_fbf(cfg, &data, trial, seed), None),
                (SystemKind::RobotArm, kf) => (arm_baseline(&data, trial, seed, kf), None),
                (SystemKind::MackeyGlass, _) => (
                    Err(FbfError::InvalidParameter {
                        name: "methods",
                        reason: "mackey_glass has no known-model baseline".into(),
                    }),
                    None,
                ),
            };
            let res = res.map(|mut r| {
                r.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                r
            });
            (method, res, q)
        })
        .collect()
}

/// Joint angles and the noisy positions observed along them.
pub type Segment = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Clean and noisy sequences of one trial. `clean[i]` and `noisy[i]` are points of dimension
/// `dim`; the first `n_train` belong to training.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub clean: Vec<Vec<f64>>,
    pub noisy: Vec<Vec<f64>>,
    pub noise_scale2: f64,
    pub n_train: usize,
    /// Hidden joint angles (robot arm only), aligned with `clean`.
    pub hidden: Vec<Vec<f64>>,
    /// Separate training trajectories (robot arm only): `(angles, noisy positions)`.
    pub train_segments: Vec<Segment>,
}

fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x6e6f_6973_6500_0001
}

fn chunk(flat: Vec<f64>, dim: usize) -> Vec<Vec<f64>> {
    flat.chunks(dim).map(<[f64]>::to_vec).collect()
}

fn mg_data(cfg: &ExperimentConfig, seed: u64) -> Result<TrialData> {
    let n = cfg.n_train + cfg.n_test;
    let xs = mackey_glass(MG_WASHOUT + n, 0.2, 0.1, 30.0, 10.0, 6.0, 0.9)?;
    let clean = xs[MG_WASHOUT..].to_vec();
    let noisy = add_noise(&clean, &cfg.noise, cfg.snr_db, noise_seed(seed))?;
    Ok(TrialData {
        clean: chunk(clean, 1),
        noisy: chunk(noisy.noisy, 1),
        noise_scale2: noisy.noise_scale2,
        n_train: cfg.n_train,
        hidden: Vec::new(),
        train_segments: Vec::new(),
    })
}

fn ikeda_data(cfg: &ExperimentConfig, seed: u64) -> Result<TrialData> {
    let pts = ikeda(cfg.n_train + cfg.n_test, 0.84, 1.0, 0.0);
    let flat: Vec<f64> = pts.iter().flatten().copied().collect();
    let noisy = add_noise(&flat, &cfg.noise, cfg.snr_db, noise_seed(seed))?;
    Ok(TrialData {
        clean: chunk(flat, 2),
        noisy: chunk(noisy.noisy, 2),
        noise_scale2: noisy.noise_scale2,
        n_train: cfg.n_train,
        hidden: Vec::new(),
        train_segments: Vec::new(),
    })
}

fn arm_data(cfg: &ExperimentConfig, seed: u64) -> Result<TrialData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meas = rand_distr::Normal::new(0.0, ARM_MEAS_VAR.sqrt()).expect("valid normal");
    let observe = |a: &[f64; 2], rng: &mut ChaCha8Rng| -> Vec<f64> {
        let y = super::systems::robot_arm_forward(a[0], a[1], ARM_R1, ARM_R2);
        y.iter()
            .map(|v| v + rand_distr::Distribution::sample(&meas, rng))
            .collect()
    };
    let seg_len = cfg.fbf.batch_len + 1;
    let n_seg = cfg.n_train.div_ceil(seg_len);
    let mut segments = Vec::with_capacity(n_seg);
    for _ in 0..n_seg {
        let start = arm_random_start(&mut rng);
        let traj = arm_trajectory(seg_len, start, &mut rng);
        let ys = traj.iter().map(|a| observe(a, &mut rng)).collect();
        segments.push((traj.iter().map(|a| a.to_vec()).collect(), ys));
    }
    let start = arm_random_start(&mut rng);
    let traj = arm_trajectory(cfg.n_test + 1, start, &mut rng);
    let clean: Vec<Vec<f64>> = traj
        .iter()
        .map(|a| super::systems::robot_arm_forward(a[0], a[1], ARM_R1, ARM_R2).to_vec())
        .collect();
    let noisy = traj.iter().map(|a| observe(a, &mut rng)).collect();
    Ok(TrialData {
        clean,
        noisy,
        noise_scale2: ARM_MEAS_VAR,
        n_train: 0,
        hidden: traj.iter().map(|a| a.to_vec()).collect(),
        train_segments: segments,
    })
}

fn raw_record(cfg: &ExperimentConfig, data: &TrialData, trial: usize, seed: u64) -> ResultRecord {
    let (truth, est): (Vec<&Vec<f64>>, Vec<&Vec<f64>>) = match cfg.system {
        SystemKind::RobotArm => (data.clean[1..].iter().collect(), data.noisy[1..].iter().collect()),
        _ => (
            data.clean[data.n_train..].iter().collect(),
            data.noisy[data.n_train..].iter().collect(),
        ),
    };
    let sq = est
        .iter()
        .zip(&truth)
        .map(|(e, t)| cfg.error_norm.squared_error(e, t))
        .collect();
    let dim = truth[0].len() as f64;
    let var = match cfg.error_norm {
        ErrorNorm::Mean => data.noise_scale2,
        ErrorNorm::Sum => data.noise_scale2 * dim,
    };
    let mut r = ResultRecord::new(Method::Raw, trial, seed, sq, Some(var));
    r.n_train = data.n_train;
    r.n_test = truth.len();
    r
}

fn fbf_options(cfg: &ExperimentConfig) -> FbfOptions {
    FbfOptions {
        dictionary: cfg.fbf.dictionary,
        ..FbfOptions::default()
    }
}

fn new_filter(cfg: &ExperimentConfig, n_s: usize, n_u: usize, n_y: usize, seed: u64) -> Result<FbfFilter> {
    let kp = KernelParams::new(cfg.fbf.a_s, cfg.fbf.a_u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = FbfFilter::random(kp, n_s, n_u, n_y, cfg.fbf.hp, &mut rng)?;
    let s0 = f.state().clone();
    FbfFilter::with_options(f.into_model(), cfg.fbf.hp, s0, fbf_options(cfg))
}

fn state_with_output(n_s: usize, y: &[f64]) -> DVector<f64> {
    let mut s = DVector::zeros(n_s);
    s.rows_mut(n_s - y.len(), y.len()).copy_from_slice(y);
    s
}

/// Mackey-Glass input at step `i`: the previous `n_u` noisy samples, newest first.
fn mg_window(noisy: &[Vec<f64>], i: usize, n_u: usize) -> Vec<f64> {
    (1..=n_u).map(|l| noisy[i - l][0]).collect()
}

/// Filters `[from, to)` with a fixed model; returns per-step squared errors of the posterior
/// output and the mean posterior output variance.
fn infer_segment<F>(
    cfg: &ExperimentConfig,
    model: &RkhsModel,
    data: &TrialData,
    from: usize,
    to: usize,
    input: F,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(usize) -> Vec<f64>,
{
    let n_s = model.n_s();
    let n_y = model.n_y();
    let s0 = state_with_output(n_s, &data.noisy[from - 1]);
    let p0 = DMatrix::identity(n_s, n_s) * cfg.fbf.hp.sigma2_s;
    let mut sf = StateFilter::new(model, cfg.fbf.hp, s0, p0)?;
    let mut sq = Vec::with_capacity(to - from);
    let mut var = 0.0;
    for i in from..to {
        let st = sf.step(&input(i), Some(&data.noisy[i]))?;
        let y = st.s_post.rows(n_s - n_y, n_y);
        sq.push(cfg.error_norm.squared_error(y.as_slice(), &data.clean[i]));
        let v: f64 = (n_s - n_y..n_s).map(|j| st.p1_post[(j, j)]).sum();
        var += match cfg.error_norm {
            ErrorNorm::Mean => v / n_y as f64,
            ErrorNorm::Sum => v,
        };
    }
    Ok((sq, var / (to - from) as f64))
}

fn mg_train<F>(cfg: &ExperimentConfig, data: &TrialData, seed: u64, mut observe: F) -> Result<FbfFilter>
where
    F: FnMut(&FbfFilter) -> Result<()>,
{
    let n_u = cfg.fbf.n_u;
    let mut f = new_filter(cfg, cfg.fbf.n_x + 1, n_u, 1, seed)?;
    let train = n_u..data.n_train;
    let inputs: Vec<Vec<f64>> = train.clone().map(|i| mg_window(&data.noisy, i, n_u)).collect();
    let desired: Vec<Vec<f64>> = train.map(|i| data.noisy[i].clone()).collect();
    train_epochs_observed(
        &mut f,
        &inputs,
        &desired,
        cfg.fbf.epochs,
        cfg.fbf.batch_len,
        seed ^ 0xba7c,
        |_, f| observe(f),
    )?;
    Ok(f)
}

fn mg_fbf(cfg: &ExperimentConfig, data: &TrialData, trial: usize, seed: u64) -> Result<ResultRecord> {
    let n_u = cfg.fbf.n_u;
    let total = data.clean.len();
    let mut curve = Vec::with_capacity(cfg.fbf.epochs);
    let mut last = None;
    let eval = |f: &FbfFilter| {
        infer_segment(cfg, f.model(), data, data.n_train, total, |i| {
            mg_window(&data.noisy, i, n_u)
        })
    };
    let f = mg_train(cfg, data, seed, |f| {
        let r = eval(f)?;
        curve.push(mean(&r.0));
        last = Some(r);
        Ok(())
    })?;
    let (sq, var) = match last {
        Some(r) => r,
        None => eval(&f)?,
    };
    let mut r = ResultRecord::new(Method::Fbf, trial, seed, sq, Some(var));
    r.n_train = data.n_train;
    r.n_test = total - data.n_train;
    r.dict_size = f.model().len();
    r.curve = curve;
    r.health = Some(*f.health());
    Ok(r)
}

fn ikeda_train(cfg: &ExperimentConfig, data: &TrialData, seed: u64) -> Result<FbfFilter> {
    let mut f = new_filter(cfg, cfg.fbf.n_x + 2, 2, 2, seed)?;
    let inputs: Vec<Vec<f64>> = (1..data.n_train).map(|i| data.noisy[i - 1].clone()).collect();
    let desired: Vec<Vec<f64>> = (1..data.n_train).map(|i| data.noisy[i].clone()).collect();
    let batch = cfg.fbf.batch_len.min(inputs.len());
    train_epochs_observed(
        &mut f,
        &inputs,
        &desired,
        cfg.fbf.epochs,
        batch,
        seed ^ 0xba7c,
        |_, _| Ok(()),
    )?;
    Ok(f)
}

fn ikeda_fbf(cfg: &ExperimentConfig, data: &TrialData, trial: usize, seed: u64) -> Result<ResultRecord> {
    let f = ikeda_train(cfg, data, seed)?;
    let total = data.clean.len();
    let (sq, var) = infer_segment(cfg, f.model(), data, data.n_train, total, |i| data.noisy[i - 1].clone())?;
    let mut r = ResultRecord::new(Method::Fbf, trial, seed, sq, Some(var));
    r.n_train = data.n_train;
    r.n_test = total - data.n_train;
    r.dict_size = f.model().len();
    r.health = Some(*f.health());
    Ok(r)
}

fn ikeda_ssm(noise_var: f64, q: f64) -> Result<KnownSsm> {
    KnownSsm::new(
        2,
        2,
        Box::new(|x, _| {
            let p = ikeda_map([x[0], x[1]], 0.84);
            DVector::from_vec(p.to_vec())
        }),
        Box::new(|x, _| x.clone()),
        DMatrix::identity(2, 2) * q,
        DMatrix::identity(2, 2) * noise_var,
    )
}

fn baseline_kind(m: Method) -> BaselineKind {
    match m {
        Method::Ekf => BaselineKind::Ekf,
        _ => BaselineKind::Ckf,
    }
}

/// Runs the known-model filter over the whole sequence from `x0 = z0`, `P0 = R`; Q is picked
/// from the grid by MSE on the training part.
fn ikeda_baseline(
    cfg: &ExperimentConfig,
    data: &TrialData,
    trial: usize,
    seed: u64,
    method: Method,
) -> Result<(ResultRecord, f64)> {
    let r_var = data.noise_scale2.max(1e-12);
    let n = data.clean.len();
    let inputs = vec![DVector::zeros(0); n - 1];
    let meas: Vec<Option<DVector<f64>>> = data.noisy[1..]
        .iter()
        .map(|z| Some(DVector::from_column_slice(z)))
        .collect();
    let init = GaussianEstimate {
        x: DVector::from_column_slice(&data.noisy[0]),
        p: DMatrix::identity(2, 2) * r_var,
    };
    struct Run {
        q: f64,
        sq: Vec<f64>,
        var: Vec<f64>,
        train_mse: f64,
    }
    let run = |q: f64| -> Result<Run> {
        let ssm = ikeda_ssm(r_var, q)?;
        let steps = run_baseline(baseline_kind(method), &ssm, init.clone(), &inputs, &meas)?;
        let sq: Vec<f64> = steps
            .iter()
            .enumerate()
            .map(|(i, st)| {
                cfg.error_norm
                    .squared_error(st.estimate.x.as_slice(), &data.clean[i + 1])
            })
            .collect();
        let var = steps
            .iter()
            .map(|st| match cfg.error_norm {
                ErrorNorm::Mean => st.estimate.p.trace() / 2.0,
                ErrorNorm::Sum => st.estimate.p.trace(),
            })
            .collect();
        let train_mse = mean(&sq[..data.n_train - 1]);
        Ok(Run { q, sq, var, train_mse })
    };
    let mut best: Option<Run> = None;
    let mut last_err = None;
    for &q in &cfg.q_grid {
        match run(q) {
            Ok(r) if best.as_ref().is_none_or(|b| r.train_mse < b.train_mse) => best = Some(r),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let Some(best) = best else {
        return Err(last_err.unwrap_or(FbfError::Empty("q_grid")));
    };
    let q = best.q;
    let test = best.sq[data.n_train - 1..].to_vec();
    let var = mean(&best.var[data.n_train - 1..]);
    let mut r = ResultRecord::new(method, trial, seed, test, Some(var));
    r.n_train = data.n_train;
    r.n_test = n - data.n_train;
    Ok((r, q))
}

fn angle_errors(est: &[Vec<f64>], truth: &[Vec<f64>]) -> Vec<f64> {
    est.iter()
        .zip(truth)
        .map(|(e, t)| ErrorNorm::Mean.squared_error(e, t))
        .collect()
}

// state = [hidden (n_x); α₁, α₂; y₁, y₂], trained with angles and positions observed;
// the input is the current noisy position
fn arm_train(cfg: &ExperimentConfig, data: &TrialData, seed: u64) -> Result<FbfFilter> {
    let n_s = cfg.fbf.n_x + 4;
    let mut f = new_filter(cfg, n_s, 2, 4, seed)?;
    for _ in 0..cfg.fbf.epochs {
        for (angles, ys) in &data.train_segments {
            let target = |i: usize| -> Vec<f64> { angles[i].iter().chain(&ys[i]).copied().collect() };
            f.reset_trajectory(state_with_output(n_s, &target(0)))?;
            for (i, y) in ys.iter().enumerate().skip(1) {
                f.step(y, Some(&target(i)))?;
            }
        }
    }
    Ok(f)
}

fn arm_fbf(cfg: &ExperimentConfig, data: &TrialData, trial: usize, seed: u64) -> Result<ResultRecord> {
    let f = arm_train(cfg, data, seed)?;
    let model = f.model();
    let n_s = model.n_s();
    let hp = cfg.fbf.hp;
    let mut s0 = DVector::zeros(n_s);
    let a0 = &data.hidden[0];
    let y0 = &data.noisy[0];
    for (j, v) in a0.iter().chain(y0).enumerate() {
        s0[n_s - 4 + j] = *v;
    }
    let p0 = DMatrix::identity(n_s, n_s) * hp.sigma2_s;
    let mut sf = StateFilter::new(model, hp, s0, p0)?.with_observed(2)?;
    let mut est = Vec::with_capacity(cfg.n_test);
    let mut var = 0.0;
    for i in 1..data.noisy.len() {
        let st = sf.step(&data.noisy[i], Some(&data.noisy[i]))?;
        est.push(st.s_post.rows(n_s - 4, 2).iter().copied().collect::<Vec<f64>>());
        var += 0.5 * (st.p1_post[(n_s - 4, n_s - 4)] + st.p1_post[(n_s - 3, n_s - 3)]);
    }
    let steps = est.len();
    let mut r = ResultRecord::new(
        Method::Fbf,
        trial,
        seed,
        angle_errors(&est, &data.hidden[1..]),
        Some(var / steps as f64),
    );
    r.n_train = data.train_segments.iter().map(|s| s.0.len() - 1).sum();
    r.n_test = steps;
    r.dict_size = f.model().len();
    r.health = Some(*f.health());
    Ok(r)
}

pub fn arm_ssm() -> Result<KnownSsm> {
    Ok(KnownSsm::new(
        2,
        2,
        Box::new(|x, _| x.clone()),
        Box::new(|x, _| arm_forward_vec(x)),
        DMatrix::from_diagonal(&DVector::from_vec(ARM_WALK_STD.iter().map(|s| s * s).collect())),
        DMatrix::identity(2, 2) * ARM_MEAS_VAR,
    )?
    .with_jacobians(
        Box::new(|_, _| DMatrix::identity(2, 2)),
        Box::new(|x, _| robot_arm_jacobian(x[0], x[1], ARM_R1, ARM_R2)),
    ))
}

fn arm_baseline(data: &TrialData, trial: usize, seed: u64, method: Method) -> Result<ResultRecord> {
    let ssm = arm_ssm()?;
    let init = GaussianEstimate {
        x: DVector::from_column_slice(&data.hidden[0]),
        p: ssm.q().clone(),
    };
    let n = data.noisy.len();
    let inputs = vec![DVector::zeros(0); n - 1];
    let meas: Vec<Option<DVector<f64>>> = data.noisy[1..]
        .iter()
        .map(|z| Some(DVector::from_column_slice(z)))
        .collect();
    let steps = run_baseline(baseline_kind(method), &ssm, init, &inputs, &meas)?;
    let est: Vec<Vec<f64>> = steps.iter().map(|s| s.estimate.x.as_slice().to_vec()).collect();
    let var = steps.iter().map(|s| s.estimate.p.trace() / 2.0).sum::<f64>() / steps.len() as f64;
    let mut r = ResultRecord::new(method, trial, seed, angle_errors(&est, &data.hidden[1..]), Some(var));
    r.n_test = steps.len();
    Ok(r)
}

pub fn noise_label(cfg: &ExperimentConfig) -> String {
    match cfg.noise.family {
        NoiseFamily::AlphaStable => format!("alpha_stable({})", cfg.noise.alpha),
        f => f.name().to_string(),
    }
}
