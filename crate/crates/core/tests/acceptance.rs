//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Exits non-zero on any failure only when `FBF_ACCEPTANCE_STRICT` is set, so the report can
//! run inside `cargo test` while still showing every failing line.

mod common;

use common::DenseOracle;
use fbf_core::experiments::{
    run_experiment, ExperimentConfig, ExperimentOutcome, Method, NoiseFamily, NoiseSpec, SystemKind,
};
use fbf_core::filter::{FbfFilter, FbfHyperParams, FilterHealth};
use fbf_core::kernel::itl::{correntropy, information_potential};
use fbf_core::kernel::KernelParams;
use fbf_core::ssm::RkhsModel;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn record(&mut self, id: &str, ok: bool, elapsed: Duration, limit_s: f64, detail: String) {
        let secs = elapsed.as_secs_f64();
        let ok = ok && secs < limit_s;
        let line = format!(
            "{id} {} {detail}; {secs:.1} s (limit {limit_s} s)",
            if ok { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((line, ok));
    }
}

/// Acceptance runs use their own master seed, distinct from the one used while tuning.
const SEED: u64 = 1;

fn a1(rep: &mut Report) {
    let t = Instant::now();
    let mut worst = [0.0f64; 6];
    let mut count = 0;
    for seed in 0..24u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_s = 1 + (seed % 2) as usize;
        let n_u = 1 + (seed / 2 % 2) as usize;
        let hp = if seed % 3 == 0 {
            FbfHyperParams {
                sigma2_s: 0.5,
                sigma2_omega: 0.3,
                sigma2_y: 0.2,
                eta_k1: 1.0,
                eta_k2: 1.0,
            }
        } else {
            FbfHyperParams {
                sigma2_s: rng.random_range(0.2..2.0),
                sigma2_omega: rng.random_range(0.2..2.0),
                sigma2_y: rng.random_range(0.1..1.0),
                eta_k1: rng.random_range(0.2..1.0),
                eta_k2: rng.random_range(0.05..1.0),
            }
        };
        let kp = KernelParams::new(rng.random_range(0.3..1.5), rng.random_range(0.3..1.5)).unwrap();
        let mut filter = FbfFilter::random(kp, n_s, n_u, 1, hp, &mut rng).unwrap();
        let mut oracle = DenseOracle::new(filter.model(), hp, filter.state().clone());
        for i in 0..10 {
            let u: Vec<f64> = (0..n_u).map(|_| rng.random_range(-1.5..1.5)).collect();
            let d = [rng.random_range(-1.0..1.0)];
            let d = (seed % 4 != 1 || i % 3 != 2).then_some(&d[..]);
            filter.step(&u, d).unwrap();
            oracle.step(&u, d);
            for (w, e) in worst.iter_mut().zip(oracle.compare(&filter)) {
                *w = w.max(e);
            }
        }
        count += 1;
    }
    // W is an extra check beyond the listed blocks
    let listed = worst[..5].iter().cloned().fold(0.0, f64::max);
    rep.record(
        "A1",
        count >= 20 && listed < 1e-8,
        t.elapsed(),
        10.0,
        format!(
            "oracle equivalence: {count} instances, worst rel err P1 {:.1e} P2 {:.1e} rho {:.1e} K1 {:.1e} s {:.1e} (limit 1e-8)",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    );
}

fn a2(rep: &mut Report) {
    let t = Instant::now();
    let mut passed = 0;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n_s = rng.random_range(1..5);
        let n_u = rng.random_range(1..4);
        let n_y = rng.random_range(1..=n_s);
        let kp = KernelParams::new(rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)).unwrap();
        let mut m = RkhsModel::random(kp, n_s, n_u, n_y, &mut rng).unwrap();
        for _ in 0..rng.random_range(0..12) {
            let s: Vec<f64> = (0..n_s).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..n_u).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a: Vec<f64> = (0..n_s).map(|_| rng.random_range(-1.0..1.0)).collect();
            m.add_center(&s, &u, &a).unwrap();
        }
        let s: Vec<f64> = (0..n_s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..n_u).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = m.state_transition_gradient(&s, &u).unwrap();
        let mut fd = DMatrix::zeros(n_s, n_s);
        for j in 0..n_s {
            let h = 1e-6 * (1.0 + s[j].abs());
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp[j] += h;
            sm[j] -= h;
            let diff = (m.propagate_state(&sp, &u).unwrap() - m.propagate_state(&sm, &u).unwrap()) / (2.0 * h);
            fd.set_column(j, &diff);
        }
        let rel = (&g - &fd).norm() / g.norm().max(1e-12);
        worst = worst.max(rel);
        if rel <= 1e-5 {
            passed += 1;
        }
    }
    rep.record(
        "A2",
        passed == 100,
        t.elapsed(),
        5.0,
        format!("gradient checks: {passed}/100 within rel 1e-5, worst {worst:.1e}"),
    );
}

fn health_of(outcome: &ExperimentOutcome) -> FilterHealth {
    let mut h = FilterHealth::default();
    for r in outcome.records_for(Method::Fbf) {
        if let Some(x) = &r.health {
            h.merge(x);
        }
    }
    h
}

fn ikeda(family: NoiseFamily) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(SystemKind::Ikeda);
    cfg.seed = SEED;
    cfg.noise = NoiseSpec::new(family, 1.6).unwrap();
    cfg
}

fn mse(o: &ExperimentOutcome, m: Method) -> f64 {
    o.summary(m).map_or(f64::NAN, |s| s.mse_mean)
}

fn main() {
    let mut rep = Report { lines: Vec::new() };
    a1(&mut rep);
    a2(&mut rep);

    // A3
    let t = Instant::now();
    let mut cfg = ExperimentConfig::defaults(SystemKind::MackeyGlass);
    cfg.seed = SEED;
    let mg = run_experiment(&cfg, 0).unwrap();
    let fbf: Vec<_> = mg.records_for(Method::Fbf).collect();
    let raw: Vec<_> = mg.records_for(Method::Raw).collect();
    let better = fbf
        .iter()
        .filter(|f| raw.iter().any(|r| r.trial == f.trial && f.mse < r.mse))
        .count();
    let batches = cfg.fbf.epochs;
    let curve: Vec<f64> = (0..batches)
        .map(|b| fbf.iter().map(|r| r.curve[b]).sum::<f64>() / fbf.len() as f64)
        .collect();
    let decreasing = curve.windows(2).all(|w| w[1] < w[0]);
    rep.record(
        "A3",
        fbf.len() == 50 && better >= 45 && decreasing,
        t.elapsed(),
        600.0,
        format!(
            "Mackey-Glass: FBF beats raw in {better}/{} runs (need 45/50), mean MSE FBF {:.4} raw {:.4}, curve {} -> {} ({})",
            fbf.len(),
            mse(&mg, Method::Fbf),
            mse(&mg, Method::Raw),
            format_args!("{:.4}", curve[0]),
            format_args!("{:.4}", curve[batches - 1]),
            if decreasing { "decreasing every batch" } else { "not monotone" }
        ),
    );

    // A4
    let t = Instant::now();
    let g = run_experiment(&ikeda(NoiseFamily::Gaussian), 0).unwrap();
    let (f, c) = (mse(&g, Method::Fbf), mse(&g, Method::Ckf));
    rep.record(
        "A4",
        f <= 0.25 && (0.15..=0.35).contains(&c) && f < c,
        t.elapsed(),
        900.0,
        format!(
            "Ikeda Gaussian: FBF {f:.4} ± {:.4} (<= 0.25), CKF {c:.4} ± {:.4} (in [0.15, 0.35]), EKF {:.4}",
            g.summary(Method::Fbf).unwrap().mse_std,
            g.summary(Method::Ckf).unwrap().mse_std,
            mse(&g, Method::Ekf)
        ),
    );

    // A5
    let t = Instant::now();
    let mut rows = Vec::new();
    let mut ok = true;
    let mut non_gaussian = Vec::new();
    for fam in [NoiseFamily::Laplacian, NoiseFamily::Uniform, NoiseFamily::AlphaStable] {
        let o = run_experiment(&ikeda(fam), 0).unwrap();
        let (f, c) = (mse(&o, Method::Fbf), mse(&o, Method::Ckf));
        ok &= f < c;
        rows.push(format!("{} FBF {f:.4} CKF {c:.4}", fam.name()));
        non_gaussian.push(o);
    }
    rep.record(
        "A5",
        ok,
        t.elapsed(),
        1800.0,
        format!("Ikeda non-Gaussian, FBF < CKF: {}", rows.join(", ")),
    );

    // A6
    let t = Instant::now();
    let mut cfg = ExperimentConfig::defaults(SystemKind::RobotArm);
    cfg.seed = SEED;
    let arm = run_experiment(&cfg, 0).unwrap();
    let fs = arm.summary(Method::Fbf).unwrap();
    let cs = arm.summary(Method::Ckf).unwrap();
    let consistent = |true_rmse: f64, est: f64| est <= 3.0 * true_rmse && true_rmse <= 3.0 * est;
    rep.record(
        "A6",
        fs.completed == 200
            && fs.rmse_mean <= 1.1 * cs.rmse_mean
            && consistent(fs.rmse_mean, fs.est_rmse_mean)
            && consistent(cs.rmse_mean, cs.est_rmse_mean),
        t.elapsed(),
        600.0,
        format!(
            "robot arm: angle RMSE FBF {:.4} (est {:.4}) vs CKF {:.4} (est {:.4}); need FBF <= {:.4} and est within 3x",
            fs.rmse_mean,
            fs.est_rmse_mean,
            cs.rmse_mean,
            cs.est_rmse_mean,
            1.1 * cs.rmse_mean
        ),
    );

    // A7
    let t = Instant::now();
    let mut all = health_of(&mg);
    all.merge(&health_of(&g));
    for o in &non_gaussian {
        all.merge(&health_of(o));
    }
    all.merge(&health_of(&arm));
    let rate = |h: &FilterHealth| h.rho_clamps as f64 / h.steps.max(1) as f64;
    let (mg_rate, ik_rate) = (rate(&health_of(&mg)), rate(&health_of(&g)));
    rep.record(
        "A7",
        all.max_asymmetry < 1e-6 && all.min_innovation_margin >= -1e-12 && mg_rate < 0.01 && ik_rate < 0.01,
        t.elapsed(),
        1.0,
        format!(
            "covariance health over {} filter steps: max asymmetry {:.1e} (< 1e-6), min eig(M + s2y I) - s2y {:.3e} (>= -1e-12), rho clamps {} total, per step {:.2}% MG / {:.2}% Ikeda (< 1%)",
            all.steps,
            all.max_asymmetry,
            all.min_innovation_margin,
            all.rho_clamps,
            100.0 * mg_rate,
            100.0 * ik_rate
        ),
    );

    a8(&mut rep);
    a9(&mut rep);

    let failed = rep.lines.iter().filter(|l| !l.1).count();
    println!(
        "acceptance: {}/{} criteria passed",
        rep.lines.len() - failed,
        rep.lines.len()
    );
    if failed > 0 && std::env::var_os("FBF_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

/// Filter with `n` centers, grown by stepping on random data.
fn grown_filter(n: usize, rng: &mut ChaCha8Rng) -> FbfFilter {
    let kp = KernelParams::new(0.8, 0.8).unwrap();
    let mut f = FbfFilter::random(kp, 4, 2, 2, FbfHyperParams::default(), rng).unwrap();
    while f.model().len() < n {
        let u = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let d = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        f.step(&u, Some(&d)).unwrap();
    }
    f
}

fn a8(rep: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sizes = [100usize, 200, 400];
    let reps = 5;
    let steps = 400;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut mem = Vec::new();
    for &n in &sizes {
        let base = grown_filter(n, &mut rng);
        mem.push(base.memory_bytes() as f64);
        let inputs: Vec<([f64; 2], [f64; 2])> = (0..steps)
            .map(|_| {
                (
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                )
            })
            .collect();
        for _ in 0..reps {
            let mut clones: Vec<FbfFilter> = (0..steps).map(|_| base.clone()).collect();
            let start = Instant::now();
            for (f, (u, d)) in clones.iter_mut().zip(&inputs) {
                f.step(u, Some(d)).unwrap();
            }
            xs.push(n as f64);
            ys.push(start.elapsed().as_secs_f64() / steps as f64);
        }
    }
    // least-squares quadratic fit
    let a = DMatrix::from_fn(xs.len(), 3, |i, j| xs[i].powi(j as i32));
    let y = DVector::from_vec(ys.clone());
    let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * &y)).unwrap();
    let fit = &a * &coef;
    let mean_y = y.mean();
    let ss_res: f64 = (&y - &fit).iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let per_center: Vec<f64> = sizes.iter().zip(&mem).map(|(n, m)| m / *n as f64).collect();
    let spread =
        per_center.iter().cloned().fold(0.0, f64::max) / per_center.iter().cloned().fold(f64::INFINITY, f64::min);
    let per_n = |n: usize| {
        let v: Vec<f64> = xs.iter().zip(&ys).filter(|p| *p.0 == n as f64).map(|p| *p.1).collect();
        1e6 * v.iter().sum::<f64>() / v.len() as f64
    };
    rep.record(
        "A8",
        r2 >= 0.95 && spread <= 1.2,
        t.elapsed(),
        120.0,
        format!(
            "complexity: step {:.1}/{:.1}/{:.1} us at N=100/200/400, quadratic fit R^2 {r2:.4} (>= 0.95); bytes per center {:.0}/{:.0}/{:.0}, spread {:.3} (<= 1.2)",
            per_n(100),
            per_n(200),
            per_n(400),
            per_center[0],
            per_center[1],
            per_center[2],
            spread
        ),
    );
}

fn a9(rep: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..40);
        let dim = rng.random_range(1..4);
        let sigma = rng.random_range(0.2..3.0);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let w2 = 2.0 * sigma * sigma;
        let norm = (2.0 * std::f64::consts::PI * w2).powf(-(dim as f64) / 2.0);
        let mut brute = 0.0;
        for a in &xs {
            for b in &xs {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                brute += norm * (-d2 / (2.0 * w2)).exp();
            }
        }
        brute /= (n * n) as f64;
        let ip = information_potential(&xs, sigma).unwrap();
        worst = worst.max((ip - brute).abs() / brute);

        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let c_norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
        let brute_c: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| c_norm * (-(a - b) * (a - b) / (2.0 * sigma * sigma)).exp())
            .sum::<f64>()
            / n as f64;
        let c = correntropy(&x, &y, sigma).unwrap();
        worst = worst.max((c - brute_c).abs() / brute_c);
    }
    let sigma = 0.7;
    let same = vec![vec![0.3, -1.1]; 12];
    let ip_closed = 1.0 / (4.0 * std::f64::consts::PI * sigma * sigma);
    let c_closed = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    let ip_same = information_potential(&same, sigma).unwrap();
    let c_same = correntropy(&[0.4; 7], &[0.4; 7], sigma).unwrap();
    let closed_err = ((ip_same - ip_closed) / ip_closed)
        .abs()
        .max(((c_same - c_closed) / c_closed).abs());
    // floating-point summation bound for the 12² pair terms
    let closed_tol = (same.len() * same.len()) as f64 * f64::EPSILON;
    rep.record(
        "A9",
        worst <= 1e-12 && closed_err <= closed_tol,
        t.elapsed(),
        5.0,
        format!("ITL estimators: worst rel err vs brute force {worst:.1e} (<= 1e-12), identical-sample closed forms {closed_err:.1e} (<= {closed_tol:.1e}, summation rounding)"),
    );
}
