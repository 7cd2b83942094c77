use crate::output::{create, provenance, real, sha256_hex, write_text, Csv};
use crate::{io_err, CliError, Common};
use fbf_core::experiments::{
    noise_label, run_experiment, train_filter, ExperimentConfig, ExperimentOutcome, Method, NoiseFamily, NoiseSpec,
    ResultRecord, SystemKind,
};
use fbf_core::filter::write_checkpoint;
use fbf_core::FbfError;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const RESULTS_HEADER: [&str; 13] = [
    "experiment",
    "system",
    "noise_family",
    "snr_db",
    "trial",
    "seed",
    "mse",
    "rmse",
    "est_rmse",
    "n_train",
    "n_test",
    "dict_size",
    "wall_ms",
];

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn cmd_run(config: &Path, out: &Path, common: &Common, timing: bool) -> Result<(), CliError> {
    let cfg = load_config(config, common.seed)?;
    let resolved = cfg.to_text();
    let head = provenance(Some(cfg.seed), &sha256_hex(resolved.as_bytes()));
    let outcome = run_experiment(&cfg, common.jobs)?;
    make_dir(out)?;

    write_text(&out.join("config.resolved"), &head, &resolved)?;
    write_results(&out.join("results.csv"), &head, &cfg, &outcome, timing)?;
    write_summary(&out.join("summary.csv"), &head, &cfg, &outcome)?;
    if cfg.methods.contains(&Method::Fbf) {
        write_model(&out.join("model.ckpt"), &head, &cfg)?;
    }
    if !common.quiet {
        for s in &outcome.summaries {
            println!(
                "{:<4} mse {:.4} ± {:.4}  rmse {:.4}  est_rmse {:.4}  ({} ok, {} failed)",
                s.method, s.mse_mean, s.mse_std, s.rmse_mean, s.est_rmse_mean, s.completed, s.failed
            );
        }
    }
    if outcome.failures.is_empty() {
        return Ok(());
    }
    let path = out.join("failures.csv");
    let mut csv = Csv::new(create(&path, &head)?, &path);
    csv.row(["method", "trial", "message"])?;
    let mut manifest = String::new();
    for f in &outcome.failures {
        csv.row([f.method.name(), &f.trial.to_string(), &f.message])?;
        manifest.push_str(&format!("\n  trial {} ({}): {}", f.trial, f.method, f.message));
    }
    csv.finish()?;
    Err(CliError::Numerical(format!(
        "{} trial(s) diverged:{manifest}",
        outcome.failures.len()
    )))
}

fn write_model(path: &Path, head: &str, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let f = match train_filter(cfg, 0) {
        Ok(f) => f,
        // trial 0 is already listed among the failures
        Err(FbfError::NonFinite(_) | FbfError::Factorization(_)) => return Ok(()),
        Err(e) => return Err(e.into()),
    };
    let mut w = create(path, head)?;
    write_checkpoint(&f, &mut w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

fn record_row(cfg: &ExperimentConfig, r: &ResultRecord, timing: bool) -> Vec<String> {
    vec![
        format!("{}/{}", cfg.name, r.method),
        cfg.system.name().into(),
        noise_label(cfg),
        real(cfg.snr_db),
        r.trial.to_string(),
        r.seed.to_string(),
        real(r.mse),
        real(r.rmse),
        real(r.est_rmse),
        r.n_train.to_string(),
        r.n_test.to_string(),
        r.dict_size.to_string(),
        if timing { real(r.wall_ms) } else { String::new() },
    ]
}

fn mean_std_of(rs: &[&ResultRecord], f: impl Fn(&ResultRecord) -> f64) -> (f64, f64) {
    fbf_core::experiments::mean_std(&rs.iter().map(|r| f(r)).collect::<Vec<f64>>())
}

fn write_results(
    path: &Path,
    head: &str,
    cfg: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    timing: bool,
) -> Result<(), CliError> {
    let mut csv = Csv::new(create(path, head)?, path);
    csv.row(RESULTS_HEADER)?;
    for &m in &cfg.methods {
        let rs: Vec<&ResultRecord> = outcome.records_for(m).collect();
        for r in &rs {
            csv.row(record_row(cfg, r, timing))?;
        }
        if rs.is_empty() {
            continue;
        }
        let stats = [
            mean_std_of(&rs, |r| r.mse),
            mean_std_of(&rs, |r| r.rmse),
            mean_std_of(&rs, |r| r.est_rmse),
            mean_std_of(&rs, |r| r.n_train as f64),
            mean_std_of(&rs, |r| r.n_test as f64),
            mean_std_of(&rs, |r| r.dict_size as f64),
            mean_std_of(&rs, |r| r.wall_ms),
        ];
        for (label, pick) in [("mean", 0usize), ("std", 1)] {
            let v = |i: usize| if pick == 0 { stats[i].0 } else { stats[i].1 };
            let mut row = vec![
                format!("{}/{m}", cfg.name),
                cfg.system.name().into(),
                noise_label(cfg),
                real(cfg.snr_db),
                label.into(),
                String::new(),
            ];
            row.extend((0..6).map(|i| real(v(i))));
            row.push(if timing { real(v(6)) } else { String::new() });
            csv.row(row)?;
        }
    }
    csv.finish()
}

fn write_summary(path: &Path, head: &str, cfg: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<(), CliError> {
    let mut csv = Csv::new(create(path, head)?, path);
    csv.row([
        "experiment",
        "system",
        "noise_family",
        "snr_db",
        "method",
        "completed",
        "failed",
        "mse_mean",
        "mse_std",
        "rmse_mean",
        "est_rmse_mean",
    ])?;
    for s in &outcome.summaries {
        csv.row([
            cfg.name.clone(),
            cfg.system.name().into(),
            noise_label(cfg),
            real(cfg.snr_db),
            s.method.name().into(),
            s.completed.to_string(),
            s.failed.to_string(),
            real(s.mse_mean),
            real(s.mse_std),
            real(s.rmse_mean),
            real(s.est_rmse_mean),
        ])?;
    }
    csv.finish()
}

/// The four noise rows of the Ikeda benchmark.
pub fn ikeda_rows() -> Vec<ExperimentConfig> {
    NoiseFamily::ALL
        .iter()
        .map(|&family| {
            let mut cfg = ExperimentConfig::defaults(SystemKind::Ikeda);
            cfg.noise = NoiseSpec { family, ..cfg.noise };
            cfg.name = format!("ikeda_{}", family.name());
            cfg
        })
        .collect()
}

pub fn cmd_table(configs: &[PathBuf], out: &Path, common: &Common) -> Result<(), CliError> {
    let cfgs = if configs.is_empty() {
        let mut rows = ikeda_rows();
        if let Some(s) = common.seed {
            rows.iter_mut().for_each(|c| c.seed = s);
        }
        rows
    } else {
        configs
            .iter()
            .map(|p| load_config(p, common.seed))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut methods: Vec<Method> = cfgs.iter().flat_map(|c| c.methods.iter().copied()).collect();
    methods.sort();
    methods.dedup();

    let resolved: String = cfgs.iter().map(|c| c.to_text()).collect::<Vec<_>>().join("\n");
    let seed = cfgs.first().map(|c| c.seed);
    let head = provenance(seed, &sha256_hex(resolved.as_bytes()));
    let mut rows = Vec::with_capacity(cfgs.len());
    let mut failures = 0;
    for cfg in &cfgs {
        let outcome = run_experiment(cfg, common.jobs)?;
        failures += outcome.failures.len();
        rows.push((cfg, outcome));
    }

    make_dir(out)?;
    write_text(&out.join("table.resolved"), &head, &resolved)?;
    let path = out.join("table.csv");
    let mut csv = Csv::new(create(&path, &head)?, &path);
    let mut header = vec!["experiment".to_string(), "noise_family".into(), "snr_db".into()];
    for m in &methods {
        header.push(format!("{m}_mse_mean"));
        header.push(format!("{m}_mse_std"));
    }
    csv.row(&header)?;
    for (cfg, outcome) in &rows {
        let mut row = vec![cfg.name.clone(), noise_label(cfg), real(cfg.snr_db)];
        let mut line = format!("{:<24}", noise_label(cfg));
        for &m in &methods {
            match outcome.summary(m) {
                Some(s) => {
                    row.push(real(s.mse_mean));
                    row.push(real(s.mse_std));
                    line.push_str(&format!("  {m} {:.4} ± {:.4}", s.mse_mean, s.mse_std));
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        csv.row(&row)?;
        if !common.quiet {
            println!("{line}");
        }
    }
    csv.finish()?;
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} trial(s) diverged")));
    }
    Ok(())
}
