//! Flat `key = value` experiment configuration.

use super::metrics::ErrorNorm;
#[cfg(test)]
use super::noise::NoiseFamily;
use super::noise::NoiseSpec;
use crate::error::{FbfError, Result};
use crate::filter::{DictionaryPolicy, FbfHyperParams};
use std::fmt::{self, Write as _};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    MackeyGlass,
    Ikeda,
    RobotArm,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::MackeyGlass => "mackey_glass",
            Self::Ikeda => "ikeda",
            Self::RobotArm => "robot_arm",
        }
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Self::MackeyGlass, Self::Ikeda, Self::RobotArm]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown system `{s}`"))
    }
}

/// Estimator whose output is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fbf,
    Ckf,
    Ekf,
    /// The noisy measurement itself.
    Raw,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fbf => "fbf",
            Self::Ckf => "ckf",
            Self::Ekf => "ekf",
            Self::Raw => "raw",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Self::Fbf, Self::Ckf, Self::Ekf, Self::Raw]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbfSettings {
    pub a_s: f64,
    pub a_u: f64,
    pub hp: FbfHyperParams,
    /// Hidden state dimension; the output block follows it.
    pub n_x: usize,
    /// Input window length (Mackey-Glass only; the other systems fix it).
    pub n_u: usize,
    pub epochs: usize,
    pub batch_len: usize,
    pub dictionary: DictionaryPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: SystemKind,
    pub methods: Vec<Method>,
    pub noise: NoiseSpec,
    pub snr_db: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub trials: usize,
    pub seed: u64,
    pub error_norm: ErrorNorm,
    /// Candidate process variances for the EKF/CKF grid search.
    pub q_grid: Vec<f64>,
    pub fbf: FbfSettings,
}

pub const CONFIG_KEYS: &[&str] = &[
    "name",
    "system",
    "methods",
    "noise",
    "alpha",
    "snr_db",
    "n_train",
    "n_test",
    "trials",
    "seed",
    "error_norm",
    "q_grid",
    "a_s",
    "a_u",
    "sigma2_s",
    "sigma2_omega",
    "sigma2_y",
    "eta_k1",
    "eta_k2",
    "n_x",
    "n_u",
    "epochs",
    "batch_len",
    "max_dict",
    "coherence",
];

impl ExperimentConfig {
    /// Settings of the published setup for `system`; hyperparameters not given there are
    /// this crate's choices.
    pub fn defaults(system: SystemKind) -> Self {
        let dictionary = DictionaryPolicy::default();
        match system {
            SystemKind::MackeyGlass => Self {
                name: "mackey_glass".into(),
                system,
                methods: vec![Method::Fbf, Method::Raw],
                noise: NoiseSpec {
                    alpha: 1.6,
                    ..NoiseSpec::gaussian()
                },
                snr_db: 10.0,
                n_train: 1000,
                n_test: 100,
                trials: 50,
                seed: 1,
                error_norm: ErrorNorm::Mean,
                q_grid: vec![1e-4, 1e-3, 1e-2],
                fbf: FbfSettings {
                    a_s: 0.6,
                    a_u: 1.8,
                    hp: FbfHyperParams {
                        sigma2_s: 10.0,
                        sigma2_omega: 10.0,
                        sigma2_y: 0.08,
                        eta_k1: 0.5,
                        eta_k2: 0.1,
                    },
                    n_x: 1,
                    n_u: 7,
                    epochs: 10,
                    batch_len: 100,
                    dictionary,
                },
            },
            SystemKind::Ikeda => Self {
                name: "ikeda".into(),
                system,
                methods: vec![Method::Fbf, Method::Ckf, Method::Ekf, Method::Raw],
                noise: NoiseSpec {
                    alpha: 1.6,
                    ..NoiseSpec::gaussian()
                },
                snr_db: 3.0,
                n_train: 201,
                n_test: 200,
                trials: 20,
                seed: 1,
                error_norm: ErrorNorm::Mean,
                q_grid: vec![1e-4, 1e-3, 1e-2],
                fbf: FbfSettings {
                    a_s: 0.8,
                    a_u: 0.8,
                    hp: FbfHyperParams {
                        sigma2_s: 1.0,
                        sigma2_omega: 1.0,
                        sigma2_y: 0.3,
                        eta_k1: 0.5,
                        eta_k2: 0.1,
                    },
                    n_x: 2,
                    n_u: 2,
                    epochs: 3,
                    batch_len: 200,
                    dictionary,
                },
            },
            SystemKind::RobotArm => Self {
                name: "robot_arm".into(),
                system,
                methods: vec![Method::Fbf, Method::Ckf],
                noise: NoiseSpec {
                    alpha: 1.6,
                    ..NoiseSpec::gaussian()
                },
                snr_db: f64::NAN,
                n_train: 600,
                n_test: 100,
                trials: 200,
                seed: 1,
                error_norm: ErrorNorm::Mean,
                q_grid: vec![],
                fbf: FbfSettings {
                    a_s: 0.3,
                    a_u: 0.3,
                    hp: FbfHyperParams {
                        sigma2_s: 0.01,
                        sigma2_omega: 1.0,
                        sigma2_y: 0.005,
                        eta_k1: 1.0,
                        eta_k2: 0.5,
                    },
                    n_x: 0,
                    n_u: 2,
                    epochs: 3,
                    batch_len: 50,
                    dictionary,
                },
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("trials", self.trials),
            ("n_u", self.fbf.n_u),
            ("batch_len", self.fbf.batch_len),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(FbfError::InvalidParameter {
                    name,
                    reason: "must be positive".into(),
                });
            }
        }
        if self.methods.is_empty() {
            return Err(FbfError::InvalidParameter {
                name: "methods",
                reason: "at least one method required".into(),
            });
        }
        if self.system != SystemKind::RobotArm && !(self.snr_db.is_finite() || self.snr_db == f64::INFINITY) {
            return Err(FbfError::InvalidParameter {
                name: "snr_db",
                reason: format!("must be a number or inf, got {}", self.snr_db),
            });
        }
        crate::kernel::KernelParams::new(self.fbf.a_s, self.fbf.a_u)?;
        self.fbf.hp.validate()?;
        NoiseSpec::new(self.noise.family, self.noise.alpha)?;
        if self.q_grid.iter().any(|q| q.is_nan() || *q <= 0.0) {
            return Err(FbfError::InvalidParameter {
                name: "q_grid",
                reason: "entries must be positive".into(),
            });
        }
        let min_train = match self.system {
            SystemKind::MackeyGlass => self.fbf.n_u + self.fbf.batch_len,
            SystemKind::Ikeda => 2,
            SystemKind::RobotArm => self.fbf.batch_len + 1,
        };
        if self.n_train < min_train {
            return Err(FbfError::InvalidParameter {
                name: "n_train",
                reason: format!("must be at least {min_train} for this system"),
            });
        }
        if matches!(self.system, SystemKind::MackeyGlass)
            && self.methods.iter().any(|m| matches!(m, Method::Ckf | Method::Ekf))
        {
            return Err(FbfError::InvalidParameter {
                name: "methods",
                reason: "mackey_glass has no known-model baseline".into(),
            });
        }
        Ok(())
    }

    /// Parses a flat config. `system` is required and selects the defaults the other keys
    /// override.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, usize, &str, usize, &str)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            let Some(eq) = body.find('=') else {
                let col = body.len() - body.trim_start().len() + 1;
                return Err(parse_err(line_no, col, "expected `key = value`"));
            };
            let key = body[..eq].trim();
            let key_col = body.len() - body.trim_start().len() + 1;
            let val_part = &body[eq + 1..];
            let value = val_part.trim();
            let val_col = eq + 2 + (val_part.len() - val_part.trim_start().len());
            if !CONFIG_KEYS.contains(&key) {
                return Err(parse_err(line_no, key_col, &format!("unknown key `{key}`")));
            }
            if let Some(prev) = entries.iter().find(|e| e.2 == key) {
                return Err(parse_err(
                    line_no,
                    key_col,
                    &format!("duplicate key `{key}` (first on line {})", prev.0),
                ));
            }
            if value.is_empty() {
                return Err(parse_err(line_no, val_col, &format!("missing value for `{key}`")));
            }
            entries.push((line_no, key_col, key, val_col, value));
        }
        let system = match entries.iter().find(|e| e.2 == "system") {
            Some(&(line, _, _, col, v)) => v.parse::<SystemKind>().map_err(|m| parse_err(line, col, &m))?,
            None => return Err(parse_err(text.lines().count() + 1, 1, "missing required key `system`")),
        };
        let mut cfg = Self::defaults(system);
        for &(line, _, key, col, value) in &entries {
            cfg.set(key, value).map_err(|m| parse_err(line, col, &m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        let hp = &mut self.fbf.hp;
        match key {
            "name" => self.name = value.to_string(),
            "system" => {}
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|m| m.trim().parse::<Method>())
                    .collect::<std::result::Result<_, _>>()?;
            }
            "noise" => self.noise.family = value.parse()?,
            "alpha" => self.noise.alpha = num(key, value)?,
            "snr_db" => self.snr_db = num(key, value)?,
            "n_train" => self.n_train = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "error_norm" => {
                self.error_norm = ErrorNorm::parse(value).ok_or_else(|| format!("unknown error_norm `{value}`"))?
            }
            "q_grid" => {
                self.q_grid = value
                    .split(',')
                    .map(|q| num::<f64>(key, q.trim()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            "a_s" => self.fbf.a_s = num(key, value)?,
            "a_u" => self.fbf.a_u = num(key, value)?,
            "sigma2_s" => hp.sigma2_s = num(key, value)?,
            "sigma2_omega" => hp.sigma2_omega = num(key, value)?,
            "sigma2_y" => hp.sigma2_y = num(key, value)?,
            "eta_k1" => hp.eta_k1 = num(key, value)?,
            "eta_k2" => hp.eta_k2 = num(key, value)?,
            "n_x" => self.fbf.n_x = num(key, value)?,
            "n_u" => self.fbf.n_u = num(key, value)?,
            "epochs" => self.fbf.epochs = num(key, value)?,
            "batch_len" => self.fbf.batch_len = num(key, value)?,
            "max_dict" => {
                let m: usize = num(key, value)?;
                self.fbf.dictionary.max_size = (m > 0).then_some(m);
            }
            "coherence" => self.fbf.dictionary.coherence = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Every key with its resolved value, in a form [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let hp = &self.fbf.hp;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("system", self.system.name().into());
        put("name", self.name.clone());
        put(
            "methods",
            join(self.methods.iter().map(|m| m.name().to_string()).collect()),
        );
        put("noise", self.noise.family.name().into());
        put("alpha", self.noise.alpha.to_string());
        put("snr_db", self.snr_db.to_string());
        put("n_train", self.n_train.to_string());
        put("n_test", self.n_test.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("error_norm", self.error_norm.name().into());
        if !self.q_grid.is_empty() {
            put("q_grid", join(self.q_grid.iter().map(|q| q.to_string()).collect()));
        }
        put("a_s", self.fbf.a_s.to_string());
        put("a_u", self.fbf.a_u.to_string());
        put("sigma2_s", hp.sigma2_s.to_string());
        put("sigma2_omega", hp.sigma2_omega.to_string());
        put("sigma2_y", hp.sigma2_y.to_string());
        put("eta_k1", hp.eta_k1.to_string());
        put("eta_k2", hp.eta_k2.to_string());
        put("n_x", self.fbf.n_x.to_string());
        put("n_u", self.fbf.n_u.to_string());
        put("epochs", self.fbf.epochs.to_string());
        put("batch_len", self.fbf.batch_len.to_string());
        put("max_dict", self.fbf.dictionary.max_size.unwrap_or(0).to_string());
        put("coherence", self.fbf.dictionary.coherence.to_string());
        out
    }
}

fn parse_err(line: usize, column: usize, message: &str) -> FbfError {
    FbfError::Parse {
        line,
        column,
        message: message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for s in [SystemKind::MackeyGlass, SystemKind::Ikeda, SystemKind::RobotArm] {
            ExperimentConfig::defaults(s).validate().unwrap();
        }
    }

    #[test]
    fn overrides_apply() {
        let cfg = ExperimentConfig::parse(
            "system = ikeda\n# comment\n\nnoise = laplacian\ntrials = 3 # inline\nmethods = fbf, ckf\nq_grid=0.1,0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.system, SystemKind::Ikeda);
        assert_eq!(cfg.noise.family, NoiseFamily::Laplacian);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.methods, vec![Method::Fbf, Method::Ckf]);
        assert_eq!(cfg.q_grid, vec![0.1, 0.2]);
        assert_eq!(cfg.fbf.hp.sigma2_y, 0.3);
    }

    #[test]
    fn unknown_key_reports_position() {
        match ExperimentConfig::parse("system = ikeda\n  colour = red\n") {
            Err(FbfError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_value_reports_value_column() {
        match ExperimentConfig::parse("system = ikeda\ntrials = many\n") {
            Err(FbfError::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 10));
                assert!(message.contains("trials"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ExperimentConfig::parse("trials\n"),
            Err(FbfError::Parse { line: 1, column: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("seed = 1\nseed = 2\n"),
            Err(FbfError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("seed =\n"),
            Err(FbfError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn system_key_is_required() {
        match ExperimentConfig::parse("trials = 3\n") {
            Err(FbfError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("`system`"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors_are_rejected() {
        assert!(ExperimentConfig::parse("system = ikeda\ntrials = 0\n").is_err());
        assert!(ExperimentConfig::parse("system = ikeda\nnoise = alpha_stable\nalpha = 3\n").is_err());
        assert!(ExperimentConfig::parse("system = mackey_glass\nmethods = ckf\n").is_err());
        assert!(ExperimentConfig::parse("system = ikeda\neta_k1 = 2\n").is_err());
    }

    #[test]
    fn resolved_text_round_trips() {
        for s in [SystemKind::MackeyGlass, SystemKind::Ikeda, SystemKind::RobotArm] {
            let mut cfg = ExperimentConfig::defaults(s);
            cfg.snr_db = if s == SystemKind::RobotArm { f64::NAN } else { 7.5 };
            cfg.fbf.dictionary.max_size = Some(40);
            let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
            assert_eq!(back.to_text(), cfg.to_text());
        }
        let inf = ExperimentConfig::parse("system = ikeda\nsnr_db = inf\n").unwrap();
        assert_eq!(inf.snr_db, f64::INFINITY);
    }
}
