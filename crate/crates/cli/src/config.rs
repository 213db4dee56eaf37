//! Flat `key = value` configuration files.
//!
//! Blank lines and everything after `#` are ignored. Keys are dotted names
//! such as `ensemble.L`; lists are comma-separated. Relative paths are
//! resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use novelty::dataset::SynthSpec;
use novelty::eval::{BaselineParams, CvConfig, KernelChoice, Method, Representation};
use novelty::softlabel::TrainConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    Value {
        line: usize,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

const KEYS: &[&str] = &[
    "seed",
    "parallelism",
    "output.dir",
    "output.save_models",
    "data.source",
    "data.csv",
    "synth.classes",
    "synth.dim",
    "synth.examples_per_class",
    "synth.center_spread",
    "synth.within_std",
    "synth.seed",
    "synth.output",
    "split.multiclass_fraction",
    "split.binary_fraction",
    "ensemble.L",
    "ensemble.novel_fraction",
    "ensemble.svm_c",
    "ensemble.normalized",
    "ensemble.sub_sizes",
    "eval.set_sizes",
    "cv.folds",
    "cv.repeats",
    "train.learning_rate",
    "train.l2_penalty",
    "train.max_epochs",
    "train.tolerance",
    "methods",
    "baselines.representations",
    "baselines.knn_k",
    "baselines.ocsvm_nu",
    "baselines.ocsvm_gamma",
    "baselines.knfst_kernel",
    "baselines.knfst_max_points",
    "simulate.p",
    "simulate.q",
    "simulate.L",
    "simulate.delta",
    "simulate.trials",
    "simulate.novel_assigned",
    "diagnose.repeat",
    "diagnose.fold",
];

/// Key-value pairs with the line each came from.
#[derive(Debug, Clone, Default)]
struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Value {
                    line,
                    key: key.to_string(),
                    message: "empty value".into(),
                });
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), line)) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("`{key}` already set on line {first}"),
                });
            }
        }
        Ok(Self { entries })
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|e: T::Err| ConfigError::Value {
                line,
                key: key.to_string(),
                message: e.to_string(),
            }),
        }
    }

    fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => v
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|e: T::Err| ConfigError::Value {
                        line,
                        key: key.to_string(),
                        message: format!("`{}`: {e}", item.trim()),
                    })
                })
                .collect(),
        }
    }

    fn value_error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            line: self.raw(key).map_or(0, |(_, l)| l),
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synth(SynthSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub p: f64,
    pub q: f64,
    pub sizes: Vec<usize>,
    /// `None` derives δ from the two expectations.
    pub deltas: Option<Vec<f64>>,
    pub trials: usize,
    /// Members whose presumed-novel group holds the evaluated known class.
    pub novel_assigned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; `None` uses every available core.
    pub parallelism: Option<usize>,
    pub output_dir: PathBuf,
    pub save_models: bool,
    pub data: DataSource,
    /// Synthetic dataset spec, used by `synth` regardless of `data.source`.
    pub synth: SynthSpec,
    pub synth_output: PathBuf,
    pub cv: CvConfig,
    pub simulate: SimulateConfig,
    pub diagnose_repeat: usize,
    pub diagnose_fold: usize,
}

fn parse_kernel(text: &str) -> Result<KernelChoice, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    match parts.as_slice() {
        ["linear"] => Ok(KernelChoice::Linear),
        ["rbf"] => Ok(KernelChoice::Rbf { gamma: None }),
        ["rbf", g] => Ok(KernelChoice::Rbf {
            gamma: Some(num(g)?),
        }),
        ["poly", d, c] => Ok(KernelChoice::Polynomial {
            degree: d.parse().map_err(|e| format!("`{d}`: {e}"))?,
            coef0: num(c)?,
        }),
        _ => Err(format!(
            "expected linear, rbf, rbf:<gamma> or poly:<degree>:<coef0>, found `{text}`"
        )),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let seed: u64 = raw.get("seed", 0)?;
        let parallelism = match raw.get::<usize>("parallelism", 0)? {
            0 => None,
            n => Some(n),
        };
        let output_dir = resolve(&raw.get::<String>("output.dir", "out".into())?);

        let bench = novelty::benchmark::synth_spec();
        let synth = SynthSpec {
            num_classes: raw.get("synth.classes", bench.num_classes)?,
            dim: raw.get("synth.dim", bench.dim)?,
            examples_per_class: raw.get("synth.examples_per_class", bench.examples_per_class)?,
            center_spread: raw.get("synth.center_spread", bench.center_spread)?,
            within_std: raw.get("synth.within_std", bench.within_std)?,
            seed: raw.get("synth.seed", seed)?,
        };
        synth
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("synth: {e}")))?;
        let synth_output = match raw.raw("synth.output") {
            Some((p, _)) => resolve(p),
            None => output_dir.join("dataset.csv"),
        };
        let data = match raw.get::<String>("data.source", "synth".into())?.as_str() {
            "synth" => DataSource::Synth(synth),
            "csv" => match raw.raw("data.csv") {
                Some((p, _)) => DataSource::Csv(resolve(p)),
                None => {
                    return Err(ConfigError::Invalid(
                        "data.source = csv requires data.csv".into(),
                    ))
                }
            },
            other => {
                return Err(raw.value_error(
                    "data.source",
                    format!("expected synth or csv, found `{other}`"),
                ))
            }
        };

        let defaults = CvConfig::default();
        let train_defaults = TrainConfig::default();
        let train = TrainConfig {
            learning_rate: raw.get("train.learning_rate", train_defaults.learning_rate)?,
            l2_penalty: raw.get("train.l2_penalty", train_defaults.l2_penalty)?,
            max_epochs: raw.get("train.max_epochs", train_defaults.max_epochs)?,
            tolerance: raw.get("train.tolerance", train_defaults.tolerance)?,
            seed: 0,
        };
        train
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("train: {e}")))?;
        let methods = match raw.raw("methods") {
            None => defaults.methods.clone(),
            Some((v, line)) => v
                .split(',')
                .map(|m| {
                    m.trim().parse::<Method>().map_err(|e| ConfigError::Value {
                        line,
                        key: "methods".into(),
                        message: e.to_string(),
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let representations = match raw.raw("baselines.representations") {
            None => defaults.representations.clone(),
            Some((v, line)) => v
                .split(',')
                .map(|r| {
                    r.trim()
                        .parse::<Representation>()
                        .map_err(|e| ConfigError::Value {
                            line,
                            key: "baselines.representations".into(),
                            message: e.to_string(),
                        })
                })
                .collect::<Result<_, _>>()?,
        };
        let bdef = BaselineParams::default();
        let ocsvm_gamma = match raw.raw("baselines.ocsvm_gamma") {
            None | Some(("auto", _)) => None,
            Some(_) => Some(raw.get::<f64>("baselines.ocsvm_gamma", 0.0)?),
        };
        let knfst_kernel = match raw.raw("baselines.knfst_kernel") {
            None => bdef.knfst_kernel,
            Some((v, _)) => {
                parse_kernel(v).map_err(|m| raw.value_error("baselines.knfst_kernel", m))?
            }
        };
        let mut cv = CvConfig {
            folds: raw.get("cv.folds", defaults.folds)?,
            repeats: raw.get("cv.repeats", defaults.repeats)?,
            set_sizes: raw.list("eval.set_sizes", defaults.set_sizes.clone())?,
            multiclass_fraction: raw
                .get("split.multiclass_fraction", defaults.multiclass_fraction)?,
            binary_fraction: raw.get("split.binary_fraction", defaults.binary_fraction)?,
            methods,
            ensemble: defaults.ensemble,
            sub_sizes: raw.list("ensemble.sub_sizes", defaults.sub_sizes.clone())?,
            normalized: raw.get("ensemble.normalized", false)?,
            baselines: BaselineParams {
                knn_k: raw.list("baselines.knn_k", bdef.knn_k.clone())?,
                ocsvm_nu: raw.get("baselines.ocsvm_nu", bdef.ocsvm_nu)?,
                ocsvm_gamma,
                knfst_kernel,
                knfst_max_points: raw.get("baselines.knfst_max_points", bdef.knfst_max_points)?,
            },
            representations,
            seed,
            keep_curves: true,
            keep_models: raw.get("output.save_models", false)?,
        };
        cv.ensemble.num_partitions = raw.get("ensemble.L", defaults.ensemble.num_partitions)?;
        cv.ensemble.novel_fraction =
            raw.get("ensemble.novel_fraction", defaults.ensemble.novel_fraction)?;
        cv.ensemble.svm_c = raw.get("ensemble.svm_c", defaults.ensemble.svm_c)?;
        cv.ensemble.train = train;

        let deltas = match raw.raw("simulate.delta") {
            None | Some(("auto", _)) => None,
            Some(_) => Some(raw.list::<f64>("simulate.delta", Vec::new())?),
        };
        let simulate = SimulateConfig {
            p: raw.get("simulate.p", 0.7)?,
            q: raw.get("simulate.q", 0.3)?,
            sizes: raw.list("simulate.L", vec![10, 25, 50, 100])?,
            deltas,
            trials: raw.get("simulate.trials", 100_000)?,
            novel_assigned: raw.get("simulate.novel_assigned", 0)?,
        };
        let config = Self {
            seed,
            parallelism,
            output_dir,
            save_models: cv.keep_models,
            data,
            synth,
            synth_output,
            cv,
            simulate,
            diagnose_repeat: raw.get("diagnose.repeat", 0)?,
            diagnose_fold: raw.get("diagnose.fold", 0)?,
        };
        config.validate_simulate()?;
        Ok(config)
    }

    fn validate_simulate(&self) -> Result<(), ConfigError> {
        let s = &self.simulate;
        let bad = |m: &str| Err(ConfigError::Invalid(format!("simulate: {m}")));
        if !(s.p > 0.0 && s.p <= 1.0) {
            return bad("p must lie in (0, 1]");
        }
        if !(s.q >= 0.0 && s.q < 1.0) {
            return bad("q must lie in [0, 1)");
        }
        if s.sizes.is_empty() || s.sizes.contains(&0) {
            return bad("L must be a non-empty list of positive integers");
        }
        if s.trials == 0 {
            return bad("trials must be positive");
        }
        if s.novel_assigned > *s.sizes.iter().min().unwrap_or(&0) {
            return bad("novel_assigned exceeds the smallest L");
        }
        if let Some(deltas) = &s.deltas {
            if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
                return bad("every delta must lie in (0, 1)");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::parse(text, Path::new("/base"))
    }

    #[test]
    fn defaults_from_empty_file() {
        let cfg = parse("# nothing\n\n").unwrap();
        assert_eq!(cfg.cv.folds, 10);
        assert_eq!(cfg.cv.ensemble.num_partitions, 30);
        assert_eq!(cfg.output_dir, PathBuf::from("/base/out"));
        assert_eq!(cfg.simulate.sizes, vec![10, 25, 50, 100]);
        assert!(matches!(cfg.data, DataSource::Synth(_)));
    }

    #[test]
    fn values_lists_and_comments() {
        let cfg = parse(
            "seed = 7  # trailing\nensemble.L = 12\neval.set_sizes = 1, 3,5\nmethods = knn,ensemble\n\
             baselines.representations = original,pca:4\nbaselines.knfst_kernel = poly:2:1.5\n\
             data.source = csv\ndata.csv = data/x.csv\nparallelism = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.cv.seed, 7);
        assert_eq!(cfg.cv.ensemble.num_partitions, 12);
        assert_eq!(cfg.cv.set_sizes, vec![1, 3, 5]);
        assert_eq!(cfg.cv.methods, vec![Method::Knn, Method::Ensemble]);
        assert_eq!(
            cfg.cv.representations,
            vec![Representation::Original, Representation::Pca(4)]
        );
        assert_eq!(
            cfg.cv.baselines.knfst_kernel,
            KernelChoice::Polynomial {
                degree: 2,
                coef0: 1.5
            }
        );
        assert_eq!(cfg.data, DataSource::Csv(PathBuf::from("/base/data/x.csv")));
        assert_eq!(cfg.parallelism, Some(2));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("seed = 1\nensemble.L = many\n") {
            Err(ConfigError::Value { line: 2, key, .. }) => assert_eq!(key, "ensemble.L"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("\nbogus.key = 1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            parse("seed 1"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse("seed = 1\nseed = 2"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn semantic_errors() {
        assert!(parse("data.source = csv").is_err());
        assert!(parse("methods = ensemble,magic").is_err());
        assert!(parse("simulate.p = 0").is_err());
        assert!(parse("simulate.delta = 0.5, 1.5").is_err());
        assert!(parse("simulate.L = 5\nsimulate.novel_assigned = 6").is_err());
        assert!(parse("train.max_epochs = 0").is_err());
        assert!(parse("synth.classes = 1").is_err());
        assert!(parse("baselines.knfst_kernel = sigmoid").is_err());
    }

    #[test]
    fn auto_values() {
        let cfg = parse("baselines.ocsvm_gamma = auto\nsimulate.delta = auto").unwrap();
        assert_eq!(cfg.cv.baselines.ocsvm_gamma, None);
        assert_eq!(cfg.simulate.deltas, None);
        let cfg = parse("baselines.ocsvm_gamma = 0.25\nsimulate.delta = 0.5,0.25").unwrap();
        assert_eq!(cfg.cv.baselines.ocsvm_gamma, Some(0.25));
        assert_eq!(cfg.simulate.deltas, Some(vec![0.5, 0.25]));
    }
    #[test]
    fn benchmark_config_matches_the_builtin_benchmark() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/benchmark.cfg");
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(
            cfg.data,
            DataSource::Synth(novelty::benchmark::synth_spec())
        );
        let expected = CvConfig {
            keep_curves: cfg.cv.keep_curves,
            ..novelty::benchmark::cv_config()
        };
        assert_eq!(cfg.cv, expected);
    }
}
