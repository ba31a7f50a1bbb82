//! Flat key-value run configuration.
//!
//! A config file holds one `key = value` pair per line with dotted section
//! keys (`#` starts a comment). Every key is mirrored one-to-one by a CLI
//! flag of the same name; flag values override file values. The manifest
//! written beside each artifact records the post-override values of every
//! key the subcommand used.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

/// One configuration key: name, default, help line.
pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

macro_rules! key {
    ($name:literal, $help:literal) => {
        KeySpec {
            name: $name,
            default: None,
            help: $help,
        }
    };
    ($name:literal, $default:literal, $help:literal) => {
        KeySpec {
            name: $name,
            default: Some($default),
            help: $help,
        }
    };
}

/// Every configuration key the tool understands.
pub const KEYS: &[KeySpec] = &[
    key!("paths.corpus", "passage corpus (JSON lines)"),
    key!("paths.queries", "query set (JSON lines)"),
    key!("paths.dev_queries", "development query set (JSON lines)"),
    key!("paths.qrels", "relevance judgments (qrels format)"),
    key!("paths.model", "encoder model file"),
    key!("paths.base_model", "base encoder model file"),
    key!("paths.lex_model", "lexical encoder model file"),
    key!("paths.index", "dense index file"),
    key!("paths.base_index", "base dense index file"),
    key!("paths.lex_index", "lexical dense index file"),
    key!("paths.imitation", "imitation training data (JSON lines)"),
    key!("paths.validation", "validation pairs (JSON lines)"),
    key!("paths.run", "retrieval run file (TREC format)"),
    key!(
        "paths.out",
        "output artifact path (defaults to output.dir/<name>)"
    ),
    key!("output.dir", ".", "directory for default-named artifacts"),
    key!("sparse.k1", "0.9", "BM25 k1"),
    key!("sparse.b", "0.4", "BM25 b"),
    key!("sparse.lowercase", "true", "lowercase tokens"),
    key!("sparse.stopwords", "", "comma-separated stopword list"),
    key!(
        "sampling.decay_tau",
        "1.0",
        "positional decay scale for query sampling"
    ),
    key!(
        "sampling.min_per_passage",
        "1",
        "guaranteed sentences per passage"
    ),
    key!("sampling.seed", "0", "query sampling seed"),
    key!("imitation.k", "100", "teacher retrieval depth"),
    key!("imitation.n_p", "10", "positives per query"),
    key!("imitation.n_n", "5", "hard negatives per query"),
    key!("trainer.d", "64", "embedding dimension"),
    key!("trainer.lr", "0.01", "SGD learning rate"),
    key!("trainer.batch", "32", "batch size"),
    key!("trainer.epochs", "20", "training epochs"),
    key!("trainer.seed", "0", "training seed"),
    key!(
        "trainer.mode",
        "standard",
        "standard | init_from_model | joint_frozen_lexical"
    ),
    key!(
        "trainer.init_model",
        "model to copy in init_from_model mode"
    ),
    key!("trainer.joint_model", "frozen lexical model in joint mode"),
    key!(
        "trainer.joint_weight",
        "1.0",
        "initial concatenation weight in joint mode"
    ),
    key!(
        "trainer.precision",
        "f32",
        "model file precision: f32 | f64"
    ),
    key!("fusion.mode", "concat", "fusion strategy: concat | sum"),
    key!(
        "fusion.mu",
        "1.0",
        "fusion weight (a number, or `tune` as a placeholder)"
    ),
    key!("retrieve.retriever", "spar", "sparse | dense | spar"),
    key!("retrieve.k", "100", "retrieval depth"),
    key!("retrieve.tag", "spar", "run tag written to the run file"),
    key!(
        "eval.metrics",
        "acc,mrr,recall",
        "comma-separated metric list"
    ),
    key!("eval.k", "20,100", "comma-separated cutoff list"),
    key!("eval.mode", "qrels", "qrels | answers"),
    key!("tune.metric", "acc@100", "acc@100 | mrr@10"),
    key!("stress.k", "20,100", "stress-test cutoffs"),
    key!("stress.seed", "0", "shuffle seed"),
    key!(
        "stress.include_mock",
        "true",
        "include the order-sensitive mock"
    ),
    key!("threads", "0", "worker thread cap (0 = library default)"),
];

/// Resolved configuration: defaults, then file values, then flag overrides.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn resolve(
        file: Option<&Path>,
        overrides: &BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for key in KEYS {
            if let Some(default) = key.default {
                values.insert(key.name.to_string(), default.to_string());
            }
        }
        if let Some(path) = file {
            for (key, value) in parse_config_file(path)? {
                if !KEYS.iter().any(|k| k.name == key) {
                    return Err(CliError::Config(format!(
                        "unknown config key {key:?} in {}",
                        path.display()
                    )));
                }
                values.insert(key, value);
            }
        }
        for (key, value) in overrides {
            values.insert(key.clone(), value.clone());
        }
        Ok(Config { values })
    }

    fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
    }

    pub fn string(&self, key: &str) -> Result<String, CliError> {
        Ok(self.raw(key)?.to_string())
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        Ok(PathBuf::from(self.raw(key)?))
    }

    pub fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.raw(key)?.parse().map_err(|_| {
            CliError::Config(format!(
                "{key} must be a number, got {:?}",
                self.raw(key).unwrap()
            ))
        })
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.raw(key)?.parse().map_err(|_| {
            CliError::Config(format!(
                "{key} must be an integer, got {:?}",
                self.raw(key).unwrap()
            ))
        })
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.raw(key)?.parse().map_err(|_| {
            CliError::Config(format!(
                "{key} must be an integer, got {:?}",
                self.raw(key).unwrap()
            ))
        })
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key)? {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(CliError::Config(format!(
                "{key} must be a boolean, got {other:?}"
            ))),
        }
    }

    /// Comma-separated integer list.
    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        self.raw(key)?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::Config(format!("{key} has a non-integer entry {s:?}")))
            })
            .collect()
    }

    pub fn string_list(&self, key: &str) -> Result<Vec<String>, CliError> {
        Ok(self
            .raw(key)?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect())
    }

    /// The artifact path: `paths.out` if set, else `output.dir/<default_name>`.
    pub fn out_path(&self, default_name: &str) -> Result<PathBuf, CliError> {
        if let Some(out) = self.opt_path("paths.out") {
            return Ok(out);
        }
        Ok(self.path("output.dir")?.join(default_name))
    }

    /// Post-override values for the listed keys (those the subcommand used),
    /// in sorted order, for the manifest.
    pub fn manifest_entries(&self, keys: &[&str]) -> Vec<(String, String)> {
        let mut entries: Vec<(String, String)> = keys
            .iter()
            .filter_map(|k| self.values.get(*k).map(|v| (k.to_string(), v.clone())))
            .collect();
        entries.sort();
        entries
    }
}

fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}
