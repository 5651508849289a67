//! On-disk layout of the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use kgexplain::kg::{parse_tsv, Dataset, PredicateId};
use kgexplain::rules::RuleMode;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::config::ScopeKind;

/// An input produced by an earlier subcommand is absent.
#[derive(Debug, Error)]
#[error("missing {}: run `kgexplain {command}` first", path.display())]
pub struct MissingArtifact {
    pub path: PathBuf,
    pub command: &'static str,
}

/// Paths of every artifact under the output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn data_file(&self, split: &str) -> PathBuf {
        self.data_dir().join(format!("{split}.tsv"))
    }

    pub fn data_summary(&self) -> PathBuf {
        self.data_dir().join("summary.json")
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("model").join("model.bin")
    }

    pub fn train_log(&self) -> PathBuf {
        self.root.join("model").join("train_log.json")
    }

    pub fn contexts_dir(&self) -> PathBuf {
        self.root.join("contexts")
    }

    pub fn context(&self, stem: &str) -> PathBuf {
        self.contexts_dir().join(format!("{stem}.json"))
    }

    pub fn context_csv(&self, stem: &str) -> PathBuf {
        self.contexts_dir().join(format!("{stem}.csv"))
    }

    pub fn rules(&self, mode: RuleMode, stem: &str) -> PathBuf {
        self.root.join("rules").join(mode.to_string()).join(format!("{stem}.txt"))
    }

    pub fn explanations_dir(&self, scope: ScopeKind, mode: RuleMode) -> PathBuf {
        self.root.join("explanations").join(format!("{scope}-{mode}"))
    }

    pub fn fidelity(&self, scope: ScopeKind, mode: RuleMode) -> PathBuf {
        self.root.join("fidelity").join(format!("{scope}-{mode}.json"))
    }

    pub fn fidelity_dir(&self) -> PathBuf {
        self.root.join("fidelity")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    /// Reloads the ingested splits.
    pub fn load_dataset(&self) -> anyhow::Result<Dataset> {
        let read = |split: &str| -> anyhow::Result<Vec<[String; 3]>> {
            let path = self.data_file(split);
            require(&path, "ingest")?;
            let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            parse_tsv(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
        };
        let (train, valid, test) = (read("train")?, read("valid")?, read("test")?);
        Ok(Dataset::from_labels(&train, &valid, &test)?)
    }
}

/// Fails with [`MissingArtifact`] unless `path` exists.
pub fn require(path: &Path, command: &'static str) -> anyhow::Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MissingArtifact { path: path.to_path_buf(), command }.into())
    }
}

/// File stem for a predicate: its id followed by the label with anything
/// outside `[A-Za-z0-9_-]` replaced.
pub fn predicate_stem(id: PredicateId, label: &str) -> String {
    let clean: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{:04}_{}", id.0, clean.trim_matches('_'))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, command: &'static str) -> anyhow::Result<T> {
    require(path, command)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Sorted `.json` files of a directory produced by `command`.
pub fn json_files(dir: &Path, command: &'static str) -> anyhow::Result<Vec<PathBuf>> {
    require(dir, command)?;
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_are_filesystem_safe() {
        assert_eq!(predicate_stem(PredicateId(3), "/film/film/genre"), "0003_film_film_genre");
        assert_eq!(predicate_stem(PredicateId(12), "bornIn"), "0012_bornIn");
    }

    #[test]
    fn missing_artifact_names_the_command() {
        let err = require(Path::new("/nonexistent/model.bin"), "train").unwrap_err();
        assert!(err.to_string().contains("run `kgexplain train` first"));
    }
}
