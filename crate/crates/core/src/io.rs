//! JSON chain files and report persistence.
//!
//! A chain file looks like
//!
//! ```json
//! {"n": 3, "states": ["up", "down"], "initial": [0.5, 0.5],
//!  "kernels": [[[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]]],
//!  "observables": [[1, -1], [1, -1], [1, -1]]}
//! ```
//!
//! `states` is optional. Every validation message starts with the offending
//! field and index, e.g. `kernels[1]: row 0 sums to 0.9, expected 1`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{ChainSpec, Distribution, Kernel, Observable, StateSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    pub initial: Vec<f64>,
    pub kernels: Vec<Vec<Vec<f64>>>,
    pub observables: Vec<Vec<f64>>,
}

impl ChainFile {
    pub fn from_chain(chain: &ChainSpec) -> Self {
        Self {
            n: chain.n(),
            states: chain.space().labels().map(<[String]>::to_vec),
            initial: chain.initial().probs().to_vec(),
            kernels: chain.kernels().iter().map(Kernel::to_rows).collect(),
            observables: chain
                .observables()
                .iter()
                .map(|f| f.values().to_vec())
                .collect(),
        }
    }

    pub fn into_chain(self) -> Result<ChainSpec> {
        let field = |name: String| move |e: Error| Error::Input(format!("{name}: {}", strip(e)));
        let space = match self.states {
            Some(labels) => {
                if labels.len() != self.initial.len() {
                    return Err(Error::input(format!(
                        "states: {} labels but initial has {} entries",
                        labels.len(),
                        self.initial.len()
                    )));
                }
                StateSpace::with_labels(labels)?
            }
            None => StateSpace::new(self.initial.len()).map_err(field("initial".into()))?,
        };
        if self.n == 0 {
            return Err(Error::input("n: horizon must be at least 1"));
        }
        if self.observables.len() != self.n {
            return Err(Error::input(format!(
                "observables: expected n = {} entries, found {}",
                self.n,
                self.observables.len()
            )));
        }
        if self.kernels.len() + 1 != self.n {
            return Err(Error::input(format!(
                "kernels: expected n - 1 = {} matrices, found {}",
                self.n - 1,
                self.kernels.len()
            )));
        }
        let initial = Distribution::new(self.initial).map_err(field("initial".into()))?;
        let kernels = self
            .kernels
            .into_iter()
            .enumerate()
            .map(|(i, rows)| Kernel::new(rows).map_err(field(format!("kernels[{i}]"))))
            .collect::<Result<Vec<_>>>()?;
        let observables = self
            .observables
            .into_iter()
            .enumerate()
            .map(|(i, v)| Observable::new(v).map_err(field(format!("observables[{i}]"))))
            .collect::<Result<Vec<_>>>()?;
        ChainSpec::new(space, initial, kernels, observables)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Input(msg) => msg,
        other => other.to_string(),
    }
}

pub fn parse_chain(text: &str) -> Result<ChainSpec> {
    let file: ChainFile =
        serde_json::from_str(text).map_err(|e| Error::input(format!("chain JSON: {e}")))?;
    file.into_chain()
}

pub fn read_chain(path: &Path) -> Result<ChainSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_chain(&text)
}

pub fn chain_to_json(chain: &ChainSpec) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ChainFile::from_chain(chain))?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Creates `path` and hands a buffered writer to `write`.
pub fn write_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}
