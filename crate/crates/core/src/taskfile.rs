//! On-disk benchmark layout: `manifest.json` plus one JSON-lines file per task set.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::{Benchmark, Split, SymbolSplits, Task, TaskSet, FORMAT_VERSION};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum TaskFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("unsupported task format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("{file}: manifest says {expected} tasks, found {found}")]
    Count { file: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetEntry {
    pub name: String,
    pub split: Split,
    pub map_size: usize,
    pub n_pieces: usize,
    pub count: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    /// Target symbols per split.
    pub symbols: SymbolSplits,
    pub sets: Vec<SetEntry>,
    /// Task totals keyed `train`, `val`, `test20`, `test30`, `holdout`.
    pub totals: BTreeMap<String, usize>,
}

impl Manifest {
    pub fn for_benchmark(bench: &Benchmark) -> Self {
        let mut totals = BTreeMap::new();
        let sets = bench
            .sets
            .iter()
            .map(|s| {
                let key = match s.split {
                    Split::Test => format!("test{}", s.map_size),
                    other => other.to_string(),
                };
                *totals.entry(key).or_insert(0) += s.tasks.len();
                SetEntry {
                    name: s.name(),
                    split: s.split,
                    map_size: s.map_size,
                    n_pieces: s.n_pieces,
                    count: s.tasks.len(),
                    file: format!("{}.jsonl", s.name()),
                }
            })
            .collect();
        Manifest {
            format_version: FORMAT_VERSION,
            seed: bench.seed,
            symbols: bench.splits.clone(),
            sets,
            totals,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> TaskFileError + '_ {
    move |source| TaskFileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_tasks(path: &Path, tasks: &[Task]) -> Result<(), TaskFileError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for t in tasks {
        let line = serde_json::to_string(t).expect("tasks serialize");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_tasks(path: &Path) -> Result<Vec<Task>, TaskFileError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let task = serde_json::from_str(&line).map_err(|source| TaskFileError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(task);
    }
    Ok(out)
}

pub fn write_benchmark(dir: &Path, bench: &Benchmark) -> Result<Manifest, TaskFileError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = Manifest::for_benchmark(bench);
    for (entry, set) in manifest.sets.iter().zip(&bench.sets) {
        write_tasks(&dir.join(&entry.file), &set.tasks)?;
    }
    let path = dir.join(MANIFEST);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, body + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, TaskFileError> {
    let path = dir.join(MANIFEST);
    let body = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_str(&body).map_err(|source| TaskFileError::Json {
        path: path.clone(),
        line: source.line(),
        source,
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(TaskFileError::Version(manifest.format_version));
    }
    Ok(manifest)
}

pub fn read_benchmark(dir: &Path) -> Result<Benchmark, TaskFileError> {
    let manifest = read_manifest(dir)?;
    let sets = manifest
        .sets
        .iter()
        .map(|e| {
            let tasks = read_tasks(&dir.join(&e.file))?;
            if tasks.len() != e.count {
                return Err(TaskFileError::Count {
                    file: e.file.clone(),
                    expected: e.count,
                    found: tasks.len(),
                });
            }
            Ok(TaskSet {
                split: e.split,
                map_size: e.map_size,
                n_pieces: e.n_pieces,
                tasks,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Benchmark {
        seed: manifest.seed,
        splits: manifest.symbols,
        sets,
    })
}
