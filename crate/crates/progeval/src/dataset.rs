//! Line-delimited dataset records shared by all task generators.
//!
//! One JSON object per line; JSON string escaping keeps newlines inside code
//! as literal `\n` in the file.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

use crate::progsynth::{Sample, Split};
use crate::taskgen::Task;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub task: Task,
    pub code: String,
    pub target: String,
    pub length: u32,
    pub nesting: u32,
    pub split: Split,
    pub seed: u64,
}

impl DatasetRecord {
    pub fn from_sample(sample: &Sample, task: Task, seed: u64) -> Self {
        DatasetRecord {
            task,
            code: sample.code.clone(),
            target: sample.target.clone(),
            length: sample.length,
            nesting: sample.nesting,
            split: sample.split,
            seed,
        }
    }

    pub fn into_sample(self) -> Sample {
        Sample {
            code: self.code,
            target: self.target,
            length: self.length,
            nesting: self.nesting,
            split: self.split,
        }
    }
}

pub fn write_records<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a DatasetRecord>,
) -> Result<usize, DatasetError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let mut count = 0;
    for rec in records {
        serde_json::to_writer(&mut w, rec).map_err(|e| DatasetError::Malformed {
            line: count + 1,
            source: e,
        })?;
        w.write_all(b"\n")?;
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            line: i + 1,
            source: e,
        })?;
        records.push(rec);
    }
    Ok(records)
}
