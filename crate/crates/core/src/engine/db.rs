use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ks::Label;
use crate::params::ParameterVector;
use crate::surrogate::TrainingSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledSample {
    pub vector: ParameterVector,
    pub statistic: f64,
    pub label: Label,
    pub batch_index: u64,
    pub seed_used: u64,
}

/// Append-only record of every evaluated vector.
#[derive(Clone, Debug, Default)]
pub struct GroundTruthDb {
    samples: Vec<LabeledSample>,
    keys: HashSet<Vec<u64>>,
}

impl PartialEq for GroundTruthDb {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
    }
}

impl GroundTruthDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: LabeledSample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if sample.batch_index < last.batch_index {
                return Err(Error::BatchOrder {
                    last: last.batch_index,
                    got: sample.batch_index,
                });
            }
        }
        if !self.keys.insert(sample.vector.bit_key()) {
            return Err(Error::DuplicateVector);
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn keys(&self) -> &HashSet<Vec<u64>> {
        &self.keys
    }

    pub fn contains(&self, v: &ParameterVector) -> bool {
        self.keys.contains(&v.bit_key())
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.label.is_positive()).count();
        (pos, self.len() - pos)
    }

    pub fn training_set(&self) -> Result<TrainingSet> {
        TrainingSet::new(self.samples.iter().map(|s| (s.vector.0.clone(), s.label)).collect())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Blank lines are skipped; any other unparsable or inconsistent line is a
    /// schema error carrying its 1-based line number.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut db = Self::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let schema = |message: String| Error::SchemaError { line: i + 1, message };
            let sample: LabeledSample = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
            db.push(sample).map_err(|e| schema(e.to_string()))?;
        }
        Ok(db)
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        self.write_jsonl(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }
}

/// Minimum-statistic sample; ties resolve to the earliest inserted.
pub fn best_candidate(db: &GroundTruthDb) -> Result<(ParameterVector, f64)> {
    let mut best: Option<&LabeledSample> = None;
    for s in db.samples() {
        if best.map_or(true, |b| s.statistic < b.statistic) {
            best = Some(s);
        }
    }
    best.map(|s| (s.vector.clone(), s.statistic)).ok_or(Error::EmptyDb)
}
