//! Infected-count time series and its on-disk formats.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of infected agents after each simulation step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpidemicSeries {
    pub counts: Vec<u32>,
}

impl EpidemicSeries {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: u32) -> Self {
        Self::new(self.counts.iter().map(|&c| c * k).collect())
    }

    /// One-column CSV with header `infected`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["infected"])?;
        for c in &self.counts {
            wr.write_record([c.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?;
        if headers.len() != 1 || &headers[0] != "infected" {
            return Err(Error::SchemaError {
                line: 1,
                message: format!("expected header `infected`, got {headers:?}"),
            });
        }
        let mut counts = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let field = rec.get(0).ok_or_else(|| Error::SchemaError {
                line,
                message: "missing value".into(),
            })?;
            let v = field.trim().parse::<u32>().map_err(|e| Error::SchemaError {
                line,
                message: e.to_string(),
            })?;
            counts.push(v);
        }
        Ok(Self::new(counts))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("u32 array serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
