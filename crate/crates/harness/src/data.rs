//! Labeled data files for the empirical Neyman-Pearson oracle.
//!
//! One example per line: a label in {-1, +1} followed by the feature
//! values, comma separated. Lines starting with `#` are skipped; there is no
//! header.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledData {
    pub positive: Vec<Vec<f64>>,
    pub negative: Vec<Vec<f64>>,
}

impl LabeledData {
    pub fn dim(&self) -> Option<usize> {
        self.positive.first().or(self.negative.first()).map(Vec::len)
    }
}

pub fn read_labeled(path: &Path) -> Result<LabeledData> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labeled(file, path)
}

pub fn parse_labeled(reader: impl std::io::Read, path: &Path) -> Result<LabeledData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut data = LabeledData::default();
    let mut dim = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Data { path: path.to_path_buf(), line, message };
        let mut fields = record.iter();
        let label: f64 = fields
            .next()
            .ok_or_else(|| bad("empty line".into()))?
            .parse()
            .map_err(|e| bad(format!("label: {e}")))?;
        let x = fields
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("feature `{f}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if x.is_empty() {
            return Err(bad("no features".into()));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite feature {v}")));
        }
        match dim {
            None => dim = Some(x.len()),
            Some(d) if d != x.len() => {
                return Err(bad(format!("expected {d} features, found {}", x.len())))
            }
            _ => {}
        }
        if label == 1.0 {
            data.positive.push(x);
        } else if label == -1.0 {
            data.negative.push(x);
        } else {
            return Err(bad(format!("label must be -1 or +1, got {label}")));
        }
    }
    if data.positive.is_empty() || data.negative.is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            line: 0,
            message: "need at least one example of each class".into(),
        });
    }
    Ok(data)
}
