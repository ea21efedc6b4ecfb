//! Text and JSON encodings of [`DistanceMatrix`].
//!
//! Text layout, tab separated:
//!
//! ```text
//! ncd-matrix  <compressor>  <n>  <id_1> ... <id_n>
//! @params     <backend parameters>
//! @truncated  <id> ...            (optional)
//! <v_11> ... <v_1n>
//! ...
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Values are written in
//! the shortest form that parses back to the identical `f64`.

use std::fmt::Write as _;

use super::DistanceMatrix;
use crate::compressor::CompressorKind;
use crate::{Error, Result};

const MAGIC: &str = "ncd-matrix";

impl DistanceMatrix {
    pub fn to_text(&self) -> Result<String> {
        for id in &self.labels {
            if id.is_empty() || id.contains(['\t', '\n', '\r']) {
                return Err(Error::Corpus(format!("sample id {id:?} cannot be written to a matrix file")));
            }
        }
        let mut out = String::new();
        write!(out, "{MAGIC}\t{}\t{}", self.compressor, self.len()).unwrap();
        for id in &self.labels {
            write!(out, "\t{id}").unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "@params\t{}", self.params).unwrap();
        if !self.truncated.is_empty() {
            writeln!(out, "@truncated\t{}", self.truncated.join("\t")).unwrap();
        }
        for row in &self.values {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join("\t")).unwrap();
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::MatrixFormat { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.first() != Some(&MAGIC) {
            return Err(err(hline, format!("expected `{MAGIC}` header")));
        }
        if fields.len() < 3 {
            return Err(err(hline, "header needs compressor and size".into()));
        }
        let compressor: CompressorKind = fields[1].parse().map_err(|e: Error| err(hline, e.to_string()))?;
        let n: usize = fields[2].parse().map_err(|_| err(hline, format!("invalid size `{}`", fields[2])))?;
        let labels: Vec<String> = fields[3..].iter().map(|s| s.to_string()).collect();
        if labels.len() != n {
            return Err(err(hline, format!("header declares {n} ids but lists {}", labels.len())));
        }

        let mut params = compressor.params().to_string();
        let mut truncated = Vec::new();
        let mut values = Vec::with_capacity(n);
        for (lineno, line) in lines {
            if let Some(rest) = line.strip_prefix("@params\t") {
                params = rest.to_string();
                continue;
            }
            if let Some(rest) = line.strip_prefix("@truncated\t") {
                truncated.extend(rest.split('\t').map(str::to_string));
                continue;
            }
            if line.starts_with('@') {
                return Err(err(lineno, format!("unknown directive `{line}`")));
            }
            if values.len() == n {
                return Err(err(lineno, format!("more than {n} rows")));
            }
            let row = line
                .split('\t')
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(lineno, format!("invalid value `{cell}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != n {
                return Err(err(lineno, format!("expected {n} values, found {}", row.len())));
            }
            values.push(row);
        }
        if values.len() != n {
            return Err(err(text.lines().count().max(1), format!("expected {n} rows, found {}", values.len())));
        }

        let mut matrix =
            DistanceMatrix::from_values(labels, values, compressor).map_err(|e| err(hline, e.to_string()))?;
        matrix.params = params;
        matrix.truncated = truncated;
        Ok(matrix)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let raw: DistanceMatrix = serde_json::from_str(json)?;
        let mut matrix = DistanceMatrix::from_values(raw.labels, raw.values, raw.compressor)?;
        matrix.params = raw.params;
        matrix.truncated = raw.truncated;
        Ok(matrix)
    }
}
