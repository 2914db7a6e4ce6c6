//! Normalized compression distance from sketches, and all-pairs matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sketch::DeltaSketch;

const NAME_WIDTH: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NcdValue {
    pub raw: f64,
    /// `raw` clamped into `[0, 1]`.
    pub clamped: f64,
}

/// `(δ(S,T) − min{δ(S), δ(T)}) / max{δ(S), δ(T)}`.
pub fn ncd_from_estimates(ds: f64, dt: f64, dst: f64) -> Result<NcdValue> {
    let (lo, hi) = if ds <= dt { (ds, dt) } else { (dt, ds) };
    if hi <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let raw = (dst - lo) / hi;
    Ok(NcdValue {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

pub fn ncd_from_sketches(a: &DeltaSketch, b: &DeltaSketch) -> Result<NcdValue> {
    let dst = a.union_estimate(b)?;
    ncd_from_estimates(a.estimate(), b.estimate(), dst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub names: Vec<String>,
    /// Clamped distances with a zero diagonal.
    pub values: Vec<Vec<f64>>,
    pub raw: Vec<Vec<f64>>,
}

fn phylip_name(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_whitespace() || c.is_control() { '_' } else { c })
        .take(NAME_WIDTH)
        .collect();
    let pad = NAME_WIDTH - cleaned.chars().count();
    format!("{cleaned}{}", " ".repeat(pad))
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Square PHYLIP: the count, then one row per name padded or cut to 10 characters.
    pub fn to_phylip(&self) -> String {
        let mut out = format!("{}\n", self.len());
        for (name, row) in self.names.iter().zip(&self.values) {
            out.push_str(&phylip_name(name));
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    /// One line per unordered pair: name, name, raw, clamped.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("name_a\tname_b\traw\tclamped\n");
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                out.push_str(&format!(
                    "{}\t{}\t{:.6}\t{:.6}\n",
                    self.names[i], self.names[j], self.raw[i][j], self.values[i][j]
                ));
            }
        }
        out
    }
}

pub fn write_phylip(m: &DistanceMatrix) -> String {
    m.to_phylip()
}

/// Parses square PHYLIP text. Raw values are not stored in the format, so
/// `raw` mirrors `values`.
pub fn read_phylip(text: &str) -> Result<DistanceMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let n: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| Error::format("missing PHYLIP size line"))?;
    let mut names = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(format!("missing PHYLIP row {}", i + 1)))?;
        let split = line
            .char_indices()
            .nth(NAME_WIDTH)
            .map_or(line.len(), |(at, _)| at);
        let (name, rest) = line.split_at(split);
        let row = rest
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| Error::format(format!("bad distance {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(Error::format(format!("row {} has {} values, expected {n}", i + 1, row.len())));
        }
        names.push(name.trim_end().to_string());
        values.push(row);
    }
    Ok(DistanceMatrix {
        names,
        raw: values.clone(),
        values,
    })
}

/// All-pairs NCD. Each pair costs one register merge; pairs run in parallel.
pub fn ncd_matrix(sketches: &[DeltaSketch], names: &[String]) -> Result<DistanceMatrix> {
    if sketches.len() != names.len() {
        return Err(Error::invalid(format!(
            "{} sketches but {} names",
            sketches.len(),
            names.len()
        )));
    }
    if let Some(first) = sketches.first() {
        for s in &sketches[1..] {
            if let Some(field) = first.params().mismatch(s.params()) {
                return Err(Error::ParameterMismatch { field });
            }
        }
    }
    let n = sketches.len();
    let singles: Vec<f64> = sketches.par_iter().map(DeltaSketch::estimate).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let computed = pairs
        .par_iter()
        .map(|&(i, j)| {
            let dst = sketches[i].union_estimate(&sketches[j])?;
            ncd_from_estimates(singles[i], singles[j], dst)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![vec![0.0; n]; n];
    let mut raw = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(computed) {
        values[i][j] = v.clamped;
        values[j][i] = v.clamped;
        raw[i][j] = v.raw;
        raw[j][i] = v.raw;
    }
    Ok(DistanceMatrix {
        names: names.to_vec(),
        values,
        raw,
    })
}
