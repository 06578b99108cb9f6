//! Direct-coupling-analysis evaluation: alignment ingestion, APC-corrected
//! Frobenius coupling scores and true-positive-rate curves.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::spin_models::{zero_sum_block, ComponentParams, Dataset, SpinConfiguration};

/// Residue alphabet; position in this string is the Potts state. Gaps and
/// unknown symbols share state 0.
pub const ALPHABET: &[u8; 21] = b"-ACDEFGHIKLMNPQRSTVWY";

pub const MSA_STATES: usize = 21;

pub fn residue_state(symbol: u8) -> u8 {
    let upper = symbol.to_ascii_uppercase();
    ALPHABET
        .iter()
        .position(|&c| c == upper)
        .map_or(0, |p| p as u8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsaRecord {
    pub name: String,
    pub states: Vec<u8>,
}

/// Parses aligned FASTA into named records.
pub fn read_msa_records(text: &str) -> Result<Vec<MsaRecord>> {
    let mut records: Vec<MsaRecord> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            records.push(MsaRecord {
                name: header.trim().to_string(),
                states: Vec::new(),
            });
        } else if line.trim().is_empty() {
            continue;
        } else {
            let Some(rec) = records.last_mut() else {
                return Err(Error::Format(format!(
                    "line {}: sequence data before the first '>' header",
                    lineno + 1
                )));
            };
            rec.states
                .extend(line.bytes().filter(|c| !c.is_ascii_whitespace()).map(residue_state));
        }
    }
    let first = records
        .first()
        .ok_or_else(|| Error::Format("alignment contains no records".into()))?;
    let width = first.states.len();
    if width == 0 {
        return Err(Error::Format(format!("record '{}' is empty", first.name)));
    }
    if let Some(bad) = records.iter().find(|r| r.states.len() != width) {
        return Err(Error::Format(format!(
            "record '{}' has length {}, expected {width}",
            bad.name,
            bad.states.len()
        )));
    }
    Ok(records)
}

/// Reads an aligned FASTA file into a `q = 21` dataset.
pub fn read_msa(text: &str) -> Result<Dataset> {
    let samples = read_msa_records(text)?
        .into_iter()
        .map(|r| SpinConfiguration::new(r.states, MSA_STATES))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

/// Writes a `q = 21` dataset as FASTA using the inverse alphabet mapping.
pub fn write_msa(data: &Dataset) -> Result<String> {
    if data.q() != MSA_STATES {
        return Err(Error::invalid(format!("alignments need q = 21, got {}", data.q())));
    }
    let mut out = String::new();
    for (b, s) in data.samples().iter().enumerate() {
        out.push_str(&format!(">seq{}\n", b + 1));
        out.extend(s.states().iter().map(|&x| ALPHABET[usize::from(x)] as char));
        out.push('\n');
    }
    Ok(out)
}

/// Symmetric `N x N` pair scores with zero diagonal. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    /// Builds a matrix from `(i, j, score)` triples with 0-based `i != j`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = Self::zeros(n);
        for &(i, j, v) in pairs {
            if i == j || i >= n || j >= n {
                return Err(Error::invalid(format!("pair ({i}, {j}) invalid for N={n}")));
            }
            m.set(i, j, v);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    /// `(i, j, score)` for `i < j`, 0-based, row-major order.
    pub fn upper_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push((i, j, self.get(i, j)));
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Frobenius norm of every zero-sum-gauge coupling block.
pub fn frobenius_scores(p: &ComponentParams) -> ScoreMatrix {
    let (n, q) = (p.n_sites(), p.q());
    let mut out = ScoreMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let (gauged, _, _) = zero_sum_block(&p.coupling_block(i, j), q);
            out.set(i, j, gauged.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
    }
    out
}

/// Average product correction `S_ij = F_ij - F_i F_j / F`, with means over
/// off-diagonal entries. An all-zero input is returned unchanged.
pub fn apc(f: &ScoreMatrix) -> ScoreMatrix {
    let n = f.n;
    if n < 2 {
        return f.clone();
    }
    let row_means: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| f.get(i, j)).sum::<f64>() / (n - 1) as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    if grand == 0.0 {
        return f.clone();
    }
    let mut out = ScoreMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            out.set(i, j, f.get(i, j) - row_means[i] * row_means[j] / grand);
        }
    }
    out
}

/// APC-corrected Frobenius coupling scores.
pub fn coupling_scores(p: &ComponentParams) -> ScoreMatrix {
    apc(&frobenius_scores(p))
}

/// True contacts as 1-based residue pairs `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactMap {
    n: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl ContactMap {
    /// Pairs are 1-based; `(j, i)` is stored as `(i, j)` and repeats collapse.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == 0 || i == j || j > n {
                return Err(Error::invalid(format!("contact ({a}, {b}) invalid for N={n}")));
            }
            set.insert((i, j));
        }
        Ok(Self { n, pairs: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i.min(j), i.max(j)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.pairs.iter()
    }
}

/// Pairs with `j - i > min_sep`, ranked by descending score (ties by `(i, j)`),
/// 1-based.
pub fn ranked_pairs(s: &ScoreMatrix, min_sep: usize) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = s
        .upper_pairs()
        .into_iter()
        .filter(|&(i, j, _)| j - i > min_sep)
        .map(|(i, j, v)| (i + 1, j + 1, v))
        .collect();
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    pairs
}

/// `(r, |top-r ∩ truth| / r)` for every rank `r` of [`ranked_pairs`].
pub fn tp_rate_curve(s: &ScoreMatrix, truth: &ContactMap, min_sep: usize) -> Result<Vec<(usize, f64)>> {
    if s.n() != truth.n() {
        return Err(Error::invalid(format!(
            "scores cover N={} but contacts N={}",
            s.n(),
            truth.n()
        )));
    }
    let mut hits = 0usize;
    Ok(ranked_pairs(s, min_sep)
        .into_iter()
        .enumerate()
        .map(|(r, (i, j, _))| {
            hits += usize::from(truth.contains(i, j));
            (r + 1, hits as f64 / (r + 1) as f64)
        })
        .collect())
}
