//! On-disk formats.
//!
//! * Dataset: `q N` header, then one row of `N` space-separated states per
//!   sample. Lines starting with `#` are comments.
//! * Labels: one component index per line, `#` comments allowed.
//! * Model: JSON, see [`ModelFile`].
//! * Scores, contacts, reports and curves: CSV with a header row, preceded by
//!   `#` comment lines.
//!
//! Every file written here starts with a comment (or, for JSON, an
//! `invocation` field) holding the command line that produced it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use mixpl::dca::{ContactMap, ScoreMatrix};
use mixpl::{ComponentParams, Dataset, MixtureModel, SpinConfiguration, TieMode};
use serde::{Deserialize, Serialize};

pub const MODEL_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = content_lines(text);
    let (_, header) = lines.next().ok_or_else(|| anyhow!("dataset is empty"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("dataset header '{header}' is not 'q N'"))?;
    let [q, n] = dims[..] else {
        bail!("dataset header '{header}' is not 'q N'");
    };
    if !(2..=256).contains(&q) || n == 0 {
        bail!("dataset header has q={q}, N={n}");
    }
    let mut samples = Vec::new();
    for (line_no, line) in lines {
        let states: Vec<u8> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().ok().filter(|&s| s < q).map(|s| s as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| anyhow!("line {line_no}: states must be integers in [0, {q})"))?;
        if states.len() != n {
            bail!("line {line_no}: expected {n} states, found {}", states.len());
        }
        samples.push(SpinConfiguration::new(states, q)?);
    }
    if samples.is_empty() {
        bail!("dataset has no samples");
    }
    Ok(Dataset::new(samples)?)
}

pub fn format_dataset(data: &Dataset, invocation: &str) -> String {
    let mut out = format!("# {invocation}\n{} {}\n", data.q(), data.n_sites());
    for s in data.samples() {
        let row: Vec<String> = s.states().iter().map(u8::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    content_lines(text)
        .map(|(n, l)| l.parse().map_err(|_| anyhow!("line {n}: '{l}' is not a label")))
        .collect()
}

pub fn format_labels(labels: &[usize], invocation: &str) -> String {
    let mut out = format!("# {invocation}\n");
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    out
}

/// Serialized mixture. Site indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    #[serde(default)]
    pub invocation: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub pi: Vec<f64>,
    pub components: Vec<ComponentFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFile {
    pub beta: f64,
    pub tie_mode: TieModeFile,
    /// `N x q` field table.
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "J")]
    pub couplings: CouplingsFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieModeFile {
    Free,
    InfiniteRange,
}

/// A scalar for infinite-range components, otherwise the nonzero blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingsFile {
    Shared(f64),
    Blocks(Vec<BlockFile>),
}

/// Coupling block of the pair `i < j`, row-major in `(s_i, s_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFile {
    pub i: usize,
    pub j: usize,
    pub block: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(m: &MixtureModel, invocation: &str) -> Self {
        Self {
            version: MODEL_VERSION,
            invocation: invocation.to_string(),
            k: m.k(),
            q: m.q(),
            n: m.n_sites(),
            pi: m.pi().to_vec(),
            components: m.components().iter().map(ComponentFile::from_params).collect(),
        }
    }

    pub fn to_model(&self) -> Result<MixtureModel> {
        if self.version != MODEL_VERSION {
            bail!("unsupported model version {}", self.version);
        }
        if self.components.len() != self.k || self.pi.len() != self.k {
            bail!(
                "model declares K={} but has {} components and {} mixing weights",
                self.k,
                self.components.len(),
                self.pi.len()
            );
        }
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| c.to_params(self.n, self.q).with_context(|| format!("component {k}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixtureModel::new(self.pi.clone(), components)?)
    }
}

impl ComponentFile {
    pub fn from_params(p: &ComponentParams) -> Self {
        let (n, q) = (p.n_sites(), p.q());
        let h = (0..n).map(|i| (0..q).map(|a| p.field(i, a)).collect()).collect();
        let (tie_mode, couplings) = match p.ir_coupling() {
            Some(c) => (TieModeFile::InfiniteRange, CouplingsFile::Shared(c)),
            None => {
                let mut blocks = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let block = p.coupling_block(i, j);
                        if block.iter().any(|&x| x != 0.0) {
                            blocks.push(BlockFile { i, j, block });
                        }
                    }
                }
                (TieModeFile::Free, CouplingsFile::Blocks(blocks))
            }
        };
        Self {
            beta: p.beta(),
            tie_mode,
            h,
            couplings,
        }
    }

    pub fn to_params(&self, n: usize, q: usize) -> Result<ComponentParams> {
        let tie = match self.tie_mode {
            TieModeFile::Free => TieMode::Free,
            TieModeFile::InfiniteRange => TieMode::InfiniteRange,
        };
        let mut p = ComponentParams::zeros(n, q, self.beta, tie)?;
        if self.h.len() != n || self.h.iter().any(|row| row.len() != q) {
            bail!("field table must be {n} x {q}");
        }
        for (i, row) in self.h.iter().enumerate() {
            for (a, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    bail!("field h[{i}][{a}] is not finite");
                }
                p.set_field(i, a, v);
            }
        }
        match (&self.couplings, tie) {
            (CouplingsFile::Shared(c), TieMode::InfiniteRange) => p.set_ir_coupling(*c)?,
            (CouplingsFile::Blocks(blocks), TieMode::Free) => {
                for b in blocks {
                    if b.i >= b.j || b.j >= n {
                        bail!("coupling pair ({}, {}) must satisfy i < j < {n}", b.i, b.j);
                    }
                    if b.block.len() != q * q || b.block.iter().any(|x| !x.is_finite()) {
                        bail!("coupling block ({}, {}) must hold {} finite values", b.i, b.j, q * q);
                    }
                    p.set_coupling_block(b.i, b.j, &b.block)?;
                }
            }
            (CouplingsFile::Shared(_), TieMode::Free) => bail!("free components need a list of blocks"),
            (CouplingsFile::Blocks(_), TieMode::InfiniteRange) => {
                bail!("infinite-range components need a scalar J")
            }
        }
        Ok(p)
    }
}

pub fn parse_model(text: &str) -> Result<MixtureModel> {
    let file: ModelFile = serde_json::from_str(text).context("malformed model file")?;
    file.to_model()
}

pub fn format_model(m: &MixtureModel, invocation: &str) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&ModelFile::from_model(m, invocation))?;
    text.push('\n');
    Ok(text)
}

/// CSV writer that emits the invocation comment before the header.
pub fn csv_text(invocation: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
    Ok(format!("# {invocation}\n{body}"))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    i: usize,
    j: usize,
    score: f64,
}

#[derive(Debug, Deserialize)]
struct ContactRow {
    i: usize,
    j: usize,
}

pub fn format_scores(s: &ScoreMatrix, invocation: &str) -> Result<String> {
    let rows = s
        .upper_pairs()
        .into_iter()
        .map(|(i, j, v)| vec![(i + 1).to_string(), (j + 1).to_string(), v.to_string()]);
    csv_text(invocation, &["i", "j", "score"], rows)
}

/// Reads an `i,j,score` file with 1-based indices. `N` is the largest index
/// present; pairs not listed score zero.
pub fn parse_scores(text: &str) -> Result<ScoreMatrix> {
    let mut pairs = Vec::new();
    let mut n = 0;
    for (row, rec) in csv_reader(text).deserialize::<ScoreRow>().enumerate() {
        let r = rec.with_context(|| format!("score row {}", row + 1))?;
        if r.i == 0 || r.j == 0 || r.i == r.j {
            bail!("score row {}: invalid pair ({}, {})", row + 1, r.i, r.j);
        }
        n = n.max(r.i).max(r.j);
        pairs.push((r.i.min(r.j) - 1, r.i.max(r.j) - 1, r.score));
    }
    if pairs.is_empty() {
        bail!("score file has no rows");
    }
    Ok(ScoreMatrix::from_pairs(n, &pairs)?)
}

/// Reads an `i,j` contact file with 1-based indices.
pub fn parse_contacts(text: &str, n: usize) -> Result<ContactMap> {
    let pairs = csv_reader(text)
        .deserialize::<ContactRow>()
        .enumerate()
        .map(|(row, rec)| {
            let r = rec.with_context(|| format!("contact row {}", row + 1))?;
            Ok((r.i, r.j))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContactMap::new(n, pairs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let text = "# made by hand\n3 4\n0 1 2 0\n\n# mid comment\n2 2 1 0\n";
        let data = parse_dataset(text).unwrap();
        assert_eq!((data.q(), data.n_sites(), data.len()), (3, 4, 2));
        let again = parse_dataset(&format_dataset(&data, "mixpl test")).unwrap();
        assert_eq!(again, data);
        assert!(format_dataset(&data, "mixpl test").starts_with("# mixpl test\n"));
    }

    #[test]
    fn dataset_errors() {
        for bad in ["", "2\n0 1\n", "2 3\n0 1\n", "2 2\n0 2\n", "2 2\n", "1 2\n0 0\n", "2 2\n0 x\n"] {
            assert!(parse_dataset(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn labels_round_trip() {
        let l = vec![0, 1, 1, 0, 2];
        assert_eq!(parse_labels(&format_labels(&l, "x")).unwrap(), l);
        assert!(parse_labels("0\n-1\n").is_err());
    }

    #[test]
    fn model_round_trip_is_exact() {
        let mut p = ComponentParams::zeros(4, 3, 0.7, TieMode::Free).unwrap();
        p.set_field(1, 2, 0.1 + 0.2);
        p.set_coupling_block(0, 3, &[1.0 / 3.0, 0.0, -2.5, 1e-17, 0.0, 0.0, 0.0, 7.0, -0.25])
            .unwrap();
        let ir = ComponentParams::zeros(4, 2, 1e-3, TieMode::InfiniteRange);
        assert!(ir.is_ok());
        let m = MixtureModel::new(vec![0.25, 0.75], vec![p.clone(), p]).unwrap();
        let text = format_model(&m, "mixpl fit").unwrap();
        assert_eq!(parse_model(&text).unwrap(), m);
        let ir = MixtureModel::uniform(vec![ComponentParams::infinite_range(5, 1e-3, 2.125).unwrap()]).unwrap();
        let text = format_model(&ir, "mixpl fit").unwrap();
        assert!(text.contains("\"J\": 2.125"));
        assert_eq!(parse_model(&text).unwrap(), ir);
    }

    #[test]
    fn model_errors() {
        let ir = MixtureModel::uniform(vec![ComponentParams::infinite_range(3, 1.0, 1.0).unwrap()]).unwrap();
        let good: serde_json::Value = serde_json::from_str(&format_model(&ir, "x").unwrap()).unwrap();
        let mutate = |f: &dyn Fn(&mut serde_json::Value)| {
            let mut v = good.clone();
            f(&mut v);
            parse_model(&v.to_string())
        };
        assert!(mutate(&|_| {}).is_ok());
        assert!(mutate(&|v| v["version"] = 9.into()).is_err());
        assert!(mutate(&|v| v["K"] = 2.into()).is_err());
        assert!(mutate(&|v| v["pi"] = serde_json::json!([0.5])).is_err());
        assert!(mutate(&|v| v["components"][0]["tie_mode"] = "free".into()).is_err());
        assert!(mutate(&|v| v["components"][0]["h"] = serde_json::json!([[0.0, 0.0]])).is_err());
        assert!(parse_model("{").is_err());
    }

    #[test]
    fn scores_and_contacts() {
        let s = ScoreMatrix::from_pairs(3, &[(0, 1, 0.5), (0, 2, -1.0), (1, 2, 2.0)]).unwrap();
        let text = format_scores(&s, "mixpl dca-score").unwrap();
        assert!(text.starts_with("# mixpl dca-score\ni,j,score\n1,2,0.5\n"));
        assert_eq!(parse_scores(&text).unwrap(), s);
        let c = parse_contacts("# truth\ni,j\n3,1\n2,3\n", 3).unwrap();
        assert!(c.contains(1, 3) && c.contains(2, 3) && !c.contains(1, 2));
        assert!(parse_contacts("i,j\n1,4\n", 3).is_err());
        assert!(parse_scores("i,j,score\n").is_err());
        assert!(parse_scores("i,j,score\n0,1,2\n").is_err());
    }
}
