//! On-disk formats: JSON for models, supports and coefficients, CSV for time
//! series, spectral samples and scores. All indices are zero-based.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use plp_core::linalg::CMatrix;
use plp_core::simulate::InverseSpectrum;
use plp_core::{
    Complex, FrequencyGrid, GroundTruthModel, MatrixPseudoPolynomial, ScoreMatrix, SpectralDensitySamples,
    Support, TimeSeries,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const INDEX_BASE: usize = 0;

fn check_index_base(base: usize, what: &str) -> CliResult<()> {
    if base != INDEX_BASE {
        return Err(CliError::Input(format!("{what}: index_base must be 0, found {base}")));
    }
    Ok(())
}

fn matrix_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], m: usize, what: &str) -> CliResult<DMatrix<f64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Input(format!("{what}: expected a {m}x{m} matrix")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

/// `Q_0, ..., Q_n` as row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub m: usize,
    pub n: usize,
    pub index_base: usize,
    pub coefficients: Vec<Vec<Vec<f64>>>,
}

impl PolyJson {
    pub fn from_poly(q: &MatrixPseudoPolynomial<f64>) -> Self {
        Self {
            m: q.dim(),
            n: q.degree(),
            index_base: INDEX_BASE,
            coefficients: q.coeffs().iter().map(matrix_rows).collect(),
        }
    }

    pub fn to_poly(&self) -> CliResult<MatrixPseudoPolynomial<f64>> {
        check_index_base(self.index_base, "polynomial")?;
        if self.coefficients.len() != self.n + 1 {
            return Err(CliError::Input(format!(
                "polynomial: n = {} needs {} coefficients, found {}",
                self.n,
                self.n + 1,
                self.coefficients.len()
            )));
        }
        let coeffs = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| matrix_from_rows(c, self.m, &format!("polynomial coefficient {k}")))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(MatrixPseudoPolynomial::new(coeffs)?)
    }
}

/// Off-diagonal edges `i < j`; the diagonal is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportJson {
    pub m: usize,
    pub index_base: usize,
    pub edges: Vec<[usize; 2]>,
}

impl SupportJson {
    pub fn from_support(s: &Support) -> Self {
        Self {
            m: s.dim(),
            index_base: INDEX_BASE,
            edges: s.edges().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn to_support(&self) -> CliResult<Support> {
        check_index_base(self.index_base, "support")?;
        Ok(Support::from_pairs(self.m, self.edges.iter().map(|e| (e[0], e[1])))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InverseJson {
    PseudoPolynomial {
        polynomial: PolyJson,
    },
    /// `y(t) = Σ_k F_k y(t-k) + e(t)`, coefficients `F_1, ..., F_p`.
    Autoregressive {
        m: usize,
        p: usize,
        index_base: usize,
        coefficients: Vec<Vec<Vec<f64>>>,
    },
    MovingAverage {
        numerator: PolyJson,
        ma: Vec<f64>,
    },
    Sum {
        base: Box<InverseJson>,
        increment: PolyJson,
    },
}

impl InverseJson {
    pub fn from_inverse(s: &InverseSpectrum<f64>) -> Self {
        match s {
            InverseSpectrum::PseudoPolynomial(p) => Self::PseudoPolynomial {
                polynomial: PolyJson::from_poly(p),
            },
            InverseSpectrum::Autoregressive(f) => Self::Autoregressive {
                m: f.first().map_or(0, |a| a.nrows()),
                p: f.len(),
                index_base: INDEX_BASE,
                coefficients: f.iter().map(matrix_rows).collect(),
            },
            InverseSpectrum::MovingAverage { numerator, ma } => Self::MovingAverage {
                numerator: PolyJson::from_poly(numerator),
                ma: ma.clone(),
            },
            InverseSpectrum::Sum(base, q) => Self::Sum {
                base: Box::new(Self::from_inverse(base)),
                increment: PolyJson::from_poly(q),
            },
        }
    }

    pub fn to_inverse(&self) -> CliResult<InverseSpectrum<f64>> {
        Ok(match self {
            Self::PseudoPolynomial { polynomial } => InverseSpectrum::PseudoPolynomial(polynomial.to_poly()?),
            Self::Autoregressive {
                m,
                p,
                index_base,
                coefficients,
            } => {
                check_index_base(*index_base, "autoregressive model")?;
                if coefficients.len() != *p || *p == 0 {
                    return Err(CliError::Input(format!(
                        "autoregressive model: p = {p} needs {p} coefficients (p >= 1), found {}",
                        coefficients.len()
                    )));
                }
                InverseSpectrum::Autoregressive(
                    coefficients
                        .iter()
                        .enumerate()
                        .map(|(k, c)| matrix_from_rows(c, *m, &format!("autoregressive coefficient {}", k + 1)))
                        .collect::<CliResult<_>>()?,
                )
            }
            Self::MovingAverage { numerator, ma } => InverseSpectrum::MovingAverage {
                numerator: numerator.to_poly()?,
                ma: ma.clone(),
            },
            Self::Sum { base, increment } => {
                InverseSpectrum::Sum(Box::new(base.to_inverse()?), increment.to_poly()?)
            }
        })
    }
}

/// A model file: inverse spectrum plus its declared support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub inverse: InverseJson,
    pub support: SupportJson,
    #[serde(default)]
    pub seed: u64,
}

impl ModelJson {
    pub fn from_model(model: &GroundTruthModel<f64>) -> Self {
        Self {
            inverse: InverseJson::from_inverse(&model.inverse),
            support: SupportJson::from_support(&model.support),
            seed: model.seed,
        }
    }

    pub fn to_model(&self) -> CliResult<GroundTruthModel<f64>> {
        let inverse = self.inverse.to_inverse()?;
        let support = self.support.to_support()?;
        if support.dim() != inverse.dim() {
            return Err(CliError::Input(format!(
                "model: support over {} nodes for a model of dimension {}",
                support.dim(),
                inverse.dim()
            )));
        }
        Ok(GroundTruthModel {
            inverse,
            support,
            seed: self.seed,
        })
    }
}

// ------------------------------------------------------------------ io

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> CliResult<D> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn csv_bytes<F>(header: Option<&[&str]>, mut fill: F) -> Vec<u8>
where
    F: FnMut(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h).expect("in-memory write");
    }
    fill(&mut w).expect("in-memory write");
    w.into_inner().expect("in-memory write")
}

fn parse_f64(field: &str, path: &Path, line: u64) -> CliResult<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{}: line {line}: not a number: {field:?}", path.display())))
}

/// Headerless `N x m` CSV.
pub fn write_time_series(path: &Path, y: &TimeSeries<f64>) -> CliResult<()> {
    let data = y.data();
    let bytes = csv_bytes(None, |w| {
        for t in 0..data.nrows() {
            w.write_record(data.row(t).iter().map(|x| x.to_string()))?;
        }
        Ok(())
    });
    write_atomic(path, &bytes)
}

pub fn read_time_series(path: &Path) -> CliResult<TimeSeries<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push(rec.iter().map(|f| parse_f64(f, path, line)).collect::<CliResult<_>>()?);
    }
    let m = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() || m == 0 {
        return Err(CliError::Input(format!("{}: empty time series", path.display())));
    }
    let flat: Vec<f64> = rows.concat();
    Ok(TimeSeries::new(DMatrix::from_row_slice(rows.len(), m, &flat))?)
}

const SAMPLE_HEADER: [&str; 6] = ["node_index", "theta", "i", "j", "re", "im"];

/// One row per node and matrix entry.
pub fn write_samples(path: &Path, s: &SpectralDensitySamples<f64>) -> CliResult<()> {
    let m = s.dim();
    let nodes = s.grid().nodes();
    let bytes = csv_bytes(Some(&SAMPLE_HEADER), |w| {
        for (l, value) in s.values().iter().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    let z = value[(i, j)];
                    w.write_record([
                        l.to_string(),
                        nodes[l].to_string(),
                        i.to_string(),
                        j.to_string(),
                        z.re.to_string(),
                        z.im.to_string(),
                    ])?;
                }
            }
        }
        Ok(())
    });
    write_atomic(path, &bytes)
}

pub fn read_samples(path: &Path) -> CliResult<SpectralDensitySamples<f64>> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != SAMPLE_HEADER {
        return Err(bad(format!("expected header {}", SAMPLE_HEADER.join(","))));
    }
    let mut entries: Vec<(usize, f64, usize, usize, Complex<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let index = |k: usize| -> CliResult<usize> {
            rec[k]
                .trim()
                .parse()
                .map_err(|_| bad(format!("line {line}: bad {} {:?}", SAMPLE_HEADER[k], &rec[k])))
        };
        entries.push((
            index(0)?,
            parse_f64(&rec[1], path, line)?,
            index(2)?,
            index(3)?,
            Complex::new(parse_f64(&rec[4], path, line)?, parse_f64(&rec[5], path, line)?),
        ));
    }
    let len = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let m = entries.iter().map(|e| e.2.max(e.3) + 1).max().unwrap_or(0);
    if len < 2 || entries.len() != len * m * m {
        return Err(bad(format!(
            "expected one row per node and entry, found {} rows for {len} nodes of size {m}",
            entries.len()
        )));
    }
    let grid = Arc::new(FrequencyGrid::<f64>::new(len)?);
    let mut values = vec![CMatrix::<f64>::zeros(m, m); len];
    let mut seen = vec![false; len * m * m];
    for (l, theta, i, j, z) in entries {
        if (theta - grid.nodes()[l]).abs() > 1e-9 {
            return Err(bad(format!("node {l} has theta {theta}, expected {}", grid.nodes()[l])));
        }
        let slot = (l * m + i) * m + j;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(bad(format!("duplicate entry ({i},{j}) at node {l}")));
        }
        values[l][(i, j)] = z;
    }
    Ok(SpectralDensitySamples::new(grid, values)?)
}

const SCORE_HEADER: [&str; 3] = ["i", "j", "score"];

/// Candidate pairs only.
pub fn write_scores(path: &Path, scores: &ScoreMatrix<f64>) -> CliResult<()> {
    let bytes = csv_bytes(Some(&SCORE_HEADER), |w| {
        for ((i, j), s) in scores.iter() {
            w.write_record([i.to_string(), j.to_string(), s.to_string()])?;
        }
        Ok(())
    });
    write_atomic(path, &bytes)
}

pub fn read_scores(path: &Path, prior: &Support) -> CliResult<ScoreMatrix<f64>> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut map = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(bad(format!("line {line}: expected 3 fields")));
        }
        let i: usize = rec[0].trim().parse().map_err(|_| bad(format!("line {line}: bad i")))?;
        let j: usize = rec[1].trim().parse().map_err(|_| bad(format!("line {line}: bad j")))?;
        map.insert((i.min(j), i.max(j)), parse_f64(&rec[2], path, line)?);
    }
    let mut missing = None;
    let scores = ScoreMatrix::from_fn(prior, |i, j| {
        map.remove(&(i, j)).unwrap_or_else(|| {
            missing.get_or_insert((i, j));
            f64::NAN
        })
    });
    if let Some((i, j)) = missing {
        return Err(bad(format!("no score for candidate pair ({i},{j})")));
    }
    if let Some(((i, j), _)) = map.into_iter().next() {
        return Err(bad(format!("pair ({i},{j}) is not a candidate")));
    }
    Ok(scores)
}
