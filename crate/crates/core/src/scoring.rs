//! Partial-coherence scores, thresholding and baselines.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::samples::SpectralDensitySamples;
use crate::scalar::{Complex, Real};
use crate::support::Support;

/// `Γ = D^{1/2} Φ^{-1} D^{1/2}` per node, `D = diag(Φ)`.
pub fn partial_coherence<T: Real>(phi: &SpectralDensitySamples<T>) -> Result<SpectralDensitySamples<T>> {
    let inv = phi.inverse()?;
    let values = phi
        .values()
        .iter()
        .zip(inv.values())
        .map(|(p, pinv)| {
            let d: Vec<T> = (0..p.nrows()).map(|i| p[(i, i)].re.sqrt()).collect();
            let gamma = CMatrix::from_fn(p.nrows(), p.ncols(), |i, j| pinv[(i, j)].scale(d[i] * d[j]));
            linalg::hermitize(gamma)
        })
        .collect();
    Ok(SpectralDensitySamples::from_hermitian_unchecked(
        Arc::clone(phi.grid()),
        values,
    ))
}

/// Scores of candidate pairs `(i, j)`, `i < j`, outside the prior support.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T: Real> {
    m: usize,
    prior: Support,
    scores: BTreeMap<(usize, usize), T>,
}

impl<T: Real> ScoreMatrix<T> {
    pub fn from_fn<F: FnMut(usize, usize) -> T>(prior: &Support, mut score: F) -> Self {
        let scores = prior
            .complement_pairs()
            .map(|(i, j)| ((i, j), score(i, j)))
            .collect();
        Self {
            m: prior.dim(),
            prior: prior.clone(),
            scores,
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn prior(&self) -> &Support {
        &self.prior
    }

    /// Score of an unordered pair; `None` for prior or diagonal pairs.
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.scores.get(&key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), T)> + '_ {
        self.scores.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn max(&self) -> Option<T> {
        self.scores.values().copied().reduce(|a, b| a.max(b))
    }

    /// Dense `m × m` view; prior and diagonal cells are `None`.
    pub fn to_dense(&self) -> Vec<Vec<Option<T>>> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// `G_ij = sqrt(∫_{-π}^{π} |Γ_ij(θ)|² dθ)` for every candidate pair.
pub fn score_matrix<T: Real>(gamma: &SpectralDensitySamples<T>, prior: &Support) -> Result<ScoreMatrix<T>> {
    if gamma.dim() != prior.dim() {
        return Err(Error::Dimension(format!(
            "coherence of dimension {} with support over {}",
            gamma.dim(),
            prior.dim()
        )));
    }
    let two_pi = T::lit(2.0 * PI);
    let grid = gamma.grid();
    Ok(ScoreMatrix::from_fn(prior, |i, j| {
        let integral = grid.integrate(|l| {
            let z: Complex<T> = gamma.value(l)[(i, j)];
            z.re * z.re + z.im * z.im
        });
        (two_pi * integral).max(T::zero()).sqrt()
    }))
}

/// `Ω_σ ∪ {(i, j) : G_ij > t_r}`.
pub fn threshold<T: Real>(scores: &ScoreMatrix<T>, t_r: T) -> Result<Support> {
    if !(t_r > T::zero()) {
        return Err(Error::Argument(format!("threshold must be positive, got {t_r}")));
    }
    let mut out = scores.prior.clone();
    for ((i, j), s) in scores.iter() {
        if s > t_r {
            out.insert(i, j)?;
        }
    }
    Ok(out)
}

/// `CN_ij = |N_i ∩ N_j|` for pairs outside `omega`.
pub fn common_neighbors(omega: &Support) -> ScoreMatrix<f64> {
    let m = omega.dim();
    let adj: Vec<Vec<bool>> = (0..m)
        .map(|i| (0..m).map(|j| i != j && omega.contains(i, j)).collect())
        .collect();
    ScoreMatrix::from_fn(omega, |i, j| {
        (0..m).filter(|&k| adj[i][k] && adj[k][j]).count() as f64
    })
}

/// Detection quality over the pairs outside the prior support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if tp + fp + fn_ == 0 {
            1.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }

    pub fn false_positive_rate(&self) -> f64 {
        if self.fp + self.tn == 0 {
            0.0
        } else {
            self.fp as f64 / (self.fp + self.tn) as f64
        }
    }
}

/// Confusion counts of `predicted` against `truth` restricted to off-diagonal
/// pairs outside `prior`. Empty denominators give precision/recall 1.
pub fn score_against_truth(predicted: &Support, truth: &Support, prior: &Support) -> Result<Metrics> {
    let m = prior.dim();
    if predicted.dim() != m || truth.dim() != m {
        return Err(Error::Dimension("supports over different node sets".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (i, j) in prior.complement_pairs() {
        match (predicted.contains(i, j), truth.contains(i, j)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

/// One point of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC sweep from `t_r = ∞` (0, 0) down through every distinct score; the
/// point tagged `threshold = s` is the rule evaluated just below `s`, so the
/// last point includes every candidate.
pub fn roc_curve<T: Real>(scores: &ScoreMatrix<T>, truth: &Support) -> Result<Vec<RocPoint>> {
    if truth.dim() != scores.dim() {
        return Err(Error::Dimension("truth support over a different node set".into()));
    }
    let positives = scores.iter().filter(|((i, j), _)| truth.contains(*i, *j)).count();
    let negatives = scores.len() - positives;
    let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut ranked: Vec<(f64, bool)> = scores
        .iter()
        .map(|((i, j), s)| (s.to_f64_(), truth.contains(i, j)))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0, 0);
    let mut idx = 0;
    while idx < ranked.len() {
        let s = ranked[idx].0;
        while idx < ranked.len() && ranked[idx].0 == s {
            if ranked[idx].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        // strict rule: pairs scoring exactly s enter once t_r drops below s
        out.push(RocPoint {
            threshold: s,
            fpr: rate(fp, negatives),
            tpr: rate(tp, positives),
        });
    }
    Ok(out)
}

/// Trapezoidal area under an ROC curve.
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5)
        .sum()
}
