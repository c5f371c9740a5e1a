//! Window-by-window positive link prediction with an accumulating prior.

use crate::error::{Error, Result};
use crate::estimation::{sample_covariances, TimeSeries};
use crate::objective::RegularizedProblem;
use crate::poly::MatrixPseudoPolynomial;
use crate::samples::SpectralDensitySamples;
use crate::scalar::Real;
use crate::scoring::{partial_coherence, score_matrix, threshold, ScoreMatrix};
use crate::solver::{recover_primal, solve_regularized, SolverConfig, SolverReport};
use crate::support::Support;

/// Outcome of one window.
#[derive(Debug, Clone)]
pub struct WindowRecord<T: Real> {
    pub increment: MatrixPseudoPolynomial<T>,
    pub report: SolverReport<T>,
    pub scores: ScoreMatrix<T>,
    pub support: Support,
}

#[derive(Debug, Clone)]
pub struct RecursiveState<T: Real> {
    window: usize,
    order: usize,
    base_inverse: SpectralDensitySamples<T>,
    base_degree: usize,
    base_support: Support,
    current_inverse: SpectralDensitySamples<T>,
    accumulated: MatrixPseudoPolynomial<T>,
    support: Support,
    history: Vec<WindowRecord<T>>,
}

impl<T: Real> RecursiveState<T> {
    /// Starts from `Φ_0^{-1}` (of McMillan degree `base_degree`) with known
    /// support `Ω_0`; every increment has degree `order`.
    pub fn new(
        base_inverse: SpectralDensitySamples<T>,
        base_degree: usize,
        base_support: Support,
        order: usize,
    ) -> Result<Self> {
        if base_support.dim() != base_inverse.dim() {
            return Err(Error::Dimension(format!(
                "support over {} nodes for a prior of dimension {}",
                base_support.dim(),
                base_inverse.dim()
            )));
        }
        let base_inverse = base_inverse.into_positive()?;
        let m = base_inverse.dim();
        Ok(Self {
            window: 0,
            order,
            current_inverse: base_inverse.clone(),
            base_inverse,
            base_degree,
            support: base_support.clone(),
            base_support,
            accumulated: MatrixPseudoPolynomial::zeros(m, order),
            history: Vec::new(),
        })
    }

    /// Number of windows processed.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_inverse(&self) -> &SpectralDensitySamples<T> {
        &self.base_inverse
    }

    pub fn base_support(&self) -> &Support {
        &self.base_support
    }

    pub fn base_degree(&self) -> usize {
        self.base_degree
    }

    /// `Φ_k^{-1}` accumulated one increment at a time.
    pub fn current_inverse(&self) -> &SpectralDensitySamples<T> {
        &self.current_inverse
    }

    /// `Σ_l Q_l`.
    pub fn accumulated(&self) -> &MatrixPseudoPolynomial<T> {
        &self.accumulated
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn history(&self) -> &[WindowRecord<T>] {
        &self.history
    }

    pub fn increments(&self) -> impl Iterator<Item = &MatrixPseudoPolynomial<T>> {
        self.history.iter().map(|r| &r.increment)
    }

    /// Upper bound on the McMillan degree of `Φ_k`.
    pub fn degree_bound(&self) -> usize {
        self.base_degree + self.accumulated.effective_degree()
    }

    /// Same state with the latest window's scores thresholded at `t_r`.
    pub fn rethreshold(&self, t_r: T) -> Result<Self> {
        let mut out = self.clone();
        let last = out
            .history
            .last_mut()
            .ok_or_else(|| Error::Argument("no window has been processed".into()))?;
        last.support = threshold(&last.scores, t_r)?;
        out.support = last.support.clone();
        Ok(out)
    }
}

/// Processes one window: estimates lags, solves with `Φ_k` as prior and
/// `Ω̂_k` as prior support, scores and thresholds into `Ω̂_{k+1}`.
pub fn step<T: Real>(
    mut state: RecursiveState<T>,
    y: &TimeSeries<T>,
    lambda: T,
    t_r: T,
    cfg: &SolverConfig,
) -> Result<RecursiveState<T>> {
    let window = state.window + 1;
    let wrap = |e: Error| Error::Window {
        window,
        source: Box::new(e),
    };
    if y.dim() != state.base_inverse.dim() {
        return Err(wrap(Error::Dimension(format!(
            "window of dimension {} for a model of dimension {}",
            y.dim(),
            state.base_inverse.dim()
        ))));
    }
    let lags = sample_covariances(y, state.order).map_err(wrap)?;
    let prob = RegularizedProblem::regularized(
        state.current_inverse.clone(),
        lags,
        state.support.clone(),
        lambda,
    )
    .map_err(wrap)?;
    let (q, report) = solve_regularized(&prob, cfg, None).map_err(wrap)?;
    let phi = recover_primal(&q, &state.current_inverse).map_err(wrap)?;
    let gamma = partial_coherence(&phi).map_err(wrap)?;
    let scores = score_matrix(&gamma, &state.support).map_err(wrap)?;
    let support = threshold(&scores, t_r).map_err(wrap)?;

    state.current_inverse = state.current_inverse.add_polynomial(&q).map_err(wrap)?;
    state.accumulated = state.accumulated.add(&q).map_err(wrap)?;
    debug_assert!(state.support.is_subset(&support));
    assert!(
        state.degree_bound() <= state.base_degree + state.order,
        "degree bound exceeded"
    );
    state.support = support.clone();
    state.window = window;
    state.history.push(WindowRecord {
        increment: q,
        report,
        scores,
        support,
    });
    Ok(state)
}

/// `Φ_0^{-1} + evaluate(Σ_l Q_l)`, the prior seen by the next window.
pub fn flatten<T: Real>(state: &RecursiveState<T>) -> SpectralDensitySamples<T> {
    state
        .base_inverse
        .add_polynomial(&state.accumulated)
        .expect("shapes fixed at construction")
}
