//! Functionals of the regularized dual problem.
//!
//! The optimization variable is a pseudo-polynomial `Q` of degree `n` whose
//! evaluation is added to the prior inverse spectrum `Ψ^{-1}`. The smooth part
//!
//! ```text
//! f(Q) = ∫ tr(Q Φ̂_n) - log det(Ψ^{-1} + Q)   (normalized measure)
//! ```
//!
//! is minimized together with `λ h(Q)`, where `h` sums, over every
//! off-diagonal pair outside the prior support, the largest modulus among all
//! coefficient entries tied to that pair.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::covariance::CovarianceSequence;
use crate::error::{Error, Result};
use crate::estimation::{trace_pairing, trace_product};
use crate::linalg::{self, CMatrix};
use crate::poly::MatrixPseudoPolynomial;
use crate::samples::SpectralDensitySamples;
use crate::scalar::{Complex, Real};
use crate::support::Support;

/// Itakura-Saito pseudo-distance
/// `½ [∫ -log det Φ + log det Ψ + tr(Ψ^{-1}Φ) dθ/2π - m]`.
pub fn itakura_saito<T: Real>(
    phi: &SpectralDensitySamples<T>,
    psi: &SpectralDensitySamples<T>,
) -> Result<T> {
    phi.check_compatible(psi)?;
    let mut terms = Vec::with_capacity(phi.len());
    for (l, (a, b)) in phi.values().iter().zip(psi.values()).enumerate() {
        let ca = linalg::cholesky(a).ok_or_else(|| domain_error(a, l))?;
        let cb = linalg::cholesky(b).ok_or_else(|| domain_error(b, l))?;
        // tr(Ψ^{-1}Φ) - m written as tr(Ψ^{-1}(Φ - Ψ))
        terms.push(cb.logdet() - ca.logdet() + trace_product(&cb.inverse(), &(a - b)));
    }
    Ok(phi.grid().integrate(|l| terms[l]) * T::lit(0.5))
}

pub(crate) fn domain_error<T: Real>(a: &CMatrix<T>, node: usize) -> Error {
    Error::Domain {
        node,
        min_eigenvalue: linalg::min_eigenvalue(a).to_f64_(),
    }
}

/// Penalized pairs `(h, k)`, `h < k`, outside the prior support.
///
/// The group vector of a pair has length `2n + 1`:
/// `((Q_0)_{hk}, (Q_1)_{hk}..(Q_n)_{hk}, (Q_1)_{kh}..(Q_n)_{kh})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyGroups {
    m: usize,
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PenaltyGroups {
    pub fn new(m: usize, n: usize, prior_support: &Support) -> Result<Self> {
        if prior_support.dim() != m {
            return Err(Error::Dimension(format!(
                "prior support over {} nodes for m = {m}",
                prior_support.dim()
            )));
        }
        Ok(Self {
            m,
            n,
            pairs: prior_support.complement_pairs().collect(),
        })
    }

    /// No penalized pairs.
    pub fn empty(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            pairs: Vec::new(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn group_len(&self) -> usize {
        2 * self.n + 1
    }

    /// `(lag, row, col)` of each group-vector slot for pair `(h, k)`.
    pub fn slots(&self, (h, k): (usize, usize)) -> impl Iterator<Item = (usize, usize, usize)> {
        let n = self.n;
        std::iter::once((0, h, k))
            .chain((1..=n).map(move |j| (j, h, k)))
            .chain((1..=n).map(move |j| (j, k, h)))
    }

    fn check<T: Real>(&self, q: &MatrixPseudoPolynomial<T>) -> Result<()> {
        if q.dim() != self.m || q.degree() != self.n {
            return Err(Error::Dimension(format!(
                "groups for (m={}, n={}) applied to (m={}, n={})",
                self.m,
                self.n,
                q.dim(),
                q.degree()
            )));
        }
        Ok(())
    }

    pub fn group_vector<T: Real>(&self, q: &MatrixPseudoPolynomial<T>, pair: (usize, usize)) -> Vec<T> {
        self.slots(pair).map(|(lag, i, j)| q.get(lag, i, j)).collect()
    }
}

/// `h(Q) = Σ_groups ‖v_g‖_∞`.
pub fn penalty<T: Real>(q: &MatrixPseudoPolynomial<T>, groups: &PenaltyGroups) -> Result<T> {
    groups.check(q)?;
    Ok(groups
        .pairs
        .iter()
        .map(|&p| {
            groups
                .group_vector(q, p)
                .iter()
                .fold(T::zero(), |a, x| a.max(x.abs()))
        })
        .fold(T::zero(), |a, b| a + b))
}

/// Euclidean projection onto `{x : ‖x‖_1 <= radius}` (sort-based, exact).
pub fn project_l1_ball<T: Real>(v: &[T], radius: T) -> Vec<T> {
    let l1 = v.iter().fold(T::zero(), |a, x| a + x.abs());
    if l1 <= radius {
        return v.to_vec();
    }
    if radius <= T::zero() {
        return vec![T::zero(); v.len()];
    }
    let mut mags: Vec<T> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = T::zero();
    let mut shift = T::zero();
    for (idx, u) in mags.iter().enumerate() {
        cumsum += *u;
        let candidate = (cumsum - radius) / T::from_usize_(idx + 1);
        if *u > candidate {
            shift = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|x| {
            let mag = (x.abs() - shift).max(T::zero());
            if *x < T::zero() {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

/// Proximal operator of `t‖·‖_∞`: `v - P_{‖·‖_1 <= t}(v)`.
pub fn prox_linf<T: Real>(v: &[T], t: T) -> Vec<T> {
    let p = project_l1_ball(v, t);
    v.iter().zip(&p).map(|(a, b)| *a - *b).collect()
}

/// Proximal operator of `t·h` applied group-wise; unpenalized entries pass through.
pub fn prox_penalty<T: Real>(
    q: &MatrixPseudoPolynomial<T>,
    groups: &PenaltyGroups,
    t: T,
) -> Result<MatrixPseudoPolynomial<T>> {
    groups.check(q)?;
    if t < T::zero() {
        return Err(Error::Argument("prox step must be nonnegative".into()));
    }
    let mut out = q.clone();
    for &pair in &groups.pairs {
        let v = groups.group_vector(q, pair);
        let shrunk = prox_linf(&v, t);
        for ((lag, i, j), x) in groups.slots(pair).zip(shrunk) {
            out.set(lag, i, j, x);
        }
    }
    Ok(out)
}

/// Regularized dual problem data: prior inverse spectrum, sample lags, prior
/// support and penalty weight; optionally a hard support mask instead of the
/// penalty (link selection).
#[derive(Debug, Clone)]
pub struct RegularizedProblem<T: Real> {
    prior_inverse: SpectralDensitySamples<T>,
    lags: CovarianceSequence<T>,
    prior_support: Support,
    lambda: T,
    mask: Option<Support>,
    groups: PenaltyGroups,
    phases: Arc<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> RegularizedProblem<T> {
    /// Penalized problem over all coefficient entries, with `λ h` acting on
    /// the pairs outside `prior_support`.
    pub fn regularized(
        prior_inverse: SpectralDensitySamples<T>,
        lags: CovarianceSequence<T>,
        prior_support: Support,
        lambda: T,
    ) -> Result<Self> {
        if !(lambda >= T::zero()) {
            return Err(Error::Argument(format!("lambda must be >= 0, got {lambda}")));
        }
        let groups = PenaltyGroups::new(lags.dim(), lags.max_lag(), &prior_support)?;
        Self::assemble(prior_inverse, lags, prior_support, lambda, None, groups)
    }

    /// Link selection: no penalty, coefficients restricted to `target_support`.
    pub fn link_selection(
        prior_inverse: SpectralDensitySamples<T>,
        lags: CovarianceSequence<T>,
        prior_support: Support,
        target_support: Support,
    ) -> Result<Self> {
        if !prior_support.is_subset(&target_support) {
            return Err(Error::Argument(
                "prior support must be contained in the target support".into(),
            ));
        }
        let groups = PenaltyGroups::empty(lags.dim(), lags.max_lag());
        Self::assemble(
            prior_inverse,
            lags,
            prior_support,
            T::zero(),
            Some(target_support),
            groups,
        )
    }

    fn assemble(
        prior_inverse: SpectralDensitySamples<T>,
        lags: CovarianceSequence<T>,
        prior_support: Support,
        lambda: T,
        mask: Option<Support>,
        groups: PenaltyGroups,
    ) -> Result<Self> {
        let m = lags.dim();
        if prior_inverse.dim() != m || prior_support.dim() != m {
            return Err(Error::Dimension(format!(
                "prior of dimension {}, support over {}, lags of dimension {m}",
                prior_inverse.dim(),
                prior_support.dim()
            )));
        }
        let prior_inverse = prior_inverse.into_positive()?;
        let phases = Arc::new(prior_inverse.grid().phases(lags.max_lag()));
        Ok(Self {
            prior_inverse,
            lags,
            prior_support,
            lambda,
            mask,
            groups,
            phases,
        })
    }

    pub fn dim(&self) -> usize {
        self.lags.dim()
    }

    /// Degree `n` of the unknown pseudo-polynomial.
    pub fn order(&self) -> usize {
        self.lags.max_lag()
    }

    pub fn prior_inverse(&self) -> &SpectralDensitySamples<T> {
        &self.prior_inverse
    }

    pub fn lags(&self) -> &CovarianceSequence<T> {
        &self.lags
    }

    pub fn prior_support(&self) -> &Support {
        &self.prior_support
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn mask(&self) -> Option<&Support> {
        self.mask.as_ref()
    }

    pub fn groups(&self) -> &PenaltyGroups {
        &self.groups
    }

    pub fn zero(&self) -> MatrixPseudoPolynomial<T> {
        MatrixPseudoPolynomial::zeros(self.dim(), self.order())
    }

    fn check_variable(&self, q: &MatrixPseudoPolynomial<T>) -> Result<()> {
        if q.dim() != self.dim() || q.degree() != self.order() {
            return Err(Error::Dimension(format!(
                "variable of shape (m={}, n={}) for problem (m={}, n={})",
                q.dim(),
                q.degree(),
                self.dim(),
                self.order()
            )));
        }
        Ok(())
    }

    /// `Ψ^{-1} + Q` at node `l`.
    pub(crate) fn domain_value(&self, q: &MatrixPseudoPolynomial<T>, l: usize) -> CMatrix<T> {
        self.prior_inverse.value(l) + q.evaluate_with(&self.phases[l])
    }

    /// Smallest eigenvalue of `Ψ^{-1} + Q` over the grid.
    pub fn min_domain_eigenvalue(&self, q: &MatrixPseudoPolynomial<T>) -> T {
        (0..self.prior_inverse.len())
            .map(|l| linalg::min_eigenvalue(&self.domain_value(q, l)))
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
    }

    /// Objective including the penalty term.
    pub fn total_objective(&self, q: &MatrixPseudoPolynomial<T>) -> Result<T> {
        let f = smooth_objective(q, self)?;
        Ok(f + self.lambda * penalty(q, &self.groups)?)
    }
}

const NODE_CHUNK: usize = 32;

pub(crate) struct SmoothEval<T: Real> {
    pub value: T,
    pub gradient: Option<MatrixPseudoPolynomial<T>>,
}

/// Evaluates `f` (and optionally its gradient). Fails with the first node where
/// `Ψ^{-1} + Q - margin·I` is not positive definite.
pub(crate) fn evaluate_smooth<T: Real>(
    q: &MatrixPseudoPolynomial<T>,
    prob: &RegularizedProblem<T>,
    margin: T,
    with_gradient: bool,
) -> std::result::Result<SmoothEval<T>, usize> {
    let grid = prob.prior_inverse.grid();
    let (m, n) = (prob.dim(), prob.order());
    let weights = grid.weights();
    let len = grid.len();
    let lags = if with_gradient { n + 1 } else { 0 };
    // fixed chunks keep the reduction order independent of the thread count
    let chunks: Vec<std::result::Result<(Vec<T>, Vec<DMatrix<T>>), usize>> = (0..len.div_ceil(NODE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut logdets = Vec::with_capacity(NODE_CHUNK);
            let mut acc = vec![DMatrix::<T>::zeros(m, m); lags];
            for l in c * NODE_CHUNK..((c + 1) * NODE_CHUNK).min(len) {
                let x = prob.domain_value(q, l);
                if margin > T::zero() && !linalg::exceeds_margin(&x, margin) {
                    return Err(l);
                }
                let chol = linalg::cholesky(&x).ok_or(l)?;
                logdets.push(chol.logdet());
                if with_gradient {
                    let phi = chol.inverse();
                    let w = weights[l];
                    for (z, a) in prob.phases[l].iter().zip(acc.iter_mut()) {
                        // Re(Φ e^{iθk}) with phases[k] = e^{-iθk}
                        let (cw, sw) = (z.re * w, -z.im * w);
                        for (dst, v) in a.iter_mut().zip(phi.iter()) {
                            *dst += v.re * cw - v.im * sw;
                        }
                    }
                }
            }
            Ok((logdets, acc))
        })
        .collect();
    let mut logdets = Vec::with_capacity(len);
    let mut moments = vec![DMatrix::<T>::zeros(m, m); lags];
    for chunk in chunks {
        let (ld, acc) = chunk?;
        logdets.extend(ld);
        for (total, part) in moments.iter_mut().zip(&acc) {
            *total += part;
        }
    }
    let pairing = trace_pairing(q, &prob.lags).expect("shapes checked");
    let value = pairing - grid.integrate(|l| logdets[l]);
    let gradient = with_gradient.then(|| {
        let two = T::lit(2.0);
        let coeffs = moments
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let diff = prob.lags.lag(k) - c;
                if k == 0 {
                    (&diff + diff.transpose()) * T::lit(0.5)
                } else {
                    diff * two
                }
            })
            .collect();
        let g = MatrixPseudoPolynomial::new(coeffs).expect("shapes consistent");
        match &prob.mask {
            Some(mask) => g.project_support(mask).expect("mask dimension checked"),
            None => g,
        }
    });
    Ok(SmoothEval { value, gradient })
}

fn smooth_domain_error<T: Real>(
    q: &MatrixPseudoPolynomial<T>,
    prob: &RegularizedProblem<T>,
    node: usize,
) -> Error {
    domain_error(&prob.domain_value(q, node), node)
}

/// `f(Q) = ∫ tr(Q Φ̂_n) - log det(Ψ^{-1} + Q)`.
pub fn smooth_objective<T: Real>(q: &MatrixPseudoPolynomial<T>, prob: &RegularizedProblem<T>) -> Result<T> {
    prob.check_variable(q)?;
    evaluate_smooth(q, prob, T::zero(), false)
        .map(|e| e.value)
        .map_err(|node| smooth_domain_error(q, prob, node))
}

/// Gradient of `f` with respect to the coefficients under the Frobenius
/// pairing `Σ_k ⟨G_k, D_k⟩`: `G_0 = R_0 - C_0`, `G_k = 2(R_k - C_k)` where
/// `C_k` are the Fourier coefficients of `(Ψ^{-1} + Q)^{-1}`. Projected onto
/// the hard mask when one is present.
pub fn smooth_gradient<T: Real>(
    q: &MatrixPseudoPolynomial<T>,
    prob: &RegularizedProblem<T>,
) -> Result<MatrixPseudoPolynomial<T>> {
    prob.check_variable(q)?;
    evaluate_smooth(q, prob, T::zero(), true)
        .map(|e| e.gradient.expect("requested"))
        .map_err(|node| smooth_domain_error(q, prob, node))
}

/// Free coordinates of the variable: the upper triangle of `Q_0` and every
/// entry of `Q_1..Q_n`, restricted to the hard mask if present.
///
/// A symmetric `Q_0` entry `(i,j)`, `i != j`, appears twice in the Frobenius
/// pairing, so its partial derivative is twice the gradient entry.
#[derive(Debug, Clone)]
pub(crate) struct Coordinates {
    m: usize,
    n: usize,
    positions: Vec<(usize, usize, usize)>,
    groups: Vec<Vec<usize>>,
    unpenalized: Vec<usize>,
}

impl Coordinates {
    pub fn new<T: Real>(prob: &RegularizedProblem<T>) -> Self {
        let (m, n) = (prob.dim(), prob.order());
        let allowed = |i: usize, j: usize| prob.mask.as_ref().is_none_or(|s| s.contains(i, j));
        let mut positions = Vec::new();
        let mut lookup = vec![usize::MAX; (n + 1) * m * m];
        let key = |lag: usize, i: usize, j: usize| (lag * m + i) * m + j;
        for i in 0..m {
            for j in i..m {
                if allowed(i, j) {
                    lookup[key(0, i, j)] = positions.len();
                    lookup[key(0, j, i)] = positions.len();
                    positions.push((0, i, j));
                }
            }
        }
        for lag in 1..=n {
            for i in 0..m {
                for j in 0..m {
                    if allowed(i, j) {
                        lookup[key(lag, i, j)] = positions.len();
                        positions.push((lag, i, j));
                    }
                }
            }
        }
        let groups: Vec<Vec<usize>> = prob
            .groups
            .pairs()
            .iter()
            .map(|&pair| {
                prob.groups
                    .slots(pair)
                    .map(|(lag, i, j)| lookup[key(lag, i, j)])
                    .collect()
            })
            .collect();
        let mut penalized = vec![false; positions.len()];
        for g in &groups {
            for &idx in g {
                penalized[idx] = true;
            }
        }
        let unpenalized = (0..positions.len()).filter(|&p| !penalized[p]).collect();
        Self {
            m,
            n,
            positions,
            groups,
            unpenalized,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn unpenalized(&self) -> &[usize] {
        &self.unpenalized
    }

    pub fn gather<T: Real>(&self, q: &MatrixPseudoPolynomial<T>) -> Vec<T> {
        self.positions
            .iter()
            .map(|&(lag, i, j)| q.get(lag, i, j))
            .collect()
    }

    pub fn scatter<T: Real>(&self, x: &[T]) -> MatrixPseudoPolynomial<T> {
        let mut q = MatrixPseudoPolynomial::zeros(self.m, self.n);
        for (&(lag, i, j), v) in self.positions.iter().zip(x) {
            q.set(lag, i, j, *v);
        }
        q
    }

    /// Partial derivatives with respect to the free coordinates.
    pub fn free_gradient<T: Real>(&self, g: &MatrixPseudoPolynomial<T>) -> Vec<T> {
        let two = T::lit(2.0);
        self.positions
            .iter()
            .map(|&(lag, i, j)| {
                let v = g.get(lag, i, j);
                if lag == 0 && i != j {
                    two * v
                } else {
                    v
                }
            })
            .collect()
    }

    /// Group-wise prox of `t‖·‖_∞` on the penalized coordinates.
    pub fn prox<T: Real>(&self, x: &mut [T], t: T) {
        for g in &self.groups {
            let v: Vec<T> = g.iter().map(|&p| x[p]).collect();
            for (&p, val) in g.iter().zip(prox_linf(&v, t)) {
                x[p] = val;
            }
        }
    }

    pub fn penalty<T: Real>(&self, x: &[T]) -> T {
        self.groups
            .iter()
            .map(|g| g.iter().fold(T::zero(), |a, &p| a.max(x[p].abs())))
            .fold(T::zero(), |a, b| a + b)
    }
}
