//! Covariance lags, truncated periodograms and Gaussian likelihoods from raw data.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::covariance::CovarianceSequence;
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{self, CMatrix};
use crate::poly::MatrixPseudoPolynomial;
use crate::samples::SpectralDensitySamples;
use crate::scalar::{Complex, Real};

/// Size guard for the dense exact likelihood.
pub const EXACT_LIKELIHOOD_MAX_SAMPLES: usize = 256;
pub const EXACT_LIKELIHOOD_MAX_DIM: usize = 8;

/// `N` observations of an `m`-variate process; row `t` is `y(t+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T: Real> {
    data: DMatrix<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(data: DMatrix<T>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Argument("empty time series".into()));
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} columns, expected {m}",
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(rows.len(), m, |t, i| rows[t][i]))
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    /// First `n` samples.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::Argument(format!(
                "cannot take {n} of {} samples",
                self.len()
            )));
        }
        Self::new(self.data.rows(0, n).into_owned())
    }
}

/// Biased sample covariances `R_k = (1/N) Σ_{t=k+1}^{N} y(t) y(t-k)^T`.
pub fn sample_covariances<T: Real>(y: &TimeSeries<T>, n: usize) -> Result<CovarianceSequence<T>> {
    let big_n = y.len();
    if n >= big_n {
        return Err(Error::Argument(format!(
            "max lag {n} needs more than {big_n} samples"
        )));
    }
    let m = y.dim();
    let d = y.data();
    let inv_n = T::one() / T::from_usize_(big_n);
    let mut lags = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let lead = d.rows(k, big_n - k);
        let lag = d.rows(0, big_n - k);
        lags.push(lead.transpose() * lag * inv_n);
    }
    let r0 = &lags[0];
    lags[0] = (r0 + r0.transpose()) * T::lit(0.5);
    Ok(CovarianceSequence::from_parts_unchecked(m, lags))
}

/// `Φ̂_n(e^{iθ}) = Σ_{k=-n}^{n} R_k e^{-iθk}` on the grid. Hermitian, not
/// necessarily positive.
pub fn truncated_periodogram<T: Real>(
    r: &CovarianceSequence<T>,
    grid: &Arc<FrequencyGrid<T>>,
) -> SpectralDensitySamples<T> {
    let m = r.dim();
    let values = grid
        .nodes()
        .iter()
        .map(|&theta| {
            let mut v = linalg::to_complex(r.lag(0));
            for k in 1..=r.max_lag() {
                let (s, c) = (theta * T::from_usize_(k)).sin_cos();
                let rk = r.lag(k);
                for i in 0..m {
                    for j in 0..m {
                        let sym = rk[(i, j)] + rk[(j, i)];
                        let anti = rk[(i, j)] - rk[(j, i)];
                        v[(i, j)] += Complex::new(sym * c, -anti * s);
                    }
                }
            }
            v
        })
        .collect();
    SpectralDensitySamples::from_hermitian_unchecked(Arc::clone(grid), values)
}

/// Asymptotic negative log-likelihood `∫ log det Φ + tr(Φ^{-1} Φ̂) dθ/2π`.
pub fn whittle_loglik<T: Real>(
    phi: &SpectralDensitySamples<T>,
    periodogram: &SpectralDensitySamples<T>,
) -> Result<T> {
    phi.check_compatible(periodogram)?;
    let mut terms = Vec::with_capacity(phi.len());
    for (l, (v, p)) in phi.values().iter().zip(periodogram.values()).enumerate() {
        let chol = linalg::cholesky(v).ok_or_else(|| Error::Domain {
            node: l,
            min_eigenvalue: linalg::min_eigenvalue(v).to_f64_(),
        })?;
        let inv = chol.inverse();
        terms.push(chol.logdet() + trace_product(&inv, p));
    }
    Ok(phi.grid().integrate(|l| terms[l]))
}

/// `Re tr(A B)` for Hermitian `A`, `B`.
pub(crate) fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let m = a.nrows();
    let mut acc = T::zero();
    for i in 0..m {
        for j in 0..m {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

/// Exact Gaussian negative log-likelihood
/// `(1/N) log det T_N + (1/N) y^T T_N^{-1} y` with the block-Toeplitz
/// covariance assembled from `r` (lags beyond those supplied are zero).
pub fn exact_gaussian_neglik<T: Real>(y: &TimeSeries<T>, r: &CovarianceSequence<T>) -> Result<T> {
    let (big_n, m) = (y.len(), y.dim());
    if big_n > EXACT_LIKELIHOOD_MAX_SAMPLES || m > EXACT_LIKELIHOOD_MAX_DIM {
        return Err(Error::Argument(format!(
            "exact likelihood limited to N <= {EXACT_LIKELIHOOD_MAX_SAMPLES}, m <= {EXACT_LIKELIHOOD_MAX_DIM} (got N = {big_n}, m = {m})"
        )));
    }
    if r.dim() != m {
        return Err(Error::Dimension(format!(
            "{m}-variate data with {}-variate covariances",
            r.dim()
        )));
    }
    let size = big_n * m;
    let mut toeplitz = DMatrix::<T>::zeros(size, size);
    for h in 0..big_n {
        for k in 0..big_n {
            let block = r.lag_signed(h as isize - k as isize);
            toeplitz.view_mut((h * m, k * m), (m, m)).copy_from(&block);
        }
    }
    let chol = toeplitz
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("block-Toeplitz covariance".into()))?;
    let logdet = chol
        .l_dirty()
        .diagonal()
        .iter()
        .fold(T::zero(), |a, d| a + d.ln())
        * T::lit(2.0);
    let stacked = DMatrix::from_fn(size, 1, |idx, _| y.data()[(idx / m, idx % m)]);
    let solved = chol.solve(&stacked);
    let quad = stacked.dot(&solved);
    Ok((logdet + quad) / T::from_usize_(big_n))
}

/// `∫ tr(Q Φ̂_n) dθ/2π` evaluated in coefficient space:
/// `⟨Q_0, R_0⟩ + 2 Σ_{k≥1} ⟨Q_k, R_k⟩`.
pub fn trace_pairing<T: Real>(q: &MatrixPseudoPolynomial<T>, r: &CovarianceSequence<T>) -> Result<T> {
    if q.dim() != r.dim() {
        return Err(Error::Dimension(format!(
            "pairing {}-dimensional polynomial with {}-dimensional lags",
            q.dim(),
            r.dim()
        )));
    }
    if q.degree() > r.max_lag() {
        return Err(Error::Argument(format!(
            "polynomial degree {} exceeds available lags {}",
            q.degree(),
            r.max_lag()
        )));
    }
    let mut acc = q.coeff(0).dot(r.lag(0));
    let two = T::lit(2.0);
    for k in 1..=q.degree() {
        acc += two * q.coeff(k).dot(r.lag(k));
    }
    Ok(acc)
}
