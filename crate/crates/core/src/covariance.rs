use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::MatrixPseudoPolynomial;
use crate::scalar::Real;

/// Covariance lags `R_0..R_n`, with `R_{-k} = R_k^T` implied.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSequence<T: Real> {
    m: usize,
    lags: Vec<DMatrix<T>>,
}

impl<T: Real> CovarianceSequence<T> {
    /// `R_0` is symmetrized and must be positive semidefinite (up to round-off).
    pub fn new(mut lags: Vec<DMatrix<T>>) -> Result<Self> {
        let m = lags
            .first()
            .ok_or_else(|| Error::Argument("covariance sequence needs R_0".into()))?
            .nrows();
        for (k, r) in lags.iter().enumerate() {
            if r.nrows() != m || r.ncols() != m {
                return Err(Error::Dimension(format!(
                    "lag {k} is {}x{}, expected {m}x{m}",
                    r.nrows(),
                    r.ncols()
                )));
            }
        }
        let r0 = &mut lags[0];
        let sym = (&*r0 + r0.transpose()) * T::lit(0.5);
        *r0 = sym;
        let scale = r0.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        let min_eig = linalg::min_eigenvalue(&linalg::to_complex(r0));
        if min_eig < -(T::lit(1e-10) * scale.max(T::one())) {
            return Err(Error::Argument(format!(
                "R_0 is not positive semidefinite (min eigenvalue {min_eig})"
            )));
        }
        Ok(Self { m, lags })
    }

    pub(crate) fn from_parts_unchecked(m: usize, lags: Vec<DMatrix<T>>) -> Self {
        Self { m, lags }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Largest lag `n`.
    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    pub fn lags(&self) -> &[DMatrix<T>] {
        &self.lags
    }

    pub fn lag(&self, k: usize) -> &DMatrix<T> {
        &self.lags[k]
    }

    /// `R_k` for any integer `k`, zero beyond the stored range.
    pub fn lag_signed(&self, k: isize) -> DMatrix<T> {
        let a = k.unsigned_abs();
        if a > self.max_lag() {
            DMatrix::zeros(self.m, self.m)
        } else if k >= 0 {
            self.lags[a].clone()
        } else {
            self.lags[a].transpose()
        }
    }

    /// First `n + 1` lags.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.max_lag() {
            return Err(Error::Argument(format!(
                "cannot truncate {} lags to {n}",
                self.max_lag()
            )));
        }
        Ok(Self {
            m: self.m,
            lags: self.lags[..=n].to_vec(),
        })
    }

    /// The lags as pseudo-polynomial coefficients; its evaluation is the
    /// truncated periodogram.
    pub fn as_polynomial(&self) -> MatrixPseudoPolynomial<T> {
        MatrixPseudoPolynomial::new(self.lags.clone()).expect("shapes validated")
    }
}
