//! Hermitian matrix-valued functions sampled on a [`FrequencyGrid`].

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{self, CMatrix};
use crate::poly::MatrixPseudoPolynomial;
use crate::scalar::{Complex, Real};

#[derive(Debug, Clone)]
pub struct SpectralDensitySamples<T: Real> {
    m: usize,
    grid: Arc<FrequencyGrid<T>>,
    values: Vec<CMatrix<T>>,
    positive: bool,
}

fn hermitian_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::default_epsilon() * T::lit(1e3))
}

impl<T: Real> SpectralDensitySamples<T> {
    /// Wrap per-node values. Each must be square of a common size and
    /// Hermitian to within `1e-12` relative; the stored copies are exactly
    /// Hermitian.
    pub fn new(grid: Arc<FrequencyGrid<T>>, values: Vec<CMatrix<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} samples for a {}-node grid",
                values.len(),
                grid.len()
            )));
        }
        let m = values[0].nrows();
        let tol = hermitian_tolerance::<T>();
        for (l, v) in values.iter().enumerate() {
            if v.nrows() != m || v.ncols() != m {
                return Err(Error::Dimension(format!(
                    "sample {l} is {}x{}, expected {m}x{m}",
                    v.nrows(),
                    v.ncols()
                )));
            }
            if linalg::hermitian_defect(v) > tol {
                return Err(Error::Argument(format!("sample {l} is not Hermitian")));
            }
        }
        let values = values.into_iter().map(linalg::hermitize).collect();
        Ok(Self {
            m,
            grid,
            values,
            positive: false,
        })
    }

    pub(crate) fn from_hermitian_unchecked(
        grid: Arc<FrequencyGrid<T>>,
        values: Vec<CMatrix<T>>,
    ) -> Self {
        let m = values.first().map_or(0, |v| v.nrows());
        Self {
            m,
            grid,
            values,
            positive: false,
        }
    }

    /// The same matrix at every node.
    pub fn constant(grid: Arc<FrequencyGrid<T>>, value: &DMatrix<T>) -> Result<Self> {
        let c = linalg::to_complex(value);
        Self::new(Arc::clone(&grid), vec![c; grid.len()])
    }

    pub fn identity(grid: Arc<FrequencyGrid<T>>, m: usize) -> Self {
        let id = CMatrix::<T>::identity(m, m);
        let len = grid.len();
        Self {
            m,
            grid,
            values: vec![id; len],
            positive: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[CMatrix<T>] {
        &self.values
    }

    pub fn value(&self, node: usize) -> &CMatrix<T> {
        &self.values[node]
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    /// Smallest eigenvalue over all nodes, with the node where it occurs.
    pub fn min_eigenvalue(&self) -> (usize, T) {
        let mut best = (0, T::max_value().unwrap_or_else(T::one));
        for (l, v) in self.values.iter().enumerate() {
            let e = linalg::min_eigenvalue(v);
            if e < best.1 {
                best = (l, e);
            }
        }
        best
    }

    /// Verify positive definiteness at every node and flag the samples.
    pub fn into_positive(mut self) -> Result<Self> {
        if !self.positive {
            for (l, v) in self.values.iter().enumerate() {
                if linalg::cholesky(v).is_none() {
                    return Err(Error::Domain {
                        node: l,
                        min_eigenvalue: linalg::min_eigenvalue(v).to_f64_(),
                    });
                }
            }
            self.positive = true;
        }
        Ok(self)
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::Dimension(format!(
                "spectra of dimension {} and {}",
                self.m, other.m
            )));
        }
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Dimension("spectra sampled on different grids".into()));
        }
        Ok(())
    }

    /// Per-node inverse. Fails with the first non-positive node.
    pub fn inverse(&self) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(l, v)| {
                linalg::inverse_hpd(v).ok_or_else(|| Error::Domain {
                    node: l,
                    min_eigenvalue: linalg::min_eigenvalue(v).to_f64_(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m: self.m,
            grid: Arc::clone(&self.grid),
            values,
            positive: true,
        })
    }

    /// Node-wise `self + P(e^{iθ})`.
    pub fn add_polynomial(&self, p: &MatrixPseudoPolynomial<T>) -> Result<Self> {
        if p.dim() != self.m {
            return Err(Error::Dimension(format!(
                "adding a {}-dimensional polynomial to {}-dimensional samples",
                p.dim(),
                self.m
            )));
        }
        let phases = self.grid.phases(p.degree());
        let values = self
            .values
            .iter()
            .zip(&phases)
            .map(|(v, ph)| v + p.evaluate_with(ph))
            .collect();
        Ok(Self::from_hermitian_unchecked(Arc::clone(&self.grid), values))
    }

    /// Node-wise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_hermitian_unchecked(Arc::clone(&self.grid), values))
    }

    /// Real Fourier coefficient `∫ Φ(e^{iθ}) e^{iθk} dθ/2π`, assuming the
    /// conjugate symmetry of a real process.
    pub fn fourier_coefficient(&self, k: usize) -> DMatrix<T> {
        let kk = T::from_usize_(k);
        let mut acc = DMatrix::<T>::zeros(self.m, self.m);
        for ((theta, w), v) in self
            .grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
        {
            let (s, c) = (*theta * kk).sin_cos();
            for i in 0..self.m {
                for j in 0..self.m {
                    let z: Complex<T> = v[(i, j)];
                    acc[(i, j)] += *w * (z.re * c - z.im * s);
                }
            }
        }
        acc
    }

    /// Node-wise Frobenius distance averaged over the normalized measure.
    pub fn mean_frobenius_distance(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        Ok(self
            .grid
            .integrate(|l| (&self.values[l] - &other.values[l]).norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<FrequencyGrid<f64>> {
        Arc::new(FrequencyGrid::new(16).unwrap())
    }

    #[test]
    fn inverse_of_identity_and_diagonal() {
        let g = grid();
        let id = SpectralDensitySamples::identity(Arc::clone(&g), 3);
        let inv = id.inverse().unwrap();
        for v in inv.values() {
            assert!((v - CMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
        }
        let d = SpectralDensitySamples::constant(
            Arc::clone(&g),
            &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]),
        )
        .unwrap();
        let inv = d.inverse().unwrap();
        assert!(inv.is_positive());
        for v in inv.values() {
            assert!((v[(0, 0)].re - 0.5).abs() < 1e-15);
            assert!((v[(1, 1)].re - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_names_bad_node() {
        let g = grid();
        let mut values = vec![CMatrix::<f64>::identity(2, 2); g.len()];
        values[5][(1, 1)] = Complex::new(-1.0, 0.0);
        let s = SpectralDensitySamples::new(g, values).unwrap();
        match s.inverse() {
            Err(Error::Domain { node, .. }) => assert_eq!(node, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let g = grid();
        let mut values = vec![CMatrix::<f64>::identity(2, 2); g.len()];
        values[0][(0, 1)] = Complex::new(0.0, 1.0);
        assert!(SpectralDensitySamples::new(g, values).is_err());
    }

    #[test]
    fn fourier_coefficient_recovers_lags() {
        let g = grid();
        let q1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let q0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = MatrixPseudoPolynomial::new(vec![q0.clone(), q1.clone()]).unwrap();
        let s = p.evaluate(&g);
        assert!((s.fourier_coefficient(0) - q0).norm() < 1e-14);
        assert!((s.fourier_coefficient(1) - q1).norm() < 1e-14);
        assert!(s.fourier_coefficient(2).norm() < 1e-14);
    }
}
