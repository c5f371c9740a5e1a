//! Matrix pseudo-polynomials `P(e^{iθ}) = Σ_{k=-n}^{n} P_k e^{-iθk}` with
//! real coefficients and `P_{-k} = P_k^T`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::linalg::{self, CMatrix};
use crate::samples::SpectralDensitySamples;
use crate::scalar::{cis, Complex, Real};
use crate::support::Support;

/// Hermitian-valued trigonometric matrix polynomial. Only the coefficients
/// `P_0..P_n` are stored; `P_0` is kept exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPseudoPolynomial<T: Real> {
    m: usize,
    coeffs: Vec<DMatrix<T>>,
}

impl<T: Real> MatrixPseudoPolynomial<T> {
    /// Build from `P_0..P_n`. `P_0` is symmetrized.
    pub fn new(coeffs: Vec<DMatrix<T>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Argument("pseudo-polynomial needs P_0".into()))?;
        let m = first.nrows();
        for (k, c) in coeffs.iter().enumerate() {
            if c.nrows() != m || c.ncols() != m {
                return Err(Error::Dimension(format!(
                    "coefficient {k} is {}x{}, expected {m}x{m}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        let mut p = Self { m, coeffs };
        p.symmetrize_constant();
        Ok(p)
    }

    pub fn zeros(m: usize, degree: usize) -> Self {
        Self {
            m,
            coeffs: vec![DMatrix::zeros(m, m); degree + 1],
        }
    }

    /// Constant polynomial `P_0 = c`.
    pub fn constant(c: DMatrix<T>) -> Result<Self> {
        Self::new(vec![c])
    }

    fn symmetrize_constant(&mut self) {
        let c = &mut self.coeffs[0];
        let half = T::lit(0.5);
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                let v = (c[(i, j)] + c[(j, i)]) * half;
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Highest lag with a nonzero coefficient (0 for the zero polynomial).
    pub fn effective_degree(&self) -> usize {
        (0..self.coeffs.len())
            .rev()
            .find(|&k| self.coeffs[k].iter().any(|x| *x != T::zero()))
            .unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[DMatrix<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &DMatrix<T> {
        &self.coeffs[k]
    }

    /// Entry `(P_k)_{ij}`; for `k = 0` symmetric.
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.coeffs[k][(i, j)]
    }

    /// Set `(P_k)_{ij}`. For `k = 0` the mirrored entry is written too.
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: T) {
        self.coeffs[k][(i, j)] = v;
        if k == 0 {
            self.coeffs[0][(j, i)] = v;
        }
    }

    /// Same polynomial padded with zero coefficients up to `degree`.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        if degree < self.effective_degree() {
            return Err(Error::Argument(format!(
                "cannot truncate degree {} polynomial to {degree}",
                self.effective_degree()
            )));
        }
        let mut coeffs: Vec<_> = self.coeffs.iter().take(degree + 1).cloned().collect();
        coeffs.resize(degree + 1, DMatrix::zeros(self.m, self.m));
        Ok(Self { m: self.m, coeffs })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.m != other.m || self.degree() != other.degree() {
            return Err(Error::Dimension(format!(
                "pseudo-polynomials of shape (m={}, n={}) and (m={}, n={})",
                self.m,
                self.degree(),
                other.m,
                other.degree()
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            m: self.m,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lincomb(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lincomb(T::one(), other, -T::one())
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            m: self.m,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Coefficient-wise Frobenius inner product `Σ_k ⟨P_k, Q_k⟩`.
    pub fn dot(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x.dot(y))
            .fold(T::zero(), |a, b| a + b))
    }

    /// Largest absolute coefficient entry.
    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |a, x| a.max(x.abs()))
    }

    /// Value at `e^{iθ}`.
    pub fn evaluate_at(&self, theta: T) -> CMatrix<T> {
        let phases: Vec<Complex<T>> = (0..=self.degree())
            .map(|k| cis(-theta * T::from_usize_(k)))
            .collect();
        self.evaluate_with(&phases)
    }

    /// Value given `phases[k] = e^{-iθk}`.
    pub(crate) fn evaluate_with(&self, phases: &[Complex<T>]) -> CMatrix<T> {
        let m = self.m;
        let mut out = linalg::to_complex(&self.coeffs[0]);
        for k in 1..self.coeffs.len() {
            let z = phases[k];
            let c = &self.coeffs[k];
            for i in 0..m {
                for j in 0..m {
                    // Q_k e^{-iθk} + Q_k^T e^{iθk}
                    out[(i, j)] += z.scale(c[(i, j)]) + z.conj().scale(c[(j, i)]);
                }
            }
        }
        out
    }

    /// Samples on every grid node.
    pub fn evaluate(&self, grid: &Arc<FrequencyGrid<T>>) -> SpectralDensitySamples<T> {
        let phases = grid.phases(self.degree());
        let values = phases.iter().map(|ph| self.evaluate_with(ph)).collect();
        SpectralDensitySamples::from_hermitian_unchecked(Arc::clone(grid), values)
    }

    /// `‖P‖ = ∫ |ν_P| dθ/2π` where `ν_P` is the eigenvalue of largest modulus.
    pub fn norm_p(&self, grid: &FrequencyGrid<T>) -> T {
        let phases = grid.phases(self.degree());
        grid.integrate(|l| {
            let ev = linalg::eigenvalues(&self.evaluate_with(&phases[l]));
            ev.iter().fold(T::zero(), |a, x| a.max(x.abs()))
        })
    }

    /// Zero every coefficient entry `(i,j)` outside `support`, at every lag.
    pub fn project_support(&self, support: &Support) -> Result<Self> {
        if support.dim() != self.m {
            return Err(Error::Dimension(format!(
                "support over {} nodes applied to {}x{} polynomial",
                support.dim(),
                self.m,
                self.m
            )));
        }
        let mut out = self.clone();
        for c in &mut out.coeffs {
            for i in 0..self.m {
                for j in 0..self.m {
                    if !support.contains(i, j) {
                        c[(i, j)] = T::zero();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Coefficient support: pairs with a nonzero entry at some lag.
    pub fn support(&self) -> Support {
        let mut s = Support::diagonal(self.m);
        for c in &self.coeffs {
            for i in 0..self.m {
                for j in 0..self.m {
                    if i != j && c[(i, j)] != T::zero() {
                        s.insert(i, j).expect("indices in range");
                    }
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(len: usize) -> Arc<FrequencyGrid<f64>> {
        Arc::new(FrequencyGrid::new(len).unwrap())
    }

    #[test]
    fn constant_identity() {
        let p = MatrixPseudoPolynomial::constant(DMatrix::<f64>::identity(2, 2)).unwrap();
        let s = p.evaluate(&grid(8));
        for v in s.values() {
            assert_eq!(*v, linalg::to_complex(&DMatrix::identity(2, 2)));
        }
    }

    #[test]
    fn lag_one_at_zero_frequency() {
        let q1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let p = MatrixPseudoPolynomial::new(vec![DMatrix::zeros(2, 2), q1]).unwrap();
        let v = p.evaluate_at(0.0);
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((v - linalg::to_complex(&want)).norm() < 1e-15);
    }

    #[test]
    fn constant_coefficient_is_symmetrized() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let p = MatrixPseudoPolynomial::<f64>::constant(c).unwrap();
        assert_eq!(p.get(0, 0, 1), 1.0);
        assert_eq!(p.get(0, 1, 0), 1.0);
    }

    #[test]
    fn norm_of_constant_diagonal() {
        let p = MatrixPseudoPolynomial::constant(DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(vec![2.0, -3.0]),
        ))
        .unwrap();
        assert!((p.norm_p(&grid(16)) - 3.0).abs() < 1e-12);
        assert_eq!(MatrixPseudoPolynomial::<f64>::zeros(3, 2).norm_p(&grid(16)), 0.0);
    }

    #[test]
    fn projection_onto_diagonal() {
        let mut p = MatrixPseudoPolynomial::<f64>::zeros(3, 1);
        p.set(0, 0, 1, 0.5);
        p.set(1, 2, 0, -1.0);
        p.set(1, 1, 1, 2.0);
        let d = p.project_support(&Support::diagonal(3)).unwrap();
        assert_eq!(d.get(0, 0, 1), 0.0);
        assert_eq!(d.get(1, 2, 0), 0.0);
        assert_eq!(d.get(1, 1, 1), 2.0);
        assert_eq!(p.project_support(&Support::full(3)).unwrap(), p);
    }

    #[test]
    fn effective_degree_and_padding() {
        let mut p = MatrixPseudoPolynomial::<f64>::zeros(2, 3);
        assert_eq!(p.effective_degree(), 0);
        p.set(2, 0, 1, 1.0);
        assert_eq!(p.effective_degree(), 2);
        let q = p.with_degree(5).unwrap();
        assert_eq!(q.degree(), 5);
        assert_eq!(q.effective_degree(), 2);
        assert!(p.with_degree(1).is_err());
    }
}
