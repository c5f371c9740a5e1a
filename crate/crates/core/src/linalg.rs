//! Small dense Hermitian kernels used per grid node.

use nalgebra::DMatrix;

use crate::scalar::{Complex, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Lower Cholesky factor `A = L L^*` of a Hermitian matrix with a real
/// positive diagonal. Only the lower triangle of `A` is read.
#[derive(Debug, Clone)]
pub struct HermitianCholesky<T: Real> {
    l: CMatrix<T>,
}

impl<T: Real> HermitianCholesky<T> {
    /// `None` unless every pivot is strictly positive.
    pub fn new(a: &CMatrix<T>) -> Option<Self> {
        let m = a.nrows();
        let mut l = CMatrix::<T>::zeros(m, m);
        for j in 0..m {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                let v = l[(j, k)];
                d -= v.re * v.re + v.im * v.im;
            }
            if !(d > T::zero()) {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex::new(djj, T::zero());
            let inv = T::one() / djj;
            for i in (j + 1)..m {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s.scale(inv);
            }
        }
        Some(Self { l })
    }

    pub fn l(&self) -> &CMatrix<T> {
        &self.l
    }

    pub fn logdet(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.l.nrows() {
            acc += self.l[(i, i)].re.ln();
        }
        acc + acc
    }

    /// `A^{-1}`, exactly Hermitian.
    pub fn inverse(&self) -> CMatrix<T> {
        let m = self.l.nrows();
        // W = L^{-1} by forward substitution, then A^{-1} = W^* W.
        let mut w = CMatrix::<T>::zeros(m, m);
        for c in 0..m {
            for i in c..m {
                let mut s = if i == c {
                    Complex::new(T::one(), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                };
                for k in c..i {
                    s -= self.l[(i, k)] * w[(k, c)];
                }
                w[(i, c)] = s.scale(T::one() / self.l[(i, i)].re);
            }
        }
        let mut inv = CMatrix::<T>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let mut s = Complex::new(T::zero(), T::zero());
                for k in i..m {
                    s += w[(k, i)].conj() * w[(k, j)];
                }
                inv[(i, j)] = s;
                inv[(j, i)] = s.conj();
            }
            inv[(i, i)] = Complex::new(inv[(i, i)].re, T::zero());
        }
        inv
    }
}

pub fn cholesky<T: Real>(a: &CMatrix<T>) -> Option<HermitianCholesky<T>> {
    HermitianCholesky::new(a)
}

/// `log det A` of a Hermitian positive definite matrix.
pub fn logdet_hpd<T: Real>(a: &CMatrix<T>) -> Option<T> {
    cholesky(a).map(|c| c.logdet())
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inverse_hpd<T: Real>(a: &CMatrix<T>) -> Option<CMatrix<T>> {
    cholesky(a).map(|c| c.inverse())
}

/// True when `A - margin·I` is positive definite, i.e. `λ_min(A) > margin`.
pub fn exceeds_margin<T: Real>(a: &CMatrix<T>, margin: T) -> bool {
    let mut shifted = a.clone();
    for i in 0..a.nrows() {
        shifted[(i, i)].re -= margin;
    }
    cholesky(&shifted).is_some()
}

/// `(A + A^*)/2`.
pub fn hermitize<T: Real>(mut a: CMatrix<T>) -> CMatrix<T> {
    let m = a.nrows();
    let half = T::lit(0.5);
    for i in 0..m {
        a[(i, i)] = Complex::new(a[(i, i)].re, T::zero());
        for j in (i + 1)..m {
            let v = (a[(i, j)] + a[(j, i)].conj()).scale(half);
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    a
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue<T: Real>(a: &CMatrix<T>) -> T {
    eigenvalues(a).first().copied().unwrap_or_else(T::zero)
}

/// Hermitian square root of a positive semidefinite matrix. Negative
/// eigenvalues from round-off are clamped to zero.
pub fn hermitian_sqrt<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let eig = a.clone().symmetric_eigen();
    let m = a.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..m {
        let s = eig.eigenvalues[j].max(T::zero()).sqrt();
        for i in 0..m {
            scaled[(i, j)] = scaled[(i, j)].scale(s);
        }
    }
    hermitize(&scaled * eig.eigenvectors.adjoint())
}

/// Largest deviation from Hermitian symmetry, relative to the largest entry.
pub fn hermitian_defect<T: Real>(a: &CMatrix<T>) -> T {
    let m = a.nrows();
    let mut scale = T::zero();
    let mut defect = T::zero();
    for i in 0..m {
        for j in 0..m {
            scale = scale.max(modulus(a[(i, j)]));
            defect = defect.max(modulus(a[(i, j)] - a[(j, i)].conj()));
        }
    }
    if scale > T::zero() {
        defect / scale
    } else {
        T::zero()
    }
}

/// `|z|`.
#[inline]
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

pub fn to_complex<T: Real>(a: &DMatrix<T>) -> CMatrix<T> {
    a.map(|x| Complex::new(x, T::zero()))
}
