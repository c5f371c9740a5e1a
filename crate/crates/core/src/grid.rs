//! Uniform quadrature grid on the half circle `[0, π]`.
//!
//! Spectra of real processes satisfy `Φ(e^{-iθ}) = Φ(e^{iθ})^T`, so values on
//! `(-π, 0)` are the complex conjugates of the stored ones and never need to
//! be materialized. The weights are those of the periodic trapezoid rule on
//! `2(L-1)` equispaced points of the full circle, folded onto the half circle:
//! interior nodes carry double weight. They integrate the normalized measure
//! `dθ/2π`, so they sum to one.

use crate::error::{Error, Result};
use crate::scalar::{cis, Complex, Real};

/// Default number of nodes on `[0, π]`.
pub const DEFAULT_GRID_SIZE: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> FrequencyGrid<T> {
    /// Grid with `len` nodes `θ_l = lπ/(len-1)`. Needs at least two nodes.
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Argument(format!(
                "frequency grid needs at least 2 nodes, got {len}"
            )));
        }
        let intervals = len - 1;
        let h = T::pi() / T::from_usize_(intervals);
        let interior = T::one() / T::from_usize_(intervals);
        let end = interior * T::lit(0.5);
        let nodes = (0..len)
            .map(|l| {
                if l == intervals {
                    T::pi()
                } else {
                    h * T::from_usize_(l)
                }
            })
            .collect();
        let weights = (0..len)
            .map(|l| if l == 0 || l == intervals { end } else { interior })
            .collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Highest trigonometric degree integrated exactly by the rule.
    pub fn exact_degree(&self) -> usize {
        2 * (self.len() - 1) - 1
    }

    /// `∫ f dθ/2π` for an even integrand `f(θ) = f(-θ)` given at the nodes.
    pub fn integrate<F: FnMut(usize) -> T>(&self, mut f: F) -> T {
        let mut acc = T::zero();
        for (l, w) in self.weights.iter().enumerate() {
            acc += *w * f(l);
        }
        acc
    }

    /// Phase table `e^{-iθ_l k}` for `k = 0..=degree`, indexed `[l][k]`.
    pub(crate) fn phases(&self, degree: usize) -> Vec<Vec<Complex<T>>> {
        self.nodes
            .iter()
            .map(|&theta| {
                (0..=degree)
                    .map(|k| cis(-theta * T::from_usize_(k)))
                    .collect()
            })
            .collect()
    }

    /// Same node set, compared by value.
    pub fn same_as(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}
