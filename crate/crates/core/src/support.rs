//! Symmetric edge sets over `{0..m-1}`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Symmetric support of an inverse spectrum. Pairs are stored with `i <= j`;
/// every diagonal pair is always present.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Support {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Support {
    /// Only the diagonal: all nodes mutually conditionally independent.
    pub fn diagonal(m: usize) -> Self {
        Self {
            m,
            edges: (0..m).map(|i| (i, i)).collect(),
        }
    }

    pub fn full(m: usize) -> Self {
        let mut s = Self::diagonal(m);
        for i in 0..m {
            for j in (i + 1)..m {
                s.edges.insert((i, j));
            }
        }
        s
    }

    /// Diagonal plus the given pairs, in either orientation.
    pub fn from_pairs<I>(m: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut s = Self::diagonal(m);
        for (i, j) in pairs {
            s.insert(i, j)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<bool> {
        if i >= self.m || j >= self.m {
            return Err(Error::Argument(format!(
                "edge ({i},{j}) out of range for m = {}",
                self.m
            )));
        }
        Ok(self.edges.insert((i.min(j), i.max(j))))
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Number of stored pairs, diagonal included.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// All stored pairs `(i, j)` with `i <= j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Stored pairs with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied().filter(|(i, j)| i != j)
    }

    pub fn edge_count(&self) -> usize {
        self.len() - self.m
    }

    /// Off-diagonal pairs `i < j` not in the support.
    pub fn complement_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.m).flat_map(move |i| {
            ((i + 1)..self.m)
                .filter(move |&j| !self.contains(i, j))
                .map(move |j| (i, j))
        })
    }

    pub fn is_subset(&self, other: &Support) -> bool {
        self.m == other.m && self.edges.is_subset(&other.edges)
    }

    pub fn union(&self, other: &Support) -> Result<Support> {
        if self.m != other.m {
            return Err(Error::Dimension(format!(
                "support union of m = {} and m = {}",
                self.m, other.m
            )));
        }
        Ok(Support {
            m: self.m,
            edges: self.edges.union(&other.edges).copied().collect(),
        })
    }

    /// Neighbours of `i` (excluding `i`).
    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.m).filter(move |&k| k != i && self.contains(i, k))
    }
}

impl fmt::Debug for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Support")
            .field("m", &self.m)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}
