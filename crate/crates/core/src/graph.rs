use alloc::format;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A symmetric, zero-diagonal weight matrix on `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
}

impl WeightedGraph {
    /// Wraps a dense matrix, checking that it is square, exactly symmetric,
    /// has a zero diagonal and only finite entries.
    pub fn from_matrix(weights: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&weights)?;
        let n = weights.nrows();
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Domain(format!(
                    "diagonal entry {i} is {} (self-loops must be zero)",
                    weights[(i, i)]
                )));
            }
        }
        if let Some(bad) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::Domain(format!("entry {bad} is not finite")));
        }
        Ok(Self { weights })
    }

    /// Builds a graph from its strict upper triangle, `upper(i, j)` for `i < j`.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut weights = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..j {
                let w = upper(i, j);
                weights[(i, j)] = w;
                weights[(j, i)] = w;
            }
        }
        Self { weights }
    }

    pub(crate) fn from_symmetric_unchecked(weights: DMatrix<f64>) -> Self {
        debug_assert!(check_symmetric(&weights).is_ok());
        Self { weights }
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.weights
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> alloc::vec::Vec<f64> {
        self.weights.column_iter().map(|c| c.sum()).collect()
    }

    /// Returns `factor * self`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            weights: &self.weights * factor,
        }
    }

    /// Applies a relabeling of nodes: node `i` of the result is node `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.n();
        if order.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "permutation has length {} but graph has {n} nodes",
                order.len()
            )));
        }
        let mut seen = alloc::vec![false; n];
        for &o in order {
            if o >= n || core::mem::replace(&mut seen[o], true) {
                return Err(Error::Domain("order is not a permutation".into()));
            }
        }
        Ok(Self {
            weights: DMatrix::from_fn(n, n, |i, j| self.weights[(order[i], order[j])]),
        })
    }
}

/// Column access to a symmetric weight matrix; `column(j)[i]` is the weight of `(i, j)`.
pub trait SymmetricColumns: Sync {
    type Elem: Copy + Into<f64> + Send + Sync;

    fn n(&self) -> usize;

    fn column(&self, j: usize) -> &[Self::Elem];

    /// Dense `f64` copy.
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.column(j)[i].into())
    }
}

impl SymmetricColumns for DMatrix<f64> {
    type Elem = f64;

    fn n(&self) -> usize {
        self.nrows()
    }

    fn column(&self, j: usize) -> &[f64] {
        let n = self.nrows();
        &self.as_slice()[j * n..(j + 1) * n]
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl SymmetricColumns for WeightedGraph {
    type Elem = f64;

    fn n(&self) -> usize {
        self.weights.nrows()
    }

    fn column(&self, j: usize) -> &[f64] {
        SymmetricColumns::column(&self.weights, j)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.weights.clone()
    }
}

/// Storage type of a [`CompactGraph`].
pub trait Weight: Copy + Into<f64> + Default + Send + Sync + 'static {
    /// Converts a sampled weight; `None` if it is not representable exactly.
    fn from_weight(w: f64) -> Option<Self>;
}

impl Weight for f64 {
    fn from_weight(w: f64) -> Option<Self> {
        Some(w)
    }
}

impl Weight for u8 {
    fn from_weight(w: f64) -> Option<Self> {
        let b = w as u8;
        (f64::from(b) == w).then_some(b)
    }
}

/// A symmetric zero-diagonal graph with a chosen storage type, reused
/// across Monte Carlo replicates. `CompactGraph<u8>` holds integer-weighted
/// graphs in an eighth of the memory of [`WeightedGraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompactGraph<T> {
    n: usize,
    data: alloc::vec::Vec<T>,
}

impl<T: Weight> CompactGraph<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![T::default(); n * n],
        }
    }

    pub fn from_dense(m: &impl SymmetricColumns) -> Result<Self> {
        let n = m.n();
        let mut g = Self::zeros(n);
        for j in 0..n {
            for (slot, &w) in g.data[j * n..(j + 1) * n].iter_mut().zip(m.column(j)) {
                *slot = T::from_weight(w.into())
                    .ok_or_else(|| Error::Domain(format!("weight {} does not fit the storage type", w.into())))?;
            }
        }
        Ok(g)
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i].into()
    }

    pub fn to_graph(&self) -> WeightedGraph {
        WeightedGraph::from_symmetric_unchecked(self.to_dense())
    }
}

impl<T: Weight> SymmetricColumns for CompactGraph<T> {
    type Elem = T;

    fn n(&self) -> usize {
        self.n
    }

    fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.n..(j + 1) * self.n]
    }
}

/// Copies the strict upper triangle of a column-major `n x n` buffer onto
/// the lower one, tile by tile.
pub(crate) fn mirror_upper<T: Copy>(data: &mut [T], n: usize) {
    const TILE: usize = 64;
    for jb in (0..n).step_by(TILE) {
        for ib in (0..=jb).step_by(TILE) {
            for j in jb..(jb + TILE).min(n) {
                for i in ib..(ib + TILE).min(j) {
                    // (i, j) lives at j * n + i; its mirror (j, i) at i * n + j
                    data[i * n + j] = data[j * n + i];
                }
            }
        }
    }
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != m[(j, i)] {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}
