//! Dense tensors with per-slot variance, stored row-major over multi-indices.

use crate::error::{Error, Result};

/// Index variance of one tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

/// Dense real tensor of small rank. Component count is dim^rank; the linear
/// index of `[i0, i1, …]` is `((i0·dim + i1)·dim + …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dim: usize,
    pub variance: Vec<Slot>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dim: usize, variance: &[Slot]) -> Self {
        let len = dim.pow(variance.len() as u32);
        Tensor {
            dim,
            variance: variance.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_fn(dim: usize, variance: &[Slot], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(dim, variance);
        let rank = variance.len();
        let mut idx = vec![0usize; rank];
        for lin in 0..t.data.len() {
            t.data[lin] = f(&idx);
            advance(&mut idx, dim);
        }
        t
    }

    /// Fallible variant of [`Tensor::from_fn`].
    pub fn try_from_fn(
        dim: usize,
        variance: &[Slot],
        mut f: impl FnMut(&[usize]) -> Result<f64>,
    ) -> Result<Self> {
        let mut t = Tensor::zeros(dim, variance);
        let rank = variance.len();
        let mut idx = vec![0usize; rank];
        for lin in 0..t.data.len() {
            t.data[lin] = f(&idx)?;
            advance(&mut idx, dim);
        }
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    fn lin(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        let mut lin = 0usize;
        for &i in idx {
            debug_assert!(i < self.dim);
            lin = lin * self.dim + i;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.lin(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let lin = self.lin(idx);
        self.data[lin] = v;
    }

    pub fn add_to(&mut self, idx: &[usize], v: f64) {
        let lin = self.lin(idx);
        self.data[lin] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Iterate all multi-indices in row-major order.
    pub fn indices(&self) -> MultiIndexIter {
        MultiIndexIter::new(self.dim, self.rank())
    }

    /// Largest |T[..i..j..] − T[..j..i..]| over all components, for the two
    /// given slots.
    pub fn symmetry_violation(&self, slot_a: usize, slot_b: usize) -> f64 {
        let mut worst = 0.0f64;
        for idx in self.indices() {
            let mut swapped = idx.clone();
            swapped.swap(slot_a, slot_b);
            worst = worst.max((self.get(&idx) - self.get(&swapped)).abs());
        }
        worst
    }

    /// Rank-2 tensors as nalgebra matrices (row = first slot).
    pub fn to_matrix(&self) -> Result<nalgebra::DMatrix<f64>> {
        if self.rank() != 2 {
            return Err(Error::UnsupportedValence(format!(
                "expected rank 2, got {}",
                self.rank()
            )));
        }
        Ok(nalgebra::DMatrix::from_row_slice(
            self.dim,
            self.dim,
            &self.data,
        ))
    }

    pub fn from_matrix(m: &nalgebra::DMatrix<f64>, variance: [Slot; 2]) -> Self {
        let dim = m.nrows();
        Tensor::from_fn(dim, &variance, |idx| m[(idx[0], idx[1])])
    }
}

fn advance(idx: &mut [usize], dim: usize) {
    for slot in (0..idx.len()).rev() {
        idx[slot] += 1;
        if idx[slot] < dim {
            return;
        }
        idx[slot] = 0;
    }
}

/// Row-major iterator over multi-indices of fixed rank.
pub struct MultiIndexIter {
    dim: usize,
    rank: usize,
    next: Option<Vec<usize>>,
}

impl MultiIndexIter {
    pub fn new(dim: usize, rank: usize) -> Self {
        let next = if dim == 0 && rank > 0 {
            None
        } else {
            Some(vec![0; rank])
        };
        MultiIndexIter { dim, rank, next }
    }
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut n = cur.clone();
        let mut carry = true;
        for slot in (0..self.rank).rev() {
            n[slot] += 1;
            if n[slot] < self.dim {
                carry = false;
                break;
            }
            n[slot] = 0;
        }
        if self.rank == 0 {
            carry = true;
        }
        if !carry {
            self.next = Some(n);
        }
        Some(cur)
    }
}

/// All sorted multi-indices (combinations with repetition) of the given
/// order over `dim` symbols; the natural keys for symmetric derivative
/// tables.
pub fn sorted_multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(order);
    fn rec(dim: usize, order: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == order {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(dim, order, i, cur, out);
            cur.pop();
        }
    }
    rec(dim, order, 0, &mut cur, &mut out);
    out
}
