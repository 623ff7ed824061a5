//! Row-oriented sparse matrices over nodal or stacked `(u, v)` vectors.

use nalgebra::DMatrix;

use crate::grid::StencilRow;

/// Sparse matrix stored as per-row `(column, value)` lists. Duplicate
/// columns within a row are summed. Products accumulate in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl DiscreteOperator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![Vec::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut op = Self::zeros(n, n);
        for i in 0..n {
            op.push(i, i, 1.0);
        }
        op
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(col < self.cols);
        self.rows[row].push((col, value));
    }

    /// Appends `scale * stencil` to `row`, with columns shifted by
    /// `col_offset`. Off-diagonals are pushed first and the centre entry is
    /// their negated sum, so the row annihilates constants exactly.
    pub fn push_stencil_row(&mut self, row: usize, col_offset: usize, stencil: &StencilRow, scale: f64) {
        let mut sum = 0.0;
        for &(j, w) in &stencil.terms {
            let v = scale * w;
            sum += v;
            self.rows[row].push((col_offset + j, v));
        }
        self.rows[row].push((col_offset + stencil.node, -sum));
    }

    /// Sum of the stored entries at `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row].iter().filter(|e| e.0 == col).map(|e| e.1).sum()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "operator/vector size mismatch");
        self.rows
            .iter()
            .map(|r| r.iter().fold(0.0, |acc, &(j, v)| acc + v * x[j]))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.cols);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `(row, col, value)` triplets in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let mut acc = std::collections::BTreeMap::<usize, f64>::new();
                for &(j, v) in r {
                    *acc.entry(j).or_default() += v;
                }
                acc.values().map(|v| v.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut op = DiscreteOperator::zeros(2, 3);
        op.push(0, 1, 2.0);
        op.push(0, 1, 0.5);
        op.push(1, 2, -1.0);
        assert_eq!(op.get(0, 1), 2.5);
        assert_eq!(op.apply(&[1.0, 2.0, 3.0]), vec![5.0, -3.0]);
        let d = op.to_dense();
        assert_eq!(d[(0, 1)], 2.5);
        assert_eq!(op.norm_inf(), 2.5);
        assert_eq!(op.nnz(), 3);
    }

    #[test]
    fn stencil_rows_sum_to_zero() {
        let row = StencilRow {
            node: 1,
            terms: vec![(0, 1.0 / 0.3), (2, 1.0 / 0.7), (3, 0.1)],
        };
        let mut op = DiscreteOperator::zeros(1, 4);
        op.push_stencil_row(0, 0, &row, 1.0 / 3.0);
        assert_eq!(op.apply(&[1.0; 4]), vec![0.0]);
    }
}
