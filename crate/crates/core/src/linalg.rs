//! Direct solver for the Newton systems: banded LU with partial pivoting
//! after a symmetric reordering.
//!
//! Stacked `(u, v)` Jacobians have bandwidth `N`; interleaving the two
//! unknowns of each node brings that down to a few grid lines, which keeps
//! the factorization at `O(n · kl · (kl + ku))`.

use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    multipliers: Vec<f64>,
    /// `perm[new] = old`
    perm: Vec<usize>,
}

/// Ordering that interleaves `u_k` and `v_k` of a stacked vector of length `2n`.
pub fn interleave(n: usize) -> Vec<usize> {
    (0..n).flat_map(|k| [k, n + k]).collect()
}

impl BandedLu {
    pub fn factor(op: &DiscreteOperator, perm: Option<&[usize]>) -> Result<Self> {
        let n = op.nrows();
        assert_eq!(n, op.ncols(), "banded LU needs a square operator");
        let perm: Vec<usize> = match perm {
            Some(p) => {
                assert_eq!(p.len(), n);
                p.to_vec()
            }
            None => (0..n).collect(),
        };
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let (mut kl, mut ku) = (0usize, 0usize);
        for (i, j, _) in op.triplets() {
            let (ni, nj) = (inv[i], inv[j]);
            if ni > nj {
                kl = kl.max(ni - nj);
            } else {
                ku = ku.max(nj - ni);
            }
        }
        let ku = ku + kl; // room for pivoting fill
        let width = kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            multipliers: vec![0.0; n * kl],
            perm,
        };
        for (i, j, v) in op.triplets() {
            let idx = lu.idx(inv[i], inv[j]);
            lu.data[idx] += v;
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let right = (k + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let a = self.data[self.idx(i, k)].abs();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            if !(best > 0.0 && best.is_finite()) {
                return Err(Error::SingularMatrix { column: self.perm[k] });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=right {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let m = self.data[ik] / pivot;
                self.data[ik] = 0.0;
                self.multipliers[k * self.kl + (i - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=right {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= m * kj;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    x[i] -= self.multipliers[k * self.kl + (i - k - 1)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + self.ku).min(n - 1) {
                s -= self.data[self.idx(k, j)] * x[j];
            }
            x[k] = s / self.data[self.idx(k, k)];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku - self.kl)
    }
}
