use std::collections::VecDeque;

use super::csr::CsrMatrix;
use crate::{Error, Result};

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity graph.
///
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from an unvisited node of minimum degree
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (adj[i].len(), i))
            .unwrap();
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// LU factorization of a banded matrix without pivoting.
///
/// Pivoting is skipped on purpose: the matrices factored here have a
/// positive definite symmetric part, so every leading principal minor is
/// nonsingular.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    /// lower bandwidth
    kl: usize,
    /// upper bandwidth
    ku: usize,
    /// row-major band storage, row `i` holds columns `i-kl ..= i+ku`
    band: Vec<f64>,
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::InvalidArgument(
                "banded LU needs a square matrix".into(),
            ));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv_perm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for (i, j, _) in a.triplets() {
            let (pi, pj) = (inv_perm[i], inv_perm[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
        let width = kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (inv_perm[i], inv_perm[j]);
            band[pi * width + (pj + kl - pi)] += v;
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            band,
            perm,
            inv_perm,
        };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        let scale = self
            .band
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for k in 0..n {
            let pivot = self.band[self.idx(k, k)];
            if !(pivot.abs() > 1e-14 * scale) {
                return Err(Error::Solver {
                    iterations: k,
                    residual: f64::INFINITY,
                });
            }
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.ku).min(n - 1);
            for i in (k + 1)..=last_row {
                let ik = self.idx(i, k);
                let factor = self.band[ik] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.band[ik] = factor;
                for j in (k + 1)..=last_col {
                    let kj = self.band[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.band[ij] -= factor * kj;
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let lo = i.saturating_sub(self.kl);
            let mut s = y[i];
            for j in lo..i {
                s -= self.band[self.idx(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + self.ku).min(n - 1);
            let mut s = y[i];
            for j in (i + 1)..=hi {
                s -= self.band[self.idx(i, j)] * y[j];
            }
            y[i] = s / self.band[self.idx(i, i)];
        }
        (0..n).map(|old| y[self.inv_perm[old]]).collect()
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }
}
