//! Block-sparse matrices over element blocks and a skyline Cholesky solver.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square matrix made of dense `nb × nb` blocks indexed by element pairs.
/// Blocks are stored row-major; each block row keeps its columns sorted.
#[derive(Debug, Clone)]
pub struct BlockMatrix<T> {
    nb: usize,
    rows: Vec<Vec<(usize, Vec<T>)>>,
}

impl<T: Real> BlockMatrix<T> {
    pub fn new(num_blocks: usize, block_size: usize) -> Self {
        Self { nb: block_size, rows: vec![Vec::new(); num_blocks] }
    }

    pub fn block_size(&self) -> usize {
        self.nb
    }

    pub fn num_blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.nb * self.rows.len()
    }

    pub fn block_mut(&mut self, row: usize, col: usize) -> &mut [T] {
        let nb = self.nb;
        let r = &mut self.rows[row];
        let pos = match r.binary_search_by_key(&col, |(c, _)| *c) {
            Ok(p) => p,
            Err(p) => {
                r.insert(p, (col, vec![T::zero(); nb * nb]));
                p
            }
        };
        &mut r[pos].1
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&[T]> {
        let r = &self.rows[row];
        r.binary_search_by_key(&col, |(c, _)| *c).ok().map(|p| r[p].1.as_slice())
    }

    pub fn block_row(&self, row: usize) -> &[(usize, Vec<T>)] {
        &self.rows[row]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let nb = self.nb;
        self.block(i / nb, j / nb).map_or(T::zero(), |b| b[(i % nb) * nb + j % nb])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let nb = self.nb;
        let mut y = vec![T::zero(); self.dim()];
        for (r, row) in self.rows.iter().enumerate() {
            let yr = &mut y[r * nb..(r + 1) * nb];
            for (c, b) in row {
                let xc = &x[c * nb..(c + 1) * nb];
                for i in 0..nb {
                    let mut s = T::zero();
                    for j in 0..nb {
                        s += b[i * nb + j] * xc[j];
                    }
                    yr[i] += s;
                }
            }
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[T]) -> Vec<T> {
        let nb = self.nb;
        let mut y = vec![T::zero(); self.dim()];
        for (r, row) in self.rows.iter().enumerate() {
            let xr = &x[r * nb..(r + 1) * nb];
            for (c, b) in row {
                let yc = &mut y[c * nb..(c + 1) * nb];
                for i in 0..nb {
                    for j in 0..nb {
                        yc[j] += b[i * nb + j] * xr[i];
                    }
                }
            }
        }
        y
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        for (r, row) in other.rows.iter().enumerate() {
            for (c, b) in row {
                for (d, &s) in self.block_mut(r, *c).iter_mut().zip(b) {
                    *d += alpha * s;
                }
            }
        }
    }

    /// `selfᵀ · diag(weights) · self` for block-diagonal `weights`.
    pub fn transpose_weighted_product(&self, weights: &[Vec<T>]) -> Self {
        let nb = self.nb;
        let mut out = Self::new(self.rows.len(), nb);
        let mut tmp = vec![T::zero(); nb * nb];
        // (SᵀMS)_{AC} = Σ_B S_BAᵀ M_B S_BC
        for (b, row) in self.rows.iter().enumerate() {
            let m = &weights[b];
            for (a, s_ba) in row {
                // tmp = S_BAᵀ M_B
                for i in 0..nb {
                    for j in 0..nb {
                        let mut s = T::zero();
                        for l in 0..nb {
                            s += s_ba[l * nb + i] * m[l * nb + j];
                        }
                        tmp[i * nb + j] = s;
                    }
                }
                for (c, s_bc) in row {
                    let dst = out.block_mut(*a, *c);
                    for i in 0..nb {
                        for j in 0..nb {
                            let mut s = T::zero();
                            for l in 0..nb {
                                s += tmp[i * nb + l] * s_bc[l * nb + j];
                            }
                            dst[i * nb + j] += s;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> T {
        let nb = self.nb;
        let mut worst = T::zero();
        for (r, row) in self.rows.iter().enumerate() {
            for (c, b) in row {
                let bt = self.block(*c, r);
                for i in 0..nb {
                    for j in 0..nb {
                        let other = bt.map_or(T::zero(), |t| t[j * nb + i]);
                        worst = worst.max((b[i * nb + j] - other).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.rows.iter().flatten().flat_map(|(_, b)| b.iter()).fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn cholesky(&self) -> Result<SkylineCholesky<T>> {
        SkylineCholesky::factor(self)
    }
}

/// Cholesky factor `A = L Lᵀ` stored by rows over the lower profile of `A`.
#[derive(Debug, Clone)]
pub struct SkylineCholesky<T> {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SkylineCholesky<T> {
    pub fn factor(a: &BlockMatrix<T>) -> Result<Self> {
        let nb = a.nb;
        let n = a.dim();
        let mut first = vec![0; n];
        for (r, row) in a.rows.iter().enumerate() {
            let min_col = row.iter().map(|(c, _)| *c).filter(|&c| c <= r).min().unwrap_or(r);
            for i in 0..nb {
                first[r * nb + i] = min_col * nb;
            }
        }
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i + 1 - first[i]);
        }
        let mut values = vec![T::zero(); offset[n]];
        for (r, row) in a.rows.iter().enumerate() {
            for (c, b) in row {
                if *c > r {
                    continue;
                }
                for i in 0..nb {
                    let gi = r * nb + i;
                    for j in 0..nb {
                        let gj = c * nb + j;
                        if gj <= gi {
                            values[offset[gi] + gj - first[gi]] = b[i * nb + j];
                        }
                    }
                }
            }
        }

        for i in 0..n {
            let (fi, oi) = (first[i], offset[i]);
            for j in fi..=i {
                let (fj, oj) = (first[j], offset[j]);
                let start = fi.max(fj);
                let mut s = values[oi + j - fi];
                let li = &values[oi + start - fi..oi + j - fi];
                let lj = &values[oj + start - fj..oj + j - fj];
                for (x, y) in li.iter().zip(lj) {
                    s -= *x * *y;
                }
                if j < i {
                    values[oi + j - fi] = s / values[oj + j - fj];
                } else {
                    if !(s > T::zero()) {
                        return Err(Error::LinearSolveBreakdown { row: i, pivot: s.to_f64_lossy() });
                    }
                    values[oi + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self { first, offset, values })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.first.len();
        let mut x = b.to_vec();
        for i in 0..n {
            let (fi, oi) = (self.first[i], self.offset[i]);
            let mut s = x[i];
            for (l, xv) in self.values[oi..oi + i - fi].iter().zip(&x[fi..i]) {
                s -= *l * *xv;
            }
            x[i] = s / self.values[oi + i - fi];
        }
        for i in (0..n).rev() {
            let (fi, oi) = (self.first[i], self.offset[i]);
            x[i] /= self.values[oi + i - fi];
            let xi = x[i];
            for (l, xv) in self.values[oi..oi + i - fi].iter().zip(&mut x[fi..i]) {
                *xv -= *l * xi;
            }
        }
        x
    }
}

/// Solves `A x = b` by Cholesky with one step of iterative refinement.
/// Returns the solution and the relative residual `‖b - Ax‖ / ‖b‖`.
pub fn solve_spd<T: Real>(a: &BlockMatrix<T>, b: &[T]) -> Result<(Vec<T>, T)> {
    let chol = a.cholesky()?;
    let mut x = chol.solve(b);
    let residual = |x: &[T]| -> Vec<T> { a.matvec(x).iter().zip(b).map(|(ax, bi)| *bi - *ax).collect() };
    let r = residual(&x);
    let dx = chol.solve(&r);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += *d;
    }
    let r = residual(&x);
    let bn = norm(b);
    let rel = if bn > T::zero() { norm(&r) / bn } else { norm(&r) };
    Ok((x, rel))
}

pub fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
