//! Dense row-major matrices and LU factorization with partial pivoting.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;

/// Rows below which the trailing update stays sequential.
const PAR_ROWS: usize = 96;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_rows(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must be n²");
        DenseMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, T> {
        let n = self.n.max(1);
        self.data.chunks_exact_mut(n)
    }

    /// Replace `A` by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let avg = (self.get(i, j) + self.get(j, i)) * half;
                self.set(i, j, avg);
                self.set(j, i, avg);
            }
        }
    }

    /// Largest `|A_ij − A_ji| / max|A|`.
    pub fn asymmetry(&self) -> T {
        let scale = self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            worst
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks_exact(self.n.max(1))
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        let mut sums = vec![T::zero(); self.n];
        for row in self.data.chunks_exact(self.n.max(1)) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(T::zero(), T::max)
    }
}

/// `PA = LU` with unit lower `L`, stored compactly.
#[derive(Clone, Debug)]
pub struct LuFactors<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    norm_one: T,
}

impl<T: Real> LuFactors<T> {
    pub fn factor(mut a: DenseMatrix<T>) -> Result<Self> {
        let n = a.n;
        let norm_one = a.norm_one();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, big) = (k..n)
                .map(|i| (i, a.get(i, k).abs()))
                .fold((k, -T::one()), |best, c| if c.1 > best.1 { c } else { best });
            if !(big > T::zero()) || !big.is_finite() {
                return Err(Error::SingularMatrix(k));
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let inv = T::one() / pivot_row[k];
            let update = |row: &mut [T]| {
                let l = row[k] * inv;
                row[k] = l;
                if l != T::zero() {
                    for (r, &p) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *r -= l * p;
                    }
                }
            };
            if n - k > PAR_ROWS {
                tail.par_chunks_exact_mut(n).for_each(update);
            } else {
                tail.chunks_exact_mut(n).for_each(update);
            }
        }
        Ok(LuFactors { lu: a, perm, norm_one })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: T = row[..i].iter().zip(&x[..i]).map(|(&l, &v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: T = row[i + 1..].iter().zip(&x[i + 1..]).map(|(&u, &v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solve `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.n;
        // Uᵀ z = b
        let mut z = b.to_vec();
        for i in 0..n {
            z[i] = z[i] / self.lu.get(i, i);
            let zi = z[i];
            let row = self.lu.row(i);
            for j in i + 1..n {
                z[j] -= row[j] * zi;
            }
        }
        // Lᵀ w = z
        for i in (0..n).rev() {
            let wi = z[i];
            let row = self.lu.row(i);
            for j in 0..i {
                z[j] -= row[j] * wi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }

    /// Hager–Higham estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> T {
        let n = self.lu.n;
        if n == 0 {
            return T::one();
        }
        let one_norm = |v: &[T]| v.iter().map(|x| x.abs()).sum::<T>();
        let mut x = vec![T::one() / T::from_usize_lossy(n); n];
        let mut estimate = T::zero();
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            estimate = one_norm(&y);
            let sign: Vec<T> = y
                .iter()
                .map(|&v| if v >= T::zero() { T::one() } else { -T::one() })
                .collect();
            let z = self.solve_transpose(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.abs()))
                .fold((0, -T::one()), |b, c| if c.1 > b.1 { c } else { b });
            let ztx: T = z.iter().zip(&x).map(|(&a, &b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![T::zero(); n];
            x[j] = T::one();
        }
        estimate * self.norm_one
    }
}
