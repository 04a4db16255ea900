//! Small dense linear algebra: a row-major matrix, Gram–Schmidt
//! orthonormalization and the one-sided Jacobi SVD.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// # Panics
    /// If `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_columns(nrows: usize, columns: &[Vec<T>]) -> Self {
        let mut m = Self::zeros(nrows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), nrows);
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Keeps the first `k` columns.
    pub fn truncate_cols(&self, k: usize) -> Self {
        let mut out = Self::zeros(self.rows, k);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..k]);
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Largest absolute entry of `selfᵀ·self − I`.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.transpose().matmul(self);
        let mut worst = T::zero();
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Orthonormalizes `columns` in place with two passes of modified
/// Gram–Schmidt. Columns that are numerically dependent on their
/// predecessors are zeroed; the returned flags mark the surviving ones.
pub(crate) fn orthonormalize<T: Scalar>(columns: &mut [Vec<T>]) -> Vec<bool> {
    let mut alive = vec![false; columns.len()];
    let tiny = T::epsilon() * T::of(64.0);
    for j in 0..columns.len() {
        let (done, rest) = columns.split_at_mut(j);
        let col = &mut rest[0];
        let original = norm(col);
        for _ in 0..2 {
            for (q, &ok) in done.iter().zip(&alive) {
                if !ok {
                    continue;
                }
                let r = dot(q, col);
                for (c, &qv) in col.iter_mut().zip(q) {
                    *c -= r * qv;
                }
            }
        }
        let n = norm(col);
        if original > T::zero() && n > tiny * original {
            for c in col.iter_mut() {
                *c /= n;
            }
            alive[j] = true;
        } else {
            col.iter_mut().for_each(|c| *c = T::zero());
        }
    }
    alive
}

/// Replaces every column whose flag is `false` with a unit vector orthogonal
/// to all other columns, drawing candidates from the standard basis.
pub(crate) fn complete_orthonormal<T: Scalar>(columns: &mut [Vec<T>], alive: &[bool]) {
    let dim = columns.first().map_or(0, Vec::len);
    let mut candidate = 0;
    let mut alive = alive.to_vec();
    for j in 0..columns.len() {
        if alive[j] {
            continue;
        }
        while candidate < dim {
            let mut e = vec![T::zero(); dim];
            e[candidate] = T::one();
            candidate += 1;
            for _ in 0..2 {
                for (q, &ok) in columns.iter().zip(&alive) {
                    if ok {
                        let r = dot(q, &e);
                        for (x, &qv) in e.iter_mut().zip(q) {
                            *x -= r * qv;
                        }
                    }
                }
            }
            let n = norm(&e);
            if n > T::of(1e-3) {
                e.iter_mut().for_each(|x| *x /= n);
                columns[j] = e;
                alive[j] = true;
                break;
            }
        }
    }
}

/// Thin SVD `A = U·diag(σ)·Vᵀ` with σ sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// m × r, r = min(m, n)
    pub u: DenseMatrix<T>,
    pub singular_values: Vec<T>,
    /// n × r
    pub v: DenseMatrix<T>,
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Orthogonalizes the columns of `a` (or of `aᵀ` when `a` is wide) by plane
/// rotations until every pair is orthogonal to working precision. Singular
/// vectors belonging to zero singular values are completed to an orthonormal
/// basis. Each left singular vector is signed so its largest-magnitude entry
/// is positive.
pub fn jacobi_svd<T: Scalar>(a: &DenseMatrix<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        let t = jacobi_svd(&a.transpose());
        let mut svd = Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
        fix_signs(&mut svd);
        return svd;
    }
    let (m, n) = (a.rows(), a.cols());
    let mut cols = a.columns();
    let mut vcols = DenseMatrix::<T>::identity(n).columns();
    let tol = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(T, usize)> = cols.iter().enumerate().map(|(j, c)| (norm(c), j)).collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));

    let sigma_max = order.first().map_or(T::zero(), |o| o.0);
    let floor = sigma_max * T::epsilon() * T::of_usize(m.max(n));
    let mut ucols = Vec::with_capacity(n);
    let mut alive = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut vout = Vec::with_capacity(n);
    for &(s, j) in &order {
        if s > floor && s > T::zero() {
            ucols.push(cols[j].iter().map(|&x| x / s).collect());
            alive.push(true);
            singular_values.push(s);
        } else {
            ucols.push(vec![T::zero(); m]);
            alive.push(false);
            singular_values.push(T::zero());
        }
        vout.push(vcols[j].clone());
    }
    complete_orthonormal(&mut ucols, &alive);
    let mut svd = Svd {
        u: DenseMatrix::from_columns(m, &ucols),
        singular_values,
        v: DenseMatrix::from_columns(n, &vout),
    };
    fix_signs(&mut svd);
    svd
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Flips each (u_j, v_j) pair so the largest-magnitude entry of u_j is
/// positive; the first such entry wins on magnitude ties.
pub(crate) fn fix_signs<T: Scalar>(svd: &mut Svd<T>) {
    for j in 0..svd.u.cols() {
        let mut best = T::zero();
        for i in 0..svd.u.rows() {
            let v = svd.u[(i, j)];
            if v.abs() > best.abs() {
                best = v;
            }
        }
        if best < T::zero() {
            for i in 0..svd.u.rows() {
                svd.u[(i, j)] = -svd.u[(i, j)];
            }
            for i in 0..svd.v.rows() {
                svd.v[(i, j)] = -svd.v[(i, j)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd<f64>) -> DenseMatrix<f64> {
        let mut us = svd.u.clone();
        for i in 0..us.rows() {
            for (j, s) in svd.singular_values.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&svd.v.transpose())
    }

    #[test]
    fn diagonal_matrix() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        let svd = jacobi_svd(&a);
        assert_eq!(svd.singular_values, vec![2.0, 1.0]);
    }

    #[test]
    fn tall_wide_and_rank_deficient() {
        let tall = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        for a in [tall.clone(), tall.transpose()] {
            let svd = jacobi_svd(&a);
            let r = reconstruct(&svd);
            for (x, y) in r.as_slice().iter().zip(a.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!(svd.u.orthonormality_defect() < 1e-12);
            assert!(svd.v.orthonormality_defect() < 1e-12);
        }

        let rank1 = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        let svd = jacobi_svd(&rank1);
        assert_eq!(svd.singular_values[1], 0.0);
        assert!(svd.u.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn signs_make_largest_left_entry_positive() {
        let a = DenseMatrix::from_rows(&[vec![-3.0, 0.0], vec![0.0, -1.0], vec![0.0, 0.0]]);
        let svd = jacobi_svd(&a);
        for j in 0..2 {
            let col = svd.u.column(j);
            let big = col.iter().copied().fold(
                0.0f64,
                |b: f64, v: f64| if v.abs() > b.abs() { v } else { b },
            );
            assert!(big > 0.0);
        }
    }

    #[test]
    fn orthonormalize_drops_dependent_columns() {
        let mut cols = vec![
            vec![1.0, 1.0, 0.0],
            vec![2.0, 2.0, 0.0],
            vec![0.0, 1.0, 1.0],
        ];
        let alive = orthonormalize(&mut cols);
        assert_eq!(alive, vec![true, false, true]);
        complete_orthonormal(&mut cols, &alive);
        let m = DenseMatrix::from_columns(3, &cols);
        assert!(m.orthonormality_defect() < 1e-12);
    }
}
