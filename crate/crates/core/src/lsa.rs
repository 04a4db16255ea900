//! Latent semantic analysis: rank-k truncated SVD of a term–document matrix,
//! fold-in projection, and cosine similarity in the latent space.
//!
//! Small problems (`min(D, V) ≤ 64`) go through the dense one-sided Jacobi
//! SVD. Larger ones use Golub–Kahan–Lanczos bidiagonalization with full
//! reorthogonalization from a seeded random start, run until every one of
//! the top k Ritz triplets has a residual below `1e-9·σ₁`.
//!
//! Seeded randomized subspace iteration is available as an explicit method:
//! a Gaussian sketch with oversampling, at least `power_iterations` rounds
//! of power iteration, then an exact SVD of the projected `l × V` problem.
//! Power iteration continues past the minimum until the top-k Ritz values
//! stop moving. A sketch that would cover the whole rank falls back to the
//! dense path.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::codec::{CodecError, Decoder, Encoder};
use crate::linalg::{self, complete_orthonormal, jacobi_svd, orthonormalize, DenseMatrix, Svd};
use crate::scalar::Scalar;
use crate::text::{SparseVector, TermDocMatrix};

#[derive(Debug, Error)]
pub enum LsaError {
    #[error("rank k = {k} is invalid for a {rows}x{cols} matrix (need 1 <= k <= {max})", max = rows.min(cols))]
    RankTooLarge { k: usize, rows: usize, cols: usize },
    #[error("matrix has no nonzero entries")]
    ZeroMatrix,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdMethod {
    /// Dense Jacobi when the problem is small, Lanczos otherwise.
    Auto,
    Dense,
    Lanczos,
    Randomized,
}

#[derive(Debug, Clone)]
pub struct LsaParams {
    pub k: usize,
    pub seed: u64,
    pub oversampling: usize,
    /// Minimum number of power iterations on the randomized path.
    pub power_iterations: usize,
    /// Hard cap on power iterations, including the convergence phase.
    pub max_power_iterations: usize,
    pub method: SvdMethod,
    pub dense_threshold: usize,
}

impl LsaParams {
    pub fn new(k: usize, seed: u64) -> Self {
        LsaParams {
            k,
            seed,
            oversampling: 10,
            power_iterations: 8,
            max_power_iterations: 400,
            method: SvdMethod::Auto,
            dense_threshold: 64,
        }
    }
}

/// Default latent rank.
pub const DEFAULT_K: usize = 100;

/// `DEFAULT_K`-style request capped at `min(D, V) − 1` (but at least 1).
pub fn effective_k(requested: usize, rows: usize, cols: usize) -> usize {
    requested.min(rows.min(cols).saturating_sub(1)).max(1)
}

/// Coordinates of a document in the latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector<T>(pub Vec<T>);

impl<T: Scalar> LatentVector<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> T {
        linalg::norm(&self.0)
    }

    pub fn scaled(&self, factor: T) -> Self {
        LatentVector(self.0.iter().map(|&x| x * factor).collect())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// A fitted rank-k factorization `A ≈ U·Σ·Vᵀ`.
///
/// `doc_factors` holds `U` (D × k) and `term_factors` holds `V` (V × k), both
/// with orthonormal columns; `singular_values` holds the diagonal of `Σ`.
/// Folding a training row back in with [`LatentModel::project`] reproduces its
/// row of `doc_factors`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel<T> {
    k: usize,
    seed: u64,
    singular_values: Vec<T>,
    term_factors: DenseMatrix<T>,
    doc_factors: DenseMatrix<T>,
}

pub fn fit_lsa<T: Scalar>(
    matrix: &TermDocMatrix<T>,
    k: usize,
    seed: u64,
) -> Result<LatentModel<T>, LsaError> {
    fit_lsa_with(matrix, &LsaParams::new(k, seed))
}

pub fn fit_lsa_with<T: Scalar>(
    matrix: &TermDocMatrix<T>,
    params: &LsaParams,
) -> Result<LatentModel<T>, LsaError> {
    let (d, v) = (matrix.n_rows(), matrix.n_cols());
    let k = params.k;
    if k == 0 || k > d.min(v) {
        return Err(LsaError::RankTooLarge {
            k,
            rows: d,
            cols: v,
        });
    }
    if matrix.nnz() == 0 {
        return Err(LsaError::ZeroMatrix);
    }
    let small = d.min(v);
    let method = match params.method {
        SvdMethod::Randomized if k + params.oversampling >= small => SvdMethod::Dense,
        SvdMethod::Auto if small <= params.dense_threshold => SvdMethod::Dense,
        SvdMethod::Auto => SvdMethod::Lanczos,
        m => m,
    };
    let svd = match method {
        SvdMethod::Lanczos => lanczos_svd(matrix, k, params.seed),
        SvdMethod::Randomized => randomized_svd(matrix, params),
        _ => jacobi_svd(&DenseMatrix::from_rows(&matrix.to_dense())),
    };
    Ok(truncate(svd, k, params.seed))
}

fn truncate<T: Scalar>(svd: Svd<T>, k: usize, seed: u64) -> LatentModel<T> {
    let mut model = LatentModel {
        k,
        seed,
        singular_values: svd.singular_values[..k].to_vec(),
        term_factors: svd.v.truncate_cols(k),
        doc_factors: svd.u.truncate_cols(k),
    };
    // Zero singular values have arbitrary vectors; keep them orthonormal.
    let alive: Vec<bool> = model
        .singular_values
        .iter()
        .map(|&s| s > T::zero())
        .collect();
    if alive.iter().any(|a| !a) {
        let mut u = model.doc_factors.columns();
        complete_orthonormal(&mut u, &alive);
        model.doc_factors = DenseMatrix::from_columns(model.doc_factors.rows(), &u);
        let mut v = model.term_factors.columns();
        complete_orthonormal(&mut v, &alive);
        model.term_factors = DenseMatrix::from_columns(model.term_factors.rows(), &v);
    }
    model
}

/// `A · X` for a dense `X` given as columns (each of length V).
fn sparse_times<T: Scalar>(a: &TermDocMatrix<T>, xcols: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![vec![T::zero(); a.n_rows()]; xcols.len()];
    for (i, row) in a.rows().iter().enumerate() {
        for (c, x) in xcols.iter().enumerate() {
            out[c][i] = row
                .entries()
                .iter()
                .fold(T::zero(), |acc, &(j, v)| acc + v * x[j]);
        }
    }
    out
}

/// `Aᵀ · Y` for a dense `Y` given as columns (each of length D).
fn sparse_t_times<T: Scalar>(a: &TermDocMatrix<T>, ycols: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![vec![T::zero(); a.n_cols()]; ycols.len()];
    for (i, row) in a.rows().iter().enumerate() {
        for (c, y) in ycols.iter().enumerate() {
            let yi = y[i];
            if yi == T::zero() {
                continue;
            }
            let o = &mut out[c];
            for &(j, v) in row.entries() {
                o[j] += v * yi;
            }
        }
    }
    out
}

const CONVERGENCE_CHECK_EVERY: usize = 4;

fn randomized_svd<T: Scalar>(a: &TermDocMatrix<T>, params: &LsaParams) -> Svd<T> {
    let (d, v) = (a.n_rows(), a.n_cols());
    let l = (params.k + params.oversampling).min(d.min(v));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let omega: Vec<Vec<T>> = (0..l)
        .map(|_| {
            (0..v)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    T::of(g)
                })
                .collect()
        })
        .collect();

    let mut q = sparse_times(a, &omega);
    orthonormalize(&mut q);

    let tol = T::of(1e-10);
    let mut previous: Option<Vec<T>> = None;
    for iter in 1..=params.max_power_iterations.max(params.power_iterations) {
        let mut z = sparse_t_times(a, &q);
        orthonormalize(&mut z);
        q = sparse_times(a, &z);
        orthonormalize(&mut q);

        if iter < params.power_iterations
            || !(iter - params.power_iterations).is_multiple_of(CONVERGENCE_CHECK_EVERY)
        {
            continue;
        }
        let sigma = project_and_factor(a, &q).singular_values;
        let top = sigma[..params.k].to_vec();
        if let Some(prev) = &previous {
            let settled = top
                .iter()
                .zip(prev)
                .all(|(&s, &p)| (s - p).abs() <= tol * s.max(T::min_positive_value()));
            if settled {
                break;
            }
        }
        previous = Some(top);
    }

    let small = project_and_factor(a, &q);
    // U = Q · Ũ
    let qmat = DenseMatrix::from_columns(d, &q);
    let mut svd = Svd {
        u: qmat.matmul(&small.u),
        singular_values: small.singular_values,
        v: small.v,
    };
    linalg::fix_signs(&mut svd);
    svd
}

/// Residual bound, relative to σ₁, for accepting a Lanczos Ritz triplet.
const LANCZOS_TOL: f64 = 1e-9;

/// Removes from `x` its components along every vector of `basis` (two passes).
fn reorthogonalize<T: Scalar>(x: &mut [T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for b in basis {
            let r = linalg::dot(b, x);
            for (xi, &bi) in x.iter_mut().zip(b) {
                *xi -= r * bi;
            }
        }
    }
}

/// A seeded Gaussian vector orthogonal to `basis` and of unit length, or
/// `None` once `basis` spans the whole space.
fn fresh_direction<T: Scalar>(
    dim: usize,
    basis: &[Vec<T>],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<T>> {
    for _ in 0..4 {
        let mut x: Vec<T> = (0..dim)
            .map(|_| {
                let g: f64 = StandardNormal.sample(rng);
                T::of(g)
            })
            .collect();
        let before = linalg::norm(&x);
        reorthogonalize(&mut x, basis);
        let n = linalg::norm(&x);
        if n > before * T::of(1e-6) {
            x.iter_mut().for_each(|v| *v /= n);
            return Some(x);
        }
    }
    None
}

/// `Aᵀ` as a sparse matrix.
fn sparse_transpose<T: Scalar>(a: &TermDocMatrix<T>) -> TermDocMatrix<T> {
    let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); a.n_cols()];
    for (i, row) in a.rows().iter().enumerate() {
        for &(j, x) in row.entries() {
            cols[j].push((i, x));
        }
    }
    let rows = cols
        .into_iter()
        .map(|c| SparseVector::from_entries(a.n_rows(), c).expect("indices below the row count"))
        .collect();
    TermDocMatrix::from_rows(a.n_rows(), rows, a.weighting()).expect("rows share one dimension")
}

/// Truncated SVD by Lanczos bidiagonalization, started on the smaller side
/// so the final bidiagonal factorization is exact when the space runs out.
fn lanczos_svd<T: Scalar>(a: &TermDocMatrix<T>, k: usize, seed: u64) -> Svd<T> {
    let mut svd = if a.n_rows() < a.n_cols() {
        let t = lanczos_bidiagonal(&sparse_transpose(a), k, seed);
        Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    } else {
        lanczos_bidiagonal(a, k, seed)
    };
    linalg::fix_signs(&mut svd);
    svd
}

/// Golub–Kahan–Lanczos bidiagonalization `A·V = U·B` for `A` with at least
/// as many rows as columns.
///
/// Both Lanczos bases are kept and fully reorthogonalized. A breakdown (an
/// exhausted Krylov space) restarts from a fresh seeded direction with a
/// zero coupling coefficient. Every few steps the Ritz values of `B` are
/// checked; triplet i is accepted when `β·|p_i(last)| ≤ tol·σ₁`.
fn lanczos_bidiagonal<T: Scalar>(a: &TermDocMatrix<T>, k: usize, seed: u64) -> Svd<T> {
    let (d, v) = (a.n_rows(), a.n_cols());
    let max_steps = d.min(v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut us: Vec<Vec<T>> = Vec::new();
    let mut vs: Vec<Vec<T>> = vec![fresh_direction(v, &[], &mut rng).expect("nonempty space")];
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let mut next_check = (k + 10).min(max_steps);
    let mut scale = T::zero();

    loop {
        let j = vs.len() - 1;
        // u_j = A v_j − β_{j−1} u_{j−1}
        let mut u = sparse_times(a, std::slice::from_ref(&vs[j]))
            .pop()
            .expect("one column");
        reorthogonalize(&mut u, &us);
        let mut alpha = linalg::norm(&u);
        scale = scale.max(alpha);
        if alpha <= scale * T::epsilon() * T::of_usize(d.max(v)) {
            alpha = T::zero();
            u = match fresh_direction(d, &us, &mut rng) {
                Some(x) => x,
                None => break,
            };
        } else {
            u.iter_mut().for_each(|x| *x /= alpha);
        }
        us.push(u);
        alphas.push(alpha);

        let steps = us.len();
        if steps >= max_steps {
            break;
        }
        // v_{j+1} = Aᵀ u_j − α_j v_j
        let mut w = sparse_t_times(a, std::slice::from_ref(&us[j]))
            .pop()
            .expect("one column");
        reorthogonalize(&mut w, &vs);
        let mut beta = linalg::norm(&w);
        scale = scale.max(beta);
        let broke = beta <= scale * T::epsilon() * T::of_usize(d.max(v));
        if broke {
            beta = T::zero();
            w = match fresh_direction(v, &vs, &mut rng) {
                Some(x) => x,
                None => break,
            };
        } else {
            w.iter_mut().for_each(|x| *x /= beta);
        }

        if steps >= next_check && !broke {
            let (sigma_sq, last) = ritz_values(&alphas, &betas);
            let sigma1 = sigma_sq[0].max(0.0).sqrt();
            let converged = last
                .iter()
                .take(k)
                .all(|&z| beta.as_f64() * z.abs() <= LANCZOS_TOL * sigma1);
            if converged {
                break;
            }
            next_check = (steps + (steps / 4).max(10)).min(max_steps);
        }
        vs.push(w);
        betas.push(beta);
    }

    let m = us.len();
    vs.truncate(m);
    let r = k.min(m);
    // Top-r left singular vectors of B from the eigenvectors of B·Bᵀ, then an
    // exact SVD of Y = Bᵀ·P inside that subspace: B·Bᵀ's squared spectrum
    // never limits the accuracy of the returned σ.
    let (_, vectors) = tridiagonal_eigen(&alphas, &betas[..m - 1], true);
    let p = DenseMatrix::from_columns(m, &vectors[..r]);
    let mut y = DenseMatrix::zeros(m, r);
    for c in 0..r {
        for i in 0..m {
            // (Bᵀ p)_i = α_i p_i + β_{i−1} p_{i−1}
            let mut acc = alphas[i] * p[(i, c)];
            if i > 0 {
                acc += betas[i - 1] * p[(i - 1, c)];
            }
            y[(i, c)] = acc;
        }
    }
    let inner = jacobi_svd(&y);
    let u = DenseMatrix::from_columns(d, &us).matmul(&p.matmul(&inner.v));
    let vmat = DenseMatrix::from_columns(v, &vs).matmul(&inner.u);
    Svd {
        u,
        singular_values: inner.singular_values,
        v: vmat,
    }
}

/// Squared Ritz values of `B` in descending order, each with the last
/// component of its left singular vector: all the residual bound needs.
fn ritz_values<T: Scalar>(alphas: &[T], betas: &[T]) -> (Vec<f64>, Vec<f64>) {
    let (values, rows) = tridiagonal_eigen(alphas, betas, false);
    (
        values,
        rows.into_iter().map(|z: Vec<T>| z[0].as_f64()).collect(),
    )
}

/// Eigen-decomposition of the symmetric tridiagonal `B·Bᵀ`, where `B` is
/// upper bidiagonal with diagonal `alphas` and superdiagonal `betas`, by
/// implicit-shift QL. Eigenvalues come back in descending order with their
/// eigenvectors as columns; with `full` unset only the last row of each
/// eigenvector is accumulated, which costs O(m²) instead of O(m³).
fn tridiagonal_eigen<T: Scalar>(alphas: &[T], betas: &[T], full: bool) -> (Vec<f64>, Vec<Vec<T>>) {
    let n = alphas.len();
    let a: Vec<f64> = alphas.iter().map(|x| x.as_f64()).collect();
    let b: Vec<f64> = betas.iter().map(|x| x.as_f64()).collect();
    let mut diag: Vec<f64> = (0..n)
        .map(|i| a[i] * a[i] + b.get(i).map_or(0.0, |x| x * x))
        .collect();
    let mut off: Vec<f64> = (0..n)
        .map(|i| if i + 1 < n { a[i + 1] * b[i] } else { 0.0 })
        .collect();
    // Column i of the eigenvector matrix, or just its last entry.
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if full {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            } else {
                vec![if i + 1 == n { 1.0 } else { 0.0 }]
            }
        })
        .collect();

    for l in 0..n {
        for _ in 0..60 {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * off[i];
                let bb = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - bb;
                let (lo, hi) = z.split_at_mut(i + 1);
                for (zi, zf) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
                    let f = *zf;
                    *zf = s * *zi + c * f;
                    *zi = c * *zi - s * f;
                }
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| z[i].iter().map(|&x| T::of(x)).collect())
        .collect();
    (values, vectors)
}

/// SVD of `B = Qᵀ A`, returned as `Ũ` (l × l), σ, and `W` (V × l).
///
/// Factors the tall `Bᵀ = Q₂R` first so the Jacobi sweeps only touch the
/// small l × l triangle.
fn project_and_factor<T: Scalar>(a: &TermDocMatrix<T>, q: &[Vec<T>]) -> Svd<T> {
    // Columns of Aᵀ Q are the rows of B.
    let bt_cols = sparse_t_times(a, q);
    let mut q2 = bt_cols.clone();
    orthonormalize(&mut q2);
    let l = q.len();
    // R = Q₂ᵀ Bᵀ, formed explicitly so dependent columns stay exact.
    let mut r = DenseMatrix::zeros(l, l);
    for (i, qi) in q2.iter().enumerate() {
        for (j, bj) in bt_cols.iter().enumerate() {
            r[(i, j)] = linalg::dot(qi, bj);
        }
    }
    let svd_r = jacobi_svd(&r);
    // Bᵀ = Q₂ U_r Σ V_rᵀ  ⇒  B = V_r Σ (Q₂ U_r)ᵀ
    let w = DenseMatrix::from_columns(a.n_cols(), &q2).matmul(&svd_r.u);
    Svd {
        u: svd_r.v,
        singular_values: svd_r.singular_values,
        v: w,
    }
}

/// Cosine similarity; `0` when either vector has zero norm.
pub fn cosine<T: Scalar>(a: &LatentVector<T>, b: &LatentVector<T>) -> Result<T, LsaError> {
    cosine_slices(&a.0, &b.0)
}

pub fn cosine_slices<T: Scalar>(a: &[T], b: &[T]) -> Result<T, LsaError> {
    if a.len() != b.len() {
        return Err(LsaError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (linalg::norm(a), linalg::norm(b));
    if na == T::zero() || nb == T::zero() {
        return Ok(T::zero());
    }
    let c = linalg::dot(a, b) / (na * nb);
    Ok(c.max(-T::one()).min(T::one()))
}

const MAGIC: &[u8; 8] = b"WMAPLSA\0";
const VERSION: u8 = 1;

impl<T: Scalar> LatentModel<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    /// Right singular vectors, V × k.
    pub fn term_factors(&self) -> &DenseMatrix<T> {
        &self.term_factors
    }

    /// Left singular vectors, D × k: training document coordinates.
    pub fn doc_factors(&self) -> &DenseMatrix<T> {
        &self.doc_factors
    }

    pub fn n_terms(&self) -> usize {
        self.term_factors.rows()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_factors.rows()
    }

    pub fn doc_vector(&self, i: usize) -> LatentVector<T> {
        LatentVector(self.doc_factors.row(i).to_vec())
    }

    /// Fold-in: `Σ⁻¹ · Vᵀ · v`. Directions with a zero singular value get coordinate 0.
    pub fn project(&self, v: &SparseVector<T>) -> Result<LatentVector<T>, LsaError> {
        if v.dimension() != self.n_terms() {
            return Err(LsaError::DimensionMismatch {
                expected: self.n_terms(),
                found: v.dimension(),
            });
        }
        let mut coords = vec![T::zero(); self.k];
        for &(i, x) in v.entries() {
            for (c, &t) in coords.iter_mut().zip(self.term_factors.row(i)) {
                *c += x * t;
            }
        }
        for (c, &s) in coords.iter_mut().zip(&self.singular_values) {
            *c = if s > T::zero() { *c / s } else { T::zero() };
        }
        Ok(LatentVector(coords))
    }

    /// The rank-k approximation `U Σ Vᵀ` as a dense D × V matrix.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let mut us = self.doc_factors.clone();
        for i in 0..us.rows() {
            for (x, &s) in us.row_mut(i).iter_mut().zip(&self.singular_values) {
                *x *= s;
            }
        }
        us.matmul(&self.term_factors.transpose())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new::<T>(MAGIC, VERSION);
        e.u32(self.k as u32);
        e.u64(self.seed);
        e.scalars(&self.singular_values);
        e.len(self.term_factors.rows());
        e.scalars(self.term_factors.as_slice());
        e.len(self.doc_factors.rows());
        e.scalars(self.doc_factors.as_slice());
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LsaError> {
        let mut d = Decoder::new::<T>(bytes, MAGIC, "LSA model", VERSION)?;
        let k = d.u32()? as usize;
        let seed = d.u64()?;
        let singular_values = d.scalars()?;
        let n_terms = d.len()?;
        let term = d.scalars()?;
        let n_docs = d.len()?;
        let docs = d.scalars()?;
        d.finish()?;
        let corrupt = |m: &str| LsaError::Codec(CodecError::Corrupt(m.to_string()));
        if singular_values.len() != k || term.len() != n_terms * k || docs.len() != n_docs * k {
            return Err(corrupt("factor shapes disagree with k"));
        }
        Ok(LatentModel {
            k,
            seed,
            singular_values,
            term_factors: DenseMatrix::from_vec(n_terms, k, term),
            doc_factors: DenseMatrix::from_vec(n_docs, k, docs),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), LsaError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| LsaError::Codec(e.into()))
    }

    pub fn load(path: &Path) -> Result<Self, LsaError> {
        let bytes = std::fs::read(path).map_err(|e| LsaError::Codec(e.into()))?;
        Self::from_bytes(&bytes)
    }
}
