//! Small dense helpers: Kronecker products, direct sums, commutation matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `A ⊗ B` in the block layout `[a_ij B]`.
pub fn kron<T>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T>
where
    T: nalgebra::Scalar + Copy + Zero + std::ops::Mul<Output = T>,
{
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = DMatrix::<T>::from_element(m * p, n * q, T::zero());
    for i in 0..m {
        for j in 0..n {
            let aij = a[(i, j)];
            for k in 0..p {
                for l in 0..q {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Direct sum `A1 ⊕ … ⊕ Ak` (block diagonal, rectangular blocks allowed).
pub fn dsum<T>(blocks: &[DMatrix<T>]) -> DMatrix<T>
where
    T: nalgebra::Scalar + Copy + Zero,
{
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::<T>::from_element(rows, cols, T::zero());
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// The commutation matrix with `P_{p,m} (A ⊗ B) P_{n,q} = B ⊗ A` for `A: m×n`, `B: p×q`.
pub fn commutation(a: usize, b: usize) -> RMat {
    let mut p = RMat::zeros(a * b, a * b);
    for r in 0..a {
        for s in 0..b {
            p[(r * b + s, s * a + r)] = 1.0;
        }
    }
    p
}

/// `Q_{m,n1,…,nk} = (P_{m,n1} ⊕ … ⊕ P_{m,nk}) P_{Σn,m}`.
pub fn kron_sum_permutation(m: usize, ns: &[usize]) -> RMat {
    let blocks: Vec<RMat> = ns.iter().map(|&n| commutation(m, n)).collect();
    let total: usize = ns.iter().sum();
    dsum(&blocks) * commutation(total, m)
}

pub fn to_complex(a: &RMat) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs_c(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs(a: &RMat) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Singular values (descending) and right singular vectors of `B`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub values: Vec<f64>,
    /// Unitary `n × n`; column `j` belongs to `values[j]`, and the columns past
    /// `min(m, n)` span part of the kernel.
    pub v: CMat,
}

/// One-sided Jacobi SVD. Orthogonalizes the columns of `B V` by plane rotations
/// until every pair is orthogonal to working precision; the column norms are then
/// the singular values. Small singular values keep their relative accuracy and
/// exact zeros pose no difficulty.
pub fn jacobi_svd(b: &CMat) -> Svd {
    let n = b.ncols();
    let mut w = b.clone();
    let mut v = CMat::identity(n, n);
    let eps = f64::EPSILON;
    // Columns below this squared norm are zero at any usable rank threshold;
    // rotating them further would only produce subnormal noise.
    let floor = (eps * eps * b.norm()).powi(2);
    for _ in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dotc(&w.column(j));
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = gamma / g;
                let rot = |m: &mut CMat| {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, i)], m[(r, j)]);
                        m[(r, i)] = x * c - y * phase.conj() * s;
                        m[(r, j)] = x * phase * s + y * c;
                    }
                };
                rot(&mut w);
                rot(&mut v);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    Svd { values: idx.iter().map(|&j| norms[j]).collect(), v: CMat::from_fn(n, n, |r, c| v[(r, idx[c])]) }
}

/// Singular values of a real matrix, descending.
pub fn singular_values(a: &RMat) -> Vec<f64> {
    jacobi_svd(&to_complex(a)).values.into_iter().take(a.nrows().min(a.ncols())).collect()
}

/// Numerical rank from singular values with threshold `rtol · σ_max`.
pub fn rank(a: &RMat, rtol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = singular_values(a);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

/// Columns of `vectors` as a matrix with `dim` rows.
pub fn columns(dim: usize, vectors: &[RVec]) -> RMat {
    let mut m = RMat::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Serializes a vector as a plain JSON array.
pub fn serialize_vec<S: serde::Serializer>(v: &RVec, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}
