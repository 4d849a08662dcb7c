//! Smallest generalized eigenvalue of a Hermitian pencil,
//! `λ_min(A, B) = inf { ⟨Ax, x⟩ / ‖Bx‖² : Bx ≠ 0 } = sup { λ : A − λ BᴴB ⪰ 0 }`.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, max_abs_c, CMat, CVec};
use crate::tolerance::ToleranceConfig;

/// Extended real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    PosInf,
    NegInf,
}

impl Lambda {
    pub fn to_f64(self) -> f64 {
        match self {
            Lambda::Finite(v) => v,
            Lambda::PosInf => f64::INFINITY,
            Lambda::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            Lambda::PosInf
        } else if v == f64::NEG_INFINITY {
            Lambda::NegInf
        } else {
            Lambda::Finite(v)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Lambda::Finite(_))
    }

    pub fn min(self, other: Lambda) -> Lambda {
        if self.to_f64() <= other.to_f64() {
            self
        } else {
            other
        }
    }
}

impl std::fmt::Display for Lambda {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lambda::Finite(v) => write!(f, "{v:.10e}"),
            Lambda::PosInf => write!(f, "+inf"),
            Lambda::NegInf => write!(f, "-inf"),
        }
    }
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lambda::Finite(v) => s.serialize_f64(*v),
            Lambda::PosInf => s.serialize_str("+inf"),
            Lambda::NegInf => s.serialize_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LoewnerResult {
    pub value: Lambda,
    /// Numerical rank of `B`.
    pub rank: usize,
    pub cols: usize,
    /// Smallest singular value of `B` over its largest.
    pub sigma_ratio: f64,
    /// Some singular value sits within a factor 10 of the rank threshold.
    pub ambiguous_rank: bool,
    /// Why the value is infinite.
    pub reason: Option<String>,
    /// Rounding-error bound for finite values, `ε‖A‖/σ² + 2|λ|ε‖B‖/σ` with `σ` the
    /// smallest retained singular value, times the dimension.
    pub error_estimate: f64,
    /// A minimizing vector for finite values.
    #[serde(skip)]
    pub vector: Option<CVec>,
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let h = (a + a.adjoint()).scale(0.5);
    let e = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

fn check_hermitian(a: &CMat, tol: &ToleranceConfig) -> Result<()> {
    let defect = max_abs_c(&(a - a.adjoint()));
    if defect > tol.hermitian * (1.0 + max_abs_c(a)) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// `A⁺` for a PSD Hermitian matrix, dropping eigenvalues below `cut`.
fn psd_pinv(vals: &[f64], vecs: &CMat, cut: f64) -> CMat {
    let n = vals.len();
    let mut out = CMat::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        if v > cut {
            let c = vecs.column(i);
            out += c * c.adjoint() * Complex64::new(1.0 / v, 0.0);
        }
    }
    out
}

fn infinite(value: Lambda, rank: usize, cols: usize, ratio: f64, amb: bool, why: &str) -> LoewnerResult {
    LoewnerResult {
        value,
        rank,
        cols,
        sigma_ratio: ratio,
        ambiguous_rank: amb,
        reason: Some(why.to_string()),
        error_estimate: 0.0,
        vector: None,
    }
}

pub fn lambda_min(a: &CMat, b: &CMat, tol: &ToleranceConfig) -> Result<LoewnerResult> {
    lambda_min_scaled(a, b, 0.0, 0.0, tol)
}

/// As [`lambda_min`], with rank and PSD thresholds taken relative to at least
/// `a_scale` and `b_scale`. Transforms of kernels pass the kernel norms here, so
/// that a transform that vanishes up to rounding is treated as zero.
pub fn lambda_min_scaled(a: &CMat, b: &CMat, a_scale: f64, b_scale: f64, tol: &ToleranceConfig) -> Result<LoewnerResult> {
    let m = a.nrows();
    assert_eq!(a.ncols(), m);
    assert_eq!(b.ncols(), m);
    check_hermitian(a, tol)?;
    let a = (a + a.adjoint()).scale(0.5);
    let anorm = max_abs_c(&a).max(a_scale).max(f64::MIN_POSITIVE);
    let svd = jacobi_svd(b);
    let sv = &svd.values;
    let smax = sv.first().copied().unwrap_or(0.0);
    let thr = tol.rank_rtol * smax.max(b_scale);
    let mut range = Vec::new();
    let mut kernel = Vec::new();
    let mut ambiguous = false;
    for (i, &s) in sv.iter().enumerate() {
        if smax > 0.0 && s > thr {
            range.push(i);
        } else {
            kernel.push(i);
        }
        if thr > 0.0 && s > thr / 10.0 && s < thr * 10.0 {
            ambiguous = true;
        }
    }
    let vr = CMat::from_fn(m, range.len(), |r, c| svd.v[(r, range[c])]);
    let vk = CMat::from_fn(m, kernel.len(), |r, c| svd.v[(r, kernel[c])]);
    let sigma: Vec<f64> = range.iter().map(|&i| sv[i]).collect();
    // With fewer rows than columns the trailing values are structural zeros.
    let smin = if b.nrows() < m { 0.0 } else { sv.last().copied().unwrap_or(0.0) };
    let ratio = if smax > 0.0 { smin / smax.max(b_scale) } else { 0.0 };
    let rank = range.len();

    if rank == 0 {
        let (vals, _) = hermitian_eig(&a);
        let psd = vals.first().is_none_or(|&v| v >= -tol.psd_atol * anorm);
        return Ok(if psd {
            infinite(Lambda::PosInf, 0, m, ratio, ambiguous, "B = 0 and A ⪰ 0")
        } else {
            infinite(Lambda::NegInf, 0, m, ratio, ambiguous, "B = 0 and A has a negative direction")
        });
    }

    let sig = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let bnorm = smax.max(b_scale);
    let err = |l: f64| m as f64 * f64::EPSILON * (anorm / (sig * sig) + 2.0 * l.abs() * bnorm / sig);
    let sinv = CMat::from_diagonal(&CVec::from_iterator(rank, sigma.iter().map(|s| Complex64::new(1.0 / s, 0.0))));
    let arr = vr.adjoint() * &a * &vr;
    if kernel.is_empty() {
        let mm = &sinv * arr * &sinv;
        let (vals, vecs) = hermitian_eig(&mm);
        let x = &vr * &sinv * vecs.column(0);
        return Ok(LoewnerResult {
            value: Lambda::Finite(vals[0]),
            rank,
            cols: m,
            sigma_ratio: ratio,
            ambiguous_rank: ambiguous,
            reason: None,
            error_estimate: err(vals[0]),
            vector: Some(x),
        });
    }

    let akk = vk.adjoint() * &a * &vk;
    let akr = vk.adjoint() * &a * &vr;
    let (kvals, kvecs) = hermitian_eig(&akk);
    let cut = tol.psd_atol * anorm;
    if kvals[0] < -cut {
        return Ok(infinite(Lambda::NegInf, rank, m, ratio, ambiguous, "A is not PSD on ker B"));
    }
    let pinv = psd_pinv(&kvals, &kvecs, cut);
    let resid = &akr - &akk * &pinv * &akr;
    if max_abs_c(&resid) > tol.range_tol * anorm {
        return Ok(infinite(Lambda::NegInf, rank, m, ratio, ambiguous, "A couples ker B outside the range of A on ker B"));
    }
    let schur = &arr - akr.adjoint() * &pinv * &akr;
    let mm = &sinv * schur * &sinv;
    let (vals, vecs) = hermitian_eig(&mm);
    let xr = &sinv * vecs.column(0);
    let xk = -(&pinv * &akr * &xr);
    let x = &vr * xr + &vk * xk;
    Ok(LoewnerResult {
        value: Lambda::Finite(vals[0]),
        rank,
        cols: m,
        sigma_ratio: ratio,
        ambiguous_rank: ambiguous,
        reason: None,
        error_estimate: err(vals[0]),
        vector: Some(x),
    })
}

/// Rayleigh quotient `⟨Ax, x⟩ / ‖Bx‖²`.
pub fn rayleigh(a: &CMat, b: &CMat, x: &CVec) -> f64 {
    let num = x.dotc(&(a * x)).re;
    let den = (b * x).norm_squared();
    num / den
}

pub fn real_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: &ToleranceConfig) -> Result<LoewnerResult> {
    lambda_min(&crate::linalg::to_complex(a), &crate::linalg::to_complex(b), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_c(rng: &mut ChaCha8Rng, r: usize, cl: usize) -> CMat {
        CMat::from_fn(r, cl, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_herm(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let m = random_c(rng, n, n);
        (&m + m.adjoint()).scale(0.5)
    }

    /// Number of negative pivots of an unpivoted `LDLᴴ` (Sylvester inertia).
    fn negative_pivots(m: &CMat) -> usize {
        let n = m.nrows();
        let mut a = m.clone();
        let mut neg = 0;
        for k in 0..n {
            let p = a[(k, k)].re;
            if p < 0.0 {
                neg += 1;
            }
            for i in k + 1..n {
                let l = a[(i, k)] / p;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= l * v;
                }
            }
        }
        neg
    }

    fn cholesky_ok(m: &CMat) -> bool {
        let n = m.nrows();
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut s = m[(j, j)].re;
            for k in 0..j {
                s -= l[(j, k)].norm_sqr();
            }
            if s <= 0.0 {
                return false;
            }
            l[(j, j)] = c(s.sqrt());
            for i in j + 1..n {
                let mut v = m[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = v / l[(j, j)];
            }
        }
        true
    }

    /// `sup { λ : A − λ BᴴB + ε I ≻ 0 }` by bisection on Cholesky success.
    fn bisect_oracle(a: &CMat, b: &CMat, lo: f64, hi: f64, eps: f64) -> f64 {
        let bb = b.adjoint() * b;
        let n = a.nrows();
        let shift = CMat::identity(n, n) * c(eps);
        let ok = |l: f64| cholesky_ok(&(a - &bb * c(l) + &shift));
        let (mut lo, mut hi) = (lo, hi);
        assert!(ok(lo));
        assert!(!ok(hi));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn eig_matches_inertia() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let n = rng.gen_range(1..8);
            let a = random_herm(&mut rng, n);
            let (vals, vecs) = hermitian_eig(&a);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            for _ in 0..5 {
                let mu: f64 = rng.gen_range(-3.0..3.0);
                let shifted = &a - CMat::identity(n, n) * c(mu);
                let count = vals.iter().filter(|&&v| v < mu).count();
                assert_eq!(negative_pivots(&shifted), count);
            }
            let recon = &vecs * CMat::from_diagonal(&CVec::from_iterator(n, vals.iter().map(|&v| c(v)))) * vecs.adjoint();
            assert!(max_abs_c(&(recon - &a)) < 1e-12);
        }
    }

    #[test]
    fn full_rank_against_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tol = ToleranceConfig::default();
        for _ in 0..20 {
            let n = rng.gen_range(1..6);
            let p = n + rng.gen_range(0..3);
            let a = random_herm(&mut rng, n);
            let b = random_c(&mut rng, p, n);
            let r = lambda_min(&a, &b, &tol).unwrap();
            let smin = *crate::linalg::jacobi_svd(&b).values.last().unwrap();
            let bound = 2.0 * n as f64 / (smin * smin) + 1.0;
            let oracle = bisect_oracle(&a, &b, -bound, bound, 0.0);
            let v = r.value.to_f64();
            assert!((v - oracle).abs() < 1e-8 * (1.0 + oracle.abs()), "{v} vs {oracle}");
            let x = r.vector.unwrap();
            assert!((rayleigh(&a, &b, &x) - v).abs() < 1e-8 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn rank_deficient_cases() {
        let tol = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 4;
            // B kills the last coordinate; A is PD there and coupled in range
            let b = CMat::from_fn(3, n, |i, j| if i == j { c(1.0 + i as f64) } else { c(0.0) });
            let g = random_c(&mut rng, n, n);
            let a = &g * g.adjoint() - CMat::from_diagonal(&CVec::from_vec(vec![c(2.0), c(0.0), c(0.0), c(0.0)]));
            let r = lambda_min(&a, &b, &tol).unwrap();
            assert_eq!(r.rank, 3);
            let bound = 1e3;
            let oracle = bisect_oracle(&a, &b, -bound, bound, 0.0);
            let v = r.value.to_f64();
            assert!((v - oracle).abs() < 1e-7 * (1.0 + oracle.abs()), "{v} vs {oracle}");
            assert!((rayleigh(&a, &b, r.vector.as_ref().unwrap()) - v).abs() < 1e-8 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn singular_kernel_block_in_range() {
        let tol = ToleranceConfig::default();
        let a = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let b = CMat::from_row_slice(1, 2, &[c(1.0), c(0.0)]);
        assert_eq!(lambda_min(&a, &b, &tol).unwrap().value, Lambda::Finite(1.0));
    }

    #[test]
    fn divergent_cases() {
        let tol = ToleranceConfig::default();
        // A negative on ker B
        let a = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let b = CMat::from_row_slice(1, 2, &[c(1.0), c(0.0)]);
        assert_eq!(lambda_min(&a, &b, &tol).unwrap().value, Lambda::NegInf);
        // A vanishes on ker B but couples to it
        let a = CMat::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(0.0)]);
        let r = lambda_min(&a, &b, &tol).unwrap();
        assert_eq!(r.value, Lambda::NegInf);
        let bb = b.adjoint() * &b;
        for l in [-1e3, -1e6] {
            assert!(!cholesky_ok(&(&a - &bb * c(l) + CMat::identity(2, 2) * c(1e-12))));
        }
        // B = 0
        let z = CMat::zeros(1, 2);
        assert_eq!(lambda_min(&CMat::identity(2, 2), &z, &tol).unwrap().value, Lambda::PosInf);
        assert_eq!(lambda_min(&a, &z, &tol).unwrap().value, Lambda::NegInf);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        assert!(matches!(
            lambda_min(&a, &CMat::identity(2, 2), &ToleranceConfig::default()),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn ambiguous_rank_flag() {
        let tol = ToleranceConfig::default();
        let b = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(2e-10)]);
        let r = lambda_min(&CMat::identity(2, 2), &b, &tol).unwrap();
        assert!(r.ambiguous_rank);
        let b = CMat::identity(2, 2);
        assert!(!lambda_min(&CMat::identity(2, 2), &b, &tol).unwrap().ambiguous_rank);
    }

    #[test]
    fn rounding_noise_is_rank_zero() {
        let tol = ToleranceConfig::default();
        let b = CMat::from_row_slice(1, 2, &[c(3e-17), c(-1e-17)]);
        let a = CMat::from_row_slice(2, 2, &[c(1e-16), c(0.0), c(0.0), c(-1e-16)]);
        let r = lambda_min_scaled(&a, &b, 1.0, 1.0, &tol).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.value, Lambda::PosInf);
        assert_ne!(lambda_min(&a, &b, &tol).unwrap().rank, 0);
    }

    #[test]
    fn lambda_ordering() {
        assert_eq!(Lambda::NegInf.min(Lambda::Finite(1.0)), Lambda::NegInf);
        assert_eq!(Lambda::PosInf.min(Lambda::Finite(1.0)), Lambda::Finite(1.0));
        assert_eq!(Lambda::from_f64(f64::NEG_INFINITY), Lambda::NegInf);
        assert_eq!(serde_json::to_string(&Lambda::PosInf).unwrap(), "\"+inf\"");
    }

    #[test]
    fn small_examples() {
        let tol = ToleranceConfig::default();
        let i3 = CMat::identity(3, 3);
        assert!((lambda_min(&i3, &i3, &tol).unwrap().value.to_f64() - 1.0).abs() < 1e-14);
        let z = CMat::zeros(2, 2);
        assert_eq!(lambda_min(&CMat::identity(2, 2), &z, &tol).unwrap().value, Lambda::PosInf);
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0)]));
        assert_eq!(lambda_min(&d, &z, &tol).unwrap().value, Lambda::NegInf);
        let (vals, _) = hermitian_eig(&CMat::from_diagonal(&CVec::from_vec(vec![c(3.0), c(-1.0), c(2.0)])));
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        random_c(rng, n, n).qr().q()
    }

    #[test]
    fn scaling_and_unitary_invariance() {
        let tol = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.gen_range(2..8);
            let a = random_herm(&mut rng, n);
            let b = random_c(&mut rng, n, n);
            let l = lambda_min(&a, &b, &tol).unwrap().value.to_f64();
            let t = rng.gen_range(0.1..10.0);
            let la = lambda_min(&a.scale(t), &b, &tol).unwrap().value.to_f64();
            let lb = lambda_min(&a, &b.scale(t), &tol).unwrap().value.to_f64();
            assert!((la - t * l).abs() <= 1e-9 * (1.0 + (t * l).abs()));
            assert!((lb - l / (t * t)).abs() <= 1e-9 * (1.0 + (l / (t * t)).abs()));
            let u = random_unitary(&mut rng, n);
            let lu = lambda_min(&(u.adjoint() * &a * &u), &(&b * &u), &tol).unwrap().value.to_f64();
            assert!((lu - l).abs() <= 1e-9 * (1.0 + l.abs()), "{lu} vs {l}");
            let (vals, _) = hermitian_eig(&a);
            let (valsu, _) = hermitian_eig(&(u.adjoint() * &a * &u));
            for (x, y) in vals.iter().zip(&valsu) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn loewner_monotonicity() {
        let tol = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let n = rng.gen_range(2..8);
            let a1 = random_herm(&mut rng, n);
            let g = random_c(&mut rng, n, n);
            let a2 = &a1 + &g * g.adjoint();
            let m = rng.gen_range(1..=n);
            let b = random_c(&mut rng, m, n);
            let l1 = lambda_min(&a1, &b, &tol).unwrap().value.to_f64();
            let l2 = lambda_min(&a2, &b, &tol).unwrap().value.to_f64();
            let ok = if l2.is_finite() { l1 <= l2 + 1e-9 * (1.0 + l2.abs()) } else { l1 <= l2 };
            assert!(ok, "{l1} > {l2}");
        }
    }

    #[test]
    fn random_directions_never_undercut() {
        let tol = ToleranceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let n = rng.gen_range(2..7);
            let a = random_herm(&mut rng, n);
            let b = random_c(&mut rng, n, n);
            let r = lambda_min(&a, &b, &tol).unwrap();
            let l = r.value.to_f64();
            for _ in 0..500 {
                let x = CVec::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                assert!(rayleigh(&a, &b, &x) >= l - 1e-8 * (1.0 + l.abs()));
            }
            assert!((rayleigh(&a, &b, r.vector.as_ref().unwrap()) - l).abs() < 1e-8 * (1.0 + l.abs()));
        }
    }
}
