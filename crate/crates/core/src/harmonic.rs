//! Characters, induced representations, Fourier transforms and the dual
//! domain `{(ρ, K_ρ)}` for groups with abelian `TF`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PeriodicMap;
use crate::group::{GroupDescriptor, GroupWord};
use crate::linalg::{kron, max_abs_c, to_complex, CMat, RMat, RVec};

/// `χ_k(w) = exp(2πi⟨k, trans(π(w))⟩)` for `w ∈ TF`.
pub fn char_eval(desc: &GroupDescriptor, k: &[f64], w: &GroupWord) -> Result<Complex64> {
    if !desc.in_tf(w) {
        return Err(Error::NotInTf(w.clone()));
    }
    let b = desc.pi_trans(w);
    let phase: f64 = k.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    Ok(Complex64::from_polar(1.0, 2.0 * PI * phase))
}

/// A unitary representation of `TF` that is trivial on the wave-vector part:
/// `ρ(t^z p_q) = T_1^{z_1}⋯T_{d2}^{z_{d2}} Q_q`.
#[derive(Debug, Clone)]
pub struct BaseRep {
    pub label: String,
    pub dim: usize,
    pub translation: Vec<CMat>,
    /// Indexed by point index; `None` outside `TF`.
    pub point: Vec<Option<CMat>>,
}

impl BaseRep {
    pub fn trivial(desc: &GroupDescriptor) -> Self {
        let one = CMat::identity(1, 1);
        Self {
            label: "trivial".into(),
            dim: 1,
            translation: vec![one.clone(); desc.d2],
            point: (0..desc.order_of_point_part())
                .map(|q| if desc.tf_points().contains(&q) { Some(one.clone()) } else { None })
                .collect(),
        }
    }

    /// Character of `TF/T` from values on the `TF` point indices.
    pub fn character(desc: &GroupDescriptor, label: String, values: &[(usize, Complex64)]) -> Self {
        let mut point = vec![None; desc.order_of_point_part()];
        for &(q, v) in values {
            point[q] = Some(CMat::from_element(1, 1, v));
        }
        Self { label, dim: 1, translation: vec![CMat::identity(1, 1); desc.d2], point }
    }

    pub fn eval(&self, w: &GroupWord) -> Result<CMat> {
        let q = self.point[w.q].as_ref().ok_or_else(|| Error::NotInTf(w.clone()))?;
        let mut acc = CMat::identity(self.dim, self.dim);
        for (t, &n) in self.translation.iter().zip(&w.z) {
            let base = if n >= 0 { t.clone() } else { t.adjoint() };
            for _ in 0..n.unsigned_abs() {
                acc = &acc * &base;
            }
        }
        Ok(acc * q)
    }
}

/// `Ind_{TF}^G (χ_k ρ)` with coset representatives `p_q`, `q ∈ tf_coset_reps`.
#[derive(Debug, Clone)]
pub struct InducedRep<'a> {
    pub desc: &'a GroupDescriptor,
    pub k: Vec<f64>,
    pub base: BaseRep,
    pub reps: Vec<usize>,
}

impl<'a> InducedRep<'a> {
    pub fn new(desc: &'a GroupDescriptor, k: &[f64], base: BaseRep) -> Result<Self> {
        if desc.d2 != k.len() {
            return Err(Error::Descriptor(format!("wave vector has length {}, expected {}", k.len(), desc.d2)));
        }
        Ok(Self { desc, k: k.to_vec(), base, reps: desc.tf_coset_reps() })
    }

    pub fn dim(&self) -> usize {
        self.reps.len() * self.base.dim
    }

    /// `χ_k ρ` on `TF`.
    pub fn inner(&self, w: &GroupWord) -> Result<CMat> {
        Ok(self.base.eval(w)? * char_eval(self.desc, &self.k, w)?)
    }

    /// `[ρ̇(k_i^{-1} w k_j)]_{ij}`.
    pub fn eval(&self, w: &GroupWord) -> CMat {
        let dr = self.base.dim;
        let n0 = self.reps.len();
        let mut out = CMat::zeros(n0 * dr, n0 * dr);
        for (i, &ri) in self.reps.iter().enumerate() {
            let ki_inv = GroupWord::new(vec![0; self.desc.d2], self.desc.point_inverse(ri));
            let left = self.desc.compose(&ki_inv, w);
            for (j, &rj) in self.reps.iter().enumerate() {
                let x = self.desc.compose(&left, &GroupWord::new(vec![0; self.desc.d2], rj));
                if self.desc.in_tf(&x) {
                    out.view_mut((i * dr, j * dr), (dr, dr)).copy_from(&self.inner(&x).expect("in TF"));
                }
            }
        }
        out
    }

    /// `ρ(w) − I`, with diagonal phase differences `e^{iθ} − 1` formed without cancellation.
    pub fn eval_centered(&self, w: &GroupWord) -> CMat {
        let mut out = self.eval(w);
        let dr = self.base.dim;
        for (i, &ri) in self.reps.iter().enumerate() {
            let ki_inv = GroupWord::new(vec![0; self.desc.d2], self.desc.point_inverse(ri));
            let x = self.desc.compose(&self.desc.compose(&ki_inv, w), &GroupWord::new(vec![0; self.desc.d2], ri));
            let trivial_base = self.desc.in_tf(&x)
                && dr == 1
                && self.base.eval(&x).map(|m| m[(0, 0)] == Complex64::new(1.0, 0.0)).unwrap_or(false);
            if trivial_base {
                let b = self.desc.pi_trans(&x);
                let cycles: f64 = self.k.iter().zip(b.iter()).map(|(p, q)| p * q).sum();
                let theta = 2.0 * PI * (cycles - cycles.round());
                let h = (0.5 * theta).sin();
                out[(i, i)] = Complex64::new(-2.0 * h * h, theta.sin());
            } else {
                for j in 0..dr {
                    out[(i * dr + j, i * dr + j)] -= Complex64::new(1.0, 0.0);
                }
            }
        }
        out
    }

    /// Whether `χ_k ρ` is trivial on `T^N`, which makes the induced representation `T^N`-periodic.
    pub fn is_periodic(&self, n: usize) -> bool {
        (0..self.desc.d2).all(|i| {
            let mut z = vec![0i64; self.desc.d2];
            z[i] = n as i64;
            let w = GroupWord::new(z, 0);
            let m = self.inner(&w).expect("translation");
            max_abs_c(&(m - CMat::identity(self.base.dim, self.base.dim))) < 1e-9
        })
    }
}

/// `f̂(ρ) = Σ_g f(g) ⊗ ρ(g)` over a finite support.
pub fn fourier_l1<'a, I>(f: I, rep: &InducedRep) -> CMat
where
    I: IntoIterator<Item = (&'a GroupWord, &'a RMat)>,
{
    let items: Vec<(&GroupWord, &RMat)> = f.into_iter().collect();
    let dim = rep.dim();
    let (m, n) = items.first().map(|(_, a)| a.shape()).unwrap_or((0, 0));
    items
        .par_iter()
        .map(|(g, a)| kron(&to_complex(a), &rep.eval(g)))
        .reduce(|| CMat::zeros(m * dim, n * dim), |a, b| a + b)
}

/// `f̂(ρ)` evaluated as `Σ_g f(g) ⊗ (ρ(g) − I) + (Σ_g f(g)) ⊗ I`. Near `k = 0` the
/// terms are of the size of the result, so small eigenvalues keep their relative accuracy.
pub fn fourier_l1_centered(items: &[(GroupWord, RMat)], total: &RMat, rep: &InducedRep) -> CMat {
    let dim = rep.dim();
    let (m, n) = total.shape();
    let base = kron(&to_complex(total), &CMat::identity(dim, dim));
    items
        .par_iter()
        .map(|(g, a)| kron(&to_complex(a), &rep.eval_centered(g)))
        .reduce(|| CMat::zeros(m * dim, n * dim), |a, b| a + b)
        + base
}

/// `û(ρ) = (1/|C_N|) Σ_{g∈C_N} u(g) ⊗ ρ(g)`.
pub fn fourier_periodic(desc: &GroupDescriptor, u: &PeriodicMap, rep: &InducedRep) -> Result<CMat> {
    if !rep.is_periodic(u.n) {
        return Err(Error::NotPeriodic { n: u.n });
    }
    let reps = desc.coset_reps(u.n)?;
    let dim = rep.dim();
    let (m, n) = u.values[0].shape();
    let s = reps
        .par_iter()
        .zip(u.values.par_iter())
        .map(|(g, v)| kron(v, &rep.eval(g)))
        .reduce(|| CMat::zeros(m * dim, n * dim), |a, b| a + b);
    Ok(s / Complex64::new(reps.len() as f64, 0.0))
}

/// `(f ∗ v)(g) = Σ_h f(h) v(h^{-1}g)`.
pub fn convolve<'a, I>(desc: &GroupDescriptor, f: I, v: &PeriodicMap) -> Result<PeriodicMap>
where
    I: IntoIterator<Item = (&'a GroupWord, &'a RMat)>,
{
    let items: Vec<(&GroupWord, CMat)> = f.into_iter().map(|(g, a)| (g, to_complex(a))).collect();
    let reps = desc.coset_reps(v.n)?;
    let values = reps
        .par_iter()
        .map(|g| {
            let mut acc: Option<CMat> = None;
            for (h, a) in &items {
                let term = a * v.at(desc, &desc.compose(&desc.inverse(h), g));
                acc = Some(match acc {
                    Some(x) => x + term,
                    None => term,
                });
            }
            acc.unwrap_or_else(|| CMat::zeros(0, 0))
        })
        .collect();
    Ok(PeriodicMap { n: v.n, values })
}

/// All characters of the finite group `TF/T`, as values on the `TF` point indices.
pub fn tf_characters(desc: &GroupDescriptor) -> Result<Vec<Vec<(usize, Complex64)>>> {
    let pts = desc.tf_points();
    for &a in &pts {
        for &b in &pts {
            if desc.table[a][b] != desc.table[b][a] {
                return Err(Error::NonAbelianTf);
            }
        }
    }
    let order = |q: usize| {
        let mut x = q;
        let mut n = 1;
        while x != 0 {
            x = desc.table[x][q];
            n += 1;
        }
        n
    };
    // greedy generating set
    let mut gens: Vec<usize> = Vec::new();
    let mut span: Vec<usize> = vec![0];
    for &q in &pts {
        if !span.contains(&q) {
            gens.push(q);
            let mut frontier = span.clone();
            while let Some(x) = frontier.pop() {
                for &g in &gens {
                    let y = desc.table[x][g];
                    if !span.contains(&y) {
                        span.push(y);
                        frontier.push(y);
                    }
                }
            }
        }
    }
    let orders: Vec<usize> = gens.iter().map(|&g| order(g)).collect();
    let total: usize = orders.iter().product();
    let mut out = Vec::new();
    for mut code in 0..total {
        let exps: Vec<usize> = orders
            .iter()
            .map(|&o| {
                let e = code % o;
                code /= o;
                e
            })
            .collect();
        // propagate values from generators by breadth-first products
        let mut val: Vec<Option<Complex64>> = vec![None; desc.order_of_point_part()];
        val[0] = Some(Complex64::new(1.0, 0.0));
        let mut frontier = vec![0usize];
        let mut consistent = true;
        while let Some(x) = frontier.pop() {
            for (gi, &g) in gens.iter().enumerate() {
                let v = val[x].unwrap()
                    * Complex64::from_polar(1.0, 2.0 * PI * exps[gi] as f64 / orders[gi] as f64);
                let y = desc.table[x][g];
                match val[y] {
                    None => {
                        val[y] = Some(v);
                        frontier.push(y);
                    }
                    Some(w) => {
                        if (w - v).norm() > 1e-9 {
                            consistent = false;
                        }
                    }
                }
            }
        }
        if consistent {
            out.push(pts.iter().map(|&q| (q, val[q].unwrap())).collect());
        }
    }
    Ok(out)
}

/// Fundamental domain for `G_ρ` acting on wave vectors.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KDomain {
    /// `d2 = 0`: the single point `k = ()`.
    Point,
    /// `[lo, hi)` or `[lo, hi]` along the dual axis.
    Interval { lo: f64, hi: f64, closed: bool },
    /// `[0,1)^{d2}` in dual-basis coordinates, thinned by the point-group fold.
    Box { dual_basis: Vec<Vec<f64>> },
}

/// One representation class and its wave-vector symmetries.
#[derive(Debug, Clone)]
pub struct DualRep {
    pub base: BaseRep,
    /// Point indices `c` of coset representatives with `c·ρ = ρ`.
    pub stabilizer: Vec<usize>,
    /// Integer matrices acting on dual-basis coordinates, row-major.
    pub fold: Vec<Vec<i64>>,
    pub domain: KDomain,
}

#[derive(Debug, Clone)]
pub struct DualDomain {
    pub d2: usize,
    pub dual_basis: RMat,
    pub reps: Vec<DualRep>,
}

fn transpose_int(m: &[i64], n: usize) -> Vec<i64> {
    (0..n * n).map(|idx| m[(idx % n) * n + idx / n]).collect()
}

/// Conjugate `c^{-1} p_q c` of a `TF` point element.
fn conj_point(desc: &GroupDescriptor, c: usize, q: usize) -> usize {
    let ci = desc.point_inverse(c);
    desc.table[desc.table[ci][q]][c]
}

pub fn dual_domain(desc: &GroupDescriptor) -> Result<DualDomain> {
    let chars = tf_characters(desc)?;
    let reps = desc.tf_coset_reps();
    let d2 = desc.d2;
    let lookup = |ch: &Vec<(usize, Complex64)>, q: usize| ch.iter().find(|(p, _)| *p == q).unwrap().1;
    let same = |a: &Vec<(usize, Complex64)>, b: &Vec<(usize, Complex64)>| {
        a.iter().all(|&(q, v)| (v - lookup(b, q)).norm() < 1e-9)
    };
    let act = |c: usize, ch: &Vec<(usize, Complex64)>| -> Vec<(usize, Complex64)> {
        ch.iter().map(|&(q, _)| (q, lookup(ch, conj_point(desc, c, q)))).collect()
    };
    let mut used = vec![false; chars.len()];
    let mut out = Vec::new();
    for i in 0..chars.len() {
        if used[i] {
            continue;
        }
        for &c in &reps {
            let img = act(c, &chars[i]);
            if let Some(j) = chars.iter().position(|x| same(x, &img)) {
                used[j] = true;
            }
        }
        let stabilizer: Vec<usize> = reps.iter().cloned().filter(|&c| same(&act(c, &chars[i]), &chars[i])).collect();
        let fold: Vec<Vec<i64>> = stabilizer.iter().map(|&c| transpose_int(desc.action_matrix(c), d2)).collect();
        let dual = desc.dual_lattice();
        let domain = match d2 {
            0 => KDomain::Point,
            1 => {
                let len = dual[(0, 0)].abs();
                if fold.iter().any(|m| m[0] == -1) {
                    KDomain::Interval { lo: 0.0, hi: len / 2.0, closed: true }
                } else {
                    KDomain::Interval { lo: 0.0, hi: len, closed: false }
                }
            }
            _ => KDomain::Box {
                dual_basis: (0..d2).map(|j| dual.column(j).iter().cloned().collect()).collect(),
            },
        };
        let label = if chars[i].iter().all(|(_, v)| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12) {
            "trivial".to_string()
        } else {
            format!("psi{i}")
        };
        let base = BaseRep::character(desc, label, &chars[i]);
        out.push(DualRep { base, stabilizer, fold, domain });
    }
    Ok(DualDomain { d2, dual_basis: desc.dual_lattice(), reps: out })
}

impl DualRep {
    /// Grid of wave vectors over `K_ρ`. Grids with `n` and `2n` points nest.
    pub fn grid(&self, dual_basis: &RMat, n: usize) -> Vec<RVec> {
        match &self.domain {
            KDomain::Point => vec![RVec::zeros(0)],
            KDomain::Interval { lo, hi, closed } => {
                let h = (hi - lo) / n as f64;
                let count = if *closed { n + 1 } else { n };
                (0..count).map(|i| DVector::from_vec(vec![lo + i as f64 * h])).collect()
            }
            KDomain::Box { .. } => {
                let d2 = dual_basis.ncols();
                let total = n.pow(d2 as u32);
                let mut out = Vec::new();
                for lin in 0..total {
                    let idx = delin(lin, n, d2);
                    let canonical = self.fold.iter().all(|m| {
                        let img: Vec<usize> = (0..d2)
                            .map(|r| {
                                let s: i64 = (0..d2).map(|c| m[r * d2 + c] * idx[c] as i64).sum();
                                s.rem_euclid(n as i64) as usize
                            })
                            .collect();
                        lin_of(&idx, n) <= lin_of(&img, n)
                    });
                    if canonical {
                        let kappa = DVector::from_iterator(d2, idx.iter().map(|&i| i as f64 / n as f64));
                        out.push(dual_basis * kappa);
                    }
                }
                out
            }
        }
    }
}

fn delin(mut lin: usize, n: usize, d: usize) -> Vec<usize> {
    let mut z = vec![0; d];
    for i in (0..d).rev() {
        z[i] = lin % n;
        lin /= n;
    }
    z
}

fn lin_of(z: &[usize], n: usize) -> usize {
    z.iter().fold(0, |acc, &x| acc * n + x)
}

/// Wave vectors of `(L*/N)/L*`.
pub fn periodic_wave_vectors(desc: &GroupDescriptor, n: usize) -> Vec<RVec> {
    let d2 = desc.d2;
    let dual = desc.dual_lattice();
    (0..n.pow(d2 as u32))
        .map(|lin| {
            let idx = delin(lin, n, d2);
            dual.clone() * DVector::from_iterator(d2, idx.iter().map(|&i| i as f64 / n as f64))
        })
        .collect()
}

/// `Σ_{k∈(L*/N)/L*} Σ_ψ ⟨û(Ind χ_kψ), v̂(Ind χ_kψ)⟩`, which equals `⟨u, v⟩` for `T^N`-periodic maps.
pub fn plancherel_sum(desc: &GroupDescriptor, u: &PeriodicMap, v: &PeriodicMap) -> Result<Complex64> {
    let chars = tf_characters(desc)?;
    let mut total = Complex64::new(0.0, 0.0);
    for k in periodic_wave_vectors(desc, u.n) {
        for (i, ch) in chars.iter().enumerate() {
            let rep = InducedRep::new(desc, k.as_slice(), BaseRep::character(desc, format!("psi{i}"), ch))?;
            let a = fourier_periodic(desc, u, &rep)?;
            let b = fourier_periodic(desc, v, &rep)?;
            total += a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum::<Complex64>();
        }
    }
    Ok(total)
}
