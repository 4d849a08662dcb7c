//! Rigidity seminorms `‖·‖_R` and `|·|_{R,0,0}`.
//!
//! A finite range set `R` (listed in `φ` order) determines the space of
//! infinitesimally rigid fields on `R`; the seminorm of `u` at `g` is the
//! distance of `(u(gh))_{h∈R}` from that space, averaged over a period.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PeriodicField;
use crate::group::{GroupDescriptor, GroupWord, Structure};
use crate::linalg::{columns, rank, singular_values, RMat, RVec};
use crate::tolerance::ToleranceConfig;

/// The range set in `φ` order with an optional Property 2 witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    #[serde(rename = "R")]
    pub words: Vec<GroupWord>,
    #[serde(rename = "R_prime", default, skip_serializing_if = "Option::is_none")]
    pub r_prime: Option<Vec<GroupWord>>,
    #[serde(rename = "R_double_prime", default, skip_serializing_if = "Option::is_none")]
    pub r_double_prime: Option<Vec<GroupWord>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyFlags {
    pub property1: bool,
    pub orbit_rank: usize,
    pub property2: Option<bool>,
    /// Products `r′r″` missing from `R`.
    pub missing_products: Vec<GroupWord>,
    /// Sanity check that `R′` generates `G`.
    pub generates: Option<bool>,
}

fn has_property1(s: &Structure, words: &[GroupWord]) -> (bool, usize) {
    let id = s.descriptor.identity();
    let pts: Vec<RVec> = words.iter().map(|g| s.relative(g)).collect();
    let r = rank(&columns(s.d(), &pts), 1e-10);
    (words.contains(&id) && r == s.daff, r)
}

pub fn check_property(s: &Structure, spec: &RangeSpec) -> PropertyFlags {
    let desc = &s.descriptor;
    let (property1, orbit_rank) = has_property1(s, &spec.words);
    let mut flags =
        PropertyFlags { property1, orbit_rank, property2: None, missing_products: vec![], generates: None };
    if let (Some(rp), Some(rpp)) = (&spec.r_prime, &spec.r_double_prime) {
        let mut rp_id = rp.clone();
        if !rp_id.contains(&desc.identity()) {
            rp_id.push(desc.identity());
        }
        for a in &rp_id {
            for b in rpp {
                let ab = desc.compose(a, b);
                if !spec.words.contains(&ab) && !flags.missing_products.contains(&ab) {
                    flags.missing_products.push(ab);
                }
            }
        }
        let (p1, _) = has_property1(s, rpp);
        flags.property2 = Some(p1 && flags.missing_products.is_empty());
        flags.generates = Some(generates(desc, rp));
    }
    flags
}

/// Whether the words generate all of `G`: the point part must be reached and
/// the Schreier generators of the translation subgroup must span `Z^{d2}`.
pub fn generates(desc: &GroupDescriptor, gens: &[GroupWord]) -> bool {
    let np = desc.order_of_point_part();
    let mut all: Vec<GroupWord> = gens.to_vec();
    all.extend(gens.iter().map(|g| desc.inverse(g)));
    let mut reps: Vec<Option<GroupWord>> = vec![None; np];
    reps[0] = Some(desc.identity());
    let mut queue = vec![desc.identity()];
    while let Some(w) = queue.pop() {
        for r in &all {
            let x = desc.compose(&w, r);
            if reps[x.q].is_none() {
                reps[x.q] = Some(x.clone());
                queue.push(x);
            }
        }
    }
    if reps.iter().any(|r| r.is_none()) {
        return false;
    }
    let mut lattice: Vec<Vec<i64>> = Vec::new();
    for rep in reps.iter().flatten() {
        for r in &all {
            let x = desc.compose(rep, r);
            let back = reps[x.q].as_ref().unwrap();
            let s = desc.compose(&x, &desc.inverse(back));
            debug_assert_eq!(s.q, 0);
            if s.z.iter().any(|&v| v != 0) {
                lattice.push(s.z);
            }
        }
    }
    lattice_index(&lattice, desc.d2) == Some(1)
}

/// Index of the lattice spanned by integer vectors in `Z^dim` (gcd of maximal minors).
fn lattice_index(vs: &[Vec<i64>], dim: usize) -> Option<i64> {
    if dim == 0 {
        return Some(1);
    }
    let mut g = 0i64;
    let mut idx = vec![0usize; dim];
    fn rec(vs: &[Vec<i64>], dim: usize, start: usize, k: usize, idx: &mut Vec<usize>, g: &mut i64) {
        if k == dim {
            let m: Vec<Vec<i64>> = idx.iter().map(|&i| vs[i].clone()).collect();
            *g = gcd(*g, det(&m).abs());
            return;
        }
        for i in start..vs.len() {
            idx[k] = i;
            rec(vs, dim, i + 1, k + 1, idx, g);
        }
    }
    rec(vs, dim, 0, 0, &mut idx, &mut g);
    if g == 0 {
        None
    } else {
        Some(g)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<i64>> =
                m[1..].iter().map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect()).collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * m[0][j] * det(&minor)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigidKind {
    Trans,
    Rot,
    Rot0,
    Rot00,
    Iso,
    Iso0,
    Iso00,
}

/// Rigid fields restricted to `R`, stacked as `(d·|R|)`-columns.
#[derive(Debug, Clone)]
pub struct RigidBasis {
    pub kind: RigidKind,
    pub vectors: Vec<RVec>,
}

/// Skew generators `E_ij − E_ji` of the kind-specific class, in the coordinate
/// split `(d3, d4, d2)` with `d3 = d − daff`, `d4 = daff − d2`.
fn skew_pairs(s: &Structure, kind: RigidKind) -> Vec<(usize, usize)> {
    let d = s.d();
    let d3 = d - s.daff;
    let d1 = s.descriptor.d1;
    let in_a = |i: usize| i < d3;
    let in_c = |i: usize| i >= d1;
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if in_a(i) && in_a(j) {
                continue;
            }
            let keep = match kind {
                RigidKind::Rot => true,
                RigidKind::Rot0 => !(in_c(i) && in_c(j)),
                RigidKind::Rot00 => !in_c(i) && !in_c(j),
                _ => false,
            };
            if keep {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn rigid_basis(s: &Structure, words: &[GroupWord], kind: RigidKind) -> RigidBasis {
    let d = s.d();
    let stack = |f: &dyn Fn(&GroupWord) -> RVec| -> RVec {
        let mut v = RVec::zeros(d * words.len());
        for (k, g) in words.iter().enumerate() {
            v.rows_mut(k * d, d).copy_from(&f(g));
        }
        v
    };
    let trans = || -> Vec<RVec> {
        (0..d)
            .map(|i| {
                stack(&|g: &GroupWord| {
                    let mut e = RVec::zeros(d);
                    e[i] = 1.0;
                    s.rot(g).transpose() * e
                })
            })
            .collect()
    };
    let rot = |k: RigidKind| -> Vec<RVec> {
        skew_pairs(s, k)
            .into_iter()
            .map(|(i, j)| {
                let mut sk = RMat::zeros(d, d);
                sk[(i, j)] = 1.0;
                sk[(j, i)] = -1.0;
                stack(&|g: &GroupWord| s.rot(g).transpose() * (&sk * s.relative(g)))
            })
            .collect()
    };
    let vectors = match kind {
        RigidKind::Trans => trans(),
        RigidKind::Rot | RigidKind::Rot0 | RigidKind::Rot00 => rot(kind),
        RigidKind::Iso => [trans(), rot(RigidKind::Rot)].concat(),
        RigidKind::Iso0 => [trans(), rot(RigidKind::Rot0)].concat(),
        RigidKind::Iso00 => [trans(), rot(RigidKind::Rot00)].concat(),
    };
    RigidBasis { kind, vectors }
}

/// `P = I − QQᵀ` with `Q` from modified Gram–Schmidt (two passes).
pub fn projector_from(dim: usize, basis: &[RVec], tol: &ToleranceConfig) -> Result<RMat> {
    if basis.is_empty() {
        return Ok(RMat::identity(dim, dim));
    }
    let sv = singular_values(&columns(dim, basis));
    let smax = sv[0];
    let smin = sv[sv.len() - 1];
    let cond = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    if cond > tol.gram_condition {
        return Err(Error::DependentBasis(cond));
    }
    let mut q: Vec<RVec> = Vec::with_capacity(basis.len());
    for b in basis {
        let mut v = b.clone();
        for _ in 0..2 {
            for e in &q {
                let c = e.dot(&v);
                v -= e * c;
            }
        }
        let n = v.norm();
        q.push(v / n);
    }
    let qm = columns(dim, &q);
    Ok(RMat::identity(dim, dim) - &qm * qm.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeminormKind {
    /// `‖·‖_R`, kernel `U_iso R`.
    #[serde(rename = "R")]
    Full,
    /// `|·|_{R,0,0}`, kernel `U_iso,0,0 R`.
    #[serde(rename = "R00")]
    ZeroZero,
}

impl SeminormKind {
    pub fn label(&self) -> &'static str {
        match self {
            SeminormKind::Full => "R",
            SeminormKind::ZeroZero => "R00",
        }
    }
}

/// `g(h) = P(δ_{h,h′} I_d)_{h′∈R}`: the column blocks of the projector.
#[derive(Debug, Clone)]
pub struct SeminormKernel {
    pub kind: SeminormKind,
    pub words: Vec<GroupWord>,
    pub blocks: Vec<RMat>,
}

impl SeminormKernel {
    fn from_projector(kind: SeminormKind, words: &[GroupWord], p: &RMat, d: usize) -> Self {
        let blocks = (0..words.len()).map(|k| p.columns(k * d, d).into_owned()).collect();
        Self { kind, words: words.to_vec(), blocks }
    }

    pub fn get(&self, g: &GroupWord) -> Option<&RMat> {
        self.words.iter().position(|w| w == g).map(|i| &self.blocks[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupWord, &RMat)> {
        self.words.iter().zip(&self.blocks)
    }
}

/// Projectors and kernels for one structure and range set.
#[derive(Debug, Clone)]
pub struct SeminormModel {
    pub structure: Structure,
    pub range: RangeSpec,
    pub flags: PropertyFlags,
    pub p: RMat,
    pub p0: RMat,
    pub g_r: SeminormKernel,
    pub g_r00: SeminormKernel,
}

impl SeminormModel {
    pub fn new(s: &Structure, spec: &RangeSpec, tol: &ToleranceConfig) -> Result<Self> {
        let flags = check_property(s, spec);
        if !flags.property1 {
            return Err(Error::Range(format!(
                "Property 1 fails: orbit rank {} on R, daff = {}, id ∈ R: {}",
                flags.orbit_rank,
                s.daff,
                spec.words.contains(&s.descriptor.identity())
            )));
        }
        let mut seen = spec.words.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != spec.words.len() {
            return Err(Error::Range("R lists a word twice".into()));
        }
        let d = s.d();
        let dim = d * spec.words.len();
        let p = projector_from(dim, &rigid_basis(s, &spec.words, RigidKind::Iso).vectors, tol)?;
        let p0 = projector_from(dim, &rigid_basis(s, &spec.words, RigidKind::Iso00).vectors, tol)?;
        let g_r = SeminormKernel::from_projector(SeminormKind::Full, &spec.words, &p, d);
        let g_r00 = SeminormKernel::from_projector(SeminormKind::ZeroZero, &spec.words, &p0, d);
        Ok(Self { structure: s.clone(), range: spec.clone(), flags, p, p0, g_r, g_r00 })
    }

    pub fn kernel(&self, kind: SeminormKind) -> &SeminormKernel {
        match kind {
            SeminormKind::Full => &self.g_r,
            SeminormKind::ZeroZero => &self.g_r00,
        }
    }

    pub fn projector(&self, kind: SeminormKind) -> &RMat {
        match kind {
            SeminormKind::Full => &self.p,
            SeminormKind::ZeroZero => &self.p0,
        }
    }

    fn desc(&self) -> &GroupDescriptor {
        &self.structure.descriptor
    }

    fn restrict(&self, u: &PeriodicField, g: &GroupWord) -> RVec {
        let desc = self.desc();
        let d = self.structure.d();
        let mut v = RVec::zeros(d * self.range.words.len());
        for (k, h) in self.range.words.iter().enumerate() {
            v.rows_mut(k * d, d).copy_from(u.at(desc, &desc.compose(g, h)));
        }
        v
    }

    /// `((1/|C_N|) Σ_g ‖P (u(gh))_{h∈R}‖²)^{1/2}`.
    pub fn eval_direct(&self, u: &PeriodicField, kind: SeminormKind) -> Result<f64> {
        let reps = self.desc().coset_reps(u.n)?;
        let p = self.projector(kind);
        let s: f64 = reps.iter().map(|g| (p * self.restrict(u, g)).norm_squared()).sum();
        Ok((s / reps.len() as f64).sqrt())
    }

    /// `‖g_R ∗ u0‖_2` with `(g_R ∗ u0)(g) = Σ_{h∈R} g_R(h) u(g^{-1}h)`.
    pub fn eval_conv(&self, u: &PeriodicField, kind: SeminormKind) -> Result<f64> {
        let desc = self.desc();
        let reps = desc.coset_reps(u.n)?;
        let ker = self.kernel(kind);
        let mut s = 0.0;
        for g in &reps {
            let ginv = desc.inverse(g);
            let mut acc = RVec::zeros(self.structure.d() * ker.words.len());
            for (h, m) in ker.iter() {
                acc += m * u.at(desc, &desc.compose(&ginv, h));
            }
            s += acc.norm_squared();
        }
        Ok((s / reps.len() as f64).sqrt())
    }

    /// Both routes; errors on disagreement beyond `1e-10·(1 + value)`.
    pub fn eval(&self, u: &PeriodicField, kind: SeminormKind) -> Result<f64> {
        let a = self.eval_conv(u, kind)?;
        let b = self.eval_direct(u, kind)?;
        if (a - b).abs() > 1e-10 * (1.0 + a) {
            return Err(Error::RouteMismatch { what: "seminorm", a, b });
        }
        Ok(a)
    }

    /// Rows `(1/√|C_N|) P S_g` for all `g ∈ C_N`: `‖B x‖² = ‖u‖²` for the flattened field `x`.
    pub fn supercell_factor(&self, n: usize, kind: SeminormKind) -> Result<RMat> {
        let desc = self.desc();
        let reps = desc.coset_reps(n)?;
        let d = self.structure.d();
        let r = self.range.words.len();
        let c = reps.len();
        let p = self.projector(kind);
        let mut b = RMat::zeros(c * d * r, c * d);
        let scale = 1.0 / (c as f64).sqrt();
        for (i, g) in reps.iter().enumerate() {
            for (k, h) in self.range.words.iter().enumerate() {
                let j = desc.coset_index(&desc.compose(g, h), n);
                let mut blk = b.view_mut((i * d * r, j * d), (d * r, d));
                blk += p.columns(k * d, d) * scale;
            }
        }
        Ok(b)
    }
}

/// `∇_R u(g): h ↦ u(gh) − rot(h)ᵀ u(g)`.
pub fn discrete_gradient(s: &Structure, u: &PeriodicField, words: &[GroupWord], g: &GroupWord) -> Vec<RVec> {
    let desc = &s.descriptor;
    words
        .iter()
        .map(|h| u.at(desc, &desc.compose(g, h)) - s.rot(h).transpose() * u.at(desc, g))
        .collect()
}
