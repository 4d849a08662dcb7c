//! Finite-range site potentials `V: (R^d)^{G∖{id}} → R` with analytic partials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupWord;
use crate::linalg::{RMat, RVec};

/// Relative positions `y(g)`, keyed by group word.
pub type SiteConfiguration = BTreeMap<GroupWord, RVec>;

/// Radial profile `v(r)` of a pair term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PairProfile {
    /// `c12 r^{-12} − c6 r^{-6}`.
    LennardJones { c12: f64, c6: f64 },
    /// `c r^{-p}`.
    InversePower { c: f64, p: f64 },
    /// `k (r − r0)²`.
    Harmonic { k: f64, r0: f64 },
}

impl PairProfile {
    pub fn lennard_jones() -> Self {
        PairProfile::LennardJones { c12: 1.0, c6: 1.0 }
    }

    /// `(v, v′, v″)` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            PairProfile::LennardJones { c12, c6 } => {
                let r6 = r.powi(-6);
                let r12 = r6 * r6;
                (
                    c12 * r12 - c6 * r6,
                    (-12.0 * c12 * r12 + 6.0 * c6 * r6) / r,
                    (156.0 * c12 * r12 - 42.0 * c6 * r6) / (r * r),
                )
            }
            PairProfile::InversePower { c, p } => {
                let v = c * r.powf(-p);
                (v, -p * v / r, p * (p + 1.0) * v / (r * r))
            }
            PairProfile::Harmonic { k, r0 } => (k * (r - r0).powi(2), 2.0 * k * (r - r0), 2.0 * k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `w · v(‖y(g)‖)`.
    Pair { g: GroupWord, weight: f64, profile: PairProfile },
    /// `w · (⟨y(g),y(h)⟩/(‖y(g)‖‖y(h)‖) + c)²`.
    Cosine { g: GroupWord, h: GroupWord, weight: f64, c: f64 },
    /// `w · ‖y(g)‖²`.
    Square { g: GroupWord, weight: f64 },
}

/// A finite sum of terms on relative vectors.
#[derive(Debug, Clone, Default)]
pub struct SitePotential {
    terms: Vec<Term>,
    range: Vec<GroupWord>,
}

/// All first and second partials at one configuration.
#[derive(Debug, Clone, Default)]
pub struct Derivatives {
    pub grad: BTreeMap<GroupWord, RVec>,
    /// `hess[(g, h)] = ∂_g∂_hV`, entry `(i, j) = ∂²V/∂y(g)_i∂y(h)_j`.
    pub hess: BTreeMap<(GroupWord, GroupWord), RMat>,
}

fn fetch<'a>(y: &'a SiteConfiguration, g: &GroupWord) -> Result<&'a RVec> {
    y.get(g).ok_or_else(|| Error::MissingSite(g.clone()))
}

fn nonzero_norm(v: &RVec, g: &GroupWord) -> Result<f64> {
    let r = v.norm();
    if r == 0.0 {
        return Err(Error::ZeroBond(g.clone()));
    }
    Ok(r)
}

impl SitePotential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// The range `R_V`, sorted.
    pub fn range(&self) -> &[GroupWord] {
        &self.range
    }

    pub fn push(&mut self, term: Term) {
        let words: Vec<GroupWord> = match &term {
            Term::Pair { g, .. } | Term::Square { g, .. } => vec![g.clone()],
            Term::Cosine { g, h, .. } => vec![g.clone(), h.clone()],
        };
        for w in words {
            assert!(!w.is_identity(), "the identity is not in the domain of V");
            if let Err(pos) = self.range.binary_search(&w) {
                self.range.insert(pos, w);
            }
        }
        self.terms.push(term);
    }

    pub fn with_pair(mut self, neighbors: &[GroupWord], weight: f64, profile: PairProfile) -> Self {
        for g in neighbors {
            self.push(Term::Pair { g: g.clone(), weight, profile });
        }
        self
    }

    /// Double sum over ordered neighbour pairs, including `g = h`.
    pub fn with_cosine(mut self, neighbors: &[GroupWord], weight: f64, c: f64) -> Self {
        for g in neighbors {
            for h in neighbors {
                self.push(Term::Cosine { g: g.clone(), h: h.clone(), weight, c });
            }
        }
        self
    }

    pub fn with_square(mut self, g: GroupWord, weight: f64) -> Self {
        self.push(Term::Square { g, weight });
        self
    }

    pub fn energy(&self, y: &SiteConfiguration) -> Result<f64> {
        let mut e = 0.0;
        for t in &self.terms {
            e += match t {
                Term::Pair { g, weight, profile } => {
                    let r = nonzero_norm(fetch(y, g)?, g)?;
                    weight * profile.eval(r).0
                }
                Term::Cosine { g, h, weight, c } => {
                    let x = fetch(y, g)?;
                    let z = fetch(y, h)?;
                    let nx = nonzero_norm(x, g)?;
                    let nz = nonzero_norm(z, h)?;
                    if g == h {
                        weight * (1.0 + c).powi(2)
                    } else {
                        weight * (x.dot(z) / (nx * nz) + c).powi(2)
                    }
                }
                Term::Square { g, weight } => weight * fetch(y, g)?.norm_squared(),
            };
        }
        Ok(e)
    }

    pub fn derivatives(&self, y: &SiteConfiguration) -> Result<Derivatives> {
        let mut out = Derivatives::default();
        let d = y.values().next().map(|v| v.len()).unwrap_or(0);
        let add_g = |out: &mut Derivatives, g: &GroupWord, v: RVec| {
            *out.grad.entry(g.clone()).or_insert_with(|| RVec::zeros(d)) += v;
        };
        let add_h = |out: &mut Derivatives, g: &GroupWord, h: &GroupWord, m: RMat| {
            *out.hess.entry((g.clone(), h.clone())).or_insert_with(|| RMat::zeros(d, d)) += m;
        };
        for t in &self.terms {
            match t {
                Term::Pair { g, weight, profile } => {
                    let x = fetch(y, g)?;
                    let r = nonzero_norm(x, g)?;
                    let (_, v1, v2) = profile.eval(r);
                    let u = x / r;
                    let uu = &u * u.transpose();
                    add_g(&mut out, g, &u * (weight * v1));
                    let id = RMat::identity(d, d);
                    add_h(&mut out, g, g, (&uu * v2 + (id - &uu) * (v1 / r)) * *weight);
                }
                Term::Cosine { g, h, weight, c } => {
                    let x = fetch(y, g)?;
                    let z = fetch(y, h)?;
                    let nx = nonzero_norm(x, g)?;
                    let nz = nonzero_norm(z, h)?;
                    if g == h {
                        continue;
                    }
                    let (gx, gz, hxx, hxz, hzz, cos) = cosine_partials(x, z, nx, nz);
                    let s = cos + c;
                    add_g(&mut out, g, &gx * (2.0 * weight * s));
                    add_g(&mut out, h, &gz * (2.0 * weight * s));
                    let w2 = 2.0 * weight;
                    add_h(&mut out, g, g, (&gx * gx.transpose() + hxx * s) * w2);
                    add_h(&mut out, h, h, (&gz * gz.transpose() + hzz * s) * w2);
                    let cross = (&gx * gz.transpose() + &hxz * s) * w2;
                    add_h(&mut out, h, g, cross.transpose());
                    add_h(&mut out, g, h, cross);
                }
                Term::Square { g, weight } => {
                    let x = fetch(y, g)?;
                    add_g(&mut out, g, x * (2.0 * weight));
                    add_h(&mut out, g, g, RMat::identity(d, d) * (2.0 * weight));
                }
            }
        }
        Ok(out)
    }

    /// `∂_gV(y)`; the zero row off the range.
    pub fn partial_grad(&self, y: &SiteConfiguration, g: &GroupWord) -> Result<RVec> {
        let d = y.values().next().map(|v| v.len()).unwrap_or(0);
        Ok(self.derivatives(y)?.grad.remove(g).unwrap_or_else(|| RVec::zeros(d)))
    }

    /// `∂_g∂_hV(y)`; the zero matrix off the range.
    pub fn partial_hess(&self, y: &SiteConfiguration, g: &GroupWord, h: &GroupWord) -> Result<RMat> {
        let d = y.values().next().map(|v| v.len()).unwrap_or(0);
        Ok(self
            .derivatives(y)?
            .hess
            .remove(&(g.clone(), h.clone()))
            .unwrap_or_else(|| RMat::zeros(d, d)))
    }

    /// Compare analytic partials against central differences: gradients against
    /// differences of the energy, Hessian blocks against differences of the
    /// analytic gradient.
    pub fn fd_check(&self, y: &SiteConfiguration, step: f64) -> Result<FdReport> {
        let an = self.derivatives(y)?;
        let d = y.values().next().map(|v| v.len()).unwrap_or(0);
        let mut report = FdReport::default();
        let gscale = an.grad.values().map(|v| v.amax()).fold(1.0, f64::max);
        let hscale = an.hess.values().map(|m| m.amax()).fold(1.0, f64::max);
        let shifted = |g: &GroupWord, i: usize, s: f64| {
            let mut yy = y.clone();
            yy.get_mut(g).unwrap()[i] += s;
            yy
        };
        for g in &self.range {
            for i in 0..d {
                let ep = self.energy(&shifted(g, i, step))?;
                let em = self.energy(&shifted(g, i, -step))?;
                let fd = (ep - em) / (2.0 * step);
                let a = an.grad.get(g).map(|v| v[i]).unwrap_or(0.0);
                report.note_grad((a - fd).abs() / gscale, format!("∂_{g}V[{i}]"));
                let gp = self.derivatives(&shifted(g, i, step))?;
                let gm = self.derivatives(&shifted(g, i, -step))?;
                for h in &self.range {
                    let zero = RVec::zeros(d);
                    let col = (gp.grad.get(h).unwrap_or(&zero) - gm.grad.get(h).unwrap_or(&zero))
                        / (2.0 * step);
                    for j in 0..d {
                        let a = an.hess.get(&(h.clone(), g.clone())).map(|m| m[(j, i)]).unwrap_or(0.0);
                        report.note_hess((a - col[j]).abs() / hscale, format!("∂_{h}∂_{g}V[{j},{i}]"));
                    }
                }
            }
        }
        Ok(report)
    }
}

/// First and second partials of `cos θ = ⟨x,z⟩/(‖x‖‖z‖)`.
fn cosine_partials(x: &RVec, z: &RVec, nx: f64, nz: f64) -> (RVec, RVec, RMat, RMat, RMat, f64) {
    let d = x.len();
    let u = x / nx;
    let v = z / nz;
    let cos = u.dot(&v);
    let id = RMat::identity(d, d);
    let px = &id - &u * u.transpose();
    let pz = &id - &v * v.transpose();
    let gx = (&v - &u * cos) / nx;
    let gz = (&u - &v * cos) / nz;
    let pxv = &px * &v;
    let pzu = &pz * &u;
    let hxx = -(&u * pxv.transpose() + &pxv * u.transpose() + &px * cos) / (nx * nx);
    let hzz = -(&v * pzu.transpose() + &pzu * v.transpose() + &pz * cos) / (nz * nz);
    let hxz = (&px * &pz) / (nx * nz);
    (gx, gz, hxx, hxz, hzz, cos)
}

#[derive(Debug, Clone, Default)]
pub struct FdReport {
    pub max_grad: f64,
    pub max_hess: f64,
    pub worst_grad: String,
    pub worst_hess: String,
}

impl FdReport {
    fn note_grad(&mut self, e: f64, what: String) {
        if e > self.max_grad {
            self.max_grad = e;
            self.worst_grad = what;
        }
    }

    fn note_hess(&mut self, e: f64, what: String) {
        if e > self.max_hess {
            self.max_hess = e;
            self.worst_hess = what;
        }
    }

    pub fn max(&self) -> f64 {
        self.max_grad.max(self.max_hess)
    }
}
