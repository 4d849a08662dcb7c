//! Criticality vector `e_V`, Hessian kernel `f_V` and quadratic forms of the
//! per-site energy on periodic displacements.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::PeriodicField;
use crate::group::{GroupDescriptor, GroupWord, Structure};
use crate::linalg::{RMat, RVec};
use crate::potential::{Derivatives, SiteConfiguration, SitePotential};
use crate::tolerance::ToleranceConfig;

/// `y0(g) = g·x0 − x0` for every `g` in `words`.
pub fn reference_config(s: &Structure, words: &[GroupWord]) -> SiteConfiguration {
    words.iter().map(|g| (g.clone(), s.relative(g))).collect()
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CriticalityReport {
    /// Row vector `e_V`, stored as a column.
    #[serde(serialize_with = "crate::linalg::serialize_vec")]
    pub e_v: RVec,
    pub norm: f64,
    pub is_critical: bool,
}

/// `e_V = Σ_{g∈R_V} ∂_gV(y0)(rot(g) − I)`.
pub fn compute_ev(s: &Structure, v: &SitePotential, tol: &ToleranceConfig) -> Result<CriticalityReport> {
    let y0 = reference_config(s, v.range());
    let der = v.derivatives(&y0)?;
    Ok(criticality_from(s, &der, tol))
}

fn criticality_from(s: &Structure, der: &Derivatives, tol: &ToleranceConfig) -> CriticalityReport {
    let d = s.d();
    let mut e = RVec::zeros(d);
    for (g, grad) in &der.grad {
        let m = s.rot(g) - RMat::identity(d, d);
        e += m.transpose() * grad;
    }
    let norm = e.norm();
    CriticalityReport { e_v: e, norm, is_critical: norm <= tol.criticality }
}

/// Finitely supported `f_V: G → R^{d×d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianKernel {
    pub d: usize,
    pub entries: BTreeMap<GroupWord, RMat>,
}

impl HessianKernel {
    pub fn support(&self) -> Vec<GroupWord> {
        self.entries.keys().cloned().collect()
    }

    pub fn get(&self, g: &GroupWord) -> Option<&RMat> {
        self.entries.get(g)
    }

    /// `max_g ‖f(g^{-1}) − f(g)ᵀ‖`.
    pub fn transpose_defect(&self, desc: &GroupDescriptor) -> f64 {
        let zero = RMat::zeros(self.d, self.d);
        self.entries
            .iter()
            .map(|(g, m)| {
                let other = self.entries.get(&desc.inverse(g)).unwrap_or(&zero);
                (other - m.transpose()).amax()
            })
            .fold(0.0, f64::max)
    }

    pub fn total(&self) -> RMat {
        self.entries.values().fold(RMat::zeros(self.d, self.d), |acc, m| acc + m)
    }
}

/// Four-term assembly of `f_V` over pairs `(h1, h2) ∈ R_V × R_V`.
pub fn compute_fv(s: &Structure, v: &SitePotential, tol: &ToleranceConfig) -> Result<HessianKernel> {
    let y0 = reference_config(s, v.range());
    let der = v.derivatives(&y0)?;
    Ok(kernel_from(s, &der, tol))
}

fn kernel_from(s: &Structure, der: &Derivatives, tol: &ToleranceConfig) -> HessianKernel {
    let desc = &s.descriptor;
    let d = s.d();
    let id = desc.identity();
    let pairs: Vec<_> = der.hess.iter().collect();
    let contributions: Vec<Vec<(GroupWord, RMat)>> = pairs
        .par_iter()
        .map(|((h2, h1), h)| {
            let r1 = s.rot(h1);
            let r2 = s.rot(h2);
            let h2inv = desc.inverse(h2);
            vec![
                (desc.compose(&h2inv, h1), r2.transpose() * *h * &r1),
                (h2inv, -(r2.transpose() * *h)),
                (h1.clone(), -(*h * &r1)),
                (id.clone(), (*h).clone()),
            ]
        })
        .collect();
    let mut entries: BTreeMap<GroupWord, RMat> = BTreeMap::new();
    for list in contributions {
        for (k, m) in list {
            *entries.entry(k).or_insert_with(|| RMat::zeros(d, d)) += m;
        }
    }
    let gmax = entries.values().map(|m| m.amax()).fold(0.0, f64::max);
    let cut = tol.kernel_prune * gmax;
    for m in entries.values_mut() {
        m.apply(|x| {
            if x.abs() < cut {
                *x = 0.0
            }
        });
    }
    entries.retain(|_, m| m.amax() > 0.0);
    HessianKernel { d, entries }
}

/// Everything needed to evaluate `E`, `E′` and `E″` at the reference configuration.
#[derive(Debug, Clone)]
pub struct HessianModel {
    pub structure: Structure,
    pub potential: SitePotential,
    pub y0: SiteConfiguration,
    pub derivs: Derivatives,
    pub criticality: CriticalityReport,
    pub kernel: HessianKernel,
    rots: HashMap<GroupWord, RMat>,
}

impl HessianModel {
    pub fn new(s: &Structure, v: &SitePotential, tol: &ToleranceConfig) -> Result<Self> {
        let y0 = reference_config(s, v.range());
        let derivs = v.derivatives(&y0)?;
        let criticality = criticality_from(s, &derivs, tol);
        let kernel = kernel_from(s, &derivs, tol);
        let rots = v.range().iter().map(|g| (g.clone(), s.rot(g))).collect();
        Ok(Self { structure: s.clone(), potential: v.clone(), y0, derivs, criticality, kernel, rots })
    }

    fn desc(&self) -> &GroupDescriptor {
        &self.structure.descriptor
    }

    /// `E(x̄) = V(y0)`.
    pub fn reference_energy(&self) -> Result<f64> {
        self.potential.energy(&self.y0)
    }

    /// `∂_{g2}∂_{g1}E(x̄) = (1/|C_N|) Σ_{t∈T^N} f_V(g2^{-1} g1 t)`.
    pub fn hessian_block(&self, g1: &GroupWord, g2: &GroupWord, n: usize) -> Result<RMat> {
        let desc = self.desc();
        desc.check_period(n)?;
        let x = desc.compose(&desc.inverse(g2), g1);
        let xinv = desc.inverse(&x);
        let mut out = RMat::zeros(self.kernel.d, self.kernel.d);
        for (s, m) in &self.kernel.entries {
            if desc.in_tn(&desc.compose(&xinv, s), n) {
                out += m;
            }
        }
        Ok(out / desc.num_cosets(n) as f64)
    }

    /// Per-site energy `E(x̄ + u)`, evaluated on actual positions.
    pub fn energy_per_site(&self, u: &PeriodicField) -> Result<f64> {
        let desc = self.desc();
        let x0 = &self.structure.x0;
        let reps = desc.coset_reps(u.n)?;
        let mut total = 0.0;
        for g in &reps {
            let rg = desc.realize(g);
            let pg = rg.act(&(x0 + u.at(desc, g)));
            let mut y = SiteConfiguration::new();
            for h in self.potential.range() {
                let gh = desc.compose(g, h);
                let p = desc.realize(&gh).act(&(x0 + u.at(desc, &gh)));
                y.insert(h.clone(), p - &pg);
            }
            total += self.potential.energy(&y)?;
        }
        Ok(total / reps.len() as f64)
    }

    /// `E″(x̄)(u, v)` by the direct per-site sum of `V″(y0)`.
    pub fn quadratic_form_direct(&self, u: &PeriodicField, v: &PeriodicField) -> Result<f64> {
        let desc = self.desc();
        let reps = desc.coset_reps(u.n)?;
        let mut total = 0.0;
        for g in &reps {
            let diff = |f: &PeriodicField, h: &GroupWord| -> RVec {
                &self.rots[h] * f.at(desc, &desc.compose(g, h)) - f.at(desc, g)
            };
            for ((h1, h2), m) in &self.derivs.hess {
                total += diff(u, h1).dot(&(m * diff(v, h2)));
            }
        }
        Ok(total / reps.len() as f64)
    }

    /// `E″(x̄)(u, v) = ⟨f_V ∗ v0, u0⟩` with `u0 = u(·^{-1})`.
    pub fn quadratic_form(&self, u: &PeriodicField, v: &PeriodicField) -> Result<f64> {
        let desc = self.desc();
        let reps = desc.coset_reps(u.n)?;
        let mut total = 0.0;
        for g in &reps {
            let ginv = desc.inverse(g);
            let mut conv = RVec::zeros(self.kernel.d);
            for (s, m) in &self.kernel.entries {
                conv += m * v.at(desc, &desc.compose(&ginv, s));
            }
            total += u.at(desc, &ginv).dot(&conv);
        }
        Ok(total / reps.len() as f64)
    }

    /// Both routes; errors if they disagree beyond `1e-9·(1 + |value|)`.
    pub fn quadratic_form_checked(&self, u: &PeriodicField, v: &PeriodicField) -> Result<f64> {
        let a = self.quadratic_form(u, v)?;
        let b = self.quadratic_form_direct(u, v)?;
        if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
            return Err(Error::RouteMismatch { what: "quadratic form", a, b });
        }
        Ok(a)
    }

    /// Full `(d·|C_N|)`-dimensional Hessian; block `(i, j)` is `∂_{c_i}∂_{c_j}E`.
    pub fn supercell_hessian(&self, n: usize) -> Result<RMat> {
        let desc = self.desc();
        let reps = desc.coset_reps(n)?;
        let d = self.kernel.d;
        let c = reps.len();
        let mut h = RMat::zeros(d * c, d * c);
        for (i, g) in reps.iter().enumerate() {
            for (s, m) in &self.kernel.entries {
                let j = desc.coset_index(&desc.compose(g, s), n);
                let mut blk = h.view_mut((i * d, j * d), (d, d));
                blk += m / c as f64;
            }
        }
        Ok(h)
    }
}
