//! Relaxation of parametrized structure families: Nelder–Mead over the free
//! parameters, golden-section for a single scale, Newton polish of the base point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupWord, Structure};
use crate::hessian::{compute_ev, reference_config};
use crate::linalg::{RMat, RVec};
use crate::potential::SitePotential;
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    pub restarts: usize,
    /// Factor applied to the initial simplex on every restart.
    pub shrink: f64,
    pub diameter_tol: f64,
    pub spread_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 20_000, restarts: 3, shrink: 0.5, diameter_tol: 1e-10, spread_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
}

struct Simplex {
    pts: Vec<Vec<f64>>,
    vals: Vec<f64>,
}

impl Simplex {
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.pts.len()).collect();
        idx.sort_by(|&i, &j| self.vals[i].total_cmp(&self.vals[j]));
        self.pts = idx.iter().map(|&i| self.pts[i].clone()).collect();
        self.vals = idx.iter().map(|&i| self.vals[i]).collect();
    }

    fn diameter(&self) -> f64 {
        let b = &self.pts[0];
        self.pts[1..]
            .iter()
            .map(|p| p.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    fn spread(&self) -> f64 {
        self.vals[self.vals.len() - 1] - self.vals[0]
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// One Nelder–Mead run. Non-finite values count as `+∞`, so leaving the
/// feasible set only ever contracts the simplex.
fn nm_run(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], opts: &NelderMeadOptions, evals: &mut usize) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    let mut call = |x: &[f64]| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut s = Simplex { pts: vec![x0.to_vec()], vals: vec![call(x0)] };
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        let mut v = call(&p);
        if !v.is_finite() {
            p[i] = x0[i] - step[i];
            v = call(&p);
        }
        s.pts.push(p);
        s.vals.push(v);
    }
    let mut it = 0;
    let mut converged = false;
    while it < opts.max_iter {
        s.sort();
        if s.diameter() < opts.diameter_tol && s.spread() < opts.spread_tol {
            converged = true;
            break;
        }
        it += 1;
        let mut c = vec![0.0; n];
        for p in &s.pts[..n] {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi / n as f64;
            }
        }
        let worst = s.pts[n].clone();
        let fw = s.vals[n];
        let xr = affine(&worst, &c, 2.0);
        let fr = call(&xr);
        if fr < s.vals[0] {
            let xe = affine(&worst, &c, 3.0);
            let fe = call(&xe);
            if fe < fr {
                s.pts[n] = xe;
                s.vals[n] = fe;
            } else {
                s.pts[n] = xr;
                s.vals[n] = fr;
            }
            continue;
        }
        if fr < s.vals[n - 1] {
            s.pts[n] = xr;
            s.vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fw {
            let x = affine(&c, &xr, 0.5);
            let v = call(&x);
            (x, v)
        } else {
            let x = affine(&c, &worst, 0.5);
            let v = call(&x);
            (x, v)
        };
        if fc < fw.min(fr) {
            s.pts[n] = xc;
            s.vals[n] = fc;
            continue;
        }
        let best = s.pts[0].clone();
        for i in 1..=n {
            s.pts[i] = affine(&best, &s.pts[i], 0.5);
            s.vals[i] = call(&s.pts[i]);
        }
    }
    s.sort();
    (s.pts[0].clone(), s.vals[0], it, converged)
}

/// Nelder–Mead with restarts from the incumbent, each with the initial simplex
/// scaled by `opts.shrink`. Stops once a converged restart fails to improve.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult> {
    if !f(x0).is_finite() {
        return Err(Error::Optimizer("initial point is infeasible".into()));
    }
    let mut evals = 0;
    let mut iters = 0;
    let mut best = x0.to_vec();
    let mut best_v = f64::INFINITY;
    let mut converged = false;
    let mut restarts = 0;
    let mut scale = 1.0;
    for r in 0..=opts.restarts {
        let st: Vec<f64> = step.iter().map(|s| s * scale).collect();
        let (x, v, it, conv) = nm_run(f, &best, &st, opts, &mut evals);
        iters += it;
        restarts = r;
        let gain = best_v - v;
        if v <= best_v {
            best = x;
            best_v = v;
        }
        converged = conv;
        if conv && r > 0 && gain <= opts.spread_tol {
            break;
        }
        scale *= opts.shrink;
    }
    Ok(NelderMeadResult { x: best, value: best_v, iterations: iters, evaluations: evals, restarts, converged })
}

/// Minimizes a unimodal `f` on `[lo, hi]` by golden-section until the bracket is below `tol`.
pub fn golden_section(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const R: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Parameters of a family: scale `a`, angle `alpha` and base point `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub a: f64,
    pub alpha: f64,
    #[serde(serialize_with = "crate::linalg::serialize_vec")]
    pub x: RVec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeParams {
    pub a: bool,
    pub alpha: bool,
    pub x: bool,
}

impl FreeParams {
    pub const X: FreeParams = FreeParams { a: false, alpha: false, x: true };
    pub const ALL: FreeParams = FreeParams { a: true, alpha: true, x: true };
    pub const SCALE: FreeParams = FreeParams { a: true, alpha: false, x: false };
}

pub type Builder<'a> = dyn Fn(&Params) -> Result<(Structure, SitePotential)> + Sync + 'a;

/// A parametrized family with an optional nearest-neighbour constraint.
pub struct ParamFamily<'a> {
    pub build: Box<Builder<'a>>,
    /// When set, parameters are feasible only if these words are exactly the nearest neighbours.
    pub neighbors: Option<Vec<GroupWord>>,
    /// Admissible open interval for `alpha`.
    pub alpha_range: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationResult {
    pub params: Params,
    pub energy: f64,
    pub ev_norm: f64,
    pub neighbor_condition: Option<bool>,
    pub optimizer: Option<NelderMeadResult>,
    pub newton_steps: usize,
}

impl<'a> ParamFamily<'a> {
    pub fn new(build: impl Fn(&Params) -> Result<(Structure, SitePotential)> + Sync + 'a) -> Self {
        Self { build: Box::new(build), neighbors: None, alpha_range: (f64::NEG_INFINITY, f64::INFINITY) }
    }

    pub fn with_neighbors(mut self, n: Vec<GroupWord>) -> Self {
        self.neighbors = Some(n);
        self
    }

    pub fn with_alpha_range(mut self, lo: f64, hi: f64) -> Self {
        self.alpha_range = (lo, hi);
        self
    }

    fn feasible(&self, p: &Params, s: &Structure) -> bool {
        if !(p.a > 0.0 && p.alpha > self.alpha_range.0 && p.alpha < self.alpha_range.1) {
            return false;
        }
        match &self.neighbors {
            Some(n) => s.neighbor_condition(n).unwrap_or(false),
            None => true,
        }
    }

    /// Per-site energy `V(y0)`, `+∞` outside the admissible set.
    pub fn energy(&self, p: &Params) -> f64 {
        let Ok((s, v)) = (self.build)(p) else { return f64::INFINITY };
        if !self.feasible(p, &s) {
            return f64::INFINITY;
        }
        v.energy(&reference_config(&s, v.range())).unwrap_or(f64::INFINITY)
    }

    fn pack(&self, p: &Params, free: FreeParams) -> Vec<f64> {
        let mut v = Vec::new();
        if free.a {
            v.push(p.a);
        }
        if free.alpha {
            v.push(p.alpha);
        }
        if free.x {
            v.extend(p.x.iter());
        }
        v
    }

    fn unpack(&self, base: &Params, free: FreeParams, v: &[f64]) -> Params {
        let mut p = base.clone();
        let mut i = 0;
        if free.a {
            p.a = v[i];
            i += 1;
        }
        if free.alpha {
            p.alpha = v[i];
            i += 1;
        }
        if free.x {
            p.x = RVec::from_column_slice(&v[i..i + p.x.len()]);
        }
        p
    }

    /// Minimizes the energy over the free parameters and, when `x` is free,
    /// polishes `x` by Newton steps on `e_V`.
    pub fn relax(&self, start: &Params, free: FreeParams, opts: &NelderMeadOptions, tol: &ToleranceConfig) -> Result<RelaxationResult> {
        let mut p = start.clone();
        let mut nm = None;
        if free == FreeParams::SCALE {
            p.a = self.relax_scale(start)?;
        } else if free.a || free.alpha || free.x {
            let x0 = self.pack(start, free);
            let step: Vec<f64> = x0.iter().map(|v| if v.abs() > 1e-8 { 0.02 * v.abs() } else { 1e-3 }).collect();
            let f = |v: &[f64]| self.energy(&self.unpack(start, free, v));
            let r = nelder_mead(&f, &x0, &step, opts)?;
            p = self.unpack(start, free, &r.x);
            nm = Some(r);
        }
        let mut newton_steps = 0;
        if free.x {
            let (x, n) = self.newton_x(&p, tol)?;
            p.x = x;
            newton_steps = n;
        }
        self.finish(p, nm, newton_steps, tol)
    }

    /// Golden-section on `a` over a bracket grown geometrically from the start.
    fn relax_scale(&self, start: &Params) -> Result<f64> {
        let f = |a: f64| self.energy(&Params { a, ..start.clone() });
        let (mut lo, mut hi) = (start.a / 1.5, start.a * 1.5);
        for _ in 0..40 {
            let (x, _) = golden_section(&f, lo, hi, 1e-12 * hi);
            let w = hi - lo;
            if (x - lo) < 1e-6 * w {
                lo /= 1.5;
            } else if (hi - x) < 1e-6 * w {
                hi *= 1.5;
            } else {
                return Ok(x);
            }
        }
        Err(Error::Optimizer("no interior minimum of the scale found".into()))
    }

    /// Newton iteration on `x ↦ e_V(x)`, the gradient of the per-site energy in
    /// the base point, with Hessian `Σ (R_g − I)ᵀ ∂_g∂_hV (R_h − I)`.
    pub fn newton_x(&self, p: &Params, tol: &ToleranceConfig) -> Result<(RVec, usize)> {
        let mut x = p.x.clone();
        let mut steps = 0;
        for _ in 0..30 {
            let q = Params { x: x.clone(), ..p.clone() };
            let (s, v) = (self.build)(&q)?;
            let y0 = reference_config(&s, v.range());
            let der = v.derivatives(&y0)?;
            let d = s.d();
            let id = RMat::identity(d, d);
            let mut grad = RVec::zeros(d);
            for (g, gr) in &der.grad {
                grad += (s.rot(g) - &id).transpose() * gr;
            }
            if grad.norm() <= 1e-3 * tol.criticality {
                break;
            }
            let mut h = RMat::zeros(d, d);
            for ((g, k), m) in &der.hess {
                h += (s.rot(g) - &id).transpose() * m * (s.rot(k) - &id);
            }
            let svd = h.svd(true, true);
            let dx = svd.solve(&grad, 1e-12 * svd.singular_values.max()).map_err(|e| Error::Optimizer(e.to_string()))?;
            let before = grad.norm();
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let trial = &x - &dx * t;
                let tq = Params { x: trial.clone(), ..p.clone() };
                if self.energy(&tq).is_finite() {
                    let (ts, tv) = (self.build)(&tq)?;
                    if compute_ev(&ts, &tv, tol)?.norm < before {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            steps += 1;
            if !accepted {
                break;
            }
        }
        Ok((x, steps))
    }

    fn finish(&self, p: Params, optimizer: Option<NelderMeadResult>, newton_steps: usize, tol: &ToleranceConfig) -> Result<RelaxationResult> {
        let (s, v) = (self.build)(&p)?;
        let energy = v.energy(&reference_config(&s, v.range()))?;
        let ev_norm = compute_ev(&s, &v, tol)?.norm;
        let neighbor_condition = match &self.neighbors {
            Some(n) => Some(s.neighbor_condition(n)?),
            None => None,
        };
        Ok(RelaxationResult { params: p, energy, ev_norm, neighbor_condition, optimizer, newton_steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::*;

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |v: &[f64]| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2);
        let r = nelder_mead(&f, &[-1.2, 1.0], &[0.1, 0.1], &NelderMeadOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_respects_infeasible_region() {
        let f = |v: &[f64]| if v[0] < 0.5 { f64::INFINITY } else { v[0] * v[0] + v[1] * v[1] };
        let r = nelder_mead(&f, &[2.0, 1.0], &[0.3, 0.3], &NelderMeadOptions::default()).unwrap();
        assert!((r.x[0] - 0.5).abs() < 1e-6 && r.x[1].abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let f = |_: &[f64]| f64::INFINITY;
        assert!(nelder_mead(&f, &[0.0], &[1.0], &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn chain_scale_relaxation() {
        let fam = ParamFamily::new(|p: &Params| Ok((chain_structure(p.a), chain_potential())));
        let start = Params { a: 1.3, alpha: 0.0, x: RVec::zeros(2) };
        let r = fam.relax(&start, FreeParams::SCALE, &NelderMeadOptions::default(), &ToleranceConfig::default()).unwrap();
        assert!((r.params.a - chain_a_star()).abs() < 1e-6, "{}", r.params.a);
        assert!((r.energy - chain_energy_closed_form(chain_a_star())).abs() < 1e-12);
    }

    #[test]
    fn newton_reaches_critical_base_point() {
        let fam = ParamFamily::new(|p: &Params| Ok((nanotube_structure(p.a, p.alpha, Some(p.x.clone())), nanotube_potential())))
            .with_neighbors(nanotube_neighbors());
        let a = nanotube_a0();
        let start = Params { a, alpha: NANOTUBE_ALPHA0, x: nanotube_ideal_x(a) };
        let tol = ToleranceConfig::default();
        let r = fam.relax(&start, FreeParams::X, &NelderMeadOptions::default(), &tol).unwrap();
        assert!(r.ev_norm <= 1e-8, "{}", r.ev_norm);
        assert_eq!(r.neighbor_condition, Some(true));
        assert!(r.energy <= fam.energy(&start));
    }
}
