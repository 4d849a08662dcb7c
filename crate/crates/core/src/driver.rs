//! Wave-vector sweeps, the stability constants `λ_a` and `λ_{a,0,0}`, and
//! independent checks by supercells and Rayleigh quotients.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PeriodicField;
use crate::group::{GroupWord, Structure};
use crate::harmonic::{dual_domain, fourier_l1_centered, periodic_wave_vectors, BaseRep, DualDomain, InducedRep, KDomain};
use crate::hessian::{CriticalityReport, HessianModel};
use crate::linalg::{to_complex, CMat, CVec, RMat};
use crate::pencil::{lambda_min_scaled, Lambda, LoewnerResult};
use crate::potential::SitePotential;
use crate::seminorm::{RangeSpec, SeminormKind, SeminormModel};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Skip rank-deficient wave vectors; approach them along a trail instead.
    Strict,
    /// Also evaluate the Loewner value at rank-deficient wave vectors.
    Extended,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid_points: usize,
    /// Levels of ten golden-section steps around each local minimum.
    pub refinement_depth: usize,
    pub divergence_floor: f64,
    /// Exclusion radius around rank-deficient `k`, in grid cells.
    pub exclusion_cells: f64,
    /// Halvings along a divergence trail.
    pub trail_levels: usize,
    /// `σ_min/σ_max` below which a refined minimum counts as rank-deficient.
    pub singular_ratio: f64,
    /// Also accept a trail as divergent when it stops early while its values
    /// keep growing like a power of the distance (see [`DivergenceKind::PowerLaw`]).
    pub power_law_divergence: bool,
    pub mode: Mode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid_points: 1024,
            refinement_depth: 6,
            divergence_floor: -1e8,
            exclusion_cells: 0.5,
            trail_levels: 40,
            singular_ratio: 1e-7,
            power_law_divergence: true,
            mode: Mode::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Grid,
    Refined,
    Trail,
    Singular,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub k: Vec<f64>,
    pub value: Lambda,
    pub rank: usize,
    pub cols: usize,
    pub sigma_ratio: f64,
    pub ambiguous: bool,
    pub kind: SampleKind,
}

impl Sample {
    fn from(k: Vec<f64>, r: &LoewnerResult, kind: SampleKind) -> Self {
        Self {
            k,
            value: r.value,
            rank: r.rank,
            cols: r.cols,
            sigma_ratio: r.sigma_ratio,
            ambiguous: r.ambiguous_rank,
            kind,
        }
    }

    pub fn full_rank(&self) -> bool {
        self.rank == self.cols && !self.ambiguous
    }
}

/// How a trail was classified as diverging to `−∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    /// Monotone values reached the divergence floor.
    Floor,
    /// The trail stopped before the floor because values could no longer be
    /// resolved, after at least three consecutive halvings of the distance each
    /// multiplied the (negative) value by 3 or more; `exponent` is the fitted
    /// growth `|λ| ∝ δ^{-exponent}`.
    PowerLaw { exponent: f64 },
}

/// Divergence test on one side of a trail, ordered by decreasing distance.
fn classify_trail(vals: &[f64], floor: f64, stopped_early: bool, power_law: bool) -> Option<DivergenceKind> {
    let decreasing = vals.windows(2).all(|w| w[1] <= w[0]);
    let last = *vals.last()?;
    if vals.len() >= 3 && decreasing && last <= floor {
        return Some(DivergenceKind::Floor);
    }
    if !(power_law && stopped_early && vals.len() >= 4 && last < 0.0) {
        return None;
    }
    let tail = &vals[vals.len() - 4..];
    if tail.iter().any(|v| *v >= 0.0) {
        return None;
    }
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|r| *r >= 3.0) {
        let exponent = ratios.iter().map(|r| r.log2()).sum::<f64>() / ratios.len() as f64;
        Some(DivergenceKind::PowerLaw { exponent })
    } else {
        None
    }
}

/// A wave vector where the seminorm transform loses rank.
#[derive(Debug, Clone, Serialize)]
pub struct SingularPoint {
    pub k: Vec<f64>,
    pub sigma_ratio: f64,
    /// `(k, λ_min)` approaching the point from each side.
    pub trail: Vec<(f64, Lambda)>,
    pub divergent: bool,
    pub divergence: Option<DivergenceKind>,
    /// Loewner value at the point itself (extended mode).
    pub value: Option<Lambda>,
    /// Extended value ≥ limsup of neighbouring values − 1e-6.
    pub usc_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub rep: String,
    pub kind: SeminormKind,
    pub samples: Vec<Sample>,
    pub singular: Vec<SingularPoint>,
    pub minimum: Estimate,
}

/// A stability constant with its location and, for `−∞`, the evidence.
#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub value: Lambda,
    pub k: Option<Vec<f64>>,
    pub rep: String,
    pub evidence: Option<Vec<(f64, Lambda)>>,
    pub grid_points: usize,
    /// Change of the minimum produced by the last refinement level.
    pub refinement_delta: f64,
    pub divergence: Option<DivergenceKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Critical with `λ_a > 0` but `λ_{a,0,0} ≤ 0`: stable for `‖·‖_R` only.
    StableR,
    /// Critical with `λ_{a,0,0} > 0`, hence also `λ_a ≥ λ_{a,0,0} > 0`.
    StableR00,
    Unstable,
    NotCritical,
}

/// Seminorm(s) whose stability decides the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    R,
    R00,
    Both,
}

impl Verdict {
    /// Exit code with both seminorms requested.
    pub fn exit_code(self) -> i32 {
        self.exit_code_for(Selection::Both)
    }

    /// 0 stable for the requested seminorm, 1 unstable, 2 not critical.
    pub fn exit_code_for(self, sel: Selection) -> i32 {
        match (self, sel) {
            (Verdict::NotCritical, _) => 2,
            (Verdict::StableR00, _) | (Verdict::StableR, Selection::R) => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub lambda_a: Estimate,
    pub lambda_a00: Estimate,
    pub curves: Vec<Curve>,
    pub critical: CriticalityReport,
    pub verdict: Verdict,
    pub mode: Mode,
}

/// Everything needed to evaluate the pencils of one structure.
#[derive(Debug, Clone)]
pub struct StabilityProblem {
    pub model: HessianModel,
    pub seminorm: SeminormModel,
    pub dual: DualDomain,
    pub tol: ToleranceConfig,
    f_items: Vec<(GroupWord, RMat)>,
    f_total: RMat,
    g_items: [Vec<(GroupWord, RMat)>; 2],
    g_total: [RMat; 2],
    f_scale: f64,
    g_scale: [f64; 2],
}

fn kind_index(kind: SeminormKind) -> usize {
    match kind {
        SeminormKind::Full => 0,
        SeminormKind::ZeroZero => 1,
    }
}

impl StabilityProblem {
    pub fn new(s: &Structure, v: &SitePotential, range: &RangeSpec, tol: &ToleranceConfig) -> Result<Self> {
        if s.descriptor.m0 != 1 {
            return Err(Error::UnsupportedPeriodMultiplier(s.descriptor.m0));
        }
        Self::with_dual(s, v, range, tol, dual_domain(&s.descriptor)?)
    }

    /// As [`StabilityProblem::new`] with a caller-supplied representation set.
    pub fn with_dual(s: &Structure, v: &SitePotential, range: &RangeSpec, tol: &ToleranceConfig, dual: DualDomain) -> Result<Self> {
        if s.descriptor.m0 != 1 {
            return Err(Error::UnsupportedPeriodMultiplier(s.descriptor.m0));
        }
        let model = HessianModel::new(s, v, tol)?;
        let seminorm = SeminormModel::new(s, range, tol)?;
        let f_items: Vec<(GroupWord, RMat)> = model.kernel.entries.iter().map(|(g, m)| (g.clone(), m.clone())).collect();
        let f_total = model.kernel.total();
        let pack = |kind| {
            let k = seminorm.kernel(kind);
            let items: Vec<(GroupWord, RMat)> = k.iter().map(|(g, m)| (g.clone(), m.clone())).collect();
            let total = items.iter().fold(RMat::zeros(k.blocks[0].nrows(), s.d()), |acc, (_, m)| acc + m);
            (items, total)
        };
        let (g0, t0) = pack(SeminormKind::Full);
        let (g1, t1) = pack(SeminormKind::ZeroZero);
        let norm_sum = |items: &[(GroupWord, RMat)]| items.iter().map(|(_, m)| m.norm()).sum::<f64>();
        let f_scale = norm_sum(&f_items);
        let g_scale = [norm_sum(&g0), norm_sum(&g1)];
        Ok(Self {
            model,
            seminorm,
            dual,
            tol: *tol,
            f_items,
            f_total,
            g_items: [g0, g1],
            g_total: [t0, t1],
            f_scale,
            g_scale,
        })
    }

    pub fn structure(&self) -> &Structure {
        &self.model.structure
    }

    pub fn rep(&self, rep_idx: usize, k: &[f64]) -> Result<InducedRep<'_>> {
        InducedRep::new(&self.model.structure.descriptor, k, self.dual.reps[rep_idx].base.clone())
    }

    /// `(f̂_V(Ind χ_kρ), ĝ(Ind χ_kρ))`.
    pub fn transforms(&self, rep_idx: usize, k: &[f64], kind: SeminormKind) -> Result<(CMat, CMat)> {
        let rep = self.rep(rep_idx, k)?;
        let a = fourier_l1_centered(&self.f_items, &self.f_total, &rep);
        let i = kind_index(kind);
        let b = fourier_l1_centered(&self.g_items[i], &self.g_total[i], &rep);
        Ok((a, b))
    }

    pub fn pencil(&self, rep_idx: usize, k: &[f64], kind: SeminormKind) -> Result<LoewnerResult> {
        let (a, b) = self.transforms(rep_idx, k, kind)?;
        lambda_min_scaled(&a, &b, self.f_scale, self.g_scale[kind_index(kind)], &self.tol).map_err(|e| Error::Pencil { k: k.to_vec(), msg: e.to_string() })
    }

    fn eval1(&self, rep_idx: usize, k: f64, kind: SeminormKind) -> Result<LoewnerResult> {
        self.pencil(rep_idx, &[k], kind)
    }

    pub fn lambda_curve(&self, rep_idx: usize, kind: SeminormKind, cfg: &SweepConfig) -> Result<Curve> {
        match self.dual.reps[rep_idx].domain {
            KDomain::Interval { lo, hi, closed } => self.curve_1d(rep_idx, kind, cfg, lo, hi, closed),
            _ => self.curve_grid(rep_idx, kind, cfg),
        }
    }

    /// Grid-only sweep for `d2 = 0` and `d2 ≥ 2`.
    fn curve_grid(&self, rep_idx: usize, kind: SeminormKind, cfg: &SweepConfig) -> Result<Curve> {
        let d2 = self.dual.d2;
        let n = if d2 >= 2 { ((cfg.grid_points as f64).powf(1.0 / d2 as f64).ceil() as usize).max(2) } else { 1 };
        let ks = self.dual.reps[rep_idx].grid(&self.dual.dual_basis, n);
        let results: Vec<Result<LoewnerResult>> = ks.par_iter().map(|k| self.pencil(rep_idx, k.as_slice(), kind)).collect();
        let mut samples = Vec::new();
        let mut singular = Vec::new();
        for (k, r) in ks.iter().zip(results) {
            let r = r?;
            let full = r.rank == r.cols && !r.ambiguous_rank;
            if full {
                samples.push(Sample::from(k.as_slice().to_vec(), &r, SampleKind::Grid));
            } else {
                let value = if cfg.mode == Mode::Extended || d2 == 0 { Some(r.value) } else { None };
                if value.is_some() {
                    samples.push(Sample::from(k.as_slice().to_vec(), &r, SampleKind::Singular));
                }
                singular.push(SingularPoint {
                    k: k.as_slice().to_vec(),
                    sigma_ratio: r.sigma_ratio,
                    trail: vec![],
                    divergent: false,
                    divergence: None,
                    value,
                    usc_ok: None,
                });
            }
        }
        let minimum = minimum_of(&self.dual.reps[rep_idx].base.label, &samples, &singular, n, 0.0);
        Ok(Curve { rep: self.dual.reps[rep_idx].base.label.clone(), kind, samples, singular, minimum })
    }

    fn curve_1d(
        &self,
        rep_idx: usize,
        kind: SeminormKind,
        cfg: &SweepConfig,
        lo: f64,
        hi: f64,
        closed: bool,
    ) -> Result<Curve> {
        let label = self.dual.reps[rep_idx].base.label.clone();
        let n = cfg.grid_points.max(2);
        let h = (hi - lo) / n as f64;
        // a half-open domain is a period: its right end is the image of its left end
        let period = if closed { None } else { Some(hi - lo) };
        let dist = |x: f64, y: f64| match period {
            Some(p) => {
                let d = (x - y).rem_euclid(p);
                d.min(p - d)
            }
            None => (x - y).abs(),
        };
        let ks: Vec<f64> = (0..if closed { n + 1 } else { n }).map(|i| lo + i as f64 * h).collect();
        let first: Vec<LoewnerResult> =
            ks.par_iter().map(|&k| self.eval1(rep_idx, k, kind)).collect::<Result<Vec<_>>>()?;

        // rank-deficient points: exact grid hits, then refined minima of σ_min/σ_max
        let mut sing_k: Vec<(f64, f64)> = Vec::new();
        for (i, r) in first.iter().enumerate() {
            if r.rank < r.cols || r.ambiguous_rank {
                sing_k.push((ks[i], r.sigma_ratio));
            }
        }
        let ratio = |k: f64| self.eval1(rep_idx, k, kind).map(|r| r.sigma_ratio);
        let m = ks.len();
        let candidates: Vec<usize> = (0..m)
            .filter(|&i| {
                let left = if i > 0 { first[i - 1].sigma_ratio } else { f64::INFINITY };
                let right = if i + 1 < m { first[i + 1].sigma_ratio } else { f64::INFINITY };
                let here = first[i].sigma_ratio;
                here <= left && here <= right && first[i].rank == first[i].cols
            })
            .collect();
        let refined: Vec<Option<(f64, f64)>> = candidates
            .par_iter()
            .map(|&i| -> Result<Option<(f64, f64)>> {
                let a = (ks[i] - h).max(lo);
                let b = (ks[i] + h).min(hi);
                let (kmin, rmin) = golden_min(&ratio, a, b, 80)?;
                Ok(if rmin < cfg.singular_ratio { Some((kmin, rmin)) } else { None })
            })
            .collect::<Result<Vec<_>>>()?;
        for (kk, rr) in refined.into_iter().flatten() {
            if !sing_k.iter().any(|(s, _)| dist(*s, kk) < 0.5 * h) {
                sing_k.push((kk, rr));
            }
        }
        sing_k.sort_by(|a, b| a.0.total_cmp(&b.0));

        let radius = cfg.exclusion_cells * h;
        let excluded = |k: f64| sing_k.iter().any(|(s, _)| dist(k, *s) <= radius + 1e-15 * h.max(1.0));
        let mut samples: Vec<Sample> = Vec::new();
        for (k, r) in ks.iter().zip(&first) {
            if !excluded(*k) && r.rank == r.cols && !r.ambiguous_rank && resolved(r) {
                samples.push(Sample::from(vec![*k], r, SampleKind::Grid));
            }
        }

        // divergence trails
        let mut singular = Vec::new();
        for &(s, rr) in &sing_k {
            let mut trail: Vec<(f64, Lambda)> = Vec::new();
            let mut divergence: Option<DivergenceKind> = None;
            for side in [-1.0, 1.0] {
                let mut side_vals: Vec<(f64, Lambda)> = Vec::new();
                let mut stopped_early = false;
                for j in 0..=cfg.trail_levels {
                    let k = s + side * h * 0.5f64.powi(j as i32);
                    if closed && (k < lo - 1e-15 || k > hi + 1e-15) {
                        break;
                    }
                    let r = self.eval1(rep_idx, k, kind)?;
                    if r.rank < r.cols || r.ambiguous_rank || !resolved(&r) {
                        stopped_early = true;
                        break;
                    }
                    let v = r.value;
                    side_vals.push((k, v));
                    samples.push(Sample::from(vec![k], &r, SampleKind::Trail));
                    if v.to_f64() <= cfg.divergence_floor {
                        break;
                    }
                }
                let vals: Vec<f64> = side_vals.iter().map(|x| x.1.to_f64()).collect();
                let c = classify_trail(&vals, cfg.divergence_floor, stopped_early, cfg.power_law_divergence);
                divergence = match (divergence, c) {
                    (_, Some(DivergenceKind::Floor)) | (None, _) => c,
                    (d, _) => d,
                };
                trail.extend(side_vals);
            }
            let divergent = divergence.is_some();
            let (value, usc_ok) = if cfg.mode == Mode::Extended {
                let r = self.eval1(rep_idx, s, kind)?;
                samples.push(Sample::from(vec![s], &r, SampleKind::Singular));
                let near: Vec<f64> =
                    trail.iter().filter(|(k, _)| dist(*k, s) <= h * 1e-3).map(|x| x.1.to_f64()).collect();
                let limsup = near.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let ok = divergent || near.is_empty() || r.value.to_f64() >= limsup - 1e-6 * (1.0 + limsup.abs());
                (Some(r.value), Some(ok))
            } else {
                (None, None)
            };
            singular.push(SingularPoint { k: vec![s], sigma_ratio: rr, trail, divergent, divergence, value, usc_ok });
        }

        // refinement around local minima of the grid values
        let grid: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.kind == SampleKind::Grid)
            .map(|s| (s.k[0], s.value.to_f64()))
            .collect();
        let gm = grid.len();
        let minima: Vec<usize> = (0..gm)
            .filter(|&i| {
                let v = grid[i].1;
                let l = if i > 0 && (grid[i].0 - grid[i - 1].0) < 1.5 * h { grid[i - 1].1 } else { f64::INFINITY };
                let r = if i + 1 < gm && (grid[i + 1].0 - grid[i].0) < 1.5 * h { grid[i + 1].1 } else { f64::INFINITY };
                v <= l && v <= r
            })
            .collect();
        let value_at = |k: f64| -> Result<f64> {
            if excluded(k) {
                return Ok(f64::INFINITY);
            }
            let r = self.eval1(rep_idx, k, kind)?;
            Ok(if r.rank == r.cols && !r.ambiguous_rank && resolved(&r) { r.value.to_f64() } else { f64::INFINITY })
        };
        let refined: Vec<(f64, Vec<(f64, f64)>)> = minima
            .par_iter()
            .map(|&i| -> Result<(f64, Vec<(f64, f64)>)> {
                let a = (grid[i].0 - h).max(lo);
                let b = (grid[i].0 + h).min(if closed { hi } else { hi - 1e-12 * h });
                let mut levels = Vec::new();
                let (mut x0, mut x1) = (a, b);
                for _ in 0..cfg.refinement_depth {
                    let (km, vm, na, nb) = golden_bracket(&value_at, x0, x1, 10)?;
                    levels.push((km, vm));
                    x0 = na;
                    x1 = nb;
                }
                Ok((grid[i].1, levels))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut delta: f64 = 0.0;
        for (gv, levels) in &refined {
            for &(k, v) in levels {
                if v.is_finite() {
                    samples.push(Sample {
                        k: vec![k],
                        value: Lambda::Finite(v),
                        rank: 0,
                        cols: 0,
                        sigma_ratio: f64::NAN,
                        ambiguous: false,
                        kind: SampleKind::Refined,
                    });
                }
            }
            let prev = if levels.len() >= 2 { levels[levels.len() - 2].1 } else { *gv };
            if let Some(&(_, last)) = levels.last() {
                if last.is_finite() && prev.is_finite() {
                    delta = delta.max((prev - last).abs());
                }
            }
        }
        for s in samples.iter_mut().filter(|s| s.kind == SampleKind::Refined) {
            s.rank = first[0].cols;
            s.cols = first[0].cols;
        }
        samples.sort_by(|a, b| a.k[0].total_cmp(&b.k[0]));
        let minimum = minimum_of(&label, &samples, &singular, n, delta);
        Ok(Curve { rep: label, kind, samples, singular, minimum })
    }

    /// `λ_a` (`SeminormKind::Full`) and `λ_{a,0,0}` with all curves.
    pub fn stability_constants(&self, cfg: &SweepConfig) -> Result<StabilityReport> {
        let mut curves = Vec::new();
        for kind in [SeminormKind::Full, SeminormKind::ZeroZero] {
            for i in 0..self.dual.reps.len() {
                curves.push(self.lambda_curve(i, kind, cfg)?);
            }
        }
        let best = |kind: SeminormKind| -> Estimate {
            curves
                .iter()
                .filter(|c| c.kind == kind)
                .map(|c| c.minimum.clone())
                .min_by(|a, b| a.value.to_f64().total_cmp(&b.value.to_f64()))
                .expect("at least one representation")
        };
        let lambda_a = best(SeminormKind::Full);
        let lambda_a00 = best(SeminormKind::ZeroZero);
        let critical = self.model.criticality.clone();
        let verdict = verdict(&critical, lambda_a.value, lambda_a00.value);
        Ok(StabilityReport { lambda_a, lambda_a00, curves, critical, verdict, mode: cfg.mode })
    }

    /// Smallest generalized eigenvalue of the assembled `T^N`-periodic problem.
    pub fn supercell_lambda(&self, n: usize, kind: SeminormKind, cap: usize) -> Result<LoewnerResult> {
        let cells = self.structure().descriptor.num_cosets(n);
        if cells > cap {
            return Err(Error::SupercellCap { cells, cap });
        }
        let h = self.model.supercell_hessian(n)?;
        let b = self.seminorm.supercell_factor(n, kind)?;
        let c = cells as f64;
        lambda_min_scaled(
            &to_complex(&h),
            &to_complex(&b),
            self.f_scale / c,
            self.g_scale[kind_index(kind)] / c.sqrt(),
            &self.tol,
        )
    }

    /// Minimum of the Fourier route over the `T^N`-periodic wave vectors `(L*/N)/L*`
    /// and all representations; equals [`StabilityProblem::supercell_lambda`].
    pub fn fourier_slice_min(&self, n: usize, kind: SeminormKind) -> Result<Lambda> {
        let mut best = Lambda::PosInf;
        for k in periodic_wave_vectors(&self.structure().descriptor, n) {
            for i in 0..self.dual.reps.len() {
                best = best.min(self.pencil(i, k.as_slice(), kind)?.value);
            }
        }
        Ok(best)
    }

    /// Real fields `Re/Im (I_d ⊗ e_sᵀ ρ(g)) x` spanning the Bloch mode of `x` at a `T^N`-periodic `k`.
    pub fn bloch_fields(&self, rep_idx: usize, k: &[f64], x: &CVec, n: usize) -> Result<Vec<PeriodicField>> {
        let rep = self.rep(rep_idx, k)?;
        if !rep.is_periodic(n) {
            return Err(Error::NotPeriodic { n });
        }
        let desc = &self.structure().descriptor;
        let d = self.structure().d();
        let dim = rep.dim();
        let mut out = Vec::new();
        for s in 0..dim {
            let vals: Vec<Vec<Complex64>> = desc
                .coset_reps(n)?
                .iter()
                .map(|g| {
                    let r = rep.eval(g);
                    (0..d).map(|i| (0..dim).map(|j| r[(s, j)] * x[i * dim + j]).sum()).collect()
                })
                .collect();
            for part in 0..2 {
                let values = vals
                    .iter()
                    .map(|v| DVector::from_iterator(d, v.iter().map(|c| if part == 0 { c.re } else { c.im })))
                    .collect();
                out.push(PeriodicField { n, values });
            }
        }
        Ok(out)
    }

    /// `Σ E″(u_i, u_i) / Σ ‖u_i‖²` over the Bloch fields of the minimizing vector at `k`.
    pub fn bloch_rayleigh(&self, rep_idx: usize, k: &[f64], n: usize, kind: SeminormKind) -> Result<(f64, f64)> {
        let r = self.pencil(rep_idx, k, kind)?;
        let x = r.vector.ok_or_else(|| Error::Pencil { k: k.to_vec(), msg: "no finite minimizer".into() })?;
        let fields = self.bloch_fields(rep_idx, k, &x, n)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for u in &fields {
            num += self.model.quadratic_form(u, u)?;
            den += self.seminorm.eval(u, kind)?.powi(2);
        }
        Ok((num / den, r.value.to_f64()))
    }

    /// `E″(u,u) ≥ λ‖u‖² − 1e-8(1 + ‖u‖²_{L²})` on random periodic fields; returns the violations.
    pub fn rayleigh_check<R: Rng>(
        &self,
        report: &StabilityReport,
        trials: usize,
        max_n: usize,
        rng: &mut R,
    ) -> Result<Vec<RayleighViolation>> {
        let desc = &self.structure().descriptor;
        let d = self.structure().d();
        let mut out = Vec::new();
        for t in 0..trials {
            let n = rng.gen_range(1..=max_n);
            let u = PeriodicField::random(desc, n, d, rng);
            let e = self.model.quadratic_form(&u, &u)?;
            for (kind, est) in [(SeminormKind::Full, &report.lambda_a), (SeminormKind::ZeroZero, &report.lambda_a00)] {
                if let Lambda::Finite(l) = est.value {
                    let s = self.seminorm.eval(&u, kind)?.powi(2);
                    let slack = 1e-8 * (1.0 + u.norm_sq());
                    if e < l * s - slack {
                        out.push(RayleighViolation { trial: t, n, kind, energy: e, bound: l * s });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RayleighViolation {
    pub trial: usize,
    pub n: usize,
    pub kind: SeminormKind,
    pub energy: f64,
    pub bound: f64,
}

pub fn verdict(c: &CriticalityReport, la: Lambda, l00: Lambda) -> Verdict {
    if !c.is_critical {
        Verdict::NotCritical
    } else if l00.to_f64() > 0.0 {
        Verdict::StableR00
    } else if la.to_f64() > 0.0 {
        Verdict::StableR
    } else {
        Verdict::Unstable
    }
}

/// Whether rounding leaves the value accurate to 1e-6 relative.
fn resolved(r: &LoewnerResult) -> bool {
    r.error_estimate <= 1e-6 * (1.0 + r.value.to_f64().abs())
}

fn minimum_of(label: &str, samples: &[Sample], singular: &[SingularPoint], n: usize, delta: f64) -> Estimate {
    if let Some(sp) = singular.iter().find(|s| s.divergent) {
        return Estimate {
            value: Lambda::NegInf,
            k: Some(sp.k.clone()),
            rep: label.to_string(),
            evidence: Some(sp.trail.clone()),
            grid_points: n,
            refinement_delta: delta,
            divergence: sp.divergence,
        };
    }
    let mut best: Option<&Sample> = None;
    for s in samples {
        if best.is_none_or(|b| s.value.to_f64() < b.value.to_f64()) {
            best = Some(s);
        }
    }
    match best {
        Some(b) => Estimate {
            value: b.value,
            k: Some(b.k.clone()),
            rep: label.to_string(),
            evidence: if b.value == Lambda::NegInf { Some(vec![(b.k.first().copied().unwrap_or(0.0), b.value)]) } else { None },
            grid_points: n,
            refinement_delta: delta,
            divergence: None,
        },
        None => Estimate {
            value: Lambda::PosInf,
            k: None,
            rep: label.to_string(),
            evidence: None,
            grid_points: n,
            refinement_delta: delta,
            divergence: None,
        },
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimum of `f` on `[a, b]`, also comparing the endpoints.
pub fn golden_min(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, iters: usize) -> Result<(f64, f64)> {
    let (k, v, _, _) = golden_bracket(f, a, b, iters)?;
    let fa = f(a)?;
    let fb = f(b)?;
    let mut best = (k, v);
    if fa < best.1 {
        best = (a, fa);
    }
    if fb < best.1 {
        best = (b, fb);
    }
    Ok(best)
}

/// `iters` golden-section steps; returns the best point and the final bracket.
fn golden_bracket(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, iters: usize) -> Result<(f64, f64, f64, f64)> {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc, a, b) } else { (d, fd, a, b) })
}

/// Row of a scale sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub lambda_a: Lambda,
    pub lambda_a00: Lambda,
    pub ev_norm: f64,
    pub energy: f64,
    pub error: Option<String>,
}

/// A structure family parametrized by the scale `a`.
pub trait Family: Sync {
    fn build(&self, a: f64) -> Result<(Structure, SitePotential, RangeSpec)>;

    /// Representation set used at a member of the family.
    fn dual(&self, s: &Structure) -> Result<DualDomain> {
        dual_domain(&s.descriptor)
    }
}

impl<F> Family for F
where
    F: Fn(f64) -> Result<(Structure, SitePotential, RangeSpec)> + Sync,
{
    fn build(&self, a: f64) -> Result<(Structure, SitePotential, RangeSpec)> {
        self(a)
    }
}

pub fn evaluate_scale(family: &dyn Family, a: f64, cfg: &SweepConfig, tol: &ToleranceConfig) -> SweepRow {
    let run = || -> Result<SweepRow> {
        let (s, v, r) = family.build(a)?;
        let p = StabilityProblem::with_dual(&s, &v, &r, tol, family.dual(&s)?)?;
        let rep = p.stability_constants(cfg)?;
        Ok(SweepRow {
            a,
            lambda_a: rep.lambda_a.value,
            lambda_a00: rep.lambda_a00.value,
            ev_norm: rep.critical.norm,
            energy: p.model.reference_energy()?,
            error: None,
        })
    };
    run().unwrap_or_else(|e| SweepRow {
        a,
        lambda_a: Lambda::Finite(f64::NAN),
        lambda_a00: Lambda::Finite(f64::NAN),
        ev_norm: f64::NAN,
        energy: f64::NAN,
        error: Some(e.to_string()),
    })
}

pub fn scale_sweep(family: &dyn Family, values: &[f64], cfg: &SweepConfig, tol: &ToleranceConfig) -> Vec<SweepRow> {
    values.iter().map(|&a| evaluate_scale(family, a, cfg, tol)).collect()
}

/// Zero crossings of `λ_a` (`kind = Full`) or `λ_{a,0,0}` between consecutive rows,
/// each located by bisection on `a` (40 halvings, stopping at width 1e-6).
pub fn zero_crossings(
    family: &dyn Family,
    rows: &[SweepRow],
    kind: SeminormKind,
    cfg: &SweepConfig,
    tol: &ToleranceConfig,
) -> Vec<f64> {
    let pick = |r: &SweepRow| match kind {
        SeminormKind::Full => r.lambda_a.to_f64(),
        SeminormKind::ZeroZero => r.lambda_a00.to_f64(),
    };
    let mut out = Vec::new();
    for w in rows.windows(2) {
        let (fa, fb) = (pick(&w[0]), pick(&w[1]));
        if fa.is_nan() || fb.is_nan() || (fa > 0.0) == (fb > 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (w[0].a, w[1].a);
        let lo_pos = fa > 0.0;
        for _ in 0..40 {
            if (hi - lo).abs() < 1e-6 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let v = pick(&evaluate_scale(family, mid, cfg, tol));
            if (v > 0.0) == lo_pos {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

/// Trivial representation of a descriptor, for callers building their own pencils.
pub fn trivial_rep(s: &Structure) -> BaseRep {
    BaseRep::trivial(&s.descriptor)
}
