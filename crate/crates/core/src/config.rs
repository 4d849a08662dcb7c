//! JSON run configuration: structure, potential, range set, representation
//! set, sweep and tolerances, plus the parameter families built from it.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::driver::{Family, StabilityProblem, SweepConfig};
use crate::error::{Error, Result};
use crate::group::{planar_rotation, GroupDescriptor, GroupWord, Isometry, Structure};
use crate::harmonic::{dual_domain, BaseRep, DualDomain, DualRep, KDomain};
use crate::linalg::{CMat, RMat, RVec};
use crate::potential::{PairProfile, SitePotential};
use crate::relax::{FreeParams, NelderMeadOptions, ParamFamily, Params, RelaxationResult};
use crate::seminorm::RangeSpec;
use crate::tolerance::ToleranceConfig;

/// A number, or a parameter reference `name`, `-name` or `c*name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn eval(&self, p: &Params) -> Result<f64> {
        match self {
            Scalar::Number(x) => Ok(*x),
            Scalar::Expr(s) => {
                let s = s.trim();
                let (coef, name) = match s.split_once('*') {
                    Some((c, n)) => (
                        c.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad coefficient in {s:?}")))?,
                        n.trim(),
                    ),
                    None => match s.strip_prefix('-') {
                        Some(n) => (-1.0, n.trim()),
                        None => (1.0, s),
                    },
                };
                let v = match name {
                    "a" => p.a,
                    "alpha" => p.alpha,
                    _ => return Err(Error::Config(format!("unknown parameter {name:?}"))),
                };
                Ok(coef * v)
            }
        }
    }

    fn uses(&self, name: &str) -> bool {
        matches!(self, Scalar::Expr(s) if s.trim().trim_start_matches('-').rsplit('*').next().map(str::trim) == Some(name))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// `(rot | trans)` with a constant orthogonal part.
    Matrix { rot: Vec<Vec<f64>>, trans: Vec<Scalar> },
    /// `(I | vector)`.
    Translation { vector: Vec<Scalar> },
    /// Rotation by `angle` in the first two coordinates and a shift along the last one.
    Screw { angle: Scalar, shift: Scalar },
}

impl Generator {
    fn realize(&self, d: usize, p: &Params, at: &str) -> Result<Isometry> {
        let cfg = |m: String| Error::Config(format!("{at}: {m}"));
        match self {
            Generator::Matrix { rot, trans } => {
                if rot.len() != d || rot.iter().any(|r| r.len() != d) || trans.len() != d {
                    return Err(cfg(format!("expected a {d}×{d} rotation and a length-{d} translation")));
                }
                let r = DMatrix::from_fn(d, d, |i, j| rot[i][j]);
                let t = trans.iter().map(|s| s.eval(p)).collect::<Result<Vec<_>>>()?;
                Ok(Isometry::new(r, DVector::from_vec(t)))
            }
            Generator::Translation { vector } => {
                if vector.len() != d {
                    return Err(cfg(format!("expected a length-{d} vector")));
                }
                let t = vector.iter().map(|s| s.eval(p)).collect::<Result<Vec<_>>>()?;
                Ok(Isometry::translation(DVector::from_vec(t)))
            }
            Generator::Screw { angle, shift } => {
                if d < 3 {
                    return Err(cfg("a screw needs d ≥ 3".into()));
                }
                let mut r = RMat::identity(d, d);
                r.view_mut((0, 0), (2, 2)).copy_from(&planar_rotation(angle.eval(p)?));
                let mut t = RVec::zeros(d);
                t[d - 1] = shift.eval(p)?;
                Ok(Isometry::new(r, t))
            }
        }
    }

    fn scalars(&self) -> Vec<&Scalar> {
        match self {
            Generator::Matrix { trans, .. } => trans.iter().collect(),
            Generator::Translation { vector } => vector.iter().collect(),
            Generator::Screw { angle, shift } => vec![angle, shift],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct X0 {
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scalar>,
}

fn default_m0() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
    #[serde(default = "default_m0")]
    pub m0: usize,
    pub translations: Vec<Generator>,
    /// Point part including the identity first; defaults to `{id}`.
    #[serde(default)]
    pub point_part: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Vec<Vec<i64>>>,
    pub x0: X0,
    /// Nearest neighbours defining the admissible parameter set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<Vec<GroupWord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermConfig {
    Pair { neighbors: Vec<GroupWord>, weight: f64, profile: PairProfile },
    Cosine3 { neighbors: Vec<GroupWord>, weight: f64, c: f64 },
    Square { word: GroupWord, weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub terms: Vec<TermConfig>,
}

impl PotentialConfig {
    pub fn build(&self) -> SitePotential {
        let mut v = SitePotential::new();
        for t in &self.terms {
            v = match t {
                TermConfig::Pair { neighbors, weight, profile } => v.with_pair(neighbors, *weight, *profile),
                TermConfig::Cosine3 { neighbors, weight, c } => v.with_cosine(neighbors, *weight, *c),
                TermConfig::Square { word, weight } => v.with_square(word.clone(), *weight),
            };
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixConfig {
    fn to_cmat(&self, at: &str) -> Result<CMat> {
        let n = self.re.len();
        let m = self.re.first().map_or(0, |r| r.len());
        let shape_ok = |x: &Vec<Vec<f64>>| x.len() == n && x.iter().all(|r| r.len() == m);
        if !shape_ok(&self.re) || self.im.as_ref().is_some_and(|im| !shape_ok(im)) {
            return Err(Error::Config(format!("{at}: ragged or mismatched matrix")));
        }
        Ok(CMat::from_fn(n, m, |i, j| Complex64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Point,
    Interval { lo: f64, hi: f64, closed: bool },
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRep {
    pub label: String,
    /// Images of the translation generators.
    pub translation: Vec<MatrixConfig>,
    /// Images of the point elements in `TF`, `null` for the others.
    pub point: Vec<Option<MatrixConfig>>,
    pub domain: DomainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DualConfig {
    Auto(AutoKeyword),
    User { reps: Vec<UserRep> },
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig::Auto(AutoKeyword::Auto)
    }
}

impl DualConfig {
    pub fn build(&self, desc: &GroupDescriptor) -> Result<DualDomain> {
        match self {
            DualConfig::Auto(_) => dual_domain(desc),
            DualConfig::User { reps } => {
                let mut out = Vec::new();
                for (i, r) in reps.iter().enumerate() {
                    let at = format!("/dual/reps/{i}");
                    let translation = r
                        .translation
                        .iter()
                        .enumerate()
                        .map(|(j, m)| m.to_cmat(&format!("{at}/translation/{j}")))
                        .collect::<Result<Vec<_>>>()?;
                    if translation.len() != desc.d2 {
                        return Err(Error::Config(format!("{at}/translation: expected {} matrices", desc.d2)));
                    }
                    let point = r
                        .point
                        .iter()
                        .enumerate()
                        .map(|(j, m)| m.as_ref().map(|m| m.to_cmat(&format!("{at}/point/{j}"))).transpose())
                        .collect::<Result<Vec<_>>>()?;
                    if point.len() != desc.order_of_point_part() {
                        return Err(Error::Config(format!("{at}/point: expected {} entries", desc.order_of_point_part())));
                    }
                    let dim = point.iter().flatten().next().map_or(1, |m| m.nrows());
                    let domain = match r.domain {
                        DomainConfig::Point => KDomain::Point,
                        DomainConfig::Interval { lo, hi, closed } => KDomain::Interval { lo, hi, closed },
                        DomainConfig::Box => KDomain::Box {
                            dual_basis: (0..desc.d2).map(|j| desc.dual_lattice().column(j).iter().cloned().collect()).collect(),
                        },
                    };
                    let base = BaseRep { label: r.label.clone(), dim, translation, point };
                    out.push(DualRep { base, stabilizer: vec![], fold: vec![], domain });
                }
                Ok(DualDomain { d2: desc.d2, dual_basis: desc.dual_lattice(), reps: out })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxMode {
    /// Use the parameters as given.
    #[default]
    None,
    /// Relax the base point at the given scale and angle.
    X,
    /// Relax all free parameters once, then the base point at any requested scale.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    A,
    Alpha,
    X,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxConfig {
    pub mode: RelaxMode,
    /// Parameters freed by a full relaxation; defaults to those the structure uses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free: Option<Vec<ParamName>>,
    /// Open interval of admissible angles.
    pub alpha_range: [f64; 2],
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        let nm = NelderMeadOptions::default();
        Self { mode: RelaxMode::None, free: None, alpha_range: [0.0, std::f64::consts::PI], restarts: nm.restarts, max_iter: nm.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSweep {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Default for ScaleSweep {
    fn default() -> Self {
        Self { from: 0.0, to: 0.0, steps: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, svg: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub parameters: Parameters,
    pub structure: StructureConfig,
    pub potential: PotentialConfig,
    pub range: RangeSpec,
    #[serde(default)]
    pub dual: DualConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub scale_sweep: ScaleSweep,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub relax: RelaxConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

/// Parses and validates a configuration document. Errors name a JSON pointer.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::Config(format!("{}: {}", pointer(e.path()), e.inner())))?;
    cfg.check()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Parameters a family resolves to, with the full relaxation when one ran.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub params: Params,
    pub relaxation: Option<RelaxationResult>,
    pub base_relaxation: Option<RelaxationResult>,
}

/// Command-line overrides of the family parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub a: Option<f64>,
    pub alpha: Option<f64>,
    /// Skip every relaxation.
    pub ideal: bool,
}

impl RunConfig {
    fn check(&self) -> Result<()> {
        let s = &self.structure;
        if s.d1 + s.d2 != s.d {
            return Err(Error::Config(format!("/structure/d1: d1 + d2 = {} differs from d = {}", s.d1 + s.d2, s.d)));
        }
        if s.translations.len() != s.d2 {
            return Err(Error::Config(format!("/structure/translations: expected d2 = {} generators, got {}", s.d2, s.translations.len())));
        }
        if s.x0.vector.len() != s.d {
            return Err(Error::Config(format!("/structure/x0/vector: expected length {}", s.d)));
        }
        for (name, used) in [("a", self.uses("a")), ("alpha", self.uses("alpha"))] {
            let given = if name == "a" { self.parameters.a.is_some() } else { self.parameters.alpha.is_some() };
            if used && !given {
                return Err(Error::Config(format!("/parameters/{name}: referenced by the structure but not set")));
            }
        }
        let p = self.start_params()?;
        self.build(&p).map(|_| ())
    }

    fn uses(&self, name: &str) -> bool {
        let s = &self.structure;
        s.translations.iter().chain(&s.point_part).flat_map(|g| g.scalars()).any(|x| x.uses(name))
            || s.x0.scale.as_ref().is_some_and(|x| x.uses(name))
    }

    /// Parameters as written, with `x` evaluated from `x0`.
    pub fn start_params(&self) -> Result<Params> {
        self.params_at(self.parameters.a.unwrap_or(1.0), self.parameters.alpha.unwrap_or(0.0))
    }

    fn params_at(&self, a: f64, alpha: f64) -> Result<Params> {
        let mut p = Params { a, alpha, x: RVec::from_column_slice(&self.structure.x0.vector) };
        if let Some(sc) = &self.structure.x0.scale {
            p.x *= sc.eval(&p)?;
        }
        Ok(p)
    }

    pub fn range(&self) -> RangeSpec {
        self.range.clone()
    }

    pub fn potential(&self) -> SitePotential {
        self.potential.build()
    }

    /// Structure and potential at the given parameters.
    pub fn build(&self, p: &Params) -> Result<(Structure, SitePotential)> {
        let s = &self.structure;
        let translations = s
            .translations
            .iter()
            .enumerate()
            .map(|(i, g)| g.realize(s.d, p, &format!("/structure/translations/{i}")))
            .collect::<Result<Vec<_>>>()?;
        let point_part = if s.point_part.is_empty() {
            vec![Isometry::identity(s.d)]
        } else {
            s.point_part
                .iter()
                .enumerate()
                .map(|(i, g)| g.realize(s.d, p, &format!("/structure/point_part/{i}")))
                .collect::<Result<Vec<_>>>()?
        };
        let desc = GroupDescriptor::new(s.d1, s.d2, translations, point_part, s.table.clone(), s.action.clone(), s.m0, &self.tolerances)
            .map_err(|e| Error::Config(format!("/structure: {e}")))?;
        let st = Structure::new(desc, p.x.clone())?;
        Ok((st, self.potential()))
    }

    pub fn family(&self) -> ParamFamily<'_> {
        let mut f = ParamFamily::new(move |p: &Params| self.build(p)).with_alpha_range(self.relax.alpha_range[0], self.relax.alpha_range[1]);
        if let Some(n) = &self.structure.neighbors {
            f = f.with_neighbors(n.clone());
        }
        f
    }

    pub fn nm_options(&self) -> NelderMeadOptions {
        NelderMeadOptions { restarts: self.relax.restarts, max_iter: self.relax.max_iter, ..NelderMeadOptions::default() }
    }

    /// Parameters freed by a full relaxation.
    pub fn free_params(&self) -> FreeParams {
        match &self.relax.free {
            Some(list) => FreeParams { a: list.contains(&ParamName::A), alpha: list.contains(&ParamName::Alpha), x: list.contains(&ParamName::X) },
            None => FreeParams { a: self.uses("a"), alpha: self.uses("alpha"), x: true },
        }
    }

    /// Runs the full relaxation from the configured start.
    pub fn relax_all(&self) -> Result<RelaxationResult> {
        let mut free = self.free_params();
        if !(free.alpha || free.x) {
            free = FreeParams::SCALE;
        }
        self.family().relax(&self.start_params()?, free, &self.nm_options(), &self.tolerances)
    }

    /// Parameters after overrides and the configured relaxation mode.
    pub fn resolve(&self, ov: &Overrides) -> Result<Resolved> {
        let start = self.start_params()?;
        let a = ov.a.unwrap_or(start.a);
        let alpha = ov.alpha.unwrap_or(start.alpha);
        let mode = if ov.ideal { RelaxMode::None } else { self.relax.mode };
        match mode {
            RelaxMode::None => Ok(Resolved { params: self.params_at(a, alpha)?, relaxation: None, base_relaxation: None }),
            RelaxMode::X => {
                let p = self.params_at(a, alpha)?;
                let r = self.family().relax(&p, FreeParams::X, &self.nm_options(), &self.tolerances)?;
                Ok(Resolved { params: r.params.clone(), relaxation: Some(r), base_relaxation: None })
            }
            RelaxMode::All => {
                let base = self.relax_all()?;
                if ov.a.is_none() && ov.alpha.is_none() {
                    return Ok(Resolved { params: base.params.clone(), relaxation: None, base_relaxation: Some(base) });
                }
                let bp = &base.params;
                let p = Params { a, alpha: ov.alpha.unwrap_or(bp.alpha), x: &bp.x * (a / bp.a) };
                let r = self.family().relax(&p, FreeParams::X, &self.nm_options(), &self.tolerances)?;
                Ok(Resolved { params: r.params.clone(), relaxation: Some(r), base_relaxation: Some(base) })
            }
        }
    }

    /// The stability problem at resolved parameters.
    pub fn problem(&self, p: &Params) -> Result<StabilityProblem> {
        let (s, v) = self.build(p)?;
        let dual = self.dual.build(&s.descriptor)?;
        StabilityProblem::with_dual(&s, &v, &self.range, &self.tolerances, dual)
    }

    /// Family over the scale `a` following the relaxation mode: the angle and
    /// the base-point start come from one full relaxation when the mode is `all`.
    pub fn scale_family(&self, ov: &Overrides) -> Result<ConfigFamily<'_>> {
        let start = self.start_params()?;
        let mode = if ov.ideal { RelaxMode::None } else { self.relax.mode };
        let anchor = match mode {
            RelaxMode::All => Some(self.relax_all()?.params),
            _ => None,
        };
        let alpha = ov.alpha.or(anchor.as_ref().map(|p| p.alpha)).unwrap_or(start.alpha);
        Ok(ConfigFamily { cfg: self, mode, alpha, anchor })
    }
}

/// [`Family`] view of a configuration.
pub struct ConfigFamily<'a> {
    cfg: &'a RunConfig,
    mode: RelaxMode,
    alpha: f64,
    anchor: Option<Params>,
}

impl ConfigFamily<'_> {
    pub fn params(&self, a: f64) -> Result<Params> {
        let mut p = self.cfg.params_at(a, self.alpha)?;
        if let Some(anc) = &self.anchor {
            p.x = &anc.x * (a / anc.a);
        }
        if self.mode != RelaxMode::None {
            p = self.cfg.family().relax(&p, FreeParams::X, &self.cfg.nm_options(), &self.cfg.tolerances)?.params;
        }
        Ok(p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Family for ConfigFamily<'_> {
    fn build(&self, a: f64) -> Result<(Structure, SitePotential, RangeSpec)> {
        let p = self.params(a)?;
        let (s, v) = self.cfg.build(&p)?;
        Ok((s, v, self.cfg.range()))
    }

    fn dual(&self, s: &Structure) -> Result<DualDomain> {
        self.cfg.dual.build(&s.descriptor)
    }
}
