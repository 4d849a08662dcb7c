//! Built-in structures: the Lennard-Jones chain, the (5,1) nanotube and a
//! two-element finite group with a non-critical reference point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::group::{planar_rotation, GroupDescriptor, GroupWord, Isometry, Structure};
use crate::linalg::{RMat, RVec};
use crate::potential::{PairProfile, SitePotential};
use crate::seminorm::RangeSpec;
use crate::tolerance::ToleranceConfig;

/// Chain spacing minimizing the per-site energy, `(16/7)^{1/6}`.
pub fn chain_a_star() -> f64 {
    (16.0f64 / 7.0).powf(1.0 / 6.0)
}

/// Onset of the period-doubling instability, `(26/7)^{1/6}`.
pub fn chain_a_double_star() -> f64 {
    (26.0f64 / 7.0).powf(1.0 / 6.0)
}

/// `G = ⟨t⟩`, `t = (I_2 | a e_2)`, `x0 = 0`.
pub fn chain_structure(a: f64) -> Structure {
    let t = Isometry::translation(DVector::from_vec(vec![0.0, a]));
    let g = GroupDescriptor::new(1, 1, vec![t], vec![Isometry::identity(2)], None, None, 1, &ToleranceConfig::default())
        .expect("chain descriptor");
    Structure::new(g, DVector::zeros(2)).expect("chain structure")
}

/// `V = v1(‖y(t)‖) + v2(‖y(t²)‖)` with `v1 = r^{-12} − r^{-6}`, `v2 = 8 r^{-6}`.
pub fn chain_potential() -> SitePotential {
    SitePotential::new()
        .with_pair(&[GroupWord::t(1, 0)], 1.0, PairProfile::lennard_jones())
        .with_pair(&[GroupWord::t(2, 0)], 1.0, PairProfile::InversePower { c: 8.0, p: 6.0 })
}

/// `R = {id, t, t²}` with `R′ = {t}`, `R″ = {id, t}`.
pub fn chain_range() -> RangeSpec {
    RangeSpec {
        words: vec![GroupWord::t(0, 0), GroupWord::t(1, 0), GroupWord::t(2, 0)],
        r_prime: Some(vec![GroupWord::t(1, 0)]),
        r_double_prime: Some(vec![GroupWord::t(0, 0), GroupWord::t(1, 0)]),
    }
}

/// `E(x̄) = a^{-12} − (7/8) a^{-6}`.
pub fn chain_energy_closed_form(a: f64) -> f64 {
    a.powi(-12) - 7.0 / 8.0 * a.powi(-6)
}

pub const NANOTUBE_ALPHA0: f64 = 11.0 * PI / 31.0;

/// `a0 = 3/(2√31)`.
pub fn nanotube_a0() -> f64 {
    3.0 / (2.0 * 31f64.sqrt())
}

/// Ideal (5,1) tube point `x_a = a (r cos β, r sin β, 7/3)`, `r = 31/(π√3)`, `β = 5π/31`.
pub fn nanotube_ideal_x(a: f64) -> RVec {
    let r = 31.0 / (PI * 3f64.sqrt());
    let beta = 5.0 * PI / 31.0;
    DVector::from_vec(vec![a * r * beta.cos(), a * r * beta.sin(), a * 7.0 / 3.0])
}

/// `t = (R(α) ⊕ I_1 | a e_3)`, `p = (diag(1,−1,−1) | 0)`. `x = None` uses the ideal tube point.
pub fn nanotube_structure(a: f64, alpha: f64, x: Option<RVec>) -> Structure {
    let mut rot = RMat::identity(3, 3);
    rot.view_mut((0, 0), (2, 2)).copy_from(&planar_rotation(alpha));
    let t = Isometry::new(rot, DVector::from_vec(vec![0.0, 0.0, a]));
    let p = Isometry::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0])), DVector::zeros(3));
    let g = GroupDescriptor::new(
        2,
        1,
        vec![t],
        vec![Isometry::identity(3), p],
        Some(vec![vec![0, 1], vec![1, 0]]),
        Some(vec![vec![1], vec![-1]]),
        1,
        &ToleranceConfig::default(),
    )
    .expect("nanotube descriptor");
    Structure::new(g, x.unwrap_or_else(|| nanotube_ideal_x(a))).expect("nanotube structure")
}

/// `N = {tp, t^6p, t^7p}`.
pub fn nanotube_neighbors() -> Vec<GroupWord> {
    vec![GroupWord::t(1, 1), GroupWord::t(6, 1), GroupWord::t(7, 1)]
}

/// `½ Σ_{g∈N} (‖y(g)‖ − 1)² + ½ Σ_{g,h∈N} (cos∠(y(g), y(h)) + ½)²`.
pub fn nanotube_potential() -> SitePotential {
    let n = nanotube_neighbors();
    SitePotential::new()
        .with_pair(&n, 0.5, PairProfile::Harmonic { k: 1.0, r0: 1.0 })
        .with_cosine(&n, 0.5, 0.5)
}

/// `R = {t^{-1}, id, t, t², t^{-1}p, p, tp}` with `R′ = {t, p}`, `R″ = {t^{-1}, id, t, p}`.
pub fn nanotube_range() -> RangeSpec {
    RangeSpec {
        words: vec![
            GroupWord::t(-1, 0),
            GroupWord::t(0, 0),
            GroupWord::t(1, 0),
            GroupWord::t(2, 0),
            GroupWord::t(-1, 1),
            GroupWord::t(0, 1),
            GroupWord::t(1, 1),
        ],
        r_prime: Some(vec![GroupWord::t(1, 0), GroupWord::t(0, 1)]),
        r_double_prime: Some(vec![
            GroupWord::t(-1, 0),
            GroupWord::t(0, 0),
            GroupWord::t(1, 0),
            GroupWord::t(0, 1),
        ]),
    }
}

/// `G = {id, p}`, `p = (−I_2 | 0)`, `x0 = e_1`. The orbit lies on the first
/// axis, so this structure is deliberately not in normal form.
pub fn deuiso_structure() -> Structure {
    let p = Isometry::new(-RMat::identity(2, 2), DVector::zeros(2));
    let g = GroupDescriptor::new(2, 0, vec![], vec![Isometry::identity(2), p], None, None, 1, &ToleranceConfig::default())
        .expect("finite group");
    Structure::new(g, DVector::from_vec(vec![1.0, 0.0])).expect("finite structure")
}

/// `V(y) = −‖y(p)‖²`.
pub fn deuiso_potential() -> SitePotential {
    SitePotential::new().with_square(GroupWord::new(vec![], 1), -1.0)
}

pub fn deuiso_range() -> RangeSpec {
    RangeSpec {
        words: vec![GroupWord::new(vec![], 0), GroupWord::new(vec![], 1)],
        r_prime: None,
        r_double_prime: None,
    }
}
