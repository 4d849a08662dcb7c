//! `T^N`-periodic functions on `G`, stored on the transversal `C_N`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::group::{GroupDescriptor, GroupWord};
use crate::linalg::{CMat, RVec};

/// Real displacement field `u: G → R^d` with `u(gt) = u(g)` for `t ∈ T^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    pub n: usize,
    pub values: Vec<RVec>,
}

impl PeriodicField {
    pub fn zeros(desc: &GroupDescriptor, n: usize, d: usize) -> Self {
        Self { n, values: vec![RVec::zeros(d); desc.num_cosets(n)] }
    }

    /// Evaluate `f` on the representatives `C_N`.
    pub fn from_fn(desc: &GroupDescriptor, n: usize, mut f: impl FnMut(&GroupWord) -> RVec) -> Self {
        let reps = desc.coset_reps(n).expect("valid period");
        Self { n, values: reps.iter().map(&mut f).collect() }
    }

    pub fn random<R: Rng>(desc: &GroupDescriptor, n: usize, d: usize, rng: &mut R) -> Self {
        Self {
            n,
            values: (0..desc.num_cosets(n))
                .map(|_| RVec::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn at(&self, desc: &GroupDescriptor, w: &GroupWord) -> &RVec {
        &self.values[desc.coset_index(w, self.n)]
    }

    /// `(1/|C_N|) Σ_g ⟨u(g), v(g)⟩`.
    pub fn dot(&self, other: &PeriodicField) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a.dot(b)).sum();
        s / self.values.len() as f64
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &PeriodicField) -> Self {
        Self { n: self.n, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    /// Flattened coefficient vector in `C_N` order.
    pub fn flatten(&self) -> RVec {
        let d = self.dim();
        let mut out = RVec::zeros(d * self.values.len());
        for (i, v) in self.values.iter().enumerate() {
            out.rows_mut(i * d, d).copy_from(v);
        }
        out
    }

    pub fn to_map(&self) -> PeriodicMap {
        PeriodicMap {
            n: self.n,
            values: self
                .values
                .iter()
                .map(|v| DMatrix::from_fn(v.len(), 1, |i, _| Complex64::new(v[i], 0.0)))
                .collect(),
        }
    }
}

/// Complex matrix-valued periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMap {
    pub n: usize,
    pub values: Vec<CMat>,
}

impl PeriodicMap {
    pub fn from_fn(desc: &GroupDescriptor, n: usize, mut f: impl FnMut(&GroupWord) -> CMat) -> Self {
        let reps = desc.coset_reps(n).expect("valid period");
        Self { n, values: reps.iter().map(&mut f).collect() }
    }

    pub fn random<R: Rng>(desc: &GroupDescriptor, n: usize, rows: usize, cols: usize, rng: &mut R) -> Self {
        Self {
            n,
            values: (0..desc.num_cosets(n))
                .map(|_| {
                    CMat::from_fn(rows, cols, |_, _| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                })
                .collect(),
        }
    }

    pub fn at(&self, desc: &GroupDescriptor, w: &GroupWord) -> &CMat {
        &self.values[desc.coset_index(w, self.n)]
    }

    /// `⟨u, v⟩ = (1/|C_N|) Σ_g tr(v(g)ᴴ u(g))`.
    pub fn inner(&self, other: &PeriodicMap) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum::<Complex64>())
            .sum();
        s / self.values.len() as f64
    }

    /// `u(g^{-1})`.
    pub fn reflect(&self, desc: &GroupDescriptor) -> PeriodicMap {
        let values = desc
            .coset_reps(self.n)
            .expect("valid period")
            .iter()
            .map(|g| self.at(desc, &desc.inverse(g)).clone())
            .collect();
        PeriodicMap { n: self.n, values }
    }
}
