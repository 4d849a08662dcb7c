//! Discrete isometry groups of the form `G = T ⋊ P`.
//!
//! Elements are exact words `t^z p_q` with `z ∈ Z^{d2}` and `q` indexing the
//! finite point part. Multiplication is
//! `(z1, q1)(z2, q2) = (z1 + M_{q1} z2, table[q1][q2])`, where `M_q` is the
//! integer action of `p_q` on the translation exponents. The realization map
//! to Euclidean isometries is the only floating point step.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rank, RMat, RVec};
use crate::tolerance::ToleranceConfig;

/// Euclidean isometry `x ↦ rot·x + trans`.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    pub rot: RMat,
    pub trans: RVec,
}

impl Isometry {
    pub fn new(rot: RMat, trans: RVec) -> Self {
        assert_eq!(rot.nrows(), trans.len());
        Self { rot, trans }
    }

    pub fn identity(d: usize) -> Self {
        Self { rot: RMat::identity(d, d), trans: RVec::zeros(d) }
    }

    pub fn translation(b: RVec) -> Self {
        Self { rot: RMat::identity(b.len(), b.len()), trans: b }
    }

    pub fn dim(&self) -> usize {
        self.trans.len()
    }

    /// `(A1|b1)(A2|b2) = (A1A2 | b1 + A1 b2)`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { rot: &self.rot * &other.rot, trans: &self.trans + &self.rot * &other.trans }
    }

    pub fn inverse(&self) -> Isometry {
        let rt = self.rot.transpose();
        let trans = -(&rt * &self.trans);
        Isometry { rot: rt, trans }
    }

    pub fn act(&self, x: &RVec) -> RVec {
        &self.rot * x + &self.trans
    }

    pub fn pow(&self, n: i64) -> Isometry {
        let mut base = if n < 0 { self.inverse() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Isometry::identity(self.dim());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    pub fn distance(&self, other: &Isometry) -> f64 {
        let r = (&self.rot - &other.rot).abs().max();
        let t = (&self.trans - &other.trans).abs().max();
        r.max(t)
    }

    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        (self.rot.transpose() * &self.rot - RMat::identity(d, d)).abs().max()
    }
}

impl std::ops::Mul for &Isometry {
    type Output = Isometry;
    fn mul(self, rhs: &Isometry) -> Isometry {
        self.compose(rhs)
    }
}

/// Exact group element `t^z p_q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupWord {
    pub z: Vec<i64>,
    pub q: usize,
}

impl GroupWord {
    pub fn new(z: Vec<i64>, q: usize) -> Self {
        Self { z, q }
    }

    /// `t^n p_q` for one-dimensional translation parts.
    pub fn t(n: i64, q: usize) -> Self {
        Self { z: vec![n], q }
    }

    pub fn identity(d2: usize) -> Self {
        Self { z: vec![0; d2], q: 0 }
    }

    pub fn is_identity(&self) -> bool {
        self.q == 0 && self.z.iter().all(|&x| x == 0)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(z={:?},q={})", self.z, self.q)
    }
}

fn int_matvec(m: &[i64], z: &[i64]) -> Vec<i64> {
    let n = z.len();
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * z[j]).sum()).collect()
}

/// Symbolic description of `G = T ⋊ P`.
#[derive(Debug, Clone)]
pub struct GroupDescriptor {
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
    pub translations: Vec<Isometry>,
    pub point_part: Vec<Isometry>,
    pub table: Vec<Vec<usize>>,
    /// Row-major `d2×d2` integer matrices `M_q`.
    pub action: Vec<Vec<i64>>,
    pub m0: usize,
    inverse: Vec<usize>,
    lattice: RMat,
    lattice_inv: RMat,
    tf_mask: Vec<bool>,
}

impl GroupDescriptor {
    /// Build and validate a descriptor. Missing multiplication table and action
    /// matrices are derived from the realizations.
    pub fn new(
        d1: usize,
        d2: usize,
        translations: Vec<Isometry>,
        point_part: Vec<Isometry>,
        table: Option<Vec<Vec<usize>>>,
        action: Option<Vec<Vec<i64>>>,
        m0: usize,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let d = d1 + d2;
        let bad = |s: String| Err(Error::Descriptor(s));
        if translations.len() != d2 {
            return bad(format!("expected {d2} translation generators, got {}", translations.len()));
        }
        if point_part.is_empty() {
            return bad("point part is empty".into());
        }
        if m0 == 0 {
            return bad("m0 must be positive".into());
        }
        for (name, iso) in translations
            .iter()
            .map(|t| ("translation generator", t))
            .chain(point_part.iter().map(|p| ("point element", p)))
        {
            if iso.rot.shape() != (d, d) || iso.trans.len() != d {
                return bad(format!("{name} has wrong dimension (d = {d})"));
            }
            if iso.orthogonality_defect() > tol.orthogonality.max(1e-12) * 10.0 {
                return bad(format!("{name} rotation is not orthogonal"));
            }
            if !block_diagonal(&iso.rot, d1, tol.structural) {
                return bad(format!("{name} rotation is not block diagonal O({d1}) ⊕ O({d2})"));
            }
            if iso.trans.rows(0, d1).amax() > tol.structural {
                return bad(format!("{name} translates within the first {d1} coordinates"));
            }
        }
        if point_part[0].distance(&Isometry::identity(d)) > tol.structural {
            return bad("point_part[0] must be the identity".into());
        }
        for (i, t) in translations.iter().enumerate() {
            let blk = t.rot.view((d1, d1), (d2, d2)).into_owned();
            if (blk - RMat::identity(d2, d2)).amax() > tol.structural {
                return bad(format!("translation generator {i} does not project to a pure translation"));
            }
            for (j, s) in translations.iter().enumerate().skip(i + 1) {
                if t.compose(s).distance(&s.compose(t)) > tol.structural {
                    return bad(format!("translation generators {i} and {j} do not commute"));
                }
            }
        }
        let mut lattice = RMat::zeros(d2, d2);
        for (i, t) in translations.iter().enumerate() {
            lattice.set_column(i, &t.trans.rows(d1, d2));
        }
        let lattice_inv = if d2 == 0 {
            RMat::zeros(0, 0)
        } else {
            match lattice.clone().try_inverse() {
                Some(inv) if rank(&lattice, 1e-10) == d2 => inv,
                _ => return bad("translation lattice is degenerate".into()),
            }
        };

        let n = point_part.len();
        let table = match table {
            Some(t) => t,
            None => derive_table(&point_part, tol)?,
        };
        if table.len() != n || table.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return bad("multiplication table has wrong shape".into());
        }
        for a in 0..n {
            if table[0][a] != a || table[a][0] != a {
                return bad("index 0 is not the identity of the table".into());
            }
            for b in 0..n {
                let prod = point_part[a].compose(&point_part[b]);
                if prod.distance(&point_part[table[a][b]]) > tol.structural {
                    return bad(format!("table[{a}][{b}] disagrees with the realization"));
                }
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return bad("multiplication table is not associative".into());
                    }
                }
            }
        }
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            match (0..n).find(|&b| table[a][b] == 0) {
                Some(b) => inverse[a] = b,
                None => return bad(format!("point element {a} has no inverse")),
            }
        }

        let mut desc = GroupDescriptor {
            d,
            d1,
            d2,
            translations,
            point_part,
            table,
            action: vec![],
            m0,
            inverse,
            lattice,
            lattice_inv,
            tf_mask: vec![],
        };
        desc.tf_mask = (0..n)
            .map(|q| (desc.pi_rot(q) - RMat::identity(d2, d2)).amax() < 1e-9)
            .collect();
        let action = match action {
            Some(a) => a,
            None => desc.derive_action()?,
        };
        if action.len() != n || action.iter().any(|m| m.len() != d2 * d2) {
            return bad("action matrices have wrong shape".into());
        }
        desc.action = action;
        for q in 0..n {
            let pq = &desc.point_part[q];
            let pinv = pq.inverse();
            for j in 0..d2 {
                let mut e = vec![0; d2];
                e[j] = 1;
                let lhs = pq.compose(&desc.translations[j]).compose(&pinv);
                let img = int_matvec(&desc.action[q], &e);
                if lhs.distance(&desc.translation_power(&img)) > tol.structural {
                    return bad(format!("action matrix M_{q} is inconsistent with the realization"));
                }
            }
        }
        Ok(desc)
    }

    fn derive_action(&self) -> Result<Vec<Vec<i64>>> {
        let d2 = self.d2;
        let mut out = Vec::with_capacity(self.point_part.len());
        for (q, pq) in self.point_part.iter().enumerate() {
            let pinv = pq.inverse();
            let mut m = vec![0i64; d2 * d2];
            for j in 0..d2 {
                let conj = pq.compose(&self.translations[j]).compose(&pinv);
                let w = &self.lattice_inv * conj.trans.rows(self.d1, d2);
                for i in 0..d2 {
                    let r = w[i].round();
                    if (w[i] - r).abs() > 1e-8 {
                        return Err(Error::Descriptor(format!(
                            "p_{q} does not normalize the translation lattice"
                        )));
                    }
                    m[i * d2 + j] = r as i64;
                }
            }
            out.push(m);
        }
        Ok(out)
    }

    pub fn order_of_point_part(&self) -> usize {
        self.point_part.len()
    }

    pub fn identity(&self) -> GroupWord {
        GroupWord::identity(self.d2)
    }

    pub fn compose(&self, a: &GroupWord, b: &GroupWord) -> GroupWord {
        let mz = int_matvec(&self.action[a.q], &b.z);
        let z = a.z.iter().zip(mz).map(|(x, y)| x + y).collect();
        GroupWord { z, q: self.table[a.q][b.q] }
    }

    pub fn inverse(&self, w: &GroupWord) -> GroupWord {
        let qi = self.inverse[w.q];
        let mz = int_matvec(&self.action[qi], &w.z);
        GroupWord { z: mz.into_iter().map(|x| -x).collect(), q: qi }
    }

    pub fn point_inverse(&self, q: usize) -> usize {
        self.inverse[q]
    }

    pub fn action_matrix(&self, q: usize) -> &[i64] {
        &self.action[q]
    }

    pub fn apply_action(&self, q: usize, z: &[i64]) -> Vec<i64> {
        int_matvec(&self.action[q], z)
    }

    /// `t^z` realized; the translation generators commute, so order is irrelevant.
    pub fn translation_power(&self, z: &[i64]) -> Isometry {
        let mut acc = Isometry::identity(self.d);
        for (t, &n) in self.translations.iter().zip(z) {
            if n != 0 {
                acc = acc.compose(&t.pow(n));
            }
        }
        acc
    }

    pub fn realize(&self, w: &GroupWord) -> Isometry {
        self.translation_power(&w.z).compose(&self.point_part[w.q])
    }

    /// Columns are the last `d2` coordinates of the translation generators.
    pub fn lattice(&self) -> &RMat {
        &self.lattice
    }

    /// Dual basis: columns `b*_i` with `⟨b*_i, L e_j⟩ = δ_ij`.
    pub fn dual_lattice(&self) -> RMat {
        self.lattice_inv.transpose()
    }

    /// Translation part of `π(w)` in `R^{d2}`.
    pub fn pi_trans(&self, w: &GroupWord) -> RVec {
        let zf = DVector::from_iterator(self.d2, w.z.iter().map(|&x| x as f64));
        let p = &self.point_part[w.q];
        &self.lattice * zf + p.trans.rows(self.d1, self.d2)
    }

    /// Rotation block of `π(p_q)` on the last `d2` coordinates.
    pub fn pi_rot(&self, q: usize) -> RMat {
        self.point_part[q].rot.view((self.d1, self.d1), (self.d2, self.d2)).into_owned()
    }

    /// Point indices whose projection is a pure translation; together with `T`
    /// they form the subgroup `TF`.
    pub fn tf_points(&self) -> Vec<usize> {
        (0..self.point_part.len()).filter(|&q| self.tf_mask[q]).collect()
    }

    pub fn in_tf(&self, w: &GroupWord) -> bool {
        self.tf_mask[w.q]
    }

    /// Representatives of `G/TF`: the first point element of each class, in descriptor order.
    pub fn tf_coset_reps(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        for q in 0..self.point_part.len() {
            let covered = reps.iter().any(|&r| self.tf_mask[self.table[self.inverse[r]][q]]);
            if !covered {
                reps.push(q);
            }
        }
        reps
    }

    pub fn check_period(&self, n: usize) -> Result<()> {
        if n == 0 || !n.is_multiple_of(self.m0) {
            return Err(Error::Period { n, m0: self.m0 });
        }
        Ok(())
    }

    /// `|C_N| = N^{d2}·|P|`.
    pub fn num_cosets(&self, n: usize) -> usize {
        n.pow(self.d2 as u32) * self.point_part.len()
    }

    /// `C_N = {(z, q) : z ∈ [0,N)^{d2}}`, point index outermost.
    pub fn coset_reps(&self, n: usize) -> Result<Vec<GroupWord>> {
        self.check_period(n)?;
        let per = n.pow(self.d2 as u32);
        let mut out = Vec::with_capacity(per * self.point_part.len());
        for q in 0..self.point_part.len() {
            for lin in 0..per {
                out.push(GroupWord { z: self.delinearize(lin, n), q });
            }
        }
        Ok(out)
    }

    fn delinearize(&self, mut lin: usize, n: usize) -> Vec<i64> {
        let mut z = vec![0i64; self.d2];
        for i in (0..self.d2).rev() {
            z[i] = (lin % n) as i64;
            lin /= n;
        }
        z
    }

    /// The representative of `w T^N` in `C_N`.
    pub fn reduce(&self, w: &GroupWord, n: usize) -> GroupWord {
        let m = n as i64;
        GroupWord { z: w.z.iter().map(|x| x.rem_euclid(m)).collect(), q: w.q }
    }

    /// Position of the representative of `w T^N` in `coset_reps(n)`.
    pub fn coset_index(&self, w: &GroupWord, n: usize) -> usize {
        let m = n as i64;
        let mut lin = 0usize;
        for &x in &w.z {
            lin = lin * n + x.rem_euclid(m) as usize;
        }
        w.q * n.pow(self.d2 as u32) + lin
    }

    /// Whether `w ∈ T^N`.
    pub fn in_tn(&self, w: &GroupWord, n: usize) -> bool {
        w.q == 0 && w.z.iter().all(|x| x.rem_euclid(n as i64) == 0)
    }
}

fn block_diagonal(rot: &RMat, d1: usize, tol: f64) -> bool {
    let d = rot.nrows();
    let d2 = d - d1;
    rot.view((0, d1), (d1, d2)).amax() <= tol && rot.view((d1, 0), (d2, d1)).amax() <= tol
}

fn derive_table(points: &[Isometry], tol: &ToleranceConfig) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    let mut table = vec![vec![0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let prod = points[a].compose(&points[b]);
            table[a][b] = (0..n)
                .find(|&c| points[c].distance(&prod) <= tol.structural)
                .ok_or_else(|| {
                    Error::Descriptor(format!("point part is not closed: p_{a}·p_{b} missing"))
                })?;
        }
    }
    Ok(table)
}

/// A discrete group together with the base point `x0`.
#[derive(Debug, Clone)]
pub struct Structure {
    pub descriptor: GroupDescriptor,
    pub x0: RVec,
    pub daff: usize,
}

/// Half-width of the exponent box used to compute the affine dimension.
const AFFINE_BOX: i64 = 3;

impl Structure {
    pub fn new(descriptor: GroupDescriptor, x0: RVec) -> Result<Self> {
        if x0.len() != descriptor.d {
            return Err(Error::Descriptor(format!(
                "x0 has length {}, expected d = {}",
                x0.len(),
                descriptor.d
            )));
        }
        let pts = centered_box(&descriptor, &x0, AFFINE_BOX);
        let daff = rank(&crate::linalg::columns(descriptor.d, &pts), 1e-10);
        Ok(Self { descriptor, x0, daff })
    }

    pub fn d(&self) -> usize {
        self.descriptor.d
    }

    pub fn point(&self, w: &GroupWord) -> RVec {
        self.descriptor.realize(w).act(&self.x0)
    }

    /// `g·x0 − x0`.
    pub fn relative(&self, w: &GroupWord) -> RVec {
        self.point(w) - &self.x0
    }

    pub fn rot(&self, w: &GroupWord) -> RMat {
        self.descriptor.realize(w).rot
    }

    /// All `g` with `‖g·x0 − x0‖ ≤ radius`, sorted by distance then word.
    pub fn orbit_ball(&self, radius: f64) -> Result<Vec<(GroupWord, RVec)>> {
        let desc = &self.descriptor;
        let (d1, d2) = (desc.d1, desc.d2);
        let x2 = self.x0.rows(d1, d2).into_owned();
        let bound = if d2 == 0 {
            0
        } else {
            let shift = desc
                .point_part
                .iter()
                .map(|p| {
                    let a2 = p.rot.view((d1, d1), (d2, d2));
                    (a2 * &x2 + p.trans.rows(d1, d2) - &x2).norm()
                })
                .fold(0.0, f64::max);
            let smin = *crate::linalg::singular_values(&desc.lattice).last().unwrap();
            ((radius.max(0.0) + shift) / smin).floor() as i64
        };
        let mut out = Vec::new();
        for z in exponent_box(d2, bound) {
            for q in 0..desc.point_part.len() {
                let w = GroupWord { z: z.clone(), q };
                let p = self.point(&w);
                if (&p - &self.x0).norm() <= radius {
                    out.push((w, p));
                }
            }
        }
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if (&out[i].1 - &out[j].1).norm() <= 1e-10 {
                    return Err(Error::NotInjective { a: out[i].0.clone(), b: out[j].0.clone() });
                }
            }
        }
        let x0 = self.x0.clone();
        out.sort_by(|a, b| {
            let da = (&a.1 - &x0).norm();
            let db = (&b.1 - &x0).norm();
            da.partial_cmp(&db).unwrap().then_with(|| a.0.cmp(&b.0))
        });
        Ok(out)
    }

    /// The nearest-neighbour condition: the ball of radius `max_{g∈N} ‖g·x0−x0‖`
    /// contains exactly `N ∪ {id}`.
    pub fn neighbor_condition(&self, neighbors: &[GroupWord]) -> Result<bool> {
        let rmax = neighbors.iter().map(|g| self.relative(g).norm()).fold(0.0, f64::max);
        let ball = self.orbit_ball(rmax)?;
        Ok(ball.iter().all(|(w, _)| w.is_identity() || neighbors.contains(w))
            && neighbors.iter().all(|g| ball.iter().any(|(w, _)| w == g)))
    }

    /// Itemized structural checks.
    pub fn validate(&self, opts: &ValidationOptions) -> ValidationReport {
        let desc = &self.descriptor;
        let tol = opts.tol.structural;
        let mut checks = Vec::new();
        let mut push = |name: &str, passed: bool, detail: String| {
            checks.push(Check { name: name.to_string(), passed, detail });
        };

        let radius = opts.ball_radius.unwrap_or_else(|| default_radius(self));
        match self.orbit_ball(radius) {
            Ok(b) => push("injectivity", true, format!("{} orbit points within radius {radius:.6}", b.len())),
            Err(e) => push("injectivity", false, e.to_string()),
        }

        let d3 = desc.d - self.daff;
        let mut ok = true;
        for iso in desc.translations.iter().chain(desc.point_part.iter()) {
            ok &= block_diagonal(&iso.rot, d3, tol) && iso.trans.rows(0, d3).amax() <= tol;
        }
        push(
            "block structure",
            ok,
            format!("generators act as O({}) ⊕ E({}) with daff = {}", d3, self.daff, self.daff),
        );

        let pts = centered_box(desc, &self.x0, AFFINE_BOX);
        let off = pts
            .iter()
            .chain(std::iter::once(&self.x0))
            .map(|p| p.rows(0, d3).amax())
            .fold(0.0, f64::max);
        push(
            "normal form",
            off <= tol,
            format!("orbit lies in {{0}}^{d3} × R^{} (max deviation {off:.3e})", self.daff),
        );

        if self.daff < desc.d2 {
            push("affine dimension", false, format!("daff = {} < d2 = {}", self.daff, desc.d2));
        } else {
            push("affine dimension", true, format!("daff = {}", self.daff));
        }

        if let Some(nb) = &opts.neighbors {
            match self.neighbor_condition(nb) {
                Ok(b) => push("neighbor condition", b, format!("{} prescribed neighbours", nb.len())),
                Err(e) => push("neighbor condition", false, e.to_string()),
            }
        }
        ValidationReport { daff: self.daff, checks }
    }
}

fn default_radius(s: &Structure) -> f64 {
    let lat = (0..s.descriptor.d2)
        .map(|i| s.descriptor.lattice.column(i).norm())
        .fold(0.0, f64::max);
    3.0 * lat.max(1.0) + 2.0 * s.x0.norm()
}

fn centered_box(desc: &GroupDescriptor, x0: &RVec, half: i64) -> Vec<RVec> {
    let mut pts = Vec::new();
    for z in exponent_box(desc.d2, half) {
        for q in 0..desc.point_part.len() {
            pts.push(desc.realize(&GroupWord { z: z.clone(), q }).act(x0) - x0);
        }
    }
    pts
}

/// All `z ∈ [−b, b]^dim`.
pub fn exponent_box(dim: usize, b: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * (2 * b as usize + 1));
        for z in &out {
            for v in -b..=b {
                let mut n = z.clone();
                n.push(v);
                next.push(n);
            }
        }
        out = next;
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct ValidationOptions {
    pub tol: ToleranceConfig,
    pub ball_radius: Option<f64>,
    pub neighbors: Option<Vec<GroupWord>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub daff: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Rotation by `angle` in the plane of the first two coordinates.
pub fn planar_rotation(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{chain_structure, nanotube_a0, nanotube_structure, NANOTUBE_ALPHA0};

    #[test]
    fn compose_translations() {
        let s = chain_structure(1.0);
        let g = &s.descriptor;
        assert_eq!(g.compose(&GroupWord::t(3, 0), &GroupWord::t(2, 0)), GroupWord::t(5, 0));
    }

    #[test]
    fn nanotube_p_t_is_t_inverse_p() {
        let s = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
        let g = &s.descriptor;
        assert_eq!(g.compose(&GroupWord::t(0, 1), &GroupWord::t(1, 0)), GroupWord::t(-1, 1));
        assert_eq!(g.action_matrix(1), &[-1]);
    }

    #[test]
    fn inverse_gives_identity() {
        let s = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
        let g = &s.descriptor;
        for w in [GroupWord::t(4, 1), GroupWord::t(-3, 0), GroupWord::t(7, 1)] {
            assert!(g.compose(&w, &g.inverse(&w)).is_identity());
            assert!(g.compose(&g.inverse(&w), &w).is_identity());
        }
    }

    #[test]
    fn chain_realizations() {
        let s = chain_structure(1.0);
        let r = s.descriptor.realize(&GroupWord::t(3, 0));
        assert!((r.rot.clone() - RMat::identity(2, 2)).amax() < 1e-15);
        assert!((r.trans - DVector::from_vec(vec![0.0, 3.0])).amax() < 1e-15);
        let a = 1.3;
        let s = chain_structure(a);
        let p = s.point(&GroupWord::t(1, 0));
        assert!((p - DVector::from_vec(vec![0.0, a])).amax() < 1e-15);
    }

    #[test]
    fn nanotube_powers_and_involution() {
        let (a, alpha) = (0.27, 1.1);
        let s = nanotube_structure(a, alpha, None);
        let g = &s.descriptor;
        let r = g.realize(&GroupWord::t(5, 0));
        let mut expect = RMat::identity(3, 3);
        expect.view_mut((0, 0), (2, 2)).copy_from(&planar_rotation(5.0 * alpha));
        assert!((r.rot - expect).amax() < 1e-12);
        assert!((r.trans - DVector::from_vec(vec![0.0, 0.0, 5.0 * a])).amax() < 1e-12);
        let tp = g.realize(&GroupWord::t(1, 1));
        assert!(tp.compose(&tp).distance(&Isometry::identity(3)) < 1e-12);
    }

    #[test]
    fn reflection_preserves_first_coordinate() {
        let s = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
        let p = s.point(&GroupWord::t(0, 1));
        assert!((p[0] - s.x0[0]).abs() < 1e-15);
        assert!((p[1] + s.x0[1]).abs() < 1e-15);
        assert!((p[2] + s.x0[2]).abs() < 1e-15);
    }

    #[test]
    fn coset_reps_examples() {
        let c = chain_structure(1.0);
        let reps = c.descriptor.coset_reps(3).unwrap();
        assert_eq!(reps, vec![GroupWord::t(0, 0), GroupWord::t(1, 0), GroupWord::t(2, 0)]);
        assert_eq!(c.descriptor.coset_reps(1).unwrap(), vec![GroupWord::t(0, 0)]);
        let n = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
        let reps = n.descriptor.coset_reps(2).unwrap();
        assert_eq!(
            reps,
            vec![GroupWord::t(0, 0), GroupWord::t(1, 0), GroupWord::t(0, 1), GroupWord::t(1, 1)]
        );
    }

    #[test]
    fn coset_reps_tile() {
        let s = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
        let g = &s.descriptor;
        let n = 3;
        let reps = g.coset_reps(n).unwrap();
        for z in -2 * n as i64..2 * n as i64 {
            for q in 0..2 {
                let w = GroupWord::t(z, q);
                let hits: Vec<_> = reps
                    .iter()
                    .filter(|c| g.in_tn(&g.compose(&g.inverse(c), &w), n))
                    .collect();
                assert_eq!(hits.len(), 1, "{w}");
                assert_eq!(*hits[0], g.reduce(&w, n));
                assert_eq!(reps[g.coset_index(&w, n)], g.reduce(&w, n));
            }
        }
    }

    #[test]
    fn orbit_ball_examples() {
        let a = 1.1;
        let s = chain_structure(a);
        let ball: Vec<_> = s.orbit_ball(1.5 * a).unwrap().into_iter().map(|x| x.0).collect();
        assert_eq!(ball.len(), 3);
        for w in [GroupWord::t(-1, 0), GroupWord::t(0, 0), GroupWord::t(1, 0)] {
            assert!(ball.contains(&w));
        }
        let only = s.orbit_ball(0.0).unwrap();
        assert_eq!(only.len(), 1);
        assert!(only[0].0.is_identity());
    }

    #[test]
    fn nanotube_nearest_neighbours() {
        let s = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
        let ball = s.orbit_ball(1.5).unwrap();
        let near: Vec<_> = ball.iter().skip(1).take(3).map(|x| x.0.clone()).collect();
        let mut near_sorted = near.clone();
        near_sorted.sort();
        assert_eq!(near_sorted, vec![GroupWord::t(1, 1), GroupWord::t(6, 1), GroupWord::t(7, 1)]);
    }

    #[test]
    fn validation_examples() {
        let c = chain_structure(1.0);
        let r = c.validate(&ValidationOptions::default());
        assert_eq!(r.daff, 1);
        assert!(r.passed(), "{:?}", r.failures());
        let n = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
        let r = n.validate(&ValidationOptions {
            neighbors: Some(vec![GroupWord::t(1, 1), GroupWord::t(6, 1), GroupWord::t(7, 1)]),
            ..Default::default()
        });
        assert_eq!(r.daff, 3);
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn duplicated_orbit_point_fails_injectivity() {
        let tol = ToleranceConfig::default();
        let t = Isometry::translation(DVector::from_vec(vec![0.0, 1.0]));
        let p = Isometry::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
            DVector::zeros(2),
        );
        let g = GroupDescriptor::new(1, 1, vec![t], vec![Isometry::identity(2), p], None, None, 1, &tol)
            .unwrap();
        let s = Structure::new(g, DVector::zeros(2)).unwrap();
        let r = s.validate(&ValidationOptions::default());
        assert!(!r.passed());
        assert!(r.failures().iter().any(|c| c.name == "injectivity"));
    }

    #[test]
    fn rejects_inconsistent_action() {
        let tol = ToleranceConfig::default();
        let t = Isometry::translation(DVector::from_vec(vec![0.0, 1.0]));
        let p = Isometry::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])), DVector::zeros(2));
        let res = GroupDescriptor::new(
            1,
            1,
            vec![t],
            vec![Isometry::identity(2), p],
            None,
            Some(vec![vec![1], vec![1]]),
            1,
            &tol,
        );
        assert!(res.is_err());
    }
}
