//! A two-atom structure whose second variation is negative although both
//! seminorms vanish on every displacement.

use objstab::families::{deuiso_potential, deuiso_range, deuiso_structure};
use objstab::field::PeriodicField;
use objstab::group::GroupWord;
use objstab::hessian::HessianModel;
use objstab::seminorm::{SeminormKind, SeminormModel};
use objstab::tolerance::ToleranceConfig;

fn main() -> objstab::Result<()> {
    let tol = ToleranceConfig::default();
    let s = deuiso_structure();
    let m = HessianModel::new(&s, &deuiso_potential(), &tol)?;
    let sm = SeminormModel::new(&s, &deuiso_range(), &tol)?;
    // rot(g) u(g) = J (g x0 - x0) with J the quarter turn [[0, 1], [-1, 0]].
    let j = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let u = PeriodicField::from_fn(&s.descriptor, 1, |g: &GroupWord| s.rot(g).transpose() * &j * s.relative(g));
    println!("|e_V| = {:.1e}", m.criticality.norm);
    println!("E''(u, u) = {:.12}", m.quadratic_form(&u, &u)?);
    println!("|u|_R = {:.1e}, |u|_R00 = {:.1e}", sm.eval(&u, SeminormKind::Full)?, sm.eval(&u, SeminormKind::ZeroZero)?);
    Ok(())
}
