//! Builds the screw group of the (5,1) nanotube, checks it, and lists the
//! orbit points closest to the base atom.

use objstab::families::{nanotube_a0, nanotube_structure, NANOTUBE_ALPHA0};
use objstab::group::{GroupWord, ValidationOptions};

fn main() -> objstab::Result<()> {
    let s = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
    let desc = &s.descriptor;
    println!("d = {}, d1 = {}, d2 = {}, |P| = {}", s.d(), desc.d1, desc.d2, desc.order_of_point_part());

    let report = s.validate(&ValidationOptions::default());
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }

    // Composition of words agrees with composition of the realized isometries.
    let g = GroupWord::t(3, 1);
    let h = GroupWord::t(-2, 0);
    let gh = desc.compose(&g, &h);
    let gap = desc.realize(&gh).distance(&desc.realize(&g).compose(&desc.realize(&h)));
    println!("t^{} p_{} * t^{} p_{} = t^{} p_{}  (isometry gap {gap:.1e})", g.z[0], g.q, h.z[0], h.q, gh.z[0], gh.q);

    let mut ball = s.orbit_ball(1.2)?;
    let x0 = &s.x0;
    ball.sort_by(|a, b| (&a.1 - x0).norm().total_cmp(&(&b.1 - x0).norm()));
    for (w, x) in ball.iter().take(8) {
        println!("{:>14} |g x0 - x0| = {:.6}", format!("t^{} p_{}", w.z[0], w.q), (x - x0).norm());
    }
    Ok(())
}
