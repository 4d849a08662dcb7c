//! Representation set of the nanotube group and a check that the induced
//! representations are homomorphisms.

use objstab::families::{nanotube_a0, nanotube_structure, NANOTUBE_ALPHA0};
use objstab::group::GroupWord;
use objstab::harmonic::{dual_domain, InducedRep};

fn main() -> objstab::Result<()> {
    let s = nanotube_structure(nanotube_a0(), NANOTUBE_ALPHA0, None);
    let desc = &s.descriptor;
    let dual = dual_domain(desc)?;
    println!("dual basis {:.6}", dual.dual_basis);
    for r in &dual.reps {
        println!("{}: dim {}, stabilizer {:?}, domain {:?}", r.base.label, r.base.dim, r.stabilizer, r.domain);
    }

    let k = [0.37];
    let words = [GroupWord::t(1, 0), GroupWord::t(2, 1), GroupWord::t(-3, 1)];
    for r in &dual.reps {
        let rep = InducedRep::new(desc, &k, r.base.clone())?;
        let mut worst = 0.0f64;
        for g in &words {
            for h in &words {
                let lhs = rep.eval(&desc.compose(g, h));
                let rhs = rep.eval(g) * rep.eval(h);
                worst = worst.max((lhs - rhs).norm());
            }
        }
        println!("{} at k = {}: dim {}, homomorphism defect {worst:.1e}", r.base.label, k[0], rep.dim());
    }
    Ok(())
}
