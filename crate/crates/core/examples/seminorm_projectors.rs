//! Projectors onto infinitesimal rigid motions and the seminorms they induce.

use objstab::families::{chain_range, chain_structure};
use objstab::field::PeriodicField;
use objstab::group::GroupWord;
use objstab::seminorm::{SeminormKind, SeminormModel};
use objstab::tolerance::ToleranceConfig;
use rand::SeedableRng;

fn main() -> objstab::Result<()> {
    let s = chain_structure(1.2);
    let m = SeminormModel::new(&s, &chain_range(), &ToleranceConfig::default())?;
    println!("P =\n{:.6}", m.p);
    println!("P0 =\n{:.6}", m.p0);
    println!("property 2 witness: {:?}", m.flags.property2);

    let desc = &s.descriptor;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let u = PeriodicField::random(desc, 4, 2, &mut rng);
    for kind in [SeminormKind::Full, SeminormKind::ZeroZero] {
        println!(
            "{:>3}: direct {:.12}  convolution {:.12}",
            kind.label(),
            m.eval_direct(&u, kind)?,
            m.eval_conv(&u, kind)?
        );
    }

    // A uniform translation lies in both kernels.
    let t = PeriodicField::from_fn(desc, 4, |_: &GroupWord| nalgebra::DVector::from_vec(vec![0.3, -1.1]));
    println!("translation: |u|_R = {:.1e}, |u|_R00 = {:.1e}", m.eval(&t, SeminormKind::Full)?, m.eval(&t, SeminormKind::ZeroZero)?);
    Ok(())
}
