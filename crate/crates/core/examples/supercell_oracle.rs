//! The Fourier route against dense supercell eigenproblems.

use objstab::driver::StabilityProblem;
use objstab::families::{chain_potential, chain_range, chain_structure};
use objstab::seminorm::SeminormKind;
use objstab::tolerance::ToleranceConfig;

fn main() -> objstab::Result<()> {
    let p = StabilityProblem::new(&chain_structure(1.2), &chain_potential(), &chain_range(), &ToleranceConfig::default())?;
    for kind in [SeminormKind::Full, SeminormKind::ZeroZero] {
        for n in [4, 8, 16, 32] {
            let dense = p.supercell_lambda(n, kind, 4096)?.value.to_f64();
            let fourier = p.fourier_slice_min(n, kind)?.to_f64();
            println!("{:>3} N = {n:>2}: supercell {dense:.14}  fourier {fourier:.14}", kind.label());
        }
    }
    Ok(())
}
