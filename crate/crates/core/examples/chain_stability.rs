//! λ_a and λ_{a,0,0} of the Lennard-Jones chain across the stable window.

use objstab::driver::{StabilityProblem, SweepConfig};
use objstab::families::{chain_a_double_star, chain_a_star, chain_potential, chain_range, chain_structure};
use objstab::tolerance::ToleranceConfig;

fn main() -> objstab::Result<()> {
    let tol = ToleranceConfig::default();
    let cfg = SweepConfig::default();
    println!("a* = {:.6}, a** = {:.6}", chain_a_star(), chain_a_double_star());
    for a in [1.0, 1.1, 1.2, 1.22, 1.24, 1.25, 1.3] {
        let p = StabilityProblem::new(&chain_structure(a), &chain_potential(), &chain_range(), &tol)?;
        let r = p.stability_constants(&cfg)?;
        println!(
            "a = {a:.2}: λ_R = {:>12.6}  λ_R00 = {:>12.6}  {:?}",
            r.lambda_a.value.to_f64(),
            r.lambda_a00.value.to_f64(),
            r.verdict
        );
    }
    Ok(())
}
