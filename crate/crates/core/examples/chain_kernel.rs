//! Hessian kernel of the Lennard-Jones chain against its closed form.

use objstab::families::{chain_a_star, chain_energy_closed_form, chain_potential, chain_structure};
use objstab::hessian::HessianModel;
use objstab::tolerance::ToleranceConfig;

fn main() -> objstab::Result<()> {
    let tol = ToleranceConfig::default();
    for a in [1.0, chain_a_star(), 1.2, 1.3] {
        let m = HessianModel::new(&chain_structure(a), &chain_potential(), &tol)?;
        println!(
            "a = {a:.6}: E = {:.12} (closed form {:.12}), |e_V| = {:.1e}",
            m.reference_energy()?,
            chain_energy_closed_form(a),
            m.criticality.norm
        );
        for (g, f) in &m.kernel.entries {
            println!("  f({:>3}) = diag({:+.6}, {:+.6})", g.z[0], f[(0, 0)], f[(1, 1)]);
        }
        println!("  transpose defect {:.1e}", m.kernel.transpose_defect(&m.structure.descriptor));
    }
    Ok(())
}
