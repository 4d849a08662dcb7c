//! Relaxes the (5,1) nanotube over scale, twist and base point, then
//! evaluates stability on both sides of the relaxed scale.

use objstab::driver::{StabilityProblem, SweepConfig};
use objstab::families::*;
use objstab::relax::{FreeParams, NelderMeadOptions, ParamFamily, Params};
use objstab::tolerance::ToleranceConfig;

fn main() -> objstab::Result<()> {
    let tol = ToleranceConfig::default();
    let fam = ParamFamily::new(|p: &Params| Ok((nanotube_structure(p.a, p.alpha, Some(p.x.clone())), nanotube_potential())))
        .with_neighbors(nanotube_neighbors())
        .with_alpha_range(0.0, std::f64::consts::PI);
    let a0 = nanotube_a0();
    let start = Params { a: a0, alpha: NANOTUBE_ALPHA0, x: nanotube_ideal_x(a0) };
    let opts = NelderMeadOptions::default();
    let r = fam.relax(&start, FreeParams::ALL, &opts, &tol)?;
    let p = &r.params;
    println!("a* = {:.5}, alpha* = {:.5}, x* = {:.5}", p.a, p.alpha, p.x.transpose());
    println!("E = {:.10}, |e_V| = {:.1e}, newton steps {}", r.energy, r.ev_norm, r.newton_steps);

    for da in [0.01, 0.001, -0.01] {
        let a = p.a + da;
        let scaled = Params { a, alpha: p.alpha, x: &p.x * (a / p.a) };
        let q = fam.relax(&scaled, FreeParams::X, &opts, &tol)?.params;
        let s = nanotube_structure(q.a, q.alpha, Some(q.x.clone()));
        let prob = StabilityProblem::new(&s, &nanotube_potential(), &nanotube_range(), &tol)?;
        let rep = prob.stability_constants(&SweepConfig::default())?;
        println!(
            "a* {da:+.3}: λ_R = {:>12.6}  λ_R00 = {:>12.6}  {:?}",
            rep.lambda_a.value.to_f64(),
            rep.lambda_a00.value.to_f64(),
            rep.verdict
        );
    }
    Ok(())
}
