//! The `objstab` command line. Exit codes: 0 stable for the requested
//! seminorm, 1 unstable, 2 not critical, 3 computation error, 4 config error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{parse_config, Overrides, Resolved, RunConfig};
use crate::driver::{scale_sweep, zero_crossings, Mode, Selection, StabilityProblem, StabilityReport};
use crate::error::{Error, Result};
use crate::field::PeriodicField;
use crate::group::ValidationOptions;
use crate::linalg::rank;
use crate::output::{curve_csv, curve_plot, emit_svg, kernel_csv, num, sweep_csv, sweep_plot, Metadata};
use crate::seminorm::{check_property, SeminormKind};

pub const EXIT_STABLE: i32 = 0;
pub const EXIT_UNSTABLE: i32 = 1;
pub const EXIT_NOT_CRITICAL: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "objstab", version, about = "Stability of objective structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeminormArg {
    #[value(name = "R")]
    R,
    #[value(name = "R00")]
    R00,
    #[value(name = "both")]
    Both,
}

impl From<SeminormArg> for Selection {
    fn from(s: SeminormArg) -> Self {
        match s {
            SeminormArg::R => Selection::R,
            SeminormArg::R00 => Selection::R00,
            SeminormArg::Both => Selection::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Extended,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    pub config: PathBuf,
    /// Override the scale parameter `a`.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Override the angle parameter `alpha`.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Wave-vector grid points per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Seminorm deciding the exit code.
    #[arg(long, value_enum, default_value = "both")]
    pub seminorm: SeminormArg,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Directory for CSV, SVG and JSON artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the supercell, Rayleigh and dual-route cross-checks.
    #[arg(long)]
    pub oracle: bool,
    /// Use the structure as written, skipping every relaxation.
    #[arg(long)]
    pub ideal: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the group descriptor, structure and range set.
    Validate(Common),
    /// Print e_V and decide criticality.
    Critical(Common),
    /// Print the representation set, stabilizers and wave-vector domains.
    Dual(Common),
    /// Write the λ-curves as CSV and SVG.
    Curve(Common),
    /// Compute λ_a and λ_{a,0,0} and the verdict.
    Stability(Common),
    /// Scan the scale parameter and locate sign changes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Minimize the energy per site over the free parameters.
    Relax(Common),
    /// Inspect the seminorm projectors and kernels.
    Seminorm {
        #[command(flatten)]
        common: Common,
        /// Compare direct and convolution evaluation on random fields.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate(c)
            | Command::Critical(c)
            | Command::Dual(c)
            | Command::Curve(c)
            | Command::Stability(c)
            | Command::Relax(c) => c,
            Command::Sweep { common, .. } | Command::Seminorm { common, .. } => common,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for_error(&e)
        }
    }
}

pub fn exit_code_for_error(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_COMPUTATION,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("OBJSTAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("OBJSTAB_THREADS: not a count: {v:?}")))?;
    if n == 0 {
        return Err(Error::Config("OBJSTAB_THREADS: must be positive".into()));
    }
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

struct Context {
    cfg: RunConfig,
    path: String,
    ov: Overrides,
}

impl Context {
    fn load(c: &Common) -> Result<Self> {
        let mut cfg = parse_config(&c.config).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", c.config.display())),
            other => other,
        })?;
        if let Some(g) = c.grid {
            if g < 2 {
                return Err(Error::Config("--grid: need at least 2 points".into()));
            }
            cfg.sweep.grid_points = g;
        }
        if let Some(m) = c.mode {
            cfg.sweep.mode = match m {
                ModeArg::Strict => Mode::Strict,
                ModeArg::Extended => Mode::Extended,
            };
        }
        let ov = Overrides { a: c.a, alpha: c.alpha, ideal: c.ideal };
        Ok(Self { cfg, path: c.config.display().to_string(), ov })
    }

    fn metadata(&self, res: &Resolved, problem: Option<&StabilityProblem>) -> Metadata {
        let mut m = Metadata::new(&self.path)
            .with("a", num(res.params.a))
            .with("alpha", num(res.params.alpha))
            .with("x0", res.params.x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "))
            .with("grid", self.cfg.sweep.grid_points)
            .with("mode", format!("{:?}", self.cfg.sweep.mode).to_lowercase())
            .with("phi_order", words_json(&self.cfg.range.words));
        if let Some(p) = problem {
            m = m.with("coset_reps", serde_json::to_string(&p.structure().descriptor.tf_coset_reps()).unwrap_or_default());
        }
        m.with_tolerances(&self.cfg.tolerances)
    }
}

fn words_json<T: serde::Serialize>(w: &T) -> String {
    serde_json::to_string(w).unwrap_or_default()
}

fn out_dir(c: &Common, cfg: &RunConfig) -> Option<PathBuf> {
    c.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn execute(cmd: &Command) -> Result<i32> {
    let common = cmd.common();
    let ctx = Context::load(common)?;
    match cmd {
        Command::Validate(_) => validate(&ctx),
        Command::Critical(c) => critical(&ctx, c),
        Command::Dual(_) => dual(&ctx),
        Command::Curve(c) => stability(&ctx, c, true),
        Command::Stability(c) => stability(&ctx, c, false),
        Command::Sweep { common, from, to, steps } => sweep(&ctx, common, *from, *to, *steps),
        Command::Relax(c) => relax(&ctx, c),
        Command::Seminorm { common, check, trials } => seminorm(&ctx, common, *check, *trials),
    }
}

fn validate(ctx: &Context) -> Result<i32> {
    let p = ctx.cfg.resolve(&Overrides { ideal: true, ..ctx.ov })?.params;
    let (s, _) = ctx.cfg.build(&p)?;
    let opts = ValidationOptions { tol: ctx.cfg.tolerances, ball_radius: None, neighbors: ctx.cfg.structure.neighbors.clone() };
    let report = s.validate(&opts);
    println!("d = {}, d1 = {}, d2 = {}, daff = {}", s.d(), s.descriptor.d1, s.descriptor.d2, report.daff);
    for c in &report.checks {
        println!("{:<4} {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    let flags = check_property(&s, &ctx.cfg.range);
    println!("{:<4} property 1 (orbit rank {})", if flags.property1 { "ok" } else { "FAIL" }, flags.orbit_rank);
    if let Some(p2) = flags.property2 {
        println!("{:<4} property 2", if p2 { "ok" } else { "FAIL" });
        if !flags.missing_products.is_empty() {
            println!("     missing products: {}", words_json(&flags.missing_products));
        }
    }
    if let Some(g) = flags.generates {
        println!("{:<4} R' generates G", if g { "ok" } else { "FAIL" });
    }
    let ok = report.passed() && flags.property1 && flags.property2.unwrap_or(true) && flags.generates.unwrap_or(true);
    Ok(if ok { EXIT_STABLE } else { EXIT_CONFIG })
}

fn critical(ctx: &Context, c: &Common) -> Result<i32> {
    let res = ctx.cfg.resolve(&ctx.ov)?;
    let p = ctx.cfg.problem(&res.params)?;
    let cr = &p.model.criticality;
    println!("a = {}  alpha = {}", num(res.params.a), num(res.params.alpha));
    println!("e_V = [{}]", cr.e_v.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", "));
    println!("|e_V| = {}", num(cr.norm));
    println!("critical: {}", cr.is_critical);
    if let Some(dir) = out_dir(c, &ctx.cfg) {
        let meta = ctx.metadata(&res, Some(&p));
        write(&dir, "kernel_f.csv", &kernel_csv(&p.model.kernel, &meta))?;
    }
    Ok(if cr.is_critical { EXIT_STABLE } else { EXIT_NOT_CRITICAL })
}

fn dual(ctx: &Context) -> Result<i32> {
    let res = ctx.cfg.resolve(&Overrides { ideal: true, ..ctx.ov })?;
    let (s, _) = ctx.cfg.build(&res.params)?;
    let d = ctx.cfg.dual.build(&s.descriptor)?;
    println!("coset representatives of TF: {:?}", s.descriptor.tf_coset_reps());
    println!("dual basis: {}", words_json(&d.dual_basis.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>()));
    for r in &d.reps {
        println!("rho {}: dim {}, G_rho = {:?}", r.base.label, r.base.dim, r.stabilizer);
        println!("  K_rho = {}", words_json(&r.domain));
        if !r.fold.is_empty() {
            println!("  fold = {:?}", r.fold);
        }
    }
    Ok(EXIT_STABLE)
}

fn print_report(r: &StabilityReport) {
    for (name, e) in [("lambda_R", &r.lambda_a), ("lambda_R00", &r.lambda_a00)] {
        let at = e.k.as_ref().map(|k| k.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(",")).unwrap_or_default();
        print!("{name} = {} at k = ({at}) rho {}", num(e.value.to_f64()), e.rep);
        if let Some(d) = &e.divergence {
            print!(" divergence {}", words_json(d));
        }
        println!();
    }
    println!("|e_V| = {}  verdict: {}", num(r.critical.norm), words_json(&r.verdict).trim_matches('"'));
}

fn stability(ctx: &Context, c: &Common, always_write: bool) -> Result<i32> {
    let res = ctx.cfg.resolve(&ctx.ov)?;
    if let Some(r) = &res.relaxation {
        println!("relaxed: |e_V| = {}  energy = {}", num(r.ev_norm), num(r.energy));
    }
    let p = ctx.cfg.problem(&res.params)?;
    let report = p.stability_constants(&ctx.cfg.sweep)?;
    println!("a = {}  alpha = {}", num(res.params.a), num(res.params.alpha));
    print_report(&report);
    let meta = ctx.metadata(&res, Some(&p));
    let dir = out_dir(c, &ctx.cfg).or_else(|| always_write.then(|| PathBuf::from(".")));
    if let Some(dir) = &dir {
        let d2 = p.structure().descriptor.d2;
        write(dir, "curve.csv", &curve_csv(&report.curves, d2, &meta))?;
        if ctx.cfg.output.svg && d2 == 1 {
            let title = format!("{} a = {:.5}", ctx.cfg.name, res.params.a);
            write(dir, "curve.svg", &emit_svg(&curve_plot(&report.curves, &title)))?;
        }
        let summary = json!({
            "metadata": meta,
            "params": res.params,
            "relaxation": res.relaxation,
            "lambda_R": report.lambda_a,
            "lambda_R00": report.lambda_a00,
            "critical": report.critical,
            "verdict": report.verdict,
        });
        write(dir, "stability.json", &serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?)?;
    }
    if c.oracle && !oracle(&p, &report)? {
        return Ok(EXIT_COMPUTATION);
    }
    Ok(report.verdict.exit_code_for(c.seminorm.into()))
}

/// Supercell, Rayleigh and dual-route cross-checks; prints one line each.
fn oracle(p: &StabilityProblem, report: &StabilityReport) -> Result<bool> {
    let mut ok = true;
    for kind in [SeminormKind::Full, SeminormKind::ZeroZero] {
        for n in [4, 8, 16, 32] {
            let cells = p.structure().descriptor.num_cosets(n);
            if cells > 4096 {
                println!("oracle supercell {} N={n}: skipped ({cells} cells)", kind.label());
                continue;
            }
            let sc = p.supercell_lambda(n, kind, 4096)?.value.to_f64();
            let fr = p.fourier_slice_min(n, kind)?.to_f64();
            let pass = (sc == fr) || (sc - fr).abs() <= 1e-8 * (1.0 + fr.abs());
            ok &= pass;
            println!("oracle supercell {} N={n}: {} vs {} {}", kind.label(), num(sc), num(fr), if pass { "ok" } else { "FAIL" });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = p.rayleigh_check(report, 200, 8, &mut rng)?;
    println!("oracle rayleigh: {} violations in 200 trials", v.len());
    ok &= v.is_empty();
    let desc = &p.structure().descriptor;
    let d = p.structure().d();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rand::Rng::gen_range(&mut rng, 1..=6);
        let u = PeriodicField::random(desc, n, d, &mut rng);
        let a = p.model.quadratic_form_direct(&u, &u)?;
        let b = p.model.quadratic_form(&u, &u)?;
        worst = worst.max((a - b).abs() / (1.0 + a.abs()));
        for kind in [SeminormKind::Full, SeminormKind::ZeroZero] {
            let x = p.seminorm.eval_direct(&u, kind)?;
            let y = p.seminorm.eval_conv(&u, kind)?;
            worst = worst.max((x - y).abs() / (1.0 + x.abs()));
        }
    }
    let pass = worst <= 1e-10;
    ok &= pass;
    println!("oracle dual-route: max relative gap {} {}", num(worst), if pass { "ok" } else { "FAIL" });
    Ok(ok)
}

fn sweep(ctx: &Context, c: &Common, from: Option<f64>, to: Option<f64>, steps: Option<usize>) -> Result<i32> {
    let ss = &ctx.cfg.scale_sweep;
    let (from, to, steps) = (from.unwrap_or(ss.from), to.unwrap_or(ss.to), steps.unwrap_or(ss.steps));
    if steps < 2 || !(to > from) {
        return Err(Error::Config(format!("/scale_sweep: need from < to and steps ≥ 2, got {from}..{to} in {steps}")));
    }
    let family = ctx.cfg.scale_family(&ctx.ov)?;
    let values: Vec<f64> = (0..steps).map(|i| from + (to - from) * i as f64 / (steps - 1) as f64).collect();
    let (cfg, tol) = (&ctx.cfg.sweep, &ctx.cfg.tolerances);
    let rows = scale_sweep(&family, &values, cfg, tol);
    println!("{:>12} {:>24} {:>24} {:>12}", "a", "lambda_R", "lambda_R00", "|e_V|");
    for r in &rows {
        match &r.error {
            Some(e) => println!("{:>12.6} error: {e}", r.a),
            None => println!("{:>12.6} {:>24} {:>24} {:>12.3e}", r.a, num(r.lambda_a.to_f64()), num(r.lambda_a00.to_f64()), r.ev_norm),
        }
    }
    let sel: Selection = c.seminorm.into();
    let mut crossings = json!({});
    for (kind, name, wanted) in [
        (SeminormKind::Full, "lambda_R", sel != Selection::R00),
        (SeminormKind::ZeroZero, "lambda_R00", sel != Selection::R),
    ] {
        if wanted {
            let z = zero_crossings(&family, &rows, kind, cfg, tol);
            println!("zero crossings of {name}: {}", z.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "));
            crossings[name] = json!(z);
        }
    }
    if let Some(dir) = out_dir(c, &ctx.cfg) {
        let meta = Metadata::new(&ctx.path)
            .with("alpha", num(family.alpha()))
            .with("grid", cfg.grid_points)
            .with("phi_order", words_json(&ctx.cfg.range.words))
            .with("zero_crossings", crossings.to_string())
            .with_tolerances(tol);
        write(&dir, "sweep.csv", &sweep_csv(&rows, &meta))?;
        if ctx.cfg.output.svg {
            write(&dir, "sweep.svg", &emit_svg(&sweep_plot(&rows, &ctx.cfg.name)))?;
        }
    }
    Ok(if rows.iter().all(|r| r.error.is_some()) { EXIT_COMPUTATION } else { EXIT_STABLE })
}

fn relax(ctx: &Context, c: &Common) -> Result<i32> {
    let result = if ctx.ov.a.is_some() || ctx.ov.alpha.is_some() {
        ctx.cfg.resolve(&ctx.ov)?.relaxation
    } else {
        Some(ctx.cfg.relax_all()?)
    };
    let Some(r) = result else {
        println!("relaxation disabled");
        return Ok(EXIT_STABLE);
    };
    let text = serde_json::to_string_pretty(&r).map_err(|e| Error::Config(e.to_string()))?;
    println!("{text}");
    if let Some(dir) = out_dir(c, &ctx.cfg) {
        write(&dir, "relax.json", &text)?;
    }
    let ok = r.ev_norm <= ctx.cfg.tolerances.criticality && r.neighbor_condition != Some(false);
    Ok(if ok { EXIT_STABLE } else { EXIT_COMPUTATION })
}

fn seminorm(ctx: &Context, c: &Common, check: bool, trials: usize) -> Result<i32> {
    let res = ctx.cfg.resolve(&ctx.ov)?;
    let p = ctx.cfg.problem(&res.params)?;
    let meta = ctx.metadata(&res, Some(&p));
    for kind in [SeminormKind::Full, SeminormKind::ZeroZero] {
        let proj = p.seminorm.projector(kind);
        println!(
            "{}: projector {}x{} rank {}, kernel support {}",
            kind.label(),
            proj.nrows(),
            proj.ncols(),
            rank(proj, ctx.cfg.tolerances.rank_rtol),
            p.seminorm.kernel(kind).iter().count()
        );
    }
    if let Some(dir) = out_dir(c, &ctx.cfg) {
        for kind in [SeminormKind::Full, SeminormKind::ZeroZero] {
            let mut s = meta.header();
            s.push_str("row");
            let proj = p.seminorm.projector(kind);
            for j in 0..proj.ncols() {
                s.push_str(&format!(",c{j}"));
            }
            s.push('\n');
            for i in 0..proj.nrows() {
                s.push_str(&i.to_string());
                for j in 0..proj.ncols() {
                    s.push(',');
                    s.push_str(&num(proj[(i, j)]));
                }
                s.push('\n');
            }
            write(&dir, &format!("projector_{}.csv", kind.label()), &s)?;
        }
    }
    if !check {
        return Ok(EXIT_STABLE);
    }
    let desc = &p.structure().descriptor;
    let d = p.structure().d();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = 0;
    for t in 0..trials {
        let n = rand::Rng::gen_range(&mut rng, 1..=8);
        let u = PeriodicField::random(desc, n, d, &mut rng);
        let full = [p.seminorm.eval_direct(&u, SeminormKind::Full)?, p.seminorm.eval_conv(&u, SeminormKind::Full)?];
        let zz = [p.seminorm.eval_direct(&u, SeminormKind::ZeroZero)?, p.seminorm.eval_conv(&u, SeminormKind::ZeroZero)?];
        let gap = ((full[0] - full[1]).abs() / (1.0 + full[0])).max((zz[0] - zz[1]).abs() / (1.0 + zz[0]));
        let ordered = full[0] <= zz[0] * (1.0 + 1e-10) + 1e-12;
        if gap > 1e-10 || !ordered {
            failures += 1;
            println!("trial {t} (N = {n}): direct/convolution gap {gap:.3e}, |u|_R = {}, |u|_R00 = {}", num(full[0]), num(zz[0]));
        }
    }
    println!("seminorm check: {failures} failures in {trials} trials");
    Ok(if failures == 0 { EXIT_STABLE } else { EXIT_COMPUTATION })
}
