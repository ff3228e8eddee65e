//! `qlangevin`: command-line front end writing CSV tables with manifest sidecars.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use qlangevin::bath::fdr_residual;
use qlangevin::charpoly::solve_roots;
use qlangevin::checks::{run_suite, CheckResult, Suite};
use qlangevin::correlators::{
    asymptotic_variances_quadrature, brute_force_correlator, pairs_to_matrix, CorrelatorEngine, VarianceForm, PAIR_NAMES,
};
use qlangevin::diffusion::{asymptotic_diffusion, diffusion_at, StationaryForm};
use qlangevin::figures::{figure, solvable, FigureOptions};
use qlangevin::magnetism::{asymptotic_magnetization, MagnetismEngine, PairExpansionForm};
use qlangevin::moments::{evolve_covariance, OdeOptions, TimeDependentCoefficients};
use qlangevin::params::validate;
use qlangevin::propagator::build_from_params;
use qlangevin::quadrature::QuadratureSpec;
use qlangevin::transport::{asymptotic_transport, TransportModel};
use qlangevin::{Error, SystemParams};

use output::{emit, float, write_atomic, Csv, Manifest};

#[derive(Debug, Parser)]
#[command(name = "qlangevin", version, about = "Dissipative charged oscillator in a magnetic field: transport, variances, magnetization")]
struct Cli {
    /// key=value parameter file; unspecified keys take defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (directory for `figure`); stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative quadrature tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    t_max: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Lift exact root degeneracies by perturbing lambda_y
    #[arg(long, global = true)]
    nudge: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Oracle {
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    All,
    Roots,
    Fdr,
    Consistency,
    Figures,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Roots => Suite::Roots,
            SuiteArg::Fdr => Suite::Fdr,
            SuiteArg::Consistency => Suite::Consistency,
            SuiteArg::Figures => Suite::Figures,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Characteristic roots, partial-fraction weights and the root identities
    Roots,
    /// The twelve propagator functions on a time grid
    Propagators,
    /// Friction coefficients and renormalized cyclotron frequencies
    Transport,
    /// Diffusion coefficients on a time grid, or their long-time values
    Diffusion {
        /// Overrides the configured temperature
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        asymptotic: bool,
    },
    /// Noise correlators on a time grid, or the long-time variances
    Variances {
        #[arg(long, conflicts_with = "oracle")]
        asymptotic: bool,
        /// Evaluate with the direct time-domain integration instead
        #[arg(long, value_enum)]
        oracle: Option<Oracle>,
    },
    /// Means and covariance from the moment equations
    Moments {
        /// key=value file with mean_<q> and sigma_<pair> entries
        #[arg(long)]
        initial: Option<PathBuf>,
    },
    /// Angular momentum and magnetization
    Magnetism {
        /// omega_c:min:max:steps, long-time values at each point
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        asymptotic: bool,
    },
    /// Data for figure N (1 to 8), one CSV per curve
    Figure { n: u8 },
    /// Run an acceptance suite
    Check {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Lib(e) if e.is_validation() => 1,
            Failure::Lib(e) if e.is_consistency() => 3,
            Failure::Lib(_) | Failure::Io(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(s) | Failure::Check(s) => write!(f, "{s}"),
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qlangevin: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

struct Context {
    params: SystemParams,
    spec: QuadratureSpec,
    t_max: f64,
    steps: usize,
    out: Option<PathBuf>,
    manifest: Manifest,
}

impl Context {
    fn grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.t_max * k as f64 / self.steps as f64).collect()
    }

    fn emit(&mut self, table: &Csv) -> Outcome {
        self.manifest.config = self.params.to_config_string();
        emit(table, self.out.as_deref(), &mut self.manifest)?;
        Ok(())
    }
}

fn context(cli: &Cli, name: &str) -> std::result::Result<Context, Failure> {
    let raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            SystemParams::from_config_str(&text)?
        }
        None => SystemParams::default(),
    };
    let mut params = validate(&raw)?;
    if cli.nudge {
        params = params.nudged();
    }
    let mut spec = QuadratureSpec::default();
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {tol}")));
        }
        spec.rel_tol = tol;
    }
    let t_max = cli.t_max.unwrap_or(10.0);
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Failure::Usage(format!("--t-max must be positive, got {t_max}")));
    }
    let steps = cli.steps.unwrap_or(200);
    if steps == 0 {
        return Err(Failure::Usage("--steps must be positive".into()));
    }
    let mut manifest = Manifest::default();
    manifest.note("tool", format!("qlangevin {}", env!("CARGO_PKG_VERSION")));
    manifest.note("command", name);
    manifest.note("rel_tol", float(spec.rel_tol));
    manifest.note("abs_tol", float(spec.abs_tol));
    manifest.note("t_max", t_max);
    manifest.note("steps", steps);
    manifest.note("nudge", cli.nudge);
    manifest.note(
        "forms",
        "diffusion asymptotics exact fixed point; variances long-time derived; magnetization pair expansion halved",
    );
    Ok(Context { params, spec, t_max, steps, out: cli.out.clone(), manifest })
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Roots => roots(context(cli, "roots")?),
        Command::Propagators => propagators(context(cli, "propagators")?),
        Command::Transport => transport(context(cli, "transport")?),
        Command::Diffusion { temperature, asymptotic } => {
            let mut ctx = context(cli, "diffusion")?;
            if let Some(t) = temperature {
                ctx.params = validate(&ctx.params.with_temperature(*t))?;
            }
            diffusion(ctx, *asymptotic)
        }
        Command::Variances { asymptotic, oracle } => variances(context(cli, "variances")?, *asymptotic, *oracle),
        Command::Moments { initial } => moments(context(cli, "moments")?, initial.as_deref()),
        Command::Magnetism { sweep, asymptotic } => magnetism(context(cli, "magnetism")?, sweep.as_deref(), *asymptotic),
        Command::Figure { n } => figures(cli, *n),
        Command::Check { suite } => check(cli, (*suite).into()),
    }
}

fn roots(mut ctx: Context) -> Outcome {
    let p = ctx.params;
    let r = solve_roots(&p)?;
    let mut t = Csv::new(&["index", "re", "im", "weight_re", "weight_im"]);
    for (i, (s, b)) in r.roots.iter().zip(&r.weights).enumerate() {
        t.push(vec![i as f64, s.re, s.im, b.re, b.im]);
    }
    let [s0, s1, s2, s3] = r.roots;
    let (prod, sum) = (s0 * s1 * s2 * s3, s0 + s1 + s2 + s3);
    let want = p.gamma * p.gamma * p.q();
    ctx.manifest.result("product_rel_error", float((prod - want).norm() / want));
    ctx.manifest.result("sum_rel_error", float((sum + 2.0 * p.gamma).norm() / (2.0 * p.gamma)));
    ctx.manifest.result("degeneracy_margin", float(r.degeneracy_margin));
    ctx.emit(&t)
}

fn propagators(mut ctx: Context) -> Outcome {
    let (_, props) = build_from_params(&ctx.params)?;
    let named = props.named();
    let mut header = vec!["t"];
    header.extend(named.iter().map(|(n, _)| *n));
    let mut t = Csv::new(&header);
    for time in ctx.grid() {
        let mut row = vec![time];
        for (_, f) in &named {
            row.push(f.eval(time)?);
        }
        t.push(row);
    }
    ctx.emit(&t)
}

fn transport(mut ctx: Context) -> Outcome {
    let p = ctx.params;
    let (roots, props) = build_from_params(&p)?;
    let m = TransportModel::new(&props);
    let mut t = Csv::new(&["t", "lambda_pi_x", "lambda_pi_y", "omega_tilde_cx", "omega_tilde_cy"]);
    let mut invalid = 0;
    for time in ctx.grid() {
        match m.at(time) {
            Ok(s) => t.push(vec![time, s.lambda_pi_x, s.lambda_pi_y, s.omega_tilde_cx, s.omega_tilde_cy]),
            Err(Error::DenominatorVanished { .. }) => {
                invalid += 1;
                t.push(vec![time, f64::NAN, f64::NAN, f64::NAN, f64::NAN]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    ctx.manifest.result("invalid_samples", invalid);
    if let Ok(a) = asymptotic_transport(&p, &roots) {
        ctx.manifest.result("asymptotic_lambda_pi_x", float(a.lambda_pi_x));
        ctx.manifest.result("asymptotic_lambda_pi_y", float(a.lambda_pi_y));
        ctx.manifest.result("asymptotic_omega_tilde_cx", float(a.omega_tilde_cx));
        ctx.manifest.result("asymptotic_omega_tilde_cy", float(a.omega_tilde_cy));
    }
    ctx.emit(&t)
}

const DIFFUSION_COLUMNS: [&str; 7] = ["pixpix", "piypiy", "pixpiy", "xpix", "xpiy", "ypix", "ypiy"];

fn diffusion(mut ctx: Context, asymptotic: bool) -> Outcome {
    let p = ctx.params;
    let (roots, props) = build_from_params(&p)?;
    let stationary = || -> qlangevin::Result<_> {
        let tr = asymptotic_transport(&p, &roots)?;
        let v = asymptotic_variances_quadrature(&p, &roots, &ctx.spec, VarianceForm::Derived)?;
        Ok(asymptotic_diffusion(&p, &tr, &v, StationaryForm::Exact))
    };
    if asymptotic {
        let d = stationary()?;
        let mut t = Csv::new(&DIFFUSION_COLUMNS);
        t.push(d.named().iter().map(|(_, v)| *v).collect());
        return ctx.emit(&t);
    }
    let model = TransportModel::new(&props);
    let engine = CorrelatorEngine::new(&p, &props, &roots)?;
    let mut header = vec!["t"];
    header.extend(DIFFUSION_COLUMNS);
    let rows: Vec<qlangevin::Result<Vec<f64>>> = ctx
        .grid()
        .par_iter()
        .map(|&time| {
            let tr = match model.at(time) {
                Ok(tr) => tr,
                Err(Error::DenominatorVanished { .. }) => return Ok(vec![f64::NAN; 8]),
                Err(e) => return Err(e),
            };
            let c = engine.at(time, &ctx.spec)?;
            let d = diffusion_at(&p, &tr, &c)?;
            let mut row = vec![time];
            row.extend(d.named().iter().map(|(_, v)| *v));
            Ok(row)
        })
        .collect();
    let mut t = Csv::new(&header);
    for row in rows {
        t.push(row?);
    }
    fill_times(&mut t, &ctx.grid());
    if let Ok(d) = stationary() {
        for (name, v) in d.named() {
            ctx.manifest.result(&format!("asymptotic_{name}"), float(v));
        }
    }
    ctx.emit(&t)
}

/// Invalid rows carry NaN everywhere; restore their time stamps.
fn fill_times(t: &mut Csv, grid: &[f64]) {
    for (row, &time) in t.rows.iter_mut().zip(grid) {
        row[0] = time;
    }
}

fn variances(mut ctx: Context, asymptotic: bool, oracle: Option<Oracle>) -> Outcome {
    let p = ctx.params;
    let (roots, props) = build_from_params(&p)?;
    if asymptotic {
        let v = asymptotic_variances_quadrature(&p, &roots, &ctx.spec, VarianceForm::Derived)?;
        let named = v.named();
        let header: Vec<&str> = named.iter().map(|(n, _)| *n).collect();
        let mut t = Csv::new(&header);
        t.push(named.iter().map(|(_, v)| *v).collect());
        return ctx.emit(&t);
    }
    let engine = CorrelatorEngine::new(&p, &props, &roots)?;
    let mut header = vec!["t"];
    header.extend(PAIR_NAMES);
    let rows: Vec<qlangevin::Result<Vec<f64>>> = ctx
        .grid()
        .par_iter()
        .map(|&time| {
            let c = match oracle {
                Some(Oracle::Brute) => brute_force_correlator(&p, &props, time, &ctx.spec)?,
                None => engine.at(time, &ctx.spec)?,
            };
            let mut row = vec![time];
            row.extend(c.j);
            Ok(row)
        })
        .collect();
    let mut t = Csv::new(&header);
    for row in rows {
        t.push(row?);
    }
    ctx.manifest.note("evaluation", if oracle.is_some() { "time-domain oracle" } else { "closed form" });
    ctx.emit(&t)
}

/// Parses `mean_<q>` and `sigma_<pair>` entries; missing entries are zero.
fn initial_state(text: &str) -> std::result::Result<([f64; 4], [f64; 10]), Failure> {
    let means = ["mean_x", "mean_y", "mean_pix", "mean_piy"];
    let mut mean = [0.0; 4];
    let mut sigma = [0.0; 10];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Failure::Usage(format!("initial state line {}: expected key=number", lineno + 1));
        let (k, v) = line.split_once('=').ok_or_else(bad)?;
        let (k, v) = (k.trim(), v.trim().parse::<f64>().map_err(|_| bad())?);
        if let Some(i) = means.iter().position(|m| *m == k) {
            mean[i] = v;
        } else if let Some(i) = k.strip_prefix("sigma_").and_then(|s| PAIR_NAMES.iter().position(|n| *n == s)) {
            sigma[i] = v;
        } else {
            return Err(Failure::Usage(format!("initial state: unknown key {k}")));
        }
    }
    Ok((mean, sigma))
}

fn moments(mut ctx: Context, initial: Option<&Path>) -> Outcome {
    let p = ctx.params;
    let (mean0, sigma0) = match initial {
        Some(path) => initial_state(&std::fs::read_to_string(path)?)?,
        None => ([0.0; 4], [0.0; 10]),
    };
    let (roots, props) = build_from_params(&p)?;
    let engine = CorrelatorEngine::new(&p, &props, &roots)?;
    let coeffs = TimeDependentCoefficients::new(&p, TransportModel::new(&props), engine, ctx.spec.clone());
    let states = evolve_covariance(&coeffs, mean0, &pairs_to_matrix(&sigma0), &ctx.grid(), &OdeOptions::default())?;
    let mut header = vec!["t", "mean_x", "mean_y", "mean_pix", "mean_piy"];
    let sigma_names: Vec<String> = PAIR_NAMES.iter().map(|n| format!("sigma_{n}")).collect();
    header.extend(sigma_names.iter().map(String::as_str));
    let mut t = Csv::new(&header);
    for s in &states {
        let mut row = vec![s.t];
        row.extend(s.mean);
        row.extend(s.pairs());
        t.push(row);
    }
    ctx.emit(&t)
}

fn parse_sweep(s: &str) -> std::result::Result<(f64, f64, usize), Failure> {
    let bad = || Failure::Usage(format!("--sweep expects omega_c:min:max:steps, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 || parts[0] != "omega_c" {
        return Err(bad());
    }
    let lo: f64 = parts[1].parse().map_err(|_| bad())?;
    let hi: f64 = parts[2].parse().map_err(|_| bad())?;
    let n: usize = parts[3].parse().map_err(|_| bad())?;
    if !(lo >= 0.0 && hi >= lo && n >= 1) {
        return Err(bad());
    }
    Ok((lo, hi, n))
}

fn magnetism(mut ctx: Context, sweep: Option<&str>, asymptotic: bool) -> Outcome {
    let p = ctx.params;
    if !p.is_axial() {
        return Err(Error::NotAxial.into());
    }
    if let Some(s) = sweep {
        let (lo, hi, n) = parse_sweep(s)?;
        let points: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let rows: Vec<qlangevin::Result<Vec<f64>>> = points
            .par_iter()
            .map(|&w| {
                let q = solvable(SystemParams { omega_cx: w, omega_cy: w, ..p });
                let m = asymptotic_magnetization(&q, &solve_roots(&q)?, &ctx.spec)?;
                Ok(vec![w, q.temperature, m.angular_momentum, m.magnetization])
            })
            .collect();
        let mut t = Csv::new(&["omega_c", "temperature", "L_z", "M"]);
        for row in rows {
            t.push(row?);
        }
        return ctx.emit(&t);
    }
    let (roots, props) = build_from_params(&p)?;
    if asymptotic {
        let m = asymptotic_magnetization(&p, &roots, &ctx.spec)?;
        let mut t = Csv::new(&["omega_c", "temperature", "L_z", "M"]);
        t.push(vec![p.omega_c(), p.temperature, m.angular_momentum, m.magnetization]);
        return ctx.emit(&t);
    }
    let engine = MagnetismEngine::new(&p, &props, &roots)?;
    let rows: Vec<qlangevin::Result<Vec<f64>>> = ctx
        .grid()
        .par_iter()
        .map(|&time| {
            let m = engine.magnetization(time, &ctx.spec, PairExpansionForm::Halved)?;
            Ok(vec![time, p.omega_c(), p.temperature, m.angular_momentum, m.magnetization])
        })
        .collect();
    let mut t = Csv::new(&["t", "omega_c", "temperature", "L_z", "M"]);
    for row in rows {
        t.push(row?);
    }
    ctx.emit(&t)
}

fn figures(cli: &Cli, n: u8) -> Outcome {
    if !(1..=8).contains(&n) {
        return Err(Failure::Usage(format!("figures are numbered 1 to 8, got {n}")));
    }
    let mut opts = FigureOptions { t_max: cli.t_max, ..FigureOptions::default() };
    if let Some(steps) = cli.steps {
        opts.steps = steps;
        opts.sweep_points = steps;
    }
    if let Some(tol) = cli.tol {
        opts.spec.rel_tol = tol;
    }
    let fig = figure(n, &opts)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("figure{n}")));
    for a in &fig.assertions {
        println!("{} {}: {} ({})", if a.passed { "PASS" } else { "FAIL" }, a.key, a.description, a.detail);
    }
    for table in &fig.tables {
        let mut csv = Csv::new(&[]);
        csv.header = table.header.clone();
        csv.rows = table.rows.clone();
        let mut manifest = Manifest::default();
        manifest.note("tool", format!("qlangevin {}", env!("CARGO_PKG_VERSION")));
        manifest.note("command", format!("figure {n}"));
        manifest.note("curve", &table.name);
        manifest.note("rel_tol", float(opts.spec.rel_tol));
        manifest.note("steps", opts.steps);
        for a in &fig.assertions {
            manifest.result(a.key, a.passed);
        }
        emit(&csv, Some(&dir.join(format!("{}.csv", table.name))), &mut manifest)?;
    }
    if fig.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!("figure {n}: qualitative assertions failed")))
    }
}

fn report(results: &[CheckResult]) -> std::io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["criterion", "title", "passed", "elapsed_s", "budget_s", "detail"])?;
    for r in results {
        w.write_record([
            r.criterion.to_string(),
            r.title.to_string(),
            r.passed.to_string(),
            float(r.elapsed.as_secs_f64()),
            float(r.budget.as_secs_f64()),
            r.detail.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

fn check(cli: &Cli, suite: Suite) -> Outcome {
    if suite == Suite::Fdr && cli.config.is_some() {
        let ctx = context(cli, "check fdr")?;
        let p = ctx.params;
        let limit = cli.tol.unwrap_or(1e-8);
        let taus: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5 / p.gamma).collect();
        let residual = fdr_residual(&p, &taus, &QuadratureSpec::default())?;
        let passed = residual < limit;
        println!("{} fdr residual {} (limit {})", if passed { "PASS" } else { "FAIL" }, float(residual), float(limit));
        return if passed { Ok(()) } else { Err(Failure::Check("fdr residual above limit".into())) };
    }
    let results = run_suite(suite);
    for r in &results {
        println!("{}", r.line());
    }
    if let Some(path) = &cli.out {
        write_atomic(path, &report(&results)?)?;
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.criterion.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failing criteria: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_syntax() {
        assert_eq!(parse_sweep("omega_c:0:10:20").unwrap(), (0.0, 10.0, 20));
        assert!(parse_sweep("gamma:0:10:20").is_err());
        assert!(parse_sweep("omega_c:5:1:3").is_err());
        assert!(parse_sweep("omega_c:0:1").is_err());
    }

    #[test]
    fn initial_state_keys() {
        let (m, s) = initial_state("mean_pix = 1\nsigma_xx=2 # wide\n").unwrap();
        assert_eq!(m, [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(s[0], 2.0);
        assert!(initial_state("sigma_zz=1").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Lib(Error::NonPositive("gamma")).exit_code(), 1);
        assert_eq!(Failure::Lib(Error::StepSizeUnderflow { t: 1.0 }).exit_code(), 2);
        assert_eq!(Failure::Lib(Error::CrossCheckFailure("x".into())).exit_code(), 3);
        assert_eq!(Failure::Check("x".into()).exit_code(), 3);
    }
}
