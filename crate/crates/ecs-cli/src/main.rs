//! `ecs-verify`: command line front end for the identity engine.
//!
//! Four subcommands cover the library surface: `verify` runs one named
//! check at explicit or sampled parameters, `sweep` runs the full
//! deterministic grid, `constants` prints the scalar and many-body
//! constants, and `selftest` runs the built-in consistency suite.
//! Reports render as a human summary, JSON, or CSV; the process exits 0
//! when every report passes, 1 when any residual exceeds its tolerance,
//! and 2 on usage or domain errors.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ecs_core::verifier::{self, IdentityKind, ResidualReport};
use ecs_core::{
    elliptic, manybody, Configuration, ConstantForms, CouplingFamily, FdOrder, FdScheme,
    ModulusParams, SweepGrid,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ecs-verify", version, about = "Residual checks for elliptic Calogero-Sutherland identities")]
struct Cli {
    /// Output rendering.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    format: Format,

    /// Write the rendered output to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one named check at explicit or sampled parameters.
    Verify(VerifyArgs),
    /// Run every check over a deterministic parameter grid.
    Sweep(SweepArgs),
    /// Print the modular constants and the closed-form identity constants.
    Constants(ConstantsArgs),
    /// Run the built-in consistency suite.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pretty,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Main,
    Dual,
    Momentum,
    PhiSlope,
    PhiProduct,
    BetaFlow,
    LambertSum,
    ConstantSplit,
    Heat,
    Sutherland,
    ConstantForms,
    GaugeShift,
    Phases,
    OperatorRegrouping,
    OracleKinetic,
    OracleBetaFlow,
}

impl From<KindArg> for IdentityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Main => IdentityKind::Main,
            KindArg::Dual => IdentityKind::Dual,
            KindArg::Momentum => IdentityKind::Momentum,
            KindArg::PhiSlope => IdentityKind::PhiSlope,
            KindArg::PhiProduct => IdentityKind::PhiProduct,
            KindArg::BetaFlow => IdentityKind::BetaFlow,
            KindArg::LambertSum => IdentityKind::LambertSum,
            KindArg::ConstantSplit => IdentityKind::ConstantSplit,
            KindArg::Heat => IdentityKind::Heat,
            KindArg::Sutherland => IdentityKind::Sutherland,
            KindArg::ConstantForms => IdentityKind::ConstantForms,
            KindArg::GaugeShift => IdentityKind::GaugeShift,
            KindArg::Phases => IdentityKind::Phases,
            KindArg::OperatorRegrouping => IdentityKind::OperatorRegrouping,
            KindArg::OracleKinetic => IdentityKind::OracleKinetic,
            KindArg::OracleBetaFlow => IdentityKind::OracleBetaFlow,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Main,
    Dual,
}

impl From<FamilyArg> for CouplingFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Main => CouplingFamily::Main,
            FamilyArg::Dual => CouplingFamily::Dual,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Which identity to check.
    #[arg(long, value_enum)]
    identity: KindArg,

    /// First-block particle number.
    #[arg(long = "N", default_value_t = 3)]
    n: usize,

    /// Second-block particle number.
    #[arg(long = "M", default_value_t = 1)]
    m: usize,

    /// Coupling parameter.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,

    /// Nome in [0, 0.95); 0 selects the trigonometric limit.
    #[arg(long, default_value_t = 0.5)]
    q: f64,

    /// Explicit first-block coordinates, or scalar arguments for the
    /// single-variable checks (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,

    /// Explicit second-block coordinates (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,

    /// Seed for configuration sampling.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Number of sampled configurations when none are given explicitly.
    #[arg(long, default_value_t = 10)]
    configs: usize,

    /// Coupling family for the family-dependent checks.
    #[arg(long, value_enum, default_value_t = FamilyArg::Main)]
    family: FamilyArg,

    /// Minimum pairwise separation for sampled configurations.
    #[arg(long, default_value_t = 0.1)]
    min_separation: f64,

    /// Finite-difference stencil order (2 or 4) for the oracle checks.
    #[arg(long, default_value_t = 4)]
    fd_order: u8,

    /// Base finite-difference step.
    #[arg(long, default_value_t = 1e-3)]
    fd_step: f64,

    /// Richardson extrapolation levels on top of the bare stencil.
    #[arg(long, default_value_t = 1)]
    richardson: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Largest first-block particle number; cells cover 1 <= N <= N-max,
    /// 0 <= M <= N.
    #[arg(long = "N-max", default_value_t = 6)]
    n_max: usize,

    /// Coupling values (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5, 2.0])]
    lambdas: Vec<f64>,

    /// Nome values (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75])]
    qs: Vec<f64>,

    /// Sampled configurations per grid cell.
    #[arg(long, default_value_t = 20)]
    configs: usize,

    /// Seed shared by every cell; each cell draws from its own stream.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Minimum pairwise separation for sampled configurations.
    #[arg(long, default_value_t = 0.1)]
    min_separation: f64,

    /// Worker threads (defaults to one per logical CPU).
    #[arg(long)]
    threads: Option<usize>,

    /// Also run the finite-difference oracle in every cell.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct ConstantsArgs {
    /// First-block particle number.
    #[arg(long = "N", default_value_t = 2)]
    n: usize,

    /// Second-block particle number.
    #[arg(long = "M", default_value_t = 0)]
    m: usize,

    /// Coupling parameter.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,

    /// Nome in [0, 0.95).
    #[arg(long, default_value_t = 0.5)]
    q: f64,
}

/// Echo of the parameters a run was invoked with, embedded in the output
/// document so results are reproducible from the report alone.
#[derive(Serialize, Default)]
struct RunEcho {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    identity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    configs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_separation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fd_order: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fd_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    richardson: Option<usize>,
}

impl RunEcho {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }
}

#[derive(Serialize)]
struct ReportDocument {
    run: RunEcho,
    reports: Vec<ResidualReport>,
}

#[derive(Serialize)]
struct ConstantsDocument {
    run: RunEcho,
    constants: ConstantsOut,
}

#[derive(Serialize)]
struct ConstantsOut {
    c0: f64,
    c1: f64,
    c2: f64,
    c2_dual: f64,
    c_nm: ConstantForms,
    c_nm_tilde: ConstantForms,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let (rendered, all_pass) = match &cli.command {
        Command::Verify(args) => {
            let reports = run_verify(args)?;
            render_reports(cli, verify_echo(args), reports)
        }
        Command::Sweep(args) => {
            if let Some(threads) = args.threads {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            let grid = SweepGrid {
                n_max: args.n_max,
                cells: None,
                lambdas: args.lambdas.clone(),
                qs: args.qs.clone(),
                configs_per_cell: args.configs,
                seed: args.seed,
                min_separation: args.min_separation,
                with_oracle: args.oracle,
            };
            render_reports(cli, sweep_echo(args), ecs_core::sweep(&grid))
        }
        Command::Selftest => render_reports(cli, RunEcho::new("selftest"), ecs_core::selftest()),
        Command::Constants(args) => (run_constants(cli, args)?, true),
    };
    emit(cli, &rendered)?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn emit(cli: &Cli, rendered: &str) -> anyhow::Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, rendered)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

/// Echoes only the flags the selected identity actually consumes, so the
/// run block never contradicts the per-report case rows (ignored sampling
/// defaults are dropped when explicit coordinates are given, and scalar
/// identities do not echo particle counts at all).
fn verify_echo(args: &VerifyArgs) -> RunEcho {
    let kind: IdentityKind = args.identity.into();
    let mut echo = RunEcho::new("verify");
    echo.identity = Some(kind.as_str().to_string());
    let wants_family = matches!(
        kind,
        IdentityKind::Momentum
            | IdentityKind::OperatorRegrouping
            | IdentityKind::OracleKinetic
            | IdentityKind::OracleBetaFlow
    );
    match kind {
        IdentityKind::Main
        | IdentityKind::Dual
        | IdentityKind::Momentum
        | IdentityKind::OperatorRegrouping
        | IdentityKind::OracleKinetic
        | IdentityKind::OracleBetaFlow => {
            if wants_family {
                echo.family = Some(CouplingFamily::from(args.family).to_string());
            }
            echo.lambda = Some(args.lambda);
            echo.q = Some(args.q);
            if args.x.is_some() || args.y.is_some() {
                echo.x = args.x.clone();
                echo.y = args.y.clone();
            } else {
                echo.n = Some(args.n);
                echo.m = Some(args.m);
                echo.seed = Some(args.seed);
                echo.configs = Some(args.configs);
                echo.min_separation = Some(args.min_separation);
            }
            if matches!(
                kind,
                IdentityKind::OracleKinetic | IdentityKind::OracleBetaFlow
            ) {
                echo.fd_order = Some(args.fd_order);
                echo.fd_step = Some(args.fd_step);
                echo.richardson = Some(args.richardson);
            }
        }
        IdentityKind::Heat => {
            echo.lambda = Some(args.lambda);
            echo.q = Some(args.q);
            echo.x = args.x.clone();
        }
        IdentityKind::Sutherland => {
            echo.n = Some(args.n);
            echo.lambda = Some(args.lambda);
            echo.seed = Some(args.seed);
            echo.configs = Some(args.configs);
        }
        IdentityKind::PhiSlope | IdentityKind::BetaFlow => {
            echo.q = Some(args.q);
            echo.x = args.x.clone();
        }
        IdentityKind::PhiProduct => {
            echo.q = Some(args.q);
            echo.x = args.x.clone();
            echo.y = args.y.clone();
        }
        IdentityKind::LambertSum | IdentityKind::ConstantSplit => {
            echo.q = Some(args.q);
        }
        IdentityKind::ConstantForms | IdentityKind::GaugeShift => {
            echo.n = Some(args.n);
            echo.m = Some(args.m);
            echo.lambda = Some(args.lambda);
            echo.q = Some(args.q);
        }
        IdentityKind::Phases => {
            echo.n = Some(args.n);
            echo.m = Some(args.m);
            echo.lambda = Some(args.lambda);
        }
    }
    echo
}

fn sweep_echo(args: &SweepArgs) -> RunEcho {
    RunEcho {
        n_max: Some(args.n_max),
        lambdas: Some(args.lambdas.clone()),
        qs: Some(args.qs.clone()),
        configs: Some(args.configs),
        seed: Some(args.seed),
        min_separation: Some(args.min_separation),
        oracle: Some(args.oracle),
        ..RunEcho::new("sweep")
    }
}

fn fd_scheme(args: &VerifyArgs) -> anyhow::Result<FdScheme> {
    let order = match args.fd_order {
        2 => FdOrder::Two,
        4 => FdOrder::Four,
        other => bail!("fd-order must be 2 or 4, got {other}"),
    };
    if !args.fd_step.is_finite() || args.fd_step <= 0.0 {
        bail!("fd-step must be positive and finite, got {}", args.fd_step);
    }
    Ok(FdScheme {
        order,
        base_step: args.fd_step,
        richardson_levels: args.richardson,
    })
}

/// Explicit coordinates when given, otherwise `configs` seeded samples.
/// The per-sample index is carried into the reports so a failing draw can
/// be reproduced.
fn configurations(args: &VerifyArgs) -> anyhow::Result<Vec<(Option<usize>, Configuration)>> {
    if args.x.is_some() || args.y.is_some() {
        let x = args.x.clone().unwrap_or_default();
        let y = args.y.clone().unwrap_or_default();
        return Ok(vec![(None, Configuration::new(x, y)?)]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    (0..args.configs.max(1))
        .map(|i| {
            let cfg = Configuration::sample(args.n, args.m, args.min_separation, &mut rng)?;
            Ok((Some(i), cfg))
        })
        .collect()
}

fn scalar_arguments(args: &VerifyArgs, default: &[f64]) -> Vec<f64> {
    args.x.clone().unwrap_or_else(|| default.to_vec())
}

fn run_verify(args: &VerifyArgs) -> anyhow::Result<Vec<ResidualReport>> {
    let kind: IdentityKind = args.identity.into();
    let family: CouplingFamily = args.family.into();
    let mut reports = Vec::new();
    match kind {
        IdentityKind::Main
        | IdentityKind::Dual
        | IdentityKind::Momentum
        | IdentityKind::OperatorRegrouping
        | IdentityKind::OracleKinetic
        | IdentityKind::OracleBetaFlow => {
            let p = ModulusParams::from_q(args.q)?;
            let scheme = fd_scheme(args)?;
            for (index, cfg) in configurations(args)? {
                let mut report = match kind {
                    IdentityKind::Main => verifier::verify_main(&cfg, args.lambda, &p)?,
                    IdentityKind::Dual => verifier::verify_dual(&cfg, args.lambda, &p)?,
                    IdentityKind::Momentum => {
                        verifier::verify_momentum(&cfg, family, args.lambda, &p)?
                    }
                    IdentityKind::OperatorRegrouping => {
                        verifier::verify_operator_regrouping(&cfg, family, args.lambda, &p)?
                    }
                    IdentityKind::OracleKinetic => {
                        verifier::verify_oracle_kinetic(&cfg, family, args.lambda, &p, &scheme)?
                    }
                    IdentityKind::OracleBetaFlow => {
                        verifier::verify_oracle_beta_flow(&cfg, family, args.lambda, &p, &scheme)?
                    }
                    _ => unreachable!(),
                };
                if index.is_some() {
                    report.case.seed = Some(args.seed);
                    report.case.config_index = index;
                }
                reports.push(report);
            }
        }
        IdentityKind::Heat => {
            let p = ModulusParams::from_q(args.q)?;
            for x in scalar_arguments(args, &[0.9, 1.7, 2.6]) {
                reports.push(verifier::verify_heat_equation(args.lambda, x, &p)?);
            }
        }
        IdentityKind::Sutherland => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut report =
                verifier::verify_sutherland_limit(args.n, args.lambda, args.configs, &mut rng)?;
            report.case.seed = Some(args.seed);
            reports.push(report);
        }
        IdentityKind::PhiSlope => {
            let p = ModulusParams::from_q(args.q)?;
            for x in scalar_arguments(args, &[0.7, 1.3, 2.9]) {
                reports.push(verifier::verify_phi_slope(x, &p)?);
            }
        }
        IdentityKind::BetaFlow => {
            let p = ModulusParams::from_q(args.q)?;
            for x in scalar_arguments(args, &[0.7, 1.3, 2.9]) {
                reports.push(verifier::verify_beta_flow(x, &p)?);
            }
        }
        IdentityKind::PhiProduct => {
            let p = ModulusParams::from_q(args.q)?;
            let xs = scalar_arguments(args, &[0.7]);
            let ys = args.y.clone().unwrap_or_else(|| vec![1.1]);
            if xs.len() != ys.len() {
                bail!(
                    "phi-product needs matching --x and --y lists, got {} and {}",
                    xs.len(),
                    ys.len()
                );
            }
            for (x, y) in xs.into_iter().zip(ys) {
                reports.push(verifier::verify_phi_product(x, y, &p)?);
            }
        }
        IdentityKind::LambertSum => {
            let p = ModulusParams::from_q(args.q)?;
            reports.push(verifier::verify_lambert_sum(&p));
        }
        IdentityKind::ConstantSplit => {
            let p = ModulusParams::from_q(args.q)?;
            reports.push(verifier::verify_constant_split(&p));
        }
        IdentityKind::ConstantForms => {
            let p = ModulusParams::from_q(args.q)?;
            reports.push(verifier::verify_constant_forms(args.n, args.m, args.lambda, &p));
        }
        IdentityKind::GaugeShift => {
            let p = ModulusParams::from_q(args.q)?;
            reports.push(verifier::verify_gauge_shift(args.n, args.m, args.lambda, &p));
        }
        IdentityKind::Phases => {
            reports.push(verifier::verify_phases(args.n, args.m, args.lambda));
        }
    }
    Ok(reports)
}

fn run_constants(cli: &Cli, args: &ConstantsArgs) -> anyhow::Result<String> {
    let p = ModulusParams::from_q(args.q)?;
    let out = ConstantsOut {
        c0: elliptic::const_c0(&p).value,
        c1: elliptic::const_c1(),
        c2: elliptic::const_c2(&p).value,
        c2_dual: elliptic::const_c2_dual(&p).value,
        c_nm: manybody::const_c_nm(args.n, args.m, args.lambda, &p),
        c_nm_tilde: manybody::const_c_nm_tilde(args.n, args.m, args.lambda, &p),
    };
    let echo = RunEcho {
        n: Some(args.n),
        m: Some(args.m),
        lambda: Some(args.lambda),
        q: Some(args.q),
        ..RunEcho::new("constants")
    };
    Ok(match cli.format {
        Format::Json => {
            let doc = ConstantsDocument {
                run: echo,
                constants: out,
            };
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut text = String::from("name,value\n");
            for (name, value) in [
                ("c0", out.c0),
                ("c1", out.c1),
                ("c2", out.c2),
                ("c2_dual", out.c2_dual),
                ("c_nm_primary", out.c_nm.primary),
                ("c_nm_lambert", out.c_nm.lambert),
                ("c_nm_tilde_primary", out.c_nm_tilde.primary),
                ("c_nm_tilde_lambert", out.c_nm_tilde.lambert),
            ] {
                let _ = writeln!(text, "{name},{value}");
            }
            text
        }
        Format::Pretty => {
            let mut text = String::new();
            let _ = writeln!(
                text,
                "constants at N={} M={} lambda={} q={}",
                args.n, args.m, args.lambda, args.q
            );
            let _ = writeln!(text, "  c0               = {:+.16e}", out.c0);
            let _ = writeln!(text, "  c1               = {:+.16e}", out.c1);
            let _ = writeln!(text, "  c2               = {:+.16e}", out.c2);
            let _ = writeln!(text, "  c2 (dual form)   = {:+.16e}", out.c2_dual);
            let _ = writeln!(text, "  c_NM primary     = {:+.16e}", out.c_nm.primary);
            let _ = writeln!(text, "  c_NM lambert     = {:+.16e}", out.c_nm.lambert);
            let _ = writeln!(text, "  c~_NM primary    = {:+.16e}", out.c_nm_tilde.primary);
            let _ = writeln!(text, "  c~_NM lambert    = {:+.16e}", out.c_nm_tilde.lambert);
            text
        }
    })
}

fn render_reports(cli: &Cli, run: RunEcho, reports: Vec<ResidualReport>) -> (String, bool) {
    let all_pass = reports.iter().all(|r| r.pass);
    let rendered = match cli.format {
        Format::Json => {
            let doc = ReportDocument { run, reports };
            let mut text =
                serde_json::to_string_pretty(&doc).expect("reports always serialize");
            text.push('\n');
            text
        }
        Format::Csv => render_csv(&reports),
        Format::Pretty => render_pretty(&reports),
    };
    (rendered, all_pass)
}

fn render_csv(reports: &[ResidualReport]) -> String {
    let mut out = String::from(
        "kind,family,n,m,lambda,q,seed,config_index,argument,residual,scale,relative,tolerance,pass,reason\n",
    );
    for r in reports {
        let c = &r.case;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{},{}",
            c.kind,
            c.family.map(|f| f.to_string()).unwrap_or_default(),
            c.n,
            c.m,
            c.lambda,
            c.q,
            c.seed.map(|s| s.to_string()).unwrap_or_default(),
            c.config_index.map(|i| i.to_string()).unwrap_or_default(),
            c.argument.map(|a| a.to_string()).unwrap_or_default(),
            r.residual,
            r.scale,
            r.relative,
            r.tolerance,
            r.pass,
            r.reason.as_deref().map(csv_quote).unwrap_or_default(),
        );
    }
    out
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Per-kind summary in first-appearance order, failing reports in full,
/// and a one-line verdict.
fn render_pretty(reports: &[ResidualReport]) -> String {
    struct KindStats {
        kind: IdentityKind,
        count: usize,
        failures: usize,
        worst: f64,
        tolerance: f64,
    }
    let mut stats: Vec<KindStats> = Vec::new();
    for r in reports {
        let entry = match stats.iter_mut().find(|s| s.kind == r.case.kind) {
            Some(e) => e,
            None => {
                stats.push(KindStats {
                    kind: r.case.kind,
                    count: 0,
                    failures: 0,
                    worst: 0.0,
                    tolerance: r.tolerance,
                });
                stats.last_mut().expect("just pushed")
            }
        };
        entry.count += 1;
        entry.failures += usize::from(!r.pass);
        entry.worst = entry.worst.max(r.relative);
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<22} {:>8} {:>15} {:>12}  status",
        "kind", "reports", "worst relative", "tolerance"
    );
    for s in &stats {
        let _ = writeln!(
            out,
            "{:<22} {:>8} {:>15.3e} {:>12.3e}  {}",
            s.kind.to_string(),
            s.count,
            s.worst,
            s.tolerance,
            if s.failures == 0 { "pass" } else { "FAIL" }
        );
    }

    let failures: Vec<&ResidualReport> = reports.iter().filter(|r| !r.pass).collect();
    if !failures.is_empty() {
        let _ = writeln!(out, "\nfailures:");
        for r in &failures {
            let c = &r.case;
            let mut line = format!(
                "  {} N={} M={} lambda={} q={}",
                c.kind, c.n, c.m, c.lambda, c.q
            );
            if let Some(f) = c.family {
                let _ = write!(line, " family={f}");
            }
            if let Some(s) = c.seed {
                let _ = write!(line, " seed={s}");
            }
            if let Some(i) = c.config_index {
                let _ = write!(line, " config={i}");
            }
            if let Some(a) = c.argument {
                let _ = write!(line, " arg={a}");
            }
            let _ = write!(line, ": relative {:.3e} > {:.3e}", r.relative, r.tolerance);
            if let Some(reason) = &r.reason {
                let _ = write!(line, " ({reason})");
            }
            let _ = writeln!(out, "{line}");
        }
    }

    let total = reports.len();
    if failures.is_empty() {
        let _ = writeln!(out, "\nPASS: {total} reports within tolerance");
    } else {
        let _ = writeln!(
            out,
            "\nFAIL: {} of {total} reports exceed tolerance",
            failures.len()
        );
    }
    out
}
