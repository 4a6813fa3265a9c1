//! The `gravortex` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::background::{solve_background, BackgroundFields};
use crate::diagnostics::{
    identity_suite, shooting_crosscheck, DiagnosticsReport, SuiteTolerances,
};
use crate::error::{Error, Result};
use crate::geometry::{conformal_factor_and_curvature, gauss_bonnet, profile_rows};
use crate::io::{
    fmt_num, read_json, sidecar_path, write_background, write_json, write_solution, write_table,
    RunConfig, Sidecar, SolutionTable, PROFILE_COLUMNS, VOLUME_COLUMNS,
};
use crate::mesh::Mesh;
use crate::params::ModelParams;
use crate::plot::{write_svg, Series};
use crate::system::{GravSolution, GravitatingSolver, PathRecord};
use crate::volume::{find_lambda_for_volume, log_grid, sweep_lambda, SweepTable, VolumeSearch};

#[derive(Debug, Parser)]
#[command(name = "gravortex", version, about = "Symmetric gravitating vortices on the two-sphere")]
struct Cli {
    /// Worker threads for sweeps (falls back to GRAVORTEX_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the background problem at s = 0.
    Background {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "bg.csv")]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve the coupled system at s = 1 for one lambda.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "sol.csv")]
        out: PathBuf,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
        /// Background file, written when missing.
        #[arg(long)]
        bg: Option<PathBuf>,
    },
    /// Re-check a stored solution.
    Verify {
        #[arg(long)]
        sol: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
    /// Write geometric profiles of a stored solution.
    Export {
        #[arg(long)]
        sol: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "profiles.csv")]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Tabulate V(lambda) on a logarithmic grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1e-3)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1e3)]
        lambda_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[arg(long, default_value = "vmap.csv")]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Find lambda whose solution has the target volume.
    FindVolume {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value = "sol.csv")]
        out: PathBuf,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mesh_nodes: Option<usize>,
    #[arg(long = "mesh-T")]
    mesh_t: Option<f64>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(v) = self.lambda {
            cfg.params.lambda = v;
        }
        if let Some(v) = self.mesh_nodes {
            cfg.nodes = v;
        }
        if let Some(v) = self.mesh_t {
            cfg.half_width = v;
        }
        Ok(cfg)
    }
}

/// Failure kinds mapped to exit codes.
enum Failure {
    /// Bad input: configuration, usage, unreadable files.
    Input(Error),
    /// A solve failed or a check did not hold.
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParams(_)
            | Error::Mesh(_)
            | Error::Domain(_)
            | Error::Io { .. }
            | Error::Format { .. } => Failure::Input(e),
            e => Failure::Solver(e.to_string()),
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("GRAVORTEX_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| {
            Failure::Input(Error::Config(format!("GRAVORTEX_THREADS = {v:?} is not a count")))
        }),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Background { run, out, report } => background(&run, &out, report.as_deref()),
        Command::Solve {
            run,
            out,
            report,
            bg,
        } => solve(&run, &out, &report, bg.as_deref()),
        Command::Verify {
            sol,
            config,
            report,
        } => verify(&sol, config.as_deref(), &report),
        Command::Export {
            sol,
            config,
            out,
            plot,
        } => export(&sol, config.as_deref(), &out, plot.as_deref()),
        Command::Sweep {
            run,
            lambda_min,
            lambda_max,
            points,
            out,
            plot,
            report,
        } => {
            let threads = thread_count(cli.threads)?;
            let job = || sweep(&run, lambda_min, lambda_max, points, &out, plot.as_deref(), report.as_deref());
            match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Failure::Input(Error::Config(format!("thread pool: {e}"))))?
                    .install(job),
                None => job(),
            }
        }
        Command::FindVolume {
            run,
            target,
            out,
            report,
        } => find_volume(&run, target, &out, &report),
    }
}

#[derive(Debug, Serialize)]
struct MeshInfo {
    half_width: f64,
    nodes: usize,
    spacing: f64,
}

impl From<&Mesh> for MeshInfo {
    fn from(m: &Mesh) -> Self {
        Self {
            half_width: m.half_width(),
            nodes: m.len(),
            spacing: m.spacing(),
        }
    }
}

fn setup(run: &RunArgs) -> Result<(RunConfig, ModelParams, Mesh)> {
    let cfg = run.config()?;
    let params = cfg.model_params()?;
    let mesh = cfg.mesh()?;
    cfg.controls()?;
    Ok((cfg, params, mesh))
}

#[derive(Debug, Serialize)]
struct BackgroundReport {
    config: RunConfig,
    mesh: MeshInfo,
    residual_norm: f64,
    newton_iterations: usize,
    degree_integral: f64,
    end_slopes: (f64, f64),
    checks: std::collections::BTreeMap<String, bool>,
}

fn checked_background(cfg: &RunConfig, params: &ModelParams, mesh: &Mesh) -> Result<(BackgroundFields, BackgroundReport)> {
    let bg = solve_background(params, mesh, &cfg.controls()?)?;
    let n = params.nf();
    let degree = bg.degree_integral();
    let slopes = bg.end_slopes();
    let mut checks = std::collections::BTreeMap::new();
    checks.insert("degree_identity".to_string(), (degree - 2.0 * n).abs() < 1e-6);
    checks.insert(
        "end_slopes".to_string(),
        (slopes.0 + n).abs() < cfg.tol_bc && (slopes.1 - n).abs() < cfg.tol_bc,
    );
    let report = BackgroundReport {
        config: *cfg,
        mesh: MeshInfo::from(mesh),
        residual_norm: bg.residual_norm,
        newton_iterations: bg.newton_iterations,
        degree_integral: degree,
        end_slopes: slopes,
        checks,
    };
    Ok((bg, report))
}

fn background(run: &RunArgs, out: &Path, report: Option<&Path>) -> std::result::Result<(), Failure> {
    let (cfg, params, mesh) = setup(run)?;
    let (bg, rep) = checked_background(&cfg, &params, &mesh)?;
    write_background(out, &bg)?;
    if let Some(path) = report {
        write_json(path, &rep)?;
    }
    println!(
        "background: residual {:.3e}, degree integral {:.12}, psi0'(-T) = {:.8}, psi0'(T) = {:.8}",
        bg.residual_norm, rep.degree_integral, rep.end_slopes.0, rep.end_slopes.1
    );
    println!("wrote {}", out.display());
    if let Some(bad) = rep.checks.iter().find(|(_, &ok)| !ok) {
        return Err(Failure::Solver(format!("background check {} failed", bad.0)));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SolutionReport<'a> {
    command: &'a str,
    config: RunConfig,
    mesh: MeshInfo,
    lambda: f64,
    lambda_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a PathRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    volume_search: Option<VolumeSearchInfo>,
    diagnostics: &'a DiagnosticsReport,
    shooting_deviation: f64,
    gauss_bonnet: f64,
    curvature_discrepancy: f64,
}

#[derive(Debug, Serialize)]
struct VolumeSearchInfo {
    target: f64,
    evaluations: usize,
}

fn summarize(rep: &DiagnosticsReport) {
    println!(
        "residual {:.3e}  V = {:.10}  a = {:.3e}  b = {:.10}  c = {:.10}",
        rep.residual_norm, rep.v_out, rep.a, rep.b, rep.c
    );
    let failed = rep.failed_checks();
    if failed.is_empty() {
        println!("all {} checks passed", rep.checks.len());
    } else {
        println!("failed checks: {}", failed.join(", "));
    }
    for (k, v) in &rep.claims {
        println!("claim {k}: {v}");
    }
}

fn write_solution_artifacts(
    command: &str,
    cfg: &RunConfig,
    sol: &GravSolution,
    path: Option<&PathRecord>,
    search: Option<VolumeSearchInfo>,
    out: &Path,
    report: &Path,
) -> std::result::Result<(), Failure> {
    write_solution(out, sol)?;
    let mut side = *cfg;
    side.params.lambda = sol.lambda();
    write_json(
        &sidecar_path(out),
        &Sidecar {
            config: side,
            lambda: sol.lambda(),
        },
    )?;
    let diag = identity_suite(sol, &SuiteTolerances::default())?;
    let curv = conformal_factor_and_curvature(sol);
    let rep = SolutionReport {
        command,
        config: side,
        mesh: MeshInfo::from(&sol.mesh),
        lambda: sol.lambda(),
        lambda_s: sol.lambda_s[sol.center()],
        path,
        volume_search: search,
        diagnostics: &diag,
        shooting_deviation: shooting_crosscheck(sol, (-5.0, 5.0))?,
        gauss_bonnet: gauss_bonnet(sol, &curv),
        curvature_discrepancy: curv.discrepancy(),
    };
    write_json(report, &rep)?;
    summarize(&diag);
    println!("wrote {} and {}", out.display(), report.display());
    if !diag.consistent() {
        return Err(Failure::Solver(format!(
            "checks failed: {}",
            diag.failed_checks().join(", ")
        )));
    }
    Ok(())
}

fn solve(run: &RunArgs, out: &Path, report: &Path, bg_path: Option<&Path>) -> std::result::Result<(), Failure> {
    let (cfg, params, mesh) = setup(run)?;
    let (bg, _) = checked_background(&cfg, &params, &mesh)?;
    let bg_path = bg_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_file_name("bg.csv"));
    if !bg_path.exists() {
        write_background(&bg_path, &bg)?;
    }
    let solver = GravitatingSolver::new(&params, &bg, cfg.controls()?)?;
    let (sol, record) = solver.solve()?;
    println!(
        "lambda = {}: s-path {:?}, {} rejected steps, max q11 = {:.10}",
        params.lambda(),
        record.accepted,
        record.rejected_steps,
        record.max_q11
    );
    write_solution_artifacts("solve", &cfg, &sol, Some(&record), None, out, report)
}

fn find_volume(run: &RunArgs, target: f64, out: &Path, report: &Path) -> std::result::Result<(), Failure> {
    let (cfg, params, mesh) = setup(run)?;
    let (bg, _) = checked_background(&cfg, &params, &mesh)?;
    let found = find_lambda_for_volume(&params, &bg, target, &cfg.controls()?, &VolumeSearch::default())?;
    println!(
        "lambda* = {} gives V = {:.10} after {} solves",
        found.lambda, found.volume, found.evaluations
    );
    let info = VolumeSearchInfo {
        target,
        evaluations: found.evaluations,
    };
    write_solution_artifacts("find-volume", &cfg, &found.solution, None, Some(info), out, report)
}

/// Parameters for a stored solution: the config file when given, otherwise
/// the record written next to the solution.
fn stored_config(sol: &Path, config: Option<&Path>) -> Result<RunConfig> {
    match config {
        Some(path) => RunConfig::load(path),
        None => {
            let side = sidecar_path(sol);
            if !side.exists() {
                return Err(Error::Config(format!(
                    "no --config given and {} does not exist",
                    side.display()
                )));
            }
            Ok(read_json::<Sidecar>(&side)?.config)
        }
    }
}

#[derive(Debug, Serialize)]
struct RejectedReport {
    config: RunConfig,
    error: String,
    checks: std::collections::BTreeMap<String, bool>,
}

fn verify(sol_path: &Path, config: Option<&Path>, report: &Path) -> std::result::Result<(), Failure> {
    let cfg = stored_config(sol_path, config)?;
    let params = cfg.model_params()?;
    let table = SolutionTable::read(sol_path)?;
    let sol = match table.to_solution(&params, sol_path) {
        Ok(sol) => sol,
        Err(e @ Error::Inadmissible(_)) => {
            let checks = [("positivity".to_string(), false)].into_iter().collect();
            write_json(
                report,
                &RejectedReport {
                    config: cfg,
                    error: e.to_string(),
                    checks,
                },
            )?;
            println!("positivity: false ({e})");
            return Err(Failure::Solver(format!("{} is not a valid solution", sol_path.display())));
        }
        Err(e) => return Err(e.into()),
    };
    let diag = identity_suite(&sol, &SuiteTolerances::default())?;
    #[derive(Serialize)]
    struct VerifyReport<'a> {
        config: RunConfig,
        mesh: MeshInfo,
        lambda_s: f64,
        diagnostics: &'a DiagnosticsReport,
    }
    write_json(
        report,
        &VerifyReport {
            config: cfg,
            mesh: MeshInfo::from(&sol.mesh),
            lambda_s: sol.lambda_s[sol.center()],
            diagnostics: &diag,
        },
    )?;
    summarize(&diag);
    if !diag.consistent() {
        return Err(Failure::Solver(format!(
            "checks failed: {}",
            diag.failed_checks().join(", ")
        )));
    }
    Ok(())
}

fn export(sol_path: &Path, config: Option<&Path>, out: &Path, plot: Option<&Path>) -> std::result::Result<(), Failure> {
    let cfg = stored_config(sol_path, config)?;
    let params = cfg.model_params()?;
    let table = SolutionTable::read(sol_path)?;
    let sol = table.to_solution(&params, sol_path)?;
    let rows = profile_rows(&sol)?;
    write_table(
        out,
        &PROFILE_COLUMNS,
        rows.iter()
            .map(|r| [r.t, r.q11, r.x, r.q22, r.psi, r.f, r.k, r.normphi2].map(fmt_num)),
    )?;
    println!("wrote {} ({} rows)", out.display(), rows.len());
    if let Some(path) = plot {
        let t = sol.mesh.nodes().to_vec();
        let curv = conformal_factor_and_curvature(&sol);
        write_svg(
            path,
            &[
                Series::new("q11", "t", t.clone(), sol.q.q11.clone()),
                Series::new("psi'", "t", t.clone(), sol.psip.clone()),
                Series::new("f", "t", t, curv.f),
            ],
        )?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep(
    run: &RunArgs,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
    out: &Path,
    plot: Option<&Path>,
    report: Option<&Path>,
) -> std::result::Result<(), Failure> {
    let (cfg, params, mesh) = setup(run)?;
    let grid = log_grid(lambda_min, lambda_max, points)?;
    let (bg, _) = checked_background(&cfg, &params, &mesh)?;
    let table = sweep_lambda(&params, &bg, &grid, &cfg.controls()?)?;
    write_table(
        out,
        &VOLUME_COLUMNS,
        table.rows.iter().map(|r| {
            let mut row: Vec<String> = [
                r.lambda,
                r.volume,
                r.c,
                r.a,
                r.b,
                r.residual,
                r.c_volume_residual,
                r.q11_center,
            ]
            .map(fmt_num)
            .to_vec();
            row.push(if r.suite_ok { "1" } else { "0" }.to_string());
            row
        }),
    )?;
    for r in &table.rows {
        println!("lambda {:>12.6e}  V {:.10}  c {:.10}  suite {}", r.lambda, r.volume, r.c, if r.suite_ok { "ok" } else { "FAILED" });
    }
    println!("wrote {}", out.display());
    if let Some(path) = plot {
        let lambdas: Vec<f64> = table.rows.iter().map(|r| r.lambda).collect();
        let volumes: Vec<f64> = table.rows.iter().map(|r| r.volume).collect();
        write_svg(path, &[Series::new("V(lambda)", "lambda", lambdas, volumes).log_x()])?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = report {
        #[derive(Serialize)]
        struct SweepReport<'a> {
            config: RunConfig,
            mesh: MeshInfo,
            table: &'a SweepTable,
            increasing_toward_zero: bool,
        }
        write_json(
            path,
            &SweepReport {
                config: cfg,
                mesh: MeshInfo::from(&mesh),
                table: &table,
                increasing_toward_zero: table.increasing_toward_zero(),
            },
        )?;
    }
    if let Some(r) = table.rows.iter().find(|r| !r.suite_ok) {
        return Err(Failure::Solver(format!("identity suite failed at lambda = {}", r.lambda)));
    }
    Ok(())
}
