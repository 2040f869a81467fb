//! `eqshed`: equity-aware load-shedding studies from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eqshed::case::{parse_json_case, parse_matpower_case, serialize_json};
use eqshed::scenario::{apply_scenario, beta_range, solve_scenario, sweep_beta};
use eqshed::{NetworkCase, ScenarioConfig, ShedSolution, SolverOptions, SweepResult};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "eqshed", version, about = "Equity-aware load shedding on AC power networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print the shedding plan.
    Solve(SolveArgs),
    /// Solve the scenario across a grid of equity limits.
    Sweep(SweepArgs),
    /// Convert a Matpower case to the native JSON format.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Case file, Matpower (.m) or native JSON (.json).
    case: PathBuf,
    /// Multiplier on every bus real demand.
    #[arg(long, default_value_t = 1.0)]
    scale_p: f64,
    /// Multiplier on every bus reactive demand.
    #[arg(long, default_value_t = 1.0)]
    scale_q: f64,
    /// Generators to trip, 1-based positions in the case generator list.
    #[arg(long, value_delimiter = ',')]
    trip_gen: Vec<usize>,
    /// Curtailment penalty in $/MWh.
    #[arg(long, default_value_t = eqshed::opf::DEFAULT_SHED_PENALTY)]
    penalty: f64,
    /// Convergence tolerance for feasibility, stationarity and complementarity.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Equity limit on the grid Gini coefficient.
    #[arg(long, conflicts_with = "no_equity")]
    beta: Option<f64>,
    /// Solve without an equity limit (the default when --beta is absent).
    #[arg(long)]
    no_equity: bool,
    /// Write a JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Equity limits as `start:step:end` or a comma list.
    #[arg(long)]
    beta_grid: String,
    /// Summary CSV, one row per equity limit.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// ORI matrix CSV, one row per load bus and one column per equity limit.
    #[arg(long)]
    ori_csv: Option<PathBuf>,
    /// Full sweep result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    /// Output path, must end in `.json`.
    output: PathBuf,
}

/// Error carrying a nonzero exit code other than the generic 1.
#[derive(Debug)]
struct SolverFailure(String);

impl std::fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SolverFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Convert(a) => cmd_convert(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let solver = e.chain().any(|c| {
                c.is::<SolverFailure>()
                    || matches!(c.downcast_ref::<eqshed::Error>(), Some(eqshed::Error::Numerical(_)))
            });
            ExitCode::from(if solver { 2 } else { 1 })
        }
    }
}

fn load_case(path: &Path) -> Result<NetworkCase> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let case = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_json_case(&text),
        Some("m") => parse_matpower_case(&text),
        _ => bail!("{}: expected a .m or .json case file", path.display()),
    };
    case.with_context(|| format!("cannot load {}", path.display()))
}

impl ScenarioArgs {
    fn config(&self, beta: Option<f64>) -> Result<ScenarioConfig> {
        if let Some(k) = self.trip_gen.iter().find(|&&k| k == 0) {
            bail!("--trip-gen takes 1-based generator positions, got {k}");
        }
        Ok(ScenarioConfig {
            load_p_scale: self.scale_p,
            load_q_scale: self.scale_q,
            tripped_gens: self.trip_gen.iter().map(|k| k - 1).collect(),
            shed_penalty: self.penalty,
            beta,
        })
    }

    fn options(&self) -> Result<SolverOptions> {
        let mut opts = SolverOptions::default();
        if let Some(t) = self.tol {
            opts.feas_tol = t;
            opts.opt_tol = t;
            opts.comp_tol = t;
        }
        if let Some(n) = self.max_iter {
            opts.max_iter = n;
        }
        opts.validate().map_err(anyhow::Error::msg)?;
        Ok(opts)
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    case: String,
    scenario: &'a ScenarioConfig,
    solver: &'a SolverOptions,
    solution: &'a ShedSolution,
}

fn cmd_solve(args: &SolveArgs) -> Result<u8> {
    let base = load_case(&args.scenario.case)?;
    let beta = if args.no_equity { None } else { args.beta };
    let cfg = args.scenario.config(beta)?;
    let opts = args.scenario.options()?;
    let case = apply_scenario(&base, &cfg)?;
    let sol = solve_scenario(&base, &cfg, &opts)?;
    print_solution(&case, &sol, beta);
    if let Some(path) = &args.out {
        let report = SolveReport {
            case: args.scenario.case.display().to_string(),
            scenario: &cfg,
            solver: &opts,
            solution: &sol,
        };
        write_json(path, &report)?;
    }
    if !sol.converged {
        return Err(SolverFailure(format!("solver stopped without converging ({:?})", sol.status)).into());
    }
    Ok(0)
}

fn print_solution(case: &NetworkCase, sol: &ShedSolution, beta: Option<f64>) {
    println!(
        "status: {:?} after {} iterations, max balance residual {:.2e} pu",
        sol.status, sol.iterations, sol.max_residual
    );
    println!();
    println!("{:>4} {:>6} {:>10} {:>10}", "gen", "bus", "P (MW)", "Q (MVAr)");
    for (k, g) in case.generators.iter().enumerate() {
        let state = if g.in_service { "" } else { "  out" };
        println!("{:>4} {:>6} {:>10.2} {:>10.2}{state}", k + 1, g.at_bus, sol.p_gen[k], sol.q_gen[k]);
    }
    println!();
    println!("{:>6} {:>10} {:>10} {:>8}", "bus", "Pd (MW)", "shed (MW)", "ORI");
    for (k, id) in sol.load_bus_ids.iter().enumerate() {
        let pd = case.buses.iter().find(|b| b.id == *id).map_or(f64::NAN, |b| b.p_demand);
        println!("{id:>6} {pd:>10.2} {:>10.3} {:>8.4}", sol.p_shed[k], sol.equity.ori[k]);
    }
    println!();
    let limit = beta.map_or("none".to_string(), |b| format!("{b}"));
    println!("GGC: {:.4} (limit {limit})", sol.equity.ggc);
    println!("total shed: {:.3} MW", sol.total_shed());
    println!("generation cost: {:.2} $/h", sol.generation_cost);
    println!("shed penalty:    {:.2} $/h", sol.shed_penalty_cost);
    println!("total cost:      {:.2} $/h", sol.total_cost);
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}` in --beta-grid"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("--beta-grid range must be start:step:end, got `{spec}`");
        }
        Ok(beta_range(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)?)
    } else {
        spec.split(',').map(parse).collect()
    }
}

#[derive(Serialize)]
struct SweepReport<'a> {
    case: String,
    scenario: &'a ScenarioConfig,
    solver: &'a SolverOptions,
    sweep: &'a SweepResult,
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let base = load_case(&args.scenario.case)?;
    let grid = parse_grid(&args.beta_grid)?;
    let cfg = args.scenario.config(None)?;
    let opts = args.scenario.options()?;
    let result = sweep_beta(&base, &cfg, &grid, &opts)?;

    println!(
        "{:>6} {:>16} {:>12} {:>10} {:>8} {:>9}",
        "beta", "total ($/h)", "gen ($/h)", "shed (MW)", "GGC", "converged"
    );
    for r in &result.rows {
        println!(
            "{:>6} {:>16.2} {:>12.2} {:>10.3} {:>8.4} {:>9}",
            r.beta, r.total_cost, r.generation_cost, r.total_shed_mw, r.ggc, r.converged
        );
        if let Some(e) = &r.error {
            eprintln!("beta {}: {e}", r.beta);
        }
    }
    if let Some(path) = &args.csv {
        write_summary_csv(path, &result)?;
    }
    if let Some(path) = &args.ori_csv {
        write_ori_csv(path, &result)?;
    }
    if let Some(path) = &args.out {
        let report = SweepReport {
            case: args.scenario.case.display().to_string(),
            scenario: &cfg,
            solver: &opts,
            sweep: &result,
        };
        write_json(path, &report)?;
    }
    if !result.rows.iter().any(|r| r.converged) {
        return Err(SolverFailure("no sweep row converged".into()).into());
    }
    Ok(0)
}

/// Empty cell for values a failed row never produced.
fn cell(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn write_summary_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["beta", "total_cost", "generation_cost", "total_shed_mw", "ggc", "converged"])?;
    for r in &result.rows {
        w.write_record([
            r.beta.to_string(),
            cell(r.total_cost),
            cell(r.generation_cost),
            cell(r.total_shed_mw),
            cell(r.ggc),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_ori_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["bus".to_string()];
    header.extend(result.rows.iter().map(|r| r.beta.to_string()));
    w.write_record(&header)?;
    for (k, id) in result.load_bus_ids.iter().enumerate() {
        let mut rec = vec![id.to_string()];
        rec.extend(result.rows.iter().map(|r| r.ori.get(k).map_or(String::new(), |v| cell(*v))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_convert(args: &ConvertArgs) -> Result<u8> {
    if args.output.extension().and_then(|e| e.to_str()) != Some("json") {
        bail!("output path {} must end in .json", args.output.display());
    }
    let case = load_case(&args.input)?;
    fs::write(&args.output, serialize_json(&case))
        .with_context(|| format!("cannot write {}", args.output.display()))?;
    println!(
        "wrote {} ({} buses, {} generators, {} branches)",
        args.output.display(),
        case.buses.len(),
        case.generators.len(),
        case.branches.len()
    );
    Ok(0)
}
