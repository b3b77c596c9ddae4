//! Command implementations behind the `facplan` binary.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use facplan::algorithms::{GreedyMode, PlanResult};
use facplan::pipeline::{self, Algorithm, PlanRequest, RefineRequest};
use facplan::scenario::{generate_synthetic_region, PolicyMode, Scenario, SyntheticConfig};

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<facplan::Error> for CliError {
    fn from(e: facplan::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

#[derive(Parser, Debug)]
#[command(name = "facplan", version, about = "Multi-year facility planning under proportional district constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Plan every year of a scenario and print the per-round summary.
    Plan(PlanArgs),
    /// Coverage and efficiency-loss ratios over a range of per-year budgets.
    BudgetSweep(SweepArgs),
    /// Minimum satisfaction ratio of each policy's plan under DP1 and DP2.
    Equity(EquityArgs),
    /// Compare a round's advice with greedy and with the refined selection.
    Retrospective(RetrospectiveArgs),
    /// Write a seeded synthetic scenario.
    Generate(GenerateArgs),
    /// Run the HTTP planning service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct EngineArgs {
    /// Recompute every marginal gain each step instead of lazy evaluation.
    #[arg(long)]
    pub naive: bool,
}

impl EngineArgs {
    fn mode(&self) -> GreedyMode {
        if self.naive {
            GreedyMode::Naive
        } else {
            GreedyMode::Lazy
        }
    }
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    pub scenario: PathBuf,
    /// dp0, dp1, dp2 or explicit; defaults to the scenario's policy block.
    #[arg(long)]
    pub policy: Option<PolicyMode>,
    #[arg(long, default_value = "multistep")]
    pub algorithm: Algorithm,
    /// Per-year budgets replacing the scenario's, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<usize>>,
    /// Write the JSON result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub scenario: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub budgets: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "dp1,dp2")]
    pub policies: Vec<PolicyMode>,
    /// Directory for sweep.csv, sweep.json and plot_sweep.py.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Args, Debug)]
pub struct EquityArgs {
    pub scenario: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "dp0,dp1,dp2")]
    pub policies: Vec<PolicyMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Args, Debug)]
pub struct RetrospectiveArgs {
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub round: usize,
    /// Only consider candidates in this district.
    #[arg(long)]
    pub district: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid size as ROWSxCOLS, at least 8x8.
    #[arg(long, default_value = "16x16")]
    pub dims: String,
    #[arg(long, default_value_t = 3)]
    pub districts: usize,
    #[arg(long, default_value_t = 5)]
    pub years: usize,
    /// Facilities per year.
    #[arg(long, default_value_t = 3)]
    pub budget: usize,
    #[arg(long, default_value_t = 6)]
    pub settlements: usize,
    #[arg(long, default_value_t = 2)]
    pub existing: usize,
    #[arg(long, default_value_t = 120.0)]
    pub threshold_minutes: f64,
    #[arg(long, default_value = "dp1")]
    pub policy: PolicyMode,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Existing directory for scenario and result files.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan(args) => cmd_plan(&args),
        Command::BudgetSweep(args) => cmd_budget_sweep(&args),
        Command::Equity(args) => cmd_equity(&args),
        Command::Retrospective(args) => cmd_retrospective(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Serve(args) => cmd_serve(&args),
    }
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    let scenario = Scenario::load(path)?;
    for w in scenario.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(scenario)
}

/// Per-round table: budget, picks, objective, `α_min` and feasibility.
pub fn plan_table(result: &PlanResult) -> String {
    let mut out = format!(
        "{:>5}  {:>6}  {:>14}  {:>8}  {:>5}  {}\n",
        "round", "budget", "objective", "alpha", "sigma", "sites"
    );
    for r in &result.rounds {
        let alpha = r.alpha_min.map_or_else(|| "inf".to_string(), |a| format!("{a:.4}"));
        let sites: Vec<String> = r.selected.iter().map(|f| format!("{}(d{})", f.cell, f.type_id)).collect();
        out.push_str(&format!(
            "{:>5}  {:>6}  {:>14.1}  {:>8}  {:>5}  {}\n",
            r.round,
            r.budget,
            r.objective,
            alpha,
            if r.sigma_feasible { "yes" } else { "no" },
            sites.join(" ")
        ));
    }
    out.push_str(&format!(
        "baseline {:.1}, total {:.1}, gain {:.1}, {} evaluations\n",
        result.baseline,
        result.total,
        result.gain(),
        result.evaluations
    ));
    for d in &result.diagnostics {
        out.push_str(&format!("note: {}\n", serde_json::to_string(d).unwrap_or_default()));
    }
    out
}

pub fn cmd_plan(args: &PlanArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario)?;
    let request = PlanRequest {
        policy: args.policy,
        algorithm: args.algorithm,
        budgets: args.budgets.clone(),
        advice: None,
        mode: args.engine.mode(),
    };
    let result = pipeline::plan(&scenario, &request, None)?;
    if let Some(out) = &args.out {
        write_file(out, &result.to_json())?;
    }
    print!("{}", plan_table(&result));
    Ok(())
}

pub fn cmd_budget_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario)?;
    let report = pipeline::budget_sweep(&scenario, &args.budgets, &args.policies, args.engine.mode())?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        write_file(&dir.join("sweep.csv"), &report.to_csv())?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(&dir.join("sweep.json"), &(json + "\n"))?;
        write_file(&dir.join("plot_sweep.py"), &pipeline::sweep_plot_script("sweep.csv"))?;
    }
    print!("{}", report.to_table());
    Ok(())
}

pub fn cmd_equity(args: &EquityArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario)?;
    let report = pipeline::equity(&scenario, &args.policies, args.engine.mode())?;
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(out, &(json + "\n"))?;
    }
    print!("{}", report.to_table());
    Ok(())
}

pub fn cmd_retrospective(args: &RetrospectiveArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario)?;
    let request = RefineRequest {
        round: args.round,
        advice: None,
        permutations: args.permutations,
        seed: args.seed,
        district: args.district,
        fixed: Default::default(),
        mode: args.engine.mode(),
    };
    let result = pipeline::refine(&scenario, &request)?;
    if let Some(out) = &args.out {
        write_file(out, &result.to_json())?;
    }
    print!("{}", result.to_table());
    Ok(())
}

fn parse_dims(dims: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Validation(format!("--dims expects ROWSxCOLS, got `{dims}`"));
    let (r, c) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let (rows, cols) = parse_dims(&args.dims)?;
    let file = generate_synthetic_region(&SyntheticConfig {
        seed: args.seed,
        rows,
        cols,
        districts: args.districts,
        years: args.years,
        budget_per_year: args.budget,
        settlements: args.settlements,
        existing_facilities: args.existing,
        threshold_minutes: args.threshold_minutes,
        policy: args.policy,
        name: None,
    })?;
    match &args.out {
        Some(out) => write_file(out, &file.to_text()),
        None => std::io::stdout()
            .write_all(file.to_text().as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    if !args.data_dir.is_dir() {
        return Err(CliError::Validation(format!(
            "data directory {} does not exist",
            args.data_dir.display()
        )));
    }
    let mut config = facplan_service::ServiceConfig::new(&args.data_dir);
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let state = facplan_service::AppState::open(&config).map_err(|e| CliError::Runtime(e.to_string()))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {}:{}: {e}", args.host, args.port)))?;
        let addr = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        facplan_service::serve(listener, state, shutdown)
            .await
            .map_err(|e| CliError::Runtime(e.to_string()))
    })
}
