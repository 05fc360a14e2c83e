use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdcost::cost::{plan_query, query_costs, static_cost, CostError, Dimension};
use mdcost::generator::{generate, read_manifest, write_manifest, GeneratedModel, GenerationResult, LookupError};
use mdcost::model::{DataModel, KeyKind, Multiplicity, Row};
use mdcost::simulator::{emit_plot_data, rank, rank_all, sweep, to_csv, to_json, SweepModel, SweepResult};
use mdcost::workload::{load_use_case, Settings, UseCase};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "mdcost", version, about = "Generate denormalized data models and price them in time, carbon and money")]
struct Cli {
    /// Use-case document (TOML). Defaults to the bundled TPC-C use case.
    #[arg(long, global = true, env = "MDCOST_CONFIG")]
    config: Option<PathBuf>,

    /// Read the model set from a manifest written by `generate` instead of regenerating it.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate candidate models and write the manifest (one model per line, with its lineage).
    Generate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the cost of one execution of each query on one model.
    Cost {
        #[arg(long)]
        model: String,
        #[arg(long)]
        scale: u64,
        #[arg(long)]
        servers: u64,
        /// Also print the access plan of every query.
        #[arg(long)]
        plan: bool,
    },
    /// Price models over the sweep grid; `.json` output gives JSON, anything else CSV.
    Sweep {
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Qualified models in ascending order of one cost dimension.
    Rank {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value = "time")]
        dimension: Dimension,
        /// Rank by a single query's cost instead of the daily total.
        #[arg(long)]
        query: Option<String>,
        /// Rank every priced row, ignoring latency bounds.
        #[arg(long)]
        all: bool,
    },
    /// Print a model's rows, nested rows and references.
    Show {
        /// Name (M12), signature or canonical form.
        model: String,
    },
    /// Normalized scores of two dimensions per model and setting, tab-separated.
    Plot {
        #[command(flatten)]
        grid: Grid,
        /// Two dimensions, e.g. `time,carbon`.
        #[arg(long, default_value = "time,carbon")]
        dimension: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Grid {
    /// Scales to evaluate (repeatable); defaults to the document's sweep.
    #[arg(long)]
    scale: Vec<u64>,
    /// Cluster sizes to evaluate (repeatable); defaults to the document's sweep.
    #[arg(long)]
    servers: Vec<u64>,
    /// Restrict to these models (repeatable); defaults to every retained model.
    #[arg(long)]
    model: Vec<String>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("bad config: {0}")]
    Config(String),
    #[error("unknown model: {0}")]
    Lookup(#[from] LookupError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cost error: {0}")]
    Cost(#[from] CostError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Lookup(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Cost(_) => 6,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdcost: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(cli: &Cli) -> Result<UseCase, CliError> {
    match &cli.config {
        Some(path) => load_use_case(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        None => Ok(UseCase::tpcc()),
    }
}

fn models(cli: &Cli, uc: &UseCase) -> Result<GenerationResult, CliError> {
    match &cli.manifest {
        Some(path) => read_manifest(&read(path)?, &uc.model)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        None => generate(&uc.model, &uc.queries).map_err(|e| CliError::Config(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let uc = load(&cli)?;
    let generated = models(&cli, &uc)?;
    match &cli.command {
        Command::Generate { out } => {
            emit(out.as_deref(), &write_manifest(&generated))?;
            eprintln!(
                "{} models retained, {} explored, {} pruned",
                generated.retained().count(),
                generated.nodes.len(),
                generated.pruned_count
            );
            Ok(())
        }
        Command::Cost { model, scale, servers, plan } => {
            let node = generated.find(model)?;
            let settings = Settings::new(*scale, *servers);
            print!("{}", cost_report(node, &uc, &settings, *plan)?);
            Ok(())
        }
        Command::Sweep { grid, out } => {
            let result = run_sweep(&generated, &uc, grid)?;
            let json = out.as_deref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
            let text = if json {
                to_json(&result)
            } else {
                to_csv(&result).map_err(|e| CliError::Usage(e.to_string()))?
            };
            emit(out.as_deref(), &text)
        }
        Command::Rank { grid, dimension, query, all } => {
            if let Some(q) = query {
                if !uc.queries.iter().any(|x| &x.id == q) {
                    return Err(CliError::Usage(format!("no query `{q}` in the workload")));
                }
            }
            let result = run_sweep(&generated, &uc, grid)?;
            let ordered = if *all {
                rank_all(&result, *dimension, query.as_deref())
            } else {
                rank(&result, *dimension, query.as_deref())
            };
            let mut text = String::new();
            for (i, r) in ordered.into_iter().enumerate() {
                let value = match query {
                    Some(q) => r.query_cost(q).map_or(f64::NAN, |c| c.get(*dimension)),
                    None => r.total.get(*dimension),
                };
                writeln!(
                    text,
                    "{:>3}  {:<5} {:<24} scale {:<10} servers {:<6} {} {value:.6e}{}",
                    i + 1,
                    r.model,
                    r.signature,
                    r.scale,
                    r.servers,
                    dimension.name(),
                    if r.qualified { "" } else { "  (unqualified)" }
                )
                .unwrap();
            }
            if text.is_empty() {
                eprintln!("no qualified model");
            }
            print!("{text}");
            Ok(())
        }
        Command::Show { model } => {
            let node = generated.find(model)?;
            print!("{}", show(node));
            Ok(())
        }
        Command::Plot { grid, dimension, out } => {
            let (x, y) = dimension_pair(dimension)?;
            let result = run_sweep(&generated, &uc, grid)?;
            emit(out.as_deref(), &emit_plot_data(&result, x, y))
        }
    }
}

fn dimension_pair(text: &str) -> Result<(Dimension, Dimension), CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [x, y] = parts.as_slice() else {
        return Err(CliError::Usage(format!("expected two dimensions such as `time,carbon`, got `{text}`")));
    };
    Ok((x.parse().map_err(CliError::Usage)?, y.parse().map_err(CliError::Usage)?))
}

fn run_sweep(generated: &GenerationResult, uc: &UseCase, grid: &Grid) -> Result<SweepResult, CliError> {
    let nodes: Vec<&GeneratedModel> = if grid.model.is_empty() {
        generated.retained().collect()
    } else {
        grid.model.iter().map(|m| generated.find(m)).collect::<Result<_, _>>()?
    };
    let models: Vec<SweepModel> = nodes
        .iter()
        .map(|n| SweepModel { name: &n.name, signature: &n.signature, model: &n.model })
        .collect();
    let scales = if grid.scale.is_empty() { &uc.scales } else { &grid.scale };
    let servers = if grid.servers.is_empty() { &uc.servers } else { &grid.servers };
    if scales.contains(&0) || servers.contains(&0) {
        return Err(CliError::Usage("scale and servers must be positive".into()));
    }
    Ok(sweep(&models, &uc.queries, scales, servers, &uc.statistics, &uc.constants))
}

fn cost_report(node: &GeneratedModel, uc: &UseCase, settings: &Settings, plans: bool) -> Result<String, CliError> {
    let costs = query_costs(&node.model, &uc.queries, settings, &uc.statistics, &uc.constants)?;
    let mut out = String::new();
    writeln!(out, "{} {} at scale {} on {} servers", node.name, node.signature, settings.scale, settings.servers).unwrap();
    writeln!(out, "{:<8} {:>14} {:>14} {:>14}", "query", "time_s", "carbon_kg", "money").unwrap();
    for (q, c) in uc.queries.iter().zip(&costs) {
        writeln!(out, "{:<8} {:>14.6e} {:>14.6e} {:>14.6e}", q.id, c.time, c.carbon, c.money).unwrap();
        if plans {
            let plan = plan_query(&node.model, q, settings, &uc.statistics)?;
            for step in &plan.steps {
                let probe = step.probe.as_ref().map(|p| format!(" probing {p}")).unwrap_or_default();
                writeln!(out, "         {} {}{probe}, {:.4e} matches", step.label, step.strategy.describe(), step.matches())
                    .unwrap();
            }
        }
    }
    let daily = static_cost(settings, &uc.constants)
        + uc.queries.iter().zip(&costs).map(|(q, c)| *c * q.occurrences).sum();
    writeln!(out, "{:<8} {:>14.6e} {:>14.6e} {:>14.6e}", "daily", daily.time, daily.carbon, daily.money).unwrap();
    Ok(out)
}

fn show(node: &GeneratedModel) -> String {
    let m = &node.model;
    let mut out = String::new();
    writeln!(out, "{}  {}", node.name, node.signature).unwrap();
    writeln!(out, "canonical  {}", node.canonical).unwrap();
    if let (Some(parent), Some(step)) = (&node.parent, &node.step) {
        writeln!(out, "from       {parent} by {}", step.describe()).unwrap();
    }
    for row in m.ordered_rows() {
        show_row(&mut out, m, row, 0, None);
    }
    if !m.references.is_empty() {
        writeln!(out, "references").unwrap();
        for r in &m.references {
            writeln!(out, "  {}  x{}", m.describe_reference(r), r.cardinality).unwrap();
        }
    }
    out
}

fn show_row(out: &mut String, m: &DataModel, row: &Row, depth: usize, multiplicity: Option<Multiplicity>) {
    let atomic: Vec<String> = row
        .atomic_keys()
        .map(|k| if k.name == row.primary_key { format!("{}*", k.name) } else { k.name.clone() })
        .collect();
    let card = match multiplicity {
        None => String::new(),
        Some(Multiplicity::OneToOne) => " [1]".into(),
        Some(Multiplicity::OneToMany(n)) => format!(" [{n}]"),
    };
    writeln!(out, "{}{} ({}){card}: {}", "  ".repeat(depth + 1), m.label(row.id), row.origin.concept, atomic.join(", "))
        .unwrap();
    for k in &row.keys {
        if let KeyKind::Complex(n) = &k.kind {
            show_row(out, m, &n.row, depth + 1, Some(n.multiplicity));
        }
    }
}
