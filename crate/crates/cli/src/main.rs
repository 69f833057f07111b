//! Command-line front end: configuration ingestion, scenario presets, run
//! orchestration, and CSV emission.
//!
//! Exit codes: 0 on success, 2 for configuration problems (bad file, bad
//! flag values, unknown scenario), 3 for runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use canepi_core::analysis::{
    historical_t_test, parse_historical_csv, render_comparison_csv, render_scenario_csv,
    scenario_comparison_table, ComparisonTable, CsvMetadata,
};
use canepi_core::config::{presets_config_block, SimulationConfig};
use canepi_core::engine::{run_realization_observed, run_scenario, SimulationResult};
use canepi_core::error::Error;
use canepi_core::netgen::EdgeTag;
use canepi_core::scenario::ScenarioSpec;

const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "CANEPI_SEED";

#[derive(Parser)]
#[command(
    name = "canepi",
    version,
    about = "Agent-network HIV epidemic simulator: scenario runs over a scale-free contact network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write per-scenario CSVs plus a comparison table.
    Run(RunArgs),
    /// Parse and validate a config file, echoing the resolved configuration.
    ValidateConfig {
        /// JSON config file to check.
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the six built-in scenarios as a config-file block.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; omitted runs the full default parameterization.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated scenario names: presets (rs, p1..p5) or scenarios
    /// defined in the config file.
    #[arg(long, value_delimiter = ',', default_value = "rs")]
    scenarios: Vec<String>,
    /// Master seed. Falls back to $CANEPI_SEED, then the config file's
    /// simulation.seed, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of realizations per scenario.
    #[arg(long)]
    realizations: Option<u32>,
    /// Override the simulated year range, inclusive, as START:END.
    #[arg(long)]
    years: Option<String>,
    /// Output directory; created if missing. All files go here.
    #[arg(long, default_value = "canepi-out")]
    out: PathBuf,
    /// Historical incidence series (CSV: year,incidence_per_100py) to
    /// validate against with a paired t-test.
    #[arg(long)]
    historical: Option<PathBuf>,
    /// Also export each scenario's yearly edge list (realization stream 0)
    /// as <scenario>_network.csv.
    #[arg(long)]
    export_network: bool,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config { .. } | Error::Parameter(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::ValidateConfig { config } => {
            let resolved = load_config(Some(&config))?;
            println!("config OK");
            println!("{}", resolved.canonical_json());
            Ok(())
        }
        Command::Presets => {
            println!("{}", presets_config_block());
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimulationConfig, Error> {
    match path {
        None => Ok(SimulationConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::config(
                    path.display().to_string(),
                    format!("cannot read config: {e}"),
                )
            })?;
            SimulationConfig::parse(&text)
        }
    }
}

fn parse_year_range(spec: &str) -> Result<(i32, i32), Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parsed = if parts.len() == 2 {
        match (parts[0].parse::<i32>(), parts[1].parse::<i32>()) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => None,
        }
    } else {
        None
    };
    parsed.ok_or_else(|| Error::config("--years", format!("expected START:END, got `{spec}`")))
}

fn run(args: RunArgs) -> Result<(), Error> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(realizations) = args.realizations {
        config.simulation.realizations = realizations;
    }
    if let Some(years) = &args.years {
        let (start, end) = parse_year_range(years)?;
        config.simulation.start_year = start;
        config.simulation.end_year = end;
    }
    config.validate()?;

    let seed = match args.seed {
        Some(seed) => seed,
        None => match std::env::var(SEED_ENV) {
            Ok(raw) => raw.parse::<u64>().map_err(|_| {
                Error::config(
                    SEED_ENV,
                    format!("expected an unsigned integer, got `{raw}`"),
                )
            })?,
            Err(_) => config.simulation.seed.unwrap_or(DEFAULT_SEED),
        },
    };

    let scenarios: Vec<ScenarioSpec> = args
        .scenarios
        .iter()
        .map(|name| config.resolve_scenario(name))
        .collect::<Result<_, _>>()?;

    std::fs::create_dir_all(&args.out).map_err(|e| {
        Error::config(
            args.out.display().to_string(),
            format!("cannot create output directory: {e}"),
        )
    })?;

    let historical = args
        .historical
        .as_ref()
        .map(|path| -> Result<_, Error> {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::config(
                    path.display().to_string(),
                    format!("cannot read historical series: {e}"),
                )
            })?;
            parse_historical_csv(&text)
        })
        .transpose()?;

    let mut results: Vec<SimulationResult> = Vec::new();
    for scenario in &scenarios {
        let started = std::time::Instant::now();
        let result = run_scenario(scenario, &config, seed)?;
        println!(
            "scenario {}: {} realizations, {}-{}, {:.1}s",
            scenario.name,
            config.simulation.realizations,
            config.simulation.start_year,
            config.simulation.end_year,
            started.elapsed().as_secs_f64()
        );
        results.push(result);
    }

    for result in &results {
        let scenario_json = result.scenario_json();
        let csv = render_scenario_csv(
            &metadata(result, &result.scenario.name, &scenario_json),
            &result.averaged,
        );
        write_output(&args.out, &format!("{}.csv", result.scenario.name), &csv)?;
    }

    if let Some(table) = comparison(&results)? {
        let reference = results
            .iter()
            .find(|r| r.scenario.name == "rs")
            .expect("comparison implies rs present");
        let scenario_json = reference.scenario_json();
        let csv = render_comparison_csv(&metadata(reference, "comparison", &scenario_json), &table);
        write_output(&args.out, "comparison.csv", &csv)?;
        print_comparison_summary(&table, &config);
    } else if results.len() > 1 {
        println!("no `rs` scenario in the run set; skipping the comparison table");
    }

    if let Some(series) = &historical {
        for result in &results {
            match historical_t_test(&result.averaged, series, 0.05) {
                Ok(report) => println!("{} vs historical series: {report}", result.scenario.name),
                Err(err) => println!(
                    "{} vs historical series: not testable ({err})",
                    result.scenario.name
                ),
            }
        }
    }

    if args.export_network {
        for (scenario, result) in scenarios.iter().zip(&results) {
            let csv = export_network(scenario, result, &config, seed)?;
            write_output(&args.out, &format!("{}_network.csv", scenario.name), &csv)?;
        }
    }

    Ok(())
}

fn metadata<'a>(
    result: &'a SimulationResult,
    name: &'a str,
    scenario_json: &'a str,
) -> CsvMetadata<'a> {
    CsvMetadata {
        tool_version: canepi_core::VERSION,
        scenario: name,
        master_seed: result.master_seed,
        rng_algorithm: result.rng_algorithm,
        config_json: &result.config_echo,
        scenario_json,
    }
}

fn comparison(results: &[SimulationResult]) -> Result<Option<ComparisonTable>, Error> {
    let Some(reference) = results.iter().find(|r| r.scenario.name == "rs") else {
        return Ok(None);
    };
    let predictions: Vec<(String, &[_])> = results
        .iter()
        .filter(|r| r.scenario.name != "rs")
        .map(|r| (r.scenario.name.clone(), r.averaged.as_slice()))
        .collect();
    if predictions.is_empty() {
        return Ok(None);
    }
    let years: Vec<i32> = reference.averaged.iter().map(|y| y.year).collect();
    scenario_comparison_table(&reference.averaged, &predictions, &years).map(Some)
}

fn print_comparison_summary(table: &ComparisonTable, config: &SimulationConfig) {
    // Print five-year marks only; the CSV carries every year.
    let marks: Vec<i32> = (config.simulation.start_year..=config.simulation.end_year)
        .filter(|y| y % 5 == 0)
        .collect();
    let subset = ComparisonTable {
        rows: table
            .rows
            .iter()
            .filter(|r| marks.contains(&r.year))
            .cloned()
            .collect(),
    };
    if !subset.rows.is_empty() {
        println!("incidence vs reference scenario (five-year marks):");
        print!("{subset}");
    }
}

/// Re-run one realization (stream 0) with an observer to dump the yearly
/// edge lists. Runs are deterministic, so this reproduces exactly the
/// realization already contained in the scenario result.
fn export_network(
    scenario: &ScenarioSpec,
    result: &SimulationResult,
    config: &SimulationConfig,
    seed: u64,
) -> Result<String, Error> {
    let effective = config.with_overrides(&scenario.overrides);
    let stream_id = result
        .realizations
        .first()
        .map(|r| r.stream_id)
        .unwrap_or(0);
    let mut out = String::from("year,node_i,node_j,tag\n");
    run_realization_observed(&effective, scenario, seed, stream_id, &mut |year, state| {
        for edge in state.edges.iter() {
            let tag = match edge.tag {
                EdgeTag::Casual => "casual",
                EdgeTag::Steady => "steady",
            };
            out.push_str(&format!("{year},{},{},{tag}\n", edge.a, edge.b));
        }
    })?;
    Ok(out)
}

fn write_output(dir: &Path, name: &str, content: &str) -> Result<(), Error> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| {
        Error::config(
            path.display().to_string(),
            format!("cannot write output: {e}"),
        )
    })?;
    println!("wrote {}", path.display());
    Ok(())
}
