use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use edagepp_cli::*;
use edagepp_core::planners::PlannerKind;

#[derive(Parser)]
#[command(name = "edagepp", version, about = "Planning-problem generator, validator and planner benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Planner {
    RrtStar,
    IrrtStar,
}

impl From<Planner> for PlannerKind {
    fn from(p: Planner) -> Self {
        match p {
            Planner::RrtStar => PlannerKind::RrtStar,
            Planner::IrrtStar => PlannerKind::IrrtStar,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset.
    Generate {
        #[arg(long, default_value_t = 250)]
        paths: usize,
        #[arg(long, default_value_t = 4)]
        per_path: usize,
        #[arg(long, default_value_t = 3.0)]
        clearance: f64,
        /// Side of the square world, world units.
        #[arg(long, default_value_t = 64.0)]
        world: f64,
        /// Side of the square raster, pixels.
        #[arg(long, default_value_t = 224)]
        raster: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the validity suite over a dataset.
    Validate {
        dir: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a planner on every record towards margins over the stored solution cost.
    Bench {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "rrt-star")]
        planner: Planner,
        /// Margin in percent; repeatable. Defaults to 0, 2 and 5.
        #[arg(long)]
        margin: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        budget_ms: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        limit: Option<usize>,
        /// Also run the grid oracle at this resolution.
        #[arg(long)]
        oracle_resolution: Option<usize>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// JSON report path; defaults to DIR/bench.json.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Extract waypoints from a probability-map image.
    Extract {
        #[arg(long)]
        map: PathBuf,
        /// Start pixel as i,j (j grows upwards).
        #[arg(long, value_parser = parse_pixel)]
        start: (i64, i64),
        #[arg(long, value_parser = parse_pixel)]
        goal: (i64, i64),
        #[arg(long, default_value_t = 64.0)]
        world: f64,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare generation time against planner-based problem solving.
    TimingCompare {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 3.0)]
        clearance: f64,
        #[arg(long, default_value_t = 64.0)]
        world: f64,
        #[arg(long, default_value_t = 224)]
        raster: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Margin in percent over the taut grid-oracle path cost.
        #[arg(long, default_value_t = 5.0)]
        margin: f64,
        #[arg(long, default_value_t = 10_000)]
        budget_ms: u64,
        #[arg(long, default_value_t = 128)]
        oracle_resolution: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            paths,
            per_path,
            clearance,
            world,
            raster,
            seed,
            workers,
            out,
        } => {
            let cfg = RunConfig {
                generator: generator_config(per_path, clearance, world, raster)?,
                paths,
                seed,
                workers: resolve_workers(workers)?,
                out,
            };
            let s = cmd_generate(&cfg)?;
            println!(
                "{} records in {:.2} s ({:.1} records/s), {} paths failed",
                s.records,
                s.seconds,
                s.records_per_sec,
                s.failed_paths.len()
            );
            println!("{}", serde_json::to_string(&s).expect("summary serialises"));
            Ok(())
        }
        Command::Validate { dir, report } => {
            let r = cmd_validate(&dir)?;
            for (check, rate) in &r.check_pass_rates {
                println!("{check:<24} {:>6.1}%", rate * 100.0);
            }
            for rec in r.records.iter().filter(|x| !x.passed) {
                println!(
                    "record {:06} failed: {}{}",
                    rec.id,
                    rec.failed_checks.join(", "),
                    rec.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
                );
            }
            println!("{} records, {:.1}% pass", r.records.len(), r.pass_rate * 100.0);
            if let Some(p) = report {
                write_json(&p, &r)?;
            }
            if r.all_passed() {
                Ok(())
            } else {
                Err(CliError::Validation(r.failed_ids()))
            }
        }
        Command::Bench {
            dir,
            planner,
            margin,
            budget_ms,
            seed,
            limit,
            oracle_resolution,
            workers,
            report,
        } => {
            let margins = if margin.is_empty() { vec![0.0, 2.0, 5.0] } else { margin };
            let cfg = BenchConfig {
                dir: dir.clone(),
                planner: planner.into(),
                margins: margins.iter().map(|m| m / 100.0).collect(),
                budget_ms,
                seed,
                limit,
                oracle_resolution,
                workers: resolve_workers(workers)?,
            };
            let r = cmd_bench(&cfg)?;
            print!("{}", r.table());
            write_json(&report.unwrap_or_else(|| dir.join("bench.json")), &r)?;
            if r.records.iter().any(|x| x.error.is_some()) {
                return Err(CliError::Validation(
                    r.records.iter().filter(|x| x.error.is_some()).map(|x| x.id).collect(),
                ));
            }
            Ok(())
        }
        Command::Extract {
            map,
            start,
            goal,
            world,
            max_steps,
            out,
        } => {
            let r = cmd_extract(&ExtractConfig {
                map,
                start,
                goal,
                out,
                world,
                max_steps,
            })?;
            println!("{} waypoints, cost {:.4}, overlay {}", r.pixels.len(), r.cost, r.overlay.display());
            Ok(())
        }
        Command::TimingCompare {
            count,
            clearance,
            world,
            raster,
            seed,
            margin,
            budget_ms,
            oracle_resolution,
            report,
        } => {
            let cfg = TimingConfig {
                count,
                generator: generator_config(4, clearance, world, raster)?,
                seed,
                budget_ms,
                margin: margin / 100.0,
                oracle_resolution,
            };
            let r = cmd_timing_compare(&cfg)?;
            print!("{}", r.table());
            println!("{}", serde_json::to_string(&r).expect("report serialises"));
            if let Some(p) = report {
                write_json(&p, &r)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
