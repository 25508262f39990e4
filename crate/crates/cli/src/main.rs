use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vrptw_core::config::{Phase, RunConfig};
use vrptw_core::driver::{bench, solve};
use vrptw_core::generator::{generate, GeneratorConfig, Layout};
use vrptw_core::io::{parse_instance, parse_solution, validate_solution_file, write_instance, write_solution};
use vrptw_core::oracle::{oracle_solve, DEFAULT_MAX_CUSTOMERS};
use vrptw_core::stats::StatsWriter;
use vrptw_core::{Instance, Solution};

#[derive(Parser)]
#[command(name = "vrptw", version, about = "Two-phase VRPTW solver: fleet size first, then distance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the solution.
    Solve(RunArgs),
    /// Time the parallel memetic algorithm over thread counts.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Thread counts to compare.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        threads_list: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Check a solution file against an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Exact solution of a tiny instance by exhaustive search.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_CUSTOMERS)]
        max_n: usize,
    },
    /// Write a random instance in the benchmark text format.
    Generate {
        #[arg(long, default_value_t = 100)]
        customers: usize,
        /// r, c or rc.
        #[arg(long, default_value = "rc")]
        layout: Layout,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    phase: Option<Phase>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    #[arg(long)]
    route_time_limit_s: Option<f64>,
    #[arg(long)]
    ma_time_limit_s: Option<f64>,
    /// TOML file with the same keys as these flags plus parameter tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Solution file that seeds the distance phase.
    #[arg(long)]
    initial: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = read(path)?;
                RunConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        take!(phase, threads, seed, time_limit_s);
        macro_rules! take_opt {
            ($($field:ident),*) => { $( if self.$field.is_some() { c.$field = self.$field; } )* };
        }
        take_opt!(instance, route_time_limit_s, ma_time_limit_s, out, stats, initial);
        c.validate()?;
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(path: Option<&Path>) -> Result<Instance> {
    let Some(path) = path else {
        bail!("no instance given (use --instance or `instance` in the config file)");
    };
    parse_instance(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))
}

fn load_solution(instance: &Instance, path: &Path) -> Result<Solution> {
    let doc = parse_solution(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
    doc.to_solution(instance).map_err(|v| {
        let list: Vec<String> = v.iter().map(ToString::to_string).collect();
        anyhow::anyhow!("{} does not match the instance: {}", path.display(), list.join("; "))
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn stats_writer(path: Option<&Path>) -> Result<StatsWriter<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::sink()),
    };
    Ok(StatsWriter::new(sink))
}

fn run_solve(args: RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let instance = load_instance(config.instance.as_deref())?;
    let initial = match &config.initial {
        Some(p) => Some(load_solution(&instance, p)?),
        None => None,
    };
    let mut stats = stats_writer(config.stats.as_deref())?;
    let report = solve(&instance, &config, initial, &mut stats)?;
    stats.into_inner().flush()?;

    let text = write_solution(&report.solution, &instance)?;
    let check = validate_solution_file(&instance, &text)?;
    if !check.is_valid() {
        bail!("self-check of the written solution failed");
    }
    write_out(config.out.as_deref(), &text)?;
    eprintln!(
        "{}: {} vehicles, distance {:.2}, {:.1}s",
        instance.name,
        report.solution.route_count(),
        report.solution.distance(),
        report.wall_time
    );
    Ok(())
}

fn run_bench(args: RunArgs, threads: Vec<usize>, repeats: usize) -> Result<()> {
    if threads.is_empty() || threads.contains(&0) || repeats == 0 {
        bail!("thread counts and repeats must be positive");
    }
    let config = args.resolve()?;
    let instance = load_instance(config.instance.as_deref())?;
    let mut stats = stats_writer(config.stats.as_deref())?;
    let cells = bench(&instance, &config, &threads, repeats, &mut stats)?;
    stats.into_inner().flush()?;
    let mut table = String::from("threads  median_s  speedup  distance\n");
    for c in cells {
        let speedup = c.speedup.map_or("-".to_string(), |s| format!("{s:.2}"));
        table += &format!("{:>7}  {:>8.3}  {:>7}  {:>8.2}\n", c.threads, c.median_time, speedup, c.median_distance);
    }
    write_out(config.out.as_deref(), &table)
}

fn run_validate(instance: &Path, solution: &Path) -> Result<bool> {
    let inst = load_instance(Some(instance))?;
    let report = validate_solution_file(&inst, &read(solution)?)
        .with_context(|| format!("cannot parse {}", solution.display()))?;
    let cost = report.recomputed();
    for v in &report.feasibility.violations {
        println!("violation: {v}");
    }
    if report.cost_mismatch {
        println!("declared cost {:?} differs from recomputed", report.declared);
    }
    println!(
        "{}: vehicles {} distance {:.2}",
        if report.is_valid() { "valid" } else { "invalid" },
        cost.routes,
        cost.distance
    );
    Ok(report.is_valid())
}

fn run_oracle(instance: &Path, max_n: usize) -> Result<()> {
    let inst = load_instance(Some(instance))?;
    let best = oracle_solve(&inst, max_n)?;
    println!("vehicles {} distance {:.6}", best.cost.routes, best.cost.distance);
    for (i, r) in best.routes.iter().enumerate() {
        let ids: Vec<String> = r.iter().map(ToString::to_string).collect();
        println!("Route {} : {}", i + 1, ids.join(" "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Bench {
            run,
            threads_list,
            repeats,
        } => run_bench(run, threads_list, repeats),
        Command::Validate { instance, solution } => match run_validate(&instance, &solution) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::FAILURE,
            Err(e) => Err(e),
        },
        Command::Oracle { instance, max_n } => run_oracle(&instance, max_n),
        Command::Generate {
            customers,
            layout,
            seed,
            out,
        } => {
            let inst = generate(&GeneratorConfig {
                name: format!("GEN_{customers}_{seed}"),
                customers,
                layout,
                seed,
                ..GeneratorConfig::default()
            });
            write_out(out.as_deref(), &write_instance(&inst))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
