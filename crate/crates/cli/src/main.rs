//! `rollstock`: build, solve, sample and draw EMU circulation plans.

mod output;

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rollstock::anneal::{sample_portfolio, AnnealParams};
use rollstock::diagram::{extract_rotations, render_ascii, render_svg};
use rollstock::exact::{enumerate_feasible, solve_exact, ExactStatus};
use rollstock::ilp::{encode_full, export_lp, IlpModel};
use rollstock::model::{generate_synthetic, GeneratorConfig};
use rollstock::netbuild::{build_hypergraph, Hypergraph};
use rollstock::num::{format_decimal, parse_decimal};
use rollstock::qubo::{encode_qubo, scaling_report, to_ising, Lambdas};
use rollstock::{load_instance, Instance, Rational};
use serde::Serialize;

use output::{header, solution_doc, AnyDoc, IlpDoc, PortfolioDoc};

/// Status lines; a closed stdout (e.g. piped into `head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(
    name = "rollstock",
    version,
    about = "EMU circulation planning: hypergraph ILP, QUBO and annealing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instance file and print its size.
    Validate(ModelArgs),
    /// Write a seeded synthetic instance.
    Generate(GenerateArgs),
    /// Solve the ILP exactly (exit 2 if infeasible, 3 on time limit).
    SolveIlp(SolveIlpArgs),
    /// Sample the QUBO by simulated annealing and keep the feasible states.
    SolveQubo(SolveQuboArgs),
    /// List every feasible plan, cheapest first.
    Enumerate(EnumerateArgs),
    /// Size table over one or more instances.
    Report(ReportArgs),
    /// Draw a solution file as SVG and ASCII time-distance diagrams.
    Diagram(DiagramArgs),
    /// Write the ILP in CPLEX LP format.
    ExportLp(ExportArgs),
    /// Write the QUBO (or its Ising form) as sparse COO text.
    ExportQubo(ExportQuboArgs),
}

fn rational(text: &str) -> Result<Rational, String> {
    parse_decimal(text).ok_or_else(|| format!("`{text}` is not a decimal number"))
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// Weight of running cost against fleet size.
    #[arg(long, value_parser = rational)]
    alpha: Option<Rational>,
    /// Maximum turnaround in minutes (prunes connection arcs).
    #[arg(long)]
    delta_max: Option<u32>,
    /// Artifact directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the hypergraph as `network.dot` into `--out`.
    #[arg(long, requires = "out")]
    emit_dot: bool,
}

#[derive(Debug, Args)]
struct LambdaArgs {
    #[arg(long, value_parser = rational)]
    lambda1: Option<Rational>,
    #[arg(long, value_parser = rational)]
    lambda2: Option<Rational>,
    #[arg(long, value_parser = rational)]
    lambda3: Option<Rational>,
    #[arg(long, value_parser = rational)]
    lambda4: Option<Rational>,
    #[arg(long, value_parser = rational)]
    lambda5: Option<Rational>,
}

impl LambdaArgs {
    fn lambdas(&self) -> Result<Lambdas> {
        let mut l = Lambdas::default();
        for (i, v) in [
            &self.lambda1,
            &self.lambda2,
            &self.lambda3,
            &self.lambda4,
            &self.lambda5,
        ]
        .into_iter()
        .enumerate()
        {
            if let Some(v) = v {
                if *v <= Rational::from_integer(0) {
                    bail!("--lambda{} must be positive", i + 1);
                }
                l.0[i] = *v;
            }
        }
        Ok(l)
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 30)]
    trips: usize,
    /// Trips that admit coupled pairs.
    #[arg(long, default_value_t = 0)]
    coupled: usize,
    #[arg(long, default_value_t = 1)]
    depots: usize,
    #[arg(long, default_value_t = 1)]
    types: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    delta_max: Option<u32>,
    #[arg(long, value_parser = rational)]
    alpha: Option<Rational>,
    /// Full generator settings as JSON; the flags above override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveIlpArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Seconds before the search stops with its incumbent.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Also write `model.lp` into `--out`.
    #[arg(long, requires = "out")]
    emit_lp: bool,
    /// Also write `diagram.svg` and `diagram.txt` into `--out`.
    #[arg(long, requires = "out")]
    emit_diagram: bool,
}

#[derive(Debug, Args)]
struct SolveQuboArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    lambdas: LambdaArgs,
    #[arg(long, default_value_t = 100)]
    reads: usize,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    beta_min: f64,
    #[arg(long, default_value_t = 10.0)]
    beta_max: f64,
    /// Also write `model.qubo` into `--out`.
    #[arg(long, requires = "out")]
    emit_qubo: bool,
    /// Also draw the best sampled plan into `--out`.
    #[arg(long, requires = "out")]
    emit_diagram: bool,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Stop after this many solutions.
    #[arg(long, default_value_t = 10_000)]
    max: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Args)]
struct ReportArgs {
    instances: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    #[arg(long, value_parser = rational)]
    alpha: Option<Rational>,
    #[arg(long)]
    delta_max: Option<u32>,
    #[command(flatten)]
    lambdas: LambdaArgs,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagramArgs {
    instance: PathBuf,
    /// Solution or portfolio JSON written by `solve-ilp`, `solve-qubo` or `enumerate`.
    solution: PathBuf,
    /// Which portfolio entry to draw, 0 being the cheapest.
    #[arg(long, default_value_t = 0)]
    rank: usize,
    /// Directory for `diagram.svg` and `diagram.txt`; ASCII goes to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long, value_parser = rational)]
    alpha: Option<Rational>,
    #[arg(long)]
    delta_max: Option<u32>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportQuboArgs {
    #[command(flatten)]
    export: ExportArgs,
    #[command(flatten)]
    lambdas: LambdaArgs,
    /// Write spins `h`/`J` instead of the 0/1 form.
    #[arg(long)]
    ising: bool,
}

/// A run that finished but whose outcome maps to a nonzero exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Done,
    Infeasible,
    TimeLimit,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Done => 0,
            Outcome::Infeasible => 2,
            Outcome::TimeLimit => 3,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ROLLSTOCK_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::SolveIlp(args) => cmd_solve_ilp(&args),
        Command::SolveQubo(args) => cmd_solve_qubo(&args),
        Command::Enumerate(args) => cmd_enumerate(&args),
        Command::Report(args) => cmd_report(&args),
        Command::Diagram(args) => cmd_diagram(&args),
        Command::ExportLp(args) => cmd_export_lp(&args),
        Command::ExportQubo(args) => cmd_export_qubo(&args),
    }
}

fn read_instance(path: &Path, alpha: Option<Rational>, delta_max: Option<u32>) -> Result<Instance> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut instance = load_instance(BufReader::new(file))
        .with_context(|| format!("invalid instance {}", path.display()))?;
    if let Some(a) = alpha {
        instance.alpha = a;
    }
    if let Some(d) = delta_max {
        instance.delta_max = d;
    }
    instance
        .validate()
        .with_context(|| format!("invalid overrides for {}", path.display()))?;
    Ok(instance)
}

struct Built {
    instance: Instance,
    graph: Hypergraph,
    ilp: IlpModel,
}

fn build(args: &ModelArgs) -> Result<Built> {
    let instance = read_instance(&args.instance, args.alpha, args.delta_max)?;
    let graph = build_hypergraph(&instance);
    let ilp = encode_full(&graph, &instance);
    log::info!(
        "{}: {} arcs, {} rows, alpha {}",
        instance.meta.name,
        graph.arcs.len(),
        ilp.constraints.len(),
        format_decimal(&instance.alpha)
    );
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        if args.emit_dot {
            write_file(&dir.join("network.dot"), &graph.to_dot(&instance))?;
        }
    }
    Ok(Built {
        instance,
        graph,
        ilp,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)?;
    log::debug!("wrote {}", path.display());
    Ok(())
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_validate(args: &ModelArgs) -> Result<Outcome> {
    let b = build(args)?;
    let (single, coupled) = b.instance.trip_partition();
    say!(
        "ok: {} | {} trips ({} single, {} couplable, {} service) | {} depots | {} types | {} arcs | {} rows",
        b.instance.meta.name,
        b.instance.trips.len(),
        single,
        coupled,
        b.instance.trips.len() - single - coupled,
        b.instance.depots.len(),
        b.instance.emu_types.len(),
        b.graph.arcs.len(),
        b.ilp.constraints.len()
    );
    Ok(Outcome::Done)
}

fn cmd_generate(args: &GenerateArgs) -> Result<Outcome> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid generator config {}", path.display()))?
        }
        None => GeneratorConfig::default(),
    };
    config.trips = args.trips;
    config.coupled_trips = args.coupled;
    config.depots = args.depots;
    config.emu_types = args.types;
    if let Some(d) = args.delta_max {
        config.delta_max = d;
    }
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    let instance = generate_synthetic(&config, args.seed)?;
    let mut text = instance.to_json_pretty();
    text.push('\n');
    write_or_print(args.out.as_deref(), &text)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct IlpTimings {
    build_ms: f64,
    solve_ms: f64,
}

fn cmd_solve_ilp(args: &SolveIlpArgs) -> Result<Outcome> {
    let t0 = Instant::now();
    let b = build(&args.model)?;
    let t1 = Instant::now();
    let limit = match args.time_limit {
        Some(s) if !(s.is_finite() && s > 0.0) => {
            bail!("--time-limit must be a positive number of seconds")
        }
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    let result = solve_exact(&b.ilp, limit)?;
    let t2 = Instant::now();

    let status = match result.status {
        ExactStatus::Optimal => "optimal",
        ExactStatus::Infeasible => "infeasible",
        ExactStatus::TimeLimit => "time_limit",
    };
    match &result.solution {
        Some(s) => say!(
            "{status}: objective {} ({} arcs selected)",
            format_decimal(&s.objective),
            s.decoded.len()
        ),
        None => say!("{status}: no solution"),
    }
    say!(
        "vars {} rows {} nodes {} | build {:.3} s, solve {:.3} s",
        b.ilp.num_vars,
        b.ilp.constraints.len(),
        result.nodes,
        (t1 - t0).as_secs_f64(),
        (t2 - t1).as_secs_f64()
    );

    if let Some(dir) = &args.model.out {
        let doc = IlpDoc {
            header: header(&b.instance, &b.graph),
            status: status.to_string(),
            nodes: result.nodes,
            solution: result
                .solution
                .as_ref()
                .map(|s| solution_doc(&b.instance, &b.graph, &b.ilp, s)),
        };
        write_json(&dir.join("solution.json"), &doc)?;
        write_json(
            &dir.join("timings.json"),
            &IlpTimings {
                build_ms: (t1 - t0).as_secs_f64() * 1e3,
                solve_ms: (t2 - t1).as_secs_f64() * 1e3,
            },
        )?;
        if args.emit_lp {
            write_file(&dir.join("model.lp"), &export_lp(&b.ilp))?;
        }
        if args.emit_diagram {
            let x = result
                .solution
                .as_ref()
                .map(|s| s.x.clone())
                .unwrap_or_default();
            draw(&b, &x, dir)?;
        }
    }
    Ok(match result.status {
        ExactStatus::Optimal => Outcome::Done,
        ExactStatus::Infeasible => Outcome::Infeasible,
        ExactStatus::TimeLimit => Outcome::TimeLimit,
    })
}

fn draw(b: &Built, x: &[bool], dir: &Path) -> Result<()> {
    let rotations = extract_rotations(&b.instance, &b.graph, x);
    write_file(
        &dir.join("diagram.svg"),
        &render_svg(&b.instance, &rotations),
    )?;
    write_file(
        &dir.join("diagram.txt"),
        &render_ascii(&b.instance, &rotations),
    )
}

#[derive(Serialize)]
struct QuboSummary {
    reads: usize,
    sweeps: usize,
    seed: u64,
    qubo_vars: usize,
    qubo_terms: usize,
    distinct_samples: usize,
    feasible: usize,
    rejected: usize,
    best_objective: Option<f64>,
    success_probability: f64,
}

#[derive(Serialize)]
struct QuboTimings {
    build_ms: f64,
    encode_ms: f64,
    anneal_ms: f64,
    decode_ms: f64,
}

fn cmd_solve_qubo(args: &SolveQuboArgs) -> Result<Outcome> {
    let b = build(&args.model)?;
    let params = AnnealParams {
        num_reads: args.reads,
        sweeps: args.sweeps,
        beta_min: args.beta_min,
        beta_max: args.beta_max,
        seed: args.seed,
    };
    let outcome = sample_portfolio(&b.instance, args.lambdas.lambdas()?, &params)?;
    let best = outcome.portfolio.best();
    let t = &outcome.timings;
    match best {
        Some(s) => say!(
            "best objective {} ({} feasible plans)",
            format_decimal(&s.objective),
            outcome.portfolio.solutions.len()
        ),
        None => say!("no feasible sample"),
    }
    say!(
        "{} distinct samples, {} rejected, success probability {:.3}",
        outcome.samples.samples.len(),
        outcome.rejected.len(),
        outcome.success_probability
    );
    say!(
        "timings: build {:.3} s, encode {:.3} s, anneal {:.3} s, decode {:.3} s",
        t.build.as_secs_f64(),
        t.encode.as_secs_f64(),
        t.anneal.as_secs_f64(),
        t.decode.as_secs_f64()
    );

    if let Some(dir) = &args.model.out {
        let doc = PortfolioDoc {
            header: header(&b.instance, &b.graph),
            exhaustive: false,
            solutions: outcome
                .portfolio
                .solutions
                .iter()
                .map(|s| solution_doc(&b.instance, &b.graph, &outcome.ilp, s))
                .collect(),
        };
        write_json(&dir.join("portfolio.json"), &doc)?;
        write_json(&dir.join("rejected.json"), &outcome.rejected)?;
        write_json(
            &dir.join("summary.json"),
            &QuboSummary {
                reads: args.reads,
                sweeps: args.sweeps,
                seed: args.seed,
                qubo_vars: outcome.qubo.num_vars(),
                qubo_terms: outcome.qubo.num_terms(),
                distinct_samples: outcome.samples.samples.len(),
                feasible: outcome.portfolio.solutions.len(),
                rejected: outcome.rejected.len(),
                best_objective: best.map(|s| rollstock::num::to_f64(&s.objective)),
                success_probability: outcome.success_probability,
            },
        )?;
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        write_json(
            &dir.join("timings.json"),
            &QuboTimings {
                build_ms: ms(t.build),
                encode_ms: ms(t.encode),
                anneal_ms: ms(t.anneal),
                decode_ms: ms(t.decode),
            },
        )?;
        if args.emit_qubo {
            write_file(&dir.join("model.qubo"), &outcome.qubo.to_coo())?;
        }
        if args.emit_diagram {
            let x = best.map(|s| s.x.clone()).unwrap_or_default();
            draw(&b, &x, dir)?;
        }
    }
    Ok(Outcome::Done)
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<Outcome> {
    let b = build(&args.model)?;
    let portfolio = enumerate_feasible(&b.ilp, args.max);
    for (i, s) in portfolio.solutions.iter().enumerate() {
        let arcs: Vec<String> = s.decoded.iter().map(|a| format!("x{a}")).collect();
        say!(
            "{i:>4}  {:>12}  {}",
            format_decimal(&s.objective),
            arcs.join(" ")
        );
    }
    say!(
        "{} feasible solutions{}",
        portfolio.solutions.len(),
        if portfolio.exhaustive {
            ""
        } else {
            " (truncated)"
        }
    );
    if let Some(dir) = &args.model.out {
        let doc = PortfolioDoc {
            header: header(&b.instance, &b.graph),
            exhaustive: portfolio.exhaustive,
            solutions: portfolio
                .solutions
                .iter()
                .map(|s| solution_doc(&b.instance, &b.graph, &b.ilp, s))
                .collect(),
        };
        write_json(&dir.join("portfolio.json"), &doc)?;
    }
    Ok(if portfolio.solutions.is_empty() {
        Outcome::Infeasible
    } else {
        Outcome::Done
    })
}

fn cmd_report(args: &ReportArgs) -> Result<Outcome> {
    let lambdas = args.lambdas.lambdas()?;
    let mut rows = Vec::new();
    for path in &args.instances {
        let instance = read_instance(path, args.alpha, args.delta_max)?;
        let graph = build_hypergraph(&instance);
        let ilp = encode_full(&graph, &instance);
        let qubo = encode_qubo(&ilp, lambdas)?;
        rows.push(scaling_report(&instance, &graph, &ilp, &qubo));
    }
    let text = match args.format {
        TableFormat::Csv => output::report_csv(&rows),
        TableFormat::Markdown => output::report_markdown(&rows),
    };
    write_or_print(args.out.as_deref(), &text)?;
    Ok(Outcome::Done)
}

fn cmd_diagram(args: &DiagramArgs) -> Result<Outcome> {
    let text = fs::read_to_string(&args.solution)
        .with_context(|| format!("cannot read {}", args.solution.display()))?;
    let doc: AnyDoc = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a solution file", args.solution.display()))?;
    let head = doc.header();
    let alpha = parse_decimal(&head.alpha)
        .with_context(|| format!("bad alpha in {}", args.solution.display()))?;
    let instance = read_instance(&args.instance, Some(alpha), Some(head.delta_max))?;
    if instance.meta.name != head.instance {
        bail!(
            "{} was solved for instance `{}`, not `{}`",
            args.solution.display(),
            head.instance,
            instance.meta.name
        );
    }
    let graph = build_hypergraph(&instance);
    if graph.arcs.len() != head.num_arcs {
        bail!(
            "{} expects {} arcs but {} builds {}",
            args.solution.display(),
            head.num_arcs,
            args.instance.display(),
            graph.arcs.len()
        );
    }
    let mut x = vec![false; graph.arcs.len()];
    if let Some(sol) = doc.pick(args.rank)? {
        for rec in &sol.selected {
            let arc = graph
                .arcs
                .get(rec.id)
                .with_context(|| format!("arc id {} out of range", rec.id))?;
            let name = graph.describe_arc(arc, &instance);
            if name != rec.arc {
                bail!(
                    "arc {} is `{}` in the instance but `{}` in the solution",
                    rec.id,
                    name,
                    rec.arc
                );
            }
            x[rec.id] = true;
        }
    }
    let rotations = extract_rotations(&instance, &graph, &x);
    let ascii = render_ascii(&instance, &rotations);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            write_file(&dir.join("diagram.svg"), &render_svg(&instance, &rotations))?;
            write_file(&dir.join("diagram.txt"), &ascii)?;
            say!("{} rotations drawn to {}", rotations.len(), dir.display());
        }
        None => write_or_print(None, &ascii)?,
    }
    Ok(Outcome::Done)
}

fn cmd_export_lp(args: &ExportArgs) -> Result<Outcome> {
    let instance = read_instance(&args.instance, args.alpha, args.delta_max)?;
    let graph = build_hypergraph(&instance);
    write_or_print(
        args.out.as_deref(),
        &export_lp(&encode_full(&graph, &instance)),
    )?;
    Ok(Outcome::Done)
}

fn cmd_export_qubo(args: &ExportQuboArgs) -> Result<Outcome> {
    let e = &args.export;
    let instance = read_instance(&e.instance, e.alpha, e.delta_max)?;
    let graph = build_hypergraph(&instance);
    let qubo = encode_qubo(&encode_full(&graph, &instance), args.lambdas.lambdas()?)?;
    let text = if args.ising {
        to_ising(&qubo).to_coo()
    } else {
        qubo.to_coo()
    };
    write_or_print(e.out.as_deref(), &text)?;
    Ok(Outcome::Done)
}
