//! Command-line front end: evaluate plans on single inputs, verify promised
//! overlaps across input sets, print ladder traces, search for low-exponent
//! plans, and run the hard-coded reference fixtures.
//!
//! Exit codes: 0 when every requested check passes, 1 when a verification or
//! fixture check fails, 2 on usage, parse, or arity errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use qne::planner::{self, SearchConfig, TraceRow};
use qne::rational::format_sig;
use qne::verify;
use qne::{eval_ne_d, fixtures, presets, render_plan, InputAssignment, Plan, Simulator};

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "qne",
    version,
    about = "Exact quantum-query plans for the iterated not-all-equal function"
)]
struct Cli {
    /// Seed for the random part of sampled verification.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Numeric tolerance for overlap and decision checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a plan on one input and print the final-state overlap.
    Eval {
        /// Plan text, preset name, or @file.
        plan: String,
        /// Input bits, one 0/1 character per position, or @file.
        bits: String,
    },
    /// Check promised overlaps (or exact decisions) across an input set.
    Verify {
        /// Plan text, preset name, or @file.
        plan: String,
        /// Sweep all 2^(3^depth) inputs instead of sampling (depth <= 3).
        #[arg(long)]
        exhaustive: bool,
        /// Number of random inputs to draw when sampling.
        #[arg(long, default_value_t = 1000, value_name = "N")]
        samples: usize,
        /// Check decisions of a 0-computing plan instead of overlaps.
        #[arg(long)]
        exact: bool,
    },
    /// Print the ladder table, one row per plan node, innermost first.
    Trace {
        /// Plan text, preset name, or @file.
        plan: String,
    },
    /// Search for the lowest-exponent (-1)-computing plan within bounds.
    Search {
        /// Largest depth to explore.
        #[arg(long, default_value_t = 8)]
        tmax: u32,
        /// Largest amplification factor per node.
        #[arg(long, default_value_t = 4)]
        cmax: u32,
        /// Discard intermediate p-values above this ceiling.
        #[arg(long, default_value_t = 0.99999)]
        pmax: f64,
        /// Dedup grid width on p-values.
        #[arg(long, default_value_t = 1e-9)]
        grid: f64,
        /// Keep only the N lowest-query cells per depth level.
        #[arg(long, value_name = "N")]
        beam: Option<usize>,
        /// Also try cos(pi/c) lift targets (winners verified by simulation).
        #[arg(long)]
        trig_lifts: bool,
    },
    /// Run the hard-coded reference fixtures.
    Fixtures {
        /// Fixture names to run; empty means all.
        names: Vec<String>,
    },
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
    match &cli.command {
        Command::Eval { plan, bits } => run_eval(cli, plan, bits),
        Command::Verify {
            plan,
            exhaustive,
            samples,
            exact,
        } => run_verify(cli, plan, *exhaustive, *samples, *exact),
        Command::Trace { plan } => run_trace(cli, plan),
        Command::Search {
            tmax,
            cmax,
            pmax,
            grid,
            beam,
            trig_lifts,
        } => run_search(
            cli,
            SearchConfig {
                t_max: *tmax,
                c_max: *cmax,
                p_ceiling: *pmax,
                grid: *grid,
                beam: *beam,
                trig_lifts: *trig_lifts,
            },
        ),
        Command::Fixtures { names } => run_fixtures(cli, names),
    }
}

/// Expands @file indirection: a leading '@' means "read that file".
fn read_arg(arg: &str) -> anyhow::Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}")),
        None => Ok(arg.to_string()),
    }
}

/// Plan argument: preset name, plan text, or @file holding either.
fn resolve_plan(arg: &str) -> anyhow::Result<Plan> {
    let text = read_arg(arg)?;
    Ok(presets::resolve(text.trim())?)
}

fn emit(cli: &Cli, content: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn run_eval(cli: &Cli, plan_arg: &str, bits_arg: &str) -> anyhow::Result<ExitCode> {
    let plan = resolve_plan(plan_arg)?;
    let input = InputAssignment::from_bit_str(&read_arg(bits_arg)?)?;
    let sim = Simulator::new(&plan)?;
    let result = sim.overlap(input.as_slice())?;
    let ne = eval_ne_d(plan.depth(), input.as_slice())?;
    let content = match cli.format {
        Format::Text => format!(
            "plan={}\ndepth={}\nqueries={}\npredicted_p={}\nne={}\noverlap_re={}\noverlap_im={}\nresidual_norm={}\n",
            render_plan(&plan),
            plan.depth(),
            plan.queries(),
            sim.predicted_p(),
            ne,
            result.overlap.re,
            result.overlap.im,
            result.residual_norm,
        ),
        Format::Csv => format!(
            "ne,overlap_re,overlap_im,residual_norm,predicted_p\n{},{},{},{},{}\n",
            ne, result.overlap.re, result.overlap.im, result.residual_norm, sim.predicted_p(),
        ),
    };
    emit(cli, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn run_verify(
    cli: &Cli,
    plan_arg: &str,
    exhaustive: bool,
    samples: usize,
    exact: bool,
) -> anyhow::Result<ExitCode> {
    let plan = resolve_plan(plan_arg)?;
    let report = match (exact, exhaustive) {
        (false, true) => verify::verify_p_exhaustive(&plan, cli.tol)?,
        (false, false) => verify::verify_p_sampled(&plan, cli.seed, samples, cli.tol)?,
        (true, true) => verify::verify_exact_exhaustive(&plan, cli.tol)?,
        (true, false) => verify::verify_exact_sampled(&plan, cli.seed, samples, cli.tol)?,
    };
    let content = match cli.format {
        Format::Text => report.to_kv(),
        Format::Csv => report.to_csv(),
    };
    emit(cli, &content)?;
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_trace(cli: &Cli, plan_arg: &str) -> anyhow::Result<ExitCode> {
    let plan = resolve_plan(plan_arg)?;
    let rows = planner::trace(&plan)?;
    let content = match cli.format {
        Format::Text => trace_table(&rows),
        Format::Csv => planner::trace_csv(&rows),
    };
    emit(cli, &content)?;
    Ok(ExitCode::SUCCESS)
}

/// Plain-text trace rendering: same columns as the CSV, two-space separated.
/// Exact p-values of deep plans run to thousands of digits, so no padding.
fn trace_table(rows: &[TraceRow]) -> String {
    let mut out = String::from("step  move  t  k  p_exact  p_decimal  dim\n");
    for r in rows {
        out.push_str(&format!(
            "{}  {}  {}  {}  {}  {}  {}\n",
            r.step, r.mv, r.t, r.k, r.p_exact, r.p_decimal, r.dim
        ));
    }
    out
}

fn run_search(cli: &Cli, config: SearchConfig) -> anyhow::Result<ExitCode> {
    let outcome = match planner::search(&config) {
        Ok(outcome) => outcome,
        Err(qne::Error::NoPlanFound) => {
            emit(cli, "plan=none\n")?;
            return Ok(ExitCode::SUCCESS);
        }
        Err(err) => return Err(err.into()),
    };
    let rows = planner::trace(&outcome.plan)?;
    let content = match cli.format {
        Format::Csv => planner::trace_csv(&rows),
        Format::Text => format!(
            "plan={}\ndepth={}\nqueries={}\nexponent={}\nverified_exact={}\n{}",
            render_plan(&outcome.plan),
            outcome.depth,
            outcome.queries,
            format_sig(outcome.exponent, 6),
            outcome.verified_exact,
            trace_table(&rows),
        ),
    };
    emit(cli, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn run_fixtures(cli: &Cli, names: &[String]) -> anyhow::Result<ExitCode> {
    let targets: Vec<&fixtures::Fixture> = if names.is_empty() {
        fixtures::all().iter().collect()
    } else {
        names
            .iter()
            .map(|n| {
                fixtures::by_name(n).ok_or_else(|| anyhow::anyhow!("unknown fixture: {n}"))
            })
            .collect::<anyhow::Result<_>>()?
    };
    let mut content = String::new();
    if cli.format == Format::Csv {
        content.push_str("fixture,pass\n");
    }
    let mut all_pass = true;
    for fixture in &targets {
        let line = match (cli.format, fixture.run(cli.tol)) {
            (Format::Text, Ok(())) => format!("{}: pass\n", fixture.name),
            (Format::Text, Err(msg)) => {
                all_pass = false;
                format!("{}: FAIL ({msg})\n", fixture.name)
            }
            (Format::Csv, Ok(())) => format!("{},true\n", fixture.name),
            (Format::Csv, Err(_)) => {
                all_pass = false;
                format!("{},false\n", fixture.name)
            }
        };
        content.push_str(&line);
    }
    emit(cli, &content)?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
