use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use asymenv::demo::{left_fraction, walk_environments, DemoConfig};
use asymenv::environment::{SimConfig, DEFAULT_SEED};
use asymenv::fluctuation::{
    bias_gamma, g_closed, g_integral, lt_down_excursion, lt_down_run, lt_undershoot, lt_up_excursion,
    lt_up_run, slope_length_lt, slope_length_mean, B1Law, HittingParams, RunLevel, SlopeKind,
};
use asymenv::inversion::InversionConfig;
use asymenv::montecarlo::{b1_report, renewal_overshoot_check, simulate_paths, slope_report, McConfig};
use asymenv::numeric::linspace;
use asymenv::scale::ScaleContext;
use asymenv::special::MittagLeffler;
use asymenv::verify::{run_all, Mode};
use asymenv::{SeriesConfig, StabilityIndex};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Parser)]
#[command(name = "asymenv", version, about = "Limit law of diffusion in a spectrally negative stable environment")]
struct Cli {
    /// Output format; `simulate` and `renewal-check` default to json, the rest to csv.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write data here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for simulation commands.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Mittag-Leffler function or one of its first two derivatives.
    Ml {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
        order: u8,
    },
    /// Density and distribution function of the limit law on a grid.
    Density {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Gaver-Stehfest terms.
        #[arg(long, default_value_t = 16)]
        terms: usize,
    },
    /// Bias gamma(a) with both forms of g(a) = -ln gamma(a).
    Bias {
        #[arg(long, default_value_t = 1.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Slope-length transforms and means.
    SlopeLaws {
        #[arg(long)]
        alpha: f64,
        #[arg(long, num_args = 1.., default_values_t = [0.5, 1.0, 2.0])]
        u: Vec<f64>,
    },
    /// Hitting-time transforms of drawdowns and drawups at level k.
    Transforms {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        u: f64,
        #[arg(long, default_value_t = 0.0)]
        v: f64,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
    /// Monte Carlo estimate of the limit law and of the slope statistics.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Also write the simulated b values as CSV.
        #[arg(long)]
        samples_csv: Option<PathBuf>,
    },
    /// Renewal overshoot limit from resampled slope lengths.
    RenewalCheck {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, num_args = 1.., default_values_t = [0.0, 0.25, 0.5, 1.0])]
        x: Vec<f64>,
    },
    /// Random walks in simulated environments.
    WalkDemo {
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 500)]
        envs: usize,
        #[arg(long, env = "ASYMENV_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Acceptance suite; exits with status 4 if a criterion fails.
    Verify {
        /// Smaller samples; Monte Carlo bands widen to 4 standard errors.
        #[arg(long)]
        fast: bool,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    /// Grid step h.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, env = "ASYMENV_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Extrema level x.
    #[arg(long, default_value_t = 1.0)]
    level: f64,
    /// Detect extrema at x itself instead of the grid-corrected level.
    #[arg(long)]
    no_continuity_correction: bool,
    /// Simulate the time-reversed, spectrally positive environment.
    #[arg(long)]
    spectrally_positive: bool,
}

impl SimArgs {
    fn config(&self, threads: Option<usize>) -> asymenv::Result<McConfig> {
        let sim = SimConfig {
            h: self.step,
            seed: self.seed,
            ..SimConfig::new(StabilityIndex::new(self.alpha)?)
        };
        Ok(McConfig {
            n_paths: self.paths,
            level: self.level,
            continuity_correction: !self.no_continuity_correction,
            spectrally_positive: self.spectrally_positive,
            threads,
            ..McConfig::new(sim)
        })
    }
}

enum Failure {
    Usage(String),
    Domain(asymenv::Error),
    Io(io::Error),
    Acceptance,
}

impl From<asymenv::Error> for Failure {
    fn from(e: asymenv::Error) -> Self {
        Self::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.into())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn write_table(out: &mut dyn Write, table: &Table, format: Format) -> Outcome {
    match format {
        Format::Csv => {
            writeln!(out, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, &x)| ((*c).to_string(), json!(x)))
                        .collect::<serde_json::Map<_, _>>()
                        .into()
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?;
        }
    }
    Ok(())
}

fn write_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Outcome {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn grid(lo: f64, hi: f64, points: usize) -> Outcome<Vec<f64>> {
    if points == 0 || !(lo <= hi) {
        return Err(Failure::Usage(format!("need points >= 1 and min <= max, got {points} points on [{lo}, {hi}]")));
    }
    if points == 1 && lo != hi {
        return Err(Failure::Usage("a single point needs min = max".into()));
    }
    Ok(if points == 1 { vec![lo] } else { linspace(lo, hi, points) })
}

fn run(cli: Cli) -> Outcome {
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let tabular = cli.format.unwrap_or(Format::Csv);
    match &cli.command {
        Command::Ml { alpha, z, order } => {
            let value = MittagLeffler::new(*alpha, SeriesConfig::default())?.eval(*z, usize::from(*order))?;
            let table = Table {
                columns: vec!["alpha", "z", "order", "value"],
                rows: vec![vec![*alpha, *z, f64::from(*order), value]],
            };
            write_table(&mut out, &table, tabular)?;
        }
        Command::Density {
            alpha,
            x_min,
            x_max,
            points,
            terms,
        } => {
            let inv = InversionConfig {
                n_terms: *terms,
                ..InversionConfig::default()
            };
            let law = B1Law::new(ScaleContext::with_index(*alpha)?, inv)?;
            let rows = grid(*x_min, *x_max, *points)?
                .into_iter()
                .map(|x| Ok(vec![x, law.density(x)?, law.cdf(x)?]))
                .collect::<asymenv::Result<Vec<_>>>()?;
            let table = Table {
                columns: vec!["x", "density", "cdf"],
                rows,
            };
            write_table(&mut out, &table, tabular)?;
        }
        Command::Bias {
            alpha_min,
            alpha_max,
            points,
        } => {
            let rows = grid(*alpha_min, *alpha_max, *points)?
                .into_iter()
                .map(|a| Ok(vec![a, bias_gamma(a)?, g_closed(a)?, g_integral(a)?]))
                .collect::<asymenv::Result<Vec<_>>>()?;
            let table = Table {
                columns: vec!["a", "gamma", "g_closed", "g_integral"],
                rows,
            };
            write_table(&mut out, &table, tabular)?;
        }
        Command::SlopeLaws { alpha, u } => {
            let ctx = ScaleContext::with_index(*alpha)?;
            let mean_up = slope_length_mean(&ctx, SlopeKind::Upward)?;
            let mean_down = slope_length_mean(&ctx, SlopeKind::Downward)?;
            let rows = u
                .iter()
                .map(|&u| {
                    Ok(vec![
                        u,
                        slope_length_lt(&ctx, SlopeKind::Upward, u)?,
                        slope_length_lt(&ctx, SlopeKind::Downward, u)?,
                        mean_up,
                        mean_down,
                    ])
                })
                .collect::<asymenv::Result<Vec<_>>>()?;
            let table = Table {
                columns: vec!["u", "lt_up", "lt_down", "mean_up", "mean_down"],
                rows,
            };
            write_table(&mut out, &table, tabular)?;
        }
        Command::Transforms { alpha, u, v, k } => {
            let ctx = ScaleContext::with_index(*alpha)?;
            let params = HittingParams::new(*u, *v, *k)?;
            let row = vec![
                *u,
                *v,
                *k,
                lt_down_excursion(&ctx, &params)?,
                lt_up_run(&ctx, *u, RunLevel::Infinite, *k)?,
                lt_up_excursion(&ctx, *u, *k)?,
                lt_down_run(&ctx, *u, *k)?,
                lt_undershoot(&ctx, *u, *k)?,
            ];
            let table = Table {
                columns: vec![
                    "u",
                    "v",
                    "k",
                    "down_excursion",
                    "up_run",
                    "up_excursion",
                    "down_run",
                    "undershoot",
                ],
                rows: vec![row],
            };
            write_table(&mut out, &table, tabular)?;
        }
        Command::Simulate { sim, samples_csv } => {
            let cfg = sim.config(cli.threads)?;
            let samples = simulate_paths(&cfg)?;
            let law = B1Law::with_index(sim.alpha)?;
            let mut report = b1_report(&cfg, &samples, &law)?;
            report.merge(slope_report(&cfg, &samples)?);
            if let Some(path) = samples_csv {
                let mut f = BufWriter::new(File::create(path)?);
                let table = Table {
                    columns: vec!["b"],
                    rows: samples.b.iter().map(|&b| vec![b]).collect(),
                };
                write_table(&mut f, &table, Format::Csv)?;
                f.flush()?;
            }
            emit_report(&mut out, &report, cli.format)?;
        }
        Command::RenewalCheck { sim, x } => {
            let cfg = sim.config(cli.threads)?;
            let samples = simulate_paths(&cfg)?;
            let report = renewal_overshoot_check(&cfg, &samples, x)?;
            emit_report(&mut out, &report, cli.format)?;
        }
        Command::WalkDemo {
            alpha,
            steps,
            envs,
            seed,
        } => {
            let cfg = DemoConfig {
                n_steps: *steps,
                n_envs: *envs,
                seed: *seed,
                threads: cli.threads,
                ..DemoConfig::new(StabilityIndex::new(*alpha)?)
            };
            let walks = walk_environments(&cfg)?;
            let summary = left_fraction(&walks, cfg.a)?;
            eprintln!(
                "left fraction {:.4} +- {:.4} (gamma = {:.4}), same side as b {:.4}, wall hits {}",
                summary.fraction, summary.se, summary.gamma, summary.same_side_as_b, summary.wall_hits
            );
            match tabular {
                Format::Json => write_json(&mut out, &json!({ "summary": summary, "walks": walks }))?,
                Format::Csv => {
                    let rows = walks
                        .iter()
                        .flat_map(|w| {
                            w.summary
                                .checkpoints
                                .iter()
                                .map(move |c| vec![w.env as f64, w.b, c.step as f64, c.time, c.position])
                        })
                        .collect();
                    let table = Table {
                        columns: vec!["env", "b", "step", "time", "position"],
                        rows,
                    };
                    write_table(&mut out, &table, Format::Csv)?;
                }
            }
        }
        Command::Verify { fast } => {
            let report = run_all(if *fast { Mode::Fast } else { Mode::Full });
            match tabular {
                Format::Json => write_json(&mut out, &report)?,
                Format::Csv => {
                    for r in &report.results {
                        writeln!(out, "{r}")?;
                    }
                }
            }
            out.flush()?;
            if !report.passed() {
                return Err(Failure::Acceptance);
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn emit_report(out: &mut dyn Write, report: &asymenv::montecarlo::McReport, format: Option<Format>) -> Outcome {
    match format.unwrap_or(Format::Json) {
        Format::Json => write_json(out, report),
        Format::Csv => {
            writeln!(out, "name,analytic,empirical,se,z")?;
            for (name, c) in &report.comparisons {
                writeln!(out, "{name},{},{},{},{}", num(c.analytic), num(c.empirical), num(c.se), num(c.z))?;
            }
            if let Some(ks) = report.ks {
                writeln!(out, "ks,,{},,", num(ks))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        // Shared by every parallel section, including verify.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Acceptance) => {
            eprintln!("acceptance suite failed");
            ExitCode::from(EXIT_ACCEPTANCE)
        }
    }
}
