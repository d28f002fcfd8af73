use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sinai_lab::engine::hitting_prob;
use sinai_lab::env::{make_env, EnvSpec, Site};
use sinai_lab::expcli::{fmt_f64, run_scenario_in, Scenario};
use sinai_lab::landscape::{delta_checks, h_extrema, potential_window, valleys_around, Eps};

#[derive(Parser)]
#[command(name = "sinai-lab", version, about = "Exact and Monte Carlo experiments for Sinai walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and check its verdicts.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Replaces the seed of the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the scenario's `out` or `results/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact quantities.
    Exact {
        #[command(subcommand)]
        what: Exact,
    },
    /// h-extrema of the potential at scale `log n`.
    Landscape {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        spec: SpecArg,
        /// Defaults to `log n`.
        #[arg(long)]
        h: Option<f64>,
        /// Half-width of the window; searched for when absent.
        #[arg(long)]
        half: Option<Site>,
        /// One CSV row per extremum instead of the JSON summary.
        #[arg(long)]
        csv: bool,
    },
    /// Environment utilities.
    Env {
        #[command(subcommand)]
        what: EnvCmd,
    },
}

#[derive(Subcommand)]
enum Exact {
    /// `P^b[tau(c) < tau(a)]` for `a < b < c`.
    Hitting {
        #[arg(long, allow_hyphen_values = true)]
        a: Site,
        #[arg(long, allow_hyphen_values = true)]
        b: Site,
        #[arg(long, allow_hyphen_values = true)]
        c: Site,
        #[command(flatten)]
        spec: SpecArg,
    },
}

#[derive(Subcommand)]
enum EnvCmd {
    /// Print `x, omega_x, V(x)` for `x` in `[a, b]`.
    Sample {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
        range: Vec<Site>,
    },
}

#[derive(Args)]
struct SpecArg {
    /// Environment as JSON text or a path to a JSON file.
    #[arg(long)]
    spec: String,
    /// Identity tag of the environment.
    #[arg(long, default_value_t = 0)]
    tag: u64,
}

impl SpecArg {
    fn env(&self) -> Result<sinai_lab::Environment, String> {
        let text = if self.spec.trim_start().starts_with('{') {
            self.spec.clone()
        } else {
            std::fs::read_to_string(&self.spec).map_err(|e| format!("{}: {e}", self.spec))?
        };
        let spec: EnvSpec = serde_json::from_str(&text).map_err(|e| format!("bad spec: {e}"))?;
        make_env(spec, self.tag).map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let w = |r: io::Result<()>| r.map_err(|e| e.to_string());
    match cli.command {
        Command::Run { scenario, workers, seed, out: dir } => {
            let mut s = Scenario::load(&scenario).map_err(|e| e.to_string())?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let dir = dir.or_else(|| s.out.clone()).unwrap_or_else(|| PathBuf::from("results").join(&s.name));
            let report = run_scenario_in(&s, workers, Some(&dir)).map_err(|e| e.to_string())?;
            for v in &report.verdicts {
                let value = v.value.map(fmt_f64).unwrap_or_else(|| "missing".into());
                w(writeln!(
                    out,
                    "{} {}: {} = {} {} {}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    v.metric,
                    value,
                    v.op.symbol(),
                    fmt_f64(v.threshold)
                ))?;
            }
            w(writeln!(out, "wrote {} ({:.1} s)", dir.display(), report.wall_time))?;
            Ok(report.passed)
        }
        Command::Exact { what: Exact::Hitting { a, b, c, spec } } => {
            let p = hitting_prob(&spec.env()?, a, b, c).map_err(|e| e.to_string())?;
            w(writeln!(out, "{}", fmt_f64(p)))?;
            Ok(true)
        }
        Command::Landscape { n, spec, h, half, csv } => {
            let env = spec.env()?;
            let h = h.unwrap_or((n.max(2) as f64).ln());
            let path = match half {
                Some(w) => potential_window(&env, -w, w),
                None => valleys_around(&env, h, -1..=1, -1..=1, 64).map(|v| v.path),
            }
            .map_err(|e| e.to_string())?;
            let d = h_extrema(&path, h).map_err(|e| e.to_string())?;
            if csv {
                w(writeln!(out, "site,kind,value,H,e,certified"))?;
                for (k, x) in d.extrema.iter().enumerate() {
                    let (hh, e) = d.slopes.get(k).map_or((String::new(), String::new()), |s| (fmt_f64(s.height), fmt_f64(s.excess)));
                    w(writeln!(out, "{},{:?},{},{hh},{e},{}", x.site, x.kind, fmt_f64(x.value), x.certified))?;
                }
            } else {
                let report = delta_checks(&env, n, &Eps::default()).map_err(|e| e.to_string())?;
                let json = serde_json::json!({ "decomposition": d, "good_env": report });
                w(writeln!(out, "{}", serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?))?;
            }
            Ok(true)
        }
        Command::Env { what: EnvCmd::Sample { spec, range } } => {
            let (a, b) = (range[0], range[1]);
            if a > b {
                return Err(format!("empty range [{a}, {b}]"));
            }
            let env = spec.env()?;
            w(writeln!(out, "x,omega,V"))?;
            for (x, om, v) in env.sample_range(a, b) {
                w(writeln!(out, "{x},{},{}", fmt_f64(om), fmt_f64(v)))?;
            }
            Ok(true)
        }
    }
}
