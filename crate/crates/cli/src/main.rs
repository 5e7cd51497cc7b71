use std::path::PathBuf;
use std::process::ExitCode;

use alpha_root::harness::{self, Command, Failure, RunConfig, Status};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alpha-root", version, about = "Experiments for the alpha-root two-factor model")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// E[exp(-lambda Y_t)] for each lambda.
    Laplace(Flags),
    /// Density of Y_t on a grid.
    Density(Flags),
    /// Distribution function of Y_t on a grid.
    Cdf(Flags),
    /// Euler paths of (Y, X).
    Simulate(Flags),
    /// Drift certificate and Monte Carlo drift check.
    LyapunovCheck(Flags),
    /// Total-variation distance between two ensembles over time.
    TvDecay(Flags),
    /// Growth exponent of the integrated flow along a ray.
    BoundsCheck(Flags),
    /// Runs the command named in a config file.
    Run(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// key=value file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent or "-".
    #[arg(long)]
    out: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long)]
    abs_tol: Option<String>,
    #[arg(long)]
    rel_tol: Option<String>,
    #[arg(long)]
    max_subdivisions: Option<String>,
    #[arg(long)]
    xi_truncation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Comma separated, e.g. 0.5,1,2.
    #[arg(long)]
    lambdas: Option<String>,
    /// lo:hi:n, n points including both ends.
    #[arg(long)]
    grid: Option<String>,
    /// fourier or real_axis.
    #[arg(long)]
    representation: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Defaults to $ALPHA_ROOT_SEED, then 42.
    #[arg(long)]
    seed: Option<String>,
    /// terminal or stride:K.
    #[arg(long)]
    record: Option<String>,
    /// paths or summary (simulate).
    #[arg(long)]
    output: Option<String>,
    /// y,x
    #[arg(long, allow_hyphen_values = true)]
    init_a: Option<String>,
    /// y,x
    #[arg(long, allow_hyphen_values = true)]
    init_b: Option<String>,
    #[arg(long)]
    ts: Option<String>,
    /// common or independent.
    #[arg(long)]
    seed_policy: Option<String>,
    #[arg(long)]
    bin_refinement: Option<String>,
    /// Radians, or multiples of pi such as pi/2 or 3pi/4.
    #[arg(long, allow_hyphen_values = true)]
    angle: Option<String>,
    /// Geometric lo:hi:n.
    #[arg(long)]
    rho_grid: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("a", &self.a),
            ("b", &self.b),
            ("alpha", &self.alpha),
            ("m", &self.m),
            ("theta", &self.theta),
            ("abs_tol", &self.abs_tol),
            ("rel_tol", &self.rel_tol),
            ("max_subdivisions", &self.max_subdivisions),
            ("xi_truncation", &self.xi_truncation),
            ("t", &self.t),
            ("y0", &self.y0),
            ("x0", &self.x0),
            ("lambdas", &self.lambdas),
            ("grid", &self.grid),
            ("representation", &self.representation),
            ("dt", &self.dt),
            ("paths", &self.paths),
            ("seed", &self.seed),
            ("record", &self.record),
            ("output", &self.output),
            ("init_a", &self.init_a),
            ("init_b", &self.init_b),
            ("ts", &self.ts),
            ("seed_policy", &self.seed_policy),
            ("bin_refinement", &self.bin_refinement),
            ("angle", &self.angle),
            ("rho_grid", &self.rho_grid),
            ("out", &self.out),
        ]
    }
}

fn validation(message: String) -> Failure {
    Failure {
        status: Status::Validation,
        message,
    }
}

fn resolve(command: Option<Command>, flags: &Flags) -> Result<RunConfig, Failure> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure {
                status: Status::Io,
                message: format!("{}: {e}", path.display()),
            })?;
            let cfg = match command {
                Some(c) => {
                    let base = RunConfig::from_env(c).map_err(validation)?;
                    RunConfig::parse_onto(base, &text)
                }
                None => RunConfig::parse(&text),
            }
            .map_err(|e| validation(e.join("; ")))?;
            if let Some(c) = command {
                if cfg.command != c {
                    return Err(validation(format!(
                        "config names command {} but {} was invoked",
                        cfg.command, c
                    )));
                }
            }
            cfg
        }
        None => match command {
            Some(c) => RunConfig::from_env(c).map_err(validation)?,
            None => return Err(validation("run needs --config".into())),
        },
    };
    let mut errors = Vec::new();
    for (key, value) in flags.pairs() {
        if let Some(v) = value {
            if let Err(e) = cfg.set(key, v) {
                errors.push(e);
            }
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(validation(errors.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Sub::Laplace(f) => (Some(Command::Laplace), f),
        Sub::Density(f) => (Some(Command::Density), f),
        Sub::Cdf(f) => (Some(Command::Cdf), f),
        Sub::Simulate(f) => (Some(Command::Simulate), f),
        Sub::LyapunovCheck(f) => (Some(Command::LyapunovCheck), f),
        Sub::TvDecay(f) => (Some(Command::TvDecay), f),
        Sub::BoundsCheck(f) => (Some(Command::BoundsCheck), f),
        Sub::Run(f) => (None, f),
    };
    let result = resolve(command, flags).and_then(|cfg| {
        if flags.print_config {
            print!("{}", cfg.serialize());
            Ok(())
        } else {
            harness::run(&cfg).map(|_| ())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.status.code() as u8)
        }
    }
}
