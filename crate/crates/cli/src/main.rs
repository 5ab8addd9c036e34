//! `oldroyd`: single runs, convergence studies and the form property suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use oldroyd_dg::{execute, Error, ErrorCategory, Outcome, RawConfig, RunConfig};

/// Every value is passed through the same parser as the config file, so
/// `--tau 1/256` and `--tau 2^-8` work.
#[derive(Debug, Parser)]
#[command(name = "oldroyd", version, about = "DG pressure-correction solver for the Oldroyd model of order one")]
struct Cli {
    /// run | study-space | study-time | verify-forms
    #[arg(long)]
    mode: Option<String>,
    /// key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// data of a single run: mms | zero | decay
    #[arg(long)]
    problem: Option<String>,
    /// velocity degree (pressure uses r - 1)
    #[arg(long)]
    r: Option<String>,
    /// cells per side of the mesh
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "n-ladder")]
    n_ladder: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long = "tau-ladder")]
    tau_ladder: Option<String>,
    /// final time
    #[arg(long = "T")]
    t_final: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long = "sigma-int")]
    sigma_int: Option<String>,
    #[arg(long = "sigma-bnd")]
    sigma_bnd: Option<String>,
    #[arg(long = "sigma-tilde")]
    sigma_tilde: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// direct | gmres
    #[arg(long)]
    solver: Option<String>,
    /// accept a delta above its admissible bound
    #[arg(long = "allow-large-delta")]
    allow_large_delta: bool,
    /// random draws per invariant in verify-forms
    #[arg(long)]
    samples: Option<String>,
    /// CSV destination; without it the CSV goes to stdout and the table to stderr
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
}

impl Cli {
    fn raw_config(&self) -> Result<RawConfig, Error> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::new(),
        };
        let flags = [
            ("mode", &self.mode),
            ("problem", &self.problem),
            ("r", &self.r),
            ("n", &self.n),
            ("n-ladder", &self.n_ladder),
            ("tau", &self.tau),
            ("tau-ladder", &self.tau_ladder),
            ("T", &self.t_final),
            ("mu", &self.mu),
            ("gamma", &self.gamma),
            ("eta", &self.eta),
            ("delta", &self.delta),
            ("sigma-int", &self.sigma_int),
            ("sigma-bnd", &self.sigma_bnd),
            ("sigma-tilde", &self.sigma_tilde),
            ("epsilon", &self.epsilon),
            ("tol", &self.tol),
            ("solver", &self.solver),
            ("samples", &self.samples),
            ("seed", &self.seed),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                raw.set(k, v.as_str())?;
            }
        }
        if self.allow_large_delta {
            raw.set("allow-large-delta", "true")?;
        }
        if let Some(out) = &self.out {
            raw.set("out", out.display().to_string())?;
        }
        Ok(raw)
    }
}

fn fail(category: ErrorCategory, msg: &str) -> ExitCode {
    eprintln!("error[{}]: {}", category.as_str(), msg.replace('\n', " "));
    ExitCode::from(category.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.raw_config().and_then(|raw| RunConfig::resolve(&raw)) {
        Ok(c) => c,
        Err(e) => return fail(e.category(), &e.to_string()),
    };
    let output = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(e.category(), &e.to_string()),
    };
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &output.csv) {
                return fail(ErrorCategory::Config, &format!("cannot write {}: {e}", path.display()));
            }
            print!("{}", output.text);
        }
        None => {
            print!("{}", output.csv);
            eprint!("{}", output.text);
        }
    }
    match output.outcome {
        Outcome::Success => ExitCode::SUCCESS,
        Outcome::SolverFailure(m) => fail(ErrorCategory::Solver, &m),
        Outcome::AssertionFailure(m) => fail(ErrorCategory::Assertion, &m),
    }
}
