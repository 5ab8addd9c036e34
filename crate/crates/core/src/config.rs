//! Flat `key=value` run configuration.
//!
//! Keys match the command line flags without the leading dashes; `_` and `-`
//! are interchangeable. Times accept fractions such as `1/256`, ladders are
//! comma separated. [`RunConfig::echo`] renders the resolved configuration as
//! `# config: key=value` lines, and a file containing such lines is read back
//! from those lines alone, so any output file reproduces its own run.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forms::FormParams;
use crate::memory::KernelParams;
use crate::stepper::{MomentumSolver, SchemeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    StudySpace,
    StudyTime,
    VerifyForms,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::StudySpace => "study-space",
            Mode::StudyTime => "study-time",
            Mode::VerifyForms => "verify-forms",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "run" => Mode::Run,
            "study-space" => Mode::StudySpace,
            "study-time" => Mode::StudyTime,
            "verify-forms" => Mode::VerifyForms,
            _ => return Err(Error::Config(format!("unknown mode '{s}'"))),
        })
    }
}

/// Data of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// manufactured solution with its forcing
    Mms,
    /// zero initial data and zero forcing
    Zero,
    /// manufactured initial velocity, no forcing
    Decay,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Mms => "mms",
            Problem::Zero => "zero",
            Problem::Decay => "decay",
        }
    }
}

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mms" => Problem::Mms,
            "zero" => Problem::Zero,
            "decay" => Problem::Decay,
            _ => return Err(Error::Config(format!("unknown problem '{s}' (mms, zero, decay)"))),
        })
    }
}

/// Settings as read, before defaults are filled in.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String)>,
}

const KEYS: &[&str] = &[
    "mode",
    "problem",
    "r",
    "n",
    "n-ladder",
    "tau",
    "tau-ladder",
    "T",
    "mu",
    "gamma",
    "eta",
    "delta",
    "sigma-int",
    "sigma-bnd",
    "sigma-tilde",
    "epsilon",
    "tol",
    "solver",
    "allow-large-delta",
    "samples",
    "out",
    "seed",
];

fn canonical_key(k: &str) -> Result<&'static str> {
    let k = k.trim().replace('_', "-");
    let k = if k.eq_ignore_ascii_case("t") && k != "tau" { "T".to_string() } else { k };
    KEYS.iter().find(|c| **c == k).copied().ok_or_else(|| Error::Config(format!("unknown key '{k}'")))
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later values override earlier ones.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = canonical_key(key)?;
        self.entries.push((key.to_string(), value.into()));
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment. When the text carries
    /// `# config:` lines only those are read.
    pub fn parse(text: &str) -> Result<Self> {
        let echoed: Vec<&str> = text.lines().filter_map(|l| l.trim().strip_prefix("# config:")).collect();
        let lines: Vec<&str> = if echoed.is_empty() { text.lines().collect() } else { echoed };
        let mut raw = Self::new();
        for (i, line) in lines.iter().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
            raw.set(k, v.trim())?;
        }
        Ok(raw)
    }

    pub fn merge(&mut self, other: RawConfig) {
        self.entries.extend(other.entries);
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// `0.25`, `1/4` or `2^-2`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("malformed number '{s}'"));
    let v = if let Some((a, b)) = s.split_once('/') {
        let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        a / b
    } else if let Some((a, b)) = s.split_once('^') {
        let (a, b): (f64, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        a.powi(b)
    } else {
        s.parse().map_err(|_| bad())?
    };
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(v)
}

fn parse_int<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("{key}: malformed integer '{s}'")))
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(f).collect()
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: Problem,
    pub r: usize,
    pub n: usize,
    pub n_ladder: Vec<usize>,
    pub tau: f64,
    pub tau_ladder: Vec<f64>,
    pub t_final: f64,
    pub mu: f64,
    pub gamma: f64,
    pub eta: f64,
    pub delta: f64,
    pub forms: FormParams,
    pub tol: f64,
    pub solver: MomentumSolver,
    pub allow_large_delta: bool,
    /// random draws per invariant in `verify-forms`
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 20240601;

impl RunConfig {
    /// Fills defaults for the mode and checks every constraint.
    ///
    /// Defaults: `r = 1` (2 for `study-time`), `n = 8` or the ladder
    /// `4,8,16,32`, `τ = 1/2⁸` or the ladder `1/8,…,1/64` on `n = 64`,
    /// `T = 1`, `μ = 1`, `γ = η = 0.1`, `δ` at its admissible bound and the
    /// penalties of [`FormParams::defaults_for`].
    pub fn resolve(raw: &RawConfig) -> Result<Self> {
        let mode: Mode = raw.get("mode").unwrap_or("run").parse()?;
        let num = |k: &str, d: f64| raw.get(k).map_or(Ok(d), parse_number);
        let default_r = if mode == Mode::StudyTime { 2 } else { 1 };
        let r = raw.get("r").map_or(Ok(default_r), |s| parse_int("r", s))?;
        let default_n = if mode == Mode::StudyTime { 64 } else { 8 };
        let n = raw.get("n").map_or(Ok(default_n), |s| parse_int("n", s))?;
        let n_ladder = match raw.get("n-ladder") {
            Some(s) => parse_list(s, |p| parse_int("n-ladder", p))?,
            None => vec![4, 8, 16, 32],
        };
        let tau_ladder = match raw.get("tau-ladder") {
            Some(s) => parse_list(s, parse_number)?,
            None => (3..=6).map(|k| 0.5f64.powi(k)).collect(),
        };
        let default_tau = if mode == Mode::Run { 1.0 / 32.0 } else { 1.0 / 256.0 };
        let problem = raw.get("problem").unwrap_or("mms").parse()?;
        let defaults = FormParams::defaults_for(r);
        let epsilon = raw.get("epsilon").map_or(Ok(defaults.epsilon), |s| parse_int("epsilon", s))?;
        let forms = FormParams {
            sigma_int: num("sigma-int", defaults.sigma_int)?,
            sigma_bnd: num("sigma-bnd", defaults.sigma_bnd)?,
            sigma_tilde: num("sigma-tilde", defaults.sigma_tilde)?,
            epsilon,
        };
        forms.validate()?;
        let (mu, gamma, eta) = (num("mu", 1.0)?, num("gamma", 0.1)?, num("eta", 0.1)?);
        let solver = match raw.get("solver").unwrap_or("direct") {
            "direct" => MomentumSolver::Direct,
            "gmres" => MomentumSolver::Gmres,
            s => return Err(Error::Config(format!("unknown solver '{s}' (direct, gmres)"))),
        };
        let allow_large_delta = match raw.get("allow-large-delta").unwrap_or("false") {
            "true" => true,
            "false" => false,
            s => return Err(Error::Config(format!("allow-large-delta: expected true or false, got '{s}'"))),
        };
        let cfg = Self {
            mode,
            problem,
            r,
            n,
            n_ladder,
            tau: num("tau", default_tau)?,
            tau_ladder,
            t_final: num("T", 1.0)?,
            mu,
            gamma,
            eta,
            delta: num("delta", SchemeParams::delta_bound(mu, gamma, forms.omega()))?,
            forms,
            tol: num("tol", crate::linalg::DEFAULT_TOL)?,
            solver,
            allow_large_delta,
            samples: raw.get("samples").map_or(Ok(100), |s| parse_int("samples", s))?,
            out: raw.get("out").map(PathBuf::from),
            seed: raw.get("seed").map_or(Ok(DEFAULT_SEED), |s| parse_int("seed", s))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kernel(&self) -> Result<KernelParams> {
        KernelParams::new(self.gamma, self.eta)
    }

    /// Scheme parameters with time step `tau`.
    pub fn scheme_params(&self, tau: f64) -> Result<SchemeParams> {
        let p = SchemeParams {
            mu: self.mu,
            kernel: self.kernel()?,
            delta: self.delta,
            tau,
            t_final: self.t_final,
            forms: self.forms,
            tol: self.tol,
            solver: self.solver,
            allow_large_delta: self.allow_large_delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > crate::basis::MAX_DEGREE {
            return Err(Error::Constraint(format!("r = {} must lie in 1..={}", self.r, crate::basis::MAX_DEGREE)));
        }
        if self.n == 0 || self.n_ladder.contains(&0) {
            return Err(Error::Constraint("mesh sizes must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::Constraint("samples must be positive".into()));
        }
        match self.mode {
            Mode::Run | Mode::VerifyForms => {
                self.scheme_params(self.tau)?;
            }
            Mode::StudySpace => {
                if self.n_ladder.len() < 3 || self.n_ladder.windows(2).any(|w| w[1] != 2 * w[0]) {
                    return Err(Error::Config(format!(
                        "n-ladder {:?} must have at least 3 rungs, each doubling",
                        self.n_ladder
                    )));
                }
                self.scheme_params(self.tau)?;
            }
            Mode::StudyTime => {
                let t = &self.tau_ladder;
                if t.len() < 3 || t.windows(2).any(|w| (w[0] - 2.0 * w[1]).abs() > 1e-14 * w[0]) {
                    return Err(Error::Config(format!("tau-ladder {t:?} must have at least 3 rungs, each halving")));
                }
                for &tau in t {
                    self.scheme_params(tau)?;
                }
            }
        }
        Ok(())
    }

    /// `key=value` lines of the resolved configuration in a fixed order.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        let list = |v: Vec<String>| v.join(",");
        let mut kv = vec![
            ("mode", self.mode.as_str().to_string()),
            ("problem", self.problem.as_str().to_string()),
            ("r", self.r.to_string()),
            ("n", self.n.to_string()),
            ("n-ladder", list(self.n_ladder.iter().map(|n| n.to_string()).collect())),
            ("tau", self.tau.to_string()),
            ("tau-ladder", list(self.tau_ladder.iter().map(|t| t.to_string()).collect())),
            ("T", self.t_final.to_string()),
            ("mu", self.mu.to_string()),
            ("gamma", self.gamma.to_string()),
            ("eta", self.eta.to_string()),
            ("delta", self.delta.to_string()),
            ("sigma-int", self.forms.sigma_int.to_string()),
            ("sigma-bnd", self.forms.sigma_bnd.to_string()),
            ("sigma-tilde", self.forms.sigma_tilde.to_string()),
            ("epsilon", self.forms.epsilon.to_string()),
            ("tol", self.tol.to_string()),
            (
                "solver",
                match self.solver {
                    MomentumSolver::Direct => "direct",
                    MomentumSolver::Gmres => "gmres",
                }
                .to_string(),
            ),
            ("allow-large-delta", self.allow_large_delta.to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
        ];
        if let Some(out) = &self.out {
            kv.push(("out", out.display().to_string()));
        }
        kv
    }

    /// Comment block that starts every output file.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_key_values() {
            let _ = writeln!(s, "# config: {k}={v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<RunConfig> {
        RunConfig::resolve(&RawConfig::parse(text)?)
    }

    #[test]
    fn study_space_defaults() {
        let c = resolve("mode=study-space").unwrap();
        assert_eq!(c.r, 1);
        assert_eq!(c.n_ladder, vec![4, 8, 16, 32]);
        assert_eq!(c.tau, 1.0 / 256.0);
        assert_eq!((c.mu, c.gamma, c.eta), (1.0, 0.1, 0.1));
        assert_eq!(c.delta, 0.03125);
        assert_eq!((c.forms.sigma_int, c.forms.sigma_bnd, c.forms.sigma_tilde, c.forms.epsilon), (6.0, 12.0, 10.0, -1));
        let t = resolve("mode=study-time").unwrap();
        assert_eq!((t.r, t.n, t.tau_ladder.len()), (2, 64, 4));
        assert_eq!((t.forms.sigma_int, t.forms.sigma_bnd), (8.0, 16.0));
    }

    #[test]
    fn large_delta_rejected_with_bound() {
        match resolve("delta=0.5") {
            Err(Error::Constraint(m)) => assert!(m.contains("0.03125"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(resolve("delta=0.5\nallow-large-delta=true").is_ok());
    }

    #[test]
    fn epsilon_out_of_range_rejected() {
        match resolve("epsilon=2") {
            Err(Error::Constraint(m)) => assert!(m.contains("ε ∈ {-1,0,1}"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_input_rejected() {
        assert!(matches!(resolve("colour=red"), Err(Error::Config(_))));
        assert!(matches!(resolve("tau=abc"), Err(Error::Config(_))));
        assert!(matches!(resolve("just words"), Err(Error::Config(_))));
        assert!(matches!(resolve("mode=study-space\nn-ladder=4,8,12"), Err(Error::Config(_))));
        assert!(matches!(resolve("mode=study-time\ntau-ladder=1/8,1/16"), Err(Error::Config(_))));
        assert!(matches!(resolve("tau=0.3"), Err(Error::Constraint(_))));
        assert!(resolve("r=9").is_err());
    }

    #[test]
    fn numbers_and_keys() {
        assert_eq!(parse_number("1/256").unwrap(), 1.0 / 256.0);
        assert_eq!(parse_number("2^-8").unwrap(), 1.0 / 256.0);
        assert_eq!(parse_number(" 0.5 ").unwrap(), 0.5);
        assert!(parse_number("1/0").is_err());
        let c = resolve("sigma_int = 7 # comment\nt=2\ntau=1/4").unwrap();
        assert_eq!((c.forms.sigma_int, c.t_final), (7.0, 2.0));
    }

    #[test]
    fn echo_round_trips() {
        let c = resolve("mode=study-time\ntau-ladder=1/4,1/8,1/16\nn=4\nseed=7\nmu=0.7").unwrap();
        let out = format!("{}mode,r,h\nspace,1,0.5\n", c.echo());
        let back = resolve(&out).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.echo(), back.echo());
    }
}
