//! Config-file driven batch runs.
//!
//! A config is a list of `key = value` lines; `#` starts a comment and blank
//! lines are ignored. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `task` | `denoise` or `lasso` | required |
//! | `solver` | `pmm`, `alm`, `admm` or `fbn` | `pmm` |
//! | `input` | P5 PGM to denoise | |
//! | `synthetic` | side of the built-in test image, instead of `input` | |
//! | `a`, `b` | lasso data, rows separated by `;`, entries by `,` | |
//! | `alpha` | regularization weight | required |
//! | `c0`, `c_factor`, `c_cap` | penalty schedule | `1`, `1`, `1e12` |
//! | `eps0`, `kappa`, `r` | inner accuracy schedule | `1e-2`, `0.5`, `0` |
//! | `kkt_tol`, `max_outer` | termination | `1e-8`, `200` |
//! | `fbn_c` | penalty for `fbn` | `2 L_f` |
//! | `noise_density`, `seed` | salt-and-pepper noise | none, `0` |
//! | `output` | prefix of the written files | required |
//!
//! The run writes `<output>.trace.csv`; denoising also writes
//! `<output>.out.pgm` and, when noise was added, `<output>.noisy.pgm`.
//! ADMM and FBN read `c0` as their penalty (FBN only without `fbn_c`),
//! `kkt_tol` as their tolerance and `max_outer` as their iteration limit.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lagrangian::Problem;
use crate::noise::salt_pepper_noise;
use crate::outer::{
    admm_solve, alm_solve, fb_newton_solve, pmm_solve, AdmmConfig, CSchedule, EpsSchedule,
    FbnConfig, OuterConfig, SolveResult,
};
use crate::pgm::{read_pgm, write_pgm};
use crate::problems::{build_l1tv, build_lasso, synthetic_image, Image};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Denoise,
    Lasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Pmm,
    Alm,
    Admm,
    Fbn,
}

/// Parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub solver: SolverKind,
    pub input: Option<PathBuf>,
    pub synthetic: Option<usize>,
    pub a: Option<Matrix>,
    pub b: Option<Vector>,
    pub alpha: f64,
    pub c0: f64,
    pub c_factor: f64,
    pub c_cap: f64,
    pub eps0: f64,
    pub kappa: f64,
    pub r: u32,
    pub kkt_tol: f64,
    pub max_outer: usize,
    pub fbn_c: Option<f64>,
    pub seed: u64,
    pub noise_density: Option<f64>,
    pub output: PathBuf,
}

const KEYS: &[&str] = &[
    "task",
    "solver",
    "input",
    "synthetic",
    "a",
    "b",
    "alpha",
    "c0",
    "c_factor",
    "c_cap",
    "eps0",
    "kappa",
    "r",
    "kkt_tol",
    "max_outer",
    "fbn_c",
    "seed",
    "noise_density",
    "output",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_row(key: &str, row: &str) -> Result<Vec<f64>> {
    row.split(',').map(|v| number(key, v.trim())).collect()
}

fn parse_matrix(value: &str) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = value
        .split(';')
        .map(|r| parse_row("a", r))
        .collect::<Result<_>>()?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Config("rows of a have different lengths".into()));
    }
    Ok(Matrix::from_row_iterator(
        rows.len(),
        cols,
        rows.into_iter().flatten(),
    ))
}

impl RunConfig {
    /// Parse the text of a config file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut cfg = RunConfig {
            task: Task::Lasso,
            solver: SolverKind::Pmm,
            input: None,
            synthetic: None,
            a: None,
            b: None,
            alpha: f64::NAN,
            c0: 1.0,
            c_factor: 1.0,
            c_cap: 1e12,
            eps0: 1e-2,
            kappa: 0.5,
            r: 0,
            kkt_tol: 1e-8,
            max_outer: 200,
            fbn_c: None,
            seed: 0,
            noise_density: None,
            output: PathBuf::new(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
            match key {
                "task" => {
                    cfg.task = match value {
                        "denoise" => Task::Denoise,
                        "lasso" => Task::Lasso,
                        _ => return Err(Error::Config(format!("unknown task {value:?}"))),
                    }
                }
                "solver" => {
                    cfg.solver = match value {
                        "pmm" => SolverKind::Pmm,
                        "alm" => SolverKind::Alm,
                        "admm" => SolverKind::Admm,
                        "fbn" => SolverKind::Fbn,
                        _ => return Err(Error::Config(format!("unknown solver {value:?}"))),
                    }
                }
                "input" => cfg.input = Some(PathBuf::from(value)),
                "synthetic" => cfg.synthetic = Some(number(key, value)?),
                "a" => cfg.a = Some(parse_matrix(value)?),
                "b" => cfg.b = Some(Vector::from_vec(parse_row(key, value)?)),
                "alpha" => cfg.alpha = number(key, value)?,
                "c0" => cfg.c0 = number(key, value)?,
                "c_factor" => cfg.c_factor = number(key, value)?,
                "c_cap" => cfg.c_cap = number(key, value)?,
                "eps0" => cfg.eps0 = number(key, value)?,
                "kappa" => cfg.kappa = number(key, value)?,
                "r" => cfg.r = number(key, value)?,
                "kkt_tol" => cfg.kkt_tol = number(key, value)?,
                "max_outer" => cfg.max_outer = number(key, value)?,
                "fbn_c" => cfg.fbn_c = Some(number(key, value)?),
                "seed" => cfg.seed = number(key, value)?,
                "noise_density" => cfg.noise_density = Some(number(key, value)?),
                "output" => cfg.output = PathBuf::from(value),
                _ => unreachable!("key list and match arms agree"),
            }
        }
        for required in ["task", "alpha", "output"] {
            if !seen.contains(required) {
                return Err(Error::Config(format!("missing required key {required:?}")));
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if let Some(d) = self.noise_density {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!("noise_density must lie in (0, 1), got {d}")));
            }
        }
        match self.task {
            Task::Denoise => {
                if self.input.is_some() == self.synthetic.is_some() {
                    return Err(Error::Config(
                        "denoise needs exactly one of `input` and `synthetic`".into(),
                    ));
                }
                if self.solver == SolverKind::Fbn {
                    return Err(Error::Config(
                        "solver fbn needs E = Identity, which the denoise task does not have"
                            .into(),
                    ));
                }
                if self.a.is_some() || self.b.is_some() {
                    return Err(Error::Config("`a` and `b` belong to the lasso task".into()));
                }
            }
            Task::Lasso => {
                if self.a.is_none() || self.b.is_none() {
                    return Err(Error::Config("lasso needs both `a` and `b`".into()));
                }
                if self.input.is_some() || self.synthetic.is_some() || self.noise_density.is_some()
                {
                    return Err(Error::Config(
                        "`input`, `synthetic` and `noise_density` belong to the denoise task"
                            .into(),
                    ));
                }
            }
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be positive".into()));
        }
        self.outer_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    fn outer_config(&self) -> OuterConfig {
        let c_schedule = if self.c_factor == 1.0 {
            CSchedule::Constant(self.c0)
        } else {
            CSchedule::Geometric {
                c0: self.c0,
                factor: self.c_factor,
                cap: self.c_cap,
            }
        };
        OuterConfig {
            c_schedule,
            eps_schedule: EpsSchedule {
                eps0: self.eps0,
                kappa: self.kappa,
            },
            r: self.r,
            max_outer: self.max_outer,
            kkt_tol: self.kkt_tol,
            ..OuterConfig::default()
        }
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub result: SolveResult,
    pub trace_path: PathBuf,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn solve(problem: &Problem, cfg: &RunConfig, x0: &Vector) -> Result<SolveResult> {
    let lambda0 = Vector::zeros(problem.m());
    match cfg.solver {
        SolverKind::Pmm => pmm_solve(problem, &cfg.outer_config(), x0, &lambda0),
        SolverKind::Alm => alm_solve(problem, &cfg.outer_config(), x0, &lambda0),
        SolverKind::Admm => {
            let admm = AdmmConfig {
                c: cfg.c0,
                max_iters: cfg.max_outer,
                tol: cfg.kkt_tol,
                ..AdmmConfig::default()
            };
            let v0 = problem.e.apply(x0)?;
            admm_solve(problem, &admm, x0, &v0, &lambda0)
        }
        SolverKind::Fbn => {
            let c = cfg
                .fbn_c
                .unwrap_or_else(|| 2.0 * problem.f.lipschitz_upper().max(0.5));
            let fbn = FbnConfig {
                max_iters: cfg.max_outer,
                tol: cfg.kkt_tol,
                ..FbnConfig::new(c)
            };
            fb_newton_solve(problem, &fbn, x0)
        }
    }
}

/// Execute a run and write its artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let result = match cfg.task {
        Task::Lasso => {
            let a = cfg.a.clone().expect("checked at parse time");
            let b = cfg.b.clone().expect("checked at parse time");
            let problem = build_lasso(a, b, cfg.alpha)?;
            solve(&problem, cfg, &Vector::zeros(problem.n()))?
        }
        Task::Denoise => {
            let clean: Image = match (&cfg.input, cfg.synthetic) {
                (Some(path), _) => read_pgm(path)?,
                (None, Some(side)) => synthetic_image(side)?,
                (None, None) => unreachable!("checked at parse time"),
            };
            let observed = match cfg.noise_density {
                Some(density) => {
                    let noisy = salt_pepper_noise(&clean, density, cfg.seed)?;
                    write_pgm(&noisy, with_suffix(&cfg.output, ".noisy.pgm"))?;
                    noisy
                }
                None => clean,
            };
            let problem = build_l1tv(&observed, cfg.alpha)?;
            let result = solve(&problem, cfg, &observed.to_vector())?;
            let restored = Image::from_vector_clipped(observed.side(), &result.state.x)?;
            write_pgm(&restored, with_suffix(&cfg.output, ".out.pgm"))?;
            result
        }
    };
    let trace_path = with_suffix(&cfg.output, ".trace.csv");
    fs::write(&trace_path, result.trace.to_csv())?;
    Ok(RunOutcome { result, trace_path })
}

/// Run the config at `path` and map the outcome to a process exit code:
/// 0 on convergence, 2 when the solver stopped without converging, 1 on any
/// configuration or I/O error (reported on standard error).
pub fn run_path(path: impl AsRef<Path>) -> i32 {
    let outcome = RunConfig::from_file(path).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(out) if out.result.converged() => 0,
        Ok(out) => {
            eprintln!(
                "solver stopped without converging ({:?}, flags {:?})",
                out.result.status, out.result.flags
            );
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
