//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::conditions::{run_checks_with, smoothness_warning, SampleSpec, Verdict};
use crate::config::{RunConfig, Scalar};
use crate::elliptic::{series_oracle_1d, solve_elliptic, solve_via_resolvent};
use crate::error::{Error, Result};
use crate::estimates::{gradient_bound_study, StudyMode};
use crate::expr::Expr;
use crate::lattice::GridFunction;
use crate::operator::consistency_error;
use crate::parabolic::{solve_parabolic_with, verify_max_principle, ParabolicOptions, Record};
use crate::presets::{preset, preset_names, preset_source};
use crate::report::{self, Table};
use crate::richardson::{convergence_study, extrapolate};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "STENCIL_LAB_THREADS";

/// Exit status when `--strict` finds a failed check.
pub const EXIT_ASSUMPTION: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "stencil-lab",
    version,
    about = "Monotone finite-difference schemes on lattices: solvers, condition checks and convergence studies",
    after_help = "Exit status: 0 success, 1 config or input error, 2 numerical failure, 3 failed check under --strict.\n\
                  Worker threads are capped by STENCIL_LAB_THREADS."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// TOML run configuration.
    #[arg(long, short, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in problem (see `stencil-lab presets`).
    #[arg(long, short)]
    pub preset: Option<String>,
    /// CSV destination; without it the table goes to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Override the lattice spacing (number or expression).
    #[arg(long)]
    pub h: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Explicit Euler up to T.
    ///
    /// CSV columns: t, x1..xd, u.
    SolveParabolic {
        #[command(flatten)]
        source: Source,
        /// Time step (at most the stable step).
        #[arg(long)]
        dt: Option<f64>,
        /// Record every n-th step instead of the endpoints only.
        #[arg(long)]
        dump_every: Option<usize>,
        /// Final time override.
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Stationary problem by Gauss-Seidel.
    ///
    /// CSV columns: t, x1..xd, u.
    SolveElliptic {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Use the time-integration route instead of Gauss-Seidel.
        #[arg(long)]
        resolvent: bool,
    },
    /// Richardson extrapolation of the stationary solution.
    ///
    /// With an exact solution and a list of spacings, CSV columns are
    /// k, h, sup_error, order; otherwise t, x1..xd, u.
    Extrapolate {
        #[command(flatten)]
        source: Source,
        #[arg(long, short)]
        k: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Comma-separated spacings.
        #[arg(long)]
        h_list: Option<String>,
        /// Exact solution expression.
        #[arg(long)]
        exact: Option<String>,
    },
    /// Pointwise condition checks.
    ///
    /// CSV columns: h, check, verdict, margin, tolerance, t, x, witness, xi,
    /// skipped, note.
    CheckAssumptions {
        #[command(flatten)]
        source: Source,
        /// Comma-separated check names, or `all`.
        #[arg(long)]
        checks: Option<String>,
        /// Repeat at each of these comma-separated spacings.
        #[arg(long)]
        h_sweep: Option<String>,
        /// Exit with status 3 when a check fails.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        t_samples: Option<usize>,
    },
    /// Mesh dependence of sup(|u| + tau0|Du| + U) / (F1 + boundary data).
    ///
    /// CSV columns: h, sup_u, sup_tau0_Du, sup_U, F1, boundary, R.
    GradientStudy {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        h_list: Option<String>,
        /// `parabolic` or `elliptic`.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Truncation error of the scheme against the limit operator.
    ///
    /// CSV columns: h, sup_error, order.
    Consistency {
        #[command(flatten)]
        source: Source,
        /// Test function.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        h_list: Option<String>,
    },
    /// Random-walk series for the one-dimensional model equation.
    ///
    /// CSV columns: x, series, tail_bound, terms, scheme, difference.
    #[command(name = "oracle-1d")]
    Oracle1d {
        #[command(flatten)]
        source: Source,
        /// Right-hand side (defaults to the configured f).
        #[arg(long)]
        f: Option<String>,
        /// Comma-separated evaluation points.
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Tail tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Also solve the configured problem and compare at lattice points.
        #[arg(long)]
        compare: bool,
    },
    /// List the built-in problems.
    Presets,
    /// Print the configuration of a built-in problem.
    ShowPreset { name: String },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveParabolic { .. } => "solve-parabolic",
            Command::SolveElliptic { .. } => "solve-elliptic",
            Command::Extrapolate { .. } => "extrapolate",
            Command::CheckAssumptions { .. } => "check-assumptions",
            Command::GradientStudy { .. } => "gradient-study",
            Command::Consistency { .. } => "consistency",
            Command::Oracle1d { .. } => "oracle-1d",
            Command::Presets => "presets",
            Command::ShowPreset { .. } => "show-preset",
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 1 } else { 0 };
            }
            let text = e.render().to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let _ = writeln!(err, "stencil-lab: {}", one_line(first.trim_start_matches("error:")));
            return 1;
        }
    };
    let name = cli.command.name();
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "{name}: {}", one_line(&e.to_string()));
        return e.exit_code();
    }
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{name}: {}", one_line(&e.to_string()));
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Config {
        line: None,
        message: format!("{THREADS_ENV} = `{v}` is not a positive integer"),
    })?;
    // a second configuration in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load(source: &Source) -> Result<RunConfig> {
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(h) = &source.h {
        cfg.problem.h = Scalar::Text(h.clone());
        cfg.problem().map_err(|e| Error::Config {
            line: None,
            message: format!("--h {h}: {}", crate::config::strip_config(e)),
        })?;
    }
    if let Some(o) = &source.output {
        cfg.run.output = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| Scalar::Text(t.into()).value(what))
        .collect()
}

fn parse_expr(s: &str) -> Result<Expr> {
    Scalar::Text(s.into()).to_expr()
}

/// Writes the CSV to the configured path, or the table to `out`.
fn emit(cfg: &RunConfig, table: &Table, summary: &[(&str, String)], out: &mut dyn Write) -> Result<()> {
    match &cfg.run.output {
        Some(path) => {
            table.save(std::path::Path::new(path))?;
            let mut s = Table::new(&["quantity", "value"]);
            for (k, v) in summary {
                s.push(vec![(*k).into(), v.clone().into()]);
            }
            s.push(vec!["csv".into(), path.clone().into()]);
            write!(out, "{}", s.render_text())?;
        }
        None => {
            for (k, v) in summary {
                writeln!(out, "# {k}: {v}")?;
            }
            write!(out, "{}", table.render_text())?;
        }
    }
    Ok(())
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Presets => {
            for n in preset_names() {
                writeln!(out, "{n}")?;
            }
        }
        Command::ShowPreset { name } => {
            let src = preset_source(&name).ok_or_else(|| Error::Config {
                line: None,
                message: format!("unknown preset `{name}`"),
            })?;
            write!(out, "{src}")?;
        }
        Command::SolveParabolic {
            source,
            dt,
            dump_every,
            t_final,
        } => {
            let cfg = load(&source)?;
            let prob = cfg.problem()?;
            let every = dump_every.or(cfg.run.dump_every);
            let opts = ParabolicOptions {
                dt,
                record: every.map_or(Record::Endpoints, Record::Every),
                t_final,
            };
            let traj = solve_parabolic_with(&prob, &opts)?;
            let mp = verify_max_principle(&prob, &traj, 0.0, None)?;
            let u = traj.final_state();
            let summary = [
                ("dt", sci(traj.dt)),
                ("T", sci(*traj.times.last().expect("final time"))),
                ("sup|u(T)|", sci(u.sup_norm())),
                ("max-principle margin", sci(mp.margin)),
            ];
            emit(&cfg, &report::grid_table(&traj.states), &summary, out)?;
        }
        Command::SolveElliptic {
            source,
            tol,
            max_iter,
            resolvent,
        } => {
            let cfg = load(&source)?;
            let prob = cfg.problem()?;
            let tol = tol.unwrap_or(cfg.run.tol);
            let u = if resolvent {
                solve_via_resolvent(&prob, tol)?
            } else {
                solve_elliptic(&prob, tol, max_iter.unwrap_or(cfg.run.max_iter))?
            };
            let summary = [
                ("points", u.values().len().to_string()),
                ("sup|u|", sci(u.sup_norm())),
                ("method", if resolvent { "resolvent" } else { "gauss-seidel" }.to_string()),
            ];
            emit(&cfg, &report::grid_table(&[u.with_time(0.0)]), &summary, out)?;
        }
        Command::Extrapolate {
            source,
            k,
            tol,
            h_list,
            exact,
        } => {
            let cfg = load(&source)?;
            let prob = cfg.problem()?;
            let k = k.unwrap_or(cfg.run.k);
            let tol = tol.unwrap_or(cfg.run.tol);
            let hs = match &h_list {
                Some(s) => parse_list(s, "h-list")?,
                None => cfg.h_list()?,
            };
            match exact.or(cfg.run.exact.clone()) {
                Some(v) if !hs.is_empty() => {
                    let v = parse_expr(&v)?;
                    let (rows, order) = convergence_study(&prob, &v, k, &hs, tol)?;
                    let summary = [("k", k.to_string()), ("observed order", sci(order))];
                    emit(&cfg, &report::extrapolation_table(&rows, order), &summary, out)?;
                }
                _ => {
                    let u = extrapolate(&prob, k, tol)?;
                    let summary = [("k", k.to_string()), ("sup|u|", sci(u.sup_norm()))];
                    emit(&cfg, &report::grid_table(&[u.with_time(0.0)]), &summary, out)?;
                }
            }
        }
        Command::CheckAssumptions {
            source,
            checks,
            h_sweep,
            strict,
            t_samples,
        } => {
            let cfg = load(&source)?;
            let prob = cfg.problem()?;
            let names: Vec<String> = match &checks {
                Some(s) => s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect(),
                None => cfg.run.checks.clone(),
            };
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let spec = SampleSpec {
                t_samples: t_samples.unwrap_or(cfg.run.t_samples),
            };
            let hs = match &h_sweep {
                Some(s) => parse_list(s, "h-sweep")?,
                None => vec![prob.h()],
            };
            if let Some(w) = smoothness_warning(&prob) {
                writeln!(err, "check-assumptions: warning: {w}")?;
            }
            let reports = hs
                .iter()
                .map(|&h| {
                    let p = prob.with_spacing(h)?;
                    run_checks_with(&p, &names, &spec, &cfg.budgets()).map_err(Error::at_spacing(h))
                })
                .collect::<Result<Vec<_>>>()?;
            let failed = reports.iter().flat_map(|r| &r.records).filter(|r| r.verdict == Verdict::Fail).count();
            let summary = [("spacings", hs.len().to_string()), ("failed", failed.to_string())];
            emit(&cfg, &report::assumption_table(&reports), &summary, out)?;
            if strict && failed > 0 {
                writeln!(err, "check-assumptions: {failed} check(s) failed under --strict")?;
                return Ok(EXIT_ASSUMPTION);
            }
        }
        Command::GradientStudy { source, h_list, mode } => {
            let cfg = load(&source)?;
            let prob = cfg.problem()?;
            let hs = match &h_list {
                Some(s) => parse_list(s, "h-list")?,
                None if cfg.run.h_list.is_empty() => vec![prob.h(), prob.h() / 2.0, prob.h() / 4.0],
                None => cfg.h_list()?,
            };
            let mode = match mode.as_deref().unwrap_or(&cfg.run.mode) {
                "parabolic" => StudyMode::Parabolic,
                "elliptic" => StudyMode::Elliptic,
                other => {
                    return Err(Error::Config {
                        line: None,
                        message: format!("mode `{other}`: expected parabolic or elliptic"),
                    })
                }
            };
            let study = gradient_bound_study(&prob, &hs, mode)?;
            let summary = [
                ("max R / min R", sci(study.ratio_spread())),
                ("sum |tau lambda|^2", sci(study.stencil_size_sq)),
                ("sup |Dc|", sci(study.sup_dc)),
            ];
            emit(&cfg, &report::gradient_table(&study), &summary, out)?;
        }
        Command::Consistency { source, phi, h_list } => {
            let cfg = load(&source)?;
            let prob = cfg.problem()?;
            let phi = phi.or(cfg.run.phi.clone()).ok_or_else(|| Error::Config {
                line: None,
                message: "no test function: pass --phi or set run.phi".into(),
            })?;
            let hs = match &h_list {
                Some(s) => parse_list(s, "h-list")?,
                None if cfg.run.h_list.is_empty() => vec![prob.h(), prob.h() / 2.0, prob.h() / 4.0],
                None => cfg.h_list()?,
            };
            let rep = consistency_error(&prob, &parse_expr(&phi)?, &hs)?;
            let mut summary = vec![("observed order", sci(rep.order))];
            if let Some(d) = &rep.diagnostic {
                summary.push(("diagnostic", d.clone()));
            }
            emit(&cfg, &report::convergence_table(&rep), &summary, out)?;
        }
        Command::Oracle1d {
            source,
            f,
            x,
            n_max,
            tol,
            compare,
        } => {
            let cfg = load(&source)?;
            let prob = cfg.problem()?;
            let f = match &f {
                Some(s) => parse_expr(s)?,
                None => prob.coeffs().f.clone(),
            };
            let xs = match &x {
                Some(s) => parse_list(s, "x")?,
                None => cfg.x_list()?,
            };
            let tol = tol.unwrap_or(cfg.run.tol);
            let n_max = n_max.unwrap_or(cfg.run.n_max);
            let scheme: Option<GridFunction> = if compare { Some(solve_elliptic(&prob, tol, cfg.run.max_iter)?) } else { None };
            let points = xs
                .iter()
                .map(|&xv| {
                    let s = series_oracle_1d(&f, prob.h(), xv, n_max, tol, None)?;
                    let u = scheme.as_ref().and_then(|u| lattice_value(u, xv));
                    Ok((xv, s, u))
                })
                .collect::<Result<Vec<_>>>()?;
            let worst = points.iter().filter_map(|(_, s, u)| u.map(|u| (u - s.value).abs())).fold(f64::NAN, f64::max);
            let mut summary = vec![("h", sci(prob.h()))];
            if compare {
                summary.push(("max |scheme - series|", sci(worst)));
            }
            emit(&cfg, &report::oracle_table(&points), &summary, out)?;
        }
    }
    Ok(0)
}

/// Value at the lattice point `x`, if `x` is one.
fn lattice_value(u: &GridFunction, x: f64) -> Option<f64> {
    let dom = u.domain();
    if dom.dim() != 1 {
        return None;
    }
    let k = ((x - dom.lower()[0]) / dom.h()).round();
    if k < 0.0 || (dom.lower()[0] + k * dom.h() - x).abs() > 1e-9 * dom.h() {
        return None;
    }
    let i = k as usize;
    (i < dom.len()).then(|| u.values()[i])
}
