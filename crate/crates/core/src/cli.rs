//! Command-line front end. Exit codes: 0 success, 1 not found or check
//! failed, 2 usage or format error.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::concentration::{self, update::Load, Exponents};
use crate::hypergraph::{find_simplex, planted_instance, Hypergraph, OracleView};
use crate::learning_graph::LearningGraph;
use crate::lp::{self, Family7, ParamSet};
use crate::nested::{parse_config, render_bound};
use crate::rational::{fmt_fixed, parse_rational, Q};
use crate::reduction::{parse_instances, run_reduction_trials, Inputs};

#[derive(Parser, Debug)]
#[command(name = "hsimplex", version, about = "Hypergraph simplex-finding query-complexity toolkit")]
pub struct Cli {
    /// Root seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print exact rationals instead of 6-decimal values.
    #[arg(long, global = true)]
    pub exact: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classical simplex search on a hypergraph file.
    SimplexFind {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Rank-increase reduction trials: empirical against exact success rate.
    Reduce {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Multi-instance file; defaults to one input holding a planted simplex.
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Validate a learning-graph file and print its complexity.
    LgEval {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Nested-walk complexity bound from a config file.
    NestedBound {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Solve the exponent LP.
    LpSolve {
        #[command(flatten)]
        variant: VariantArg,
    },
    /// Evaluate a parameter file: exponents and admissibility.
    LpCheck {
        /// `name=value` file; the published values when omitted.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "1/10000")]
        eps: String,
        #[command(flatten)]
        variant: VariantArg,
    },
    /// Hypergeometric tails and sampled-state reports.
    Concentration {
        #[command(subcommand)]
        report: ConcReport,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct VariantArg {
    /// Reading of the seventh constraint family.
    #[arg(long, value_enum, default_value_t = Family7Arg::AsStated)]
    pub family7: Family7Arg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family7Arg {
    AsStated,
    AllRoles,
}

impl From<Family7Arg> for Family7 {
    fn from(v: Family7Arg) -> Self {
        match v {
            Family7Arg::AsStated => Family7::AsStated,
            Family7Arg::AllRoles => Family7::AllRoles,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum ConcReport {
    /// Exact tails against both bounds over the built-in grid.
    Tails,
    /// Marked-condition violation rates.
    Violations {
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Log–log slope of the update size under one kind of load.
    Scaling {
        #[arg(long, value_enum)]
        load: LoadKind,
        /// 1-based levels of the loaded set, e.g. `3,4` for a pair load.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// 1-based quadruple, default `1,2,3,4`.
        #[arg(long, value_delimiter = ',')]
        quad: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512])]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadKind {
    Vertex,
    Pair,
    Triple,
}

/// Failure of a subcommand, mapped to its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Report printed, but the property was not found or the check failed.
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_params(input: &Option<PathBuf>) -> Result<ParamSet, CliError> {
    match input {
        Some(p) => ParamSet::parse(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => Ok(ParamSet::published()),
    }
}

fn zero_based(levels: &[usize], want: usize, what: &str) -> Result<Vec<usize>, CliError> {
    if levels.len() != want || levels.iter().any(|&v| v == 0 || v > 5) {
        return Err(usage(format!("{what} needs {want} levels in 1..=5")));
    }
    let mut v: Vec<usize> = levels.iter().map(|x| x - 1).collect();
    v.sort_unstable();
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage(format!("{what} repeats a level")));
    }
    Ok(v)
}

/// Output text and whether the run passed its check.
type Outcome = (String, bool);

fn simplex_find(input: &PathBuf) -> Result<Outcome, CliError> {
    let g = Hypergraph::parse(&read(input)?).map_err(|e| usage(format!("{}: {e}", input.display())))?;
    let mut view = OracleView::new(&g);
    let found = find_simplex(&mut view).map_err(usage)?;
    let mut out = String::new();
    match &found {
        Some(s) => {
            let _ = writeln!(out, "simplex {s}");
        }
        None => {
            let _ = writeln!(out, "no simplex");
        }
    }
    let _ = writeln!(out, "queries={}", view.query_count());
    Ok((out, found.is_some()))
}

fn reduce(n: usize, r: usize, trials: u64, input: &Option<PathBuf>, seed: u64, exact: bool) -> Result<Outcome, CliError> {
    let (n, r, inputs) = match input {
        Some(p) => {
            let (fn_, fr, inputs) = parse_instances(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            if (fn_, fr) != (n, r) {
                return Err(usage(format!("file header has n={fn_} r={fr}, flags say n={n} r={r}")));
            }
            (n, r, inputs)
        }
        None => {
            let (g, _) = planted_instance(n, r, 0.0, seed).map_err(usage)?;
            let mut inputs = Inputs::new();
            inputs.insert(1, g);
            (n, r, inputs)
        }
    };
    let report = run_reduction_trials(&inputs, n, r, trials, seed).map_err(usage)?;
    let ok = report.within_sigmas(3.0) && report.decode_failures == 0;
    Ok((report.render(exact), ok))
}

fn lg_eval(input: &PathBuf, exact: bool) -> Result<Outcome, CliError> {
    let g = LearningGraph::parse(&read(input)?).map_err(|e| usage(format!("{}: {e}", input.display())))?;
    let report = g.validate();
    let mut out = report.to_string();
    if !report.ok() {
        return Ok((out, false));
    }
    let c = g.complexity().map_err(usage)?;
    let show = |q: &Q| if exact { q.to_string() } else { fmt_fixed(q, 6) };
    let _ = writeln!(out, "c0={}", show(&c.c0));
    let _ = writeln!(out, "c1={}", show(&c.c1));
    let _ = writeln!(out, "complexity={:.6}", c.value());
    Ok((out, true))
}

fn lp_check(input: &Option<PathBuf>, eps: &str, variant: Family7, exact: bool) -> Result<Outcome, CliError> {
    let p = load_params(input)?;
    let eps = parse_rational(eps).ok_or_else(|| usage(format!("bad --eps {eps:?}")))?;
    let adm = lp::admissible(&p, &eps, variant);
    let mut out = lp::report(&p, exact);
    let _ = writeln!(out, "admissible={}", if adm.ok() { "yes" } else { "no" });
    let _ = writeln!(out, "min_strict_margin={}", fmt_fixed(&adm.min_strict_margin, 6));
    for v in &adm.violations {
        let _ = writeln!(out, "violation\tfamily {}\t{}\t{}", v.family, v.label, fmt_fixed(&v.value, 6));
    }
    Ok((out, adm.ok()))
}

fn concentration_report(report: &ConcReport, seed: u64) -> Result<Outcome, CliError> {
    match report {
        ConcReport::Tails => {
            let (text, failures) = concentration::tail_report(&concentration::tail_grid()).map_err(usage)?;
            Ok((text, failures == 0))
        }
        ConcReport::Violations { grid, trials, input } => {
            let e = Exponents::from_params(&load_params(input)?);
            let r = concentration::violation_rate(grid, &e, *trials, seed).map_err(usage)?;
            let ok = r.cap_failures() == 0 && r.conditions().iter().all(|c| r.nonincreasing(c, 3.0));
            Ok((r.render(), ok))
        }
        ConcReport::Scaling { load, levels, quad, grid, trials, input } => {
            let e = Exponents::from_params(&load_params(input)?);
            let q = zero_based(quad.as_deref().unwrap_or(&[1, 2, 3, 4]), 4, "--quad")?;
            let q = [q[0], q[1], q[2], q[3]];
            let want = match load {
                LoadKind::Vertex => 1,
                LoadKind::Pair => 2,
                LoadKind::Triple => 3,
            };
            let l = match levels {
                Some(l) => zero_based(l, want, "--levels")?,
                None => q[..want].to_vec(),
            };
            let load = match load {
                LoadKind::Vertex => Load::Vertex(l[0]),
                LoadKind::Pair => Load::Pair([l[0], l[1]]),
                LoadKind::Triple => Load::Triple([l[0], l[1], l[2]]),
            };
            let r = concentration::update_size_scaling(grid, &e, load, q, *trials, seed).map_err(usage)?;
            let mut out = String::from("level\tpredicted\tfitted\tresidual\n");
            out.push_str(&r.render());
            Ok((out, r.residual().abs() <= 0.15))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::SimplexFind { input } => simplex_find(input),
        Command::Reduce { n, r, trials, input } => reduce(*n, *r, *trials, input, cli.seed, cli.exact),
        Command::LgEval { input } => lg_eval(input, cli.exact),
        Command::NestedBound { input } => {
            let text = read(input)?;
            let cfg = parse_config(&text).map_err(|e| usage(format!("{}: {e}", input.display())))?;
            Ok((render_bound(&cfg, cli.exact).map_err(usage)?, true))
        }
        Command::LpSolve { variant } => {
            let sol = lp::solve_lp(variant.family7.into()).map_err(usage)?;
            Ok((lp::report(&sol.params, cli.exact), true))
        }
        Command::LpCheck { input, eps, variant } => lp_check(input, eps, variant.family7.into(), cli.exact),
        Command::Concentration { report } => concentration_report(report, cli.seed),
    }
}

/// Runs a parsed command, writing its report; returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok((text, ok)) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            } else {
                print!("{text}");
            }
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

/// Parses `std::env::args` and runs; clap exits with 2 on usage errors.
pub fn run() -> i32 {
    execute(&Cli::parse())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("hsimplex").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn bad_subcommand_is_usage_error() {
        let err = Cli::try_parse_from(["hsimplex", "frobnicate"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_is_comma_list() {
        let cli = parse(&["concentration", "violations", "--grid", "8,16", "--trials", "0"]);
        match &cli.command {
            Command::Concentration { report: ConcReport::Violations { grid, trials, .. } } => {
                assert_eq!(grid, &vec![8, 16]);
                assert_eq!(*trials, 0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(execute(&cli), 0);
    }

    #[test]
    fn lp_check_defaults_to_published_values() {
        let (text, ok) = lp_check(&None, "1/10000", Family7::AsStated, false).unwrap();
        assert!(ok);
        assert!(text.contains("objective=2.454780"));
        assert!(text.contains("admissible=yes"));
    }

    #[test]
    fn level_lists() {
        assert_eq!(zero_based(&[4, 3], 2, "x").unwrap(), vec![2, 3]);
        assert!(zero_based(&[3, 3], 2, "x").is_err());
        assert!(zero_based(&[6], 1, "x").is_err());
    }
}
