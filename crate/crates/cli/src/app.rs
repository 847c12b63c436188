//! Argument parsing and dispatch to the core library.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::time::Instant;

use cbd_core::canonical::{canonicalize, SplitPolicy};
use cbd_core::coupling::multimaximal_coupling;
use cbd_core::io::{load_system_file, system_to_json};
use cbd_core::rational::parse_rational_list;
use cbd_core::solver::{check_noncontextual, min_total_variation, SolverConfig};
use cbd_core::system::{validate_system, System};
use cbd_core::testlab::equivalence_sweep;
use cbd_core::two_connection::{
    analyze_full_splits, constraint_matrix, construct_12_coupling, lp_cross_check,
    nominally_dominates, rank_of_constraint_matrix, relation_residual, MaxSplit,
};
use cbd_core::{CbdError, Rational, TwoConnectionInstance};
use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use serde_json::json;

use crate::report::{emit_report, Field, Format, Report};

#[derive(Debug, Parser)]
#[command(
    name = "cbd",
    version,
    about = "Contextuality analysis of systems of categorical random variables"
)]
pub struct Cli {
    /// Write the output to this file instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Detectors,
    AllSplits,
}

impl From<Policy> for SplitPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Detectors => SplitPolicy::Detectors,
            Policy::AllSplits => SplitPolicy::AllSplits,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a system file and list every problem found.
    Validate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the binary split representation of a system, as a system file.
    Canonicalize {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Policy::Detectors)]
        policy: Policy,
    },
    /// Decide contextuality of a system.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Policy::Detectors)]
        policy: Policy,
        /// Also compute the degree of contextuality (L1-minimal quasi-coupling).
        #[arg(long)]
        degree: bool,
        /// Print the coupling (or quasi-coupling) found.
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        json: bool,
    },
    /// Multimaximal coupling of binary variables with the given Pr[=1] values.
    Coupling {
        /// Comma-separated probabilities, e.g. 1/2,0.3,1/5
        #[arg(long, allow_hyphen_values = true)]
        marginals: String,
    },
    /// Nominal dominance between two distributions.
    Dominance {
        #[arg(short = 'p', allow_hyphen_values = true)]
        p: String,
        #[arg(short = 'q', allow_hyphen_values = true)]
        q: String,
        #[arg(long)]
        json: bool,
    },
    /// Full-split analysis of one content measured in two contexts.
    TwoConnection {
        #[arg(short = 'p', allow_hyphen_values = true)]
        p: String,
        #[arg(short = 'q', allow_hyphen_values = true)]
        q: String,
        /// Highest split order for the LP check: a number or `all`.
        #[arg(long, default_value = "all")]
        max_m: MaxSplit,
        /// Confirm the verdict with the reduced coupling LP.
        #[arg(long)]
        lp_verify: bool,
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        json: bool,
    },
    /// Rank of the 1-2 constraint matrix for k values.
    Rank {
        #[arg(short = 'k')]
        k: usize,
        #[arg(long)]
        json: bool,
    },
    /// Randomized check of the dominance criterion against both LPs.
    Sweep {
        /// Range of k, e.g. 3..6 (inclusive) or a single value.
        #[arg(long = "k", default_value = "3..6", value_parser = parse_k_range)]
        k: RangeInclusive<usize>,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

fn parse_k_range(text: &str) -> Result<RangeInclusive<usize>, String> {
    let bad = || format!("`{text}` is not a range like 3..6");
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo, hi.strip_prefix('=').unwrap_or(hi)),
        None => (text, text),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

/// Everything a command produces.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub warnings: Vec<String>,
    pub exit_code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            warnings: Vec::new(),
            exit_code: 0,
        }
    }
}

/// A usage or input problem; reported on stderr with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<CbdError> for InputError {
    fn from(e: CbdError) -> Self {
        InputError(e.to_string())
    }
}

fn format_of(json: bool) -> Format {
    if json {
        Format::Json
    } else {
        Format::Human
    }
}

/// Loads a system file and rejects it, listing every violation, unless it
/// validates.
pub fn load_system(path: &std::path::Path) -> Result<System, InputError> {
    let sys = load_system_file(path)?;
    let report = validate_system(&sys);
    if report.is_ok() {
        return Ok(sys);
    }
    let mut msg = format!("{} is not a valid system:", path.display());
    for v in &report.violations {
        msg.push_str(&format!("\n  - {v}"));
    }
    Err(InputError(msg))
}

fn instance(p: &str, q: &str) -> Result<TwoConnectionInstance, InputError> {
    Ok(TwoConnectionInstance::new(
        parse_rational_list(p)?,
        parse_rational_list(q)?,
    )?)
}

fn echo(parts: &[String]) -> String {
    parts.join(" ")
}

pub fn run(cli: &Cli) -> Result<Output, InputError> {
    match &cli.command {
        Command::Validate { file, json } => validate(file, *json),
        Command::Canonicalize { file, policy } => {
            let sys = load_system(file)?;
            let canonical = canonicalize(&sys, (*policy).into())?;
            Ok(Output::ok(system_to_json(&canonical)))
        }
        Command::Analyze {
            file,
            policy,
            degree,
            witness,
            json,
        } => analyze(file, *policy, *degree, *witness, *json),
        Command::Coupling { marginals } => {
            let ps = parse_rational_list(marginals)?;
            let named: Vec<(String, Rational)> = ps
                .into_iter()
                .enumerate()
                .map(|(i, p)| ((i + 1).to_string(), p))
                .collect();
            let j = multimaximal_coupling(&named)?;
            let mut text = serde_json::to_string_pretty(&j).expect("json");
            text.push('\n');
            Ok(Output::ok(text))
        }
        Command::Dominance { p, q, json } => {
            let inst = instance(p, q)?;
            let pq = nominally_dominates(inst.p(), inst.q())?;
            let qp = nominally_dominates(inst.q(), inst.p())?;
            let mut r = Report::new(
                echo(&["dominance".into(), format!("-p {p}"), format!("-q {q}")]),
                !(pq || qp),
            )
            .field("p_dominates_q", Field::Flag(pq))
            .field("q_dominates_p", Field::Flag(qp));
            if pq || qp {
                r.degree = Some(Rational::zero());
            }
            Ok(Output::ok(emit_report(&r, format_of(*json))))
        }
        Command::TwoConnection {
            p,
            q,
            max_m,
            lp_verify,
            witness,
            json,
        } => two_connection(p, q, *max_m, *lp_verify, *witness, *json),
        Command::Rank { k, json } => {
            let m = constraint_matrix(*k)?;
            let rank = rank_of_constraint_matrix(*k)?;
            let expected = 2 * k - 1 + k * (k - 1) / 2;
            let text = if *json {
                let v = json!({
                    "k": k,
                    "rows": m.rows.len(),
                    "columns": k * k,
                    "rank": rank,
                    "expected": expected,
                });
                format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
            } else {
                format!(
                    "k: {k}\nmatrix: {} x {}\nrank: {rank}\n2k-1+C(k,2): {expected}\n",
                    m.rows.len(),
                    k * k
                )
            };
            Ok(Output::ok(text))
        }
        Command::Sweep {
            k,
            count,
            seed,
            json,
        } => {
            let report = equivalence_sweep(k.clone(), *count, *seed)?;
            let text = if *json {
                format!("{}\n", serde_json::to_string_pretty(&report).expect("json"))
            } else {
                let cx = match &report.counterexample {
                    None => "none".to_string(),
                    Some(c) => format!(
                        "instance {} (k = {}): p = ({}), q = ({}), {:?}",
                        c.index,
                        c.k,
                        c.p.join(", "),
                        c.q.join(", "),
                        c.check
                    ),
                };
                format!(
                    "k: {}..{}\nseed: {seed}\ninstances: {}\nagreements: {}\nnoncontextual: {}\ncounterexample: {cx}\ntime: {:.3} s\n",
                    k.start(),
                    k.end(),
                    report.instances,
                    report.agreements,
                    report.noncontextual,
                    report.wall_time.as_secs_f64()
                )
            };
            let mut out = Output::ok(text);
            if report.counterexample.is_some() {
                out.warnings
                    .push("the oracles disagree on at least one instance".into());
                out.exit_code = 1;
            }
            Ok(out)
        }
    }
}

fn validate(file: &std::path::Path, json: bool) -> Result<Output, InputError> {
    let sys = load_system_file(file)?;
    let report = validate_system(&sys);
    let text = if json {
        let v = json!({
            "valid": report.is_ok(),
            "contents": sys.contents().len(),
            "contexts": sys.bunches().len(),
            "variables": sys.variable_count(),
            "violations": report.violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
        });
        format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
    } else if report.is_ok() {
        format!(
            "valid: {} contents, {} contexts, {} random variables\n",
            sys.contents().len(),
            sys.bunches().len(),
            sys.variable_count()
        )
    } else {
        let mut s = format!("invalid: {} problem(s)\n", report.violations.len());
        for v in &report.violations {
            s.push_str(&format!("  - {v}\n"));
        }
        s
    };
    let exit_code = if report.is_ok() { 0 } else { 2 };
    Ok(Output {
        text,
        warnings: Vec::new(),
        exit_code,
    })
}

fn analyze(
    file: &std::path::Path,
    policy: Policy,
    degree: bool,
    witness: bool,
    json: bool,
) -> Result<Output, InputError> {
    let start = Instant::now();
    let sys = load_system(file)?;
    let canonical = canonicalize(&sys, policy.into())?;
    let config = SolverConfig::from_env();
    let n = canonical.variable_count();
    let mut warnings = Vec::new();
    if n <= config.max_vars && n + 2 >= config.max_vars {
        warnings.push(format!(
            "{n} binary random variables is close to the cap of {}; the LP has 2^{n} columns",
            config.max_vars
        ));
    }
    let verdict = if degree {
        min_total_variation(&canonical, config)?
    } else {
        check_noncontextual(&canonical, config)?
    };
    let policy_name = match policy {
        Policy::Detectors => "detectors",
        Policy::AllSplits => "all-splits",
    };
    let mut command = vec!["analyze".to_string(), file.display().to_string()];
    command.push(format!("--policy {policy_name}"));
    if degree {
        command.push("--degree".into());
    }
    let mut r = Report::new(echo(&command), verdict.is_contextual())
        .field("variables", Field::Count(n))
        .field("contexts", Field::Count(canonical.bunches().len()));
    r.degree = verdict.degree.clone();
    if let Some(res) = &verdict.infeasibility {
        r = r.field("infeasibility", Field::Exact(res.clone()));
    }
    if witness {
        r.witness = verdict.witness;
    }
    r.elapsed = Some(start.elapsed());
    r.warnings = warnings.clone();
    Ok(Output {
        text: emit_report(&r, format_of(json)),
        warnings,
        exit_code: 0,
    })
}

fn two_connection(
    p: &str,
    q: &str,
    max_m: MaxSplit,
    lp_verify: bool,
    witness: bool,
    json: bool,
) -> Result<Output, InputError> {
    let start = Instant::now();
    let inst = instance(p, q)?;
    let k = inst.k();
    let verdict = analyze_full_splits(&inst);
    let mut command = vec![
        "two-connection".to_string(),
        format!("-p {p}"),
        format!("-q {q}"),
    ];
    if lp_verify {
        let m = match max_m {
            MaxSplit::All => "all".to_string(),
            MaxSplit::Order(m) => m.to_string(),
        };
        command.push(format!("--max-m {m} --lp-verify"));
    }
    let mut r = Report::new(echo(&command), verdict.is_contextual()).field("k", Field::Count(k));
    r.degree = verdict.degree.clone();
    let mut warnings = Vec::new();

    // The first |W| >= 3 split whose value the 1-2 splits fail to predict.
    if verdict.is_contextual() && k >= 4 {
        let violated = (1u64..(1 << k) - 1)
            .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|w| w.len() >= 3)
            .find_map(|w| {
                let r = relation_residual(&inst, &w).ok()?;
                (!r.is_zero()).then_some((w, r))
            });
        if let Some((w, res)) = violated {
            let labels: Vec<String> = w.iter().map(|i| (i + 1).to_string()).collect();
            r = r
                .field(
                    "violated_relation",
                    Field::Text(format!("W = {{{}}}", labels.join(","))),
                )
                .field("relation_residual", Field::Exact(res));
        }
    }
    if lp_verify {
        let lp = lp_cross_check(&inst, max_m)?;
        r = r
            .field("lp_feasible", Field::Flag(lp.feasible))
            .field("lp_agrees", Field::Flag(lp.feasible == verdict.feasible));
        if lp.feasible != verdict.feasible {
            warnings.push("the LP disagrees with the dominance criterion".to_string());
        }
    }
    if witness {
        if let Some(c) = construct_12_coupling(&inst) {
            r = r.field("coupling", Field::Matrix(c.rows().to_vec()));
            debug_assert!(c.rows().iter().flatten().sum::<Rational>() == Rational::one());
        }
    }
    r.elapsed = Some(start.elapsed());
    r.warnings = warnings.clone();
    Ok(Output {
        text: emit_report(&r, format_of(json)),
        warnings,
        exit_code: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_ranges() {
        assert_eq!(parse_k_range("3..6").unwrap(), 3..=6);
        assert_eq!(parse_k_range("3..=6").unwrap(), 3..=6);
        assert_eq!(parse_k_range("4").unwrap(), 4..=4);
        assert!(parse_k_range("6..3").is_err());
        assert!(parse_k_range("a..b").is_err());
    }
}
