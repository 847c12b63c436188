//! Noncontextuality of all-binary systems by exact linear programming.
//!
//! A binary system is noncontextual (with connections coupled
//! multimaximally) when some probability mass over the global states of all
//! its random variables reproduces every bunch distribution and, for every
//! content, the multimaximal coupling of its connection. Within a connection
//! sorted by `Pr[=1]` it is enough to pin `Pr[both = 1]` of adjacent pairs.
//!
//! When no such coupling exists, a signed quasi-coupling still does; the
//! smallest total variation among quasi-couplings, minus one, measures the
//! degree of contextuality.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::coupling::{is_multimaximal, joint_marginal, multimaximal_coupling, JointMass};
use crate::error::{CbdError, Result};
use crate::lp::{LinearProgram, LpOutcome, VarSign};
use crate::rational::{int, Rational};
use crate::system::System;

pub const DEFAULT_MAX_VARS: usize = 20;

/// Environment variable overriding [`DEFAULT_MAX_VARS`].
pub const MAX_VARS_ENV: &str = "CBD_MAX_VARS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Largest number of binary random variables; the LP has `2^n` columns.
    pub max_vars: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_vars: DEFAULT_MAX_VARS,
        }
    }
}

impl SolverConfig {
    /// Default config, with `CBD_MAX_VARS` applied when set to a number.
    pub fn from_env() -> Self {
        let max_vars = std::env::var(MAX_VARS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_VARS);
        Self { max_vars }
    }
}

/// Outcome of a noncontextuality check or degree computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// A nonnegative connected coupling exists (the system is noncontextual).
    pub feasible: bool,
    /// A probability coupling when `feasible`, or the L1-optimal quasi-coupling
    /// from [`min_total_variation`].
    pub witness: Option<JointMass>,
    /// `min ||X|| - 1`; zero whenever a probability witness exists.
    pub degree: Option<Rational>,
    /// Phase-one optimum when infeasible.
    pub infeasibility: Option<Rational>,
}

impl Verdict {
    pub fn is_contextual(&self) -> bool {
        !self.feasible
    }
}

/// Which random variable each bit of a global-state index stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalLayout {
    /// `(context, content)` of bit `i`.
    variables: Vec<(String, String)>,
}

impl GlobalLayout {
    fn of(sys: &System) -> Self {
        let variables = sys
            .bunches()
            .values()
            .flat_map(|b| {
                b.contents()
                    .iter()
                    .map(move |q| (b.context().to_string(), q.clone()))
            })
            .collect();
        Self { variables }
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[(String, String)] {
        &self.variables
    }

    pub fn bit_of(&self, context: &str, content: &str) -> Option<usize> {
        self.variables
            .iter()
            .position(|(c, q)| c == context && q == content)
    }

    /// Label `content@context` used in witnesses.
    pub fn label(&self, bit: usize) -> String {
        let (c, q) = &self.variables[bit];
        format!("{q}@{c}")
    }

    fn state_of(&self, index: usize) -> Vec<usize> {
        (0..self.len()).map(|b| (index >> b) & 1).collect()
    }
}

/// The feasibility program of a binary system, with the bit layout of its
/// variables (global state `s` has variable `i` equal to bit `i` of `s`).
#[derive(Debug, Clone)]
pub struct ConnectedLp {
    pub lp: LinearProgram,
    pub layout: GlobalLayout,
    pub bunch_rows: usize,
    pub connection_rows: usize,
}

fn require_binary(sys: &System) -> Result<()> {
    for (q, vs) in sys.contents() {
        if vs.labels() != ["0", "1"] {
            return Err(CbdError::InvalidArgument(format!(
                "content `{q}` is not binary with values 0, 1; canonicalize the system first"
            )));
        }
    }
    Ok(())
}

/// `Pr[R_q^c = 1]` for every context measuring `q`, sorted ascending with ties
/// broken by context id.
fn sorted_connection(sys: &System, q: &str) -> Result<Vec<(String, Rational)>> {
    let mut out = Vec::new();
    for ctx in sys.contexts_of(q) {
        let bunch = sys.bunch(ctx)?;
        let pos = bunch.position(q).expect("context measures q");
        let p1 = bunch
            .masses()
            .iter()
            .filter(|(s, _)| s[pos] == "1")
            .fold(Rational::zero(), |acc, (_, m)| acc + m);
        out.push((ctx.to_string(), p1));
    }
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Equalities over the `2^n` global states: every bunch state's mass, plus
/// `Pr[both = 1] = min` for adjacent pairs of every sorted connection.
pub fn build_connected_constraints(sys: &System, config: SolverConfig) -> Result<ConnectedLp> {
    require_binary(sys)?;
    let layout = GlobalLayout::of(sys);
    let n = layout.len();
    if n > config.max_vars || n >= usize::BITS as usize - 1 {
        return Err(CbdError::TooManyVariables {
            found: n,
            cap: config.max_vars,
        });
    }
    let states = 1usize << n;
    let mut lp = LinearProgram::new(states);

    let mut bunch_rows = 0;
    let mut first_bit = 0;
    for bunch in sys.bunches().values() {
        let width = bunch.contents().len();
        let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); 1 << width];
        for s in 0..states {
            rows[(s >> first_bit) & ((1 << width) - 1)].push((s, int(1)));
        }
        for (local, coeffs) in rows.into_iter().enumerate() {
            let label: Vec<String> = (0..width).map(|b| ((local >> b) & 1).to_string()).collect();
            lp.add_constraint(coeffs, bunch.mass_of(&label));
            bunch_rows += 1;
        }
        first_bit += width;
    }

    let mut connection_rows = 0;
    for q in sys.contents().keys() {
        let chain = sorted_connection(sys, q)?;
        for pair in chain.windows(2) {
            let a = layout
                .bit_of(&pair[0].0, q)
                .expect("layout covers every variable");
            let b = layout
                .bit_of(&pair[1].0, q)
                .expect("layout covers every variable");
            let mask = (1 << a) | (1 << b);
            let coeffs = (0..states)
                .filter(|s| s & mask == mask)
                .map(|s| (s, int(1)))
                .collect();
            let both = pair[0].1.clone().min(pair[1].1.clone());
            lp.add_constraint(coeffs, both);
            connection_rows += 1;
        }
    }
    Ok(ConnectedLp {
        lp,
        layout,
        bunch_rows,
        connection_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible { residual: Rational },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Phase-one feasibility of a program over nonnegative variables. Any
/// objective on `lp` is ignored.
pub fn solve_feasibility(lp: &LinearProgram) -> Result<Feasibility> {
    if lp.signs().contains(&VarSign::Free) {
        return Err(CbdError::MalformedLp(
            "feasibility checks need nonnegative variables".into(),
        ));
    }
    let mut plain = lp.clone();
    plain.clear_objective();
    match plain.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(Feasibility::Feasible(x)),
        LpOutcome::Infeasible { residual } => Ok(Feasibility::Infeasible { residual }),
        LpOutcome::Unbounded => unreachable!("a program without objective cannot be unbounded"),
    }
}

fn witness_from(layout: &GlobalLayout, x: &[Rational]) -> JointMass {
    JointMass::new(
        (0..layout.len()).map(|b| layout.label(b)),
        x.iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(s, m)| (layout.state_of(s), m.clone())),
    )
}

/// Feasibility of the connected coupling, with a probability witness.
pub fn check_noncontextual(sys: &System, config: SolverConfig) -> Result<Verdict> {
    let built = build_connected_constraints(sys, config)?;
    Ok(match solve_feasibility(&built.lp)? {
        Feasibility::Feasible(x) => Verdict {
            feasible: true,
            witness: Some(witness_from(&built.layout, &x)),
            degree: Some(Rational::zero()),
            infeasibility: None,
        },
        Feasibility::Infeasible { residual } => Verdict {
            feasible: false,
            witness: None,
            degree: None,
            infeasibility: Some(residual),
        },
    })
}

pub fn is_noncontextual(sys: &System, config: SolverConfig) -> Result<bool> {
    check_noncontextual(sys, config).map(|v| v.feasible)
}

/// Splits every variable `x` of an equality system into `x+ - x-` and
/// minimizes `sum(x+ + x-)`. Returns the optimum and the signed point.
/// `None` when the equalities have no real solution at all.
pub(crate) fn minimize_l1(lp: &LinearProgram) -> Result<Option<(Rational, Vec<Rational>)>> {
    let n = lp.num_vars();
    let mut split = LinearProgram::new(2 * n);
    for c in lp.constraints() {
        let coeffs = c
            .coeffs
            .iter()
            .flat_map(|(j, a)| [(*j, a.clone()), (n + *j, -a.clone())])
            .collect();
        split.add_constraint(coeffs, c.rhs.clone());
    }
    split.set_objective((0..2 * n).map(|j| (j, int(1))).collect());
    match split.solve()? {
        LpOutcome::Optimal { x, objective } => {
            let signed = (0..n).map(|j| &x[j] - &x[n + j]).collect();
            Ok(Some((objective, signed)))
        }
        LpOutcome::Infeasible { .. } => Ok(None),
        LpOutcome::Unbounded => unreachable!("an L1 objective is bounded below"),
    }
}

/// Smallest total variation of a quasi-coupling with the same constraints.
/// The verdict's `degree` is that minimum minus one; it is zero exactly when
/// the system is noncontextual.
pub fn min_total_variation(sys: &System, config: SolverConfig) -> Result<Verdict> {
    let built = build_connected_constraints(sys, config)?;
    let (norm, x) = minimize_l1(&built.lp)?
        .ok_or_else(|| CbdError::MalformedLp("equality system has no real solution".into()))?;
    let degree = &norm - Rational::one();
    let feasible = degree.is_zero();
    Ok(Verdict {
        feasible,
        witness: Some(witness_from(&built.layout, &x)),
        degree: Some(degree),
        infeasibility: None,
    })
}

/// Checks a witness against a binary system: its marginal on every bunch is
/// that bunch, and its marginal on every connection is the multimaximal
/// coupling of that connection.
pub fn verify_witness(sys: &System, witness: &JointMass) -> Result<bool> {
    require_binary(sys)?;
    let index: BTreeMap<&str, usize> = witness
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let bit = |ctx: &str, q: &str| -> Result<usize> {
        index
            .get(format!("{q}@{ctx}").as_str())
            .copied()
            .ok_or_else(|| CbdError::InvalidArgument(format!("witness lacks {q}@{ctx}")))
    };
    if witness.total() != Rational::one() {
        return Ok(false);
    }
    for bunch in sys.bunches().values() {
        let idx = bunch
            .contents()
            .iter()
            .map(|q| bit(bunch.context(), q))
            .collect::<Result<Vec<_>>>()?;
        let marginal = joint_marginal(witness, &idx)?;
        let width = idx.len();
        for local in 0..1usize << width {
            let state: Vec<usize> = (0..width).map(|b| (local >> b) & 1).collect();
            let labels: Vec<String> = state.iter().map(|v| v.to_string()).collect();
            if marginal.mass_of(&state) != bunch.mass_of(&labels) {
                return Ok(false);
            }
        }
    }
    for q in sys.contents().keys() {
        let chain = sorted_connection(sys, q)?;
        let idx = chain
            .iter()
            .map(|(ctx, _)| bit(ctx, q))
            .collect::<Result<Vec<_>>>()?;
        let marginal = joint_marginal(witness, &idx)?;
        let expected = multimaximal_coupling(&chain)?;
        if marginal.masses() != expected.masses() || !is_multimaximal(&marginal)? {
            return Ok(false);
        }
    }
    Ok(true)
}
