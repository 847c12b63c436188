//! Maximal couplings of binary random variables.
//!
//! For two binary variables with `Pr[=1]` equal to `a` and `b`, the coupling
//! maximizing `Pr[T = T']` puts `min(a, b)` on `11`. For a whole connection
//! the multimaximal coupling does this for every pair at once; it exists and
//! is unique, and is realized by thresholding one uniform variable at each
//! marginal (the comonotone coupling).

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{CbdError, Result};
use crate::rational::{format_rational, is_probability, Rational};

/// A (possibly signed) mass function over joint states of labelled variables.
/// States hold value indices; for binary variables these are 0 and 1.
///
/// Probability couplings have nonnegative masses; quasi-couplings only need
/// their masses to sum to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointMass {
    variables: Vec<String>,
    masses: BTreeMap<Vec<usize>, Rational>,
}

pub type QuasiJointMass = JointMass;

impl JointMass {
    /// Sums repeated states and drops zero masses.
    pub fn new<S: Into<String>>(
        variables: impl IntoIterator<Item = S>,
        masses: impl IntoIterator<Item = (Vec<usize>, Rational)>,
    ) -> Self {
        let mut table: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for (state, m) in masses {
            *table.entry(state).or_insert_with(Rational::zero) += m;
        }
        table.retain(|_, m| !m.is_zero());
        Self {
            variables: variables.into_iter().map(Into::into).collect(),
            masses: table,
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn masses(&self) -> &BTreeMap<Vec<usize>, Rational> {
        &self.masses
    }

    pub fn mass_of(&self, state: &[usize]) -> Rational {
        self.masses
            .get(state)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.masses
            .values()
            .fold(Rational::zero(), |acc, m| acc + m)
    }

    /// Sum of absolute masses.
    pub fn total_variation(&self) -> Rational {
        self.masses
            .values()
            .fold(Rational::zero(), |acc, m| acc + m.abs())
    }

    pub fn is_probability(&self) -> bool {
        self.total().is_one() && self.masses.values().all(|m| !m.is_negative())
    }

    /// `Pr[variable i = 1]`.
    pub fn prob_one(&self, i: usize) -> Rational {
        self.masses
            .iter()
            .filter(|(s, _)| s[i] == 1)
            .fold(Rational::zero(), |acc, (_, m)| acc + m)
    }

    fn is_binary(&self) -> bool {
        self.masses
            .keys()
            .all(|s| s.len() == self.variables.len() && s.iter().all(|&v| v <= 1))
    }
}

#[derive(Serialize)]
struct JointMassJson<'a> {
    variables: &'a [String],
    masses: Vec<StateMassJson>,
}

#[derive(Serialize)]
struct StateMassJson {
    state: Vec<usize>,
    p: String,
}

impl Serialize for JointMass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JointMassJson {
            variables: &self.variables,
            masses: self
                .masses
                .iter()
                .map(|(state, p)| StateMassJson {
                    state: state.clone(),
                    p: format_rational(p),
                })
                .collect(),
        }
        .serialize(s)
    }
}

fn check_probability(p: &Rational) -> Result<()> {
    if is_probability(p) {
        Ok(())
    } else {
        Err(CbdError::InvalidArgument(format!(
            "{} is not a probability",
            format_rational(p)
        )))
    }
}

/// The maximal coupling of two binary variables with `Pr[=1]` equal to `a` and `b`.
pub fn maximal_coupling_pair(a: &Rational, b: &Rational) -> Result<JointMass> {
    check_probability(a)?;
    check_probability(b)?;
    let both = a.min(b).clone();
    let either = a.max(b).clone();
    Ok(JointMass::new(
        ["1", "2"],
        [
            (vec![1, 1], both.clone()),
            (vec![1, 0], a - &both),
            (vec![0, 1], b - &both),
            (vec![0, 0], Rational::one() - either),
        ],
    ))
}

/// The unique multimaximal coupling of a binary connection, given
/// `(context id, Pr[=1])` per variable. Coordinates follow the input order.
///
/// With marginals sorted as `p(1) <= ... <= p(n)`, the support is the `n + 1`
/// threshold states in which exactly the `j` largest marginals are 1; that
/// state gets `p(n-j+1) - p(n-j)`, with `p(0) = 0` and `p(n+1) = 1`. Ties are
/// ordered by context id; tied thresholds get zero mass, so the result does
/// not depend on the tie order.
pub fn multimaximal_coupling<S: AsRef<str>>(marginals: &[(S, Rational)]) -> Result<JointMass> {
    if marginals.is_empty() {
        return Err(CbdError::InvalidArgument("empty connection".into()));
    }
    for (_, p) in marginals {
        check_probability(p)?;
    }
    let n = marginals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        marginals[i]
            .1
            .cmp(&marginals[j].1)
            .then_with(|| marginals[i].0.as_ref().cmp(marginals[j].0.as_ref()))
    });

    let mut masses = Vec::with_capacity(n + 1);
    for ones in 0..=n {
        let upper = if ones == 0 {
            Rational::one()
        } else {
            marginals[order[n - ones]].1.clone()
        };
        let lower = if ones == n {
            Rational::zero()
        } else {
            marginals[order[n - ones - 1]].1.clone()
        };
        let mut state = vec![0; n];
        for &i in &order[n - ones..] {
            state[i] = 1;
        }
        masses.push((state, upper - lower));
    }
    Ok(JointMass::new(
        marginals.iter().map(|(c, _)| c.as_ref().to_string()),
        masses,
    ))
}

/// True when every pair of variables attains `Pr[both = 1] = min` of its
/// marginals, i.e. every pair is maximally coupled.
pub fn is_multimaximal(j: &JointMass) -> Result<bool> {
    if !j.is_binary() {
        return Err(CbdError::InvalidArgument(
            "multimaximality needs binary variables".into(),
        ));
    }
    let n = j.variables.len();
    let ones: Vec<Rational> = (0..n).map(|i| j.prob_one(i)).collect();
    for a in 0..n {
        for b in a + 1..n {
            let both = j
                .masses
                .iter()
                .filter(|(s, _)| s[a] == 1 && s[b] == 1)
                .fold(Rational::zero(), |acc, (_, m)| acc + m);
            if both != ones[a].clone().min(ones[b].clone()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Exact marginal on the coordinates `idx`, in that order.
pub fn joint_marginal(j: &JointMass, idx: &[usize]) -> Result<JointMass> {
    if idx.is_empty() {
        return Err(CbdError::InvalidArgument("empty index set".into()));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= j.variables.len()) {
        return Err(CbdError::InvalidArgument(format!(
            "index {bad} out of range"
        )));
    }
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != idx.len() {
        return Err(CbdError::InvalidArgument("repeated index".into()));
    }
    Ok(JointMass::new(
        idx.iter().map(|&i| j.variables[i].clone()),
        j.masses
            .iter()
            .map(|(s, m)| (idx.iter().map(|&i| s[i]).collect(), m.clone())),
    ))
}
