//! Content-context systems of categorical random variables.
//!
//! A [`System`] holds one [`ValueSet`] per content and one
//! [`BunchDistribution`] per context. The random variable `R_q^c` exists
//! whenever context `c` measures content `q`; all variables sharing a context
//! are jointly distributed (a bunch), while variables sharing a content across
//! contexts (a connection) are not.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{CbdError, Result};
use crate::rational::{format_rational, Rational};

/// Ordered set of value labels. Position in the list defines `1 < 2 < ... < k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueSet {
    labels: Vec<String>,
}

impl ValueSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(CbdError::InvalidValueSet("empty value set".into()));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(CbdError::InvalidValueSet(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { labels })
    }

    /// The `{0, 1}` value set of split variables.
    pub fn binary() -> Self {
        Self {
            labels: vec!["0".into(), "1".into()],
        }
    }

    /// Values `1..=k` labelled by their decimal position.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((1..=k).map(|i| i.to_string()))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }
}

/// A bunch state: one value label per measured content, in the bunch's content order.
pub type State = Vec<String>;

/// Joint distribution of all variables in one context. Only the support is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BunchDistribution {
    context: String,
    contents: Vec<String>,
    masses: BTreeMap<State, Rational>,
}

impl BunchDistribution {
    /// Builds a bunch without validating it. Repeated states are summed and
    /// zero-mass states dropped.
    pub fn new<S: Into<String>>(
        context: impl Into<String>,
        contents: impl IntoIterator<Item = S>,
        masses: impl IntoIterator<Item = (State, Rational)>,
    ) -> Self {
        let mut table: BTreeMap<State, Rational> = BTreeMap::new();
        for (state, mass) in masses {
            *table.entry(state).or_insert_with(Rational::zero) += mass;
        }
        table.retain(|_, m| !m.is_zero());
        Self {
            context: context.into(),
            contents: contents.into_iter().map(Into::into).collect(),
            masses: table,
        }
    }

    pub fn context(&self) -> &str {
        &self.context
    }

    pub fn contents(&self) -> &[String] {
        &self.contents
    }

    pub fn masses(&self) -> &BTreeMap<State, Rational> {
        &self.masses
    }

    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    pub fn total_mass(&self) -> Rational {
        self.masses
            .values()
            .fold(Rational::zero(), |acc, m| acc + m)
    }

    pub fn position(&self, content: &str) -> Option<usize> {
        self.contents.iter().position(|c| c == content)
    }

    pub fn mass_of(&self, state: &[String]) -> Rational {
        self.masses
            .get(state)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Marginal on `subset`, in the order given.
    pub fn marginal<S: AsRef<str>>(&self, subset: &[S]) -> Result<BunchDistribution> {
        let positions = subset
            .iter()
            .map(|q| {
                self.position(q.as_ref())
                    .ok_or_else(|| CbdError::UnknownContent(q.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let masses = self.masses.iter().map(|(state, mass)| {
            let projected = positions.iter().map(|&i| state[i].clone()).collect();
            (projected, mass.clone())
        });
        Ok(BunchDistribution::new(
            self.context.clone(),
            subset.iter().map(|q| q.as_ref().to_string()),
            masses,
        ))
    }
}

/// How a content was computed from other contents by an expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derivation {
    /// `block_of[i]` is the value index of the new content for value `i` of `source`.
    Coarsen {
        source: String,
        block_of: Vec<usize>,
    },
    Join {
        sources: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnknownContent {
        context: String,
        content: String,
    },
    DuplicateContent {
        context: String,
        content: String,
    },
    OrphanContent {
        content: String,
    },
    EmptyContext {
        context: String,
    },
    ArityMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    ValueSetMismatch {
        context: String,
        content: String,
        value: String,
    },
    NegativeMass {
        context: String,
    },
    MassSum {
        context: String,
        sum: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownContent { context, content } => {
                write!(f, "context `{context}` measures undeclared content `{content}`")
            }
            Violation::DuplicateContent { context, content } => {
                write!(f, "context `{context}` lists content `{content}` twice")
            }
            Violation::OrphanContent { content } => {
                write!(f, "content `{content}` is not measured in any context")
            }
            Violation::EmptyContext { context } => {
                write!(f, "context `{context}` measures no contents")
            }
            Violation::ArityMismatch { context, expected, found } => write!(
                f,
                "context `{context}` has a state of arity {found}, expected {expected}"
            ),
            Violation::ValueSetMismatch { context, content, value } => write!(
                f,
                "value-set mismatch: content `{content}` takes value `{value}` in context `{context}`, outside its value set"
            ),
            Violation::NegativeMass { context } => {
                write!(f, "context `{context}` has a negative mass")
            }
            Violation::MassSum { context, sum } => {
                write!(f, "mass sum != 1 in context `{context}` (sum = {sum})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A double-indexed set of random variables `R_q^c`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct System {
    contents: BTreeMap<String, ValueSet>,
    bunches: BTreeMap<String, BunchDistribution>,
    derivations: BTreeMap<String, Derivation>,
}

impl System {
    /// Assembles a system without validating it; see [`validate_system`].
    pub fn new<S: Into<String>>(
        contents: impl IntoIterator<Item = (S, ValueSet)>,
        bunches: impl IntoIterator<Item = BunchDistribution>,
    ) -> Self {
        Self {
            contents: contents.into_iter().map(|(id, v)| (id.into(), v)).collect(),
            bunches: bunches
                .into_iter()
                .map(|b| (b.context.clone(), b))
                .collect(),
            derivations: BTreeMap::new(),
        }
    }

    /// Like [`System::new`] but rejects anything `validate_system` would flag.
    pub fn validated<S: Into<String>>(
        contents: impl IntoIterator<Item = (S, ValueSet)>,
        bunches: impl IntoIterator<Item = BunchDistribution>,
    ) -> Result<Self> {
        let sys = Self::new(contents, bunches);
        let report = validate_system(&sys);
        match report.violations.first() {
            None => Ok(sys),
            Some(v) => Err(CbdError::InvalidDistribution(v.to_string())),
        }
    }

    pub fn contents(&self) -> &BTreeMap<String, ValueSet> {
        &self.contents
    }

    pub fn value_set(&self, content: &str) -> Result<&ValueSet> {
        self.contents
            .get(content)
            .ok_or_else(|| CbdError::UnknownContent(content.to_string()))
    }

    pub fn bunches(&self) -> &BTreeMap<String, BunchDistribution> {
        &self.bunches
    }

    pub fn bunch(&self, context: &str) -> Result<&BunchDistribution> {
        self.bunches
            .get(context)
            .ok_or_else(|| CbdError::UnknownContext(context.to_string()))
    }

    /// Context ids with the ordered content ids each one measures.
    pub fn contexts(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.bunches.iter().map(|(c, b)| (c.as_str(), b.contents()))
    }

    /// Contexts measuring `content`, in id order.
    pub fn contexts_of(&self, content: &str) -> Vec<&str> {
        self.bunches
            .iter()
            .filter(|(_, b)| b.position(content).is_some())
            .map(|(c, _)| c.as_str())
            .collect()
    }

    /// Total number of random variables (content-context pairs).
    pub fn variable_count(&self) -> usize {
        self.bunches.values().map(|b| b.contents.len()).sum()
    }

    pub fn derivation(&self, content: &str) -> Option<&Derivation> {
        self.derivations.get(content)
    }

    pub(crate) fn insert_content(
        &mut self,
        id: String,
        values: ValueSet,
        derivation: Option<Derivation>,
    ) {
        if let Some(d) = derivation {
            self.derivations.insert(id.clone(), d);
        }
        self.contents.insert(id, values);
    }

    pub(crate) fn replace_bunch(&mut self, bunch: BunchDistribution) {
        self.bunches.insert(bunch.context.clone(), bunch);
    }

    /// Subsystem without `context`. Contents measured only there are dropped too.
    pub fn without_context(&self, context: &str) -> Result<System> {
        if !self.bunches.contains_key(context) {
            return Err(CbdError::UnknownContext(context.to_string()));
        }
        let mut sys = self.clone();
        sys.bunches.remove(context);
        sys.drop_orphans();
        Ok(sys)
    }

    /// Subsystem without `content`: every bunch is marginalized onto its other
    /// contents and contexts left empty are dropped.
    pub fn without_content(&self, content: &str) -> Result<System> {
        if !self.contents.contains_key(content) {
            return Err(CbdError::UnknownContent(content.to_string()));
        }
        let mut sys = self.clone();
        sys.contents.remove(content);
        sys.derivations.remove(content);
        let mut bunches = BTreeMap::new();
        for (id, b) in &self.bunches {
            let rest: Vec<&String> = b.contents.iter().filter(|q| *q != content).collect();
            if rest.is_empty() {
                continue;
            }
            bunches.insert(id.clone(), b.marginal(&rest)?);
        }
        sys.bunches = bunches;
        Ok(sys)
    }

    fn drop_orphans(&mut self) {
        let measured: BTreeSet<&String> = self
            .bunches
            .values()
            .flat_map(|b| b.contents.iter())
            .collect();
        let orphans: Vec<String> = self
            .contents
            .keys()
            .filter(|q| !measured.contains(q))
            .cloned()
            .collect();
        for q in orphans {
            self.contents.remove(&q);
            self.derivations.remove(&q);
        }
    }
}

/// Checks the structural and probabilistic conditions on a system.
pub fn validate_system(sys: &System) -> ValidationReport {
    let mut violations = Vec::new();
    let mut measured = BTreeSet::new();
    for (ctx, bunch) in &sys.bunches {
        if bunch.contents.is_empty() {
            violations.push(Violation::EmptyContext {
                context: ctx.clone(),
            });
        }
        let mut seen = BTreeSet::new();
        for q in &bunch.contents {
            measured.insert(q.as_str());
            if !seen.insert(q.as_str()) {
                violations.push(Violation::DuplicateContent {
                    context: ctx.clone(),
                    content: q.clone(),
                });
            }
            if !sys.contents.contains_key(q) {
                violations.push(Violation::UnknownContent {
                    context: ctx.clone(),
                    content: q.clone(),
                });
            }
        }

        let mut mismatches = BTreeSet::new();
        let mut arity_reported = false;
        for state in bunch.masses.keys() {
            if state.len() != bunch.contents.len() {
                if !arity_reported {
                    violations.push(Violation::ArityMismatch {
                        context: ctx.clone(),
                        expected: bunch.contents.len(),
                        found: state.len(),
                    });
                    arity_reported = true;
                }
                continue;
            }
            for (q, value) in bunch.contents.iter().zip(state) {
                if let Some(vs) = sys.contents.get(q) {
                    if vs.index_of(value).is_none() && mismatches.insert((q.clone(), value.clone()))
                    {
                        violations.push(Violation::ValueSetMismatch {
                            context: ctx.clone(),
                            content: q.clone(),
                            value: value.clone(),
                        });
                    }
                }
            }
        }
        if bunch.masses.values().any(|m| m.is_negative()) {
            violations.push(Violation::NegativeMass {
                context: ctx.clone(),
            });
        }
        let total = bunch.total_mass();
        if !total.is_one() {
            violations.push(Violation::MassSum {
                context: ctx.clone(),
                sum: format_rational(&total),
            });
        }
    }
    for q in sys.contents.keys() {
        if !measured.contains(q.as_str()) {
            violations.push(Violation::OrphanContent { content: q.clone() });
        }
    }
    ValidationReport { violations }
}

/// Marginal of a bunch on a subset of its contents.
pub fn bunch_marginal<S: AsRef<str>>(
    bunch: &BunchDistribution,
    subset: &[S],
) -> Result<BunchDistribution> {
    bunch.marginal(subset)
}

/// Distribution of `R_q^c` for every context `c` measuring `q`, as dense
/// vectors over the value set of `q`, in context-id order.
pub fn connection_marginals(sys: &System, q: &str) -> Result<Vec<(String, Vec<Rational>)>> {
    let values = sys.value_set(q)?;
    let mut out = Vec::new();
    for (ctx, bunch) in &sys.bunches {
        let Some(pos) = bunch.position(q) else {
            continue;
        };
        let mut dist = vec![Rational::zero(); values.len()];
        for (state, mass) in &bunch.masses {
            if let Some(i) = state.get(pos).and_then(|v| values.index_of(v)) {
                dist[i] += mass;
            }
        }
        out.push((ctx.clone(), dist));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn st(s: &[&str]) -> State {
        s.iter().map(|x| x.to_string()).collect()
    }

    pub(crate) fn two_by_two() -> System {
        let b1 = BunchDistribution::new(
            "c1",
            ["q1", "q2"],
            [
                (st(&["0", "0"]), ratio(1, 2)),
                (st(&["1", "1"]), ratio(1, 2)),
            ],
        );
        let b2 = BunchDistribution::new(
            "c2",
            ["q1", "q2"],
            [
                (st(&["0", "0"]), ratio(1, 4)),
                (st(&["0", "1"]), ratio(1, 4)),
                (st(&["1", "0"]), ratio(1, 4)),
                (st(&["1", "1"]), ratio(1, 4)),
            ],
        );
        System::new(
            [("q1", ValueSet::binary()), ("q2", ValueSet::binary())],
            [b1, b2],
        )
    }

    #[test]
    fn valid_system_passes() {
        assert!(validate_system(&two_by_two()).is_ok());
    }

    #[test]
    fn mass_sum_violation() {
        let mut sys = two_by_two();
        let b = BunchDistribution::new(
            "c1",
            ["q1", "q2"],
            [
                (st(&["0", "0"]), ratio(1, 2)),
                (st(&["1", "1"]), ratio(2, 5)),
            ],
        );
        sys.replace_bunch(b);
        let report = validate_system(&sys);
        assert_eq!(
            report.violations,
            vec![Violation::MassSum {
                context: "c1".into(),
                sum: "9/10".into()
            }]
        );
        assert!(report.violations[0].to_string().contains("mass sum != 1"));
    }

    #[test]
    fn value_set_mismatch() {
        let mut sys = two_by_two();
        let b = BunchDistribution::new(
            "c2",
            ["q1", "q2"],
            [
                (st(&["2", "0"]), ratio(1, 2)),
                (st(&["1", "1"]), ratio(1, 2)),
            ],
        );
        sys.replace_bunch(b);
        let report = validate_system(&sys);
        assert!(matches!(
            &report.violations[..],
            [Violation::ValueSetMismatch { content, value, .. }] if content == "q1" && value == "2"
        ));
    }

    #[test]
    fn orphans_negative_and_arity() {
        let b = BunchDistribution::new(
            "c1",
            ["q1"],
            [
                (st(&["0"]), ratio(3, 2)),
                (st(&["1"]), ratio(-1, 2)),
                (st(&["0", "1"]), ratio(0, 1)),
            ],
        );
        let b_bad = BunchDistribution::new("c2", ["q1"], [(st(&["0", "1"]), ratio(1, 1))]);
        let sys = System::new(
            [("q1", ValueSet::binary()), ("q9", ValueSet::binary())],
            [b, b_bad],
        );
        let v = validate_system(&sys).violations;
        assert!(v.contains(&Violation::NegativeMass {
            context: "c1".into()
        }));
        assert!(v.contains(&Violation::OrphanContent {
            content: "q9".into()
        }));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::ArityMismatch { context, .. } if context == "c2")));
    }

    #[test]
    fn marginals() {
        let sys = two_by_two();
        let m = bunch_marginal(sys.bunch("c1").unwrap(), &["q1"]).unwrap();
        assert_eq!(m.mass_of(&st(&["0"])), ratio(1, 2));
        assert_eq!(m.mass_of(&st(&["1"])), ratio(1, 2));
        let m = bunch_marginal(sys.bunch("c2").unwrap(), &["q2"]).unwrap();
        assert_eq!(m.mass_of(&st(&["0"])), ratio(1, 2));
        let full = bunch_marginal(sys.bunch("c2").unwrap(), &["q1", "q2"]).unwrap();
        assert_eq!(&full, sys.bunch("c2").unwrap());
        assert_eq!(
            bunch_marginal(sys.bunch("c2").unwrap(), &["nope"]),
            Err(CbdError::UnknownContent("nope".into()))
        );
    }

    #[test]
    fn connection_marginals_order_and_values() {
        let sys = two_by_two();
        let cm = connection_marginals(&sys, "q1").unwrap();
        assert_eq!(cm.len(), 2);
        assert_eq!(cm[0].0, "c1");
        assert_eq!(cm[0].1, cm[1].1);
        assert!(connection_marginals(&sys, "zz").is_err());

        let only_c1 = sys.without_context("c2").unwrap();
        assert_eq!(connection_marginals(&only_c1, "q1").unwrap().len(), 1);
    }

    #[test]
    fn example_s1_connection() {
        let values = ValueSet::numbered(4).unwrap();
        let p = [ratio(3, 5), ratio(1, 10), ratio(1, 10), ratio(1, 5)];
        let q = [ratio(1, 5), ratio(3, 10), ratio(2, 5), ratio(1, 10)];
        let bunch = |ctx: &str, d: &[Rational]| {
            BunchDistribution::new(
                ctx,
                ["1"],
                d.iter()
                    .enumerate()
                    .map(|(i, m)| (vec![(i + 1).to_string()], m.clone())),
            )
        };
        let sys = System::validated([("1", values)], [bunch("1", &p), bunch("2", &q)]).unwrap();
        let cm = connection_marginals(&sys, "1").unwrap();
        assert_eq!(cm[0].1, p.to_vec());
        assert_eq!(cm[1].1, q.to_vec());
    }

    #[test]
    fn content_deletion_marginalizes() {
        let sys = two_by_two().without_content("q2").unwrap();
        assert!(validate_system(&sys).is_ok());
        assert_eq!(sys.bunch("c1").unwrap().contents(), &["q1".to_string()]);
    }
}
