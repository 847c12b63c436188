//! Dichotomizations, split labels, and the canonical (all-binary) split
//! representation of a system.
//!
//! A split `D_{qW}` of content `q` is 1 when the value of `R_q` lies in `W`.
//! `W` and its complement give the same variable up to relabeling, so every
//! split is named by the canonical one of the two: the smaller set, or the
//! lexicographically first under the value order when both have equal size.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{CbdError, Result};
use crate::rational::Rational;
use crate::system::{BunchDistribution, Derivation, System, ValueSet};

/// A split of `content` by the canonical value subset `subset` (value indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SplitLabel {
    content: String,
    subset: Vec<usize>,
    labels: Vec<String>,
}

impl SplitLabel {
    /// Builds the label for `subset`, canonicalizing it first.
    pub fn new(content: &str, subset: &[usize], values: &ValueSet) -> Result<Self> {
        let subset = canonical_subset(subset, values.len())?;
        let labels = subset
            .iter()
            .map(|&v| values.label(v).to_string())
            .collect();
        Ok(Self {
            content: content.to_string(),
            subset,
            labels,
        })
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Rendered id, e.g. `q{1,2}`.
    pub fn id(&self) -> String {
        format!("{}{{{}}}", self.content, self.labels.join(","))
    }

    pub fn contains(&self, value: usize) -> bool {
        self.subset.binary_search(&value).is_ok()
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Returns `w` or its complement in `0..k`, whichever is canonical.
pub fn canonical_subset(w: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut w = w.to_vec();
    w.sort_unstable();
    w.dedup();
    if w.is_empty() || w.len() >= k {
        return Err(CbdError::InvalidSubset(format!(
            "{w:?} is not a nonempty proper subset of {k} values"
        )));
    }
    if let Some(&v) = w.iter().find(|&&v| v >= k) {
        return Err(CbdError::InvalidSubset(format!(
            "value index {v} out of range"
        )));
    }
    let complement: Vec<usize> = (0..k).filter(|v| w.binary_search(v).is_err()).collect();
    let keep = match w.len().cmp(&complement.len()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => w < complement,
    };
    Ok(if keep { w } else { complement })
}

/// Every canonical value subset of a `k`-element set: `2^(k-1) - 1` of them,
/// ordered by size and then lexicographically.
pub fn enumerate_dichotomies(values: &ValueSet) -> Result<Vec<Vec<usize>>> {
    let k = values.len();
    if k < 2 {
        return Err(CbdError::InvalidArgument(
            "dichotomies need at least two values".into(),
        ));
    }
    if k > 30 {
        return Err(CbdError::InvalidArgument(format!(
            "{k} values is too many to dichotomize"
        )));
    }
    let mut out = Vec::with_capacity((1usize << (k - 1)) - 1);
    for size in 1..=k / 2 {
        for subset in combinations(k, size) {
            if canonical_subset(&subset, k)? == subset {
                out.push(subset);
            }
        }
    }
    Ok(out)
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            if n - v < size - cur.len() {
                break;
            }
            cur.push(v);
            go(v + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::with_capacity(size), &mut out);
    out
}

/// The value detectors `D_{q{v}}` of `q`; a binary content gets a single split.
pub fn split_representation(q: &str, values: &ValueSet) -> Result<Vec<SplitLabel>> {
    match values.len() {
        0 | 1 => Err(CbdError::InvalidArgument(format!(
            "content `{q}` needs at least two values to be split"
        ))),
        2 => Ok(vec![SplitLabel::new(q, &[0], values)?]),
        k => (0..k).map(|v| SplitLabel::new(q, &[v], values)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPolicy {
    /// One detector per value.
    Detectors,
    /// Every dichotomy of every content.
    AllSplits,
}

/// A system whose contents are splits, all with value set `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalSystem {
    system: System,
    splits: BTreeMap<String, SplitLabel>,
}

impl CanonicalSystem {
    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn into_system(self) -> System {
        self.system
    }

    pub fn splits(&self) -> &BTreeMap<String, SplitLabel> {
        &self.splits
    }

    pub fn split(&self, id: &str) -> Option<&SplitLabel> {
        self.splits.get(id)
    }
}

impl std::ops::Deref for CanonicalSystem {
    type Target = System;

    fn deref(&self) -> &System {
        &self.system
    }
}

/// The content a split is ultimately a dichotomy of, with the map from that
/// root content's value indices to this content's value indices.
fn resolve_root<'a>(sys: &'a System, q: &'a str) -> Result<(&'a str, Vec<usize>)> {
    let k = sys.value_set(q)?.len();
    let mut root = q;
    let mut map: Vec<usize> = (0..k).collect();
    while let Some(Derivation::Coarsen { source, block_of }) = sys.derivation(root) {
        if !sys.contents().contains_key(source) {
            break;
        }
        map = block_of.iter().map(|&b| map[b]).collect();
        root = source;
    }
    Ok((root, map))
}

/// Splits generated by one content: each with the set of this content's
/// values that map to 1.
fn content_splits(
    sys: &System,
    q: &str,
    policy: SplitPolicy,
) -> Result<Vec<(SplitLabel, Vec<bool>)>> {
    let own = sys.value_set(q)?;
    let (root, map) = resolve_root(sys, q)?;
    let root_values = sys.value_set(root)?;
    let own_subsets: Vec<Vec<usize>> = match policy {
        SplitPolicy::Detectors => split_representation(q, own)?
            .into_iter()
            .map(|s| s.subset().to_vec())
            .collect(),
        SplitPolicy::AllSplits => enumerate_dichotomies(own)?,
    };
    let mut out: Vec<(SplitLabel, Vec<bool>)> = Vec::with_capacity(own_subsets.len());
    for subset in own_subsets {
        let preimage: Vec<usize> = (0..root_values.len())
            .filter(|&r| subset.contains(&map[r]))
            .collect();
        let label = SplitLabel::new(root, &preimage, root_values)?;
        let mut indicator = vec![false; own.len()];
        for (r, &v) in map.iter().enumerate() {
            if label.contains(r) {
                indicator[v] = true;
            }
        }
        if !out.iter().any(|(l, _)| *l == label) {
            out.push((label, indicator));
        }
    }
    Ok(out)
}

/// Replaces every variable of `sys` by its splits. Bunch masses are pushed
/// forward, so no bunch gains support; duplicate splits produced by
/// overlapping coarsenings of one content are merged.
pub fn canonicalize(sys: &System, policy: SplitPolicy) -> Result<CanonicalSystem> {
    let mut per_content = BTreeMap::new();
    let mut splits = BTreeMap::new();
    for q in sys.contents().keys() {
        let generated = content_splits(sys, q, policy)?;
        for (label, _) in &generated {
            splits.insert(label.id(), label.clone());
        }
        per_content.insert(q.as_str(), generated);
    }

    let mut bunches = Vec::with_capacity(sys.bunches().len());
    for bunch in sys.bunches().values() {
        // split id -> (position of the generating content, indicator over its values)
        let mut columns: BTreeMap<String, (usize, &ValueSet, &[bool])> = BTreeMap::new();
        for (pos, q) in bunch.contents().iter().enumerate() {
            let values = sys.value_set(q)?;
            for (label, indicator) in &per_content[q.as_str()] {
                columns
                    .entry(label.id())
                    .or_insert((pos, values, indicator));
            }
        }
        let mut masses: Vec<(Vec<String>, Rational)> = Vec::with_capacity(bunch.support_size());
        for (state, mass) in bunch.masses() {
            if mass.is_zero() {
                continue;
            }
            let mut binary = Vec::with_capacity(columns.len());
            for (pos, values, indicator) in columns.values() {
                let v = values.index_of(&state[*pos]).ok_or_else(|| {
                    CbdError::InvalidDistribution(format!(
                        "value `{}` outside the value set in context `{}`",
                        state[*pos],
                        bunch.context()
                    ))
                })?;
                binary.push(if indicator[v] { "1" } else { "0" }.to_string());
            }
            masses.push((binary, mass.clone()));
        }
        bunches.push(BunchDistribution::new(
            bunch.context(),
            columns.keys().cloned(),
            masses,
        ));
    }

    let system = System::new(
        splits.keys().map(|id| (id.clone(), ValueSet::binary())),
        bunches,
    );
    Ok(CanonicalSystem { system, splits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::system::validate_system;
    use crate::transform::{expand_all_coarsenings, expand_join, PartitionScheme};

    fn v(k: usize) -> ValueSet {
        ValueSet::numbered(k).unwrap()
    }

    #[test]
    fn canonical_subset_rule() {
        assert_eq!(canonical_subset(&[0, 1, 2], 5).unwrap(), vec![3, 4]);
        assert_eq!(canonical_subset(&[2, 3], 4).unwrap(), vec![0, 1]);
        assert_eq!(canonical_subset(&[0, 1], 4).unwrap(), vec![0, 1]);
        assert_eq!(canonical_subset(&[1], 2).unwrap(), vec![0]);
        assert!(canonical_subset(&[], 4).is_err());
        assert!(canonical_subset(&[0, 1, 2, 3], 4).is_err());
        for k in 2..7 {
            for w in enumerate_dichotomies(&v(k)).unwrap() {
                assert_eq!(canonical_subset(&w, k).unwrap(), w);
            }
        }
    }

    #[test]
    fn dichotomy_counts() {
        assert_eq!(enumerate_dichotomies(&v(5)).unwrap().len(), 15);
        assert_eq!(enumerate_dichotomies(&v(2)).unwrap(), vec![vec![0]]);
        assert_eq!(
            enumerate_dichotomies(&v(3)).unwrap(),
            vec![vec![0], vec![1], vec![2]]
        );
        assert!(enumerate_dichotomies(&v(1)).is_err());
        for k in 2..10 {
            assert_eq!(
                enumerate_dichotomies(&v(k)).unwrap().len(),
                (1 << (k - 1)) - 1
            );
        }
    }

    #[test]
    fn split_representations() {
        let five = ValueSet::new(["-2", "-1", "0", "1", "2"]).unwrap();
        let ids: Vec<String> = split_representation("q", &five)
            .unwrap()
            .iter()
            .map(|s| s.id())
            .collect();
        assert_eq!(ids, ["q{-2}", "q{-1}", "q{0}", "q{1}", "q{2}"]);
        assert_eq!(split_representation("q", &v(2)).unwrap().len(), 1);
        assert_eq!(split_representation("q", &v(3)).unwrap().len(), 3);
        assert!(split_representation("q", &v(1)).is_err());
    }

    fn two_context(p: &[Rational], q: &[Rational]) -> System {
        let bunch = |ctx: &str, d: &[Rational]| {
            BunchDistribution::new(
                ctx,
                ["1"],
                d.iter()
                    .enumerate()
                    .map(|(i, m)| (vec![(i + 1).to_string()], m.clone())),
            )
        };
        System::new([("1", v(p.len()))], [bunch("1", p), bunch("2", q)])
    }

    #[test]
    fn all_splits_count_and_support() {
        let p = [ratio(3, 5), ratio(1, 10), ratio(1, 10), ratio(1, 5)];
        let q = [ratio(1, 5), ratio(3, 10), ratio(2, 5), ratio(1, 10)];
        let sys = two_context(&p, &q);
        let cs = canonicalize(&sys, SplitPolicy::AllSplits).unwrap();
        assert_eq!(cs.contents().len(), 7);
        assert_eq!(cs.bunches().len(), 2);
        assert!(validate_system(&cs).is_ok());
        for (ctx, b) in cs.bunches() {
            assert!(b.support_size() <= sys.bunch(ctx).unwrap().support_size());
        }
        let w123 = cs.bunch("1").unwrap().marginal(&["1{4}"]).unwrap();
        assert_eq!(w123.mass_of(&["1".to_string()]), ratio(1, 5));
    }

    #[test]
    fn all_splits_match_expansion_route() {
        let d = [
            ratio(1, 5),
            ratio(1, 10),
            ratio(3, 10),
            ratio(1, 4),
            ratio(3, 20),
        ];
        let e = [
            ratio(1, 10),
            ratio(1, 10),
            ratio(1, 5),
            ratio(1, 5),
            ratio(2, 5),
        ];
        let sys = two_context(&d, &e);
        let direct = canonicalize(&sys, SplitPolicy::AllSplits).unwrap();
        let expanded = expand_all_coarsenings(&sys, "1", PartitionScheme::All).unwrap();
        assert_eq!(expanded.contents().len(), 51);
        let via_expansion = canonicalize(&expanded, SplitPolicy::Detectors).unwrap();
        assert_eq!(direct, via_expansion);
        assert_eq!(direct.contents().len(), 15);
    }

    #[test]
    fn example_three_joined() {
        let b = ValueSet::binary();
        let st = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let sys = System::new(
            [("1", b.clone()), ("2", b.clone()), ("3", b)],
            [
                BunchDistribution::new(
                    "1",
                    ["1", "2"],
                    [
                        (st(&["0", "0"]), ratio(1, 2)),
                        (st(&["1", "1"]), ratio(1, 2)),
                    ],
                ),
                BunchDistribution::new(
                    "2",
                    ["1", "2", "3"],
                    [
                        (st(&["0", "1", "0"]), ratio(1, 3)),
                        (st(&["1", "0", "1"]), ratio(2, 3)),
                    ],
                ),
                BunchDistribution::new(
                    "3",
                    ["2", "3"],
                    [
                        (st(&["0", "1"]), ratio(1, 2)),
                        (st(&["1", "0"]), ratio(1, 2)),
                    ],
                ),
            ],
        );
        let joined = expand_join(&sys, &["1", "2"], "12").unwrap();
        let cs = canonicalize(&joined, SplitPolicy::Detectors).unwrap();
        let ids: Vec<&String> = cs.contents().keys().collect();
        assert_eq!(
            ids,
            ["12{00}", "12{01}", "12{10}", "12{11}", "1{0}", "2{0}", "3{0}"]
        );
        let b2 = cs.bunch("2").unwrap();
        assert_eq!(b2.contents().len(), 7);
        assert_eq!(cs.contexts_of("12{00}"), vec!["1", "2"]);
        // exactly one detector of the joined content fires in every state
        let dets: Vec<usize> = (0..b2.contents().len())
            .filter(|&i| b2.contents()[i].starts_with("12{"))
            .collect();
        for state in b2.masses().keys() {
            assert_eq!(dets.iter().filter(|&&i| state[i] == "1").count(), 1);
        }
    }

    #[test]
    fn binary_system_is_isomorphic() {
        let b = ValueSet::binary();
        let st = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let sys = System::new(
            [("a", b.clone()), ("b", b)],
            [BunchDistribution::new(
                "c",
                ["a", "b"],
                [
                    (st(&["0", "1"]), ratio(1, 3)),
                    (st(&["1", "1"]), ratio(2, 3)),
                ],
            )],
        );
        for policy in [SplitPolicy::Detectors, SplitPolicy::AllSplits] {
            let cs = canonicalize(&sys, policy).unwrap();
            assert_eq!(cs.contents().len(), 2);
            let bunch = cs.bunch("c").unwrap();
            // value 1 of the split means "value is 0", the canonical half
            assert_eq!(bunch.mass_of(&st(&["1", "0"])), ratio(1, 3));
            assert_eq!(bunch.mass_of(&st(&["0", "0"])), ratio(2, 3));
        }
    }

    #[test]
    fn coarsening_splits_merge_into_root() {
        let d = [ratio(1, 2), ratio(1, 4), ratio(1, 4)];
        let sys = two_context(&d, &d);
        let expanded = expand_all_coarsenings(&sys, "1", PartitionScheme::Interval).unwrap();
        let cs = canonicalize(&expanded, SplitPolicy::Detectors).unwrap();
        let ids: Vec<&String> = cs.contents().keys().collect();
        assert_eq!(ids, ["1{1}", "1{2}", "1{3}"]);
    }
}
