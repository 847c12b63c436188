//! Expansion of a system by contents computed from existing ones: joining
//! several contents into one, or coarsening one content by lumping values.

use std::collections::BTreeSet;

use crate::error::{CbdError, Result};
use crate::system::{BunchDistribution, Derivation, System, ValueSet};

/// Default upper bound on `k` for [`PartitionScheme::All`] (Bell numbers grow fast).
pub const DEFAULT_MAX_ALL_PARTITIONS_K: usize = 10;

/// A partition of the value indices `0..k` into at least two blocks.
///
/// Blocks are kept sorted internally and ordered by their smallest element,
/// so equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    k: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(k: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let bad = |m: String| Err(CbdError::InvalidPartition(m));
        if blocks.len() < 2 {
            return bad("a partition needs at least two blocks".into());
        }
        let mut seen = vec![false; k];
        let mut blocks = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return bad("empty block".into());
            }
            block.sort_unstable();
            for &v in block.iter() {
                if v >= k {
                    return bad(format!("value index {v} out of range for {k} values"));
                }
                if seen[v] {
                    return bad(format!("value index {v} appears in two blocks"));
                }
                seen[v] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return bad(format!("value index {missing} is not covered"));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { k, blocks })
    }

    /// Parses the `"1,2|3|4,5"` syntax against a value set.
    pub fn parse(text: &str, values: &ValueSet) -> Result<Self> {
        let blocks = text
            .split('|')
            .map(|block| {
                block
                    .split(',')
                    .map(|label| {
                        let label = label.trim();
                        values.index_of(label).ok_or_else(|| {
                            CbdError::InvalidPartition(format!("unknown value `{label}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values.len(), blocks)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// `block_of()[v]` is the block index holding value `v`.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for (b, block) in self.blocks.iter().enumerate() {
            for &v in block {
                out[v] = b;
            }
        }
        out
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.len() == self.k
    }

    /// Canonical text form, e.g. `"1,4|2,5|3"`.
    pub fn signature(&self, values: &ValueSet) -> String {
        self.blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&v| values.label(v))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    fn block_labels(&self, values: &ValueSet) -> Vec<String> {
        self.blocks
            .iter()
            .map(|b| {
                let inner: Vec<&str> = b.iter().map(|&v| values.label(v)).collect();
                format!("{{{}}}", inner.join(","))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionScheme {
    /// Blocks of consecutive values only.
    Interval,
    /// Every set partition.
    All,
}

/// Partitions of a value set with at least two blocks, in a fixed order.
pub fn enumerate_partitions(values: &ValueSet, scheme: PartitionScheme) -> Result<Vec<Partition>> {
    enumerate_partitions_capped(values, scheme, DEFAULT_MAX_ALL_PARTITIONS_K)
}

pub fn enumerate_partitions_capped(
    values: &ValueSet,
    scheme: PartitionScheme,
    max_all_k: usize,
) -> Result<Vec<Partition>> {
    let k = values.len();
    if k < 2 {
        return Err(CbdError::InvalidArgument(
            "partitions need at least two values".into(),
        ));
    }
    match scheme {
        PartitionScheme::Interval => {
            if k > 30 {
                return Err(CbdError::InvalidArgument(format!(
                    "{k} values is too many for interval partitions"
                )));
            }
            let mut out = Vec::with_capacity((1usize << (k - 1)) - 1);
            for cuts in 1u64..(1u64 << (k - 1)) {
                let mut blocks = vec![vec![0]];
                for v in 1..k {
                    if cuts >> (v - 1) & 1 == 1 {
                        blocks.push(Vec::new());
                    }
                    blocks.last_mut().unwrap().push(v);
                }
                out.push(Partition::new(k, blocks)?);
            }
            Ok(out)
        }
        PartitionScheme::All => {
            if k > max_all_k {
                return Err(CbdError::InvalidArgument(format!(
                    "{k} values exceeds the cap of {max_all_k} for enumerating all partitions"
                )));
            }
            let mut out = Vec::new();
            let mut growth = vec![0usize; k];
            restricted_growth(&mut growth, 1, 0, &mut out);
            Ok(out)
        }
    }
}

// Restricted growth strings: growth[i] <= max(growth[..i]) + 1.
fn restricted_growth(growth: &mut Vec<usize>, i: usize, max: usize, out: &mut Vec<Partition>) {
    let k = growth.len();
    if i == k {
        if max == 0 {
            return;
        }
        let mut blocks = vec![Vec::new(); max + 1];
        for (v, &b) in growth.iter().enumerate() {
            blocks[b].push(v);
        }
        out.push(Partition { k, blocks });
        return;
    }
    for b in 0..=max + 1 {
        growth[i] = b;
        restricted_growth(growth, i + 1, max.max(b), out);
    }
}

/// Label of a joined value: concatenation when every part is one character
/// (`"0","1"` -> `"01"`), a parenthesized list otherwise.
fn joined_label(parts: &[&str]) -> String {
    if parts.iter().all(|p| p.chars().count() == 1) {
        parts.concat()
    } else {
        format!("({})", parts.join(","))
    }
}

/// Adds `new_q` whose value is the tuple of the values of `qs`, in every
/// context measuring all of `qs`.
pub fn expand_join<S: AsRef<str>>(sys: &System, qs: &[S], new_q: &str) -> Result<System> {
    if qs.len() < 2 {
        return Err(CbdError::InvalidArgument(
            "joining needs at least two contents".into(),
        ));
    }
    let qs: Vec<&str> = qs.iter().map(AsRef::as_ref).collect();
    if qs.iter().collect::<BTreeSet<_>>().len() != qs.len() {
        return Err(CbdError::InvalidArgument(
            "cannot join a content with itself".into(),
        ));
    }
    if sys.contents().contains_key(new_q) {
        return Err(CbdError::IdCollision(new_q.to_string()));
    }
    let value_sets = qs
        .iter()
        .map(|q| sys.value_set(q))
        .collect::<Result<Vec<_>>>()?;

    let mut combos: Vec<Vec<&str>> = vec![Vec::new()];
    for vs in &value_sets {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                vs.labels().iter().map(move |l| {
                    let mut next = prefix.clone();
                    next.push(l.as_str());
                    next
                })
            })
            .collect();
    }
    let joined = ValueSet::new(combos.iter().map(|c| joined_label(c)))?;

    let mut out = sys.clone();
    let mut touched = 0;
    for bunch in sys.bunches().values() {
        let positions: Option<Vec<usize>> = qs.iter().map(|q| bunch.position(q)).collect();
        let Some(positions) = positions else { continue };
        touched += 1;
        let masses = bunch.masses().iter().map(|(state, m)| {
            let parts: Vec<&str> = positions.iter().map(|&i| state[i].as_str()).collect();
            let mut next = state.clone();
            next.push(joined_label(&parts));
            (next, m.clone())
        });
        let contents = bunch.contents().iter().cloned().chain([new_q.to_string()]);
        out.replace_bunch(BunchDistribution::new(bunch.context(), contents, masses));
    }
    if touched == 0 {
        return Err(CbdError::InvalidArgument(format!(
            "no context measures all of {qs:?}"
        )));
    }
    out.insert_content(
        new_q.to_string(),
        joined,
        Some(Derivation::Join {
            sources: qs.iter().map(|q| q.to_string()).collect(),
        }),
    );
    Ok(out)
}

/// Adds `new_q` whose value is the block of `q`'s value under `part`, in every
/// context measuring `q`.
pub fn expand_coarsen(sys: &System, q: &str, part: &Partition, new_q: &str) -> Result<System> {
    let values = sys.value_set(q)?;
    if part.k() != values.len() {
        return Err(CbdError::InvalidPartition(format!(
            "partition covers {} values but `{q}` has {}",
            part.k(),
            values.len()
        )));
    }
    if sys.contents().contains_key(new_q) {
        return Err(CbdError::IdCollision(new_q.to_string()));
    }
    let labels = part.block_labels(values);
    let block_of = part.block_of();
    let mut out = sys.clone();
    for bunch in sys.bunches().values() {
        let Some(pos) = bunch.position(q) else {
            continue;
        };
        let masses = bunch.masses().iter().map(|(state, m)| {
            let mut next = state.clone();
            let label = values
                .index_of(&state[pos])
                .map(|v| labels[block_of[v]].clone())
                .unwrap_or_else(|| state[pos].clone());
            next.push(label);
            (next, m.clone())
        });
        let contents = bunch.contents().iter().cloned().chain([new_q.to_string()]);
        out.replace_bunch(BunchDistribution::new(bunch.context(), contents, masses));
    }
    out.insert_content(
        new_q.to_string(),
        ValueSet::new(labels)?,
        Some(Derivation::Coarsen {
            source: q.to_string(),
            block_of,
        }),
    );
    Ok(out)
}

/// Id generated for the coarsening of `q` by `part`.
pub fn coarsening_id(q: &str, part: &Partition, values: &ValueSet) -> String {
    format!("{q}[{}]", part.signature(values))
}

/// Adds one coarsening of `q` per partition of its value set. The all-singletons
/// partition reproduces `q` and ids that already exist are skipped, so the
/// expansion is idempotent.
pub fn expand_all_coarsenings(sys: &System, q: &str, scheme: PartitionScheme) -> Result<System> {
    let values = sys.value_set(q)?.clone();
    let mut out = sys.clone();
    for part in enumerate_partitions(&values, scheme)? {
        if part.is_singletons() {
            continue;
        }
        let id = coarsening_id(q, &part, &values);
        if out.contents().contains_key(&id) {
            continue;
        }
        out = expand_coarsen(&out, q, &part, &id)?;
    }
    Ok(out)
}
