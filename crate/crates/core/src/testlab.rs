//! Seeded instance generators and the oracle sweep that tries to break the
//! two-connection theory.
//!
//! Every generator takes an explicit seed and uses ChaCha8, so a
//! `(parameters, seed)` pair always yields the same instance on every
//! platform. Sweep instance `i` draws from stream `i` of the sweep seed, which
//! lets the sweep fan out across threads and still merge in index order.

use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::enumerate_dichotomies;
use crate::error::{CbdError, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::rational::{format_rational, int, ratio, sum, Rational};
use crate::system::{BunchDistribution, System, ValueSet};
use crate::two_connection::{
    construct_12_coupling, coupling_range, lp_cross_check, nominally_dominates,
    reduced_min_total_variation, CouplingMatrix, MaxSplit, TwoConnectionInstance,
};

/// Largest denominator used by sweep instances.
pub const SWEEP_MAX_DENOMINATOR: u64 = 30;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A uniformly random composition of `total` into `parts` nonnegative integers
/// (stars and bars).
pub fn random_composition<R: Rng>(rng: &mut R, total: u64, parts: usize) -> Vec<u64> {
    assert!(parts > 0, "a composition needs at least one part");
    let mut cuts: Vec<u64> = (0..parts - 1).map(|_| rng.gen_range(0..=total)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

fn to_distribution(units: &[u64], den: u64) -> Vec<Rational> {
    units.iter().map(|&u| ratio(u as i64, den as i64)).collect()
}

fn check_params(k: usize, max_denominator: u64) -> Result<()> {
    if k < 2 {
        return Err(CbdError::InvalidArgument("k must be at least 2".into()));
    }
    if max_denominator < k as u64 {
        return Err(CbdError::InvalidArgument(format!(
            "max_denominator {max_denominator} is below k = {k}"
        )));
    }
    Ok(())
}

fn two_connection_from<R: Rng>(rng: &mut R, k: usize, den: u64) -> TwoConnectionInstance {
    let p = random_composition(rng, den, k);
    let q = random_composition(rng, den, k);
    TwoConnectionInstance::new(to_distribution(&p, den), to_distribution(&q, den))
        .expect("compositions sum to the denominator")
}

/// A random pair of distributions on `k` values, every entry a multiple of
/// `1 / max_denominator`.
pub fn random_two_connection(
    k: usize,
    max_denominator: u64,
    seed: u64,
) -> Result<TwoConnectionInstance> {
    check_params(k, max_denominator)?;
    Ok(two_connection_from(
        &mut rng_for(seed, 0),
        k,
        max_denominator,
    ))
}

fn dominating_from<R: Rng>(rng: &mut R, k: usize, den: u64) -> TwoConnectionInstance {
    let p = random_composition(rng, den, k);
    let j = rng.gen_range(0..k);
    let mut q = p.clone();
    let mut moved = 0;
    for (i, qi) in q.iter_mut().enumerate() {
        if i != j {
            let take = rng.gen_range(0..=*qi);
            *qi -= take;
            moved += take;
        }
    }
    q[j] += moved;
    let (p, q) = (to_distribution(&p, den), to_distribution(&q, den));
    let (p, q) = if rng.gen_bool(0.5) { (p, q) } else { (q, p) };
    TwoConnectionInstance::new(p, q).expect("mass is only moved around")
}

/// A random instance in which one side nominally dominates the other: mass
/// only ever moves into a single exceptional value.
pub fn random_dominating(
    k: usize,
    max_denominator: u64,
    seed: u64,
) -> Result<TwoConnectionInstance> {
    check_params(k, max_denominator)?;
    Ok(dominating_from(&mut rng_for(seed, 0), k, max_denominator))
}

/// Boundary instances: identical distributions, forced ties, or zeros.
fn boundary_from<R: Rng>(rng: &mut R, k: usize, den: u64, kind: usize) -> TwoConnectionInstance {
    let mk = |p: &[u64], q: &[u64]| {
        TwoConnectionInstance::new(to_distribution(p, den), to_distribution(q, den))
            .expect("compositions sum to the denominator")
    };
    match kind {
        0 => {
            let p = random_composition(rng, den, k);
            mk(&p, &p)
        }
        1 => {
            let p = random_composition(rng, den, k);
            let mut q = random_composition(rng, den, k);
            let mut idx: Vec<usize> = (0..k).collect();
            idx.shuffle(rng);
            let ties = rng.gen_range(1..k);
            for &t in &idx[..ties] {
                q[t] = p[t];
            }
            let free = &idx[ties..];
            let fixed: u64 = idx[..ties].iter().map(|&t| p[t]).sum();
            let rest = random_composition(rng, den - fixed, free.len());
            for (&i, v) in free.iter().zip(rest) {
                q[i] = v;
            }
            mk(&p, &q)
        }
        _ => {
            let with_zeros = |rng: &mut R| {
                let zeros = rng.gen_range(1..k);
                let mut v = random_composition(rng, den, k - zeros);
                v.extend(std::iter::repeat_n(0, zeros));
                v.shuffle(rng);
                v
            };
            let p = with_zeros(rng);
            let q = with_zeros(rng);
            mk(&p, &q)
        }
    }
}

/// Instance `index` of a sweep: `k` cycles through the range, every tenth
/// instance is a boundary case, and the rest are unconstrained random pairs.
pub fn sweep_instance(
    k_range: &RangeInclusive<usize>,
    seed: u64,
    index: usize,
) -> TwoConnectionInstance {
    let ks: Vec<usize> = k_range.clone().collect();
    let k = ks[index % ks.len()];
    let mut rng = rng_for(seed, index as u64);
    let den = rng.gen_range(k as u64..=SWEEP_MAX_DENOMINATOR.max(k as u64));
    if index % 10 == 9 {
        boundary_from(&mut rng, k, den, (index / 10) % 3)
    } else {
        two_connection_from(&mut rng, k, den)
    }
}

/// Everything the sweep asks of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceCheck {
    pub dominance: bool,
    pub lp_12: bool,
    pub lp_all: bool,
    /// The L1-minimal quasi-coupling has total variation one.
    pub degree_zero: bool,
    /// Feasible instances only: the 1-2 feasible set is exactly the
    /// constructed coupling, which lies on one row or column off the diagonal,
    /// and the all-splits witness meets every split equality.
    pub construction_ok: bool,
}

impl InstanceCheck {
    pub fn agrees(&self) -> bool {
        self.lp_12 == self.dominance
            && self.lp_all == self.dominance
            && self.degree_zero == self.dominance
            && self.construction_ok
    }
}

/// `Pr[S_W^1 = S_W^2 = 1]` equals the split value for every canonical `W`,
/// and the row and column sums are `p` and `q`.
pub fn satisfies_all_splits(c: &CouplingMatrix, inst: &TwoConnectionInstance) -> bool {
    let k = inst.k();
    let rows = (0..k).all(|i| sum(&c.rows()[i]) == inst.p()[i]);
    let cols = (0..k).all(|j| sum(c.rows().iter().map(|r| &r[j])) == inst.q()[j]);
    let values = ValueSet::numbered(k).expect("k >= 2");
    let splits = enumerate_dichotomies(&values)
        .expect("k >= 2")
        .into_iter()
        .all(|w| {
            let block = sum(w.iter().flat_map(|&i| w.iter().map(move |&j| c.get(i, j))));
            let ps = sum(w.iter().map(|&i| &inst.p()[i]));
            let qs = sum(w.iter().map(|&i| &inst.q()[i]));
            block == ps.min(qs)
        });
    rows && cols && splits
}

fn witness_matrix(k: usize, v: &crate::solver::Verdict) -> Option<CouplingMatrix> {
    let w = v.witness.as_ref()?;
    let mut r = vec![vec![Rational::zero(); k]; k];
    for (s, m) in w.masses() {
        r[s[0]][s[1]] = m.clone();
    }
    Some(CouplingMatrix::new(r))
}

/// Runs every oracle on one instance.
pub fn check_instance(inst: &TwoConnectionInstance) -> Result<InstanceCheck> {
    let dominance =
        nominally_dominates(inst.p(), inst.q())? || nominally_dominates(inst.q(), inst.p())?;
    let lp_12 = lp_cross_check(inst, MaxSplit::Order(2))?.feasible;
    let all = lp_cross_check(inst, MaxSplit::All)?;
    let degree = reduced_min_total_variation(inst, MaxSplit::Order(2))?;
    let degree_zero = degree.degree.as_ref().is_some_and(Zero::is_zero);

    let construction_ok = match (construct_12_coupling(inst), lp_12) {
        (Some(c), true) => {
            let unique = match coupling_range(inst, MaxSplit::Order(2))? {
                Some(range) => range
                    .iter()
                    .zip(c.flat())
                    .all(|((lo, hi), v)| *lo == v && *hi == v),
                None => false,
            };
            let witness_ok =
                witness_matrix(inst.k(), &all).is_some_and(|w| satisfies_all_splits(&w, inst));
            unique
                && c.satisfies_12_equations(inst)
                && c.off_diagonal_in_single_line()
                && witness_ok
        }
        (None, false) => true,
        _ => false,
    };
    Ok(InstanceCheck {
        dominance,
        lp_12,
        lp_all: all.feasible,
        degree_zero,
        construction_ok,
    })
}

/// A failing sweep instance, reproducible from `(k_range, seed, index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub index: usize,
    pub k: usize,
    pub p: Vec<String>,
    pub q: Vec<String>,
    pub check: InstanceCheck,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub instances: usize,
    pub agreements: usize,
    /// Instances the dominance criterion calls noncontextual.
    pub noncontextual: usize,
    pub counterexample: Option<Counterexample>,
    /// Excluded from serialization so repeated runs give identical bytes.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Checks `count` seeded instances with `k` cycling through `k_range`.
pub fn equivalence_sweep(
    k_range: RangeInclusive<usize>,
    count: usize,
    seed: u64,
) -> Result<SweepReport> {
    if k_range.is_empty() || *k_range.start() < 2 {
        return Err(CbdError::InvalidArgument(
            "k range must be nonempty with k >= 2".into(),
        ));
    }
    if *k_range.end() > crate::two_connection::DEFAULT_MAX_K_ALL {
        return Err(CbdError::InvalidArgument(format!(
            "k above {} is out of reach for the all-splits program",
            crate::two_connection::DEFAULT_MAX_K_ALL
        )));
    }
    let start = Instant::now();
    let results = (0..count)
        .into_par_iter()
        .map(|i| {
            let inst = sweep_instance(&k_range, seed, i);
            check_instance(&inst).map(|c| (inst, c))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = SweepReport {
        instances: count,
        agreements: 0,
        noncontextual: 0,
        counterexample: None,
        wall_time: Duration::ZERO,
    };
    for (index, (inst, check)) in results.into_iter().enumerate() {
        report.noncontextual += usize::from(check.dominance);
        if check.agrees() {
            report.agreements += 1;
        } else if report.counterexample.is_none() {
            report.counterexample = Some(Counterexample {
                index,
                k: inst.k(),
                p: inst.p().iter().map(format_rational).collect(),
                q: inst.q().iter().map(format_rational).collect(),
                check,
            });
        }
    }
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Random `Pr[=1]` values for `n` binary variables, multiples of `1 / den`.
pub fn random_marginals(n: usize, den: u64, seed: u64) -> Vec<Rational> {
    let mut rng = rng_for(seed, 0);
    (0..n)
        .map(|_| ratio(rng.gen_range(0..=den) as i64, den as i64))
        .collect()
}

/// Couplings of `n` binary variables with the given marginals in which every
/// pair is maximally coupled, as a program over the `2^n` states (variable `i`
/// is bit `i` of the state index).
pub fn pairwise_maximal_program(marginals: &[Rational]) -> LinearProgram {
    let n = marginals.len();
    let states = 1usize << n;
    let mut lp = LinearProgram::new(states);
    lp.add_constraint((0..states).map(|s| (s, int(1))).collect(), Rational::one());
    for (i, p) in marginals.iter().enumerate() {
        let coeffs = (0..states)
            .filter(|s| s >> i & 1 == 1)
            .map(|s| (s, int(1)))
            .collect();
        lp.add_constraint(coeffs, p.clone());
    }
    for i in 0..n {
        for j in i + 1..n {
            let mask = (1 << i) | (1 << j);
            let coeffs = (0..states)
                .filter(|s| s & mask == mask)
                .map(|s| (s, int(1)))
                .collect();
            lp.add_constraint(coeffs, marginals[i].clone().min(marginals[j].clone()));
        }
    }
    lp
}

/// Minimum and maximum of every state mass over [`pairwise_maximal_program`].
pub fn pairwise_maximal_range(marginals: &[Rational]) -> Result<Vec<(Rational, Rational)>> {
    let base = pairwise_maximal_program(marginals);
    (0..base.num_vars())
        .map(|s| {
            let mut bounds = Vec::with_capacity(2);
            for sign in [1, -1] {
                let mut lp = base.clone();
                lp.set_objective(vec![(s, int(sign))]);
                match lp.solve()? {
                    LpOutcome::Optimal { x, .. } => bounds.push(x[s].clone()),
                    _ => {
                        return Err(CbdError::InvalidArgument(
                            "pairwise maximal couplings do not exist".into(),
                        ))
                    }
                }
            }
            Ok((bounds[0].clone(), bounds[1].clone()))
        })
        .collect()
}

/// Shape of a random binary system: which contents each context measures.
/// Every content is measured somewhere and the total variable count stays at
/// or below `max_vars`.
fn random_layout<R: Rng>(rng: &mut R, max_vars: usize) -> Vec<Vec<usize>> {
    loop {
        let contents = rng.gen_range(2..=4);
        let contexts = rng.gen_range(2..=4);
        let layout: Vec<Vec<usize>> = (0..contexts)
            .map(|_| {
                let width = rng.gen_range(1..=3.min(contents));
                let mut all: Vec<usize> = (0..contents).collect();
                all.shuffle(rng);
                let mut pick = all[..width].to_vec();
                pick.sort_unstable();
                pick
            })
            .collect();
        let covered = (0..contents).all(|q| layout.iter().any(|c| c.contains(&q)));
        let vars: usize = layout.iter().map(Vec::len).sum();
        if covered && vars <= max_vars {
            return layout;
        }
    }
}

fn content_id(q: usize) -> String {
    format!("q{}", q + 1)
}

fn context_id(c: usize) -> String {
    format!("c{}", c + 1)
}

fn bits(local: usize, width: usize) -> Vec<String> {
    (0..width).map(|b| ((local >> b) & 1).to_string()).collect()
}

fn assemble(layout: &[Vec<usize>], bunches: Vec<BunchDistribution>) -> System {
    let contents = layout.iter().flatten().copied().max().map_or(0, |m| m + 1);
    System::new(
        (0..contents).map(|q| (content_id(q), ValueSet::binary())),
        bunches,
    )
}

/// A binary system with at most `max_vars` variables and arbitrary bunches.
pub fn random_binary_system(max_vars: usize, seed: u64) -> System {
    let mut rng = rng_for(seed, 0);
    let layout = random_layout(&mut rng, max_vars);
    let bunches = layout
        .iter()
        .enumerate()
        .map(|(c, qs)| {
            let w = qs.len();
            let den = rng.gen_range(4..=16u64);
            let units = random_composition(&mut rng, den, 1 << w);
            BunchDistribution::new(
                context_id(c),
                qs.iter().map(|&q| content_id(q)),
                units
                    .iter()
                    .enumerate()
                    .map(|(s, &u)| (bits(s, w), ratio(u as i64, den as i64))),
            )
        })
        .collect();
    assemble(&layout, bunches)
}

/// A binary system that is noncontextual by construction.
///
/// Each content `q` gets a latent `U_q` on `{0, .., G - 1}`, the latents get a
/// random joint distribution, and `R_q^c = 1` exactly when `U_q < t(q, c)`.
/// Threshold functions of one latent are comonotone, so the latent joint is a
/// coupling whose connections are all multimaximal.
pub fn random_noncontextual_system(max_vars: usize, seed: u64) -> System {
    const GRID: usize = 3;
    let mut rng = rng_for(seed, 0);
    let layout = random_layout(&mut rng, max_vars);
    let contents = layout.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let cells = GRID.pow(contents as u32);
    let den = rng.gen_range(6..=24u64);
    let latent = random_composition(&mut rng, den, cells);
    let thresholds: Vec<Vec<usize>> = layout
        .iter()
        .map(|qs| qs.iter().map(|_| rng.gen_range(0..=GRID)).collect())
        .collect();

    let bunches = layout
        .iter()
        .zip(&thresholds)
        .enumerate()
        .map(|(c, (qs, ts))| {
            let masses = latent
                .iter()
                .enumerate()
                .filter(|(_, &u)| u > 0)
                .map(|(cell, &u)| {
                    let state = qs
                        .iter()
                        .zip(ts)
                        .map(|(&q, &t)| {
                            let level = cell / GRID.pow(q as u32) % GRID;
                            if level < t { "1" } else { "0" }.to_string()
                        })
                        .collect::<Vec<_>>();
                    (state, ratio(u as i64, den as i64))
                });
            BunchDistribution::new(context_id(c), qs.iter().map(|&q| content_id(q)), masses)
        })
        .collect();
    assemble(&layout, bunches)
}

/// A cyclic system of rank `n`: context `c_i` measures `q_i` and `q_(i+1)`.
/// Each content has one marginal shared by both of its contexts, and most
/// contexts push their pair to perfect correlation or anticorrelation, which
/// makes contextual instances common.
pub fn random_cyclic_system(n: usize, seed: u64) -> Result<System> {
    if n < 2 {
        return Err(CbdError::InvalidArgument(
            "a cyclic system needs rank >= 2".into(),
        ));
    }
    const DEN: i64 = 12;
    let mut rng = rng_for(seed, 0);
    let marginal: Vec<i64> = (0..n).map(|_| rng.gen_range(3..=9)).collect();
    let layout: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut pair = vec![i, (i + 1) % n];
            pair.sort_unstable();
            pair
        })
        .collect();
    let bunches = layout
        .iter()
        .enumerate()
        .map(|(c, qs)| {
            let (a, b) = (marginal[qs[0]], marginal[qs[1]]);
            let lo = (a + b - DEN).max(0);
            let hi = a.min(b);
            let both = match rng.gen_range(0..4) {
                0 => lo,
                1 | 2 => hi,
                _ => rng.gen_range(lo..=hi),
            };
            let masses = [
                (["1", "1"], both),
                (["1", "0"], a - both),
                (["0", "1"], b - both),
                (["0", "0"], DEN - a - b + both),
            ];
            BunchDistribution::new(
                context_id(c),
                qs.iter().map(|&q| content_id(q)),
                masses
                    .iter()
                    .map(|(s, m)| (s.iter().map(|v| v.to_string()).collect(), ratio(*m, DEN))),
            )
        })
        .collect();
    Ok(assemble(&layout, bunches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{is_multimaximal, multimaximal_coupling};
    use crate::solver::{is_noncontextual, SolverConfig};
    use crate::system::validate_system;

    #[test]
    fn compositions_sum() {
        let mut rng = rng_for(3, 0);
        for parts in 1..6 {
            let c = random_composition(&mut rng, 17, parts);
            assert_eq!(c.len(), parts);
            assert_eq!(c.iter().sum::<u64>(), 17);
        }
    }

    #[test]
    fn two_connection_determinism() {
        let a = random_two_connection(4, 20, 1).unwrap();
        assert_eq!(a, random_two_connection(4, 20, 1).unwrap());
        assert_ne!(a, random_two_connection(4, 20, 2).unwrap());
        assert!(random_two_connection(4, 3, 1).is_err());
        assert!(random_two_connection(1, 3, 1).is_err());
        let half = ratio(1, 2);
        let found = (0..20).any(|s| {
            let i = random_two_connection(2, 2, s).unwrap();
            i.p().iter().chain(i.q()).any(|v| *v == half)
        });
        assert!(found);
    }

    #[test]
    fn dominating_instances_dominate() {
        for seed in 0..50 {
            let i = random_dominating(5, 24, seed).unwrap();
            assert!(
                nominally_dominates(i.p(), i.q()).unwrap()
                    || nominally_dominates(i.q(), i.p()).unwrap()
            );
        }
    }

    #[test]
    fn boundary_kinds() {
        let mut rng = rng_for(9, 0);
        let same = boundary_from(&mut rng, 4, 12, 0);
        assert_eq!(same.p(), same.q());
        let tie = boundary_from(&mut rng, 4, 12, 1);
        assert!(tie.p().iter().zip(tie.q()).any(|(a, b)| a == b));
        let zero = boundary_from(&mut rng, 4, 12, 2);
        assert!(zero.p().iter().any(Zero::is_zero) && zero.q().iter().any(Zero::is_zero));
    }

    #[test]
    fn small_sweep() {
        let r = equivalence_sweep(3..=4, 40, 7).unwrap();
        assert_eq!(r.instances, 40);
        assert_eq!(r.agreements, 40, "{:?}", r.counterexample);
        let again = equivalence_sweep(3..=4, 40, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
        let empty = equivalence_sweep(3..=6, 0, 7).unwrap();
        assert_eq!((empty.instances, empty.agreements), (0, 0));
        assert!(equivalence_sweep(1..=3, 5, 0).is_err());
    }

    #[test]
    fn multimax_unique_small() {
        for seed in 0..5 {
            let m = random_marginals(3, 10, seed);
            let named: Vec<(String, Rational)> = m
                .iter()
                .enumerate()
                .map(|(i, p)| (i.to_string(), p.clone()))
                .collect();
            let j = multimaximal_coupling(&named).unwrap();
            assert!(is_multimaximal(&j).unwrap());
            for (s, (lo, hi)) in pairwise_maximal_range(&m).unwrap().iter().enumerate() {
                let state: Vec<usize> = (0..3).map(|b| (s >> b) & 1).collect();
                assert_eq!(lo, hi);
                assert_eq!(*lo, j.mass_of(&state));
            }
        }
    }

    #[test]
    fn random_systems_are_valid() {
        for seed in 0..20 {
            let s = random_binary_system(12, seed);
            assert!(validate_system(&s).is_ok(), "{:?}", validate_system(&s));
            assert!(s.variable_count() <= 12);
            let n = random_noncontextual_system(12, seed);
            assert!(validate_system(&n).is_ok(), "{:?}", validate_system(&n));
            let c = random_cyclic_system(2 + seed as usize % 5, seed).unwrap();
            assert!(validate_system(&c).is_ok(), "{:?}", validate_system(&c));
        }
    }

    #[test]
    fn latent_systems_are_noncontextual() {
        for seed in 0..5 {
            let s = random_noncontextual_system(10, seed);
            assert!(is_noncontextual(&s, SolverConfig::default()).unwrap());
        }
    }
}
