//! One `k`-valued content measured in two contexts, with all of its splits.
//!
//! Both bunches of the full-split system have at most `k` support states, so
//! a coupling of the two is a `k x k` matrix `r[i][j] = Pr[S^1 = i, S^2 = j]`
//! with row sums `p` and column sums `q`. Maximal coupling of the split on
//! `W` pins the mass of the `W x W` block to `min(sum_W p, sum_W q)`.
//!
//! The system is noncontextual exactly when one distribution nominally
//! dominates the other: `p[i] < q[i]` for at most one `i`, or the reverse. The
//! 1-splits and 2-splits alone already decide it, and the coupling is then
//! unique with its off-diagonal mass in a single row or column.

use num_traits::{One, Signed, Zero};

use crate::canonical::{combinations, enumerate_dichotomies};
use crate::coupling::JointMass;
use crate::error::{CbdError, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::rational::{format_rational, int, sum, Rational};
use crate::solver::{minimize_l1, Verdict};
use crate::system::{BunchDistribution, System, ValueSet};

/// Largest `k` accepted for [`MaxSplit::All`].
pub const DEFAULT_MAX_K_ALL: usize = 10;

/// Distributions `p` (context 1) and `q` (context 2) of one content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoConnectionInstance {
    p: Vec<Rational>,
    q: Vec<Rational>,
}

fn check_distribution(name: &str, d: &[Rational]) -> Result<()> {
    if d.iter().any(|v| v.is_negative()) {
        return Err(CbdError::InvalidDistribution(format!(
            "{name} has a negative entry"
        )));
    }
    let total = sum(d);
    if !total.is_one() {
        return Err(CbdError::InvalidDistribution(format!(
            "{name} sums to {}, not 1",
            format_rational(&total)
        )));
    }
    Ok(())
}

impl TwoConnectionInstance {
    pub fn new(p: Vec<Rational>, q: Vec<Rational>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(CbdError::InvalidDistribution(format!(
                "p has {} values but q has {}",
                p.len(),
                q.len()
            )));
        }
        if p.len() < 2 {
            return Err(CbdError::InvalidDistribution(
                "need at least two values".into(),
            ));
        }
        check_distribution("p", &p)?;
        check_distribution("q", &q)?;
        Ok(Self { p, q })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[Rational] {
        &self.p
    }

    pub fn q(&self) -> &[Rational] {
        &self.q
    }

    /// The original two-context system: content `"1"` with values `"1".."k"`.
    pub fn to_system(&self) -> System {
        let bunch = |ctx: &str, d: &[Rational]| {
            BunchDistribution::new(
                ctx,
                ["1"],
                d.iter()
                    .enumerate()
                    .map(|(i, m)| (vec![(i + 1).to_string()], m.clone())),
            )
        };
        System::new(
            [("1", ValueSet::numbered(self.k()).expect("k >= 2"))],
            [bunch("1", &self.p), bunch("2", &self.q)],
        )
    }
}

/// `a` nominally dominates `b` when `a[i] < b[i]` for at most one `i`.
pub fn nominally_dominates(a: &[Rational], b: &[Rational]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(CbdError::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x < y).count() <= 1)
}

/// A `k x k` coupling `r[i][j] = Pr[S^1 = i, S^2 = j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMatrix {
    r: Vec<Vec<Rational>>,
}

impl CouplingMatrix {
    pub fn new(r: Vec<Vec<Rational>>) -> Self {
        Self { r }
    }

    /// Reads an `x` laid out row-major as in the reduced program.
    pub fn from_flat(k: usize, x: &[Rational]) -> Self {
        Self {
            r: x.chunks(k).map(<[Rational]>::to_vec).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.r.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.r[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.r
    }

    pub fn flat(&self) -> Vec<Rational> {
        self.r.iter().flatten().cloned().collect()
    }

    pub fn to_joint(&self) -> JointMass {
        let k = self.k();
        JointMass::new(
            ["1@1", "1@2"],
            (0..k).flat_map(|i| (0..k).map(move |j| (vec![i, j], self.r[i][j].clone()))),
        )
    }

    /// Whether every off-diagonal nonzero lies in one row or in one column.
    pub fn off_diagonal_in_single_line(&self) -> bool {
        let k = self.k();
        let cells: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && !self.r[i][j].is_zero())
            .collect();
        match cells.first() {
            None => true,
            Some(&(i0, j0)) => {
                cells.iter().all(|&(i, _)| i == i0) || cells.iter().all(|&(_, j)| j == j0)
            }
        }
    }

    /// Checks row sums, column sums, diagonal minima, pair equalities, and
    /// nonnegativity, all exactly.
    pub fn satisfies_12_equations(&self, inst: &TwoConnectionInstance) -> bool {
        let k = inst.k();
        if self.k() != k || self.r.iter().any(|row| row.len() != k) {
            return false;
        }
        let (p, q) = (inst.p(), inst.q());
        let nonneg = self.r.iter().flatten().all(|v| !v.is_negative());
        let rows = (0..k).all(|i| sum(&self.r[i]) == p[i]);
        let cols = (0..k).all(|j| sum(self.r.iter().map(|row| &row[j])) == q[j]);
        let diag = (0..k).all(|i| self.r[i][i] == p[i].clone().min(q[i].clone()));
        let pairs = (0..k).all(|i| {
            (i + 1..k).all(|j| {
                let block = &self.r[i][i] + &self.r[i][j] + &self.r[j][i] + &self.r[j][j];
                block == (&p[i] + &p[j]).min(&q[i] + &q[j])
            })
        });
        nonneg && rows && cols && diag && pairs
    }
}

/// The unique maximally connected coupling of the 1-2 system, or `None` when
/// neither distribution nominally dominates the other.
///
/// The diagonal holds `min(p[i], q[i])`. If `p` dominates `q` with exceptional
/// index `j` (`p[j] < q[j]`), column `j` absorbs the excesses `p[i] - q[i]`;
/// if `q` dominates `p`, row `i` absorbs `q[j] - p[j]` instead.
pub fn construct_12_coupling(inst: &TwoConnectionInstance) -> Option<CouplingMatrix> {
    let (p, q) = (inst.p(), inst.q());
    let k = inst.k();
    let mut r = vec![vec![Rational::zero(); k]; k];
    for i in 0..k {
        r[i][i] = p[i].clone().min(q[i].clone());
    }
    if p == q {
        return Some(CouplingMatrix { r });
    }
    if nominally_dominates(p, q).ok()? {
        let j = (0..k)
            .find(|&j| p[j] < q[j])
            .expect("p != q with equal sums");
        for i in (0..k).filter(|&i| i != j) {
            r[i][j] = &p[i] - &q[i];
        }
        return Some(CouplingMatrix { r });
    }
    if nominally_dominates(q, p).ok()? {
        let i = (0..k)
            .find(|&i| q[i] < p[i])
            .expect("p != q with equal sums");
        for j in (0..k).filter(|&j| j != i) {
            r[i][j] = &q[j] - &p[j];
        }
        return Some(CouplingMatrix { r });
    }
    None
}

/// Noncontextuality of the full-split system decided by nominal dominance,
/// with the unique coupling as witness.
pub fn analyze_full_splits(inst: &TwoConnectionInstance) -> Verdict {
    match construct_12_coupling(inst) {
        Some(c) => Verdict {
            feasible: true,
            witness: Some(c.to_joint()),
            degree: Some(Rational::zero()),
            infeasibility: None,
        },
        None => Verdict {
            feasible: false,
            witness: None,
            degree: None,
            infeasibility: None,
        },
    }
}

fn check_subset(k: usize, w: &[usize]) -> Result<()> {
    let mut sorted = w.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != w.len() {
        return Err(CbdError::InvalidSubset("repeated value".into()));
    }
    if let Some(v) = w.iter().find(|&&v| v >= k) {
        return Err(CbdError::InvalidSubset(format!(
            "value index {v} out of range for k = {k}"
        )));
    }
    Ok(())
}

fn block_min(inst: &TwoConnectionInstance, w: &[usize]) -> Rational {
    let ps = sum(w.iter().map(|&i| &inst.p[i]));
    let qs = sum(w.iter().map(|&i| &inst.q[i]));
    ps.min(qs)
}

/// `min(sum_W p, sum_W q)`: the mass maximal coupling assigns to both splits on
/// `W` being 1. `W` holds 0-based value indices.
pub fn split_constraint_value(inst: &TwoConnectionInstance, w: &[usize]) -> Result<Rational> {
    check_subset(inst.k(), w)?;
    if w.is_empty() || w.len() >= inst.k() {
        return Err(CbdError::InvalidSubset(
            "W must be a nonempty proper subset".into(),
        ));
    }
    Ok(block_min(inst, w))
}

/// Left side minus right side of the identity expressing the `W`-split value
/// through 1-split and 2-split values:
///
/// `min(sum_W p, sum_W q) - [sum_i m_i + sum_{i<j} (m_ij - m_i - m_j)]`
///
/// where `m_i = min(p_i, q_i)` and `m_ij = min(p_i + p_j, q_i + q_j)`. It is
/// zero whenever the 1-2 system has a maximally connected coupling, so a
/// nonzero value certifies contextuality.
pub fn relation_residual(inst: &TwoConnectionInstance, w: &[usize]) -> Result<Rational> {
    check_subset(inst.k(), w)?;
    if w.len() < 3 {
        return Err(CbdError::InvalidSubset(
            "the relation needs |W| >= 3".into(),
        ));
    }
    let single = |i: usize| block_min(inst, &[i]);
    let mut rhs = sum(&w.iter().map(|&i| single(i)).collect::<Vec<_>>());
    for (a, &i) in w.iter().enumerate() {
        for &j in &w[a + 1..] {
            rhs += block_min(inst, &[i, j]) - single(i) - single(j);
        }
    }
    Ok(block_min(inst, w) - rhs)
}

/// The 0/1 matrix of the 1-2 system over the `k^2` cells `c_ij` (row-major):
/// rows `r_i.`, then `r_.j`, then diagonal rows `r_ii`, then pair rows `r_ij`
/// for `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    pub k: usize,
    pub row_labels: Vec<String>,
    pub rows: Vec<Vec<u8>>,
}

pub fn constraint_matrix(k: usize) -> Result<ConstraintMatrix> {
    if k < 2 {
        return Err(CbdError::InvalidArgument("k must be at least 2".into()));
    }
    let cell = |i: usize, j: usize| i * k + j;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut push = |label: String, cells: Vec<usize>| {
        let mut row = vec![0u8; k * k];
        for c in cells {
            row[c] = 1;
        }
        labels.push(label);
        rows.push(row);
    };
    for i in 0..k {
        push(format!("{}·", i + 1), (0..k).map(|j| cell(i, j)).collect());
    }
    for j in 0..k {
        push(format!("·{}", j + 1), (0..k).map(|i| cell(i, j)).collect());
    }
    for i in 0..k {
        push(format!("{}{}", i + 1, i + 1), vec![cell(i, i)]);
    }
    for pair in combinations(k, 2) {
        let (i, j) = (pair[0], pair[1]);
        push(
            format!("{}{}", i + 1, j + 1),
            vec![cell(i, i), cell(i, j), cell(j, i), cell(j, j)],
        );
    }
    Ok(ConstraintMatrix {
        k,
        row_labels: labels,
        rows,
    })
}

/// Right-hand side matching [`constraint_matrix`] row for row.
pub fn constraint_rhs(inst: &TwoConnectionInstance) -> Vec<Rational> {
    let k = inst.k();
    let mut out: Vec<Rational> = inst.p.iter().chain(&inst.q).cloned().collect();
    out.extend((0..k).map(|i| block_min(inst, &[i])));
    out.extend(combinations(k, 2).iter().map(|w| block_min(inst, w)));
    out
}

/// Rank over the rationals by fraction-exact Gaussian elimination.
pub fn rational_rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let lead = m[rank][col].clone();
        let pivot_row: Vec<Rational> = m[rank].iter().map(|v| v / &lead).collect();
        for (r, row) in m.iter_mut().enumerate() {
            if r == rank || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (dst, src) in row.iter_mut().zip(&pivot_row) {
                if !src.is_zero() {
                    *dst -= &f * src;
                }
            }
        }
        m[rank] = pivot_row;
        rank += 1;
    }
    rank
}

pub fn rank_of_constraint_matrix(k: usize) -> Result<usize> {
    let m = constraint_matrix(k)?;
    let rows: Vec<Vec<Rational>> = m
        .rows
        .iter()
        .map(|row| row.iter().map(|&v| int(v as i64)).collect())
        .collect();
    Ok(rational_rank(&rows))
}

/// Highest split order imposed by the reduced program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxSplit {
    /// 1-splits and 2-splits, plus `m`-splits up to this order.
    Order(usize),
    /// Every split.
    All,
}

impl std::str::FromStr for MaxSplit {
    type Err = CbdError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(MaxSplit::All);
        }
        s.parse::<usize>().map(MaxSplit::Order).map_err(|_| {
            CbdError::InvalidArgument(format!("`{s}` is neither a split order nor `all`"))
        })
    }
}

/// The coupling program in the `k^2`-cell space: row and column sums, the
/// diagonal and pair equalities of the 1-2 system, and the `W`-block equality
/// for every canonical `W` with `3 <= |W| <= max_m`. Cell `(i, j)` is variable
/// `i * k + j`.
pub fn reduced_program(inst: &TwoConnectionInstance, max_m: MaxSplit) -> Result<LinearProgram> {
    let k = inst.k();
    let order = match max_m {
        MaxSplit::Order(m) if m < 2 => {
            return Err(CbdError::InvalidArgument("max_m must be at least 2".into()))
        }
        MaxSplit::Order(m) => m.min(k / 2),
        MaxSplit::All if k > DEFAULT_MAX_K_ALL => {
            return Err(CbdError::InvalidArgument(format!(
                "k = {k} exceeds the cap of {DEFAULT_MAX_K_ALL} for all splits"
            )))
        }
        MaxSplit::All => k / 2,
    };
    let m = constraint_matrix(k)?;
    let mut lp = LinearProgram::new(k * k);
    for (row, rhs) in m.rows.iter().zip(constraint_rhs(inst)) {
        let coeffs = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(c, _)| (c, int(1)))
            .collect();
        lp.add_constraint(coeffs, rhs);
    }
    if order >= 3 {
        let values = ValueSet::numbered(k)?;
        for w in enumerate_dichotomies(&values)? {
            if w.len() < 3 || w.len() > order {
                continue;
            }
            let coeffs = w
                .iter()
                .flat_map(|&i| w.iter().map(move |&j| (i * k + j, int(1))))
                .collect();
            lp.add_constraint(coeffs, block_min(inst, &w));
        }
    }
    Ok(lp)
}

/// LP feasibility of the reduced coupling program, with the coupling as witness.
pub fn lp_cross_check(inst: &TwoConnectionInstance, max_m: MaxSplit) -> Result<Verdict> {
    let lp = reduced_program(inst, max_m)?;
    Ok(match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Verdict {
            feasible: true,
            witness: Some(CouplingMatrix::from_flat(inst.k(), &x).to_joint()),
            degree: Some(Rational::zero()),
            infeasibility: None,
        },
        LpOutcome::Infeasible { residual } => Verdict {
            feasible: false,
            witness: None,
            degree: None,
            infeasibility: Some(residual),
        },
        LpOutcome::Unbounded => unreachable!("feasibility program has no objective"),
    })
}

/// L1-minimal quasi-coupling in the reduced `k^2` space. Its degree is zero
/// exactly when [`lp_cross_check`] is feasible.
///
/// Unlike the full state space, the reduced equalities can be inconsistent
/// even with signed cells; the verdict is then contextual with no degree.
pub fn reduced_min_total_variation(
    inst: &TwoConnectionInstance,
    max_m: MaxSplit,
) -> Result<Verdict> {
    let lp = reduced_program(inst, max_m)?;
    let Some((norm, x)) = minimize_l1(&lp)? else {
        return Ok(Verdict {
            feasible: false,
            witness: None,
            degree: None,
            infeasibility: None,
        });
    };
    let degree = norm - Rational::one();
    Ok(Verdict {
        feasible: degree.is_zero(),
        witness: Some(CouplingMatrix::from_flat(inst.k(), &x).to_joint()),
        degree: Some(degree),
        infeasibility: None,
    })
}

/// Minimum and maximum of every cell over the feasible couplings, or `None`
/// when there are none. A single feasible point shows up as `min == max`
/// everywhere.
pub fn coupling_range(
    inst: &TwoConnectionInstance,
    max_m: MaxSplit,
) -> Result<Option<Vec<(Rational, Rational)>>> {
    let base = reduced_program(inst, max_m)?;
    let mut out = Vec::with_capacity(base.num_vars());
    for cell in 0..base.num_vars() {
        let mut bounds = Vec::with_capacity(2);
        for sign in [1, -1] {
            let mut lp = base.clone();
            lp.set_objective(vec![(cell, int(sign))]);
            match lp.solve()? {
                LpOutcome::Optimal { x, .. } => bounds.push(x[cell].clone()),
                LpOutcome::Infeasible { .. } => return Ok(None),
                LpOutcome::Unbounded => unreachable!("cells are bounded by 1"),
            }
        }
        out.push((bounds[0].clone(), bounds[1].clone()));
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn nondominating() -> TwoConnectionInstance {
        TwoConnectionInstance::new(
            vec![ratio(3, 5), ratio(1, 10), ratio(1, 10), ratio(1, 5)],
            vec![ratio(1, 5), ratio(3, 10), ratio(2, 5), ratio(1, 10)],
        )
        .unwrap()
    }

    fn q_dominant() -> TwoConnectionInstance {
        TwoConnectionInstance::new(
            vec![ratio(1, 2), ratio(3, 10), ratio(1, 5)],
            vec![ratio(1, 5), ratio(1, 2), ratio(3, 10)],
        )
        .unwrap()
    }

    #[test]
    fn instance_validation() {
        assert!(TwoConnectionInstance::new(vec![ratio(1, 1)], vec![ratio(1, 1)]).is_err());
        assert!(TwoConnectionInstance::new(vec![ratio(1, 2); 2], vec![ratio(1, 3); 3]).is_err());
        assert!(
            TwoConnectionInstance::new(vec![ratio(3, 2), ratio(-1, 2)], vec![ratio(1, 2); 2])
                .is_err()
        );
        assert!(TwoConnectionInstance::new(vec![ratio(1, 2); 2], vec![ratio(1, 3); 2]).is_err());
    }

    #[test]
    fn dominance() {
        let nd = nondominating();
        assert!(!nominally_dominates(nd.p(), nd.q()).unwrap());
        assert!(!nominally_dominates(nd.q(), nd.p()).unwrap());
        assert!(nominally_dominates(nd.p(), nd.p()).unwrap());
        let (a, b) = (
            vec![ratio(1, 3), ratio(2, 3)],
            vec![ratio(3, 4), ratio(1, 4)],
        );
        assert!(nominally_dominates(&a, &b).unwrap() && nominally_dominates(&b, &a).unwrap());
        assert!(nominally_dominates(&a, &[ratio(1, 1)]).is_err());
        let qd = q_dominant();
        assert!(nominally_dominates(qd.q(), qd.p()).unwrap());
        assert!(!nominally_dominates(qd.p(), qd.q()).unwrap());
    }

    #[test]
    fn construction_q_dominates() {
        let inst = q_dominant();
        let c = construct_12_coupling(&inst).unwrap();
        let want = [
            vec![ratio(1, 5), ratio(1, 5), ratio(1, 10)],
            vec![ratio(0, 1), ratio(3, 10), ratio(0, 1)],
            vec![ratio(0, 1), ratio(0, 1), ratio(1, 5)],
        ];
        assert_eq!(c.rows(), &want[..]);
        assert!(c.satisfies_12_equations(&inst));
        assert!(c.off_diagonal_in_single_line());
        assert!(analyze_full_splits(&inst).feasible);
    }

    #[test]
    fn construction_identical_and_none() {
        let p = vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)];
        let inst = TwoConnectionInstance::new(p.clone(), p.clone()).unwrap();
        let c = construct_12_coupling(&inst).unwrap();
        for (i, pi) in p.iter().enumerate() {
            for j in 0..3 {
                let want = if i == j { pi.clone() } else { Rational::zero() };
                assert_eq!(c.get(i, j), &want);
            }
        }
        assert!(construct_12_coupling(&nondominating()).is_none());
        assert!(!analyze_full_splits(&nondominating()).feasible);
    }

    #[test]
    fn split_values() {
        let nd = nondominating();
        assert_eq!(
            split_constraint_value(&nd, &[0, 1, 2]).unwrap(),
            ratio(4, 5)
        );
        assert_eq!(split_constraint_value(&nd, &[1]).unwrap(), ratio(1, 10));
        let same = TwoConnectionInstance::new(nd.p().to_vec(), nd.p().to_vec()).unwrap();
        assert_eq!(split_constraint_value(&same, &[0, 3]).unwrap(), ratio(4, 5));
        assert!(split_constraint_value(&nd, &[]).is_err());
        assert!(split_constraint_value(&nd, &[0, 1, 2, 3]).is_err());
        assert!(split_constraint_value(&nd, &[0, 7]).is_err());
    }

    #[test]
    fn residual_nondominating() {
        let nd = nondominating();
        // 4/5 - (2 + 1 + 1 + 2 + 3 + 0)/10
        assert_eq!(relation_residual(&nd, &[0, 1, 2]).unwrap(), ratio(-1, 10));
        assert!(relation_residual(&nd, &[0, 1]).is_err());
        let qd = q_dominant();
        assert_eq!(
            relation_residual(&qd, &[0, 1, 2]).unwrap(),
            Rational::zero()
        );
    }

    #[test]
    fn matrix_shape() {
        let m4 = constraint_matrix(4).unwrap();
        assert_eq!((m4.rows.len(), m4.rows[0].len()), (18, 16));
        assert_eq!(m4.rows[0], [1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(m4.row_labels[0], "1·");
        let r13 = m4.row_labels.iter().position(|l| l == "13").unwrap();
        let ones: Vec<usize> = (0..16).filter(|&c| m4.rows[r13][c] == 1).collect();
        assert_eq!(ones, [0, 2, 8, 10]);
        let m2 = constraint_matrix(2).unwrap();
        assert_eq!((m2.rows.len(), m2.rows[0].len()), (7, 4));
        assert!(constraint_matrix(1).is_err());
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_of_constraint_matrix(2).unwrap(), 4);
        assert_eq!(rank_of_constraint_matrix(4).unwrap(), 13);
        assert_eq!(rank_of_constraint_matrix(6).unwrap(), 26);
        assert_eq!(
            rational_rank(&[vec![int(1), int(2)], vec![int(2), int(4)]]),
            1
        );
    }

    #[test]
    fn reduced_lp_agrees_with_dominance() {
        assert!(
            !lp_cross_check(&nondominating(), MaxSplit::Order(2))
                .unwrap()
                .feasible
        );
        assert!(
            !lp_cross_check(&nondominating(), MaxSplit::All)
                .unwrap()
                .feasible
        );
        let v = lp_cross_check(&q_dominant(), MaxSplit::All).unwrap();
        assert!(v.feasible);
        let c = construct_12_coupling(&q_dominant()).unwrap();
        assert_eq!(v.witness.unwrap(), c.to_joint());
        assert!(lp_cross_check(&q_dominant(), MaxSplit::Order(1)).is_err());
    }

    #[test]
    fn reduced_degree() {
        // the reduced 1-2 equalities of this instance have no signed solution
        let d = reduced_min_total_variation(&nondominating(), MaxSplit::Order(2)).unwrap();
        assert!(!d.feasible && d.degree.is_none());
        let p = vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)];
        let q = vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)];
        let q = TwoConnectionInstance::new(q, p).unwrap();
        assert_eq!(
            reduced_min_total_variation(&q, MaxSplit::Order(2))
                .unwrap()
                .degree,
            Some(Rational::zero())
        );
        let d = reduced_min_total_variation(&q_dominant(), MaxSplit::All).unwrap();
        assert_eq!(d.degree, Some(Rational::zero()));
    }

    #[test]
    fn range_collapses_to_construction() {
        let inst = q_dominant();
        let range = coupling_range(&inst, MaxSplit::Order(2)).unwrap().unwrap();
        let flat = construct_12_coupling(&inst).unwrap().flat();
        for ((lo, hi), v) in range.iter().zip(&flat) {
            assert_eq!(lo, v);
            assert_eq!(hi, v);
        }
        assert!(coupling_range(&nondominating(), MaxSplit::Order(2))
            .unwrap()
            .is_none());
    }

    #[test]
    fn max_split_parse() {
        assert_eq!("all".parse::<MaxSplit>().unwrap(), MaxSplit::All);
        assert_eq!("3".parse::<MaxSplit>().unwrap(), MaxSplit::Order(3));
        assert!("x".parse::<MaxSplit>().is_err());
    }
}
