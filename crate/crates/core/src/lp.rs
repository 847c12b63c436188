//! Exact linear programming over the rationals.
//!
//! Revised primal simplex with a dense fraction-free basis inverse (an
//! integer adjugate over the basis determinant), two phases
//! (artificial variables first, then the real objective), and no
//! floating-point anywhere. Pricing takes the most negative reduced cost
//! within a window of columns that rotates through the problem. After a long
//! run of degenerate pivots it switches to Bland's smallest-index rule until
//! the objective next strictly improves; Bland cannot cycle and every strict
//! improvement leaves all earlier bases behind, so the method terminates.
//!
//! The problems this crate builds have few rows and many 0/1 columns, so the
//! solver keeps columns sparse, scales every row and the objective to integer
//! coefficients, and prices columns with big-integer arithmetic against a
//! common-denominator copy of the dual vector.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{CbdError, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSign {
    NonNegative,
    Free,
}

/// One equality `sum coeffs[i].1 * x[coeffs[i].0] = rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

/// `minimize objective . x` subject to equality constraints and per-variable
/// sign restrictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    num_vars: usize,
    constraints: Vec<Constraint>,
    objective: Option<Vec<(usize, Rational)>>,
    signs: Vec<VarSign>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<Rational>,
        objective: Rational,
    },
    /// `residual` is the optimal phase-one objective, strictly positive.
    Infeasible {
        residual: Rational,
    },
    Unbounded,
}

impl LinearProgram {
    /// A program over `num_vars` nonnegative variables with no constraints.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            constraints: Vec::new(),
            objective: None,
            signs: vec![VarSign::NonNegative; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<&[(usize, Rational)]> {
        self.objective.as_deref()
    }

    pub fn signs(&self) -> &[VarSign] {
        &self.signs
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, rhs });
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = Some(coeffs);
    }

    pub fn clear_objective(&mut self) {
        self.objective = None;
    }

    pub fn set_sign(&mut self, var: usize, sign: VarSign) {
        self.signs[var] = sign;
    }

    pub fn set_all_free(&mut self) {
        self.signs.iter_mut().for_each(|s| *s = VarSign::Free);
    }

    pub fn validate(&self) -> Result<()> {
        if self.signs.len() != self.num_vars {
            return Err(CbdError::MalformedLp("sign vector length mismatch".into()));
        }
        let rows = self
            .constraints
            .iter()
            .map(|c| &c.coeffs)
            .chain(self.objective.iter());
        for row in rows {
            let mut seen = vec![false; self.num_vars];
            for (j, _) in row {
                if *j >= self.num_vars {
                    return Err(CbdError::MalformedLp(format!("variable {j} out of range")));
                }
                if std::mem::replace(&mut seen[*j], true) {
                    return Err(CbdError::MalformedLp(format!(
                        "variable {j} repeated in a row"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether `x` satisfies every constraint and sign restriction exactly.
    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars
            && self
                .signs
                .iter()
                .zip(x)
                .all(|(s, v)| *s == VarSign::Free || !v.is_negative())
            && self.constraints.iter().all(|c| {
                c.coeffs
                    .iter()
                    .fold(Rational::zero(), |acc, (j, a)| acc + a * &x[*j])
                    == c.rhs
            })
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective
            .iter()
            .flatten()
            .fold(Rational::zero(), |acc, (j, c)| acc + c * &x[*j])
    }

    /// Solves the program; without an objective this is a feasibility check.
    pub fn solve(&self) -> Result<LpOutcome> {
        self.validate()?;
        Simplex::build(self).run(self)
    }
}

/// Equality form with every column nonnegative and integer data.
struct Simplex {
    m: usize,
    /// Structural columns (sparse, integer), then one artificial per row.
    cols: Vec<Vec<(usize, BigInt)>>,
    cost: Vec<BigInt>,
    rhs: Vec<BigInt>,
    /// Factor each surviving row was multiplied by (sign included).
    row_scale: Vec<Rational>,
    /// Structural column -> (original variable, +1 or -1).
    origin: Vec<(usize, bool)>,
    n_struct: usize,
    fixed_infeasible: bool,
}

fn lcm_of_denoms<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// A row scaled to integers: sparse coefficients, rhs, and the scale used.
type ScaledRow = (Vec<(usize, BigInt)>, BigInt, Rational);

impl Simplex {
    fn build(lp: &LinearProgram) -> Self {
        // Integer row scaling, right-hand side included, with rhs >= 0.
        let mut rows: Vec<ScaledRow> = lp
            .constraints
            .iter()
            .map(|c| {
                let scale = lcm_of_denoms(c.coeffs.iter().map(|(_, a)| a).chain([&c.rhs]));
                let mut scale = Rational::from_integer(scale);
                if c.rhs.is_negative() {
                    scale = -scale;
                }
                let coeffs = c
                    .coeffs
                    .iter()
                    .filter(|(_, a)| !a.is_zero())
                    .map(|(j, a)| (*j, (a * &scale).to_integer()))
                    .collect();
                let rhs = (&c.rhs * &scale).to_integer();
                (coeffs, rhs, scale)
            })
            .collect();

        // Presolve: a row with zero right-hand side whose entries all carry the
        // same sign forces every variable in it to zero (all are nonnegative).
        let mut alive = vec![true; lp.num_vars];
        loop {
            let mut changed = false;
            for (coeffs, rhs, _) in &rows {
                if !rhs.is_zero() {
                    continue;
                }
                let live: Vec<&(usize, BigInt)> =
                    coeffs.iter().filter(|(j, _)| alive[*j]).collect();
                if live.is_empty() || live.iter().any(|(j, _)| lp.signs[*j] == VarSign::Free) {
                    continue;
                }
                let positive = live.iter().all(|(_, a)| a.is_positive());
                let negative = live.iter().all(|(_, a)| a.is_negative());
                if positive || negative {
                    for (j, _) in live {
                        alive[*j] = false;
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (coeffs, _, _) in &mut rows {
            coeffs.retain(|(j, _)| alive[*j]);
        }
        // Empty rows with zero rhs carry no information.
        rows.retain(|(coeffs, rhs, _)| !(coeffs.is_empty() && rhs.is_zero()));
        let fixed_infeasible = rows.iter().any(|(c, r, _)| c.is_empty() && !r.is_zero());

        let m = rows.len();
        let mut col_of_var: Vec<Vec<usize>> = vec![Vec::new(); lp.num_vars];
        let mut origin = Vec::new();
        for j in 0..lp.num_vars {
            if !alive[j] {
                continue;
            }
            col_of_var[j].push(origin.len());
            origin.push((j, true));
            if lp.signs[j] == VarSign::Free {
                col_of_var[j].push(origin.len());
                origin.push((j, false));
            }
        }
        let n_struct = origin.len();
        let mut cols: Vec<Vec<(usize, BigInt)>> = vec![Vec::new(); n_struct + m];
        for (i, (coeffs, _, _)) in rows.iter().enumerate() {
            for (j, a) in coeffs {
                for &col in &col_of_var[*j] {
                    let v = if origin[col].1 { a.clone() } else { -a.clone() };
                    cols[col].push((i, v));
                }
            }
        }
        for i in 0..m {
            cols[n_struct + i].push((i, BigInt::one()));
        }

        let mut cost = vec![BigInt::zero(); n_struct + m];
        if let Some(obj) = &lp.objective {
            let scale = Rational::from_integer(lcm_of_denoms(obj.iter().map(|(_, c)| c)));
            for (j, c) in obj {
                let c = (c * &scale).to_integer();
                for &col in &col_of_var[*j] {
                    cost[col] = if origin[col].1 { c.clone() } else { -c.clone() };
                }
            }
        }

        let (rhs, row_scale) = rows.into_iter().map(|(_, r, s)| (r, s)).unzip();
        Simplex {
            m,
            cols,
            cost,
            rhs,
            row_scale,
            origin,
            n_struct,
            fixed_infeasible,
        }
    }

    fn run(self, lp: &LinearProgram) -> Result<LpOutcome> {
        let m = self.m;
        let mut tab = Tableau::new(&self);

        // Phase one: minimize the sum of artificials.
        let phase_one: Vec<BigInt> = (0..self.cols.len())
            .map(|j| {
                if j >= self.n_struct {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            })
            .collect();
        let eligible_all = |_: usize| true;
        tab.optimize(&self, &phase_one, &eligible_all)?;
        // Artificial levels in the units of the original rows.
        let residual =
            (0..m)
                .filter(|&r| tab.basis[r] >= self.n_struct)
                .fold(Rational::zero(), |acc, r| {
                    let row = tab.basis[r] - self.n_struct;
                    acc + tab.value(r) / self.row_scale[row].abs()
                });
        if !residual.is_zero() || self.fixed_infeasible {
            let residual = if residual.is_zero() {
                Rational::one()
            } else {
                residual
            };
            return Ok(LpOutcome::Infeasible { residual });
        }

        // Pivot zero-level artificials out where possible; what stays marks a
        // redundant row.
        for r in 0..m {
            if tab.basis[r] < self.n_struct {
                continue;
            }
            let entering = (0..self.n_struct).find(|&j| {
                tab.position[j].is_none()
                    && !self.cols[j]
                        .iter()
                        .fold(BigInt::zero(), |acc, (i, a)| acc + &tab.adj[r][*i] * a)
                        .is_zero()
            });
            if let Some(j) = entering {
                let alpha = tab.column(&self, j);
                tab.pivot(r, j, &alpha);
            }
        }

        // Phase two.
        let n_struct = self.n_struct;
        let structural = move |j: usize| j < n_struct;
        if lp.objective.is_some()
            && tab.optimize(&self, &self.cost, &structural)? == Status::Unbounded
        {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![Rational::zero(); lp.num_vars];
        for r in 0..m {
            let col = tab.basis[r];
            if col < self.n_struct {
                let (var, plus) = self.origin[col];
                if plus {
                    x[var] += tab.value(r);
                } else {
                    x[var] -= tab.value(r);
                }
            }
        }
        let objective = lp.objective_value(&x);
        Ok(LpOutcome::Optimal { x, objective })
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Status {
    Optimal,
    Unbounded,
}

/// Fraction-free basis inverse: `B^-1 = adj / det` and `x_B = x / det`, with
/// every entry an integer. A pivot divides exactly by the previous `det`.
struct Tableau {
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    det: BigInt,
    x: Vec<BigInt>,
    adj: Vec<Vec<BigInt>>,
}

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;
const PRICING_WINDOW: usize = 512;

impl Tableau {
    fn new(s: &Simplex) -> Self {
        let m = s.m;
        let mut position = vec![None; s.cols.len()];
        let basis: Vec<usize> = (0..m).map(|i| s.n_struct + i).collect();
        for (r, &c) in basis.iter().enumerate() {
            position[c] = Some(r);
        }
        let adj = (0..m)
            .map(|i| {
                let mut row = vec![BigInt::zero(); m];
                row[i] = BigInt::one();
                row
            })
            .collect();
        Tableau {
            basis,
            position,
            det: BigInt::one(),
            x: s.rhs.clone(),
            adj,
        }
    }

    fn value(&self, r: usize) -> Rational {
        Rational::new(self.x[r].clone(), self.det.clone())
    }

    /// `det * B^-1 A_j`.
    fn column(&self, s: &Simplex, j: usize) -> Vec<BigInt> {
        self.adj
            .iter()
            .map(|row| {
                s.cols[j].iter().fold(BigInt::zero(), |acc, (i, a)| {
                    if row[*i].is_zero() {
                        acc
                    } else {
                        acc + &row[*i] * a
                    }
                })
            })
            .collect()
    }

    fn pivot(&mut self, r: usize, j: usize, alpha: &[BigInt]) {
        let p = alpha[r].clone();
        for i in 0..self.adj.len() {
            if i == r {
                continue;
            }
            let f = &alpha[i];
            let (head, tail) = self.adj.split_at_mut(r.max(i));
            let (row, pivot_row) = if i < r {
                (&mut head[i], &tail[0])
            } else {
                (&mut tail[0], &head[r])
            };
            for (dst, src) in row.iter_mut().zip(pivot_row) {
                if dst.is_zero() && (f.is_zero() || src.is_zero()) {
                    continue;
                }
                let mut v = &*dst * &p;
                if !f.is_zero() && !src.is_zero() {
                    v -= f * src;
                }
                *dst = v / &self.det;
            }
            let mut v = &self.x[i] * &p;
            if !f.is_zero() {
                v -= f * &self.x[r];
            }
            self.x[i] = v / &self.det;
        }
        self.det = p;
        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[j] = Some(r);
        self.basis[r] = j;
    }

    /// Duals scaled by `det`, sign-normalized so `pi = P / L` with `L > 0`.
    fn scaled_duals(&self, cost: &[BigInt]) -> (Vec<BigInt>, BigInt) {
        let m = self.adj.len();
        let mut pi = vec![BigInt::zero(); m];
        for (r, &col) in self.basis.iter().enumerate() {
            let c = &cost[col];
            if c.is_zero() {
                continue;
            }
            for (p, b) in pi.iter_mut().zip(&self.adj[r]) {
                if !b.is_zero() {
                    *p += c * b;
                }
            }
        }
        if self.det.is_negative() {
            pi.iter_mut().for_each(|p| *p = -&*p);
        }
        (pi, self.det.abs())
    }

    fn optimize(
        &mut self,
        s: &Simplex,
        cost: &[BigInt],
        eligible: &dyn Fn(usize) -> bool,
    ) -> Result<Status> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut cursor = 0usize;
        loop {
            let (duals, scale) = self.scaled_duals(cost);
            // Scaled reduced cost: L * c_j - P . A_j
            let reduced = |j: usize| -> Option<BigInt> {
                if self.position[j].is_some() || !eligible(j) {
                    return None;
                }
                let mut d = &cost[j] * &scale;
                for (i, a) in &s.cols[j] {
                    if !duals[*i].is_zero() {
                        d -= &duals[*i] * a;
                    }
                }
                d.is_negative().then_some(d)
            };
            let n = s.cols.len();
            let mut entering: Option<(usize, BigInt)> = None;
            if bland {
                entering = (0..n).find_map(|j| reduced(j).map(|d| (j, d)));
            } else {
                // Partial pricing: the best candidate within a window that
                // rotates through the columns, widened until one is found.
                let window = PRICING_WINDOW.max(n / 16);
                for step in 0..n {
                    let j = (cursor + step) % n;
                    if let Some(d) = reduced(j) {
                        if entering.as_ref().is_none_or(|(_, best)| d < *best) {
                            entering = Some((j, d));
                        }
                    }
                    if step + 1 >= window && entering.is_some() {
                        cursor = (j + 1) % n;
                        break;
                    }
                }
            }
            let Some((j, _)) = entering else {
                return Ok(Status::Optimal);
            };

            // alpha and x share the factor det, so ratios need no division by
            // it; only its sign decides which entries are positive.
            let alpha = self.column(s, j);
            let sign_ok = |a: &BigInt| {
                if self.det.is_positive() {
                    a.is_positive()
                } else {
                    a.is_negative()
                }
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (r, a) in alpha.iter().enumerate() {
                if !sign_ok(a) {
                    continue;
                }
                let ratio = Rational::new(self.x[r].clone(), a.clone());
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, theta)) = leave else {
                return Ok(Status::Unbounded);
            };
            if theta.is_zero() {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(r, j, &alpha);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn ones(vars: &[usize]) -> Vec<(usize, Rational)> {
        vars.iter().map(|&j| (j, int(1))).collect()
    }

    #[test]
    fn simple_optimum() {
        // min -x0 - x1 s.t. x0 + 2 x1 + s0 = 4, 3 x0 + x1 + s1 = 6
        let mut lp = LinearProgram::new(4);
        lp.add_constraint(vec![(0, int(1)), (1, int(2)), (2, int(1))], int(4));
        lp.add_constraint(vec![(0, int(3)), (1, int(1)), (3, int(1))], int(6));
        lp.set_objective(vec![(0, int(-1)), (1, int(-1))]);
        let LpOutcome::Optimal { x, objective } = lp.solve().unwrap() else {
            panic!()
        };
        assert_eq!(x[0], ratio(8, 5));
        assert_eq!(x[1], ratio(6, 5));
        assert_eq!(objective, ratio(-14, 5));
    }

    #[test]
    fn infeasible_has_positive_residual() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(ones(&[0, 1]), int(1));
        lp.add_constraint(ones(&[0, 1]), int(2));
        match lp.solve().unwrap() {
            LpOutcome::Infeasible { residual } => assert!(residual.is_positive()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presolve_zero_rows() {
        let mut lp = LinearProgram::new(3);
        lp.add_constraint(ones(&[0, 1]), int(0));
        lp.add_constraint(ones(&[0, 1, 2]), int(1));
        let LpOutcome::Optimal { x, .. } = lp.solve().unwrap() else {
            panic!()
        };
        assert_eq!(x, vec![int(0), int(0), int(1)]);

        let mut lp = LinearProgram::new(2);
        lp.add_constraint(ones(&[0, 1]), int(0));
        lp.add_constraint(ones(&[0]), ratio(1, 2));
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Infeasible { .. }));
    }

    #[test]
    fn redundant_rows_and_rational_data() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![(0, ratio(1, 2)), (1, ratio(1, 3))], ratio(1, 6));
        lp.add_constraint(vec![(0, int(3)), (1, int(2))], int(1));
        lp.set_objective(vec![(0, int(1))]);
        let LpOutcome::Optimal { x, objective } = lp.solve().unwrap() else {
            panic!()
        };
        assert_eq!(x, vec![int(0), ratio(1, 2)]);
        assert_eq!(objective, int(0));
    }

    #[test]
    fn free_variables_and_l1() {
        // min |x0| + |x1| with x0 - x1 = 1, x0 + x1 = -3 -> x = (-1, -2)
        let mut lp = LinearProgram::new(4);
        lp.add_constraint(vec![(0, int(1)), (1, int(-1))], int(1));
        lp.add_constraint(vec![(0, int(1)), (1, int(1))], int(-3));
        lp.set_sign(0, VarSign::Free);
        lp.set_sign(1, VarSign::Free);
        lp.set_objective(vec![(2, int(1)), (3, int(1))]);
        lp.add_constraint(vec![(2, int(1))], int(1));
        lp.add_constraint(vec![(3, int(1))], int(2));
        let LpOutcome::Optimal { x, .. } = lp.solve().unwrap() else {
            panic!()
        };
        assert_eq!(&x[..2], &[int(-1), int(-2)]);
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![(0, int(1)), (1, int(-1))], int(0));
        lp.set_objective(vec![(0, int(-1))]);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn malformed() {
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![(5, int(1))], int(0));
        assert!(matches!(lp.solve(), Err(CbdError::MalformedLp(_))));
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![(0, int(1)), (0, int(1))], int(0));
        assert!(lp.solve().is_err());
    }

    #[test]
    fn degenerate_transport_problem() {
        // 3x3 transportation polytope, all marginals 1/3, minimize the trace.
        let idx = |i: usize, j: usize| i * 3 + j;
        let mut lp = LinearProgram::new(9);
        for i in 0..3 {
            lp.add_constraint((0..3).map(|j| (idx(i, j), int(1))).collect(), ratio(1, 3));
            lp.add_constraint((0..3).map(|j| (idx(j, i), int(1))).collect(), ratio(1, 3));
        }
        lp.set_objective((0..3).map(|i| (idx(i, i), int(1))).collect());
        let LpOutcome::Optimal { x, objective } = lp.solve().unwrap() else {
            panic!()
        };
        assert_eq!(objective, int(0));
        assert!(lp.is_feasible_point(&x));
    }
}
