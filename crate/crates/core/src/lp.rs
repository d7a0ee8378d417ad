//! Dense exact simplex for small linear programs.
//!
//! Two-phase primal simplex on a full tableau with Bland's rule. Every
//! optimal answer carries duals, so `certify` can confirm optimality by
//! exact weak-duality arithmetic without trusting the solver.

use num_traits::{Signed, Zero};

use crate::num::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub relation: Relation,
    pub rhs: Q,
}

/// `sense c.x` subject to the constraints and `x >= lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Q>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<Q>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Q>) -> Self {
        let lower = vec![Q::zero(); objective.len()];
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            lower,
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<Q>, relation: Relation, rhs: Q) -> &mut Self {
        assert_eq!(coeffs.len(), self.objective.len(), "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`]. For a maximization, duals of `<=` rows are
/// nonnegative and of `>=` rows nonpositive; both signs flip for a
/// minimization. Primal, dual and objective are empty or zero unless optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<Q>,
    pub dual: Vec<Q>,
    pub objective: Q,
    pub pivots: u64,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    pivots: u64,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        self.pivots += 1;
        let inv = self.rows[row][col].recip();
        for v in self.rows[row].iter_mut() {
            *v *= &inv;
        }
        self.rhs[row] *= &inv;
        let (pr, pb) = (self.rows[row].clone(), self.rhs[row].clone());
        for i in 0..self.rows.len() {
            if i == row || self.rows[i][col].is_zero() {
                continue;
            }
            let f = self.rows[i][col].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&pr) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            self.rhs[i] -= &f * &pb;
        }
        self.basis[row] = col;
    }

    /// Reduced costs `c_j - c_B B^-1 A_j`.
    fn reduced(&self, cost: &[Q]) -> Vec<Q> {
        let mut r = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (rj, a) in r.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *rj -= &cost[b] * a;
                }
            }
        }
        r
    }

    /// Maximizes `cost` over columns with `allowed[j]`. Returns false when unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> bool {
        loop {
            let r = self.reduced(cost);
            let Some(col) = (0..r.len()).find(|&j| allowed[j] && r[j].is_positive()) else {
                return true;
            };
            let mut best: Option<(Q, usize)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((b, at)) => ratio < *b || (ratio == *b && self.basis[i] < self.basis[*at]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
            let Some((_, row)) = best else { return false };
            self.pivot(row, col);
        }
    }
}

/// Solves `lp` exactly.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    let n = lp.vars();
    let m = lp.constraints.len();
    let sign = match lp.sense {
        Sense::Max => Q::from_integer(1.into()),
        Sense::Min => Q::from_integer((-1).into()),
    };

    // Shift to x' = x - lower >= 0 and make every right-hand side nonnegative.
    let mut negated = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut rel = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        let shift = c
            .coeffs
            .iter()
            .zip(&lp.lower)
            .fold(Q::zero(), |acc, (a, l)| acc + a * l);
        let mut b = &c.rhs - shift;
        let mut row = c.coeffs.clone();
        let mut r = c.relation;
        if b.is_negative() {
            negated[i] = true;
            b = -b;
            row.iter_mut().for_each(|v| *v = -v.clone());
            r = match r {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push(row);
        rhs.push(b);
        rel.push(r);
    }

    // Columns: originals, one slack or surplus per inequality, one artificial per >= or = row.
    let slacks: Vec<Option<usize>> = {
        let mut next = n;
        rel.iter()
            .map(|r| match r {
                Relation::Eq => None,
                _ => {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let first_art = n + slacks.iter().flatten().count();
    let arts: Vec<Option<usize>> = {
        let mut next = first_art;
        rel.iter()
            .map(|r| match r {
                Relation::Le => None,
                _ => {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let width = first_art + arts.iter().flatten().count();
    let mut basis = Vec::with_capacity(m);
    let mut unit_col = Vec::with_capacity(m);
    for i in 0..m {
        rows[i].resize(width, Q::zero());
        if let Some(s) = slacks[i] {
            rows[i][s] = if rel[i] == Relation::Le {
                Q::from_integer(1.into())
            } else {
                Q::from_integer((-1).into())
            };
        }
        if let Some(a) = arts[i] {
            rows[i][a] = Q::from_integer(1.into());
        }
        let unit = if rel[i] == Relation::Le {
            slacks[i].unwrap()
        } else {
            arts[i].unwrap()
        };
        basis.push(unit);
        unit_col.push(unit);
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        pivots: 0,
    };

    let infeasible = |pivots| LpSolution {
        status: LpStatus::Infeasible,
        primal: Vec::new(),
        dual: Vec::new(),
        objective: Q::zero(),
        pivots,
    };

    if first_art < width {
        let mut cost = vec![Q::zero(); width];
        for c in cost.iter_mut().skip(first_art) {
            *c = Q::from_integer((-1).into());
        }
        let all = vec![true; width];
        t.optimize(&cost, &all);
        let left: Q = (0..m)
            .filter(|&i| t.basis[i] >= first_art)
            .fold(Q::zero(), |acc, i| acc + &t.rhs[i]);
        if left.is_positive() {
            return infeasible(t.pivots);
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= first_art {
                if let Some(j) = (0..first_art).find(|&j| !t.rows[i][j].is_zero()) {
                    t.pivot(i, j);
                }
            }
        }
    }

    let mut cost = vec![Q::zero(); width];
    for (c, o) in cost.iter_mut().zip(&lp.objective) {
        *c = &sign * o;
    }
    let allowed: Vec<bool> = (0..width).map(|j| j < first_art).collect();
    if !t.optimize(&cost, &allowed) {
        return LpSolution {
            status: LpStatus::Unbounded,
            primal: Vec::new(),
            dual: Vec::new(),
            objective: Q::zero(),
            pivots: t.pivots,
        };
    }

    let mut primal = lp.lower.clone();
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            primal[b] += &t.rhs[i];
        }
    }
    let r = t.reduced(&cost);
    let dual = (0..m)
        .map(|i| {
            // The unit column started as e_i with zero cost, so its reduced cost is -y_i.
            let y = -r[unit_col[i]].clone();
            let y = if negated[i] { -y } else { y };
            &sign * y
        })
        .collect();
    let objective = lp
        .objective
        .iter()
        .zip(&primal)
        .fold(Q::zero(), |acc, (c, x)| acc + c * x);
    LpSolution {
        status: LpStatus::Optimal,
        primal,
        dual,
        objective,
        pivots: t.pivots,
    }
}

/// Reduced costs `c - A^T y` for the given duals.
pub fn reduced_costs(lp: &LinearProgram, dual: &[Q]) -> Vec<Q> {
    let mut d = lp.objective.clone();
    for (c, y) in lp.constraints.iter().zip(dual) {
        for (dj, a) in d.iter_mut().zip(&c.coeffs) {
            *dj -= y * a;
        }
    }
    d
}

/// Re-checks an optimal solution exactly: primal feasibility, dual sign
/// conditions, and equality of the primal objective with the dual bound
/// `b.y + d.lower`. Together these prove optimality.
pub fn certify(lp: &LinearProgram, solution: &LpSolution) -> bool {
    if solution.status != LpStatus::Optimal
        || solution.primal.len() != lp.vars()
        || solution.dual.len() != lp.constraints.len()
        || lp.lower.len() != lp.vars()
    {
        return false;
    }
    let x = &solution.primal;
    if x.iter().zip(&lp.lower).any(|(v, l)| v < l) {
        return false;
    }
    let max = lp.sense == Sense::Max;
    for (c, y) in lp.constraints.iter().zip(&solution.dual) {
        let lhs = c
            .coeffs
            .iter()
            .zip(x)
            .fold(Q::zero(), |acc, (a, v)| acc + a * v);
        let ok = match c.relation {
            Relation::Le => {
                lhs <= c.rhs
                    && (if max {
                        !y.is_negative()
                    } else {
                        !y.is_positive()
                    })
            }
            Relation::Ge => {
                lhs >= c.rhs
                    && (if max {
                        !y.is_positive()
                    } else {
                        !y.is_negative()
                    })
            }
            Relation::Eq => lhs == c.rhs,
        };
        if !ok {
            return false;
        }
    }
    let d = reduced_costs(lp, &solution.dual);
    if d.iter().any(|dj| {
        if max {
            dj.is_positive()
        } else {
            dj.is_negative()
        }
    }) {
        return false;
    }
    let primal_value = lp
        .objective
        .iter()
        .zip(x)
        .fold(Q::zero(), |acc, (c, v)| acc + c * v);
    let bound = lp
        .constraints
        .iter()
        .zip(&solution.dual)
        .fold(Q::zero(), |acc, (c, y)| acc + &c.rhs * y)
        + d.iter()
            .zip(&lp.lower)
            .fold(Q::zero(), |acc, (dj, l)| acc + dj * l);
    primal_value == solution.objective && primal_value == bound
}
