//! Dense two-phase tableau simplex with Bland's rule.

use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `maximize objective·x` subject to `constraints[i]·x (relation) rhs[i]`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub relations: Vec<Relation>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, objective has {expected}")]
    RowLength { row: usize, expected: usize, got: usize },
    #[error("{constraints} constraints but {relations} relations and {rhs} right-hand sides")]
    RowCount {
        constraints: usize,
        relations: usize,
        rhs: usize,
    },
    #[error("non-finite coefficient")]
    NotFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal objective value (meaningful only when `Optimal`).
    pub value: f64,
    /// Values of the structural variables.
    pub x: Vec<f64>,
    /// Basic column per row in the standard form built by [`StandardForm`].
    pub basis: Vec<usize>,
}

/// Column layout of the standard form `A x = b, x ≥ 0, b ≥ 0`: structural
/// variables, then one slack (`≤`) or surplus (`≥`) per inequality row in row
/// order, then one artificial per `≥`/`=` row.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub structural: usize,
    /// Column of each row's slack or surplus, if any.
    pub slack_of_row: Vec<Option<usize>>,
    /// Column of each row's artificial, if any.
    pub artificial_of_row: Vec<Option<usize>>,
    /// Rows whose sign was flipped to make the right-hand side nonnegative.
    pub flipped: Vec<bool>,
    pub columns: usize,
}

impl StandardForm {
    pub fn new(relations: &[Relation], flipped: Vec<bool>, structural: usize) -> Self {
        let effective: Vec<Relation> = relations
            .iter()
            .zip(&flipped)
            .map(|(&r, &f)| match (r, f) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            })
            .collect();
        let mut next = structural;
        let mut fresh = || {
            next += 1;
            next - 1
        };
        let slack_of_row: Vec<Option<usize>> = effective
            .iter()
            .map(|r| (*r != Relation::Eq).then(&mut fresh))
            .collect();
        let artificial_of_row: Vec<Option<usize>> = effective
            .iter()
            .map(|r| (*r != Relation::Le).then(&mut fresh))
            .collect();
        Self {
            structural,
            slack_of_row,
            artificial_of_row,
            flipped,
            columns: next,
        }
    }

    /// Sign of the slack/surplus coefficient in its row, after flipping.
    pub fn slack_sign(&self, relation: Relation, row: usize) -> f64 {
        let le = matches!(
            (relation, self.flipped[row]),
            (Relation::Le, false) | (Relation::Ge, true)
        );
        if le {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_artificial(&self, column: usize) -> bool {
        self.artificial_of_row.contains(&Some(column))
    }
}

impl LinearProgram {
    fn validate(&self) -> Result<(), LpError> {
        let m = self.constraints.len();
        if self.relations.len() != m || self.rhs.len() != m {
            return Err(LpError::RowCount {
                constraints: m,
                relations: self.relations.len(),
                rhs: self.rhs.len(),
            });
        }
        let n = self.objective.len();
        for (row, c) in self.constraints.iter().enumerate() {
            if c.len() != n {
                return Err(LpError::RowLength {
                    row,
                    expected: n,
                    got: c.len(),
                });
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.rhs.iter())
            .chain(self.constraints.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(LpError::NotFinite);
        }
        Ok(())
    }

    pub fn standard_form(&self) -> StandardForm {
        StandardForm::new(
            &self.relations,
            self.rhs.iter().map(|&b| b < 0.0).collect(),
            self.objective.len(),
        )
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// reduced costs `c_j − c_B B⁻¹ A_j` (maximization)
    reduced: Vec<f64>,
    value: f64,
    blocked: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn set_objective(&mut self, cost: &[f64]) {
        self.reduced = cost.to_vec();
        self.value = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (r, a) in self.reduced.iter_mut().zip(&self.rows[i]) {
                    *r -= cb * a;
                }
                self.value += cb * self.rhs[i];
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        self.rows[row].iter_mut().for_each(|a| *a /= p);
        self.rhs[row] /= p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for (a, pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *a -= f * pr;
                }
                self.rhs[i] -= f * pivot_rhs;
                self.rows[i][col] = 0.0;
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            for (r, pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *r -= f * pr;
            }
            self.value += f * pivot_rhs;
            self.reduced[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Bland: lowest-index improving column, then lowest-index leaving basic variable among min ratios.
    fn optimize(&mut self) -> Outcome {
        loop {
            let entering = (0..self.reduced.len()).find(|&j| !self.blocked[j] && self.reduced[j] > EPS);
            let Some(col) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > EPS {
                    let ratio = self.rhs[i].max(0.0) / a;
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => ratio < r - EPS || (ratio <= r + EPS && self.basis[i] < b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, row, _)) => self.pivot(row, col),
                None => return Outcome::Unbounded,
            }
        }
    }
}

/// Solves `lp` to optimality, or reports it infeasible or unbounded.
pub fn simplex(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.objective.len();
    let m = lp.constraints.len();
    let sf = lp.standard_form();
    let mut rows = vec![vec![0.0; sf.columns]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![0; m];
    for i in 0..m {
        let sign = if sf.flipped[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[i][j] = sign * lp.constraints[i][j];
        }
        rhs[i] = sign * lp.rhs[i];
        if let Some(s) = sf.slack_of_row[i] {
            rows[i][s] = sf.slack_sign(lp.relations[i], i);
            basis[i] = s;
        }
        if let Some(a) = sf.artificial_of_row[i] {
            rows[i][a] = 1.0;
            basis[i] = a;
        }
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        reduced: Vec::new(),
        value: 0.0,
        blocked: vec![false; sf.columns],
    };

    let artificials: Vec<usize> = sf.artificial_of_row.iter().flatten().copied().collect();
    if !artificials.is_empty() {
        let mut phase1 = vec![0.0; sf.columns];
        artificials.iter().for_each(|&a| phase1[a] = -1.0);
        t.set_objective(&phase1);
        t.optimize();
        if t.value < -EPS * (1.0 + m as f64) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: 0.0,
                x: vec![0.0; n],
                basis: t.basis,
            });
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if sf.is_artificial(t.basis[i]) {
                if let Some(j) = (0..sf.columns).find(|&j| !sf.is_artificial(j) && t.rows[i][j].abs() > EPS) {
                    t.pivot(i, j);
                }
            }
        }
        artificials.iter().for_each(|&a| t.blocked[a] = true);
    }

    let mut cost = vec![0.0; sf.columns];
    cost[..n].copy_from_slice(&lp.objective);
    t.set_objective(&cost);
    let status = match t.optimize() {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i];
        }
    }
    Ok(LpSolution {
        status,
        value: t.value,
        x,
        basis: t.basis,
    })
}
