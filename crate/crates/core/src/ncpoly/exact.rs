//! Exact rational re-solve of a linear program on a given basis.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::simplex::{Relation, StandardForm};

/// A linear program with rational data, same conventions as [`super::LinearProgram`].
#[derive(Debug, Clone, PartialEq)]
pub struct RationalProgram {
    pub objective: Vec<BigRational>,
    pub constraints: Vec<Vec<BigRational>>,
    pub relations: Vec<Relation>,
    pub rhs: Vec<BigRational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub value: BigRational,
    /// Structural variable values.
    pub x: Vec<BigRational>,
    /// All reduced costs are nonpositive, so the basis is provably optimal.
    pub certified_optimal: bool,
}

impl RationalProgram {
    pub fn standard_form(&self) -> StandardForm {
        StandardForm::new(
            &self.relations,
            self.rhs.iter().map(|b| b.is_negative()).collect(),
            self.objective.len(),
        )
    }

    fn standard_matrix(&self, sf: &StandardForm) -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
        let m = self.constraints.len();
        let mut a = vec![vec![BigRational::zero(); sf.columns]; m];
        let mut b = Vec::with_capacity(m);
        for i in 0..m {
            let flip = sf.flipped[i];
            for (j, v) in self.constraints[i].iter().enumerate() {
                a[i][j] = if flip { -v.clone() } else { v.clone() };
            }
            b.push(if flip {
                -self.rhs[i].clone()
            } else {
                self.rhs[i].clone()
            });
            if let Some(s) = sf.slack_of_row[i] {
                a[i][s] = BigRational::from_integer(
                    if sf.slack_sign(self.relations[i], i) > 0.0 {
                        1
                    } else {
                        -1
                    }
                    .into(),
                );
            }
            if let Some(art) = sf.artificial_of_row[i] {
                a[i][art] = BigRational::from_integer(1.into());
            }
        }
        (a, b)
    }

    /// Solves `B x_B = b` exactly for the given basic columns; `None` if the
    /// basis is singular or the basic solution is infeasible.
    pub fn resolve_on_basis(&self, basis: &[usize]) -> Option<ExactSolution> {
        let sf = self.standard_form();
        let (a, b) = self.standard_matrix(&sf);
        let m = a.len();
        if basis.len() != m {
            return None;
        }
        let bmat: Vec<Vec<BigRational>> = (0..m)
            .map(|i| basis.iter().map(|&j| a[i][j].clone()).collect())
            .collect();
        let xb = solve(bmat.clone(), b)?;
        if xb.iter().any(|v| v.is_negative()) {
            return None;
        }
        let mut full = vec![BigRational::zero(); sf.columns];
        for (&j, v) in basis.iter().zip(&xb) {
            full[j] = v.clone();
        }
        if basis.iter().zip(&xb).any(|(&j, v)| sf.is_artificial(j) && !v.is_zero()) {
            return None;
        }
        let mut cost = vec![BigRational::zero(); sf.columns];
        cost[..self.objective.len()].clone_from_slice(&self.objective);
        let value: BigRational = cost.iter().zip(&full).map(|(c, x)| c * x).sum();
        // duals: Bᵀ y = c_B
        let bt: Vec<Vec<BigRational>> = (0..m).map(|i| (0..m).map(|k| bmat[k][i].clone()).collect()).collect();
        let cb: Vec<BigRational> = basis.iter().map(|&j| cost[j].clone()).collect();
        let certified_optimal = match solve(bt, cb) {
            Some(y) => (0..sf.columns).filter(|&j| !sf.is_artificial(j)).all(|j| {
                let ya: BigRational = (0..m).map(|i| &y[i] * &a[i][j]).sum();
                !(&cost[j] - ya).is_positive()
            }),
            None => false,
        };
        Some(ExactSolution {
            value,
            x: full[..self.objective.len()].to_vec(),
            certified_optimal,
        })
    }
}

/// Gauss-Jordan elimination; `None` on a singular matrix.
fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &p;
        }
        b[col] = &b[col] / &p;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..n {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    Some(b)
}
