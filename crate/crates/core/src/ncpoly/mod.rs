//! Noncontextual fraction of an empirical model.
//!
//! The program is `maximize Σ b  s.t.  M b ≤ p, b ≥ 0`, where the columns
//! of the incidence matrix `M` are the global assignments and its rows the
//! (context, joint outcome) pairs. `b = 0` is always feasible.

pub mod exact;
pub mod simplex;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::logic::{GlobalAssignment, MAX_ASSIGNMENTS};
use crate::scenario::{no_disturbance, EmpiricalModel, Scenario};
pub use exact::{ExactSolution, RationalProgram};
pub use simplex::{simplex, LinearProgram, LpError, LpSolution, LpStatus, Relation};

/// Incidence matrices are refused beyond this many columns.
pub const MAX_COLUMNS: u128 = 1 << 20;
/// Models whose marginals disagree by more than this have no well-defined fraction.
pub const SIGNALLING_TOLERANCE: f64 = 1e-6;
/// Tolerance on witness checks.
pub const WITNESS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NcpError {
    #[error("{0} global assignments exceed the incidence limit of 2^20")]
    TooManyColumns(u128),
    #[error("model is signalling (max marginal violation {0})")]
    Signalling(f64),
    #[error("solver ended with status {0:?}")]
    Solver(LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Rows are (context, joint outcome) pairs, columns are global assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub rows: Vec<(usize, usize)>,
    pub columns: Vec<GlobalAssignment>,
    /// `entries[r][c]` is true iff column `c` restricts to row `r`.
    pub entries: Vec<Vec<bool>>,
}

impl IncidenceMatrix {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }
}

/// Deterministic orderings: contexts as declared, tuples and assignments lexicographic.
pub fn incidence(scenario: &Scenario) -> Result<IncidenceMatrix, NcpError> {
    let count = scenario.assignment_count();
    if count > MAX_COLUMNS || count > MAX_ASSIGNMENTS {
        return Err(NcpError::TooManyColumns(count));
    }
    let radices: Vec<usize> = scenario.observables().iter().map(|o| o.outcomes().len()).collect();
    let columns: Vec<GlobalAssignment> = (0..count as usize)
        .map(|mut idx| {
            let mut values = vec![0; radices.len()];
            for k in (0..radices.len()).rev() {
                values[k] = idx % radices[k];
                idx /= radices[k];
            }
            GlobalAssignment::new(values)
        })
        .collect();
    let rows: Vec<(usize, usize)> = (0..scenario.contexts().len())
        .flat_map(|c| (0..scenario.tuple_count(c)).map(move |t| (c, t)))
        .collect();
    let mut entries = vec![vec![false; columns.len()]; rows.len()];
    let mut offset = 0;
    for c in 0..scenario.contexts().len() {
        for (j, g) in columns.iter().enumerate() {
            entries[offset + g.restrict(scenario, c)][j] = true;
        }
        offset += scenario.tuple_count(c);
    }
    Ok(IncidenceMatrix { rows, columns, entries })
}

/// Exact counterpart of a [`FractionResult`], available for rational tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFraction {
    pub ncf: BigRational,
    pub witness: Vec<(GlobalAssignment, BigRational)>,
    /// Reduced costs on the re-solved basis certify optimality.
    pub certified_optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionResult {
    pub ncf: f64,
    pub cf: f64,
    /// Nonzero sub-probability weights on global assignments, lexicographic.
    pub witness: Vec<(GlobalAssignment, f64)>,
    pub exact: Option<ExactFraction>,
}

impl FractionResult {
    /// Largest amount by which the witness overshoots a table entry
    /// (nonpositive when the witness is a valid sub-distribution).
    pub fn max_excess(&self, model: &EmpiricalModel) -> f64 {
        let sc = model.scenario();
        let mut worst = f64::NEG_INFINITY;
        for c in 0..sc.contexts().len() {
            let mut load = vec![0.0; sc.tuple_count(c)];
            for (g, w) in &self.witness {
                load[g.restrict(sc, c)] += w;
            }
            for (l, p) in load.iter().zip(model.table(c)) {
                worst = worst.max(l - p);
            }
        }
        worst
    }

    /// Post-hoc check by direct multiplication, independent of the solver.
    pub fn witness_is_valid(&self, model: &EmpiricalModel) -> bool {
        let total: f64 = self.witness.iter().map(|(_, w)| w).sum();
        self.witness.iter().all(|(_, w)| *w >= 0.0)
            && (total - self.ncf).abs() <= WITNESS_EPS
            && self.max_excess(model) <= WITNESS_EPS
    }

    /// Whether the model is a full mixture of global assignments.
    pub fn is_noncontextual(&self) -> bool {
        match &self.exact {
            Some(e) => e.ncf.is_one(),
            None => (self.ncf - 1.0).abs() <= WITNESS_EPS,
        }
    }
}

fn build_program(model: &EmpiricalModel, m: &IncidenceMatrix) -> LinearProgram {
    LinearProgram {
        objective: vec![1.0; m.column_count()],
        constraints: m
            .entries
            .iter()
            .map(|row| row.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect())
            .collect(),
        relations: vec![Relation::Le; m.row_count()],
        rhs: m.rows.iter().map(|&(c, t)| model.table(c)[t]).collect(),
    }
}

fn build_rational_program(exact: &[Vec<BigRational>], m: &IncidenceMatrix) -> RationalProgram {
    let one = BigRational::one();
    let zero = BigRational::zero();
    RationalProgram {
        objective: vec![one.clone(); m.column_count()],
        constraints: m
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&e| if e { one.clone() } else { zero.clone() })
                    .collect()
            })
            .collect(),
        relations: vec![Relation::Le; m.row_count()],
        rhs: m.rows.iter().map(|&(c, t)| exact[c][t].clone()).collect(),
    }
}

/// Largest weight of `model` explainable by global assignments, with a witness.
pub fn contextual_fraction(model: &EmpiricalModel) -> Result<FractionResult, NcpError> {
    let nd = no_disturbance(model);
    if nd.max_violation > SIGNALLING_TOLERANCE {
        return Err(NcpError::Signalling(nd.max_violation));
    }
    let m = incidence(model.scenario())?;
    let lp = build_program(model, &m);
    let sol = simplex(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(NcpError::Solver(sol.status));
    }
    let ncf = sol.value.clamp(0.0, 1.0);
    let witness = m
        .columns
        .iter()
        .zip(&sol.x)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(g, &w)| (g.clone(), w))
        .collect();
    let exact = model.exact_tables().and_then(|tables| {
        let rp = build_rational_program(tables, &m);
        let e = rp.resolve_on_basis(&sol.basis)?;
        Some(ExactFraction {
            ncf: e.value,
            witness: m
                .columns
                .iter()
                .zip(e.x)
                .filter(|(_, w)| !w.is_zero())
                .map(|(g, w)| (g.clone(), w))
                .collect(),
            certified_optimal: e.certified_optimal,
        })
    });
    Ok(FractionResult {
        ncf,
        cf: 1.0 - ncf,
        witness,
        exact,
    })
}
