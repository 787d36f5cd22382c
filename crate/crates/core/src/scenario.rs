//! Measurement scenarios, empirical models and their quantum realizations.
//!
//! A context's joint outcomes are ordered lexicographically by the
//! declared outcome order of its observables, first observable most
//! significant. Every table in an [`EmpiricalModel`] uses that order.

use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::logic::PossibilisticModel;
use crate::qstate::{born, ProductBasis, QStateError, SiteBasis, StateVector, EPS_ND, EPS_ZERO};
use crate::rational;

/// Default threshold separating possible from impossible outcomes.
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("observable label is empty")]
    EmptyLabel,
    #[error("observable `{0}` is declared twice")]
    DuplicateObservable(String),
    #[error("observable `{0}` needs at least two outcomes")]
    TooFewOutcomes(String),
    #[error("observable `{observable}` repeats outcome `{outcome}`")]
    DuplicateOutcome { observable: String, outcome: String },
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("context {context} lists `{observable}` twice")]
    RepeatedInContext { context: usize, observable: String },
    #[error("context {0} is empty")]
    EmptyContext(usize),
    #[error("contexts {0} and {1} are identical")]
    DuplicateContext(usize, usize),
    #[error("observable `{0}` belongs to no context")]
    UncoveredObservable(String),
    #[error("expected {expected} tables, got {got}")]
    TableCount { expected: usize, got: usize },
    #[error("table for context {context} has {got} entries, expected {expected}")]
    TableLength {
        context: usize,
        expected: usize,
        got: usize,
    },
    #[error("table for context {context} sums to {sum}")]
    NotNormalized { context: usize, sum: f64 },
    #[error("table for context {context} has negative entry {value}")]
    NegativeProbability { context: usize, value: f64 },
    #[error("no measurement recipe for observable `{0}`")]
    MissingRecipe(String),
    #[error("observable `{observable}` maps to unknown outcome `{outcome}`")]
    UnknownOutcome { observable: String, outcome: String },
    #[error("recipe for `{observable}` has {labels} labels for {vectors} basis vectors")]
    RecipeArity {
        observable: String,
        vectors: usize,
        labels: usize,
    },
    #[error("observables `{0}` and `{1}` share a site in context {2}")]
    OverlappingSites(String, String, usize),
    #[error("context {0} has no possible outcome")]
    EmptySupport(usize),
    #[error(transparent)]
    QState(#[from] QStateError),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    label: String,
    outcomes: Vec<String>,
}

impl Observable {
    pub fn new(label: impl Into<String>, outcomes: &[&str]) -> Result<Self> {
        let label = label.into();
        let outcomes: Vec<String> = outcomes.iter().map(|s| s.to_string()).collect();
        if label.is_empty() {
            return Err(ScenarioError::EmptyLabel);
        }
        if outcomes.len() < 2 {
            return Err(ScenarioError::TooFewOutcomes(label));
        }
        for (i, o) in outcomes.iter().enumerate() {
            if outcomes[..i].contains(o) {
                return Err(ScenarioError::DuplicateOutcome {
                    observable: label,
                    outcome: o.clone(),
                });
            }
        }
        Ok(Self { label, outcomes })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }
}

/// A set of jointly measurable observables, stored as indices into the scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    members: Vec<usize>,
}

impl Context {
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, observable: usize) -> bool {
        self.members.contains(&observable)
    }

    pub fn position(&self, observable: usize) -> Option<usize> {
        self.members.iter().position(|&m| m == observable)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    name: String,
    observables: Vec<Observable>,
    contexts: Vec<Context>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, observables: Vec<Observable>, contexts: &[Vec<&str>]) -> Result<Self> {
        for (i, o) in observables.iter().enumerate() {
            if observables[..i].iter().any(|p| p.label == o.label) {
                return Err(ScenarioError::DuplicateObservable(o.label.clone()));
            }
        }
        let mut resolved = Vec::with_capacity(contexts.len());
        for (c, labels) in contexts.iter().enumerate() {
            if labels.is_empty() {
                return Err(ScenarioError::EmptyContext(c));
            }
            let mut members = Vec::with_capacity(labels.len());
            for l in labels {
                let idx = observables
                    .iter()
                    .position(|o| o.label == *l)
                    .ok_or_else(|| ScenarioError::UnknownObservable(l.to_string()))?;
                if members.contains(&idx) {
                    return Err(ScenarioError::RepeatedInContext {
                        context: c,
                        observable: l.to_string(),
                    });
                }
                members.push(idx);
            }
            resolved.push(Context { members });
        }
        for i in 0..resolved.len() {
            for j in 0..i {
                let mut a = resolved[i].members.clone();
                let mut b = resolved[j].members.clone();
                a.sort_unstable();
                b.sort_unstable();
                if a == b {
                    return Err(ScenarioError::DuplicateContext(j, i));
                }
            }
        }
        for (i, o) in observables.iter().enumerate() {
            if !resolved.iter().any(|c| c.contains(i)) {
                return Err(ScenarioError::UncoveredObservable(o.label.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            observables,
            contexts: resolved,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn observable(&self, label: &str) -> Option<usize> {
        self.observables.iter().position(|o| o.label == label)
    }

    pub fn context_labels(&self, context: usize) -> Vec<&str> {
        self.contexts[context]
            .members
            .iter()
            .map(|&m| self.observables[m].label.as_str())
            .collect()
    }

    /// Finds a context by its member labels, in any order.
    pub fn find_context(&self, labels: &[&str]) -> Option<usize> {
        let mut wanted: Vec<usize> = labels.iter().map(|l| self.observable(l)).collect::<Option<_>>()?;
        wanted.sort_unstable();
        self.contexts.iter().position(|c| {
            let mut m = c.members.clone();
            m.sort_unstable();
            m == wanted
        })
    }

    /// Number of joint outcomes of a context.
    pub fn tuple_count(&self, context: usize) -> usize {
        self.contexts[context]
            .members
            .iter()
            .map(|&m| self.observables[m].outcomes.len())
            .product()
    }

    /// Outcome indices of the `index`-th joint outcome of a context.
    pub fn tuple_digits(&self, context: usize, mut index: usize) -> Vec<usize> {
        let members = &self.contexts[context].members;
        let mut digits = vec![0; members.len()];
        for k in (0..members.len()).rev() {
            let n = self.observables[members[k]].outcomes.len();
            digits[k] = index % n;
            index /= n;
        }
        digits
    }

    pub fn tuple_index(&self, context: usize, digits: &[usize]) -> usize {
        self.contexts[context]
            .members
            .iter()
            .zip(digits)
            .fold(0, |acc, (&m, &d)| acc * self.observables[m].outcomes.len() + d)
    }

    pub fn tuple_labels(&self, context: usize, index: usize) -> Vec<&str> {
        self.contexts[context]
            .members
            .iter()
            .zip(self.tuple_digits(context, index))
            .map(|(&m, d)| self.observables[m].outcomes[d].as_str())
            .collect()
    }

    /// Resolves outcome labels (in context order) to a joint-outcome index.
    pub fn resolve_tuple(&self, context: usize, labels: &[&str]) -> Option<usize> {
        let members = &self.contexts[context].members;
        if labels.len() != members.len() {
            return None;
        }
        let digits: Vec<usize> = members
            .iter()
            .zip(labels)
            .map(|(&m, l)| self.observables[m].outcome_index(l))
            .collect::<Option<_>>()?;
        Some(self.tuple_index(context, &digits))
    }

    /// Total number of global value assignments, saturating.
    pub fn assignment_count(&self) -> u128 {
        self.observables
            .iter()
            .try_fold(1u128, |acc, o| acc.checked_mul(o.outcomes.len() as u128))
            .unwrap_or(u128::MAX)
    }
}

/// One probability table per context.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    scenario: Scenario,
    tables: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<BigRational>>>,
}

impl EmpiricalModel {
    pub fn new(scenario: Scenario, tables: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&scenario, tables.iter().map(Vec::len).collect())?;
        for (c, t) in tables.iter().enumerate() {
            if let Some(&v) = t.iter().find(|&&v| v < -EPS_ZERO || !v.is_finite()) {
                return Err(ScenarioError::NegativeProbability { context: c, value: v });
            }
            let sum: f64 = t.iter().sum();
            if (sum - 1.0).abs() > EPS_ND {
                return Err(ScenarioError::NotNormalized { context: c, sum });
            }
        }
        let tables = tables
            .into_iter()
            .map(|t| t.into_iter().map(|v| v.max(0.0)).collect())
            .collect();
        Ok(Self {
            scenario,
            tables,
            exact: None,
        })
    }

    /// Builds a model from exact tables; each must sum to exactly 1.
    pub fn from_exact(scenario: Scenario, exact: Vec<Vec<BigRational>>) -> Result<Self> {
        check_shape(&scenario, exact.iter().map(Vec::len).collect())?;
        for (c, t) in exact.iter().enumerate() {
            if let Some(v) = t.iter().find(|v| !rational::is_nonnegative(v)) {
                return Err(ScenarioError::NegativeProbability {
                    context: c,
                    value: rational::to_f64(v),
                });
            }
            let sum: BigRational = t.iter().sum();
            if !sum.is_one() {
                return Err(ScenarioError::NotNormalized {
                    context: c,
                    sum: rational::to_f64(&sum),
                });
            }
        }
        let tables = exact.iter().map(|t| t.iter().map(rational::to_f64).collect()).collect();
        Ok(Self {
            scenario,
            tables,
            exact: Some(exact),
        })
    }

    /// Replaces every entry by a nearby small-denominator rational when all of
    /// them snap and the snapped tables are normalized; otherwise returns `self`.
    pub fn snapped(self) -> Self {
        if self.exact.is_some() {
            return self;
        }
        let exact: Option<Vec<Vec<BigRational>>> = self
            .tables
            .iter()
            .map(|t| t.iter().map(|&v| rational::snap(v)).collect())
            .collect();
        match exact {
            Some(exact) if exact.iter().all(|t| t.iter().sum::<BigRational>().is_one()) => {
                Self::from_exact(self.scenario.clone(), exact).unwrap_or(self)
            }
            _ => self,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn table(&self, context: usize) -> &[f64] {
        &self.tables[context]
    }

    pub fn exact_tables(&self) -> Option<&[Vec<BigRational>]> {
        self.exact.as_deref()
    }

    /// Probability of a joint outcome given by labels in context order.
    pub fn probability(&self, context: usize, labels: &[&str]) -> Option<f64> {
        self.scenario
            .resolve_tuple(context, labels)
            .map(|i| self.tables[context][i])
    }

    pub fn exact_probability(&self, context: usize, index: usize) -> Option<&BigRational> {
        self.exact.as_ref().map(|e| &e[context][index])
    }

    /// Marginal of a context's table on a subset of its observables (given as
    /// scenario indices), ordered like the subset.
    pub fn marginal(&self, context: usize, subset: &[usize]) -> Vec<f64> {
        let ctx = &self.scenario.contexts[context];
        let positions: Vec<usize> = subset
            .iter()
            .map(|&o| ctx.position(o).expect("observable in context"))
            .collect();
        let radices: Vec<usize> = subset
            .iter()
            .map(|&o| self.scenario.observables[o].outcomes.len())
            .collect();
        let mut out = vec![0.0; radices.iter().product()];
        for (i, &p) in self.tables[context].iter().enumerate() {
            let digits = self.scenario.tuple_digits(context, i);
            let j = positions
                .iter()
                .zip(&radices)
                .fold(0, |acc, (&pos, &r)| acc * r + digits[pos]);
            out[j] += p;
        }
        out
    }
}

fn check_shape(scenario: &Scenario, lens: Vec<usize>) -> Result<()> {
    if lens.len() != scenario.contexts.len() {
        return Err(ScenarioError::TableCount {
            expected: scenario.contexts.len(),
            got: lens.len(),
        });
    }
    for (c, len) in lens.into_iter().enumerate() {
        let expected = scenario.tuple_count(c);
        if len != expected {
            return Err(ScenarioError::TableLength {
                context: c,
                expected,
                got: len,
            });
        }
    }
    Ok(())
}

/// Marginal disagreement between two contexts on their shared observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub observables: Vec<String>,
    pub contexts: (usize, usize),
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoDisturbanceReport {
    pub max_violation: f64,
    pub pairs: Vec<Disturbance>,
}

impl NoDisturbanceReport {
    pub fn holds(&self) -> bool {
        self.max_violation <= EPS_ND
    }
}

/// Compares marginals on the shared observables of every pair of contexts.
pub fn no_disturbance(model: &EmpiricalModel) -> NoDisturbanceReport {
    let sc = &model.scenario;
    let mut pairs = Vec::new();
    let mut max_violation: f64 = 0.0;
    for a in 0..sc.contexts.len() {
        for b in a + 1..sc.contexts.len() {
            let mut shared: Vec<usize> = sc.contexts[a]
                .members
                .iter()
                .copied()
                .filter(|&o| sc.contexts[b].contains(o))
                .collect();
            if shared.is_empty() {
                continue;
            }
            shared.sort_unstable();
            let ma = model.marginal(a, &shared);
            let mb = model.marginal(b, &shared);
            let violation = ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            max_violation = max_violation.max(violation);
            pairs.push(Disturbance {
                observables: shared.iter().map(|&o| sc.observables[o].label.clone()).collect(),
                contexts: (a, b),
                violation,
            });
        }
    }
    NoDisturbanceReport { max_violation, pairs }
}

/// Possibilistic collapse: an outcome is possible iff its probability exceeds `eps`.
pub fn support_of(model: &EmpiricalModel, eps: f64) -> Result<PossibilisticModel> {
    let supports = model
        .tables
        .iter()
        .map(|t| t.iter().map(|&p| p > eps).collect())
        .collect();
    PossibilisticModel::new(model.scenario.clone(), supports)
}

/// How one observable is measured: a basis on a site group and the outcome
/// each basis vector reports (several vectors may report the same outcome).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecipe {
    pub observable: String,
    pub basis: SiteBasis,
    pub outcome_map: Vec<String>,
}

impl MeasurementRecipe {
    /// Recipe whose outcomes are the basis labels themselves.
    pub fn direct(observable: impl Into<String>, basis: SiteBasis) -> Self {
        let outcome_map = basis.labels().to_vec();
        Self {
            observable: observable.into(),
            basis,
            outcome_map,
        }
    }
}

/// A state plus a recipe for every observable of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRealization {
    pub state: StateVector,
    pub recipes: Vec<MeasurementRecipe>,
}

impl QuantumRealization {
    pub fn recipe(&self, observable: &str) -> Option<&MeasurementRecipe> {
        self.recipes.iter().find(|r| r.observable == observable)
    }
}

/// Born tables of every context of `scenario` under `qr`.
pub fn realize(qr: &QuantumRealization, scenario: &Scenario) -> Result<EmpiricalModel> {
    let mut tables = Vec::with_capacity(scenario.contexts.len());
    for (c, ctx) in scenario.contexts.iter().enumerate() {
        let mut recipes = Vec::with_capacity(ctx.members.len());
        for &m in &ctx.members {
            let obs = &scenario.observables[m];
            let r = qr
                .recipe(&obs.label)
                .ok_or_else(|| ScenarioError::MissingRecipe(obs.label.clone()))?;
            if r.outcome_map.len() != r.basis.len() {
                return Err(ScenarioError::RecipeArity {
                    observable: obs.label.clone(),
                    vectors: r.basis.len(),
                    labels: r.outcome_map.len(),
                });
            }
            recipes.push((obs, r));
        }
        for i in 0..recipes.len() {
            for j in 0..i {
                if recipes[i]
                    .1
                    .basis
                    .sites()
                    .iter()
                    .any(|s| recipes[j].1.basis.sites().contains(s))
                {
                    return Err(ScenarioError::OverlappingSites(
                        recipes[j].0.label.clone(),
                        recipes[i].0.label.clone(),
                        c,
                    ));
                }
            }
        }
        let basis = ProductBasis::new(recipes.iter().map(|(_, r)| r.basis.clone()).collect())?;
        let dist = born(&qr.state, &basis)?;
        let mut table = vec![0.0; scenario.tuple_count(c)];
        for (labels, p) in dist.iter() {
            let mut digits = Vec::with_capacity(labels.len());
            for ((obs, r), l) in recipes.iter().zip(labels) {
                let k = r.basis.label_index(l).expect("label from basis");
                let outcome = &r.outcome_map[k];
                digits.push(
                    obs.outcome_index(outcome)
                        .ok_or_else(|| ScenarioError::UnknownOutcome {
                            observable: obs.label.clone(),
                            outcome: outcome.clone(),
                        })?,
                );
            }
            table[scenario.tuple_index(c, &digits)] += p;
        }
        tables.push(table);
    }
    EmpiricalModel::new(scenario.clone(), tables)
}

/// Product of independent marginals, used for deterministic and mixed product models.
pub fn product_model(scenario: Scenario, marginals: &[Vec<f64>]) -> Result<EmpiricalModel> {
    let tables = (0..scenario.contexts.len())
        .map(|c| {
            (0..scenario.tuple_count(c))
                .map(|i| {
                    scenario.contexts[c]
                        .members
                        .iter()
                        .zip(scenario.tuple_digits(c, i))
                        .map(|(&m, d)| marginals[m][d])
                        .product()
                })
                .collect()
        })
        .collect();
    EmpiricalModel::new(scenario, tables)
}

/// Uniform tables on every context.
pub fn uniform_model(scenario: Scenario) -> EmpiricalModel {
    let exact = (0..scenario.contexts.len())
        .map(|c| {
            let n = scenario.tuple_count(c);
            vec![BigRational::new(1.into(), (n as i64).into()); n]
        })
        .collect();
    EmpiricalModel::from_exact(scenario, exact).expect("uniform tables are normalized")
}
