//! Ready-made realizations: the Hardy state, friendification of a
//! realization, half-half cycle models, and sentence extraction.

use num_complex::Complex64;
use num_rational::BigRational;
use thiserror::Error;

use crate::logic::{cycle_scenario, implications, Implication, Parity};
use crate::qstate::{premeasure_at, QStateError, SiteBasis, StateVector, EPS_ZERO};
use crate::scenario::{
    realize, support_of, EmpiricalModel, MeasurementRecipe, Observable, QuantumRealization, Scenario, ScenarioError,
    DEFAULT_SUPPORT_EPS,
};

/// Outcome reported by a friendified observable on a record that disagrees with its system.
pub const INCONSISTENT: &str = "inconsistent";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("observable `{observable}` acts on site {site} of dimension {dim}, friendification needs qubits")]
    NotQubit {
        observable: String,
        site: usize,
        dim: usize,
    },
    #[error("observable `{0}` spans several sites, friendification needs single-site recipes")]
    MultiSite(String),
    #[error("observable `{0}` has no recipe")]
    MissingRecipe(String),
    #[error(transparent)]
    QState(#[from] QStateError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T> = std::result::Result<T, BuildError>;

/// `(|00⟩ + |10⟩ + |11⟩)/√3` on sites (A, B).
pub fn hardy_state() -> StateVector {
    let a = Complex64::new((1.0f64 / 3.0).sqrt(), 0.0);
    let z = Complex64::new(0.0, 0.0);
    StateVector::new(vec![2, 2], vec![a, z, a, a]).expect("normalized")
}

/// Observables `A_c, A_d, B_c, B_d`; contexts pair one A with one B.
pub fn hardy_scenario() -> Scenario {
    Scenario::new(
        "hardy",
        vec![
            Observable::new("A_c", &["0", "1"]).expect("valid"),
            Observable::new("A_d", &["+", "-"]).expect("valid"),
            Observable::new("B_c", &["0", "1"]).expect("valid"),
            Observable::new("B_d", &["+", "-"]).expect("valid"),
        ],
        &[
            vec!["A_d", "B_c"],
            vec!["A_c", "B_c"],
            vec!["A_c", "B_d"],
            vec!["A_d", "B_d"],
        ],
    )
    .expect("valid")
}

pub fn hardy_realization() -> (QuantumRealization, Scenario) {
    let qr = QuantumRealization {
        state: hardy_state(),
        recipes: vec![
            MeasurementRecipe::direct("A_c", SiteBasis::computational(0, 2)),
            MeasurementRecipe::direct("A_d", SiteBasis::diagonal(0)),
            MeasurementRecipe::direct("B_c", SiteBasis::computational(1, 2)),
            MeasurementRecipe::direct("B_d", SiteBasis::diagonal(1)),
        ],
    };
    (qr, hardy_scenario())
}

/// The Hardy empirical model, with tables snapped to their exact rationals.
pub fn hardy_model() -> EmpiricalModel {
    let (qr, sc) = hardy_realization();
    realize(&qr, &sc).expect("hardy realizes").snapped()
}

/// Whether an observable reads its friend's record or measures the friend as a whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Observer,
    Meta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Renamed {
    pub original: String,
    pub renamed: String,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Friendified {
    pub realization: QuantumRealization,
    pub scenario: Scenario,
    /// One entry per observable, in scenario order.
    pub label_map: Vec<Renamed>,
    /// `(system, memory)` site pairs of the new state, by original site.
    pub site_pairs: Vec<(usize, usize)>,
}

impl Friendified {
    pub fn renamed(&self, original: &str) -> Option<&str> {
        self.label_map
            .iter()
            .find(|r| r.original == original)
            .map(|r| r.renamed.as_str())
    }

    pub fn level(&self, renamed: &str) -> Option<Level> {
        self.label_map.iter().find(|r| r.renamed == renamed).map(|r| r.level)
    }
}

fn stem(label: &str) -> &str {
    label.rsplit_once('_').map_or(label, |(s, _)| s)
}

fn is_computational(basis: &SiteBasis) -> bool {
    basis
        .vectors()
        .iter()
        .all(|v| v.iter().filter(|a| a.norm_sqr() > EPS_ZERO).count() == 1)
}

/// Gives every measured qubit a memory partner and lifts each observable to
/// the (system, memory) pair: `|b⟩ ↦ Σ_k ⟨k|b⟩ |kk⟩`, completed by `|01⟩, |10⟩`
/// reporting [`INCONSISTENT`].
pub fn friendify(qr: &QuantumRealization, sc: &Scenario) -> Result<Friendified> {
    let dims = qr.state.dims().to_vec();
    let mut measured: Vec<usize> = Vec::new();
    for obs in sc.observables() {
        let r = qr
            .recipe(obs.label())
            .ok_or_else(|| BuildError::MissingRecipe(obs.label().to_string()))?;
        let &[site] = r.basis.sites() else {
            return Err(BuildError::MultiSite(obs.label().to_string()));
        };
        if dims[site] != 2 {
            return Err(BuildError::NotQubit {
                observable: obs.label().to_string(),
                site,
                dim: dims[site],
            });
        }
        if !measured.contains(&site) {
            measured.push(site);
        }
    }
    measured.sort_unstable();

    let mut state = qr.state.clone();
    let mut position: Vec<usize> = (0..dims.len()).collect();
    for &site in &measured {
        let at = position[site];
        state = premeasure_at(&state, &SiteBasis::computational(at, 2), at + 1)?;
        for p in position.iter_mut().filter(|p| **p > at) {
            *p += 1;
        }
    }
    let site_pairs: Vec<(usize, usize)> = (0..dims.len()).map(|s| (position[s], position[s] + 1)).collect();

    let mut recipes = Vec::new();
    let mut observables = Vec::new();
    let mut label_map = Vec::new();
    for obs in sc.observables() {
        let r = qr.recipe(obs.label()).expect("checked above");
        let (sys, mem) = site_pairs[r.basis.sites()[0]];
        let level = if is_computational(&r.basis) {
            Level::Observer
        } else {
            Level::Meta
        };
        let renamed = format!(
            "{}_{}",
            stem(obs.label()),
            match level {
                Level::Observer => "obs",
                Level::Meta => "meta",
            }
        );
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let mut vectors: Vec<Vec<Complex64>> = r.basis.vectors().iter().map(|v| vec![v[0], z, z, v[1]]).collect();
        vectors.push(vec![z, one, z, z]);
        vectors.push(vec![z, z, one, z]);
        let mut labels = r.basis.labels().to_vec();
        labels.push("01".into());
        labels.push("10".into());
        let basis = SiteBasis::new(vec![sys, mem], vectors, labels)?;
        let mut outcome_map = r.outcome_map.clone();
        outcome_map.push(INCONSISTENT.into());
        outcome_map.push(INCONSISTENT.into());
        let mut outcomes: Vec<&str> = obs.outcomes().iter().map(String::as_str).collect();
        outcomes.push(INCONSISTENT);
        observables.push(Observable::new(renamed.clone(), &outcomes)?);
        recipes.push(MeasurementRecipe {
            observable: renamed.clone(),
            basis,
            outcome_map,
        });
        label_map.push(Renamed {
            original: obs.label().to_string(),
            renamed,
            level,
        });
    }
    let contexts: Vec<Vec<&str>> = sc
        .contexts()
        .iter()
        .map(|c| c.members().iter().map(|&m| label_map[m].renamed.as_str()).collect())
        .collect();
    let scenario = Scenario::new(friendified_name(sc.name()), observables, &contexts)?;
    Ok(Friendified {
        realization: QuantumRealization { state, recipes },
        scenario,
        label_map,
        site_pairs,
    })
}

fn friendified_name(name: &str) -> String {
    if name == "hardy" {
        "fr".into()
    } else {
        format!("{name}_friendified")
    }
}

/// The friendified Hardy realization.
pub fn fr_realization() -> Friendified {
    let (qr, sc) = hardy_realization();
    friendify(&qr, &sc).expect("hardy is qubit-only")
}

pub fn fr_model() -> EmpiricalModel {
    let f = fr_realization();
    realize(&f.realization, &f.scenario).expect("fr realizes").snapped()
}

/// Cycle model whose possible outcomes are equally likely: 1/2 each.
pub fn cycle_empirical(n: usize, parity: Parity) -> std::result::Result<EmpiricalModel, crate::logic::LogicError> {
    let sc = cycle_scenario(n, parity)?;
    let half = BigRational::new(1.into(), 2.into());
    let zero = BigRational::new(0.into(), 1.into());
    let tables = (0..n)
        .map(|c| {
            let flip = parity == Parity::Odd && c == n - 1;
            (0..4)
                .map(|t| {
                    let equal = t == 0 || t == 3;
                    if equal != flip {
                        half.clone()
                    } else {
                        zero.clone()
                    }
                })
                .collect()
        })
        .collect();
    Ok(EmpiricalModel::from_exact(sc, tables)?)
}

/// A statement read off an empirical model.
#[derive(Debug, Clone, PartialEq)]
pub enum Sentence {
    /// Within the context, the premise value forces the conclusion value.
    CertainImplication(Implication),
    /// A joint outcome of a context and its probability.
    ProbabilityStatement {
        context: usize,
        tuple: usize,
        probability: f64,
        exact: Option<BigRational>,
    },
}

impl Sentence {
    pub fn render(&self, scenario: &Scenario) -> String {
        match self {
            Sentence::CertainImplication(i) => i.render(scenario),
            Sentence::ProbabilityStatement {
                context,
                tuple,
                probability,
                exact,
            } => {
                let labels = scenario.context_labels(*context);
                let values = scenario.tuple_labels(*context, *tuple);
                let event = labels
                    .iter()
                    .zip(values)
                    .map(|(l, v)| format!("{l}={v}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                match exact {
                    Some(q) => format!("P({event}) = {probability} ({})", crate::rational::display(q)),
                    None => format!("P({event}) = {probability}"),
                }
            }
        }
    }
}

/// Certain implications with a possible premise, followed by one probability
/// statement per queried `(context, tuple)` event.
pub fn certain_implications(model: &EmpiricalModel, queries: &[(usize, usize)]) -> Result<Vec<Sentence>> {
    let support = support_of(model, DEFAULT_SUPPORT_EPS)?;
    let sc = model.scenario();
    let mut out: Vec<Sentence> = implications(&support)
        .into_iter()
        .filter(|imp| {
            let ctx = &sc.contexts()[imp.context];
            let pos = ctx.position(imp.premise.observable).expect("member");
            support.supports()[imp.context]
                .iter()
                .enumerate()
                .any(|(t, &p)| p && sc.tuple_digits(imp.context, t)[pos] == imp.premise.value)
        })
        .map(Sentence::CertainImplication)
        .collect();
    for &(context, tuple) in queries {
        out.push(Sentence::ProbabilityStatement {
            context,
            tuple,
            probability: model.table(context)[tuple],
            exact: model.exact_probability(context, tuple).cloned(),
        });
    }
    Ok(out)
}
