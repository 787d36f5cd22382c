//! Observer chains with a movable cut, and consistency of agents' claims
//! under the (Q), (NMC), (NC), (S) assumptions.
//!
//! Agents below the cut are described inside the theory: their measurement
//! is a premeasurement that entangles a fresh memory with what they observed.
//! Agents at or above the cut project, splitting the description into
//! branches. Memories are appended after all existing sites, so agent `k`
//! owns site `base.site_count() + k`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builders::Level;
use crate::logic::{LiarCycle, Literal};
use crate::qstate::{
    born, memory_basis_at, premeasure_at, project, Distribution, ProductBasis, Projection, QStateError, SiteBasis,
    StateVector, EPS_ZERO,
};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetaError {
    #[error("an observer chain needs at least one agent")]
    NoAgents,
    #[error("cut {cut} is beyond the {agents} agents of the chain")]
    InvalidCut { cut: usize, agents: usize },
    #[error("agent `{agent}`: {source}")]
    Agent { agent: String, source: QStateError },
    #[error("final basis leaves sites {0:?} unmeasured")]
    PartialFinalBasis(Vec<usize>),
    #[error("claim `{claim}` refers to unknown observable `{observable}`")]
    UnknownObservable { claim: String, observable: String },
    #[error("claim `{claim}` gives `{observable}` the unknown value `{value}`")]
    UnknownValue {
        claim: String,
        observable: String,
        value: String,
    },
    #[error("claim `{claim}` names a context that is not in the scenario")]
    UnknownContext { claim: String },
    #[error("claim `{claim}` mentions `{observable}` outside its context")]
    OutsideContext { claim: String, observable: String },
    #[error("the seed `{0}` must be an event")]
    SeedNotEvent(String),
    #[error("unknown assumption `{0}` (expected Q, NMC, NC or S)")]
    UnknownAssumption(String),
    #[error(transparent)]
    QState(#[from] QStateError),
}

pub type Result<T> = std::result::Result<T, MetaError>;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAgent {
    pub name: String,
    /// Basis on sites of the compound the agent sees: the base system and
    /// the memories of the agents before it.
    pub basis: SiteBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverChain {
    base: StateVector,
    agents: Vec<ChainAgent>,
}

impl ObserverChain {
    pub fn new(base: StateVector, agents: Vec<ChainAgent>) -> Result<Self> {
        if agents.is_empty() {
            return Err(MetaError::NoAgents);
        }
        let mut dims = base.dims().to_vec();
        for a in &agents {
            a.basis.check_against(&dims).map_err(|source| MetaError::Agent {
                agent: a.name.clone(),
                source,
            })?;
            dims.push(a.basis.len());
        }
        Ok(Self { base, agents })
    }

    pub fn base(&self) -> &StateVector {
        &self.base
    }

    pub fn agents(&self) -> &[ChainAgent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn memory_site(&self, agent: usize) -> usize {
        self.base.site_count() + agent
    }

    /// Site dimensions once every agent has left a record.
    pub fn final_dims(&self) -> Vec<usize> {
        let mut dims = self.base.dims().to_vec();
        dims.extend(self.agents.iter().map(|a| a.basis.len()));
        dims
    }

    /// Reads agent `k`'s memory in the labels of what it observed.
    pub fn memory_basis(&self, agent: usize) -> SiteBasis {
        memory_basis_at(&self.agents[agent].basis, self.memory_site(agent))
    }
}

/// Where the chain is cut: agents `< index` premeasure, agents `>= index` project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cut(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    /// Outcome seen by each projecting agent, in chain order.
    pub outcomes: Vec<(String, String)>,
    pub state: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchEnsemble {
    pub branches: Vec<Branch>,
}

impl BranchEnsemble {
    pub fn total(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Branch-weighted mixture of the Born distributions.
    pub fn distribution(&self, basis: &ProductBasis) -> Result<Distribution> {
        let parts = self
            .branches
            .iter()
            .map(|b| Ok((b.probability, born(&b.state, basis)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Distribution::mixture(parts.iter().map(|(p, d)| (*p, d))).expect("same basis"))
    }
}

/// Branches with probability below [`EPS_ZERO`] are dropped.
pub fn describe(chain: &ObserverChain, cut: Cut) -> Result<BranchEnsemble> {
    if cut.0 > chain.len() {
        return Err(MetaError::InvalidCut {
            cut: cut.0,
            agents: chain.len(),
        });
    }
    let mut branches = vec![Branch {
        probability: 1.0,
        outcomes: Vec::new(),
        state: chain.base.clone(),
    }];
    for (k, agent) in chain.agents.iter().enumerate() {
        let memory = chain.memory_site(k);
        let mut next = Vec::new();
        for b in branches {
            let state = premeasure_at(&b.state, &agent.basis, memory)?;
            if k < cut.0 {
                next.push(Branch { state, ..b });
                continue;
            }
            let reader = ProductBasis::single(chain.memory_basis(k));
            for label in agent.basis.labels() {
                if let Projection::Branch { probability, state } = project(&state, &reader, &[label])? {
                    let p = b.probability * probability;
                    if p < EPS_ZERO {
                        continue;
                    }
                    let mut outcomes = b.outcomes.clone();
                    outcomes.push((agent.name.clone(), label.clone()));
                    next.push(Branch {
                        probability: p,
                        outcomes,
                        state,
                    });
                }
            }
        }
        branches = next;
    }
    Ok(BranchEnsemble { branches })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutComparison {
    pub first: Distribution,
    pub second: Distribution,
    pub total_variation: f64,
}

/// Final statistics of two cut placements under a basis of the whole compound.
pub fn compare_cuts(chain: &ObserverChain, a: Cut, b: Cut, final_basis: &ProductBasis) -> Result<CutComparison> {
    let sites = chain.final_dims().len();
    let missing = final_basis.unmeasured_sites(sites);
    if !missing.is_empty() {
        return Err(MetaError::PartialFinalBasis(missing));
    }
    let first = describe(chain, a)?.distribution(final_basis)?;
    let second = describe(chain, b)?.distribution(final_basis)?;
    let total_variation = first.total_variation(&second).expect("same basis");
    Ok(CutComparison {
        first,
        second,
        total_variation,
    })
}

/// `{observer, object}`: who makes a statement and what they treat as a system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetaContext {
    pub observer: String,
    pub object: String,
}

impl fmt::Display for MetaContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.observer, self.object)
    }
}

/// An agent of a claim set, with the observables they report on.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub name: String,
    pub level: Level,
    pub object: String,
    pub observables: Vec<String>,
}

impl Agent {
    pub fn meta_context(&self) -> MetaContext {
        MetaContext {
            observer: self.name.clone(),
            object: self.object.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub observable: String,
    pub value: String,
}

impl Assignment {
    pub fn new(observable: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            observable: observable.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.observable, self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Proposition {
    Implication {
        context: Vec<String>,
        premise: Assignment,
        conclusion: Assignment,
    },
    Event {
        context: Vec<String>,
        values: Vec<Assignment>,
    },
}

impl Proposition {
    pub fn context(&self) -> &[String] {
        match self {
            Proposition::Implication { context, .. } | Proposition::Event { context, .. } => context,
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposition::Implication {
                premise, conclusion, ..
            } => write!(f, "{premise} => {conclusion}"),
            Proposition::Event { values, .. } => {
                let v: Vec<String> = values.iter().map(ToString::to_string).collect();
                write!(f, "{}", v.join(" & "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub id: String,
    pub agent: String,
    pub meta_context: MetaContext,
    pub proposition: Proposition,
    /// The sentence the claim was read from.
    pub provenance: String,
    /// Made by applying the theory to another observer.
    pub requires_q: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AssumptionSet {
    pub q: bool,
    pub nmc: bool,
    pub nc: bool,
    /// Recorded only: every projection here yields a single outcome.
    pub s: bool,
}

impl AssumptionSet {
    pub const ALL: Self = Self {
        q: true,
        nmc: true,
        nc: true,
        s: true,
    };

    /// The 16 sets, from all flags on down to none, Q the most significant.
    pub fn every() -> Vec<Self> {
        (0..16u8)
            .rev()
            .map(|m| Self {
                q: m & 8 != 0,
                nmc: m & 4 != 0,
                nc: m & 2 != 0,
                s: m & 1 != 0,
            })
            .collect()
    }

    /// Whether every flag of `self` is also set in `other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        (!self.q || other.q) && (!self.nmc || other.nmc) && (!self.nc || other.nc) && (!self.s || other.s)
    }
}

impl fmt::Display for AssumptionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.q, "Q"), (self.nmc, "NMC"), (self.nc, "NC"), (self.s, "S")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

impl FromStr for AssumptionSet {
    type Err = MetaError;

    fn from_str(s: &str) -> Result<Self> {
        let mut a = Self::default();
        if s.trim() == "none" || s.trim().is_empty() {
            return Ok(a);
        }
        for part in s.split(',') {
            match part.trim() {
                "Q" => a.q = true,
                "NMC" => a.nmc = true,
                "NC" => a.nc = true,
                "S" => a.s = true,
                other => return Err(MetaError::UnknownAssumption(other.to_string())),
            }
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub claim: String,
    pub agent: String,
    pub meta_context: MetaContext,
    pub premise: Assignment,
    pub conclusion: Assignment,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} in {}): {} => {}",
            self.claim, self.agent, self.meta_context, self.premise, self.conclusion
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conflict {
    pub observable: String,
    pub held: String,
    pub forced: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Everything derived from the seed, in derivation order.
    Consistent { derived: Vec<TraceStep> },
    /// The chain of steps from the seed to the clash.
    Contradiction { trace: Vec<TraceStep>, conflict: Conflict },
}

impl Verdict {
    pub fn is_contradiction(&self) -> bool {
        matches!(self, Verdict::Contradiction { .. })
    }
}

type Scope = (String, Option<MetaContext>);
type Key = (String, Option<MetaContext>, Option<Vec<String>>);

fn validate(scenario: &Scenario, claim: &Claim) -> Result<()> {
    let ctx: Vec<&str> = claim.proposition.context().iter().map(String::as_str).collect();
    for l in &ctx {
        if scenario.observable(l).is_none() {
            return Err(MetaError::UnknownObservable {
                claim: claim.id.clone(),
                observable: l.to_string(),
            });
        }
    }
    if scenario.find_context(&ctx).is_none() {
        return Err(MetaError::UnknownContext {
            claim: claim.id.clone(),
        });
    }
    let values: Vec<&Assignment> = match &claim.proposition {
        Proposition::Implication {
            premise, conclusion, ..
        } => vec![premise, conclusion],
        Proposition::Event { values, .. } => values.iter().collect(),
    };
    for a in values {
        let Some(o) = scenario.observable(&a.observable) else {
            return Err(MetaError::UnknownObservable {
                claim: claim.id.clone(),
                observable: a.observable.clone(),
            });
        };
        if !ctx.contains(&a.observable.as_str()) {
            return Err(MetaError::OutsideContext {
                claim: claim.id.clone(),
                observable: a.observable.clone(),
            });
        }
        if scenario.observables()[o].outcome_index(&a.value).is_none() {
            return Err(MetaError::UnknownValue {
                claim: claim.id.clone(),
                observable: a.observable.clone(),
                value: a.value.clone(),
            });
        }
    }
    Ok(())
}

/// Propagates the seed event through the implications the assumptions admit.
///
/// Values live in variables keyed by observable, by meta-context unless NMC
/// merges them, and by context unless NC merges them. The seed's values are
/// observed facts, visible in every context of its meta-context. Without Q,
/// claims made by applying the theory to another observer are set aside.
pub fn check_claims(scenario: &Scenario, claims: &[Claim], a: AssumptionSet, seed: &Claim) -> Result<Verdict> {
    for c in claims.iter().chain(std::iter::once(seed)) {
        validate(scenario, c)?;
    }
    let Proposition::Event {
        values: seed_values, ..
    } = &seed.proposition
    else {
        return Err(MetaError::SeedNotEvent(seed.id.clone()));
    };
    let mc_scope = |m: &MetaContext| if a.nmc { None } else { Some(m.clone()) };
    let ctx_scope = |c: &[String]| if a.nc { None } else { Some(c.to_vec()) };

    let mut facts: BTreeMap<Scope, String> = BTreeMap::new();
    for v in seed_values {
        facts.insert((v.observable.clone(), mc_scope(&seed.meta_context)), v.value.clone());
    }
    // value, and the step that derived it with its premise variable
    let mut derived: BTreeMap<Key, (String, usize, Key)> = BTreeMap::new();
    let mut steps: Vec<TraceStep> = Vec::new();

    let lookup = |derived: &BTreeMap<Key, (String, usize, Key)>, key: &Key| -> Option<String> {
        derived
            .get(key)
            .map(|(v, _, _)| v.clone())
            .or_else(|| facts.get(&(key.0.clone(), key.1.clone())).cloned())
    };

    let admitted: Vec<&Claim> = claims.iter().filter(|c| a.q || !c.requires_q).collect();
    loop {
        let mut changed = false;
        for claim in &admitted {
            let Proposition::Implication {
                context,
                premise,
                conclusion,
            } = &claim.proposition
            else {
                continue;
            };
            let pk: Key = (
                premise.observable.clone(),
                mc_scope(&claim.meta_context),
                ctx_scope(context),
            );
            if lookup(&derived, &pk).as_deref() != Some(premise.value.as_str()) {
                continue;
            }
            let ck: Key = (
                conclusion.observable.clone(),
                mc_scope(&claim.meta_context),
                ctx_scope(context),
            );
            let step = TraceStep {
                claim: claim.id.clone(),
                agent: claim.agent.clone(),
                meta_context: claim.meta_context.clone(),
                premise: premise.clone(),
                conclusion: conclusion.clone(),
            };
            match lookup(&derived, &ck) {
                Some(v) if v == conclusion.value => {}
                Some(held) => {
                    let mut trace = vec![step];
                    let mut key = pk;
                    while let Some((_, idx, parent)) = derived.get(&key) {
                        trace.push(steps[*idx].clone());
                        key = parent.clone();
                    }
                    trace.reverse();
                    return Ok(Verdict::Contradiction {
                        trace,
                        conflict: Conflict {
                            observable: conclusion.observable.clone(),
                            held,
                            forced: conclusion.value.clone(),
                        },
                    });
                }
                None => {
                    derived.insert(ck, (conclusion.value.clone(), steps.len(), pk));
                    steps.push(step);
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(Verdict::Consistent { derived: steps });
        }
    }
}

/// The claims read off a Liar cycle: one per step, made by the agent who
/// reports the premise, plus the seed event, made by the agent who reports
/// the seed context's last observable. Ids are `{prefix}1`, `{prefix}2`, ...
/// with the seed last.
pub fn cycle_claims(
    scenario: &Scenario,
    cycle: &LiarCycle,
    agents: &[Agent],
    prefix: &str,
    seed_provenance: &str,
) -> (Vec<Claim>, Claim) {
    let owner = |obs: usize| {
        let label = scenario.observables()[obs].label();
        agents.iter().find(|a| a.observables.iter().any(|o| o == label))
    };
    let requires_q = |ctx: usize| {
        scenario.contexts()[ctx]
            .members()
            .iter()
            .any(|&m| owner(m).is_some_and(|a| a.level == Level::Meta))
    };
    let labels = |ctx: usize| -> Vec<String> { scenario.context_labels(ctx).iter().map(|s| s.to_string()).collect() };
    let assign = |l: &Literal| {
        let o = &scenario.observables()[l.observable];
        Assignment::new(o.label(), o.outcomes()[l.value].clone())
    };
    let attribute = |obs: usize| match owner(obs) {
        Some(a) => (a.name.clone(), a.meta_context()),
        None => {
            let label = scenario.observables()[obs].label().to_string();
            (
                label.clone(),
                MetaContext {
                    observer: label,
                    object: "system".into(),
                },
            )
        }
    };
    let claims = cycle
        .steps
        .iter()
        .enumerate()
        .map(|(k, step)| {
            let (agent, meta_context) = attribute(step.premise.observable);
            Claim {
                id: format!("{prefix}{}", k + 1),
                agent,
                meta_context,
                proposition: Proposition::Implication {
                    context: labels(step.context),
                    premise: assign(&step.premise),
                    conclusion: assign(&step.conclusion),
                },
                provenance: step.render(scenario),
                requires_q: requires_q(step.context),
            }
        })
        .collect();
    let last = *scenario.contexts()[cycle.seed_context]
        .members()
        .last()
        .expect("nonempty context");
    let (agent, meta_context) = attribute(last);
    let seed = Claim {
        id: format!("{prefix}{}", cycle.steps.len() + 1),
        agent,
        meta_context,
        proposition: Proposition::Event {
            context: labels(cycle.seed_context),
            values: cycle.seed.iter().map(assign).collect(),
        },
        provenance: seed_provenance.to_string(),
        requires_q: requires_q(cycle.seed_context),
    };
    (claims, seed)
}

/// Alice and Bob measure their friends; the friends read their qubits.
pub fn fr_agents() -> Vec<Agent> {
    let agent = |name: &str, level, object: &str, obs: &str| Agent {
        name: name.into(),
        level,
        object: object.into(),
        observables: vec![obs.into()],
    };
    vec![
        agent("Alice", Level::Meta, "Friend_A⊗S_A", "A_meta"),
        agent("Bob", Level::Meta, "Friend_B⊗S_B", "B_meta"),
        agent("Friend_A", Level::Observer, "S_A", "A_obs"),
        agent("Friend_B", Level::Observer, "S_B", "B_obs"),
    ]
}

/// `|+⟩` observed by a friend in the computational basis.
pub fn wigner_chain() -> ObserverChain {
    ObserverChain::new(
        StateVector::plus(),
        vec![ChainAgent {
            name: "Friend".into(),
            basis: SiteBasis::computational(0, 2),
        }],
    )
    .expect("valid chain")
}
