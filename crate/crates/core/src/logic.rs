//! Possibilistic analysis: global sections, extendability, the
//! contextuality hierarchy and Liar-cycle extraction.
//!
//! A *certain implication* `X=x ⇒ Y=y` holds in a context when every
//! possible joint outcome of that context with `X=x` also has `Y=y`. Every
//! global section satisfies every certain implication, so a chain of them
//! starting at a seed and ending on a conflicting value proves that the seed
//! extends to no global section.

use std::fmt;

use thiserror::Error;

use crate::scenario::{Observable, Scenario, ScenarioError};

/// Exhaustive enumeration is refused beyond this many global assignments.
pub const MAX_ASSIGNMENTS: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicError {
    #[error("{0} global assignments exceed the enumeration limit of 2^24")]
    TooManyAssignments(u128),
    #[error("outcome {tuple} of context {context} is not possible")]
    NotInSupport { context: usize, tuple: usize },
    #[error("context {0} does not exist")]
    UnknownContext(usize),
    #[error("cycle models need at least 3 observables, got {0}")]
    CycleTooShort(usize),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T> = std::result::Result<T, LogicError>;

/// Per-context sets of possible joint outcomes (indexed like the tables).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PossibilisticModel {
    scenario: Scenario,
    supports: Vec<Vec<bool>>,
}

impl PossibilisticModel {
    pub fn new(scenario: Scenario, supports: Vec<Vec<bool>>) -> std::result::Result<Self, ScenarioError> {
        if supports.len() != scenario.contexts().len() {
            return Err(ScenarioError::TableCount {
                expected: scenario.contexts().len(),
                got: supports.len(),
            });
        }
        for (c, s) in supports.iter().enumerate() {
            let expected = scenario.tuple_count(c);
            if s.len() != expected {
                return Err(ScenarioError::TableLength {
                    context: c,
                    expected,
                    got: s.len(),
                });
            }
            if !s.iter().any(|&b| b) {
                return Err(ScenarioError::EmptySupport(c));
            }
        }
        Ok(Self { scenario, supports })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn supports(&self) -> &[Vec<bool>] {
        &self.supports
    }

    pub fn is_possible(&self, context: usize, tuple: usize) -> bool {
        self.supports[context][tuple]
    }

    /// Every (context, tuple) pair in the support, in declaration order.
    pub fn possible_tuples(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.supports
            .iter()
            .enumerate()
            .flat_map(|(c, s)| s.iter().enumerate().filter(|(_, &b)| b).map(move |(t, _)| (c, t)))
    }

    fn check_tuple(&self, context: usize, tuple: usize) -> Result<()> {
        let s = self.supports.get(context).ok_or(LogicError::UnknownContext(context))?;
        if !s.get(tuple).copied().unwrap_or(false) {
            return Err(LogicError::NotInSupport { context, tuple });
        }
        Ok(())
    }
}

/// One outcome index per observable: a noncontextual value assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalAssignment {
    values: Vec<usize>,
}

impl GlobalAssignment {
    pub fn new(values: Vec<usize>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn value(&self, observable: usize) -> usize {
        self.values[observable]
    }

    /// Index of the joint outcome this assignment induces on a context.
    pub fn restrict(&self, scenario: &Scenario, context: usize) -> usize {
        let digits: Vec<usize> = scenario.contexts()[context]
            .members()
            .iter()
            .map(|&m| self.values[m])
            .collect();
        scenario.tuple_index(context, &digits)
    }

    /// `label=value` pairs in observable order.
    pub fn labels<'a>(&self, scenario: &'a Scenario) -> Vec<(&'a str, &'a str)> {
        scenario
            .observables()
            .iter()
            .zip(&self.values)
            .map(|(o, &v)| (o.label(), o.outcomes()[v].as_str()))
            .collect()
    }
}

/// Backtracking over observables in declaration order, outcomes ascending,
/// so sections come out lexicographically sorted.
struct SectionSearch<'a> {
    model: &'a PossibilisticModel,
    /// contexts to check once observable `k` is assigned (`k` is their last member)
    closing: Vec<Vec<usize>>,
    fixed: Vec<Option<usize>>,
}

impl<'a> SectionSearch<'a> {
    fn new(model: &'a PossibilisticModel) -> Result<Self> {
        let sc = &model.scenario;
        let count = sc.assignment_count();
        if count > MAX_ASSIGNMENTS {
            return Err(LogicError::TooManyAssignments(count));
        }
        let mut closing = vec![Vec::new(); sc.observables().len()];
        for (c, ctx) in sc.contexts().iter().enumerate() {
            let last = *ctx.members().iter().max().expect("contexts are nonempty");
            closing[last].push(c);
        }
        Ok(Self {
            model,
            closing,
            fixed: vec![None; sc.observables().len()],
        })
    }

    fn run(&self, limit: Option<usize>) -> Vec<GlobalAssignment> {
        let mut out = Vec::new();
        let mut values = vec![0; self.fixed.len()];
        self.descend(0, &mut values, &mut out, limit);
        out
    }

    fn descend(
        &self,
        k: usize,
        values: &mut Vec<usize>,
        out: &mut Vec<GlobalAssignment>,
        limit: Option<usize>,
    ) -> bool {
        if limit.is_some_and(|l| out.len() >= l) {
            return true;
        }
        if k == values.len() {
            out.push(GlobalAssignment::new(values.clone()));
            return limit.is_some_and(|l| out.len() >= l);
        }
        let sc = &self.model.scenario;
        let range: Vec<usize> = match self.fixed[k] {
            Some(v) => vec![v],
            None => (0..sc.observables()[k].outcomes().len()).collect(),
        };
        for v in range {
            values[k] = v;
            let ok = self.closing[k].iter().all(|&c| {
                let digits: Vec<usize> = sc.contexts()[c].members().iter().map(|&m| values[m]).collect();
                self.model.supports[c][sc.tuple_index(c, &digits)]
            });
            if ok && self.descend(k + 1, values, out, limit) {
                return true;
            }
        }
        false
    }
}

/// All global sections, lexicographically ordered.
pub fn global_sections(model: &PossibilisticModel) -> Result<Vec<GlobalAssignment>> {
    Ok(SectionSearch::new(model)?.run(None))
}

/// Whether some global section restricts to `tuple` on `context`.
pub fn extends_to_global(model: &PossibilisticModel, context: usize, tuple: usize) -> Result<bool> {
    model.check_tuple(context, tuple)?;
    let mut search = SectionSearch::new(model)?;
    let sc = &model.scenario;
    for (&m, d) in sc.contexts()[context]
        .members()
        .iter()
        .zip(sc.tuple_digits(context, tuple))
    {
        search.fixed[m] = Some(d);
    }
    Ok(!search.run(Some(1)).is_empty())
}

/// Position of a possibilistic model in the contextuality hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    /// Every possible local outcome extends to a global section.
    GloballyExtendable,
    /// Global sections exist but some possible local outcome extends to none.
    LogicallyContextual,
    /// No global section exists.
    StronglyContextual,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::GloballyExtendable => "GloballyExtendable",
            Classification::LogicallyContextual => "LogicallyContextual",
            Classification::StronglyContextual => "StronglyContextual",
        })
    }
}

impl std::str::FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "GloballyExtendable" => Ok(Self::GloballyExtendable),
            "LogicallyContextual" => Ok(Self::LogicallyContextual),
            "StronglyContextual" => Ok(Self::StronglyContextual),
            other => Err(format!("unknown classification `{other}`")),
        }
    }
}

/// Possible local outcomes that no global section restricts to.
pub fn non_extendable(model: &PossibilisticModel, sections: &[GlobalAssignment]) -> Vec<(usize, usize)> {
    let sc = &model.scenario;
    let mut covered: Vec<Vec<bool>> = model.supports.iter().map(|s| vec![false; s.len()]).collect();
    for g in sections {
        for (c, cov) in covered.iter_mut().enumerate() {
            cov[g.restrict(sc, c)] = true;
        }
    }
    model.possible_tuples().filter(|&(c, t)| !covered[c][t]).collect()
}

pub fn classify(model: &PossibilisticModel) -> Result<Classification> {
    let sections = global_sections(model)?;
    Ok(classify_with(model, &sections))
}

pub(crate) fn classify_with(model: &PossibilisticModel, sections: &[GlobalAssignment]) -> Classification {
    if sections.is_empty() {
        Classification::StronglyContextual
    } else if non_extendable(model, sections).is_empty() {
        Classification::GloballyExtendable
    } else {
        Classification::LogicallyContextual
    }
}

/// An observable taking one of its outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub observable: usize,
    pub value: usize,
}

impl Literal {
    pub fn render(&self, scenario: &Scenario) -> String {
        let o: &Observable = &scenario.observables()[self.observable];
        format!("{}={}", o.label(), o.outcomes()[self.value])
    }
}

/// `premise ⇒ conclusion`, certain within `context`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Implication {
    pub context: usize,
    pub premise: Literal,
    pub conclusion: Literal,
}

impl Implication {
    /// Whether every possible outcome of the context with the premise has the conclusion.
    pub fn holds_in(&self, model: &PossibilisticModel) -> bool {
        let sc = &model.scenario;
        let ctx = &sc.contexts()[self.context];
        let (Some(pp), Some(pc)) = (
            ctx.position(self.premise.observable),
            ctx.position(self.conclusion.observable),
        ) else {
            return false;
        };
        model.supports[self.context].iter().enumerate().all(|(t, &possible)| {
            let d = sc.tuple_digits(self.context, t);
            !possible || d[pp] != self.premise.value || d[pc] == self.conclusion.value
        })
    }

    fn sort_key(&self, scenario: &Scenario) -> (usize, usize, usize, usize, usize, bool) {
        let ctx = &scenario.contexts()[self.context];
        let pp = ctx.position(self.premise.observable).unwrap_or(usize::MAX);
        let pc = ctx.position(self.conclusion.observable).unwrap_or(usize::MAX);
        let (a, b) = if pp < pc {
            ((pp, self.premise.value), (pc, self.conclusion.value))
        } else {
            ((pc, self.conclusion.value), (pp, self.premise.value))
        };
        (self.context, a.0, a.1, b.0, b.1, pp > pc)
    }

    pub fn render(&self, scenario: &Scenario) -> String {
        format!(
            "{} => {}",
            self.premise.render(scenario),
            self.conclusion.render(scenario)
        )
    }
}

/// Every certain implication between two members of a context, sorted by
/// (context index, joint outcome of the pair, direction). Vacuous ones,
/// whose premise is impossible in the context, are included.
pub fn implications(model: &PossibilisticModel) -> Vec<Implication> {
    let sc = &model.scenario;
    let mut out = Vec::new();
    for (c, ctx) in sc.contexts().iter().enumerate() {
        for &x in ctx.members() {
            for &y in ctx.members() {
                if x == y {
                    continue;
                }
                for xv in 0..sc.observables()[x].outcomes().len() {
                    for yv in 0..sc.observables()[y].outcomes().len() {
                        let imp = Implication {
                            context: c,
                            premise: Literal {
                                observable: x,
                                value: xv,
                            },
                            conclusion: Literal {
                                observable: y,
                                value: yv,
                            },
                        };
                        if imp.holds_in(model) {
                            out.push(imp);
                        }
                    }
                }
            }
        }
    }
    out.sort_by_key(|i| i.sort_key(sc));
    out
}

/// A chain of certain implications from a seed to a conflicting value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiarCycle {
    pub seed_context: usize,
    pub seed_tuple: usize,
    /// The seed's values, in context order.
    pub seed: Vec<Literal>,
    /// The first premise is a seed value; each later premise is the previous conclusion.
    pub steps: Vec<Implication>,
    /// The value already held that the last conclusion contradicts.
    pub contradicted: Literal,
}

impl LiarCycle {
    /// Number of contexts around the cycle, the seed's context included.
    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Re-checks every step against the supports, independently of the search.
    pub fn verify(&self, model: &PossibilisticModel) -> bool {
        let sc = &model.scenario;
        if model.check_tuple(self.seed_context, self.seed_tuple).is_err() {
            return false;
        }
        let expected: Vec<Literal> = sc.contexts()[self.seed_context]
            .members()
            .iter()
            .zip(sc.tuple_digits(self.seed_context, self.seed_tuple))
            .map(|(&observable, value)| Literal { observable, value })
            .collect();
        if expected != self.seed || self.steps.is_empty() {
            return false;
        }
        if !self.seed.contains(&self.steps[0].premise) {
            return false;
        }
        for w in self.steps.windows(2) {
            if w[0].conclusion != w[1].premise {
                return false;
            }
        }
        if !self.steps.iter().all(|s| s.holds_in(model)) {
            return false;
        }
        let last = self.steps.last().expect("nonempty").conclusion;
        let held: Vec<Literal> = self
            .seed
            .iter()
            .copied()
            .chain(self.steps.iter().map(|s| s.conclusion))
            .collect();
        last.observable == self.contradicted.observable
            && last.value != self.contradicted.value
            && held[..held.len() - 1].contains(&self.contradicted)
    }

    /// `A=a ∧ B=b => C=c => ... (contradicts X=x)`.
    pub fn render(&self, scenario: &Scenario) -> String {
        let mut s = self
            .seed
            .iter()
            .map(|l| l.render(scenario))
            .collect::<Vec<_>>()
            .join(" & ");
        for step in &self.steps {
            s.push_str(" => ");
            s.push_str(&step.conclusion.render(scenario));
        }
        s.push_str(&format!(" (contradicts {})", self.contradicted.render(scenario)));
        s
    }
}

/// Shortest Liar cycle from a possible seed outcome, or `None` if the seed
/// extends to a global section or no chain of certain implications refutes it.
///
/// Ties between equally short chains go to the lexicographically smallest
/// sequence of (context index, pair outcome) keys.
pub fn liar_cycles(model: &PossibilisticModel, context: usize, tuple: usize) -> Result<Option<LiarCycle>> {
    model.check_tuple(context, tuple)?;
    if extends_to_global(model, context, tuple)? {
        return Ok(None);
    }
    Ok(search_chain(model, context, tuple))
}

pub(crate) fn search_chain(model: &PossibilisticModel, context: usize, tuple: usize) -> Option<LiarCycle> {
    let sc = &model.scenario;
    let seed: Vec<Literal> = sc.contexts()[context]
        .members()
        .iter()
        .zip(sc.tuple_digits(context, tuple))
        .map(|(&observable, value)| Literal { observable, value })
        .collect();
    let edges = implications(model);
    let literal_count: usize = sc.observables().iter().map(|o| o.outcomes().len()).sum();
    let mut held: Vec<Option<usize>> = vec![None; sc.observables().len()];
    for l in &seed {
        held[l.observable] = Some(l.value);
    }
    let mut path = Vec::new();
    for depth in 1..=literal_count {
        if let Some(contradicted) = deepen(&edges, &seed, &mut held, &mut path, depth) {
            return Some(LiarCycle {
                seed_context: context,
                seed_tuple: tuple,
                seed,
                steps: path,
                contradicted,
            });
        }
    }
    None
}

fn deepen(
    edges: &[Implication],
    seed: &[Literal],
    held: &mut Vec<Option<usize>>,
    path: &mut Vec<Implication>,
    remaining: usize,
) -> Option<Literal> {
    let frontier: Option<Literal> = path.last().map(|s: &Implication| s.conclusion);
    for e in edges {
        let starts_here = match frontier {
            Some(f) => e.premise == f,
            None => seed.contains(&e.premise),
        };
        if !starts_here {
            continue;
        }
        let target = e.conclusion;
        match held[target.observable] {
            Some(v) if v == target.value => continue,
            Some(v) if remaining == 1 => {
                path.push(*e);
                return Some(Literal {
                    observable: target.observable,
                    value: v,
                });
            }
            Some(_) => continue,
            None if remaining > 1 => {
                held[target.observable] = Some(target.value);
                path.push(*e);
                if let Some(c) = deepen(edges, seed, held, path, remaining - 1) {
                    return Some(c);
                }
                path.pop();
                held[target.observable] = None;
            }
            None => {}
        }
    }
    None
}

/// Parity of the closing edge of a cycle model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// The closing edge also says "equal": consistent.
    Even,
    /// The closing edge says "unequal": no global section.
    Odd,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

impl std::str::FromStr for Parity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(format!("parity must be `odd` or `even`, got `{other}`")),
        }
    }
}

/// Scenario of `n` binary observables `S1..Sn` with contexts `{S_i, S_i+1}`
/// around a ring; the last context is `{Sn, S1}`.
pub fn cycle_scenario(n: usize, parity: Parity) -> Result<Scenario> {
    if n < 3 {
        return Err(LogicError::CycleTooShort(n));
    }
    let labels: Vec<String> = (1..=n).map(|i| format!("S{i}")).collect();
    let observables = labels
        .iter()
        .map(|l| Observable::new(l.as_str(), &["0", "1"]))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let contexts: Vec<Vec<&str>> = (0..n)
        .map(|i| vec![labels[i].as_str(), labels[(i + 1) % n].as_str()])
        .collect();
    Ok(Scenario::new(format!("cycle_{n}_{parity}"), observables, &contexts)?)
}

/// Liar-cycle model: every edge supports "equal" (`00`, `11`) except the
/// closing edge, which supports "unequal" (`01`, `10`) for odd parity.
pub fn cycle_model(n: usize, parity: Parity) -> Result<PossibilisticModel> {
    let sc = cycle_scenario(n, parity)?;
    let supports = (0..n)
        .map(|c| {
            if c == n - 1 && parity == Parity::Odd {
                vec![false, true, true, false]
            } else {
                vec![true, false, false, true]
            }
        })
        .collect();
    Ok(PossibilisticModel::new(sc, supports)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(sc: Scenario) -> PossibilisticModel {
        let supports = (0..sc.contexts().len())
            .map(|c| vec![true; sc.tuple_count(c)])
            .collect();
        PossibilisticModel::new(sc, supports).unwrap()
    }

    #[test]
    fn cycle_sections_by_parity() {
        let even = cycle_model(3, Parity::Even).unwrap();
        let sections = global_sections(&even).unwrap();
        assert_eq!(
            sections,
            vec![
                GlobalAssignment::new(vec![0, 0, 0]),
                GlobalAssignment::new(vec![1, 1, 1])
            ]
        );
        assert!(global_sections(&cycle_model(3, Parity::Odd).unwrap())
            .unwrap()
            .is_empty());
        assert!(global_sections(&cycle_model(4, Parity::Odd).unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn cycle_too_short() {
        assert_eq!(cycle_model(2, Parity::Odd).unwrap_err(), LogicError::CycleTooShort(2));
    }

    #[test]
    fn full_support_has_every_assignment() {
        let sc = Scenario::new(
            "full",
            (0..4)
                .map(|i| Observable::new(format!("X{i}"), &["0", "1"]).unwrap())
                .collect(),
            &[vec!["X0", "X1"], vec!["X2", "X3"], vec!["X1", "X2"]],
        )
        .unwrap();
        let m = full(sc);
        let sections = global_sections(&m).unwrap();
        assert_eq!(sections.len(), 16);
        assert!(sections.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(classify(&m).unwrap(), Classification::GloballyExtendable);
    }

    #[test]
    fn single_context_tuples_extend() {
        let sc = Scenario::new(
            "one",
            vec![
                Observable::new("A", &["0", "1"]).unwrap(),
                Observable::new("B", &["0", "1"]).unwrap(),
            ],
            &[vec!["A", "B"]],
        )
        .unwrap();
        let m = PossibilisticModel::new(sc, vec![vec![true, false, false, true]]).unwrap();
        assert!(extends_to_global(&m, 0, 0).unwrap());
        assert!(extends_to_global(&m, 0, 3).unwrap());
        assert_eq!(
            extends_to_global(&m, 0, 1).unwrap_err(),
            LogicError::NotInSupport { context: 0, tuple: 1 }
        );
    }

    #[test]
    fn odd_cycle_chain_closes_on_seed_observable() {
        for n in [3, 4, 5] {
            let m = cycle_model(n, Parity::Odd).unwrap();
            assert_eq!(classify(&m).unwrap(), Classification::StronglyContextual);
            let cycle = liar_cycles(&m, 0, 0).unwrap().expect("odd cycle refutes every seed");
            assert_eq!(cycle.len(), n);
            assert!(cycle.verify(&m));
            let seed_obs: Vec<usize> = cycle.seed.iter().map(|l| l.observable).collect();
            assert!(seed_obs.contains(&cycle.contradicted.observable));
        }
    }

    #[test]
    fn odd_five_cycle_chain_text() {
        let m = cycle_model(5, Parity::Odd).unwrap();
        let c = liar_cycles(&m, 0, 0).unwrap().unwrap();
        assert_eq!(
            c.render(m.scenario()),
            "S1=0 & S2=0 => S3=0 => S4=0 => S5=0 => S1=1 (contradicts S1=0)"
        );
    }

    #[test]
    fn even_cycle_has_no_liar() {
        let m = cycle_model(4, Parity::Even).unwrap();
        assert_eq!(liar_cycles(&m, 0, 0).unwrap(), None);
    }

    #[test]
    fn verify_rejects_tampered_cycles() {
        let m = cycle_model(4, Parity::Odd).unwrap();
        let good = liar_cycles(&m, 1, 3).unwrap().unwrap();
        assert!(good.verify(&m));
        let mut bad = good.clone();
        bad.steps[0].conclusion.value ^= 1;
        assert!(!bad.verify(&m));
        let mut bad = good.clone();
        bad.contradicted.value ^= 1;
        assert!(!bad.verify(&m));
        let mut bad = good;
        bad.steps.swap(0, 1);
        assert!(!bad.verify(&m));
    }

    #[test]
    fn enumeration_guard() {
        let n = 25;
        let obs: Vec<Observable> = (0..n)
            .map(|i| Observable::new(format!("X{i}"), &["0", "1"]).unwrap())
            .collect();
        let labels: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
        let ctx: Vec<Vec<&str>> = (0..n - 1)
            .map(|i| vec![labels[i].as_str(), labels[i + 1].as_str()])
            .collect();
        let m = full(Scenario::new("big", obs, &ctx).unwrap());
        assert!(matches!(global_sections(&m), Err(LogicError::TooManyAssignments(_))));
    }
}
