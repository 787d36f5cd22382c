//! The analysis pipeline behind the command line, and its report.
//!
//! A report is plain data: the text form is rendered from it alone, so a
//! report read back from JSON renders to the same bytes.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builders::{certain_implications, cycle_empirical, fr_realization, hardy_model, Sentence};
use crate::format::{ChainSpec, Document, FinalBasis};
use crate::logic::{
    classify_with, global_sections, liar_cycles, non_extendable, Classification, LiarCycle, LogicError, Parity,
};
use crate::metacontext::{
    check_claims, cycle_claims, describe, fr_agents, wigner_chain, Assignment, AssumptionSet, Claim, Cut, MetaError,
    Verdict,
};
use crate::ncpoly::{contextual_fraction, NcpError};
use crate::qstate::{ProductBasis, SiteBasis};
use crate::rational;
use crate::scenario::{no_disturbance, support_of, EmpiricalModel, Scenario, ScenarioError, DEFAULT_SUPPORT_EPS};

/// Global sections listed in a report; the count is always complete.
pub const LISTED_SECTIONS: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("model is signalling (max marginal violation {0}); the noncontextual fraction is undefined")]
    Signalling(f64),
    #[error("`{0}` needs observables and contexts, the file only has a chain")]
    NoScenario(String),
    #[error("seed: {0}")]
    Seed(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Ncp(#[from] NcpError),
    #[error(transparent)]
    Meta(#[from] MetaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Ncf,
    Cycles,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Ncf => "ncf",
            Command::Cycles => "cycles",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    /// Probabilities above this are possible.
    pub eps: f64,
    /// Check claims under this set only, instead of all sixteen.
    pub assumptions: Option<AssumptionSet>,
    /// Restrict Liar-cycle search to one `(context, tuple)` seed.
    pub seed: Option<(usize, usize)>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            eps: DEFAULT_SUPPORT_EPS,
            assumptions: None,
            seed: None,
        }
    }
}

/// A probability, with its exact value when one is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prob {
    pub value: f64,
    pub exact: Option<String>,
}

impl Prob {
    fn exact(q: &BigRational) -> Self {
        Self {
            value: rational::to_f64(q),
            exact: Some(rational::display(q)),
        }
    }

    fn float(value: f64) -> Self {
        Self { value, exact: None }
    }

    /// Born probabilities: floats, shown with a nearby small fraction when there is one.
    fn snapped(value: f64) -> Self {
        match rational::snap(value) {
            Some(q) => Self::exact(&q),
            None => Self::float(value),
        }
    }

    fn text(&self) -> String {
        match &self.exact {
            Some(q) if *q != format!("{}", self.value) => format!("{} ({q})", self.value),
            _ => format!("{}", self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableInfo {
    pub label: String,
    pub outcomes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub outcome: Vec<String>,
    pub probability: Prob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableInfo {
    pub context: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoDisturbanceInfo {
    pub max_violation: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionsInfo {
    pub count: usize,
    pub listed: Vec<Vec<Assignment>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub context: Vec<String>,
    pub premise: Assignment,
    pub conclusion: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub context: Vec<String>,
    pub seed: Vec<Assignment>,
    pub extends: bool,
    /// Contexts around the cycle, the seed's included; absent when none was found.
    pub length: Option<usize>,
    pub steps: Vec<StepInfo>,
    pub contradicts: Option<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightInfo {
    pub assignment: Vec<Assignment>,
    pub weight: Prob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionInfo {
    pub ncf: Prob,
    pub cf: Prob,
    pub certified_optimal: bool,
    pub witness: Vec<WeightInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SentenceInfo {
    Implication {
        context: Vec<String>,
        premise: Assignment,
        conclusion: Assignment,
    },
    Probability {
        context: Vec<String>,
        event: Vec<Assignment>,
        probability: Prob,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimInfo {
    pub id: String,
    pub agent: String,
    pub meta_context: String,
    pub context: Vec<String>,
    pub statement: String,
    pub provenance: String,
    pub requires_q: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceInfo {
    pub claim: String,
    pub agent: String,
    pub meta_context: String,
    pub premise: Assignment,
    pub conclusion: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictInfo {
    pub observable: String,
    pub held: String,
    pub forced: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictInfo {
    pub assumptions: String,
    pub contradiction: bool,
    /// The derivation of the clash, or everything derived when consistent.
    pub trace: Vec<TraceInfo>,
    pub conflict: Option<ConflictInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimsInfo {
    pub claims: Vec<ClaimInfo>,
    pub seed: ClaimInfo,
    pub seed_probability: Prob,
    pub verdicts: Vec<VerdictInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAgentInfo {
    pub name: String,
    pub sites: Vec<usize>,
    pub memory_site: usize,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutInfo {
    pub cut: usize,
    pub branches: usize,
    pub distribution: Vec<Prob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceInfo {
    pub first: usize,
    pub second: usize,
    pub total_variation: Prob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalInfo {
    pub name: String,
    pub outcomes: Vec<String>,
    pub cuts: Vec<CutInfo>,
    pub distances: Vec<DistanceInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainInfo {
    pub base_dims: Vec<usize>,
    pub agents: Vec<ChainAgentInfo>,
    pub finals: Vec<FinalInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub command: String,
    pub scenario: String,
    pub observables: Vec<ObservableInfo>,
    pub contexts: Vec<Vec<String>>,
    pub tables: Vec<TableInfo>,
    pub no_disturbance: Option<NoDisturbanceInfo>,
    pub support_eps: Option<f64>,
    pub classification: Option<String>,
    pub note: Option<String>,
    pub global_sections: Option<SectionsInfo>,
    pub liar_cycles: Option<Vec<CycleInfo>>,
    pub fraction: Option<FractionInfo>,
    pub sentences: Option<Vec<SentenceInfo>>,
    pub claims: Option<ClaimsInfo>,
    pub chain: Option<ChainInfo>,
}

/// The built-in examples of the `demo` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demo {
    Hardy,
    Fr,
    Wigner,
    Cycle(usize, Parity),
}

pub fn demo_document(demo: Demo) -> Result<Document, ReportError> {
    let empty = |name: &str| Document {
        name: name.into(),
        scenario: None,
        tables: None,
        realization: None,
        agents: Vec::new(),
        chain: None,
    };
    Ok(match demo {
        Demo::Hardy => {
            let m = hardy_model();
            Document {
                scenario: Some(m.scenario().clone()),
                tables: Some(m),
                ..empty("hardy")
            }
        }
        Demo::Fr => {
            let f = fr_realization();
            Document {
                scenario: Some(f.scenario),
                realization: Some(f.realization),
                agents: fr_agents(),
                ..empty("fr")
            }
        }
        Demo::Wigner => {
            let chain = wigner_chain();
            let records =
                ProductBasis::new(vec![SiteBasis::computational(0, 2), chain.memory_basis(0)]).expect("disjoint");
            Document {
                chain: Some(ChainSpec {
                    finals: vec![
                        FinalBasis {
                            name: "bell".into(),
                            basis: ProductBasis::single(SiteBasis::bell(0, 1)),
                        },
                        FinalBasis {
                            name: "records".into(),
                            basis: records,
                        },
                    ],
                    chain,
                }),
                ..empty("wigner")
            }
        }
        Demo::Cycle(n, parity) => {
            let m = cycle_empirical(n, parity)?;
            Document {
                name: m.scenario().name().to_string(),
                scenario: Some(m.scenario().clone()),
                tables: Some(m),
                ..empty("")
            }
        }
    })
}

fn labels(sc: &Scenario, c: usize) -> Vec<String> {
    sc.context_labels(c).iter().map(|s| s.to_string()).collect()
}

fn event(sc: &Scenario, c: usize, t: usize) -> Vec<Assignment> {
    sc.context_labels(c)
        .iter()
        .zip(sc.tuple_labels(c, t))
        .map(|(o, v)| Assignment::new(*o, v))
        .collect()
}

fn probability(m: &EmpiricalModel, c: usize, t: usize) -> Prob {
    match m.exact_probability(c, t) {
        Some(q) => Prob::exact(q),
        None => Prob::float(m.table(c)[t]),
    }
}

fn cycle_info(sc: &Scenario, c: usize, t: usize, cycle: Option<&LiarCycle>, extends: bool) -> CycleInfo {
    let assign = |l: &crate::logic::Literal| {
        let o = &sc.observables()[l.observable];
        Assignment::new(o.label(), o.outcomes()[l.value].clone())
    };
    CycleInfo {
        context: labels(sc, c),
        seed: event(sc, c, t),
        extends,
        length: cycle.map(LiarCycle::len),
        steps: cycle
            .map(|cy| {
                cy.steps
                    .iter()
                    .map(|s| StepInfo {
                        context: labels(sc, s.context),
                        premise: assign(&s.premise),
                        conclusion: assign(&s.conclusion),
                    })
                    .collect()
            })
            .unwrap_or_default(),
        contradicts: cycle.map(|cy| assign(&cy.contradicted)),
    }
}

fn claim_info(c: &Claim) -> ClaimInfo {
    ClaimInfo {
        id: c.id.clone(),
        agent: c.agent.clone(),
        meta_context: c.meta_context.to_string(),
        context: c.proposition.context().to_vec(),
        statement: c.proposition.to_string(),
        provenance: c.provenance.clone(),
        requires_q: c.requires_q,
    }
}

fn verdict_info(a: AssumptionSet, v: Verdict) -> VerdictInfo {
    let trace = |steps: Vec<crate::metacontext::TraceStep>| {
        steps
            .into_iter()
            .map(|s| TraceInfo {
                claim: s.claim,
                agent: s.agent,
                meta_context: s.meta_context.to_string(),
                premise: s.premise,
                conclusion: s.conclusion,
            })
            .collect()
    };
    match v {
        Verdict::Consistent { derived } => VerdictInfo {
            assumptions: a.to_string(),
            contradiction: false,
            trace: trace(derived),
            conflict: None,
        },
        Verdict::Contradiction { trace: t, conflict } => VerdictInfo {
            assumptions: a.to_string(),
            contradiction: true,
            trace: trace(t),
            conflict: Some(ConflictInfo {
                observable: conflict.observable,
                held: conflict.held,
                forced: conflict.forced,
            }),
        },
    }
}

fn claim_prefix(name: &str) -> String {
    let p: String = name
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .collect::<String>()
        .to_uppercase();
    if p.is_empty() {
        "C".into()
    } else {
        p
    }
}

fn chain_info(spec: &ChainSpec) -> Result<ChainInfo, ReportError> {
    let chain = &spec.chain;
    let n = chain.len();
    let ensembles = (0..=n)
        .map(|c| describe(chain, Cut(c)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut finals = Vec::new();
    for f in &spec.finals {
        let dists = ensembles
            .iter()
            .map(|e| e.distribution(&f.basis))
            .collect::<Result<Vec<_>, _>>()?;
        let outcomes = dists[0].outcomes().iter().map(|o| o.join(" ")).collect();
        let cuts = dists
            .iter()
            .zip(&ensembles)
            .enumerate()
            .map(|(c, (d, e))| CutInfo {
                cut: c,
                branches: e.len(),
                distribution: d.probabilities().iter().map(|&p| Prob::snapped(p)).collect(),
            })
            .collect();
        let distances = (0..n)
            .map(|c| DistanceInfo {
                first: c,
                second: n,
                total_variation: Prob::snapped(dists[c].total_variation(&dists[n]).expect("same basis")),
            })
            .collect();
        finals.push(FinalInfo {
            name: f.name.clone(),
            outcomes,
            cuts,
            distances,
        });
    }
    Ok(ChainInfo {
        base_dims: chain.base().dims().to_vec(),
        agents: chain
            .agents()
            .iter()
            .enumerate()
            .map(|(k, a)| ChainAgentInfo {
                name: a.name.clone(),
                sites: a.basis.sites().to_vec(),
                memory_site: chain.memory_site(k),
                labels: a.basis.labels().to_vec(),
            })
            .collect(),
        finals,
    })
}

const TRIANGLE_NOTE: &str =
    "logical illustration only; pairwise compatible observables on a triangle are jointly measurable, so no quantum realization exists";

/// Three observables whose contexts are exactly the three pairs.
fn is_triangle(sc: &Scenario) -> bool {
    if sc.observables().len() != 3 || sc.contexts().len() != 3 {
        return false;
    }
    let mut pairs: Vec<Vec<usize>> = sc
        .contexts()
        .iter()
        .map(|c| {
            let mut m = c.members().to_vec();
            m.sort_unstable();
            m
        })
        .collect();
    pairs.sort();
    pairs == [vec![0, 1], vec![0, 2], vec![1, 2]]
}

/// Runs `command` on a document.
pub fn analyze(doc: &Document, command: Command, options: &Options) -> Result<AnalysisReport, ReportError> {
    let mut report = AnalysisReport {
        command: command.name().into(),
        scenario: doc.name.clone(),
        observables: Vec::new(),
        contexts: Vec::new(),
        tables: Vec::new(),
        no_disturbance: None,
        support_eps: None,
        classification: None,
        note: None,
        global_sections: None,
        liar_cycles: None,
        fraction: None,
        sentences: None,
        claims: None,
        chain: None,
    };
    if command == Command::Analyze {
        if let Some(spec) = &doc.chain {
            report.chain = Some(chain_info(spec)?);
        }
    }
    let Some(model) = doc.model() else {
        if command == Command::Analyze {
            return Ok(report);
        }
        return Err(ReportError::NoScenario(command.name().into()));
    };
    let sc = model.scenario();
    report.observables = sc
        .observables()
        .iter()
        .map(|o| ObservableInfo {
            label: o.label().into(),
            outcomes: o.outcomes().to_vec(),
        })
        .collect();
    report.contexts = (0..sc.contexts().len()).map(|c| labels(sc, c)).collect();
    if command == Command::Analyze {
        report.tables = (0..sc.contexts().len())
            .map(|c| TableInfo {
                context: labels(sc, c),
                rows: (0..sc.tuple_count(c))
                    .map(|t| Row {
                        outcome: sc.tuple_labels(c, t).iter().map(|s| s.to_string()).collect(),
                        probability: probability(&model, c, t),
                    })
                    .collect(),
            })
            .collect();
    }
    let nd = no_disturbance(&model);
    report.no_disturbance = Some(NoDisturbanceInfo {
        max_violation: nd.max_violation,
        holds: nd.holds(),
    });

    if command != Command::Ncf {
        let support = support_of(&model, options.eps)?;
        report.support_eps = Some(options.eps);
        let sections = global_sections(&support)?;
        let class = classify_with(&support, &sections);
        report.classification = Some(class.to_string());
        if class != Classification::GloballyExtendable && is_triangle(sc) {
            report.note = Some(TRIANGLE_NOTE.into());
        }
        report.global_sections = Some(SectionsInfo {
            count: sections.len(),
            listed: sections
                .iter()
                .take(LISTED_SECTIONS)
                .map(|g| g.labels(sc).into_iter().map(|(o, v)| Assignment::new(o, v)).collect())
                .collect(),
        });
        let seeds: Vec<(usize, usize)> = match options.seed {
            Some((c, t)) => {
                if c >= sc.contexts().len() || t >= sc.tuple_count(c) || !support.is_possible(c, t) {
                    return Err(ReportError::Seed(format!(
                        "outcome {t} of context {c} is not a possible outcome of the model"
                    )));
                }
                vec![(c, t)]
            }
            None => non_extendable(&support, &sections),
        };
        let mut cycles = Vec::new();
        let mut infos = Vec::new();
        for (c, t) in seeds {
            let cycle = liar_cycles(&support, c, t)?;
            let extends = cycle.is_none() && crate::logic::extends_to_global(&support, c, t)?;
            infos.push(cycle_info(sc, c, t, cycle.as_ref(), extends));
            if let Some(cy) = cycle {
                cycles.push(cy);
            }
        }
        report.liar_cycles = Some(infos);

        if command == Command::Analyze {
            let queries: Vec<(usize, usize)> = cycles.iter().map(|c| (c.seed_context, c.seed_tuple)).collect();
            let sentences = certain_implications(&model, &queries).expect("support already computed");
            report.sentences = Some(
                sentences
                    .iter()
                    .map(|s| match s {
                        Sentence::CertainImplication(i) => {
                            let o = |l: &crate::logic::Literal| {
                                let ob = &sc.observables()[l.observable];
                                Assignment::new(ob.label(), ob.outcomes()[l.value].clone())
                            };
                            SentenceInfo::Implication {
                                context: labels(sc, i.context),
                                premise: o(&i.premise),
                                conclusion: o(&i.conclusion),
                            }
                        }
                        Sentence::ProbabilityStatement { context, tuple, .. } => SentenceInfo::Probability {
                            context: labels(sc, *context),
                            event: event(sc, *context, *tuple),
                            probability: probability(&model, *context, *tuple),
                        },
                    })
                    .collect(),
            );
            if !doc.agents.is_empty() {
                if let Some(cy) = cycles.first() {
                    let seed_sentence = sentences
                        .iter()
                        .find(|s| {
                            matches!(s, Sentence::ProbabilityStatement { context, tuple, .. }
                            if (*context, *tuple) == (cy.seed_context, cy.seed_tuple))
                        })
                        .expect("queried");
                    let (claims, seed) =
                        cycle_claims(sc, cy, &doc.agents, &claim_prefix(&doc.name), &seed_sentence.render(sc));
                    let sets = match options.assumptions {
                        Some(a) => vec![a],
                        None => AssumptionSet::every(),
                    };
                    let verdicts = sets
                        .into_iter()
                        .map(|a| Ok(verdict_info(a, check_claims(sc, &claims, a, &seed)?)))
                        .collect::<Result<Vec<_>, ReportError>>()?;
                    report.claims = Some(ClaimsInfo {
                        claims: claims.iter().map(claim_info).collect(),
                        seed: claim_info(&seed),
                        seed_probability: probability(&model, cy.seed_context, cy.seed_tuple),
                        verdicts,
                    });
                }
            }
        }
    }

    if command != Command::Cycles {
        match contextual_fraction(&model) {
            Ok(r) => {
                report.fraction = Some(match &r.exact {
                    Some(e) => FractionInfo {
                        ncf: Prob::exact(&e.ncf),
                        cf: Prob::exact(&(BigRational::one() - &e.ncf)),
                        certified_optimal: e.certified_optimal,
                        witness: e
                            .witness
                            .iter()
                            .map(|(g, w)| WeightInfo {
                                assignment: g.labels(sc).into_iter().map(|(o, v)| Assignment::new(o, v)).collect(),
                                weight: Prob::exact(w),
                            })
                            .collect(),
                    },
                    None => FractionInfo {
                        ncf: Prob::float(r.ncf),
                        cf: Prob::float(r.cf),
                        certified_optimal: false,
                        witness: r
                            .witness
                            .iter()
                            .map(|(g, w)| WeightInfo {
                                assignment: g.labels(sc).into_iter().map(|(o, v)| Assignment::new(o, v)).collect(),
                                weight: Prob::float(*w),
                            })
                            .collect(),
                    },
                });
            }
            Err(NcpError::Signalling(v)) if command == Command::Ncf => return Err(ReportError::Signalling(v)),
            Err(NcpError::Signalling(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(report)
}

fn assignments(a: &[Assignment]) -> String {
    a.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn context_text(c: &[String]) -> String {
    format!("[{}]", c.join(" "))
}

/// The text form of a report; depends on nothing but the report itself.
pub fn render_text(r: &AnalysisReport) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "scenario: {}", r.scenario);
    let _ = writeln!(o, "command: {}", r.command);
    if !r.observables.is_empty() {
        let obs: Vec<String> = r
            .observables
            .iter()
            .map(|x| format!("{}{{{}}}", x.label, x.outcomes.join(",")))
            .collect();
        let _ = writeln!(o, "observables: {}", obs.join(" "));
        let ctx: Vec<String> = r.contexts.iter().map(|c| context_text(c)).collect();
        let _ = writeln!(o, "contexts: {}", ctx.join(" "));
    }
    if !r.tables.is_empty() {
        let _ = writeln!(o, "\ntables");
        for t in &r.tables {
            let _ = writeln!(o, "  {}", context_text(&t.context));
            for row in &t.rows {
                let _ = writeln!(o, "    {}  {}", row.outcome.join(" "), row.probability.text());
            }
        }
    }
    if let Some(nd) = &r.no_disturbance {
        let _ = writeln!(
            o,
            "\nno-disturbance: max violation {:.3e} ({})",
            nd.max_violation,
            if nd.holds { "holds" } else { "violated" }
        );
    }
    if let Some(eps) = r.support_eps {
        let _ = writeln!(o, "support eps: {eps}");
    }
    if let Some(c) = &r.classification {
        let _ = writeln!(o, "classification: {c}");
    }
    if let Some(n) = &r.note {
        let _ = writeln!(o, "note: {n}");
    }
    if let Some(g) = &r.global_sections {
        let _ = writeln!(o, "global sections: {}", g.count);
        for s in &g.listed {
            let _ = writeln!(o, "  {}", assignments(s));
        }
        if g.count > g.listed.len() {
            let _ = writeln!(o, "  ... {} more", g.count - g.listed.len());
        }
    }
    if let Some(cycles) = &r.liar_cycles {
        let _ = writeln!(
            o,
            "\nliar cycles: {}",
            cycles.iter().filter(|c| c.length.is_some()).count()
        );
        for c in cycles {
            let head = format!("{} {}", context_text(&c.context), assignments(&c.seed));
            match (&c.length, &c.contradicts) {
                (Some(len), Some(x)) => {
                    let _ = writeln!(o, "  seed {head}: length {len}, contradicts {x}");
                    for s in &c.steps {
                        let _ = writeln!(
                            o,
                            "    {} => {}  in {}",
                            s.premise,
                            s.conclusion,
                            context_text(&s.context)
                        );
                    }
                }
                _ if c.extends => {
                    let _ = writeln!(o, "  seed {head}: extends to a global section");
                }
                _ => {
                    let _ = writeln!(o, "  seed {head}: no chain of certain implications refutes it");
                }
            }
        }
    }
    if let Some(f) = &r.fraction {
        let _ = writeln!(o, "\nnoncontextual fraction: {}", f.ncf.text());
        let _ = writeln!(o, "contextual fraction: {}", f.cf.text());
        let _ = writeln!(
            o,
            "certified optimal: {}",
            if f.certified_optimal { "yes" } else { "no" }
        );
        let _ = writeln!(o, "witness: {} assignments", f.witness.len());
        for w in &f.witness {
            let _ = writeln!(o, "  {}  {}", w.weight.text(), assignments(&w.assignment));
        }
    } else if r.command != "cycles" && r.no_disturbance.as_ref().is_some_and(|nd| nd.max_violation > 1e-6) {
        let _ = writeln!(o, "\nnoncontextual fraction: undefined for a signalling model");
    }
    if let Some(ss) = &r.sentences {
        let _ = writeln!(o, "\nsentences: {}", ss.len());
        for s in ss {
            match s {
                SentenceInfo::Implication {
                    context,
                    premise,
                    conclusion,
                } => {
                    let _ = writeln!(o, "  {premise} => {conclusion}  in {}", context_text(context));
                }
                SentenceInfo::Probability { event, probability, .. } => {
                    let e: Vec<String> = event.iter().map(ToString::to_string).collect();
                    let _ = writeln!(o, "  P({}) = {}", e.join(", "), probability.text());
                }
            }
        }
    }
    if let Some(c) = &r.claims {
        let _ = writeln!(o, "\nclaims");
        for cl in &c.claims {
            let q = if cl.requires_q { "  [Q]" } else { "" };
            let _ = writeln!(
                o,
                "  {} by {} in {}: {}{q}",
                cl.id, cl.agent, cl.meta_context, cl.statement
            );
        }
        let _ = writeln!(
            o,
            "  seed {} by {} in {}: {} with probability {}",
            c.seed.id,
            c.seed.agent,
            c.seed.meta_context,
            c.seed.statement,
            c.seed_probability.text()
        );
        let _ = writeln!(
            o,
            "  (S) is always satisfied here: each projection yields one outcome per branch"
        );
        let _ = writeln!(o, "\nverdicts");
        for v in &c.verdicts {
            if v.contradiction {
                let _ = writeln!(o, "  {}: Contradiction", v.assumptions);
                for s in &v.trace {
                    let _ = writeln!(
                        o,
                        "    {} ({} in {}): {} => {}",
                        s.claim, s.agent, s.meta_context, s.premise, s.conclusion
                    );
                }
                if let Some(x) = &v.conflict {
                    let _ = writeln!(o, "    {} forced to {} against {}", x.observable, x.forced, x.held);
                }
            } else {
                let _ = writeln!(o, "  {}: Consistent ({} derived)", v.assumptions, v.trace.len());
                for s in &v.trace {
                    let _ = writeln!(
                        o,
                        "    {} ({} in {}): {} => {}",
                        s.claim, s.agent, s.meta_context, s.premise, s.conclusion
                    );
                }
            }
        }
    }
    if let Some(ch) = &r.chain {
        let dims: Vec<String> = ch.base_dims.iter().map(ToString::to_string).collect();
        let _ = writeln!(o, "\nobserver chain on sites of dimension {}", dims.join(" "));
        for a in &ch.agents {
            let sites: Vec<String> = a.sites.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                o,
                "  {} observes sites {} and records on site {} ({})",
                a.name,
                sites.join(","),
                a.memory_site,
                a.labels.join(" ")
            );
        }
        for f in &ch.finals {
            let _ = writeln!(o, "\nfinal basis {}", f.name);
            let _ = writeln!(
                o,
                "  outcomes: {}",
                f.outcomes
                    .iter()
                    .map(|x| format!("[{x}]"))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            for c in &f.cuts {
                let p: Vec<String> = c.distribution.iter().map(Prob::text).collect();
                let _ = writeln!(
                    o,
                    "  cut {}, {} branch{}: {}",
                    c.cut,
                    c.branches,
                    if c.branches == 1 { "" } else { "es" },
                    p.join(", ")
                );
            }
            for d in &f.distances {
                let _ = writeln!(
                    o,
                    "  total variation, cut {} vs cut {}: {}",
                    d.first,
                    d.second,
                    d.total_variation.text()
                );
            }
        }
    }
    o
}

pub fn to_json(r: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("plain data");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> serde_json::Result<AnalysisReport> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(d: Demo) -> AnalysisReport {
        analyze(&demo_document(d).unwrap(), Command::Analyze, &Options::default()).unwrap()
    }

    #[test]
    fn hardy_report() {
        let r = run(Demo::Hardy);
        assert_eq!(r.classification.as_deref(), Some("LogicallyContextual"));
        assert_eq!(r.global_sections.as_ref().unwrap().count, 5);
        let cycles = r.liar_cycles.as_ref().unwrap();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].length, Some(4));
        assert_eq!(r.fraction.as_ref().unwrap().ncf.exact.as_deref(), Some("5/6"));
        let text = render_text(&r);
        assert!(text.contains("P(A_d=-, B_d=-) = 0.08333333333333333 (1/12)"), "{text}");
    }

    #[test]
    fn fr_report() {
        let r = run(Demo::Fr);
        let c = r.claims.as_ref().unwrap();
        assert_eq!(c.verdicts.len(), 16);
        assert!(c.verdicts[0].contradiction);
        assert_eq!(c.verdicts.iter().filter(|v| v.contradiction).count(), 2);
        assert_eq!(c.seed_probability.exact.as_deref(), Some("1/12"));
    }

    #[test]
    fn wigner_report() {
        let r = run(Demo::Wigner);
        let ch = r.chain.unwrap();
        assert_eq!(ch.finals[0].distances[0].total_variation.exact.as_deref(), Some("1/2"));
        assert_eq!(ch.finals[1].distances[0].total_variation.value, 0.0);
    }

    #[test]
    fn json_round_trip() {
        for d in [Demo::Hardy, Demo::Fr, Demo::Wigner, Demo::Cycle(5, Parity::Odd)] {
            let r = run(d);
            let back = from_json(&to_json(&r)).unwrap();
            assert_eq!(render_text(&back), render_text(&r));
        }
    }

    #[test]
    fn chain_only_commands() {
        let doc = demo_document(Demo::Wigner).unwrap();
        assert!(matches!(
            analyze(&doc, Command::Ncf, &Options::default()),
            Err(ReportError::NoScenario(_))
        ));
    }

    #[test]
    fn only_contextual_triangles_carry_a_note() {
        assert!(run(Demo::Cycle(3, Parity::Odd)).note.is_some());
        assert!(run(Demo::Cycle(3, Parity::Even)).note.is_none());
        assert!(run(Demo::Cycle(4, Parity::Odd)).note.is_none());
        assert!(run(Demo::Hardy).note.is_none());
    }
}
