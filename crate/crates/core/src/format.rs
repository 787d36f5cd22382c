//! The line-oriented scenario file format.
//!
//! ```text
//! # comment
//! scenario <name>
//! observable <label> outcomes <o1> <o2> ...
//! context <label1> <label2> ...
//! table <context index | member labels>
//!   <outcome tuple> <probability>
//! state <dim per site ...>
//!   amp <index> <re> [<im>]
//! measure <observable> site <k>[,<k>...] basis <name> [labels <outcome per vector ...>]
//!   vec <label> <entry> <entry> ...
//! agent <name> <observer|meta> object <object> observes <observable ...>
//! chain
//!   observer <name> site <k>[,<k>...] basis <name> [labels <...>]
//! final <name>
//!   factor site <k>[,<k>...] basis <name> [labels <...>]
//! ```
//!
//! Headers start in the first column, their continuation lines are
//! indented. Probabilities are decimals or `p/q` and are kept exact; a table
//! may also be one line listing every probability in lexicographic tuple
//! order. Amplitudes and vector entries accept decimals, `p/q` and `sqrt(p/q)`,
//! optionally negated; a complex entry is written `re,im`. Basis names are
//! `computational`, `diagonal`, `bell`, `observer`, `meta` and `explicit`,
//! the last one followed by one `vec` line per vector.
//!
//! The `chain` block describes agents observing the file's state one after
//! the other; agent `k` leaves its record on site `sites + k`. `final` blocks
//! name bases of the whole compound under which cut placements are compared.

use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::builders::Level;
use crate::metacontext::{Agent, ChainAgent, ObserverChain};
use crate::qstate::{ProductBasis, SiteBasis, StateVector, EPS_NORM};
use crate::rational;
use crate::scenario::{realize, EmpiricalModel, MeasurementRecipe, Observable, QuantumRealization, Scenario};

/// Tables and states in files may be off by this much before renormalization.
pub const FILE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalBasis {
    pub name: String,
    pub basis: ProductBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub chain: ObserverChain,
    pub finals: Vec<FinalBasis>,
}

/// Everything a scenario file can describe.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub name: String,
    pub scenario: Option<Scenario>,
    /// Present when the file gives tables.
    pub tables: Option<EmpiricalModel>,
    /// Present when the file gives a state and a recipe per observable.
    pub realization: Option<QuantumRealization>,
    pub agents: Vec<Agent>,
    pub chain: Option<ChainSpec>,
}

impl Document {
    /// The empirical model, realized and snapped when given by a state.
    pub fn model(&self) -> Option<EmpiricalModel> {
        if let Some(m) = &self.tables {
            return Some(m.clone());
        }
        let sc = self.scenario.as_ref()?;
        let qr = self.realization.as_ref()?;
        Some(realize(qr, sc).expect("validated at parse time").snapped())
    }
}

type Result<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

#[derive(Debug)]
struct Line<'a> {
    number: usize,
    indented: bool,
    tokens: Vec<Token<'a>>,
}

impl<'a> Line<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn at(&self, i: usize, message: impl Into<String>) -> ParseError {
        let column = self
            .tokens
            .get(i)
            .map(|t| t.column)
            .or_else(|| self.tokens.last().map(|t| t.column + t.text.chars().count()))
            .unwrap_or(1);
        self.err(column, message)
    }

    fn get(&self, i: usize, what: &str) -> Result<&'a str> {
        self.tokens
            .get(i)
            .map(|t| t.text)
            .ok_or_else(|| self.at(i, format!("expected {what}")))
    }

    fn expect(&self, i: usize, word: &str) -> Result<()> {
        match self.tokens.get(i) {
            Some(t) if t.text == word => Ok(()),
            Some(t) => Err(self.at(i, format!("expected `{word}`, found `{}`", t.text))),
            None => Err(self.at(i, format!("expected `{word}`"))),
        }
    }
}

fn lex(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start: Option<usize> = None;
        let mut col = 0;
        let mut byte_start = 0;
        for (b, ch) in content.char_indices() {
            col += 1;
            if ch.is_whitespace() {
                if let Some(c) = start.take() {
                    tokens.push(Token {
                        text: &content[byte_start..b],
                        column: c,
                    });
                }
            } else if start.is_none() {
                start = Some(col);
                byte_start = b;
            }
        }
        if let Some(c) = start {
            tokens.push(Token {
                text: &content[byte_start..],
                column: c,
            });
        }
        if !tokens.is_empty() {
            out.push(Line {
                number: n + 1,
                indented: content.starts_with(char::is_whitespace),
                tokens,
            });
        }
    }
    out
}

/// A real literal: decimal, `p/q`, or `sqrt(...)`, optionally negated.
pub fn parse_real(text: &str) -> Option<f64> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let v = if let Some(inner) = body.strip_prefix("sqrt(").and_then(|s| s.strip_suffix(')')) {
        let x = parse_real(inner)?;
        if x < 0.0 {
            return None;
        }
        x.sqrt()
    } else if let Some(q) = rational::parse_exact(body) {
        rational::to_f64(&q)
    } else {
        body.parse::<f64>().ok().filter(|v| v.is_finite())?
    };
    Some(if neg { -v } else { v })
}

fn parse_complex(text: &str) -> Option<Complex64> {
    match text.split_once(',') {
        Some((re, im)) => Some(Complex64::new(parse_real(re)?, parse_real(im)?)),
        None => Some(Complex64::new(parse_real(text)?, 0.0)),
    }
}

fn parse_sites(line: &Line, i: usize) -> Result<Vec<usize>> {
    let text = line.get(i, "site list")?;
    text.split(',')
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| line.at(i, format!("invalid site list `{text}`")))
        })
        .collect()
}

/// A basis declaration: `site <k,..> basis <name> [labels ...]`, with `vec` lines for explicit bases.
#[derive(Debug, Clone)]
struct BasisDecl {
    line: usize,
    column: usize,
    sites: Vec<usize>,
    name: String,
    labels: Option<Vec<String>>,
    vecs: Vec<(String, Vec<Complex64>)>,
}

fn parse_basis_decl(line: &Line, start: usize) -> Result<BasisDecl> {
    line.expect(start, "site")?;
    let sites = parse_sites(line, start + 1)?;
    line.expect(start + 2, "basis")?;
    let name = line.get(start + 3, "basis name")?.to_string();
    let labels = match line.tokens.get(start + 4) {
        None => None,
        Some(t) if t.text == "labels" => {
            let l: Vec<String> = line.tokens[start + 5..].iter().map(|t| t.text.to_string()).collect();
            if l.is_empty() {
                return Err(line.at(start + 5, "expected labels"));
            }
            Some(l)
        }
        Some(_) => return Err(line.at(start + 4, "expected `labels` or end of line")),
    };
    Ok(BasisDecl {
        line: line.number,
        column: line.tokens[start + 3].column,
        sites,
        name,
        labels,
        vecs: Vec::new(),
    })
}

fn parse_vec(line: &Line) -> Result<(String, Vec<Complex64>)> {
    let label = line.get(1, "vector label")?.to_string();
    let mut entries = Vec::new();
    for i in 2..line.tokens.len() {
        let t = line.tokens[i].text;
        entries.push(parse_complex(t).ok_or_else(|| line.at(i, format!("invalid vector entry `{t}`")))?);
    }
    if entries.is_empty() {
        return Err(line.at(2, "expected vector entries"));
    }
    Ok((label, entries))
}

fn decl_err(d: &BasisDecl, message: impl Into<String>) -> ParseError {
    ParseError {
        line: d.line,
        column: d.column,
        message: message.into(),
    }
}

/// Builds the basis; `relabel` lets `labels` rename the basis vectors
/// instead of giving outcomes.
fn build_basis(d: &BasisDecl, dims: &[usize], relabel: bool) -> Result<SiteBasis> {
    for &s in &d.sites {
        if s >= dims.len() {
            return Err(decl_err(d, format!("site {s} does not exist ({} sites)", dims.len())));
        }
    }
    let pair = |what: &str| -> Result<(usize, usize)> {
        match d.sites[..] {
            [a, b] if dims[a] == 2 && dims[b] == 2 => Ok((a, b)),
            _ => Err(decl_err(d, format!("basis `{what}` needs two qubit sites"))),
        }
    };
    let base = match d.name.as_str() {
        "computational" => {
            let sub: Vec<usize> = d.sites.iter().map(|&s| dims[s]).collect();
            SiteBasis::computational_group(d.sites.clone(), &sub)
        }
        "diagonal" => match d.sites[..] {
            [s] if dims[s] == 2 => SiteBasis::diagonal(s),
            _ => return Err(decl_err(d, "basis `diagonal` needs one qubit site")),
        },
        "bell" => {
            let (a, b) = pair("bell")?;
            SiteBasis::bell(a, b)
        }
        "observer" => {
            let (a, b) = pair("observer")?;
            SiteBasis::observer(a, b)
        }
        "meta" => {
            let (a, b) = pair("meta")?;
            SiteBasis::meta(a, b)
        }
        "explicit" => {
            if d.vecs.is_empty() {
                return Err(decl_err(d, "explicit basis without `vec` lines"));
            }
            let (labels, vectors) = d.vecs.iter().cloned().unzip();
            return SiteBasis::new(d.sites.clone(), vectors, labels).map_err(|e| decl_err(d, e.to_string()));
        }
        other => return Err(decl_err(d, format!("unknown basis `{other}`"))),
    };
    if !d.vecs.is_empty() {
        return Err(decl_err(d, format!("`vec` lines given for named basis `{}`", d.name)));
    }
    match (&d.labels, relabel) {
        (Some(labels), true) => SiteBasis::new(d.sites.clone(), base.vectors().to_vec(), labels.clone())
            .map_err(|e| decl_err(d, e.to_string())),
        _ => Ok(base),
    }
}

#[derive(Debug)]
enum Block {
    None,
    Table(usize),
    State,
    Measure(usize),
    Chain,
    Final(usize),
}

struct RawTable {
    line: usize,
    context: usize,
    /// (tuple, line, column, probability text)
    rows: Vec<(usize, usize, usize, String)>,
    compact: Option<(usize, Vec<(usize, String)>)>,
}

struct RawMeasure {
    observable: String,
    decl: BasisDecl,
}

struct RawObserver {
    name: String,
    decl: BasisDecl,
}

struct RawFinal {
    name: String,
    factors: Vec<BasisDecl>,
}

/// Parses a scenario file; every error carries the line and column it arose at.
pub fn parse_document(text: &str) -> Result<Document> {
    let lines = lex(text);
    let mut name: Option<String> = None;
    let mut observables: Vec<Observable> = Vec::new();
    let mut contexts: Vec<Vec<String>> = Vec::new();
    let mut rest_from = None;
    for (k, line) in lines.iter().enumerate() {
        let head = line.tokens[0].text;
        if line.indented {
            return Err(line.at(0, format!("unexpected indented `{head}`")));
        }
        if name.is_none() && head != "scenario" {
            return Err(line.at(0, "the file must start with `scenario <name>`"));
        }
        match head {
            "scenario" => {
                if name.is_some() {
                    return Err(line.at(0, "duplicate `scenario` line"));
                }
                name = Some(line.get(1, "scenario name")?.to_string());
                if line.tokens.len() > 2 {
                    return Err(line.at(2, "unexpected token"));
                }
            }
            "observable" => {
                if !contexts.is_empty() {
                    return Err(line.at(0, "observables must be declared before contexts"));
                }
                let label = line.get(1, "observable label")?;
                line.expect(2, "outcomes")?;
                let outs: Vec<&str> = line.tokens[3..].iter().map(|t| t.text).collect();
                if observables.iter().any(|p| p.label() == label) {
                    return Err(line.at(1, format!("observable `{label}` declared twice")));
                }
                observables.push(Observable::new(label, &outs).map_err(|e| line.at(1, e.to_string()))?);
            }
            "context" => {
                if line.tokens.len() < 2 {
                    return Err(line.at(1, "expected observable labels"));
                }
                for i in 1..line.tokens.len() {
                    let l = line.tokens[i].text;
                    if !observables.iter().any(|o| o.label() == l) {
                        return Err(line.at(i, format!("context names undeclared observable `{l}`")));
                    }
                }
                let members: Vec<String> = line.tokens[1..].iter().map(|t| t.text.to_string()).collect();
                let refs: Vec<Vec<&str>> = contexts
                    .iter()
                    .chain(std::iter::once(&members))
                    .map(|c| c.iter().map(String::as_str).collect())
                    .collect();
                check_contexts(&observables, &refs).map_err(|e| line.at(1, e))?;
                contexts.push(members);
            }
            _ => {
                rest_from = Some(k);
                break;
            }
        }
    }
    let name = name.ok_or(ParseError {
        line: 1,
        column: 1,
        message: "empty file: expected `scenario <name>`".into(),
    })?;
    let scenario = if observables.is_empty() {
        None
    } else {
        let refs: Vec<Vec<&str>> = contexts
            .iter()
            .map(|c| c.iter().map(String::as_str).collect())
            .collect();
        let (line, column) = match rest_from {
            Some(k) => (lines[k].number, 1),
            None => (lines.last().map_or(1, |l| l.number), 1),
        };
        Some(Scenario::new(name.clone(), observables, &refs).map_err(|e| ParseError {
            line,
            column,
            message: e.to_string(),
        })?)
    };
    parse_rest(&lines[rest_from.unwrap_or(lines.len())..], &lines, name, scenario)
}

fn check_contexts(observables: &[Observable], contexts: &[Vec<&str>]) -> std::result::Result<(), String> {
    // coverage is only checked once every context is known
    let mut used: Vec<Observable> = Vec::new();
    for c in contexts {
        for l in c {
            if let Some(o) = observables.iter().find(|o| o.label() == *l) {
                if !used.iter().any(|u| u.label() == *l) {
                    used.push(o.clone());
                }
            }
        }
    }
    Scenario::new("check", used, contexts)
        .map(|_| ())
        .map_err(|e| e.to_string())
}

type RawState = Option<(usize, Vec<usize>, Vec<(usize, usize, Complex64)>)>;

/// Second phase, once observables and contexts are fixed.
fn parse_rest(rest: &[Line], lines: &[Line], name: String, scenario: Option<Scenario>) -> Result<Document> {
    let mut state: RawState = None;
    let mut chain: Option<(usize, Vec<RawObserver>)> = None;
    let mut finals: Vec<RawFinal> = Vec::new();
    let mut tables: Vec<RawTable> = Vec::new();
    let mut measures: Vec<RawMeasure> = Vec::new();
    let mut agents: Vec<(usize, Agent)> = Vec::new();
    let mut block = Block::None;
    let needs_scenario = |line: &Line| line.at(0, "declare observables and contexts first");
    for line in rest {
        let head = line.tokens[0].text;
        if line.indented {
            match (&block, head) {
                (Block::Table(t), _) => table_row(scenario.as_ref().expect("table block"), &mut tables[*t], line)?,
                (Block::State, "amp") => amp_line(state.as_mut().expect("state block"), line)?,
                (Block::Measure(m), "vec") => measures[*m].decl.vecs.push(parse_vec(line)?),
                (Block::Chain, "observer") => {
                    let name = line.get(1, "observer name")?.to_string();
                    let decl = parse_basis_decl(line, 2)?;
                    chain.as_mut().expect("chain block").1.push(RawObserver { name, decl });
                }
                (Block::Chain, "vec") => {
                    let v = parse_vec(line)?;
                    let obs = chain.as_mut().expect("chain block").1.last_mut();
                    obs.ok_or_else(|| line.at(0, "`vec` before any observer"))?
                        .decl
                        .vecs
                        .push(v);
                }
                (Block::Final(f), "factor") => finals[*f].factors.push(parse_basis_decl(line, 1)?),
                (Block::Final(f), "vec") => {
                    let v = parse_vec(line)?;
                    let factor = finals[*f].factors.last_mut();
                    factor
                        .ok_or_else(|| line.at(0, "`vec` before any factor"))?
                        .vecs
                        .push(v);
                }
                _ => return Err(line.at(0, format!("unexpected `{head}` here"))),
            }
            continue;
        }
        block = Block::None;
        match head {
            "table" => {
                let sc = scenario.as_ref().ok_or_else(|| needs_scenario(line))?;
                let ctx = resolve_context(sc, line)?;
                if tables.iter().any(|t| t.context == ctx) {
                    return Err(line.at(1, format!("second table for context {ctx}")));
                }
                tables.push(RawTable {
                    line: line.number,
                    context: ctx,
                    rows: Vec::new(),
                    compact: None,
                });
                block = Block::Table(tables.len() - 1);
            }
            "measure" => {
                let sc = scenario.as_ref().ok_or_else(|| needs_scenario(line))?;
                let obs = line.get(1, "observable")?.to_string();
                if sc.observable(&obs).is_none() {
                    return Err(line.at(1, format!("unknown observable `{obs}`")));
                }
                if measures.iter().any(|m| m.observable == obs) {
                    return Err(line.at(1, format!("second recipe for `{obs}`")));
                }
                let decl = parse_basis_decl(line, 2)?;
                measures.push(RawMeasure { observable: obs, decl });
                block = Block::Measure(measures.len() - 1);
            }
            "agent" => {
                let sc = scenario.as_ref().ok_or_else(|| needs_scenario(line))?;
                let agent_name = line.get(1, "agent name")?.to_string();
                let level = match line.get(2, "`observer` or `meta`")? {
                    "observer" => Level::Observer,
                    "meta" => Level::Meta,
                    other => return Err(line.at(2, format!("expected `observer` or `meta`, found `{other}`"))),
                };
                line.expect(3, "object")?;
                let object = line.get(4, "object")?.to_string();
                line.expect(5, "observes")?;
                let mut observables = Vec::new();
                for i in 6..line.tokens.len() {
                    let l = line.tokens[i].text;
                    if sc.observable(l).is_none() {
                        return Err(line.at(i, format!("unknown observable `{l}`")));
                    }
                    observables.push(l.to_string());
                }
                if observables.is_empty() {
                    return Err(line.at(6, "expected observables"));
                }
                if agents.iter().any(|(_, a)| a.name == agent_name) {
                    return Err(line.at(1, format!("agent `{agent_name}` declared twice")));
                }
                agents.push((
                    line.number,
                    Agent {
                        name: agent_name,
                        level,
                        object,
                        observables,
                    },
                ));
            }
            "state" => {
                if state.is_some() {
                    return Err(line.at(0, "duplicate `state` block"));
                }
                state = Some((line.number, state_dims(line)?, Vec::new()));
                block = Block::State;
            }
            "chain" => {
                if chain.is_some() {
                    return Err(line.at(0, "duplicate `chain` block"));
                }
                chain = Some((line.number, Vec::new()));
                block = Block::Chain;
            }
            "final" => {
                let n = line.get(1, "final basis name")?.to_string();
                finals.push(RawFinal {
                    name: n,
                    factors: Vec::new(),
                });
                block = Block::Final(finals.len() - 1);
            }
            "observable" | "context" => {
                return Err(line.at(0, format!("`{head}` must come before tables, measurements and agents")))
            }
            "scenario" => return Err(line.at(0, "duplicate `scenario` line")),
            other => return Err(line.at(0, format!("unknown keyword `{other}`"))),
        }
    }
    finish(name, scenario, tables, state, measures, agents, chain, finals, lines)
}

fn state_dims(line: &Line) -> Result<Vec<usize>> {
    let mut dims = Vec::new();
    for i in 1..line.tokens.len() {
        let t = line.tokens[i].text;
        match t.parse::<usize>() {
            Ok(d) if d >= 2 => dims.push(d),
            _ => {
                return Err(line.at(
                    i,
                    format!("site dimension must be an integer of at least 2, found `{t}`"),
                ))
            }
        }
    }
    if dims.is_empty() {
        return Err(line.at(1, "expected site dimensions"));
    }
    Ok(dims)
}

fn amp_line(state: &mut (usize, Vec<usize>, Vec<(usize, usize, Complex64)>), line: &Line) -> Result<()> {
    let idx_text = line.get(1, "amplitude index")?;
    let idx: usize = idx_text
        .parse()
        .map_err(|_| line.at(1, format!("invalid index `{idx_text}`")))?;
    let len: usize = state.1.iter().product();
    if idx >= len {
        return Err(line.at(1, format!("index {idx} is outside a state of {len} amplitudes")));
    }
    if state.2.iter().any(|(_, i, _)| *i == idx) {
        return Err(line.at(1, format!("amplitude {idx} given twice")));
    }
    let re_text = line.get(2, "real part")?;
    let re = parse_real(re_text).ok_or_else(|| line.at(2, format!("invalid number `{re_text}`")))?;
    let im = match line.tokens.get(3) {
        Some(t) => parse_real(t.text).ok_or_else(|| line.at(3, format!("invalid number `{}`", t.text)))?,
        None => 0.0,
    };
    if line.tokens.len() > 4 {
        return Err(line.at(4, "unexpected token"));
    }
    state.2.push((line.number, idx, Complex64::new(re, im)));
    Ok(())
}

fn table_row(sc: &Scenario, table: &mut RawTable, line: &Line) -> Result<()> {
    let ctx = table.context;
    let size = sc.contexts()[ctx].members().len();
    let toks: Vec<&str> = line.tokens.iter().map(|t| t.text).collect();
    let labeled = toks.len() == size + 1
        && sc.contexts()[ctx]
            .members()
            .iter()
            .zip(&toks)
            .all(|(&m, t)| sc.observables()[m].outcome_index(t).is_some());
    if table.compact.is_some() {
        return Err(line.at(0, "a table is either one probability line or one row per outcome"));
    }
    if labeled {
        let t = sc.resolve_tuple(ctx, &toks[..size]).expect("labels checked");
        if table.rows.iter().any(|r| r.0 == t) {
            return Err(line.at(0, format!("outcome `{}` listed twice", toks[..size].join(" "))));
        }
        table
            .rows
            .push((t, line.number, line.tokens[size].column, toks[size].to_string()));
    } else if toks.len() == sc.tuple_count(ctx) && table.rows.is_empty() {
        table.compact = Some((
            line.number,
            line.tokens.iter().map(|t| (t.column, t.text.to_string())).collect(),
        ));
    } else {
        return Err(line.at(
            0,
            format!(
                "table row must be {size} outcomes and a probability, or all {} probabilities",
                sc.tuple_count(ctx)
            ),
        ));
    }
    Ok(())
}

fn resolve_context(sc: &Scenario, line: &Line) -> Result<usize> {
    let labels: Vec<&str> = line.tokens[1..].iter().map(|t| t.text).collect();
    if labels.is_empty() {
        return Err(line.at(1, "expected a context index or its labels"));
    }
    if let Some(c) = sc.find_context(&labels) {
        return Ok(c);
    }
    if let [one] = labels[..] {
        if let Ok(i) = one.parse::<usize>() {
            if i < sc.contexts().len() {
                return Ok(i);
            }
            return Err(line.at(1, format!("context index {i} out of range")));
        }
    }
    for (i, l) in labels.iter().enumerate() {
        if sc.observable(l).is_none() {
            return Err(line.at(i + 1, format!("unknown observable `{l}`")));
        }
    }
    Err(line.at(1, format!("no context `{}`", labels.join(" "))))
}

enum Prob {
    Exact(BigRational),
    Float(f64),
}

fn parse_prob(text: &str) -> Option<Prob> {
    if let Some(q) = rational::parse_exact(text) {
        return Some(Prob::Exact(q));
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite()).map(Prob::Float)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    name: String,
    scenario: Option<Scenario>,
    tables: Vec<RawTable>,
    state: RawState,
    measures: Vec<RawMeasure>,
    agents: Vec<(usize, Agent)>,
    chain: Option<(usize, Vec<RawObserver>)>,
    finals: Vec<RawFinal>,
    lines: &[Line],
) -> Result<Document> {
    let end = ParseError {
        line: lines.last().map_or(1, |l| l.number),
        column: 1,
        message: String::new(),
    };
    let at_end = |m: String| ParseError {
        message: m,
        ..end.clone()
    };
    let at = |line: usize, column: usize, m: String| ParseError {
        line,
        column,
        message: m,
    };

    let state_vec = match &state {
        Some((line, dims, amps)) => {
            let mut v = vec![Complex64::new(0.0, 0.0); dims.iter().product()];
            for (_, i, a) in amps {
                v[*i] = *a;
            }
            let n: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            let sv = if (n - 1.0).abs() <= EPS_NORM {
                StateVector::new(dims.clone(), v)
            } else if (n - 1.0).abs() <= FILE_TOLERANCE {
                StateVector::normalized(dims.clone(), v)
            } else {
                return Err(at(*line, 1, format!("state has squared norm {n}, expected 1")));
            };
            Some(sv.map_err(|e| at(*line, 1, e.to_string()))?)
        }
        None => None,
    };

    let mut doc = Document {
        name,
        scenario: scenario.clone(),
        tables: None,
        realization: None,
        agents: agents.into_iter().map(|(_, a)| a).collect(),
        chain: None,
    };

    if let Some(sc) = &scenario {
        let has_tables = !tables.is_empty();
        let has_measures = !measures.is_empty();
        if has_tables && has_measures {
            return Err(at_end(
                "give either tables or a state with measurements, not both".into(),
            ));
        }
        if has_tables {
            doc.tables = Some(build_tables(sc, tables, &at)?);
        } else if has_measures {
            let Some(sv) = &state_vec else {
                return Err(at_end("measurements need a `state` block".into()));
            };
            let mut recipes = Vec::new();
            for o in sc.observables() {
                let Some(m) = measures.iter().find(|m| m.observable == o.label()) else {
                    return Err(at_end(format!("observable `{}` has no `measure` line", o.label())));
                };
                let basis = build_basis(&m.decl, sv.dims(), false)?;
                let outcome_map = m.decl.labels.clone().unwrap_or_else(|| basis.labels().to_vec());
                if outcome_map.len() != basis.len() {
                    return Err(decl_err(
                        &m.decl,
                        format!("{} labels for a basis of {} vectors", outcome_map.len(), basis.len()),
                    ));
                }
                if let Some(bad) = outcome_map.iter().find(|l| o.outcome_index(l).is_none()) {
                    return Err(decl_err(
                        &m.decl,
                        format!("`{bad}` is not an outcome of `{}`", o.label()),
                    ));
                }
                recipes.push(MeasurementRecipe {
                    observable: o.label().to_string(),
                    basis,
                    outcome_map,
                });
            }
            let qr = QuantumRealization {
                state: sv.clone(),
                recipes,
            };
            realize(&qr, sc).map_err(|e| at_end(e.to_string()))?;
            doc.realization = Some(qr);
        } else {
            return Err(at_end(
                "no tables and no measurements for the declared observables".into(),
            ));
        }
    }

    if let Some((line, observers)) = chain {
        let Some(sv) = &state_vec else {
            return Err(at(line, 1, "a chain needs a `state` block".into()));
        };
        let mut dims = sv.dims().to_vec();
        let mut agents = Vec::new();
        for o in &observers {
            let basis = build_basis(&o.decl, &dims, true)?;
            dims.push(basis.len());
            agents.push(ChainAgent {
                name: o.name.clone(),
                basis,
            });
        }
        let chain = ObserverChain::new(sv.clone(), agents).map_err(|e| at(line, 1, e.to_string()))?;
        let mut fs = Vec::new();
        for f in finals {
            let factors = f
                .factors
                .iter()
                .map(|d| build_basis(d, &dims, true))
                .collect::<Result<Vec<_>>>()?;
            let basis = ProductBasis::new(factors).map_err(|e| at_end(format!("final `{}`: {e}", f.name)))?;
            let missing = basis.unmeasured_sites(dims.len());
            if !missing.is_empty() {
                return Err(at_end(format!(
                    "final `{}` leaves sites {missing:?} unmeasured",
                    f.name
                )));
            }
            fs.push(FinalBasis { name: f.name, basis });
        }
        doc.chain = Some(ChainSpec { chain, finals: fs });
    } else if !finals.is_empty() {
        return Err(at_end("`final` blocks need a `chain`".into()));
    } else if scenario.is_none() {
        return Err(at_end("the file declares neither observables nor a chain".into()));
    }
    Ok(doc)
}

fn build_tables(
    sc: &Scenario,
    tables: Vec<RawTable>,
    at: &dyn Fn(usize, usize, String) -> ParseError,
) -> Result<EmpiricalModel> {
    let n = sc.contexts().len();
    let mut exact: Vec<Option<Vec<BigRational>>> = vec![None; n];
    let mut floats: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut all_exact = true;
    let mut lines = vec![0; n];
    for t in &tables {
        lines[t.context] = t.line;
        let count = sc.tuple_count(t.context);
        let mut entries: Vec<Option<Prob>> = (0..count).map(|_| None).collect();
        let cells: Vec<(usize, usize, usize, String)> = match &t.compact {
            Some((line, toks)) => toks
                .iter()
                .enumerate()
                .map(|(i, (c, s))| (i, *line, *c, s.clone()))
                .collect(),
            None => t.rows.clone(),
        };
        for (tuple, line, col, s) in cells {
            let p = parse_prob(&s).ok_or_else(|| at(line, col, format!("invalid probability `{s}`")))?;
            let negative = match &p {
                Prob::Exact(q) => q.is_negative(),
                Prob::Float(f) => *f < 0.0,
            };
            if negative {
                return Err(at(line, col, format!("negative probability `{s}`")));
            }
            if matches!(p, Prob::Float(_)) {
                all_exact = false;
            }
            entries[tuple] = Some(p);
        }
        if entries.iter().any(Option::is_none) {
            let given = entries.iter().filter(|e| e.is_some()).count();
            return Err(at(t.line, 1, format!("table lists {given} of {count} outcomes")));
        }
        let f: Vec<f64> = entries
            .iter()
            .map(|e| match e.as_ref().expect("complete") {
                Prob::Exact(q) => rational::to_f64(q),
                Prob::Float(v) => *v,
            })
            .collect();
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > FILE_TOLERANCE {
            return Err(at(t.line, 1, format!("probabilities sum to {sum}, expected 1")));
        }
        floats[t.context] = Some(f);
        exact[t.context] = entries
            .into_iter()
            .map(|e| match e.expect("complete") {
                Prob::Exact(q) => Some(q),
                Prob::Float(_) => None,
            })
            .collect();
    }
    if let Some(c) = (0..n).find(|&c| floats[c].is_none()) {
        return Err(at(
            tables.last().map_or(1, |t| t.line),
            1,
            format!("context {c} ({}) has no table", sc.context_labels(c).join(" ")),
        ));
    }
    if all_exact {
        let tables: Vec<Vec<BigRational>> = exact
            .into_iter()
            .map(|t| {
                let t = t.expect("exact");
                let sum: BigRational = t.iter().sum();
                if sum.is_one() {
                    t
                } else {
                    t.into_iter().map(|q| q / &sum).collect()
                }
            })
            .collect();
        return EmpiricalModel::from_exact(sc.clone(), tables).map_err(|e| at(lines[0], 1, e.to_string()));
    }
    let tables: Vec<Vec<f64>> = floats
        .into_iter()
        .map(|t| {
            let t = t.expect("complete");
            let sum: f64 = t.iter().sum();
            if sum == 1.0 {
                t
            } else {
                t.into_iter().map(|v| v / sum).collect()
            }
        })
        .collect();
    EmpiricalModel::new(sc.clone(), tables).map_err(|e| at(lines[0], 1, e.to_string()))
}

fn real_text(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn complex_text(c: Complex64) -> String {
    if c.im == 0.0 {
        real_text(c.re)
    } else {
        format!("{},{}", real_text(c.re), real_text(c.im))
    }
}

/// The named basis on the same sites with the same vectors, if any.
fn named(basis: &SiteBasis, dims: &[usize]) -> Option<(&'static str, SiteBasis)> {
    let s = basis.sites();
    let sub: Vec<usize> = s.iter().map(|&k| dims[k]).collect();
    let mut candidates = vec![("computational", SiteBasis::computational_group(s.to_vec(), &sub))];
    if let [a] = s[..] {
        if dims[a] == 2 {
            candidates.push(("diagonal", SiteBasis::diagonal(a)));
        }
    }
    if let [a, b] = s[..] {
        if dims[a] == 2 && dims[b] == 2 {
            candidates.push(("bell", SiteBasis::bell(a, b)));
            candidates.push(("observer", SiteBasis::observer(a, b)));
            candidates.push(("meta", SiteBasis::meta(a, b)));
        }
    }
    candidates.into_iter().find(|(_, c)| c.vectors() == basis.vectors())
}

fn sites_text(sites: &[usize]) -> String {
    sites.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn vec_lines(out: &mut String, indent: &str, basis: &SiteBasis) {
    for (label, v) in basis.labels().iter().zip(basis.vectors()) {
        let entries: Vec<String> = v.iter().map(|c| complex_text(*c)).collect();
        let _ = writeln!(out, "{indent}vec {label} {}", entries.join(" "));
    }
}

/// `site .. basis ..`; `labels` renames vectors of a named basis.
fn basis_decl(out: &mut String, prefix: &str, indent: &str, basis: &SiteBasis, dims: &[usize]) {
    match named(basis, dims) {
        Some((name, default)) => {
            let _ = write!(out, "{prefix}site {} basis {name}", sites_text(basis.sites()));
            if default.labels() != basis.labels() {
                let _ = write!(out, " labels {}", basis.labels().join(" "));
            }
            out.push('\n');
        }
        None => {
            let _ = writeln!(out, "{prefix}site {} basis explicit", sites_text(basis.sites()));
            vec_lines(out, indent, basis);
        }
    }
}

fn state_block(out: &mut String, s: &StateVector) {
    let dims: Vec<String> = s.dims().iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "state {}", dims.join(" "));
    for (i, a) in s.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        if a.im == 0.0 {
            let _ = writeln!(out, "  amp {i} {}", real_text(a.re));
        } else {
            let _ = writeln!(out, "  amp {i} {} {}", real_text(a.re), real_text(a.im));
        }
    }
}

/// Writes a document back in the file format; `parse_document` inverts it.
pub fn serialize(doc: &Document) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}", doc.name);
    if let Some(sc) = &doc.scenario {
        for o in sc.observables() {
            let _ = writeln!(out, "observable {} outcomes {}", o.label(), o.outcomes().join(" "));
        }
        for c in 0..sc.contexts().len() {
            let _ = writeln!(out, "context {}", sc.context_labels(c).join(" "));
        }
    }
    if let (Some(sc), Some(m)) = (&doc.scenario, &doc.tables) {
        for c in 0..sc.contexts().len() {
            let _ = writeln!(out, "table {}", sc.context_labels(c).join(" "));
            for t in 0..sc.tuple_count(c) {
                let p = match m.exact_probability(c, t) {
                    Some(q) => rational::display(q),
                    None => real_text(m.table(c)[t]),
                };
                let _ = writeln!(out, "  {} {p}", sc.tuple_labels(c, t).join(" "));
            }
        }
    }
    let state = doc
        .realization
        .as_ref()
        .map(|qr| &qr.state)
        .or(doc.chain.as_ref().map(|c| c.chain.base()));
    if let Some(s) = state {
        state_block(&mut out, s);
    }
    if let Some(qr) = &doc.realization {
        for r in &qr.recipes {
            let prefix = format!("measure {} ", r.observable);
            match named(&r.basis, qr.state.dims()) {
                Some((name, default)) if default.labels() == r.basis.labels() => {
                    let _ = write!(out, "{prefix}site {} basis {name}", sites_text(r.basis.sites()));
                    if r.outcome_map != r.basis.labels() {
                        let _ = write!(out, " labels {}", r.outcome_map.join(" "));
                    }
                    out.push('\n');
                }
                _ => {
                    let _ = write!(out, "{prefix}site {} basis explicit", sites_text(r.basis.sites()));
                    if r.outcome_map != r.basis.labels() {
                        let _ = write!(out, " labels {}", r.outcome_map.join(" "));
                    }
                    out.push('\n');
                    vec_lines(&mut out, "  ", &r.basis);
                }
            }
        }
    }
    for a in &doc.agents {
        let level = match a.level {
            Level::Observer => "observer",
            Level::Meta => "meta",
        };
        let _ = writeln!(
            out,
            "agent {} {level} object {} observes {}",
            a.name,
            a.object,
            a.observables.join(" ")
        );
    }
    if let Some(spec) = &doc.chain {
        out.push_str("chain\n");
        let mut dims = spec.chain.base().dims().to_vec();
        for a in spec.chain.agents() {
            basis_decl(&mut out, &format!("  observer {} ", a.name), "    ", &a.basis, &dims);
            dims.push(a.basis.len());
        }
        for f in &spec.finals {
            let _ = writeln!(out, "final {}", f.name);
            for factor in f.basis.factors() {
                basis_decl(&mut out, "  factor ", "    ", factor, &dims);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{fr_realization, hardy_model, hardy_realization};

    const HARDY: &str = "scenario hardy
observable A_c outcomes 0 1
observable A_d outcomes + -
observable B_c outcomes 0 1
observable B_d outcomes + -
context A_d B_c
context A_c B_c
context A_c B_d
context A_d B_d
table A_d B_c
  + 0 2/3
  + 1 1/6
  - 0 0
  - 1 1/6
table 1
  1/3 0 1/3 1/3
table A_c B_d
  0 + 1/6
  0 - 1/6
  1 + 2/3
  1 - 0
table A_d B_d   # twelfths
  + + 3/4
  + - 1/12
  - + 1/12
  - - 1/12
";

    #[test]
    fn hardy_tables_parse_exactly() {
        let doc = parse_document(HARDY).unwrap();
        assert_eq!(doc.tables.unwrap(), hardy_model());
    }

    #[test]
    fn hardy_state_parses() {
        let text = "scenario hardy
observable A_c outcomes 0 1
observable A_d outcomes + -
observable B_c outcomes 0 1
observable B_d outcomes + -
context A_d B_c
context A_c B_c
context A_c B_d
context A_d B_d
state 2 2
  amp 0 sqrt(1/3)
  amp 2 sqrt(1/3)
  amp 3 sqrt(1/3) 0
measure A_c site 0 basis computational
measure A_d site 0 basis diagonal
measure B_c site 1 basis computational
measure B_d site 1 basis diagonal
";
        let doc = parse_document(text).unwrap();
        let (qr, sc) = hardy_realization();
        assert_eq!(doc.realization.as_ref().unwrap(), &qr);
        assert_eq!(doc.scenario.as_ref().unwrap(), &sc);
        assert_eq!(doc.model().unwrap(), hardy_model());
    }

    #[test]
    fn round_trips() {
        let doc = parse_document(HARDY).unwrap();
        assert_eq!(parse_document(&serialize(&doc)).unwrap(), doc);
        let f = fr_realization();
        let doc = Document {
            name: "fr".into(),
            scenario: Some(f.scenario.clone()),
            tables: None,
            realization: Some(f.realization.clone()),
            agents: crate::metacontext::fr_agents(),
            chain: None,
        };
        let text = serialize(&doc);
        assert!(text.contains("measure A_obs site 0,1 basis observer labels 0 1 inconsistent inconsistent"));
        assert_eq!(parse_document(&text).unwrap(), doc);
    }

    #[test]
    fn chain_round_trip() {
        let text = "scenario wigner
state 2
  amp 0 sqrt(1/2)
  amp 1 sqrt(1/2)
chain
  observer Friend site 0 basis computational
  observer Wigner site 0,1 basis explicit
    vec a 1 0 0 0
    vec b 0 0,1 0 0
    vec c 0 0 1 0
    vec d 0 0 0 -1
final bell
  factor site 0,1 basis bell
  factor site 2 basis computational labels a b c d
";
        let doc = parse_document(text).unwrap();
        let chain = &doc.chain.as_ref().unwrap().chain;
        assert_eq!(chain.final_dims(), vec![2, 2, 4]);
        assert_eq!(chain.agents()[1].basis.labels(), ["a", "b", "c", "d"]);
        assert_eq!(parse_document(&serialize(&doc)).unwrap(), doc);
    }

    #[test]
    fn rational_compact_row() {
        let text = "scenario t
observable A outcomes 0 1
observable B outcomes 0 1
context A B
table 0
  1/3 1/3 1/3 0
";
        let m = parse_document(text).unwrap().tables.unwrap();
        assert_eq!(m.exact_probability(0, 0), Some(&BigRational::new(1.into(), 3.into())));
    }

    #[test]
    fn decimals_renormalize() {
        let text = "scenario t
observable A outcomes 0 1
context A
table A
  0 0.3333333
  1 0.6666666
";
        let m = parse_document(text).unwrap().tables.unwrap();
        let total: f64 = m.table(0).iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(m.exact_tables().is_some());
    }

    fn err(text: &str) -> ParseError {
        parse_document(text).unwrap_err()
    }

    #[test]
    fn diagnostics() {
        let e = err("scenario t\nobservable A outcomes 0 1\ncontext A Z\n");
        assert_eq!((e.line, e.column), (3, 11));
        assert!(e.message.contains("`Z`"), "{e}");

        let e = err("scenario t\nobservable A outcomes 0 1\ncontext A\ntable A\n  0 0.5\n  1 0.4\n");
        assert_eq!(e.line, 4);
        assert!(e.message.contains("sum to"), "{e}");

        let e = err("scenario t\nobservable A outcomes 0 1\ncontext A\ntable A\n  0 1\n");
        assert!(e.message.contains("1 of 2"), "{e}");

        let e = err("scenario t\nobservable A outcomes 0 1\ncontext A\ntable A\n  0 x\n  1 1\n");
        assert_eq!((e.line, e.column), (5, 5));

        let e = err("observable A outcomes 0 1\n");
        assert_eq!((e.line, e.column), (1, 1));

        let e = err(
            "scenario t\nobservable A outcomes 0 1\ncontext A\nstate 2\n  amp 0 1\nmeasure A site 0 basis diagonal\n",
        );
        assert!(e.message.contains("not an outcome"), "{e}");

        let e = err("scenario t\nobservable A outcomes 0 1\ncontext A\n");
        assert!(e.message.contains("no tables"), "{e}");

        let e = err("scenario t\nfrobnicate\n");
        assert_eq!((e.line, e.column), (2, 1));
    }

    #[test]
    fn real_literals() {
        assert_eq!(parse_real("sqrt(1/2)"), Some(std::f64::consts::FRAC_1_SQRT_2));
        assert_eq!(parse_real("-0.25"), Some(-0.25));
        assert_eq!(parse_real("1e-3"), Some(0.001));
        assert_eq!(parse_real("sqrt(-1)"), None);
    }
}
