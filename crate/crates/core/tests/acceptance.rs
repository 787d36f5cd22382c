//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::process::ExitCode;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ctxkit::builders::{
    certain_implications, cycle_empirical, fr_realization, friendify, hardy_model, hardy_realization, INCONSISTENT,
};
use ctxkit::format::{parse_document, serialize};
use ctxkit::logic::{
    classify, cycle_model, cycle_scenario, extends_to_global, global_sections, liar_cycles, Classification, Parity,
};
use ctxkit::metacontext::{
    check_claims, compare_cuts, cycle_claims, fr_agents, wigner_chain, AssumptionSet, Cut, Verdict,
};
use ctxkit::ncpoly::contextual_fraction;
use ctxkit::qstate::{premeasure, ProductBasis, SiteBasis};
use ctxkit::scenario::{
    no_disturbance, product_model, realize, support_of, MeasurementRecipe, Observable, QuantumRealization, Scenario,
    DEFAULT_SUPPORT_EPS,
};

use common::{all_assignments, ncf_by_vertices, random_basis, random_state, ratio};

const TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

fn hardy_tables() -> Outcome {
    let (qr, sc) = hardy_realization();
    let m = realize(&qr, &sc).map_err(|e| e.to_string())?;
    let expected: [(&[&str], [f64; 4]); 4] = [
        (&["A_c", "B_c"], [1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0]),
        (&["A_d", "B_c"], [2.0 / 3.0, 1.0 / 6.0, 0.0, 1.0 / 6.0]),
        (&["A_c", "B_d"], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 0.0]),
        (&["A_d", "B_d"], [9.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0]),
    ];
    let mut worst: f64 = 0.0;
    for (ctx, want) in expected {
        let c = sc.find_context(ctx).ok_or("missing context")?;
        for (got, want) in m.table(c).iter().zip(want) {
            worst = worst.max((got - want).abs());
        }
    }
    check(worst <= TOL, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn hardy_liar() -> Outcome {
    let m = hardy_model();
    let sc = m.scenario();
    let c = sc.find_context(&["A_d", "B_d"]).unwrap();
    let t = sc.resolve_tuple(c, &["-", "-"]).unwrap();
    let p = m.table(c)[t];
    check(close(p, 1.0 / 12.0), format!("P(-,-) = {p}"))?;
    let support = support_of(&m, DEFAULT_SUPPORT_EPS).map_err(|e| e.to_string())?;
    let cycle = liar_cycles(&support, c, t)
        .map_err(|e| e.to_string())?
        .ok_or("no cycle")?;
    let steps: Vec<String> = cycle.steps.iter().map(|s| s.render(sc)).collect();
    let chain: Vec<String> = cycle.steps.iter().map(|s| s.conclusion.render(sc)).collect();
    check(chain == ["B_c=1", "A_c=1", "B_d=+"], format!("chain {chain:?}"))?;
    check(cycle.contradicted.render(sc) == "B_d=-", "wrong contradicted value")?;
    check(
        cycle.steps[0].premise.render(sc) == "A_d=-",
        "chain does not start at A_d=-",
    )?;
    Ok(format!("P(-,-) = {p}; {}", steps.join(", ")))
}

fn hardy_sections() -> Outcome {
    let m = hardy_model();
    let sc = m.scenario();
    let support = support_of(&m, DEFAULT_SUPPORT_EPS).map_err(|e| e.to_string())?;
    // Order A_c, A_d, B_c, B_d; value 1 is "1" or "-".
    let forbidden = [(1usize, 1usize, 2usize, 0usize), (0, 0, 2, 1), (0, 1, 3, 1)];
    let oracle: Vec<Vec<usize>> = all_assignments(&[2, 2, 2, 2])
        .into_iter()
        .filter(|g| forbidden.iter().all(|&(a, x, b, y)| !(g[a] == x && g[b] == y)))
        .collect();
    let sections: Vec<Vec<usize>> = global_sections(&support)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|g| g.values().to_vec())
        .collect();
    check(oracle.len() == 5, format!("oracle found {}", oracle.len()))?;
    check(
        sections == oracle,
        format!("sections {sections:?} vs oracle {oracle:?}"),
    )?;
    let class = classify(&support).map_err(|e| e.to_string())?;
    check(class == Classification::LogicallyContextual, format!("{class}"))?;
    let c = sc.find_context(&["A_d", "B_d"]).unwrap();
    let mm = sc.resolve_tuple(c, &["-", "-"]).unwrap();
    let pp = sc.resolve_tuple(c, &["+", "+"]).unwrap();
    check(
        !extends_to_global(&support, c, mm).map_err(|e| e.to_string())?,
        "(-,-) extends",
    )?;
    check(
        extends_to_global(&support, c, pp).map_err(|e| e.to_string())?,
        "(+,+) does not extend",
    )?;
    Ok(format!("{class}, {} sections", sections.len()))
}

fn friendification() -> Outcome {
    let (qr, sc) = hardy_realization();
    let f = friendify(&qr, &sc).map_err(|e| e.to_string())?;
    let hardy = realize(&qr, &sc).map_err(|e| e.to_string())?;
    let fr = realize(&f.realization, &f.scenario).map_err(|e| e.to_string())?;
    let fsc = &f.scenario;
    let mut worst: f64 = 0.0;
    let mut inconsistent: f64 = 0.0;
    for c in 0..sc.contexts().len() {
        let renamed: Vec<&str> = sc.context_labels(c).iter().map(|l| f.renamed(l).unwrap()).collect();
        let fc = fsc.find_context(&renamed).ok_or("context lost")?;
        for t in 0..sc.tuple_count(c) {
            let ft = fsc.resolve_tuple(fc, &sc.tuple_labels(c, t)).ok_or("outcome lost")?;
            worst = worst.max((hardy.table(c)[t] - fr.table(fc)[ft]).abs());
        }
        for ft in 0..fsc.tuple_count(fc) {
            if fsc.tuple_labels(fc, ft).contains(&INCONSISTENT) {
                inconsistent += fr.table(fc)[ft];
            }
        }
    }
    check(worst <= TOL, format!("tables differ by {worst:e}"))?;
    check(inconsistent <= 1e-12, format!("inconsistent mass {inconsistent:e}"))?;

    let fm = fr.snapped();
    let support = support_of(&fm, DEFAULT_SUPPORT_EPS).map_err(|e| e.to_string())?;
    let seed_c = fsc.find_context(&["A_meta", "B_meta"]).ok_or("no meta context")?;
    let seed_t = fsc.resolve_tuple(seed_c, &["-", "-"]).unwrap();
    let sentences: Vec<String> = certain_implications(&fm, &[(seed_c, seed_t)])
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| s.render(fsc))
        .collect();
    let wanted = [
        "A_meta=- => B_obs=1",
        "B_obs=1 => A_obs=1",
        "A_obs=1 => B_meta=+",
        "P(A_meta=-, B_meta=-) = 0.08333333333333333 (1/12)",
    ];
    for w in wanted {
        check(
            sentences.iter().any(|s| s.starts_with(w)),
            format!("missing sentence {w}"),
        )?;
    }
    // The same cycle as in the original model, read through the label map.
    let cycle = liar_cycles(&support, seed_c, seed_t)
        .map_err(|e| e.to_string())?
        .ok_or("no cycle")?;
    let hm = hardy_model();
    let hs = support_of(&hm, DEFAULT_SUPPORT_EPS).map_err(|e| e.to_string())?;
    let hc = sc.find_context(&["A_d", "B_d"]).unwrap();
    let hcycle = liar_cycles(&hs, hc, 3)
        .map_err(|e| e.to_string())?
        .ok_or("no hardy cycle")?;
    let rename = |s: String| {
        f.label_map.iter().fold(s, |s, r| {
            s.replace(&format!("{}=", r.original), &format!("{}=", r.renamed))
        })
    };
    let ours: Vec<String> = cycle.steps.iter().map(|s| s.render(fsc)).collect();
    let theirs: Vec<String> = hcycle.steps.iter().map(|s| rename(s.render(&sc))).collect();
    check(ours == theirs, format!("{ours:?} vs {theirs:?}"))?;
    Ok(format!(
        "max deviation {worst:.1e}, inconsistent mass {inconsistent:.1e}, {} implications",
        ours.len()
    ))
}

fn claims() -> Outcome {
    let f = fr_realization();
    let m = realize(&f.realization, &f.scenario)
        .map_err(|e| e.to_string())?
        .snapped();
    let sc = m.scenario();
    let c = sc.find_context(&["A_meta", "B_meta"]).unwrap();
    let t = sc.resolve_tuple(c, &["-", "-"]).unwrap();
    let p = m.exact_probability(c, t).ok_or("no exact seed probability")?.clone();
    check(p == ratio(1, 12), format!("seed probability {p}"))?;
    let support = support_of(&m, DEFAULT_SUPPORT_EPS).map_err(|e| e.to_string())?;
    let cycle = liar_cycles(&support, c, t)
        .map_err(|e| e.to_string())?
        .ok_or("no cycle")?;
    let (claims, seed) = cycle_claims(sc, &cycle, &fr_agents(), "FR", "P = 1/12");
    let all = check_claims(sc, &claims, AssumptionSet::ALL, &seed).map_err(|e| e.to_string())?;
    let Verdict::Contradiction { trace, conflict } = &all else {
        return Err("consistent under Q,NMC,NC,S".into());
    };
    let lines: Vec<String> = trace.iter().map(ToString::to_string).collect();
    let expected = [
        "FR1 (Alice in {Alice, Friend_A⊗S_A}): A_meta=- => B_obs=1",
        "FR2 (Friend_B in {Friend_B, S_B}): B_obs=1 => A_obs=1",
        "FR3 (Friend_A in {Friend_A, S_A}): A_obs=1 => B_meta=+",
    ];
    check(lines == expected, format!("trace {lines:?}"))?;
    check(
        conflict.observable == "B_meta" && conflict.held == "-" && conflict.forced == "+",
        format!("{conflict:?}"),
    )?;
    let no_nmc = AssumptionSet {
        nmc: false,
        ..AssumptionSet::ALL
    };
    let v = check_claims(sc, &claims, no_nmc, &seed).map_err(|e| e.to_string())?;
    check(!v.is_contradiction(), "contradiction without NMC")?;
    Ok(format!("{}; without NMC consistent; seed {p}", ids(trace)))
}

fn ids(trace: &[ctxkit::metacontext::TraceStep]) -> String {
    trace.iter().map(|s| s.claim.as_str()).collect::<Vec<_>>().join(" -> ")
}

fn wigner() -> Outcome {
    let chain = wigner_chain();
    let bell = ProductBasis::single(SiteBasis::bell(0, 1));
    let cmp = compare_cuts(&chain, Cut(0), Cut(1), &bell).map_err(|e| e.to_string())?;
    let p0 = cmp.first.get(&["Phi+"]).ok_or("no Phi+")?;
    let p1 = cmp.second.get(&["Phi+"]).ok_or("no Phi+")?;
    check(close(p0, 0.5) && close(p1, 1.0), format!("P(Phi+) {p0} vs {p1}"))?;
    check(close(cmp.total_variation, 0.5), format!("TV {}", cmp.total_variation))?;
    let records = ProductBasis::new(vec![SiteBasis::computational(0, 2), chain.memory_basis(0)]).unwrap();
    let cmp2 = compare_cuts(&chain, Cut(0), Cut(1), &records).map_err(|e| e.to_string())?;
    check(
        close(cmp2.total_variation, 0.0),
        format!("memory TV {}", cmp2.total_variation),
    )?;
    Ok(format!(
        "Bell TV {} (P(Phi+) {p0} vs {p1}); memory TV {}",
        cmp.total_variation, cmp2.total_variation
    ))
}

fn cycles() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst_product: f64 = 0.0;
    for n in 3..=5 {
        let odd = cycle_model(n, Parity::Odd).map_err(|e| e.to_string())?;
        let even = cycle_model(n, Parity::Even).map_err(|e| e.to_string())?;
        let so = global_sections(&odd).map_err(|e| e.to_string())?.len();
        let se = global_sections(&even).map_err(|e| e.to_string())?.len();
        check(so == 0, format!("n={n} odd: {so} sections"))?;
        check(se == 2, format!("n={n} even: {se} sections"))?;
        let class = classify(&odd).map_err(|e| e.to_string())?;
        check(
            class == Classification::StronglyContextual,
            format!("n={n} odd: {class}"),
        )?;
        let half = cycle_empirical(n, Parity::Odd).map_err(|e| e.to_string())?;
        let r = contextual_fraction(&half).map_err(|e| e.to_string())?;
        check(r.ncf.abs() <= TOL, format!("n={n} odd ncf {}", r.ncf))?;
        for _ in 0..5 {
            let marginals: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let p: f64 = rng.random_range(0.0..=1.0);
                    vec![p, 1.0 - p]
                })
                .collect();
            let m = product_model(cycle_scenario(n, Parity::Odd).unwrap(), &marginals).map_err(|e| e.to_string())?;
            let r = contextual_fraction(&m).map_err(|e| e.to_string())?;
            worst_product = worst_product.max((r.ncf - 1.0).abs());
        }
    }
    check(worst_product <= TOL, format!("product ncf off by {worst_product:e}"))?;
    Ok(format!("n = 3, 4, 5; product ncf within {worst_product:.1e} of 1"))
}

fn lp_integrity() -> Outcome {
    let m = hardy_model();
    let r = contextual_fraction(&m).map_err(|e| e.to_string())?;
    let exact = r.exact.as_ref().ok_or("no exact re-solve")?;
    let (best, vertices) = ncf_by_vertices(&m);
    check(exact.ncf == best, format!("ncf {} vs oracle {best}", exact.ncf))?;
    check(exact.certified_optimal, "not certified")?;
    let witness: Vec<(Vec<usize>, _)> = exact
        .witness
        .iter()
        .map(|(g, w)| (g.values().to_vec(), w.clone()))
        .collect();
    check(
        vertices.iter().any(|v| v.weights == witness),
        "witness is not an optimal vertex of the oracle",
    )?;
    // Re-multiply the witness into the tables.
    let sc = m.scenario();
    let mut worst_slack = f64::INFINITY;
    for c in 0..sc.contexts().len() {
        let mut load = vec![0.0; sc.tuple_count(c)];
        for (g, w) in &r.witness {
            let digits: Vec<usize> = sc.contexts()[c].members().iter().map(|&o| g.values()[o]).collect();
            load[sc.tuple_index(c, &digits)] += w;
        }
        for (l, p) in load.iter().zip(m.table(c)) {
            worst_slack = worst_slack.min(p - l);
        }
    }
    check(worst_slack >= -TOL, format!("slack {worst_slack:e}"))?;
    check(r.witness.iter().all(|(_, w)| *w >= -TOL), "negative weight")?;
    Ok(format!(
        "ncf {} = oracle ({} optimal vertices), min slack {:.1e}",
        best,
        vertices.len(),
        worst_slack
    ))
}

fn properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst_nd: f64 = 0.0;
    let mut worst_iso: f64 = 0.0;
    for _ in 0..1000 {
        let dims = [rng.random_range(2..=3usize), rng.random_range(2..=3usize)];
        let state = random_state(&mut rng, &dims);
        let a: Vec<SiteBasis> = (0..2).map(|_| random_basis(&mut rng, 0, dims[0])).collect();
        let b: Vec<SiteBasis> = (0..2).map(|_| random_basis(&mut rng, 1, dims[1])).collect();
        let out = |d: usize| (0..d).map(|k| k.to_string()).collect::<Vec<_>>();
        let (oa, ob) = (out(dims[0]), out(dims[1]));
        let oa: Vec<&str> = oa.iter().map(String::as_str).collect();
        let ob: Vec<&str> = ob.iter().map(String::as_str).collect();
        let sc = Scenario::new(
            "random",
            vec![
                Observable::new("A0", &oa).unwrap(),
                Observable::new("A1", &oa).unwrap(),
                Observable::new("B0", &ob).unwrap(),
                Observable::new("B1", &ob).unwrap(),
            ],
            &[vec!["A0", "B0"], vec!["A0", "B1"], vec!["A1", "B0"], vec!["A1", "B1"]],
        )
        .unwrap();
        let qr = QuantumRealization {
            state: state.clone(),
            recipes: vec![
                MeasurementRecipe::direct("A0", a[0].clone()),
                MeasurementRecipe::direct("A1", a[1].clone()),
                MeasurementRecipe::direct("B0", b[0].clone()),
                MeasurementRecipe::direct("B1", b[1].clone()),
            ],
        };
        let m = realize(&qr, &sc).map_err(|e| e.to_string())?;
        worst_nd = worst_nd.max(no_disturbance(&m).max_violation);

        let other = random_state(&mut rng, &dims);
        let before: Complex64 = state.inner(&other);
        let vs = premeasure(&state, &a[0]).map_err(|e| e.to_string())?;
        let vo = premeasure(&other, &a[0]).map_err(|e| e.to_string())?;
        worst_iso = worst_iso
            .max((vs.norm_sqr() - 1.0).abs())
            .max((vs.inner(&vo) - before).norm());
    }
    check(worst_nd <= TOL, format!("no-disturbance violated by {worst_nd:e}"))?;
    check(worst_iso <= TOL, format!("premeasure off by {worst_iso:e}"))?;

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    files.sort();
    check(!files.is_empty(), "empty corpus")?;
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let doc = parse_document(&text).map_err(|e| format!("{}: {e}", f.display()))?;
        let written = serialize(&doc);
        let back = parse_document(&written).map_err(|e| format!("{}: {e}", f.display()))?;
        check(back == doc, format!("{} does not round-trip", f.display()))?;
        check(
            serialize(&back) == written,
            format!("{} serializes unstably", f.display()),
        )?;
    }
    Ok(format!(
        "1000 random cases: no-disturbance {worst_nd:.1e}, isometry {worst_iso:.1e}; {} corpus files round-trip",
        files.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Hardy tables", hardy_tables),
        ("Hardy P(-,-) and Liar cycle", hardy_liar),
        ("Hardy classification and sections", hardy_sections),
        ("friendification fidelity", friendification),
        ("claims engine", claims),
        ("Wigner cut comparison", wigner),
        ("cycle models", cycles),
        ("LP integrity", lp_integrity),
        ("property suites", properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
