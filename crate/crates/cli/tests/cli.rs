use std::path::PathBuf;
use std::process::{Command, Output};

use ctxkit::report::{from_json, render_text};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> String {
    root().join("corpus").join(name).to_string_lossy().into_owned()
}

fn ctxkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxkit")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = ctxkit(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const PAIRS: [(&[&str], &str); 9] = [
    (&["hardy"], "hardy.scn"),
    (&["fr"], "fr.scn"),
    (&["wigner"], "wigner.scn"),
    (&["cycle", "3", "odd"], "cycle_3_odd.scn"),
    (&["cycle", "3", "even"], "cycle_3_even.scn"),
    (&["cycle", "4", "odd"], "cycle_4_odd.scn"),
    (&["cycle", "4", "even"], "cycle_4_even.scn"),
    (&["cycle", "5", "odd"], "cycle_5_odd.scn"),
    (&["cycle", "5", "even"], "cycle_5_even.scn"),
];

#[test]
fn analyze_matches_demo_byte_for_byte() {
    for (demo, file) in PAIRS {
        for format in ["text", "json"] {
            let mut a = vec!["demo"];
            a.extend_from_slice(demo);
            a.extend(["--format", format]);
            let path = corpus(file);
            assert_eq!(
                stdout(&a),
                stdout(&["analyze", &path, "--format", format]),
                "{file} {format}"
            );
        }
    }
}

#[test]
fn json_regenerates_text() {
    for (demo, _) in PAIRS {
        let mut a = vec!["demo"];
        a.extend_from_slice(demo);
        let text = stdout(&a);
        a.extend(["--format", "json"]);
        let report = from_json(&stdout(&a)).unwrap();
        assert_eq!(render_text(&report), text, "{demo:?}");
    }
}

#[test]
fn json_validates_against_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root().join("schema/report.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let mut runs: Vec<Vec<String>> = PAIRS
        .iter()
        .map(|(d, _)| {
            std::iter::once("demo")
                .chain(d.iter().copied())
                .map(String::from)
                .collect()
        })
        .collect();
    for file in ["hardy.scn", "cycle_5_odd.scn"] {
        runs.push(vec!["ncf".into(), corpus(file)]);
        runs.push(vec!["cycles".into(), corpus(file)]);
    }
    runs.push(vec!["demo".into(), "fr".into(), "--assumptions".into(), "Q,NC".into()]);
    for mut args in runs {
        args.extend(["--format".into(), "json".into()]);
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let value: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
}

#[test]
fn hardy_json_report() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["demo", "hardy", "--format", "json"])).unwrap();
    assert_eq!(v["classification"], "LogicallyContextual");
    let p = v["sentences"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["kind"] == "probability")
        .unwrap();
    assert_eq!(p["probability"]["exact"], "1/12");
    assert_eq!(p["event"][0]["value"], "-");
    assert_eq!(p["event"][1]["value"], "-");
}

#[test]
fn fr_trace_under_all_assumptions() {
    let out = stdout(&["demo", "fr", "--assumptions", "Q,NMC,NC,S"]);
    let verdicts = out.split("\nverdicts\n").nth(1).unwrap();
    let expected = "  Q,NMC,NC,S: Contradiction
    FR1 (Alice in {Alice, Friend_A⊗S_A}): A_meta=- => B_obs=1
    FR2 (Friend_B in {Friend_B, S_B}): B_obs=1 => A_obs=1
    FR3 (Friend_A in {Friend_A, S_A}): A_obs=1 => B_meta=+
    B_meta forced to + against -
";
    assert_eq!(verdicts, expected);
    let out = stdout(&["demo", "fr", "--assumptions", "Q,NC,S"]);
    assert!(out.contains("  Q,NC,S: Consistent"));
}

#[test]
fn cycle_4_odd_is_strongly_contextual() {
    let out = stdout(&["analyze", &corpus("cycle_4_odd.scn")]);
    assert!(out.contains("classification: StronglyContextual\n"));
    assert!(out.contains("noncontextual fraction: 0\n"));
}

#[test]
fn cycles_with_seed() {
    let hardy = corpus("hardy.scn");
    let by_label = stdout(&["cycles", &hardy, "--seed", "A_d,B_d", "-,-"]);
    let by_index = stdout(&["cycles", &hardy, "--seed", "3", "3"]);
    assert_eq!(by_label, by_index);
    assert!(by_label.contains("length 4, contradicts B_d=-"));
    assert!(!by_label.contains("noncontextual fraction"));
    let out = ctxkit(&["cycles", &hardy, "--seed", "A_d,B_d", "-,x"]);
    assert_eq!(out.status.code(), Some(2));
    // (+,+) is possible but refutes nothing
    assert!(stdout(&["cycles", &hardy, "--seed", "3", "0"]).contains("extends to a global section"));
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("ctxkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let signalling = dir.join("signalling.scn");
    std::fs::write(
        &signalling,
        "scenario s\nobservable A outcomes 0 1\nobservable B outcomes 0 1\ncontext A\ncontext A B\n\
         table A\n  0 1\n  1 0\ntable A B\n  0 0 1 0\n",
    )
    .unwrap();
    let s = signalling.to_string_lossy();
    assert_eq!(ctxkit(&["ncf", &s]).status.code(), Some(1));
    assert_eq!(ctxkit(&["analyze", &s]).status.code(), Some(0));

    let broken = dir.join("broken.scn");
    std::fs::write(
        &broken,
        "scenario b\nobservable A outcomes 0 1\ncontext A\ntable A\n  0 0.5\n  2 0.5\n",
    )
    .unwrap();
    let out = ctxkit(&["analyze", &broken.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6, column 3"));

    assert_eq!(ctxkit(&["analyze", "/nonexistent/file.scn"]).status.code(), Some(2));
    assert_eq!(ctxkit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ctxkit(&["demo", "hardy", "--format", "yaml"]).status.code(), Some(2));
    assert_eq!(ctxkit(&["demo", "fr", "--assumptions", "Q,X"]).status.code(), Some(2));
    assert_eq!(ctxkit(&["demo", "hardy", "--eps", "2"]).status.code(), Some(2));
    assert_eq!(ctxkit(&["ncf", &corpus("wigner.scn")]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic() {
    let a = stdout(&["demo", "fr", "--format", "json"]);
    let b = stdout(&["demo", "fr", "--format", "json"]);
    assert_eq!(a, b);
}
