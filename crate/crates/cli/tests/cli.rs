use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cake_core::io::parse_division;
use cake_core::rational::parse_rational;
use serde_json::Value;

fn cakecut(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cakecut"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn manifest(out: &Path, command: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn result(m: &Value, name: &str) -> String {
    m["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == name)
        .unwrap_or_else(|| panic!("no result {name}"))["value"]
        .as_str()
        .unwrap()
        .to_string()
}

fn generated(family: &[&str]) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["generate"];
    args.extend_from_slice(family);
    let o = cakecut(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let inst = dir.path().join("instance.json");
    (dir, inst)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn generate_tight_predicts_partial_value() {
    let (dir, _) = generated(&["egalitarian-tight", "--n", "3", "--eps", "1/100"]);
    let m = manifest(dir.path(), "generate");
    assert_eq!(result(&m, "partial.egalitarian"), "49/100");
    for entry in m["results"].as_array().unwrap() {
        parse_rational(entry["value"].as_str().unwrap()).unwrap();
    }
    let bundle: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle["family"], "egalitarian-tight");
}

#[test]
fn generate_pareto_and_bad_params() {
    let (dir, _) = generated(&["pareto", "--n", "4"]);
    for f in ["instance.json", "complete.json", "partial.json", "bundle.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let o = cakecut(dir.path(), &["generate", "utilitarian", "--k", "1", "--t", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("t >= 2"));
}

#[test]
fn generate_random_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = cakecut(d.path(), &["--seed", "11", "generate", "random", "--n", "3"]);
        assert_eq!(code(&o), 0);
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("instance.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn verify_exit_codes() {
    let (dir, inst) = generated(&["intro"]);
    let half = write(
        dir.path(),
        "half.json",
        r#"{"pieces":[{"left":"0","right":"1/2"},{"left":"1/2","right":"1"}]}"#,
    );
    let o = cakecut(dir.path(), &["verify", inst.to_str().unwrap(), half.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(result(&manifest(dir.path(), "verify"), "utilitarian"), "1/1");

    let quarter = write(
        dir.path(),
        "q.json",
        r#"{"pieces":[{"left":"0","right":"1/4"},{"left":"1/4","right":"1"}]}"#,
    );
    let o = cakecut(
        dir.path(),
        &["verify", inst.to_str().unwrap(), quarter.to_str().unwrap()],
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("player 1 envies player 2"));

    let bad = write(dir.path(), "bad.json", r#"{"pieces":[{"left":"0","right":"1/0"}]}"#);
    let o = cakecut(dir.path(), &["verify", inst.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn paradox_tight_three_and_budget() {
    let (dir, inst) = generated(&["egalitarian-tight", "--n", "3"]);
    let o = cakecut(
        dir.path(),
        &["paradox", inst.to_str().unwrap(), "--welfare", "egalitarian"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(result(&manifest(dir.path(), "paradox"), "alpha"), "147/103");
    let text = std::fs::read_to_string(dir.path().join("paradox.partial.json")).unwrap();
    parse_division(&text).unwrap();

    let (dir, inst) = generated(&["utilitarian", "--k", "8", "--t", "2"]);
    let o = cakecut(dir.path(), &["paradox", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert_eq!(manifest(dir.path(), "paradox")["verdict"], "budget-exceeded");
}

#[test]
fn paradox_with_grid() {
    let (dir, inst) = generated(&["intro"]);
    let o = cakecut(dir.path(), &["paradox", inst.to_str().unwrap(), "--grid", "200"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path(), "paradox");
    assert_eq!(result(&m, "complete.utilitarian"), "1/1");
    assert_eq!(result(&m, "partial.utilitarian"), "299/200");
}

#[test]
fn pareto_check_verdicts() {
    let (dir, inst) = generated(&["pareto", "--n", "4"]);
    let complete = dir.path().join("complete.json");
    let o = cakecut(
        dir.path(),
        &["pareto-check", inst.to_str().unwrap(), complete.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(manifest(dir.path(), "pareto-check")["verdict"], "no");

    let empty = write(
        dir.path(),
        "empty.json",
        r#"{"pieces":[{"left":"0","right":"0"},{"left":"0","right":"0"},{"left":"0","right":"0"},{"left":"0","right":"0"}]}"#,
    );
    let o = cakecut(
        dir.path(),
        &["pareto-check", inst.to_str().unwrap(), empty.to_str().unwrap()],
    );
    assert_eq!(code(&o), 1);
    assert_eq!(manifest(dir.path(), "pareto-check")["verdict"], "yes");
}

#[test]
fn solve_and_oracle() {
    let (dir, inst) = generated(&["egalitarian", "--k", "1"]);
    let o = cakecut(
        dir.path(),
        &["solve", inst.to_str().unwrap(), "--mode", "complete", "--player", "4"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(result(&manifest(dir.path(), "solve"), "optimum"), "1/4");

    let (dir, inst) = generated(&["intro"]);
    let o = cakecut(
        dir.path(),
        &[
            "oracle",
            inst.to_str().unwrap(),
            "--mode",
            "complete",
            "--resolution",
            "2",
        ],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(result(&manifest(dir.path(), "oracle"), "grid optimum"), "1/1");
}

#[test]
fn render_is_deterministic() {
    let (dir, inst) = generated(&["egalitarian-tight", "--n", "4"]);
    let partial = dir.path().join("partial.json");
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    for out in [&a, &b] {
        let o = cakecut(
            dir.path(),
            &[
                "render",
                inst.to_str().unwrap(),
                partial.to_str().unwrap(),
                "-o",
                out.to_str().unwrap(),
            ],
        );
        assert_eq!(code(&o), 0);
    }
    let svg = std::fs::read(&a).unwrap();
    assert_eq!(svg, std::fs::read(&b).unwrap());
    assert!(String::from_utf8(svg).unwrap().contains("url(#hatch)"));

    let o = cakecut(
        dir.path(),
        &["render", dir.path().join("missing.json").to_str().unwrap()],
    );
    assert_eq!(code(&o), 2);
}
