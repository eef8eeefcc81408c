//! Command line behaviour: exit codes, output files and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use contactnet::graph::{same_attribute_edge_count, Attribute, Layer};
use contactnet::ingest::{read_cohort, read_nominations};
use contactnet::synth::{AttributeSpec, CohortConfig, SchoolSpec};
use tempfile::TempDir;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contactnet"))
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env("RUST_LOG", "error")
        .arg("--quiet")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    o
}

struct Fixture {
    dir: TempDir,
    cohort: PathBuf,
    noms: PathBuf,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = CohortConfig::simple(150, 3.0, 21);
        cfg.schools = (0..3).map(|s| SchoolSpec { id: format!("S{s}"), size: 50, weeks: vec![] }).collect();
        cfg.within_school_bias = 4.0;
        cfg.attribute_specs.push(AttributeSpec {
            attribute: Attribute::Sex,
            levels: vec![("female".into(), 0.5), ("male".into(), 0.5)],
            missing_probability: 0.0,
            homophily_weight: 1.0,
        });
        for attr in [Attribute::Smoking, Attribute::Snuff] {
            cfg.attribute_specs.push(AttributeSpec {
                attribute: attr,
                levels: vec![("never".into(), 0.6), ("sometimes".into(), 0.25), ("daily".into(), 0.15)],
                missing_probability: 0.05,
                homophily_weight: 1.0,
            });
        }
        let config = dir.path().join("config.json");
        std::fs::write(&config, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
        ok(cli(dir.path(), &["--out", "gen", "generate", "--config", config.to_str().unwrap()]));
        let cohort = dir.path().join("gen/cohort.csv");
        let noms = dir.path().join("gen/nominations.csv");
        Fixture { dir, cohort, noms }
    }

    fn run(&self, out: &str, args: &[&str]) -> Output {
        let mut full = vec!["--out", out];
        full.extend_from_slice(args);
        full.extend(["--cohort", self.cohort.to_str().unwrap(), "--nominations", self.noms.to_str().unwrap()]);
        cli(self.dir.path(), &full)
    }

    fn read(&self, rel: &str) -> Vec<u8> {
        std::fs::read(self.dir.path().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    fn json(&self, rel: &str) -> serde_json::Value {
        serde_json::from_slice(&self.read(rel)).unwrap()
    }
}

fn validate(kind: &str, doc: &serde_json::Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{kind}.schema.json"));
    let schema: serde_json::Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errs: Vec<String> = v.iter_errors(doc).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errs.is_empty(), "{kind}: {errs:?}");
}

#[test]
fn exit_codes_follow_error_class() {
    let f = Fixture::new();
    let d = f.dir.path();
    assert_eq!(code(&cli(d, &["frobnicate"])), 2);
    assert_eq!(code(&f.run("o", &["homophily", "--attr", "school", "--layer", "work"])), 2);
    assert_eq!(code(&f.run("o", &["fit", "--model", "ergm", "--attrs", "height"])), 2);
    let missing = cli(d, &["describe", "--cohort", "nope.csv", "--nominations", "nope.csv"]);
    assert_eq!(code(&missing), 3);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));
    std::fs::write(d.join("bad.csv"), "id,sex,carriage_direct,carriage_enrichment\nA,female,maybe,positive\n").unwrap();
    let bad = cli(d, &["describe", "--cohort", "bad.csv", "--nominations", f.noms.to_str().unwrap()]);
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("row 1"));
}

#[test]
fn empty_nominations() {
    let f = Fixture::new();
    let header = String::from_utf8(f.read("gen/nominations.csv")).unwrap().lines().next().unwrap().to_string();
    std::fs::write(f.dir.path().join("empty.csv"), format!("{header}\n")).unwrap();
    let args = |extra: &[&'static str]| {
        let mut v = vec!["--out", "o"];
        v.extend_from_slice(extra);
        v.extend(["--cohort", f.cohort.to_str().unwrap(), "--nominations", "empty.csv"]);
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let run = |extra: &[&'static str]| {
        let a = args(extra);
        cli(f.dir.path(), &a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    ok(run(&["describe"]));
    let d = f.json("o/describe.json");
    assert_eq!(d["result"]["networks"][0]["edges"], 0);
    // no edge means no eligible edge: a numeric failure, not a crash
    assert_eq!(code(&run(&["homophily", "--attr", "school", "--sims", "50", "--seed", "1"])), 4);
    assert_eq!(code(&run(&["fit", "--model", "logit", "--trait", "direct"])), 4);
}

#[test]
fn empty_layer_is_reported_not_fatal() {
    let f = Fixture::new();
    ok(f.run("o", &["describe", "--layer", "sports"]));
    ok(f.run("h", &["homophily", "--attr", "sex", "--layer", "all", "--sims", "100", "--seed", "2"]));
    let h = f.json("h/homophily.json");
    validate("homophily", &h);
    assert_eq!(h["result"]["layers"].as_array().unwrap().len(), Layer::ALL.len());
}

#[test]
fn export_marks_same_attribute_edges() {
    let f = Fixture::new();
    ok(f.run("x", &["export", "--format", "edge-list", "--layer", "school", "--color-by", "school"]));
    let text = String::from_utf8(f.read("x/school.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("source,target,same_school"));
    let rows: Vec<&str> = lines.collect();
    let flagged = rows.iter().filter(|l| l.ends_with(",true")).count();

    let (cohort, _) = read_cohort(&f.cohort).unwrap();
    let (noms, _) = read_nominations(&f.noms, &cohort).unwrap();
    let net = contactnet::graph::build_network(cohort.len(), &noms, Layer::School).unwrap();
    let col = cohort.column(Attribute::School).unwrap();
    assert_eq!(rows.len(), net.edge_count());
    assert_eq!(flagged, same_attribute_edge_count(&net, &col, None));

    ok(f.run("x", &["export", "--format", "graphml", "--color-by", "school"]));
    let xml = String::from_utf8(f.read("x/overall.graphml")).unwrap();
    assert_eq!(xml.matches("<edge ").count(), contactnet::graph::build_network(cohort.len(), &noms, Layer::Overall).unwrap().edge_count());
    ok(f.run("x", &["export", "--format", "dot"]));
    assert!(String::from_utf8(f.read("x/overall.dot")).unwrap().starts_with("graph"));
}

#[test]
fn outputs_validate_against_schemas() {
    let f = Fixture::new();
    let runs: &[(&str, &[&str])] = &[
        ("describe", &["describe"]),
        ("homophily", &["homophily", "--attr", "school", "--sims", "200", "--seed", "4"]),
        ("fit-ergm", &["fit", "--model", "ergm", "--attrs", "school,sex"]),
        ("fit-autocorr", &["fit", "--model", "autocorr", "--trait", "direct", "--attrs", "sex,smoking"]),
        ("fit-logit", &["fit", "--model", "logit", "--trait", "enrichment"]),
        ("fit-rr", &["fit", "--model", "rr", "--trait", "direct", "--attrs", "smoking"]),
    ];
    for (kind, args) in runs {
        ok(f.run(kind, args));
        let doc = f.json(&format!("{kind}/{kind}.json"));
        validate(kind, &doc);
        let manifest = f.json(&format!("{kind}/manifest.json"));
        validate("manifest", &manifest);
        assert_eq!(doc["manifest_id"], manifest["manifest_id"]);
        assert!(!f.read(&format!("{kind}/{kind}.txt")).is_empty());
    }
    let text = String::from_utf8(f.read("homophily/homophily.txt")).unwrap();
    for column in contactnet::report::HOMOPHILY_COLUMNS {
        assert!(text.contains(column), "missing column {column}");
    }
}

#[test]
fn seeded_runs_repeat_exactly() {
    let f = Fixture::new();
    let args = ["homophily", "--attr", "school", "--sims", "300", "--seed", "7"];
    ok(f.run("a", &args));
    ok(f.run("b", &args));
    assert_eq!(f.read("a/homophily.json"), f.read("b/homophily.json"));
    assert_eq!(f.json("a/manifest.json")["manifest_id"], f.json("b/manifest.json")["manifest_id"]);
}

#[test]
fn auto_seed_is_recorded_and_replayable() {
    let f = Fixture::new();
    ok(f.run("auto", &["homophily", "--attr", "school", "--sims", "300"]));
    let manifest = f.json("auto/manifest.json");
    assert_eq!(manifest["seed_source"], "auto");
    assert!(manifest["seed"].as_u64().is_some());
    ok(cli(f.dir.path(), &["--out", "again", "replay", "auto/manifest.json"]));
    assert_eq!(f.read("auto/homophily.json"), f.read("again/homophily.json"));
}

#[test]
fn replay_rejects_changed_inputs() {
    let f = Fixture::new();
    ok(f.run("r", &["describe"]));
    let mut noms = f.read("gen/nominations.csv");
    noms.extend_from_slice(b"\n");
    std::fs::write(&f.noms, noms).unwrap();
    let o = cli(f.dir.path(), &["--out", "r2", "replay", "r/manifest.json"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nominations"));
}
