use std::path::PathBuf;
use std::process::Command as Process;

use serde_json::Value;
use slalomlab::config::Config;
use slalomlab::{execute, inputs_match, Command, Overrides};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bin(args: &[&str]) -> (i32, Value, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_slalomlab")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

fn config_path(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

const EMPTY: &str = r#"
[family.e]
kind = "table"
horizon = 5
levels = {}

[run]
family = "e"
"#;

#[test]
fn classify_empty_slalom() {
    let report = execute(Command::Classify, &Config::parse(EMPTY).unwrap(), Overrides::default()).unwrap();
    let member = &report.body["result"]["members"][0];
    assert_eq!(member["partial_sum"], "0/1");
    assert_eq!(member["ideals"]["W"]["status"], "Yes");
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn measure_of_fixed_member() {
    let (code, json, _) = bin(&["measure", "--config", &config_path("measure.toml")]);
    assert_eq!(code, 0);
    assert_eq!(json["result"]["members"][0]["measure"]["value"], "21/32");
    assert_eq!(json["result"]["members"][0]["measure"]["exact"], true);
}

#[test]
fn projection_sweep_at_depth_four() {
    let (code, json, _) = bin(&["verify-projection", "--depth", "4"]);
    assert_eq!(code, 0);
    assert_eq!(json["finding"], false);
    assert_eq!(json["result"]["failures"].as_array().unwrap().len(), 0);
    assert_eq!(json["result"]["images_hit"], json["result"]["cohen_total"]);
}

#[test]
fn every_subcommand_runs_on_the_sample_configs() {
    let families = config_path("families.toml");
    let construction = config_path("construction.toml");
    for cmd in [
        "classify",
        "localize",
        "omega-enum",
        "fact-check",
        "meet",
        "pibase",
        "measure",
        "converge",
        "destruct-cert",
        "borel-cantelli",
        "kelley",
        "linked-partition",
        "diagonal",
        "independent",
        "s-alpha",
        "independence-check",
        "bounding-search",
        "cohen-project",
        "mathias-embed",
        "mathias-order-check",
    ] {
        let (code, json, err) = bin(&[cmd, "--config", &families]);
        assert_eq!(code, 0, "{cmd}: {err}");
        assert_eq!(json["command"], cmd);
    }
    for cmd in ["star-refine", "chain-step"] {
        let (code, _, err) = bin(&[cmd, "--config", &construction]);
        assert_eq!(code, 0, "{cmd}: {err}");
    }
}

#[test]
fn centered_classes_over_a_bound() {
    let mut config = Config::parse(&std::fs::read_to_string(configs().join("construction.toml")).unwrap()).unwrap();
    config.run.insert("family".into(), "below".into());
    let report = execute(Command::CenteredDecomp, &config, Overrides::default()).unwrap();
    let classes = report.body["result"]["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 2);
    assert!(classes.iter().all(|c| c["centered"] == true));
}

#[test]
fn exit_codes() {
    let (code, _, _) = bin(&["no-such-command"]);
    assert_eq!(code, 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[family.x]\nkind = \"table\"\nlevelz = {}\n").unwrap();
    let (code, _, err) = bin(&["classify", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("malformed config"), "{err}");

    let (code, _, err) = bin(&["verify-projection", "--depth", "9"]);
    assert_eq!(code, 1, "{err}");

    // no extra budget leaves the new path's graph outside the result
    let tight = dir.path().join("tight.toml");
    let text = "[family.many]\nkind = \"table\"\nhorizon = 9\nseed = 3\ncount = 12\nmax_len = 3\n\n\
                [run]\nfamily = \"many\"\nhorizon = 10\nextra_budget = \"0\"\n";
    std::fs::write(&tight, text).unwrap();
    let (code, json, _) = bin(&["chain-step", "--config", tight.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(json["finding"], true);
}

#[test]
fn reports_are_deterministic_and_digests_revalidate() {
    let text = std::fs::read_to_string(configs().join("families.toml")).unwrap();
    let config = Config::parse(&text).unwrap();
    for cmd in [Command::Classify, Command::Meet, Command::Kelley, Command::Pibase] {
        let a = execute(cmd, &config, Overrides::default()).unwrap();
        let b = execute(cmd, &config, Overrides::default()).unwrap();
        assert_eq!(serde_json::to_string(&a.body).unwrap(), serde_json::to_string(&b.body).unwrap());
        assert!(inputs_match(&a.body, &config, None).unwrap());
    }
    let mut changed = config.clone();
    changed.family.get_mut("random").unwrap().seed = Some(8);
    let report = execute(Command::Classify, &config, Overrides::default()).unwrap();
    assert!(!inputs_match(&report.body, &changed, None).unwrap());
}

#[test]
fn specs_round_trip_through_toml() {
    for name in ["families.toml", "construction.toml", "measure.toml"] {
        let config = Config::parse(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap();
        let again = Config::parse(&config.to_toml().unwrap()).unwrap();
        assert_eq!(again, config, "{name}");
    }
}

#[test]
fn seeded_families_reproduce() {
    let text = "[family.r]\nkind = \"table\"\nhorizon = 8\nseed = 11\ncount = 5\n";
    let a = slalomlab::family::materialize(&Config::parse(text).unwrap(), None).unwrap();
    let b = slalomlab::family::materialize(&Config::parse(text).unwrap(), None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a["r"].members.len(), 5);
    assert!(a["r"].members.iter().all(|m| m.slalom.horizon() == 8));
}

#[test]
fn report_writes_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, _, _) = bin(&["omega-enum", "--depth", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let counts: Vec<&str> =
        json["result"]["levels"].as_array().unwrap().iter().map(|l| l["count"].as_str().unwrap()).collect();
    assert_eq!(counts, ["1", "1", "3", "45", "11475", "752014125"]);
    assert_eq!(json["version"], 1);
}
