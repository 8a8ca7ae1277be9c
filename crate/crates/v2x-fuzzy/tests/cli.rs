use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use v2x_fuzzy::export::{read_node_table, NODE_HEADER};
use v2x_fuzzy::scenario_file::parse_scenario;
use v2x_fuzzy_core::fuzzy::FisDefinition;
use v2x_fuzzy_core::metrics::Metric;
use v2x_fuzzy_core::sim::Simulation;
use v2x_fuzzy_core::world::{Mode, Scenario};

fn cli(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_v2x-fuzzy")).current_dir(cwd).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn errors(o: &Output) -> serde_json::Value {
    serde_json::from_slice::<serde_json::Value>(&o.stderr).unwrap()["errors"].clone()
}

#[test]
fn run_exports_every_node_and_echoes_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["run", "--scenario", "scenario1", "--mode", "fuzzy", "--duration", "20", "--out", "res"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, ["res"]);

    let res = dir.path().join("res");
    let echoed = fs::read_to_string(res.join("effective_config.toml")).unwrap();
    let expected = Scenario { mode: Mode::Fuzzy, duration: 20.0, ..Scenario::scenario1() };
    assert_eq!(parse_scenario(&echoed, "echo").unwrap().scenario, expected);

    let nodes = read_node_table(fs::File::open(res.join("nodes.csv")).unwrap()).unwrap();
    assert_eq!(nodes.len(), 45);
    let direct = Simulation::new(expected, FisDefinition::f802_11p()).unwrap().run();
    assert_eq!(nodes, direct.nodes);

    let summary: serde_json::Value = serde_json::from_slice(&fs::read(res.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["summary"]["acceptance"], "Good");
    assert_eq!(summary["summary"]["metrics"][4]["metric"], "sentPackets");
}

#[test]
fn empty_world_gives_header_only_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        dir.path(),
        &[
            "run",
            "--set",
            "vehicle_count=0",
            "--set",
            "rsu_count=0",
            "--set",
            "accidents=0",
            "--set",
            "wsa_probability=0",
            "--duration",
            "5",
            "--out",
            "e",
        ],
    );
    assert!(o.status.success(), "{}", text(&o.stderr));
    let table = fs::read_to_string(dir.path().join("e/nodes.csv")).unwrap();
    assert_eq!(table, NODE_HEADER.join(",") + "\n");
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("e/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["nodes"], 0);
    assert!(summary["summary"]["metrics"].as_array().unwrap().iter().all(|m| m["total"] == 0.0));
}

#[test]
fn compare_writes_one_report_and_two_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["compare", "--scenario", "scenario1", "--seed", "7", "--duration", "30", "--out", "c"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let c = dir.path().join("c");
    for f in ["comparison.json", "baseline/nodes.csv", "fuzzy/nodes.csv", "effective_config.toml", "effective.fis"] {
        assert!(c.join(f).is_file(), "{f}");
    }
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(c.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(rep["kind"], "comparison_report");
    assert_eq!(rep["report"]["seed"], 7);
    let names: Vec<&str> =
        rep["report"]["figures"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["collided_packets", "redundant_sent_packets", "network_overhead", "channel_idle_time"]);
    assert!(text(&o.stdout).contains("collided_packets"));
}

#[test]
fn trace_is_time_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["run", "--duration", "3", "--trace", "--out", "t"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let trace = fs::read_to_string(dir.path().join("t/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("time,seq,event"));
    let times: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.len() > 100);
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn fis_eval_at_the_top_rule_peak() {
    let dir = tempfile::tempdir().unwrap();
    // Fast plateau, Medium apex, Excellent apex.
    let o = cli(dir.path(), &["fis-eval", "20.0", "0.5", "1.0", "--acceptance", "vgood"]);
    assert!(o.status.success());
    let out = text(&o.stdout);
    assert!(out.contains("class: VGood"), "{out}");
    assert!(out.contains("gate at VGood: Transmit"), "{out}");
    let o = cli(dir.path(), &["fis-eval", "2.0", "0.0", "0.0"]);
    assert!(text(&o.stdout).contains("no rule fired"));
    assert!(text(&o.stdout).contains("gate at Bad: Defer"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn mine_rules_on_a_single_blob() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut csv = String::from("s,sg,rg,f\n");
    for _ in 0..200 {
        use rand::Rng;
        let j = |rng: &mut ChaCha8Rng, w: f64| rng.gen_range(-w..w);
        csv += &format!(
            "{},{},{},{}\n",
            24.0 + j(&mut rng, 0.5),
            0.75 + j(&mut rng, 0.02),
            0.8 + j(&mut rng, 0.02),
            70.0 + j(&mut rng, 1.0)
        );
    }
    fs::write(dir.path().join("d.csv"), csv).unwrap();
    let o = cli(dir.path(), &["mine-rules", "d.csv", "1"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let out = text(&o.stdout);
    let rules: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rules, ["\"IF S is Fast AND SG is Excellent AND RG is Excellent THEN F is VGood\","]);
}

#[test]
fn mined_output_pastes_into_a_rule_base() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "s,sg,rg,f\n24,0.5,0.9,70\n25,0.5,0.95,72\n").unwrap();
    let o = cli(dir.path(), &["mine-rules", "d.csv", "1"]);
    let mined = text(&o.stdout);
    let base = v2x_fuzzy::fis_file::F802_11P_FIS;
    let at = base.find("rules = [\n").unwrap() + "rules = [\n".len();
    let doc = format!("{}{}{}", &base[..at], mined, &base[at..]);
    let fis = v2x_fuzzy::fis_file::parse_fis(&doc, "pasted").unwrap();
    assert_eq!(fis.rules.len(), 10);
}

#[test]
fn config_failures_exit_2_with_locations() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["run", "--mode", "fuzzy", "--fis", "missing/gate.fis"]);
    assert_eq!(o.status.code(), Some(2));
    let e = errors(&o);
    assert_eq!(e[0]["key"], "fis");
    assert!(e[0]["message"].as_str().unwrap().contains("missing/gate.fis"));

    fs::write(dir.path().join("s.toml"), "preset = \"scenario2\"\n\n[mac]\ncw_max = 1000\n").unwrap();
    let o = cli(dir.path(), &["run", "--scenario", "s.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(errors(&o)[0]["location"], "s.toml:4:10");

    let o = cli(dir.path(), &["run", "--seed", "soon"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(errors(&o)[0]["key"].as_str().unwrap().contains("--seed"));

    let o = cli(dir.path(), &["fis-eval", "1", "2", "NaN"]);
    assert_eq!(o.status.code(), Some(2));

    let o = cli(dir.path(), &["mine-rules", "nothing.csv", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn runtime_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "s,sg,rg,f\n1,0.5,0.5,20\n").unwrap();
    let o = cli(dir.path(), &["mine-rules", "d.csv", "3"]);
    assert_eq!(o.status.code(), Some(1));
    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = cli(dir.path(), &["run", "--duration", "1", "--out", "blocker/x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("blocker"));
}

#[test]
fn ledger_counts_survive_the_table() {
    let out =
        Simulation::new(Scenario { duration: 15.0, ..Scenario::scenario2() }, FisDefinition::f802_11p()).unwrap().run();
    let mut buf = Vec::new();
    v2x_fuzzy::export::write_node_table(&mut buf, &out.nodes).unwrap();
    let back = read_node_table(buf.as_slice()).unwrap();
    assert_eq!(back, out.nodes);
    for (a, b) in back.iter().zip(&out.nodes) {
        for m in Metric::ALL {
            assert_eq!(a.ledger.get(m).to_bits(), b.ledger.get(m).to_bits());
        }
    }
}
