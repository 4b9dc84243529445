use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use apf_cli::Config;
use serde_json::Value;
use tempfile::TempDir;

fn apf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_wall_time(mut v: Value) -> Value {
    if let Some(obj) = v.as_object_mut() {
        obj.remove("wall_time");
    }
    v
}

#[test]
fn run_free_field_goes_straight() {
    let dir = TempDir::new().unwrap();
    let env = write(
        &dir,
        "env.json",
        r#"{"length_x": 30, "length_y": 30, "start": [3, 3], "target": [22, 22], "obstacles": []}"#,
    );
    let cfg = write(&dir, "c.toml", "[sim]\nnoise_variance = 0.0\n");
    let out_path = dir.path().join("run.json");
    let out = apf(&[
        "run",
        "--env",
        &env,
        "--config",
        &cfg,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out_path);
    assert_eq!(doc["outcome"], "Success");
    assert_eq!(doc["steps"], 67);
    for p in doc["trajectory"].as_array().unwrap() {
        let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        // ring headings are 6° apart, so the path zigzags within one step of the diagonal
        assert!((x - y).abs() / 2f64.sqrt() < 0.05, "off the diagonal: {p}");
    }
    assert_eq!(doc["environment"]["obstacles"].as_array().unwrap().len(), 0);
}

#[test]
fn run_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = apf(&[
            "run",
            "--algo",
            "crbapf-star",
            "--seed",
            "7",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(matches!(code(&out), 0 | 1), "{}", stderr(&out));
    }
    assert_eq!(strip_wall_time(json(&a)), strip_wall_time(json(&b)));
}

#[test]
fn saved_environment_replays() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.json");
    apf(&["run", "--algo", "bapf", "--seed", "3", "--out", first.to_str().unwrap()]);
    let doc = json(&first);
    let env = write(&dir, "env.json", &doc["environment"].to_string());
    let again = dir.path().join("again.json");
    apf(&[
        "run",
        "--algo",
        "bapf",
        "--seed",
        "3",
        "--env",
        &env,
        "--out",
        again.to_str().unwrap(),
    ]);
    let replay = json(&again);
    assert_eq!(replay["environment"], doc["environment"]);
    assert_eq!(replay["outcome"], doc["outcome"]);
}

#[test]
fn enclosed_start_exits_one() {
    let dir = TempDir::new().unwrap();
    let ring: Vec<String> = (0..12)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / 12.0;
            format!("[{}, {}]", 5.0 + 0.6 * a.cos(), 5.0 + 0.6 * a.sin())
        })
        .collect();
    let env = write(
        &dir,
        "env.json",
        &format!(
            r#"{{"length_x": 30, "length_y": 30, "start": [5, 5], "target": [20, 20], "obstacles": [{}]}}"#,
            ring.join(",")
        ),
    );
    let out = apf(&[
        "run",
        "--algo",
        "crbapf",
        "--env",
        &env,
        "--out",
        dir.path().join("o.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn bench_writes_one_row_per_algorithm_and_band() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("s.csv");
    let results = dir.path().join("r.jsonl");
    let out = apf(&[
        "bench",
        "--trials",
        "4",
        "--densities",
        "20:45,45:70,70:95",
        "--jobs",
        "2",
        "--out",
        csv_path.to_str().unwrap(),
        "--results",
        results.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algo,n_lower,n_upper,trials,R_s,M_s_bar,S,T_a_ms"
    );
    assert_eq!(lines.count(), 12);

    let jsonl = fs::read_to_string(&results).unwrap();
    assert_eq!(jsonl.lines().count(), 48);
    let first: Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["algo"], "capf");
    assert!(first.get("trajectory").is_none());
}

#[test]
fn bench_is_reproducible_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, jobs: &str| {
        let p = dir.path().join(name);
        let r = dir.path().join(format!("{name}.jsonl"));
        let out = apf(&[
            "bench",
            "--algo",
            "crbapf-star,capf",
            "--trials",
            "6",
            "--seed",
            "11",
            "--jobs",
            jobs,
            "--out",
            p.to_str().unwrap(),
            "--results",
            r.to_str().unwrap(),
            "--trajectories",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let csv: Vec<String> = fs::read_to_string(&p)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect();
        let lines: Vec<Value> = fs::read_to_string(&r)
            .unwrap()
            .lines()
            .map(|l| strip_wall_time(serde_json::from_str(l).unwrap()))
            .collect();
        (csv, lines)
    };
    let (csv_a, lines_a) = run("a", "1");
    let (csv_b, lines_b) = run("b", "4");
    assert_eq!(csv_a, csv_b);
    assert_eq!(lines_a, lines_b);
    assert!(lines_a[0]["trajectory"].is_array());
}

#[test]
fn sweep_single_point_single_trial() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("sweep.csv");
    let out = apf(&[
        "sweep-mu",
        "--mu-grid",
        "1000",
        "--trials",
        "1",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&p).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["mu_o", "algo", "n_lower", "n_upper", "trials", "R_s"]
    );
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 2);
    assert_eq!(&records[0][1], "bapf");
    assert_eq!(&records[1][1], "crbapf-star");
    for r in &records {
        let rs: f64 = r[5].parse().unwrap();
        assert!(rs == 0.0 || rs == 1.0);
    }
}

#[test]
fn sweep_rejects_rate_outside_bounds() {
    let out = apf(&["sweep-mu", "--mu-grid", "5000", "--trials", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("mu_o"), "{}", stderr(&out));
}

#[test]
fn trace_stays_within_rate_bounds() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("trace.csv");
    let out = apf(&[
        "sweep-mu",
        "--trace",
        "--seed",
        "2",
        "--mu-strategy",
        "min-feasible",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&p).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["step", "x", "y", "mu_hat"]
    );
    let mut seen = 0;
    for r in reader.records() {
        let r = r.unwrap();
        if !r[3].is_empty() {
            let mu: f64 = r[3].parse().unwrap();
            assert!((1.0..=1000.0).contains(&mu));
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn compare_marks_best_and_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let good = write(
        &dir,
        "t.csv",
        "algo,n_lower,n_upper,trials,R_s,M_s_bar,S,T_a_ms\n\
         capf,20,45,500,0.333,91.26,2.9,0.5\n\
         bapf,20,45,500,0.739,68.25,2.6,0.4\n\
         crbapf,20,45,500,0.770,68.0,2.4,0.4\n\
         crbapf-star,20,45,500,0.935,70.1,2.4,0.6\n",
    );
    let out = apf(&["compare", &good]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    let marked: Vec<&str> = table
        .lines()
        .filter(|l| {
            l.split_whitespace()
                .any(|t| t.ends_with('*') && t.trim_end_matches('*').parse::<f64>().is_ok())
        })
        .collect();
    assert_eq!(marked.len(), 1, "{table}");
    assert!(marked[0].contains("0.935*"));
    assert_eq!(table, String::from_utf8(apf(&["compare", &good]).stdout).unwrap());

    let single = write(
        &dir,
        "one.csv",
        "algo,n_lower,n_upper,trials,R_s,M_s_bar,S,T_a_ms\nbapf,20,45,10,0.5,,,0.1\n",
    );
    let out = apf(&["compare", &single]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("0.500*"));

    let empty = write(&dir, "empty.csv", "");
    assert_eq!(code(&apf(&["compare", &empty])), 2);
    let header_only = write(&dir, "h.csv", "algo,n_lower,n_upper,trials,R_s,M_s_bar,S,T_a_ms\n");
    assert_eq!(code(&apf(&["compare", &header_only])), 2);
    let malformed = write(
        &dir,
        "bad.csv",
        "algo,n_lower,n_upper,trials,R_s,M_s_bar,S,T_a_ms\nbapf,x,45,10,0.5,1,1,0.1\n",
    );
    assert_eq!(code(&apf(&["compare", &malformed])), 2);
    assert_eq!(
        code(&apf(&["compare", dir.path().join("missing.csv").to_str().unwrap()])),
        2
    );
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    let unknown = write(&dir, "u.toml", "[sim]\ntrails = 3\n");
    let out = apf(&["bench", "--config", &unknown, "--trials", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("trails"), "{}", stderr(&out));

    let radii = write(&dir, "r.toml", "[planner]\nrho_l = 5\nrho_u = 4.5\n");
    let out = apf(&["run", "--config", &radii]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("rho_l"), "{}", stderr(&out));

    assert_eq!(
        code(&apf(&[
            "run",
            "--config",
            dir.path().join("nope.toml").to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&apf(&["bench", "--densities", "45:20"])), 2);
    assert_eq!(code(&apf(&["run", "--bogus"])), 2);
    assert_eq!(code(&apf(&["fly"])), 2);
    assert_eq!(code(&apf(&["bench", "--jobs", "0", "--trials", "1"])), 2);
    assert_eq!(code(&apf(&["--help"])), 0);
}

#[test]
fn dumped_config_round_trips_with_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[sim]\ntrials = 20\nseed = 4\n[planner]\nmu_o = 700.0\n",
    );
    let dump = dir.path().join("effective.toml");
    let out = apf(&[
        "bench",
        "--config",
        &cfg,
        "--trials",
        "2",
        "--algo",
        "bapf",
        "--dump-config",
        dump.to_str().unwrap(),
        "--out",
        dir.path().join("s.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&dump).unwrap();
    let effective = Config::from_toml_str(&text).unwrap();
    assert_eq!(effective.sim.trials, 2);
    assert_eq!(effective.sim.seed, 4);
    assert_eq!(effective.planner.potential.mu_o, 700.0);
    assert_eq!(Config::from_toml_str(&effective.to_toml()).unwrap(), effective);
}
