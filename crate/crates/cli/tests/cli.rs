use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use dagp_cli::{execute, Command, Mode, RunConfig};
use dagp_core::dataset::{generate_synthetic, lookup, TRIVIAL_IDS};
use dagp_core::Dataset64;

fn dagp(args: &[&str]) -> (i32, String, String) {
    let out = Proc::new(env!("CARGO_BIN_EXE_dagp")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn cfg(out: &Path, eqs: &[&str]) -> RunConfig {
    RunConfig {
        equations: eqs.iter().map(|s| s.to_string()).collect(),
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(dagp(&["search", "--out", out]).0, 2);
    let (code, _, err) = dagp(&["lon", "--eq", "I.99.9", "--out", out]);
    assert_eq!(code, 2);
    assert!(err.contains("I.99.9"));
    assert_eq!(dagp(&["search", "--eq", "I.12.5", "--mode", "sideways", "--out", out]).0, 2);
    assert_eq!(dagp(&["search", "--eq", "I.12.5", "--exp-range", "x", "--out", out]).0, 2);
    assert_eq!(dagp(&["search", "--eq", "I.12.5", "--op-order", "replace,replace", "--out", out]).0, 2);
    assert_eq!(dagp(&["search", "--eq", "I.12.5", "--n", "0", "--out", out]).0, 2);
    assert_eq!(dagp(&["search", "--eq", "I.12.5", "--data", "/nonexistent/file", "--out", out]).0, 1);
    assert_eq!(dagp(&["report", tmp.path().join("empty").to_str().unwrap()]).0, 1);
    let (code, stdout, _) = dagp(&["enum", "--eq", "I.12.5", "--out", out]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.starts_with("enum:"));
}

#[test]
fn enum_lists_one_prefix_expression_per_line() {
    let tmp = tempfile::tempdir().unwrap();
    let m = execute(Command::Enum, &cfg(tmp.path(), &["I.12.1", "I.12.5"]), None).unwrap();
    assert_eq!(m.outputs, ["enum.csv", "enum/I.12.1.txt", "enum/I.12.5.txt"]);
    let listing = read(tmp.path().join("enum/I.12.5.txt"));
    assert_eq!(listing.lines().count(), 1);
    let spec = lookup("I.12.1").unwrap();
    for line in read(tmp.path().join("enum/I.12.1.txt")).lines() {
        let (expr, sig) = line.split_once('\t').unwrap();
        let e = dagp_core::Expr::parse_prefix(expr, &spec.units()).unwrap();
        assert_eq!(e.signature().to_string(), sig);
        assert_eq!(e.signature(), spec.target);
    }
    assert!(read(tmp.path().join("enum.csv")).contains("I.12.5,-3,3,1\n"));
}

#[test]
fn trivial_rows_hit_at_one_with_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    let c = RunConfig {
        mode: Mode::LinearScaling,
        ..cfg(tmp.path(), &TRIVIAL_IDS)
    };
    execute(Command::Search, &c, None).unwrap();
    let table = read(tmp.path().join("search.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("equation,linear-scaling"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 13);
    assert!(rows.iter().all(|r| r.ends_with(",1")), "{table}");
}

#[test]
fn data_directory_and_sampling() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir(&data).unwrap();
    let spec = lookup("II.38.3").unwrap();
    let big: Dataset64 = generate_synthetic(&spec, 500, 3).unwrap();
    big.write_table(data.join("II.38.3.txt")).unwrap();
    let c = RunConfig {
        data: Some(data.clone()),
        n: 50,
        trajectories: true,
        ..cfg(&tmp.path().join("out"), &["II.38.3"])
    };
    let m = execute(Command::Search, &c, None).unwrap();
    let rows: serde_json::Value = serde_json::from_str(&read(tmp.path().join("out/search.json"))).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(rows[1]["hit"].as_bool().unwrap());
    assert!(m.outputs.iter().any(|f| f == "trajectories/linear-scaling/II.38.3.jsonl"));
    let log = read(tmp.path().join("out/trajectories/no-scaling/II.38.3.jsonl"));
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!((first["start"].as_u64(), first["step"].as_u64()), (Some(0), Some(0)));

    // more rows than the file holds
    let c = RunConfig { n: 501, ..c };
    assert!(execute(Command::Search, &c, None).is_err());
}

#[test]
fn lon_formats_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = cfg(tmp.path(), &["I.24.6", "I.12.5"]);
    c.mode = Mode::LinearScaling;
    c.lon.formats = vec!["dot".into()];
    let m = execute(Command::Lon, &c, None).unwrap();
    assert_eq!(
        m.outputs,
        [
            "lon/linear-scaling/I.12.5.dot",
            "lon/linear-scaling/I.24.6.dot",
            "lon_linear-scaling.csv",
            "lon_linear-scaling.json"
        ]
    );
    let dot = read(tmp.path().join("lon/linear-scaling/I.24.6.dot"));
    assert!(dot.contains(&m.config_digest));
    let table = read(tmp.path().join("lon_linear-scaling.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("equation,n_v,n_e,C,C_r,l,pi,S,n_hits"));
    assert_eq!(lines.next(), Some("I.12.5,1,0,0.00,0.00,0.00,1,1,1"));
    let json: Vec<dagp_core::MetricsRow> = serde_json::from_str(&read(tmp.path().join("lon_linear-scaling.json"))).unwrap();
    assert_eq!(json.len(), 2);
    json.iter().for_each(|r| r.check().unwrap());

    c.lon.formats = vec!["svg".into()];
    let err = execute(Command::Lon, &c, None).unwrap_err();
    assert!(err.downcast_ref::<dagp_cli::UsageError>().is_some());
}

#[test]
fn gp_and_report_merge() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = cfg(tmp.path(), &["I.12.5", "I.12.2"]);
    c.gp.runs = 3;
    c.gp.budget = 2000;
    c.mode = Mode::LinearScaling;
    execute(Command::Gp, &c, None).unwrap();
    execute(Command::Search, &c, None).unwrap();
    let report_dir = tmp.path().join("report");
    let r = RunConfig {
        out: report_dir.clone(),
        ..RunConfig::default()
    };
    execute(Command::Report, &r, Some(tmp.path())).unwrap();
    let report = read(report_dir.join("report.csv"));
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "equation,dagp_linear-scaling,gp_linear-scaling");
    assert!(lines[1].starts_with("I.12.2,3,"));
    assert!(lines[2].starts_with("I.12.5,1,"));
    assert!(lines[2].ends_with("(3)"), "{report}");
    assert!(read(report_dir.join("report.md")).contains("| I.12.5 | 1 |"));
    let jsonl = read(tmp.path().join("gp/linear-scaling/I.12.5.jsonl"));
    assert_eq!(jsonl.lines().count(), 3);
}

#[test]
fn presets_load_and_differ() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut digests = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let c = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
        c.validate().unwrap();
        assert_eq!(c.equations().unwrap().len(), 27);
        digests.push(c.digest());
    }
    assert_eq!(digests.len(), 13);
    digests.sort();
    digests.dedup();
    assert_eq!(digests.len(), 13);
    let run11 = RunConfig::load(&dir.join("run11.toml")).unwrap();
    assert_eq!(run11.operators, dagp_core::Operator::rotations()[2]);
    assert_eq!(RunConfig::load(&dir.join("run05.toml")).unwrap().dagp(true), dagp_core::DagpConfig::default().scaled(true));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let preset = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/run02.toml");
    let out = tmp.path().to_str().unwrap();
    let (code, _, err) = dagp(&[
        "search",
        "--config",
        preset.to_str().unwrap(),
        "--eq",
        "I.12.5",
        "--mode",
        "linear-scaling",
        "--const-set",
        "2",
        "--op-order",
        "mul-int,replace",
        "--exp-range",
        "-2,2",
        "--seed",
        "9",
        "--out",
        out,
    ]);
    assert_eq!(code, 0, "{err}");
    let m: dagp_cli::Manifest = serde_json::from_str(&read(tmp.path().join("manifest.search.json"))).unwrap();
    assert_eq!(m.config.equations, ["I.12.5"]);
    assert_eq!(m.config.mode, Mode::LinearScaling);
    assert_eq!(m.config.constants, [-2, -1, 1, 2]);
    assert_eq!(m.config.exp_range.lo, -2);
    assert_eq!(m.seeds.data, 9);
    assert_eq!(m.config_digest, m.config.digest());
}
