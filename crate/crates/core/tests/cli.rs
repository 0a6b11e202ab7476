use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn icpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icpower"))
        .args(args)
        .env_remove("ICPOWER_OUT_DIR")
        .output()
        .expect("failed to launch icpower")
}

fn ok(args: &[&str]) -> String {
    let out = icpower(args);
    assert!(
        out.status.success(),
        "icpower {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_is_deterministic_and_honours_link_count() {
    let dir = tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["gen", "--links", "4", "--seed", "11", "--out", p(&a)]);
    ok(&["gen", "--links", "4", "--seed", "11", "--out", p(&b)]);
    ok(&["gen", "--links", "4", "--seed", "12", "--out", p(&c)]);
    let ga = fs::read(a.join("gains.csv")).unwrap();
    assert_eq!(ga, fs::read(b.join("gains.csv")).unwrap());
    assert_ne!(ga, fs::read(c.join("gains.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("scenario.toml")).unwrap(),
        fs::read(b.join("scenario.toml")).unwrap()
    );
    let text = String::from_utf8(ga).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.split(',').count() == 4));
}

#[test]
fn gen_reads_a_config_file() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("net.toml");
    fs::write(&cfg, "num_links = 5\nrng_seed = 3\nregion_radius_m = 200.0\n").unwrap();
    ok(&["gen", "--config", p(&cfg), "--out", p(&dir.path().join("net"))]);
    let meta = fs::read_to_string(dir.path().join("net/scenario.toml")).unwrap();
    assert!(meta.contains("num_links = 5"));
    assert!(meta.contains("region_radius_m = 200.0"));
}

#[test]
fn solve_output_is_reproducible() {
    let dir = tempdir().unwrap();
    let net = dir.path().join("net");
    ok(&["gen", "--links", "3", "--seed", "5", "--out", p(&net)]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "solve", "--scenario", p(&net), "--algo", "pair3", "--algo", "equal", "--pt-dbw", "10", "--out", p(&out),
        ]);
        fs::read_to_string(out).unwrap()
    };
    let first = run("one.csv");
    let second = run("two.csv");
    assert_eq!(first, second);
    let rows = csv_rows(&first);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "pair3");
    assert_eq!(&rows[0][1], "converged");
    let powers: f64 = rows[0][5].split(';').map(|x| x.parse::<f64>().unwrap()).sum();
    assert!((powers - 10.0).abs() < 1e-9);
}

#[test]
fn single_link_is_rejected_cleanly() {
    let out = icpower(&["gen", "--links", "1", "--out", "unused"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("at least 2"));

    let dir = tempdir().unwrap();
    let gains = dir.path().join("g.csv");
    fs::write(&gains, "1e-9\n").unwrap();
    let out = icpower(&["solve", "--gains", p(&gains), "--noise-w", "1e-13", "--algo", "dist", "--pt-dbw", "0"]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let out = icpower(&["solve", "--algo", "magic", "--pt-dbw", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn compare_adds_the_oracle_for_small_networks() {
    let text = ok(&["compare", "--links", "2", "--seed", "3", "--algo", "pair2", "--algo", "binary", "--pt-dbw", "0"]);
    let rows = csv_rows(&text);
    let algs: Vec<&str> = rows.iter().map(|r| r.get(0).unwrap()).collect();
    assert_eq!(algs, ["pair2", "binary", "oracle"]);
    let rate = |i: usize| rows[i][2].parse::<f64>().unwrap();
    assert!(rate(0) >= rate(2) - 1e-6);
    assert!(rate(0) >= rate(1) - 1e-12);
}

#[test]
fn sweep_writes_one_row_per_power_and_algorithm() {
    let dir = tempdir().unwrap();
    let text = ok(&[
        "--out-dir", p(dir.path()), "sweep", "--links", "2", "--algo", "pair2", "--algo", "wf", "--pt-dbw", "-10,0,10", "--seeds",
        "0..4",
    ]);
    assert!(text.is_empty());
    let rows = csv_rows(&fs::read_to_string(dir.path().join("sweep.csv")).unwrap());
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| &r[4] == "4" && &r[5] == "4"));
}

#[test]
fn sweep_reads_an_experiment_file() {
    let dir = tempdir().unwrap();
    let spec = dir.path().join("exp.toml");
    fs::write(
        &spec,
        "algorithms = [\"dist\", \"equal\"]\npt_dbw = [0.0]\nseeds = [1, 2]\n[scenario]\nnum_links = 4\n[solver]\nmax_iters = 5000\n",
    )
    .unwrap();
    let rows = csv_rows(&ok(&["sweep", "--spec", p(&spec)]));
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][1], "dist");
    assert_eq!(&rows[0][4], "2");
}

#[test]
fn qos_region_covers_the_grid() {
    let rows = csv_rows(&ok(&["qos-region", "--links", "2", "--grid", "0,1,30", "--pt-dbw", "0", "--seeds", "0,1"]));
    assert_eq!(rows.len(), 18);
    for r in &rows {
        if &r[3] == "30" || &r[2] == "30" {
            assert_eq!(&r[5], "infeasible");
            assert_eq!(r[6].parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn trace_lists_every_round() {
    let dir = tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let text = ok(&["solve", "--links", "4", "--algo", "dist", "--pt-dbw", "0", "--trace", p(&trace)]);
    let row = &csv_rows(&text)[0];
    let rounds: usize = row[3].parse().unwrap();
    let signaling: usize = row[4].parse().unwrap();
    assert_eq!(signaling, 3 + 2 * rounds);
    let trace = fs::read_to_string(trace).unwrap();
    assert_eq!(trace.lines().count(), rounds + 1);
}
