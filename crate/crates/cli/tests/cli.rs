use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_FACTOR: &str = "seed = 7
[factor]
betas = [0.0, 1.0]
sizes = [8]
chains = 2
sweeps_per_chain = 2000
burn_in = 100
batches_per_chain = 20
";

fn longrange(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longrange"))
        .current_dir(dir)
        .env_remove("LONGRANGE_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[factor]\nbogus = 1\n");
    let o = longrange(dir.path(), &["factor", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("factor.bogus"), "{}", stderr(&o));
    assert!(!dir.path().join("factor.csv").exists());
}

#[test]
fn invalid_values_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[ising]\nalpha = 0.5\n");
    let o = longrange(dir.path(), &["ising", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ising.alpha"), "{}", stderr(&o));

    let cfg = write(dir.path(), "few.toml", "[factor]\nchains = 1\nbatches_per_chain = 5\n");
    let o = longrange(dir.path(), &["factor", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("factor.batches_per_chain"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_and_environment_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(longrange(dir.path(), &["factor", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(longrange(dir.path(), &["nonsense"]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    let o = longrange(dir.path(), &["berbee", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write(dir.path(), "small.toml", SMALL_FACTOR);
    let o = Command::new(env!("CARGO_BIN_EXE_longrange"))
        .current_dir(dir.path())
        .env("LONGRANGE_WORKERS", "zero")
        .args(["factor", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("LONGRANGE_WORKERS"));
}

#[test]
fn oversized_requests_are_resource_errors() {
    let dir = TempDir::new().unwrap();
    for (sub, text) in [
        ("factor", "[factor]\nsizes = [600]\n"),
        ("ising", "[ising]\nexact_max_n = 24\n"),
        ("berbee", "[berbee]\nk_max = 100000\n"),
    ] {
        let cfg = write(dir.path(), "big.toml", text);
        let o = longrange(dir.path(), &[sub, "--config", &cfg]);
        assert_eq!(o.status.code(), Some(3), "{sub}: {}", stderr(&o));
    }
}

#[test]
fn output_paths() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_FACTOR);
    // a directory where the CSV should go
    let out = dir.path().join("taken.csv");
    fs::create_dir(&out).unwrap();
    let o = longrange(dir.path(), &["factor", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    let nested = dir.path().join("new/sub/x.csv");
    let o = longrange(dir.path(), &["factor", "--config", &cfg, "--out", nested.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(nested.exists());
}

#[test]
fn factor_run_writes_csv_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_FACTOR);
    let o = longrange(dir.path(), &["factor", "--config", &cfg, "--out", "surface.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    let mut reader = csv::Reader::from_path(dir.path().join("surface.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["beta", "N", "seed", "plus_mean", "plus_se", "minus_mean", "minus_se", "delta", "delta_se"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(&r[1], "8");
        // 17 significant digits in scientific notation
        let mantissa = r[3].split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17, "{}", &r[3]);
    }
    let delta0: f64 = rows[0][7].parse().unwrap();
    let se0: f64 = rows[0][8].parse().unwrap();
    assert!(delta0.abs() <= 3.0 * se0.max(1e-15));

    let text = fs::read_to_string(dir.path().join("surface.csv.manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(m["subcommand"], "factor");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["check"], false);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["config_file_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["versions"]["longrange_core"].is_string());
    assert!(m["versions"]["longrange_cli"].is_string());
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    let bytes = fs::read(dir.path().join("surface.csv")).unwrap();
    assert_eq!(outputs[0]["bytes"], bytes.len());
    assert_eq!(outputs[0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn same_seed_gives_identical_bytes_and_seed_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_FACTOR);
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec!["factor", "--config", cfg.as_str(), "--out", out];
        args.extend_from_slice(extra);
        let o = longrange(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.csv", &[]);
    let b = run("b.csv", &[]);
    assert_eq!(a, b);
    let c = run("c.csv", &["--seed", "8"]);
    assert_ne!(a, c);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 8);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL_FACTOR);
    let mut outs = Vec::new();
    for workers in ["1", "3"] {
        let out = format!("w{workers}.csv");
        let o = Command::new(env!("CARGO_BIN_EXE_longrange"))
            .current_dir(dir.path())
            .env("LONGRANGE_WORKERS", workers)
            .args(["factor", "--config", &cfg, "--out", &out])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outs.push(fs::read(dir.path().join(&out)).unwrap());
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("{out}.manifest.json"))).unwrap())
                .unwrap();
        assert_eq!(m["workers"].to_string(), workers);
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn berbee_constant_sequences_follow_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        "[berbee]\nsequences = [{ kind = \"constant\", c = 0.0 }, { kind = \"constant\", c = 1.0 }]\nstarts = [3]\nk_max = 40\nn_max = 200\npartial_sum_m = 100\n",
    );
    let o = longrange(dir.path(), &["berbee", "--config", &cfg, "--out", "b.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(dir.path().join("b.csv")).unwrap();
    let mut seen = 0;
    for r in reader.records().map(Result::unwrap) {
        if &r[0] != "absorption" {
            continue;
        }
        let c: f64 = r[2].parse().unwrap();
        let n: usize = r[5].parse().unwrap();
        let v: f64 = r[6].parse().unwrap();
        if n >= 3 {
            // r = 0 absorbs with certainty once N reaches k; r = 1 tends to e^-3
            let want = if c == 0.0 { 1.0 } else { (-3.0f64).exp() };
            if c == 0.0 || n == 200 {
                assert!((v - want).abs() < 1e-10, "c={c} n={n} v={v}");
                seen += 1;
            }
        }
    }
    assert!(seen > 10);
}

#[test]
fn check_mode_prints_tagged_lines() {
    let dir = TempDir::new().unwrap();
    let o = longrange(dir.path(), &["berbee", "--check", "--out", "b.csv"]);
    let out = String::from_utf8(o.stdout).unwrap();
    for tag in ["[c9a]", "[c9b]", "[c9c]", "[c9d]"] {
        assert!(out.contains(tag), "{out}");
    }
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("summary: "), "{last}");
    let failed = out.lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(o.status.code(), Some(if failed { 4 } else { 0 }));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b.csv.manifest.json")).unwrap()).unwrap();
    let checks = m["checks"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), out.lines().count() - 1);
    assert!(checks.iter().all(|c| c["seconds"].as_f64().unwrap() >= 0.0));
}
