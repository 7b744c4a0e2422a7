use std::fs;
use std::path::Path;
use std::process::Command;

use netmix_cli::run;

fn netmix(args: &[&str]) -> i32 {
    run(std::iter::once("netmix").chain(args.iter().copied()))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn read(dir: &str, name: &str) -> String {
    fs::read_to_string(Path::new(dir).join(name)).unwrap()
}

/// Simulated data shared by the fit tests.
fn simulate(dir: &Path, items: &str) -> String {
    let sim = path(dir, "sim");
    assert_eq!(
        netmix(&[
            "simulate",
            "--seed",
            "5",
            "--items",
            items,
            "--replicates",
            "1",
            "--out",
            &sim
        ]),
        0
    );
    sim
}

#[test]
fn simulate_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (path(tmp.path(), "a"), path(tmp.path(), "b"));
    for out in [&a, &b] {
        assert_eq!(
            netmix(&[
                "simulate",
                "--replicates",
                "1",
                "--seed",
                "7",
                "--items",
                "120",
                "--out",
                out
            ]),
            0
        );
    }
    for f in [
        "rep01/scores.tsv",
        "rep01/truth.tsv",
        "networks/coexp.tsv",
        "networks/go.tsv",
    ] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let scores = read(&a, "rep01/scores.tsv");
    assert!(scores.starts_with("id\tB\tE\tS\n"));
    assert_eq!(scores.lines().count(), 121);
}

#[test]
fn manifest_records_config_seed_and_input_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), "80");
    let out = path(tmp.path(), "rank");
    let input = format!("{sim}/rep01/truth.tsv");
    assert_eq!(
        netmix(&["rank", "--input", &input, "--column", "label", "--seed", "9", "--out", &out]),
        0
    );
    let m: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(m["command"], "rank");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["column"], "label");
    let inputs = m["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 1);
    let hash = inputs[0]["sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn cli_overrides_config_file_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = path(tmp.path(), "sim.conf");
    fs::write(&conf, "# test\nitems=60\nreplicates=2\nseed=3\n").unwrap();
    let out = path(tmp.path(), "sim");
    assert_eq!(
        netmix(&["--config", &conf, "simulate", "--replicates", "1", "--out", &out]),
        0
    );
    let m: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(m["config"]["items"], "60");
    assert_eq!(m["config"]["replicates"], "1");
    assert_eq!(m["config"]["sweeps"], "500");
    assert_eq!(m["seed"], 3);
    assert!(!Path::new(&out).join("rep02").exists());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = path(tmp.path(), "bad.conf");
    fs::write(&conf, "itemz=60\n").unwrap();
    let out = path(tmp.path(), "sim");
    assert_eq!(netmix(&["--config", &conf, "simulate", "--out", &out]), 1);
    assert!(!Path::new(&out).exists());
}

#[test]
fn exit_codes_and_no_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path(), "fit");
    let missing = path(tmp.path(), "missing.tsv");
    assert_eq!(netmix(&["fit", "--scores", &missing, "--out", &out]), 2);
    assert!(!Path::new(&out).exists());

    let sim = simulate(tmp.path(), "60");
    let scores = format!("{sim}/rep01/scores.tsv");
    assert_eq!(
        netmix(&["fit", "--model", "mrf", "--scores", &scores, "--out", &out]),
        1
    );
    assert_eq!(
        netmix(&["fit", "--scores", &scores, "--threads", "0", "--out", &out]),
        1
    );
    assert_eq!(netmix(&["simulate", "--targets", "0", "--out", &out]), 1);
    assert_eq!(netmix(&["frobnicate"]), 1);
    assert!(!Path::new(&out).exists());

    let bad = path(tmp.path(), "bad.tsv");
    fs::write(&bad, "id\tB\nG1\t0.3\nG2\tnot-a-number\n").unwrap();
    assert_eq!(netmix(&["fit", "--scores", &bad, "--out", &out]), 2);
    assert!(!Path::new(&out).exists());
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_netmix");
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path(), "rank");
    let status = Command::new(bin)
        .args(["rank", "--input", "/nonexistent/x.csv", "--column", "p", "--out", &out])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin).arg("--bogus").output().unwrap().status;
    assert_eq!(status.code(), Some(1));
    let status = Command::new(bin).arg("--help").output().unwrap().status;
    assert_eq!(status.code(), Some(0));
}

#[test]
fn fit_smjm_writes_traces_params_and_correlations() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), "150");
    let out = path(tmp.path(), "fit");
    let scores = format!("{sim}/rep01/scores.tsv");
    let code = netmix(&[
        "fit", "--scores", &scores, "--burnin", "50", "--keep", "120", "--thin", "4", "--out", &out,
    ]);
    assert_eq!(code, 0);
    for c in 1..=3 {
        let trace = read(&out, &format!("trace_chain{c}.csv"));
        assert_eq!(trace.lines().count() - 1, 120 / 4);
    }
    let params = read(&out, "params.csv");
    for a in ["B", "E", "S"] {
        for b in ["B", "E", "S"] {
            if a < b {
                assert!(params.contains(&format!("\"corr1[{a},{b}]\"")), "corr1[{a},{b}]");
                assert!(params.contains(&format!("\"corr0[{a},{b}]\"")), "corr0[{a},{b}]");
            }
        }
    }
    assert!(params.contains("\npi1,"));
    let ranks = read(&out, "ranks.csv");
    assert!(ranks.starts_with("id,p_hat,rank\n"));
    assert_eq!(ranks.lines().count(), 151);
    assert!(Path::new(&out).join("em_comparison.csv").exists());
}

#[test]
fn fit_mrf_reports_field_parameters_and_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), "150");
    let out = path(tmp.path(), "fit");
    let scores = format!("{sim}/rep01/scores.tsv");
    let (coexp, go) = (format!("{sim}/networks/coexp.tsv"), format!("{sim}/networks/go.tsv"));
    let code = netmix(&[
        "fit",
        "--model",
        "mrf",
        "--scores",
        &scores,
        "--network",
        &coexp,
        "--network",
        &go,
        "--burnin",
        "60",
        "--keep",
        "60",
        "--checkpoint",
        "true",
        "--out",
        &out,
    ]);
    assert_eq!(code, 0);
    let params = read(&out, "params.csv");
    for p in ["gamma", "beta[coexp]", "beta[go]"] {
        assert!(params.lines().any(|l| l.starts_with(&format!("{p},"))), "{p}");
    }
    assert!(!params.contains("pi1"));
    let chains = read(&out, "chains.csv");
    assert!(chains.starts_with("chain,seed,retained,acceptance_rate,rw_step\n"));
    let ckpt: serde_json::Value = serde_json::from_str(&read(&out, "checkpoint_chain1.json")).unwrap();
    assert_eq!(ckpt["version"], 1);
}

#[test]
fn identical_score_files_give_identical_auc_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), "100");
    let rep = format!("{sim}/rep01");
    let out = path(tmp.path(), "eval");
    let code = netmix(&[
        "evaluate",
        "--replicate",
        &rep,
        "--method",
        "first=scores.tsv:B",
        "--method",
        "second=scores.tsv:B",
        "--out",
        &out,
    ]);
    assert_eq!(code, 0);
    let auc = read(&out, "auc.csv");
    let rows: Vec<Vec<&str>> = auc.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1..], rows[1][1..]);
    assert_eq!(read(&out, "roc_first.csv"), read(&out, "roc_second.csv"));
}

#[test]
fn diagnose_flags_truncated_runs_without_failing() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), "200");
    let out = path(tmp.path(), "fit");
    let scores = format!("{sim}/rep01/scores.tsv");
    let (coexp, go) = (format!("{sim}/networks/coexp.tsv"), format!("{sim}/networks/go.tsv"));
    let code = netmix(&[
        "fit",
        "--model",
        "mrf",
        "--scores",
        &scores,
        "--network",
        &coexp,
        "--network",
        &go,
        "--burnin",
        "0",
        "--keep",
        "20",
        "--out",
        &out,
    ]);
    assert_eq!(code, 0);
    let diag = path(tmp.path(), "diag");
    let traces: Vec<String> = (1..=3).map(|c| format!("{out}/trace_chain{c}.csv")).collect();
    let code = netmix(&[
        "diagnose", "--trace", &traces[0], "--trace", &traces[1], "--trace", &traces[2], "--out", &diag,
    ]);
    assert_eq!(code, 0);
    let status = read(&diag, "rhat_status.csv");
    assert!(
        status
            .lines()
            .any(|l| l.starts_with("overall,") && l.ends_with(",fail")),
        "{status}"
    );

    assert_eq!(
        netmix(&["diagnose", "--trace", &traces[0], "--out", &path(tmp.path(), "d1")]),
        1
    );
}

#[test]
fn rank_sorts_ties_and_answers_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let input = path(tmp.path(), "p.csv");
    fs::write(&input, "id,p\nG3,0.5\nG1,0.9\nG2,0.5\nG4,0.1\n").unwrap();
    let out = path(tmp.path(), "rank");
    assert_eq!(
        netmix(&["rank", "--input", &input, "--column", "p", "--query", "G2", "--out", &out]),
        0
    );
    let ranks = read(&out, "ranks.csv");
    let lines: Vec<&str> = ranks.lines().collect();
    assert_eq!(lines[1..], ["G1,0.9,1", "G2,0.5,2", "G3,0.5,2", "G4,0.1,4"]);
    assert!(read(&out, "query.csv").contains("G2"));
    assert_eq!(
        netmix(&[
            "rank",
            "--input",
            &input,
            "--column",
            "p",
            "--query",
            "G9",
            "--out",
            &path(tmp.path(), "r2")
        ]),
        2
    );
}

#[test]
fn resumed_fit_continues_the_uninterrupted_chains() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), "120");
    let scores = format!("{sim}/rep01/scores.tsv");
    let (coexp, go) = (format!("{sim}/networks/coexp.tsv"), format!("{sim}/networks/go.tsv"));
    let fit = |keep: &str, extra: &[&str], out: &str| {
        let mut args = vec![
            "fit",
            "--model",
            "mrf",
            "--scores",
            &scores,
            "--network",
            &coexp,
            "--network",
            &go,
            "--seed",
            "11",
            "--burnin",
            "40",
            "--keep",
            keep,
            "--out",
            out,
        ];
        args.extend_from_slice(extra);
        netmix(&args)
    };
    let (whole, first, rest) = (
        path(tmp.path(), "whole"),
        path(tmp.path(), "first"),
        path(tmp.path(), "rest"),
    );
    assert_eq!(fit("80", &[], &whole), 0);
    assert_eq!(fit("30", &["--checkpoint", "true"], &first), 0);
    assert_eq!(fit("80", &["--resume", &first], &rest), 0);
    for c in 1..=3 {
        let name = format!("trace_chain{c}.csv");
        let (w, r) = (read(&whole, &name), read(&rest, &name));
        let tail: Vec<&str> = w.lines().skip(1 + 30).collect();
        let resumed: Vec<&str> = r.lines().skip(1).collect();
        assert_eq!(resumed.len(), 50);
        assert_eq!(resumed, tail, "chain {c}");
    }
    let m: serde_json::Value = serde_json::from_str(&read(&rest, "manifest.json")).unwrap();
    assert!(m["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|i| i["role"] == "checkpoint"));

    // a finished chain has nothing left to run
    assert_eq!(fit("30", &["--resume", &first], &path(tmp.path(), "none")), 2);
    assert_eq!(fit("80", &["--resume", &whole], &path(tmp.path(), "nockpt")), 2);
}
