//! End-to-end tests of the command-line surface: snapshot round-trips,
//! invariant validation with the documented exit codes, bound reports, and
//! workload generation.

use std::fs;
use std::process::Command;

fn obst() -> Command {
    Command::new(env!("CARGO_BIN_EXE_obst"))
}

#[test]
fn snapshot_load_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.txt");
    let resaved = dir.path().join("resaved.txt");
    let out = obst()
        .args(["snapshot", "--n", "40", "--k", "3", "--seed", "9"])
        .arg("--out")
        .arg(&snap)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = obst()
        .arg("load")
        .arg("--snapshot")
        .arg(&snap)
        .arg("--out")
        .arg(&resaved)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "40 3");
    assert_eq!(fs::read(&snap).unwrap(), fs::read(&resaved).unwrap());
}

#[test]
fn validate_passes_fresh_and_rejects_corrupted() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.txt");
    obst()
        .args(["snapshot", "--n", "16", "--k", "2", "--seed", "3"])
        .arg("--out")
        .arg(&snap)
        .status()
        .unwrap();
    let ok = obst().arg("validate").arg("--snapshot").arg(&snap).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    // swap two node ids in the first tree body: search order breaks
    let text = fs::read_to_string(&snap).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[1] = {
        let mut toks: Vec<String> = lines[1].split_whitespace().map(String::from).collect();
        toks[0] = "9999".into();
        toks.join(" ")
    };
    let corrupt = dir.path().join("corrupt.txt");
    fs::write(&corrupt, lines.join("\n") + "\n").unwrap();
    let bad = obst().arg("validate").arg("--snapshot").arg(&corrupt).output().unwrap();
    assert_eq!(bad.status.code(), Some(2), "invariant violations exit 2");
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains("invariant"), "stderr: {msg}");
}

#[test]
fn dump_tree_prints_preorder_serialization() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.txt");
    obst()
        .args(["snapshot", "--n", "8", "--k", "2", "--seed", "4"])
        .arg("--out")
        .arg(&snap)
        .status()
        .unwrap();
    let out = obst()
        .args(["dump-tree", "--tree", "2"])
        .arg("--snapshot")
        .arg(&snap)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    // the dumped tree equals the snapshot's second block
    let snap_text = fs::read_to_string(&snap).unwrap();
    let block: Vec<&str> = snap_text.lines().skip(1 + 8).take(8).collect();
    assert_eq!(text.trim_end(), block.join("\n"));
}

#[test]
fn config_errors_exit_one_with_field_path() {
    let out = obst()
        .args(["run", "--scenario", "fig99"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario"));

    let out = obst()
        .args(["run", "--scenario", "fig4", "--n", "10"]) // bad2 needs n % 4 == 0
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_values"));
}

#[test]
fn malformed_sigma_file_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("sigma.csv");
    fs::write(&sigma, "t,src,dst\n0,1,2\n1,3,3\n").unwrap();
    let out = obst()
        .args(["bounds", "--n", "8"])
        .arg("--sigma")
        .arg(&sigma)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "stderr: {msg}");
}

#[test]
fn bounds_order_lower_measured_upper_on_uniform_demand() {
    // uniform demand over all ordered pairs of 16 peers
    let dir = tempfile::tempdir().unwrap();
    let sigma_path = dir.path().join("sigma.csv");
    let mut text = String::from("t,src,dst\n");
    let mut t = 0;
    for u in 1..=16u32 {
        for v in 1..=16u32 {
            if u != v {
                text.push_str(&format!("{t},{u},{v}\n"));
                t += 1;
            }
        }
    }
    fs::write(&sigma_path, text).unwrap();
    let csv_path = dir.path().join("bounds.csv");
    let out = obst()
        .args(["bounds", "--n", "16", "--k", "1,2,4"])
        .arg("--sigma")
        .arg(&sigma_path)
        .arg("--csv")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut routing_upper_multi_by_k = Vec::new();
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (lookup_lower_single, routing_upper_single, routing_upper_multi, measured) = (f[3], f[5], f[6], f[11]);
        assert!(lookup_lower_single <= measured, "lower {lookup_lower_single} > measured {measured}");
        assert!(measured <= routing_upper_multi + 1e-9, "measured {measured} > upper {routing_upper_multi}");
        assert!(routing_upper_multi <= routing_upper_single + 1e-9);
        routing_upper_multi_by_k.push(routing_upper_multi);
    }
    // more trees never loosen the bound under re-partitioning
    for w in routing_upper_multi_by_k.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "routing_upper_multi increased with k: {routing_upper_multi_by_k:?}");
    }
}

#[test]
fn gen_workload_files_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("guest.edges");
    let seq_path = dir.path().join("sigma.csv");
    let out = obst()
        .args([
            "gen-workload",
            "--guest",
            "rnd",
            "--n",
            "32",
            "--seq",
            "match",
            "--m",
            "200",
            "--seed",
            "5",
        ])
        .arg("--out-graph")
        .arg(&graph_path)
        .arg("--out-seq")
        .arg(&seq_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let (g, warnings) =
        obst_core::workload::load_edge_list(&fs::read_to_string(&graph_path).unwrap()).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(g.n(), 32);
    let sigma =
        obst_core::workload::RequestSequence::parse_csv(&fs::read_to_string(&seq_path).unwrap())
            .unwrap();
    assert_eq!(sigma.len(), 200);
    // every request is a guest edge
    assert!(sigma.requests.iter().all(|&(u, v)| g.has_edge(u.0, v.0)));
}
