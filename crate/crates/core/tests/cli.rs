use std::path::Path;
use std::process::{Command, Output};

use hiercp::sampler::{read_records, Manifest};
use hiercp::{GroupAssignment, TemporalNetwork};

fn hiercp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiercp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn generate_infer_consensus_render() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&hiercp(
        d,
        &[
            "generate",
            "--n",
            "24",
            "--L",
            "3",
            "--planted",
            "--core-frac",
            "0.3",
            "--omega",
            "0.8,0.05",
            "--seed",
            "4",
            "--out-network",
            "p.edges",
            "--out-assignment",
            "truth.assignment",
        ],
    ));
    let net = TemporalNetwork::load(d.join("p.edges")).unwrap();
    assert_eq!((net.node_count(), net.layer_count()), (24, 3));

    let stdout = ok(&hiercp(
        d,
        &[
            "infer",
            "--network",
            "p.edges",
            "--out",
            "run",
            "--runs",
            "2",
            "--steps",
            "20000",
            "--thin",
            "1000",
            "--init-k",
            "2",
            "--seed",
            "3",
        ],
    ));
    assert!(stdout.contains("run 0: acceptance"));
    assert!(stdout.contains("40 records written"));
    let records = read_records(d.join("run/samples.ndjson")).unwrap();
    assert_eq!(records.len(), 40);
    let manifest = Manifest::load(d.join("run/manifest.json")).unwrap();
    assert_eq!(manifest.runs.len(), 2);
    assert_eq!(manifest.config.seed, 3);

    let stdout = ok(&hiercp(
        d,
        &[
            "consensus",
            "--samples",
            "run/samples.ndjson",
            "--out",
            "c.assignment",
        ],
    ));
    assert!(stdout.contains("modal k"));
    assert!(stdout.contains("layer 2: group sizes"));
    let c = GroupAssignment::load(d.join("c.assignment")).unwrap();
    assert_eq!((c.node_count(), c.layer_count()), (24, 3));

    let stdout = ok(&hiercp(
        d,
        &[
            "render",
            "--assignment",
            "c.assignment",
            "--out",
            "heat",
            "--scale",
            "2",
        ],
    ));
    assert!(stdout.contains("heat.ppm"));
    let ppm = std::fs::read(d.join("heat.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n"));
    assert!(d.join("heat.csv").is_file());

    ok(&hiercp(
        d,
        &[
            "render",
            "--assignment",
            "c.assignment",
            "--network",
            "p.edges",
            "--target",
            "adjacency",
            "--layers",
            "0,2",
            "--out",
            "adj",
        ],
    ));
    for layer in [0, 2] {
        assert!(d.join(format!("adj_layer{layer}.ppm")).is_file());
        assert!(d.join(format!("adj_layer{layer}.csv")).is_file());
    }
    assert!(!d.join("adj_layer1.ppm").exists());
}

#[test]
fn same_seed_same_bytes_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&hiercp(
        d,
        &[
            "generate", "--n", "10", "--L", "2", "--k", "3", "--seed", "9",
        ],
    ));
    let infer = |out: &str| {
        ok(&hiercp(
            d,
            &[
                "infer",
                "--network",
                "generated.edges",
                "--out",
                out,
                "--runs",
                "2",
                "--steps",
                "5000",
                "--thin",
                "500",
                "--seed",
                "11",
            ],
        ))
    };
    infer("a");
    infer("b");
    let a = std::fs::read(d.join("a/samples.ndjson")).unwrap();
    let b = std::fs::read(d.join("b/samples.ndjson")).unwrap();
    assert_eq!(a, b);

    ok(&hiercp(
        d,
        &["infer", "--replay", "a/manifest.json", "--out", "c"],
    ));
    let c = std::fs::read(d.join("c/samples.ndjson")).unwrap();
    assert_eq!(a, c);
    assert_eq!(
        Manifest::load(d.join("a/manifest.json")).unwrap(),
        Manifest::load(d.join("c/manifest.json")).unwrap()
    );

    ok(&hiercp(
        d,
        &[
            "render",
            "--assignment",
            "generated.assignment",
            "--out",
            "x",
        ],
    ));
    let first = std::fs::read(d.join("x.ppm")).unwrap();
    ok(&hiercp(
        d,
        &[
            "render",
            "--assignment",
            "generated.assignment",
            "--out",
            "x",
        ],
    ));
    assert_eq!(first, std::fs::read(d.join("x.ppm")).unwrap());
}

#[test]
fn fixed_k_mode_keeps_k() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&hiercp(
        d,
        &[
            "generate", "--n", "8", "--L", "2", "--k", "2", "--seed", "1",
        ],
    ));
    ok(&hiercp(
        d,
        &[
            "infer",
            "--network",
            "generated.edges",
            "--mode",
            "fixed-k",
            "--k",
            "3",
            "--runs",
            "1",
            "--steps",
            "4000",
            "--thin",
            "400",
            "--out",
            "f",
        ],
    ));
    let records = read_records(d.join("f/samples.ndjson")).unwrap();
    assert_eq!(records.len(), 10);
    assert!(records.iter().all(|r| r.k() == 3));
}

#[test]
fn single_edge_network() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&hiercp(
        d,
        &[
            "generate", "--n", "2", "--L", "1", "--k", "1", "--omega", "1.0",
        ],
    ));
    let net = TemporalNetwork::load(d.join("generated.edges")).unwrap();
    assert_eq!(net.total_edges(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = hiercp(d, &["infer", "--network", "missing.edges"]);
    assert_ne!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.edges"));

    assert_eq!(code(&hiercp(d, &["infer", "--bogus"])), 1);
    assert_eq!(code(&hiercp(d, &["--help"])), 0);

    let out = hiercp(
        d,
        &["generate", "--n", "3", "--L", "1", "--omega", "1.5,0.2"],
    );
    assert_eq!(code(&out), 2);

    std::fs::write(d.join("bad.edges"), "3 1\n0 0 7\n").unwrap();
    assert_eq!(code(&hiercp(d, &["infer", "--network", "bad.edges"])), 2);

    std::fs::write(d.join("ok.edges"), "3 1\n0 0 1\n").unwrap();
    let out = hiercp(d, &["infer", "--network", "ok.edges", "--mode", "fixed-k"]);
    assert_eq!(code(&out), 1);

    std::fs::write(d.join("empty.ndjson"), "").unwrap();
    assert_eq!(
        code(&hiercp(d, &["consensus", "--samples", "empty.ndjson"])),
        2
    );
}
