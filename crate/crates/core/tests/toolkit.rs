use std::path::Path;

use chansched::heuristics::{Knobs, Method};
use chansched::io::{save_network, save_transactions, transactions_to_string};
use chansched::toolkit::{
    gen_transactions, import_snapshot, load_snapshot, run_bench, sample_connected_subgraph,
    write_bench, BenchConfig, CapitalPolicy, WorkloadSpec,
};
use chansched::{validate_network, Hop, Instance, Mode, Network, Transaction, TransactionSet};

fn sample() -> Network {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample_snapshot.json");
    import_snapshot(&load_snapshot(path).unwrap(), CapitalPolicy::default()).unwrap()
}

fn config(dir: &Path, net: &Network, txns: &TransactionSet, budget: usize) -> BenchConfig {
    save_network(dir.join("net.json"), net).unwrap();
    save_transactions(dir.join("txns.jsonl"), txns).unwrap();
    BenchConfig {
        network: dir.join("net.json"),
        transactions: dir.join("txns.jsonl"),
        methods: Method::ALL.to_vec(),
        budget,
        repetitions: 2,
        seed: 3,
        seeds: None,
        knobs: Knobs::default(),
        length: None,
        penalty: None,
        out: None,
    }
}

#[test]
fn bundled_snapshot_imports_and_samples() {
    let net = sample();
    assert_eq!(net.nodes.len(), 200);
    assert!(validate_network(&net).is_ok());
    let full = sample_connected_subgraph(&net, 200, 4).unwrap();
    assert_eq!(full.nodes, net.nodes);
    for seed in 0..5 {
        let sub = sample_connected_subgraph(&net, 50, seed).unwrap();
        assert_eq!(sub.nodes.len(), 50);
        assert!(validate_network(&sub).is_ok());
    }
}

#[test]
fn workloads_on_the_snapshot_are_valid_and_seeded() {
    let net = sample_connected_subgraph(&sample(), 50, 1).unwrap();
    let spec = WorkloadSpec {
        count: 100,
        lo: 1.0,
        hi: 50_000.0,
        seed: 8,
    };
    let a = gen_transactions(&net, &spec).unwrap();
    assert!(Instance::new(&net, &a).is_ok());
    let b = gen_transactions(&net, &spec).unwrap();
    assert_eq!(
        transactions_to_string(&a).unwrap(),
        transactions_to_string(&b).unwrap()
    );
    assert!(a.iter().all(|t| t
        .path
        .iter()
        .all(|h| h.dir == chansched::Direction::Forward)));
}

#[test]
fn trivially_feasible_bench_ends_at_zero() {
    let net = Network::new(Mode::Consuming)
        .with_node("A", 20.0)
        .with_node("B", 0.0)
        .with_channel("e1", "A", "B", 10.0);
    let txns = TransactionSet::new(vec![Transaction {
        time: 1,
        source: "A".into(),
        dest: "B".into(),
        path: vec![Hop::fwd("e1")],
        value: 2.0,
    }])
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_bench(&config(dir.path(), &net, &txns, 50)).unwrap();
    for s in &report.summary {
        assert_eq!(s.final_max, Some(0.0), "{}", s.method);
    }
}

#[test]
fn bench_outputs_are_reproducible() {
    let net = sample_connected_subgraph(&sample(), 20, 2).unwrap();
    let spec = WorkloadSpec {
        count: 30,
        lo: 1.0,
        hi: 100_000.0,
        seed: 5,
    };
    let txns = gen_transactions(&net, &spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &net, &txns, 300);
    for sub in ["x", "y"] {
        write_bench(&run_bench(&cfg).unwrap(), dir.path().join(sub)).unwrap();
    }
    for f in [
        "curves.csv",
        "summary.json",
        "convergence.svg",
        "runs/pso-1.csv",
    ] {
        let read = |sub: &str| std::fs::read(dir.path().join(sub).join(f)).unwrap();
        assert_eq!(read("x"), read("y"), "{f}");
    }
    let report = run_bench(&cfg).unwrap();
    assert!(report.runs.iter().all(|r| r.replay_violations == Some(0)));
    assert!(report.curves.iter().all(|c| c.mean.len() <= 300));
}
