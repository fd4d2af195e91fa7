//! Snapshot ingestion, instance generators and the benchmark harness.

mod bench;
mod snapshot;
mod svg;
mod workload;

pub use bench::{
    load_bench_config, run_bench, write_bench, BenchConfig, BenchReport, BenchRun, MethodCurve,
    MethodSummary,
};
pub use snapshot::{
    import_snapshot, load_snapshot, CapitalPolicy, SnapshotEdge, SnapshotGraph, SnapshotNode,
};
pub use svg::render_svg;
pub use workload::{gen_transactions, sample_connected_subgraph, WorkloadSpec};
