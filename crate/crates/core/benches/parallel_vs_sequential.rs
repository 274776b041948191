//! Sequential against data-parallel execution of the two hot paths: filling a
//! segment cost table and running a Monte Carlo experiment.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quantseg_core::experiment::{run_suite, table};
use quantseg_core::parallel::Parallelism;
use quantseg_core::segmentation::{SegmentCostTable, SegmentationConfig};
use quantseg_core::simulation::{catalog, generate_replication};
use quantseg_core::QuantileLevel;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn cost_table(c: &mut Criterion) {
    let (data, _) = generate_replication(&catalog("M3").unwrap(), 1, 0).unwrap();
    let cfg = SegmentationConfig::new(&data, QuantileLevel::new(0.55).unwrap());
    let mut group = c.benchmark_group("cost_table_prefetch");
    group.sample_size(10);
    for (name, par) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let table = SegmentCostTable::new(&data, cfg.clone()).unwrap();
                table.prefetch(par, 2);
                table
            })
        });
    }
    group.finish();
}

fn experiment(c: &mut Criterion) {
    let suite = table("1").unwrap().suite().unwrap().with_overrides(Some(8), Some(1));
    let mut group = c.benchmark_group("table1_eight_replications");
    group.sample_size(10);
    for (name, par) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_suite(&suite, par).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, cost_table, experiment);
criterion_main!(benches);
