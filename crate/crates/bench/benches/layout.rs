use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use relayout::layout::{default_min_leaf_rows, eval_skipped, generate_qdtree, generate_zorder, PartitionBudget};
use relayout::model::LayoutId;
use relayout_bench::table_and_queries;

fn builders(c: &mut Criterion) {
    let (data, queries) = table_and_queries(4096, 200, 1);
    let budget = PartitionBudget::new(32).unwrap();
    let min_leaf = default_min_leaf_rows(data.num_rows(), budget);
    c.bench_function("qdtree_4096x200_k32", |b| {
        b.iter(|| generate_qdtree(black_box(&data), black_box(&queries), budget, min_leaf, LayoutId(1)))
    });
    c.bench_function("zorder_4096x200_k32", |b| {
        b.iter(|| generate_zorder(black_box(&data), black_box(&queries), budget, LayoutId(1)))
    });
}

fn costing(c: &mut Criterion) {
    let (data, queries) = table_and_queries(20_000, 1000, 2);
    let budget = PartitionBudget::new(32).unwrap();
    let layout = generate_qdtree(&data, &queries[..200], budget, default_min_leaf_rows(data.num_rows(), budget), LayoutId(1));
    c.bench_function("eval_skipped_1000_queries", |b| b.iter(|| eval_skipped(black_box(&layout), black_box(&queries))));
}

criterion_group!(benches, builders, costing);
criterion_main!(benches);
