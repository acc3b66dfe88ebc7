use criterion::{criterion_group, criterion_main, Criterion};
use efosnet::classifier::{
    box_cox_fit, build_features, feature_matrix, train_forest, undersample, ForestConfig, RowClass, Scenario,
};
use efosnet_bench::small_economy;

fn forest(c: &mut Criterion) {
    let (ds, _) = small_economy(4);
    let rows = build_features(&ds, 2017);
    let x = feature_matrix(&rows);
    let classes: Vec<RowClass> = rows.iter().map(|r| RowClass::from_label(ds.label(r.taxpayer))).collect();
    let b = undersample(&classes, 5).unwrap();
    let xs = x.select_rows(&b.rows);
    let mut group = c.benchmark_group("forest_100_trees");
    group.sample_size(10);
    for s in [Scenario::Raw, Scenario::BoxCox] {
        let cfg = ForestConfig { n_trees: 100, scenario: s, ..Default::default() };
        group.bench_function(s.as_str(), |bench| bench.iter(|| train_forest(&xs, &b.classes, &cfg, 6).unwrap()));
    }
    group.finish();
    c.bench_function("box_cox_fit_features", |bench| bench.iter(|| box_cox_fit(&x)));
}

criterion_group!(benches, forest);
criterion_main!(benches);
