// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.


use citynet_bench::Fixture;
use citynet_core::netmeasure::{
    assortativity, centrality_both, compute_measures, compute_period_measures, diameter, DegreeMode, MeasureConfig,
    PageRankConfig,
};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn measures(c: &mut Criterion) {
    let fixture = Fixture::default_run();
    let graphs = fixture.graphs();
    let g = &graphs[0];
    let cfg = MeasureConfig::default();

    c.bench_function("pagerank_both_directions", |b| b.iter(|| centrality_both(black_box(g), &PageRankConfig::default())));
    c.bench_function("assortativity_out_in", |b| b.iter(|| assortativity(black_box(g), DegreeMode::OutIn)));
    c.bench_function("diameter", |b| b.iter(|| diameter(black_box(g))));
    c.bench_function("period_measures", |b| b.iter(|| compute_period_measures(black_box(g), &cfg)));
    c.bench_function("all_periods", |b| b.iter(|| compute_measures(black_box(&graphs), &cfg)));
    c.bench_function("build_graphs_from_csv", |b| b.iter(|| fixture.graphs()));
}

criterion_group!(benches, measures);
criterion_main!(benches);
