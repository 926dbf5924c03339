use criterion::{criterion_group, criterion_main};

criterion_group!(benches, dimtrunc_bench::benchmarks);
criterion_main!(benches);
