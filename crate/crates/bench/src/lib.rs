//! Criterion benchmarks for the inner kernels of a truncation sweep.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, Throughput};
use dimtrunc::experiment::PdeTruncationModel;
use dimtrunc::fem::{solve, Assembler, Norm, TriangularMesh};
use dimtrunc::field::{DiffusionFieldSpec, ModeTable, Transform};
use dimtrunc::lattice::{node_sums, vendored_generating_vector, LatticeRule, TruncationModel};
use dimtrunc::oracle::{exact_l2_truncation_error, ScalarModelSpec};

pub fn benchmarks(c: &mut Criterion) {
    assembly_and_solve(c);
    coefficient_accumulation(c);
    lattice_nodes(c);
    pde_node(c);
    tensor_oracle(c);
}

fn assembly_and_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_solve");
    for m in [16usize, 32] {
        let mesh = TriangularMesh::unit_square(m).unwrap();
        let assembler = Assembler::new(&mesh, 2).unwrap();
        let coeff = assembler.sample(|p| 1.5 + 0.3 * (3.0 * p[0]).sin() * p[1]);
        let rhs = assembler.load(|p| p[0]);
        group.throughput(Throughput::Elements(mesh.num_interior() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| {
                let sys = assembler.system(black_box(&coeff), rhs.clone()).unwrap();
                solve(&sys).unwrap()
            })
        });
    }
    group.finish();
}

fn coefficient_accumulation(c: &mut Criterion) {
    let mesh = TriangularMesh::unit_square(16).unwrap();
    let assembler = Assembler::new(&mesh, 2).unwrap();
    let field = DiffusionFieldSpec::new(1.5, 2.0, Transform::Periodic, 512).unwrap();
    let table = ModeTable::new(&field, assembler.quadrature_points());
    let xi: Vec<f64> = (0..512).map(|j| ((j as f64) * 0.37).sin() * 0.4).collect();
    c.bench_function("mode_accumulate_512x16", |b| {
        b.iter(|| {
            let mut acc = vec![1.5; assembler.quadrature_points().len()];
            table.accumulate(black_box(&xi), 0, 512, &mut acc);
            acc
        })
    });
}

fn lattice_nodes(c: &mut Criterion) {
    let z = vendored_generating_vector();
    let rule = LatticeRule::new(1 << 16, &z, 1).unwrap();
    let mut group = c.benchmark_group("lattice_node_sums");
    group.throughput(Throughput::Elements(rule.n()));
    group.bench_function("2^16 nodes, s=512", |b| {
        b.iter(|| {
            node_sums(&rule, 512, 1, |_, y, out| {
                out[0] = y[0] * y[511];
                Ok(())
            })
            .unwrap()
        })
    });
    group.finish();
}

fn pde_node(c: &mut Criterion) {
    let mesh = TriangularMesh::unit_square(16).unwrap();
    let field = DiffusionFieldSpec::new(1.5, 2.0, Transform::Periodic, 512).unwrap();
    let model = PdeTruncationModel::new(field, &mesh, 2, Norm::L2).unwrap();
    let z = vendored_generating_vector();
    let rule = LatticeRule::new(1 << 13, &z, 1).unwrap();
    let y = rule.generate_node(17, 512).unwrap();
    let dims: Vec<usize> = (2..=8).map(|k| 1usize << k).collect();
    c.bench_function("pde_node_sweep_m16", |b| {
        b.iter(|| {
            let mut out = vec![0.0; 2 * dims.len()];
            model
                .squared_differences(black_box(&y), &dims, &mut out)
                .unwrap();
            out
        })
    });
}

fn tensor_oracle(c: &mut Criterion) {
    let spec = ScalarModelSpec::power_law(1.5, 0.1, 2.0, 4, Transform::Identity).unwrap();
    c.bench_function("oracle_q16_dim4", |b| {
        b.iter(|| exact_l2_truncation_error(black_box(&spec), 2, 16).unwrap())
    });
}
