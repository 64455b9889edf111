//! Throughput of scalar special functions and batched activation evaluation.

use actkit::activations::{ActivationInstance, ActivationKind};
use actkit::numerics::{erf, erf_oracle};
use actkit_bench::seeded_tensor;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn bench_erf(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1024).map(|i| -6.0 + 12.0 * i as f64 / 1023.0).collect();
    let mut group = c.benchmark_group("erf");
    group.throughput(Throughput::Elements(xs.len() as u64));
    group.bench_function("fast", |b| {
        b.iter(|| xs.iter().map(|&x| erf(black_box(x))).sum::<f64>())
    });
    group.bench_function("quadrature_oracle", |b| {
        b.iter(|| xs.iter().map(|&x| erf_oracle(black_box(x))).sum::<f64>())
    });
    group.finish();
}

fn bench_forward_batch(c: &mut Criterion) {
    let xs = seeded_tensor(vec![128, 128], 7);
    let mut group = c.benchmark_group("forward_batch_128x128");
    group.throughput(Throughput::Elements(xs.len() as u64));
    for kind in [
        ActivationKind::Relu,
        ActivationKind::Mish,
        ActivationKind::Serf,
        ActivationKind::ErfRelu,
    ] {
        let inst = ActivationInstance::with_defaults(kind);
        group.bench_with_input(
            BenchmarkId::from_parameter(kind.name()),
            &inst,
            |b, inst| b.iter(|| inst.forward_batch(black_box(&xs)).unwrap()),
        );
    }
    group.finish();
}

fn bench_derivative_and_param_grad(c: &mut Criterion) {
    let xs = seeded_tensor(vec![128, 128], 9);
    let inst = ActivationInstance::with_defaults(ActivationKind::ErfRelu);
    let mut group = c.benchmark_group("erfrelu_gradients_128x128");
    group.throughput(Throughput::Elements(xs.len() as u64));
    group.bench_function("derivative_batch", |b| {
        b.iter(|| inst.derivative_batch(black_box(&xs)).unwrap())
    });
    let upstream: Vec<f64> = vec![1.0; xs.len()];
    group.bench_function("param_gradient_accumulate", |b| {
        b.iter(|| {
            let mut acc = [0.0];
            inst.param_gradient_accumulate(black_box(xs.data()), &upstream, &mut acc)
                .unwrap();
            acc[0]
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_erf,
    bench_forward_batch,
    bench_derivative_and_param_grad
);
criterion_main!(benches);
