use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use secure_qos::full_csi::pointwise_power;
use secure_qos::main_csi::power_main;
use secure_qos::{effective_secure_throughput, simulate_queue, CsiMode, Tolerances};
use secure_qos_bench::{law, link, policy, qos};

fn pointwise(c: &mut Criterion) {
    let tol = Tolerances::default();
    let link = link();
    c.bench_function("pointwise_power_full", |b| {
        b.iter(|| pointwise_power(black_box(1.3), black_box(0.4), &link, 10.0, 0.5, &tol).unwrap())
    });
    c.bench_function("power_main", |b| {
        b.iter(|| power_main(black_box(1.3), 10.0, 0.5, &link, &law(), &tol).unwrap())
    });
}

fn throughput(c: &mut Criterion) {
    let mut g = c.benchmark_group("throughput");
    g.sample_size(10);
    let tol = Tolerances::default();
    for csi in [CsiMode::Full, CsiMode::Main] {
        g.bench_function(format!("{csi}_theta_0.01"), |b| {
            b.iter(|| effective_secure_throughput(csi, &qos(0.01), &link(), &law(), &law(), &tol).unwrap())
        });
    }
    g.finish();
}

fn queue(c: &mut Criterion) {
    let mut g = c.benchmark_group("queue");
    g.sample_size(10);
    let p = policy(CsiMode::Full, 0.01);
    g.bench_function("full_1e4_frames", |b| {
        b.iter(|| simulate_queue(&p, &qos(0.01), &law(), &law(), 50.0, 10_000, black_box(7)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, pointwise, throughput, queue);
criterion_main!(benches);
