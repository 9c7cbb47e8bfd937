use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use drive_audit_bench::{following_pair, scenario};
use drive_audit_core::geometry::{box_distance, OrientedBox, Vec2};
use drive_audit_core::metrics::{compute_ttc, TtcConfig};
use drive_audit_core::synthgen::CaseKind;
use drive_audit_core::{compute_all, MetricConfig};

fn bench_compute_all(c: &mut Criterion) {
    let cfg = MetricConfig::default();
    let mut g = c.benchmark_group("compute_all");
    for kind in [CaseKind::CarFollowing, CaseKind::CrosswalkApproach, CaseKind::CyclistOvertake] {
        let s = scenario(kind, 8);
        g.bench_function(kind.as_str(), |b| b.iter(|| compute_all(black_box(&s), &cfg)));
    }
    g.finish();
}

fn bench_ttc(c: &mut Criterion) {
    let (ego, lead) = following_pair();
    let grid_only = TtcConfig {
        substep: None,
        ..TtcConfig::default()
    };
    c.bench_function("ttc/substep", |b| {
        b.iter(|| compute_ttc(black_box(&ego), &lead, 0, 0.1, &TtcConfig::default()))
    });
    c.bench_function("ttc/grid_only", |b| {
        b.iter(|| compute_ttc(black_box(&ego), &lead, 0, 0.1, &grid_only))
    });
}

fn bench_box_distance(c: &mut Criterion) {
    let a = OrientedBox::new(Vec2::new(0.0, 0.0), 0.3, 4.5, 1.9);
    let apart = OrientedBox::new(Vec2::new(6.0, 2.5), -1.1, 4.0, 1.8);
    let touching = OrientedBox::new(Vec2::new(2.0, 0.5), 0.9, 4.0, 1.8);
    c.bench_function("box_distance/separated", |b| b.iter(|| box_distance(black_box(&a), &apart)));
    c.bench_function("box_distance/overlapping", |b| b.iter(|| box_distance(black_box(&a), &touching)));
}

criterion_group!(benches, bench_compute_all, bench_ttc, bench_box_distance);
criterion_main!(benches);
