//! Compares the rayon-parallel execution paths with their sequential
//! fallbacks on the two workloads that fan out over independent tasks: the
//! design grid search (one task per splitting-ratio column) and the
//! multi-slot simulator (one task per slot).
//!
//! Each pair is asserted bit-identical before timing, so the bench doubles
//! as an equivalence check of the two schedules.  Run with
//! `cargo bench -p rbcom-core`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use rbcom_core::beam::BeamGeometry;
use rbcom_core::gain::GainMedium;
use rbcom_core::link::ChannelPhysics;
use rbcom_core::optimizer::{optimize_par, optimize_seq, OptimizerConfig};
use rbcom_core::sim::{simulate_par, simulate_seq, FrameScheme};
use rbcom_core::units::{dbm_to_watts, PowerW};

/// Receiver noise power: -174 dBm/Hz thermal density over 1 GHz.
fn noise_power() -> PowerW {
    PowerW::new(dbm_to_watts(-174.0).unwrap().watts() * 1e9).unwrap()
}

/// The reference link: 1064 nm beam with 0.3 mrad divergence over 15 m
/// between 3 mm apertures, 200 W pump, 10 dBm receiver rating.
fn search_config(steps: u32) -> OptimizerConfig {
    let medium = GainMedium::new(1.2e7, 0.7, 3e-3).unwrap();
    let geometry = BeamGeometry::new(1064e-9, 0.3e-3, 15.0, medium.cross_section()).unwrap();
    OptimizerConfig::new(
        medium,
        geometry,
        PowerW::new(200.0).unwrap(),
        noise_power(),
        dbm_to_watts(10.0).unwrap(),
        steps,
        steps,
    )
    .unwrap()
}

fn bench_optimize(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize");
    group.sample_size(20);
    for steps in [40u32, 120] {
        let cfg = search_config(steps);
        let seq = optimize_seq(&cfg).unwrap();
        let par = optimize_par(&cfg).unwrap();
        assert_eq!(seq, par, "parallel search must reproduce the sequential winner");

        let cells = (steps as u64 - 1) * (steps as u64 - 1);
        group.throughput(Throughput::Elements(cells));
        group.bench_function(BenchmarkId::new("seq", steps), |b| {
            b.iter(|| optimize_seq(black_box(&cfg)).unwrap())
        });
        group.bench_function(BenchmarkId::new("par", steps), |b| {
            b.iter(|| optimize_par(black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let noise = noise_power();
    let cfg = search_config(50);
    let opt = optimize_seq(&cfg).unwrap();

    let slots = 8u32;
    let frames = 2500u64;
    let seed = 42u64;
    let scheme = FrameScheme::from_optimum(&opt, noise, slots).unwrap();
    let delta = cfg.geometry().link_loss();
    let channel = ChannelPhysics::new(
        *cfg.medium(),
        cfg.pump(),
        opt.alpha_star.value(),
        delta.value(),
    )
    .unwrap();

    let seq = simulate_seq(&scheme, &channel, opt.alpha_star, delta, noise, frames, seed).unwrap();
    let par = simulate_par(&scheme, &channel, opt.alpha_star, delta, noise, frames, seed).unwrap();
    assert_eq!(seq.y(), par.y(), "parallel simulation must reproduce the sequential trace");

    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    group.throughput(Throughput::Elements(frames * slots as u64));
    group.bench_function(BenchmarkId::new("seq", format!("{frames}x{slots}")), |b| {
        b.iter(|| {
            simulate_seq(
                black_box(&scheme),
                &channel,
                opt.alpha_star,
                delta,
                noise,
                frames,
                seed,
            )
            .unwrap()
        })
    });
    group.bench_function(BenchmarkId::new("par", format!("{frames}x{slots}")), |b| {
        b.iter(|| {
            simulate_par(
                black_box(&scheme),
                &channel,
                opt.alpha_star,
                delta,
                noise,
                frames,
                seed,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_optimize, bench_simulate);
criterion_main!(benches);
