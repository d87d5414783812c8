use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use zvins::classifier::{fit_trials, predict_stream, SvmParams, TrialSplit};
use zvins::sim::{simulate_profile, GaitProfile, MotionClass, NoiseModel, Simulation};
use zvins::{
    optimize_gamma, run_ins, shoe_statistics, EkfConfig, FBetaConfig, MotionKind, ShoeParams,
    DEFAULT_RATE_HZ,
};

fn trial(class: MotionClass, seconds: f64, seed: u64) -> Simulation {
    simulate_profile(
        &GaitProfile::preset(class).with_duration(seconds),
        &NoiseModel::realistic(seed),
        DEFAULT_RATE_HZ,
    )
    .unwrap()
}

fn detector(c: &mut Criterion) {
    let sim = trial(MotionClass::Walk, 60.0, 1);
    let shoe = ShoeParams::default();
    c.bench_function("shoe_statistics_60s", |b| {
        b.iter(|| shoe_statistics(black_box(&sim.imu), &shoe).unwrap())
    });
    let mocap = sim.truth.mocap(1, 0.0002, 1).unwrap();
    let cfg = FBetaConfig::for_motion(MotionKind::Walk);
    c.bench_function("optimize_gamma_60s", |b| {
        b.iter(|| optimize_gamma(black_box(&sim.imu), &mocap, &shoe, &cfg).unwrap())
    });
}

fn filter(c: &mut Criterion) {
    let sim = trial(MotionClass::Walk, 60.0, 2);
    let cfg = EkfConfig::default();
    c.bench_function("run_ins_60s", |b| {
        b.iter(|| run_ins(black_box(&sim.imu), &sim.truth.stance, &cfg).unwrap())
    });
}

fn classifier(c: &mut Criterion) {
    let trials: Vec<_> = [MotionClass::Walk, MotionClass::Run]
        .iter()
        .enumerate()
        .map(|(i, m)| (m.index(), trial(*m, 70.0, 10 + i as u64).imu))
        .collect();
    let split = TrialSplit::default();
    let params = SvmParams::default_for_window(125);
    let mut group = c.benchmark_group("svm");
    group.sample_size(10);
    group.bench_function("fit_walk_run", |b| {
        b.iter(|| fit_trials(black_box(&trials), &split, &params).unwrap())
    });
    let model = fit_trials(&trials, &split, &params).unwrap().model;
    let probe = trial(MotionClass::Run, 60.0, 3).imu;
    group.bench_function("predict_stream_60s", |b| {
        b.iter(|| predict_stream(&model, black_box(&probe)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, detector, filter, classifier);
criterion_main!(benches);
