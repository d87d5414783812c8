//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as its own harness so the lines always reach stdout.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use zvins::classifier::{fit_trials, smooth, SvmModel, SvmParams, TrialSplit};
use zvins::eval::{course_trial, run_trial, Method, TrialConfig, TrialKind};
use zvins::sim::{
    simulate, simulate_profile, GaitPlan, GaitProfile, MotionClass, NoiseModel, Simulation,
};
use zvins::survey::{map_from_survey, synthetic_survey, umeyama_align, TagTemplate};
use zvins::{
    detect, f_beta, optimize_gamma, run_ins, AdaptiveParams, Ekf, EkfConfig, FBetaConfig,
    ImuStream, MotionKind, NavState, Quaternion, Se3Transform, ShoeParams, Vec3, DEFAULT_RATE_HZ,
};

type Check = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn sim(class: MotionClass, seconds: f64, noise: NoiseModel) -> Result<Simulation> {
    Ok(simulate_profile(
        &GaitProfile::preset(class).with_duration(seconds),
        &noise,
        DEFAULT_RATE_HZ,
    )?)
}

fn optimized_gamma(class: MotionClass, seed: u64) -> Result<f64> {
    let kind = if class == MotionClass::Walk {
        MotionKind::Walk
    } else {
        MotionKind::Run
    };
    let s = sim(class, 60.0, NoiseModel::realistic(seed))?;
    let mocap = s.truth.mocap(1, 0.0002, seed)?;
    Ok(optimize_gamma(
        &s.imu,
        &mocap,
        &ShoeParams::default(),
        &FBetaConfig::for_motion(kind),
    )?
    .gamma)
}

fn horizontal_end_error(traj: &zvins::Trajectory, s: &Simulation) -> f64 {
    let end = traj.points.last().expect("non-empty trajectory").state.p;
    let truth = *s.truth.positions.last().expect("non-empty truth");
    (end - truth).xy().norm()
}

fn detector_closed_loop() -> Result<Outcome> {
    let start = Instant::now();
    let s = sim(MotionClass::Walk, 60.0, NoiseModel::realistic(7))?;
    let mocap = s.truth.mocap(1, 0.0002, 7)?;
    let mut cfg = FBetaConfig::for_motion(MotionKind::Walk);
    cfg.beta_sq = 0.16;
    cfg.speed_threshold = 0.1;
    let shoe = ShoeParams::default();
    let opt = optimize_gamma(&s.imu, &mocap, &shoe, &cfg)?;
    let elapsed = start.elapsed();
    let flags = detect(&s.imu, &shoe.with_gamma(opt.gamma))?;
    let agree = flags
        .iter()
        .zip(&s.truth.stance)
        .filter(|(a, b)| a == b)
        .count();
    let accuracy = agree as f64 / flags.len() as f64;
    outcome(
        opt.f_beta >= 0.95 && accuracy >= 0.95 && elapsed < Duration::from_secs(10),
        format!(
            "gamma {:.4e}, F_beta {:.4}, stance accuracy {:.4}, {:.2} s",
            opt.gamma,
            opt.f_beta,
            accuracy,
            elapsed.as_secs_f64()
        ),
    )
}

fn threshold_ordering() -> Result<Outcome> {
    let mut ordered = 0;
    let mut worst = f64::INFINITY;
    for seed in 0..10 {
        let walk = optimized_gamma(MotionClass::Walk, seed)?;
        let run = optimized_gamma(MotionClass::Run, 1000 + seed)?;
        if run > walk {
            ordered += 1;
        }
        worst = worst.min(run / walk);
    }
    outcome(
        ordered == 10,
        format!("{ordered}/10 seeds with gamma_run > gamma_walk, smallest ratio {worst:.2}"),
    )
}

fn zupt_efficacy() -> Result<Outcome> {
    let s = sim(MotionClass::Walk, 60.0, NoiseModel::realistic(11))?;
    let cfg = EkfConfig::default();
    let path = s.truth.path_length();
    let with = horizontal_end_error(&run_ins(&s.imu, &s.truth.stance, &cfg)?, &s);
    let without = horizontal_end_error(&run_ins(&s.imu, &vec![false; s.imu.len()], &cfg)?, &s);
    outcome(
        with < 0.01 * path && without >= 10.0 * with,
        format!(
            "path {path:.1} m, end error {with:.3} m ({:.3}%) with ZUPTs, {without:.1} m without",
            100.0 * with / path
        ),
    )
}

fn ekf_numerics() -> Result<Outcome> {
    let steps = 10_000;
    let seconds = steps as f64 / DEFAULT_RATE_HZ;
    let s = sim(MotionClass::Walk, seconds, NoiseModel::realistic(5))?;
    ensure!(s.imu.len() >= steps, "simulation too short");
    let samples = s.imu.samples();
    let q0 = zvins::ekf::level_from_accel(&samples[0].accel);
    let mut ekf = Ekf::new(
        NavState::new(Vec3::zeros(), Vec3::zeros(), q0),
        EkfConfig::default(),
    )?;
    let (mut asym, mut min_eig, mut drift) = (0.0f64, f64::INFINITY, 0.0f64);
    for (k, sample) in samples.iter().enumerate().take(steps) {
        if k > 0 {
            ekf.predict(sample, s.imu.interval(k))?;
        }
        if s.truth.stance[k] {
            ekf.zero_velocity_update()?;
        }
        asym = asym.max(ekf.covariance().asymmetry());
        min_eig = min_eig.min(ekf.covariance().min_eigenvalue());
        drift = drift.max((ekf.state().q.norm() - 1.0).abs());
    }
    outcome(
        asym <= 1e-9 && min_eig > -1e-12 && drift < 1e-9,
        format!("{steps} steps: max asymmetry {asym:.2e}, min eigenvalue {min_eig:.2e}, quaternion drift {drift:.2e}"),
    )
}

fn f_beta_exactness() -> Result<Outcome> {
    let cases = [
        (0.8, 0.6, 0.16, 0.5568 / 0.728),
        (0.8, 0.6, 1.0, 0.96 / 1.4),
        (1.0, 1.0, 0.16, 1.0),
        (0.5, 0.5, 0.4, 0.5),
        (0.9, 0.3, 4.0, 5.0 * 0.27 / 3.9),
        (0.0, 0.0, 0.16, 0.0),
    ];
    let worst = cases
        .iter()
        .map(|&(p, r, b, want)| (f_beta(p, r, b) - want).abs())
        .fold(0.0, f64::max);
    let headline = f_beta(0.8, 0.6, 0.16);
    outcome(
        worst <= 1e-12,
        format!("F(0.8, 0.6, 0.16) = {headline:.9}, worst deviation {worst:.1e}"),
    )
}

fn straight_trial(class: MotionClass, seed: u64) -> Result<(u8, ImuStream)> {
    Ok((
        class.index(),
        sim(class, 70.0, NoiseModel::default().with_seed(seed))?.imu,
    ))
}

fn svm_accuracy() -> Result<Outcome> {
    let params = SvmParams::default_for_window(125);
    let split = TrialSplit::default();
    let binary = [
        straight_trial(MotionClass::Walk, 21)?,
        straight_trial(MotionClass::Run, 22)?,
    ];
    let two = fit_trials(&binary, &split, &params)?;
    let six_trials = MotionClass::ALL
        .iter()
        .enumerate()
        .map(|(i, c)| straight_trial(*c, 30 + i as u64))
        .collect::<Result<Vec<_>>>()?;
    let six = fit_trials(&six_trials, &split, &params)?;
    let kkt = two.report.max_kkt_residual.max(six.report.max_kkt_residual);
    outcome(
        two.test.mean_accuracy >= 0.99 && six.test.mean_accuracy >= 0.90 && kkt <= 1e-3,
        format!(
            "walk/run test accuracy {:.4}, six-class mean diagonal {:.4}, max KKT residual {kkt:.1e}",
            two.test.mean_accuracy, six.test.mean_accuracy
        ),
    )
}

/// Forward mean over `W_s + 1` labels divided by `W_s`, shrinking at the end.
fn reference_smooth(raw: &[u8], w_s: usize, threshold: f64) -> Vec<u8> {
    (0..raw.len())
        .map(|i| {
            let window = &raw[i..(i + w_s + 1).min(raw.len())];
            let ones: usize = window.iter().map(|&y| y as usize).sum();
            let denom = (window.len() - 1).max(1) as f64;
            u8::from(ones as f64 / denom >= threshold)
        })
        .collect()
}

fn smoothing() -> Result<Outcome> {
    let mut spurious = vec![0u8; 200];
    spurious[100] = 1;
    let suppressed = smooth(&spurious, 15, 0.2)?;
    let mut step = vec![0u8; 100];
    step.extend(std::iter::repeat_n(1u8, 100));
    let flipped = smooth(&step, 15, 0.2)?;
    let first_one = flipped
        .iter()
        .position(|&y| y == 1)
        .context("smoothed labels never flip")?;
    let lag = first_one.abs_diff(100);
    let exact = suppressed == reference_smooth(&spurious, 15, 0.2)
        && flipped == reference_smooth(&step, 15, 0.2);
    outcome(
        suppressed.iter().all(|&y| y == 0) && lag <= 15 && exact,
        format!(
            "spurious label suppressed, transition flips at sample {first_one} (raw flip at 100)"
        ),
    )
}

fn random_transform(rng: &mut ChaCha8Rng) -> Result<Se3Transform> {
    let mut n = || -> f64 { rng.sample(StandardNormal) };
    let phi = Vec3::new(n(), n(), n());
    let t = Vec3::new(n(), n(), n()) * 5.0;
    Ok(Se3Transform::from_quaternion(
        &Quaternion::from_rotation_vector(&phi),
        t,
    )?)
}

fn survey() -> Result<Outcome> {
    let template = TagTemplate::default();
    let poses = (0..6)
        .map(|i| {
            let q = Quaternion::from_euler(0.0, 0.0, 0.4 * i as f64);
            Se3Transform::from_quaternion(
                &q,
                Vec3::new(3.0 * i as f64, (i as f64).sin(), 0.1 * i as f64),
            )
        })
        .collect::<zvins::Result<Vec<_>>>()?;
    let input = synthetic_survey(&poses, &template, 0.0, true, 1)?;
    let closure = map_from_survey(&input, &template)?
        .loop_closure_error
        .context("no loop closure")?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let truth = random_transform(&mut rng)?;
    let src: Vec<Vec3> = (0..5)
        .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    let dst: Vec<Vec3> = src.iter().map(|p| truth.apply(p)).collect();
    let fit = umeyama_align(&src, &dst)?.transform;
    let exact_err = (fit.rotation() - truth.rotation())
        .abs()
        .max()
        .max((fit.translation() - truth.translation()).abs().max());

    let pts = template.points();
    let mut errors = (0..1000u64)
        .map(|seed| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = random_transform(&mut rng)?;
            let observed: Vec<Vec3> = pts
                .iter()
                .map(|p| {
                    let mut n = || -> f64 { rng.sample(StandardNormal) };
                    truth.apply(p) + Vec3::new(n(), n(), n()) * 0.001
                })
                .collect();
            let fit = umeyama_align(&pts, &observed)?.transform;
            Ok((fit.translation() - truth.translation()).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    errors.sort_by(f64::total_cmp);
    let p99 = errors[989];
    outcome(
        closure < 1e-9 && exact_err <= 1e-9 && p99 < 0.003,
        format!(
            "noiseless closure {closure:.1e} m, exact fit error {exact_err:.1e}, 1 mm noise p99 translation {:.2} mm",
            p99 * 1e3
        ),
    )
}

fn lap_model() -> Result<SvmModel> {
    let trials = [MotionClass::Walk, MotionClass::Run]
        .iter()
        .enumerate()
        .map(|(i, c)| -> Result<(u8, ImuStream)> {
            let plan = GaitPlan::laps(GaitProfile::preset(*c), 70.0, 10.0)?;
            Ok((
                c.index(),
                simulate(
                    &plan,
                    &NoiseModel::realistic(100 + i as u64),
                    DEFAULT_RATE_HZ,
                )?
                .imu,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_trials(
        &trials,
        &TrialSplit::default(),
        &SvmParams::default_for_window(125),
    )?
    .model)
}

fn adaptive_end_to_end() -> Result<Outcome> {
    let model = lap_model()?;
    let gammas = AdaptiveParams {
        gamma_walk: optimized_gamma(MotionClass::Walk, 7)?,
        gamma_run: optimized_gamma(MotionClass::Run, 8)?,
    };
    let cfg = TrialConfig::new(gammas);
    let mut errs = Vec::new();
    for kind in [TrialKind::Walk, TrialKind::Run, TrialKind::Mixed] {
        let trial = course_trial(kind, &NoiseModel::realistic(1))?;
        let report = run_trial(
            &trial.sim.imu,
            &model,
            &cfg,
            &trial.triggers,
            &trial.map,
            Some(&trial.class_truth),
        )?;
        let e = |m| report.error(m).context("method missing from report");
        errs.push([
            e(Method::GammaWalk)?,
            e(Method::GammaRun)?,
            e(Method::GammaAdapt)?,
        ]);
    }
    let [walk, run, mixed] = [errs[0], errs[1], errs[2]];
    let a = (walk[2] - walk[0]).abs() <= 0.05 * walk[0];
    let b = run[0] >= 10.0 * run[1];
    let c = mixed[2] <= mixed[0].min(mixed[1]);
    let fmt = |e: [f64; 3]| format!("walk/run/adapt {:.2}/{:.2}/{:.2} m", e[0], e[1], e[2]);
    outcome(
        a && b && c,
        format!(
            "pure walk {} [{}], pure run {} [{}], mixed {} [{}]",
            fmt(walk),
            if a { "ok" } else { "fail" },
            fmt(run),
            if b { "ok" } else { "fail" },
            fmt(mixed),
            if c { "ok" } else { "fail" },
        ),
    )
}

fn cli(bin: &str, dir: &Path, args: &[&str]) -> Result<()> {
    let out = Command::new(bin)
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .with_context(|| format!("spawning {bin}"))?;
    ensure!(
        out.status.success(),
        "{bin} {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

/// Every command once, outputs chained, all written under `dir`.
fn pipeline(dir: &Path) -> Result<()> {
    let sim_bin = env!("CARGO_BIN_EXE_sim");
    let zv = env!("CARGO_BIN_EXE_zv");
    let classify = env!("CARGO_BIN_EXE_classify");
    let ins = env!("CARGO_BIN_EXE_ins");
    let survey = env!("CARGO_BIN_EXE_survey");
    let eval = env!("CARGO_BIN_EXE_eval");
    std::fs::create_dir_all(dir.join("trials")).context("creating the work directory")?;
    std::fs::write(
        dir.join("zvins.conf"),
        "detector.gamma = 1e5\nekf.sigma_zupt = 0.01\n",
    )
    .context("writing the config")?;

    cli(
        sim_bin,
        dir,
        &[
            "gait",
            "--motion",
            "walk",
            "--duration",
            "20",
            "--seed",
            "7",
            "--out",
            "walk.csv",
        ],
    )?;
    cli(
        sim_bin,
        dir,
        &[
            "gait",
            "--motion",
            "walk",
            "--duration",
            "20",
            "--seed",
            "7",
            "--out",
            "walk2.csv",
            "--truth",
            "truth.csv",
        ],
    )?;
    cli(
        sim_bin,
        dir,
        &[
            "gait",
            "--motion",
            "walk",
            "--duration",
            "20",
            "--seed",
            "9",
            "--out",
            "w.csv",
            "--mocap",
            "mocap.csv",
        ],
    )?;
    for (motion, seed) in [("walk", "100"), ("run", "101")] {
        let out = format!("trials/{motion}_0.csv");
        cli(
            sim_bin,
            dir,
            &[
                "gait",
                "--motion",
                motion,
                "--duration",
                "40",
                "--laps",
                "10",
                "--seed",
                seed,
                "--out",
                &out,
            ],
        )?;
    }
    cli(
        sim_bin,
        dir,
        &[
            "course",
            "--kind",
            "mixed",
            "--seed",
            "3",
            "--out",
            "course.csv",
            "--truth",
            "course_truth.csv",
            "--triggers",
            "triggers.csv",
            "--markers",
            "markers.json",
        ],
    )?;
    cli(
        zv,
        dir,
        &[
            "detect", "--imu", "walk.csv", "--gamma", "1e5", "--out", "zv.csv",
        ],
    )?;
    cli(
        zv,
        dir,
        &[
            "--config",
            "zvins.conf",
            "detect",
            "--imu",
            "walk.csv",
            "--out",
            "zv_config.csv",
        ],
    )?;
    cli(
        zv,
        dir,
        &[
            "optimize",
            "--imu",
            "w.csv",
            "--mocap",
            "mocap.csv",
            "--motion",
            "walk",
            "--out",
            "pr.csv",
        ],
    )?;
    cli(
        classify,
        dir,
        &[
            "train",
            "--trials",
            "trials",
            "--out",
            "model.json",
            "--classes",
            "walk,run",
            "--windows-per-class",
            "200",
        ],
    )?;
    cli(
        classify,
        dir,
        &[
            "predict",
            "--imu",
            "course.csv",
            "--model",
            "model.json",
            "--smooth",
            "15",
            "--out",
            "pred.csv",
        ],
    )?;
    cli(
        ins,
        dir,
        &[
            "run", "--imu", "walk.csv", "--gamma", "1e5", "--out", "traj.csv",
        ],
    )?;
    cli(
        ins,
        dir,
        &[
            "--config",
            "zvins.conf",
            "run",
            "--imu",
            "walk.csv",
            "--out",
            "traj_config.csv",
        ],
    )?;
    cli(
        ins,
        dir,
        &[
            "run",
            "--imu",
            "course.csv",
            "--adaptive",
            "--model",
            "model.json",
            "--gamma-walk",
            "6e4",
            "--gamma-run",
            "1.5e6",
            "--out",
            "traj_adaptive.csv",
        ],
    )?;
    cli(
        survey,
        dir,
        &[
            "synth",
            "--markers",
            "markers.json",
            "--noise",
            "0.001",
            "--seed",
            "5",
            "--out",
            "obs.json",
        ],
    )?;
    cli(
        survey,
        dir,
        &["map", "--observations", "obs.json", "--out", "map.json"],
    )?;
    std::fs::write(
        dir.join("gammas.json"),
        "{\"gamma_walk\": 6e4, \"gamma_run\": 1.5e6}\n",
    )?;
    cli(
        eval,
        dir,
        &[
            "trial",
            "--imu",
            "course.csv",
            "--model",
            "model.json",
            "--gammas",
            "gammas.json",
            "--triggers",
            "triggers.csv",
            "--markers",
            "markers.json",
            "--truth",
            "course_truth.csv",
            "--report",
            "report.json",
        ],
    )?;
    Ok(())
}

fn files_under(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let name = PathBuf::from(path.file_name().context("unnamed entry")?);
        if path.is_dir() {
            out.extend(files_under(&path)?.into_iter().map(|p| name.join(p)));
        } else {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Result<Outcome> {
    let tmp = tempfile::tempdir().context("creating a temporary directory")?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&a)?;
    pipeline(&b)?;
    let (fa, fb) = (files_under(&a)?, files_under(&b)?);
    ensure!(fa == fb, "runs produced different file sets");
    let mut differing = Vec::new();
    for rel in &fa {
        if std::fs::read(a.join(rel))? != std::fs::read(b.join(rel))? {
            differing.push(rel.display().to_string());
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} output files byte-identical across two runs", fa.len())
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("detector/optimizer closed loop", detector_closed_loop),
        ("threshold ordering", threshold_ordering),
        ("ZUPT efficacy", zupt_efficacy),
        ("EKF numerics", ekf_numerics),
        ("F-beta exactness", f_beta_exactness),
        ("SVM accuracy", svm_accuracy),
        ("label smoothing", smoothing),
        ("survey", survey),
        ("adaptive end-to-end", adaptive_end_to_end),
        ("CLI determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (status, detail) = match check() {
            Ok(o) if o.pass => ("PASS", o.detail),
            Ok(o) => ("FAIL", o.detail),
            Err(e) => ("FAIL", format!("error: {e:#}")),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:>2} {status}: {name}: {detail} ({:.1} s)",
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    let total = start.elapsed();
    println!(
        "acceptance: {} of {} passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        total.as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
