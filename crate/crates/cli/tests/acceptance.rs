//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Runs as a plain binary (`harness = false`) so
//! the lines show up in `cargo test` output.

use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use beamsynth::array::{
    directivity, mgb_weights, quantize_phases, radiation_pattern, ArrayGeometry, BeamPointingAngle, DirectionGrid,
    ElementModel, Orientation, PatternSynth, PhaseVector, PlanarSpec,
};
use beamsynth::codebook::{build_planar_codebook, calibrate_with, linear_codeword_phase, nearest_codeword};
use beamsynth::harness::{
    evaluate_approach, measure_inference_latency, quantization_sweep, run_pipeline, CsimReference, EvalContext,
    EvalReport, EvalSettings, ExperimentConfig, PipelineOutput, Provider, ReportMeta, SectorSpec,
};
use beamsynth::metrics::central_angle;
use beamsynth::neural::{mse_loss, Activation, MlpModel, MlpSpec};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn geom() -> ArrayGeometry<f64> {
    ArrayGeometry::planar(PlanarSpec::default()).unwrap()
}

fn sector(n: usize, seed: u64) -> Vec<BeamPointingAngle<f64>> {
    SectorSpec {
        samples: n,
        seed,
        ..SectorSpec::default()
    }
    .sample()
    .unwrap()
}

fn context(reference: CsimReference) -> EvalContext {
    let settings = EvalSettings {
        csim_reference: reference,
        ..EvalSettings::default()
    };
    EvalContext::new(&geom(), settings, ReportMeta::default()).unwrap()
}

fn quartile_line(r: &EvalReport) -> String {
    let q = &r.summary.quantiles;
    let ca = q.central_angle_deg.as_array();
    let cs = q.cosine_similarity.as_array();
    format!(
        "    {:<12} CA p25/50/75/95 {:6.2} {:6.2} {:6.2} {:6.2}   CSim {:.4} {:.4} {:.4} {:.4}",
        r.label(),
        ca[0],
        ca[1],
        ca[2],
        ca[3],
        cs[0],
        cs[1],
        cs[2],
        cs[3]
    )
}

fn mgb_self_consistency() -> Check {
    let ctx = context(CsimReference::MatchedResolution);
    let r = evaluate_approach(Provider::Mgb, None, &sector(1000, 101), &ctx).map_err(|e| e.to_string())?;
    let worst = r.samples.iter().map(|s| (1.0 - s.cosine_similarity).abs()).fold(0.0, f64::max);
    let median = r.median_central_angle();
    ensure(
        median <= 0.1 && worst <= 1e-9,
        format!("1000 angles, median CA {median:.4} deg, max |1 - CSim| {worst:.1e}"),
    )
}

fn codebook_monotonicity() -> Check {
    let ctx = context(CsimReference::MatchedResolution);
    let targets = sector(10_000, 202);
    let mut medians = Vec::new();
    for k in [16, 64, 256, 1024] {
        let cb = build_planar_codebook(ctx.geometry(), k, 16).and_then(|cb| calibrate_with(&cb, ctx.finder()));
        let cb = cb.map_err(|e| e.to_string())?;
        let r = evaluate_approach(Provider::Codebook(&cb), None, &targets, &ctx).map_err(|e| e.to_string())?;
        println!("{}", quartile_line(&r));
        medians.push(r.median_central_angle());
    }
    let strictly = medians.windows(2).all(|w| w[1] < w[0]);
    ensure(
        strictly && (12.0..=27.0).contains(&medians[0]) && (1.0..=5.0).contains(&medians[3]),
        format!(
            "median CA over 10^4 targets CB-16 {:.2}, CB-64 {:.2}, CB-256 {:.2}, CB-1024 {:.2} deg",
            medians[0], medians[1], medians[2], medians[3]
        ),
    )
}

fn desk_training(out: &PipelineOutput) -> Check {
    let nn = out.reports.iter().find(|r| r.label() == "NN").ok_or("no NN report")?;
    let first = out.trace.first().ok_or("empty trace")?.val_loss;
    let best = out.trace.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    let (ca, cs) = (nn.median_central_angle(), nn.median_cosine_similarity());
    ensure(
        ca <= 3.0 && cs >= 0.98 && best * 10.0 <= first,
        format!(
            "{} held-out angles, median CA {ca:.3} deg, median CSim {cs:.4}; val MSE epoch 1 {first:.4} -> best {best:.5} (epoch {})",
            nn.summary.samples, out.summary.training.best_epoch
        ),
    )
}

fn nn_beats_codebook(out: &PipelineOutput) -> Check {
    let median = |label: &str| {
        out.reports
            .iter()
            .find(|r| r.label() == label)
            .map(|r| r.median_central_angle())
            .ok_or(format!("no {label} report"))
    };
    let nn = median("NN")?;
    let cb = median("CB-1024")?;
    ensure(nn < 4.2, format!("NN median CA {nn:.3} deg < 4.2 (CB-1024 on the same angles: {cb:.3} deg)"))
}

fn sweep_medians(sweep: &[EvalReport], label: &str) -> Result<f64, String> {
    sweep
        .iter()
        .find(|r| r.label() == label)
        .map(|r| r.median_cosine_similarity())
        .ok_or(format!("no {label} report"))
}

fn quantization_ordering(out: &PipelineOutput) -> Check {
    for r in &out.sweep {
        println!("{}", quartile_line(r));
    }
    let m = |l: &str| sweep_medians(&out.sweep, l);
    let (nn6, nn2, cb6, cb2) = (m("NN-b6")?, m("NN-b2")?, m("CB-1024-b6")?, m("CB-1024-b2")?);

    // Same angles against the unquantized steering pattern, for reference.
    let n = out.summary.sizes.swept;
    let targets = out.split.test.bpas();
    let ctx = context(CsimReference::Unquantized);
    let cb = out.codebooks.iter().find(|c| c.size() == 1024).ok_or("no CB-1024")?;
    let raw = quantization_sweep(&[Provider::Neural(&out.model), Provider::Codebook(cb)], &[2, 6], &targets[..n], &ctx)
        .map_err(|e| e.to_string())?;
    let u = |l: &str| sweep_medians(&raw, l);
    println!(
        "    unquantized reference: NN b6 {:.4} b2 {:.4}, CB-1024 b6 {:.4} b2 {:.4}",
        u("NN-b6")?,
        u("NN-b2")?,
        u("CB-1024-b6")?,
        u("CB-1024-b2")?
    );

    let (dnn, dcb) = (nn6 - nn2, cb6 - cb2);
    ensure(
        dnn < dcb && nn2 >= cb6 - 0.005,
        format!(
            "median CSim drop b6->b2 NN {dnn:.4} vs CB-1024 {dcb:.4}; NN-b2 {nn2:.4} vs CB-1024-b6 {cb6:.4} - 0.005 ({n} angles, matched-resolution reference)"
        ),
    )
}

fn latency(out: &PipelineOutput) -> Check {
    let bpas = out.split.test.bpas();
    let r = measure_inference_latency(&out.model, &bpas[..bpas.len().min(1000)], 10_000).map_err(|e| e.to_string())?;
    ensure(
        r.trials == 10_000 && r.median_ns > 0.0 && !r.hardware_descriptor.is_empty(),
        format!(
            "{} single-angle predictions ({}), median {:.0} ns, p95 {:.0} ns on {} (reported only)",
            r.trials, r.precision, r.median_ns, r.p95_ns, r.hardware_descriptor
        ),
    )
}

fn tiny_spec(batch_norm: bool) -> MlpSpec {
    MlpSpec {
        layer_dims: vec![2, 3, 4, 3, 2],
        activations: vec![Activation::Snake, Activation::Snake, Activation::Tsigmoid],
        batch_norm: vec![false, batch_norm, batch_norm],
    }
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.5..1.5))
}

fn gradient_suite() -> Check {
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for (seed, bn) in [(1, true), (2, true), (3, true), (4, false), (5, false)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = MlpModel::<f64>::new(tiny_spec(bn), seed).map_err(|e| e.to_string())?;
        for p in m.params_mut() {
            for v in p.iter_mut() {
                *v += rng.random_range(-0.3..0.3);
            }
        }
        for a in m.params_mut().into_iter().filter(|p| p.len() == 1) {
            a[0] = a[0].abs().max(0.4);
        }
        let x = random(7, 2, &mut rng);
        let y = random(7, 2, &mut rng);
        let loss = |m: &MlpModel<f64>| mse_loss(m.forward_train(x.view()).unwrap().output.view(), y.view());
        let g = m
            .forward_train(x.view())
            .and_then(|c| m.backward(&c, y.view()))
            .map_err(|e| e.to_string())?;
        let analytic: Vec<Vec<f64>> = g.slices().iter().map(|s| s.to_vec()).collect();
        let h = 3e-4;
        for (gi, group) in analytic.iter().enumerate() {
            for (k, &a) in group.iter().enumerate() {
                let orig = m.params_mut()[gi][k];
                let mut at = |d: f64| {
                    m.params_mut()[gi][k] = orig + d;
                    loss(&m)
                };
                let numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
                m.params_mut()[gi][k] = orig;
                let scale = a.abs().max(numeric.abs());
                // exact zeros (biases feeding a normalization) compare absolutely
                let rel = if scale < 1e-8 { (a - numeric).abs() * 100.0 } else { (a - numeric).abs() / scale };
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    ensure(
        worst < 1e-5,
        format!("{checked} parameters over 5 tiny models, worst relative error {worst:.2e}"),
    )
}

fn unit(az: f64, el: f64) -> [f64; 3] {
    let (p, t) = (az.to_radians(), el.to_radians());
    [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
}

fn direct_sum(phases: &[f64], pos: &[[f64; 3]], dipole: bool, az: f64, el: f64) -> f64 {
    let u = unit(az, el);
    let (mut re, mut im) = (0.0, 0.0);
    for (p, ph) in pos.iter().zip(phases) {
        let arg = ph.to_radians() + 2.0 * PI * (p[0] * u[0] + p[1] * u[1] + p[2] * u[2]);
        re += arg.cos();
        im += arg.sin();
    }
    let ef = if dipole { el.to_radians().sin().abs() } else { 1.0 };
    ef * (re * re + im * im).sqrt()
}

fn oracle_synthesis() -> Result<f64, String> {
    let g = geom();
    let grid = Arc::new(DirectionGrid::full_sphere(10.0).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random = PhaseVector::from_degrees((0..64).map(|_| rng.random_range(-180.0..180.0))).unwrap();
    let steered = mgb_weights(&BeamPointingAngle::new(30.0, 120.0).unwrap(), &g);
    let batch = PatternSynth::new(&g, grid.clone()).magnitudes(&[&random, &steered]).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for (i, (az, el)) in grid.directions().enumerate() {
        for (c, pv) in [&random, &steered].into_iter().enumerate() {
            worst = worst.max((batch[[i, c]] - direct_sum(pv.as_slice(), g.positions(), true, az, el)).abs());
        }
    }
    Ok(worst)
}

fn oracle_nearest() -> Result<usize, String> {
    let ctx = context(CsimReference::MatchedResolution);
    let cb = build_planar_codebook(ctx.geometry(), 1024, 16)
        .and_then(|cb| calibrate_with(&cb, ctx.finder()))
        .map_err(|e| e.to_string())?;
    let beams = cb.calibrated_bpas().ok_or("uncalibrated")?;
    let mut agree = 0;
    for t in sector(1000, 303) {
        let ut = unit(t.az_deg(), t.el_deg());
        let dist = |b: &BeamPointingAngle<f64>| {
            let u = unit(b.az_deg(), b.el_deg());
            (u[0] * ut[0] + u[1] * ut[1] + u[2] * ut[2]).clamp(-1.0, 1.0).acos()
        };
        let mut best = 0;
        for k in 1..beams.len() {
            if dist(&beams[k]) < dist(&beams[best]) {
                best = k;
            }
        }
        let got = nearest_codeword(&cb, &t).map_err(|e| e.to_string())?;
        if got == best || (dist(&beams[got]) - dist(&beams[best])).abs() < 1e-12 {
            agree += 1;
        }
    }
    Ok(agree)
}

fn oracle_directivity() -> Result<(f64, f64), String> {
    let g = ArrayGeometry::<f64>::planar(PlanarSpec {
        orientation: Orientation::Xy,
        element: ElementModel::Isotropic,
        ..PlanarSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let grid = Arc::new(DirectionGrid::full_sphere(1.0).map_err(|e| e.to_string())?);
    let p = radiation_pattern(&PhaseVector::zeros(64), &g, &grid).map_err(|e| e.to_string())?;
    let lib = 10.0 * directivity(&p).map_err(|e| e.to_string())?.peak().1.log10();
    // midpoint rule at 0.25 degrees
    let step = 0.25_f64;
    let h = step.to_radians();
    let zeros = [0.0; 64];
    let mut total = 0.0;
    for i in 0..(180.0 / step) as usize {
        let el = (i as f64 + 0.5) * step;
        let w = el.to_radians().sin() * h * h;
        for j in 0..(360.0 / step) as usize {
            let f = direct_sum(&zeros, g.positions(), false, (j as f64 + 0.5) * step, el);
            total += f * f * w;
        }
    }
    Ok((lib, 10.0 * (4.0 * PI * 64.0 * 64.0 / total).log10()))
}

fn hand_examples() -> Result<bool, String> {
    let q = |p: f64, b: u32| quantize_phases(&PhaseVector::from_degrees([p]).unwrap(), b).unwrap().as_slice()[0];
    let ca = |a: (f64, f64), b: (f64, f64)| {
        central_angle(&BeamPointingAngle::new(a.0, a.1).unwrap(), &BeamPointingAngle::new(b.0, b.1).unwrap())
    };
    let lin = |n, k, size, bits| linear_codeword_phase(n, k, size, bits).map_err(|e| e.to_string());
    Ok(lin(1, 1, 4, 2)? == 180.0
        && lin(1, 3, 4, 2)? == 0.0
        && lin(0, 5, 16, 3)? == 0.0
        && (ca((0.0, 30.0), (0.0, 150.0)) - 120.0).abs() < 1e-12
        && (ca((0.0, 90.0), (90.0, 90.0)) - 90.0).abs() < 1e-12
        && q(100.0, 2) == 90.0
        && q(170.0, 3) == 180.0)
}

fn oracles() -> Check {
    let synth = oracle_synthesis()?;
    let agree = oracle_nearest()?;
    let (lib_db, fine_db) = oracle_directivity()?;
    let hand = hand_examples()?;
    ensure(
        synth < 1e-10 && agree == 1000 && (lib_db - fine_db).abs() <= 1.0 && hand,
        format!(
            "direct sum max err {synth:.1e}; nearest codeword {agree}/1000; broadside D {lib_db:.2} dBi vs integrated {fine_db:.2} dBi; hand examples {}",
            if hand { "ok" } else { "WRONG" }
        ),
    )
}

fn cli_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "samples = 2000\nepochs = 3\ncodebook_sizes = [16, 64]\nsweep_codebook = 64\n\
         sweep_samples = 60\neval_samples = 120\ngrid_step = 4.0\n",
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_beamsynth"))
            .args(["--seed", "4242", "--config"])
            .arg(&cfg)
            .args(["pipeline", "--no-latency", "--out-dir"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("pipeline run {run} failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        let json = std::fs::read(out.join("summary.json")).map_err(|e| e.to_string())?;
        outputs.push((json, status.stdout));
    }
    ensure(
        outputs[0] == outputs[1] && !outputs[0].0.is_empty(),
        format!("two CLI pipeline runs, seed 4242: summary.json {} bytes, identical", outputs[0].0.len()),
    )
}

fn desk_pipeline() -> Result<PipelineOutput, String> {
    // 10^5 angles, 200 epochs, f32, whole test split evaluated
    let cfg = ExperimentConfig {
        seed: 1,
        ..ExperimentConfig::default()
    };
    run_pipeline(&cfg, None, |m| eprintln!("    {m}")).map_err(|e| e.to_string())
}

fn main() {
    let mut failed = 0;
    let mut record = |n: u32, name: &str, c: Check, t: Instant| {
        let secs = t.elapsed().as_secs_f64();
        match c {
            Ok(d) => println!("criterion {n} PASS  {name}: {d} [{secs:.0} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} FAIL  {name}: {d} [{secs:.0} s]");
            }
        }
    };

    let t = Instant::now();
    record(1, "MGB self-consistency", mgb_self_consistency(), t);
    let t = Instant::now();
    record(2, "codebook monotonicity", codebook_monotonicity(), t);

    let t = Instant::now();
    eprintln!("desk-scale pipeline: 10^5 angles, 200 epochs");
    match desk_pipeline() {
        Ok(out) => {
            for r in out.reports.iter().filter(|r| r.summary.bits.is_none()) {
                println!("{}", quartile_line(r));
            }
            record(3, "desk-scale training", desk_training(&out), t);
            let t = Instant::now();
            record(4, "NN below 4.2 deg", nn_beats_codebook(&out), t);
            let t = Instant::now();
            record(5, "quantization ordering", quantization_ordering(&out), t);
            let t = Instant::now();
            record(9, "inference latency", latency(&out), t);
        }
        Err(e) => {
            for (n, name) in [(3, "desk-scale training"), (4, "NN below 4.2 deg"), (5, "quantization ordering"), (9, "inference latency")] {
                record(n, name, Err(format!("pipeline failed: {e}")), t);
            }
        }
    }

    let t = Instant::now();
    record(6, "gradient suite", gradient_suite(), t);
    let t = Instant::now();
    record(7, "oracle equivalences", oracles(), t);
    let t = Instant::now();
    record(8, "CLI determinism", cli_determinism(), t);

    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
