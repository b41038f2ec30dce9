//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::f64::consts::SQRT_2;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use gkp_breed::breeding::{binomial_state, breed_step, yield_estimate, BinomialSpec, ProtocolConfig};
use gkp_breed::metrics::{gkp_target, no_error_probability, GkpTarget, Quadrature};
use gkp_breed::optics::{make_cat, outcome_density};
use gkp_breed::oracle::{equal_variance_error, general_outcome_error, pascal_error, spacing_error};
use gkp_breed::quadrature::Integrator;
use gkp_breed::{WaveFunctionRecord, SQRT_PI};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).expect("config");
    p.to_str().expect("utf-8 path").to_owned()
}

fn run_ok(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = gkpb(args);
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(format!("gkpb {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn columns(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        worst = worst.max(equal_variance_error(&mut rng).map_err(err)?);
    }
    ensure(worst <= 1e-12, format!("max relative error {worst:.3e}"))?;
    Ok(format!("100 pairs, max relative error {worst:.2e}"))
}

fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for m in 1..=3u32 {
        let beta = binomial_state(BinomialSpec::lattice(m, 1.9)).map_err(err)?;
        let bred = breed_step(&beta, &beta, 0.0, 0.0).map_err(err)?;
        ensure(bred.len() == (1usize << (m + 1)) + 1, format!("m={m}: {} terms", bred.len()))?;
        let e = pascal_error(&bred, m + 1).map_err(err)?;
        let s = spacing_error(&bred, SQRT_2 * SQRT_PI);
        ensure(e <= 1e-12, format!("m={m}: coefficient error {e:.3e}"))?;
        ensure(s <= 1e-12, format!("m={m}: spacing error {s:.3e}"))?;
        worst = worst.max(e).max(s);
    }
    Ok(format!("rows 4, 8, 16 reproduced, max error {worst:.2e}"))
}

fn criterion_3() -> Check {
    let csv = run_ok(&["gkp", "--delta", "0.15", "--kappa", "0.15", "--grid", "-8,8,1601"])?;
    let rows = read_csv(&String::from_utf8(csv).map_err(err)?);
    let x = columns(&rows, 0);
    let abs2 = columns(&rows, 3);
    let step = x[1] - x[0];
    let peaks = local_maxima(&abs2, 1e-6);
    let mut heights = Vec::new();
    for s in -2i32..=2 {
        let centre = 2.0 * s as f64 * SQRT_PI;
        let j = *peaks
            .iter()
            .find(|&&j| (x[j] - centre).abs() <= step)
            .ok_or_else(|| format!("no local maximum within one step of {centre:.4}"))?;
        heights.push((s, gaussian_peak(&x, &abs2, j).1.sqrt()));
    }
    let centre = heights[2].1;
    let mut worst: f64 = 0.0;
    for &(s, h) in &heights {
        let a = 2.0 * s as f64 * 0.15 * SQRT_PI;
        worst = worst.max((h / centre - (-0.5 * a * a).exp()).abs());
    }
    ensure(worst <= 1e-6, format!("peak ratio error {worst:.3e}"))?;
    Ok(format!("maxima at 2s√π for |s| ≤ 2, ratio error {worst:.2e}"))
}

fn criterion_4(dir: &Path) -> Check {
    let cfg = write_config(dir, "m1.json", r#"{"m_target": 1, "zeta": 1.9}"#);
    let out = dir.join("fig2");
    run_ok(&["breed", "--config", &cfg, "--policy", "exact-zero", "--out", out.to_str().unwrap()])?;
    let rows = read_csv_file(&out.join("state.csv"));
    let x = columns(&rows, 0);
    let abs2 = columns(&rows, 3);
    let step = x[1] - x[0];
    let peaks = local_maxima(&abs2, 1e-3);
    ensure(peaks.len() == 3, format!("{} peaks", peaks.len()))?;
    let mut h = Vec::new();
    for (&j, s) in peaks.iter().zip([-1.0, 0.0, 1.0]) {
        let (loc, height) = gaussian_peak(&x, &abs2, j);
        ensure((x[j] - 2.0 * s * SQRT_PI).abs() <= step, format!("peak at {}", x[j]))?;
        ensure((loc - 2.0 * s * SQRT_PI).abs() <= 1e-6, format!("interpolated peak at {loc}"))?;
        h.push(height.sqrt());
    }
    let ratio_err = (h[1] / h[0] - 2.0).abs().max((h[1] / h[2] - 2.0).abs() / 2.0).max((h[0] / h[2] - 1.0).abs());
    ensure(ratio_err <= 1e-9, format!("height ratio error {ratio_err:.3e}"))?;

    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).map_err(err)?).map_err(err)?;
    let db = summary["zeta_db"].as_f64().ok_or("zeta_db missing")?;
    ensure(format!("{db:.2}") == "-16.50", format!("zeta reported as {db} dB"))?;

    let density = run_ok(&["density", "--config", &cfg])?;
    let rows = read_csv(&String::from_utf8(density).map_err(err)?);
    let r = columns(&rows, 0);
    let d = columns(&rows, 1);
    let integral = trapezoid(&r, &d);
    ensure((integral - 1.0).abs() <= 1e-4, format!("density integral {integral}"))?;
    let odd = (0..d.len() / 2).map(|j| (d[j] - d[d.len() - 1 - j]).abs()).fold(0.0, f64::max);
    ensure(odd <= 1e-10, format!("density asymmetry {odd:.3e}"))?;
    Ok(format!("1:2:1 within {ratio_err:.1e}, ∫density − 1 = {:.1e}, {db:.2} dB", integral - 1.0))
}

fn criterion_5(dir: &Path) -> Check {
    let cfg = write_config(dir, "m3.json", r#"{"m_target": 3, "zeta": 1.9}"#);
    let out = dir.join("fig3");
    run_ok(&["breed", "--config", &cfg, "--policy", "exact-zero", "--out", out.to_str().unwrap()])?;
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).map_err(err)?).map_err(err)?;
    ensure(summary["cats_consumed"] == 8, format!("cats consumed {}", summary["cats_consumed"]))?;
    let alpha = summary["cat_alpha"].as_f64().ok_or("cat_alpha missing")?;
    let expect = 2.0 * SQRT_PI * 1.9f64.exp();
    ensure((alpha / expect - 1.0).abs() <= 1e-12, format!("alpha {alpha} vs {expect}"))?;

    let record: WaveFunctionRecord = serde_json::from_str(&fs::read_to_string(out.join("terms.json")).map_err(err)?).map_err(err)?;
    let psi = gkp_breed::WaveFunction::from_record(&record).map_err(err)?;
    let terms = psi.terms();
    ensure(terms.len() == 9, format!("{} terms", terms.len()))?;
    let (first, last, mid) = (terms[0], terms[8], terms[4]);
    ensure((first.mean().re + 8.0 * SQRT_PI).abs() <= 1e-12, format!("outer peak at {}", first.mean()))?;
    ensure((last.mean().re - 8.0 * SQRT_PI).abs() <= 1e-12, format!("outer peak at {}", last.mean()))?;
    let ratio = first.coeff().re / mid.coeff().re;
    ensure((ratio * 70.0 - 1.0).abs() <= 1e-12, format!("outer/centre ratio {ratio}"))?;
    ensure((last.coeff().re / mid.coeff().re * 70.0 - 1.0).abs() <= 1e-12, "asymmetric outer peaks")?;
    Ok(format!("8 cats, α = 2√π e^ζ, outer/centre = 1/{:.10}", 1.0 / ratio))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        worst = worst.max(general_outcome_error(&mut rng).map_err(err)?);
    }
    ensure(worst <= 1e-8, format!("max pointwise relative error {worst:.3e}"))?;
    Ok(format!("20 random cases, max pointwise relative error {worst:.2e}"))
}

fn criterion_7() -> Check {
    let psi = gkp_target(&GkpTarget::new(0.15, 0.15, 0).map_err(err)?).map_err(err)?;
    let px = no_error_probability(&psi, Quadrature::X).map_err(err)?;
    let pp = no_error_probability(&psi, Quadrature::P).map_err(err)?;
    ensure(px * pp >= 0.98, format!("product {}", px * pp))?;
    Ok(format!("P_x = {px:.6}, P_p = {pp:.6}, product {:.6}", px * pp))
}

fn criterion_8() -> Check {
    for (m, trials) in [(1u32, 200), (2, 100), (3, 25)] {
        let mut cfg = ProtocolConfig::new(m, 1.9);
        cfg.window_epsilon = 1e9;
        let stats = yield_estimate(&cfg, trials).map_err(err)?;
        ensure(stats.expected_cats == (1u64 << m) as f64, format!("m={m}: expected cats {}", stats.expected_cats))?;
        ensure(stats.acceptance == 1.0, format!("m={m}: acceptance {}", stats.acceptance))?;
    }
    let mut cfg = ProtocolConfig::new(1, 1.9);
    cfg.window_epsilon = 0.1;
    cfg.seed = 8;
    let stats = yield_estimate(&cfg, 10_000).map_err(err)?;
    let cat = make_cat(cfg.cat_spec().map_err(err)?).normalize().map_err(err)?;
    let mass = Integrator::new(0.0, 1e-12)
        .integrate_real(|r| outcome_density(&cat, &cat, r).unwrap_or(f64::NAN), -0.1, 0.1, &[0.0])
        .value
        .re;
    let sigma = stats.acceptance_std_error;
    let z = (stats.acceptance - mass) / sigma;
    ensure(z.abs() <= 3.0, format!("acceptance {} vs {mass} ({z:.2}σ)", stats.acceptance))?;
    Ok(format!("cats = 2^m exactly; acceptance {:.5} vs ∫density {mass:.5} ({z:+.2}σ)", stats.acceptance))
}

fn outputs_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.file_name().is_some_and(|n| n != "manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("file")))
        .collect();
    files.sort();
    files
}

fn criterion_9(dir: &Path) -> Check {
    let window = write_config(dir, "w.json", r#"{"m_target": 2, "zeta": 1.9, "window_epsilon": 0.5, "seed": 99}"#);
    let sample = write_config(dir, "s.json", r#"{"m_target": 1, "zeta": 1.9, "window_epsilon": 0.1, "seed": 99}"#);
    let mut compared = 0;
    for policy in ["window", "sample", "exact-zero"] {
        let a = dir.join(format!("{policy}-a"));
        let b = dir.join(format!("{policy}-b"));
        for o in [&a, &b] {
            run_ok(&["breed", "--config", &window, "--policy", policy, "--out", o.to_str().unwrap()])?;
        }
        let (fa, fb) = (outputs_of(&a), outputs_of(&b));
        ensure(fa == fb, format!("breed --policy {policy} outputs differ"))?;
        compared += fa.len();
    }
    let a = dir.join("sample-a");
    let b = dir.join("sample-b");
    for o in [&a, &b] {
        run_ok(&["sample", "--config", &sample, "--trials", "2000", "--draws", "100", "--out", o.to_str().unwrap()])?;
    }
    let (fa, fb) = (outputs_of(&a), outputs_of(&b));
    ensure(fa == fb, "sample outputs differ")?;
    compared += fa.len();
    for args in [vec!["gkp"], vec!["density", "--config", &sample]] {
        ensure(run_ok(&args)? == run_ok(&args)?, format!("{args:?} output differs"))?;
        compared += 1;
    }
    Ok(format!("{compared} CSV/JSON outputs byte-identical across runs"))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path();
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Check>)> = vec![
        ("1 equal-variance reduction", Duration::from_secs(1), Box::new(criterion_1)),
        ("2 Pascal/Vandermonde doubling", Duration::from_secs(1), Box::new(criterion_2)),
        ("3 GKP target curve", Duration::from_secs(1), Box::new(criterion_3)),
        ("4 first binomial state and outcome density", Duration::from_secs(5), Box::new(move || criterion_4(dir))),
        ("5 third binomial state from eight cats", Duration::from_secs(10), Box::new(move || criterion_5(dir))),
        ("6 general outcome vs quadrature", Duration::from_secs(60), Box::new(criterion_6)),
        ("7 shift-error window proxy", Duration::from_secs(1), Box::new(criterion_7)),
        ("8 yield statistics", Duration::from_secs(60), Box::new(criterion_8)),
        ("9 determinism", Duration::from_secs(60), Box::new(move || criterion_9(dir))),
    ];
    let mut failures = 0;
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(detail) if elapsed <= *budget => (true, detail),
            Ok(detail) => (false, format!("{detail}; took {elapsed:.2?}, budget {budget:.0?}")),
            Err(e) => (false, e),
        };
        failures += !ok as u32;
        println!("{} criterion {name} [{elapsed:.2?}]: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() as u32 - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
