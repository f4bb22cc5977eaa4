//! Acceptance suite. Every criterion prints one PASS/FAIL line; run with
//! `cargo test -p nuclear-scale --test acceptance -- --nocapture` to see them.

use std::time::Instant;

use nuclear_scale::cli::{cmd_verify_cf, cmd_verify_moments, GlobalArgs};
use nuclear_scale::gaussian::{
    cf_reference, dual_norm_tail_probability, empirical_char_functional, moment_estimate, SampleBatch,
};
use nuclear_scale::spaces::{p_norm, pairing, CoeffVector};
use nuclear_scale::spectrum::{hs_inclusion_norm, validate_spectrum, Spectrum, TruncationPolicy};
use nuclear_scale::topology::{classify_dual_convergence, rho_metric, DualSequence, IndexRule, Scale, VerdictKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn half() -> Spectrum {
    Spectrum::geometric(0.5, 0.5)
}

/// Sparse vector with dyadic entries `k/8`, so sums and differences are exact.
fn dyadic_vector(rng: &mut impl Rng, max_index: usize) -> CoeffVector {
    let len = rng.random_range(0..=6);
    (0..len)
        .map(|_| (rng.random_range(0..max_index), f64::from(rng.random_range(-64i32..=64)) / 8.0))
        .collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1_characteristic_functional() -> Outcome {
    let start = Instant::now();
    let batch = SampleBatch::generate(2, 1_000_000, 42).map_err(|e| e.to_string())?;
    let xis = [CoeffVector::delta(0), &CoeffVector::delta(0) + &CoeffVector::delta(1)];
    let mut worst: f64 = 0.0;
    for xi in &xis {
        for t in [0.0, 0.5, 1.0, 2.0] {
            let est = empirical_char_functional(&batch, xi, t).map_err(|e| e.to_string())?;
            let reference = cf_reference(xi, t);
            let err = (est.re.value - reference).abs();
            worst = worst.max(err);
            ensure(err <= 4.0 * est.re.std_error, || {
                format!("t={t}: |Re − ref| = {err:.3e} > 4·se = {:.3e}", 4.0 * est.re.std_error)
            })?;
            ensure(err <= 5e-3, || format!("t={t}: |Re − ref| = {err:.3e} > 5e-3"))?;
            ensure(est.im.value.abs() <= 4.0 * est.im.std_error, || {
                format!("t={t}: |Im| = {:.3e} > 4·se = {:.3e}", est.im.value.abs(), 4.0 * est.im.std_error)
            })?;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= 60.0, || format!("runtime {elapsed:.1}s > 60s"))?;
    Ok(format!("max |Re − ref| = {worst:.2e}, runtime {elapsed:.2}s"))
}

fn ac2_moments() -> Outcome {
    let s = half();
    let batch = SampleBatch::generate(40, 100_000, 42).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (p, limit) in [(1, 1.0 / 3.0), (2, 1.0 / 15.0)] {
        let m = moment_estimate(&batch, p, &s).map_err(|e| e.to_string())?;
        ensure(m.pass(), || format!("p={p}: {m:?}"))?;
        ensure(m.tail_bound < 1e-20, || format!("p={p}: tail bound {:.2e}", m.tail_bound))?;
        ensure((m.reference + m.tail_bound - limit).abs() <= 1e-15, || {
            format!("p={p}: reference {} does not approach {limit}", m.reference)
        })?;
        lines.push(format!(
            "p={p}: {:.5} ± {:.1e} vs {:.5}",
            m.estimate.value, m.estimate.std_error, m.reference
        ));
    }
    Ok(lines.join("; "))
}

fn ac3_concentration() -> Outcome {
    let s = half();
    let batch = SampleBatch::generate(40, 100_000, 42).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for c in [1.0, 10.0, 100.0] {
        let tail = dual_norm_tail_probability(&batch, 1, c, &s).map_err(|e| e.to_string())?;
        ensure(tail.pass, || format!("c={c}: {tail:?}"))?;
        lines.push(format!("c={c}: P̂={:.4} ≤ {:.4}", tail.estimate.value, tail.markov_bound));
    }
    Ok(lines.join("; "))
}

fn ac4_nuclearity() -> Outcome {
    let s = half();
    let policy = TruncationPolicy::new(40, 1e-12, 6).unwrap();
    validate_spectrum(&s, &policy).map_err(|e| e.to_string())?;
    let target = (1.0f64 / 3.0).sqrt();
    for p in -4..=4 {
        let hs = hs_inclusion_norm(&s, p + 1, p, &policy).map_err(|e| e.to_string())?;
        ensure((hs.value - target).abs() <= 1e-12 * target, || format!("hs({}, {p}) = {}", p + 1, hs.value))?;
    }
    let target = (1.0f64 / 15.0).sqrt();
    let hs = hs_inclusion_norm(&s, 2, 0, &policy).map_err(|e| e.to_string())?;
    ensure((hs.value - target).abs() <= 1e-12 * target, || format!("hs(2, 0) = {}", hs.value))?;
    Ok("hs(p+1,p) = √(1/3) for p ∈ −4..=4, hs(2,0) = √(1/15)".into())
}

fn ac5_metric() -> Outcome {
    let eps = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ball_hits = 0usize;
    let radii = [0.01, 0.1, 1.0];
    for s in [half(), Spectrum::power(1.0, 0.75)] {
        for i in 0..10_000 {
            let (u, v, w) = (dyadic_vector(&mut rng, 12), dyadic_vector(&mut rng, 12), dyadic_vector(&mut rng, 12));
            let uv = rho_metric(&u, &v, &s, eps).value;
            let vw = rho_metric(&v, &w, &s, eps).value;
            let uw = rho_metric(&u, &w, &s, eps).value;
            // Summation rounding only; every term is an exact nonnegative bound otherwise.
            ensure(uw <= uv + vw + 1e-15, || format!("triangle #{i}: {uw} > {uv} + {vw}"))?;
            ensure(uv < 1.0 && vw < 1.0 && uw < 1.0, || format!("ρ ≥ 1 at #{i}"))?;
            let shifted = rho_metric(&(&u + &w), &(&v + &w), &s, eps).value;
            ensure(shifted == uv, || format!("translation #{i}: {shifted} != {uv}"))?;
            let origin = rho_metric(&(&u - &v), &CoeffVector::zero(), &s, eps).value;
            ensure(origin == uv, || format!("ρ(u,v) != ρ(u−v,0) at #{i}"))?;

            // Ball inclusion: ρ(x,0) < ε ⇒ ‖x‖_p < δ when 2^p ε/(1 − 2^p ε) < δ.
            let x = u.scale(0.5f64.powi(rng.random_range(0..40)));
            let rho_x = rho_metric(&x, &CoeffVector::zero(), &s, eps).value;
            for p in 1..=6i32 {
                for &delta in &radii {
                    let scale = 2f64.powi(p);
                    let e = 0.5 * delta / (scale * (1.0 + delta));
                    ensure(scale * e / (1.0 - scale * e) < delta, || "ε formula".into())?;
                    if rho_x < e {
                        ball_hits += 1;
                        let norm = p_norm(&x, i64::from(p), &s);
                        ensure(norm < delta, || format!("ball #{i}: ρ={rho_x}, ‖x‖_{p}={norm} ≥ {delta}"))?;
                    }
                }
            }
        }
    }
    ensure(ball_hits > 1_000, || format!("only {ball_hits} ball-inclusion cases exercised"))?;
    Ok(format!("2×10⁴ triples, {ball_hits} ball-inclusion cases, zero failures"))
}

fn ac6_scale_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for s in [half(), Spectrum::power(1.0, 0.75)] {
        for i in 0..10_000 {
            let x = dyadic_vector(&mut rng, 16);
            for p in 0..6i64 {
                let (a, b) = (p_norm(&x, p, &s), p_norm(&x, p + 1, &s));
                ensure(a <= b, || format!("#{i}: ‖x‖_{p} = {a} > ‖x‖_{} = {b}", p + 1))?;
                let (a, b) = (p_norm(&x, -p, &s), p_norm(&x, -(p + 1), &s));
                ensure(b <= a, || format!("#{i}: ‖x‖_-{} = {b} > ‖x‖_-{p} = {a}", p + 1))?;
            }
        }
    }
    Ok("2×10⁴ vectors, p ≤ 6, zero failures".into())
}

fn ac7_cauchy_schwarz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in [half(), Spectrum::power(0.9, 0.8)] {
        for i in 0..10_000 {
            let x = dyadic_vector(&mut rng, 8);
            let y = dyadic_vector(&mut rng, 8);
            let p = rng.random_range(0..=4i64);
            let lhs = pairing(&y, &x).abs();
            let rhs = p_norm(&y, -p, &s) * p_norm(&x, p, &s);
            // Equality cases (proportional single-coordinate vectors) can round either way.
            ensure(lhs <= rhs * (1.0 + 8.0 * f64::EPSILON), || format!("#{i}: {lhs} > {rhs}"))?;
        }
    }
    Ok("2×10⁴ pairs, p ≤ 4, zero failures".into())
}

fn ac8_classifier() -> Outcome {
    let s = half();
    let policy = TruncationPolicy::new(40, 1e-12, 6).unwrap();
    let cases = [
        (Scale::InvK, IndexRule::Const0, VerdictKind::ConvergesInDual(0)),
        (Scale::Const, IndexRule::K, VerdictKind::ConvergesInDual(1)),
        (Scale::Pow2, IndexRule::K, VerdictKind::ConvergesInDual(2)),
        (Scale::Linear, IndexRule::Const0, VerdictKind::Divergent),
    ];
    for (scale, index, expected) in cases {
        let seq = DualSequence::scaled_delta(scale, index, 64);
        let verdict = classify_dual_convergence(&seq, &CoeffVector::zero(), &s, &policy, 1e-6)
            .map_err(|e| e.to_string())?;
        ensure(verdict.kind == expected, || {
            format!("{scale:?}·δ_{index:?}: got {:?}, expected {expected:?}", verdict.kind)
        })?;
    }
    Ok("4/4 verdicts match".into())
}

/// Dense `0..N` loop with its own eigenvalue formulas.
fn dense_norm(x: &CoeffVector, p: i64, family: (&str, f64, f64), n: usize) -> f64 {
    let (kind, c, a) = family;
    (0..n)
        .map(|k| {
            let lambda = match kind {
                "geometric" => c * a.powf(k as f64),
                _ => c * ((k + 1) as f64).powf(-a),
            };
            lambda.powf(-2.0 * p as f64) * x.get(k) * x.get(k)
        })
        .sum::<f64>()
        .sqrt()
}

fn ac9_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 64;
    let families = [("geometric", 0.5, 0.5), ("power", 0.9, 0.8), ("geometric", 0.8, 0.9)];
    let mut worst: f64 = 0.0;
    for i in 0..1_000 {
        let family = families[i % families.len()];
        let s = match family.0 {
            "geometric" => Spectrum::geometric(family.1, family.2),
            _ => Spectrum::power(family.1, family.2),
        };
        let len = rng.random_range(1..=10);
        let x: CoeffVector = (0..len)
            .map(|_| (rng.random_range(0..n), rng.random_range(-10.0..10.0)))
            .collect();
        let p = rng.random_range(-6..=6i64);
        let fast = p_norm(&x, p, &s);
        let dense = dense_norm(&x, p, family, n);
        let rel = (fast - dense).abs() / dense.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        ensure(rel <= 1e-12, || format!("#{i} p={p}: {fast} vs {dense} (rel {rel:.2e})"))?;
    }
    Ok(format!("10³ vectors, worst relative error {worst:.2e}"))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn ac10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spectrum = dir.path().join("spectrum.json");
    std::fs::write(&spectrum, r#"{"family": "geometric", "params": {"c": 0.5, "r": 0.5}}"#).unwrap();
    let g = GlobalArgs {
        spectrum: Some(spectrum),
        n: 40,
        pmax: 6,
        eps: 1e-12,
        seed: 42,
        samples: 50_000,
        out: None,
    };
    let run = |threads| {
        in_pool(threads, || {
            let batch = SampleBatch::generate(40, 50_000, 42).unwrap().to_bytes();
            let cf = cmd_verify_cf(&g, r#"{"entries": {"0": 1.0, "1": 1.0}}"#, &[0.0, 0.5, 1.0, 2.0], 0.0).unwrap();
            let moments = cmd_verify_moments(&g, &[1, 2], &[1.0, 10.0, 100.0]).unwrap();
            let json = serde_json::to_string(&(cf.report, moments.report)).unwrap();
            (batch, json)
        })
    };
    let reference = run(1);
    for (label, threads) in [("second run, 1 worker", 1), ("4 workers", 4), ("second run, 4 workers", 4)] {
        let other = run(threads);
        ensure(other.0 == reference.0, || format!("batch bytes differ ({label})"))?;
        ensure(other.1 == reference.1, || format!("JSON reports differ ({label})"))?;
    }
    Ok(format!("{} batch bytes and reports identical across runs and worker counts {{1, 4}}", reference.0.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("AC1 characteristic functional", ac1_characteristic_functional),
        ("AC2 moment identity", ac2_moments),
        ("AC3 concentration (Markov)", ac3_concentration),
        ("AC4 nuclearity", ac4_nuclearity),
        ("AC5 metric suite", ac5_metric),
        ("AC6 scale structure", ac6_scale_structure),
        ("AC7 Cauchy–Schwarz pairing", ac7_cauchy_schwarz),
        ("AC8 convergence classifier", ac8_classifier),
        ("AC9 oracle equivalence", ac9_oracle_equivalence),
        ("AC10 determinism", ac10_determinism),
    ];
    let mut failures = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                println!("[FAIL] {name}: {why}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
