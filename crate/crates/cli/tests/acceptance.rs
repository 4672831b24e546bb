//! Acceptance checks. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use attrforge::builder::{build_e0, build_time_interpolated_e, measure_attraction};
use attrforge::capacity::{unit_ball_packing, volume_upper_bound, NormPair, DEFAULT_PACKING_BUDGET};
use attrforge::certifiers::{
    bound_ladyzhenskaya_hilbert, bound_squeezing, bound_squeezing_volume, certify_c1, certify_ladyzhenskaya,
    derive_quasi_from_squeezing, derive_squeezing_from_ladyzhenskaya, estimate_holder, jacobian_agreement,
    optimize_sigma, validate_ladyzhenskaya, validate_quasi, validate_squeezing, BoundParams, PairData, Projector,
};
use attrforge::covering::{check_covering_condition, fit_certificate, APolicy};
use attrforge::metric::{box_counting_dimension, exact_cover_number, greedy_net, hausdorff_distance_onesided};
use attrforge::semigroup::uniform_box;
use attrforge::{
    list_systems, make_system, AttractorApproximation, FinitePointSet, MetricTag, ParamValue, Params, ScalarField,
};
use serde_json::Value;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn qs() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn geom(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64)).collect()
}

fn scalars(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), ParamValue::Scalar(*v))).collect()
}

struct Run {
    code: i32,
    stderr: String,
}

fn attrforge(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_attrforge"))
        .args(args)
        .env_remove("ATTRFORGE_SEED")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn stage(args: &[&str]) -> Result<(), String> {
    let r = attrforge(args);
    ensure(r.code == 0, || format!("`{}` exited {}: {}", args.join(" "), r.code, r.stderr.trim()))
}

fn json(path: &Path) -> Result<Value, String> {
    let s = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&s).map_err(|e| format!("{}: {e}", path.display()))
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().expect("tempdir")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

// x -> x/2 on [-1, 1].
fn contraction() -> Check {
    let t0 = Instant::now();
    let sys = make_system("affine_contraction", &scalars(&[("eta", 0.5), ("c", 0.0)])).map_err(|e| e.to_string())?;
    let b = FinitePointSet::grid_1d(-1.0, 1.0, 101).unwrap();
    let cert = fit_certificate(&sys, &b, 1.0, 1, 20, &qs(), APolicy::Default).map_err(|e| e.to_string())?;
    let admits = check_covering_condition(&sys, &b, 1.0, cert.a, 0.5, 1.0, 1.0, 1, 20)
        .map_err(|e| e.to_string())?
        .certificate()
        .is_some();
    ensure(admits, || format!("(q, h) = (0.5, 1) rejected at a = {}", cert.a))?;
    ensure(cert.dim_bound() == 0.0, || format!("dim_bound {}", cert.dim_bound()))?;
    let approx = build_e0(&sys, &b, &cert, 20).map_err(|e| e.to_string())?;
    let zero = FinitePointSet::from_scalars(&[0.0]).unwrap();
    let d0 = hausdorff_distance_onesided(&approx.e0, &zero).unwrap();
    ensure(d0 <= 0.5, || format!("dist(E0, {{0}}) = {d0}"))?;
    let xi = measure_attraction(&sys, &b, &approx.e0, 1.0, 20).map_err(|e| e.to_string())?.xi_hat;
    ensure(xi >= 0.62, || format!("xi_hat {xi} < 0.62"))?;
    let el = t0.elapsed();
    ensure(el < Duration::from_secs(1), || format!("took {el:?}"))?;
    Ok(format!("a = {:.3}, dim_bound = 0, dist(E0,{{0}}) = {d0:.3e}, xi_hat = {xi:.4}, {el:.2?}", cert.a))
}

// Recursion invariants from CLI-built artifacts, re-derived through the library.
fn recursion_invariants() -> Check {
    let root = tmp();
    let mut lines = Vec::new();
    for entry in list_systems() {
        let name = entry.name.as_str();
        let run = root.path().join(name);
        for st in ["absorb", "cover", "build"] {
            stage(&[st, "--system", name, "--run", s(&run), "--horizon", "300"])?;
        }
        let sys = make_system(name, &Params::new()).map_err(|e| e.to_string())?;
        let b = attrforge::io::load_csv(&run.join("B.csv"), MetricTag::Euclidean).map_err(|e| e.to_string())?;
        let approx = AttractorApproximation::read_dir(&run.join("E0")).map_err(|e| format!("{name}: {e}"))?;
        let rep = approx.verify_invariants(&sys, &b).map_err(|e| e.to_string())?;
        let ks: Vec<usize> = rep.per_k.iter().map(|c| c.k).collect();
        let want: Vec<usize> = (approx.k0..=approx.k_max).collect();
        ensure(ks == want, || format!("{name}: generations {ks:?}, expected {want:?}"))?;
        ensure(rep.recursion_holds(), || format!("{name}: recursion not bit-exact"))?;
        ensure(rep.cardinality_holds(), || format!("{name}: |Q_k| above the (b, h) allowance"))?;
        ensure(rep.coverage_holds(), || {
            let c = rep.per_k.iter().find(|c| c.distance > c.radius).unwrap();
            format!("{name}: k = {} distance {} > a q^k = {}", c.k, c.distance, c.radius)
        })?;
        let stored = json(&run.join("invariants.json"))?;
        ensure(stored["recursion_holds"] == true && stored["coverage_holds"] == true, || {
            format!("{name}: stored invariants disagree")
        })?;
        lines.push(format!("{name} k={}..{}", approx.k0, approx.k_max));
    }
    Ok(lines.join(", "))
}

// Net monotonicity in eps and exact <= greedy.
fn packing_covering() -> Check {
    let t0 = Instant::now();
    let (mut exact_cases, mut exact_time) = (0, Duration::ZERO);
    for i in 0..200u64 {
        let dim = 1 + (i % 4) as usize;
        let n = if i % 2 == 0 { 3 + (i / 2 % 10) as usize } else { 20 + (i % 41) as usize };
        let g = uniform_box(&vec![0.0; dim], 1.0, n, 1000 + i).unwrap();
        let eps = g.diameter() * (0.05 + 0.45 * ((i * 7) % 10) as f64 / 9.0);
        let fine = greedy_net(&g, eps, None).map_err(|e| e.to_string())?;
        let coarse = greedy_net(&g, 2.0 * eps, None).map_err(|e| e.to_string())?;
        ensure(coarse.count <= fine.count, || {
            format!("cloud {i}: count(2ε) = {} > count(ε) = {}", coarse.count, fine.count)
        })?;
        if g.len() <= 12 {
            let te = Instant::now();
            let exact = exact_cover_number(&g, eps).map_err(|e| e.to_string())?;
            exact_time += te.elapsed();
            exact_cases += 1;
            ensure(exact <= fine.count, || format!("cloud {i}: exact {exact} > greedy {}", fine.count))?;
        }
    }
    ensure(exact_time < Duration::from_secs(30), || format!("exact oracle took {exact_time:?}"))?;
    Ok(format!(
        "200 clouds, {exact_cases} exact instances, oracle {exact_time:.2?}, total {:.2?}",
        t0.elapsed()
    ))
}

// Ladyzhenskaya -> squeezing -> quasi on diag(0.9, 0.3).
fn implication_chain() -> Check {
    let sys = make_system("diag_linear", &Params::new()).map_err(|e| e.to_string())?;
    let b = FinitePointSet::grid_cube(-1.0, 1.0, 9, 2).unwrap();
    let data = PairData::sample(&sys, b.clone(), 1.0, 2000, 11, true).map_err(|e| e.to_string())?;
    let holdout = PairData::sample(&sys, b, 1.0, 2000, 12, false).map_err(|e| e.to_string())?;
    let lady = certify_ladyzhenskaya(&data, Projector::coordinate(2, &[0]).unwrap()).map_err(|e| e.to_string())?;
    ensure((lady.eta - 0.3).abs() <= 1e-12 && (lady.kappa - 0.9).abs() <= 1e-12, || {
        format!("(η, κ) = ({}, {})", lady.eta, lady.kappa)
    })?;
    let sq = derive_squeezing_from_ladyzhenskaya(&lady);
    ensure(sq.mu == 1.0, || format!("μ = {}", sq.mu))?;
    let quasi = derive_quasi_from_squeezing(&sq);
    let mut fr = Vec::new();
    for (label, d) in [("fit", &data), ("holdout", &holdout)] {
        for (kind, rep) in [
            ("ladyzhenskaya", validate_ladyzhenskaya(d, &lady)),
            ("squeezing", validate_squeezing(d, &sq)),
            ("quasi", validate_quasi(d, &quasi)),
        ] {
            ensure(rep.pass_fraction() == 1.0, || {
                format!("{kind} on {label} pairs: pass fraction {}", rep.pass_fraction())
            })?;
        }
        fr.push(format!("{label} {}", d.len()));
    }
    Ok(format!("η = 0.3, κ = 0.9, μ = 1; 100% of pairs ({})", fr.join(", ")))
}

// Bound hierarchy and spot values.
fn bound_hierarchy() -> Check {
    let r = ScalarField::Real;
    for i in 0..20 {
        let eta = 0.95 * i as f64 / 20.0;
        for j in 1..=20 {
            let sigma = (1.0 - eta) * j as f64 / 21.0;
            let lh = bound_ladyzhenskaya_hilbert(1, eta, 0.9, sigma, r).unwrap();
            let sq = bound_squeezing(1, eta, 1.0, 0.9, sigma, 1.0, r).unwrap();
            let vol = bound_squeezing_volume(1, eta, 1.0, 0.9, sigma, 1.0, r).unwrap();
            ensure(lh <= sq, || format!("η={eta} σ={sigma}: LH {lh} > SQ {sq}"))?;
            ensure(sq <= vol, || format!("η={eta} σ={sigma}: {sq} > {vol}"))?;
        }
    }
    let lh = bound_ladyzhenskaya_hilbert(1, 0.3, 0.9, 0.5, r).unwrap();
    let sq = bound_squeezing(1, 0.3, 1.0, 0.9, 0.5, 1.0, r).unwrap();
    // Independent closed-form evaluations, frozen.
    let (lh_ref, sq_ref) = (2.829, 6.839);
    ensure((lh - lh_ref).abs() < 5e-4, || format!("LH spot {lh}"))?;
    ensure((sq - sq_ref).abs() < 5e-4, || format!("SQ spot {sq}"))?;
    Ok(format!("400 grid points ordered; spot LH {lh:.4}, SQ {sq:.4}"))
}

// Packing of the Euclidean unit disc.
fn capacity() -> Check {
    let pk = unit_ball_packing(&NormPair::euclidean(2), 1.0, DEFAULT_PACKING_BUDGET, 0).map_err(|e| e.to_string())?;
    let ub = volume_upper_bound(1.0, 1.0, 2).unwrap();
    ensure(ub == 9.0, || format!("volume bound at ε = 1 is {ub}"))?;
    ensure(pk.count >= 7, || format!("packing reached only {}", pk.count))?;
    ensure(pk.count as f64 <= ub, || format!("packing {} exceeds {ub}", pk.count))?;
    let half = volume_upper_bound(1.0, 0.5, 2).unwrap();
    ensure(half == 25.0, || format!("volume bound at ε = 0.5 is {half}"))?;
    Ok(format!("packing {} <= 9, volume(1, 0.5, 2) = 25", pk.count))
}

// Hénon through the CLI.
fn henon() -> Check {
    let t0 = Instant::now();
    let dir = tmp();
    let run = dir.path();
    for st in ["absorb", "cover"] {
        stage(&[st, "--system", "henon", "--run", s(run)])?;
    }
    stage(&["dim", "--system", "henon", "--run", s(run), "--eps-hi", "0.1", "--eps-lo", "0.005"])?;
    let absorb = json(&run.join("absorb.json"))?;
    ensure(absorb["status"] == "found", || format!("absorb status {}", absorb["status"]))?;
    let cert = json(&run.join("certificate.json"))?;
    let dim_bound = cert["dim_bound"].as_f64().unwrap_or(f64::NAN);
    ensure(cert["status"] == "certified" && dim_bound.is_finite(), || format!("certificate {}", cert["status"]))?;
    let slope = json(&run.join("dim.json"))?["slope"].as_f64().unwrap_or(f64::NAN);
    ensure((slope - 1.26).abs() <= 0.1, || format!("box slope {slope}"))?;
    ensure(slope <= dim_bound + 0.3, || format!("slope {slope} > dim_bound {dim_bound} + 0.3"))?;
    let el = t0.elapsed();
    ensure(el < Duration::from_secs(120), || format!("took {el:?}"))?;
    Ok(format!(
        "radius {:.3}, dim_bound {dim_bound:.4}, slope {slope:.4}, {el:.2?}",
        absorb["estimate"]["radius"].as_f64().unwrap_or(f64::NAN)
    ))
}

// C1 certifier on diag(0.9, 0.05).
fn c1() -> Check {
    let p: Params = [("diag".to_string(), ParamValue::List(vec![0.9, 0.05]))].into_iter().collect();
    let sys = make_system("diag_linear", &p).map_err(|e| e.to_string())?;
    let b = FinitePointSet::grid_cube(-1.0, 1.0, 5, 2).unwrap();
    let cert = certify_c1(&sys, &b, 1.0, 0.1).map_err(|e| e.to_string())?;
    ensure(cert.n == 1, || format!("ν̂ = {}", cert.n))?;
    let opt = optimize_sigma(
        &BoundParams::C1 {
            n: 1,
            m: 0.9,
            lambda: 0.1,
            field: ScalarField::Real,
        },
        200,
    )
    .map_err(|e| e.to_string())?;
    ensure(opt.bound.is_finite(), || format!("bound {}", opt.bound))?;
    ensure(opt.sigma > 0.0 && opt.sigma < 0.6, || format!("σ* = {}", opt.sigma))?;
    let fd = jacobian_agreement(&sys, &b, 1.0)
        .map_err(|e| e.to_string())?
        .ok_or("no analytic Jacobian to compare")?;
    ensure(fd < 1e-5, || format!("FD relative error {fd}"))?;
    Ok(format!("ν̂ = 1, M = {}, σ* = {:.4}, bound {:.4}, FD error {fd:.2e}", cert.m, opt.sigma, opt.bound))
}

// Time-interpolated set of the linear flow.
fn composite() -> Check {
    let sys = make_system("linear_flow", &Params::new()).map_err(|e| e.to_string())?;
    let b = FinitePointSet::grid_1d(-1.0, 1.0, 41).unwrap();
    let times: Vec<f64> = (0..=40).map(|i| 1.0 + i as f64 * 0.025).collect();
    let nu = estimate_holder(&sys, &b, &times).map_err(|e| e.to_string())?.nu;
    ensure((0.9..=1.1).contains(&nu), || format!("ν̂ = {nu}"))?;
    let cert = fit_certificate(&sys, &b, 1.0, 1, 10, &qs(), APolicy::Default).map_err(|e| e.to_string())?;
    let approx = build_e0(&sys, &b, &cert, 10).map_err(|e| e.to_string())?;
    let p_grid: Vec<f64> = (0..=100).map(|i| 1.0 + i as f64 * 0.01).collect();
    let e = build_time_interpolated_e(&sys, &approx.e0, 1.0, 1, &p_grid).map_err(|e| e.to_string())?;
    let diam = e.diameter();
    let slope = box_counting_dimension(&e, &geom(diam / 4.0, diam / 200.0, 8))
        .map_err(|e| e.to_string())?
        .slope;
    let bound = 1.0 / nu + cert.dim_bound() + 0.3;
    ensure(slope <= bound, || format!("slope {slope} > {bound}"))?;
    Ok(format!("ν̂ = {nu:.4}, dim_bound = {}, |E| = {}, slope {slope:.4} <= {bound:.4}", cert.dim_bound(), e.len()))
}

const SMALL: &[&str] = &[
    "--probes", "30", "--horizon", "200", "--max-points", "300", "--kmax", "10", "--pairs", "400",
    "--burn-in", "200", "--keep", "1000", "--dim-seeds", "4",
];

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Runs with `--verify-repro`; true when the stage reported a violation.
fn repro_run(args: &[&str], threads: &str) -> Result<bool, String> {
    let mut a: Vec<&str> = args.to_vec();
    a.extend(["--verify-repro", "--threads", threads]);
    let r = attrforge(&a);
    ensure(r.code == 0 || r.code == 2, || format!("`{}` exited {}: {}", a.join(" "), r.code, r.stderr.trim()))?;
    ensure(r.code == 2 || r.stderr.contains("bit-identical") || a[0] == "systems", || {
        format!("`{}` printed no repro confirmation", a.join(" "))
    })?;
    Ok(r.code == 2)
}

// --verify-repro on every pipeline, at one and four threads.
fn reproducibility() -> Check {
    let root = tmp();
    let mut stages = 0;
    let mut files = 0;
    let mut violations = Vec::new();
    for threads in ["1", "4"] {
        let base = root.path().join(format!("t{threads}"));
        repro_run(&["systems", "--out", s(&base.join("catalog"))], threads)?;
        let cap = base.join("capacity");
        repro_run(
            &["capacity", "--run", s(&cap), "--n", "1,2", "--eps", "1,0.5", "--packing-budget", "4000"],
            threads,
        )?;
        stages += 2;
        for entry in list_systems() {
            let run = base.join(&entry.name);
            for st in ["absorb", "cover", "build", "certify", "bounds", "dim", "report"] {
                let mut a = vec![st, "--system", entry.name.as_str(), "--run", s(&run)];
                a.extend_from_slice(SMALL);
                if repro_run(&a, threads)? {
                    violations.push(format!("{}/{st}", entry.name));
                }
                stages += 1;
            }
        }
    }
    let (one, four) = (tree(&root.path().join("t1")), tree(&root.path().join("t4")));
    ensure(one.keys().eq(four.keys()), || "file lists differ between 1 and 4 threads".into())?;
    for (p, bytes) in &one {
        ensure(four[p] == *bytes, || format!("{} differs between 1 and 4 threads", p.display()))?;
        files += 1;
    }
    violations.sort();
    violations.dedup();
    Ok(format!(
        "{stages} stage runs verified, {files} files identical across thread counts; violations reported: {}",
        if violations.is_empty() { "none".to_string() } else { violations.join(", ") }
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("contraction ground truth", contraction),
        ("recursion invariants", recursion_invariants),
        ("packing/covering duality", packing_covering),
        ("implication chain", implication_chain),
        ("bound hierarchy", bound_hierarchy),
        ("capacity sanity", capacity),
        ("henon end-to-end", henon),
        ("c1 certifier", c1),
        ("time-interpolated composite", composite),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let el = t0.elapsed();
        match res {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg} [{el:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg} [{el:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
