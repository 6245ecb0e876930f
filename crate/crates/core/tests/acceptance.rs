//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Built with `harness = false` so every line is printed
//! even when earlier criteria fail.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blindbeam::beamforming::{cpp_decide, cpp_target, exact_csm_small};
use blindbeam::channel::{
    eval_effective_chain, eval_effective_dense, expand_links_to_tensor, CMatrix, LinkChannelGraph, RadioParams,
};
use blindbeam::conditions::make_single_instance;
use blindbeam::experiment::{fit_rows, run, wilson_interval, ExperimentConfig, ExperimentKind, Overrides};
use blindbeam::phase::{wrap_angle, PhaseAssignment, PhaseGrid};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn config(kind: ExperimentKind, set: &[(&str, &str)]) -> ExperimentConfig {
    let o = Overrides {
        set: set.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        ..Overrides::default()
    };
    ExperimentConfig::load(Some(kind), None, &o).expect("acceptance config is valid")
}

fn cgauss<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn random_graph<R: Rng>(l: usize, n: usize, rng: &mut R) -> LinkChannelGraph {
    let vecs = |rng: &mut R| (0..l).map(|_| (0..n).map(|_| cgauss(rng)).collect()).collect::<Vec<Vec<_>>>();
    let tx = vecs(rng);
    let rx = vecs(rng);
    let between = (0..l)
        .map(|a| (a + 1..l).map(|_| CMatrix::from_fn(n, n, |_, _| cgauss(rng))).collect())
        .collect();
    LinkChannelGraph::new(cgauss(rng), tx, rx, between).expect("well-formed graph")
}

fn random_assignment<R: Rng>(grids: &[PhaseGrid], n: usize, rng: &mut R) -> PhaseAssignment {
    let rows = grids
        .iter()
        .map(|g| (0..n).map(|_| rng.random_range(0..g.levels())).collect())
        .collect();
    PhaseAssignment::new(grids.to_vec(), rows).expect("indices within the grid")
}

/// Chain evaluation against the materialised tensor on random graphs.
fn chain_matches_dense() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let l = rng.random_range(2..=3);
        let n = rng.random_range(1..=4);
        let grids: Vec<PhaseGrid> = (0..l).map(|_| PhaseGrid::new(rng.random_range(2..=6)).unwrap()).collect();
        let graph = random_graph(l, n, &mut rng);
        let phases = random_assignment(&grids, n, &mut rng);
        let chain = eval_effective_chain(&graph, &phases).unwrap();
        let dense = eval_effective_dense(&expand_links_to_tensor(&graph).unwrap(), &phases).unwrap();
        worst = worst.max((chain - dense).norm() / dense.norm().max(f64::MIN_POSITIVE));
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.3e} (tol 1e-10)"))
}

/// Exact single-IRS CSM decisions against CPP, element by element.
fn single_irs_csm_is_cpp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut compared, mut ties, mut mismatches) = (0, 0, 0);
    for _ in 0..50 {
        let n = rng.random_range(1..=4);
        let grid = PhaseGrid::new(rng.random_range(3..=4)).unwrap();
        let tensor = make_single_instance(n, &mut rng).unwrap();
        let res = exact_csm_small(&tensor, &[grid], &RadioParams::unit()).unwrap();
        let direct = tensor.get(&[0]);
        for e in 0..n {
            let reflected = tensor.get(&[e + 1]);
            // a target halfway between two grid points has two valid answers
            let target = cpp_target(direct, reflected);
            let off = wrap_angle(target - grid.phase(grid.nearest(target))).abs();
            if (off - grid.spacing() / 2.0).abs() < 1e-9 {
                ties += 1;
                continue;
            }
            compared += 1;
            if res.assignment.irs(0)[e] != cpp_decide(direct, reflected, grid) {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && compared > 0,
        format!("{mismatches} mismatches over {compared} elements ({ties} ties skipped)"),
    )
}

fn slope_check(set: &[(&str, &str)], method: &str, target: f64, tol: f64) -> Outcome {
    let cfg = config(ExperimentKind::Scaling, set);
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    match fit_rows(&out.records, method) {
        Ok(f) => outcome(
            (f.slope - target).abs() <= tol,
            format!("slope {:.4} (target {target} ± {tol}, r2 {:.4}, {} points)", f.slope, f.r_squared, f.points),
        ),
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn double_irs_quartic() -> Outcome {
    slope_check(
        &[("L", "2"), ("K", "4"), ("N", "8,16,32,64,128"), ("trials", "10"), ("methods", "cpp")],
        "cpp",
        4.0,
        0.3,
    )
}

fn triple_irs_sextic() -> Outcome {
    slope_check(
        &[("L", "3"), ("K", "6"), ("N", "8,16,32"), ("trials", "10"), ("methods", "cpp")],
        "cpp",
        6.0,
        0.5,
    )
}

fn single_irs_quadratic() -> Outcome {
    slope_check(
        &[("L", "1"), ("K", "4"), ("N", "8,16,32,64,128"), ("trials", "10"), ("methods", "cpp")],
        "cpp",
        2.0,
        0.2,
    )
}

fn examples_fixtures() -> Outcome {
    match run(&config(ExperimentKind::Examples, &[])) {
        Ok(out) if out.passed() => outcome(true, format!("{} rows, no failures", out.records.len())),
        Ok(out) => outcome(false, out.failures.join("; ")),
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn lemma_bound() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for l in ["2", "3"] {
        match run(&config(ExperimentKind::LemmaCheck, &[("L", l), ("trials", "100")])) {
            Ok(out) => {
                let held = out.records.iter().filter(|r| r.method == "lemma/holds" && r.metric_value > 0.5).count();
                let total = out.records.iter().filter(|r| r.method == "lemma/holds").count();
                ok &= total == 100 && held == total;
                parts.push(format!("L={l}: {held}/{total}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("L={l}: run failed: {e}"));
            }
        }
    }
    outcome(ok, parts.join(", "))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn finite_t_agreement() -> Outcome {
    let cfg = config(
        ExperimentKind::Compare,
        &[("N", "100"), ("T", "fixed(1000)"), ("trials", "20"), ("methods", "csm"), ("noise_mode", "noiseless")],
    );
    match run(&cfg) {
        Ok(out) => {
            let m: Vec<f64> = out
                .records
                .iter()
                .filter(|r| r.method == "csm-vs-cpp")
                .map(|r| r.metric_value)
                .collect();
            if m.len() != 20 {
                return outcome(false, format!("expected 20 agreement rows, got {}", m.len()));
            }
            let med = median(m);
            outcome(med >= 0.9, format!("median CSM/CPP element agreement {med:.4} (need >= 0.9)"))
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn condition_probabilities() -> Outcome {
    let etas = [0.2, 0.4, 0.6, 0.8, 1.0];
    let cfg = config(
        ExperimentKind::Conditions,
        &[("L", "2"), ("N", "32"), ("trials", "200"), ("eta", "0.2,0.4,0.6,0.8,1.0")],
    );
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let hits = |fam: &str, eta: f64| {
        let label = format!("{fam}@eta={eta:.2}");
        out.records.iter().filter(|r| r.method == label && r.metric_value > 0.5).count()
    };
    let mut problems = Vec::new();
    let mut table = Vec::new();
    for fam in ["c123", "cprime123"] {
        let counts: Vec<usize> = etas.iter().map(|&e| hits(fam, e)).collect();
        table.push(format!("{fam} {counts:?}/200"));
        for w in counts.windows(2) {
            let (lo, _) = wilson_interval(w[0], 200);
            let (_, hi) = wilson_interval(w[1], 200);
            if hi < lo {
                problems.push(format!("{fam} drops from {} to {} beyond the 95% interval", w[0], w[1]));
            }
        }
    }
    for &e in &etas {
        let (c, cp) = (hits("c123", e), hits("cprime123", e));
        if c < cp {
            problems.push(format!("eta={e:.1}: C {c} < C' {cp}"));
        }
    }
    let detail = format!("{}; {}", table.join(", "), if problems.is_empty() { "ok".into() } else { problems.join("; ") });
    outcome(problems.is_empty(), detail)
}

fn benchmark_ordering() -> Outcome {
    let cfg = config(ExperimentKind::Compare, &[("trials", "20"), ("methods", "zero,virtual-single,csm")]);
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let mean = |m: &str| {
        let v: Vec<f64> = out.records.iter().filter(|r| r.method == m).map(|r| r.metric_value).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let (csm, virt, zero) = (mean("csm"), mean("virtual-single"), mean("zero"));
    outcome(
        csm > virt && virt > zero,
        format!("mean boost csm {csm:.4e}, virtual-single {virt:.4e}, zero {zero:.4e}"),
    )
}

fn thread_count_determinism() -> Outcome {
    let cases: [(ExperimentKind, &[(&str, &str)]); 3] = [
        (ExperimentKind::Scaling, &[("N", "8,16,32"), ("trials", "4"), ("methods", "zero,random,csm,cpp")]),
        (ExperimentKind::Compare, &[("N", "16"), ("trials", "4")]),
        (ExperimentKind::Conditions, &[("N", "8"), ("trials", "8")]),
    ];
    for (kind, set) in cases {
        let mut csv = Vec::new();
        for threads in ["1", "8", "8"] {
            let mut s: Vec<(&str, &str)> = set.to_vec();
            s.push(("threads", threads));
            match run(&config(kind, &s)) {
                Ok(out) => csv.push(out.csv()),
                Err(e) => return outcome(false, format!("{kind}: run failed: {e}")),
            }
        }
        if csv.windows(2).any(|w| w[0] != w[1]) {
            return outcome(false, format!("{kind}: CSV differs between runs"));
        }
    }
    outcome(true, "scaling, compare and conditions CSVs identical at 1 and 8 threads")
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    // (label, check, runtime budget)
    let checks: [(&str, Check, Option<Duration>); 11] = [
        ("chain evaluator equals dense tensor sum", chain_matches_dense, Some(Duration::from_secs(5))),
        ("single-IRS exact CSM equals CPP", single_irs_csm_is_cpp, Some(Duration::from_secs(10))),
        ("double-IRS boost slope 4", double_irs_quartic, Some(Duration::from_secs(60))),
        ("triple-IRS boost slope 6", triple_irs_sextic, Some(Duration::from_secs(120))),
        ("single-IRS boost slope 2", single_irs_quadratic, Some(Duration::from_secs(30))),
        ("worst-case example fixtures", examples_fixtures, Some(Duration::from_secs(30))),
        ("deviation bound on 100/100 draws", lemma_bound, Some(Duration::from_secs(60))),
        ("finite-T CSM agrees with CPP", finite_t_agreement, Some(Duration::from_secs(120))),
        ("condition probabilities versus eta", condition_probabilities, Some(Duration::from_secs(180))),
        ("benchmark ordering csm > virtual > zero", benchmark_ordering, Some(Duration::from_secs(120))),
        ("byte-identical CSV across thread counts", thread_count_determinism, None),
    ];
    let mut failed = 0;
    for (i, (label, check, budget)) in checks.iter().enumerate() {
        let start = Instant::now();
        let mut o = check();
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > *b {
                o.passed = false;
                o.detail.push_str(&format!("; over the {}s budget", b.as_secs()));
            }
        }
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {label}: {} [{:.2}s]",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
