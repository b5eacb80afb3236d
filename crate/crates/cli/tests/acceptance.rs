//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucp_trunc::gh::{build_correspondence, empirical_distortion, Systems, CHOI_RANK};
use ucp_trunc::harmonic::{box_points, fejer_kernel, kernel_checks, random_self_adjoint, sup_norm, Idx, TrigPoly};
use ucp_trunc::lattice::{polyhedral_fejer_kernel, LatticePolytope};
use ucp_trunc::linalg::{CMat, C64};
use ucp_trunc::opsys::lipschitz_seminorm_fn;
use ucp_trunc::truncation::{TruncationPair, Variant};
use ucp_trunc::ucpmetric::{
    circle_grid, distance_oracle, sample_atomic_ucp, sample_choi_ucp, truncated_triple, AtomicUcp, DistanceSolver,
    MetricConfig, Triple, UcpMap,
};
use ucp_trunc::Error;
use ucp_trunc_cli::{duality_corpus, run_sweep, ExperimentConfig, Status, VariantSpec};

// Criterion 1.
const FEJER_MIN_VALUE: f64 = -1e-10;
const POLY_MEAN_TOL: f64 = 1e-12;
const POLY_MONOTONE_TOL: f64 = 1e-12;
const POLY_HAT_TOL_AT_8: f64 = 0.05;
const KERNEL_DELTA: f64 = PI / 4.0;
const KERNEL_RUNTIME: Duration = Duration::from_secs(10);

// Criterion 2.
const ROUNDTRIP_TOL: f64 = 1e-12;
const ROUNDTRIP_INPUTS: usize = 100;
const ROUNDTRIP_RUNTIME: Duration = Duration::from_secs(5);

// Criterion 3.
const APPROX_SLACK: f64 = 1e-6;
const APPROX_INPUTS: usize = 200;
const APPROX_LEVELS: [usize; 5] = [2, 4, 8, 16, 32];
const APPROX_C_AT_32: f64 = 0.5;
const APPROX_RUNTIME: Duration = Duration::from_secs(30);

// Criterion 4.
const AXIOM_TRIPLES: usize = 50;
const TRIANGLE_TOL: f64 = 3e-4;
const SEPARATION_DIST: f64 = 1e-4;
const SEPARATION_EVAL: f64 = 1e-3;
const AXIOM_RUNTIME: Duration = Duration::from_secs(300);

// Criterion 5.
const ORACLE_TOL: f64 = 1e-2 + 1e-4;
const ORACLE_MIN_INSTANCES: usize = 20;
const ORACLE_RUNTIME: Duration = Duration::from_secs(600);

// Criterion 6.
const CLASSICAL_REL_TOL: f64 = 2e-4;

// Criterion 7.
const CHAIN_PAIRS: usize = 10;
const CHAIN_LEVELS: [usize; 3] = [4, 8, 16];
const CHAIN_SLACK_TOLS: f64 = 4.0;

// Criterion 8.
const CIRCLE_SWEEP: [usize; 5] = [2, 4, 8, 16, 32];
const TORUS_SWEEP: [usize; 4] = [1, 2, 4, 8];
const GH_TARGET: f64 = 0.2;
const DISTORTION_SLACK_TOLS: f64 = 4.0;
const SWEEP_SAMPLES_EACH: usize = 2;
const SWEEP_RUNTIME: Duration = Duration::from_secs(1800);

// Criterion 9.
const DUALITY_COUNT: usize = 200;
const DUALITY_TRIALS: usize = 64;

const SEED: u64 = 0;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn num<T>(r: Result<T, Error>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(limit: Duration, t0: Instant) -> Result<(), String> {
    let t = t0.elapsed();
    if t <= limit {
        Ok(())
    } else {
        Err(format!("runtime {:.1}s exceeds {:.0}s", t.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    for n in 1..=64 {
        let k = num(fejer_kernel(n))?;
        if k.grid_min() < FEJER_MIN_VALUE || k.hat(&[0]) != C64::new(1.0, 0.0) {
            failures.push(format!("fejer({n}): min {:e}, K̂(0) {}", k.grid_min(), k.hat(&[0])));
        }
    }
    let window = box_points(2, 2);
    let mut worst_hat_at_8: Vec<String> = Vec::new();
    for (name, p) in [("square", LatticePolytope::cube(2)), ("cross", LatticePolytope::cross(2))] {
        let mut prev: Option<(Vec<f64>, f64)> = None;
        for n in 1..=8 {
            let k = num(polyhedral_fejer_kernel(&p, n))?;
            let r = kernel_checks(&k, KERNEL_DELTA, &window);
            if r.min_value < FEJER_MIN_VALUE || (r.coeff_at_zero - 1.0).abs() > POLY_MEAN_TOL {
                failures.push(format!("{name}({n}): min {:e}, mean {}", r.min_value, r.coeff_at_zero));
            }
            if !n.is_power_of_two() {
                continue;
            }
            let hats: Vec<f64> = r.window.iter().map(|(_, h)| *h).collect();
            if let Some((ph, pm)) = &prev {
                if hats.iter().zip(ph).any(|(h, p)| *h < p - POLY_MONOTONE_TOL) {
                    failures.push(format!("{name}({n}): Fourier coefficients decreased"));
                }
                if r.outside_mass > pm + r.outside_mass_err {
                    failures.push(format!("{name}({n}): mass outside δ grew to {}", r.outside_mass));
                }
            }
            if n == 8 {
                let worst = hats.iter().map(|h| (1.0 - h).abs()).fold(0.0, f64::max);
                worst_hat_at_8.push(format!("{name} max|1-K̂| {worst:.4}"));
                if worst > POLY_HAT_TOL_AT_8 {
                    failures.push(format!("{name}(8): max|1-K̂(m)| over ‖m‖∞≤2 is {worst:.4} > {POLY_HAT_TOL_AT_8}"));
                }
            }
            prev = Some((hats, r.outside_mass));
        }
    }
    if let Err(e) = within(KERNEL_RUNTIME, t0) {
        failures.push(e);
    }
    check(failures.is_empty(), if failures.is_empty() { worst_hat_at_8.join(", ") } else { failures.join("; ") })
}

/// Roundtrip multipliers computed directly from the index set.
fn expected_multiplier(v: &Variant, pair: &TruncationPair, m: &[i64]) -> f64 {
    match v {
        Variant::FejerRiesz { n } | Variant::ToeplitzCircle { n } => (1.0 - m[0].abs() as f64 / *n as f64).max(0.0),
        _ => {
            let pts = pair.index_set().expect("torus variants carry an index set").points();
            let set: HashSet<&Idx> = pts.iter().collect();
            let hits = pts
                .iter()
                .filter(|p| {
                    let q: Idx = p.iter().zip(m).map(|(a, b)| a + b).collect();
                    set.contains(&q)
                })
                .count();
            hits as f64 / pts.len() as f64
        }
    }
}

fn random_poly(dim: usize, band: i64, rng: &mut ChaCha8Rng) -> TrigPoly {
    TrigPoly::from_coeffs(
        dim,
        box_points(dim, band)
            .into_iter()
            .map(|k| (k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))),
    )
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let variants = [
        Variant::FejerRiesz { n: 6 },
        Variant::ToeplitzCircle { n: 6 },
        Variant::TorusSpherical { dim: 2, radius: 2 },
        Variant::TorusPolyhedral { polytope: LatticePolytope::cube(2), level: 2 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for v in &variants {
        let pair = num(TruncationPair::new(v.clone()))?;
        let band = v.level() as i64 + 2;
        for _ in 0..ROUNDTRIP_INPUTS {
            let f = random_poly(v.dim(), band, &mut rng);
            let g = num(pair.symbolize(&num(pair.compress(&f))?))?;
            for m in box_points(v.dim(), 2 * band) {
                let want = f.coeff(&m) * expected_multiplier(v, &pair, &m);
                worst = worst.max((g.coeff(&m) - want).norm());
            }
        }
    }
    within(ROUNDTRIP_RUNTIME, t0)?;
    check(worst <= ROUNDTRIP_TOL, format!("max coefficient error {worst:e} over {} inputs", 4 * ROUNDTRIP_INPUTS))
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut details = Vec::new();
    let mut ok = true;
    for spec in [VariantSpec::FejerRiesz, VariantSpec::ToeplitzCircle] {
        let mut cs = Vec::new();
        let mut worst_excess = f64::NEG_INFINITY;
        for (li, &n) in APPROX_LEVELS.iter().enumerate() {
            let pair = num(TruncationPair::new(spec.at(n)))?;
            cs.push(pair.c_fwd());
            let per_level = APPROX_INPUTS / APPROX_LEVELS.len() + usize::from(li < APPROX_INPUTS % APPROX_LEVELS.len());
            for _ in 0..per_level {
                let band = rng.random_range(1..=4 * n as i64);
                let f = random_self_adjoint(1, band, &mut rng);
                let err = sup_norm(&num(pair.symbolize(&num(pair.compress(&f))?))?.sub(&f)).upper;
                let bound = pair.c_fwd() * lipschitz_seminorm_fn(&f).upper + APPROX_SLACK;
                worst_excess = worst_excess.max(err - bound);
            }
        }
        let decreasing = cs.windows(2).all(|w| w[1] < w[0]);
        let last = *cs.last().unwrap();
        ok &= worst_excess <= 0.0 && decreasing && last < APPROX_C_AT_32;
        details.push(format!(
            "{}: max excess {worst_excess:.2e}, c_fwd(32) {last:.4}, strictly decreasing {decreasing}",
            spec.family()
        ));
    }
    within(APPROX_RUNTIME, t0)?;
    check(ok, details.join("; "))
}

fn basis_gap(triple: &Triple, a: &UcpMap, b: &UcpMap) -> Result<f64, String> {
    let n = triple.nparams();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut u = vec![0.0; n];
        u[i] = 1.0;
        let x = triple.element(&u);
        let d: CMat = num(a.evaluate(&x))?.sub(&num(b.evaluate(&x))?);
        worst = worst.max(d.max_abs());
    }
    Ok(worst)
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let pair = num(TruncationPair::new(Variant::ToeplitzCircle { n: 4 }))?;
    let set = pair.index_set().unwrap().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut asym, mut tri, mut sep_checked, mut sep_fail) = (0usize, 0.0f64, 0usize, 0usize);
    for m in [1, 2] {
        let cfg = MetricConfig { m, depth: 6, ..MetricConfig::default() };
        let solver = num(DistanceSolver::new(num(truncated_triple(&pair, &cfg))?, cfg.clone()))?;
        for _ in 0..AXIOM_TRIPLES / 2 {
            let seeds: [u64; 3] = rng.random();
            let maps: Vec<UcpMap> = seeds
                .iter()
                .map(|&s| sample_choi_ucp(set.clone(), 1, m, CHOI_RANK, s).map(UcpMap::Choi))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let twin = UcpMap::Choi(num(sample_choi_ucp(set.clone(), 1, m, CHOI_RANK, seeds[0]))?);
            let d = |i: usize, j: usize| num(solver.distance(&maps[i], &maps[j])).map(|r| r.value);
            let (ab, ba, bc, ac) = (d(0, 1)?, d(1, 0)?, d(1, 2)?, d(0, 2)?);
            asym += usize::from(ab.to_bits() != ba.to_bits());
            tri = tri.max(ac - ab - bc);
            let pairs = [(&maps[0], &maps[1], ab), (&maps[1], &maps[2], bc), (&maps[0], &maps[2], ac)];
            let twin_d = num(solver.distance(&maps[0], &twin))?.value;
            for (x, y, dist) in pairs.into_iter().chain([(&maps[0], &twin, twin_d)]) {
                if dist <= SEPARATION_DIST {
                    sep_checked += 1;
                    sep_fail += usize::from(basis_gap(solver.triple(), x, y)? > SEPARATION_EVAL);
                }
            }
        }
    }
    within(AXIOM_RUNTIME, t0)?;
    check(
        asym == 0 && tri <= TRIANGLE_TOL && sep_fail == 0 && sep_checked > 0,
        format!(
            "{AXIOM_TRIPLES} triples: asymmetric {asym}, worst triangle excess {tri:.2e}, separation {}/{sep_checked} ok",
            sep_checked - sep_fail
        ),
    )
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    // (variant, m, instances)
    let plan = [
        (Variant::ToeplitzCircle { n: 2 }, 1, 6),
        (Variant::ToeplitzCircle { n: 2 }, 2, 4),
        (Variant::FejerRiesz { n: 2 }, 1, 6),
        (Variant::FejerRiesz { n: 2 }, 2, 2),
        (Variant::ToeplitzCircle { n: 3 }, 1, 3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut count, mut worst) = (0usize, 0.0f64);
    for (v, m, k) in plan {
        let pair = num(TruncationPair::new(v.clone()))?;
        let cfg = MetricConfig { m, ..MetricConfig::default() };
        let triple = num(truncated_triple(&pair, &cfg))?;
        let solver = num(DistanceSolver::new(triple.clone(), cfg.clone()))?;
        for _ in 0..k {
            let (s1, s2): (u64, u64) = rng.random();
            let (a, b) = match pair.index_set() {
                Some(set) => (
                    UcpMap::Choi(num(sample_choi_ucp(set.clone(), 1, m, CHOI_RANK, s1))?),
                    UcpMap::Choi(num(sample_choi_ucp(set.clone(), 1, m, CHOI_RANK, s2))?),
                ),
                None => (
                    UcpMap::Atomic(num(sample_atomic_ucp(1, m, 3, s1, None))?),
                    UcpMap::Atomic(num(sample_atomic_ucp(1, m, 3, s2, None))?),
                ),
            };
            let value = num(solver.distance(&a, &b))?.value;
            let oracle = num(distance_oracle(&a, &b, &cfg, &triple))?;
            worst = worst.max((value - oracle).abs());
            count += 1;
        }
    }
    within(ORACLE_RUNTIME, t0)?;
    check(count >= ORACLE_MIN_INSTANCES && worst <= ORACLE_TOL, format!("{count} instances, max |solver - oracle| {worst:.2e}"))
}

/// Bounded-Lipschitz transport distance between two Dirac masses on the circle.
fn dirac_transport(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d).min(2.0)
}

fn criterion_6() -> Outcome {
    let cfg = MetricConfig::default();
    let w = cfg.weight();
    let triple = num(Triple::piecewise_linear(circle_grid(1), true, true))?;
    let solver = num(DistanceSolver::new(triple, cfg))?;
    let point = |x: f64| AtomicUcp::point_state(vec![x]).map(UcpMap::Atomic).map_err(|e| e.to_string());
    let mut details = Vec::new();
    let mut ok = true;
    for y in [PI / 4.0, PI] {
        let d = num(solver.distance(&point(0.0)?, &point(y)?))?.value;
        let want = w * dirac_transport(0.0, y);
        ok &= (d - want).abs() <= CLASSICAL_REL_TOL * w;
        details.push(format!("δ0 vs δ{y:.4}: {d:.6} vs {want:.6}"));
    }
    check(ok, details.join(", "))
}

fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let tol = MetricConfig::default().tol_obj;
    for spec in [VariantSpec::FejerRiesz, VariantSpec::ToeplitzCircle] {
        for n in CHAIN_LEVELS {
            let pair = Arc::new(num(TruncationPair::new(spec.at(n)))?);
            let cfg = MetricConfig::default();
            let cs = num(build_correspondence(pair.clone(), CHAIN_PAIRS / 2, cfg.m, SEED ^ n as u64))?;
            let systems = num(Systems::new(&pair, &cfg))?;
            let r = num(empirical_distortion(&cs, &systems, ucp_trunc::exec::Exec::Parallel))?;
            checked += r.pairs.iter().filter(|p| p.chain_violation.is_some()).count();
            worst = worst.max(r.max_chain_violation);
        }
    }
    check(
        worst <= CHAIN_SLACK_TOLS * tol,
        format!("{checked} same-branch comparisons, worst violation {worst:.2e} (allowed {:.0e})", CHAIN_SLACK_TOLS * tol),
    )
}

fn sweep_configs(out: &Path) -> Vec<ExperimentConfig> {
    let specs = [
        (VariantSpec::FejerRiesz, CIRCLE_SWEEP.to_vec()),
        (VariantSpec::ToeplitzCircle, CIRCLE_SWEEP.to_vec()),
        (VariantSpec::TorusPolyhedral { polytope: LatticePolytope::cube(2) }, TORUS_SWEEP.to_vec()),
        (VariantSpec::TorusSpherical { dim: 2 }, TORUS_SWEEP.to_vec()),
    ];
    specs
        .into_iter()
        .map(|(spec, sweep)| {
            let mut cfg = ExperimentConfig::new(spec);
            cfg.sweep = sweep;
            cfg.samples_each = SWEEP_SAMPLES_EACH;
            cfg.m = 1;
            cfg.seed = SEED;
            cfg.record_runtime = false;
            cfg.out = out.to_path_buf();
            cfg
        })
        .collect()
}

fn criterion_8(out: &Path) -> Outcome {
    let t0 = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for cfg in sweep_configs(out) {
        let sweep = run_sweep(&cfg, false).map_err(|e| e.to_string())?;
        let gh: Vec<f64> = sweep.levels.iter().map(|l| l.gh_upper.unwrap_or(f64::NAN)).collect();
        let decreasing = gh.windows(2).all(|w| w[1] < w[0]);
        let last = *gh.last().unwrap();
        let mut worst_excess = 0.0f64;
        let (mut computed, mut skipped, mut failed) = (0, 0, 0);
        for l in &sweep.levels {
            match (&l.status, &l.distortion) {
                (Status::Ok, Some(d)) => {
                    computed += 1;
                    worst_excess = worst_excess.max(d.bound_excess(DISTORTION_SLACK_TOLS * d.tol_obj));
                }
                (Status::Skipped, _) => skipped += 1,
                _ => failed += 1,
            }
        }
        ok &= decreasing && last < GH_TARGET && worst_excess == 0.0 && failed == 0;
        details.push(format!(
            "{}: gh_upper {:.4}→{last:.4} decreasing {decreasing}, distortion excess {worst_excess:.1e} \
             ({computed} levels, {skipped} skipped, {failed} failed)",
            cfg.variant.family(),
            gh[0]
        ));
    }
    if let Err(e) = within(SWEEP_RUNTIME, t0) {
        ok = false;
        details.push(e);
    }
    check(ok, details.join("; "))
}

fn criterion_9() -> Outcome {
    let r = duality_corpus(DUALITY_COUNT, DUALITY_TRIALS, SEED).map_err(|e| e.to_string())?;
    let mut unwitnessed = 0usize;
    for c in r.cases.iter().filter(|c| !c.report.psd) {
        let n = c.report.n;
        let t = CMat::from_fn(n, n, |i, j| {
            let [re, im] = c.symbol[i + n - 1 - j];
            C64::new(re, im)
        });
        let confirmed = c.report.witness.as_ref().is_some_and(|q| {
            let q: Vec<C64> = q.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            t.quad_form(&q).re < 0.0
        });
        unwitnessed += usize::from(!confirmed);
    }
    check(
        r.agreements == r.count && r.count == DUALITY_COUNT && unwitnessed == 0,
        format!(
            "agreement {}/{}, {} non-PSD, {unwitnessed} without a confirmed witness",
            r.agreements,
            r.count,
            r.count - r.psd
        ),
    )
}

fn criterion_10(first: &Path, second: &Path) -> Outcome {
    let mut differ = Vec::new();
    for cfg in sweep_configs(second) {
        let sweep = run_sweep(&cfg, false).map_err(|e| e.to_string())?;
        let name = sweep.csv.file_name().unwrap().to_owned();
        let a = std::fs::read(first.join(&name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(&sweep.csv).map_err(|e| e.to_string())?;
        if a != b {
            differ.push(name.to_string_lossy().into_owned());
        }
    }
    check(differ.is_empty(), if differ.is_empty() { "4 sweep CSVs bytewise identical".into() } else { format!("differ: {}", differ.join(", ")) })
}

fn report(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let outcome = f();
    let secs = t0.elapsed().as_secs_f64();
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {n:>2} {name:<24} {tag}  {detail} [{secs:.1}s]");
    outcome.is_ok()
}

fn main() -> ExitCode {
    let first = tempfile::tempdir().expect("temporary directory");
    let second = tempfile::tempdir().expect("temporary directory");
    let results = [
        report(1, "kernel suite", criterion_1),
        report(2, "roundtrip identity", criterion_2),
        report(3, "certified approximation", criterion_3),
        report(4, "metric axioms", criterion_4),
        report(5, "oracle equivalence", criterion_5),
        report(6, "classical distances", criterion_6),
        report(7, "estimate inequalities", criterion_7),
        report(8, "gh sweep", || criterion_8(first.path())),
        report(9, "duality corpus", criterion_9),
        report(10, "determinism", || criterion_10(first.path(), second.path())),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
