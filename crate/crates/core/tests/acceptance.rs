//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Tolerances are pinned as constants next to each check.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pnsgd_privacy::bounds::{
    delta_star_fixed_gaussian, delta_star_fixed_laplace, online_delta_bracket, online_delta_path, shuffled_delta,
    shuffled_delta_fixed_noise,
};
use pnsgd_privacy::composition::{dp_to_gdp, dp_to_rdp, gdp_compose, gdp_to_dp, rdp_compose, rdp_to_dp, GdpParam, RdpPoint};
use pnsgd_privacy::simulator::{compare_variants, generate_synthetic, project_ball, LossKind, PnsgdConfig, SyntheticProblem, Variant};
use pnsgd_privacy::special::{divergence_oracle, theta, theta_asymptotic, theta_deficit};
use pnsgd_privacy::{BoundConstants, Geometry, LossProfile, NoiseKind, NoiseModel, PrivacyBudget, Schedule};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

/// Deterministic RNG shared by the randomized criteria.
fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// 1. theta against quadrature of the two densities.
const THETA_ORACLE_TOL: f64 = 1e-7;
const THETA_INSTANCES: usize = 1000;

fn criterion_theta_oracle() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut worst_at = (0.0, 0.0, 0.0);
    for _ in 0..THETA_INSTANCES {
        let gamma = (r.random::<f64>() * 3.0).exp();
        let ratio = 0.01 * (r.random::<f64>() * (20.0f64 / 0.01).ln()).exp();
        let sigma = 0.1 * (r.random::<f64>() * 100f64.ln()).exp();
        let c = ratio * sigma;
        let exact = theta(gamma, c / sigma).unwrap();
        let oracle = divergence_oracle(gamma, c, sigma).unwrap();
        let err = (exact - oracle).abs();
        if err > worst {
            worst = err;
            worst_at = (gamma, c, sigma);
        }
    }
    Outcome::new(
        worst <= THETA_ORACLE_TOL,
        format!(
            "max |theta - oracle| = {worst:.3e} over {THETA_INSTANCES} instances (tol {THETA_ORACLE_TOL:e}; worst at gamma={:.4}, c={:.4}, sigma={:.4})",
            worst_at.0, worst_at.1, worst_at.2
        ),
    )
}

// 2. Shuffled bound against explicit permutation averaging.
const SHUFFLE_TOL: f64 = 1e-14;

/// Averages `A·B^{n−pos}` over all `n!` orderings, tracking where the
/// differing record (label 0) lands. Landing counts are exact integers, so
/// the only rounding is in the final `n`-term sum.
fn permutation_average(a: f64, b: f64, n: usize) -> f64 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut landed = vec![0u64; n + 1];
    let mut visit = |p: &[usize]| {
        landed[p.iter().position(|&x| x == 0).unwrap() + 1] += 1;
    };
    visit(&perm);
    // Heap's algorithm.
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let total: u64 = landed.iter().sum();
    (1..=n)
        .map(|pos| a * b.powi((n - pos) as i32) * (landed[pos] as f64 / total as f64))
        .sum()
}

fn criterion_shuffled_exactness() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a: f64 = r.random();
        let b: f64 = r.random();
        let consts = BoundConstants::new(a, b).unwrap();
        for n in 1..=8usize {
            let got = shuffled_delta(&consts, n as u64).unwrap();
            worst = worst.max((got - permutation_average(a, b, n)).abs());
        }
    }
    Outcome::new(
        worst <= SHUFFLE_TOL,
        format!("max |shuffled - permutation average| = {worst:.3e} over n<=8, 100 (A,B) pairs (tol {SHUFFLE_TOL:e})"),
    )
}

// 3. Laplace fixed schedule: n·|δ(n) − δ*| stays in a band.
const LAPLACE_BAND: f64 = 10.0;

fn criterion_laplace_fixed() -> Outcome {
    let sched = Schedule::fixed(1e5, 2.0).unwrap();
    let profile = LossProfile::new(10.0, 0.5, 0.0, 0.1).unwrap();
    let geom = Geometry::interval(0.0, 1.0).unwrap();
    let star = delta_star_fixed_laplace(1.0, 1e5).unwrap();
    let mut scaled = Vec::new();
    let mut gaps = Vec::new();
    for k in 4..=7 {
        let n = 10u64.pow(k);
        let d = shuffled_delta_fixed_noise(n, 1.0, &sched, &profile, &geom, NoiseKind::Laplace).unwrap();
        gaps.push((d - star).abs());
        scaled.push(n as f64 * (d - star).abs());
    }
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let converging = gaps.windows(2).all(|w| w[1] < w[0]);
    let star_ok = (star - 6.0653e-6).abs() < 1e-9;
    Outcome::new(
        min > 0.0 && max / min < LAPLACE_BAND && converging && star_ok,
        format!(
            "delta*={star:.5e}; n|delta-delta*| = {:?}; max/min = {:.3} (< {LAPLACE_BAND}); gaps decreasing: {converging}",
            scaled.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            max / min
        ),
    )
}

// 4. Gaussian fixed schedule: log(n)·|δ(n) − δ*| bounded and δ → δ*.
/// The scaled gap may not exceed this multiple of its value at n = 1e4.
const GAUSSIAN_GROWTH: f64 = 10.0;

fn criterion_gaussian_fixed() -> Outcome {
    let sched = Schedule::fixed(1e5, 100.0).unwrap();
    let geom = Geometry::ball(1.0).unwrap();
    let star = delta_star_fixed_gaussian(1.0, 1e5).unwrap();
    let mut ok = (star - 3.0327e-6).abs() < 1e-9;
    let mut lines = Vec::new();
    for eta in [0.1, 0.02, 0.01] {
        let profile = LossProfile::new(10.0, 0.5, 0.0, eta).unwrap();
        let mut scaled = Vec::new();
        let mut gaps = Vec::new();
        for k in 4..=8 {
            let n = 10u64.pow(k);
            let d = shuffled_delta_fixed_noise(n, 1.0, &sched, &profile, &geom, NoiseKind::Gaussian).unwrap();
            gaps.push((d - star).abs());
            scaled.push((n as f64).ln() * (d - star).abs());
        }
        let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
        let bounded = max.is_finite() && max <= GAUSSIAN_GROWTH * scaled[0];
        let closer = gaps[gaps.len() - 1] < gaps[0];
        ok &= bounded && closer;
        lines.push(format!(
            "eta={eta}: log(n)|delta-delta*| = [{}]",
            scaled.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
        ));
    }
    Outcome::new(ok, format!("delta*={star:.5e}; {}", lines.join("; ")))
}

// 5. Online bracket.
const ONLINE_FINITE_TO_UPPER: f64 = 1e-3;
const ONLINE_BRACKET_GAP: f64 = 1e-2;

fn criterion_online_bracket() -> Outcome {
    let sched = Schedule::online(100.0, 100.0, 1.5).unwrap();
    let profile = LossProfile::new(10.0, 0.5, 0.0, 0.01).unwrap();
    let i = 100u64;
    // Geometric grid from i to 1e7, four points per decade.
    let grid: Vec<u64> = (0..=20).map(|k| (100.0 * 10f64.powf(k as f64 / 4.0)).round() as u64).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, geom) in [
        (NoiseKind::Laplace, Geometry::interval(0.0, 1.0).unwrap()),
        (NoiseKind::Gaussian, Geometry::ball(1.0).unwrap()),
    ] {
        let bracket = online_delta_bracket(i, 1.0, &sched, &profile, &geom, kind).unwrap();
        let path = online_delta_path(&grid, i, 1.0, &sched, &profile, &geom, kind).unwrap();
        let monotone = path.windows(2).all(|w| w[1] <= w[0]);
        let above_lower = path.iter().all(|&d| d >= bracket.lower);
        let last = *path.last().unwrap();
        let to_upper = (last - bracket.upper).abs() / bracket.upper;
        let gap = bracket.relative_gap();
        let checks = [
            monotone,
            above_lower,
            to_upper < ONLINE_FINITE_TO_UPPER,
            gap < ONLINE_BRACKET_GAP,
        ];
        ok &= checks.iter().all(|&c| c);
        let mark = |c: bool| if c { "ok" } else { "FAIL" };
        parts.push(format!(
            "{}: nonincreasing {} | finite>=lower {} | |finite(1e7)-upper|/upper={to_upper:.3e} (<{ONLINE_FINITE_TO_UPPER:e}) {} | (upper-lower)/upper={gap:.3e} (<{ONLINE_BRACKET_GAP:e}) {} [lower={:.5e} upper={:.5e} finite(1e7)={last:.5e}]",
            kind.as_str(),
            mark(checks[0]),
            mark(checks[1]),
            mark(checks[2]),
            mark(checks[3]),
            bracket.lower,
            bracket.upper,
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

// 6. Small-σ deficit ratio of the exact kernel against its expansion.
const DEFICIT_RATIO_BAND: (f64, f64) = (0.95, 1.05);

fn criterion_small_sigma() -> Outcome {
    let (epsilon, c) = (0.0f64, 1.0f64);
    let mut ratios = Vec::new();
    for n in [1e4f64, 1e6, 1e8] {
        let sigma = c / (2.0 * n.ln().sqrt());
        let exact = theta_deficit(epsilon.exp(), c / sigma).unwrap();
        let approx = 1.0 - theta_asymptotic(epsilon, c, sigma).unwrap();
        ratios.push(exact / approx);
    }
    let last = *ratios.last().unwrap();
    let toward_one = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    Outcome::new(
        (DEFICIT_RATIO_BAND.0..=DEFICIT_RATIO_BAND.1).contains(&last),
        format!(
            "eps=0, c=1, sigma=c/(2 sqrt(ln n)) for n=1e4,1e6,1e8: ratios {:?}; smallest-sigma ratio {last:.4} in {DEFICIT_RATIO_BAND:?}; approaching 1: {toward_one}",
            ratios.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    )
}

// 7. Composition round trips and group laws.
/// Round-trip slack for `(x + y) − y`, in units of `ulp(|x| + |y|)`.
const RDP_ROUNDTRIP_ULPS: f64 = 4.0;
const GDP_ROUNDTRIP_TOL: f64 = 1e-9;
const GROUP_LAW_TOL: f64 = 1e-14;

fn criterion_composition() -> Outcome {
    let mut r = rng(7);
    let mut rdp_worst = 0.0f64;
    let mut gdp_worst = 0.0f64;
    let mut law_worst = 0.0f64;
    for _ in 0..1000 {
        let eps = 5.0 * r.random::<f64>();
        let delta = 10f64.powf(-10.0 + 9.99 * r.random::<f64>()).min(0.5);
        let alpha = 1.0 + 1e-3 + 100.0 * r.random::<f64>();
        let budget = PrivacyBudget::new(eps, delta).unwrap();
        let p = dp_to_rdp(&budget, alpha).unwrap();
        let back = rdp_to_dp(&p, delta).unwrap();
        let scale = f64::EPSILON * (eps.abs() + (delta.ln() / (alpha - 1.0)).abs());
        rdp_worst = rdp_worst.max((back.epsilon - eps).abs() / scale);
        if back.delta != delta {
            rdp_worst = f64::INFINITY;
        }

        let mu = dp_to_gdp(&budget).unwrap();
        gdp_worst = gdp_worst.max((gdp_to_dp(&mu, eps).unwrap().delta - delta).abs());

        let (e1, e2) = (r.random_range(1..50u64), r.random_range(1..50u64));
        let q = RdpPoint::new(alpha, p.epsilon).unwrap();
        let lhs = rdp_compose(&rdp_compose(&q, e1).unwrap(), e2).unwrap().epsilon;
        let rhs = rdp_compose(&q, e1 * e2).unwrap().epsilon;
        law_worst = law_worst.max((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE));
        let g = GdpParam::new(mu.mu).unwrap();
        let lhs = gdp_compose(&gdp_compose(&g, e1).unwrap(), e2).unwrap().mu;
        let rhs = gdp_compose(&g, e1 * e2).unwrap().mu;
        law_worst = law_worst.max((lhs - rhs).abs() / rhs);
    }
    Outcome::new(
        rdp_worst <= RDP_ROUNDTRIP_ULPS && gdp_worst <= GDP_ROUNDTRIP_TOL && law_worst <= GROUP_LAW_TOL,
        format!(
            "RDP E=1 round trip within {rdp_worst:.2} ulp (<= {RDP_ROUNDTRIP_ULPS}); GDP round-trip residual {gdp_worst:.2e} (<= {GDP_ROUNDTRIP_TOL:e}); group laws rel err {law_worst:.2e} (<= {GROUP_LAW_TOL:e})"
        ),
    )
}

// 8. Shuffled vs randomly-stopped over paired replicas.
const REPLICAS: usize = 100;
const SIGMAS: f64 = 3.0;

fn criterion_simulation() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (loss, eta) in [(LossKind::Linear, 1e-4), (LossKind::Logistic, 5e-3)] {
        let mut target = vec![1.0, 2.0];
        project_ball(&mut target, 1.0);
        let data = generate_synthetic(&SyntheticProblem {
            loss,
            n: 1000,
            target,
            seed: 2024,
        })
        .unwrap();
        let config = PnsgdConfig {
            n: 1000,
            d: 2,
            noise: NoiseModel::gaussian(0.5).unwrap(),
            profile: LossProfile::new(1.0, 1.0, 0.0, eta).unwrap(),
            radius: 1.0,
            loss,
            seed: 2024,
            variant: Variant::Shuffled,
            replicas: REPLICAS,
            record_steps: false,
        };
        let cmp = compare_variants(&config, &data).unwrap();
        let m = REPLICAS as f64;
        let diff_se = cmp.difference.std_dev.unwrap() / m.sqrt();
        let mean_margin = cmp.difference.mean - SIGMAS * diff_se;
        let (sd_s, sd_r) = (cmp.shuffled.std_dev.unwrap(), cmp.stopped.std_dev.unwrap());
        // Standard error of a sample standard deviation: sd/sqrt(2(m−1)).
        let sd_se = (sd_s.powi(2) + sd_r.powi(2)).sqrt() / (2.0 * (m - 1.0)).sqrt();
        let sd_margin = (sd_r - sd_s) - SIGMAS * sd_se;
        ok &= mean_margin > 0.0 && sd_margin > 0.0;
        parts.push(format!(
            "{loss:?}: mean shuffled {:.5} vs stopped {:.5} (diff {:.4e}, 3se {:.2e}); sd shuffled {sd_s:.3e} vs stopped {sd_r:.3e} (3se {:.2e})",
            cmp.shuffled.mean,
            cmp.stopped.mean,
            cmp.difference.mean,
            SIGMAS * diff_se,
            SIGMAS * sd_se
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

// 9. Byte-identical CLI reruns.
fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Runs one command and returns every data file it wrote, concatenated.
fn run_cli(dir: &Path, tag: &str, command: &str, config: &Path) -> Result<Vec<u8>, String> {
    let run_dir = dir.join(tag);
    std::fs::create_dir_all(&run_dir).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_pnsgd"))
        .args([command, "--config"])
        .arg(config)
        .args(["--seed", "17", "--out"])
        .arg(run_dir.join("out.csv"))
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("{command} exited with {status}"));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&run_dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .collect();
    files.sort();
    let mut bytes = Vec::new();
    for f in files {
        bytes.extend(f.file_name().unwrap().to_string_lossy().as_bytes());
        bytes.extend(std::fs::read(&f).map_err(|e| e.to_string())?);
    }
    Ok(bytes)
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("account", "laplace_fixed.toml"),
        ("calibrate", "laplace_online.toml"),
        ("sweep", "laplace_fixed.toml"),
        ("sweep", "gaussian_fixed.toml"),
        ("sweep", "gaussian_online.toml"),
        ("compose", "compose_rdp.toml"),
        ("compose", "compose_gdp.toml"),
        ("simulate", "simulate_logistic.toml"),
    ];
    let mut failures = Vec::new();
    for (k, (command, file)) in cases.iter().enumerate() {
        let config = configs_dir().join(file);
        let first = run_cli(dir.path(), &format!("a{k}"), command, &config);
        let second = run_cli(dir.path(), &format!("b{k}"), command, &config);
        match (first, second) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => {}
            (Ok(_), Ok(_)) => failures.push(format!("{command} {file}: payloads differ")),
            (Err(e), _) | (_, Err(e)) => failures.push(format!("{command} {file}: {e}")),
        }
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} command/config pairs rerun with identical bytes", cases.len())
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        ("theta matches density quadrature", criterion_theta_oracle, Duration::from_secs(60)),
        ("shuffled bound equals permutation average", criterion_shuffled_exactness, Duration::from_secs(10)),
        ("laplace fixed schedule converges at rate 1/n", criterion_laplace_fixed, Duration::from_secs(1)),
        ("gaussian fixed schedule converges at rate 1/log n", criterion_gaussian_fixed, Duration::from_secs(1)),
        ("online bound bracketed by integral limits", criterion_online_bracket, Duration::from_secs(10)),
        ("small-sigma deficit ratio", criterion_small_sigma, Duration::from_secs(10)),
        ("composition round trips and group laws", criterion_composition, Duration::from_secs(10)),
        ("shuffled beats randomly-stopped in simulation", criterion_simulation, Duration::from_secs(60)),
        ("CLI reruns are byte-identical", criterion_determinism, Duration::from_secs(120)),
    ];
    let mut failed = Vec::new();
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let passed = outcome.passed && in_time;
        println!(
            "[{}] criterion {}: {name} ({:.2?}, budget {:?}{}) :: {}",
            if passed { "PASS" } else { "FAIL" },
            k + 1,
            elapsed,
            budget,
            if in_time { "" } else { ", OVER BUDGET" },
            outcome.detail
        );
        if !passed {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
