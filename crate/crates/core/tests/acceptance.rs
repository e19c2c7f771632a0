//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use julia_cycles::cli::{self, Command, DensityRun, RunConfig};
use julia_cycles::fnexpr::{eval_jet, finite_value_and_deriv, Expr, PoleCase};
use julia_cycles::renorm::{
    concentration_point, disc_lattice, lehto_scan, rescaled_marty, RescalingStep,
};
use julia_cycles::sphere::{chordal, chordal_distance, spherical_derivative, SpherePoint};

const TWO_TAN_ZALCMAN: &str = include_str!("../../../configs/two_tan_zalcman.toml");
const TAN_ESSENTIAL: &str = include_str!("../../../configs/tan_essential.toml");
const EXP_INV_LEHTO: &str = include_str!("../../../configs/exp_inv_lehto.toml");
const INVERSE_LEHTO: &str = include_str!("../../../configs/inverse_lehto.toml");
const TWO_TAN_DENSITY: &str = include_str!("../../../configs/two_tan_density.toml");
const EXP_OVER_Z_DENSITY: &str = include_str!("../../../configs/exp_over_z_density.toml");

type Outcome = Result<String, String>;

fn config(text: &str) -> RunConfig {
    RunConfig::from_toml(text).expect("bundled configuration parses")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_sphere_point(rng: &mut StdRng) -> SpherePoint {
    if rng.gen_bool(0.01) {
        return SpherePoint::Infinity;
    }
    let modulus = 10f64.powf(rng.gen_range(-6.0..6.0));
    let arg = rng.gen_range(0.0..std::f64::consts::TAU);
    SpherePoint::Finite(C::from_polar(modulus, arg))
}

fn criterion_1() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let start = Instant::now();
    let (mut asym, mut tri, mut inv) = (0usize, 0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let (a, b, c) = (
            random_sphere_point(&mut rng),
            random_sphere_point(&mut rng),
            random_sphere_point(&mut rng),
        );
        let ab = chordal_distance(a, b);
        if ab != chordal_distance(b, a) {
            asym += 1;
        }
        tri = tri.max(ab - chordal_distance(a, c) - chordal_distance(c, b));
        inv = inv.max((chordal_distance(a.recip(), b.recip()) - ab).abs());
    }
    let elapsed = start.elapsed();
    check(
        asym == 0 && tri <= 1e-12 && inv <= 1e-12 && elapsed < Duration::from_secs(5),
        format!("asymmetric {asym}, triangle excess {tri:.2e}, inversion error {inv:.2e}, {elapsed:.2?}"),
    )
}

fn random_expr(rng: &mut StdRng, depth: usize) -> Expr {
    let z = Expr::Var;
    if depth == 0 {
        return match rng.gen_range(0..3) {
            0 => Expr::num(rng.gen_range(-2.0..2.0)),
            _ => z,
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => Expr::add(a, random_expr(rng, depth - 1)),
        1 => Expr::mul(a, random_expr(rng, depth - 1)),
        2 => Expr::div(a, random_expr(rng, depth - 1)),
        3 => Expr::sub(a, random_expr(rng, depth - 1)),
        4 => Expr::exp(a),
        5 => Expr::sin(a),
        6 => Expr::cos(a),
        7 => Expr::tan(a),
        _ => Expr::pow(a, rng.gen_range(-3..=3)),
    }
}

fn value_at(e: &Expr, z: C) -> Option<C> {
    eval_jet(e, z)
        .ok()
        .and_then(|j| finite_value_and_deriv(&j))
        .map(|(v, _)| v)
}

/// Richardson-extrapolated central difference along the real axis.
fn central_difference(e: &Expr, z: C, h: f64) -> Option<C> {
    let d = |h: f64| Some((value_at(e, z + h)? - value_at(e, z - h)?) / (2.0 * h));
    let (d1, d2) = (d(h)?, d(h / 2.0)?);
    Some((4.0 * d2 - d1) / 3.0)
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let (mut inv_samples, mut inv_worst) = (0usize, 0.0f64);
    let (mut fd_samples, mut fd_worst) = (0usize, 0.0f64);
    let mut attempts = 0usize;
    while (inv_samples < 1000 || fd_samples < 1000) && attempts < 200_000 {
        attempts += 1;
        let depth = rng.gen_range(1..=3);
        let g = random_expr(&mut rng, depth);
        let z = C::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let recip = Expr::div(Expr::num(1.0), g.clone());
        if inv_samples < 1000 {
            if let (Ok(a), Ok(b)) = (eval_jet(&g, z), eval_jet(&recip, z)) {
                let (sa, sb) = (spherical_derivative(&a), spherical_derivative(&b));
                if sa.is_finite() && sb.is_finite() && sa > 1e-200 {
                    let rel = (sa - sb).abs() / sa.max(sb);
                    inv_worst = inv_worst.max(rel);
                    inv_samples += 1;
                }
            }
        }
        if fd_samples < 1000 {
            let jet = eval_jet(&g, z)
                .ok()
                .and_then(|j| finite_value_and_deriv(&j));
            if let Some((v, d)) = jet {
                // Moderate samples only; the difference quotient loses all
                // digits near poles and at vanishing derivatives.
                if v.norm() < 1e3 && d.norm() > 1e-3 && d.norm() < 1e4 {
                    if let Some(fd) = central_difference(&g, z, 1e-3) {
                        fd_worst = fd_worst.max((fd - d).norm() / d.norm());
                        fd_samples += 1;
                    }
                }
            }
        }
    }
    check(
        inv_samples == 1000 && fd_samples == 1000 && inv_worst <= 1e-9 && fd_worst <= 1e-5,
        format!(
            "reciprocal identity worst {inv_worst:.2e} over {inv_samples}, forward vs difference worst {fd_worst:.2e} over {fd_samples}"
        ),
    )
}

/// Exhaustive check of the three concentration conditions.
fn concentration_oracle(points: &[C], m: &[f64], sigma: f64, u: usize, w: usize) -> bool {
    let d = |a: usize, b: usize| (points[a] - points[b]).norm();
    if d(u, w) > 2.0 / (sigma * m[u]) * (1.0 + 1e-12) {
        return false;
    }
    if m[w] < m[u] {
        return false;
    }
    let radius = 1.0 / (sigma * m[w]);
    (0..points.len()).all(|x| d(x, w) > radius || m[x] <= 2.0 * m[w])
}

fn criterion_3() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let start = Instant::now();
    let (mut failures, mut moved) = (0usize, 0usize);
    for _ in 0..1000 {
        let size = rng.gen_range(2..=120);
        let spread = 10f64.powf(rng.gen_range(-2.0..1.0));
        let points: Vec<C> = (0..size)
            .map(|_| {
                C::new(
                    rng.gen_range(-spread..spread),
                    rng.gen_range(-spread..spread),
                )
            })
            .collect();
        let m: Vec<f64> = (0..size)
            .map(|_| 10f64.powf(rng.gen_range(-1.0..3.0)))
            .collect();
        let sigma = rng.gen_range(0.05..8.0);
        let u = rng.gen_range(0..size);
        match concentration_point(&points, |a, b| (a - b).norm(), &m, sigma, u) {
            Ok(w) => {
                if w != u {
                    moved += 1;
                }
                if !concentration_oracle(&points, &m, sigma, u, w) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    let elapsed = start.elapsed();
    check(
        failures == 0 && elapsed < Duration::from_secs(10),
        format!("{failures} failures over 1000 instances ({moved} walks moved), {elapsed:.2?}"),
    )
}

fn sup_over(e: &Expr, step: &RescalingStep, pts: &[C]) -> f64 {
    pts.iter()
        .filter_map(|&w| rescaled_marty(e, step, w))
        .fold(0.0, f64::max)
}

fn criterion_4() -> Outcome {
    let cfg = config(TWO_TAN_ZALCMAN);
    let e = julia_cycles::fnexpr::parse(&cfg.expr).unwrap();
    let (steps, _) = cli::run::renorm_steps(&cfg).map_err(|err| err.to_string())?;
    let mut at_zero = 0.0f64;
    let mut sup = 0.0f64;
    for s in &steps {
        let m0 = rescaled_marty(&e, s, C::new(0.0, 0.0)).unwrap_or(f64::NAN);
        at_zero = at_zero.max((m0 - 1.0).abs());
        sup = sup.max(sup_over(
            &e,
            s,
            &disc_lattice(C::new(0.0, 0.0), s.n as f64, 201),
        ));
    }
    let decreasing = steps.windows(2).all(|w| w[1].r_n < w[0].r_n);
    let ns: Vec<usize> = steps.iter().map(|s| s.n).collect();
    check(
        ns == (1..=8).collect::<Vec<_>>() && at_zero <= 1e-9 && sup <= 2.2 && decreasing,
        format!("{} steps, |h'(0) - 1| {at_zero:.2e}, sup on D(0,n) {sup:.4}, r_n decreasing {decreasing}", steps.len()),
    )
}

fn criterion_5() -> Outcome {
    let cfg = config(TAN_ESSENTIAL);
    let e = julia_cycles::fnexpr::parse(&cfg.expr).unwrap();
    let (steps, v) = cli::run::renorm_steps(&cfg).map_err(|err| err.to_string())?;
    let v = v.unwrap_or(C::new(FRAC_PI_2, 0.0));
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut at_zero = 0.0f64;
    let mut sup = 0.0f64;
    let disc = disc_lattice(C::new(0.0, 0.0), 1.0, 201);
    for s in &steps {
        let ratio = s.annulus_ratio(v).unwrap_or(f64::NAN);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        let m0 = rescaled_marty(&e, s, C::new(0.0, 0.0)).unwrap_or(f64::NAN);
        at_zero = at_zero.max((m0 - 1.0 / 16.0).abs());
        sup = sup.max(sup_over(&e, s, &disc));
    }
    let alphas_ok = steps
        .iter()
        .zip(3..=10)
        .all(|(s, n)| s.n == n && s.alpha == Some(2f64.powi(-(n as i32))));
    check(
        steps.len() == 8 && alphas_ok && lo >= 7.0 / 8.0 && hi <= 9.0 / 8.0 && at_zero <= 1e-9 && sup <= 0.155,
        format!(
            "{} steps, annulus ratio in [{lo:.4}, {hi:.4}], |h'(0) - 1/16| {at_zero:.2e}, sup on unit disc {sup:.4}",
            steps.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = config(EXP_INV_LEHTO);
    let e = julia_cycles::fnexpr::parse(&cfg.expr).unwrap();
    let radii = [1e-1, 1e-2, 1e-3, 1e-4];
    let rows = lehto_scan(&e, C::new(0.0, 0.0), &radii, cfg.lehto.samples)
        .map_err(|err| err.to_string())?;
    let sup_ok = rows.iter().all(|r| r.running_sup > 0.5);
    // |z| g♯ peaks at (1 + r^2)/(2r) where |exp(1/z)| = 1.
    let closed = (1.0 + 0.01) / 0.2;
    let first = rows[0].circle_max;
    let first_ok = first >= 5.0 && (first - closed).abs() <= 0.02 * closed;

    let ctl = config(INVERSE_LEHTO);
    let g = julia_cycles::fnexpr::parse(&ctl.expr).unwrap();
    let control = lehto_scan(&g, C::new(0.0, 0.0), &radii, ctl.lehto.samples)
        .map_err(|err| err.to_string())?;
    let control_err = control
        .iter()
        .map(|r| (r.circle_max - r.radius).abs())
        .fold(0.0, f64::max);
    check(
        sup_ok && first_ok && control_err <= 1e-9,
        format!(
            "running sup min {:.3}, circle max at 0.1 = {first:.4} (closed form {closed}), control error {control_err:.2e}",
            rows.iter().map(|r| r.running_sup).fold(f64::INFINITY, f64::min)
        ),
    )
}

fn criterion_7(run: &DensityRun, elapsed: Duration) -> Outcome {
    let r = &run.report;
    check(
        r.coverage >= 0.95 && elapsed <= Duration::from_secs(300),
        format!(
            "coverage {} ({}/{} pixels, {} cycles), max distance {:.4}, {elapsed:.2?}",
            r.coverage,
            r.covered,
            r.julia_pixels,
            run.cycles.len(),
            r.max_distance
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = config(EXP_OVER_Z_DENSITY);
    let run = cli::density_pipeline(&cfg).map_err(|err| err.to_string())?;
    let omitted = run.profile.case == PoleCase::SinglePoleOmitted;
    let mut worst = 0.0f64;
    let mut found = 0usize;
    for s in &run.samples {
        let best = s
            .result
            .as_ref()
            .map(|cycles| {
                cycles
                    .iter()
                    .filter(|c| c.period <= 8 && c.multiplier.norm() > 1.0)
                    .map(|c| chordal(c.nearest_point(s.point), s.point))
                    .fold(f64::INFINITY, f64::min)
            })
            .unwrap_or(f64::INFINITY);
        if best <= 0.1 {
            found += 1;
        }
        worst = worst.max(best);
    }
    check(
        omitted && run.samples.len() == 10 && found == 10,
        format!(
            "case {}, path {}, {found}/{} samples within 0.1 (worst {worst:.4})",
            run.profile.case.name(),
            run.path.name(),
            run.samples.len()
        ),
    )
}

fn criterion_9(run: &DensityRun) -> Outcome {
    let anchor = run
        .anchors
        .iter()
        .find(|a| (a.point - C::new(FRAC_PI_2, 0.0)).norm() < 1e-9)
        .ok_or("no anchor at pi/2")?;
    let tracked = &anchor.result.as_ref().map_err(|m| m.clone())?.tracked;
    if tracked.len() < 4 {
        return Err(format!("only {} tracked steps", tracked.len()));
    }
    let last: Vec<f64> = tracked[tracked.len() - 4..]
        .iter()
        .map(|t| t.scaled_multiplier())
        .collect();
    let ratio = last.iter().cloned().fold(0.0, f64::max)
        / last.iter().cloned().fold(f64::INFINITY, f64::min);
    let small: Vec<_> = tracked.iter().filter(|t| t.r_n < 1e-3).collect();
    let below: Vec<String> = small
        .iter()
        .filter(|t| t.cycle.multiplier.norm() <= 1e3)
        .map(|t| {
            format!(
                "step {} r_n {:.2e} |mult| {:.1}",
                t.step,
                t.r_n,
                t.cycle.multiplier.norm()
            )
        })
        .collect();
    check(
        ratio <= 10.0 && !small.is_empty() && below.is_empty(),
        format!(
            "last-4 r_n|mult| ratio {ratio:.2}, steps with r_n < 1e-3: {}, |mult| <= 1e3 at [{}]",
            small.len(),
            below.join("; ")
        ),
    )
}

fn criterion_10() -> Outcome {
    let runs = [
        ("zalcman", Command::Renorm, TWO_TAN_ZALCMAN),
        ("essential", Command::Renorm, TAN_ESSENTIAL),
        ("lehto", Command::Lehto, EXP_INV_LEHTO),
        ("lehto control", Command::Lehto, INVERSE_LEHTO),
        ("density 2tan", Command::Density, TWO_TAN_DENSITY),
        ("density exp(z)/z", Command::Density, EXP_OVER_Z_DENSITY),
    ];
    let mut differing = Vec::new();
    let mut files = 0usize;
    for (name, cmd, text) in runs {
        let cfg = config(text);
        let one = cli::execute(cmd, &cfg, 1).map_err(|err| format!("{name}: {err}"))?;
        let eight = cli::execute(cmd, &cfg, 8).map_err(|err| format!("{name}: {err}"))?;
        files += one.len();
        if one != eight {
            differing.push(name);
        }
    }
    check(
        differing.is_empty(),
        format!("{files} files compared, differing runs {differing:?}"),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let out = f();
        let (tag, detail) = match &out {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {n:>2} {tag} {name}: {detail}");
        results.push((n, name, out));
    };
    record(1, "metric suite", &criterion_1);
    record(2, "derivative identities", &criterion_2);
    record(3, "concentration lemma", &criterion_3);
    record(4, "zalcman rescaling of 2tan at 0", &criterion_4);
    record(5, "essential rescaling of tan(tan) at pi/2", &criterion_5);
    record(6, "lehto bound for exp(1/z)", &criterion_6);

    let start = Instant::now();
    let density = cli::density_pipeline(&config(TWO_TAN_DENSITY));
    let elapsed = start.elapsed();
    let density = density.map_err(|err| err.to_string());
    record(7, "density for 2tan", &|| {
        density
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|r| criterion_7(r, elapsed))
    });
    record(8, "omitted pole exp(z)/z", &criterion_8);
    record(9, "multiplier blowup near pi/2", &|| {
        density.as_ref().map_err(Clone::clone).and_then(criterion_9)
    });
    record(10, "determinism across worker counts", &criterion_10);

    let failed: Vec<usize> = results
        .iter()
        .filter(|r| r.2.is_err())
        .map(|r| r.0)
        .collect();
    println!(
        "acceptance: {}/{} passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
