//! Rescaling constructions: the metric-space concentration walk, Zalcman
//! rescaling of a non-normal iterate family, renormalisation at an
//! isolated essential singularity, and the radial Lehto scan.
//!
//! All derivatives used for rescaling are Marty derivatives, since
//! `μ(h)(w) = r · μ(g)(v + r w)` for `h(w) = g(v + r w)`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::GridSpec;
use crate::fnexpr::{eval_jet, finite_value_and_deriv, iterate_jet, Expr};
use crate::sphere::{chordal_distance, marty_derivative, spherical_derivative, SpherePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenormError {
    #[error("concentration start point has M(u) = {0}, which is not positive and finite")]
    BadStart(f64),
    #[error("concentration inputs have mismatched lengths")]
    LengthMismatch,
    #[error("no iterate reached the growth floor at stage {0}; the family looks normal there")]
    NotNonNormal(usize),
    #[error("circle search at step {0} stayed below the seed floor")]
    SeedBelowLehtoFloor(usize),
    #[error("the rescaled derivative never exceeded the seed floor; no essential singularity")]
    NotEssential,
    #[error("step {n}: |v_n - v| / alpha_n = {ratio} is outside [7/8, 9/8]")]
    AnnulusViolated { n: usize, ratio: f64 },
    #[error("concentration refinement did not settle after {0} rounds")]
    RefinementDiverged(usize),
    #[error("sample grid meets the exclusion disc")]
    GridMeetsExclusion,
    #[error("lehto radii must be non-empty, positive and strictly decreasing")]
    BadRadii,
    #[error("invalid configuration: {0}")]
    Config(String),
}

// ---------------------------------------------------------------------------
// Concentration lemma on a finite metric space
// ---------------------------------------------------------------------------

/// Runs the doubling walk from `u`: while some `x` with
/// `d(x, v) ≤ 1/(σ M(v))` has `M(x) > 2 M(v)`, move to the violator with
/// the largest `M` (lowest index on ties). Returns every visited index.
pub fn concentration_walk<P>(
    points: &[P],
    metric: impl Fn(&P, &P) -> f64,
    m: &[f64],
    sigma: f64,
    u: usize,
) -> Result<Vec<usize>, RenormError> {
    if points.len() != m.len() || u >= points.len() {
        return Err(RenormError::LengthMismatch);
    }
    if !(m[u] > 0.0 && m[u].is_finite()) {
        return Err(RenormError::BadStart(m[u]));
    }
    let mut path = vec![u];
    let mut cur = u;
    loop {
        let radius = 1.0 / (sigma * m[cur]);
        let bar = 2.0 * m[cur];
        let next = (0..points.len())
            .filter(|&x| m[x] > bar && metric(&points[x], &points[cur]) <= radius)
            .fold(None::<usize>, |best, x| match best {
                Some(b) if m[b] >= m[x] => Some(b),
                _ => Some(x),
            });
        match next {
            Some(x) => {
                path.push(x);
                cur = x;
            }
            None => return Ok(path),
        }
    }
}

/// Concentration point `w` for `u`: `M(w) ≥ M(u)`, `w` lies within
/// `2/(σ M(u))` of `u`, and `M ≤ 2 M(w)` on the ball of radius
/// `1/(σ M(w))` around `w`.
pub fn concentration_point<P>(
    points: &[P],
    metric: impl Fn(&P, &P) -> f64,
    m: &[f64],
    sigma: f64,
    u: usize,
) -> Result<usize, RenormError> {
    concentration_walk(points, metric, m, sigma, u).map(|p| *p.last().unwrap())
}

/// Checks the three concentration conditions; the distance bound allows
/// the geometric-series slack of the doubling walk.
pub fn concentration_holds<P>(
    points: &[P],
    metric: impl Fn(&P, &P) -> f64,
    m: &[f64],
    sigma: f64,
    u: usize,
    w: usize,
) -> bool {
    let near = metric(&points[u], &points[w]) <= 2.0 / (sigma * m[u]) + 1e-12;
    let grows = m[w] >= m[u];
    let radius = 1.0 / (sigma * m[w]);
    let capped =
        (0..points.len()).all(|x| metric(&points[x], &points[w]) > radius || m[x] <= 2.0 * m[w]);
    near && grows && capped
}

/// Result of [`concentrate_adaptive`].
#[derive(Debug, Clone)]
pub struct Concentrated {
    pub point: Complex64,
    pub value: f64,
    /// Every sample the walk saw, including refinement lattices.
    pub samples: Vec<(Complex64, f64)>,
    pub start: usize,
    pub end: usize,
}

/// Concentration walk on the plane with multiscale refinement.
///
/// After each walk, a `nodes × nodes` lattice covering the disc of radius
/// `1/(σ M(w))` around the current point is added to the samples; the walk
/// resumes until a refinement adds no violator. Points rejected by
/// `admissible` or where `eval` fails are not part of the space.
pub fn concentrate_adaptive(
    eval: &(dyn Fn(Complex64) -> Option<f64> + Sync),
    admissible: &(dyn Fn(Complex64) -> bool + Sync),
    mut samples: Vec<(Complex64, f64)>,
    start: usize,
    sigma: f64,
    nodes: usize,
    max_rounds: usize,
) -> Result<Concentrated, RenormError> {
    let dist = |a: &(Complex64, f64), b: &(Complex64, f64)| (a.0 - b.0).norm();
    let mut cur = start;
    for _ in 0..max_rounds {
        let m: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let w = concentration_point(&samples, dist, &m, sigma, cur)?;
        let (wz, wm) = samples[w];
        let radius = 1.0 / (sigma * wm);
        let h = if nodes > 1 {
            2.0 * radius / (nodes - 1) as f64
        } else {
            0.0
        };
        let fresh: Vec<(Complex64, f64)> = (0..nodes * nodes)
            .into_par_iter()
            .filter_map(|k| {
                let (a, b) = ((k % nodes) as f64, (k / nodes) as f64);
                let off = Complex64::new(-radius + a * h, -radius + b * h);
                if off.norm() > radius || (off.re == 0.0 && off.im == 0.0) {
                    return None;
                }
                let z = wz + off;
                if !admissible(z) {
                    return None;
                }
                eval(z).filter(|v| v.is_finite()).map(|v| (z, v))
            })
            .collect();
        let violated = fresh.iter().any(|&(_, v)| v > 2.0 * wm);
        samples.extend(fresh);
        cur = w;
        if !violated {
            return Ok(Concentrated {
                point: wz,
                value: wm,
                samples,
                start,
                end: w,
            });
        }
    }
    Err(RenormError::RefinementDiverged(max_rounds))
}

// ---------------------------------------------------------------------------
// Rescaling steps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// The rescaled maps converge on all of ℂ.
    EntirePlane,
    /// The rescaled maps converge on ℂ minus the point `ζ`.
    Punctured(Complex64),
    Undecided,
}

impl Branch {
    pub fn label(&self) -> String {
        match self {
            Branch::EntirePlane => "entire".to_string(),
            Branch::Punctured(z) => format!("punctured({};{})", z.re, z.im),
            Branch::Undecided => "undecided".to_string(),
        }
    }
}

/// One rescaling datum `h_n(w) = f^order(v_n + r_n w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescalingStep {
    pub n: usize,
    /// Iterate used at this step.
    pub order: usize,
    pub xi: Complex64,
    pub v_n: Complex64,
    pub r_n: f64,
    /// Marty derivative of `f^order` at `v_n`.
    pub base_derivative: f64,
    /// Seed circle radius (essential-singularity construction only).
    pub alpha: Option<f64>,
    pub branch: Branch,
}

impl RescalingStep {
    /// `|v_n - v| / α_n`, for steps built around a singularity `v`.
    pub fn annulus_ratio(&self, v: Complex64) -> Option<f64> {
        self.alpha.map(|a| (self.v_n - v).norm() / a)
    }

    pub fn source_point(&self, w: Complex64) -> Complex64 {
        self.v_n + w * self.r_n
    }
}

/// Marty derivative of the rescaled map `h_n` at `w`.
pub fn rescaled_marty(e: &Expr, step: &RescalingStep, w: Complex64) -> Option<f64> {
    iterate_jet(e, step.source_point(w), step.order)
        .ok()
        .map(|j| step.r_n * marty_derivative(&j))
}

/// Value of `h_n` at `w` on the sphere.
pub fn rescaled_value(e: &Expr, step: &RescalingStep, w: Complex64) -> Option<SpherePoint> {
    iterate_jet(e, step.source_point(w), step.order)
        .ok()
        .map(|j| j.point())
}

fn marty_of_iterate(e: &Expr, order: usize) -> impl Fn(Complex64) -> Option<f64> + Sync + '_ {
    move |z| iterate_jet(e, z, order).ok().map(|j| marty_derivative(&j))
}

/// Square `n × n` node lattice clipped to the closed disc `D(c, r)`.
pub fn disc_lattice(c: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    if n <= 1 {
        return vec![c];
    }
    let h = 2.0 * r / (n - 1) as f64;
    (0..n * n)
        .filter_map(|k| {
            let off = Complex64::new(-r + (k % n) as f64 * h, -r + (k / n) as f64 * h);
            (off.norm() <= r * (1.0 + 1e-12)).then_some(c + off)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Zalcman rescaling of the iterate family
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ZalcmanConfig {
    pub stages: usize,
    pub max_iterate: usize,
    /// Growth floor at the first stage.
    pub first_floor: f64,
    /// Stage `n` needs a lattice maximum of at least `growth` times the
    /// previous stage's lattice maximum.
    pub growth: f64,
    pub lattice: usize,
    /// Times a failed stage is retried on a lattice of twice the density.
    pub refinements: usize,
    pub max_rounds: usize,
}

impl Default for ZalcmanConfig {
    fn default() -> Self {
        ZalcmanConfig {
            stages: 8,
            max_iterate: 40,
            first_floor: 10.0,
            growth: 2.0,
            lattice: 101,
            refinements: 2,
            max_rounds: 64,
        }
    }
}

/// Zalcman rescaling of `{f^m}` at `v`: at stage `n` the seed is the
/// lattice maximum of the first iterate whose Marty derivative on `D(v, 1/n)`
/// clears the floor and whose concentration point (walk with `σ = 1/n`)
/// beats the previous `μ(f^m)(v_{n-1})`; then `r_n = 1/μ(f^m)(v_n)`.
pub fn zalcman_sequence(
    e: &Expr,
    v: Complex64,
    cfg: &ZalcmanConfig,
) -> Result<Vec<RescalingStep>, RenormError> {
    if cfg.stages == 0 || cfg.max_iterate == 0 {
        return Err(RenormError::Config(
            "stages and max_iterate must be positive".into(),
        ));
    }
    let mut steps: Vec<RescalingStep> = Vec::with_capacity(cfg.stages);
    let mut prev_seed_max = 0.0f64;
    for n in 1..=cfg.stages {
        let floor = if steps.is_empty() {
            cfg.first_floor
        } else {
            cfg.growth * prev_seed_max
        };
        let prev_m = steps.last().map_or(0.0, |s| s.base_derivative);
        let mut accepted = None;
        let mut size = cfg.lattice;
        for _ in 0..=cfg.refinements {
            let lattice = disc_lattice(v, 1.0 / n as f64, size);
            accepted = zalcman_stage(e, n, &lattice, floor, prev_m, cfg)?;
            if accepted.is_some() {
                break;
            }
            size = 2 * size - 1;
        }
        let (order, xi, seed_max, v_n, m_v) = accepted.ok_or(RenormError::NotNonNormal(n))?;
        prev_seed_max = seed_max;
        steps.push(RescalingStep {
            n,
            order,
            xi,
            v_n,
            r_n: 1.0 / m_v,
            base_derivative: m_v,
            alpha: None,
            branch: Branch::EntirePlane,
        });
    }
    Ok(steps)
}

type StagePick = (usize, Complex64, f64, Complex64, f64);

/// One Zalcman stage on a fixed lattice: `(order, ξ, lattice max, v_n, M(v_n))`.
fn zalcman_stage(
    e: &Expr,
    n: usize,
    lattice: &[Complex64],
    floor: f64,
    prev_m: f64,
    cfg: &ZalcmanConfig,
) -> Result<Option<StagePick>, RenormError> {
    // Marty derivatives of f^1..f^max along each lattice orbit.
    let profiles: Vec<Vec<f64>> = lattice
        .par_iter()
        .map(|&z| iterate_marty_profile(e, z, cfg.max_iterate))
        .collect();
    for order in 1..=cfg.max_iterate {
        let samples: Vec<(Complex64, f64)> = lattice
            .iter()
            .zip(&profiles)
            .filter_map(|(&z, p)| p.get(order - 1).filter(|x| x.is_finite()).map(|&x| (z, x)))
            .collect();
        let best = samples
            .iter()
            .enumerate()
            .fold(None::<(usize, f64)>, |b, (k, s)| match b {
                Some(b) if b.1 >= s.1 => Some(b),
                _ => Some((k, s.1)),
            });
        let Some((start, seed_max)) = best.filter(|b| b.1 >= floor) else {
            continue;
        };
        let xi = samples[start].0;
        let eval = marty_of_iterate(e, order);
        let nodes = (8 * n + 1).min(81);
        let conc = concentrate_adaptive(
            &eval,
            &|_| true,
            samples,
            start,
            1.0 / n as f64,
            nodes,
            cfg.max_rounds,
        )?;
        let m_v = eval(conc.point).unwrap_or(conc.value);
        // r_n must shrink strictly; otherwise try a deeper iterate.
        if m_v > prev_m {
            return Ok(Some((order, xi, seed_max, conc.point, m_v)));
        }
    }
    Ok(None)
}

/// `μ(f^m)(z)` for `m = 1..=max`, stopping early when the orbit hits `∞`.
fn iterate_marty_profile(e: &Expr, z: Complex64, max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max);
    let mut x = z;
    let mut chain = Complex64::new(1.0, 0.0);
    for _ in 0..max {
        let Ok(j) = eval_jet(e, x) else { break };
        let jn = crate::sphere::Jet {
            deriv: j.deriv * chain,
            base: z,
            ..j
        };
        out.push(marty_derivative(&jn));
        match finite_value_and_deriv(&j) {
            Some((val, d)) => {
                chain *= d;
                x = val;
            }
            None => break,
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Renormalisation at an isolated essential singularity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EssentialConfig {
    /// Index of the first seed circle; step `n` uses `alphas[n - first_index]`.
    pub first_index: usize,
    pub alphas: Vec<f64>,
    /// Radius of the working neighbourhood around the singularity.
    pub neighborhood: f64,
    pub circle_samples: usize,
    /// Required `α_n · μ(g)(ξ_n)`.
    pub seed_floor: f64,
    pub sigma: f64,
    /// `r_n = 1 / (rescale · μ(g)(v_n))`.
    pub rescale: f64,
    pub refine_nodes: usize,
    pub max_rounds: usize,
    pub divergence: f64,
    pub cluster_spread: f64,
}

impl EssentialConfig {
    /// `α_n = 2^{-n}` for `n = first..=last`.
    pub fn dyadic(first: usize, last: usize) -> Self {
        EssentialConfig {
            first_index: first,
            alphas: (first..=last).map(|n| 0.5f64.powi(n as i32)).collect(),
            ..Default::default()
        }
    }
}

impl Default for EssentialConfig {
    fn default() -> Self {
        EssentialConfig {
            first_index: 3,
            alphas: (3..=10).map(|n| 0.5f64.powi(n)).collect(),
            neighborhood: 0.5,
            circle_samples: 720,
            seed_floor: 1.0,
            sigma: 8.0,
            rescale: 16.0,
            refine_nodes: 33,
            max_rounds: 64,
            divergence: 1e4,
            cluster_spread: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EssentialRenorm {
    pub steps: Vec<RescalingStep>,
    pub branch: Branch,
}

/// Renormalises `g = f^order` around the essential singularity `v`.
///
/// Per radius `α_n`: the seed `ξ_n` maximises `μ(g)` on the circle
/// `|z - v| = α_n`; the concentration walk with `σ = 8` runs on
/// `D(v, W) \ D(v, α_n/4)`; `r_n = 1/(16 μ(g)(v_n))`. The branch records
/// whether `(v - v_n)/r_n` diverges or clusters.
pub fn essential_renorm(
    e: &Expr,
    order: usize,
    v: Complex64,
    cfg: &EssentialConfig,
) -> Result<EssentialRenorm, RenormError> {
    if cfg.alphas.is_empty() || cfg.alphas.iter().any(|a| !(*a > 0.0)) || cfg.circle_samples == 0 {
        return Err(RenormError::Config(
            "alphas must be positive and circle_samples non-zero".into(),
        ));
    }
    let eval = marty_of_iterate(e, order);
    let mut steps = Vec::with_capacity(cfg.alphas.len());
    for (k, &alpha) in cfg.alphas.iter().enumerate() {
        let n = cfg.first_index + k;
        // Seed search, refining the circle sampling if needed.
        let mut seed = None;
        for refine in 0..4 {
            let count = cfg.circle_samples << refine;
            let best = (0..count)
                .into_par_iter()
                .filter_map(|s| {
                    let z = v + Complex64::from_polar(alpha, TAU * s as f64 / count as f64);
                    eval(z).filter(|m| m.is_finite()).map(|m| (z, m))
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(None::<(Complex64, f64)>, |b, s| match b {
                    Some(b) if b.1 >= s.1 => Some(b),
                    _ => Some(s),
                });
            if let Some(b) = best {
                if alpha * b.1 >= cfg.seed_floor {
                    seed = Some(b);
                    break;
                }
            }
        }
        let Some((xi, m_xi)) = seed else {
            return Err(if steps.is_empty() {
                RenormError::NotEssential
            } else {
                RenormError::SeedBelowLehtoFloor(n)
            });
        };
        let inner = alpha / 4.0;
        let admissible = |z: Complex64| {
            let d = (z - v).norm();
            d >= inner && d <= cfg.neighborhood
        };
        let conc = concentrate_adaptive(
            &eval,
            &admissible,
            vec![(xi, m_xi)],
            0,
            cfg.sigma,
            cfg.refine_nodes,
            cfg.max_rounds,
        )?;
        let m_v = eval(conc.point).unwrap_or(conc.value);
        let step = RescalingStep {
            n,
            order,
            xi,
            v_n: conc.point,
            r_n: 1.0 / (cfg.rescale * m_v),
            base_derivative: m_v,
            alpha: Some(alpha),
            branch: Branch::Undecided,
        };
        let ratio = step.annulus_ratio(v).unwrap();
        if !(7.0 / 8.0..=9.0 / 8.0).contains(&ratio) {
            return Err(RenormError::AnnulusViolated { n, ratio });
        }
        steps.push(step);
    }
    let branch = decide_branch(v, &steps, cfg.divergence, cfg.cluster_spread);
    for s in &mut steps {
        s.branch = branch;
    }
    Ok(EssentialRenorm { steps, branch })
}

/// Branch rule on `t_n = (v - v_n)/r_n` over the last three steps.
pub fn decide_branch(
    v: Complex64,
    steps: &[RescalingStep],
    divergence: f64,
    spread: f64,
) -> Branch {
    if steps.len() < 3 {
        return Branch::Undecided;
    }
    let t: Vec<Complex64> = steps[steps.len() - 3..]
        .iter()
        .map(|s| (v - s.v_n) / s.r_n)
        .collect();
    if t.iter().all(|x| x.norm() > divergence) {
        return Branch::EntirePlane;
    }
    let mean = t.iter().sum::<Complex64>() / 3.0;
    let worst = t.iter().map(|x| (x - mean).norm()).fold(0.0, f64::max);
    if mean.norm() > 0.0 && worst <= spread * mean.norm() {
        Branch::Punctured(mean)
    } else {
        Branch::Undecided
    }
}

// ---------------------------------------------------------------------------
// Limit-map samples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LimitMapSamples {
    pub compact: GridSpec,
    /// `values[k][p]`: `h_k` at sample `p`; `None` where evaluation failed.
    pub values: Vec<Vec<Option<SpherePoint>>>,
    /// Sup chordal distance between consecutive `h_k` over common samples.
    pub deltas: Vec<f64>,
    pub excluded: Option<(Complex64, f64)>,
}

/// Samples each `h_n` on the grid `K` and measures consecutive sup-distances.
pub fn limit_map_samples(
    e: &Expr,
    steps: &[RescalingStep],
    compact: &GridSpec,
    exclusion: Option<(Complex64, f64)>,
) -> Result<LimitMapSamples, RenormError> {
    let pts: Vec<Complex64> = (0..compact.len()).map(|k| compact.point_at(k)).collect();
    if let Some((zeta, rad)) = exclusion {
        if pts.iter().any(|p| (p - zeta).norm() <= rad) {
            return Err(RenormError::GridMeetsExclusion);
        }
    }
    let values: Vec<Vec<Option<SpherePoint>>> = steps
        .iter()
        .map(|s| pts.par_iter().map(|&w| rescaled_value(e, s, w)).collect())
        .collect();
    let deltas = values
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .filter_map(|(a, b)| Some(chordal_distance((*a)?, (*b)?)))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(LimitMapSamples {
        compact: *compact,
        values,
        deltas,
        excluded: exclusion,
    })
}

// ---------------------------------------------------------------------------
// Lehto scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LehtoRow {
    pub radius: f64,
    /// Max over the sampled circle of `|z - v| · g♯(z)`.
    pub circle_max: f64,
    pub argmax: Complex64,
    pub running_sup: f64,
}

/// Radial scan of `|z - v| · g♯(z)` near `v`, with the paper-style
/// spherical derivative (including the source factor).
pub fn lehto_scan(
    e: &Expr,
    v: Complex64,
    radii: &[f64],
    samples: usize,
) -> Result<Vec<LehtoRow>, RenormError> {
    let ok = !radii.is_empty()
        && radii.iter().all(|r| *r > 0.0 && r.is_finite())
        && radii.windows(2).all(|w| w[1] < w[0]);
    if !ok || samples == 0 {
        return Err(RenormError::BadRadii);
    }
    let mut rows = Vec::with_capacity(radii.len());
    let mut sup = 0.0f64;
    for &r in radii {
        let vals: Vec<Option<(Complex64, f64)>> = (0..samples)
            .into_par_iter()
            .map(|k| {
                let z = v + Complex64::from_polar(r, TAU * k as f64 / samples as f64);
                eval_jet(e, z)
                    .ok()
                    .map(|j| (z, (z - v).norm() * spherical_derivative(&j)))
            })
            .collect();
        let (argmax, circle_max) = vals
            .into_iter()
            .flatten()
            .filter(|s| s.1.is_finite())
            .fold((v, 0.0), |b, s| if s.1 > b.1 { s } else { b });
        sup = sup.max(circle_max);
        rows.push(LehtoRow {
            radius: r,
            circle_max,
            argmax,
            running_sup: sup,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

pub const STEP_CSV_HEADER: &str =
    "n,order,xi_re,xi_im,v_re,v_im,r_n,base_derivative,alpha_n,annulus_ratio,branch";

/// Step table; `center` is the singularity for the annulus-ratio column.
pub fn steps_csv(steps: &[RescalingStep], center: Option<Complex64>) -> String {
    let mut s = String::from(STEP_CSV_HEADER);
    s.push('\n');
    for st in steps {
        let alpha = st.alpha.map(|a| a.to_string()).unwrap_or_default();
        let ratio = center
            .and_then(|c| st.annulus_ratio(c))
            .map(|a| a.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            st.n,
            st.order,
            st.xi.re,
            st.xi.im,
            st.v_n.re,
            st.v_n.im,
            st.r_n,
            st.base_derivative,
            alpha,
            ratio,
            st.branch.label()
        );
    }
    s
}

pub const LEHTO_CSV_HEADER: &str = "radius,circle_max,argmax_re,argmax_im,running_sup";

pub fn lehto_csv(rows: &[LehtoRow]) -> String {
    let mut s = String::from(LEHTO_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.radius, r.circle_max, r.argmax.re, r.argmax.im, r.running_sup
        );
    }
    s
}

pub fn deltas_csv(samples: &LimitMapSamples, steps: &[RescalingStep]) -> String {
    let mut s = String::from("from_n,to_n,sup_chordal\n");
    for (k, d) in samples.deltas.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", steps[k].n, steps[k + 1].n, d);
    }
    s
}
