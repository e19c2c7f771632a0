//! Periodic points by Newton's method on `f^n(z) - z`, multiplier
//! classification, the rescaling-guided search near a pre-pole, and the
//! density report.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{find_prepoles, DynamicsError, JuliaRaster, PrePoleSettings};
use crate::fnexpr::{
    eval_jet, finite_value_and_deriv, iterate_jet, Expr, FunctionProfile, POLE_WITNESS_TOL,
};
use crate::newton::{self, dedup_points, NewtonSettings, Region, Target};
use crate::renorm::{disc_lattice, RescalingStep};
use crate::sphere::{chordal, Chart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CycleClass {
    Repelling,
    Attracting,
    Indifferent,
}

impl CycleClass {
    pub fn name(self) -> &'static str {
        match self {
            CycleClass::Repelling => "repelling",
            CycleClass::Attracting => "attracting",
            CycleClass::Indifferent => "indifferent",
        }
    }
}

impl fmt::Display for CycleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify(multiplier: Complex64, band: f64) -> CycleClass {
    let m = multiplier.norm();
    if m > 1.0 + band {
        CycleClass::Repelling
    } else if m < 1.0 - band {
        CycleClass::Attracting
    } else {
        CycleClass::Indifferent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// The orbit, starting at its lexicographically smallest point.
    pub points: Vec<Complex64>,
    pub period: usize,
    pub multiplier: Complex64,
    pub class: CycleClass,
    /// `|f^period(points[0]) - points[0]|`.
    pub residual: f64,
}

impl Cycle {
    pub fn representative(&self) -> Complex64 {
        self.points[0]
    }

    /// Orbit point closest to `z` in the plane.
    pub fn nearest_point(&self, z: Complex64) -> Complex64 {
        *self
            .points
            .iter()
            .min_by(|a, b| (*a - z).norm().total_cmp(&(*b - z).norm()))
            .expect("cycles are non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSettings {
    pub newton: NewtonSettings,
    /// Accepted when `residual ≤ residual_tol · (1 + |multiplier|)`.
    pub residual_tol: f64,
    pub dedup_radius: f64,
    pub band: f64,
}

impl Default for CycleSettings {
    fn default() -> Self {
        CycleSettings {
            newton: NewtonSettings::default(),
            residual_tol: 1e-9,
            dedup_radius: 1e-7,
            band: 1e-6,
        }
    }
}

/// Cycles of period dividing `period` reached by Newton from a lattice on
/// `region`, keeping those with a representative inside `region`.
pub fn find_cycles(
    e: &Expr,
    period: usize,
    region: &Region,
    seeds: (usize, usize),
    s: &CycleSettings,
) -> Vec<Cycle> {
    let lattice = region.lattice(seeds.0, seeds.1);
    cycles_from_seeds(e, period, &lattice, s)
        .into_iter()
        .filter(|c| c.points.iter().any(|&z| region.contains(z)))
        .collect()
}

/// Newton on `f^period(z) = z` from each seed; roots are reduced to their
/// primitive period, canonicalised and deduplicated.
pub fn cycles_from_seeds(
    e: &Expr,
    period: usize,
    seeds: &[Complex64],
    s: &CycleSettings,
) -> Vec<Cycle> {
    if period == 0 {
        return Vec::new();
    }
    let found: Vec<Cycle> = seeds
        .par_iter()
        .filter_map(|&z| newton::solve(e, period, Target::Identity, z, &s.newton))
        .filter_map(|r| cycle_through(e, r.z, period, s))
        .collect();
    dedup_cycles(found, s.dedup_radius)
}

/// Merges cycle lists (sorted by period, then representative).
pub fn dedup_cycles(cycles: Vec<Cycle>, radius: f64) -> Vec<Cycle> {
    let mut by_period: BTreeMap<usize, Vec<Cycle>> = BTreeMap::new();
    for c in cycles {
        by_period.entry(c.period).or_default().push(c);
    }
    by_period
        .into_values()
        .flat_map(|v| dedup_points(v, radius, |c| c.points[0]))
        .collect()
}

/// Builds the cycle through an approximate root `z` of `f^period(z) = z`.
pub fn cycle_through(e: &Expr, z: Complex64, period: usize, s: &CycleSettings) -> Option<Cycle> {
    let orbit = finite_orbit(e, z, period)?;
    if (orbit[period] - z).norm() > s.residual_tol.max(s.dedup_radius) * (1.0 + z.norm()) * 1e3 {
        return None;
    }
    let primitive = (1..=period)
        .filter(|&d| period.is_multiple_of(d))
        .find(|&d| d == period || (orbit[d] - z).norm() <= s.dedup_radius)?;
    let start = (0..primitive).min_by(|&a, &b| {
        orbit[a]
            .re
            .total_cmp(&orbit[b].re)
            .then(orbit[a].im.total_cmp(&orbit[b].im))
    })?;
    let polished = newton::solve(e, primitive, Target::Identity, orbit[start], &s.newton)?;
    let rep = polished.z;
    let points = finite_orbit(e, rep, primitive)?;
    let multiplier = multiplier_along(e, &points[..primitive])?;
    let residual = (points[primitive] - rep).norm();
    if !(residual <= s.residual_tol * (1.0 + multiplier.norm())) {
        return None;
    }
    // Primitive check at the polished point.
    for d in (1..primitive).filter(|d| primitive % d == 0) {
        if (points[d] - rep).norm() <= s.dedup_radius {
            return None;
        }
    }
    let mut pts = points[..primitive].to_vec();
    // Polishing may move the lexicographic minimum to another orbit point.
    let k = (0..primitive).min_by(|&a, &b| {
        pts[a]
            .re
            .total_cmp(&pts[b].re)
            .then(pts[a].im.total_cmp(&pts[b].im))
    })?;
    pts.rotate_left(k);
    let residual = if k == 0 {
        residual
    } else {
        (finite_orbit(e, pts[0], primitive)?[primitive] - pts[0]).norm()
    };
    Some(Cycle {
        points: pts,
        period: primitive,
        multiplier,
        class: classify(multiplier, s.band),
        residual,
    })
}

/// `z, f(z), …, f^n(z)`, or `None` if the orbit meets `∞`.
fn finite_orbit(e: &Expr, z: Complex64, n: usize) -> Option<Vec<Complex64>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(z);
    let mut x = z;
    for _ in 0..n {
        let (v, _) = finite_value_and_deriv(&eval_jet(e, x).ok()?)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return None;
        }
        out.push(v);
        x = v;
    }
    Some(out)
}

/// Product of `f'` along the given orbit points.
pub fn multiplier_along(e: &Expr, points: &[Complex64]) -> Option<Complex64> {
    points.iter().try_fold(Complex64::new(1.0, 0.0), |acc, &z| {
        let (_, d) = finite_value_and_deriv(&eval_jet(e, z).ok()?)?;
        Some(acc * d)
    })
}

/// Zeros of `f'` in `region`, by Newton with a central-difference `f''`.
pub fn critical_points(
    e: &Expr,
    region: &Region,
    seeds: (usize, usize),
    tol: f64,
) -> Vec<Complex64> {
    let deriv = |z: Complex64| {
        eval_jet(e, z)
            .ok()
            .and_then(|j| finite_value_and_deriv(&j))
            .map(|(_, d)| d)
    };
    let found: Vec<Complex64> = region
        .lattice(seeds.0, seeds.1)
        .par_iter()
        .filter_map(|&seed| {
            let mut z = seed;
            for _ in 0..60 {
                let d = deriv(z)?;
                let h = 1e-6 * z.norm().max(1.0);
                let dd = (deriv(z + h)? - deriv(z - h)?) / (2.0 * h);
                let step = d / dd;
                if !(step.re.is_finite() && step.im.is_finite()) {
                    return None;
                }
                z -= step;
                if step.norm() <= 1e-14 * z.norm().max(1.0) {
                    break;
                }
            }
            let d = deriv(z)?;
            (d.norm() <= tol && region.contains(z)).then_some(z)
        })
        .collect();
    dedup_points(found, 1e-7, |z| *z)
}

// ---------------------------------------------------------------------------
// Search guided by the rescaling sequence at a pre-pole
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidedError {
    #[error("{point} is not a pre-pole of escape order {order}")]
    NotPrePole { point: Complex64, order: usize },
    #[error(
        "another pre-pole of escape order at most {order} lies at {other}, inside the seed annuli"
    )]
    IsolationFailed { order: usize, other: Complex64 },
    #[error("{point} is within the exclusion radius of {near}")]
    Excluded { point: Complex64, near: Complex64 },
    #[error("no cycles found within the period budget")]
    NoCyclesFound,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone)]
pub struct GuidedSettings {
    pub cycles: CycleSettings,
    /// Seeds are `v_n + r_n · w` for `w` on this `n × n` unit-disc lattice.
    pub lattice: usize,
    pub exclusion: Vec<Complex64>,
    pub exclusion_radius: f64,
    /// Also exclude critical points of `f` near `p`.
    pub exclude_critical: bool,
    pub isolation: PrePoleSettings,
}

impl Default for GuidedSettings {
    fn default() -> Self {
        GuidedSettings {
            cycles: CycleSettings::default(),
            lattice: 9,
            exclusion: Vec::new(),
            exclusion_radius: 1e-3,
            exclude_critical: true,
            isolation: PrePoleSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourcedCycle {
    pub cycle: Cycle,
    pub step: usize,
    /// Orbit point closest to the pre-pole.
    pub anchor: Complex64,
}

/// Per-step record of the tracked cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedCycle {
    pub step: usize,
    pub r_n: f64,
    pub cycle: Cycle,
    /// Rescaled coordinate `(anchor - v_n)/r_n`.
    pub w: Complex64,
}

impl TrackedCycle {
    pub fn scaled_multiplier(&self) -> f64 {
        self.r_n * self.cycle.multiplier.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidedResult {
    pub cycles: Vec<SourcedCycle>,
    pub tracked: Vec<TrackedCycle>,
}

/// Checks that `f^order(p) = ∞` with all earlier orbit points finite.
pub fn verify_prepole(e: &Expr, p: Complex64, order: usize) -> Result<(), GuidedError> {
    match iterate_jet(e, p, order) {
        Ok(j) if order > 0 && j.chart == Chart::Reciprocal && j.value.norm() < POLE_WITNESS_TOL => {
            Ok(())
        }
        _ => Err(GuidedError::NotPrePole { point: p, order }),
    }
}

/// Seeds Newton at `v_n + r_n · (unit-disc lattice)` for periods
/// `order + 1 ..= order + budget` and keeps repelling cycles passing
/// within `2 · max α_n` of `p`.
pub fn renorm_guided_search(
    e: &Expr,
    profile: &FunctionProfile,
    p: Complex64,
    order: usize,
    steps: &[RescalingStep],
    budget: usize,
    s: &GuidedSettings,
) -> Result<GuidedResult, GuidedError> {
    verify_prepole(e, p, order)?;
    let reach = 2.0
        * steps
            .iter()
            .filter_map(|st| st.alpha)
            .fold(0.0, f64::max)
            .max(
                steps
                    .iter()
                    .map(|st| (st.v_n - p).norm())
                    .fold(0.0, f64::max),
            );
    for &x in &s.exclusion {
        if (x - p).norm() <= s.exclusion_radius {
            return Err(GuidedError::Excluded { point: p, near: x });
        }
    }
    if s.exclude_critical {
        let box_ = Region::around(p, reach.max(s.exclusion_radius));
        if let Some(c) = critical_points(e, &box_, (9, 9), 1e-10)
            .into_iter()
            .find(|c| (c - p).norm() <= s.exclusion_radius)
        {
            return Err(GuidedError::Excluded { point: p, near: c });
        }
    }
    if reach > 0.0 && order > 1 {
        let region = Region::around(p, reach);
        match find_prepoles(e, profile, order - 2, &region, &s.isolation) {
            Ok(found) => {
                if let Some(q) = found.iter().find(|q| {
                    (q.point - p).norm() > s.isolation.dedup_radius && (q.point - p).norm() <= reach
                }) {
                    return Err(GuidedError::IsolationFailed {
                        order: order - 1,
                        other: q.point,
                    });
                }
            }
            Err(DynamicsError::NoSeedsConverged) => {}
            Err(err) => return Err(err.into()),
        }
    } else if reach > 0.0 {
        // Order 1: p is itself a pole; other poles must stay outside.
        if let Some(q) = profile
            .declared_poles
            .iter()
            .find(|q| (*q - p).norm() > 1e-12 && (*q - p).norm() <= reach)
        {
            return Err(GuidedError::IsolationFailed {
                order: 0,
                other: *q,
            });
        }
    }
    let unit = disc_lattice(Complex64::new(0.0, 0.0), 1.0, s.lattice);
    let mut cycles = Vec::new();
    let mut tracked: Vec<TrackedCycle> = Vec::new();
    for st in steps {
        let seeds: Vec<Complex64> = unit.iter().map(|&w| st.source_point(w)).collect();
        let mut here: Vec<Cycle> = Vec::new();
        for m in order + 1..=order + budget {
            here.extend(cycles_from_seeds(e, m, &seeds, &s.cycles));
        }
        let here = dedup_cycles(here, s.cycles.dedup_radius);
        let near: Vec<Cycle> = here
            .into_iter()
            .filter(|c| {
                c.class == CycleClass::Repelling && (c.nearest_point(p) - p).norm() <= reach
            })
            .collect();
        // Track one cycle: the first step picks the smallest period and
        // smallest |w|; later steps keep that period and the nearest w.
        let prev = tracked.last().map(|t| (t.cycle.period, t.w));
        let pick = near
            .iter()
            .filter(|c| prev.is_none_or(|(per, _)| c.period == per))
            .map(|c| {
                let w = (c.nearest_point(st.v_n) - st.v_n) / st.r_n;
                (c, w)
            })
            .min_by(|a, b| {
                let ka = prev.map_or((a.0.period as f64, a.1.norm()), |(_, w0)| {
                    (0.0, (a.1 - w0).norm())
                });
                let kb = prev.map_or((b.0.period as f64, b.1.norm()), |(_, w0)| {
                    (0.0, (b.1 - w0).norm())
                });
                ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
            });
        if let Some((c, w)) = pick {
            tracked.push(TrackedCycle {
                step: st.n,
                r_n: st.r_n,
                cycle: c.clone(),
                w,
            });
        }
        cycles.extend(near.into_iter().map(|c| SourcedCycle {
            anchor: c.nearest_point(p),
            cycle: c,
            step: st.n,
        }));
    }
    Ok(GuidedResult { cycles, tracked })
}

/// Repelling cycles of period `1..=max_period` seeded around each step of
/// a Zalcman sequence.
pub fn zalcman_guided_cycles(
    e: &Expr,
    steps: &[RescalingStep],
    max_period: usize,
    lattice: usize,
    s: &CycleSettings,
) -> Vec<Cycle> {
    let unit = disc_lattice(Complex64::new(0.0, 0.0), 1.0, lattice);
    let mut all = Vec::new();
    for st in steps {
        let seeds: Vec<Complex64> = unit.iter().map(|&w| st.source_point(w)).collect();
        for m in 1..=max_period {
            all.extend(
                cycles_from_seeds(e, m, &seeds, s)
                    .into_iter()
                    .filter(|c| c.class == CycleClass::Repelling),
            );
        }
    }
    dedup_cycles(all, s.dedup_radius)
}

// ---------------------------------------------------------------------------
// Density report
// ---------------------------------------------------------------------------

/// Upper edges of the chordal-distance histogram bins; the last bin is
/// everything above `0.5`.
pub const HISTOGRAM_EDGES: [f64; 6] = [1e-3, 1e-2, 5e-2, 1e-1, 5e-1, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub epsilon: f64,
    pub julia_pixels: usize,
    pub covered: usize,
    pub coverage: f64,
    pub vacuous: bool,
    pub max_distance: f64,
    pub histogram: [usize; 6],
    /// period → (all cycles, repelling cycles).
    pub per_period: BTreeMap<usize, (usize, usize)>,
    pub repelling_points: usize,
}

/// Chordal distance from each Julia or pole-orbit pixel to the nearest
/// repelling periodic point.
pub fn density_report(raster: &JuliaRaster, cycles: &[Cycle], epsilon: f64) -> DensityReport {
    let targets: Vec<Complex64> = cycles
        .iter()
        .filter(|c| c.class == CycleClass::Repelling)
        .flat_map(|c| c.points.iter().copied())
        .collect();
    let pixels = raster.julia_points();
    let dists: Vec<f64> = pixels
        .par_iter()
        .map(|&z| {
            targets
                .iter()
                .map(|&t| chordal(z, t))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let covered = dists.iter().filter(|&&d| d <= epsilon).count();
    let mut histogram = [0usize; 6];
    for &d in &dists {
        let k = HISTOGRAM_EDGES
            .iter()
            .position(|&edge| d < edge)
            .unwrap_or(5);
        histogram[k] += 1;
    }
    let mut per_period = BTreeMap::new();
    for c in cycles {
        let e: &mut (usize, usize) = per_period.entry(c.period).or_default();
        e.0 += 1;
        if c.class == CycleClass::Repelling {
            e.1 += 1;
        }
    }
    let vacuous = pixels.is_empty();
    DensityReport {
        epsilon,
        julia_pixels: pixels.len(),
        covered,
        coverage: if vacuous {
            1.0
        } else {
            covered as f64 / pixels.len() as f64
        },
        vacuous,
        max_distance: dists.iter().copied().filter(|d| d.is_finite()).fold(
            if dists.iter().any(|d| d.is_infinite()) {
                2.0
            } else {
                0.0
            },
            f64::max,
        ),
        histogram,
        per_period,
        repelling_points: targets.len(),
    }
}

impl DensityReport {
    /// Fixed-order `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "julia_pixels = {}", self.julia_pixels);
        let _ = writeln!(s, "covered_pixels = {}", self.covered);
        let _ = writeln!(s, "coverage = {}", self.coverage);
        let _ = writeln!(s, "vacuous = {}", self.vacuous);
        let _ = writeln!(s, "max_distance = {}", self.max_distance);
        let _ = writeln!(s, "repelling_points = {}", self.repelling_points);
        let mut lo = 0.0;
        for (k, count) in self.histogram.iter().enumerate() {
            let hi = HISTOGRAM_EDGES[k];
            let _ = writeln!(s, "histogram[{lo},{hi}) = {count}");
            lo = hi;
        }
        for (p, (all, rep)) in &self.per_period {
            let _ = writeln!(s, "period[{p}] = {all} cycles, {rep} repelling");
        }
        s
    }
}

pub const CYCLE_CSV_HEADER: &str = "period,rep_re,rep_im,mult_re,mult_im,mult_abs,class,residual";

pub fn cycles_csv(cycles: &[Cycle]) -> String {
    let mut s = String::from(CYCLE_CSV_HEADER);
    s.push('\n');
    for c in cycles {
        let z = c.points[0];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.period,
            z.re,
            z.im,
            c.multiplier.re,
            c.multiplier.im,
            c.multiplier.norm(),
            c.class,
            c.residual
        );
    }
    s
}
