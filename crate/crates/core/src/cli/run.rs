use std::fmt::Write as _;

use num_complex::Complex64;

use super::config::{region_of, RenormMode, RunConfig};
use super::CliError;
use crate::cycles::{
    cycles_csv, dedup_cycles, density_report, find_cycles, renorm_guided_search,
    zalcman_guided_cycles, Cycle, CycleSettings, DensityReport, GuidedError, GuidedResult,
    GuidedSettings,
};
use crate::dynamics::{marty_raster, raster_ppm, JuliaRaster, PixelFlag};
use crate::fnexpr::{classify_profile, parse, Expr, FunctionProfile, PoleCase, ScanSettings};
use crate::newton::NewtonSettings;
use crate::renorm::{
    deltas_csv, essential_renorm, lehto_csv, lehto_scan, limit_map_samples, steps_csv,
    zalcman_sequence, Branch, EssentialConfig, RenormError, RescalingStep, ZalcmanConfig,
};
use crate::VERSION;

/// Named output files, in write order.
pub type Files = Vec<(String, Vec<u8>)>;

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Version plus resolved config, one line each.
pub fn provenance(cfg: &RunConfig) -> Vec<String> {
    let mut lines = vec![format!("version = {VERSION:?}")];
    lines.extend(cfg.to_toml().lines().map(str::to_string));
    lines
}

fn commented(cfg: &RunConfig, body: &str) -> Vec<u8> {
    let mut s = String::new();
    for line in provenance(cfg) {
        let _ = writeln!(s, "# {line}");
    }
    s.push_str(body);
    s.into_bytes()
}

fn expr_of(cfg: &RunConfig) -> Result<Expr, CliError> {
    parse(&cfg.expr).map_err(|e| config_err(format!("expr: {e}")))
}

fn profile_of(cfg: &RunConfig, e: &Expr) -> Result<FunctionProfile, CliError> {
    let poles = cfg.resolved_poles().map_err(config_err)?;
    let scan = ScanSettings {
        seeds_re: cfg.profile.seeds[0],
        seeds_im: cfg.profile.seeds[1],
        ..Default::default()
    };
    classify_profile(e, &poles, region_of(cfg.profile.region), &scan).map_err(runtime_err)
}

fn cycle_settings(cfg: &RunConfig) -> CycleSettings {
    let c = &cfg.cycles;
    CycleSettings {
        newton: NewtonSettings {
            max_steps: c.newton_steps,
            ..Default::default()
        },
        residual_tol: c.residual_tol,
        dedup_radius: c.dedup_radius,
        band: c.band,
    }
}

fn raster_of(cfg: &RunConfig, e: &Expr) -> Result<JuliaRaster, CliError> {
    let grid = cfg
        .grid
        .spec()
        .map_err(|e| config_err(format!("grid: {e}")))?;
    marty_raster(e, &grid, cfg.render.nmax, cfg.render.threshold).map_err(runtime_err)
}

pub fn run_render(cfg: &RunConfig) -> Result<Files, CliError> {
    let e = expr_of(cfg)?;
    let profile = profile_of(cfg, &e)?;
    let raster = raster_of(cfg, &e)?;
    let counts = raster.counts();
    let mut meta = String::new();
    let _ = writeln!(meta, "pole_case = {:?}", profile.case.name());
    let _ = writeln!(meta, "julia = {}", counts.julia);
    let _ = writeln!(meta, "fatou = {}", counts.fatou);
    let _ = writeln!(meta, "pole_orbit = {}", counts.pole_orbit);
    meta.push_str(&precision_lines(&raster));
    Ok(vec![
        ("raster.ppm".into(), raster_ppm(&raster, &provenance(cfg))),
        ("raster.meta".into(), commented(cfg, &meta)),
    ])
}

/// Double-precision limits of the raster: pixel spacing against the
/// coordinate roundoff at the far edge of the grid.
fn precision_lines(raster: &JuliaRaster) -> String {
    let b = raster.grid.bounds();
    let edge = [b.re_min, b.re_max, b.im_min, b.im_max]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let spacing = raster.grid.dx().min(raster.grid.dy());
    let roundoff = f64::EPSILON * edge.max(1.0);
    let mut s = String::new();
    let _ = writeln!(s, "arithmetic = f64");
    let _ = writeln!(s, "pixel_spacing = {spacing:e}");
    let _ = writeln!(s, "coordinate_roundoff = {roundoff:e}");
    let _ = writeln!(s, "spacing_over_roundoff = {:e}", spacing / roundoff);
    s
}

pub fn run_cycles(cfg: &RunConfig) -> Result<Files, CliError> {
    let e = expr_of(cfg)?;
    let s = cycle_settings(cfg);
    let region = match cfg.cycles.region {
        Some(r) => region_of(r),
        None => cfg.grid.spec().map_err(config_err)?.bounds(),
    };
    let mut all = Vec::new();
    for p in 1..=cfg.cycles.max_period {
        all.extend(find_cycles(
            &e,
            p,
            &region,
            (cfg.cycles.seeds[0], cfg.cycles.seeds[1]),
            &s,
        ));
    }
    let all = dedup_cycles(all, s.dedup_radius);
    Ok(vec![(
        "cycles.csv".into(),
        commented(cfg, &cycles_csv(&all)),
    )])
}

fn essential_config(cfg: &RunConfig) -> Result<EssentialConfig, CliError> {
    let r = &cfg.renorm;
    if r.alpha_start > r.alpha_end {
        return Err(config_err("renorm: alpha_start exceeds alpha_end"));
    }
    Ok(EssentialConfig {
        neighborhood: r.neighborhood,
        circle_samples: r.circle_samples,
        seed_floor: r.seed_floor,
        sigma: r.sigma,
        rescale: r.rescale,
        divergence: r.divergence,
        cluster_spread: r.cluster_spread,
        ..EssentialConfig::dyadic(r.alpha_start, r.alpha_end)
    })
}

fn zalcman_config(cfg: &RunConfig) -> ZalcmanConfig {
    let r = &cfg.renorm;
    ZalcmanConfig {
        stages: r.stages,
        max_iterate: r.max_iterate,
        first_floor: r.first_floor,
        growth: r.growth,
        lattice: r.lattice,
        ..Default::default()
    }
}

/// Steps of the configured rescaling construction.
pub fn renorm_steps(cfg: &RunConfig) -> Result<(Vec<RescalingStep>, Option<Complex64>), CliError> {
    let e = expr_of(cfg)?;
    let v = cfg
        .renorm
        .point
        .resolve()
        .map_err(|m| config_err(format!("renorm.point: {m}")))?;
    match cfg.renorm.mode {
        RenormMode::Zalcman => Ok((
            zalcman_sequence(&e, v, &zalcman_config(cfg)).map_err(runtime_err)?,
            None,
        )),
        RenormMode::Essential => {
            let out = essential_renorm(&e, cfg.renorm.order, v, &essential_config(cfg)?)
                .map_err(runtime_err)?;
            Ok((out.steps, Some(v)))
        }
    }
}

pub fn run_renorm(cfg: &RunConfig) -> Result<Files, CliError> {
    let e = expr_of(cfg)?;
    let (steps, center) = renorm_steps(cfg)?;
    let compact = cfg
        .renorm
        .compact
        .spec()
        .map_err(|m| config_err(format!("renorm.compact: {m}")))?;
    let exclusion = match steps.last().map(|s| s.branch) {
        Some(Branch::Punctured(z)) => Some((z, cfg.renorm.exclusion_radius)),
        _ => None,
    };
    let samples = limit_map_samples(&e, &steps, &compact, exclusion).map_err(runtime_err)?;
    Ok(vec![
        (
            "steps.csv".into(),
            commented(cfg, &steps_csv(&steps, center)),
        ),
        (
            "deltas.csv".into(),
            commented(cfg, &deltas_csv(&samples, &steps)),
        ),
    ])
}

pub fn run_lehto(cfg: &RunConfig) -> Result<Files, CliError> {
    if cfg.lehto.radii.is_empty() {
        return Err(config_err("lehto.radii is empty"));
    }
    let e = expr_of(cfg)?;
    let v = cfg
        .lehto
        .point
        .resolve()
        .map_err(|m| config_err(format!("lehto.point: {m}")))?;
    let rows = lehto_scan(&e, v, &cfg.lehto.radii, cfg.lehto.samples).map_err(|err| match err {
        RenormError::BadRadii => config_err(err),
        other => runtime_err(other),
    })?;
    Ok(vec![(
        "lehto.csv".into(),
        commented(cfg, &lehto_csv(&rows)),
    )])
}

// ---------------------------------------------------------------------------
// Density pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityPath {
    /// Renormalisation at pre-poles, guided cycle seeds.
    PrePole,
    /// Zalcman rescaling of the iterates at sampled Julia points.
    IterateRescaling,
}

impl DensityPath {
    pub fn name(self) -> &'static str {
        match self {
            DensityPath::PrePole => "prepole-renormalization",
            DensityPath::IterateRescaling => "iterate-rescaling",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnchorOutcome {
    pub point: Complex64,
    pub escape_order: usize,
    pub steps: Vec<RescalingStep>,
    pub result: Result<GuidedResult, String>,
}

#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub point: Complex64,
    pub result: Result<Vec<Cycle>, String>,
}

#[derive(Debug, Clone)]
pub struct DensityRun {
    pub profile: FunctionProfile,
    pub raster: JuliaRaster,
    pub path: DensityPath,
    pub lattice_cycles: usize,
    pub period_budget: usize,
    pub anchors: Vec<AnchorOutcome>,
    pub samples: Vec<SampleOutcome>,
    pub cycles: Vec<Cycle>,
    pub report: DensityReport,
}

/// Julia-flagged pixels spread evenly through the raster.
pub fn sample_julia_pixels(raster: &JuliaRaster, count: usize) -> Vec<Complex64> {
    let pts: Vec<Complex64> = (0..raster.grid.len())
        .filter(|&k| raster.flag[k] == PixelFlag::Julia)
        .map(|k| raster.grid.point_at(k))
        .collect();
    if pts.len() <= count {
        return pts;
    }
    (0..count).map(|i| pts[i * pts.len() / count]).collect()
}

pub fn density_pipeline(cfg: &RunConfig) -> Result<DensityRun, CliError> {
    let e = expr_of(cfg)?;
    let profile = profile_of(cfg, &e)?;
    let raster = raster_of(cfg, &e)?;
    let s = cycle_settings(cfg);
    let budget = cfg.density.period_budget;
    let region = match cfg.cycles.region {
        Some(r) => region_of(r),
        None => raster.grid.bounds(),
    };
    let mut all = Vec::new();
    for p in 1..=budget {
        all.extend(find_cycles(
            &e,
            p,
            &region,
            (cfg.cycles.seeds[0], cfg.cycles.seeds[1]),
            &s,
        ));
    }
    let lattice_cycles = all.len();
    let mut anchors = Vec::new();
    let mut samples = Vec::new();
    let path = if profile.case == PoleCase::SinglePoleOmitted {
        DensityPath::IterateRescaling
    } else {
        DensityPath::PrePole
    };
    match path {
        DensityPath::PrePole => {
            let list: Vec<(Complex64, usize)> = match &cfg.density.anchors {
                Some(a) => a
                    .iter()
                    .map(|a| a.point.resolve().map(|p| (p, a.escape_order)))
                    .collect::<Result<_, _>>()
                    .map_err(|m| config_err(format!("density.anchors: {m}")))?,
                None => profile.declared_poles.iter().map(|&p| (p, 1)).collect(),
            };
            let ecfg = essential_config(cfg)?;
            let gs = GuidedSettings {
                cycles: s,
                lattice: cfg.density.guided_lattice,
                ..Default::default()
            };
            for (p, order) in list {
                let steps = match essential_renorm(&e, order + 1, p, &ecfg) {
                    Ok(r) => r.steps,
                    Err(err) => {
                        anchors.push(AnchorOutcome {
                            point: p,
                            escape_order: order,
                            steps: vec![],
                            result: Err(err.to_string()),
                        });
                        continue;
                    }
                };
                let eta = budget.saturating_sub(order);
                let result = renorm_guided_search(&e, &profile, p, order, &steps, eta, &gs)
                    .and_then(|g| {
                        if g.cycles.is_empty() && eta > 0 {
                            Err(GuidedError::NoCyclesFound)
                        } else {
                            Ok(g)
                        }
                    })
                    .map_err(|err| err.to_string());
                if let Ok(g) = &result {
                    all.extend(g.cycles.iter().map(|sc| sc.cycle.clone()));
                }
                anchors.push(AnchorOutcome {
                    point: p,
                    escape_order: order,
                    steps,
                    result,
                });
            }
        }
        DensityPath::IterateRescaling => {
            let zcfg = zalcman_config(cfg);
            for v in sample_julia_pixels(&raster, cfg.density.samples) {
                let result = zalcman_sequence(&e, v, &zcfg)
                    .map(|steps| {
                        zalcman_guided_cycles(&e, &steps, budget, cfg.density.guided_lattice, &s)
                    })
                    .map_err(|err| err.to_string());
                if let Ok(c) = &result {
                    all.extend(c.iter().cloned());
                }
                samples.push(SampleOutcome { point: v, result });
            }
        }
    }
    let cycles = dedup_cycles(all, s.dedup_radius);
    let report = density_report(&raster, &cycles, cfg.density.epsilon);
    Ok(DensityRun {
        profile,
        raster,
        path,
        lattice_cycles,
        period_budget: budget,
        anchors,
        samples,
        cycles,
        report,
    })
}

impl DensityRun {
    /// True when Julia pixels stay uncovered and the largest period in the
    /// budget still produced cycles, so a larger budget could help.
    pub fn budget_binding(&self) -> bool {
        let uncovered = self.report.covered < self.report.julia_pixels;
        let top =
            self.period_budget == 0 || self.cycles.iter().any(|c| c.period == self.period_budget);
        uncovered && top
    }

    pub fn report_text(&self) -> String {
        let counts = self.raster.counts();
        let mut s = String::new();
        let _ = writeln!(s, "pole_case = {}", self.profile.case.name());
        let _ = writeln!(s, "path = {}", self.path.name());
        let _ = writeln!(s, "raster_julia = {}", counts.julia);
        let _ = writeln!(s, "raster_pole_orbit = {}", counts.pole_orbit);
        let _ = writeln!(s, "raster_fatou = {}", counts.fatou);
        let _ = writeln!(s, "lattice_cycles = {}", self.lattice_cycles);
        let _ = writeln!(s, "total_cycles = {}", self.cycles.len());
        let _ = writeln!(s, "period_budget = {}", self.period_budget);
        let _ = writeln!(s, "budget_binding = {}", self.budget_binding());
        let _ = writeln!(s, "exceptional_points = not excluded");
        s.push_str(&precision_lines(&self.raster));
        s.push_str(&self.report.to_text());
        for a in &self.anchors {
            let status = match &a.result {
                Ok(g) => format!("{} cycles, {} tracked", g.cycles.len(), g.tracked.len()),
                Err(m) => format!("failed: {m}"),
            };
            let _ = writeln!(
                s,
                "anchor[{};{}] order {} steps {} = {status}",
                a.point.re,
                a.point.im,
                a.escape_order,
                a.steps.len()
            );
        }
        for p in &self.samples {
            let status = match &p.result {
                Ok(c) => format!("{} repelling cycles", c.len()),
                Err(m) => format!("failed: {m}"),
            };
            let _ = writeln!(s, "sample[{};{}] = {status}", p.point.re, p.point.im);
        }
        s
    }

    /// Tracked cycle per step, for every anchor.
    pub fn tracked_csv(&self) -> String {
        let mut s =
            String::from("anchor_re,anchor_im,step,r_n,period,w_re,w_im,mult_abs,scaled_mult\n");
        for a in &self.anchors {
            if let Ok(g) = &a.result {
                for t in &g.tracked {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{}",
                        a.point.re,
                        a.point.im,
                        t.step,
                        t.r_n,
                        t.cycle.period,
                        t.w.re,
                        t.w.im,
                        t.cycle.multiplier.norm(),
                        t.scaled_multiplier()
                    );
                }
            }
        }
        s
    }
}

pub fn run_density(cfg: &RunConfig) -> Result<Files, CliError> {
    let run = density_pipeline(cfg)?;
    Ok(density_files(cfg, &run))
}

pub fn density_files(cfg: &RunConfig, run: &DensityRun) -> Files {
    vec![
        (
            "raster.ppm".into(),
            raster_ppm(&run.raster, &provenance(cfg)),
        ),
        (
            "cycles.csv".into(),
            commented(cfg, &cycles_csv(&run.cycles)),
        ),
        ("report.txt".into(), commented(cfg, &run.report_text())),
        ("tracked.csv".into(), commented(cfg, &run.tracked_csv())),
    ]
}
