use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::Expr;
use super::eval::eval_jet;
use crate::newton::{self, NewtonSettings, Region, Target};
use crate::sphere::Chart;

/// Largest `|1/f(p)|` accepted as numerical evidence that `p` is a pole.
pub const POLE_WITNESS_TOL: f64 = 1e-6;

/// Which of the two density theorems applies to a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PoleCase {
    TwoOrMorePoles,
    SinglePoleNotOmitted,
    /// Certified only heuristically: no preimage of the pole was found.
    SinglePoleOmitted,
}

impl PoleCase {
    pub fn name(self) -> &'static str {
        match self {
            PoleCase::TwoOrMorePoles => "TwoOrMorePoles",
            PoleCase::SinglePoleNotOmitted => "SinglePoleNotOmitted",
            PoleCase::SinglePoleOmitted => "SinglePoleOmitted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    /// `|1/f(pole)|` at a declared pole.
    PoleWitness { pole: Complex64, recip_modulus: f64 },
    /// A root of `f(z) = pole`, so the pole is not an omitted value.
    PoleAttained { point: Complex64, residual: f64 },
    /// Heuristic: none of `seeds` converged to a root of `f(z) = pole`.
    NoPreimageFound { pole: Complex64, seeds: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionProfile {
    pub declared_poles: Vec<Complex64>,
    pub case: PoleCase,
    pub scan_region: Region,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("no poles declared")]
    NoPoles,
    #[error("declared pole {0} is not witnessed numerically")]
    PoleNotWitnessed(Complex64),
}

/// Seed lattice and tolerances for the preimage scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanSettings {
    pub seeds_re: usize,
    pub seeds_im: usize,
    pub residual_tol: f64,
    pub newton: NewtonSettings,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            seeds_re: 41,
            seeds_im: 41,
            residual_tol: 1e-10,
            newton: NewtonSettings::default(),
        }
    }
}

/// Checks that `|1/f(p)| < POLE_WITNESS_TOL` in the reciprocal chart.
pub fn witness_pole(e: &Expr, p: Complex64) -> Result<f64, ProfileError> {
    match eval_jet(e, p) {
        Ok(j) if j.chart == Chart::Reciprocal && j.value.norm() < POLE_WITNESS_TOL => {
            Ok(j.value.norm())
        }
        _ => Err(ProfileError::PoleNotWitnessed(p)),
    }
}

/// Splits maps into the "at least two poles / attained pole" case and the
/// "single omitted pole" case.
pub fn classify_profile(
    e: &Expr,
    declared_poles: &[Complex64],
    scan_region: Region,
    scan: &ScanSettings,
) -> Result<FunctionProfile, ProfileError> {
    if declared_poles.is_empty() {
        return Err(ProfileError::NoPoles);
    }
    let mut evidence = Vec::new();
    for &p in declared_poles {
        let recip_modulus = witness_pole(e, p)?;
        evidence.push(Evidence::PoleWitness {
            pole: p,
            recip_modulus,
        });
    }
    let case = if declared_poles.len() >= 2 {
        PoleCase::TwoOrMorePoles
    } else {
        let p = declared_poles[0];
        let seeds = scan_region.lattice(scan.seeds_re, scan.seeds_im);
        let hit = seeds
            .par_iter()
            .map(|&s| newton::solve(e, 1, Target::Point(p), s, &scan.newton))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .filter(|r| r.residual <= scan.residual_tol && scan_region.contains(r.z))
            .min_by(|a, b| a.residual.total_cmp(&b.residual));
        match hit {
            Some(r) => {
                evidence.push(Evidence::PoleAttained {
                    point: r.z,
                    residual: r.residual,
                });
                PoleCase::SinglePoleNotOmitted
            }
            None => {
                evidence.push(Evidence::NoPreimageFound {
                    pole: p,
                    seeds: seeds.len(),
                });
                PoleCase::SinglePoleOmitted
            }
        }
    };
    Ok(FunctionProfile {
        declared_poles: declared_poles.to_vec(),
        case,
        scan_region,
        evidence,
    })
}
