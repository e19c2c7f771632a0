//! Run configuration: TOML with one section per subcommand. Every field
//! except `expr` has a default; the resolved form is embedded in outputs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::GridSpec;
use crate::fnexpr::parse;
use crate::newton::Region;

/// A complex number written as a real, an `[re, im]` pair, or a constant
/// expression such as `"pi/2"` or `"1 + 2*i"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

impl ComplexValue {
    pub fn resolve(&self) -> Result<Complex64, String> {
        match self {
            ComplexValue::Real(x) => Ok(Complex64::new(*x, 0.0)),
            ComplexValue::Pair([a, b]) => Ok(Complex64::new(*a, *b)),
            ComplexValue::Text(t) => {
                let e = parse(t).map_err(|err| format!("{t:?}: {err}"))?;
                match e.constant_value() {
                    // `+ 0.0` turns a negative zero positive
                    Some(v) => Ok(Complex64::new(v.re + 0.0, v.im + 0.0)),
                    None => Err(format!("{t:?} is not a finite constant")),
                }
            }
        }
    }
}

impl Default for ComplexValue {
    fn default() -> Self {
        ComplexValue::Real(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub cycles: CyclesSection,
    #[serde(default)]
    pub renorm: RenormSection,
    #[serde(default)]
    pub lehto: LehtoSection,
    #[serde(default)]
    pub density: DensitySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    /// `[re_min, re_max, im_min, im_max]` searched for preimages of a pole.
    pub region: [f64; 4],
    pub seeds: [usize; 2],
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            region: [-4.0, 4.0, -4.0, 4.0],
            seeds: [41, 41],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub center: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            center: [0.0, 0.0],
            width: 4.0,
            height: 4.0,
            nx: 256,
            ny: 256,
        }
    }
}

impl GridSection {
    pub fn spec(&self) -> Result<GridSpec, String> {
        GridSpec::new(
            Complex64::new(self.center[0], self.center[1]),
            self.width,
            self.height,
            self.nx,
            self.ny,
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSection {
    pub nmax: usize,
    pub threshold: f64,
}

impl Default for RenderSection {
    fn default() -> Self {
        RenderSection {
            nmax: 60,
            threshold: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclesSection {
    /// Periods `1..=max_period` are searched.
    pub max_period: usize,
    /// Seed region; the grid bounds when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<[f64; 4]>,
    pub seeds: [usize; 2],
    pub residual_tol: f64,
    pub dedup_radius: f64,
    pub band: f64,
    pub newton_steps: usize,
}

impl Default for CyclesSection {
    fn default() -> Self {
        CyclesSection {
            max_period: 4,
            region: None,
            seeds: [101, 101],
            residual_tol: 1e-9,
            dedup_radius: 1e-7,
            band: 1e-6,
            newton_steps: 80,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenormMode {
    Zalcman,
    Essential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormSection {
    pub mode: RenormMode,
    pub point: ComplexValue,
    /// Iterate whose singularity is renormalised (essential mode).
    pub order: usize,
    pub alpha_start: usize,
    pub alpha_end: usize,
    pub neighborhood: f64,
    pub circle_samples: usize,
    pub seed_floor: f64,
    pub sigma: f64,
    pub rescale: f64,
    pub divergence: f64,
    pub cluster_spread: f64,
    pub stages: usize,
    pub max_iterate: usize,
    pub first_floor: f64,
    pub growth: f64,
    pub lattice: usize,
    /// Grid in the rescaled coordinate on which consecutive maps are compared.
    pub compact: GridSection,
    pub exclusion_radius: f64,
}

impl Default for RenormSection {
    fn default() -> Self {
        RenormSection {
            mode: RenormMode::Zalcman,
            point: ComplexValue::Real(0.0),
            order: 2,
            alpha_start: 3,
            alpha_end: 10,
            neighborhood: 0.5,
            circle_samples: 720,
            seed_floor: 1.0,
            sigma: 8.0,
            rescale: 16.0,
            divergence: 1e4,
            cluster_spread: 0.1,
            stages: 8,
            max_iterate: 40,
            first_floor: 10.0,
            growth: 2.0,
            lattice: 101,
            compact: GridSection {
                center: [0.0, 0.0],
                width: 1.0,
                height: 1.0,
                nx: 9,
                ny: 9,
            },
            exclusion_radius: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LehtoSection {
    pub point: ComplexValue,
    pub radii: Vec<f64>,
    pub samples: usize,
}

impl Default for LehtoSection {
    fn default() -> Self {
        LehtoSection {
            point: ComplexValue::Real(0.0),
            radii: vec![1e-1, 1e-2, 1e-3, 1e-4],
            samples: 720,
        }
    }
}

/// Pre-pole around which the density run renormalises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub point: ComplexValue,
    /// `f^escape_order(point) = ∞`.
    pub escape_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub epsilon: f64,
    /// Largest total period searched by every seeding strategy.
    pub period_budget: usize,
    /// Pre-poles for the guided search; the declared poles when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<Anchor>>,
    pub guided_lattice: usize,
    /// Julia pixels sampled for the iterate-rescaling path.
    pub samples: usize,
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection {
            epsilon: 0.05,
            period_budget: 6,
            anchors: None,
            guided_lattice: 9,
            samples: 10,
        }
    }
}

pub fn region_of(r: [f64; 4]) -> Region {
    Region::new(r[0], r[1], r[2], r[3])
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn resolved_poles(&self) -> Result<Vec<Complex64>, String> {
        match &self.poles {
            None => Err("missing field `poles`".into()),
            Some(v) if v.is_empty() => Err("`poles` is empty".into()),
            Some(v) => v.iter().map(ComplexValue::resolve).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_resolve() {
        assert_eq!(
            ComplexValue::Real(2.0).resolve(),
            Ok(Complex64::new(2.0, 0.0))
        );
        assert_eq!(
            ComplexValue::Pair([1.0, -1.0]).resolve(),
            Ok(Complex64::new(1.0, -1.0))
        );
        assert_eq!(
            ComplexValue::Text("pi/2".into()).resolve(),
            Ok(Complex64::new(std::f64::consts::FRAC_PI_2, 0.0))
        );
        assert_eq!(
            ComplexValue::Text("1 + 2*i".into()).resolve(),
            Ok(Complex64::new(1.0, 2.0))
        );
        assert!(ComplexValue::Text("z".into()).resolve().is_err());
        assert!(ComplexValue::Text("1/0".into()).resolve().is_err());
    }

    #[test]
    fn defaults_and_roundtrip() {
        let cfg =
            RunConfig::from_toml("expr = \"2*tan(z)\"\npoles = [\"pi/2\", -1.5707963267948966]\n")
                .unwrap();
        assert_eq!(cfg.render, RenderSection::default());
        assert_eq!(cfg.resolved_poles().unwrap().len(), 2);
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err =
            RunConfig::from_toml("expr = \"z\"\n[render]\nnmax = 3\nbogus = 1\n").unwrap_err();
        assert!(err.contains("bogus"), "{err}");
        assert!(RunConfig::from_toml("expr = \"z\"")
            .unwrap()
            .resolved_poles()
            .is_err());
    }
}
