//! Run configuration: one TOML file, resolved against command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use orbit_localize::fixedpoints::MultiplicityMode;
use orbit_localize::localize::{default_mode, OrbitSpec, CALIBRATED_SPLIT_S0};
use orbit_localize::verify::SuiteParams;
use orbit_localize::{AlgebraElement, AlgebraSpec, Family};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: AlgebraSection,
    pub orbit: OrbitSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub family: Family,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Compact,
    MaximallySplit,
    UserSupplied,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSection {
    /// Real coordinates `c` of `lambda = i c` on the Cartan basis.
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub s0: Option<i32>,
    /// Weyl label -> multiplicity, for `user_supplied`.
    #[serde(default)]
    pub multiplicities: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// `[lo, hi]` per direction.
    pub ranges: Vec<[f64; 2]>,
    /// Points per direction (>= 1; a single point sits at `lo`).
    pub steps: Vec<usize>,
    /// Optional directions in full algebra coordinates; defaults to the Cartan basis.
    #[serde(default)]
    pub directions: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_oracle_points")]
    pub points: usize,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_mesh")]
    pub mesh: [usize; 2],
    /// Normalization constant written by `calibrate`.
    #[serde(default)]
    pub calibration: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_step")]
    pub casimir_step: f64,
    #[serde(default = "default_min_wall")]
    pub min_wall_distance: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            seed: None,
            points: default_points(),
            casimir_step: default_step(),
            min_wall_distance: default_min_wall(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_geometry_samples")]
    pub samples: usize,
    /// Scaling schedule `s = 2^-k`, `k = 0..=max_exponent`.
    #[serde(default = "default_max_exponent")]
    pub max_exponent: i32,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            kappa: default_kappa(),
            samples: default_geometry_samples(),
            max_exponent: default_max_exponent(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default = "default_format")]
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: None,
            format: default_format(),
        }
    }
}

fn default_samples() -> usize {
    1_000_000
}
fn default_oracle_points() -> usize {
    20
}
fn default_eps() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn default_mesh() -> [usize; 2] {
    [1200, 256]
}
fn default_points() -> usize {
    100
}
fn default_step() -> f64 {
    1e-3
}
fn default_min_wall() -> f64 {
    1e-3
}
fn default_kappa() -> f64 {
    0.3
}
fn default_geometry_samples() -> usize {
    10_000
}
fn default_max_exponent() -> i32 {
    20
}
fn default_format() -> Format {
    Format::Csv
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<String>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve(overrides)?;
        Ok(cfg)
    }

    /// Fills defaults, applies overrides and validates.
    fn resolve(&mut self, o: &Overrides) -> Result<(), CliError> {
        if o.out.is_some() {
            self.output.path = o.out.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(seed) = o.seed {
            self.verify.seed = Some(seed);
            if let Some(oracle) = self.oracle.as_mut() {
                oracle.seed = Some(seed);
            }
        }
        let family = self.algebra.family;
        let mode = self.orbit.mode.unwrap_or(match default_mode(family) {
            MultiplicityMode::Compact => ModeName::Compact,
            _ => ModeName::MaximallySplit,
        });
        self.orbit.mode = Some(mode);
        if self.orbit.s0.is_none() {
            self.orbit.s0 = Some(if mode == ModeName::Compact { 1 } else { CALIBRATED_SPLIT_S0 });
        }
        if !matches!(self.orbit.s0, Some(1) | Some(-1)) {
            return Err(CliError::Config("orbit.s0 must be 1 or -1".into()));
        }
        if mode == ModeName::UserSupplied && self.orbit.multiplicities.is_none() {
            return Err(CliError::Config("orbit.mode = \"user_supplied\" requires orbit.multiplicities".into()));
        }
        if let Some(grid) = &self.grid {
            if grid.ranges.len() != grid.steps.len() {
                return Err(CliError::Config("grid.ranges and grid.steps differ in length".into()));
            }
            if grid.steps.contains(&0) {
                return Err(CliError::Config("grid.steps must be >= 1".into()));
            }
            if let Some(dirs) = &grid.directions {
                if dirs.len() != grid.ranges.len() {
                    return Err(CliError::Config("grid.directions and grid.ranges differ in length".into()));
                }
            }
        }
        if let Some(oracle) = &self.oracle {
            if oracle.samples < 2 {
                return Err(CliError::Config("oracle.samples must be >= 2".into()));
            }
            if oracle.eps.len() < 2 {
                return Err(CliError::Config("oracle.eps needs at least two values".into()));
            }
        }
        // builds the algebra and checks lambda regularity
        self.orbit_spec()?;
        Ok(())
    }

    pub fn mode(&self) -> MultiplicityMode {
        match self.orbit.mode.expect("resolved") {
            ModeName::Compact => MultiplicityMode::Compact,
            ModeName::MaximallySplit => MultiplicityMode::MaximallySplit,
            ModeName::UserSupplied => MultiplicityMode::UserSupplied {
                values: self.orbit.multiplicities.clone().unwrap_or_default(),
            },
        }
    }

    pub fn s0(&self) -> i32 {
        self.orbit.s0.expect("resolved")
    }

    pub fn algebra_spec(&self) -> Result<Arc<AlgebraSpec>, CliError> {
        AlgebraSpec::build(self.algebra.family, self.algebra.n)
            .map(Arc::new)
            .map_err(|e| CliError::Config(format!("[algebra]: {e}")))
    }

    pub fn orbit_spec(&self) -> Result<OrbitSpec, CliError> {
        OrbitSpec::new(self.algebra_spec()?, &self.orbit.lambda, self.mode(), self.s0())
            .map_err(|e| CliError::Config(format!("[orbit]: {e}")))
    }

    pub fn oracle(&self) -> Result<&OracleSection, CliError> {
        self.oracle
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [oracle] block".into()))
    }

    pub fn oracle_seed(&self) -> Result<u64, CliError> {
        self.oracle()?
            .seed
            .ok_or_else(|| CliError::Config("[oracle] block needs a seed (or pass --seed)".into()))
    }

    pub fn grid(&self) -> Result<&GridSection, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [grid] block".into()))
    }

    /// Grid points as `(coordinates, element)` in row-major order (last direction fastest).
    pub fn grid_points(&self, spec: &OrbitSpec) -> Result<Vec<(Vec<f64>, AlgebraElement)>, CliError> {
        let grid = self.grid()?;
        let algebra = spec.algebra();
        let directions: Vec<AlgebraElement> = match &grid.directions {
            Some(dirs) => dirs
                .iter()
                .map(|d| {
                    if d.len() != algebra.dim() {
                        Err(CliError::Config(format!(
                            "grid direction has {} coordinates, algebra has dimension {}",
                            d.len(),
                            algebra.dim()
                        )))
                    } else {
                        Ok(AlgebraElement::from_real(d))
                    }
                })
                .collect::<Result<_, _>>()?,
            None => {
                if grid.ranges.len() != algebra.rank() {
                    return Err(CliError::Config(format!(
                        "grid has {} ranges but the Cartan has rank {}",
                        grid.ranges.len(),
                        algebra.rank()
                    )));
                }
                (0..algebra.rank())
                    .map(|k| {
                        let mut e = vec![0.0; algebra.rank()];
                        e[k] = 1.0;
                        spec.cartan_element(&e).map_err(|e| CliError::Config(e.to_string()))
                    })
                    .collect::<Result<_, _>>()?
            }
        };
        let axes: Vec<Vec<f64>> = grid
            .ranges
            .iter()
            .zip(&grid.steps)
            .map(|([lo, hi], &steps)| {
                if steps == 1 {
                    vec![*lo]
                } else {
                    (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
                }
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut coords = vec![0.0; axes.len()];
            for k in (0..axes.len()).rev() {
                coords[k] = axes[k][rem % axes[k].len()];
                rem /= axes[k].len();
            }
            let mut x = AlgebraElement::from_real(&vec![0.0; algebra.dim()]);
            for (c, d) in coords.iter().zip(&directions) {
                x = x.add(&d.scale(*c));
            }
            out.push((coords, x));
        }
        Ok(out)
    }

    pub fn suite_params(&self) -> Result<SuiteParams, CliError> {
        let seed = self
            .verify
            .seed
            .or_else(|| self.oracle.as_ref().and_then(|o| o.seed))
            .unwrap_or(0);
        let oracle = self.oracle.clone().unwrap_or(OracleSection {
            seed: None,
            samples: default_samples(),
            points: default_oracle_points(),
            eps: default_eps(),
            mesh: default_mesh(),
            calibration: None,
        });
        Ok(SuiteParams {
            family: self.algebra.family,
            n: self.algebra.n,
            lambda: self.orbit.lambda.clone(),
            mode: self.mode(),
            s0: self.s0(),
            seed,
            points: self.verify.points,
            casimir_step: self.verify.casimir_step,
            min_wall_distance: self.verify.min_wall_distance,
            oracle_samples: oracle.samples,
            oracle_points: oracle.points,
            eps_schedule: oracle.eps,
            mesh: (oracle.mesh[0], oracle.mesh[1]),
            kappa: self.geometry.kappa,
            geometry_samples: self.geometry.samples,
        })
    }
}
