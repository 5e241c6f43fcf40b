//! JSON run configuration, its validation, and the checked-in presets.

use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::DEFAULT_L4_ALPHA;
use crate::error::{Error, Result};
use crate::exact::Barenblatt;
use crate::grid::{GridSpec, ScalarField};
use crate::model::{validate_growth_law, GrowthLaw, ModelParams};
use crate::potential::DriftKernel;
use crate::stepper::DEFAULT_CFL;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthConfig {
    Off,
    SmoothTanh {
        max_rate: f64,
        homeostatic_pressure: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelConfig {
    Off,
    Newtonian,
}

/// Initial density families. All are independent of `m` except the
/// Barenblatt profile, which is the exact solution for the run's `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Sum of `A (1 - |x - c|² / R²)³₊` over the centers, capped at `A`.
    Bumps {
        centers: Vec<Vec<f64>>,
        radius: f64,
        amplitude: f64,
    },
    /// `count` bumps with centers uniform in `[-spread, spread]^n` and
    /// amplitudes uniform in `[amplitude / 2, amplitude]`, drawn from `seed`.
    RandomBumps {
        count: usize,
        spread: f64,
        radius: f64,
        amplitude: f64,
    },
    /// Barenblatt profile with constant `C`, taken at self-similar time `tau0`.
    Barenblatt { constant: f64, tau0: f64 },
    /// `value` on the cube `|x|_∞ < half_width`, zero outside.
    Patch { half_width: f64, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub exponents: Vec<f64>,
    pub growth: GrowthConfig,
    #[serde(default)]
    pub pressure_ceiling: Option<f64>,
    pub kernel: KernelConfig,
    pub initial: InitialConfig,
    pub final_time: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_l4_alpha")]
    pub l4_alpha: f64,
    /// Cell counts for refinement studies.
    #[serde(default)]
    pub refine_cells: Vec<usize>,
}

fn default_samples() -> usize {
    50
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_l4_alpha() -> f64 {
    DEFAULT_L4_ALPHA
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(vec![e.to_string()]))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Collects every field-level problem.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            errs.push(format!("grid.dim: must be 1, 2 or 3, got {}", g.dim));
        }
        if !(g.half_width.is_finite() && g.half_width > 0.0) {
            errs.push(format!(
                "grid.half_width: must be positive, got {}",
                g.half_width
            ));
        }
        if g.cells < 4 {
            errs.push(format!("grid.cells: must be at least 4, got {}", g.cells));
        }
        if self.exponents.is_empty() {
            errs.push("exponents: must not be empty".into());
        }
        for (k, &m) in self.exponents.iter().enumerate() {
            if !(m.is_finite() && m >= 2.0) {
                errs.push(format!("exponents[{k}]: must be >= 2, got {m}"));
            }
        }
        if self.exponents.windows(2).any(|w| w[1] <= w[0]) {
            errs.push("exponents: must be strictly increasing".into());
        }
        let growth = match self.growth_law() {
            Ok(law) => Some(law),
            Err(e) => {
                errs.push(format!("growth: {e}"));
                None
            }
        };
        if let Some(ceiling) = self.pressure_ceiling {
            if !(ceiling.is_finite() && ceiling > 1.0) {
                errs.push(format!("pressure_ceiling: must exceed 1, got {ceiling}"));
            } else if let Some(law) = growth {
                let report = validate_growth_law(&law, ceiling);
                if !report.passed() {
                    errs.push(format!(
                        "pressure_ceiling: growth law does not satisfy the ceiling condition \
                         (P_M + G(P_M) = {})",
                        report.ceiling_margin
                    ));
                }
            }
        }
        if self.kernel == KernelConfig::Newtonian && !(2..=3).contains(&g.dim) {
            errs.push(format!(
                "kernel: newtonian needs dimension 2 or 3, got {}",
                g.dim
            ));
        }
        self.validate_initial(&mut errs);
        if !(self.final_time.is_finite() && self.final_time >= 0.0) {
            errs.push(format!(
                "final_time: must be finite and >= 0, got {}",
                self.final_time
            ));
        }
        if self.samples == 0 || (self.samples < 2 && self.final_time > 0.0) {
            errs.push(format!(
                "samples: need at least 2 for a positive final time, got {}",
                self.samples
            ));
        }
        for (k, &t) in self.snapshot_times.iter().enumerate() {
            if !(t >= 0.0 && t <= self.final_time) {
                errs.push(format!(
                    "snapshot_times[{k}]: {t} lies outside [0, final_time]"
                ));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            errs.push(format!("cfl: must lie in (0, 1], got {}", self.cfl));
        }
        if !(0.0..1.0).contains(&self.l4_alpha) {
            errs.push(format!(
                "l4_alpha: must lie in [0, 1), got {}",
                self.l4_alpha
            ));
        }
        if self.refine_cells.windows(2).any(|w| w[1] <= w[0]) {
            errs.push("refine_cells: must be strictly increasing".into());
        }
        if let Some(&coarse) = self.refine_cells.first() {
            if coarse < 4 {
                errs.push(format!("refine_cells[0]: must be at least 4, got {coarse}"));
            } else if self.refine_cells.iter().any(|n| n % coarse != 0) {
                errs.push("refine_cells: each entry must be a multiple of the first".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errs))
        }
    }

    fn validate_initial(&self, errs: &mut Vec<String>) {
        let dim = self.grid.dim;
        match &self.initial {
            InitialConfig::Bumps {
                centers,
                radius,
                amplitude,
            } => {
                if centers.is_empty() {
                    errs.push("initial.centers: must not be empty".into());
                }
                for (k, c) in centers.iter().enumerate() {
                    if c.len() != dim || c.iter().any(|v| !v.is_finite()) {
                        errs.push(format!(
                            "initial.centers[{k}]: need {dim} finite coordinates"
                        ));
                    }
                }
                check_radius_amplitude(*radius, *amplitude, errs);
            }
            InitialConfig::RandomBumps {
                count,
                spread,
                radius,
                amplitude,
            } => {
                if *count == 0 {
                    errs.push("initial.count: must be positive".into());
                }
                if !(spread.is_finite() && *spread >= 0.0) {
                    errs.push(format!("initial.spread: must be >= 0, got {spread}"));
                }
                check_radius_amplitude(*radius, *amplitude, errs);
            }
            InitialConfig::Barenblatt { constant, tau0 } => {
                if !(constant.is_finite() && *constant > 0.0) {
                    errs.push(format!(
                        "initial.constant: must be positive, got {constant}"
                    ));
                }
                if !(tau0.is_finite() && *tau0 > 0.0) {
                    errs.push(format!("initial.tau0: must be positive, got {tau0}"));
                }
            }
            InitialConfig::Patch { half_width, value } => {
                if !(half_width.is_finite() && *half_width > 0.0) {
                    errs.push(format!(
                        "initial.half_width: must be positive, got {half_width}"
                    ));
                }
                if !(*value > 0.0 && *value <= 1.0) {
                    errs.push(format!("initial.value: must lie in (0, 1], got {value}"));
                }
            }
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.half_width, self.grid.cells)
    }

    pub fn growth_law(&self) -> Result<GrowthLaw> {
        match self.growth {
            GrowthConfig::Off => Ok(GrowthLaw::off()),
            GrowthConfig::SmoothTanh {
                max_rate,
                homeostatic_pressure,
            } => GrowthLaw::smooth_tanh(max_rate, homeostatic_pressure),
        }
    }

    pub fn drift_kernel(&self) -> DriftKernel {
        match self.kernel {
            KernelConfig::Off => DriftKernel::Off,
            KernelConfig::Newtonian => DriftKernel::Newtonian,
        }
    }

    pub fn model_params(&self, grid: GridSpec, m: f64) -> Result<ModelParams> {
        ModelParams::new(
            m,
            self.growth_law()?,
            self.drift_kernel(),
            grid,
            self.pressure_ceiling,
        )
    }

    /// Initial density on `grid` for exponent `m`.
    pub fn initial_density(&self, grid: GridSpec, m: f64) -> Result<ScalarField> {
        let dim = grid.dim();
        match &self.initial {
            InitialConfig::Bumps {
                centers,
                radius,
                amplitude,
            } => bump_sum(
                grid,
                centers,
                &vec![*amplitude; centers.len()],
                *radius,
                *amplitude,
            ),
            InitialConfig::RandomBumps {
                count,
                spread,
                radius,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut centers = Vec::with_capacity(*count);
                let mut amplitudes = Vec::with_capacity(*count);
                for _ in 0..*count {
                    centers.push(
                        (0..dim)
                            .map(|_| rng.random_range(-*spread..=*spread))
                            .collect(),
                    );
                    amplitudes.push(rng.random_range(0.5 * amplitude..=*amplitude));
                }
                bump_sum(grid, &centers, &amplitudes, *radius, *amplitude)
            }
            InitialConfig::Barenblatt { constant, tau0 } => {
                Barenblatt::new(dim, m, *constant)?.reference_averages(grid, *tau0)
            }
            InitialConfig::Patch { half_width, value } => ScalarField::from_fn(grid, |x| {
                if x.iter().all(|c| c.abs() < *half_width) {
                    *value
                } else {
                    0.0
                }
            }),
        }
    }

    /// Exact profile, when the run is a pure porous medium flow started
    /// from a Barenblatt profile.
    pub fn barenblatt(&self, m: f64) -> Option<(Barenblatt, f64)> {
        match self.initial {
            InitialConfig::Barenblatt { constant, tau0 }
                if self.growth == GrowthConfig::Off && self.kernel == KernelConfig::Off =>
            {
                Barenblatt::new(self.grid.dim, m, constant)
                    .ok()
                    .map(|b| (b, tau0))
            }
            _ => None,
        }
    }

    /// "out-of-paper" for one-dimensional runs, "in-paper" otherwise.
    pub fn label(&self) -> &'static str {
        if self.grid.dim == 1 {
            "out-of-paper"
        } else {
            "in-paper"
        }
    }
}

fn check_radius_amplitude(radius: f64, amplitude: f64, errs: &mut Vec<String>) {
    if !(radius.is_finite() && radius > 0.0) {
        errs.push(format!("initial.radius: must be positive, got {radius}"));
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        errs.push(format!(
            "initial.amplitude: must lie in (0, 1], got {amplitude}"
        ));
    }
}

fn bump_sum(
    grid: GridSpec,
    centers: &[Vec<f64>],
    amplitudes: &[f64],
    radius: f64,
    cap: f64,
) -> Result<ScalarField> {
    ScalarField::from_fn(grid, |x| {
        let total: f64 = centers
            .iter()
            .zip(amplitudes)
            .map(|(c, a)| {
                let r2: f64 = x.iter().zip(c).map(|(x, c)| (x - c) * (x - c)).sum();
                a * (1.0 - r2 / (radius * radius)).max(0.0).powi(3)
            })
            .sum();
        total.min(cap)
    })
}

/// Named presets; each matches a file under `configs/`.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 4] = [
        "default_sweep",
        "mass_balance",
        "barenblatt_1d",
        "barenblatt_2d",
    ];

    pub fn by_name(name: &str) -> Option<RunConfig> {
        match name {
            "default_sweep" => Some(default_sweep()),
            "mass_balance" => Some(mass_balance()),
            "barenblatt_1d" => Some(barenblatt_1d()),
            "barenblatt_2d" => Some(barenblatt_2d()),
            _ => None,
        }
    }

    /// n = 2, L = 4, N = 128, T = 0.25, m ∈ {8, 16, 32, 64}, Newtonian drift,
    /// tanh growth with G_M = 4, p_H = 1, ceiling 2, centered bump of radius
    /// 1 and amplitude 0.9.
    pub fn default_sweep() -> RunConfig {
        RunConfig {
            grid: GridConfig {
                dim: 2,
                half_width: 4.0,
                cells: 128,
            },
            exponents: vec![8.0, 16.0, 32.0, 64.0],
            growth: GrowthConfig::SmoothTanh {
                max_rate: 4.0,
                homeostatic_pressure: 1.0,
            },
            pressure_ceiling: Some(2.0),
            kernel: KernelConfig::Newtonian,
            initial: InitialConfig::Bumps {
                centers: vec![vec![0.0, 0.0]],
                radius: 1.0,
                amplitude: 0.9,
            },
            final_time: 0.25,
            samples: 50,
            snapshot_times: vec![0.0, 0.125, 0.25],
            output_dir: Some(PathBuf::from("out/default_sweep")),
            seed: 0,
            cfl: DEFAULT_CFL,
            l4_alpha: DEFAULT_L4_ALPHA,
            refine_cells: vec![],
        }
    }

    /// The default scenario with growth switched off.
    pub fn mass_balance() -> RunConfig {
        RunConfig {
            growth: GrowthConfig::Off,
            pressure_ceiling: None,
            snapshot_times: vec![],
            output_dir: Some(PathBuf::from("out/mass_balance")),
            ..default_sweep()
        }
    }

    fn barenblatt(dim: usize, tau0: f64, final_time: f64) -> RunConfig {
        RunConfig {
            grid: GridConfig {
                dim,
                half_width: 1.5,
                cells: 64,
            },
            exponents: vec![2.0],
            growth: GrowthConfig::Off,
            pressure_ceiling: None,
            kernel: KernelConfig::Off,
            initial: InitialConfig::Barenblatt {
                constant: 0.1,
                tau0,
            },
            final_time,
            samples: 11,
            snapshot_times: vec![],
            output_dir: Some(PathBuf::from(format!("out/barenblatt_{dim}d"))),
            seed: 0,
            cfl: DEFAULT_CFL,
            l4_alpha: DEFAULT_L4_ALPHA,
            refine_cells: vec![64, 128, 256],
        }
    }

    /// Self-similar time 0.02 to 0.21 in one dimension.
    pub fn barenblatt_1d() -> RunConfig {
        barenblatt(1, 0.02, 0.285)
    }

    /// Self-similar time 0.03 to 0.1 in two dimensions.
    pub fn barenblatt_2d() -> RunConfig {
        barenblatt(2, 0.03, 0.105)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in presets::NAMES {
            let c = presets::by_name(name).unwrap();
            c.validate().unwrap();
            assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        }
    }

    #[test]
    fn collects_field_level_errors() {
        let mut c = presets::default_sweep();
        c.exponents = vec![];
        c.grid.cells = 2;
        c.cfl = 3.0;
        let Err(Error::ConfigInvalid(errs)) = c.validate() else {
            panic!("expected config error");
        };
        assert!(errs.iter().any(|e| e.starts_with("exponents")));
        assert!(errs.iter().any(|e| e.starts_with("grid.cells")));
        assert!(errs.iter().any(|e| e.starts_with("cfl")));
    }

    #[test]
    fn rejects_non_increasing_exponents_and_bad_amplitude() {
        let mut c = presets::default_sweep();
        c.exponents = vec![8.0, 8.0];
        assert!(c.validate().is_err());
        let mut c = presets::default_sweep();
        c.initial = InitialConfig::Bumps {
            centers: vec![vec![0.0, 0.0]],
            radius: 1.0,
            amplitude: 1.2,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn weak_growth_fails_ceiling_check() {
        let mut c = presets::default_sweep();
        c.growth = GrowthConfig::SmoothTanh {
            max_rate: 1.0,
            homeostatic_pressure: 1.0,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&presets::default_sweep().to_json()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(matches!(
            RunConfig::from_json(&v.to_string()),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn random_bumps_depend_only_on_seed() {
        let mut c = presets::default_sweep();
        c.initial = InitialConfig::RandomBumps {
            count: 3,
            spread: 1.0,
            radius: 0.7,
            amplitude: 0.9,
        };
        let g = c.grid_spec().unwrap();
        let a = c.initial_density(g, 8.0).unwrap();
        assert_eq!(a, c.initial_density(g, 8.0).unwrap());
        c.seed = 1;
        assert_ne!(a, c.initial_density(g, 8.0).unwrap());
        assert!(a.max() <= 0.9);
    }
}
