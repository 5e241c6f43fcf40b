//! Pressure law `p = ρ^m`, pressure-limited growth laws, and the parameter
//! bundle of one run.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::potential::DriftKernel;

/// Densities below this are rounding noise and clamp to zero; anything more
/// negative is an upstream failure.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// `x^e` with a multiplication-chain fast path for integral exponents.
#[inline]
pub fn power(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 4096.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

pub(crate) fn check_density(rho: &ScalarField) -> Result<()> {
    match rho
        .values()
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -NEGATIVE_TOLERANCE)
    {
        Some((index, &value)) => Err(Error::NegativeDensity { index, value }),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthKind {
    Off,
    /// `G(p) = G_M tanh((p_H - p) / p_H)`.
    SmoothTanh,
}

/// Pressure-dependent growth rate `G(p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthLaw {
    kind: GrowthKind,
    max_rate: f64,
    homeostatic_pressure: f64,
}

impl GrowthLaw {
    pub fn off() -> Self {
        Self {
            kind: GrowthKind::Off,
            max_rate: 0.0,
            homeostatic_pressure: 1.0,
        }
    }

    pub fn smooth_tanh(max_rate: f64, homeostatic_pressure: f64) -> Result<Self> {
        if !(max_rate.is_finite() && max_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "maximal growth rate must be finite and >= 0, got {max_rate}"
            )));
        }
        if !(homeostatic_pressure.is_finite() && homeostatic_pressure > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "homeostatic pressure must be finite and > 0, got {homeostatic_pressure}"
            )));
        }
        Ok(Self {
            kind: GrowthKind::SmoothTanh,
            max_rate,
            homeostatic_pressure,
        })
    }

    pub fn kind(&self) -> GrowthKind {
        self.kind
    }

    /// `G_M`; zero when growth is off.
    pub fn max_rate(&self) -> f64 {
        match self.kind {
            GrowthKind::Off => 0.0,
            GrowthKind::SmoothTanh => self.max_rate,
        }
    }

    pub fn homeostatic_pressure(&self) -> f64 {
        self.homeostatic_pressure
    }

    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        match self.kind {
            GrowthKind::Off => 0.0,
            GrowthKind::SmoothTanh => {
                let ph = self.homeostatic_pressure;
                self.max_rate * ((ph - p) / ph).tanh()
            }
        }
    }
}

/// Pointwise `G(p)`.
pub fn growth_eval(p: &ScalarField, law: &GrowthLaw) -> ScalarField {
    p.map(|v| law.eval(v))
}

/// Outcome of [`validate_growth_law`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationReport {
    /// `|G| <= G_M` on the sampled range `[0, 10 p_H]`.
    pub bounded: bool,
    /// `G <= 0` on the sampled range `[p_H, 10 p_H]`.
    pub nonpositive_above_homeostatic: bool,
    /// `P_M > 1`, so that `[1, P_M]` is a proper interval.
    pub ceiling_above_one: bool,
    /// `P_M + G(P_M)`; the worst case of `A + G(P_M)` over `A ∈ [1, P_M]`.
    pub ceiling_margin: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.bounded
            && self.nonpositive_above_homeostatic
            && self.ceiling_above_one
            && self.ceiling_margin <= 0.0
    }
}

const VALIDATION_SAMPLES: usize = 10_001;

/// Checks the growth-law bounds and the ceiling condition
/// `A + G(P_M) <= 0` for all `A ∈ [1, P_M]`.
pub fn validate_growth_law(law: &GrowthLaw, ceiling: f64) -> ValidationReport {
    let ph = law.homeostatic_pressure();
    let top = 10.0 * ph;
    let samples = (0..VALIDATION_SAMPLES).map(|k| top * k as f64 / (VALIDATION_SAMPLES - 1) as f64);
    let mut bounded = true;
    let mut nonpositive = true;
    for p in samples {
        let g = law.eval(p);
        bounded &= g.abs() <= law.max_rate();
        if p >= ph {
            nonpositive &= g <= 0.0;
        }
    }
    ValidationReport {
        bounded,
        nonpositive_above_homeostatic: nonpositive,
        ceiling_above_one: ceiling > 1.0,
        ceiling_margin: ceiling + law.eval(ceiling),
    }
}

/// Parameters of one run.
#[derive(Clone, Debug)]
pub struct ModelParams {
    exponent: f64,
    growth: GrowthLaw,
    kernel: DriftKernel,
    grid: GridSpec,
    pressure_ceiling: Option<f64>,
}

impl ModelParams {
    pub fn new(
        exponent: f64,
        growth: GrowthLaw,
        kernel: DriftKernel,
        grid: GridSpec,
        pressure_ceiling: Option<f64>,
    ) -> Result<Self> {
        if !(exponent.is_finite() && exponent >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "pressure exponent must be >= 2, got {exponent}"
            )));
        }
        kernel.validate_for(&grid)?;
        if let Some(ceiling) = pressure_ceiling {
            let report = validate_growth_law(&growth, ceiling);
            if !report.passed() {
                return Err(Error::InvalidParameter(format!(
                    "growth law does not keep the pressure below {ceiling}: {report:?}"
                )));
            }
        }
        Ok(Self {
            exponent,
            growth,
            kernel,
            grid,
            pressure_ceiling,
        })
    }

    /// The pressure exponent `m`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn growth(&self) -> &GrowthLaw {
        &self.growth
    }

    pub fn kernel(&self) -> &DriftKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn pressure_ceiling(&self) -> Option<f64> {
        self.pressure_ceiling
    }
}

/// `p = ρ^m`.
pub fn pressure(rho: &ScalarField, m: f64) -> Result<ScalarField> {
    check_density(rho)?;
    Ok(rho.map(|r| power(r.max(0.0), m)))
}

/// The pressure together with the fractional powers the diagnostics need,
/// all evaluated as powers of `ρ` so that `0^0` never occurs.
#[derive(Clone, Debug)]
pub struct PressurePowers {
    /// `p = ρ^m`.
    pub p: ScalarField,
    /// `p^((m+1)/m) = ρ^(m+1)`.
    pub p_frac: ScalarField,
    /// `p^((m+2)/m) = ρ^(m+2)`.
    pub p_frac2: ScalarField,
    /// `p^((m+1)/(2m)) = ρ^((m+1)/2)`.
    pub p_half: ScalarField,
}

pub fn pressure_powers(rho: &ScalarField, m: f64) -> Result<PressurePowers> {
    check_density(rho)?;
    let r = rho.map(|v| v.max(0.0));
    Ok(PressurePowers {
        p: r.map(|v| power(v, m)),
        p_frac: r.map(|v| power(v, m + 1.0)),
        p_frac2: r.map(|v| power(v, m + 2.0)),
        p_half: r.map(|v| power(v, 0.5 * (m + 1.0))),
    })
}
