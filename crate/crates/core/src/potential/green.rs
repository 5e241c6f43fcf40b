use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};

/// Free-space Green's function of `-Δ` at distance `r > 0`:
/// `-ln(r) / (2π)` in 2D and `1 / (4π r)` in 3D.
pub fn newtonian_kernel(dim: usize, r: f64) -> f64 {
    match dim {
        2 => -r.ln() / (2.0 * PI),
        3 => 1.0 / (4.0 * PI * r),
        _ => f64::NAN,
    }
}

/// Mean of [`newtonian_kernel`] over the cube of side `h` centered at the
/// singularity; used for the self-interaction weight.
pub fn newtonian_cell_average(dim: usize, h: f64) -> f64 {
    match dim {
        // mean of ln|x| over [-a, a]^2 is ln a + ln(2)/2 - 3/2 + π/4
        2 => -((0.5 * h).ln() + 0.5 * LN_2 - 1.5 + FRAC_PI_4) / (2.0 * PI),
        // ∫ 1/|x| over the unit cube centered at 0 is 3 ln(2 + √3) - π/2
        3 => (3.0 * (2.0 + 3f64.sqrt()).ln() - FRAC_PI_2) / h / (4.0 * PI),
        _ => f64::NAN,
    }
}
