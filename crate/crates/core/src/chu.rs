//! Self-impedance of an electrically small antenna confined to a sphere.
//!
//! The element is modelled by the lowest-order TM ladder network: a series
//! capacitor `C = a/(c R)` feeding an inductor `L = a R/c` in parallel with
//! the radiation resistance `R`. Written through the electrical size
//! `ka = 2 pi f a / c`, the input impedance has the closed-form parts
//!
//! ```text
//! Re{Z} =  R (ka)^2 / (1 + (ka)^2)
//! Im{Z} = -R / ( ka (1 + (ka)^2) )
//! ```
//!
//! so the element is capacitive at all frequencies, radiates poorly for
//! `ka << 1` and approaches the pure resistance `R` for `ka >> 1`. The two
//! parts are exposed separately because the array reactance analysis in
//! [`crate::tightcoupling`] consumes them individually.

use num_complex::Complex64;

use crate::{Error, Result, SPEED_OF_LIGHT};

/// Standard RF reference resistance [ohm], used when none is specified.
pub const DEFAULT_RESISTANCE: f64 = 50.0;

/// A single antenna element confined to a sphere of radius `a` [m] with
/// ladder-network resistance `R` [ohm].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChuElement {
    radius_a: f64,
    resistance_r: f64,
}

impl ChuElement {
    /// Creates an element, requiring `radius_a > 0` and `resistance_r > 0`.
    pub fn new(radius_a: f64, resistance_r: f64) -> Result<Self> {
        if !(radius_a > 0.0) || !radius_a.is_finite() {
            return Err(Error::Validation(format!(
                "antenna radius must be positive and finite, got {radius_a:e} m"
            )));
        }
        if !(resistance_r > 0.0) || !resistance_r.is_finite() {
            return Err(Error::Validation(format!(
                "antenna resistance must be positive and finite, got {resistance_r:e} ohm"
            )));
        }
        Ok(Self { radius_a, resistance_r })
    }

    /// Creates an element with the default 50-ohm reference resistance.
    pub fn with_radius(radius_a: f64) -> Result<Self> {
        Self::new(radius_a, DEFAULT_RESISTANCE)
    }

    /// Sphere radius `a` [m].
    pub fn radius_a(&self) -> f64 {
        self.radius_a
    }

    /// Ladder-network resistance `R` [ohm].
    pub fn resistance_r(&self) -> f64 {
        self.resistance_r
    }

    /// Electrical size `ka = 2 pi f a / c` at frequency `f` [Hz].
    pub fn electrical_size(&self, frequency: f64) -> Result<f64> {
        check_frequency(frequency)?;
        Ok(2.0 * std::f64::consts::PI * frequency * self.radius_a / SPEED_OF_LIGHT)
    }

    /// Complex self-impedance [ohm] at frequency `f` [Hz].
    ///
    /// Equal to `Complex64::new(re, im)` with `(re, im)` from
    /// [`Self::self_impedance_parts`], exactly.
    pub fn self_impedance(&self, frequency: f64) -> Result<Complex64> {
        let (re, im) = self.self_impedance_parts(frequency)?;
        Ok(Complex64::new(re, im))
    }

    /// Real and imaginary parts of the self-impedance [ohm] at `f` [Hz].
    pub fn self_impedance_parts(&self, frequency: f64) -> Result<(f64, f64)> {
        let ka = self.electrical_size(frequency)?;
        let ka2 = ka * ka;
        let re = self.resistance_r * ka2 / (1.0 + ka2);
        let im = -self.resistance_r / (ka * (1.0 + ka2));
        Ok((re, im))
    }
}

fn check_frequency(frequency: f64) -> Result<()> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(Error::Domain(format!(
            "frequency must be positive and finite, got {frequency:e} Hz"
        )));
    }
    Ok(())
}
