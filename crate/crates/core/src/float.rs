//! Scalar abstraction for the whole crate.
//!
//! Every model is written against [`Real`] so the same code runs in `f32`
//! and `f64`. Reference results and the CLI use `f64`; `f32` exists for
//! callers that trade accuracy for footprint.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar usable throughout the simulator.
///
/// The supertraits cover arithmetic, transcendental functions, constants
/// (`PI`), conversions from literals, and the serde/thread bounds needed by
/// scenario types and rayon loops.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into `Self`, rounding if narrower.
    ///
    /// Panics on values unrepresentable even approximately (never the case
    /// for the finite literals this crate feeds it).
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}

// Upper and lower parts of pi/180; (HI, LO) is a double-length split so
// degree arguments convert without the half-ulp loss of a single multiply.
const DEG2RAD_HI: f64 = 1.7453292519943295e-2;
const DEG2RAD_LO: f64 = 2.9486522708701687e-19;

/// Sine and cosine of an angle given in degrees.
///
/// The conversion keeps an error-compensation term, so exact results
/// survive at special angles where the naive `to_radians().cos()` chain
/// is off by an ulp (e.g. `cos 60 == 0.5` holds bitwise).
pub fn sin_cos_deg<F: Real>(deg: F) -> (F, F) {
    let hi = F::of(DEG2RAD_HI);
    let lo = F::of(DEG2RAD_LO);
    let r_hi = deg * hi;
    let r_lo = deg.mul_add(hi, -r_hi) + deg * lo;
    let (s, c) = r_hi.sin_cos();
    (s + r_lo * c, c - r_lo * s)
}

/// Cosine of an angle in degrees; see [`sin_cos_deg`].
pub fn cos_deg<F: Real>(deg: F) -> F {
    sin_cos_deg(deg).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_round_trips_for_f64() {
        assert_eq!(f64::of(0.299792458), 0.299792458);
    }

    #[test]
    fn literal_conversion_rounds_for_f32() {
        let x = f32::of(0.1);
        assert!((x - 0.1f32).abs() < f32::EPSILON);
    }

    fn generic_sum<F: Real>() -> F {
        let mut acc = F::zero();
        acc += F::of(1.5);
        acc += F::PI();
        acc
    }

    #[test]
    fn trait_is_usable_generically() {
        assert!((generic_sum::<f64>() - (1.5 + std::f64::consts::PI)).abs() < 1e-15);
        assert!((generic_sum::<f32>() - (1.5 + std::f32::consts::PI)).abs() < 1e-6);
    }

    #[test]
    fn degree_trig_is_exact_at_special_angles() {
        assert_eq!(cos_deg(60.0f64), 0.5);
        assert_eq!(sin_cos_deg(30.0f64).0, 0.5);
        assert_eq!(cos_deg(0.0f64), 1.0);
        assert_eq!(sin_cos_deg(90.0f64).0, 1.0);
    }

    #[test]
    fn degree_trig_tracks_radian_trig() {
        for i in -720..=720 {
            let deg = i as f64 * 0.25;
            let (s, c) = sin_cos_deg(deg);
            let r = deg.to_radians();
            assert!((s - r.sin()).abs() < 1e-15, "sin at {deg}");
            assert!((c - r.cos()).abs() < 1e-15, "cos at {deg}");
        }
    }
}
