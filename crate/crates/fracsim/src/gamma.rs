//! Gamma function via the Lanczos approximation (g = 7, 9 terms).
//!
//! Relative error is below 1e-13 on the range used by the fractional
//! power rule, comfortably inside the 1e-10 budget.

use crate::error::{Error, Result};

const G: f64 = 7.0;

// Coefficients from the GNU Scientific Library g=7 fit.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma(x) for real x, rejecting the poles at nonpositive integers.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("gamma argument"));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("gamma pole at x = {x}")));
    }
    // exact factorial at positive integers, so integer-order limits of the
    // fractional rules carry no approximation error
    if x > 0.0 && x == x.floor() && x <= 171.0 {
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return Ok(acc);
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection formula
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let w = x + G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * w.powf(x + 0.5) * (-w).exp() * acc
    }
}
