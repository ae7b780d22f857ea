//! Sharp constants and the explicit radial bubble.
//!
//! Everything here is a closed form in the ambient dimension `n`: the area
//! `ω_{n-1}` of the unit sphere, the Moser constant `α_n = n ω^{1/(n-1)}`, the
//! mean-zero constant `β_n = n (ω/2)^{1/(n-1)}`, and the bubble
//!
//! ```text
//! φ(x) = -(n-1)/β_n · ln(1 + (ω/2n)^{1/(n-1)} |x|^{n/(n-1)})
//! ```
//!
//! which solves `-Δ_n φ = exp(n/(n-1) β_n φ)` on `R^n` with total mass 2.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrate;

/// Ambient dimension, which is also the Sobolev exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dimension(u32);

impl Dimension {
    pub const TWO: Dimension = Dimension(2);

    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Dimension(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// The conjugate exponent `n/(n-1)` that appears in `|u|^{n/(n-1)}`.
    pub fn conjugate(self) -> f64 {
        let n = self.as_f64();
        n / (n - 1.0)
    }
}

impl TryFrom<u32> for Dimension {
    type Error = Error;
    fn try_from(n: u32) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for u32 {
    fn from(d: Dimension) -> u32 {
        d.0
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstants {
    pub n: Dimension,
    /// Area of the unit sphere `S^{n-1}`.
    pub omega: f64,
    pub alpha_n: f64,
    pub beta_n: f64,
    /// `H_{n-1} = 1 + 1/2 + ... + 1/(n-1)`.
    pub harmonic: f64,
}

/// `Γ(n/2)` for integer `n >= 1`, by the half-integer recurrence.
fn gamma_half_integer(n: u32) -> f64 {
    let (mut g, mut x) = if n % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = n as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// `ω_{n-1} = 2 π^{n/2} / Γ(n/2)`.
pub fn surface_area(n: Dimension) -> f64 {
    2.0 * PI.powf(n.as_f64() / 2.0) / gamma_half_integer(n.get())
}

pub fn harmonic_number(m: u32) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

pub fn sharp_constants(n: Dimension) -> SharpConstants {
    let omega = surface_area(n);
    let nf = n.as_f64();
    let inv = 1.0 / (nf - 1.0);
    SharpConstants {
        n,
        omega,
        alpha_n: nf * omega.powf(inv),
        beta_n: nf * (omega / 2.0).powf(inv),
        harmonic: harmonic_number(n.get() - 1),
    }
}

/// `(ω/2n)^{1/(n-1)}`, the scale inside the bubble logarithm.
pub fn bubble_scale(n: Dimension) -> f64 {
    let nf = n.as_f64();
    (surface_area(n) / (2.0 * nf)).powf(1.0 / (nf - 1.0))
}

/// The bubble `φ` at `|x| = radius`.
pub fn bubble_value(n: Dimension, radius: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return invalid(format!("bubble radius must be nonnegative, got {radius}"));
    }
    Ok(bubble_eval(n, radius))
}

pub(crate) fn bubble_eval(n: Dimension, radius: f64) -> f64 {
    let nf = n.as_f64();
    let beta = sharp_constants(n).beta_n;
    // + 0.0 turns -0.0 at the origin into 0.0
    -(nf - 1.0) / beta * (bubble_scale(n) * radius.powf(n.conjugate())).ln_1p() + 0.0
}

/// The bubble density `exp(n/(n-1) β_n φ) = (1 + k r^{n/(n-1)})^{-n}`.
pub fn bubble_density(n: Dimension, radius: f64) -> f64 {
    let k = bubble_scale(n);
    (1.0 + k * radius.powf(n.conjugate())).powf(-n.as_f64())
}

/// Radial finite-difference residual of `-Δ_n φ - exp(n/(n-1) β_n φ)` at
/// `radius`, with `Δ_n φ = r^{1-n} (r^{n-1} |φ'|^{n-2} φ')'` discretized by
/// nested central differences.
pub fn bubble_residual(n: Dimension, radius: f64, step: f64) -> Result<f64> {
    if !(radius > 0.0) || !(step > 0.0) {
        return invalid("bubble residual needs radius > 0 and step > 0");
    }
    if step >= radius {
        return invalid(format!("step {step} must be smaller than radius {radius}"));
    }
    let nf = n.as_f64();
    let phi = |r: f64| bubble_eval(n, r);
    let flux = |r: f64, d: f64| r.powf(nf - 1.0) * d.abs().powf(nf - 2.0) * d;
    let (pm, p0, pp) = (phi(radius - step), phi(radius), phi(radius + step));
    let d_plus = (pp - p0) / step;
    let d_minus = (p0 - pm) / step;
    let div = (flux(radius + 0.5 * step, d_plus) - flux(radius - 0.5 * step, d_minus)) / step;
    let lap = radius.powf(1.0 - nf) * div;
    let beta = sharp_constants(n).beta_n;
    Ok(-lap - (n.conjugate() * beta * p0).exp())
}

/// `∫_{B_R(0)} exp(n/(n-1) β_n φ) dy` by adaptive radial quadrature. An
/// infinite `cutoff_radius` integrates to a large radius and adds the
/// asymptotic tail `ω k^{-n} (n-1)/n R^{-n/(n-1)}`.
pub fn bubble_mass(n: Dimension, cutoff_radius: f64) -> Result<f64> {
    if !(cutoff_radius > 0.0) {
        return invalid(format!("cutoff radius must be positive, got {cutoff_radius}"));
    }
    const TAIL_START: f64 = 1.0e6;
    let nf = n.as_f64();
    let omega = surface_area(n);
    let upper = cutoff_radius.min(TAIL_START);
    let integrand = |r: f64| omega * r.powf(nf - 1.0) * bubble_density(n, r);

    // geometric panels keep every panel's relative variation bounded
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = upper.min(1.0);
    loop {
        total += integrate::adaptive(integrand, lo, hi, 1e-15, 1e-13)?;
        if hi >= upper {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(upper);
    }
    if cutoff_radius > TAIL_START {
        let k = bubble_scale(n);
        let tail = |r: f64| omega * k.powf(-nf) * (nf - 1.0) / nf * r.powf(-n.conjugate());
        total += tail(TAIL_START) - if cutoff_radius.is_finite() { tail(cutoff_radius) } else { 0.0 };
    }
    Ok(total)
}

/// Right-hand side of the capacity upper bound,
/// `|Ω| + (ω/2n) exp(β_n A_p + H_{n-1})`.
pub fn capacity_upper_bound(n: Dimension, a_p: f64, domain_volume: f64) -> Result<f64> {
    if !(domain_volume > 0.0) {
        return invalid(format!("domain volume must be positive, got {domain_volume}"));
    }
    let c = sharp_constants(n);
    Ok(domain_volume + c.omega / (2.0 * n.as_f64()) * (c.beta_n * a_p + c.harmonic).exp())
}
