//! Blow-up diagnostics of a maximizer: peak, scale `r_ε`, rescaled profiles
//! against the bubble, truncation energies and gradient concentration.

use std::io::Write;

use serde::Serialize;

use crate::constants::{bubble_eval, sharp_constants, Dimension};
use crate::error::{invalid, Error, Result};
use crate::fem::FemSpace;
use crate::mesh::{Locator, Mesh, Point};
use crate::subcritical::MaximizerResult;

/// Nodal maximum of `u` and its location, lowest index on ties.
pub fn peak(mesh: &Mesh, u: &[f64]) -> (f64, Point) {
    let mut k = 0;
    for (i, &v) in u.iter().enumerate() {
        if v > u[k] {
            k = i;
        }
    }
    (u[k], mesh.node(k))
}

/// `r_ε = (λ_ε c_ε^{-n/(n-1)} exp(-β_ε c_ε^{n/(n-1)}))^{1/n}`, evaluated in
/// log space.
pub fn blowup_scale(lambda_eps: f64, c_eps: f64, beta_eps: f64, n: Dimension) -> Result<f64> {
    for (name, v) in [("lambda_eps", lambda_eps), ("c_eps", c_eps), ("beta_eps", beta_eps)] {
        if !(v > 0.0) || !v.is_finite() {
            return invalid(format!("{name} must be positive and finite, got {v}"));
        }
    }
    let q = n.conjugate();
    let log_rn = lambda_eps.ln() - q * c_eps.ln() - beta_eps * c_eps.powf(q);
    let r = (log_rn / n.as_f64()).exp();
    if r == 0.0 {
        return Err(Error::ScaleUnderflow(c_eps));
    }
    Ok(r)
}

/// `r^n c^{n/(n-1)} exp(γ c^{n/(n-1)})` with `γ = β_n/2`.
pub fn decay_surrogate(r_eps: f64, c_eps: f64, n: Dimension) -> f64 {
    let q = n.conjugate();
    let gamma = 0.5 * sharp_constants(n).beta_n;
    r_eps.powf(n.as_f64()) * c_eps.powf(q) * (gamma * c_eps.powf(q)).exp()
}

/// `ψ(y) = u(x + r y)/c` and `φ(y) = c^{1/(n-1)}(u(x + r y) - c)` on a
/// uniform grid of `B_R(0)`, with the bubble alongside.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileSamples {
    pub radius: f64,
    pub y: Vec<Point>,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub bubble: Vec<f64>,
}

impl ProfileSamples {
    /// Columns `y1,y2,psi,phi,bubble`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "y1,y2,psi,phi,bubble")?;
        for k in 0..self.y.len() {
            let y = self.y[k];
            writeln!(w, "{:?},{:?},{:?},{:?},{:?}", y[0], y[1], self.psi[k], self.phi[k], self.bubble[k])?;
        }
        Ok(())
    }
}

fn evaluate(locator: &Locator, mesh: &Mesh, u: &[f64], x: Point) -> Result<f64> {
    let loc = match locator.locate(x) {
        Ok(loc) => loc,
        Err(Error::PointOutside(..)) => {
            // even reflection across the tangent of the nearest boundary face
            let (q, nrm) = mesh.nearest_boundary_point(x);
            let d = (x[0] - q[0]) * nrm[0] + (x[1] - q[1]) * nrm[1];
            let reflected = [x[0] - 2.0 * d * nrm[0], x[1] - 2.0 * d * nrm[1]];
            locator.locate(reflected).or_else(|_| locator.locate(q))?
        }
        Err(e) => return Err(e),
    };
    let el = mesh.elements()[loc.element];
    let b = loc.barycentric;
    // a sample at a node takes the nodal value exactly
    if let Some(k) = (0..3).find(|&k| b[k] > 1.0 - 1e-12) {
        return Ok(u[el[k]]);
    }
    Ok(b[0] * u[el[0]] + b[1] * u[el[1]] + b[2] * u[el[2]])
}

/// Samples the rescaled profiles on a grid of spacing `R/per_radius`; `y = 0`
/// is always a grid point. Samples outside the domain are evenly reflected
/// across the nearest boundary tangent.
pub fn rescaled_profiles(
    space: &FemSpace,
    u: &[f64],
    c_eps: f64,
    x_eps: Point,
    r_eps: f64,
    n: Dimension,
    sample_radius: f64,
    per_radius: usize,
) -> Result<ProfileSamples> {
    space.check_field(u)?;
    if !(c_eps > 0.0) || !(r_eps > 0.0) || !(sample_radius > 0.0) || per_radius == 0 {
        return invalid("rescaled profiles need c_eps, r_eps, sample radius > 0 and per_radius >= 1");
    }
    let mesh = space.mesh();
    let scale = mesh.extent();
    if sample_radius * r_eps > scale {
        return Err(Error::SampleRadius {
            radius: sample_radius * r_eps,
            scale,
        });
    }
    let locator = Locator::new(mesh);
    let m = per_radius as i64;
    let step = sample_radius / per_radius as f64;
    let lift = c_eps.powf(1.0 / (n.as_f64() - 1.0));
    let mut out = ProfileSamples {
        radius: sample_radius,
        y: Vec::new(),
        psi: Vec::new(),
        phi: Vec::new(),
        bubble: Vec::new(),
    };
    for j in -m..=m {
        for i in -m..=m {
            if i * i + j * j > m * m {
                continue;
            }
            let y = [i as f64 * step, j as f64 * step];
            let x = [x_eps[0] + r_eps * y[0], x_eps[1] + r_eps * y[1]];
            let v = evaluate(&locator, mesh, u, x)?;
            out.y.push(y);
            out.psi.push(v / c_eps);
            out.phi.push(lift * (v - c_eps));
            out.bubble.push(bubble_eval(n, y[0].hypot(y[1])));
        }
    }
    Ok(out)
}

/// `sup |φ - bubble|` over the samples with `|y| <= R`.
pub fn profile_deviation(samples: &ProfileSamples, radius: f64) -> f64 {
    samples
        .y
        .iter()
        .zip(samples.phi.iter().zip(&samples.bubble))
        .filter(|(y, _)| y[0].hypot(y[1]) <= radius)
        .map(|(_, (p, b))| (p - b).abs())
        .fold(0.0, f64::max)
}

/// `∫|∇ min(u, c_ε/c)|^n`.
pub fn truncation_energy(space: &FemSpace, u: &[f64], c: f64, c_eps: f64, n: Dimension) -> Result<f64> {
    space.check_field(u)?;
    if !(c > 1.0) {
        return invalid(format!("truncation level c must exceed 1, got {c}"));
    }
    let level = c_eps / c;
    let t: Vec<f64> = u.iter().map(|&v| v.min(level)).collect();
    Ok(space.grad_energy(&t, n))
}

/// Fraction of `∫|∇u|^n` on elements whose centroid lies within `radius` of
/// `center`. Zero for a constant field.
pub fn gradient_concentration(space: &FemSpace, u: &[f64], center: Point, radius: f64, n: Dimension) -> Result<f64> {
    space.check_field(u)?;
    if !(radius > 0.0) {
        return invalid(format!("radius must be positive, got {radius}"));
    }
    let mesh = space.mesh();
    let p = n.as_f64();
    let vols = mesh.element_volumes();
    let density = |e: usize| {
        let g = space.gradient(u, e);
        g[0].hypot(g[1]).powf(p) * vols[e]
    };
    let total = space.element_sum(density);
    if total == 0.0 {
        return Ok(0.0);
    }
    let inside = space.element_sum(|e| {
        let c = mesh.centroid(e);
        if (c[0] - center[0]).hypot(c[1] - center[1]) <= radius {
            density(e)
        } else {
            0.0
        }
    });
    Ok((inside / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct BlowupOptions {
    /// Radius `R` of the reference ball.
    pub sample_radius: f64,
    pub per_radius: usize,
    /// Concentration radius in units of `r_ε`.
    pub concentration_radius: f64,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        BlowupOptions {
            sample_radius: 2.0,
            per_radius: 16,
            concentration_radius: 10.0,
        }
    }
}

pub const TRUNCATION_LEVELS: [f64; 4] = [1.5, 2.0, 3.0, 4.0];

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub epsilon: f64,
    pub c_eps: f64,
    pub x_eps: Point,
    pub r_eps: f64,
    /// `r^n c^{n/(n-1)} e^{β c^{n/(n-1)}} - λ`, zero up to round-off.
    pub scale_identity_error: f64,
    pub profile_deviation: f64,
    pub truncation_energies: Vec<(f64, f64)>,
    pub gradient_mass_fraction: f64,
    pub boundary_distance: f64,
    pub decay_surrogate: f64,
    #[serde(skip)]
    pub profiles: ProfileSamples,
}

/// All diagnostics for one maximizer. The peak is taken from the field
/// itself, so `ψ(0) = 1` and `φ(0) = 0` hold exactly.
pub fn blowup_report(space: &FemSpace, result: &MaximizerResult, n: Dimension, opts: BlowupOptions) -> Result<BlowupReport> {
    let u = &result.u;
    let (c_eps, x_eps) = peak(space.mesh(), u);
    if !(c_eps > 0.0) {
        return invalid("maximizer is not sign-normalized (nonpositive peak)");
    }
    let beta = result.beta_eps;
    let r_eps = blowup_scale(result.lambda_eps, c_eps, beta, n)?;
    let q = n.conjugate();
    let identity = r_eps.powf(n.as_f64()) * c_eps.powf(q) * (beta * c_eps.powf(q)).exp();
    let profiles = rescaled_profiles(space, u, c_eps, x_eps, r_eps, n, opts.sample_radius, opts.per_radius)?;
    let truncation_energies = TRUNCATION_LEVELS
        .iter()
        .map(|&c| Ok((c, truncation_energy(space, u, c, c_eps, n)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlowupReport {
        epsilon: result.epsilon,
        c_eps,
        x_eps,
        r_eps,
        scale_identity_error: identity - result.lambda_eps,
        profile_deviation: profile_deviation(&profiles, opts.sample_radius),
        truncation_energies,
        gradient_mass_fraction: gradient_concentration(space, u, x_eps, opts.concentration_radius * r_eps, n)?,
        boundary_distance: space.mesh().boundary_distance(x_eps),
        decay_surrogate: decay_surrogate(r_eps, c_eps, n),
        profiles,
    })
}
