//! Neumann Green function with a boundary pole and its regular part `A_p`,
//! the capacity minimizer energy, the test-function family concentrating at
//! the pole and the resulting lower-bound check.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::constants::{bubble_scale, capacity_upper_bound, sharp_constants, Dimension};
use crate::error::{invalid, Error, Result};
use crate::fem::{FemSpace, Field, NormParams};
use crate::mesh::{Locator, Mesh, Point};
use crate::sparse::{pcg, CgOptions};
use crate::subcritical::mt_functional;

#[derive(Debug, Clone, Copy)]
pub struct GreenOptions {
    /// Stop when successive fixed-point iterates differ by at most `tol` in
    /// the energy norm.
    pub tol: f64,
    pub relaxation: f64,
    pub max_iter: usize,
    /// Fit annulus for `A_p` and the log slope; `None` uses `[2h, 0.2 L]`
    /// with `h` the largest element diameter at the pole and `L` half the
    /// domain extent.
    pub fit_annulus: Option<(f64, f64)>,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions {
            tol: 1e-10,
            relaxation: 0.5,
            max_iter: 2000,
            fit_annulus: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenResult {
    #[serde(skip)]
    pub g: Field,
    pub p: Point,
    pub p_node: usize,
    #[serde(rename = "A_p")]
    pub a_p: f64,
    pub fit_annulus: (f64, f64),
    /// `(|x - p|, G + (n/β_n) ln|x - p| - A_p)` at the nodes of the fit annulus.
    pub remainder_samples: Vec<(f64, f64)>,
    pub fit_slope: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub update_history: Vec<f64>,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Least-squares coefficients of `y ≈ Σ_k c_k f_k(x)`.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

fn energy_norm(space: &FemSpace, v: &[f64]) -> f64 {
    space.stiffness().form(v, v).max(0.0).sqrt()
}

/// `(2h_p, max(extent/10, 6h_p))`, so coarse meshes still leave a few
/// boundary samples in the band.
fn default_annulus(mesh: &Mesh, p_node: usize) -> (f64, f64) {
    let h = mesh.local_h(p_node);
    (2.0 * h, (0.1 * mesh.extent()).max(6.0 * h))
}

/// Solves `-Δ_n G = δ_p + α(|G|^{n-2}G - avg) - 1/|Ω|`, `∂_ν G = 0`,
/// `∫G = 0` with a unit nodal load at the boundary node nearest `p`. The α
/// term is lagged in a damped fixed point; the pole part is then fitted.
pub fn solve_green(space: &FemSpace, p: Point, alpha: f64, n: Dimension, opts: GreenOptions) -> Result<GreenResult> {
    space.check_dimension(n)?;
    if !(alpha >= 0.0) {
        return invalid(format!("alpha must be nonnegative, got {alpha}"));
    }
    if !(opts.tol > 0.0) || !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return invalid("green solve needs tol > 0 and relaxation in (0, 1]");
    }
    let mesh = space.mesh();
    let p_node = mesh.nearest_boundary_node(p);
    let vol = space.volume();
    let mut base: Vec<f64> = space.lumped_mass().iter().map(|m| -m / vol).collect();
    base[p_node] += 1.0;
    let inner_tol = 1e-13;
    let mut g = space.solve_neumann(&base, inner_tol)?;
    let mut history = Vec::new();
    let mut iterations = 1;
    if alpha > 0.0 {
        let np = n.as_f64();
        let omega = opts.relaxation;
        loop {
            let mut load = space.power_load(&g, np);
            let avg = load.iter().sum::<f64>() / vol;
            load.iter_mut()
                .zip(space.lumped_mass())
                .zip(&base)
                .for_each(|((l, m), b)| *l = b + alpha * (*l - avg * m));
            let target = space.solve_neumann(&load, inner_tol)?;
            let next: Vec<f64> = g.iter().zip(target.iter()).map(|(a, t)| (1.0 - omega) * a + omega * t).collect();
            let diff: Vec<f64> = next.iter().zip(g.iter()).map(|(a, b)| a - b).collect();
            let update = energy_norm(space, &diff);
            history.push(update);
            g = space.mean_project(&next);
            iterations += 1;
            if !update.is_finite() || (history.len() > 10 && update > 1e6 * history[0]) {
                return Err(Error::GreenDiverged { history });
            }
            if update <= opts.tol {
                break;
            }
            if history.len() >= opts.max_iter {
                return Err(Error::GreenDiverged { history });
            }
        }
    }
    let annulus = opts.fit_annulus.unwrap_or_else(|| default_annulus(mesh, p_node));
    let mut result = GreenResult {
        g,
        p: mesh.node(p_node),
        p_node,
        a_p: 0.0,
        fit_annulus: annulus,
        remainder_samples: Vec::new(),
        fit_slope: 0.0,
        alpha,
        iterations,
        update_history: history,
    };
    result.a_p = extract_ap(mesh, &result.g, result.p, annulus, n)?;
    result.fit_slope = log_slope(mesh, &result.g, result.p, annulus)?;
    let coef = n.as_f64() / sharp_constants(n).beta_n;
    result.remainder_samples = (0..mesh.node_count())
        .filter_map(|i| {
            let r = dist(mesh.node(i), result.p);
            (r >= annulus.0 && r <= annulus.1).then(|| (r, result.g[i] + coef * r.ln() - result.a_p))
        })
        .collect();
    result.remainder_samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(result)
}

fn check_annulus(annulus: (f64, f64)) -> Result<()> {
    if !(annulus.0 > 0.0 && annulus.1 > annulus.0) {
        return invalid(format!("fit annulus needs 0 < r_min < r_max, got {annulus:?}"));
    }
    Ok(())
}

/// Intercept `A_p` of the regression of `G + (n/β_n) ln r` on `a + s r`
/// over the boundary nodes with `r_min <= r <= r_max`.
pub fn extract_ap(mesh: &Mesh, g: &[f64], p: Point, annulus: (f64, f64), n: Dimension) -> Result<f64> {
    check_annulus(annulus)?;
    if g.len() != mesh.node_count() {
        return Err(Error::FieldSize {
            expected: mesh.node_count(),
            got: g.len(),
        });
    }
    let coef = n.as_f64() / sharp_constants(n).beta_n;
    let (mut rows, mut ys) = (Vec::new(), Vec::new());
    for &i in mesh.boundary_nodes() {
        let r = dist(mesh.node(i), p);
        if r >= annulus.0 && r <= annulus.1 {
            rows.push(vec![1.0, r]);
            ys.push(g[i] + coef * r.ln());
        }
    }
    if rows.len() < 4 {
        return Err(Error::TooFewSamples {
            found: rows.len(),
            needed: 4,
        });
    }
    Ok(least_squares(&rows, &ys)?[0])
}

/// Slope `s` of the fit `G ≈ s ln r + a + b r` over all nodes in the annulus.
pub fn log_slope(mesh: &Mesh, g: &[f64], p: Point, annulus: (f64, f64)) -> Result<f64> {
    check_annulus(annulus)?;
    let (mut rows, mut ys) = (Vec::new(), Vec::new());
    for (i, &x) in mesh.nodes().iter().enumerate() {
        let r = dist(x, p);
        if r >= annulus.0 && r <= annulus.1 {
            rows.push(vec![r.ln(), 1.0, r]);
            ys.push(g[i]);
        }
    }
    if rows.len() < 6 {
        return Err(Error::TooFewSamples {
            found: rows.len(),
            needed: 6,
        });
    }
    Ok(least_squares(&rows, &ys)?[0])
}

/// Level values `c1 <= c2` of a potential and boundary data `a`, `b` on them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct CapacitySpec {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub b: f64,
}

impl CapacitySpec {
    fn validate(&self) -> Result<()> {
        if !(self.c1 <= self.c2) {
            return invalid(format!("capacity levels need c1 <= c2, got {} > {}", self.c1, self.c2));
        }
        Ok(())
    }

    /// `(b(t - c1) - a(t - c2))/(c2 - c1)` at `t` clamped to `[c1, c2]`.
    pub fn psi(&self, t: f64) -> f64 {
        let t = t.clamp(self.c1, self.c2);
        (self.b * (t - self.c1) - self.a * (t - self.c2)) / (self.c2 - self.c1)
    }
}

/// `|b - a|^n / (c2 - c1)^{n-1}`.
pub fn capacity_minimizer_energy(spec: CapacitySpec, n: Dimension) -> Result<f64> {
    spec.validate()?;
    if spec.a == spec.b {
        return Ok(0.0);
    }
    if spec.c1 == spec.c2 {
        return Err(Error::InfiniteCapacity);
    }
    let nf = n.as_f64();
    Ok((spec.b - spec.a).abs().powf(nf) / (spec.c2 - spec.c1).powf(nf - 1.0))
}

/// Energy `∫|∇Ψ|^n` of the affine minimizer built from the nodal potential,
/// next to the closed form.
pub fn discrete_capacity_check(space: &FemSpace, potential: &[f64], spec: CapacitySpec, n: Dimension) -> Result<(f64, f64)> {
    space.check_field(potential)?;
    spec.validate()?;
    if !potential.iter().any(|&t| t >= spec.c1 && t <= spec.c2) {
        return Err(Error::EmptyBand { c1: spec.c1, c2: spec.c2 });
    }
    let formula = capacity_minimizer_energy(spec, n)?;
    if spec.a == spec.b {
        return Ok((0.0, formula));
    }
    let psi: Vec<f64> = potential.iter().map(|&t| spec.psi(t)).collect();
    Ok((space.grad_energy(&psi, n), formula))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TestFamilyParams {
    pub epsilon: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub c: f64,
    pub p: Point,
    #[serde(rename = "A_p")]
    pub a_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestFamily {
    pub params: TestFamilyParams,
    #[serde(skip)]
    pub phi: Field,
    pub mean: f64,
    pub norm: f64,
    /// Largest gap between the two branches on `|x - p| = Rε`.
    pub jump: f64,
}

/// The family built from the bubble on `|x - p| < Rε`, `R = -ln ε`, and
/// `c^{-1/(n-1)}(G - ηβ)` outside, mean-projected. `c^{1/(n-1)} w_ε` does not
/// depend on `c`, so the unit norm fixes `c = ‖c^{1/(n-1)} φ_ε‖_{1,α}^{n-1}`
/// and then `A` follows from continuity.
pub fn build_test_family(space: &FemSpace, green: &GreenResult, epsilon: f64, n: Dimension) -> Result<TestFamily> {
    space.check_dimension(n)?;
    space.check_field(&green.g)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let mesh = space.mesh();
    let big_r = -epsilon.ln();
    let inner = big_r * epsilon;
    if 2.0 * inner >= 0.5 * mesh.extent() {
        return invalid(format!("2 R eps = {} is not below the domain scale", 2.0 * inner));
    }
    let h = mesh.local_h(green.p_node);
    if h > epsilon {
        return Err(Error::Unresolved(format!(
            "local mesh size {h:.3e} at p exceeds eps = {epsilon:.3e}; refine near p (refine_near) to h <= eps"
        )));
    }
    let nf = n.as_f64();
    let q = n.conjugate();
    let beta_n = sharp_constants(n).beta_n;
    let k = bubble_scale(n);
    let p = green.p;
    let a_p = green.a_p;
    let coef = nf / beta_n;
    let lift = (nf - 1.0) / beta_n;
    let cap = lift * (k * big_r.powf(q)).ln_1p() - coef * inner.ln() + a_p;
    // both branches scaled by c^{1/(n-1)}
    let inner_branch = |r: f64| cap - lift * (k * (r / epsilon).powf(q)).ln_1p();
    let outer_branch = |i: usize, r: f64| {
        let eta = ((2.0 * inner - r) / inner).clamp(0.0, 1.0);
        let remainder = green.g[i] + coef * r.ln() - a_p;
        green.g[i] - eta * remainder
    };
    let w: Vec<f64> = (0..mesh.node_count())
        .map(|i| {
            let r = dist(mesh.node(i), p);
            if r < inner {
                inner_branch(r)
            } else {
                outer_branch(i, r)
            }
        })
        .collect();
    let big_phi = space.mean_project(&w);
    let params = NormParams::new(n, green.alpha)?;
    let norm_big = space.norm_1alpha(&big_phi, params)?;
    let c = norm_big.powf(nf - 1.0);
    let phi = big_phi.scaled(1.0 / norm_big);

    // jump on the matching circle
    let outer_all: Vec<f64> = (0..mesh.node_count())
        .map(|i| outer_branch(i, dist(mesh.node(i), p)))
        .collect();
    let locator = Locator::new(mesh);
    let mut jump = 0.0f64;
    for s in 0..256 {
        let t = 2.0 * std::f64::consts::PI * s as f64 / 256.0;
        let x = [p[0] + inner * t.cos(), p[1] + inner * t.sin()];
        if let Ok(loc) = locator.locate(x) {
            let el = mesh.elements()[loc.element];
            let v: f64 = (0..3).map(|j| loc.barycentric[j] * outer_all[el[j]]).sum();
            jump = jump.max((v - inner_branch(inner)).abs() / c.powf(1.0 / (nf - 1.0)));
        }
    }
    let big_a = -c.powf(q) + lift * (k * big_r.powf(q)).ln_1p() - coef * inner.ln() + a_p;
    Ok(TestFamily {
        params: TestFamilyParams {
            epsilon,
            big_r,
            big_a,
            c,
            p,
            a_p,
        },
        mean: space.mean(&phi),
        norm: space.norm_1alpha(&phi, params)?,
        phi,
        jump,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBound {
    pub functional: f64,
    pub bound: f64,
    pub margin: f64,
}

/// `∫exp(β_n|φ|^{n/(n-1)})` against `|Ω| + (ω/2n) exp(β_n A_p + H_{n-1})`.
pub fn lower_bound_check(space: &FemSpace, phi: &[f64], n: Dimension, a_p: f64) -> Result<LowerBound> {
    space.check_field(phi)?;
    let functional = mt_functional(space, phi, sharp_constants(n).beta_n, n)?;
    let bound = capacity_upper_bound(n, a_p, space.volume())?;
    Ok(LowerBound {
        functional,
        bound,
        margin: functional - bound,
    })
}

/// Least-squares slope of `ln c` against `ln(-ln ε)`.
pub fn growth_exponent(epsilons: &[f64], cs: &[f64]) -> Result<f64> {
    if epsilons.len() != cs.len() || epsilons.len() < 2 {
        return invalid("growth fit needs at least two matching (epsilon, c) pairs");
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) || cs.iter().any(|&c| !(c > 0.0)) {
        return invalid("growth fit needs eps in (0, 1) and c > 0");
    }
    let rows: Vec<Vec<f64>> = epsilons.iter().map(|e| vec![1.0, (-e.ln()).ln()]).collect();
    let ys: Vec<f64> = cs.iter().map(|c| c.ln()).collect();
    Ok(least_squares(&rows, &ys)?[1])
}

/// Local potential on `Ω ∩ B_δ(center)`: unit nodal load at the boundary node
/// nearest `center`, value `-(n/β_n) ln δ` on the patch nodes that touch the
/// rest of the mesh, natural boundary condition on `∂Ω`. Nodes outside the
/// patch carry the Dirichlet value.
pub fn solve_local_green(space: &FemSpace, center: Point, delta: f64, n: Dimension, tol: f64) -> Result<Field> {
    space.check_dimension(n)?;
    if !(delta > 0.0) || !(tol > 0.0) {
        return invalid("local green needs delta > 0 and tol > 0");
    }
    let mesh = space.mesh();
    if delta >= 0.5 * mesh.extent() {
        return invalid(format!("delta {delta} is not below the domain scale"));
    }
    let c_node = mesh.nearest_boundary_node(center);
    let c = mesh.node(c_node);
    let count = mesh.node_count();
    let inside: Vec<bool> = (0..count).map(|i| dist(mesh.node(i), c) < delta).collect();
    let mut cut = vec![false; count];
    for el in mesh.elements() {
        let any_out = el.iter().any(|&i| !inside[i]);
        if any_out {
            el.iter().filter(|&&i| inside[i]).for_each(|&i| cut[i] = true);
        }
    }
    let free: Vec<usize> = (0..count).filter(|&i| inside[i] && !cut[i]).collect();
    if free.len() < 7 || cut[c_node] {
        return Err(Error::Unresolved(format!(
            "patch of radius {delta} holds only {} free nodes; refine near the center",
            free.len()
        )));
    }
    let dirichlet = -n.as_f64() / sharp_constants(n).beta_n * delta.ln();
    let k = space.stiffness();
    let mut index = vec![usize::MAX; count];
    free.iter().enumerate().for_each(|(j, &i)| index[i] = j);
    // K_ff x = e_c - K_fd g_d, where the fixed values are all equal
    let rhs: Vec<f64> = free
        .iter()
        .map(|&i| {
            let coupling: f64 = k.row(i).filter(|&(j, _)| index[j] == usize::MAX).map(|(_, v)| v).sum();
            let load = if i == c_node { 1.0 } else { 0.0 };
            load - coupling * dirichlet
        })
        .collect();
    let kff = k.submatrix(&free);
    let opts = CgOptions {
        rel_tol: tol,
        ..CgOptions::default()
    };
    let x = pcg(&kff, &rhs, None, None, opts)?.x;
    let mut out = vec![dirichlet; count];
    free.iter().zip(&x).for_each(|(&i, &v)| out[i] = v);
    Ok(out.into())
}
