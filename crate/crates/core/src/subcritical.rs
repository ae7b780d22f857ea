//! Subcritical extremals: maximize `∫ exp(β_ε |u|^{n/(n-1)})` over mean-zero
//! fields with `‖u‖_{1,α} = 1`, the Euler-Lagrange multipliers of the
//! maximizer, and the continuation `ε → 0`.
//!
//! The ascent is a Sobolev gradient method. With `P = K + M`, the gradient
//! `g` of the functional and the gradient `h` of the constraint are mapped
//! to Riesz representers, `g`'s is projected onto the tangent space
//! `{m·v = 0, h·v = 0}` in the `P` inner product, and a step along it is
//! retracted by mean projection and rescaling to unit norm. At a fixed
//! point `g` is a combination of `h` and the mass vector, which is the
//! discrete Euler-Lagrange system; its residual is the stopping test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{sharp_constants, Dimension};
use crate::error::{invalid, Error, Result};
use crate::fem::{FemSpace, Field, NormParams};
use crate::mesh::Point;
use crate::sparse::dot;

/// Largest admissible `β|u|^{n/(n-1)}` at a quadrature point.
pub const EXPONENT_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy)]
pub struct SubcriticalProblem<'a> {
    pub space: &'a FemSpace,
    pub n: Dimension,
    pub alpha: f64,
    pub epsilon: f64,
    pub beta_eps: f64,
}

impl<'a> SubcriticalProblem<'a> {
    /// `lambda1` is the discrete first eigenvalue on the same mesh; `alpha`
    /// must lie below it.
    pub fn new(space: &'a FemSpace, n: Dimension, alpha: f64, epsilon: f64, lambda1: f64) -> Result<Self> {
        space.check_dimension(n)?;
        let beta_n = sharp_constants(n).beta_n;
        if !(epsilon > 0.0 && epsilon < beta_n) {
            return invalid(format!("epsilon must lie in (0, {beta_n}), got {epsilon}"));
        }
        NormParams::new(n, alpha)?;
        if !(alpha < lambda1) {
            return invalid(format!("alpha = {alpha} must be below lambda_1 = {lambda1}"));
        }
        Ok(SubcriticalProblem {
            space,
            n,
            alpha,
            epsilon,
            beta_eps: beta_n - epsilon,
        })
    }

    pub fn norm_params(&self) -> NormParams {
        NormParams {
            n: self.n,
            alpha: self.alpha,
        }
    }

    /// `‖u‖_{1,α}^n = ‖∇u‖_n^n - α‖u‖_n^n` (may be negative off the
    /// admissible set).
    pub fn constraint(&self, u: &[f64]) -> f64 {
        let nf = self.n.as_f64();
        self.space.grad_energy(u, self.n) - self.alpha * self.space.lp_norm(u, nf).powf(nf)
    }

    /// Gradient of [`Self::constraint`] as a load vector.
    pub fn constraint_gradient(&self, u: &[f64]) -> Vec<f64> {
        let nf = self.n.as_f64();
        let a = self.space.flux_load(u, nf);
        let b = self.space.power_load(u, nf);
        a.iter().zip(&b).map(|(x, y)| nf * (x - self.alpha * y)).collect()
    }

    /// Mean projection followed by rescaling to unit `‖·‖_{1,α}`.
    pub fn retract(&self, v: &[f64]) -> Result<Field> {
        let u = self.space.mean_project(v);
        let nrm = self.space.norm_1alpha(&u, self.norm_params())?;
        if !(nrm > 0.0) {
            return invalid("cannot normalize a field with zero (1, alpha) norm");
        }
        Ok(u.scaled(1.0 / nrm))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximizerResult {
    #[serde(skip)]
    pub u: Field,
    pub epsilon: f64,
    pub beta_eps: f64,
    #[serde(rename = "C_eps")]
    pub big_c_eps: f64,
    pub lambda_eps: f64,
    pub mu_eps: f64,
    pub nu_eps: f64,
    pub c_eps: f64,
    pub x_eps: Point,
    pub el_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct MaximizeOptions {
    /// Stop when the Euler-Lagrange dual residual is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            tol: 1e-8,
            max_iter: 5000,
            armijo: 1e-4,
        }
    }
}

fn check_exponent(u: &[f64], beta: f64, n: Dimension) -> Result<()> {
    // quadrature values are convex combinations of nodal values
    let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let exponent = beta * peak.powf(n.conjugate());
    if exponent > EXPONENT_CAP {
        return Err(Error::ExponentOverflow {
            exponent,
            cap: EXPONENT_CAP,
        });
    }
    Ok(())
}

/// `∫_Ω exp(β|u|^{n/(n-1)})` with the degree-6 rule.
pub fn mt_functional(space: &FemSpace, u: &[f64], beta: f64, n: Dimension) -> Result<f64> {
    space.check_field(u)?;
    check_exponent(u, beta, n)?;
    let q = n.conjugate();
    Ok(space.integrate_pointwise(u, |v| (beta * v.abs().powf(q)).exp()))
}

/// Gradient of [`mt_functional`] as a load vector:
/// `∫ exp(β|u|^q) βq |u|^{q-2}u φ_i`.
pub fn mt_gradient(space: &FemSpace, u: &[f64], beta: f64, n: Dimension) -> Result<Vec<f64>> {
    space.check_field(u)?;
    check_exponent(u, beta, n)?;
    let q = n.conjugate();
    Ok(space.pointwise_load(u, |v| {
        let a = v.abs();
        (beta * a.powf(q)).exp() * beta * q * a.powf(q - 1.0) * v.signum()
    }))
}

/// `∫ exp(β_ε|u|^q)|u|^{q-2}u φ_i`, the nonlinear part of the
/// Euler-Lagrange load (`q = n/(n-1)`, so `|u|^{q-2}u = sign(u)|u|^{1/(n-1)}`).
fn el_nonlinear_load(problem: &SubcriticalProblem, u: &[f64]) -> Vec<f64> {
    let q = problem.n.conjugate();
    let beta = problem.beta_eps;
    problem.space.pointwise_load(u, |v| {
        let a = v.abs();
        (beta * a.powf(q)).exp() * a.powf(q - 1.0) * v.signum()
    })
}

/// `(λ_ε, μ_ε, ν_ε)`:
/// `λ = ∫e^{β|u|^q}|u|^q`, `μ = |Ω|^{-1}∫e^{β|u|^q}|u|^{q-2}u`,
/// `ν = |Ω|^{-1}∫|u|^{n-2}u`.
pub fn multipliers(u: &[f64], problem: &SubcriticalProblem) -> Result<(f64, f64, f64)> {
    let space = problem.space;
    space.check_field(u)?;
    check_exponent(u, problem.beta_eps, problem.n)?;
    let q = problem.n.conjugate();
    let nf = problem.n.as_f64();
    let beta = problem.beta_eps;
    let lambda = space.integrate_pointwise(u, |v| {
        let a = v.abs().powf(q);
        (beta * a).exp() * a
    });
    let mu = space.integrate_pointwise(u, |v| {
        let a = v.abs();
        (beta * a.powf(q)).exp() * a.powf(q - 1.0) * v.signum()
    }) / space.volume();
    let nu = if nf == 2.0 {
        space.integral(u)
    } else {
        space.integrate_pointwise(u, |v| v.abs().powf(nf - 1.0) * v.signum())
    } / space.volume();
    Ok((lambda, mu, nu))
}

/// Right-hand side of the Euler-Lagrange equation tested against every hat
/// function: `(1/λ)∫e^{β|u|^q}|u|^{q-2}uφ_i + α∫|u|^{n-2}uφ_i - (μ + αλν)/λ ∫φ_i`.
pub fn el_load(u: &[f64], problem: &SubcriticalProblem, lambda: f64, mu: f64, nu: f64) -> Vec<f64> {
    let space = problem.space;
    let nl = el_nonlinear_load(problem, u);
    let pw = space.power_load(u, problem.n.as_f64());
    let c = (mu + problem.alpha * lambda * nu) / lambda;
    nl.iter()
        .zip(&pw)
        .zip(space.lumped_mass())
        .map(|((a, b), m)| a / lambda + problem.alpha * b - c * m)
        .collect()
}

fn residual_at(u: &[f64], problem: &SubcriticalProblem) -> Result<(f64, (f64, f64, f64))> {
    let (lambda, mu, nu) = multipliers(u, problem)?;
    let lhs = problem.space.flux_load(u, problem.n.as_f64());
    let rhs = el_load(u, problem, lambda, mu, nu);
    let r: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    Ok((problem.space.dual_norm(&r), (lambda, mu, nu)))
}

/// Dual norm of the weak Euler-Lagrange residual of `result.u`.
pub fn el_residual(result: &MaximizerResult, problem: &SubcriticalProblem) -> Result<f64> {
    Ok(residual_at(&result.u, problem)?.0)
}

/// Node of largest `|u|` (lowest index on ties).
pub fn peak_node(u: &[f64]) -> usize {
    let mut k = 0;
    for (i, v) in u.iter().enumerate() {
        if v.abs() > u[k].abs() {
            k = i;
        }
    }
    k
}

/// Starting point: the first eigenfunction plus a bump centred on a
/// seed-chosen boundary node, normalized onto the constraint set.
pub fn initial_guess(problem: &SubcriticalProblem, eigenfunction: &[f64], seed: u64) -> Result<Field> {
    let space = problem.space;
    space.check_field(eigenfunction)?;
    let mesh = space.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boundary = mesh.boundary_nodes();
    let centre = mesh.node(boundary[rng.gen_range(0..boundary.len())]);
    let width = 0.25 * mesh.extent();
    let amplitude = rng.gen_range(0.5..1.5) * eigenfunction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bump = space.interpolate(|p| {
        let s = ((p[0] - centre[0]).powi(2) + (p[1] - centre[1]).powi(2)) / (width * width);
        if s < 1.0 {
            amplitude * (1.0 - s).powi(2)
        } else {
            0.0
        }
    });
    let v: Vec<f64> = eigenfunction.iter().zip(bump.iter()).map(|(e, b)| e + b).collect();
    problem.retract(&v)
}

fn finish(problem: &SubcriticalProblem, u: Field, value: f64, residual: f64, mults: (f64, f64, f64), iterations: usize) -> MaximizerResult {
    let k = peak_node(&u);
    let (u, flip) = if u[k] < 0.0 { (u.scaled(-1.0), -1.0) } else { (u, 1.0) };
    let (lambda, mu, nu) = mults;
    MaximizerResult {
        c_eps: u[k],
        x_eps: problem.space.mesh().node(k),
        u,
        epsilon: problem.epsilon,
        beta_eps: problem.beta_eps,
        big_c_eps: value,
        lambda_eps: lambda,
        // μ and ν are odd in u
        mu_eps: flip * mu,
        nu_eps: flip * nu,
        el_residual: residual,
        iterations,
    }
}

/// First-order data at a point of the constraint set.
struct Iterate {
    u: Field,
    value: f64,
    g: Vec<f64>,
    h: Vec<f64>,
    dh: Vec<f64>,
    /// Riesz representer of `g` projected onto the tangent space.
    d: Vec<f64>,
}

struct Ascent<'p, 'a> {
    problem: &'p SubcriticalProblem<'a>,
    e: Vec<f64>,
}

impl Ascent<'_, '_> {
    fn iterate(&self, u: Field, value: f64) -> Result<Iterate> {
        let (space, n, beta) = (self.problem.space, self.problem.n, self.problem.beta_eps);
        let g = mt_gradient(space, &u, beta, n)?;
        let h = self.problem.constraint_gradient(&u);
        let dh = space.riesz(&h)?;
        let dg = space.riesz(&g)?;
        let mut it = Iterate {
            u,
            value,
            g,
            h,
            dh,
            d: Vec::new(),
        };
        it.d = self.project(&it, dg);
        Ok(it)
    }

    /// `(K+M)`-orthogonal projection onto `{m·v = 0, h·v = 0}` at `at`.
    fn project(&self, at: &Iterate, mut v: Vec<f64>) -> Vec<f64> {
        let m = self.problem.space.lumped_mass();
        let (a11, a12, a21, a22) = (dot(m, &self.e), dot(m, &at.dh), dot(&at.h, &self.e), dot(&at.h, &at.dh));
        let (b1, b2) = (dot(m, &v), dot(&at.h, &v));
        let det = a11 * a22 - a12 * a21;
        let a = (b1 * a22 - a12 * b2) / det;
        let b = (a11 * b2 - a21 * b1) / det;
        for i in 0..v.len() {
            v[i] -= a * self.e[i] + b * at.dh[i];
        }
        v
    }
}

const MEMORY: usize = 8;

/// Riemannian L-BFGS ascent in the `(K + M)` metric from `init` (see the
/// module docs). Curvature pairs are carried to the new tangent space by
/// projection; a non-ascent direction resets the memory.
pub fn maximize(problem: &SubcriticalProblem, init: &[f64], opts: MaximizeOptions) -> Result<MaximizerResult> {
    let space = problem.space;
    space.check_field(init)?;
    let (n, beta) = (problem.n, problem.beta_eps);
    let ascent = Ascent {
        problem,
        e: space.riesz(space.lumped_mass())?,
    };
    let u0 = problem.retract(init)?;
    let v0 = mt_functional(space, &u0, beta, n)?;
    let mut cur = ascent.iterate(u0, v0)?;
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for it in 0..=opts.max_iter {
        let (residual, mults) = residual_at(&cur.u, problem)?;
        if residual <= opts.tol {
            return Ok(finish(problem, cur.u, cur.value, residual, mults, it));
        }
        let fail = |cur: Iterate| {
            let best = finish(problem, cur.u, cur.value, residual, mults, it);
            Err(Error::MaximizeNotConverged(Box::new(best)))
        };
        if it == opts.max_iter {
            return fail(cur);
        }
        // two-loop recursion for the ascent direction H·d
        let mut q = cur.d.clone();
        let mut coeffs = Vec::with_capacity(pairs.len());
        for (s, y) in pairs.iter().rev() {
            let rho = 1.0 / space.h1_inner(y, s);
            let a = rho * space.h1_inner(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            coeffs.push((rho, a));
        }
        if let Some((s, y)) = pairs.last() {
            let gamma = space.h1_inner(s, y) / space.h1_inner(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        }
        for ((s, y), (rho, a)) in pairs.iter().zip(coeffs.iter().rev()) {
            let b = rho * space.h1_inner(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir = ascent.project(&cur, q);
        let mut slope = dot(&cur.g, &dir);
        if !(slope > 0.0) {
            pairs.clear();
            dir = cur.d.clone();
            slope = dot(&cur.g, &dir);
            if !(slope > 0.0) {
                return fail(cur);
            }
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            if let Ok(cand) = problem.retract(&cur.u.added(t, &dir)) {
                match mt_functional(space, &cand, beta, n) {
                    Ok(f) if f >= cur.value + opts.armijo * t * slope - 4.0 * f64::EPSILON * cur.value => {
                        accepted = Some((cand, f));
                        break;
                    }
                    Ok(_) | Err(Error::ExponentOverflow { .. }) => {}
                    Err(err) => return Err(err),
                }
            }
            t *= 0.5;
        }
        if accepted.is_none() {
            // F is flat to round-off here; accept any step that reduces the residual
            let mut t = 1.0;
            for _ in 0..20 {
                if let Ok(cand) = problem.retract(&cur.u.added(t, &dir)) {
                    if let (Ok(f), Ok((r, _))) = (mt_functional(space, &cand, beta, n), residual_at(&cand, problem)) {
                        if r < residual {
                            accepted = Some((cand, f));
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
        }
        let Some((u_new, f_new)) = accepted else {
            return fail(cur);
        };
        let next = ascent.iterate(u_new, f_new)?;
        // curvature pair of the minimization of -F, in the new tangent space
        let step: Vec<f64> = next.u.iter().zip(cur.u.iter()).map(|(a, b)| a - b).collect();
        let s = ascent.project(&next, step);
        let old_d = ascent.project(&next, cur.d.clone());
        let y: Vec<f64> = old_d.iter().zip(&next.d).map(|(a, b)| a - b).collect();
        pairs = pairs
            .into_iter()
            .map(|(ps, py)| (ascent.project(&next, ps), ascent.project(&next, py)))
            .filter(|(ps, py)| space.h1_inner(ps, py) > 0.0)
            .collect();
        if space.h1_inner(&s, &y) > 1e-12 * space.h1_inner(&s, &s).sqrt() * space.h1_inner(&y, &y).sqrt() {
            pairs.push((s, y));
            if pairs.len() > MEMORY {
                pairs.remove(0);
            }
        }
        cur = next;
    }
    unreachable!("the loop returns on its last iteration")
}

/// `β_n 2^{-k}` for `k = 1..=steps`.
pub fn default_schedule(n: Dimension, steps: u32) -> Vec<f64> {
    let beta_n = sharp_constants(n).beta_n;
    (1..=steps).map(|k| beta_n * 0.5f64.powi(k as i32)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStep {
    pub epsilon: f64,
    pub result: Option<MaximizerResult>,
    pub error: Option<String>,
}

/// Solves along a strictly decreasing `ε` schedule, warm-starting each step
/// from the last successful maximizer. A failed step is recorded and the
/// next one restarts from the last success.
pub fn continuation(
    space: &FemSpace,
    n: Dimension,
    alpha: f64,
    lambda1: f64,
    schedule: &[f64],
    init: &[f64],
    opts: MaximizeOptions,
) -> Result<Vec<ContinuationStep>> {
    let beta_n = sharp_constants(n).beta_n;
    if schedule.is_empty() {
        return invalid("empty epsilon schedule");
    }
    for w in schedule.windows(2) {
        if !(w[1] < w[0]) {
            return invalid("epsilon schedule must be strictly decreasing");
        }
    }
    if !(schedule[0] < beta_n) || !(schedule[schedule.len() - 1] > 0.0) {
        return invalid(format!("epsilon schedule must lie in (0, {beta_n})"));
    }
    let mut start: Field = init.to_vec().into();
    let mut steps = Vec::with_capacity(schedule.len());
    for &epsilon in schedule {
        let problem = SubcriticalProblem::new(space, n, alpha, epsilon, lambda1)?;
        match maximize(&problem, &start, opts) {
            Ok(res) => {
                start = res.u.clone();
                steps.push(ContinuationStep {
                    epsilon,
                    result: Some(res),
                    error: None,
                });
            }
            Err(err) => steps.push(ContinuationStep {
                epsilon,
                result: None,
                error: Some(err.to_string()),
            }),
        }
    }
    Ok(steps)
}

/// Admissible exponent bound `1/(1 - t^n)^{1/(n-1)}` for a weak limit of norm
/// `t`; infinite as `t → 1`.
pub fn concentration_threshold(t: f64, n: Dimension) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return invalid(format!("weak-limit norm must lie in [0, 1), got {t}"));
    }
    let nf = n.as_f64();
    Ok((1.0 - t.powf(nf)).powf(-1.0 / (nf - 1.0)))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::fem::EigOptions;
    use crate::mesh::build_disk;

    fn disk(h: f64) -> (FemSpace, f64, Field) {
        let s = FemSpace::new(build_disk(1.0, h).unwrap());
        let eig = s.neumann_eigenvalue(Dimension::TWO, EigOptions::default()).unwrap();
        (s, eig.lambda1, eig.eigenfunction)
    }

    #[test]
    fn functional_basics() {
        let (s, _, e1) = disk(0.2);
        let n = Dimension::TWO;
        let zero = Field::zeros(s.node_count());
        assert!((mt_functional(&s, &zero, 3.0, n).unwrap() - s.volume()).abs() < 1e-12);
        assert!((mt_functional(&s, &e1, 1e-12, n).unwrap() - s.volume()).abs() < 1e-9);
        let (a, b) = (mt_functional(&s, &e1, 1.0, n).unwrap(), mt_functional(&s, &e1, 1.1, n).unwrap());
        assert!(b > a);
        let big = e1.scaled(100.0);
        assert!(matches!(mt_functional(&s, &big, 2.0, n), Err(Error::ExponentOverflow { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (s, _, _) = disk(0.2);
        let n = Dimension::TWO;
        let u = s.interpolate(|p| 0.6 * p[0] + 0.3 * (2.0 * p[1]).sin());
        let v = s.interpolate(|p| (p[0] * p[1]).cos() - 0.5 * p[1]);
        let g = mt_gradient(&s, &u, 3.0, n).unwrap();
        let h = 1e-6;
        let fd = (mt_functional(&s, &u.added(h, &v), 3.0, n).unwrap() - mt_functional(&s, &u.added(-h, &v), 3.0, n).unwrap()) / (2.0 * h);
        let an = dot(&g, &v);
        assert!((fd - an).abs() <= 1e-5 * an.abs(), "{fd} vs {an}");
    }

    #[test]
    fn problem_validation() {
        let (s, l1, _) = disk(0.25);
        let n = Dimension::TWO;
        assert!(SubcriticalProblem::new(&s, n, 0.0, 0.0, l1).is_err());
        assert!(SubcriticalProblem::new(&s, n, 0.0, 2.0 * PI, l1).is_err());
        assert!(SubcriticalProblem::new(&s, n, l1, 1.0, l1).is_err());
        let p = SubcriticalProblem::new(&s, n, 0.5 * l1, 1.0, l1).unwrap();
        assert!((p.beta_eps - (2.0 * PI - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn multipliers_of_zero_and_odd_fields() {
        // the structured rectangle is symmetric under (x, y) -> (1-x, 1-y)
        let s = FemSpace::new(crate::mesh::build_rectangle(1.0, 1.0, 0.1).unwrap());
        let l1 = s.neumann_eigenvalue(Dimension::TWO, EigOptions::default()).unwrap().lambda1;
        let p = SubcriticalProblem::new(&s, Dimension::TWO, 0.0, PI, l1).unwrap();
        assert_eq!(multipliers(&Field::zeros(s.node_count()), &p).unwrap(), (0.0, 0.0, 0.0));
        let odd = s.interpolate(|q| (q[0] - 0.5) + 0.3 * (q[1] - 0.5).powi(3));
        let (_, mu, nu) = multipliers(&odd, &p).unwrap();
        assert!(mu.abs() < 1e-13 && nu.abs() < 1e-13, "{mu} {nu}");
    }

    #[test]
    fn maximizer_on_coarse_disk() {
        let (s, l1, e1) = disk(0.1);
        let p = SubcriticalProblem::new(&s, Dimension::TWO, 0.0, PI, l1).unwrap();
        let init = initial_guess(&p, &e1, 7).unwrap();
        let res = maximize(&p, &init, MaximizeOptions::default()).unwrap();
        assert!((s.norm_1alpha(&res.u, p.norm_params()).unwrap() - 1.0).abs() < 1e-8);
        assert!(s.mean(&res.u).abs() < 1e-10);
        assert!(res.big_c_eps > s.volume());
        assert!(res.el_residual <= 1e-8);
        assert!(res.lambda_eps >= (res.big_c_eps - s.volume()) / p.beta_eps);
        assert!(res.c_eps > 0.0 && res.u[peak_node(&res.u)] == res.c_eps);
        let rhs = el_load(&res.u, &p, res.lambda_eps, res.mu_eps, res.nu_eps);
        assert!(rhs.iter().sum::<f64>().abs() < 1e-12);
        assert!((el_residual(&res, &p).unwrap() - res.el_residual).abs() < 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let n = Dimension::TWO;
        assert_eq!(concentration_threshold(0.0, n).unwrap(), 1.0);
        assert!((concentration_threshold(0.5f64.sqrt(), n).unwrap() - 2.0).abs() < 1e-12);
        assert!(concentration_threshold(1.0 - 1e-9, n).unwrap() > 1e8);
        assert!(concentration_threshold(1.0, n).is_err());
        assert!(concentration_threshold(-0.1, n).is_err());
    }

    #[test]
    fn schedule_is_geometric() {
        let s = default_schedule(Dimension::TWO, 4);
        assert_eq!(s.len(), 4);
        assert!((s[0] - PI).abs() < 1e-15 && (s[3] - PI / 8.0).abs() < 1e-15);
    }
}
