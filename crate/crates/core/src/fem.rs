//! P1 finite elements: energies and norms of the mean-zero constraint set,
//! the weak `n`-Laplacian, and the first nonzero Neumann eigenvalue.
//!
//! The mean of a field is taken with the lumped mass vector `m_i = Σ|T|/3`,
//! which integrates P1 functions exactly, so `mean_project` is diagonal.
//! Nonlinear integrands are evaluated with the 12-point degree-6 rule.

use std::io::{BufRead, Write};
use std::ops::{Deref, DerefMut};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::Dimension;
use crate::error::{invalid, Error, Result};
use crate::mesh::{Mesh, Point, Quadrature};
use crate::sparse::{dot, pcg, CgOptions, CsrMatrix};

/// Nodal coefficients of a P1 function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Field {
        Field(values)
    }

    pub fn zeros(n: usize) -> Field {
        Field(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Field {
        Field(vec![c; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field(self.0.iter().map(|v| c * v).collect())
    }

    /// `self + t·dir`
    pub fn added(&self, t: f64, dir: &[f64]) -> Field {
        Field(self.0.iter().zip(dir).map(|(u, d)| u + t * d).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Plain text: the coefficient count, then one coefficient per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.0.len())?;
        for v in &self.0 {
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Field> {
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let head = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))??;
        let n: usize = head
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad field length {head:?}")))?;
        let mut values = Vec::with_capacity(n);
        for line in lines.by_ref().take(n) {
            let line = line?;
            values.push(
                line.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad field value {line:?}")))?,
            );
        }
        if values.len() != n {
            return Err(Error::Parse(format!("field file declares {n} values but has {}", values.len())));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after field values".into()));
        }
        Ok(Field(values))
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Field {
        Field(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub n: Dimension,
    pub alpha: f64,
}

impl NormParams {
    pub fn new(n: Dimension, alpha: f64) -> Result<NormParams> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return invalid(format!("alpha must be nonnegative and finite, got {alpha}"));
        }
        Ok(NormParams { n, alpha })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigResult {
    pub lambda1: f64,
    #[serde(skip)]
    pub eigenfunction: Field,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-9,
            max_iter: 1000,
        }
    }
}

/// A mesh with its P1 stiffness, consistent and lumped mass.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Mesh,
    gradients: Vec<[[f64; 2]; 3]>,
    lumped: Vec<f64>,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    shifted: CsrMatrix,
    volume: f64,
    quad: Quadrature,
}

impl FemSpace {
    pub fn new(mesh: Mesh) -> FemSpace {
        let gradients: Vec<[[f64; 2]; 3]> = (0..mesh.element_count()).map(|e| mesh.hat_gradients(e)).collect();
        let vols = mesh.element_volumes();
        let stiffness = CsrMatrix::assemble(&mesh, |e| {
            let g = &gradients[e];
            let mut k = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    k[a][b] = vols[e] * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
            k
        });
        let mass = CsrMatrix::assemble(&mesh, |e| {
            let mut k = [[vols[e] / 12.0; 3]; 3];
            for (a, row) in k.iter_mut().enumerate() {
                row[a] = vols[e] / 6.0;
            }
            k
        });
        let mut lumped = vec![0.0; mesh.node_count()];
        for (t, v) in mesh.elements().iter().zip(vols) {
            for &i in t {
                lumped[i] += v / 3.0;
            }
        }
        let shifted = stiffness.linear_combination(1.0, &mass, 1.0);
        let volume = lumped.iter().sum();
        FemSpace {
            mesh,
            gradients,
            lumped,
            stiffness,
            mass,
            shifted,
            volume,
            quad: Quadrature::triangle(6),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn node_count(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Fails unless `n` equals the mesh dimension; the energies below use
    /// the exponent `n`, which only makes sense for `n = dim`.
    pub fn check_dimension(&self, n: Dimension) -> Result<()> {
        if n.get() != self.mesh.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.mesh.dim(),
                got: n.get(),
            });
        }
        Ok(())
    }

    pub fn check_field(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.node_count() {
            return Err(Error::FieldSize {
                expected: self.node_count(),
                got: u.len(),
            });
        }
        Ok(())
    }

    fn assert_field(&self, u: &[f64]) {
        assert_eq!(u.len(), self.node_count(), "field length does not match the mesh");
    }

    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Field {
        Field(self.mesh.nodes().iter().map(|&p| f(p)).collect())
    }

    pub fn gradient(&self, u: &[f64], e: usize) -> [f64; 2] {
        let t = self.mesh.elements()[e];
        let g = &self.gradients[e];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += u[t[k]] * g[k][0];
            out[1] += u[t[k]] * g[k][1];
        }
        out
    }

    pub fn hat_gradients(&self, e: usize) -> &[[f64; 2]; 3] {
        &self.gradients[e]
    }

    /// Sum of per-element values, computed in parallel and added in element
    /// order.
    pub(crate) fn element_sum(&self, f: impl Fn(usize) -> f64 + Sync) -> f64 {
        let parts: Vec<f64> = (0..self.mesh.element_count()).into_par_iter().map(&f).collect();
        parts.iter().sum()
    }

    pub(crate) fn element_load(&self, f: impl Fn(usize) -> [f64; 3] + Sync) -> Vec<f64> {
        let parts: Vec<[f64; 3]> = (0..self.mesh.element_count()).into_par_iter().map(&f).collect();
        let mut load = vec![0.0; self.node_count()];
        for (t, local) in self.mesh.elements().iter().zip(&parts) {
            for k in 0..3 {
                load[t[k]] += local[k];
            }
        }
        load
    }

    /// `∫ f(u(x)) dx` with the degree-6 rule.
    pub fn integrate_pointwise(&self, u: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
        self.assert_field(u);
        let vols = self.mesh.element_volumes();
        self.element_sum(|e| {
            let t = self.mesh.elements()[e];
            let mut s = 0.0;
            for (b, w) in self.quad.points.iter().zip(&self.quad.weights) {
                let uq = b[0] * u[t[0]] + b[1] * u[t[1]] + b[2] * u[t[2]];
                s += w * f(uq);
            }
            s * vols[e]
        })
    }

    /// Load vector `∫ f(u(x)) φ_i dx` with the degree-6 rule.
    pub fn pointwise_load(&self, u: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
        self.assert_field(u);
        let vols = self.mesh.element_volumes();
        self.element_load(|e| {
            let t = self.mesh.elements()[e];
            let mut local = [0.0; 3];
            for (b, w) in self.quad.points.iter().zip(&self.quad.weights) {
                let uq = b[0] * u[t[0]] + b[1] * u[t[1]] + b[2] * u[t[2]];
                let v = w * f(uq) * vols[e];
                for k in 0..3 {
                    local[k] += v * b[k];
                }
            }
            local
        })
    }

    /// Exact integral of the P1 function.
    pub fn integral(&self, u: &[f64]) -> f64 {
        self.assert_field(u);
        dot(&self.lumped, u)
    }

    pub fn mean(&self, u: &[f64]) -> f64 {
        self.integral(u) / self.volume
    }

    /// `u - (1/|Ω|)∫u`
    pub fn mean_project(&self, u: &[f64]) -> Field {
        let c = self.mean(u);
        Field(u.iter().map(|v| v - c).collect())
    }

    pub fn lp_norm(&self, u: &[f64], p: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
        let s = if p == 2.0 {
            self.mass.form(u, u).max(0.0)
        } else {
            self.integrate_pointwise(u, |v| v.abs().powf(p))
        };
        s.powf(1.0 / p)
    }

    /// `∫|∇u|^p`, exact for P1 (gradients are elementwise constant).
    pub fn gradient_energy_p(&self, u: &[f64], p: f64) -> f64 {
        self.assert_field(u);
        let vols = self.mesh.element_volumes();
        self.element_sum(|e| {
            let g = self.gradient(u, e);
            let s2 = g[0] * g[0] + g[1] * g[1];
            let density = if p == 2.0 { s2 } else { s2.powf(0.5 * p) };
            density * vols[e]
        })
    }

    pub fn grad_energy(&self, u: &[f64], n: Dimension) -> f64 {
        self.gradient_energy_p(u, n.as_f64())
    }

    /// `(‖∇u‖_n^n - α‖u‖_n^n)^{1/n}`. A radicand below zero by more than
    /// round-off is an error (α above the discrete λ₁, or `u` not mean-zero).
    pub fn norm_1alpha(&self, u: &[f64], params: NormParams) -> Result<f64> {
        let nf = params.n.as_f64();
        let ge = self.grad_energy(u, params.n);
        let rad = ge - params.alpha * self.lp_norm(u, nf).powf(nf);
        if rad < 0.0 {
            if rad >= -1e-12 * ge.max(f64::MIN_POSITIVE) {
                return Ok(0.0);
            }
            return Err(Error::NegativeRadicand(rad));
        }
        Ok(rad.powf(1.0 / nf))
    }

    /// `∫|∇u|^{p-2}∇u·∇φ_i`, the weak p-Laplacian (half the gradient of the
    /// energy for p = 2).
    pub fn flux_load(&self, u: &[f64], p: f64) -> Vec<f64> {
        self.assert_field(u);
        if p == 2.0 {
            return self.stiffness.mul_vec(u);
        }
        let vols = self.mesh.element_volumes();
        self.element_load(|e| {
            let g = self.gradient(u, e);
            let s2 = g[0] * g[0] + g[1] * g[1];
            let coef = if s2 == 0.0 { 0.0 } else { s2.powf(0.5 * (p - 2.0)) } * vols[e];
            let h = &self.gradients[e];
            [0, 1, 2].map(|k| coef * (g[0] * h[k][0] + g[1] * h[k][1]))
        })
    }

    /// `∫|u|^{p-2}u φ_i`
    pub fn power_load(&self, u: &[f64], p: f64) -> Vec<f64> {
        if p == 2.0 {
            return self.mass.mul_vec(u);
        }
        self.pointwise_load(u, |v| v.abs().powf(p - 1.0) * v.signum())
    }

    /// Dual norm of a load vector over mean-zero test functions measured in
    /// the lumped L² norm: `sup_{Σm_i v_i = 0} (r·v)/‖v‖`.
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        self.assert_field(r);
        let rbar = r.iter().sum::<f64>() / self.volume;
        r.iter()
            .zip(&self.lumped)
            .map(|(ri, mi)| {
                let d = ri - mi * rbar;
                d * d / mi
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Dual norm of `∫|∇u|^{n-2}∇u·∇v - ∫ f v` with `f` given as a field.
    pub fn n_laplacian_residual(&self, u: &[f64], rhs: &[f64], n: Dimension) -> f64 {
        let a = self.flux_load(u, n.as_f64());
        let b = self.mass.mul_vec(rhs);
        let r: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        self.dual_norm(&r)
    }

    /// Solves `(K + M) x = b`, the Riesz map of the H¹ inner product.
    pub fn riesz(&self, b: &[f64]) -> Result<Vec<f64>> {
        let opts = CgOptions {
            rel_tol: 1e-10,
            ..CgOptions::default()
        };
        Ok(pcg(&self.shifted, b, None, None, opts)?.x)
    }

    /// The H¹ inner product `aᵀ(K + M)b`.
    pub fn h1_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.shifted.form(a, b)
    }

    /// Mean-zero solution of the Neumann problem `K x = b`; `b` must sum to
    /// zero up to round-off.
    pub fn solve_neumann(&self, b: &[f64], rel_tol: f64) -> Result<Field> {
        let ones = vec![1.0; self.node_count()];
        let opts = CgOptions {
            rel_tol,
            ..CgOptions::default()
        };
        let out = pcg(&self.stiffness, b, None, Some(&ones), opts)?;
        Ok(self.mean_project(&out.x))
    }

    /// First nonzero Neumann eigenvalue of the Laplacian (`n = 2`) by
    /// preconditioned projected gradient descent on the Rayleigh quotient in
    /// block form (LOBPCG): the search space holds the current block, its
    /// `(K + M)`-preconditioned mean-projected residuals and the previous
    /// directions; each step minimizes the quotient on it and renormalizes.
    /// The block absorbs the (near-)degenerate pair of symmetric domains.
    pub fn neumann_eigenvalue(&self, n: Dimension, opts: EigOptions) -> Result<EigResult> {
        self.check_dimension(n)?;
        if !(opts.tol > 0.0) {
            return invalid("eigen tolerance must be positive");
        }
        const BLOCK: usize = 3;
        let seeds: [fn(Point) -> f64; 5] = [
            |p| p[0],
            |p| p[1],
            |p| p[0] * p[1],
            |p| p[0] * p[0],
            |p| p[1] * p[1],
        ];
        let start: Vec<Field> = seeds.iter().map(|f| self.mean_project(&self.interpolate(f))).collect();
        let mut x = self.m_orthonormalize(start, &[]);
        x.truncate(BLOCK);
        if x.is_empty() {
            return invalid("mesh supports no nonconstant field");
        }
        let mut dirs: Vec<Field> = Vec::new();
        let mut best: Option<EigResult> = None;
        for it in 0..=opts.max_iter {
            let kx: Vec<Vec<f64>> = x.iter().map(|v| self.stiffness.mul_vec(v)).collect();
            let mx: Vec<Vec<f64>> = x.iter().map(|v| self.mass.mul_vec(v)).collect();
            let lambdas: Vec<f64> = x.iter().zip(&kx).map(|(v, k)| dot(v, k)).collect();
            let res: Vec<Vec<f64>> = (0..x.len())
                .map(|j| kx[j].iter().zip(&mx[j]).map(|(k, m)| k - lambdas[j] * m).collect())
                .collect();
            let residual = self.dual_norm(&res[0]);
            if best.as_ref().map_or(true, |b| residual < b.residual) {
                best = Some(EigResult {
                    lambda1: lambdas[0],
                    eigenfunction: x[0].clone(),
                    iterations: it,
                    residual,
                });
            }
            if residual <= opts.tol {
                break;
            }
            if it == opts.max_iter {
                let mut out = best.expect("at least one iterate");
                out.eigenfunction = fix_sign(out.eigenfunction);
                return Err(Error::EigenNotConverged(Box::new(out)));
            }
            let mut w = Vec::with_capacity(res.len());
            for r in &res {
                w.push(self.mean_project(&self.riesz(r)?));
            }
            let block = x.len();
            let mut basis = x.clone();
            let extra = self.m_orthonormalize(w.into_iter().chain(dirs.drain(..)).collect(), &basis);
            basis.extend(extra);
            let dim = basis.len();
            let kb: Vec<Vec<f64>> = basis.iter().map(|v| self.stiffness.mul_vec(v)).collect();
            let mut small = nalgebra::DMatrix::<f64>::zeros(dim, dim);
            for a in 0..dim {
                for b in a..dim {
                    let v = 0.5 * (dot(&basis[a], &kb[b]) + dot(&basis[b], &kb[a]));
                    small[(a, b)] = v;
                    small[(b, a)] = v;
                }
            }
            let eig = nalgebra::SymmetricEigen::new(small);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let combine = |col: usize, from: usize| -> Field {
                let mut v = vec![0.0; self.node_count()];
                for (k, q) in basis.iter().enumerate().skip(from) {
                    let c = eig.eigenvectors[(k, col)];
                    v.iter_mut().zip(q.iter()).for_each(|(vi, qi)| *vi += c * qi);
                }
                Field(v)
            };
            let next: Vec<Field> = order[..block].iter().map(|&c| combine(c, 0)).collect();
            dirs = order[..block].iter().map(|&c| combine(c, block)).collect();
            x = self.m_orthonormalize(next.iter().map(|v| self.mean_project(v)).collect(), &[]);
            if x.len() < block {
                break;
            }
        }
        let mut out = best.expect("at least one iterate");
        out.eigenfunction = fix_sign(out.eigenfunction);
        if out.residual > opts.tol {
            return Err(Error::EigenNotConverged(Box::new(out)));
        }
        Ok(out)
    }

    /// Gram-Schmidt (twice) in the mass inner product against `against`
    /// (assumed orthonormal) and among themselves; nearly dependent vectors
    /// are dropped.
    fn m_orthonormalize(&self, vs: Vec<Field>, against: &[Field]) -> Vec<Field> {
        let m_against: Vec<Vec<f64>> = against.iter().map(|q| self.mass.mul_vec(q)).collect();
        let mut out: Vec<Field> = Vec::new();
        let mut m_out: Vec<Vec<f64>> = Vec::new();
        for mut v in vs {
            let n0 = self.mass.form(&v, &v).sqrt();
            if !(n0 > 0.0) {
                continue;
            }
            for _ in 0..2 {
                for (q, mq) in against.iter().zip(&m_against).chain(out.iter().zip(&m_out)) {
                    let c = dot(mq, &v);
                    v.iter_mut().zip(q.iter()).for_each(|(vi, qi)| *vi -= c * qi);
                }
            }
            let nv = self.mass.form(&v, &v).sqrt();
            if nv <= 1e-10 * n0 {
                continue;
            }
            v.iter_mut().for_each(|vi| *vi /= nv);
            m_out.push(self.mass.mul_vec(&v));
            out.push(v);
        }
        out
    }
}

/// Makes the entry of largest magnitude positive (lowest index on ties).
fn fix_sign(u: Field) -> Field {
    let mut k = 0;
    for (i, v) in u.iter().enumerate() {
        if v.abs() > u[k].abs() {
            k = i;
        }
    }
    if u[k] < 0.0 {
        u.scaled(-1.0)
    } else {
        u
    }
}
