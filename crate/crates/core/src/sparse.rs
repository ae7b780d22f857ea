//! Compressed sparse row matrices on the node graph of a mesh and a
//! Jacobi-preconditioned conjugate gradient solver.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the sparsity pattern of the P1 node graph (every
    /// pair of nodes sharing an element, plus the diagonal).
    pub fn node_pattern(mesh: &Mesh) -> CsrMatrix {
        let n = mesh.node_count();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in mesh.elements() {
            for &a in t {
                for &b in t {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let values = vec![0.0; cols.len()];
        CsrMatrix { n, row_ptr, cols, values }
    }

    /// Assembles `Σ_e local(e)` over all elements. Local matrices are
    /// computed in parallel and scattered in element order, so the result
    /// does not depend on the thread count.
    pub fn assemble<F>(mesh: &Mesh, local: F) -> CsrMatrix
    where
        F: Fn(usize) -> [[f64; 3]; 3] + Sync,
    {
        let mut a = CsrMatrix::node_pattern(mesh);
        let blocks: Vec<[[f64; 3]; 3]> = (0..mesh.element_count()).into_par_iter().map(&local).collect();
        for (t, block) in mesh.elements().iter().zip(&blocks) {
            for (r, &i) in t.iter().enumerate() {
                for (c, &j) in t.iter().enumerate() {
                    a.add(i, j, block[r][c]);
                }
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` is outside the sparsity pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `a·self + b·other` for matrices with the same pattern.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!(self.cols, other.cols, "matrices must share a sparsity pattern");
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            values,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.cols[k]];
            }
            *yi = s;
        });
    }

    /// Quadratic form `xᵀ A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// Restriction to the index set `keep` (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for &old in keep {
            let mut row: Vec<(usize, f64)> = self
                .row(old)
                .filter(|&(j, _)| index[j] != usize::MAX)
                .map(|(j, v)| (index[j], v))
                .collect();
            row.sort_unstable_by_key(|&(j, _)| j);
            for (j, v) in row {
                cols.push(j);
                values.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n: keep.len(),
            row_ptr,
            cols,
            values,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Stop when `‖r‖ ≤ rel_tol·‖b‖`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` by
/// Jacobi-preconditioned CG, starting from `x0`.
///
/// With `null` set to a vector spanning the kernel of a singular `A` (for
/// the Neumann stiffness this is the constant vector), the right-hand side
/// and every residual are projected orthogonally to it, which keeps the
/// iteration inside the range; the returned solution is then unique only up
/// to multiples of `null`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, null: Option<&[f64]>, opts: CgOptions) -> Result<CgOutcome> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let project = |v: &mut [f64]| {
        if let Some(z) = null {
            let c = dot(v, z) / dot(z, z);
            v.iter_mut().zip(z).for_each(|(vi, zi)| *vi -= c * zi);
        }
    };
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut rhs = b.to_vec();
    project(&mut rhs);
    let bnorm = norm2(&rhs);
    let mut x = x0.map_or_else(|| vec![0.0; n], |x| x.to_vec());
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r: Vec<f64> = rhs.iter().zip(a.mul_vec(&x)).map(|(bi, ai)| bi - ai).collect();
    project(&mut r);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..opts.max_iter {
        let res = norm2(&r) / bnorm;
        if res <= opts.rel_tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let step = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += step * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= step * api);
        project(&mut r);
        z.iter_mut()
            .zip(r.iter().zip(&inv_diag))
            .for_each(|(zi, (ri, di))| *zi = ri * di);
        project(&mut z);
        let rz_new = dot(&r, &z);
        let gamma = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + gamma * *pi);
    }
    let res = norm2(&r) / bnorm;
    if res <= opts.rel_tol {
        return Ok(CgOutcome {
            x,
            iterations: opts.max_iter,
            relative_residual: res,
        });
    }
    Err(Error::NotConverged {
        what: "conjugate gradient",
        iterations: opts.max_iter,
        residual: res,
    })
}
