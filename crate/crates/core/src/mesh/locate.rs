use super::{Mesh, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLocation {
    pub element: usize,
    pub barycentric: [f64; 3],
}

/// Bucket grid over element bounding boxes for repeated point queries.
pub struct Locator<'m> {
    mesh: &'m Mesh,
    origin: Point,
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'m> Locator<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.nodes() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let side = (mesh.element_count() as f64).sqrt().ceil().max(1.0) as usize;
        let cell = span / side as f64 * (1.0 + 1e-12);
        let dims = [
            (((hi[0] - lo[0]) / cell).floor() as usize + 1).min(side + 1),
            (((hi[1] - lo[1]) / cell).floor() as usize + 1).min(side + 1),
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        for e in 0..mesh.element_count() {
            let v = mesh.vertices(e);
            let (mut blo, mut bhi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in &v {
                for d in 0..2 {
                    blo[d] = blo[d].min(p[d]);
                    bhi[d] = bhi[d].max(p[d]);
                }
            }
            let c0 = Self::cell_of(lo, cell, dims, blo);
            let c1 = Self::cell_of(lo, cell, dims, bhi);
            for j in c0[1]..=c1[1] {
                for i in c0[0]..=c1[0] {
                    buckets[j * dims[0] + i].push(e);
                }
            }
        }
        Locator {
            mesh,
            origin: lo,
            cell,
            dims,
            buckets,
        }
    }

    fn cell_of(origin: Point, cell: f64, dims: [usize; 2], p: Point) -> [usize; 2] {
        let f = |d: usize| {
            let x = ((p[d] - origin[d]) / cell).floor();
            (x.max(0.0) as usize).min(dims[d] - 1)
        };
        [f(0), f(1)]
    }

    /// Finds the element containing `x`. Points outside the mesh by at most
    /// the squared local element diameter are snapped onto the nearest
    /// element; farther points are an error.
    pub fn locate(&self, x: Point) -> Result<PointLocation> {
        let c = Self::cell_of(self.origin, self.cell, self.dims, x);
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        // search the home cell and its ring of neighbours
        for j in c[1].saturating_sub(1)..=(c[1] + 1).min(self.dims[1] - 1) {
            for i in c[0].saturating_sub(1)..=(c[0] + 1).min(self.dims[0] - 1) {
                for &e in &self.buckets[j * self.dims[0] + i] {
                    let bary = self.mesh.barycentric(e, x);
                    let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
                    if worst >= 0.0 {
                        return Ok(PointLocation { element: e, barycentric: bary });
                    }
                    if best.map_or(true, |(w, _, _)| worst > w) {
                        best = Some((worst, e, bary));
                    }
                }
            }
        }
        self.snap(x, best)
    }

    fn snap(&self, x: Point, best: Option<(f64, usize, [f64; 3])>) -> Result<PointLocation> {
        let (_, e, bary) = best.ok_or(Error::PointOutside(x[0], x[1]))?;
        let h = self.mesh.element_diameter(e);
        // signed distance to the violated edge is λ times the height
        let grads = self.mesh.hat_gradients(e);
        let outside = (0..3)
            .filter(|&k| bary[k] < 0.0)
            .map(|k| -bary[k] / grads[k][0].hypot(grads[k][1]))
            .fold(0.0, f64::max);
        if outside > h * h {
            return Err(Error::PointOutside(x[0], x[1]));
        }
        let mut clamped = bary.map(|b| b.max(0.0));
        let s: f64 = clamped.iter().sum();
        clamped.iter_mut().for_each(|b| *b /= s);
        Ok(PointLocation {
            element: e,
            barycentric: clamped,
        })
    }
}

/// One-off point location (builds a temporary [`Locator`]).
pub fn locate_point(mesh: &Mesh, x: Point) -> Result<PointLocation> {
    Locator::new(mesh).locate(x)
}
