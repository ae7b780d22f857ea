//! Conforming triangulations of planar domains.
//!
//! Elements are stored counter-clockwise; boundary faces are the edges with a
//! single incident element, oriented so the domain lies to their left.

mod build;
mod io;
mod locate;
mod quadrature;
mod refine;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use build::{build_annulus, build_disk, build_polygon, build_rectangle};
pub use locate::{locate_point, Locator, PointLocation};
pub use quadrature::Quadrature;

pub type Point = [f64; 2];

/// Analytic description of the boundary, used to re-project new boundary
/// nodes during refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryShape {
    Polygonal,
    Circle { center: Point, radius: f64 },
    Annulus { center: Point, inner: f64, outer: f64 },
}

impl BoundaryShape {
    pub fn project(&self, p: Point) -> Point {
        let onto = |c: Point, r: f64| {
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            let d = dx.hypot(dy);
            if d == 0.0 {
                p
            } else {
                [c[0] + r * dx / d, c[1] + r * dy / d]
            }
        };
        match *self {
            BoundaryShape::Polygonal => p,
            BoundaryShape::Circle { center, radius } => onto(center, radius),
            BoundaryShape::Annulus { center, inner, outer } => {
                let d = (p[0] - center[0]).hypot(p[1] - center[1]);
                if (d - inner).abs() < (d - outer).abs() {
                    onto(center, inner)
                } else {
                    onto(center, outer)
                }
            }
        }
    }

    /// Exact area of the analytic domain, when there is one.
    pub fn exact_area(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match *self {
            BoundaryShape::Polygonal => None,
            BoundaryShape::Circle { radius, .. } => Some(PI * radius * radius),
            BoundaryShape::Annulus { inner, outer, .. } => Some(PI * (outer * outer - inner * inner)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point>,
    elements: Vec<[usize; 3]>,
    boundary_faces: Vec<[usize; 2]>,
    boundary_nodes: Vec<usize>,
    on_boundary: Vec<bool>,
    element_volumes: Vec<f64>,
    shape: BoundaryShape,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Builds a mesh from nodes and triangles, orienting every triangle
    /// counter-clockwise and deriving the boundary from edge incidence.
    pub fn new(nodes: Vec<Point>, mut elements: Vec<[usize; 3]>, shape: BoundaryShape) -> Result<Mesh> {
        if elements.is_empty() {
            return invalid("mesh has no elements");
        }
        let mut element_volumes = Vec::with_capacity(elements.len());
        for (e, tri) in elements.iter_mut().enumerate() {
            if tri.iter().any(|&i| i >= nodes.len()) {
                return invalid(format!("element {e} references a missing node"));
            }
            let mut area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if area < 0.0 {
                tri.swap(1, 2);
                area = -area;
            }
            if !(area > 0.0) {
                return invalid(format!("element {e} is degenerate"));
            }
            element_volumes.push(area);
        }

        let mut incidence: HashMap<(usize, usize), u32> = HashMap::with_capacity(3 * elements.len() / 2);
        for tri in &elements {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *incidence.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if let Some((edge, _)) = incidence.iter().find(|(_, &c)| c > 2) {
            return invalid(format!("edge {edge:?} is shared by more than two elements"));
        }
        let mut boundary_faces = Vec::new();
        for tri in &elements {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if incidence[&(a.min(b), a.max(b))] == 1 {
                    boundary_faces.push([a, b]);
                }
            }
        }
        let mut on_boundary = vec![false; nodes.len()];
        for f in &boundary_faces {
            on_boundary[f[0]] = true;
            on_boundary[f[1]] = true;
        }
        let boundary_nodes = (0..nodes.len()).filter(|&i| on_boundary[i]).collect();
        Ok(Mesh {
            nodes,
            elements,
            boundary_faces,
            boundary_nodes,
            on_boundary,
            element_volumes,
            shape,
        })
    }

    pub fn dim(&self) -> u32 {
        2
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_faces(&self) -> &[[usize; 2]] {
        &self.boundary_faces
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn element_volumes(&self) -> &[f64] {
        &self.element_volumes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn shape(&self) -> &BoundaryShape {
        &self.shape
    }

    pub fn total_volume(&self) -> f64 {
        self.element_volumes.iter().sum()
    }

    pub fn vertices(&self, e: usize) -> [Point; 3] {
        let t = self.elements[e];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.vertices(e);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        let [a, b, c] = self.vertices(e);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn h_max(&self) -> f64 {
        (0..self.element_count()).map(|e| self.element_diameter(e)).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.element_count())
            .map(|e| self.element_diameter(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest diameter among elements touching node `i`.
    pub fn local_h(&self, i: usize) -> f64 {
        (0..self.element_count())
            .filter(|&e| self.elements[e].contains(&i))
            .map(|e| self.element_diameter(e))
            .fold(0.0, f64::max)
    }

    /// Diameter of the node cloud's bounding box.
    pub fn extent(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Gradients of the three hat functions on element `e` (constant).
    pub fn hat_gradients(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.vertices(e);
        let two_area = 2.0 * self.element_volumes[e];
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    pub fn barycentric(&self, e: usize, x: Point) -> [f64; 3] {
        let [a, b, c] = self.vertices(e);
        let area = signed_area(a, b, c);
        [
            signed_area(x, b, c) / area,
            signed_area(a, x, c) / area,
            signed_area(a, b, x) / area,
        ]
    }

    pub fn point_from_barycentric(&self, e: usize, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.vertices(e);
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Boundary node closest to `x`; ties go to the lowest index.
    pub fn nearest_boundary_node(&self, x: Point) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        for &i in &self.boundary_nodes {
            let d = dist(self.nodes[i], x);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Closest point on the boundary polygon to `x`, with the outward unit
    /// normal of the face it lies on.
    pub fn nearest_boundary_point(&self, x: Point) -> (Point, [f64; 2]) {
        let mut best = (f64::INFINITY, x, [0.0, 0.0]);
        for f in &self.boundary_faces {
            let (a, b) = (self.nodes[f[0]], self.nodes[f[1]]);
            let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
            let len2 = tx * tx + ty * ty;
            let s = (((x[0] - a[0]) * tx + (x[1] - a[1]) * ty) / len2).clamp(0.0, 1.0);
            let q = [a[0] + s * tx, a[1] + s * ty];
            let d = dist(q, x);
            if d < best.0 {
                let len = len2.sqrt();
                // domain on the left of a->b, so the outward normal points right
                best = (d, q, [ty / len, -tx / len]);
            }
        }
        (best.1, best.2)
    }

    /// Distance from `x` to the boundary polygon.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        dist(self.nearest_boundary_point(x).0, x)
    }

    /// Uniform red refinement: every triangle splits into four. New boundary
    /// nodes are projected onto the analytic boundary.
    pub fn refine(&self) -> Mesh {
        refine::red(self)
    }

    /// Conforming longest-edge bisection of the marked elements (plus the
    /// closure needed for conformity).
    pub fn refine_marked(&self, marked: &[bool]) -> Result<Mesh> {
        if marked.len() != self.element_count() {
            return invalid("marker length must equal the element count");
        }
        Ok(refine::bisect(self, marked))
    }

    /// Repeated local bisection until every element within `radius` of
    /// `center` has diameter at most `max(h_min, grading * distance)`.
    pub fn refine_near(&self, center: Point, radius: f64, h_min: f64, grading: f64) -> Result<Mesh> {
        if !(h_min > 0.0) || !(grading > 0.0) || !(radius > 0.0) {
            return invalid("refine_near needs positive radius, h_min and grading");
        }
        let mut mesh = self.clone();
        for _ in 0..200 {
            let marked: Vec<bool> = (0..mesh.element_count())
                .map(|e| {
                    let [a, b, c] = mesh.vertices(e);
                    let d = dist(a, center).min(dist(b, center)).min(dist(c, center));
                    d <= radius && mesh.element_diameter(e) > h_min.max(grading * d)
                })
                .collect();
            if !marked.iter().any(|&m| m) {
                return Ok(mesh);
            }
            mesh = refine::bisect(&mesh, &marked);
        }
        Err(Error::NotConverged {
            what: "local refinement",
            iterations: 200,
            residual: h_min,
        })
    }

    pub fn write_to<W: std::io::Write>(&self, w: W) -> Result<()> {
        io::write_mesh(self, w)
    }

    pub fn read_from<R: std::io::BufRead>(r: R) -> Result<Mesh> {
        io::read_mesh(r)
    }
}
