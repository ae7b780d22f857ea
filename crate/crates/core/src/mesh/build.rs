use std::f64::consts::PI;

use super::{signed_area, BoundaryShape, Mesh, Point};
use crate::error::{invalid, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return invalid(format!("{name} must be positive and finite, got {v}"));
    }
    Ok(())
}

/// Stitches two concentric rings together by walking both in angle order.
/// Rings are given as node indices with their angles in `[0, 2π)`.
fn stitch_rings(inner: &[(usize, f64)], outer: &[(usize, f64)], elements: &mut Vec<[usize; 3]>) {
    let (m, big) = (inner.len(), outer.len());
    let angle = |ring: &[(usize, f64)], k: usize| {
        let len = ring.len();
        ring[k % len].1 + 2.0 * PI * (k / len) as f64
    };
    if m == 1 {
        for j in 0..big {
            elements.push([inner[0].0, outer[j].0, outer[(j + 1) % big].0]);
        }
        return;
    }
    let (mut i, mut j) = (0, 0);
    while i < m || j < big {
        let advance_outer = j < big && (i == m || angle(outer, j + 1) <= angle(inner, i + 1));
        if advance_outer {
            elements.push([inner[i % m].0, outer[j % big].0, outer[(j + 1) % big].0]);
            j += 1;
        } else {
            elements.push([inner[i % m].0, outer[j % big].0, inner[(i + 1) % m].0]);
            i += 1;
        }
    }
}

fn ring(nodes: &mut Vec<Point>, center: Point, radius: f64, count: usize, phase: f64) -> Vec<(usize, f64)> {
    (0..count)
        .map(|j| {
            let theta = phase + 2.0 * PI * j as f64 / count as f64;
            nodes.push([center[0] + radius * theta.cos(), center[1] + radius * theta.sin()]);
            (nodes.len() - 1, theta)
        })
        .collect()
}

/// Quasi-uniform disk mesh of concentric rings (6k nodes on ring k).
pub fn build_disk(radius: f64, target_h: f64) -> Result<Mesh> {
    check_positive("radius", radius)?;
    check_positive("target_h", target_h)?;
    if target_h >= radius {
        return invalid(format!("target_h {target_h} must be below the radius {radius}"));
    }
    let center = [0.0, 0.0];
    let rings = (radius / target_h).ceil() as usize;
    let mut nodes = vec![center];
    let mut elements = Vec::new();
    let mut prev = vec![(0usize, 0.0)];
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let cur = ring(&mut nodes, center, r, 6 * k, 0.0);
        stitch_rings(&prev, &cur, &mut elements);
        prev = cur;
    }
    Mesh::new(nodes, elements, BoundaryShape::Circle { center, radius })
}

/// Annulus `inner <= |x| <= outer` meshed by rings of roughly `target_h`
/// spacing.
pub fn build_annulus(inner: f64, outer: f64, target_h: f64) -> Result<Mesh> {
    check_positive("inner radius", inner)?;
    check_positive("target_h", target_h)?;
    if !(outer > inner) {
        return invalid("outer radius must exceed the inner radius");
    }
    if target_h >= outer - inner {
        return invalid("target_h must be below the annulus width");
    }
    let center = [0.0, 0.0];
    let layers = ((outer - inner) / target_h).ceil() as usize;
    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    let mut prev: Vec<(usize, f64)> = Vec::new();
    for k in 0..=layers {
        let r = inner + (outer - inner) * k as f64 / layers as f64;
        let count = ((2.0 * PI * r / target_h).ceil() as usize).max(6);
        // stagger alternate rings to avoid long thin wedges
        let phase = if k % 2 == 1 { PI / count as f64 } else { 0.0 };
        let cur = ring(&mut nodes, center, r, count, phase);
        if k > 0 {
            stitch_rings(&prev, &cur, &mut elements);
        }
        prev = cur;
    }
    Mesh::new(nodes, elements, BoundaryShape::Annulus { center, inner, outer })
}

/// Structured `[0, width] × [0, height]` grid, each cell cut along the same
/// diagonal.
pub fn build_rectangle(width: f64, height: f64, target_h: f64) -> Result<Mesh> {
    check_positive("width", width)?;
    check_positive("height", height)?;
    check_positive("target_h", target_h)?;
    if target_h >= width.max(height) {
        return invalid("target_h must be below the rectangle size");
    }
    let nx = (width / target_h).ceil() as usize;
    let ny = (height / target_h).ceil() as usize;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            elements.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(nodes, elements, BoundaryShape::Polygonal)
}

/// Simple polygon (no self-intersections, either orientation): boundary
/// edges are subdivided to `target_h`, the polygon is ear-clipped, and the
/// triangulation is bisected until every element is below `target_h`.
pub fn build_polygon(vertices: &[Point], target_h: f64) -> Result<Mesh> {
    check_positive("target_h", target_h)?;
    if vertices.len() < 3 {
        return invalid("a polygon needs at least three vertices");
    }
    let mut poly: Vec<Point> = vertices.to_vec();
    let area: f64 = (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            0.5 * (a[0] * b[1] - b[0] * a[1])
        })
        .sum();
    if area.abs() < 1e-300 {
        return invalid("polygon has zero area");
    }
    if area < 0.0 {
        poly.reverse();
    }
    let mut nodes = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let pieces = (len / target_h).ceil().max(1.0) as usize;
        for s in 0..pieces {
            let t = s as f64 / pieces as f64;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    let elements = ear_clip(&nodes)?;
    let mut mesh = Mesh::new(nodes, elements, BoundaryShape::Polygonal)?;
    for _ in 0..64 {
        let marked: Vec<bool> = (0..mesh.element_count())
            .map(|e| mesh.element_diameter(e) > target_h)
            .collect();
        if !marked.iter().any(|&m| m) {
            break;
        }
        mesh = mesh.refine_marked(&marked)?;
    }
    Ok(mesh)
}

fn ear_clip(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut triangles = Vec::with_capacity(points.len().saturating_sub(2));
    let inside = |p: Point, a: Point, b: Point, c: Point| {
        signed_area(a, b, p) >= 0.0 && signed_area(b, c, p) >= 0.0 && signed_area(c, a, p) >= 0.0
    };
    while remaining.len() > 3 {
        let len = remaining.len();
        let mut clipped = false;
        // prefer the ear with the best shape among the convex ones
        let mut best: Option<(f64, usize)> = None;
        for k in 0..len {
            let (ia, ib, ic) = (remaining[(k + len - 1) % len], remaining[k], remaining[(k + 1) % len]);
            let (a, b, c) = (points[ia], points[ib], points[ic]);
            let area = signed_area(a, b, c);
            if area <= 0.0 {
                continue;
            }
            let blocked = remaining
                .iter()
                .any(|&j| j != ia && j != ib && j != ic && inside(points[j], a, b, c));
            if blocked {
                continue;
            }
            let perim2 = [(a, b), (b, c), (c, a)]
                .iter()
                .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                .sum::<f64>();
            let quality = area / perim2;
            if best.map_or(true, |(q, _)| quality > q) {
                best = Some((quality, k));
            }
        }
        if let Some((_, k)) = best {
            let (ia, ib, ic) = (remaining[(k + len - 1) % len], remaining[k], remaining[(k + 1) % len]);
            triangles.push([ia, ib, ic]);
            remaining.remove(k);
            clipped = true;
        }
        if !clipped {
            return invalid("polygon could not be triangulated (self-intersecting?)");
        }
    }
    triangles.push([remaining[0], remaining[1], remaining[2]]);
    Ok(triangles)
}
