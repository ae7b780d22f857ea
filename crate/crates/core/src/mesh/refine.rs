use std::collections::HashMap;

use super::{BoundaryShape, Mesh, Point};

type EdgeKey = (usize, usize);

fn key(a: usize, b: usize) -> EdgeKey {
    (a.min(b), a.max(b))
}

struct Midpoints<'a> {
    mesh: &'a Mesh,
    nodes: Vec<Point>,
    index: HashMap<EdgeKey, usize>,
    boundary: HashMap<EdgeKey, ()>,
}

impl<'a> Midpoints<'a> {
    fn new(mesh: &'a Mesh) -> Self {
        let boundary = mesh.boundary_faces().iter().map(|f| (key(f[0], f[1]), ())).collect();
        Midpoints {
            mesh,
            nodes: mesh.nodes().to_vec(),
            index: HashMap::new(),
            boundary,
        }
    }

    fn get(&mut self, a: usize, b: usize) -> usize {
        let k = key(a, b);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        let (pa, pb) = (self.mesh.node(a), self.mesh.node(b));
        let mut m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if self.boundary.contains_key(&k) {
            m = self.mesh.shape().project(m);
        }
        self.nodes.push(m);
        let i = self.nodes.len() - 1;
        self.index.insert(k, i);
        i
    }

    fn finish(self, elements: Vec<[usize; 3]>, shape: BoundaryShape) -> Mesh {
        Mesh::new(self.nodes, elements, shape).expect("refinement preserves validity")
    }
}

pub(super) fn red(mesh: &Mesh) -> Mesh {
    let mut mids = Midpoints::new(mesh);
    let mut elements = Vec::with_capacity(4 * mesh.element_count());
    for &[a, b, c] in mesh.elements() {
        let ab = mids.get(a, b);
        let bc = mids.get(b, c);
        let ca = mids.get(c, a);
        elements.push([a, ab, ca]);
        elements.push([ab, b, bc]);
        elements.push([ca, bc, c]);
        elements.push([ab, bc, ca]);
    }
    mids.finish(elements, mesh.shape().clone())
}

/// Index (0..3) of the longest edge `(t[k], t[k+1])`; ties go to the lowest
/// global edge key so neighbours agree.
fn longest_edge(mesh: &Mesh, t: &[usize; 3]) -> usize {
    let mut best = (f64::NEG_INFINITY, (usize::MAX, usize::MAX), 0);
    for k in 0..3 {
        let (a, b) = (mesh.node(t[k]), mesh.node(t[(k + 1) % 3]));
        let len = (a[0] - b[0]).hypot(a[1] - b[1]);
        let kk = key(t[k], t[(k + 1) % 3]);
        if len > best.0 || (len == best.0 && kk < best.1) {
            best = (len, kk, k);
        }
    }
    best.2
}

pub(super) fn bisect(mesh: &Mesh, marked: &[bool]) -> Mesh {
    let elems = mesh.elements();
    let longest: Vec<usize> = elems.iter().map(|t| longest_edge(mesh, t)).collect();
    let mut marked_edges: HashMap<EdgeKey, ()> = HashMap::new();
    for (e, t) in elems.iter().enumerate() {
        if marked[e] {
            let k = longest[e];
            marked_edges.insert(key(t[k], t[(k + 1) % 3]), ());
        }
    }
    // closure: any element with a marked edge must also split its longest edge
    loop {
        let mut changed = false;
        for (e, t) in elems.iter().enumerate() {
            let has_mark = (0..3).any(|k| marked_edges.contains_key(&key(t[k], t[(k + 1) % 3])));
            if has_mark {
                let k = longest[e];
                let lk = key(t[k], t[(k + 1) % 3]);
                if !marked_edges.contains_key(&lk) {
                    marked_edges.insert(lk, ());
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut mids = Midpoints::new(mesh);
    let mut out = Vec::with_capacity(elems.len() + 2 * marked_edges.len());
    for (e, t) in elems.iter().enumerate() {
        let k = longest[e];
        let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
        if !marked_edges.contains_key(&key(a, b)) {
            out.push(*t);
            continue;
        }
        let m_ab = mids.get(a, b);
        // right half (m_ab, b, c), optionally split along b-c
        if marked_edges.contains_key(&key(b, c)) {
            let m_bc = mids.get(b, c);
            out.push([m_ab, b, m_bc]);
            out.push([m_ab, m_bc, c]);
        } else {
            out.push([m_ab, b, c]);
        }
        // left half (a, m_ab, c), optionally split along c-a
        if marked_edges.contains_key(&key(c, a)) {
            let m_ca = mids.get(c, a);
            out.push([a, m_ab, m_ca]);
            out.push([m_ca, m_ab, c]);
        } else {
            out.push([a, m_ab, c]);
        }
    }
    mids.finish(out, mesh.shape().clone())
}

#[cfg(test)]
mod tests {
    use super::super::{build_disk, build_rectangle};
    use std::f64::consts::PI;

    fn check_valid(m: &super::Mesh) {
        for &v in m.element_volumes() {
            assert!(v > 0.0);
        }
        // every boundary node has exactly two boundary faces on a closed curve
        let mut deg = vec![0; m.node_count()];
        for f in m.boundary_faces() {
            deg[f[0]] += 1;
            deg[f[1]] += 1;
        }
        for &i in m.boundary_nodes() {
            assert_eq!(deg[i], 2);
        }
    }

    #[test]
    fn red_refinement_counts() {
        let m = build_rectangle(1.0, 1.0, 0.5).unwrap();
        let r = m.refine();
        assert_eq!(r.element_count(), 4 * m.element_count());
        let rr = r.refine();
        assert_eq!(rr.element_count(), 16 * m.element_count());
        assert_eq!(r.boundary_faces().len(), 2 * m.boundary_faces().len());
        check_valid(&rr);
        assert!((rr.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn disk_area_error_decreases() {
        let m = build_disk(1.0, 0.3).unwrap();
        let r = m.refine();
        let rr = r.refine();
        let e0 = (PI - m.total_volume()).abs();
        let e1 = (PI - r.total_volume()).abs();
        let e2 = (PI - rr.total_volume()).abs();
        assert!(e1 < e0 && e2 < e1, "{e0} {e1} {e2}");
        assert!(e1 / e2 > 3.0);
        check_valid(&rr);
    }

    #[test]
    fn local_bisection_is_conforming() {
        let m = build_disk(1.0, 0.2).unwrap();
        let fine = m.refine_near([1.0, 0.0], 0.3, 0.01, 0.5).unwrap();
        check_valid(&fine);
        assert!(fine.element_count() > m.element_count());
        assert!((fine.total_volume() - PI).abs() < (m.total_volume() - PI).abs());
        // smallest elements sit near the target point
        let e = (0..fine.element_count())
            .min_by(|&a, &b| fine.element_diameter(a).total_cmp(&fine.element_diameter(b)))
            .unwrap();
        let c = fine.centroid(e);
        assert!((c[0] - 1.0).hypot(c[1]) < 0.05);
        assert!(fine.element_diameter(e) <= 0.01);
    }
}
