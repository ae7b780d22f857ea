//! Plain-text mesh format:
//!
//! ```text
//! nodes <N> elements <M> dim <d>
//! <x> <y>            (N lines)
//! <i> <j> <k>        (M lines, 0-based)
//! boundary <K>
//! <i> <j>            (K lines)
//! ```

use std::collections::HashSet;
use std::io::{BufRead, Write};

use super::{BoundaryShape, Mesh};
use crate::error::{Error, Result};

pub(super) fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(
        w,
        "nodes {} elements {} dim {}",
        mesh.node_count(),
        mesh.element_count(),
        mesh.dim()
    )?;
    for p in mesh.nodes() {
        writeln!(w, "{} {}", p[0], p[1])?;
    }
    for t in mesh.elements() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "boundary {}", mesh.boundary_faces().len())?;
    for f in mesh.boundary_faces() {
        writeln!(w, "{} {}", f[0], f[1])?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("mesh line {line}: {msg}"))
}

fn numbers<T: std::str::FromStr>(line: &str, count: usize, lineno: usize) -> Result<Vec<T>> {
    let vals: Vec<T> = line
        .split_whitespace()
        .map(|s| s.parse::<T>().map_err(|_| parse_err(lineno, format!("bad number {s:?}"))))
        .collect::<Result<_>>()?;
    if vals.len() != count {
        return Err(parse_err(lineno, format!("expected {count} values, got {}", vals.len())));
    }
    Ok(vals)
}

pub(super) fn read_mesh<R: BufRead>(r: R) -> Result<Mesh> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let mut next = || -> Result<(usize, String)> {
        let (i, l) = lines.next().ok_or_else(|| Error::Parse("unexpected end of mesh file".into()))?;
        Ok((i, l?))
    };

    let (ln, header) = next()?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 6 || tok[0] != "nodes" || tok[2] != "elements" || tok[4] != "dim" {
        return Err(parse_err(ln, "expected `nodes <N> elements <M> dim <d>`"));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| parse_err(ln, format!("bad count {s:?}")));
    let (n, m, d) = (parse_usize(tok[1])?, parse_usize(tok[3])?, parse_usize(tok[5])?);
    if d != 2 {
        return Err(parse_err(ln, format!("only dim 2 is supported, got {d}")));
    }
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (i, l) = next()?;
        let v: Vec<f64> = numbers(&l, 2, i)?;
        nodes.push([v[0], v[1]]);
    }
    let mut elements = Vec::with_capacity(m);
    for _ in 0..m {
        let (i, l) = next()?;
        let v: Vec<usize> = numbers(&l, 3, i)?;
        elements.push([v[0], v[1], v[2]]);
    }
    let (ln, bline) = next()?;
    let btok: Vec<&str> = bline.split_whitespace().collect();
    if btok.len() != 2 || btok[0] != "boundary" {
        return Err(parse_err(ln, "expected `boundary <K>`"));
    }
    let k: usize = btok[1].parse().map_err(|_| parse_err(ln, "bad boundary count"))?;
    let mut faces = HashSet::with_capacity(k);
    for _ in 0..k {
        let (i, l) = next()?;
        let v: Vec<usize> = numbers(&l, 2, i)?;
        faces.insert((v[0].min(v[1]), v[0].max(v[1])));
    }

    let mesh = Mesh::new(nodes, elements, BoundaryShape::Polygonal)?;
    let derived: HashSet<(usize, usize)> = mesh
        .boundary_faces()
        .iter()
        .map(|f| (f[0].min(f[1]), f[0].max(f[1])))
        .collect();
    if derived != faces {
        return Err(Error::Parse(
            "boundary face list does not match the topological boundary".into(),
        ));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::super::build_disk;
    use super::*;

    #[test]
    fn round_trip() {
        let m = build_disk(1.0, 0.3).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = Mesh::read_from(&buf[..]).unwrap();
        assert_eq!(back.nodes(), m.nodes());
        assert_eq!(back.elements(), m.elements());
        assert_eq!(back.boundary_faces(), m.boundary_faces());
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("nodes {} elements {} dim 2\n", m.node_count(), m.element_count())));
    }

    #[test]
    fn wrong_boundary_rejected() {
        let text = "nodes 3 elements 1 dim 2\n0 0\n1 0\n0 1\n0 1 2\nboundary 2\n0 1\n1 2\n";
        assert!(Mesh::read_from(text.as_bytes()).is_err());
        let ok = "nodes 3 elements 1 dim 2\n0 0\n1 0\n0 1\n0 1 2\nboundary 3\n0 1\n1 2\n2 0\n";
        assert!(Mesh::read_from(ok.as_bytes()).is_ok());
    }

    #[test]
    fn malformed_header() {
        assert!(Mesh::read_from("vertices 3\n".as_bytes()).is_err());
        assert!(Mesh::read_from("nodes 3 elements 1 dim 3\n".as_bytes()).is_err());
    }
}
