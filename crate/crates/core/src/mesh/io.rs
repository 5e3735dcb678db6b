//! Plain-text mesh files.
//!
//! ```text
//! dim 2
//! vertices N
//! x y            (N lines)
//! cells M
//! i j k          (M lines, zero-based vertex indices)
//! boundary_faces B
//! i j tag        (B lines)
//! ```
//!
//! Coordinates are written with the shortest decimal representation that
//! round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::Mesh;
use crate::{Error, Point, Result};

pub fn to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim 2");
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    let _ = writeln!(s, "cells {}", mesh.num_cells());
    for c in mesh.cells() {
        let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "boundary_faces {}", mesh.boundary_tags().len());
    for (&(a, b), tag) in mesh.boundary_tags() {
        let _ = writeln!(s, "{a} {b} {tag}");
    }
    s
}

pub fn write(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_string(mesh))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<Mesh> {
    parse(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok(toks);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::MeshFormat {
            line: self.line,
            message: message.into(),
        }
    }

    fn header(&mut self, key: &str) -> Result<usize> {
        let t = self.next_tokens()?;
        if t.len() != 2 || t[0] != key {
            return Err(self.err(format!("expected '{key} <count>'")));
        }
        t[1].parse()
            .map_err(|_| self.err(format!("invalid count '{}'", t[1])))
    }

    fn number<T: std::str::FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(format!("invalid number '{tok}'")))
    }
}

pub fn parse(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.header("dim")? != 2 {
        return Err(lines.err("only dim 2 is supported"));
    }
    let nv = lines.header("vertices")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let t = lines.next_tokens()?;
        if t.len() != 2 {
            return Err(lines.err("expected 'x y'"));
        }
        vertices.push([lines.number(t[0])?, lines.number(t[1])?]);
    }
    let nc = lines.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let t = lines.next_tokens()?;
        if t.len() != 3 {
            return Err(lines.err("expected 'i j k'"));
        }
        cells.push([
            lines.number(t[0])?,
            lines.number(t[1])?,
            lines.number(t[2])?,
        ]);
    }
    let nb = lines.header("boundary_faces")?;
    let mut tags = Vec::with_capacity(nb);
    for _ in 0..nb {
        let t = lines.next_tokens()?;
        if t.len() != 3 {
            return Err(lines.err("expected 'i j tag'"));
        }
        let a: usize = lines.number(t[0])?;
        let b: usize = lines.number(t[1])?;
        tags.push(((a, b), t[2].to_owned()));
    }
    Mesh::new(vertices, cells, tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generators;

    #[test]
    fn roundtrip_is_exact() {
        let m = generators::lshape_fan().unwrap().refine(&[0, 3]);
        let text = to_string(&m);
        let back = parse(&text).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.cells(), m.cells());
        assert_eq!(back.boundary_tags(), m.boundary_tags());
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn malformed_input_reports_line() {
        let err = parse("dim 2\nvertices 1\n0.0 zero\n").unwrap_err();
        assert!(matches!(err, Error::MeshFormat { line: 3, .. }));
        let err = parse("dim 3\n").unwrap_err();
        assert!(matches!(err, Error::MeshFormat { line: 1, .. }));
    }

    #[test]
    fn parses_single_triangle() {
        let text = "dim 2\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\nboundary_faces 3\n0 1 D\n1 2 N\n0 2 D\n";
        let m = parse(text).unwrap();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.boundary_tag(2, 1), Some("N"));
    }
}
