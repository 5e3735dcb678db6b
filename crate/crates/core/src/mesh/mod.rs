//! Conforming triangulations in 2D.
//!
//! A [`Mesh`] owns vertex coordinates, counter-clockwise cells, one string tag
//! per boundary face and the refinement edge of each cell used by
//! newest-vertex bisection. Meshes are immutable: [`Mesh::refine`] returns a new
//! mesh together with the child→parent map.

mod faces;
pub mod generators;
pub mod io;
mod refine;

use std::collections::{BTreeMap, HashMap};

pub use faces::{Face, FaceSet};

use crate::{Error, Point, Result};

/// Sorted vertex pair identifying an edge.
pub type EdgeKey = (usize, usize);

pub(crate) fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Local vertices of the edge opposite local vertex `k`.
pub(crate) fn local_edge(k: usize) -> (usize, usize) {
    ((k + 1) % 3, (k + 2) % 3)
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary_tags: BTreeMap<EdgeKey, String>,
    /// Local index of the vertex opposite the refinement edge.
    refinement_edge: Vec<u8>,
    /// Parent cell in the mesh this one was refined from (identity for fresh meshes).
    parents: Vec<usize>,
}

/// Affine map of a cell from the reference triangle (0,0), (1,0), (0,1).
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: Point,
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jacobian: [[f64; 2]; 2],
    pub inverse: [[f64; 2]; 2],
    pub det: f64,
    /// Cell area 𝒱(K).
    pub area: f64,
    /// Boundary measure 𝒜(∂K).
    pub perimeter: f64,
    /// Longest edge h_K.
    pub diameter: f64,
    pub centroid: Point,
}

impl CellGeometry {
    pub fn from_vertices(v: [Point; 3]) -> Self {
        let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1]];
        let e2 = [v[2][0] - v[0][0], v[2][1] - v[0][1]];
        let jacobian = [[e1[0], e2[0]], [e1[1], e2[1]]];
        let det = e1[0] * e2[1] - e2[0] * e1[1];
        let inverse = [[e2[1] / det, -e2[0] / det], [-e1[1] / det, e1[0] / det]];
        let lengths = [dist(v[1], v[2]), dist(v[2], v[0]), dist(v[0], v[1])];
        CellGeometry {
            origin: v[0],
            jacobian,
            inverse,
            det,
            area: 0.5 * det.abs(),
            perimeter: lengths.iter().sum(),
            diameter: lengths.iter().cloned().fold(0.0, f64::max),
            centroid: [
                (v[0][0] + v[1][0] + v[2][0]) / 3.0,
                (v[0][1] + v[1][1] + v[2][1]) / 3.0,
            ],
        }
    }

    pub fn to_physical(&self, xi: Point) -> Point {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let m = &self.inverse;
        [
            m[0][0] * d[0] + m[0][1] * d[1],
            m[1][0] * d[0] + m[1][1] * d[1],
        ]
    }

    /// Maps a reference gradient to physical coordinates (`J^{-T} g`).
    #[inline]
    pub fn physical_gradient(&self, g: Point) -> Point {
        let m = &self.inverse;
        [
            m[0][0] * g[0] + m[1][0] * g[1],
            m[0][1] * g[0] + m[1][1] * g[1],
        ]
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_area(v: [Point; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

impl Mesh {
    /// Validates and builds a mesh. Clockwise cells are reoriented.
    ///
    /// `boundary_tags` must name every boundary face (and only boundary faces).
    pub fn new<I, S>(vertices: Vec<Point>, cells: Vec<[usize; 3]>, boundary_tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), S)>,
        S: Into<String>,
    {
        let tags: BTreeMap<EdgeKey, String> = boundary_tags
            .into_iter()
            .map(|((a, b), t)| (edge_key(a, b), t.into()))
            .collect();
        let refinement_edge = cells
            .iter()
            .map(|c| longest_edge(&vertices, c))
            .collect::<Vec<_>>();
        let parents = (0..cells.len()).collect();
        Self::assemble(vertices, cells, tags, refinement_edge, parents)
    }

    fn assemble(
        vertices: Vec<Point>,
        mut cells: Vec<[usize; 3]>,
        boundary_tags: BTreeMap<EdgeKey, String>,
        mut refinement_edge: Vec<u8>,
        parents: Vec<usize>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Mesh("mesh has no cells".into()));
        }
        for (ci, c) in cells.iter_mut().enumerate() {
            if let Some(&bad) = c.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!(
                    "cell {ci} references missing vertex {bad}"
                )));
            }
            if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
                return Err(Error::DegenerateCell {
                    cell: ci,
                    area: 0.0,
                });
            }
            let v = [vertices[c[0]], vertices[c[1]], vertices[c[2]]];
            let area = signed_area(v);
            let scale = dist(v[0], v[1]).max(dist(v[1], v[2])).max(dist(v[2], v[0]));
            if !(area.abs() > 1e-14 * scale * scale) {
                return Err(Error::DegenerateCell { cell: ci, area });
            }
            if area < 0.0 {
                // Swapping local vertices 1 and 2 keeps the edge opposite 0 and
                // exchanges the other two.
                c.swap(1, 2);
                let r = &mut refinement_edge[ci];
                *r = match *r {
                    1 => 2,
                    2 => 1,
                    k => k,
                };
            }
        }

        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len());
        for (ci, c) in cells.iter().enumerate() {
            let mut s = *c;
            s.sort_unstable();
            if let Some(&other) = seen.get(&s) {
                return Err(Error::DuplicateCell { cell: ci, other });
            }
            seen.insert(s, ci);
        }

        let mut edge_count: HashMap<EdgeKey, usize> = HashMap::with_capacity(2 * cells.len());
        for c in &cells {
            for k in 0..3 {
                let (a, b) = local_edge(k);
                *edge_count.entry(edge_key(c[a], c[b])).or_default() += 1;
            }
        }
        let mut boundary: Vec<EdgeKey> = Vec::new();
        for (&e, &n) in &edge_count {
            match n {
                1 => boundary.push(e),
                2 => {}
                _ => return Err(Error::Mesh(format!("edge {e:?} shared by {n} cells"))),
            }
        }
        boundary.sort_unstable();
        for &(a, b) in &boundary {
            if !boundary_tags.contains_key(&(a, b)) {
                return Err(Error::UntaggedBoundaryFace(a, b));
            }
        }
        for e in boundary_tags.keys() {
            if edge_count.get(e) != Some(&1) {
                return Err(Error::Mesh(format!(
                    "tag given for non-boundary edge {e:?}"
                )));
            }
        }

        Ok(Mesh {
            vertices,
            cells,
            boundary_tags,
            refinement_edge,
            parents,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn boundary_tags(&self) -> &BTreeMap<EdgeKey, String> {
        &self.boundary_tags
    }

    pub fn boundary_tag(&self, a: usize, b: usize) -> Option<&str> {
        self.boundary_tags.get(&edge_key(a, b)).map(String::as_str)
    }

    /// Local vertex opposite the refinement edge of `cell`.
    pub fn refinement_edge(&self, cell: usize) -> usize {
        self.refinement_edge[cell] as usize
    }

    /// Parent of each cell in the mesh this one was refined from.
    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// Inverse of [`Mesh::parents`]: children per parent cell.
    pub fn children_of_parents(&self, num_parents: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); num_parents];
        for (c, &p) in self.parents.iter().enumerate() {
            out[p].push(c);
        }
        out
    }

    pub fn cell_vertices(&self, cell: usize) -> [Point; 3] {
        let c = self.cells[cell];
        [
            self.vertices[c[0]],
            self.vertices[c[1]],
            self.vertices[c[2]],
        ]
    }

    /// Area 𝒱(K), perimeter 𝒜(∂K), diameter h_K and the affine map of a cell.
    pub fn element_geometry(&self, cell: usize) -> CellGeometry {
        CellGeometry::from_vertices(self.cell_vertices(cell))
    }

    pub fn geometries(&self) -> Vec<CellGeometry> {
        (0..self.cells.len())
            .map(|c| self.element_geometry(c))
            .collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| self.element_geometry(c).area)
            .sum()
    }

    pub fn face_topology(&self) -> FaceSet {
        FaceSet::new(self)
    }

    /// Newest-vertex bisection of the marked cells plus the conforming closure.
    pub fn refine(&self, marked: &[usize]) -> Mesh {
        refine::refine(self, marked)
    }

    /// Refines every cell into four children (h halves).
    pub fn refine_uniform(&self) -> Mesh {
        let all: Vec<usize> = (0..self.num_cells()).collect();
        self.refine(&all)
    }

    /// Cell containing `x` (first match, brute force), with tolerance on the barycentrics.
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.cells.len()).find(|&c| {
            let xi = self.element_geometry(c).to_reference(x);
            xi[0] >= -1e-12 && xi[1] >= -1e-12 && xi[0] + xi[1] <= 1.0 + 1e-12
        })
    }
}

/// Longest edge of a cell, ties broken by the lexicographically smallest sorted vertex pair.
fn longest_edge(vertices: &[Point], c: &[usize; 3]) -> u8 {
    let mut best = 0usize;
    let mut best_len = f64::NEG_INFINITY;
    let mut best_key = (usize::MAX, usize::MAX);
    for k in 0..3 {
        let (a, b) = local_edge(k);
        if c[a] >= vertices.len() || c[b] >= vertices.len() {
            return 0;
        }
        let len = dist(vertices[c[a]], vertices[c[b]]);
        let key = edge_key(c[a], c[b]);
        // Relative tolerance so that congruent edges tie regardless of rounding.
        let longer = len > best_len * (1.0 + 1e-12);
        let tie = !longer && len >= best_len * (1.0 - 1e-12);
        if longer || (tie && key < best_key) {
            best = k;
            best_len = len;
            best_key = key;
        }
    }
    best as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh {
        generators::rectangle(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap()
    }

    #[test]
    fn minimal_square_counts() {
        let m = unit_square();
        let f = m.face_topology();
        assert_eq!(m.num_cells(), 2);
        assert_eq!(f.len(), 5);
        assert_eq!(f.num_interior(), 1);
    }

    #[test]
    fn two_by_two_grid_counts() {
        let m = generators::rectangle(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let f = m.face_topology();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_cells(), 8);
        assert_eq!(f.len(), 16);
        assert_eq!(f.num_interior(), 8);
        // Euler: V - E + F = 1 for a disk.
        assert_eq!(9 + 8 - 16, 1);
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 1]],
            Vec::<((usize, usize), &str)>::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateCell { cell: 0, .. }));
    }

    #[test]
    fn collinear_cell_is_degenerate() {
        let tags = [((0, 1), "b"), ((1, 2), "b"), ((0, 2), "b")];
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![[0, 1, 2]],
            tags,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateCell { .. }));
    }

    #[test]
    fn untagged_and_duplicate_errors() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err =
            Mesh::new(v.clone(), vec![[0, 1, 2]], [((0, 1), "b"), ((1, 2), "b")]).unwrap_err();
        assert!(matches!(err, Error::UntaggedBoundaryFace(0, 2)));
        let tags = [((0, 1), "b"), ((1, 2), "b"), ((0, 2), "b")];
        let err = Mesh::new(v, vec![[0, 1, 2], [1, 2, 0]], tags).unwrap_err();
        assert!(matches!(err, Error::DuplicateCell { cell: 1, other: 0 }));
    }

    #[test]
    fn clockwise_cells_are_reoriented() {
        let tags = [((0, 1), "b"), ((1, 2), "b"), ((0, 2), "b")];
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            tags,
        )
        .unwrap();
        assert!(m.element_geometry(0).det > 0.0);
        // Refinement edge is still the hypotenuse (1, 2).
        let c = m.cells()[0];
        let (a, b) = local_edge(m.refinement_edge(0));
        assert_eq!(edge_key(c[a], c[b]), (1, 2));
    }

    #[test]
    fn unit_right_triangle_geometry() {
        let g = CellGeometry::from_vertices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((g.area - 0.5).abs() < 1e-15);
        assert!((g.perimeter - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);

        let s = CellGeometry::from_vertices([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]);
        assert!((s.area - 4.0 * g.area).abs() < 1e-14);
        assert!((s.perimeter - 2.0 * g.perimeter).abs() < 1e-14);
        assert!((s.diameter - 2.0 * g.diameter).abs() < 1e-14);

        let e = CellGeometry::from_vertices([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
        assert!((e.area - 3f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn reference_map_roundtrip() {
        let g = CellGeometry::from_vertices([[0.3, -0.2], [1.4, 0.1], [0.2, 0.9]]);
        let xi = [0.2, 0.3];
        let back = g.to_reference(g.to_physical(xi));
        assert!((back[0] - xi[0]).abs() < 1e-14 && (back[1] - xi[1]).abs() < 1e-14);
    }
}
