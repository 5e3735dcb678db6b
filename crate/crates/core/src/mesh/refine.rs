//! Newest-vertex bisection with conforming closure.
//!
//! Refinement works on edges: every marked cell marks all three of its edges
//! (so it is bisected three times into four children), and the closure repeatedly marks the refinement edge of any cell that has some
//! marked edge. Each cell is then bisected along its refinement edge, and the
//! children are bisected again if their own refinement edge (a parent edge) is
//! marked. A cell is thus split into 2, 3 or 4 children and every marked edge
//! is split on both sides, so no hanging nodes appear.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{edge_key, local_edge, EdgeKey, Mesh};
use crate::Point;

/// A cell in "normal form": vertex 0 is the newest vertex, so the refinement
/// edge is (1, 2). Vertices are counter-clockwise.
type Tri = [usize; 3];

fn normal_form(mesh: &Mesh, cell: usize) -> Tri {
    let c = mesh.cells()[cell];
    let k = mesh.refinement_edge(cell);
    [c[k], c[(k + 1) % 3], c[(k + 2) % 3]]
}

struct Builder<'a> {
    vertices: Vec<Point>,
    midpoints: HashMap<EdgeKey, usize>,
    marked: &'a HashSet<EdgeKey>,
    cells: Vec<[usize; 3]>,
    refinement_edge: Vec<u8>,
    parents: Vec<usize>,
}

impl Builder<'_> {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = edge_key(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let m = self.vertices.len();
        self.vertices
            .push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        self.midpoints.insert(key, m);
        m
    }

    /// Bisects `t` if its refinement edge is marked, recursing into children
    /// whose refinement edge is an original (marked) edge.
    fn split(&mut self, t: Tri, parent: usize, depth: usize) {
        let [a, b, c] = t;
        if depth < 2 && self.marked.contains(&edge_key(b, c)) {
            let m = self.midpoint(b, c);
            // Children keep the new vertex m opposite their refinement edge.
            self.split([m, a, b], parent, depth + 1);
            self.split([m, c, a], parent, depth + 1);
        } else {
            self.cells.push(t);
            self.refinement_edge.push(0);
            self.parents.push(parent);
        }
    }
}

pub(super) fn refine(mesh: &Mesh, marked_cells: &[usize]) -> Mesh {
    let mut marked: HashSet<EdgeKey> = HashSet::new();
    for &c in marked_cells {
        let t = normal_form(mesh, c);
        for k in 0..3 {
            marked.insert(edge_key(t[k], t[(k + 1) % 3]));
        }
    }
    if marked.is_empty() {
        let mut out = mesh.clone();
        out.parents = (0..mesh.num_cells()).collect();
        return out;
    }

    // Closure: any cell touching a marked edge must split its refinement edge.
    loop {
        let mut changed = false;
        for cell in 0..mesh.num_cells() {
            let t = normal_form(mesh, cell);
            let ref_edge = edge_key(t[1], t[2]);
            if marked.contains(&ref_edge) {
                continue;
            }
            let touches = (0..3).any(|k| {
                let (a, b) = local_edge(k);
                marked.contains(&edge_key(t[a], t[b]))
            });
            if touches {
                marked.insert(ref_edge);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut b = Builder {
        vertices: mesh.vertices().to_vec(),
        midpoints: HashMap::new(),
        marked: &marked,
        cells: Vec::with_capacity(mesh.num_cells() * 2),
        refinement_edge: Vec::with_capacity(mesh.num_cells() * 2),
        parents: Vec::with_capacity(mesh.num_cells() * 2),
    };
    for cell in 0..mesh.num_cells() {
        b.split(normal_form(mesh, cell), cell, 0);
    }

    let mut tags: BTreeMap<EdgeKey, String> = BTreeMap::new();
    for (&(a, c), tag) in mesh.boundary_tags() {
        match b.midpoints.get(&(a, c)) {
            Some(&m) => {
                tags.insert(edge_key(a, m), tag.clone());
                tags.insert(edge_key(m, c), tag.clone());
            }
            None => {
                tags.insert((a, c), tag.clone());
            }
        }
    }

    let Builder {
        vertices,
        cells,
        refinement_edge,
        parents,
        ..
    } = b;
    Mesh::assemble(vertices, cells, tags, refinement_edge, parents)
        .expect("bisection of a valid mesh produced an invalid mesh")
}
