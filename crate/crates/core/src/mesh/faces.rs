use std::collections::HashMap;

use super::{dist, edge_key, local_edge, EdgeKey, Mesh};
use crate::Point;

#[derive(Debug, Clone)]
pub struct Face {
    /// End points, ordered as they appear counter-clockwise in the first cell.
    pub vertices: [usize; 2],
    /// First incident cell and the local index of the vertex opposite this face in it.
    pub first: (usize, usize),
    /// Second incident cell (interior faces only); always has the larger index.
    pub second: Option<(usize, usize)>,
    /// Unit normal pointing out of the first cell.
    pub normal: Point,
    /// Face diameter h_F.
    pub length: f64,
    /// Boundary tag, set for boundary faces only.
    pub tag: Option<String>,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.second.is_some()
    }

    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }
}

/// All faces 𝒮_h of a mesh with incidence, normals and tags.
#[derive(Debug, Clone)]
pub struct FaceSet {
    faces: Vec<Face>,
    /// `cell_faces[c][k]` is the face opposite local vertex `k` of cell `c`.
    cell_faces: Vec<[usize; 3]>,
}

impl FaceSet {
    pub fn new(mesh: &Mesh) -> Self {
        let verts = mesh.vertices();
        let mut index: HashMap<EdgeKey, usize> = HashMap::with_capacity(2 * mesh.num_cells());
        let mut faces: Vec<Face> = Vec::with_capacity(2 * mesh.num_cells());
        let mut cell_faces = vec![[usize::MAX; 3]; mesh.num_cells()];
        for (ci, c) in mesh.cells().iter().enumerate() {
            for k in 0..3 {
                let (la, lb) = local_edge(k);
                let (a, b) = (c[la], c[lb]);
                let key = edge_key(a, b);
                match index.get(&key) {
                    Some(&fi) => {
                        faces[fi].second = Some((ci, k));
                        faces[fi].tag = None;
                        cell_faces[ci][k] = fi;
                    }
                    None => {
                        let (pa, pb) = (verts[a], verts[b]);
                        let length = dist(pa, pb);
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        let fi = faces.len();
                        faces.push(Face {
                            vertices: [a, b],
                            first: (ci, k),
                            second: None,
                            normal,
                            length,
                            tag: mesh.boundary_tag(a, b).map(str::to_owned),
                        });
                        index.insert(key, fi);
                        cell_faces[ci][k] = fi;
                    }
                }
            }
        }
        FaceSet { faces, cell_faces }
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn num_interior(&self) -> usize {
        self.faces.iter().filter(|f| f.is_interior()).count()
    }

    pub fn num_boundary(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    pub fn cell_faces(&self, cell: usize) -> [usize; 3] {
        self.cell_faces[cell]
    }

    pub fn get(&self, face: usize) -> &Face {
        &self.faces[face]
    }
}
