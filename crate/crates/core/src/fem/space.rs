use std::collections::HashMap;
use std::sync::Arc;

use super::reference::{LagrangeElement, NodeKind};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    /// Discontinuous, one independent set of dofs per cell.
    Broken,
    /// Globally continuous; nodes shared between cells are identified.
    Conforming,
}

/// Identity of a Lagrange node in the mesh, independent of the cell viewing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(usize),
    /// Edge `(lo, hi)` with the node `j` steps (of `1/p`) away from `lo`.
    Edge(usize, usize, usize),
    Interior(usize, usize),
}

/// Lagrange space of degree `p` on a mesh.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    element: Arc<LagrangeElement>,
    continuity: Continuity,
    /// `dof_map[c * n_loc + i]` is the global dof of local node `i` of cell `c`.
    dof_map: Vec<usize>,
    ndofs: usize,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, continuity: Continuity) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidDegree(degree));
        }
        let element = Arc::new(LagrangeElement::new(degree));
        let nloc = element.num_nodes();
        let (dof_map, ndofs) = match continuity {
            Continuity::Broken => (
                (0..mesh.num_cells() * nloc).collect(),
                mesh.num_cells() * nloc,
            ),
            Continuity::Conforming => conforming_dofs(&mesh, &element),
        };
        Ok(FunctionSpace {
            mesh,
            element,
            continuity,
            dof_map,
            ndofs,
        })
    }

    pub fn broken(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, Continuity::Broken)
    }

    pub fn conforming(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, Continuity::Conforming)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn element(&self) -> &LagrangeElement {
        &self.element
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.element.num_nodes()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let n = self.dofs_per_cell();
        &self.dof_map[cell * n..(cell + 1) * n]
    }

    pub fn dof_map(&self) -> &[usize] {
        &self.dof_map
    }

    /// Physical coordinates of the local nodes of `cell`.
    pub fn node_points(&self, cell: usize) -> Vec<Point> {
        let g = self.mesh.element_geometry(cell);
        self.element
            .nodes()
            .into_iter()
            .map(|xi| g.to_physical(xi))
            .collect()
    }

    /// Nodal interpolation of `field`.
    pub fn interpolate(&self, field: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ndofs];
        let mut done = vec![false; self.ndofs];
        for c in 0..self.mesh.num_cells() {
            let pts = self.node_points(c);
            for (&dof, &x) in self.cell_dofs(c).iter().zip(&pts) {
                if done[dof] {
                    continue;
                }
                let v = field(x);
                if !v.is_finite() {
                    return Err(Error::NonFiniteField {
                        x: x[0],
                        y: x[1],
                        value: v,
                    });
                }
                out[dof] = v;
                done[dof] = true;
            }
        }
        Ok(out)
    }

    /// Value of the finite-element function in `cell` at reference point `xi`.
    pub fn evaluate_in_cell(&self, coeffs: &[f64], cell: usize, xi: Point) -> f64 {
        let (v, _) = self.element.eval(xi);
        self.cell_dofs(cell)
            .iter()
            .zip(&v)
            .map(|(&d, &phi)| coeffs[d] * phi)
            .sum()
    }

    /// Value and physical gradient in `cell` at reference point `xi`.
    pub fn evaluate_with_gradient(&self, coeffs: &[f64], cell: usize, xi: Point) -> (f64, Point) {
        let (v, g) = self.element.eval(xi);
        let geo = self.mesh.element_geometry(cell);
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        for ((&d, &phi), &dphi) in self.cell_dofs(cell).iter().zip(&v).zip(&g) {
            val += coeffs[d] * phi;
            let pg = geo.physical_gradient(dphi);
            grad[0] += coeffs[d] * pg[0];
            grad[1] += coeffs[d] * pg[1];
        }
        (val, grad)
    }

    /// Point evaluation; on cell boundaries the first containing cell is used.
    pub fn evaluate(&self, coeffs: &[f64], x: Point) -> Option<f64> {
        let c = self.mesh.locate(x)?;
        let xi = self.mesh.element_geometry(c).to_reference(x);
        Some(self.evaluate_in_cell(coeffs, c, xi))
    }

    /// Transfers `coeffs` from `coarse` to this space on a mesh refined from
    /// `coarse.mesh()`, by interpolating at the new nodes inside each parent cell.
    pub fn prolongate_from(&self, coarse: &FunctionSpace, coeffs: &[f64]) -> Result<Vec<f64>> {
        let parents = self.mesh.parents();
        if parents.len() != self.mesh.num_cells()
            || parents.iter().any(|&p| p >= coarse.mesh.num_cells())
        {
            return Err(Error::IncompatibleSpaces(
                "mesh is not a refinement of the coarse mesh".into(),
            ));
        }
        let mut out = vec![0.0; self.ndofs];
        for c in 0..self.mesh.num_cells() {
            let parent = parents[c];
            let pg = coarse.mesh.element_geometry(parent);
            for (&dof, x) in self.cell_dofs(c).iter().zip(self.node_points(c)) {
                out[dof] = coarse.evaluate_in_cell(coeffs, parent, pg.to_reference(x));
            }
        }
        Ok(out)
    }
}

fn conforming_dofs(mesh: &Mesh, element: &LagrangeElement) -> (Vec<usize>, usize) {
    let p = element.degree();
    let nloc = element.num_nodes();
    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    let mut dof_map = Vec::with_capacity(mesh.num_cells() * nloc);
    for (c, verts) in mesh.cells().iter().enumerate() {
        for i in 0..nloc {
            let key = match element.kind(i) {
                NodeKind::Vertex(v) => NodeKey::Vertex(verts[v]),
                NodeKind::Edge { edge, j } => {
                    let (a, b) = (verts[(edge + 1) % 3], verts[(edge + 2) % 3]);
                    if a < b {
                        NodeKey::Edge(a, b, j)
                    } else {
                        NodeKey::Edge(b, a, p - j)
                    }
                }
                NodeKind::Interior(k) => NodeKey::Interior(c, k),
            };
            let next = index.len();
            dof_map.push(*index.entry(key).or_insert(next));
        }
    }
    (dof_map, index.len())
}

/// The algebraic inclusion of a conforming space into the broken space of the
/// same degree on the same mesh: a broken dof takes the value of the conforming
/// dof at the same node.
#[derive(Debug, Clone)]
pub struct CgEmbedding {
    /// Conforming dof for each broken dof.
    map: Vec<usize>,
    ncols: usize,
}

impl CgEmbedding {
    pub fn new(conforming: &FunctionSpace, broken: &FunctionSpace) -> Result<Self> {
        if conforming.continuity != Continuity::Conforming
            || broken.continuity != Continuity::Broken
        {
            return Err(Error::IncompatibleSpaces(
                "expected a conforming and a broken space".into(),
            ));
        }
        if !Arc::ptr_eq(&conforming.mesh, &broken.mesh)
            && !same_mesh(&conforming.mesh, &broken.mesh)
        {
            return Err(Error::IncompatibleSpaces(
                "spaces live on different meshes".into(),
            ));
        }
        if conforming.degree() != broken.degree() {
            return Err(Error::IncompatibleSpaces(format!(
                "degree mismatch: conforming {} vs broken {}",
                conforming.degree(),
                broken.degree()
            )));
        }
        let mut map = vec![0; broken.ndofs];
        for c in 0..broken.mesh.num_cells() {
            for (&b, &g) in broken.cell_dofs(c).iter().zip(conforming.cell_dofs(c)) {
                map[b] = g;
            }
        }
        Ok(CgEmbedding {
            map,
            ncols: conforming.ndofs,
        })
    }

    pub fn nrows(&self) -> usize {
        self.map.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Conforming dof feeding each broken dof.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// `E c`
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.ncols);
        self.map.iter().map(|&j| c[j]).collect()
    }

    /// `Eᵀ v`
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.map.len());
        let mut out = vec![0.0; self.ncols];
        for (&j, &x) in self.map.iter().zip(v) {
            out[j] += x;
        }
        out
    }

    pub fn matrix(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(
            self.map.len(),
            self.ncols,
            self.map
                .iter()
                .enumerate()
                .map(|(i, &j)| (i, j, 1.0))
                .collect(),
        )
    }

    /// `A E` for a matrix whose columns index broken dofs.
    pub fn right_multiply(&self, a: &CsrMatrix) -> CsrMatrix {
        a.merge_columns(&self.map, self.ncols)
    }
}

fn same_mesh(a: &Mesh, b: &Mesh) -> bool {
    a.cells() == b.cells() && a.vertices() == b.vertices()
}
