use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::coefficients::{diffusion_weights, normal_diffusivity, penalty_eta_e, Tensor};
use super::flux::{lax_friedrichs_flux, FaceState};
use super::problem::{BoundaryCondition, DiffusionNormTerm, ExactSolution, NormKind, ProblemDef};
use crate::fem::{quadrature_rule, Continuity, Entity, FunctionSpace, Quadrature, Tabulation};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{CellGeometry, FaceSet};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// One cell's view of a face: the local indices of the face's two end points.
#[derive(Debug, Clone, Copy)]
struct Side {
    cell: usize,
    i0: usize,
    i1: usize,
}

#[derive(Debug, Clone)]
struct FaceData {
    kind: FaceKind,
    eta: f64,
    /// Weights of the κ-weighted average (ω₂ = 0 on boundary faces).
    w1: f64,
    w2: f64,
    /// γ_κ on interior faces, n·κn on boundary faces.
    gamma: f64,
    first: Side,
    second: Option<Side>,
}

struct Rule {
    cell: Quadrature,
    cell_tab: Tabulation,
    face: Quadrature,
    /// Indexed by `3 * i0 + i1`.
    face_tabs: Vec<Option<Tabulation>>,
}

/// Basis data of one cell at the points of a rule.
struct CellValues {
    n: usize,
    x: Vec<Point>,
    w: Vec<f64>,
    phi: Vec<f64>,
    grad: Vec<Point>,
}

impl CellValues {
    fn nq(&self) -> usize {
        self.w.len()
    }

    fn phi(&self, q: usize) -> &[f64] {
        &self.phi[q * self.n..(q + 1) * self.n]
    }

    fn grad(&self, q: usize) -> &[Point] {
        &self.grad[q * self.n..(q + 1) * self.n]
    }
}

/// Basis traces of one side of a face.
struct Trace {
    n: usize,
    phi: Vec<f64>,
    grad: Vec<Point>,
}

impl Trace {
    fn phi(&self, q: usize) -> &[f64] {
        &self.phi[q * self.n..(q + 1) * self.n]
    }

    fn grad(&self, q: usize) -> &[Point] {
        &self.grad[q * self.n..(q + 1) * self.n]
    }
}

struct FaceValues {
    x: Vec<Point>,
    w: Vec<f64>,
    first: Trace,
    second: Option<Trace>,
}

/// L2 and broken-space norms of an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub vh: f64,
}

#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn apply(k: &Tensor, g: Point) -> Point {
    [
        k[0][0] * g[0] + k[0][1] * g[1],
        k[1][0] * g[0] + k[1][1] * g[1],
    ]
}

fn local_index(cell: &[usize; 3], v: usize) -> usize {
    cell.iter()
        .position(|&x| x == v)
        .expect("face vertex belongs to its cell")
}

/// Assembles all discrete forms of a problem on a broken Lagrange space.
///
/// Diffusion tensors are sampled at cell centroids (piecewise-constant κ);
/// velocities, sources and boundary data are evaluated at quadrature points.
/// Interior faces are oriented from the lower to the higher cell index, and
/// jumps are `[[v]] = v₁ − v₂`; on boundary faces jumps and averages are traces.
pub struct DgAssembler {
    space: FunctionSpace,
    problem: ProblemDef,
    faces: FaceSet,
    geo: Vec<CellGeometry>,
    kappa: Vec<Tensor>,
    face_data: Vec<FaceData>,
    rules: BTreeMap<usize, Rule>,
    swip: OnceLock<CsrMatrix>,
    linear: OnceLock<CsrMatrix>,
    gram: OnceLock<CsrMatrix>,
}

impl DgAssembler {
    pub fn new(space: &FunctionSpace, problem: &ProblemDef) -> Result<Self> {
        if space.continuity() != Continuity::Broken {
            return Err(Error::IncompatibleSpaces(
                "forms are assembled on the broken space".into(),
            ));
        }
        let mesh = space.mesh().clone();
        let p = space.degree();
        let faces = mesh.face_topology();
        let geo = mesh.geometries();
        let kappa: Vec<Tensor> = geo.iter().map(|g| (problem.kappa)(g.centroid)).collect();
        for (c, k) in kappa.iter().enumerate() {
            let sym = (k[0][1] - k[1][0]).abs() <= 1e-12 * (k[0][0].abs() + k[1][1].abs());
            let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
            if !(sym && k[0][0] >= 0.0 && k[1][1] >= 0.0 && det >= 0.0) {
                return Err(Error::Config(format!(
                    "κ is not symmetric positive semi-definite in cell {c}"
                )));
            }
        }
        let mut face_data = Vec::with_capacity(faces.len());
        for f in faces.faces() {
            let (c1, k1) = f.first;
            let first = Side {
                cell: c1,
                i0: (k1 + 1) % 3,
                i1: (k1 + 2) % 3,
            };
            match f.second {
                Some((c2, _)) => {
                    let cells = mesh.cells();
                    let second = Side {
                        cell: c2,
                        i0: local_index(&cells[c2], f.vertices[0]),
                        i1: local_index(&cells[c2], f.vertices[1]),
                    };
                    let (w1, w2, gamma) = face_weights(&kappa[c1], &kappa[c2], f.normal)?;
                    face_data.push(FaceData {
                        kind: FaceKind::Interior,
                        eta: penalty_eta_e(&geo[c1], Some(&geo[c2]), p),
                        w1,
                        w2,
                        gamma,
                        first,
                        second: Some(second),
                    });
                }
                None => {
                    let tag = f.tag.as_deref().expect("boundary faces are tagged");
                    let kind = match problem.condition(tag)? {
                        BoundaryCondition::Dirichlet => FaceKind::Dirichlet,
                        BoundaryCondition::Neumann => FaceKind::Neumann,
                    };
                    let delta = normal_diffusivity(&kappa[c1], f.normal);
                    face_data.push(FaceData {
                        kind,
                        eta: penalty_eta_e(&geo[c1], None, p),
                        w1: 1.0,
                        w2: 0.0,
                        gamma: delta,
                        first,
                        second: None,
                    });
                }
            }
        }
        let mut rules = BTreeMap::new();
        for d in [
            Self::deg_linear(p),
            Self::deg_rhs(p),
            Self::deg_nonlinear(p),
            Self::deg_error(p),
        ] {
            rules.entry(d).or_insert_with(|| build_rule(space, d));
        }
        Ok(DgAssembler {
            space: space.clone(),
            problem: problem.clone(),
            faces,
            geo,
            kappa,
            face_data,
            rules,
            swip: OnceLock::new(),
            linear: OnceLock::new(),
            gram: OnceLock::new(),
        })
    }

    fn deg_linear(p: usize) -> usize {
        2 * p + 1
    }

    fn deg_rhs(p: usize) -> usize {
        2 * p + 2
    }

    fn deg_nonlinear(p: usize) -> usize {
        (2 * p + 1).max(3 * p)
    }

    fn deg_error(p: usize) -> usize {
        2 * p + 4
    }

    pub fn space(&self) -> &FunctionSpace {
        &self.space
    }

    pub fn problem(&self) -> &ProblemDef {
        &self.problem
    }

    pub fn faces(&self) -> &FaceSet {
        &self.faces
    }

    pub fn face_kind(&self, face: usize) -> FaceKind {
        self.face_data[face].kind
    }

    /// Penalty η_e of a face.
    pub fn face_penalty(&self, face: usize) -> f64 {
        self.face_data[face].eta
    }

    pub fn cell_kappa(&self, cell: usize) -> Tensor {
        self.kappa[cell]
    }

    fn ndofs(&self) -> usize {
        self.space.ndofs()
    }

    fn nloc(&self) -> usize {
        self.space.dofs_per_cell()
    }

    fn cell_values(&self, c: usize, deg: usize) -> CellValues {
        let r = &self.rules[&deg];
        let g = &self.geo[c];
        let n = self.nloc();
        let nq = r.cell.len();
        let mut v = CellValues {
            n,
            x: Vec::with_capacity(nq),
            w: Vec::with_capacity(nq),
            phi: Vec::with_capacity(nq * n),
            grad: Vec::with_capacity(nq * n),
        };
        for q in 0..nq {
            v.x.push(g.to_physical(r.cell.points[q]));
            v.w.push(r.cell.weights[q] * g.det);
            v.phi.extend_from_slice(r.cell_tab.values(q));
            v.grad.extend(
                r.cell_tab
                    .grads(q)
                    .iter()
                    .map(|&gr| g.physical_gradient(gr)),
            );
        }
        v
    }

    fn trace(&self, side: &Side, deg: usize) -> Trace {
        let r = &self.rules[&deg];
        let tab = r.face_tabs[3 * side.i0 + side.i1]
            .as_ref()
            .expect("face tabulation exists");
        let g = &self.geo[side.cell];
        let n = self.nloc();
        let nq = r.face.len();
        let mut t = Trace {
            n,
            phi: Vec::with_capacity(nq * n),
            grad: Vec::with_capacity(nq * n),
        };
        for q in 0..nq {
            t.phi.extend_from_slice(tab.values(q));
            t.grad
                .extend(tab.grads(q).iter().map(|&gr| g.physical_gradient(gr)));
        }
        t
    }

    fn face_values(&self, f: usize, deg: usize) -> FaceValues {
        let r = &self.rules[&deg];
        let face = self.faces.get(f);
        let mesh = self.space.mesh();
        let (a, b) = (
            mesh.vertices()[face.vertices[0]],
            mesh.vertices()[face.vertices[1]],
        );
        let fd = &self.face_data[f];
        FaceValues {
            x: r.face
                .points
                .iter()
                .map(|p| [a[0] + p[0] * (b[0] - a[0]), a[1] + p[0] * (b[1] - a[1])])
                .collect(),
            w: r.face.weights.iter().map(|w| w * face.length).collect(),
            first: self.trace(&fd.first, deg),
            second: fd.second.as_ref().map(|s| self.trace(s, deg)),
        }
    }

    fn cell_dofs(&self, c: usize) -> &[usize] {
        self.space.cell_dofs(c)
    }

    /// Local dofs of a face: first cell, then second cell (if interior).
    fn face_dofs(&self, f: usize) -> Vec<usize> {
        let fd = &self.face_data[f];
        let mut d = self.cell_dofs(fd.first.cell).to_vec();
        if let Some(s) = &fd.second {
            d.extend_from_slice(self.cell_dofs(s.cell));
        }
        d
    }

    fn local_coeffs(&self, c: usize, u: &[f64]) -> Vec<f64> {
        self.cell_dofs(c).iter().map(|&d| u[d]).collect()
    }

    // ------------------------------------------------------------------
    // Linear forms

    /// SWIP diffusion form `b_swip(v, u)`.
    pub fn swip(&self) -> &CsrMatrix {
        self.swip.get_or_init(|| self.assemble_swip())
    }

    fn assemble_swip(&self) -> CsrMatrix {
        let p = self.space.degree();
        let deg = Self::deg_linear(p);
        let n = self.nloc();
        let nf = self.faces.len();
        let mut t = TripletBuilder::with_capacity(
            self.ndofs(),
            self.ndofs(),
            self.geo.len() * n * n + 4 * nf * n * n,
        );
        let mut local = vec![0.0; n * n];
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            let k = &self.kappa[c];
            local.iter_mut().for_each(|x| *x = 0.0);
            for q in 0..cv.nq() {
                let g = cv.grad(q);
                for j in 0..n {
                    let kg = apply(k, g[j]);
                    for i in 0..n {
                        local[i * n + j] += cv.w[q] * dot(kg, g[i]);
                    }
                }
            }
            let d = self.cell_dofs(c);
            t.add_block(d, d, &local);
        }
        for f in 0..nf {
            let fd = &self.face_data[f];
            if fd.kind == FaceKind::Neumann {
                continue;
            }
            let nrm = self.faces.get(f).normal;
            let fv = self.face_values(f, deg);
            let m = if fd.second.is_some() { 2 * n } else { n };
            let mut jump = vec![0.0; m];
            let mut avg = vec![0.0; m];
            let mut block = vec![0.0; m * m];
            let k1 = &self.kappa[fd.first.cell];
            for q in 0..fv.w.len() {
                for i in 0..n {
                    jump[i] = fv.first.phi(q)[i];
                    avg[i] = fd.w1 * dot(apply(k1, fv.first.grad(q)[i]), nrm);
                }
                if let (Some(tr), Some(s)) = (&fv.second, &fd.second) {
                    let k2 = &self.kappa[s.cell];
                    for i in 0..n {
                        jump[n + i] = -tr.phi(q)[i];
                        avg[n + i] = fd.w2 * dot(apply(k2, tr.grad(q)[i]), nrm);
                    }
                }
                let pen = fd.eta * fd.gamma;
                let w = fv.w[q];
                for i in 0..m {
                    for j in 0..m {
                        block[i * m + j] +=
                            w * (-jump[i] * avg[j] - avg[i] * jump[j] + pen * jump[i] * jump[j]);
                    }
                }
            }
            let d = self.face_dofs(f);
            t.add_block(&d, &d, &block);
        }
        t.build()
    }

    /// Upwind advection form `b_upw(v, u)`.
    pub fn upwind(&self) -> CsrMatrix {
        let p = self.space.degree();
        let deg = Self::deg_linear(p);
        let n = self.nloc();
        let nf = self.faces.len();
        let beta = &self.problem.beta;
        let mut t = TripletBuilder::with_capacity(
            self.ndofs(),
            self.ndofs(),
            self.geo.len() * n * n + 4 * nf * n * n,
        );
        let mut local = vec![0.0; n * n];
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            local.iter_mut().for_each(|x| *x = 0.0);
            for q in 0..cv.nq() {
                let b = beta(cv.x[q]);
                if b == [0.0, 0.0] {
                    continue;
                }
                let (phi, g) = (cv.phi(q), cv.grad(q));
                for j in 0..n {
                    let bg = dot(b, g[j]);
                    for i in 0..n {
                        local[i * n + j] += cv.w[q] * phi[i] * bg;
                    }
                }
            }
            let d = self.cell_dofs(c);
            t.add_block(d, d, &local);
        }
        for f in 0..nf {
            let fd = &self.face_data[f];
            let nrm = self.faces.get(f).normal;
            let fv = self.face_values(f, deg);
            let m = if fd.second.is_some() { 2 * n } else { n };
            let mut block = vec![0.0; m * m];
            let mut jump = vec![0.0; m];
            let mut avg = vec![0.0; m];
            let mut any = false;
            for q in 0..fv.w.len() {
                let bn = dot(beta(fv.x[q]), nrm);
                if bn == 0.0 {
                    continue;
                }
                let w = fv.w[q];
                match &fv.second {
                    Some(tr) => {
                        for i in 0..n {
                            jump[i] = fv.first.phi(q)[i];
                            avg[i] = 0.5 * fv.first.phi(q)[i];
                            jump[n + i] = -tr.phi(q)[i];
                            avg[n + i] = 0.5 * tr.phi(q)[i];
                        }
                        for i in 0..m {
                            for j in 0..m {
                                block[i * m + j] += w
                                    * (0.5 * bn.abs() * jump[i] * jump[j] - avg[i] * bn * jump[j]);
                            }
                        }
                        any = true;
                    }
                    None if bn < 0.0 => {
                        let phi = fv.first.phi(q);
                        for i in 0..n {
                            for j in 0..n {
                                block[i * n + j] += w * bn.abs() * phi[i] * phi[j];
                            }
                        }
                        any = true;
                    }
                    None => {}
                }
            }
            if any {
                let d = self.face_dofs(f);
                t.add_block(&d, &d, &block);
            }
        }
        t.build()
    }

    /// `B = b_swip + b_upw` for linear problems.
    pub fn linear_operator(&self) -> &CsrMatrix {
        self.linear.get_or_init(|| self.swip().add(&self.upwind()))
    }

    /// Right-hand side ℓ_h of the linear problem.
    pub fn rhs(&self) -> Vec<f64> {
        self.rhs_impl(true)
    }

    /// Right-hand side of the nonlinear problem: the Dirichlet data entering
    /// through the numerical flux are kept inside the nonlinear residual.
    pub fn rhs_nonlinear(&self) -> Vec<f64> {
        self.rhs_impl(false)
    }

    fn rhs_impl(&self, linear: bool) -> Vec<f64> {
        let p = self.space.degree();
        let deg = Self::deg_rhs(p);
        let n = self.nloc();
        let pr = &self.problem;
        let mut out = vec![0.0; self.ndofs()];
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            let d = self.cell_dofs(c);
            for q in 0..cv.nq() {
                let fx = (pr.source)(cv.x[q]);
                if fx == 0.0 {
                    continue;
                }
                for (i, &phi) in cv.phi(q).iter().enumerate() {
                    out[d[i]] += cv.w[q] * fx * phi;
                }
            }
        }
        for f in 0..self.faces.len() {
            let fd = &self.face_data[f];
            if fd.kind == FaceKind::Interior {
                continue;
            }
            let nrm = self.faces.get(f).normal;
            let fv = self.face_values(f, deg);
            let d = self.cell_dofs(fd.first.cell);
            let k = &self.kappa[fd.first.cell];
            for q in 0..fv.w.len() {
                let (phi, g) = (fv.first.phi(q), fv.first.grad(q));
                let w = fv.w[q];
                match fd.kind {
                    FaceKind::Dirichlet => {
                        let ud = (pr.dirichlet)(fv.x[q]);
                        let mut pen = fd.eta * fd.gamma;
                        if linear {
                            let bn = dot((pr.beta)(fv.x[q]), nrm);
                            if bn < 0.0 {
                                pen += bn.abs();
                            }
                        }
                        for i in 0..n {
                            out[d[i]] += w * ud * (pen * phi[i] - dot(apply(k, g[i]), nrm));
                        }
                    }
                    FaceKind::Neumann => {
                        let h = (pr.neumann)(fv.x[q]);
                        for i in 0..n {
                            out[d[i]] += w * h * phi[i];
                        }
                    }
                    FaceKind::Interior => unreachable!(),
                }
            }
        }
        out
    }

    // ------------------------------------------------------------------
    // Norm

    /// `(∇a, ∇b)`-type volume inner product density of the broken norm at `x`.
    fn cell_inner(&self, c: usize, x: Point, a: (f64, Point), b: (f64, Point)) -> f64 {
        let pr = &self.problem;
        let k = &self.kappa[c];
        let h = self.geo[c].diameter;
        let adv = match pr.norm {
            NormKind::Advective => {
                let beta = (pr.beta)(x);
                h * dot(beta, a.1) * dot(beta, b.1)
            }
            NormKind::Convective => h * dot(a.1, b.1),
        };
        let diff = match pr.diffusion_norm {
            DiffusionNormTerm::Literal => dot(apply(k, a.1), apply(k, b.1)),
            DiffusionNormTerm::Energy => dot(a.1, apply(k, b.1)),
        };
        a.0 * b.0 + adv + diff
    }

    /// Weight of `[[w]]²` in the broken norm at a face point.
    fn face_weight(&self, f: usize, x: Point) -> f64 {
        let fd = &self.face_data[f];
        let base = match self.problem.norm {
            NormKind::Advective => {
                0.5 * dot((self.problem.beta)(x), self.faces.get(f).normal).abs()
            }
            NormKind::Convective => 1.0,
        };
        base + fd.eta * fd.gamma
    }

    /// Gram matrix G of the broken-space inner product.
    pub fn gram(&self) -> &CsrMatrix {
        self.gram.get_or_init(|| self.assemble_gram())
    }

    fn assemble_gram(&self) -> CsrMatrix {
        let p = self.space.degree();
        let deg = Self::deg_linear(p);
        let n = self.nloc();
        let nf = self.faces.len();
        let mut t = TripletBuilder::with_capacity(
            self.ndofs(),
            self.ndofs(),
            self.geo.len() * n * n + 4 * nf * n * n,
        );
        let mut local = vec![0.0; n * n];
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            local.iter_mut().for_each(|x| *x = 0.0);
            for q in 0..cv.nq() {
                let (phi, g) = (cv.phi(q), cv.grad(q));
                for i in 0..n {
                    for j in i..n {
                        let v =
                            cv.w[q] * self.cell_inner(c, cv.x[q], (phi[i], g[i]), (phi[j], g[j]));
                        local[i * n + j] += v;
                        if j != i {
                            local[j * n + i] += v;
                        }
                    }
                }
            }
            let d = self.cell_dofs(c);
            t.add_block(d, d, &local);
        }
        for f in 0..nf {
            let fv = self.face_values(f, deg);
            let m = if fv.second.is_some() { 2 * n } else { n };
            let mut jump = vec![0.0; m];
            let mut block = vec![0.0; m * m];
            for q in 0..fv.w.len() {
                jump[..n].copy_from_slice(fv.first.phi(q));
                if let Some(tr) = &fv.second {
                    for i in 0..n {
                        jump[n + i] = -tr.phi(q)[i];
                    }
                }
                let c = fv.w[q] * self.face_weight(f, fv.x[q]);
                for i in 0..m {
                    for j in 0..m {
                        block[i * m + j] += c * jump[i] * jump[j];
                    }
                }
            }
            let d = self.face_dofs(f);
            t.add_block(&d, &d, &block);
        }
        t.build()
    }

    /// Per-cell contributions η²_K of `‖w‖²_{𝕍_h}`: volume terms of K, half of
    /// each incident interior-face term and all of its boundary-face terms.
    pub fn localize(&self, w: &[f64]) -> Vec<f64> {
        let p = self.space.degree();
        let deg = Self::deg_linear(p);
        let mut eta = vec![0.0; self.geo.len()];
        for (c, e) in eta.iter_mut().enumerate() {
            let cv = self.cell_values(c, deg);
            let wl = self.local_coeffs(c, w);
            for q in 0..cv.nq() {
                let (val, grad) = combine(&wl, cv.phi(q), cv.grad(q));
                *e += cv.w[q] * self.cell_inner(c, cv.x[q], (val, grad), (val, grad));
            }
        }
        for f in 0..self.faces.len() {
            let fd = &self.face_data[f];
            let fv = self.face_values(f, deg);
            let w1 = self.local_coeffs(fd.first.cell, w);
            let w2 = fd.second.as_ref().map(|s| self.local_coeffs(s.cell, w));
            let mut s = 0.0;
            for q in 0..fv.w.len() {
                let mut jump: f64 = fv.first.phi(q).iter().zip(&w1).map(|(a, b)| a * b).sum();
                if let (Some(tr), Some(w2)) = (&fv.second, &w2) {
                    jump -= tr.phi(q).iter().zip(w2).map(|(a, b)| a * b).sum::<f64>();
                }
                s += fv.w[q] * self.face_weight(f, fv.x[q]) * jump * jump;
            }
            match &fd.second {
                Some(sd) => {
                    eta[fd.first.cell] += 0.5 * s;
                    eta[sd.cell] += 0.5 * s;
                }
                None => eta[fd.first.cell] += s,
            }
        }
        eta
    }

    /// L2 and 𝕍_h norms of `u_h − u_exa` for a broken coefficient vector.
    ///
    /// Volume terms use `u_exa` and its gradient; interior jumps use `u_h`
    /// alone, boundary jumps the trace of `u_h − u_exa`.
    pub fn error_norms(&self, u: &[f64], exact: &ExactSolution) -> ErrorNorms {
        let p = self.space.degree();
        let deg = Self::deg_error(p);
        let (mut l2, mut vh) = (0.0, 0.0);
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            let ul = self.local_coeffs(c, u);
            for q in 0..cv.nq() {
                let (val, grad) = combine(&ul, cv.phi(q), cv.grad(q));
                let ge = (exact.gradient)(cv.x[q]);
                let e = (
                    val - (exact.value)(cv.x[q]),
                    [grad[0] - ge[0], grad[1] - ge[1]],
                );
                l2 += cv.w[q] * e.0 * e.0;
                vh += cv.w[q] * self.cell_inner(c, cv.x[q], e, e);
            }
        }
        for f in 0..self.faces.len() {
            let fd = &self.face_data[f];
            let fv = self.face_values(f, deg);
            let u1 = self.local_coeffs(fd.first.cell, u);
            let u2 = fd.second.as_ref().map(|s| self.local_coeffs(s.cell, u));
            for q in 0..fv.w.len() {
                let t1: f64 = fv.first.phi(q).iter().zip(&u1).map(|(a, b)| a * b).sum();
                let jump = match (&fv.second, &u2) {
                    (Some(tr), Some(u2)) => {
                        t1 - tr.phi(q).iter().zip(u2).map(|(a, b)| a * b).sum::<f64>()
                    }
                    _ => t1 - (exact.value)(fv.x[q]),
                };
                vh += fv.w[q] * self.face_weight(f, fv.x[q]) * jump * jump;
            }
        }
        ErrorNorms {
            l2: l2.max(0.0).sqrt(),
            vh: vh.max(0.0).sqrt(),
        }
    }

    /// `‖u‖_{L2}` of a broken function.
    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        let deg = Self::deg_linear(self.space.degree());
        let mut s = 0.0;
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            let ul = self.local_coeffs(c, u);
            for q in 0..cv.nq() {
                let v: f64 = cv.phi(q).iter().zip(&ul).map(|(a, b)| a * b).sum();
                s += cv.w[q] * v * v;
            }
        }
        s.sqrt()
    }

    // ------------------------------------------------------------------
    // Nonlinear form

    fn flux(&self) -> Result<&dyn super::problem::Flux> {
        self.problem.flux.as_deref().ok_or_else(|| {
            Error::Config(format!(
                "problem '{}' has no nonlinear flux",
                self.problem.name
            ))
        })
    }

    fn face_state(&self, f: usize, x: Point, u2: Option<f64>) -> FaceState {
        match self.face_data[f].kind {
            FaceKind::Interior => FaceState::Interior(u2.expect("interior trace")),
            FaceKind::Dirichlet => FaceState::Dirichlet((self.problem.dirichlet)(x)),
            FaceKind::Neumann => FaceState::Neumann,
        }
    }

    /// `n_h(·; u) − ℓ_h(·)` as a vector over the broken test space.
    pub fn nonlinear_residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let flux = self.flux()?;
        let deg = Self::deg_nonlinear(self.space.degree());
        let n = self.nloc();
        let mut r = self.swip().mul_vec(u);
        let l = self.rhs_nonlinear();
        r.iter_mut().zip(&l).for_each(|(a, b)| *a -= b);
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            let ul = self.local_coeffs(c, u);
            let d = self.cell_dofs(c);
            for q in 0..cv.nq() {
                let val: f64 = cv.phi(q).iter().zip(&ul).map(|(a, b)| a * b).sum();
                let fu = flux.value(val);
                let g = cv.grad(q);
                for i in 0..n {
                    r[d[i]] -= cv.w[q] * dot(g[i], fu);
                }
            }
        }
        for f in 0..self.faces.len() {
            let fd = &self.face_data[f];
            let nrm = self.faces.get(f).normal;
            let fv = self.face_values(f, deg);
            let u1 = self.local_coeffs(fd.first.cell, u);
            let u2 = fd.second.as_ref().map(|s| self.local_coeffs(s.cell, u));
            let d1 = self.cell_dofs(fd.first.cell);
            for q in 0..fv.w.len() {
                let a: f64 = fv.first.phi(q).iter().zip(&u1).map(|(x, y)| x * y).sum();
                let b = match (&fv.second, &u2) {
                    (Some(tr), Some(u2)) => {
                        Some(tr.phi(q).iter().zip(u2).map(|(x, y)| x * y).sum::<f64>())
                    }
                    _ => None,
                };
                let phi = lax_friedrichs_flux(flux, a, self.face_state(f, fv.x[q], b), nrm).value;
                let w = fv.w[q] * phi;
                for i in 0..n {
                    r[d1[i]] += w * fv.first.phi(q)[i];
                }
                if let (Some(tr), Some(s)) = (&fv.second, &fd.second) {
                    let d2 = self.cell_dofs(s.cell);
                    for i in 0..n {
                        r[d2[i]] -= w * tr.phi(q)[i];
                    }
                }
            }
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResidual);
        }
        Ok(r)
    }

    /// Gâteaux derivative of `n_h(v; ·)` at `u` (rows: test, columns: trial).
    pub fn nonlinear_jacobian(&self, u: &[f64]) -> Result<CsrMatrix> {
        let flux = self.flux()?;
        let deg = Self::deg_nonlinear(self.space.degree());
        let n = self.nloc();
        let nf = self.faces.len();
        let mut t = TripletBuilder::with_capacity(
            self.ndofs(),
            self.ndofs(),
            self.geo.len() * n * n + 4 * nf * n * n,
        );
        let mut local = vec![0.0; n * n];
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            let ul = self.local_coeffs(c, u);
            local.iter_mut().for_each(|x| *x = 0.0);
            for q in 0..cv.nq() {
                let phi = cv.phi(q);
                let val: f64 = phi.iter().zip(&ul).map(|(a, b)| a * b).sum();
                let df = flux.derivative(val);
                let g = cv.grad(q);
                for i in 0..n {
                    let gi = cv.w[q] * dot(g[i], df);
                    for j in 0..n {
                        local[i * n + j] -= gi * phi[j];
                    }
                }
            }
            let d = self.cell_dofs(c);
            t.add_block(d, d, &local);
        }
        for f in 0..nf {
            let fd = &self.face_data[f];
            let nrm = self.faces.get(f).normal;
            let fv = self.face_values(f, deg);
            let u1 = self.local_coeffs(fd.first.cell, u);
            let u2 = fd.second.as_ref().map(|s| self.local_coeffs(s.cell, u));
            let m = if fd.second.is_some() { 2 * n } else { n };
            let mut block = vec![0.0; m * m];
            let mut jump = vec![0.0; m];
            let mut dphi = vec![0.0; m];
            for q in 0..fv.w.len() {
                let p1 = fv.first.phi(q);
                let a: f64 = p1.iter().zip(&u1).map(|(x, y)| x * y).sum();
                let b = match (&fv.second, &u2) {
                    (Some(tr), Some(u2)) => {
                        Some(tr.phi(q).iter().zip(u2).map(|(x, y)| x * y).sum::<f64>())
                    }
                    _ => None,
                };
                let nf = lax_friedrichs_flux(flux, a, self.face_state(f, fv.x[q], b), nrm);
                for i in 0..n {
                    jump[i] = p1[i];
                    dphi[i] = nf.d_first * p1[i];
                }
                if let Some(tr) = &fv.second {
                    let p2 = tr.phi(q);
                    for i in 0..n {
                        jump[n + i] = -p2[i];
                        dphi[n + i] = nf.d_second * p2[i];
                    }
                }
                let w = fv.w[q];
                for i in 0..m {
                    for j in 0..m {
                        block[i * m + j] += w * jump[i] * dphi[j];
                    }
                }
            }
            let d = self.face_dofs(f);
            t.add_block(&d, &d, &block);
        }
        Ok(self.swip().add(&t.build()))
    }

    /// `Σᵢ zᵢ ∂²rᵢ/∂u²`: the derivative of `J(u)ᵀz` with respect to `u`.
    /// Symmetric; only the convective terms contribute.
    pub fn nonlinear_hessian(&self, u: &[f64], z: &[f64]) -> Result<CsrMatrix> {
        let flux = self.flux()?;
        let deg = Self::deg_nonlinear(self.space.degree());
        let n = self.nloc();
        let nf = self.faces.len();
        let mut t = TripletBuilder::with_capacity(
            self.ndofs(),
            self.ndofs(),
            self.geo.len() * n * n + 4 * nf * n * n,
        );
        let mut local = vec![0.0; n * n];
        for c in 0..self.geo.len() {
            let cv = self.cell_values(c, deg);
            let ul = self.local_coeffs(c, u);
            let zl = self.local_coeffs(c, z);
            local.iter_mut().for_each(|x| *x = 0.0);
            for q in 0..cv.nq() {
                let phi = cv.phi(q);
                let val: f64 = phi.iter().zip(&ul).map(|(a, b)| a * b).sum();
                let mut gz = [0.0; 2];
                for (g, &zi) in cv.grad(q).iter().zip(&zl) {
                    gz[0] += zi * g[0];
                    gz[1] += zi * g[1];
                }
                let s = cv.w[q] * dot(gz, flux.second_derivative(val));
                for i in 0..n {
                    for j in 0..n {
                        local[i * n + j] -= s * phi[i] * phi[j];
                    }
                }
            }
            let d = self.cell_dofs(c);
            t.add_block(d, d, &local);
        }
        for f in 0..nf {
            let fd = &self.face_data[f];
            let nrm = self.faces.get(f).normal;
            let fv = self.face_values(f, deg);
            let u1 = self.local_coeffs(fd.first.cell, u);
            let z1 = self.local_coeffs(fd.first.cell, z);
            let u2 = fd.second.as_ref().map(|s| self.local_coeffs(s.cell, u));
            let z2 = fd.second.as_ref().map(|s| self.local_coeffs(s.cell, z));
            let m = if fd.second.is_some() { 2 * n } else { n };
            let mut block = vec![0.0; m * m];
            for q in 0..fv.w.len() {
                let p1 = fv.first.phi(q);
                let a: f64 = p1.iter().zip(&u1).map(|(x, y)| x * y).sum();
                let mut zjump: f64 = p1.iter().zip(&z1).map(|(x, y)| x * y).sum();
                let p2 = fv.second.as_ref().map(|tr| tr.phi(q));
                let b = match (p2, &u2, &z2) {
                    (Some(p2), Some(u2), Some(z2)) => {
                        zjump -= p2.iter().zip(z2).map(|(x, y)| x * y).sum::<f64>();
                        Some(p2.iter().zip(u2).map(|(x, y)| x * y).sum::<f64>())
                    }
                    _ => None,
                };
                let [h11, h12, h22] =
                    lax_friedrichs_flux(flux, a, self.face_state(f, fv.x[q], b), nrm).hessian;
                let s = fv.w[q] * zjump;
                for i in 0..n {
                    for j in 0..n {
                        block[i * m + j] += s * h11 * p1[i] * p1[j];
                    }
                }
                if let Some(p2) = p2 {
                    for i in 0..n {
                        for j in 0..n {
                            let cross = s * h12 * p1[i] * p2[j];
                            block[i * m + n + j] += cross;
                            block[(n + j) * m + i] += cross;
                            block[(n + i) * m + n + j] += s * h22 * p2[i] * p2[j];
                        }
                    }
                }
            }
            let d = self.face_dofs(f);
            t.add_block(&d, &d, &block);
        }
        Ok(t.build())
    }
}

/// Diffusion weights, with the degenerate case κ₁ = κ₂ = 0 (no diffusion) allowed.
fn face_weights(k1: &Tensor, k2: &Tensor, n: Point) -> Result<(f64, f64, f64)> {
    if normal_diffusivity(k1, n) == 0.0 && normal_diffusivity(k2, n) == 0.0 {
        return Ok((0.5, 0.5, 0.0));
    }
    diffusion_weights(k1, k2, n)
}

/// Value and gradient of a local expansion at one point.
fn combine(coeffs: &[f64], phi: &[f64], grad: &[Point]) -> (f64, Point) {
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for ((&c, &p), &d) in coeffs.iter().zip(phi).zip(grad) {
        v += c * p;
        g[0] += c * d[0];
        g[1] += c * d[1];
    }
    (v, g)
}

fn build_rule(space: &FunctionSpace, degree: usize) -> Rule {
    let el = space.element();
    let cell = quadrature_rule(Entity::Triangle, degree);
    let cell_tab = el.tabulate(&cell.points);
    let face = quadrature_rule(Entity::Edge, degree);
    let mut face_tabs = Vec::with_capacity(9);
    for i0 in 0..3 {
        for i1 in 0..3 {
            if i0 == i1 {
                face_tabs.push(None);
                continue;
            }
            let pts: Vec<Point> = face
                .points
                .iter()
                .map(|p| {
                    let mut lambda = [0.0; 3];
                    lambda[i0] = 1.0 - p[0];
                    lambda[i1] = p[0];
                    [lambda[1], lambda[2]]
                })
                .collect();
            face_tabs.push(Some(el.tabulate(&pts)));
        }
    }
    Rule {
        cell,
        cell_tab,
        face,
        face_tabs,
    }
}
