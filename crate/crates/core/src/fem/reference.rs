use crate::Point;

/// Where a Lagrange node sits on the reference triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(usize),
    /// Local edge `k` (opposite local vertex `k`), `j`-th interior node counted
    /// from vertex `(k + 1) % 3`.
    Edge {
        edge: usize,
        j: usize,
    },
    Interior(usize),
}

/// Equispaced Lagrange element of degree `p` on the reference triangle.
///
/// Nodes are ordered vertices first, then edge nodes per local edge, then
/// interior nodes. Each node is a barycentric multi-index α with |α| = p; the
/// basis function attached to it is
/// `Π_m Π_{a < α_m} (p λ_m − a) / (a + 1)`.
#[derive(Debug, Clone)]
pub struct LagrangeElement {
    degree: usize,
    alphas: Vec<[usize; 3]>,
    kinds: Vec<NodeKind>,
}

/// Gradients of λ₀ = 1 − ξ − η, λ₁ = ξ, λ₂ = η.
const GRAD_LAMBDA: [Point; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub fn num_nodes(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

impl LagrangeElement {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1);
        let p = degree;
        let mut alphas = Vec::with_capacity(num_nodes(p));
        let mut kinds = Vec::with_capacity(num_nodes(p));
        for i in 0..3 {
            let mut a = [0; 3];
            a[i] = p;
            alphas.push(a);
            kinds.push(NodeKind::Vertex(i));
        }
        for k in 0..3 {
            let (va, vb) = ((k + 1) % 3, (k + 2) % 3);
            for j in 1..p {
                let mut a = [0; 3];
                a[va] = p - j;
                a[vb] = j;
                alphas.push(a);
                kinds.push(NodeKind::Edge { edge: k, j });
            }
        }
        let mut idx = 0;
        for a2 in 1..p {
            for a1 in 1..p {
                if a1 + a2 < p {
                    alphas.push([p - a1 - a2, a1, a2]);
                    kinds.push(NodeKind::Interior(idx));
                    idx += 1;
                }
            }
        }
        debug_assert_eq!(alphas.len(), num_nodes(p));
        LagrangeElement {
            degree,
            alphas,
            kinds,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.alphas.len()
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    /// Reference coordinates of node `i`.
    pub fn node(&self, i: usize) -> Point {
        let p = self.degree as f64;
        [self.alphas[i][1] as f64 / p, self.alphas[i][2] as f64 / p]
    }

    pub fn nodes(&self) -> Vec<Point> {
        (0..self.num_nodes()).map(|i| self.node(i)).collect()
    }

    /// Basis values and reference gradients at `xi`.
    pub fn eval(&self, xi: Point) -> (Vec<f64>, Vec<Point>) {
        let mut v = vec![0.0; self.num_nodes()];
        let mut g = vec![[0.0; 2]; self.num_nodes()];
        self.eval_into(xi, &mut v, &mut g);
        (v, g)
    }

    pub fn eval_into(&self, xi: Point, values: &mut [f64], grads: &mut [Point]) {
        let p = self.degree;
        let pf = p as f64;
        let lambda = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
        // table[m][k] = Π_{a<k} (p λ_m − a)/(a+1) and its λ_m-derivative.
        let mut f = [[0.0; 8], [0.0; 8], [0.0; 8]];
        let mut df = [[0.0; 8], [0.0; 8], [0.0; 8]];
        assert!(p < 8, "degree {p} exceeds the supported range");
        for m in 0..3 {
            f[m][0] = 1.0;
            df[m][0] = 0.0;
            for k in 1..=p {
                let a = (k - 1) as f64;
                let factor = (pf * lambda[m] - a) / (a + 1.0);
                f[m][k] = f[m][k - 1] * factor;
                df[m][k] = df[m][k - 1] * factor + f[m][k - 1] * pf / (a + 1.0);
            }
        }
        for (i, a) in self.alphas.iter().enumerate() {
            let (f0, f1, f2) = (f[0][a[0]], f[1][a[1]], f[2][a[2]]);
            values[i] = f0 * f1 * f2;
            let d = [
                df[0][a[0]] * f1 * f2,
                f0 * df[1][a[1]] * f2,
                f0 * f1 * df[2][a[2]],
            ];
            grads[i] = [
                d[0] * GRAD_LAMBDA[0][0] + d[1] * GRAD_LAMBDA[1][0] + d[2] * GRAD_LAMBDA[2][0],
                d[0] * GRAD_LAMBDA[0][1] + d[1] * GRAD_LAMBDA[1][1] + d[2] * GRAD_LAMBDA[2][1],
            ];
        }
    }

    /// Basis values and reference gradients at each point.
    pub fn tabulate(&self, points: &[Point]) -> Tabulation {
        let n = self.num_nodes();
        let mut values = vec![0.0; points.len() * n];
        let mut grads = vec![[0.0; 2]; points.len() * n];
        for (q, &x) in points.iter().enumerate() {
            self.eval_into(
                x,
                &mut values[q * n..(q + 1) * n],
                &mut grads[q * n..(q + 1) * n],
            );
        }
        Tabulation { n, values, grads }
    }
}

/// Basis values and reference gradients at a set of points, stored point-major.
#[derive(Debug, Clone)]
pub struct Tabulation {
    n: usize,
    values: Vec<f64>,
    grads: Vec<Point>,
}

impl Tabulation {
    #[inline]
    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n..(q + 1) * self.n]
    }

    #[inline]
    pub fn grads(&self, q: usize) -> &[Point] {
        &self.grads[q * self.n..(q + 1) * self.n]
    }
}

/// `eval_basis(p, ξ)` as a free function.
pub fn eval_basis(p: usize, xi: Point) -> (Vec<f64>, Vec<Point>) {
    LagrangeElement::new(p).eval(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_property() {
        for p in 1..=5 {
            let e = LagrangeElement::new(p);
            for i in 0..e.num_nodes() {
                let (v, _) = e.eval(e.node(i));
                for (j, vj) in v.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - want).abs() < 1e-12, "p={p} node {i} basis {j}: {vj}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        for p in 1..=5 {
            for xi in [[0.1, 0.2], [0.7, 0.05], [0.0, 0.0], [0.3, 0.7]] {
                let (v, g) = eval_basis(p, xi);
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let s = g.iter().fold([0.0, 0.0], |a, b| [a[0] + b[0], a[1] + b[1]]);
                assert!(s[0].abs() < 1e-11 && s[1].abs() < 1e-11);
            }
        }
    }

    #[test]
    fn p1_is_barycentric() {
        let (v, g) = eval_basis(1, [0.25, 0.5]);
        assert_eq!(v, vec![0.25, 0.25, 0.5]);
        assert_eq!(g, vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        for i in 0..3 {
            let (v, _) = eval_basis(1, LagrangeElement::new(1).node(i));
            assert_eq!(v.iter().position(|&x| x == 1.0), Some(i));
        }
    }

    #[test]
    fn p2_edge_midpoint() {
        let e = LagrangeElement::new(2);
        // Edge 0 joins local vertices 1 and 2; its midpoint is (1/2, 1/2).
        assert_eq!(e.kind(3), NodeKind::Edge { edge: 0, j: 1 });
        assert_eq!(e.node(3), [0.5, 0.5]);
        let (v, _) = e.eval([0.5, 0.5]);
        assert!((v[3] - 1.0).abs() < 1e-15);
        assert!(v.iter().enumerate().all(|(i, x)| i == 3 || x.abs() < 1e-15));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        for p in 1..=4 {
            let e = LagrangeElement::new(p);
            let x = [0.21, 0.33];
            let (_, g) = e.eval(x);
            let (vx1, _) = e.eval([x[0] + h, x[1]]);
            let (vx0, _) = e.eval([x[0] - h, x[1]]);
            let (vy1, _) = e.eval([x[0], x[1] + h]);
            let (vy0, _) = e.eval([x[0], x[1] - h]);
            for i in 0..e.num_nodes() {
                assert!((g[i][0] - (vx1[i] - vx0[i]) / (2.0 * h)).abs() < 1e-7);
                assert!((g[i][1] - (vy1[i] - vy0[i]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }
}
