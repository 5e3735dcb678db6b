use crate::Point;

/// Reference entity a rule integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    /// Triangle (0,0), (1,0), (0,1); measure 1/2.
    Triangle,
    /// Unit interval [0,1]; points are stored as `[t, 0]`; measure 1.
    Edge,
}

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomials up to this total degree are integrated exactly.
    pub degree: usize,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

pub fn quadrature_rule(entity: Entity, degree: usize) -> Quadrature {
    match entity {
        Entity::Triangle => triangle(degree),
        Entity::Edge => edge(degree),
    }
}

/// Gauss–Legendre rule with `n` points on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // Map from [-1, 1] to [0, 1]; nodes come out in descending z.
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let prev = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (z * p - prev) / (z * z - 1.0);
    (p, d)
}

fn edge(degree: usize) -> Quadrature {
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    Quadrature {
        points: x.into_iter().map(|t| [t, 0.0]).collect(),
        weights: w,
        degree: 2 * n.max(1) - 1,
    }
}

fn triangle(degree: usize) -> Quadrature {
    match degree {
        0 | 1 => Quadrature {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
            degree: 1,
        },
        2 => Quadrature {
            points: vec![
                [1.0 / 6.0, 1.0 / 6.0],
                [2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0],
            ],
            weights: vec![1.0 / 6.0; 3],
            degree: 2,
        },
        d => {
            // Collapsed (Duffy) tensor rule: ξ = u, η = (1 − u) v, dξ dη = (1 − u) du dv.
            let n = (d + 3) / 2;
            let (x, w) = gauss_legendre(n);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for (&u, &wu) in x.iter().zip(&w) {
                for (&v, &wv) in x.iter().zip(&w) {
                    points.push([u, (1.0 - u) * v]);
                    weights.push(wu * wv * (1.0 - u));
                }
            }
            Quadrature {
                points,
                weights,
                degree: 2 * n - 2,
            }
        }
    }
}
