//! Sparse storage and direct solvers.
//!
//! Factorizations are delegated to `faer` (sparse LU with partial pivoting for
//! general and saddle-point systems, supernodal Cholesky for SPD systems).
//! Every solve is followed by iterative refinement and a residual check, so a
//! returned solution always satisfies the stated accuracy contract.

mod sparse;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::{Mat, Side};

pub use sparse::{axpy, dot, norm2, norm_inf, CsrMatrix, TripletBuilder};

use crate::{Error, Result};

/// Fill-reducing orderings used by the backends, reported in run metadata.
pub const FILL_REDUCING_ORDERING: &str = "COLAMD (sparse LU), AMD (sparse Cholesky)";

const REFINEMENT_STEPS: usize = 3;

enum Factor {
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
}

/// A factorized square matrix, reusable for several right-hand sides.
pub struct Factorization {
    matrix: CsrMatrix,
    factor: Factor,
}

impl Factorization {
    /// LU with partial pivoting.
    pub fn lu(a: &CsrMatrix) -> Result<Self> {
        check_square(a)?;
        let lu = a.to_faer().sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => {
                Error::Singular(format!("structurally singular at pivot {index}"))
            }
            LuError::Generic(e) => Error::Factorization(format!("{e:?}")),
        })?;
        Ok(Factorization {
            matrix: a.clone(),
            factor: Factor::Lu(lu),
        })
    }

    /// Cholesky; fails on matrices that are not symmetric positive definite.
    pub fn cholesky(a: &CsrMatrix) -> Result<Self> {
        check_square(a)?;
        let llt = a.to_faer().sp_cholesky(Side::Lower).map_err(|e| {
            Error::Factorization(format!("Cholesky breakdown (matrix not SPD): {e:?}"))
        })?;
        Ok(Factorization {
            matrix: a.clone(),
            factor: Factor::Llt(llt),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::zeros(b.len(), 1);
        for (i, &v) in b.iter().enumerate() {
            rhs[(i, 0)] = v;
        }
        let x = match &self.factor {
            Factor::Lu(lu) => lu.solve(&rhs),
            Factor::Llt(llt) => llt.solve(&rhs),
        };
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solves with iterative refinement; no accuracy check.
    pub fn solve_refined(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.dim());
        let mut x = self.raw_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(
                "factorization produced a non-finite solution".into(),
            ));
        }
        let mut res = residual(&self.matrix, &x, b);
        let mut res_norm = norm_inf(&res);
        for _ in 0..REFINEMENT_STEPS {
            if res_norm == 0.0 {
                break;
            }
            let dx = self.raw_solve(&res);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let cand_res = residual(&self.matrix, &cand, b);
            let cand_norm = norm_inf(&cand_res);
            if !(cand_norm < res_norm) {
                break;
            }
            x = cand;
            res = cand_res;
            res_norm = cand_norm;
        }
        Ok(x)
    }

    /// Solves `A x = b` and checks `‖Ax − b‖∞ ≤ tol · (‖b‖∞ + 1)`.
    pub fn solve_checked(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let x = self.solve_refined(b)?;
        let r = norm_inf(&residual(&self.matrix, &x, b));
        let scale = norm_inf(b) + 1.0;
        if !(r <= tol * scale) {
            return Err(Error::Accuracy {
                residual: r / scale,
                tolerance: tol,
            });
        }
        Ok(x)
    }
}

fn check_square(a: &CsrMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Factorization(format!(
            "matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `b − A x`
pub fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solves an SPD system to `‖Gx − b‖∞ ≤ 1e-10 (‖b‖∞ + 1)`.
pub fn solve_spd(g: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Factorization::cholesky(g)?.solve_checked(b, 1e-10)
}

/// Solves a general nonsingular system to `‖Ax − b‖∞ ≤ 1e-9 (‖b‖∞ + 1)`.
pub fn solve_square(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Factorization::lu(a)?.solve_checked(b, 1e-9)
}

/// Block system `[[G, B̄], [B̄ᵀ, 0]] [ε; ū] = [ℓ; r₂]`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    /// Gram matrix of the broken-space inner product (n × n, SPD).
    pub gram: CsrMatrix,
    /// Coarse operator B̄ = B·E (n × m).
    pub coarse: CsrMatrix,
    /// First-block right-hand side ℓ (length n).
    pub rhs: Vec<f64>,
    /// Second-block right-hand side (length m); zero for the linear problem.
    pub constraint_rhs: Option<Vec<f64>>,
    /// Optional symmetric (2,2) block C (m × m); zero for the linear problem.
    pub curvature: Option<CsrMatrix>,
}

/// Relative tolerance of both block equations after a saddle solve.
pub const SADDLE_TOLERANCE: f64 = 1e-9;

impl SaddleSystem {
    pub fn new(gram: CsrMatrix, coarse: CsrMatrix, rhs: Vec<f64>) -> Self {
        SaddleSystem {
            gram,
            coarse,
            rhs,
            constraint_rhs: None,
            curvature: None,
        }
    }

    pub fn broken_dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.ncols()
    }

    /// Block residuals `(ℓ − Gε − B̄ū, r₂ − B̄ᵀε − Cū)` and the normwise scale they are measured against.
    pub fn residuals(&self, eps: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let ge = self.gram.mul_vec(eps);
        let bu = self.coarse.mul_vec(u);
        let r1: Vec<f64> = (0..eps.len())
            .map(|i| self.rhs[i] - ge[i] - bu[i])
            .collect();
        let mut bte = self.coarse.transpose_mul_vec(eps);
        if let Some(c) = &self.curvature {
            bte.iter_mut().zip(c.mul_vec(u)).for_each(|(a, b)| *a += b);
        }
        let r2: Vec<f64> = match &self.constraint_rhs {
            Some(c) => c.iter().zip(&bte).map(|(a, b)| a - b).collect(),
            None => bte.iter().map(|v| -v).collect(),
        };
        let scale = norm_inf(&self.rhs)
            + self.constraint_rhs.as_deref().map_or(0.0, norm_inf)
            + self.gram.norm_inf() * norm_inf(eps)
            + self.coarse.norm_inf() * norm_inf(u)
            + self.coarse.transpose().norm_inf() * norm_inf(eps)
            + self
                .curvature
                .as_ref()
                .map_or(0.0, |c| c.norm_inf() * norm_inf(u));
        (r1, r2, scale)
    }
}

/// Solves the saddle-point system by a sparse LU of the full block matrix.
///
/// Returns `(ε, ū)` satisfying both block equations to [`SADDLE_TOLERANCE`]
/// relative to the normwise scale from [`SaddleSystem::residuals`].
pub fn solve_saddle(sys: &SaddleSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = sys.broken_dim();
    let m = sys.coarse_dim();
    if m > n {
        return Err(Error::Singular(format!(
            "coarse space ({m}) larger than test space ({n})"
        )));
    }
    let mut k = CsrMatrix::saddle_block(&sys.gram, &sys.coarse);
    if let Some(c) = &sys.curvature {
        k = k.add(&CsrMatrix::from_triplets(
            n + m,
            n + m,
            c.iter().map(|(i, j, v)| (n + i, n + j, v)).collect(),
        ));
    }
    let mut b = sys.rhs.clone();
    match &sys.constraint_rhs {
        Some(c) => b.extend_from_slice(c),
        None => b.resize(n + m, 0.0),
    }
    let f = Factorization::lu(&k)?;
    let x = f.solve_refined(&b)?;
    let (eps, u) = (x[..n].to_vec(), x[n..].to_vec());
    let (r1, r2, scale) = sys.residuals(&eps, &u);
    let worst = norm_inf(&r1).max(norm_inf(&r2));
    if !(worst <= SADDLE_TOLERANCE * scale) {
        return Err(Error::Accuracy {
            residual: worst / scale.max(f64::MIN_POSITIVE),
            tolerance: SADDLE_TOLERANCE,
        });
    }
    Ok((eps, u))
}

#[cfg(test)]
pub(crate) mod dense {
    //! Dense Gaussian elimination with partial pivoting, used as a test oracle.

    pub fn solve(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut m = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    m.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            for i in k + 1..n {
                let f = m[i * n + k] / m[k * n + k];
                for j in k..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| m[k * n + j] * x[j]).sum();
            x[k] = (x[k] - s) / m[k * n + k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut impl Rng) -> CsrMatrix {
        let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = (0..n).map(|k| a[k * n + i] * a[k * n + j]).sum::<f64>();
            }
            g[i * n + i] += n as f64;
        }
        CsrMatrix::from_dense(n, n, &g)
    }

    #[test]
    fn spd_examples() {
        let i = CsrMatrix::identity(4);
        let b = vec![1.0, -2.0, 3.0, 0.5];
        assert_eq!(solve_spd(&i, &b).unwrap(), b);
        let g = CsrMatrix::from_dense(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let x = solve_spd(&g, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert_eq!(solve_spd(&g, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn spd_rejects_indefinite() {
        let g = CsrMatrix::from_dense(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            solve_spd(&g, &[1.0, 1.0]),
            Err(Error::Factorization(_))
        ));
    }

    #[test]
    fn square_examples() {
        let i = CsrMatrix::identity(3);
        assert_eq!(
            solve_square(&i, &[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        // [[2,1,1],[0,1,2],[0,0,4]] x = [7, 8, 12] → back substitution gives x = (1, 2, 3).
        let u = CsrMatrix::from_dense(3, 3, &[2.0, 1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 4.0]);
        let x = solve_square(&u, &[7.0, 8.0, 12.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(solve_square(&u, &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let s = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 1.0)]);
        assert!(matches!(
            solve_square(&s, &[1.0, 1.0]),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn saddle_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, m) = (10, 4);
        let g = random_spd(n, &mut rng);
        let bd: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = CsrMatrix::from_dense(n, m, &bd);
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sys = SaddleSystem::new(g.clone(), b.clone(), l.clone());
        let (eps, u) = solve_saddle(&sys).unwrap();

        let k = CsrMatrix::saddle_block(&g, &b).to_dense();
        let mut rhs = l.clone();
        rhs.resize(n + m, 0.0);
        let x = dense::solve(n + m, &k, &rhs);
        for i in 0..n {
            assert!((eps[i] - x[i]).abs() < 1e-10);
        }
        for j in 0..m {
            assert!((u[j] - x[n + j]).abs() < 1e-10);
        }
    }

    #[test]
    fn saddle_with_curvature_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (n, m) = (9, 3);
        let g = random_spd(n, &mut rng);
        let bd: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut cd = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let v = rng.gen_range(-0.5..0.5);
                cd[i * m + j] = v;
                cd[j * m + i] = v;
            }
        }
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c2: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sys = SaddleSystem {
            constraint_rhs: Some(c2.clone()),
            curvature: Some(CsrMatrix::from_dense(m, m, &cd)),
            ..SaddleSystem::new(g.clone(), CsrMatrix::from_dense(n, m, &bd), l.clone())
        };
        let (eps, u) = solve_saddle(&sys).unwrap();

        let s = n + m;
        let gd = g.to_dense();
        let mut k = vec![0.0; s * s];
        for i in 0..n {
            for j in 0..n {
                k[i * s + j] = gd[i * n + j];
            }
            for j in 0..m {
                k[i * s + n + j] = bd[i * m + j];
                k[(n + j) * s + i] = bd[i * m + j];
            }
        }
        for i in 0..m {
            for j in 0..m {
                k[(n + i) * s + n + j] = cd[i * m + j];
            }
        }
        let x = dense::solve(s, &k, &[l, c2].concat());
        for (a, b) in eps.iter().chain(&u).zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn saddle_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let g = random_spd(n, &mut rng);
        // Full trial space: the residual is zero and ū solves B ū = ℓ.
        let bd: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = CsrMatrix::from_dense(n, n, &bd);
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (eps, u) = solve_saddle(&SaddleSystem::new(g.clone(), b.clone(), l.clone())).unwrap();
        assert!(norm_inf(&eps) < 1e-12);
        let theta = dense::solve(n, &bd, &l);
        for (a, t) in u.iter().zip(&theta) {
            assert!((a - t).abs() < 1e-10);
        }
        let (eps, u) = solve_saddle(&SaddleSystem::new(g, b, vec![0.0; n])).unwrap();
        assert!(eps.iter().chain(&u).all(|&v| v == 0.0));
    }
}
