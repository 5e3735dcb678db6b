use super::problem::Flux;
use crate::Point;

/// Second trace seen by the numerical flux on a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceState {
    /// Trace `u₂` from the neighbouring cell.
    Interior(f64),
    /// Dirichlet datum `u_D`.
    Dirichlet(f64),
    /// Natural outflow: the physical flux of the interior trace.
    Neumann,
}

/// Lax-Friedrichs flux value with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalFlux {
    /// Φ
    pub value: f64,
    /// Local dissipation η_f.
    pub eta: f64,
    /// ∂Φ/∂u₁
    pub d_first: f64,
    /// ∂Φ/∂u₂ (zero off interior faces).
    pub d_second: f64,
    /// Second partials ∂²Φ/∂u₁², ∂²Φ/∂u₁∂u₂, ∂²Φ/∂u₂².
    pub hessian: [f64; 3],
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// d|x| with the convention d|0| = 0.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Lax-Friedrichs numerical flux Φ(u₁, ·; n) and its exact derivatives.
///
/// The dissipation η_f is the largest |𝑓′(w)·n| over the traces entering it
/// and is differentiated along the active branch of the max (branch `u₁` on
/// ties).
pub fn lax_friedrichs_flux(flux: &dyn Flux, u1: f64, state: FaceState, n: Point) -> NumericalFlux {
    let f1 = dot(flux.value(u1), n);
    let a1 = dot(flux.derivative(u1), n);
    let c1 = dot(flux.second_derivative(u1), n);
    let s1 = sign(a1) * c1;
    let t1 = sign(a1) * dot(flux.third_derivative(u1), n);
    match state {
        FaceState::Interior(u2) => {
            let f2 = dot(flux.value(u2), n);
            let a2 = dot(flux.derivative(u2), n);
            let jump = u1 - u2;
            if a1.abs() >= a2.abs() {
                let eta = a1.abs();
                NumericalFlux {
                    value: 0.5 * (f1 + f2 + eta * jump),
                    eta,
                    d_first: 0.5 * (a1 + eta + s1 * jump),
                    d_second: 0.5 * (a2 - eta),
                    hessian: [
                        0.5 * (c1 + 2.0 * s1 + t1 * jump),
                        -0.5 * s1,
                        0.5 * dot(flux.second_derivative(u2), n),
                    ],
                }
            } else {
                let eta = a2.abs();
                let c2 = dot(flux.second_derivative(u2), n);
                let s2 = sign(a2) * c2;
                let t2 = sign(a2) * dot(flux.third_derivative(u2), n);
                NumericalFlux {
                    value: 0.5 * (f1 + f2 + eta * jump),
                    eta,
                    d_first: 0.5 * (a1 + eta),
                    d_second: 0.5 * (a2 - eta + s2 * jump),
                    hessian: [0.5 * c1, 0.5 * s2, 0.5 * (c2 - 2.0 * s2 + t2 * jump)],
                }
            }
        }
        FaceState::Dirichlet(ud) => {
            let eta = a1.abs();
            let fd = dot(flux.value(ud), n);
            NumericalFlux {
                value: 0.5 * (f1 + eta * u1) + 0.5 * (fd - eta * ud),
                eta,
                d_first: 0.5 * (a1 + eta + s1 * (u1 - ud)),
                d_second: 0.0,
                hessian: [0.5 * (c1 + 2.0 * s1 + t1 * (u1 - ud)), 0.0, 0.0],
            }
        }
        FaceState::Neumann => NumericalFlux {
            value: f1,
            eta: a1.abs(),
            d_first: a1,
            d_second: 0.0,
            hessian: [c1, 0.0, 0.0],
        },
    }
}
