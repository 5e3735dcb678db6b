use crate::mesh::CellGeometry;
use crate::{Error, Point, Result};

pub type Tensor = [[f64; 2]; 2];

/// `n · κ n`
pub fn normal_diffusivity(k: &Tensor, n: Point) -> f64 {
    n[0] * (k[0][0] * n[0] + k[0][1] * n[1]) + n[1] * (k[1][0] * n[0] + k[1][1] * n[1])
}

/// Face weights `(ω₁, ω₂, γ_κ)` from the normal diffusivities `δᵢ = n·κᵢn`:
/// `ωᵢ = δᵢ/(δ₁+δ₂)` and the harmonic mean `γ_κ = 2δ₁δ₂/(δ₁+δ₂)`.
pub fn diffusion_weights(k1: &Tensor, k2: &Tensor, n: Point) -> Result<(f64, f64, f64)> {
    let d1 = normal_diffusivity(k1, n);
    let d2 = normal_diffusivity(k2, n);
    for d in [d1, d2] {
        if !(d > 0.0) {
            return Err(Error::NonPositiveDiffusivity(d));
        }
    }
    let s = d1 + d2;
    Ok((d1 / s, d2 / s, 2.0 * d1 * d2 / s))
}

/// Interior-penalty parameter η_e of a face in 2D: `(p+1)(p+2)/2` times the
/// mean of `𝒜(∂K)/𝒱(K)` over the incident cells.
pub fn penalty_eta_e(first: &CellGeometry, second: Option<&CellGeometry>, p: usize) -> f64 {
    let d = 2.0;
    let c = (p as f64 + 1.0) * (p as f64 + d) / d;
    let r1 = first.perimeter / first.area;
    match second {
        Some(g) => c * 0.5 * (r1 + g.perimeter / g.area),
        None => c * r1,
    }
}
