//! Theta-function sections of the background line bundles.
//!
//! In the holomorphic frame, L_d (deg = d ≥ 1) has the factors of automorphy
//! s(z+1) = s(z), s(z+τ) = e^{−πid(2z+τ)} s(z), and h⁰ = d with basis
//!
//! ```text
//! θ_j(z) = Σ_k exp(πiτd(k + j/d)² + 2πidz(k + j/d)),   j = 0..d−1.
//! ```
//!
//! We store sections in the background-orthonormal frame, i.e. multiplied by
//! H₀^{1/2} = exp(−πd·Imτ·y²); the summands then carry the Gaussian weight
//! exp(−πd·Imτ·(k + j/d + y)²), so a short symmetric window in k is exact to
//! rounding. Unitary-frame sections are plain-periodic in x and wrap in y with
//! the pure phase χ_d of `geometry`.

use crate::geometry::{GridField, TorusGeometry};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

/// Unitary-frame theta basis section of L_d (d ≥ 1, 0 ≤ j < d), sampled on
/// the grid as a rank-1 column of weight d.
pub fn theta_section(geo: &TorusGeometry, d: u32, j: u32) -> GridField {
    assert!(d >= 1 && j < d, "theta basis needs d ≥ 1, 0 ≤ j < d");
    let tau = geo.tau;
    let dd = d as f64;
    let c = j as f64 / dd;
    // exp(−π d Imτ t²) < 1e−18 once π d Imτ t² > 42
    let reach = (42.0 / (PI * dd * tau.im)).sqrt();
    let kmax = reach.ceil() as i64 + 2;
    GridField::from_fn(geo.n, vec![d as i32], vec![0], move |x, y, s| {
        let mut acc = C::new(0.0, 0.0);
        for k in -kmax..=kmax {
            let a = k as f64 + c;
            let e = C::new(0.0, PI) * tau * (dd * a * a)
                + C::new(0.0, 2.0 * PI * dd * a) * (C::new(x, 0.0) + tau * y)
                + C::new(-PI * dd * tau.im * y * y, 0.0);
            acc += e.exp();
        }
        s[0] = acc;
    })
}

/// Fixed gentle positive profile used to modulate cocycle entries; mean 1,
/// band-limited to the first Fourier modes so it adds no stencil stress.
pub fn bump(geo: &TorusGeometry) -> GridField {
    GridField::from_fn(geo.n, vec![0], vec![0], |x, y, s| {
        s[0] = C::new(
            1.0 + 0.25 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos()),
            0.0,
        );
    })
}

/// Carrier of weight w ≥ 0: constants for w = 0, the first theta section of
/// L_w otherwise. Used to give off-diagonal data the right automorphy.
pub fn carrier(geo: &TorusGeometry, w: i32) -> GridField {
    assert!(w >= 0);
    if w == 0 {
        GridField::from_fn(geo.n, vec![0], vec![0], |_, _, s| s[0] = C::new(1.0, 0.0))
    } else {
        let mut f = theta_section(geo, w as u32, 0);
        f.row_weights = vec![w];
        f
    }
}

/// Strictly upper-triangular extension cocycle ũ for the given non-increasing
/// degree vector: entry (a, b), a < b, is amplitude · bump · carrier(d_a−d_b).
/// This is the (0,1)-connection datum deforming ⊕L_{d_a}.
pub fn cocycle_field(geo: &TorusGeometry, degrees: &[i32], amplitude: f64) -> GridField {
    let r = degrees.len();
    let n = geo.n;
    let mut u = GridField::zeros(n, degrees.to_vec(), degrees.to_vec());
    let bump = bump(geo);
    for a in 0..r {
        for b in a + 1..r {
            let w = degrees[a] - degrees[b];
            let carr = carrier(geo, w);
            for p in 0..n * n {
                u.data[(p * r + a) * r + b] = amplitude * bump.data[p] * carr.data[p];
            }
        }
    }
    u
}

/// Least-squares fit of the connection coefficient in (∂̂_z̄ + c·y)·θ̃ ≈ 0 for
/// the degree-1 section, plus the residual after the fit. The exact continuum
/// value is c = πi; this is the startup self-check that grid, twist phases and
/// stencils agree with the background geometry.
pub struct CalibrationReport {
    pub connection_coefficient: C,
    pub fit_residual: f64,
}

pub fn calibrate_background(geo: &TorusGeometry) -> CalibrationReport {
    let th = theta_section(geo, 1, 0);
    let dth = geo.d_bar(&th);
    let mut yth = th.clone();
    let n = geo.n;
    for p in 0..n * n {
        let y = (p / n) as f64 / n as f64;
        yth.data[p] *= y;
    }
    // minimize ‖dth + c·yth‖² ⇒ c = −⟨dth, yth⟩/‖yth‖²
    let c = -dth.l2_inner(&yth) / yth.l2_norm_sq();
    let mut res = dth;
    res.add_scaled(c, &yth);
    CalibrationReport {
        connection_coefficient: c,
        fit_residual: (res.l2_norm_sq() / th.l2_norm_sq()).sqrt(),
    }
}
