//! Flat torus geometry, weighted matrix fields, and twisted stencils.
//!
//! The torus is parameterized by (x, y) ∈ [0,1)² with z = x + τy, Im τ > 0,
//! and carries the unit-volume flat Kähler form ω = dx∧dy. Everything is
//! stored in a background-orthonormal frame, so a field entry of weight w
//! (row degree minus column degree) is plain-periodic in x and picks up the
//! unit-modulus factor
//!
//! ```text
//! χ_w(x, y) = exp(−πi·w·(2x + Re τ·(2y + 1)))
//! ```
//!
//! when the y index wraps. Derivatives in z, z̄ are central finite-difference
//! combinations of the twisted x/y stencils.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Central-difference order used by the main pipeline.
pub const DEFAULT_STENCIL_ORDER: usize = 6;

/// Coefficients of the positive taps of the antisymmetric first-derivative
/// stencil (tap k carries +c[k−1], tap −k carries −c[k−1]; scale 1/h applied
/// at use).
fn stencil_coeffs(order: usize) -> &'static [f64] {
    match order {
        4 => &[8.0 / 12.0, -1.0 / 12.0],
        6 => &[45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0],
        8 => &[672.0 / 840.0, -168.0 / 840.0, 32.0 / 840.0, -3.0 / 840.0],
        _ => panic!("unsupported stencil order {order} (use 4, 6 or 8)"),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("tau must have positive imaginary part, got {0}")]
    BadTau(C),
    #[error("n_grid must be even and at least 16, got {0}")]
    BadGrid(usize),
}

/// Flat torus C/(Z + τZ) with an n×n uniform grid.
#[derive(Clone, Debug)]
pub struct TorusGeometry {
    pub tau: C,
    pub n: usize,
    pub stencil_order: usize,
    // d_z = czx·∂x + czy·∂y, d_z̄ = cbx·∂x + cby·∂y
    czx: C,
    czy: C,
    cbx: C,
    cby: C,
}

impl TorusGeometry {
    pub fn new(tau: C, n: usize) -> Result<Self, GeometryError> {
        Self::with_stencil_order(tau, n, DEFAULT_STENCIL_ORDER)
    }

    pub fn with_stencil_order(tau: C, n: usize, order: usize) -> Result<Self, GeometryError> {
        // NaN-safe form: non-finite tau must also be rejected
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(tau.im > 0.0) || !tau.is_finite() {
            return Err(GeometryError::BadTau(tau));
        }
        if n < 16 || !n.is_multiple_of(2) {
            return Err(GeometryError::BadGrid(n));
        }
        let _ = stencil_coeffs(order);
        // ∂x = ∂z + ∂z̄, ∂y = τ∂z + τ̄∂z̄  ⇒  ∂z = (∂y − τ̄∂x)/(2i Im τ),
        // ∂z̄ = (τ∂x − ∂y)/(2i Im τ).
        let den = C::new(0.0, 2.0 * tau.im);
        Ok(Self {
            tau,
            n,
            stencil_order: order,
            czx: -tau.conj() / den,
            czy: C::new(1.0, 0.0) / den,
            cbx: tau / den,
            cby: C::new(-1.0, 0.0) / den,
        })
    }

    /// Grid spacing in the (x, y) chart.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Weight of one quadrature node (uniform rule, unit total volume).
    pub fn quad_weight(&self) -> f64 {
        let n = self.n as f64;
        1.0 / (n * n)
    }

    /// Contraction factor λ such that Λ(i α dz∧dz̄) = λ·α against ω = dx∧dy.
    pub fn lambda_factor(&self) -> f64 {
        self.tau.im / PI
    }

    /// dz∧dz̄ component of ω (so that lambda_factor × this = 1 = dim).
    pub fn kahler_raw(&self) -> f64 {
        PI / self.tau.im
    }

    /// Automorphy phase χ_w for a y-wrap, evaluated at chart point (xf, yf).
    #[inline]
    fn wrap_phase(&self, w: i32, xf: f64, yf: f64) -> C {
        if w == 0 {
            return C::new(1.0, 0.0);
        }
        let arg = -PI * w as f64 * (2.0 * xf + self.tau.re * (2.0 * yf + 1.0));
        C::from_polar(1.0, arg)
    }

    /// Value of entry (i, j) of `f` at integer coordinates (x, ys) where ys
    /// may lie outside [0, n): y-wraps apply χ_w, x-wraps are plain.
    #[inline]
    fn ghost_entry(&self, f: &GridField, x: usize, ys: isize, i: usize, j: usize) -> C {
        let n = self.n as isize;
        let w = f.row_weights[i] - f.col_weights[j];
        if ys >= n {
            let yin = (ys - n) as usize;
            let v = f.entry(x, yin, i, j);
            if w == 0 {
                v
            } else {
                v * self.wrap_phase(w, x as f64 / self.n as f64, yin as f64 / self.n as f64)
            }
        } else if ys < 0 {
            let yin = (ys + n) as usize;
            let v = f.entry(x, yin, i, j);
            if w == 0 {
                v
            } else {
                // ghost(y) = χ_w(y)⁻¹ · stored(y + 1); |χ| = 1 so inverse = conj
                v * self
                    .wrap_phase(w, x as f64 / self.n as f64, ys as f64 / self.n as f64)
                    .conj()
            }
        } else {
            f.entry(x, ys as usize, i, j)
        }
    }

    /// ∂x by the configured central stencil (plain periodic wrap).
    pub fn dx(&self, f: &GridField) -> GridField {
        let coeffs = stencil_coeffs(self.stencil_order);
        let n = self.n;
        let scale = n as f64;
        let pt = f.rows * f.cols;
        let mut out = f.clone_shape();
        out.data
            .par_chunks_mut(pt)
            .enumerate()
            .for_each(|(p, slot)| {
                let y = p / n;
                let x = p % n;
                for (e, s) in slot.iter_mut().enumerate() {
                    let mut acc = C::new(0.0, 0.0);
                    for (k, &c) in coeffs.iter().enumerate() {
                        let xp = (x + k + 1) % n;
                        let xm = (x + n - (k + 1)) % n;
                        acc += c * (f.data[(y * n + xp) * pt + e] - f.data[(y * n + xm) * pt + e]);
                    }
                    *s = acc * scale;
                }
            });
        out
    }

    /// ∂y by the configured central stencil with automorphy ghosts.
    pub fn dy(&self, f: &GridField) -> GridField {
        let coeffs = stencil_coeffs(self.stencil_order);
        let n = self.n;
        let scale = n as f64;
        let pt = f.rows * f.cols;
        let cols = f.cols;
        let halo = coeffs.len();
        let mut out = f.clone_shape();
        out.data
            .par_chunks_mut(pt)
            .enumerate()
            .for_each(|(p, slot)| {
                let y = p / n;
                let x = p % n;
                let interior = y >= halo && y + halo < n;
                for (e, s) in slot.iter_mut().enumerate() {
                    let mut acc = C::new(0.0, 0.0);
                    if interior {
                        for (k, &c) in coeffs.iter().enumerate() {
                            let yp = y + k + 1;
                            let ym = y - (k + 1);
                            acc += c
                                * (f.data[(yp * n + x) * pt + e] - f.data[(ym * n + x) * pt + e]);
                        }
                    } else {
                        let (i, j) = (e / cols, e % cols);
                        for (k, &c) in coeffs.iter().enumerate() {
                            let yp = y as isize + (k + 1) as isize;
                            let ym = y as isize - (k + 1) as isize;
                            acc += c
                                * (self.ghost_entry(f, x, yp, i, j)
                                    - self.ghost_entry(f, x, ym, i, j));
                        }
                    }
                    *s = acc * scale;
                }
            });
        out
    }

    /// ∂z f = czx·∂x f + czy·∂y f.
    pub fn d_z(&self, f: &GridField) -> GridField {
        let mut out = self.dx(f);
        out.scale(self.czx);
        out.add_scaled(self.czy, &self.dy(f));
        out
    }

    /// ∂z̄ f = cbx·∂x f + cby·∂y f.
    pub fn d_bar(&self, f: &GridField) -> GridField {
        let mut out = self.dx(f);
        out.scale(self.cbx);
        out.add_scaled(self.cby, &self.dy(f));
        out
    }

    /// Add the background connection term πi·y·w_ij to a z or z̄ derivative;
    /// both legs carry the same coefficient for the Gaussian background
    /// weights exp(−2π·d·Imτ·y²).
    fn add_background_term(&self, f: &GridField, out: &mut GridField) {
        let n = self.n;
        let (rows, cols) = (f.rows, f.cols);
        let pt = rows * cols;
        let row_w = f.row_weights.clone();
        let col_w = f.col_weights.clone();
        out.data
            .par_chunks_mut(pt)
            .enumerate()
            .for_each(|(p, slot)| {
                let y = (p / n) as f64 / n as f64;
                for i in 0..rows {
                    for j in 0..cols {
                        let w = (row_w[i] - col_w[j]) as f64;
                        if w != 0.0 {
                            slot[i * cols + j] +=
                                C::new(0.0, PI * w * y) * f.data[p * pt + i * cols + j];
                        }
                    }
                }
            });
    }

    /// Background-covariant ∇̂_z f = ∂z f + πi·y·w·f (entrywise weights).
    pub fn cov_dz(&self, f: &GridField) -> GridField {
        let mut out = self.d_z(f);
        self.add_background_term(f, &mut out);
        out
    }

    /// Background-covariant ∇̂_z̄ f = ∂z̄ f + πi·y·w·f (entrywise weights).
    pub fn cov_dbar(&self, f: &GridField) -> GridField {
        let mut out = self.d_bar(f);
        self.add_background_term(f, &mut out);
        out
    }

    /// Largest eigenvalue of the discrete heat operator −λ·∂z∂z̄ over all grid
    /// modes: κ·n²·|τ·sx − sy|²/(4 Imτ²) maximized over the stencil symbols
    /// sx, sy. An explicit Euler step is stable only for dt < 2/this, so flow
    /// drivers cap their step accordingly.
    pub fn heat_symbol_max(&self) -> f64 {
        let coeffs = stencil_coeffs(self.stencil_order);
        let n = self.n;
        let symbol = |theta: f64| -> f64 {
            2.0 * coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * ((k + 1) as f64 * theta).sin())
                .sum::<f64>()
        };
        let mut worst = 0.0f64;
        for a in 0..n {
            let sx = symbol(2.0 * PI * a as f64 / n as f64);
            for b in 0..n {
                let sy = symbol(2.0 * PI * b as f64 / n as f64);
                let v = (self.tau * sx - sy).norm_sqr();
                worst = worst.max(v);
            }
        }
        self.lambda_factor() * (n as f64 * n as f64) * worst / (4.0 * self.tau.im * self.tau.im)
    }
}

/// Grid of rows×cols complex matrices with integer line-bundle weights per
/// row/column index. Storage is row-major per point, points in y-major order:
/// data[((y·n + x)·rows + i)·cols + j].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub row_weights: Vec<i32>,
    pub col_weights: Vec<i32>,
    pub data: Vec<C>,
}

impl GridField {
    pub fn zeros(n: usize, row_weights: Vec<i32>, col_weights: Vec<i32>) -> Self {
        let rows = row_weights.len();
        let cols = col_weights.len();
        GridField {
            n,
            rows,
            cols,
            row_weights,
            col_weights,
            data: vec![C::new(0.0, 0.0); n * n * rows * cols],
        }
    }

    /// Identity endomorphism field for the given degree vector.
    pub fn identity(n: usize, weights: &[i32]) -> Self {
        let r = weights.len();
        let mut f = Self::zeros(n, weights.to_vec(), weights.to_vec());
        for p in 0..n * n {
            for i in 0..r {
                f.data[(p * r + i) * r + i] = C::new(1.0, 0.0);
            }
        }
        f
    }

    /// Build a field by evaluating `fill` at every chart point; the closure
    /// writes the rows×cols slice for (x/n, y/n).
    pub fn from_fn(
        n: usize,
        row_weights: Vec<i32>,
        col_weights: Vec<i32>,
        fill: impl Fn(f64, f64, &mut [C]) + Sync,
    ) -> Self {
        let mut f = Self::zeros(n, row_weights, col_weights);
        let pt = f.rows * f.cols;
        f.data
            .par_chunks_mut(pt)
            .enumerate()
            .for_each(|(p, slot)| {
                let xf = (p % n) as f64 / n as f64;
                let yf = (p / n) as f64 / n as f64;
                fill(xf, yf, slot);
            });
        f
    }

    /// Same shape and weights, zeroed data.
    pub fn clone_shape(&self) -> Self {
        GridField {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            row_weights: self.row_weights.clone(),
            col_weights: self.col_weights.clone(),
            data: vec![C::new(0.0, 0.0); self.data.len()],
        }
    }

    #[inline]
    pub fn point(&self, x: usize, y: usize) -> &[C] {
        let pt = self.rows * self.cols;
        let base = (y * self.n + x) * pt;
        &self.data[base..base + pt]
    }

    #[inline]
    pub fn point_mut(&mut self, x: usize, y: usize) -> &mut [C] {
        let pt = self.rows * self.cols;
        let base = (y * self.n + x) * pt;
        &mut self.data[base..base + pt]
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize, i: usize, j: usize) -> C {
        self.data[((y * self.n + x) * self.rows + i) * self.cols + j]
    }

    pub fn scale(&mut self, c: C) {
        self.data.par_iter_mut().for_each(|z| *z *= c);
    }

    pub fn scaled(&self, c: C) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// self += c·other (same shape and weights).
    pub fn add_scaled(&mut self, c: C, other: &GridField) {
        debug_assert_eq!(self.row_weights, other.row_weights);
        debug_assert_eq!(self.col_weights, other.col_weights);
        self.data
            .par_iter_mut()
            .zip(other.data.par_iter())
            .for_each(|(a, b)| *a += c * b);
    }

    /// Pointwise matrix product; column weights must chain into row weights.
    pub fn mul(&self, other: &GridField) -> GridField {
        assert_eq!(self.cols, other.rows, "shape mismatch in field product");
        debug_assert_eq!(
            self.col_weights, other.row_weights,
            "weight mismatch in field product"
        );
        let n = self.n;
        let (r, k, m) = (self.rows, self.cols, other.cols);
        let mut out = GridField::zeros(n, self.row_weights.clone(), other.col_weights.clone());
        out.data
            .par_chunks_mut(r * m)
            .enumerate()
            .for_each(|(p, slot)| {
                let a = &self.data[p * r * k..(p + 1) * r * k];
                let b = &other.data[p * k * m..(p + 1) * k * m];
                for i in 0..r {
                    for j in 0..m {
                        let mut acc = C::new(0.0, 0.0);
                        for l in 0..k {
                            acc += a[i * k + l] * b[l * m + j];
                        }
                        slot[i * m + j] = acc;
                    }
                }
            });
        out
    }

    /// Pointwise conjugate transpose (weights swap sides).
    pub fn adjoint(&self) -> GridField {
        let n = self.n;
        let (r, c) = (self.rows, self.cols);
        let mut out = GridField::zeros(n, self.col_weights.clone(), self.row_weights.clone());
        out.data
            .par_chunks_mut(c * r)
            .enumerate()
            .for_each(|(p, slot)| {
                let a = &self.data[p * r * c..(p + 1) * r * c];
                for i in 0..c {
                    for j in 0..r {
                        slot[i * r + j] = a[j * c + i].conj();
                    }
                }
            });
        out
    }

    /// Pointwise commutator [self, other] for square fields of equal weights.
    pub fn commutator(&self, other: &GridField) -> GridField {
        let mut ab = self.mul(other);
        let ba = other.mul(self);
        ab.add_scaled(C::new(-1.0, 0.0), &ba);
        ab
    }

    /// Replace by the pointwise Hermitian part (square, symmetric weights).
    pub fn hermitize(&mut self) {
        assert_eq!(self.rows, self.cols);
        let r = self.rows;
        self.data.par_chunks_mut(r * r).for_each(|m| {
            for i in 0..r {
                for j in i..r {
                    let a = m[i * r + j];
                    let b = m[j * r + i];
                    let v = 0.5 * (a + b.conj());
                    m[i * r + j] = v;
                    m[j * r + i] = v.conj();
                }
            }
        });
    }

    /// Max entry deviation from pointwise Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let r = self.rows;
        self.data
            .chunks(r * r)
            .map(|m| {
                let mut d = 0.0f64;
                for i in 0..r {
                    for j in 0..r {
                        d = d.max((m[i * r + j] - m[j * r + i].conj()).norm());
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus over the grid.
    pub fn sup_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Pointwise trace integrated with the uniform rule (sequential, so the
    /// result is bitwise reproducible).
    pub fn quad_trace(&self) -> C {
        assert_eq!(self.rows, self.cols);
        let r = self.rows;
        let w = 1.0 / (self.n as f64 * self.n as f64);
        let mut acc = C::new(0.0, 0.0);
        for m in self.data.chunks(r * r) {
            for i in 0..r {
                acc += m[i * r + i];
            }
        }
        acc * w
    }

    /// ∫ Σ_ij self_ij·conj(other_ij) dμ — the flat (background) L² pairing.
    pub fn l2_inner(&self, other: &GridField) -> C {
        debug_assert_eq!(self.data.len(), other.data.len());
        let w = 1.0 / (self.n as f64 * self.n as f64);
        let mut acc = C::new(0.0, 0.0);
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            acc += a * b.conj();
        }
        acc * w
    }

    /// ∫ |self|_F² dμ in the flat pairing.
    pub fn l2_norm_sq(&self) -> f64 {
        let w = 1.0 / (self.n as f64 * self.n as f64);
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        s * w
    }

    /// ∫ |self|_F dμ (pointwise Frobenius norm, integrated).
    pub fn l1_fro(&self) -> f64 {
        let pt = self.rows * self.cols;
        let w = 1.0 / (self.n as f64 * self.n as f64);
        self.data
            .chunks(pt)
            .map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .sum::<f64>()
            * w
    }
}

/// Nodes and weights of the k-point Gauss-Legendre rule on [0, 1].
pub fn gauss_legendre_unit(k: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on P_k from the Chebyshev initial guess.
    let mut nodes = vec![0.0f64; k];
    let mut weights = vec![0.0f64; k];
    for i in 0..k {
        let mut t = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_k(t) and P_k'(t) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0f64, t);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = k as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, t);
        for j in 2..=k {
            let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = k as f64 * (t * p1 - p0) / (t * t - 1.0);
        nodes[k - 1 - i] = 0.5 * (1.0 + t);
        weights[k - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (nodes, weights)
}
