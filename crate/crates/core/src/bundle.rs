//! Model bundles E = (⊕_a L_{d_a}, ∂̄₀ + ũ) and the curvature of a metric.
//!
//! The degree vector is non-increasing and ũ is a strictly upper-triangular
//! (0,1)-datum, so E is an iterated extension of the background line bundles.
//! In the background-orthonormal frame the data of a Hermitian metric is a
//! plain positive matrix field h, and the contracted Chern curvature is
//!
//! ```text
//! G  = h⁻¹(∇̂_z h − ũ† h)                      (reduced (1,0) coefficient)
//! ΛF = diag(d) − (Imτ/π)(∇̂_z̄ G − ∇̂_z ũ + [ũ, G])
//! ```
//!
//! followed by h-symmetrization ΛF ← (ΛF + h⁻¹ΛF†h)/2, which removes the
//! O(hᵖ) stencil skew so the operator is exactly h-self-adjoint (its trace,
//! hence the degree, is untouched). With ũ = 0 and h = 1 this gives exactly
//! diag(d): deg L_d = d pins all constants.

use crate::geometry::{GeometryError, GridField, TorusGeometry};
use crate::linalg;
use crate::theta::{calibrate_background, cocycle_field, CalibrationReport};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("degrees must be non-increasing, got {0:?}")]
    DegreesNotSorted(Vec<i32>),
    #[error("rank must be between 1 and {max}, got {got}", max = linalg::MAX_RANK)]
    BadRank { got: usize },
    #[error("background calibration failed: connection coefficient {got} vs πi (residual {residual:.3e})")]
    Calibration { got: C, residual: f64 },
    #[error("background curvature check failed: max |ΛF₀ − diag(d)| = {0:.3e}")]
    BackgroundCurvature(f64),
}

#[derive(Debug, thiserror::Error)]
pub enum CurvatureError {
    #[error("metric lost positivity: smallest eigenvalue {min_eig:.3e} (sup {sup:.3e})")]
    PositivityLost { min_eig: f64, sup: f64 },
}

/// Which extension cocycle to install over the direct sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CocycleSpec {
    None,
    Theta { amplitude: f64 },
}

pub struct ModelBundle {
    pub geo: TorusGeometry,
    pub degrees: Vec<i32>,
    pub rank: usize,
    /// deg E = Σ d_a (exact for every metric; see `CurvaturePack::degree`).
    pub total_degree: i32,
    pub slope: f64,
    pub cocycle_amplitude: f64,
    /// (0,1) extension datum ũ (zero field when split).
    pub u: GridField,
    pub u_dag: GridField,
    cov_dz_u: GridField,
    pub calibration: CalibrationReport,
}

/// Curvature data of one metric.
pub struct CurvaturePack {
    /// Contracted curvature ΛF, exactly h-self-adjoint.
    pub lambda_f: GridField,
    /// Reduced (1,0) connection coefficient G.
    pub g: GridField,
    /// Pointwise inverse of the metric (cached for downstream use).
    pub h_inv: GridField,
    /// Smallest metric eigenvalue seen on the grid.
    pub h_min_eig: f64,
}

impl CurvaturePack {
    /// deg(E, h) = ∫ Tr ΛF dμ. Independent of h to rounding because the
    /// uniform rule annihilates the (weight-0) trace of every stencil term.
    pub fn degree(&self) -> f64 {
        self.lambda_f.quad_trace().re
    }
}

impl ModelBundle {
    pub fn new(geo: TorusGeometry, degrees: &[i32], cocycle: CocycleSpec) -> Result<Self, BundleError> {
        let rank = degrees.len();
        if rank == 0 || rank > linalg::MAX_RANK {
            return Err(BundleError::BadRank { got: rank });
        }
        if degrees.windows(2).any(|w| w[0] < w[1]) {
            return Err(BundleError::DegreesNotSorted(degrees.to_vec()));
        }
        let calibration = calibrate_background(&geo);
        let c_err = (calibration.connection_coefficient - C::new(0.0, PI)).norm();
        if c_err > 5e-3 || calibration.fit_residual > 5e-3 {
            return Err(BundleError::Calibration {
                got: calibration.connection_coefficient,
                residual: calibration.fit_residual,
            });
        }
        let (u, amplitude) = match cocycle {
            CocycleSpec::None => (
                GridField::zeros(geo.n, degrees.to_vec(), degrees.to_vec()),
                0.0,
            ),
            CocycleSpec::Theta { amplitude } => {
                (cocycle_field(&geo, degrees, amplitude), amplitude)
            }
        };
        let u_dag = u.adjoint();
        let cov_dz_u = geo.cov_dz(&u);
        let total_degree: i32 = degrees.iter().sum();
        let bundle = ModelBundle {
            slope: total_degree as f64 / rank as f64,
            geo,
            degrees: degrees.to_vec(),
            rank,
            total_degree,
            cocycle_amplitude: amplitude,
            u,
            u_dag,
            cov_dz_u,
            calibration,
        };
        // With the cocycle switched off, the background metric must reproduce
        // ΛF₀ = diag(d) identically — this certifies every pinned constant.
        let split_check = {
            let split = ModelBundleView {
                geo: &bundle.geo,
                degrees: &bundle.degrees,
                u: &GridField::zeros(bundle.geo.n, degrees.to_vec(), degrees.to_vec()),
            };
            let h0 = bundle.identity_metric();
            let pack = split_check_curvature(&split, &h0);
            let mut defect = 0.0f64;
            let r = rank;
            for p in 0..bundle.geo.n * bundle.geo.n {
                for (i, &di) in degrees.iter().enumerate() {
                    for j in 0..r {
                        let want = if i == j {
                            C::new(di as f64, 0.0)
                        } else {
                            C::new(0.0, 0.0)
                        };
                        defect = defect.max((pack.data[(p * r + i) * r + j] - want).norm());
                    }
                }
            }
            defect
        };
        if split_check > 1e-10 {
            return Err(BundleError::BackgroundCurvature(split_check));
        }
        Ok(bundle)
    }

    pub fn identity_metric(&self) -> GridField {
        GridField::identity(self.geo.n, &self.degrees)
    }

    /// ∂̄-operator of the holomorphic structure on End E: ∇̂_z̄ T + [ũ, T].
    pub fn dbar_end(&self, t: &GridField) -> GridField {
        let mut out = self.geo.cov_dbar(t);
        out.add_scaled(C::new(1.0, 0.0), &self.u.commutator(t));
        out
    }

    /// Contracted Chern curvature of the metric h.
    pub fn curvature(&self, h: &GridField) -> Result<CurvaturePack, CurvatureError> {
        let (h_inv, h_min_eig, sup) = metric_inverse(h);
        // written so NaN/inf anywhere also lands in the error branch
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(h_min_eig > 1e-13 * sup.max(1.0)) || !sup.is_finite() {
            return Err(CurvatureError::PositivityLost {
                min_eig: h_min_eig,
                sup,
            });
        }
        let mut dzh = self.geo.cov_dz(h);
        dzh.add_scaled(C::new(-1.0, 0.0), &self.u_dag.mul(h));
        let g = h_inv.mul(&dzh);

        let mut t = self.geo.cov_dbar(&g);
        t.add_scaled(C::new(-1.0, 0.0), &self.cov_dz_u);
        t.add_scaled(C::new(1.0, 0.0), &self.u.commutator(&g));
        let kappa = self.geo.lambda_factor();
        let mut lf = t.scaled(C::new(-kappa, 0.0));
        let r = self.rank;
        {
            let degrees = &self.degrees;
            lf.data.par_chunks_mut(r * r).for_each(|m| {
                for (i, &d) in degrees.iter().enumerate() {
                    m[i * r + i] += d as f64;
                }
            });
        }
        // h-symmetrize: ΛF ← (ΛF + h⁻¹ ΛF† h)/2
        let adj = h_inv.mul(&lf.adjoint()).mul(h);
        lf.add_scaled(C::new(1.0, 0.0), &adj);
        lf.scale(C::new(0.5, 0.0));
        Ok(CurvaturePack {
            lambda_f: lf,
            g,
            h_inv,
            h_min_eig,
        })
    }

    /// Norm² κ·∫Tr(α h⁻¹ α† h) of a (0,1)- or (1,0)-form-valued field, the
    /// contraction factor κ = Imτ/π being the |dz̄|²-against-ω weight.
    pub fn form_norm_sq(&self, alpha: &GridField, h: &GridField, h_inv: &GridField) -> f64 {
        let kappa = self.geo.lambda_factor();
        let m = alpha.mul(&h_inv.mul(&alpha.adjoint()).mul(h));
        kappa * m.quad_trace().re
    }

    /// Random positive initial metric exp(s): s is a Hermitian field whose
    /// entries are band-limited random Fourier data (Gaussian spectral decay,
    /// hard cutoff at n/4), off-diagonal entries riding the theta carrier of
    /// their weight so every entry has the right automorphy. Sup-normalized
    /// to `magnitude`.
    pub fn random_metric(&self, seed: u64, magnitude: f64) -> GridField {
        let n = self.geo.n;
        let r = self.rank;
        let mut s = GridField::zeros(n, self.degrees.clone(), self.degrees.clone());
        if magnitude == 0.0 {
            return self.identity_metric();
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mcut = (n / 4).min(8) as i32;
        let k0 = 2.0f64;
        // Fixed draw order: entry-major (a ≤ b), then mode-major.
        for a in 0..r {
            for b in a..r {
                let w = self.degrees[a] - self.degrees[b];
                let mut modes = vec![];
                for m in -mcut..=mcut {
                    for k in -mcut..=mcut {
                        let profile = (-((m * m + k * k) as f64) / (k0 * k0)).exp();
                        let re: f64 = rng.gen_range(-1.0..1.0);
                        let im: f64 = rng.gen_range(-1.0..1.0);
                        modes.push((m, k, profile * re, profile * im));
                    }
                }
                let carr = crate::theta::carrier(&self.geo, w.abs());
                for p in 0..n * n {
                    let x = (p % n) as f64 / n as f64;
                    let y = (p / n) as f64 / n as f64;
                    let mut v = C::new(0.0, 0.0);
                    for &(m, k, re, im) in &modes {
                        let ph = C::from_polar(1.0, 2.0 * PI * (m as f64 * x + k as f64 * y));
                        v += C::new(re, im) * ph;
                    }
                    if a == b {
                        // diagonal of a Hermitian matrix: keep the real part
                        s.data[(p * r + a) * r + a] = C::new(v.re, 0.0);
                    } else {
                        let val = v * carr.data[p];
                        s.data[(p * r + a) * r + b] = val;
                        s.data[(p * r + b) * r + a] = val.conj();
                    }
                }
            }
        }
        let sup = s.sup_abs().max(1e-300);
        s.scale(C::new(magnitude / sup, 0.0));
        metric_fn(&s, f64::exp)
    }
}

/// Internal view used for the split background self-check.
struct ModelBundleView<'a> {
    geo: &'a TorusGeometry,
    degrees: &'a [i32],
    u: &'a GridField,
}

fn split_check_curvature(v: &ModelBundleView, h: &GridField) -> GridField {
    let (h_inv, _, _) = metric_inverse(h);
    let mut dzh = v.geo.cov_dz(h);
    dzh.add_scaled(C::new(-1.0, 0.0), &v.u.adjoint().mul(h));
    let g = h_inv.mul(&dzh);
    let mut t = v.geo.cov_dbar(&g);
    t.add_scaled(C::new(-1.0, 0.0), &v.geo.cov_dz(v.u));
    t.add_scaled(C::new(1.0, 0.0), &v.u.commutator(&g));
    let kappa = v.geo.lambda_factor();
    let mut lf = t.scaled(C::new(-kappa, 0.0));
    let r = v.degrees.len();
    for p in 0..v.geo.n * v.geo.n {
        for (i, &d) in v.degrees.iter().enumerate() {
            lf.data[(p * r + i) * r + i] += d as f64;
        }
    }
    lf
}

/// Pointwise inverse of a Hermitian-positive field; also returns the smallest
/// eigenvalue and the sup of the field (for conditioning decisions).
pub fn metric_inverse(h: &GridField) -> (GridField, f64, f64) {
    let r = h.rows;
    let mut out = h.clone_shape();
    let min_eig = out
        .data
        .par_chunks_mut(r * r)
        .zip(h.data.par_chunks(r * r))
        .map(|(slot, m)| {
            let mut inv = linalg::zero_scratch();
            let me = linalg::min_eig(m, r);
            if linalg::inverse(m, &mut inv, r).is_ok() {
                slot.copy_from_slice(&inv[..r * r]);
            }
            me
        })
        .reduce(|| f64::INFINITY, f64::min);
    (out, min_eig, h.sup_abs())
}

/// Apply a real function to a Hermitian field through its pointwise
/// eigenvalues (exp, log, sqrt, …).
pub fn metric_fn(h: &GridField, f: impl Fn(f64) -> f64 + Sync) -> GridField {
    let r = h.rows;
    let mut out = h.clone_shape();
    out.data
        .par_chunks_mut(r * r)
        .zip(h.data.par_chunks(r * r))
        .for_each(|(slot, m)| {
            let mut buf = linalg::zero_scratch();
            linalg::hermitian_fn(m, r, &f, &mut buf);
            slot.copy_from_slice(&buf[..r * r]);
        });
    out
}

/// ∫ log det h dμ (h Hermitian positive).
pub fn quad_logdet(h: &GridField) -> f64 {
    let r = h.rows;
    let w = 1.0 / (h.n as f64 * h.n as f64);
    let mut acc = 0.0;
    for m in h.data.chunks(r * r) {
        let mut vals = [0.0f64; linalg::MAX_RANK];
        let mut vecs = linalg::zero_scratch();
        linalg::eigh(m, r, &mut vals, &mut vecs);
        for &v in &vals[..r] {
            acc += v.ln();
        }
    }
    acc * w
}

/// Max pointwise defect of h-self-adjointness: sup |h⁻¹T†h − T|.
pub fn h_selfadjoint_defect(t: &GridField, h: &GridField, h_inv: &GridField) -> f64 {
    let mut adj = h_inv.mul(&t.adjoint()).mul(h);
    adj.add_scaled(C::new(-1.0, 0.0), t);
    adj.sup_abs()
}
