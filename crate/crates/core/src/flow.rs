//! Metric heat flows and their monitors.
//!
//! Donaldson flow on the metric: h⁻¹ḣ = −(ΛF_h − μ·Id). One step factors
//! through w = h^{1/2} and the plain-Hermitian F̃ = wΛFw⁻¹:
//!
//! ```text
//! h(s) = w·exp(−s(F̃ − μ))·w,   0 ≤ s ≤ dt,
//! ```
//!
//! which is manifestly Hermitian positive for every s and has the exactly
//! constant velocity h⁻¹ḣ = −(ΛF − μ) of the left endpoint — so one pointwise
//! eigendecomposition yields the midpoint metric (for the energy-functional
//! accumulators) and the endpoint, and positivity can never be lost to
//! rounding. The step size is capped at 0.5/sup|ΛF − μ| and halved on a
//! curvature blow-up, which keeps the explicit scheme inside its stability
//! region at the default resolution.
//!
//! The Yang-Mills side evolves the (0,1)-connection coefficient b over the
//! fixed background metric; along the flow it should stay gauge-equivalent to
//! the Donaldson picture via b = wũw⁻¹ − (∇̂_z̄w)w⁻¹, which is what the
//! `gauge_residual` column measures.

use crate::bundle::{metric_fn, quad_logdet, CurvaturePack, ModelBundle};
use crate::filtration::{psi, sff_norm_sq, FiltrationSpec};
use crate::geometry::{gauss_legendre_unit, GridField};
use crate::linalg;
use num_complex::Complex64 as C;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug)]
pub struct FlowParams {
    pub dt: f64,
    pub t_end: f64,
    /// Stop once Y = ‖ΛF − Ψ‖²_{L²(h)} < epsilon (checked at samples).
    pub epsilon: f64,
    /// Record a sample every this many steps.
    pub sample_every: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt: 1e-3,
            t_end: 50.0,
            epsilon: 1e-4,
            sample_every: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowStatus {
    /// Y dropped below epsilon.
    Converged,
    /// t_end reached without meeting the threshold.
    ReachedTEnd,
    /// Numerical failure (positivity loss or unstable blow-up).
    Aborted(String),
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    /// ‖ΛF_ym‖² in the background L² pairing (Yang-Mills side).
    pub ym_energy: f64,
    /// ‖ΛF_h‖² in the L²(h) pairing (Donaldson side).
    pub hym_energy: f64,
    /// Y = ‖ΛF − Ψ‖²_{L²(h)}.
    pub y: f64,
    /// Accumulated flow functional ∫ Tr((ΛF−Ψ)·h⁻¹ḣ).
    pub p: f64,
    /// Accumulated degree-normalized energy functional.
    pub m: f64,
    /// ‖∂̄_A π^{f_i}‖² per proper flag step.
    pub sff: Vec<f64>,
    /// Grid-averaged descending spectrum of ΛF.
    pub spectrum: Vec<f64>,
    /// 2⟨ΛF−Ψ, ΛF−μ⟩ − Y (≥ 0 up to quadrature rounding).
    pub keyineq_slack: f64,
    /// ‖ΛF_ym − wΛF_h w⁻¹‖_{L²} — the gauge correspondence defect.
    pub gauge_residual: f64,
    /// ∫|ΛF − Ψ|_h dμ (L¹ distance to the expected limit).
    pub l1_gap: f64,
    /// Relative defect of d/dt‖ΛF‖² = −2‖∂̄_A ΛF‖² (0 on the first sample).
    pub energy_decay_residual: f64,
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub samples: Vec<Sample>,
    pub status: FlowStatus,
    pub steps: usize,
    pub final_h: GridField,
}

/// Starting values for the path-dependent accumulators; zero when the flow
/// starts at the background metric, otherwise the geodesic integrals from the
/// background to the actual start (see `path_integrals`).
#[derive(Clone, Copy, Debug, Default)]
pub struct PathIntegrals {
    pub p: f64,
    pub m: f64,
}

/// Gauss-Legendre node count used for all path integrals; fixed so results
/// are comparable across runs.
pub const PATH_QUAD_NODES: usize = 64;

/// Σ_points Tr(a·b)/n² without materializing the product field. Sequential,
/// so results are bitwise stable.
pub fn quad_tr_prod(a: &GridField, b: &GridField) -> C {
    debug_assert_eq!(a.cols, b.rows);
    let r = a.rows;
    let k = a.cols;
    let m = b.cols;
    debug_assert_eq!(r, m);
    let w = 1.0 / (a.n as f64 * a.n as f64);
    let mut acc = C::new(0.0, 0.0);
    for (am, bm) in a.data.chunks(r * k).zip(b.data.chunks(k * m)) {
        for i in 0..r {
            for l in 0..k {
                acc += am[i * k + l] * bm[l * m + i];
            }
        }
    }
    acc * w
}

/// f + c·Id pointwise.
fn shift_diag(f: &GridField, c: f64) -> GridField {
    let r = f.rows;
    let mut out = f.clone();
    out.data.par_chunks_mut(r * r).for_each(|m| {
        for i in 0..r {
            m[i * r + i] += c;
        }
    });
    out
}

/// ∫ |f|_h dμ for an h-self-adjoint field: pointwise sqrt(Re Tr f²).
fn quad_l1_selfadjoint(f: &GridField) -> f64 {
    let r = f.rows;
    let w = 1.0 / (f.n as f64 * f.n as f64);
    f.data
        .chunks(r * r)
        .map(|m| {
            let mut tr = 0.0;
            for i in 0..r {
                for j in 0..r {
                    tr += (m[i * r + j] * m[j * r + i]).re;
                }
            }
            tr.max(0.0).sqrt()
        })
        .sum::<f64>()
        * w
}

/// One flow step from (h, w = h^{1/2}, F̃ = wΛFw⁻¹): returns (h_mid, h_next)
/// at s = dt/2 and s = dt using a single eigendecomposition per point.
fn step_metrics(w: &GridField, f_tilde: &GridField, dt: f64, mu: f64) -> (GridField, GridField) {
    let r = w.rows;
    let mut h_mid = w.clone_shape();
    let mut h_next = w.clone_shape();
    h_mid
        .data
        .par_chunks_mut(r * r)
        .zip(h_next.data.par_chunks_mut(r * r))
        .zip(w.data.par_chunks(r * r))
        .zip(f_tilde.data.par_chunks(r * r))
        .for_each(|(((mid, next), wm), fm)| {
            let mut vals = [0.0f64; linalg::MAX_RANK];
            let mut vecs = linalg::zero_scratch();
            linalg::eigh(fm, r, &mut vals, &mut vecs);
            let mut e_half = linalg::zero_scratch();
            let mut e_full = linalg::zero_scratch();
            for i in 0..r {
                for j in 0..r {
                    let mut ah = C::new(0.0, 0.0);
                    let mut af = C::new(0.0, 0.0);
                    for k in 0..r {
                        let p = vecs[i * r + k] * vecs[j * r + k].conj();
                        let lam = vals[k] - mu;
                        ah += p * (-0.5 * dt * lam).exp();
                        af += p * (-dt * lam).exp();
                    }
                    e_half[i * r + j] = ah;
                    e_full[i * r + j] = af;
                }
            }
            let mut tmp = linalg::zero_scratch();
            linalg::mul(wm, &e_half[..r * r], &mut tmp[..r * r], r);
            linalg::mul(&tmp[..r * r], wm, mid, r);
            linalg::mul(wm, &e_full[..r * r], &mut tmp[..r * r], r);
            linalg::mul(&tmp[..r * r], wm, next, r);
        });
    h_mid.hermitize();
    h_next.hermitize();
    (h_mid, h_next)
}

/// Contracted curvature of the (0,1)-connection coefficient b over the fixed
/// background metric: ΛF = diag(d) + κ(∇̂_z̄ b† + ∇̂_z b + [b, b†]), symmetrized.
pub fn ym_lambda_f(bundle: &ModelBundle, b: &GridField) -> GridField {
    let geo = &bundle.geo;
    let bd = b.adjoint();
    let mut t = geo.cov_dbar(&bd);
    t.add_scaled(C::new(1.0, 0.0), &geo.cov_dz(b));
    t.add_scaled(C::new(1.0, 0.0), &b.commutator(&bd));
    let kappa = geo.lambda_factor();
    let mut lf = t.scaled(C::new(kappa, 0.0));
    let r = bundle.rank;
    {
        let degrees = &bundle.degrees;
        lf.data.par_chunks_mut(r * r).for_each(|m| {
            for (i, &d) in degrees.iter().enumerate() {
                m[i * r + i] += d as f64;
            }
        });
    }
    lf.hermitize();
    lf
}

/// Gauge image of the metric picture: b = wũw⁻¹ − (∇̂_z̄ w)w⁻¹ with w = h^{1/2}.
pub fn gauge_connection(bundle: &ModelBundle, w: &GridField, w_inv: &GridField) -> GridField {
    let mut b = w.mul(&bundle.u).mul(w_inv);
    b.add_scaled(C::new(-1.0, 0.0), &bundle.geo.cov_dbar(w).mul(w_inv));
    b
}

/// Explicit Yang-Mills flow step on the connection coefficient:
/// ḃ = ½(∇̂_z̄ ΛF_b + [b, ΛF_b]). The ½ matches the Donaldson time scale
/// through the gauge correspondence (exact in the abelian reduction).
pub fn ym_direct_step(bundle: &ModelBundle, b: &GridField, dt: f64) -> GridField {
    let lf = ym_lambda_f(bundle, b);
    let mut rhs = bundle.geo.cov_dbar(&lf);
    rhs.add_scaled(C::new(1.0, 0.0), &b.commutator(&lf));
    let mut out = b.clone();
    out.add_scaled(C::new(0.5 * dt, 0.0), &rhs);
    out
}

/// Geodesic-path integrals of the two flow functionals from h0 to h1:
///     P = ∫₀¹ ⟨ΛF_{h(s)} − Ψ_{h(s)}, v⟩ ds,   M_raw = ∫₀¹ ⟨ΛF_{h(s)}, v⟩ ds
/// along h(s) = w₀·exp(sK)·w₀ (K = log(w₀⁻¹h₁w₀⁻¹)), whose velocity
/// v = h⁻¹ḣ = w₀⁻¹Kw₀ is exactly constant. Gauss-Legendre with `nodes` points.
pub fn path_integrals(
    bundle: &ModelBundle,
    spec: &FiltrationSpec,
    h0: &GridField,
    h1: &GridField,
    nodes: usize,
) -> Result<PathIntegrals, crate::bundle::CurvatureError> {
    let w0 = metric_fn(h0, f64::sqrt);
    let w0i = metric_fn(h0, |x| 1.0 / x.sqrt());
    let mut inner = w0i.mul(h1).mul(&w0i);
    inner.hermitize();
    let kf = metric_fn(&inner, f64::ln);
    let v = w0i.mul(&kf).mul(&w0);
    let (xs, ws) = gauss_legendre_unit(nodes);
    let mut p = 0.0;
    let mut m = 0.0;
    for (&s, &gw) in xs.iter().zip(&ws) {
        let es = metric_fn(&kf, |x| (s * x).exp());
        let mut hs = w0.mul(&es).mul(&w0);
        hs.hermitize();
        let pack = bundle.curvature(&hs)?;
        let psi_s = psi(&hs, spec);
        let m_term = quad_tr_prod(&pack.lambda_f, &v).re;
        let psi_term = quad_tr_prod(&psi_s, &v).re;
        p += gw * (m_term - psi_term);
        m += gw * m_term;
    }
    Ok(PathIntegrals { p, m })
}

/// Fixed diagonal detour field used by the two-segment comparison path; any
/// deterministic Hermitian field off the geodesic works.
pub fn standard_detour(bundle: &ModelBundle) -> GridField {
    let r = bundle.rank;
    GridField::from_fn(
        bundle.geo.n,
        bundle.degrees.clone(),
        bundle.degrees.clone(),
        move |x, y, s| {
            for a in 0..r {
                s[a * r + a] = C::new(
                    0.3 * (2.0 * PI * x + a as f64).cos() + 0.15 * (2.0 * PI * y + 2.0 * a as f64).sin(),
                    0.0,
                );
            }
        },
    )
}

/// P along the detour path h0 → m → h1 with m = exp((log h0 + log h1)/2 + V).
pub fn path_integrals_detour(
    bundle: &ModelBundle,
    spec: &FiltrationSpec,
    h0: &GridField,
    h1: &GridField,
    nodes: usize,
) -> Result<PathIntegrals, crate::bundle::CurvatureError> {
    let mut half_log = metric_fn(h0, f64::ln);
    half_log.add_scaled(C::new(1.0, 0.0), &metric_fn(h1, f64::ln));
    half_log.scale(C::new(0.5, 0.0));
    half_log.add_scaled(C::new(1.0, 0.0), &standard_detour(bundle));
    half_log.hermitize();
    let mid = metric_fn(&half_log, f64::exp);
    let a = path_integrals(bundle, spec, h0, &mid, nodes)?;
    let b = path_integrals(bundle, spec, &mid, h1, nodes)?;
    Ok(PathIntegrals {
        p: a.p + b.p,
        m: a.m + b.m,
    })
}

struct MonitorState {
    hym_prev: f64,
    dt_last: f64,
}

#[allow(clippy::too_many_arguments)]
fn make_sample(
    bundle: &ModelBundle,
    spec: &FiltrationSpec,
    h: &GridField,
    pack: &CurvaturePack,
    t: f64,
    p_acc: f64,
    m_acc: f64,
    monitor: Option<&MonitorState>,
) -> Sample {
    let lf = &pack.lambda_f;
    let mu = bundle.slope;
    let psi_f = psi(h, spec);
    let mut gap = lf.clone();
    gap.add_scaled(C::new(-1.0, 0.0), &psi_f);
    let y = quad_tr_prod(&gap, &gap).re;
    let hym = quad_tr_prod(lf, lf).re;
    let shifted = shift_diag(lf, -mu);
    let keyineq_slack = 2.0 * quad_tr_prod(&gap, &shifted).re - y;
    let l1_gap = quad_l1_selfadjoint(&gap);

    let sff: Vec<f64> = spec.flags[..spec.proper_flags()]
        .iter()
        .map(|&f| sff_norm_sq(bundle, h, pack, f))
        .collect();

    let w = metric_fn(h, f64::sqrt);
    let w_inv = metric_fn(h, |x| 1.0 / x.sqrt());
    let transported = w.mul(lf).mul(&w_inv);

    // grid-averaged descending spectrum of ΛF (via its Hermitian transport)
    let r = bundle.rank;
    let mut spectrum = vec![0.0f64; r];
    {
        let qw = 1.0 / (h.n as f64 * h.n as f64);
        for m in transported.data.chunks(r * r) {
            let mut vals = [0.0f64; linalg::MAX_RANK];
            let mut vecs = linalg::zero_scratch();
            linalg::eigh(m, r, &mut vals, &mut vecs);
            for i in 0..r {
                spectrum[i] += vals[i] * qw;
            }
        }
    }

    let b = gauge_connection(bundle, &w, &w_inv);
    let lf_ym = ym_lambda_f(bundle, &b);
    let ym_energy = quad_tr_prod(&lf_ym, &lf_ym).re;
    let mut gauge_diff = lf_ym.clone();
    gauge_diff.add_scaled(C::new(-1.0, 0.0), &transported);
    let gauge_residual = gauge_diff.l2_norm_sq().sqrt();

    let energy_decay_residual = match monitor {
        None => 0.0,
        Some(ms) => {
            let dissip = bundle.form_norm_sq(&bundle.dbar_end(lf), h, &pack.h_inv);
            let rhs = -2.0 * dissip;
            let lhs = (hym - ms.hym_prev) / ms.dt_last;
            (lhs - rhs).abs() / rhs.abs().max(1e-10)
        }
    };

    let m = m_acc - mu * quad_logdet(h);
    Sample {
        t,
        ym_energy,
        hym_energy: hym,
        y,
        p: p_acc,
        m,
        sff,
        spectrum,
        keyineq_slack,
        gauge_residual,
        l1_gap,
        energy_decay_residual,
    }
}

/// Run the Donaldson flow from h_init. `init` seeds the P/M accumulators
/// (zero for a background start). Samples are recorded every
/// `params.sample_every` steps and at termination.
pub fn donaldson_flow(
    bundle: &ModelBundle,
    spec: &FiltrationSpec,
    params: &FlowParams,
    h_init: GridField,
    init: PathIntegrals,
) -> FlowTrace {
    let mut h = h_init;
    let mut t = 0.0f64;
    let mut p_acc = init.p;
    let mut m_acc = init.m;
    let mut steps = 0usize;
    let mut samples = vec![];
    let mut monitor: Option<MonitorState> = None;

    let mut pack = match bundle.curvature(&h) {
        Ok(p) => p,
        Err(e) => {
            return FlowTrace {
                samples,
                status: FlowStatus::Aborted(format!("initial metric rejected: {e}")),
                steps,
                final_h: h,
            }
        }
    };
    // Explicit-step diffusive stability: dt must stay below 2/σ_max of the
    // discrete heat symbol (0.9 safety). Slow CFL blow-ups are otherwise
    // invisible to the per-step rejection test.
    let dt_stable = 1.8 / bundle.geo.heat_symbol_max();
    let runaway = 1e3 * pack.lambda_f.sup_abs().max(1.0);

    let status = loop {
        let due = steps.is_multiple_of(params.sample_every) || t >= params.t_end - 1e-12;
        if due {
            let s = make_sample(bundle, spec, &h, &pack, t, p_acc, m_acc, monitor.as_ref());
            let y = s.y;
            samples.push(s);
            if y < params.epsilon {
                break FlowStatus::Converged;
            }
            if t >= params.t_end - 1e-12 {
                break FlowStatus::ReachedTEnd;
            }
        }

        // step
        let mu = bundle.slope;
        let sup_s = shift_diag(&pack.lambda_f, -mu).sup_abs();
        let mut dt_eff = params
            .dt
            .min(params.t_end - t)
            .min(0.5 / sup_s.max(1e-30))
            .min(dt_stable);
        let w = metric_fn(&h, f64::sqrt);
        let w_inv = metric_fn(&h, |x| 1.0 / x.sqrt());
        let mut f_tilde = w.mul(&pack.lambda_f).mul(&w_inv);
        f_tilde.hermitize();
        let lf_sup = pack.lambda_f.sup_abs();

        let mut accepted = None;
        for _try in 0..10 {
            let (h_mid, h_next) = step_metrics(&w, &f_tilde, dt_eff, mu);
            match bundle.curvature(&h_next) {
                Ok(pack_next) if pack_next.lambda_f.sup_abs() <= 10.0 * lf_sup.max(1.0) => {
                    accepted = Some((h_mid, h_next, pack_next));
                    break;
                }
                _ => dt_eff *= 0.5,
            }
        }
        let Some((h_mid, h_next, pack_next)) = accepted else {
            break FlowStatus::Aborted(format!(
                "step rejected 10 times at t = {t:.6} (curvature blow-up)"
            ));
        };
        // NaN-safe form: non-finite curvature must also abort
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(pack_next.lambda_f.sup_abs() <= runaway) {
            break FlowStatus::Aborted(format!(
                "curvature runaway at t = {t:.6}: sup|ΛF| = {:.3e}",
                pack_next.lambda_f.sup_abs()
            ));
        }

        // accumulate P and M with the midpoint state; the velocity
        // v = −(ΛF_left − μ) is exact along the step parameterization.
        let v = shift_diag(&pack.lambda_f, -mu).scaled(C::new(-1.0, 0.0));
        match bundle.curvature(&h_mid) {
            Ok(pack_mid) => {
                let psi_mid = psi(&h_mid, spec);
                let m_term = quad_tr_prod(&pack_mid.lambda_f, &v).re;
                let psi_term = quad_tr_prod(&psi_mid, &v).re;
                p_acc += dt_eff * (m_term - psi_term);
                m_acc += dt_eff * m_term;
            }
            Err(e) => break FlowStatus::Aborted(format!("midpoint curvature failed: {e}")),
        }

        monitor = Some(MonitorState {
            hym_prev: quad_tr_prod(&pack.lambda_f, &pack.lambda_f).re,
            dt_last: dt_eff,
        });
        h = h_next;
        pack = pack_next;
        t += dt_eff;
        steps += 1;
    };

    FlowTrace {
        samples,
        status,
        steps,
        final_h: h,
    }
}
