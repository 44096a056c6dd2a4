//! Filtrations by coordinate subbundles and their spectral bookkeeping.
//!
//! The model presentation orders degrees non-increasingly, so the flag of
//! coordinate subspaces E_s = span(e_1..e_s) contains the Harder-Narasimhan
//! filtration. For a metric h, π^s = E_s (E_s† h E_s)⁻¹ E_s† h is the
//! h-orthogonal projection onto E_s — exactly idempotent, h-self-adjoint and
//! of pointwise trace s, whatever the grid resolution. The expected limit
//! endomorphism of the flow is Ψ = Σ_i μ_i (π^{f_i} − π^{f_{i-1}}).

use crate::bundle::{CurvaturePack, ModelBundle};
use crate::geometry::GridField;
use crate::linalg;
use num_complex::Complex64 as C;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum FiltrationError {
    #[error("flag rank {0} out of range for rank {1}")]
    BadFlag(usize, usize),
    #[error("Chern-Weil degree {got} of flag rank {flag} is not near an integer")]
    NonIntegerDegree { flag: usize, got: f64 },
    #[error("spectra have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("spectra have different totals: {0} vs {1}")]
    UnequalTotals(f64, f64),
}

/// The degree-block filtration of a model bundle: flag ranks at which the
/// degree drops, block slopes, and the full slope vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FiltrationSpec {
    /// Cumulative ranks f_1 < … < f_L = r.
    pub flags: Vec<usize>,
    /// Slope of each block (strictly decreasing).
    pub slopes: Vec<f64>,
    /// Slope vector of length r (the expected limit spectrum).
    pub mu_vec: Vec<f64>,
}

impl FiltrationSpec {
    pub fn from_degrees(degrees: &[i32]) -> Self {
        let mut flags = vec![];
        let mut slopes = vec![];
        let mut mu_vec = vec![];
        let mut i = 0;
        while i < degrees.len() {
            let mut j = i;
            while j < degrees.len() && degrees[j] == degrees[i] {
                j += 1;
            }
            flags.push(j);
            slopes.push(degrees[i] as f64);
            for _ in i..j {
                mu_vec.push(degrees[i] as f64);
            }
            i = j;
        }
        FiltrationSpec {
            flags,
            slopes,
            mu_vec,
        }
    }

    /// Number of proper flag steps (the sff columns reported per sample).
    pub fn proper_flags(&self) -> usize {
        self.flags.len().saturating_sub(1)
    }
}

/// h-orthogonal projection onto the coordinate subbundle of rank s.
pub fn projection(h: &GridField, s: usize) -> GridField {
    let r = h.rows;
    assert!(s >= 1 && s <= r);
    let mut out = h.clone_shape();
    out.data
        .par_chunks_mut(r * r)
        .zip(h.data.par_chunks(r * r))
        .for_each(|(slot, hm)| {
            // Gram block (E_s† h E_s) = top-left s×s of h
            let mut gram = linalg::zero_scratch();
            for i in 0..s {
                for j in 0..s {
                    gram[i * s + j] = hm[i * r + j];
                }
            }
            let mut ginv = linalg::zero_scratch();
            linalg::inverse(&gram[..s * s], &mut ginv, s)
                .expect("projection Gram block must be invertible for a positive metric");
            // π = E_s G⁻¹ E_s† h: top s rows are G⁻¹ · (top s rows of h)
            slot.fill(C::new(0.0, 0.0));
            for i in 0..s {
                for j in 0..r {
                    let mut acc = C::new(0.0, 0.0);
                    for k in 0..s {
                        acc += ginv[i * s + k] * hm[k * r + j];
                    }
                    slot[i * r + j] = acc;
                }
            }
        });
    out
}

/// Expected limit endomorphism Ψ(h) = Σ μ_i (π^{f_i} − π^{f_{i−1}}).
pub fn psi(h: &GridField, spec: &FiltrationSpec) -> GridField {
    let mut out = h.clone_shape();
    let mut prev: Option<GridField> = None;
    for (step, &f) in spec.flags.iter().enumerate() {
        let p = projection(h, f);
        let mu = C::new(spec.slopes[step], 0.0);
        out.add_scaled(mu, &p);
        if let Some(pr) = &prev {
            out.add_scaled(-mu, pr);
        }
        prev = Some(p);
    }
    out
}

/// Second fundamental form ∂̄_A π of a flag and its squared norm in the
/// metric pairing: ‖∂̄π‖² = κ ∫ Tr(∂̄π · h⁻¹(∂̄π)†h). Vanishes exactly iff the
/// flag is h-orthogonally holomorphic.
pub fn sff_norm_sq(bundle: &ModelBundle, h: &GridField, pack: &CurvaturePack, s: usize) -> f64 {
    let p = projection(h, s);
    let sff = bundle.dbar_end(&p);
    bundle.form_norm_sq(&sff, h, &pack.h_inv)
}

/// Chern-Weil degree of the rank-s coordinate subsheaf:
/// deg = ∫ Tr(π ΛF) − ‖∂̄π‖². Metric-independent in the continuum; on the
/// grid it is exact at h = 1 and O(hᵖ)-stable otherwise.
pub fn chern_weil_degree(
    bundle: &ModelBundle,
    h: &GridField,
    pack: &CurvaturePack,
    s: usize,
) -> f64 {
    let p = projection(h, s);
    let first = p.mul(&pack.lambda_f).quad_trace().re;
    let sff = bundle.dbar_end(&p);
    first - bundle.form_norm_sq(&sff, h, &pack.h_inv)
}

/// Harder-Narasimhan type measured from the metric: Chern-Weil degrees of all
/// coordinate flags, snapped to integers, then the greedy maximal-slope
/// filtration (ties resolved to the larger rank). Degrees further than `snap`
/// from an integer are an error — the measurement is then meaningless.
pub fn hn_type_bruteforce(
    bundle: &ModelBundle,
    h: &GridField,
    pack: &CurvaturePack,
    snap: f64,
) -> Result<(Vec<usize>, Vec<f64>), FiltrationError> {
    let r = bundle.rank;
    let mut cum = vec![0i64; r + 1];
    for (s, c) in cum.iter_mut().enumerate().skip(1) {
        let d = chern_weil_degree(bundle, h, pack, s);
        let rd = d.round();
        if (d - rd).abs() > snap {
            return Err(FiltrationError::NonIntegerDegree { flag: s, got: d });
        }
        *c = rd as i64;
    }
    let mut flags = vec![];
    let mut mu_vec = vec![];
    let mut base = 0usize;
    while base < r {
        let mut best_s = base + 1;
        let mut best_slope = f64::NEG_INFINITY;
        for s in base + 1..=r {
            let slope = (cum[s] - cum[base]) as f64 / (s - base) as f64;
            if slope > best_slope + 1e-9 || (slope > best_slope - 1e-9 && s > best_s) {
                best_slope = slope;
                best_s = s;
            }
        }
        for _ in base..best_s {
            mu_vec.push(best_slope);
        }
        flags.push(best_s);
        base = best_s;
    }
    Ok((flags, mu_vec))
}

/// Dominance partial order on spectra sorted non-increasingly: every leading
/// partial sum of `a` is ≤ that of `b`, with equal totals. Requires equal
/// totals up to `tol` — otherwise the comparison is vacuous and an error.
pub fn dominance_leq(a: &[f64], b: &[f64], tol: f64) -> Result<bool, FiltrationError> {
    if a.len() != b.len() {
        return Err(FiltrationError::LengthMismatch(a.len(), b.len()));
    }
    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    if (sa - sb).abs() > tol * (a.len() as f64) {
        return Err(FiltrationError::UnequalTotals(sa, sb));
    }
    let mut pa = 0.0;
    let mut pb = 0.0;
    for (x, y) in a.iter().zip(b) {
        pa += x;
        pb += y;
        if pa > pb + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Σ μᵢ² of a spectrum — the norm² whose infimum over metrics the flow is
/// expected to attain.
pub fn phi_squared(mu: &[f64]) -> f64 {
    mu.iter().map(|x| x * x).sum()
}

/// All strictly increasing coordinate flags ending at r (2^{r−1} of them).
pub fn enumerate_standard_flags(r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    for mask in 0..(1u32 << (r - 1)) {
        let mut flag: Vec<usize> = (1..r).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        flag.push(r);
        out.push(flag);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{metric_fn, CocycleSpec};
    use crate::geometry::TorusGeometry;

    fn bundle(n: usize, degrees: &[i32], coc: CocycleSpec) -> ModelBundle {
        let geo = TorusGeometry::new(C::new(0.0, 1.0), n).unwrap();
        ModelBundle::new(geo, degrees, coc).unwrap()
    }

    #[test]
    fn spec_from_degrees_blocks_runs() {
        let s = FiltrationSpec::from_degrees(&[2, 1, 0]);
        assert_eq!(s.flags, vec![1, 2, 3]);
        assert_eq!(s.slopes, vec![2.0, 1.0, 0.0]);
        let s = FiltrationSpec::from_degrees(&[1, 1, 0]);
        assert_eq!(s.flags, vec![2, 3]);
        assert_eq!(s.mu_vec, vec![1.0, 1.0, 0.0]);
        let s = FiltrationSpec::from_degrees(&[0, 0]);
        assert_eq!(s.flags, vec![2]);
        assert_eq!(s.proper_flags(), 0);
    }

    #[test]
    fn rank_two_projection_closed_form() {
        let b = bundle(16, &[1, 0], CocycleSpec::None);
        let h = b.random_metric(5, 0.7);
        let p = projection(&h, 1);
        for pt in 0..16 * 16 {
            let hm = &h.data[pt * 4..pt * 4 + 4];
            let pm = &p.data[pt * 4..pt * 4 + 4];
            assert!((pm[0] - 1.0).norm() < 1e-13);
            assert!((pm[1] - hm[1] / hm[0]).norm() < 1e-13);
            assert!(pm[2].norm() < 1e-16 && pm[3].norm() < 1e-16);
        }
    }

    #[test]
    fn projections_are_idempotent_h_selfadjoint_nested() {
        let b = bundle(16, &[2, 1, 0], CocycleSpec::Theta { amplitude: 0.8 });
        let h = b.random_metric(9, 0.9);
        let pack = b.curvature(&h).unwrap();
        for s in 1..=3usize {
            let p = projection(&h, s);
            let mut p2 = p.mul(&p);
            p2.add_scaled(C::new(-1.0, 0.0), &p);
            assert!(p2.sup_abs() < 1e-12, "idempotency s={s}: {}", p2.sup_abs());
            let d = crate::bundle::h_selfadjoint_defect(&p, &h, &pack.h_inv);
            assert!(d < 1e-12, "h-self-adjointness s={s}: {d}");
            let mut tr_err = 0.0f64;
            for pt in 0..16 * 16 {
                let t = linalg::trace(&p.data[pt * 9..pt * 9 + 9], 3);
                tr_err = tr_err.max((t - s as f64).norm());
            }
            assert!(tr_err < 1e-12, "trace s={s}: {tr_err}");
        }
        // nesting: π^s π^t = π^min(s,t) = π^t π^s
        let p1 = projection(&h, 1);
        let p2 = projection(&h, 2);
        let mut a = p1.mul(&p2);
        a.add_scaled(C::new(-1.0, 0.0), &p1);
        assert!(a.sup_abs() < 1e-12);
        let mut b2 = p2.mul(&p1);
        b2.add_scaled(C::new(-1.0, 0.0), &p1);
        assert!(b2.sup_abs() < 1e-12);
    }

    #[test]
    fn psi_trace_identities_hold_pointwise() {
        let b = bundle(16, &[1, 1, 0], CocycleSpec::None);
        let spec = FiltrationSpec::from_degrees(&b.degrees);
        let h = b.random_metric(2, 0.8);
        let ps = psi(&h, &spec);
        let deg: f64 = b.total_degree as f64;
        let phi2 = phi_squared(&spec.mu_vec);
        let p2 = ps.mul(&ps);
        for pt in 0..16 * 16 {
            let t = linalg::trace(&ps.data[pt * 9..pt * 9 + 9], 3);
            assert!((t - deg).norm() < 1e-12);
            let t2 = linalg::trace(&p2.data[pt * 9..pt * 9 + 9], 3);
            assert!((t2 - phi2).norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_transport_of_projection_is_background_orthogonal() {
        // w π(h) w⁻¹ with w = h^{1/2} is plain-Hermitian and idempotent —
        // exact linear algebra, no stencils involved.
        let b = bundle(16, &[1, 0], CocycleSpec::Theta { amplitude: 1.1 });
        let h = b.random_metric(4, 1.0);
        let w = metric_fn(&h, f64::sqrt);
        let w_inv = metric_fn(&h, |x| 1.0 / x.sqrt());
        let p = projection(&h, 1);
        let q = w.mul(&p).mul(&w_inv);
        assert!(q.hermiticity_defect() < 1e-12);
        let mut q2 = q.mul(&q);
        q2.add_scaled(C::new(-1.0, 0.0), &q);
        assert!(q2.sup_abs() < 1e-12);
    }

    #[test]
    fn chern_weil_degree_is_exact_at_background_metric() {
        // The curvature bump κ[ũ,ũ†] on the diagonal cancels ‖[ũ,π]‖²
        // pointwise, so flag degrees are exact integers even when the
        // extension is switched on.
        let b = bundle(32, &[1, 0], CocycleSpec::Theta { amplitude: 1.0 });
        let h = b.identity_metric();
        let pack = b.curvature(&h).unwrap();
        let d1 = chern_weil_degree(&b, &h, &pack, 1);
        assert!((d1 - 1.0).abs() < 1e-10, "deg L1 = {d1}");
        let d2 = chern_weil_degree(&b, &h, &pack, 2);
        assert!((d2 - 1.0).abs() < 1e-10, "deg E = {d2}");
    }

    #[test]
    fn chern_weil_degree_is_metric_stable() {
        // Under a generic metric the flag degree is only stencil-exact; it
        // must still land within snapping distance of the true integer.
        let b = bundle(32, &[1, 0], CocycleSpec::Theta { amplitude: 1.0 });
        let h = b.random_metric(12, 0.5);
        let pack = b.curvature(&h).unwrap();
        let d1 = chern_weil_degree(&b, &h, &pack, 1);
        assert!((d1 - 1.0).abs() < 5e-3, "deg L1 = {d1}");
    }

    #[test]
    fn hn_bruteforce_recovers_block_type() {
        for degrees in [vec![2, 1, 0], vec![1, 1, 0], vec![1, 0], vec![0, 0]] {
            let b = bundle(32, &degrees, CocycleSpec::None);
            let h = b.random_metric(3, 0.3);
            let pack = b.curvature(&h).unwrap();
            let (flags, mu) = hn_type_bruteforce(&b, &h, &pack, 0.02).unwrap();
            let spec = FiltrationSpec::from_degrees(&degrees);
            assert_eq!(flags, spec.flags, "degrees {degrees:?}");
            assert_eq!(mu, spec.mu_vec, "degrees {degrees:?}");
        }
    }

    #[test]
    fn hn_maximizes_phi_squared_over_decreasing_flags() {
        let b = bundle(32, &[2, 1, 0], CocycleSpec::None);
        let h = b.identity_metric();
        let pack = b.curvature(&h).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut best_flag = vec![];
        for flag in enumerate_standard_flags(3) {
            let mut degs = vec![];
            let mut prev_s = 0usize;
            let mut prev_d = 0.0;
            let mut slopes = vec![];
            for &s in &flag {
                let d = chern_weil_degree(&b, &h, &pack, s);
                slopes.push((d - prev_d) / (s - prev_s) as f64);
                degs.push(d);
                prev_s = s;
                prev_d = d;
            }
            if slopes.windows(2).any(|w| w[0] <= w[1] + 1e-9) {
                continue; // not slope-decreasing: inadmissible
            }
            let mut phi2 = 0.0;
            let mut prev_s = 0usize;
            for (i, &s) in flag.iter().enumerate() {
                phi2 += slopes[i] * slopes[i] * (s - prev_s) as f64;
                prev_s = s;
            }
            if phi2 > best {
                best = phi2;
                best_flag = flag.clone();
            }
        }
        assert_eq!(best_flag, vec![1, 2, 3]);
        assert!((best - 5.0).abs() < 1e-9);
    }

    #[test]
    fn dominance_order_basics() {
        assert!(dominance_leq(&[0.5, 0.5], &[1.0, 0.0], 1e-9).unwrap());
        assert!(!dominance_leq(&[1.0, 0.0], &[0.5, 0.5], 1e-9).unwrap());
        assert!(dominance_leq(&[1.0, 0.0], &[1.0, 0.0], 1e-9).unwrap());
        assert!(matches!(
            dominance_leq(&[1.0], &[1.0, 0.0], 1e-9),
            Err(FiltrationError::LengthMismatch(..))
        ));
        assert!(matches!(
            dominance_leq(&[1.0, 0.0], &[1.0, 0.5], 1e-9),
            Err(FiltrationError::UnequalTotals(..))
        ));
    }
}
