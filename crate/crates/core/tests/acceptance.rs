//! Acceptance gate: one printed PASS/FAIL line per numbered criterion.
//!
//! Run with `cargo test -p ymflow --test acceptance -- --nocapture` to see
//! the lines on success; on any failure the full report is shown by the
//! harness. All tolerances are pinned here, next to the check they govern.
//!
//! The shared corpus is six deterministic flow runs:
//!   A  rank-2 split L1⊕L0, n=64            — unstable, distinct slopes
//!   B  rank-2 nonsplit (1,0)-extension, n=64 — destabilized by its subline
//!   C  rank-2 trivial O⊕O, n=32            — polystable, equal slopes
//!   D  rank-3 split L2⊕L1⊕L0, n=32         — three-step filtration
//!   E  rank-2 nonsplit self-extension of O, n=32 — strictly semistable,
//!      converges only at a slow polynomial rate (stops at t_end)
//!   F  rank-1 L2, n=32                     — line bundle, immediate HYM

use num_complex::Complex64 as C;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use std::time::Instant;

use ymflow::bundle::{metric_fn, CocycleSpec, ModelBundle};
use ymflow::config::RunConfig;
use ymflow::filtration::{
    chern_weil_degree, dominance_leq, phi_squared, projection, psi, FiltrationSpec,
};
use ymflow::flow::{
    donaldson_flow, gauge_connection, path_integrals, path_integrals_detour, quad_tr_prod,
    ym_direct_step, ym_lambda_f, FlowParams, FlowStatus, FlowTrace, PATH_QUAD_NODES,
};
use ymflow::geometry::{GridField, TorusGeometry};
use ymflow::harness::{dominance_axioms_residual, execute_run};

// ---- pinned tolerances ----------------------------------------------------

/// Criterion 1: terminal ‖ΛF‖² vs Φ²(HN) on the split / nonsplit pair.
const AB_GAP_SPLIT: f64 = 1e-3;
const AB_GAP_NONSPLIT: f64 = 5e-3;
/// Criterion 1: wall-clock budget per run, seconds.
const RUN_WALL_LIMIT: f64 = 120.0;
/// Criterion 2: Y thresholds that must be crossed before t_end.
const Y_EPS_SPLIT: f64 = 1e-4;
const Y_EPS_NONSPLIT: f64 = 1e-3;
/// Criterion 2: allowed Y increase per flow step after the transient.
const Y_MONOTONE_PER_STEP: f64 = 1e-8;
/// Criteria 3 and 4: lower-bound slack floors.
const LOWER_BOUND_FLOOR: f64 = -1e-8;
const KEYINEQ_FLOOR: f64 = -1e-8;
/// Criterion 5: second-fundamental-form collapse at convergence, and the
/// float allowance on the per-sample comparison against ∫|ΛF−Ψ|.
const SFF_TERMINAL_BAR: f64 = 1e-3;
const SFF_L1_ALLOWANCE: f64 = 1e-12;
/// Criterion 6: gauge-correspondence identity bar at every sample (n=64).
const GAUGE_IDENTITY_BAR: f64 = 1e-6;
/// Criterion 6: dt-halving ratios of the gauge-invariant single-step defect
/// must sit near 4 (pure O(dt²)), and its coefficient must be grid-stable
/// (the spatial contribution is O(h⁴) or better, invisible at these grids).
const RICH_RATIO_LO: f64 = 3.5;
const RICH_RATIO_HI: f64 = 4.5;
const RICH_GRID_DRIFT: f64 = 0.25;
/// Criterion 7: two-path P residual bar.
const PATH_BAR: f64 = 1e-6;
/// Criterion 8: algebraic identity bars.
const PSI_SQUARE_BAR: f64 = 1e-10;
const PSI_TRACE_BAR: f64 = 1e-10;
const PSI_NORM_BAR: f64 = 1e-9;
/// Criterion 9: degree quantization / Chern-Weil flag-degree bars.
const DEGREE_INT_BAR: f64 = 1e-7;
const CW_FLAG_BAR: f64 = 5e-3;
/// Criterion 10: terminal spectrum must equal the HN type within 10× the
/// criterion-2 threshold for the run's class; dominance totals tolerance.
const DOMINANCE_TOL: f64 = 1e-6;
/// Criterion 11: spatial-order and time-order refinement bars.
const CW_ORDER4_MIN_RATIO: f64 = 8.0;
const DT_HALVING_LO: f64 = 1.7;
const DT_HALVING_HI: f64 = 2.3;

// ---- shared corpus ---------------------------------------------------------

struct RunOutcome {
    label: &'static str,
    /// 10·ε class for criterion 10 (criterion-2 thresholds).
    nonsplit: bool,
    expect_converged: bool,
    config: RunConfig,
    spec: FiltrationSpec,
    trace: FlowTrace,
    wall: f64,
}

fn corpus_configs() -> Vec<(&'static str, bool, bool, String)> {
    let run = |n: usize, degrees: &str, cocycle: &str, eps: f64, seed: u64, mag: f64| {
        format!(
            "[geometry]\nn_grid = {n}\n\n[bundle]\ndegrees = {degrees}\n{cocycle}\n\n\
             [flow]\ndt = 1e-3\nt_end = 50.0\nepsilon = {eps:e}\nsample_every = 50\n\n\
             [initial]\nseed = {seed}\nmagnitude = {mag}\n"
        )
    };
    let theta = "cocycle = \"theta\"\namplitude = 1.0";
    vec![
        ("A", false, true, run(64, "[1, 0]", "", 1e-6, 1, 0.08)),
        ("B", true, true, run(64, "[1, 0]", theta, 1e-6, 2, 0.08)),
        ("C", false, true, run(32, "[0, 0]", "", 1e-7, 3, 0.35)),
        ("D", false, true, run(32, "[2, 1, 0]", "", 1e-6, 4, 0.3)),
        ("E", true, false, run(32, "[0, 0]", theta, 1e-6, 5, 0.2)),
        ("F", false, true, run(32, "[2]", "", 1e-6, 6, 0.35)),
    ]
}

static CORPUS: Lazy<Vec<RunOutcome>> = Lazy::new(|| {
    corpus_configs()
        .into_par_iter()
        .map(|(label, nonsplit, expect_converged, toml)| {
            let config = RunConfig::from_toml(&toml, &[]).expect("corpus config must be valid");
            let started = Instant::now();
            let (_bundle, spec, trace) =
                execute_run(&config).expect("corpus run must start cleanly");
            RunOutcome {
                label,
                nonsplit,
                expect_converged,
                config,
                spec,
                trace,
                wall: started.elapsed().as_secs_f64(),
            }
        })
        .collect()
});

fn by_label(label: &str) -> &'static RunOutcome {
    CORPUS.iter().find(|r| r.label == label).unwrap()
}

fn first_crossing(trace: &FlowTrace, threshold: f64) -> Option<f64> {
    trace.samples.iter().find(|s| s.y < threshold).map(|s| s.t)
}

/// Worst per-sample Y increase after the transient (the global Y maximum),
/// normalized to the per-step budget by the sampling stride.
fn worst_post_transient_increase(trace: &FlowTrace) -> f64 {
    let onset = trace
        .samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.y.partial_cmp(&b.1.y).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    trace.samples[onset..]
        .windows(2)
        .map(|w| w[1].y - w[0].y)
        .fold(f64::NEG_INFINITY, f64::max)
}

// ---- standalone measurements (no corpus) -----------------------------------

/// Gauge-invariant single-step comparison of the two flow routes: from one
/// pre-flowed state, take one explicit step of the connection flow and one
/// of the metric flow, and compare the resulting Yang-Mills energies. The
/// connection paths themselves differ by a time-dependent gauge motion at
/// O(dt), so only gauge-invariant functionals are expected to agree at
/// O(dt²); the grids share the same continuum initial data so the quadratic
/// coefficient must be grid-stable.
struct RichardsonData {
    /// |E_direct − E_gauge| at n=32 for dt ∈ {4e-3, 2e-3, 1e-3}.
    e32: Vec<f64>,
    /// Same at n=64 for dt ∈ {1e-3, 5e-4, 2.5e-4} (explicit-step stability
    /// caps dt near 1.1e-3 at n=64).
    e64: Vec<f64>,
}

fn richardson_measurement() -> RichardsonData {
    let measure = |n: usize, dts: &[f64]| -> Vec<f64> {
        let geo = TorusGeometry::new(C::new(0.0, 1.0), n).unwrap();
        let b = ModelBundle::new(geo, &[1, 0], CocycleSpec::Theta { amplitude: 1.0 }).unwrap();
        let spec = FiltrationSpec::from_degrees(&b.degrees);
        let pre_params = FlowParams {
            dt: 1e-3,
            t_end: 1.0,
            epsilon: 0.0,
            sample_every: 1_000_000,
        };
        let pre = donaldson_flow(
            &b,
            &spec,
            &pre_params,
            b.random_metric(7, 0.3),
            Default::default(),
        );
        let h_star = pre.final_h;
        let w = metric_fn(&h_star, f64::sqrt);
        let w_inv = metric_fn(&h_star, |x| 1.0 / x.sqrt());
        let b0 = gauge_connection(&b, &w, &w_inv);
        dts.iter()
            .map(|&dt| {
                let one = FlowParams {
                    dt,
                    t_end: dt,
                    epsilon: 0.0,
                    sample_every: 1_000_000,
                };
                let step = donaldson_flow(&b, &spec, &one, h_star.clone(), Default::default());
                assert_eq!(step.steps, 1, "single-step run must not be clamped");
                let wn = metric_fn(&step.final_h, f64::sqrt);
                let wni = metric_fn(&step.final_h, |x| 1.0 / x.sqrt());
                let lf_gauge = ym_lambda_f(&b, &gauge_connection(&b, &wn, &wni));
                let lf_direct = ym_lambda_f(&b, &ym_direct_step(&b, &b0, dt));
                (quad_tr_prod(&lf_direct, &lf_direct).re - quad_tr_prod(&lf_gauge, &lf_gauge).re)
                    .abs()
            })
            .collect()
    };
    RichardsonData {
        e32: measure(32, &[4e-3, 2e-3, 1e-3]),
        e64: measure(64, &[1e-3, 5e-4, 2.5e-4]),
    }
}

/// Two-path P residuals for five random target metrics at n=64.
fn path_residuals() -> Vec<f64> {
    let geo = TorusGeometry::new(C::new(0.0, 1.0), 64).unwrap();
    let b = ModelBundle::new(geo, &[1, 0], CocycleSpec::None).unwrap();
    let spec = FiltrationSpec::from_degrees(&b.degrees);
    let h0 = b.identity_metric();
    (101u64..=105)
        .map(|seed| {
            let h1 = b.random_metric(seed, 0.3);
            let direct = path_integrals(&b, &spec, &h0, &h1, PATH_QUAD_NODES).unwrap();
            let detour = path_integrals_detour(&b, &spec, &h0, &h1, PATH_QUAD_NODES).unwrap();
            (direct.p - detour.p).abs()
        })
        .collect()
}

/// Ψ identity residuals (square, pointwise trace, L² norm), maximized over
/// ten random metrics on the rank-3 split bundle.
fn psi_identity_residuals() -> (f64, f64, f64) {
    let geo = TorusGeometry::new(C::new(0.0, 1.0), 32).unwrap();
    let b = ModelBundle::new(geo, &[2, 1, 0], CocycleSpec::None).unwrap();
    let spec = FiltrationSpec::from_degrees(&b.degrees);
    let r = b.rank;
    let (mut sq, mut tr, mut norm) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 201u64..=210 {
        let h = b.random_metric(seed, 0.35);
        let psi_f = psi(&h, &spec);
        // Ψ² must equal the same projection sum with squared slopes.
        let mut expected = GridField::zeros(h.n, b.degrees.clone(), b.degrees.clone());
        let mut prev: Option<GridField> = None;
        for (block, &f) in spec.flags.iter().enumerate() {
            let mu2 = C::new(spec.slopes[block] * spec.slopes[block], 0.0);
            let p = projection(&h, f);
            expected.add_scaled(mu2, &p);
            if let Some(pr) = &prev {
                expected.add_scaled(-mu2, pr);
            }
            prev = Some(p);
        }
        let mut psi_sq = psi_f.mul(&psi_f);
        psi_sq.add_scaled(C::new(-1.0, 0.0), &expected);
        sq = sq.max(psi_sq.sup_abs());
        for p in 0..h.n * h.n {
            let mut t = C::new(0.0, 0.0);
            for a in 0..r {
                t += psi_f.data[(p * r + a) * r + a];
            }
            tr = tr.max((t - C::new(b.total_degree as f64, 0.0)).norm());
        }
        norm = norm.max((quad_tr_prod(&psi_f, &psi_f).re - phi_squared(&spec.mu_vec)).abs());
    }
    (sq, tr, norm)
}

/// Degree integrality and Chern-Weil flag degrees at n=64 over random
/// metrics, for the rank-3 split bundle and the rank-2 nonsplit extension.
fn degree_residuals() -> (f64, f64) {
    let mut int_res = 0.0f64;
    let mut cw_res = 0.0f64;
    let cases: [(&[i32], CocycleSpec); 2] = [
        (&[2, 1, 0], CocycleSpec::None),
        (&[1, 0], CocycleSpec::Theta { amplitude: 1.0 }),
    ];
    for (degrees, coc) in cases {
        let geo = TorusGeometry::new(C::new(0.0, 1.0), 64).unwrap();
        let b = ModelBundle::new(geo, degrees, coc).unwrap();
        let total: i32 = degrees.iter().sum();
        for seed in 301u64..=303 {
            let h = b.random_metric(seed, 0.3);
            let pack = b.curvature(&h).unwrap();
            let d = pack.degree();
            int_res = int_res.max((d - d.round()).abs());
            int_res = int_res.max((d - total as f64).abs());
            for s in 1..degrees.len() {
                let want: i32 = degrees[..s].iter().sum();
                let cw = chern_weil_degree(&b, &h, &pack, s);
                cw_res = cw_res.max((cw - want as f64).abs());
            }
        }
    }
    (int_res, cw_res)
}

/// Criterion 11a: flag-degree error of the 4th-order stencil at n=32 vs
/// n=64 on the same continuum metric (the random-metric mode cutoff is
/// identical at both grids).
fn order4_cw_errors() -> (f64, f64) {
    let err_at = |n: usize| {
        let geo = TorusGeometry::with_stencil_order(C::new(0.0, 1.0), n, 4).unwrap();
        let b = ModelBundle::new(geo, &[1, 0], CocycleSpec::Theta { amplitude: 1.0 }).unwrap();
        let h = b.random_metric(5, 0.35);
        let pack = b.curvature(&h).unwrap();
        (chern_weil_degree(&b, &h, &pack, 1) - 1.0).abs()
    };
    (err_at(32), err_at(64))
}

/// Criterion 11b: terminal Y at t=1 for dt ∈ {2e-3, 1e-3, 5e-4} (n=32).
fn dt_halving_ys() -> Vec<f64> {
    let geo = TorusGeometry::new(C::new(0.0, 1.0), 32).unwrap();
    let b = ModelBundle::new(geo, &[1, 0], CocycleSpec::Theta { amplitude: 1.0 }).unwrap();
    let spec = FiltrationSpec::from_degrees(&b.degrees);
    let h0 = b.random_metric(8, 0.3);
    [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| {
            let params = FlowParams {
                dt,
                t_end: 1.0,
                epsilon: 0.0,
                sample_every: 1_000_000,
            };
            donaldson_flow(&b, &spec, &params, h0.clone(), Default::default())
                .samples
                .last()
                .unwrap()
                .y
        })
        .collect()
}

// ---- the gate ---------------------------------------------------------------

#[test]
fn acceptance_criteria() {
    // Gather every measurement up front; the corpus and the standalone
    // probes all run in parallel.
    let (_, (rich, (paths, (psi_res, (deg_res, (cw4, dt_ys)))))) = rayon::join(
        || Lazy::force(&CORPUS),
        || {
            rayon::join(richardson_measurement, || {
                rayon::join(path_residuals, || {
                    rayon::join(psi_identity_residuals, || {
                        rayon::join(degree_residuals, || {
                            rayon::join(order4_cw_errors, dt_halving_ys)
                        })
                    })
                })
            })
        },
    );

    let mut lines: Vec<(u32, bool, String)> = vec![];

    // 1 — terminal ‖ΛF‖² equals Φ²(HN) = 1 on the split pair, within budget.
    {
        let a = by_label("A");
        let b = by_label("B");
        let gap_a = (a.trace.samples.last().unwrap().hym_energy - 1.0).abs();
        let gap_b = (b.trace.samples.last().unwrap().hym_energy - 1.0).abs();
        let pass = a.trace.status == FlowStatus::Converged
            && b.trace.status == FlowStatus::Converged
            && gap_a <= AB_GAP_SPLIT
            && gap_b <= AB_GAP_NONSPLIT
            && a.wall <= RUN_WALL_LIMIT
            && b.wall <= RUN_WALL_LIMIT;
        lines.push((1, pass, format!(
            "terminal |‖ΛF‖²−1|: split {gap_a:.2e} (≤{AB_GAP_SPLIT:.0e}), nonsplit {gap_b:.2e} (≤{AB_GAP_NONSPLIT:.0e}); walls {:.1}s/{:.1}s (≤{RUN_WALL_LIMIT:.0}s)",
            a.wall, b.wall
        )));
    }

    // 2 — Y drops below the per-class ε before t_end and stays non-increasing
    //     after the transient.
    {
        let a = by_label("A");
        let b = by_label("B");
        let cross_a = first_crossing(&a.trace, Y_EPS_SPLIT);
        let cross_b = first_crossing(&b.trace, Y_EPS_NONSPLIT);
        let budget = Y_MONOTONE_PER_STEP * a.config.flow.sample_every as f64;
        let inc_a = worst_post_transient_increase(&a.trace);
        let inc_b = worst_post_transient_increase(&b.trace);
        let pass = cross_a.is_some() && cross_b.is_some() && inc_a <= budget && inc_b <= budget;
        lines.push((2, pass, format!(
            "Y<{Y_EPS_SPLIT:.0e} at t={:.2} (split), Y<{Y_EPS_NONSPLIT:.0e} at t={:.2} (nonsplit); worst post-transient ΔY {inc_a:+.1e}/{inc_b:+.1e} (≤{budget:.0e} per sample)",
            cross_a.unwrap_or(f64::NAN),
            cross_b.unwrap_or(f64::NAN)
        )));
    }

    // 3 — ‖ΛF‖² ≥ ‖Ψ‖² at every sampled state of every run.
    {
        let mut worst = f64::INFINITY;
        let mut samples = 0usize;
        for r in CORPUS.iter() {
            let floor = phi_squared(&r.spec.mu_vec);
            for s in &r.trace.samples {
                worst = worst.min(s.hym_energy - floor);
                samples += 1;
            }
        }
        let pass = worst >= LOWER_BOUND_FLOOR && samples >= 100 && CORPUS.len() >= 5;
        lines.push((3, pass, format!(
            "min(‖ΛF‖² − Σμᵢ²) = {worst:+.2e} (≥{LOWER_BOUND_FLOOR:.0e}) over {samples} samples in {} runs",
            CORPUS.len()
        )));
    }

    // 4 — key inequality slack at every sample of every run.
    {
        let worst = CORPUS
            .iter()
            .flat_map(|r| r.trace.samples.iter().map(|s| s.keyineq_slack))
            .fold(f64::INFINITY, f64::min);
        let pass = worst >= KEYINEQ_FLOOR;
        lines.push((4, pass, format!(
            "min key-inequality slack = {worst:+.2e} (≥{KEYINEQ_FLOOR:.0e})"
        )));
    }

    // 5 — second-fundamental-form collapse on the nonsplit extension, and
    //     the per-sample bound ‖∂̄π¹‖² ≤ ∫|ΛF−Ψ|.
    {
        let b = by_label("B");
        let terminal = b.trace.samples.last().unwrap().sff[0];
        let excess = b
            .trace
            .samples
            .iter()
            .map(|s| s.sff[0] - s.l1_gap)
            .fold(f64::NEG_INFINITY, f64::max);
        let pass = terminal <= SFF_TERMINAL_BAR && excess <= SFF_L1_ALLOWANCE;
        lines.push((5, pass, format!(
            "terminal ‖∂̄π¹‖² = {terminal:.2e} (≤{SFF_TERMINAL_BAR:.0e}); max(‖∂̄π¹‖² − ∫|ΛF−Ψ|) = {excess:+.2e} (≤{SFF_L1_ALLOWANCE:.0e})"
        )));
    }

    // 6 — gauge correspondence: transported-curvature identity at every
    //     sample, plus the O(dt²)+O(h⁴) single-step cross-check.
    {
        let max_gauge = ["A", "B"]
            .iter()
            .flat_map(|l| by_label(l).trace.samples.iter().map(|s| s.gauge_residual))
            .fold(0.0f64, f64::max);
        let ratios = [
            rich.e32[0] / rich.e32[1],
            rich.e32[1] / rich.e32[2],
            rich.e64[0] / rich.e64[1],
            rich.e64[1] / rich.e64[2],
        ];
        let ratios_ok = ratios
            .iter()
            .all(|r| (RICH_RATIO_LO..=RICH_RATIO_HI).contains(r));
        // Same dt = 1e-3 at both grids: the quadratic coefficient must not
        // drift, otherwise a spatial term larger than O(h⁴) is hiding in it.
        let drift = (rich.e32[2] / rich.e64[0] - 1.0).abs();
        let pass = max_gauge <= GAUGE_IDENTITY_BAR && ratios_ok && drift <= RICH_GRID_DRIFT;
        lines.push((6, pass, format!(
            "max ‖ΛF_ym − wΛFw⁻¹‖ = {max_gauge:.2e} (≤{GAUGE_IDENTITY_BAR:.0e}); energy-defect dt-halving ratios {:.2} {:.2} {:.2} {:.2} (∈[{RICH_RATIO_LO},{RICH_RATIO_HI}]); grid drift {drift:.1e} (≤{RICH_GRID_DRIFT})",
            ratios[0], ratios[1], ratios[2], ratios[3]
        )));
    }

    // 7 — path independence of the P functional.
    {
        let worst = paths.iter().cloned().fold(0.0f64, f64::max);
        let pass = worst <= PATH_BAR;
        lines.push((7, pass, format!(
            "max two-path P residual over 5 targets = {worst:.2e} (≤{PATH_BAR:.0e})"
        )));
    }

    // 8 — Ψ algebraic identities across 10 random metrics.
    {
        let (sq, tr, norm) = psi_res;
        let pass = sq <= PSI_SQUARE_BAR && tr <= PSI_TRACE_BAR && norm <= PSI_NORM_BAR;
        lines.push((8, pass, format!(
            "sup|Ψ²−Σμᵢ²Δπᵢ| = {sq:.2e} (≤{PSI_SQUARE_BAR:.0e}); sup|TrΨ−deg| = {tr:.2e} (≤{PSI_TRACE_BAR:.0e}); |‖Ψ‖²−Σμᵢ²| = {norm:.2e} (≤{PSI_NORM_BAR:.0e})"
        )));
    }

    // 9 — degree quantization and Chern-Weil flag degrees at n=64.
    {
        let (int_res, cw_res) = deg_res;
        let pass = int_res <= DEGREE_INT_BAR && cw_res <= CW_FLAG_BAR;
        lines.push((9, pass, format!(
            "max degree deviation = {int_res:.2e} (≤{DEGREE_INT_BAR:.0e}); max |CW flag degree − Σd_a| = {cw_res:.2e} (≤{CW_FLAG_BAR:.0e})"
        )));
    }

    // 10 — terminal spectra dominate the HN type, equal it on converged
    //      runs, and the comparator satisfies the partial-order axioms.
    {
        let mut not_dominated: Vec<&str> = vec![];
        let mut bad_status: Vec<&str> = vec![];
        let mut over_bar: Vec<&str> = vec![];
        let mut worst_gap_conv = 0.0f64;
        for r in CORPUS.iter() {
            let last = r.trace.samples.last().unwrap();
            let dom = dominance_leq(&r.spec.mu_vec, &last.spectrum, DOMINANCE_TOL)
                .unwrap_or(false);
            if !dom {
                not_dominated.push(r.label);
            }
            let converged = r.trace.status == FlowStatus::Converged;
            if converged != r.expect_converged {
                bad_status.push(r.label);
            }
            if converged {
                let gap = r
                    .spec
                    .mu_vec
                    .iter()
                    .zip(&last.spectrum)
                    .map(|(m, l)| (m - l).abs())
                    .fold(0.0f64, f64::max);
                let bar = 10.0 * if r.nonsplit { Y_EPS_NONSPLIT } else { Y_EPS_SPLIT };
                worst_gap_conv = worst_gap_conv.max(gap / bar);
                if gap > bar {
                    over_bar.push(r.label);
                }
            }
        }
        let axiom_violations = dominance_axioms_residual(20260814, 1000);
        let pass = not_dominated.is_empty()
            && bad_status.is_empty()
            && over_bar.is_empty()
            && axiom_violations == 0.0;
        lines.push((10, pass, format!(
            "μ⃗_HN ⊴ λ⃗: {}; statuses: {}; converged |λ−μ| ≤ 10·ε: {} (worst at {:.2}× bar); axiom violations {axiom_violations}/1000",
            if not_dominated.is_empty() { "all 6 runs".into() } else { format!("VIOLATED on {not_dominated:?}") },
            if bad_status.is_empty() { "as designed (5 converged, 1 at t_end)".into() } else { format!("UNEXPECTED on {bad_status:?}") },
            if over_bar.is_empty() { "all converged runs".into() } else { format!("EXCEEDED on {over_bar:?}") },
            worst_gap_conv
        )));
    }

    // 11 — discretization sanity: spatial order (4th-order stencil) and
    //      first-order time stepping.
    {
        let (err32, err64) = cw4;
        let ratio = err32 / err64;
        let dt_ratio = (dt_ys[0] - dt_ys[1]) / (dt_ys[1] - dt_ys[2]);
        let pass = ratio >= CW_ORDER4_MIN_RATIO
            && (DT_HALVING_LO..=DT_HALVING_HI).contains(&dt_ratio);
        lines.push((11, pass, format!(
            "order-4 degree-error ratio n32/n64 = {ratio:.1} (≥{CW_ORDER4_MIN_RATIO}); dt-halving Y ratio = {dt_ratio:.3} (∈[{DT_HALVING_LO},{DT_HALVING_HI}])"
        )));
    }

    let mut all_pass = true;
    for (num, pass, detail) in &lines {
        println!(
            "ACCEPTANCE {num:02} {} — {detail}",
            if *pass { "PASS" } else { "FAIL" }
        );
        all_pass &= pass;
    }
    assert!(all_pass, "one or more acceptance criteria failed (see lines above)");
}
