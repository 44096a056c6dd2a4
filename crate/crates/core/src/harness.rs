//! Experiment drivers behind the CLI: single runs, amplitude sweeps, and the
//! verify battery. A run writes three artifacts into its output directory:
//!
//! - `trace.csv` — one row per sample, fixed column set, byte-deterministic
//!   for a given config + seed within one build;
//! - `manifest.json` — config echo, calibration constants, version, timing,
//!   terminal summary (enough to reproduce the run bit-comparably);
//! - `summary.txt` — human-readable digest including the comparison of
//!   inf ‖ΛF‖² against sup_F Φ(F)².

use crate::bundle::{BundleError, CurvatureError, ModelBundle};
use crate::config::{ConfigError, RunConfig};
use crate::filtration::{
    dominance_leq, hn_type_bruteforce, phi_squared, projection, psi, FiltrationSpec,
};
use crate::flow::{
    donaldson_flow, path_integrals, path_integrals_detour, quad_tr_prod, FlowStatus, FlowTrace,
    PathIntegrals, Sample, PATH_QUAD_NODES,
};
use crate::geometry::GridField;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Integer-snap window for measured Chern-Weil flag degrees.
pub const DEGREE_SNAP: f64 = 0.02;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("bundle construction failed: {0}")]
    Bundle(#[from] BundleError),
    #[error("curvature evaluation failed: {0}")]
    Curvature(#[from] CurvatureError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl HarnessError {
    /// CLI exit code: 4 for anything the user can fix in the config or
    /// environment, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io { .. } => 4,
            HarnessError::Bundle(_) | HarnessError::Curvature(_) => 3,
        }
    }
}

/// Exit code for a completed flow: 0 converged, 2 hit t_end short of the
/// threshold, 3 numerical abort.
pub fn status_exit_code(status: &FlowStatus) -> i32 {
    match status {
        FlowStatus::Converged => 0,
        FlowStatus::ReachedTEnd => 2,
        FlowStatus::Aborted(_) => 3,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationConstants {
    /// Fitted coefficient c in ∂̄θ̃ = −c·y·θ̃ for the degree-1 section
    /// (re, im); pinned to πi by construction, recorded as measured.
    pub background_connection_coefficient: [f64; 2],
    pub calibration_fit_residual: f64,
    /// Exponent rate in the holomorphic-frame background metric
    /// H₀ = exp(−d·rate·y²) per summand.
    pub background_metric_exponent_rate: f64,
    /// Contraction weight Λ(dz∧dz̄-component) = Imτ/π.
    pub lambda_factor: f64,
    /// ΛF of the background metric is pinned to diag(degrees).
    pub background_lambda_f: Vec<f64>,
    pub background_lambda_f_deviation: f64,
    pub stencil_order: usize,
    /// Explicit-step stability ceiling 1.8/σ_max for this grid and stencil.
    pub dt_stability_limit: f64,
}

fn calibration_constants(bundle: &ModelBundle) -> CalibrationConstants {
    let h0 = bundle.identity_metric();
    let dev = bundle
        .curvature(&h0)
        .map(|pack| {
            let mut d = pack.lambda_f.clone();
            for p in 0..d.n * d.n {
                for a in 0..d.rows {
                    let idx = (p * d.rows + a) * d.cols + a;
                    d.data[idx] -= C::new(bundle.degrees[a] as f64, 0.0);
                }
            }
            d.sup_abs()
        })
        .unwrap_or(f64::NAN);
    let c = bundle.calibration.connection_coefficient;
    CalibrationConstants {
        background_connection_coefficient: [c.re, c.im],
        calibration_fit_residual: bundle.calibration.fit_residual,
        background_metric_exponent_rate: 2.0 * std::f64::consts::PI * bundle.geo.tau.im,
        lambda_factor: bundle.geo.lambda_factor(),
        background_lambda_f: bundle.degrees.iter().map(|&d| d as f64).collect(),
        background_lambda_f_deviation: dev,
        stencil_order: bundle.geo.stencil_order,
        dt_stability_limit: 1.8 / bundle.geo.heat_symbol_max(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TerminalSummary {
    pub t: f64,
    pub y: f64,
    pub hym_energy: f64,
    /// inf over the sampled trajectory of ‖ΛF‖²_{L²(h)}.
    pub inf_hym_energy: f64,
    /// Grid-averaged descending spectrum of ΛF at the final sample.
    pub spectrum: Vec<f64>,
    /// Measured Harder-Narasimhan type (slope per summand), if the flag
    /// degrees snapped to integers.
    pub hn_type: Option<Vec<f64>>,
    /// sup_F Φ(F)² = Σ μᵢ² of the HN type.
    pub sup_phi_squared: Option<f64>,
    /// inf ‖ΛF‖² − sup Φ(F)² (the quantity driven to zero by the flow).
    pub atiyah_bott_gap: Option<f64>,
    /// "PASS"/"FAIL": sorted partial sums of the HN type stay ≤ those of the
    /// terminal spectrum (equal totals), or why the check was unavailable.
    pub dominance: String,
    pub max_spectrum_vs_hn_gap: Option<f64>,
    pub max_gauge_residual: f64,
    pub min_keyineq_slack: f64,
}

fn terminal_summary(bundle: &ModelBundle, trace: &FlowTrace) -> Option<TerminalSummary> {
    let last = trace.samples.last()?;
    let inf_hym = trace
        .samples
        .iter()
        .map(|s| s.hym_energy)
        .fold(f64::INFINITY, f64::min);
    let max_gauge = trace
        .samples
        .iter()
        .map(|s| s.gauge_residual)
        .fold(0.0, f64::max);
    let min_slack = trace
        .samples
        .iter()
        .map(|s| s.keyineq_slack)
        .fold(f64::INFINITY, f64::min);

    let hn = bundle
        .curvature(&trace.final_h)
        .ok()
        .and_then(|pack| hn_type_bruteforce(bundle, &trace.final_h, &pack, DEGREE_SNAP).ok());
    let (hn_type, sup_phi, gap, dominance, spec_gap) = match hn {
        Some((_, mu)) => {
            let sp = phi_squared(&mu);
            let verdict = match dominance_leq(&mu, &last.spectrum, 1e-6) {
                Ok(true) => "PASS".to_string(),
                Ok(false) => "FAIL".to_string(),
                Err(e) => format!("UNAVAILABLE: {e}"),
            };
            let sgap = mu
                .iter()
                .zip(&last.spectrum)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (
                Some(mu),
                Some(sp),
                Some(inf_hym - sp),
                verdict,
                Some(sgap),
            )
        }
        None => (
            None,
            None,
            None,
            "UNAVAILABLE: flag degrees did not snap to integers".to_string(),
            None,
        ),
    };
    Some(TerminalSummary {
        t: last.t,
        y: last.y,
        hym_energy: last.hym_energy,
        inf_hym_energy: inf_hym,
        spectrum: last.spectrum.clone(),
        hn_type,
        sup_phi_squared: sup_phi,
        atiyah_bott_gap: gap,
        dominance,
        max_spectrum_vs_hn_gap: spec_gap,
        max_gauge_residual: max_gauge,
        min_keyineq_slack: min_slack,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub config: RunConfig,
    pub calibration: CalibrationConstants,
    pub status: String,
    pub steps: usize,
    pub samples: usize,
    pub wall_clock_seconds: f64,
    pub terminal: Option<TerminalSummary>,
}

/// Stable lower-case rendering used in manifest.json and the C API.
pub fn status_string(status: &FlowStatus) -> String {
    match status {
        FlowStatus::Converged => "converged".into(),
        FlowStatus::ReachedTEnd => "reached_t_end".into(),
        FlowStatus::Aborted(msg) => format!("aborted: {msg}"),
    }
}

/// Fixed trace schema: t, energies, the two functionals, one column per
/// proper flag, one per spectrum entry, then the two residuals.
pub fn trace_header(spec: &FiltrationSpec, rank: usize) -> String {
    let mut s = String::from("t,ym_energy,hym_energy,Y,P,M");
    for i in 1..=spec.proper_flags() {
        write!(s, ",sff_{i}").unwrap();
    }
    for a in 1..=rank {
        write!(s, ",spec_{a}").unwrap();
    }
    s.push_str(",keyineq_slack,gauge_residual");
    s
}

pub fn trace_row(sample: &Sample) -> String {
    let mut s = String::new();
    write!(
        s,
        "{:e},{:e},{:e},{:e},{:e},{:e}",
        sample.t, sample.ym_energy, sample.hym_energy, sample.y, sample.p, sample.m
    )
    .unwrap();
    for v in &sample.sff {
        write!(s, ",{v:e}").unwrap();
    }
    for v in &sample.spectrum {
        write!(s, ",{v:e}").unwrap();
    }
    write!(s, ",{:e},{:e}", sample.keyineq_slack, sample.gauge_residual).unwrap();
    s
}

pub fn render_trace_csv(spec: &FiltrationSpec, rank: usize, samples: &[Sample]) -> String {
    let mut out = trace_header(spec, rank);
    out.push('\n');
    for s in samples {
        out.push_str(&trace_row(s));
        out.push('\n');
    }
    out
}

fn fmt_vec(v: &[f64]) -> String {
    let body: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", body.join(", "))
}

fn render_summary(cfg: &RunConfig, manifest: &Manifest) -> String {
    let mut s = String::new();
    let b = &cfg.bundle;
    writeln!(s, "run summary").unwrap();
    writeln!(s, "===========").unwrap();
    writeln!(
        s,
        "bundle: degrees {:?}, cocycle {} (amplitude {}), tau = {} + {}i, n_grid = {}, stencil order {}",
        b.degrees,
        b.cocycle,
        b.amplitude,
        cfg.geometry.tau_re,
        cfg.geometry.tau_im,
        cfg.geometry.n_grid,
        cfg.geometry.stencil_order
    )
    .unwrap();
    writeln!(
        s,
        "status: {} after {} steps ({:.1} s wall clock)",
        manifest.status, manifest.steps, manifest.wall_clock_seconds
    )
    .unwrap();
    match &manifest.terminal {
        None => writeln!(s, "no samples recorded").unwrap(),
        Some(t) => {
            writeln!(s, "terminal t                 = {:.6}", t.t).unwrap();
            writeln!(s, "terminal Y                 = {:.6e}", t.y).unwrap();
            writeln!(s, "terminal ||ΛF||²_L²        = {:.8}", t.hym_energy).unwrap();
            match (t.sup_phi_squared, t.atiyah_bott_gap) {
                (Some(sp), Some(gap)) => {
                    writeln!(
                        s,
                        "inf ||ΛF||² vs sup Φ(F)²   = {:.8} vs {:.8}  (gap {:+.3e})",
                        t.inf_hym_energy, sp, gap
                    )
                    .unwrap();
                }
                _ => {
                    writeln!(
                        s,
                        "inf ||ΛF||² vs sup Φ(F)²   = {:.8} vs unavailable",
                        t.inf_hym_energy
                    )
                    .unwrap();
                }
            }
            writeln!(s, "limit spectrum λ           = {}", fmt_vec(&t.spectrum)).unwrap();
            match &t.hn_type {
                Some(mu) => writeln!(s, "HN type μ                  = {}", fmt_vec(mu)).unwrap(),
                None => writeln!(s, "HN type μ                  = unavailable").unwrap(),
            }
            writeln!(s, "dominance μ ≼ λ            = {}", t.dominance).unwrap();
            writeln!(s, "max gauge residual         = {:.3e}", t.max_gauge_residual).unwrap();
            writeln!(s, "min key-inequality slack   = {:+.3e}", t.min_keyineq_slack).unwrap();
        }
    }
    s
}

/// Build the bundle and run the flow for a single (non-sweep) config.
pub fn execute_run(
    cfg: &RunConfig,
) -> Result<(ModelBundle, FiltrationSpec, FlowTrace), HarnessError> {
    let bundle = cfg.build_bundle()?;
    let spec = FiltrationSpec::from_degrees(&bundle.degrees);
    let h0 = bundle.random_metric(cfg.initial.seed, cfg.initial.magnitude);
    // Seed the accumulators with the path integrals from the background to
    // the perturbed start, so P and M are absolute (background-based). A
    // failure here means the start metric itself is unusable; fall through
    // with zero seeds and let the flow record the abort in its trace.
    let init = if cfg.initial.magnitude == 0.0 {
        PathIntegrals::default()
    } else {
        path_integrals(&bundle, &spec, &bundle.identity_metric(), &h0, PATH_QUAD_NODES)
            .unwrap_or_default()
    };
    let trace = donaldson_flow(&bundle, &spec, &cfg.flow_params(), h0, init);
    Ok((bundle, spec, trace))
}

#[derive(Debug)]
pub struct RunReport {
    pub manifest: Manifest,
    pub exit_code: i32,
    pub out_dir: PathBuf,
}

/// Write trace.csv / manifest.json / summary.txt for an already-computed
/// trace. Also the backend of `ymf_run_write_artifacts` in the C ABI.
pub fn write_artifacts(
    cfg: &RunConfig,
    bundle: &ModelBundle,
    spec: &FiltrationSpec,
    trace: &FlowTrace,
    wall_clock_seconds: f64,
    out_dir: &Path,
) -> Result<Manifest, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv = render_trace_csv(spec, bundle.rank, &trace.samples);
    let csv_path = out_dir.join("trace.csv");
    std::fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;

    let manifest = Manifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        calibration: calibration_constants(bundle),
        status: status_string(&trace.status),
        steps: trace.steps,
        samples: trace.samples.len(),
        wall_clock_seconds,
        terminal: terminal_summary(bundle, trace),
    };
    let json_path = out_dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    std::fs::write(&json_path, json).map_err(io_err(&json_path))?;

    let txt_path = out_dir.join("summary.txt");
    std::fs::write(&txt_path, render_summary(cfg, &manifest)).map_err(io_err(&txt_path))?;
    Ok(manifest)
}

/// Run one config and write trace.csv / manifest.json / summary.txt into
/// `out_dir`. The trace is retained even when the flow aborts.
pub fn run_to_dir(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    let (bundle, spec, trace) = execute_run(cfg)?;
    let wall = started.elapsed().as_secs_f64();
    let manifest = write_artifacts(cfg, &bundle, &spec, &trace, wall, out_dir)?;
    Ok(RunReport {
        manifest,
        exit_code: status_exit_code(&trace.status),
        out_dir: out_dir.to_path_buf(),
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    run_to_dir(cfg, Path::new(&cfg.out_dir))
}

#[derive(Debug, Serialize)]
pub struct SweepMember {
    pub dir: String,
    pub amplitude: f64,
    pub status: String,
    pub exit_code: i32,
    pub terminal_y: Option<f64>,
    pub terminal_hym_energy: Option<f64>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepIndex {
    pub artifact_version: String,
    pub base_config: RunConfig,
    pub members: Vec<SweepMember>,
}

/// One run per sweep amplitude, each in its own subdirectory, plus a shared
/// index.json. Members are independent, so they run in parallel.
pub fn sweep(cfg: &RunConfig) -> Result<(SweepIndex, i32), HarnessError> {
    if !cfg.is_sweep() {
        return Err(ConfigError::Invalid(
            "sweep requires a non-empty [sweep] amplitudes list".into(),
        )
        .into());
    }
    let base = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(base).map_err(io_err(base))?;
    let reports: Vec<Result<(String, f64, RunReport), HarnessError>> = cfg
        .sweep
        .amplitudes
        .par_iter()
        .enumerate()
        .map(|(i, &amp)| {
            let dir_name = format!("amp_{i:02}");
            let member = cfg.sweep_member(amp);
            let report = run_to_dir(&member, &base.join(&dir_name))?;
            Ok((dir_name, amp, report))
        })
        .collect();

    let mut members = vec![];
    let mut exit = 0;
    for r in reports {
        let (dir, amplitude, report) = r?;
        exit = exit.max(report.exit_code);
        members.push(SweepMember {
            dir,
            amplitude,
            status: report.manifest.status.clone(),
            exit_code: report.exit_code,
            terminal_y: report.manifest.terminal.as_ref().map(|t| t.y),
            terminal_hym_energy: report.manifest.terminal.as_ref().map(|t| t.hym_energy),
            wall_clock_seconds: report.manifest.wall_clock_seconds,
        });
    }
    let index = SweepIndex {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        base_config: cfg.clone(),
        members,
    };
    let path = base.join("index.json");
    let mut json = serde_json::to_string_pretty(&index).expect("index serializes");
    json.push('\n');
    std::fs::write(&path, json).map_err(io_err(&path))?;
    Ok((index, exit))
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyItem {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

fn item(name: &'static str, residual: f64, tolerance: f64, detail: String) -> VerifyItem {
    VerifyItem {
        name,
        residual,
        tolerance,
        pass: residual.is_finite() && residual <= tolerance,
        detail,
    }
}

pub const VERIFY_FAULT_KEYS: &[&str] = &[
    "projection-idempotent",
    "projection-selfadjoint",
    "projection-trace",
    "projection-nesting",
    "psi-square",
    "psi-trace",
    "psi-norm",
    "degree-integrality",
    "degree-metric-independence",
    "path-independence",
    "dominance-axioms",
    "keyineq-slack",
];

/// The invariant battery behind `ymflow verify`: projection axioms, the Ψ
/// identities, degree quantization and metric independence, path independence
/// of P, dominance-order properties, and the key-inequality sign. `fault`
/// breaks the named item's tolerance (test mode) so the failure path of the
/// report is exercisable.
pub fn verify(cfg: &RunConfig, fault: Option<&str>) -> Result<Vec<VerifyItem>, HarnessError> {
    if let Some(f) = fault {
        if !VERIFY_FAULT_KEYS.contains(&f) {
            return Err(ConfigError::Invalid(format!(
                "unknown fault key `{f}`; known keys: {}",
                VERIFY_FAULT_KEYS.join(", ")
            ))
            .into());
        }
    }
    let bundle = cfg.build_bundle()?;
    let spec = FiltrationSpec::from_degrees(&bundle.degrees);
    let r = bundle.rank;
    let seed = cfg.initial.seed;
    let h = bundle.random_metric(seed.wrapping_add(11), 0.35);
    let mut items = vec![];

    // --- projection axioms over every coordinate flag ---
    let projections: Vec<GridField> = (1..=r).map(|s| projection(&h, s)).collect();
    let mut idem = 0.0f64;
    let mut sa = 0.0f64;
    let mut tr = 0.0f64;
    for (s, p) in projections.iter().enumerate() {
        let mut sq = p.mul(p);
        sq.add_scaled(C::new(-1.0, 0.0), p);
        idem = idem.max(sq.sup_abs());
        let mut lhs = h.mul(p);
        lhs.add_scaled(C::new(-1.0, 0.0), &p.adjoint().mul(&h));
        sa = sa.max(lhs.sup_abs());
        tr = tr.max((p.quad_trace().re - (s + 1) as f64).abs());
    }
    items.push(item(
        "projection-idempotent",
        idem,
        1e-10,
        format!("max over flags of sup|π² − π| = {idem:.3e}"),
    ));
    items.push(item(
        "projection-selfadjoint",
        sa,
        1e-10,
        format!("max over flags of sup|hπ − π†h| = {sa:.3e}"),
    ));
    items.push(item(
        "projection-trace",
        tr,
        1e-10,
        format!("max over flags of |∫Tr π − rank| = {tr:.3e}"),
    ));
    let mut nest = 0.0f64;
    for s in 0..r {
        for t in 0..r {
            let mut prod = projections[s].mul(&projections[t]);
            prod.add_scaled(C::new(-1.0, 0.0), &projections[s.min(t)]);
            nest = nest.max(prod.sup_abs());
        }
    }
    items.push(item(
        "projection-nesting",
        nest,
        1e-10,
        if r == 1 {
            "trivial at rank 1".into()
        } else {
            format!("max over flag pairs of sup|π^s π^t − π^min| = {nest:.3e}")
        },
    ));

    // --- Ψ identities ---
    let psi_f = psi(&h, &spec);
    let mut expected = GridField::zeros(h.n, bundle.degrees.clone(), bundle.degrees.clone());
    let mut prev: Option<&GridField> = None;
    for (b, &f) in spec.flags.iter().enumerate() {
        let mu2 = C::new(spec.slopes[b] * spec.slopes[b], 0.0);
        expected.add_scaled(mu2, &projections[f - 1]);
        if let Some(p) = prev {
            expected.add_scaled(-mu2, p);
        }
        prev = Some(&projections[f - 1]);
    }
    let mut psi_sq = psi_f.mul(&psi_f);
    psi_sq.add_scaled(C::new(-1.0, 0.0), &expected);
    let sq_res = psi_sq.sup_abs();
    items.push(item(
        "psi-square",
        sq_res,
        1e-10,
        format!("sup|Ψ² − Σμᵢ²(πⁱ−πⁱ⁻¹)| = {sq_res:.3e}"),
    ));
    let mut tr_res = 0.0f64;
    for p in 0..h.n * h.n {
        let mut t = C::new(0.0, 0.0);
        for a in 0..r {
            t += psi_f.data[(p * r + a) * r + a];
        }
        tr_res = tr_res.max((t - C::new(bundle.total_degree as f64, 0.0)).norm());
    }
    items.push(item(
        "psi-trace",
        tr_res,
        1e-10,
        format!("sup over points of |Tr Ψ − deg| = {tr_res:.3e}"),
    ));
    let norm_res = (quad_tr_prod(&psi_f, &psi_f).re - phi_squared(&spec.mu_vec)).abs();
    items.push(item(
        "psi-norm",
        norm_res,
        1e-9,
        format!("|‖Ψ‖²_L² − Σμₐ²| = {norm_res:.3e}"),
    ));

    // --- degree quantization and metric independence ---
    let mut int_res = 0.0f64;
    let mut indep_res = 0.0f64;
    for k in 0..3u64 {
        let hk = bundle.random_metric(seed.wrapping_add(31 + k), 0.3);
        let d = bundle.curvature(&hk)?.degree();
        int_res = int_res.max((d - d.round()).abs());
        indep_res = indep_res.max((d - bundle.total_degree as f64).abs());
    }
    items.push(item(
        "degree-integrality",
        int_res,
        1e-7,
        format!("max |deg − round(deg)| over 3 random metrics = {int_res:.3e}"),
    ));
    items.push(item(
        "degree-metric-independence",
        indep_res,
        1e-7,
        format!("max |deg(h) − deg(E)| over 3 random metrics = {indep_res:.3e}"),
    ));

    // --- path independence of P ---
    let h0 = bundle.random_metric(seed.wrapping_add(21), 0.3);
    let h1 = bundle.random_metric(seed.wrapping_add(22), 0.3);
    let direct = path_integrals(&bundle, &spec, &h0, &h1, PATH_QUAD_NODES)?;
    let detour = path_integrals_detour(&bundle, &spec, &h0, &h1, PATH_QUAD_NODES)?;
    let p_res = (direct.p - detour.p).abs();
    // The only spatially-limited item in the battery: the discrete P inherits
    // the O(h^order) stencil error of ΛF (time quadrature is ~1e-12), so the
    // 1e-6 budget pinned at the n = 64 reference is rescaled by the stencil
    // factor on coarser grids (the gap measures pure h^order error, e.g.
    // 1.7e-5 at n = 16 vs 2.6e-7 at n = 32 with order 6).
    let spatial = (64.0 / bundle.geo.n as f64).powi(bundle.geo.stencil_order as i32);
    let p_tol = 1e-6 * spatial.max(1.0);
    items.push(item(
        "path-independence",
        p_res,
        p_tol,
        format!(
            "|P_geodesic − P_detour| = {p_res:.3e} (P = {:.6}, M gap {:.3e}, tol {p_tol:.1e} at n = {})",
            direct.p,
            (direct.m - detour.m).abs(),
            bundle.geo.n
        ),
    ));

    // --- dominance partial-order properties on random fixed-sum spectra ---
    let dom_res = dominance_axioms_residual(seed, 200);
    items.push(item(
        "dominance-axioms",
        dom_res,
        0.5,
        format!("violations over 200 random fixed-sum vectors = {dom_res}"),
    ));

    // --- key inequality at random states ---
    let mut slack_min = f64::INFINITY;
    for k in 0..3u64 {
        let hk = bundle.random_metric(seed.wrapping_add(41 + k), 0.3);
        let pk = bundle.curvature(&hk)?;
        let psi_k = psi(&hk, &spec);
        let mut gap = pk.lambda_f.clone();
        gap.add_scaled(C::new(-1.0, 0.0), &psi_k);
        let y = quad_tr_prod(&gap, &gap).re;
        let mut shifted = pk.lambda_f.clone();
        for p in 0..hk.n * hk.n {
            for a in 0..r {
                shifted.data[(p * r + a) * r + a] -= C::new(bundle.slope, 0.0);
            }
        }
        let slack = 2.0 * quad_tr_prod(&gap, &shifted).re - y;
        slack_min = slack_min.min(slack);
    }
    items.push(item(
        "keyineq-slack",
        -slack_min,
        1e-8,
        format!("min over 3 random metrics of 2⟨ΛF−Ψ,ΛF−μ⟩ − Y = {slack_min:+.3e}"),
    ));

    if let Some(f) = fault {
        for it in items.iter_mut().filter(|it| it.name == f) {
            it.tolerance = -1.0;
            it.pass = false;
            it.detail.push_str(" [tolerance broken by fault injection]");
        }
    }
    Ok(items)
}

/// Counts violations of reflexivity, transitivity, and strict-transfer
/// asymmetry of the dominance order on random non-increasing fixed-sum
/// vectors (Robin-Hood transfers generate comparable chains).
pub fn dominance_axioms_residual(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x00d0_317a);
    let mut violations = 0u32;
    for _ in 0..cases {
        let r = rng.gen_range(2..=4usize);
        // strictly decreasing with adjacent gaps ≥ 0.1: sorting uniform
        // draws can produce near-ties, for which no fixed transfer size is
        // strictly dominance-decreasing
        let mut a = Vec::with_capacity(r);
        let mut v = rng.gen_range(-2.0..2.0);
        a.push(v);
        for _ in 1..r {
            v -= rng.gen_range(0.1..1.0);
            a.push(v);
        }
        let b = robin_hood(&a, &mut rng);
        let c = robin_hood(&b, &mut rng);
        let ok = dominance_leq(&a, &a, 1e-12).unwrap_or(false)
            && dominance_leq(&b, &a, 1e-12).unwrap_or(false)
            && dominance_leq(&c, &b, 1e-12).unwrap_or(false)
            && dominance_leq(&c, &a, 1e-12).unwrap_or(false)
            && !dominance_leq(&a, &b, 1e-12).unwrap_or(true);
        if !ok {
            violations += 1;
        }
    }
    violations as f64
}

/// Transfer mass from a larger entry to a smaller one, keeping the vector
/// sorted and the sum fixed — the elementary dominance-decreasing move.
fn robin_hood(a: &[f64], rng: &mut ChaCha20Rng) -> Vec<f64> {
    let r = a.len();
    let i = rng.gen_range(0..r - 1);
    let j = rng.gen_range(i + 1..r);
    // a quarter of the pair gap: strictly positive and strictly less than
    // half, so the move stays inside the order (a floor here would overshoot
    // the midpoint of a near-tied pair and reverse it)
    let delta = 0.25 * (a[i] - a[j]);
    let mut b = a.to_vec();
    b[i] -= delta;
    b[j] += delta;
    b.sort_by(|x, y| y.partial_cmp(x).unwrap());
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> Sample {
        Sample {
            t,
            ym_energy: 1.25,
            hym_energy: 1.5e-3,
            y: 2.0e-5,
            p: -0.125,
            m: 3.0,
            sff: vec![1e-4],
            spectrum: vec![1.0, -1e-6],
            keyineq_slack: 4.0e-9,
            gauge_residual: 8.0e-8,
            l1_gap: 1e-3,
            energy_decay_residual: 0.0,
        }
    }

    #[test]
    fn trace_csv_schema_is_stable() {
        let spec = FiltrationSpec::from_degrees(&[1, 0]);
        let csv = render_trace_csv(&spec, 2, &[sample(0.0), sample(0.05)]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,ym_energy,hym_energy,Y,P,M,sff_1,spec_1,spec_2,keyineq_slack,gauge_residual"
        );
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 11);
        assert!(row.starts_with("0e0,1.25e0,1.5e-3,2e-5,-1.25e-1,3e0,"));
        // identical input renders identical bytes
        assert_eq!(csv, render_trace_csv(&spec, 2, &[sample(0.0), sample(0.05)]));
    }

    #[test]
    fn rank_one_trace_has_no_sff_columns() {
        let spec = FiltrationSpec::from_degrees(&[2]);
        assert_eq!(
            trace_header(&spec, 1),
            "t,ym_energy,hym_energy,Y,P,M,spec_1,keyineq_slack,gauge_residual"
        );
    }

    #[test]
    fn status_exit_codes_match_the_contract() {
        assert_eq!(status_exit_code(&FlowStatus::Converged), 0);
        assert_eq!(status_exit_code(&FlowStatus::ReachedTEnd), 2);
        assert_eq!(status_exit_code(&FlowStatus::Aborted("x".into())), 3);
    }

    #[test]
    fn verify_passes_on_the_default_config() {
        let cfg = RunConfig::from_toml("", &[]).unwrap();
        let items = verify(&cfg, None).unwrap();
        assert_eq!(items.len(), VERIFY_FAULT_KEYS.len());
        for it in &items {
            assert!(it.pass, "{}: {} (residual {:e})", it.name, it.detail, it.residual);
        }
    }

    #[test]
    fn verify_passes_on_a_rank_one_config() {
        let cfg = RunConfig::from_toml("[bundle]\ndegrees = [2]\n", &[]).unwrap();
        let items = verify(&cfg, None).unwrap();
        for it in &items {
            assert!(it.pass, "{}: {}", it.name, it.detail);
        }
    }

    #[test]
    fn fault_injection_fails_exactly_the_named_item() {
        let cfg = RunConfig::from_toml("", &[]).unwrap();
        let items = verify(&cfg, Some("psi-square")).unwrap();
        for it in &items {
            assert_eq!(it.pass, it.name != "psi-square", "{}", it.name);
        }
        let err = verify(&cfg, Some("nonsense")).unwrap_err();
        assert!(err.to_string().contains("nonsense"));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn dominance_axioms_hold_on_random_vectors() {
        assert_eq!(dominance_axioms_residual(7, 500), 0.0);
    }
}
