//! Nodal intersection counting and the interval diagnostics built on it.
//!
//! The counter samples `f = F∘γ` on a uniform grid of `⌈points_per_lambda·λ⌉`
//! parameters, refines every sign change by bisection, and separately scans
//! sign changes of `f′` for local extrema whose value is within the tangency
//! threshold of zero; those that one level of 8× local refinement cannot
//! resolve into crossings are reported as suspects rather than roots.
//!
//! The classifier tiles `[0,1]` into intervals of length `R/λ` and marks an
//! interval unstable when some point of its tripled dilation has both
//! `|f| ≤ α` and `|f′| ≤ βλ` on a finite subgrid; a wave is exceptional when
//! at least `δλ` intervals are unstable. Subgrid checking undershoots the
//! continuum predicate one-sidedly; `check_density` is exposed to tighten it.

use crate::wave::{CurveBasis, RestrictedWave, WaveError};
use crate::DerivOrder;
use serde::Serialize;
use std::f64::consts::TAU;

/// Grid and refinement controls for [`count_zeros`].
#[derive(Debug, Clone)]
pub struct GridConfig {
    /// Grid points per unit of `1/λ`; at least 8.
    pub points_per_lambda: u32,
    /// Final bracket width for root bisection.
    pub bisection_tol: f64,
    /// Tangency threshold η: extrema with `|f| < η` that refuse to resolve
    /// become suspects.
    pub tangency_threshold: f64,
    /// Also certify cells zero-free / single-crossing via Lipschitz bounds.
    pub certified_mode: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points_per_lambda: 50,
            bisection_tol: 1e-12,
            tangency_threshold: 1e-4,
            certified_mode: false,
        }
    }
}

/// Nodal intersection count along the curve, with root locations.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroCountResult {
    pub count: usize,
    pub suspects: usize,
    pub certified_fraction: f64,
    pub roots: Vec<f64>,
}

impl ZeroCountResult {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            count: usize,
            suspects: usize,
            certified_fraction: f64,
            roots: &'a [f64],
        }
        serde_json::to_string(&Dump {
            count: self.count,
            suspects: self.suspects,
            certified_fraction: self.certified_fraction,
            roots: &self.roots,
        })
        .expect("serializing zero count")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ZerosError {
    #[error("grid too coarse: points_per_lambda = {0} (minimum 8)")]
    GridTooCoarse(u32),
    #[error("the identically zero wave has no defined nodal count")]
    ZeroFunction,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Wave(#[from] WaveError),
}

/// Global bound on `|f′|`: `L = 2πλ √(2/N) Σ_{E⁺} √(a² + b²)`.
pub fn derivative_bound(rw: &RestrictedWave) -> f64 {
    let n = rw.sample.spec.multiplicity() as f64;
    TAU * rw.lambda() * (2.0 / n).sqrt() * rw.sample.abs_coefficient_sum()
}

/// Global bound on `|f″|`: `√(2/N) (λ·κ_max + λ²) Σ_{E⁺} √(a² + b²)`.
fn second_derivative_bound(rw: &RestrictedWave) -> f64 {
    let n = rw.sample.spec.multiplicity() as f64;
    let lambda = rw.lambda();
    (2.0 / n).sqrt()
        * (lambda * rw.curve.curvature_max + lambda * lambda)
        * rw.sample.abs_coefficient_sum()
}

fn grid_points(cfg: &GridConfig, lambda: f64) -> usize {
    (cfg.points_per_lambda as f64 * lambda).ceil() as usize
}

/// Count the zeros of `f = F∘γ` on `[0,1)`.
pub fn count_zeros(rw: &RestrictedWave, cfg: &GridConfig) -> Result<ZeroCountResult, ZerosError> {
    let basis = CurveBasis::uniform_grid(
        &rw.sample.spec,
        &rw.curve,
        grid_points(cfg, rw.lambda()),
        false,
    );
    count_zeros_on_basis(&basis, rw, cfg)
}

/// [`count_zeros`] against a caller-provided grid basis; Monte Carlo batches
/// build the basis once and reuse it for every trial.
pub fn count_zeros_on_basis(
    basis: &CurveBasis,
    rw: &RestrictedWave,
    cfg: &GridConfig,
) -> Result<ZeroCountResult, ZerosError> {
    if cfg.points_per_lambda < 8 {
        return Err(ZerosError::GridTooCoarse(cfg.points_per_lambda));
    }
    if !(cfg.bisection_tol > 0.0) || !(cfg.tangency_threshold > 0.0) {
        return Err(ZerosError::InvalidParameter(
            "bisection_tol and tangency_threshold must be positive".into(),
        ));
    }
    let sample = &rw.sample;
    if sample.a.iter().chain(&sample.b).all(|&c| c == 0.0) {
        return Err(ZerosError::ZeroFunction);
    }

    let g = basis.len();
    let mut fv = Vec::new();
    let mut fpv = Vec::new();
    let mut scratch = Vec::new();
    basis.eval_all(&sample.a, &sample.b, DerivOrder::Zeroth, &mut fv, &mut scratch);
    basis.eval_all(&sample.a, &sample.b, DerivOrder::First, &mut fpv, &mut scratch);

    let eta = cfg.tangency_threshold;
    let mut roots: Vec<f64> = Vec::new();
    let mut suspects = 0usize;
    let mut certified = 0usize;
    let (l1, l2) = if cfg.certified_mode {
        (derivative_bound(rw), second_derivative_bound(rw))
    } else {
        (0.0, 0.0)
    };

    let mut dscratch = Vec::new();
    let mut eval = |t: f64| rw.eval_with_scratch(t, DerivOrder::Zeroth, &mut scratch);

    let mut cell_roots: Vec<f64> = Vec::new();
    for j in 0..g {
        let t_lo = basis.ts[j];
        let t_hi = if j + 1 < g { basis.ts[j + 1] } else { 1.0 };
        let f_lo = fv[j];
        let f_hi = fv[(j + 1) % g];
        let h = t_hi - t_lo;
        cell_roots.clear();

        // a grid point that is exactly zero is owned by the cell on its right
        if f_lo == 0.0 {
            cell_roots.push(t_lo);
        }

        // locate an interior extremum when f' changes sign across the cell
        let dp_lo = fpv[j];
        let dp_hi = fpv[(j + 1) % g];
        let extremum = if dp_lo != 0.0 && dp_hi != 0.0 && (dp_lo < 0.0) != (dp_hi < 0.0) {
            let x = bisect_to(
                t_lo,
                dp_lo,
                t_hi,
                dp_hi,
                cfg.bisection_tol,
                &mut |t| rw.eval_with_scratch(t, DerivOrder::First, &mut dscratch),
            );
            Some((x, eval(x)))
        } else {
            None
        };

        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(3);
        pts.push((t_lo, f_lo));
        if let Some((x, fx)) = extremum {
            if fx == 0.0 {
                cell_roots.push(x);
            }
            pts.push((x, fx));
        }
        pts.push((t_hi, f_hi));

        let mut bracketed = false;
        for w in pts.windows(2) {
            let (ta, fa) = w[0];
            let (tb, fb) = w[1];
            if fa * fb < 0.0 {
                bracketed = true;
                cell_roots.push(bisect_to(ta, fa, tb, fb, cfg.bisection_tol, &mut eval));
            }
        }

        // unresolved near-tangency: same-sign extremum within η of zero
        if let Some((_, fx)) = extremum {
            if !bracketed && fx != 0.0 && fx.abs() < eta {
                let mut refined: Vec<(f64, f64)> = Vec::with_capacity(9);
                for k in 0..=8 {
                    let t = t_lo + h * k as f64 / 8.0;
                    let f = match k {
                        0 => f_lo,
                        8 => f_hi,
                        _ => eval(t),
                    };
                    refined.push((t, f));
                }
                for w in refined.windows(2) {
                    let (ta, fa) = w[0];
                    let (tb, fb) = w[1];
                    if fa * fb < 0.0 {
                        bracketed = true;
                        cell_roots.push(bisect_to(ta, fa, tb, fb, cfg.bisection_tol, &mut eval));
                    }
                }
                if !bracketed {
                    suspects += 1;
                }
            }
        }

        if cfg.certified_mode {
            let zero_free = cell_roots.is_empty()
                && f_lo != 0.0
                && f_lo.min(f_hi).abs().min(f_lo.max(f_hi).abs()) > l1 * h / 2.0
                && (f_lo < 0.0) == (f_hi < 0.0);
            let single = cell_roots.len() == 1
                && (dp_lo < 0.0) == (dp_hi < 0.0)
                && dp_lo.abs().min(dp_hi.abs()) > l2 * h / 2.0;
            if zero_free || single {
                certified += 1;
            }
        }

        cell_roots.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        roots.extend_from_slice(&cell_roots);
    }

    debug_assert!(roots.windows(2).all(|w| w[0] < w[1]));
    Ok(ZeroCountResult {
        count: roots.len(),
        suspects,
        certified_fraction: if cfg.certified_mode {
            certified as f64 / g as f64
        } else {
            0.0
        },
        roots,
    })
}

/// Bisection on a sign-changing bracket; returns the bracket midpoint once
/// its width is below `tol`.
fn bisect_to(
    mut ta: f64,
    mut fa: f64,
    mut tb: f64,
    mut fb: f64,
    tol: f64,
    eval: &mut impl FnMut(f64) -> f64,
) -> f64 {
    debug_assert!(fa * fb < 0.0);
    while tb - ta > tol {
        let tm = 0.5 * (ta + tb);
        if tm <= ta || tm >= tb {
            break; // bracket at floating-point resolution
        }
        let fm = eval(tm);
        if fm == 0.0 {
            return tm;
        }
        if (fm < 0.0) == (fa < 0.0) {
            ta = tm;
            fa = fm;
        } else {
            tb = tm;
            fb = fm;
        }
    }
    let _ = (fa, fb);
    0.5 * (ta + tb)
}

/// Stable/unstable tiling of `[0,1]` for one wave.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalFlag {
    pub lo: f64,
    pub hi: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalClassification {
    pub r: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub unstable_count: usize,
    pub exceptional: bool,
    pub intervals: Vec<IntervalFlag>,
}

impl IntervalClassification {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializing classification")
    }
}

/// Tile `[0,1]` into intervals of length `R/λ` (last possibly short) and mark
/// each unstable iff some subgrid point `x` of the tripled interval has
/// `|f(x)| ≤ α` and `|f′(x)| ≤ βλ`. The wave is exceptional iff at least
/// `δλ` intervals are unstable.
pub fn classify_intervals(
    rw: &RestrictedWave,
    alpha: f64,
    beta: f64,
    r: f64,
    delta: f64,
    check_density: usize,
) -> Result<IntervalClassification, ZerosError> {
    if !(r > 0.0) || !(delta > 0.0) || alpha < 0.0 || beta < 0.0 {
        return Err(ZerosError::InvalidParameter(
            "classification requires r > 0, delta > 0, alpha ≥ 0, beta ≥ 0".into(),
        ));
    }
    if delta * r >= 0.25 {
        return Err(ZerosError::InvalidParameter(format!(
            "tiling assumption violated: delta·R = {} must stay below 1/4",
            delta * r
        )));
    }
    if check_density < 16 {
        return Err(ZerosError::InvalidParameter(format!(
            "check_density = {check_density} (minimum 16)"
        )));
    }
    let lambda = rw.lambda();
    let len = r / lambda;
    let n_int = (lambda / r).ceil() as usize;
    let threshold = beta * lambda;
    let mut scratch = Vec::new();
    let mut intervals = Vec::with_capacity(n_int);
    let mut unstable_count = 0usize;
    for i in 0..n_int {
        let lo = i as f64 * len;
        let hi = ((i + 1) as f64 * len).min(1.0);
        let mid = 0.5 * (lo + hi);
        let half3 = 1.5 * (hi - lo);
        let (lo3, hi3) = (mid - half3, mid + half3);
        let mut unstable = false;
        for k in 0..check_density {
            let x = lo3 + (hi3 - lo3) * k as f64 / (check_density - 1) as f64;
            let f = rw.eval_with_scratch(x, DerivOrder::Zeroth, &mut scratch);
            if f.abs() <= alpha {
                let d = rw.eval_with_scratch(x, DerivOrder::First, &mut scratch);
                if d.abs() <= threshold {
                    unstable = true;
                    break;
                }
            }
        }
        if unstable {
            unstable_count += 1;
        }
        intervals.push(IntervalFlag {
            lo,
            hi,
            stable: !unstable,
        });
    }
    Ok(IntervalClassification {
        r,
        delta,
        alpha,
        beta,
        unstable_count,
        exceptional: unstable_count as f64 >= delta * lambda,
        intervals,
    })
}

/// The §-style default parameters `δ = N^{-1/3}`, `α = δ^{3/2}`,
/// `β = δ^{3/4}`, `R = 4 log N` — except that `δ·R < 1/4` is unreachable with
/// `δ = N^{-1/3}` at desk-scale `N`, so `δ` is clamped to `1/(8R)` whenever
/// the tiling assumption would fail; `clamped` records that this happened.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Section4Params {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub delta: f64,
    pub clamped: bool,
}

pub fn stability_defaults(n_lattice: usize) -> Section4Params {
    let r = 4.0 * (n_lattice as f64).ln();
    let mut delta = (n_lattice as f64).powf(-1.0 / 3.0);
    let mut clamped = false;
    if delta * r >= 0.25 {
        delta = 1.0 / (8.0 * r);
        clamped = true;
    }
    Section4Params {
        alpha: delta.powf(1.5),
        beta: delta.powf(0.75),
        r,
        delta,
        clamped,
    }
}

/// One growth-vs-root-count check on an interval.
#[derive(Debug, Clone, Serialize)]
pub struct JensenDiagnostic {
    pub t_lo: f64,
    pub t_hi: f64,
    pub c_growth: f64,
    pub max_abs_f: f64,
    pub max_abs_f_prime: f64,
    pub roots_in_interval: usize,
    pub value_threshold: f64,
    pub derivative_threshold: f64,
    pub premise_holds: bool,
    pub root_bound: f64,
    pub implication_holds: bool,
}

/// Evaluate the growth/root-count implication on `I = [t_lo, t_hi]`: if
/// `max_I |f| ≥ e^{-cλ|I|/2}` or `max_I |f′| ≥ λ e^{-cλ|I|/2}`, then the
/// number of roots in `I` is at most `2c|I|λ`.
pub fn jensen_diagnostic(
    rw: &RestrictedWave,
    interval: (f64, f64),
    c_growth: f64,
    cfg: &GridConfig,
) -> Result<JensenDiagnostic, ZerosError> {
    let (t_lo, t_hi) = interval;
    let len = t_hi - t_lo;
    let n = rw.sample.spec.multiplicity() as f64;
    let lambda = rw.lambda();
    if !(len > 0.0) || len * lambda < n.ln() {
        return Err(ZerosError::InvalidParameter(format!(
            "interval length {len} is below (log N)/λ = {}",
            n.ln() / lambda
        )));
    }
    if !(c_growth > 0.0) {
        return Err(ZerosError::InvalidParameter(
            "growth constant must be positive".into(),
        ));
    }
    let grid = ((50.0 * lambda * len).ceil() as usize).max(1024);
    let mut scratch = Vec::new();
    let mut max_f = 0.0f64;
    let mut max_fp = 0.0f64;
    for k in 0..=grid {
        let t = t_lo + len * k as f64 / grid as f64;
        max_f = max_f.max(rw.eval_with_scratch(t, DerivOrder::Zeroth, &mut scratch).abs());
        max_fp = max_fp.max(rw.eval_with_scratch(t, DerivOrder::First, &mut scratch).abs());
    }
    let roots = count_zeros(rw, cfg)?
        .roots
        .iter()
        .filter(|&&r| r >= t_lo && r <= t_hi)
        .count();
    let value_threshold = (-c_growth * lambda * len / 2.0).exp();
    let derivative_threshold = lambda * value_threshold;
    let premise_holds = max_f >= value_threshold || max_fp >= derivative_threshold;
    let root_bound = 2.0 * c_growth * len * lambda;
    Ok(JensenDiagnostic {
        t_lo,
        t_hi,
        c_growth,
        max_abs_f: max_f,
        max_abs_f_prime: max_fp,
        roots_in_interval: roots,
        value_threshold,
        derivative_threshold,
        premise_holds,
        root_bound,
        implication_holds: !premise_holds || (roots as f64) <= root_bound,
    })
}

/// Scan `[center - radius, center + radius]` for a sign change of the wave
/// and refine it by bisection. Used to verify that roots persist under small
/// perturbations.
pub fn find_root_near(rw: &RestrictedWave, center: f64, radius: f64) -> Option<f64> {
    let n = 64;
    let mut scratch = Vec::new();
    let mut prev_t = center - radius;
    let mut prev_f = rw.eval_with_scratch(prev_t, DerivOrder::Zeroth, &mut scratch);
    for k in 1..=n {
        let t = center - radius + 2.0 * radius * k as f64 / n as f64;
        let f = rw.eval_with_scratch(t, DerivOrder::Zeroth, &mut scratch);
        if prev_f == 0.0 {
            return Some(prev_t);
        }
        if prev_f * f < 0.0 {
            let mut inner = Vec::new();
            return Some(bisect_to(prev_t, prev_f, t, f, 1e-13, &mut |x| {
                rw.eval_with_scratch(x, DerivOrder::Zeroth, &mut inner)
            }));
        }
        prev_t = t;
        prev_f = f;
    }
    if prev_f == 0.0 {
        return Some(prev_t);
    }
    None
}

/// Separated-point derivative-energy ratio: place `xᵢ = i·separation`,
/// compute `Σᵢ |f^{(d)}(xᵢ)|²`, and divide by `λ^{2d}(λ + separation⁻¹)`.
/// The supremum of this ratio over samples is the observed sieve constant.
pub fn large_sieve_check(
    rw: &RestrictedWave,
    separation: f64,
    d: DerivOrder,
) -> Result<f64, ZerosError> {
    if !(separation > 0.0 && separation < 0.5) {
        return Err(ZerosError::InvalidParameter(format!(
            "separation must lie in (0, 1/2), got {separation}"
        )));
    }
    let order = match d {
        DerivOrder::First | DerivOrder::Second => d,
        DerivOrder::Zeroth => {
            return Err(ZerosError::InvalidParameter(
                "sieve order d must be 1 or 2".into(),
            ))
        }
    };
    let m_points = (1.0 / separation).floor() as usize;
    let mut scratch = Vec::new();
    let mut sum = 0.0;
    for i in 0..m_points {
        let v = rw.eval_with_scratch(i as f64 * separation, order, &mut scratch);
        sum += v * v;
    }
    let lambda = rw.lambda();
    let pow = match order {
        DerivOrder::First => lambda * lambda,
        _ => lambda * lambda * lambda * lambda,
    };
    Ok(sum / (pow * (lambda + 1.0 / separation)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::make_circle;
    use crate::lattice::{enumerate_lattice_points, EigenvalueSpec};
    use crate::wave::{sample_coefficients, Ensemble, WaveSample};
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn spec(m: u64) -> Arc<EigenvalueSpec> {
        Arc::new(enumerate_lattice_points(m))
    }

    /// The m = 1 closed-form wave `f(t) = √½ cos(2π(cx + cos(2πt)/2π))`.
    fn cosine_wave(cx: f64) -> RestrictedWave {
        let sp = spec(1);
        let idx = sp
            .half_points
            .iter()
            .position(|p| (p.mu1, p.mu2) == (1, 0))
            .unwrap();
        let mut a = vec![0.0; 2];
        a[idx] = 1.0;
        WaveSample::from_coefficients(&sp, a, vec![0.0; 2], Ensemble::Gaussian)
            .unwrap()
            .restrict(Arc::new(make_circle((cx, 0.5))))
    }

    #[test]
    fn closed_form_counts() {
        let cfg = GridConfig::default();
        let res = count_zeros(&cosine_wave(0.25), &cfg).unwrap();
        assert_eq!(res.count, 2);
        assert_eq!(res.suspects, 0);
        assert!((res.roots[0] - 0.25).abs() < 1e-10, "{:?}", res.roots);
        assert!((res.roots[1] - 0.75).abs() < 1e-10, "{:?}", res.roots);

        let res = count_zeros(&cosine_wave(0.5), &cfg).unwrap();
        assert_eq!(res.count, 0);
        assert_eq!(res.suspects, 0);
    }

    #[test]
    fn zero_wave_is_rejected() {
        let sp = spec(25);
        let hn = sp.half_points.len();
        let rw = WaveSample::from_coefficients(&sp, vec![0.0; hn], vec![0.0; hn], Ensemble::Gaussian)
            .unwrap()
            .restrict(Arc::new(make_circle((0.5, 0.5))));
        assert!(matches!(
            count_zeros(&rw, &GridConfig::default()),
            Err(ZerosError::ZeroFunction)
        ));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let rw = cosine_wave(0.25);
        let cfg = GridConfig {
            points_per_lambda: 7,
            ..GridConfig::default()
        };
        assert!(matches!(
            count_zeros(&rw, &cfg),
            Err(ZerosError::GridTooCoarse(7))
        ));
    }

    #[test]
    fn default_grid_agrees_with_ten_times_finer_oracle() {
        let cfg = GridConfig::default();
        let fine = GridConfig {
            points_per_lambda: 500,
            ..GridConfig::default()
        };
        let curve = Arc::new(make_circle((0.5, 0.5)));
        for m in [25u64, 65, 325] {
            let sp = spec(m);
            let coarse_basis = CurveBasis::uniform_grid(
                &sp,
                &curve,
                grid_points(&cfg, sp.lambda),
                false,
            );
            let fine_basis = CurveBasis::uniform_grid(
                &sp,
                &curve,
                grid_points(&fine, sp.lambda),
                false,
            );
            for trial in 0..100u64 {
                let rw = sample_coefficients(&sp, Ensemble::Gaussian, 0xC0FFEE, trial)
                    .unwrap()
                    .restrict(curve.clone());
                let a = count_zeros_on_basis(&coarse_basis, &rw, &cfg).unwrap();
                let b = count_zeros_on_basis(&fine_basis, &rw, &fine).unwrap();
                if a.suspects == 0 && b.suspects == 0 {
                    assert_eq!(a.count, b.count, "m={m} trial={trial}");
                } else {
                    assert!(
                        a.count.abs_diff(b.count) <= 2 * (a.suspects + b.suspects),
                        "m={m} trial={trial}: {} vs {} with suspects {}/{}",
                        a.count,
                        b.count,
                        a.suspects,
                        b.suspects
                    );
                }
            }
        }
    }

    #[test]
    fn reported_roots_have_tiny_residual() {
        let curve = Arc::new(make_circle((0.5, 0.5)));
        let cfg = GridConfig::default();
        for m in [25u64, 325] {
            let sp = spec(m);
            for trial in 0..20u64 {
                let rw = sample_coefficients(&sp, Ensemble::Gaussian, 7, trial)
                    .unwrap()
                    .restrict(curve.clone());
                let res = count_zeros(&rw, &cfg).unwrap();
                let l = derivative_bound(&rw);
                for &r in &res.roots {
                    assert!(
                        rw.eval(r, DerivOrder::Zeroth).abs() < l * cfg.bisection_tol,
                        "m={m} trial={trial} root={r}"
                    );
                }
                for w in res.roots.windows(2) {
                    assert!(w[0] < w[1]);
                }
            }
        }
    }

    #[test]
    fn certified_mode_reports_sane_fraction() {
        let sp = spec(65);
        let curve = Arc::new(make_circle((0.5, 0.5)));
        let rw = sample_coefficients(&sp, Ensemble::Gaussian, 11, 0)
            .unwrap()
            .restrict(curve);
        let plain = count_zeros(&rw, &GridConfig::default()).unwrap();
        assert_eq!(plain.certified_fraction, 0.0);
        let cfg = GridConfig {
            certified_mode: true,
            ..GridConfig::default()
        };
        let cert = count_zeros(&rw, &cfg).unwrap();
        assert_eq!(cert.count, plain.count);
        assert!(cert.certified_fraction > 0.5, "{}", cert.certified_fraction);
        assert!(cert.certified_fraction <= 1.0);
    }

    #[test]
    fn classification_closed_form_all_stable() {
        // at the roots of the m = 1 wave, |f′| = π√2 ≈ 4.44 > βλ = 0.2π
        let rw = cosine_wave(0.25);
        let c = classify_intervals(&rw, 0.1, 0.1, 1.0, 0.2, 64).unwrap();
        assert_eq!(c.unstable_count, 0);
        assert!(!c.exceptional);
        assert!(c.intervals.iter().all(|i| i.stable));
        let tiled: f64 = c.intervals.iter().map(|i| i.hi - i.lo).sum();
        assert!((tiled - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification_alpha_zero_never_unstable() {
        let sp = spec(25);
        let rw = sample_coefficients(&sp, Ensemble::Gaussian, 3, 1)
            .unwrap()
            .restrict(Arc::new(make_circle((0.5, 0.5))));
        let c = classify_intervals(&rw, 0.0, 0.5, 2.0, 0.05, 32).unwrap();
        assert_eq!(c.unstable_count, 0);
    }

    #[test]
    fn classification_validates_parameters() {
        let rw = cosine_wave(0.25);
        assert!(classify_intervals(&rw, 0.1, 0.1, 10.0, 0.1, 64).is_err()); // δR ≥ 1/4
        assert!(classify_intervals(&rw, 0.1, 0.1, 1.0, 0.2, 8).is_err()); // density
        assert!(classify_intervals(&rw, -0.1, 0.1, 1.0, 0.2, 64).is_err());
    }

    #[test]
    fn stability_defaults_respect_tiling() {
        for n in [8usize, 16, 24, 32, 64, 96] {
            let p = stability_defaults(n);
            assert!(p.delta * p.r < 0.25, "n = {n}");
            assert!(p.clamped, "n = {n} should clamp at desk scale");
            assert!((p.alpha - p.delta.powf(1.5)).abs() < 1e-15);
            assert!((p.beta - p.delta.powf(0.75)).abs() < 1e-15);
        }
    }

    #[test]
    fn unstable_count_monotone_in_thresholds() {
        let sp = spec(65);
        let rw = sample_coefficients(&sp, Ensemble::Gaussian, 21, 5)
            .unwrap()
            .restrict(Arc::new(make_circle((0.5, 0.5))));
        let mut last = 0usize;
        for (alpha, beta) in [(0.01, 0.01), (0.05, 0.05), (0.2, 0.2), (0.8, 0.8)] {
            let c = classify_intervals(&rw, alpha, beta, 2.0, 0.05, 48).unwrap();
            assert!(c.unstable_count >= last, "alpha = {alpha}");
            last = c.unstable_count;
        }
    }

    #[test]
    fn jensen_diagnostic_cases() {
        let cfg = GridConfig::default();

        // interval with no roots: implication holds however the premise lands
        let rw = cosine_wave(0.5);
        let d = jensen_diagnostic(&rw, (0.3, 0.7), 2.0, &cfg).unwrap();
        assert_eq!(d.roots_in_interval, 0);
        assert!(d.implication_holds);

        // closed-form wave over the whole circle with c = 0.2:
        // premise holds through the derivative clause, 2 ≤ 2cλ ≈ 2.51
        let rw = cosine_wave(0.25);
        let d = jensen_diagnostic(&rw, (0.0, 1.0), 0.2, &cfg).unwrap();
        assert_eq!(d.roots_in_interval, 2);
        assert!(d.premise_holds);
        assert!(d.implication_holds);
        assert!((d.root_bound - 0.4 * TAU).abs() < 1e-12);

        // gaussian sample on a mid-size eigenspace
        let sp = spec(25);
        let rw = sample_coefficients(&sp, Ensemble::Gaussian, 17, 2)
            .unwrap()
            .restrict(Arc::new(make_circle((0.5, 0.5))));
        let d = jensen_diagnostic(&rw, (0.0, 0.2), 2.0, &cfg).unwrap();
        assert!(d.premise_holds);
        assert!(d.implication_holds, "{d:?}");

        // too-short interval errors
        assert!(jensen_diagnostic(&rw, (0.0, 0.01), 2.0, &cfg).is_err());
    }

    #[test]
    fn sieve_ratio_zero_for_zero_wave_and_bounded_scaling() {
        let sp = spec(65);
        let hn = sp.half_points.len();
        let curve = Arc::new(make_circle((0.5, 0.5)));
        let zero = WaveSample::from_coefficients(&sp, vec![0.0; hn], vec![0.0; hn], Ensemble::Gaussian)
            .unwrap()
            .restrict(curve.clone());
        assert_eq!(
            large_sieve_check(&zero, 1e-3, DerivOrder::First).unwrap(),
            0.0
        );
        assert!(large_sieve_check(&zero, 0.7, DerivOrder::First).is_err());
        assert!(large_sieve_check(&zero, 1e-3, DerivOrder::Zeroth).is_err());

        let mut max1 = 0.0f64;
        let mut max2 = 0.0f64;
        for trial in 0..50u64 {
            let rw = sample_coefficients(&sp, Ensemble::Gaussian, 23, trial)
                .unwrap()
                .restrict(curve.clone());
            max1 = max1.max(large_sieve_check(&rw, 1e-3, DerivOrder::First).unwrap());
            max2 = max2.max(large_sieve_check(&rw, 1e-3, DerivOrder::Second).unwrap());
        }
        assert!(max1.is_finite() && max1 > 0.0);
        assert!(max2.is_finite() && max2 > 0.0);
        let ratio = max2 / max1;
        assert!(ratio < 100.0 && ratio > 0.01, "d2/d1 = {ratio}");
    }

    #[test]
    fn roots_in_stable_intervals_persist_under_perturbation() {
        let m = 65u64;
        let sp = spec(m);
        let curve = Arc::new(make_circle((0.5, 0.5)));
        let p = stability_defaults(sp.multiplicity());
        let tau = p.delta * p.delta;
        let lambda = sp.lambda;
        let margin = p.alpha / (p.beta * lambda);
        let cfg = GridConfig::default();
        for trial in 0..5u64 {
            let base = sample_coefficients(&sp, Ensemble::Gaussian, 0xFEED, trial).unwrap();
            let rw = base.clone().restrict(curve.clone());
            let classes = classify_intervals(&rw, p.alpha, p.beta, p.r, p.delta, 128).unwrap();
            let roots = count_zeros(&rw, &cfg).unwrap().roots;

            // random perturbation scaled to coefficient norm τ
            let gsamp = sample_coefficients(&sp, Ensemble::Gaussian, 0xFEED ^ 0xABCD, trial).unwrap();
            let gnorm = gsamp.coefficient_norm();
            let ga: Vec<f64> = gsamp.a.iter().map(|v| v * tau / gnorm).collect();
            let gb: Vec<f64> = gsamp.b.iter().map(|v| v * tau / gnorm).collect();
            let g = WaveSample::from_coefficients(&sp, ga.clone(), gb.clone(), Ensemble::Gaussian)
                .unwrap()
                .restrict(curve.clone());
            let pa: Vec<f64> = base.a.iter().zip(&ga).map(|(x, y)| x + y).collect();
            let pb: Vec<f64> = base.b.iter().zip(&gb).map(|(x, y)| x + y).collect();
            let perturbed = WaveSample::from_coefficients(&sp, pa, pb, Ensemble::Gaussian)
                .unwrap()
                .restrict(curve.clone());

            for flag in classes.intervals.iter().filter(|f| f.stable) {
                let mid = 0.5 * (flag.lo + flag.hi);
                let half3 = 1.5 * (flag.hi - flag.lo);
                let g_small = (0..256).all(|k| {
                    let x = mid - half3 + 2.0 * half3 * k as f64 / 255.0;
                    g.eval(x, DerivOrder::Zeroth).abs() < p.alpha
                });
                if !g_small {
                    continue;
                }
                for &root in roots.iter().filter(|&&t| t >= flag.lo && t <= flag.hi) {
                    let found = find_root_near(&perturbed, root, margin);
                    assert!(
                        found.is_some(),
                        "trial {trial}: no perturbed root within {margin} of {root}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_derivative_at_root_matches_pi_sqrt_two() {
        // anchor for the classification threshold arithmetic
        let rw = cosine_wave(0.25);
        let d = rw.eval(0.25, DerivOrder::First);
        assert!((d.abs() - PI * 2f64.sqrt()).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn classification_monotone_property(
            a1 in 0.0f64..0.3, da in 0.0f64..0.5,
            b1 in 0.0f64..0.3, db in 0.0f64..0.5,
        ) {
            let sp = spec(25);
            let rw = sample_coefficients(&sp, Ensemble::Gaussian, 99, 0)
                .unwrap()
                .restrict(Arc::new(make_circle((0.5, 0.5))));
            let small = classify_intervals(&rw, a1, b1, 2.0, 0.05, 32).unwrap();
            let large = classify_intervals(&rw, a1 + da, b1 + db, 2.0, 0.05, 32).unwrap();
            prop_assert!(large.unstable_count >= small.unstable_count);
        }
    }
}
