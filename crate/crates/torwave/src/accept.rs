//! Named acceptance checks.
//!
//! Each check pins its tolerances and seeds in code and reports one pass/fail
//! line. The same functions back the `torwave accept <name>` command and the
//! `acceptance` integration test target, so the gate is identical in both.
//! Monte Carlo batches are memoized per process: checks that share a batch
//! (mean and variance scale; Markov domination and the concentration trend)
//! compute it once.

use crate::curve::{make_analytic_oval, make_circle, CurveDef};
use crate::experiments::{
    concentration_scan, repulsion_probe, run_mc, summarize, universality_gap,
    variance_leading_term, ConcentrationTable, TrialBatch,
};
use crate::lattice::{
    angular_fourier, enumerate_lattice_points, multiplicity_formula, spectral_matrix,
    EigenvalueSpec,
};
use crate::wave::{sample_coefficients, trial_key, Ensemble, WaveSample};
use crate::zeros::{
    classify_intervals, count_zeros, find_root_near, large_sieve_check, stability_defaults,
    GridConfig,
};
use crate::DerivOrder;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Instant;

const MC_TRIALS: usize = 20_000;
const REPULSION_TRIALS: usize = 1_000_000;
const SIEVE_SAMPLES: u64 = 1_000;
const PERTURB_SAMPLES: u64 = 100;
const SCAN_M: [u64; 4] = [5, 65, 1105, 32045];

const SEED_MEAN: u64 = 0x7054_0401;
const SEED_SCAN: u64 = 0x7054_0901;
const SEED_REPULSION: u64 = 0x7054_0701;
const SEED_UNIVERSALITY: u64 = 0x7054_0A01;
const SEED_DETERMINISM: u64 = 0x7054_0B01;
const SEED_SIEVE: u64 = 0x7054_0C01;
const SEED_PERTURB: u64 = 0x7054_0D01;

/// Result of one named check.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub name: String,
    pub passed: bool,
    pub elapsed_s: f64,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed_s,
            self.detail
        )
    }
}

fn timed(name: &str, body: impl FnOnce() -> (bool, String)) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = body();
    CriterionOutcome {
        name: name.to_string(),
        passed,
        elapsed_s: start.elapsed().as_secs_f64(),
        detail,
    }
}

fn circle() -> Arc<CurveDef> {
    Arc::new(make_circle((0.5, 0.5)))
}

type BatchKey = (u64, usize, u64);
static BATCH_CACHE: Lazy<Mutex<HashMap<BatchKey, Arc<TrialBatch>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));
static SCAN_CACHE: Lazy<Mutex<Option<Arc<ConcentrationTable>>>> = Lazy::new(|| Mutex::new(None));

fn gaussian_batch(m: u64, trials: usize, seed: u64) -> Result<Arc<TrialBatch>, String> {
    if let Some(b) = BATCH_CACHE.lock().unwrap().get(&(m, trials, seed)) {
        return Ok(Arc::clone(b));
    }
    let spec = Arc::new(enumerate_lattice_points(m));
    let batch = run_mc(
        &spec,
        &circle(),
        Ensemble::Gaussian,
        trials,
        seed,
        &GridConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let batch = Arc::new(batch);
    BATCH_CACHE
        .lock()
        .unwrap()
        .insert((m, trials, seed), Arc::clone(&batch));
    Ok(batch)
}

fn scan_table() -> Result<Arc<ConcentrationTable>, String> {
    if let Some(t) = SCAN_CACHE.lock().unwrap().as_ref() {
        return Ok(Arc::clone(t));
    }
    let table = concentration_scan(
        &SCAN_M,
        &circle(),
        Ensemble::Gaussian,
        0.2,
        MC_TRIALS,
        SEED_SCAN,
        &GridConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let table = Arc::new(table);
    *SCAN_CACHE.lock().unwrap() = Some(Arc::clone(&table));
    Ok(table)
}

/// 1. Lattice exactness: for every m ≤ 10⁴ the multiplicity formula equals
/// the exhaustive-scan count and the second-moment matrix is (N·m/2)·I,
/// all in exact integer arithmetic.
pub fn lattice_exhaustive() -> CriterionOutcome {
    timed("lattice-exhaustive", || {
        let mut checked = 0u64;
        for m in 1u64..=10_000 {
            let spec = enumerate_lattice_points(m);
            let brute = {
                let s = (m as f64).sqrt().ceil() as i64 + 1;
                let mut count = 0usize;
                for mu1 in -s..=s {
                    for mu2 in -s..=s {
                        if (mu1 * mu1 + mu2 * mu2) as u64 == m {
                            count += 1;
                        }
                    }
                }
                count
            };
            let n = spec.multiplicity();
            if n != brute {
                return (false, format!("m={m}: enumeration {n} vs brute scan {brute}"));
            }
            if multiplicity_formula(&spec.factorization) as usize != n {
                return (false, format!("m={m}: formula disagrees with enumeration"));
            }
            if spec.half_points.len() != n / 2 {
                return (false, format!("m={m}: half set is not N/2"));
            }
            if n > 0 {
                let s = spectral_matrix(&spec).expect("nonempty");
                let d = (n as i64) * (m as i64) / 2;
                if s != [[d, 0], [0, d]] {
                    return (false, format!("m={m}: spectral matrix {s:?} != {d}·I"));
                }
            }
            checked += 1;
        }
        (true, format!("formula, scan and spectral matrix agree for {checked} values of m"))
    })
}

/// 2. Angular measure: the fourth Fourier coefficients at m = 1, 2, 5 hit
/// their closed forms to 1e-12 and odd coefficients vanish exactly.
pub fn angular_measure() -> CriterionOutcome {
    timed("angular-measure", || {
        let cases: [(u64, f64); 3] = [(1, 1.0), (2, -1.0), (5, -0.28)];
        for (m, expect) in cases {
            let spec = enumerate_lattice_points(m);
            let got = angular_fourier(&spec, 4).expect("nonempty");
            if (got - expect).abs() > 1e-12 {
                return (false, format!("τ̂_{m}(4) = {got}, expected {expect}"));
            }
        }
        for m in [1u64, 2, 5, 25, 325] {
            let spec = enumerate_lattice_points(m);
            for k in [1i64, 3, 5, 7] {
                let got = angular_fourier(&spec, k).expect("nonempty");
                if got != 0.0 {
                    return (false, format!("τ̂_{m}({k}) = {got}, expected exact 0"));
                }
            }
        }
        (true, "τ̂(4) hits 1, -1, -7/25 to 1e-12; odd coefficients exactly 0".into())
    })
}

/// 3. Closed-form zero counts on the m = 1 cosine wave: counts 2 and 0 with
/// roots at 1/4 and 3/4 to 1e-10.
pub fn closed_form_zeros() -> CriterionOutcome {
    timed("closed-form-zeros", || {
        let spec = Arc::new(enumerate_lattice_points(1));
        let idx = spec
            .half_points
            .iter()
            .position(|p| (p.mu1, p.mu2) == (1, 0))
            .expect("(1,0) in half set");
        let mut a = vec![0.0; 2];
        a[idx] = 1.0;
        let wave = |cx: f64| {
            WaveSample::from_coefficients(&spec, a.clone(), vec![0.0; 2], Ensemble::Gaussian)
                .unwrap()
                .restrict(Arc::new(make_circle((cx, 0.5))))
        };
        let cfg = GridConfig::default();
        let hit = count_zeros(&wave(0.25), &cfg).expect("counting");
        if hit.count != 2 || hit.suspects != 0 {
            return (false, format!("center 1/4: count {} suspects {}", hit.count, hit.suspects));
        }
        if (hit.roots[0] - 0.25).abs() > 1e-10 || (hit.roots[1] - 0.75).abs() > 1e-10 {
            return (false, format!("roots {:?} not at 1/4, 3/4", hit.roots));
        }
        let miss = count_zeros(&wave(0.5), &cfg).expect("counting");
        if miss.count != 0 {
            return (false, format!("center 1/2: count {}", miss.count));
        }
        (true, "counts 2 and 0; roots at 1/4 and 3/4 within 1e-10".into())
    })
}

/// 4. Expected nodal count: |mean − √(2m)| ≤ 3·SE + 0.5%·√(2m) with suspect
/// rate below 0.1%, for the circle and the gaussian ensemble.
pub fn mean_for(m: u64) -> CriterionOutcome {
    timed(&format!("mean-m{m}"), || {
        let batch = match gaussian_batch(m, MC_TRIALS, trial_key(SEED_MEAN, m)) {
            Ok(b) => b,
            Err(e) => return (false, e),
        };
        let rep = match summarize(&batch, &[]) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let theory = (2.0 * m as f64).sqrt();
        let budget = 3.0 * rep.mean_se + 0.005 * theory;
        let mean_ok = (rep.mean - theory).abs() <= budget;
        let suspects_ok = rep.suspect_rate < 0.001;
        (
            mean_ok && suspects_ok,
            format!(
                "mean {:.4} vs √(2m) {:.4} (budget {:.4}), suspect rate {:.5}",
                rep.mean, theory, budget, rep.suspect_rate
            ),
        )
    })
}

/// 5. Variance scale: empirical Var/(m/N) lies in (0, 20); the ratio is a
/// recorded constant, not an asserted theory value.
pub fn variance_scale() -> CriterionOutcome {
    timed("variance-scale", || {
        let mut ratios = Vec::new();
        for m in [25u64, 65, 325] {
            let batch = match gaussian_batch(m, MC_TRIALS, trial_key(SEED_MEAN, m)) {
                Ok(b) => b,
                Err(e) => return (false, e),
            };
            let rep = match summarize(&batch, &[]) {
                Ok(r) => r,
                Err(e) => return (false, e.to_string()),
            };
            if !(rep.variance_ratio > 0.0 && rep.variance_ratio < 20.0) {
                return (
                    false,
                    format!("m={m}: Var/(m/N) = {} outside (0, 20)", rep.variance_ratio),
                );
            }
            ratios.push(format!("m={m}:{:.3}", rep.variance_ratio));
        }
        (true, format!("Var/(m/N) recorded at {}", ratios.join(" ")))
    })
}

/// 6. Leading variance term: vanishes on the circle to 1e-6·(m/N); tensor
/// and factorized quadrature routes agree to 1e-8.
pub fn variance_term() -> CriterionOutcome {
    timed("variance-term", || {
        let cv = circle();
        for m in [25u64, 65, 325] {
            let spec = enumerate_lattice_points(m);
            let lt = match variance_leading_term(&spec, &cv, 96) {
                Ok(l) => l,
                Err(e) => return (false, e.to_string()),
            };
            let budget = 1e-6 * lt.scale;
            if lt.tensor.abs() > budget || lt.factorized.abs() > budget {
                return (
                    false,
                    format!("m={m}: circle term {} / {} above {budget:e}", lt.tensor, lt.factorized),
                );
            }
            let floor = 1e-6 * lt.scale;
            if (lt.tensor - lt.factorized).abs()
                > 1e-8 * lt.tensor.abs().max(lt.factorized.abs()).max(floor)
            {
                return (false, format!("m={m}: quadrature routes disagree"));
            }
        }
        let oval = match make_analytic_oval(2.0, 1.0, (0.5, 0.5)) {
            Ok(c) => c,
            Err(e) => return (false, e.to_string()),
        };
        let spec = enumerate_lattice_points(25);
        let lt = match variance_leading_term(&spec, &oval, 96) {
            Ok(l) => l,
            Err(e) => return (false, e.to_string()),
        };
        if (lt.tensor - lt.factorized).abs() > 1e-8 * lt.tensor.abs().max(lt.factorized.abs()) {
            return (
                false,
                format!("oval: tensor {} vs factorized {}", lt.tensor, lt.factorized),
            );
        }
        (
            true,
            format!(
                "circle terms below 1e-6·(m/N); oval routes agree ({:.6e})",
                lt.factorized
            ),
        )
    })
}

/// 7. Repulsion: gaussian ratio p̂/(αβ) in [0.81, 0.99] at α = β = 0.1,
/// m = 325, t = 0.3 (closed-form target ≈ 0.8958); rademacher ratio ≤ 2.
pub fn repulsion() -> CriterionOutcome {
    timed("repulsion", || {
        let spec = Arc::new(enumerate_lattice_points(325));
        let cv = circle();
        let g = match repulsion_probe(
            &spec,
            &cv,
            0.3,
            Ensemble::Gaussian,
            0.1,
            0.1,
            REPULSION_TRIALS,
            SEED_REPULSION,
        ) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        if !(g.ratio > 0.81 && g.ratio < 0.99) {
            return (false, format!("gaussian ratio {} outside [0.81, 0.99]", g.ratio));
        }
        let r = match repulsion_probe(
            &spec,
            &cv,
            0.3,
            Ensemble::Rademacher,
            0.1,
            0.1,
            REPULSION_TRIALS,
            trial_key(SEED_REPULSION, 2),
        ) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        if r.ratio > 2.0 {
            return (false, format!("rademacher ratio {} above 2", r.ratio));
        }
        (
            true,
            format!("gaussian ratio {:.4}, rademacher ratio {:.4}", g.ratio, r.ratio),
        )
    })
}

/// 8. Markov domination: every scanned (m, ε) has empirical tail ≤ 1/(Nε²).
pub fn markov_domination() -> CriterionOutcome {
    timed("markov-domination", || {
        let table = match scan_table() {
            Ok(t) => t,
            Err(e) => return (false, e),
        };
        for row in &table.rows {
            if row.tail > row.markov {
                return (
                    false,
                    format!("m={}: tail {} exceeds 1/(Nε²) = {}", row.m, row.tail, row.markov),
                );
            }
        }
        (
            true,
            table
                .rows
                .iter()
                .map(|r| format!("N={}:{:.4}≤{:.3}", r.n_lattice, r.tail, r.markov))
                .collect::<Vec<_>>()
                .join(" "),
        )
    })
}

/// 9. Concentration trend: tails at ε = 0.2 non-increasing in N up to 2·SE
/// for N ∈ {8, 16, 32, 64}.
pub fn concentration_trend() -> CriterionOutcome {
    timed("concentration-trend", || {
        let table = match scan_table() {
            Ok(t) => t,
            Err(e) => return (false, e),
        };
        for pair in table.rows.windows(2) {
            let allowance = 2.0 * (pair[0].tail_se.powi(2) + pair[1].tail_se.powi(2)).sqrt();
            if pair[1].tail > pair[0].tail + allowance {
                return (
                    false,
                    format!(
                        "tail rose from {:.5} (N={}) to {:.5} (N={}) beyond 2·SE = {:.5}",
                        pair[0].tail,
                        pair[0].n_lattice,
                        pair[1].tail,
                        pair[1].n_lattice,
                        allowance
                    ),
                );
            }
        }
        (
            true,
            table
                .rows
                .iter()
                .map(|r| format!("N={}:{:.5}", r.n_lattice, r.tail))
                .collect::<Vec<_>>()
                .join(" "),
        )
    })
}

/// 10. Universality: gaussian vs rademacher mean gap within
/// 3·combined SE + 0.02·λ at m = 325.
pub fn universality() -> CriterionOutcome {
    timed("universality", || {
        let spec = Arc::new(enumerate_lattice_points(325));
        let rep = match universality_gap(
            &spec,
            &circle(),
            (Ensemble::Gaussian, Ensemble::Rademacher),
            MC_TRIALS,
            SEED_UNIVERSALITY,
            &GridConfig::default(),
        ) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let budget = 3.0 * rep.mean_gap_se + 0.02 * spec.lambda;
        (
            rep.mean_gap <= budget,
            format!(
                "means {:.4} vs {:.4}, gap {:.4} ≤ {budget:.4}",
                rep.mean_a, rep.mean_b, rep.mean_gap
            ),
        )
    })
}

/// 11. Determinism: byte-identical trial CSVs under 1, 4 and 8 workers.
pub fn determinism() -> CriterionOutcome {
    timed("determinism", || {
        let spec = Arc::new(enumerate_lattice_points(25));
        let cv = circle();
        let cfg = GridConfig::default();
        let mut csvs = Vec::new();
        for workers in [1usize, 4, 8] {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(p) => p,
                Err(e) => return (false, e.to_string()),
            };
            let batch = pool.install(|| {
                run_mc(&spec, &cv, Ensemble::Gaussian, 2_000, SEED_DETERMINISM, &cfg)
            });
            match batch {
                Ok(b) => csvs.push(b.to_csv()),
                Err(e) => return (false, e.to_string()),
            }
        }
        let identical = csvs.windows(2).all(|w| w[0] == w[1]);
        (
            identical,
            if identical {
                format!("identical {}-row CSVs for workers 1, 4, 8", 2_000)
            } else {
                "CSV dumps differ across worker counts".into()
            },
        )
    })
}

/// 12. Large-sieve scaling: the separated-point ratios have finite maxima
/// over 10³ samples and the d = 2 maximum sits within a factor 100 of the
/// d = 1 maximum.
pub fn large_sieve() -> CriterionOutcome {
    timed("large-sieve", || {
        let spec = Arc::new(enumerate_lattice_points(325));
        let cv = circle();
        let mut max1 = 0.0f64;
        let mut max2 = 0.0f64;
        for i in 0..SIEVE_SAMPLES {
            let rw = match sample_coefficients(&spec, Ensemble::Gaussian, SEED_SIEVE, i) {
                Ok(s) => s.restrict(Arc::clone(&cv)),
                Err(e) => return (false, e.to_string()),
            };
            match large_sieve_check(&rw, 1e-3, DerivOrder::First) {
                Ok(r) => max1 = max1.max(r),
                Err(e) => return (false, e.to_string()),
            }
            match large_sieve_check(&rw, 1e-3, DerivOrder::Second) {
                Ok(r) => max2 = max2.max(r),
                Err(e) => return (false, e.to_string()),
            }
        }
        let finite = max1.is_finite() && max2.is_finite() && max1 > 0.0 && max2 > 0.0;
        let within = max2 <= 100.0 * max1 && max2 >= max1 / 100.0;
        (
            finite && within,
            format!("observed constants: d=1 max {max1:.4}, d=2 max {max2:.4}"),
        )
    })
}

/// 13. Perturbation persistence: on 100 samples, roots inside stable
/// intervals survive coefficient perturbations of norm τ = δ², landing
/// within α/(βλ) of the original root. Zero failures allowed.
pub fn perturbation() -> CriterionOutcome {
    timed("perturbation", || {
        let m = 325u64;
        let spec: Arc<EigenvalueSpec> = Arc::new(enumerate_lattice_points(m));
        let cv = circle();
        let params = stability_defaults(spec.multiplicity());
        let tau = params.delta * params.delta;
        let lambda = spec.lambda;
        let margin = params.alpha / (params.beta * lambda);
        let cfg = GridConfig::default();
        let mut roots_checked = 0u64;
        let mut intervals_used = 0u64;

        for trial in 0..PERTURB_SAMPLES {
            let base = match sample_coefficients(&spec, Ensemble::Gaussian, SEED_PERTURB, trial) {
                Ok(s) => s,
                Err(e) => return (false, e.to_string()),
            };
            let rw = base.clone().restrict(Arc::clone(&cv));
            let classes = match classify_intervals(
                &rw,
                params.alpha,
                params.beta,
                params.r,
                params.delta,
                256,
            ) {
                Ok(c) => c,
                Err(e) => return (false, e.to_string()),
            };
            let roots = match count_zeros(&rw, &cfg) {
                Ok(r) => r.roots,
                Err(e) => return (false, e.to_string()),
            };

            let gdraw = match sample_coefficients(
                &spec,
                Ensemble::Gaussian,
                trial_key(SEED_PERTURB, 0xD15),
                trial,
            ) {
                Ok(s) => s,
                Err(e) => return (false, e.to_string()),
            };
            let scale = tau / gdraw.coefficient_norm();
            let ga: Vec<f64> = gdraw.a.iter().map(|v| v * scale).collect();
            let gb: Vec<f64> = gdraw.b.iter().map(|v| v * scale).collect();
            let g = WaveSample::from_coefficients(&spec, ga.clone(), gb.clone(), Ensemble::Gaussian)
                .unwrap()
                .restrict(Arc::clone(&cv));
            let pa: Vec<f64> = base.a.iter().zip(&ga).map(|(x, y)| x + y).collect();
            let pb: Vec<f64> = base.b.iter().zip(&gb).map(|(x, y)| x + y).collect();
            let perturbed = WaveSample::from_coefficients(&spec, pa, pb, Ensemble::Gaussian)
                .unwrap()
                .restrict(Arc::clone(&cv));

            for flag in classes.intervals.iter().filter(|f| f.stable) {
                let mid = 0.5 * (flag.lo + flag.hi);
                let half3 = 1.5 * (flag.hi - flag.lo);
                let g_small = (0..512).all(|k| {
                    let x = mid - half3 + 2.0 * half3 * k as f64 / 511.0;
                    g.eval(x, DerivOrder::Zeroth).abs() < params.alpha
                });
                if !g_small {
                    continue; // premise of the persistence statement fails
                }
                let mut used = false;
                for &root in roots.iter().filter(|&&t| t >= flag.lo && t <= flag.hi) {
                    used = true;
                    roots_checked += 1;
                    if find_root_near(&perturbed, root, margin).is_none() {
                        return (
                            false,
                            format!(
                                "trial {trial}: root {root:.6} lost under τ = {tau:.2e} perturbation"
                            ),
                        );
                    }
                }
                if used {
                    intervals_used += 1;
                }
            }
        }
        (
            roots_checked > 0,
            format!(
                "{roots_checked} roots across {intervals_used} stable intervals persisted within {margin:.2e}"
            ),
        )
    })
}

/// All criterion names in gate order.
pub fn criterion_names() -> Vec<&'static str> {
    vec![
        "lattice-exhaustive",
        "angular-measure",
        "closed-form-zeros",
        "mean-m25",
        "mean-m65",
        "mean-m325",
        "variance-scale",
        "variance-term",
        "repulsion",
        "markov-domination",
        "concentration-trend",
        "universality",
        "determinism",
        "large-sieve",
        "perturbation",
    ]
}

/// Run one named check; `None` for an unknown name.
pub fn run_preset(name: &str) -> Option<Vec<CriterionOutcome>> {
    let single = |o: CriterionOutcome| Some(vec![o]);
    match name {
        "lattice-exhaustive" => single(lattice_exhaustive()),
        "angular-measure" => single(angular_measure()),
        "closed-form-zeros" => single(closed_form_zeros()),
        "mean-m25" => single(mean_for(25)),
        "mean-m65" => single(mean_for(65)),
        "mean-m325" => single(mean_for(325)),
        "variance-scale" => single(variance_scale()),
        "variance-term" => single(variance_term()),
        "repulsion" => single(repulsion()),
        "markov-domination" => single(markov_domination()),
        "concentration-trend" => single(concentration_trend()),
        "universality" => single(universality()),
        "determinism" => single(determinism()),
        "large-sieve" => single(large_sieve()),
        "perturbation" => single(perturbation()),
        "all" => Some(
            criterion_names()
                .iter()
                .flat_map(|n| run_preset(n).expect("registered"))
                .collect(),
        ),
        _ => None,
    }
}
