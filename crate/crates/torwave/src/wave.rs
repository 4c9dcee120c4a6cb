//! Random eigenfunction sampling and evaluation.
//!
//! A wave is represented by real coefficient arrays `(a, b)` indexed by the
//! half set `E⁺` in ascending lexicographic order:
//!
//! ```text
//! F(x) = √(2/N) Σ_{μ∈E⁺} [ a_μ cos 2π⟨μ,x⟩ + b_μ sin 2π⟨μ,x⟩ ]
//! ```
//!
//! With `a, b` iid mean-0 variance-1 this normalization gives pointwise
//! variance `E F(x)² = 1` exactly (since `cos² + sin² = 1` per pair) and,
//! along any unit-speed curve, `E f′(t)² = 2π²m` exactly by the isotropy of
//! the second-moment matrix of `E`. The equivalent complex model
//! `F(x) = (1/√N) Σ_{μ∈E} ε_μ e^{2πi⟨μ,x⟩}` with `ε_{-μ} = ε̄_μ` is recovered
//! by `ε_μ = (a_μ - i·b_μ)/√2` for `μ ∈ E⁺` (so `ε` is complex standard when
//! `a, b` are real standard).
//!
//! Sampling is counter-based: each coefficient draw is keyed by
//! `(master_seed, trial_index, coefficient_index)`, so batches are
//! reproducible under any trial ordering and any number of worker threads.

use crate::curve::CurveDef;
use crate::lattice::EigenvalueSpec;
use crate::quad::pairwise_sum;
use crate::DerivOrder;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Coefficient law: all three have mean 0 and variance 1 per real coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ensemble {
    Gaussian,
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    Uniform,
}

impl Ensemble {
    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::Rademacher => "rademacher",
            Ensemble::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ensemble {
    type Err = WaveError;

    fn from_str(s: &str) -> Result<Self, WaveError> {
        match s {
            "gaussian" => Ok(Ensemble::Gaussian),
            "rademacher" => Ok(Ensemble::Rademacher),
            "uniform" => Ok(Ensemble::Uniform),
            other => Err(WaveError::UnknownEnsemble(other.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WaveError {
    #[error("m = {m} has an empty eigenspace; nothing to sample")]
    EmptySpectrum { m: u64 },
    #[error("coefficient arrays must both have length {expected}, got {got_a} and {got_b}")]
    CoefficientLength {
        expected: usize,
        got_a: usize,
        got_b: usize,
    },
    #[error("unknown ensemble {0:?} (expected gaussian | rademacher | uniform)")]
    UnknownEnsemble(String),
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; the mixing step behind all seed derivation.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The 64-bit key of one trial; also the per-trial seed column in CSV dumps.
pub fn trial_key(master_seed: u64, trial_index: u64) -> u64 {
    mix64(master_seed ^ mix64(trial_index.wrapping_add(GOLDEN)))
}

fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let key = trial_key(master_seed, trial_index);
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        let w = mix64(key.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN)));
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn draw(base: &ChaCha8Rng, coefficient_index: u64, ensemble: Ensemble) -> f64 {
    let mut rng = base.clone();
    rng.set_stream(coefficient_index);
    match ensemble {
        Ensemble::Gaussian => StandardNormal.sample(&mut rng),
        Ensemble::Rademacher => {
            if rng.next_u64() & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        Ensemble::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
    }
}

/// One realized wave: coefficient arrays over `E⁺` plus provenance.
#[derive(Debug, Clone)]
pub struct WaveSample {
    pub spec: Arc<EigenvalueSpec>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub ensemble: Ensemble,
    /// `(master_seed, trial_index)` for sampled waves; `None` for waves built
    /// from explicit coefficients.
    pub seed_path: Option<(u64, u64)>,
}

/// Draw the coefficient arrays for one trial. Identical output for identical
/// `(master_seed, trial_index)` regardless of call order or thread count.
pub fn sample_coefficients(
    spec: &Arc<EigenvalueSpec>,
    ensemble: Ensemble,
    master_seed: u64,
    trial_index: u64,
) -> Result<WaveSample, WaveError> {
    let half = spec.half_points.len();
    if half == 0 {
        return Err(WaveError::EmptySpectrum { m: spec.m });
    }
    let base = trial_rng(master_seed, trial_index);
    let mut a = Vec::with_capacity(half);
    let mut b = Vec::with_capacity(half);
    for k in 0..half as u64 {
        a.push(draw(&base, 2 * k, ensemble));
        b.push(draw(&base, 2 * k + 1, ensemble));
    }
    Ok(WaveSample {
        spec: Arc::clone(spec),
        a,
        b,
        ensemble,
        seed_path: Some((master_seed, trial_index)),
    })
}

impl WaveSample {
    /// Build a wave from explicit coefficients (tests, perturbations,
    /// closed-form cases).
    pub fn from_coefficients(
        spec: &Arc<EigenvalueSpec>,
        a: Vec<f64>,
        b: Vec<f64>,
        ensemble: Ensemble,
    ) -> Result<Self, WaveError> {
        if spec.half_points.is_empty() {
            return Err(WaveError::EmptySpectrum { m: spec.m });
        }
        let expected = spec.half_points.len();
        if a.len() != expected || b.len() != expected {
            return Err(WaveError::CoefficientLength {
                expected,
                got_a: a.len(),
                got_b: b.len(),
            });
        }
        Ok(WaveSample {
            spec: Arc::clone(spec),
            a,
            b,
            ensemble,
            seed_path: None,
        })
    }

    /// Evaluate `F` at a point of the torus. O(N) time.
    pub fn eval_torus(&self, x: [f64; 2]) -> f64 {
        let hn = self.a.len();
        let norm = (2.0 / (2 * hn) as f64).sqrt();
        let mut terms = Vec::with_capacity(hn);
        for ((p, &ak), &bk) in self.spec.half_points.iter().zip(&self.a).zip(&self.b) {
            let theta = TAU * (p.mu1 as f64 * x[0] + p.mu2 as f64 * x[1]);
            let (s, c) = theta.sin_cos();
            terms.push(ak * c + bk * s);
        }
        norm * pairwise_sum(&mut terms)
    }

    /// RMS coefficient norm `√((1/N) Σ_{E⁺} (a² + b²))`; 1 in expectation for
    /// a unit-variance ensemble. This is the norm the perturbation bounds are
    /// stated in.
    pub fn coefficient_norm(&self) -> f64 {
        let n = (2 * self.a.len()) as f64;
        let ss: f64 = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| a * a + b * b)
            .sum();
        (ss / n).sqrt()
    }

    /// `Σ_{E⁺} √(a² + b²)`, the coefficient mass in the derivative bound.
    pub fn abs_coefficient_sum(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| (a * a + b * b).sqrt())
            .sum()
    }

    /// Diagnostic JSON dump with 17-significant-digit floats:
    /// `{"m":…, "seed":…, "trial":…, "a":[…], "b":[…]}`.
    pub fn to_json(&self) -> String {
        let fmt17 = |x: f64| format!("{x:.16e}");
        let join = |v: &[f64]| {
            v.iter()
                .map(|&x| fmt17(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        let (seed, trial) = match self.seed_path {
            Some((s, t)) => (s.to_string(), t.to_string()),
            None => ("null".to_string(), "null".to_string()),
        };
        format!(
            "{{\"m\":{},\"seed\":{},\"trial\":{},\"a\":[{}],\"b\":[{}]}}",
            self.spec.m,
            seed,
            trial,
            join(&self.a),
            join(&self.b)
        )
    }

    /// Restrict the wave to a curve.
    pub fn restrict(self, curve: Arc<CurveDef>) -> RestrictedWave {
        RestrictedWave::new(self, curve)
    }
}

/// Shared per-term evaluation so that pointwise and precomputed-grid paths
/// produce bit-identical values.
#[inline(always)]
fn term(order: DerivOrder, a: f64, b: f64, c: f64, s: f64, w1: f64, w2: f64) -> f64 {
    match order {
        DerivOrder::Zeroth => a * c + b * s,
        DerivOrder::First => w1 * (b * c - a * s),
        DerivOrder::Second => w2 * (b * c - a * s) - (w1 * w1) * (a * c + b * s),
    }
}

/// The restriction `f(t) = F(γ(t))` of a wave to a curve, with derivatives
/// along the curve. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone)]
pub struct RestrictedWave {
    pub sample: WaveSample,
    pub curve: Arc<CurveDef>,
    /// `E⁺` as floats, in the coefficient order.
    mu: Vec<[f64; 2]>,
    norm: f64,
}

impl RestrictedWave {
    pub fn new(sample: WaveSample, curve: Arc<CurveDef>) -> Self {
        let mu: Vec<[f64; 2]> = sample
            .spec
            .half_points
            .iter()
            .map(|p| [p.mu1 as f64, p.mu2 as f64])
            .collect();
        let norm = (2.0 / (2 * mu.len()) as f64).sqrt();
        RestrictedWave {
            sample,
            curve,
            mu,
            norm,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.sample.spec.lambda
    }

    /// `f(t)`, `f′(t)` or `f″(t)`.
    ///
    /// With `θ_μ(t) = 2π⟨μ, γ(t)⟩`:
    /// order 0 is `√(2/N) Σ [a cos θ + b sin θ]`,
    /// order 1 is `√(2/N) Σ 2π⟨μ,γ′⟩ [b cos θ − a sin θ]`,
    /// order 2 is `√(2/N) Σ {2π⟨μ,γ″⟩ [b cos θ − a sin θ] − (2π⟨μ,γ′⟩)² [a cos θ + b sin θ]}`.
    pub fn eval(&self, t: f64, order: DerivOrder) -> f64 {
        let mut scratch = Vec::with_capacity(self.mu.len());
        self.eval_with_scratch(t, order, &mut scratch)
    }

    /// Same as [`eval`](Self::eval) with a caller-provided scratch buffer;
    /// used by the counting loops to avoid per-call allocation.
    pub fn eval_with_scratch(&self, t: f64, order: DerivOrder, scratch: &mut Vec<f64>) -> f64 {
        let g0 = self.curve.eval(t, DerivOrder::Zeroth);
        let g1 = match order {
            DerivOrder::Zeroth => [0.0, 0.0],
            _ => self.curve.eval(t, DerivOrder::First),
        };
        let g2 = match order {
            DerivOrder::Second => self.curve.eval(t, DerivOrder::Second),
            _ => [0.0, 0.0],
        };
        scratch.clear();
        for ((m, &ak), &bk) in self.mu.iter().zip(&self.sample.a).zip(&self.sample.b) {
            let theta = TAU * (m[0] * g0[0] + m[1] * g0[1]);
            let (s, c) = theta.sin_cos();
            let w1 = match order {
                DerivOrder::Zeroth => 0.0,
                _ => TAU * (m[0] * g1[0] + m[1] * g1[1]),
            };
            let w2 = match order {
                DerivOrder::Second => TAU * (m[0] * g2[0] + m[1] * g2[1]),
                _ => 0.0,
            };
            scratch.push(term(order, ak, bk, c, s, w1, w2));
        }
        self.norm * pairwise_sum(scratch)
    }

    /// Evaluate on a grid of parameters. Values are bit-identical to calling
    /// [`eval`](Self::eval) point by point (same term order, same pairwise
    /// reduction).
    pub fn batch_eval(&self, grid: &[f64], order: DerivOrder) -> Vec<f64> {
        let mut scratch = Vec::with_capacity(self.mu.len());
        grid.iter()
            .map(|&t| self.eval_with_scratch(t, order, &mut scratch))
            .collect()
    }
}

/// Precomputed trigonometric tables for evaluating many waves of the same
/// eigenspace on a fixed set of curve parameters. One table serves every
/// trial of a Monte Carlo batch; evaluation is a coefficient contraction.
#[derive(Debug, Clone)]
pub struct CurveBasis {
    pub ts: Vec<f64>,
    gamma_prime: Vec<[f64; 2]>,
    gamma_second: Option<Vec<[f64; 2]>>,
    cos_tab: Vec<f64>,
    sin_tab: Vec<f64>,
    mu: Vec<[f64; 2]>,
    norm: f64,
}

impl CurveBasis {
    pub fn new(
        spec: &EigenvalueSpec,
        curve: &CurveDef,
        ts: Vec<f64>,
        with_second: bool,
    ) -> CurveBasis {
        let mu: Vec<[f64; 2]> = spec
            .half_points
            .iter()
            .map(|p| [p.mu1 as f64, p.mu2 as f64])
            .collect();
        let hn = mu.len();
        let norm = (2.0 / (2 * hn) as f64).sqrt();
        let mut cos_tab = Vec::with_capacity(ts.len() * hn);
        let mut sin_tab = Vec::with_capacity(ts.len() * hn);
        let mut gamma_prime = Vec::with_capacity(ts.len());
        let mut gamma_second = with_second.then(|| Vec::with_capacity(ts.len()));
        for &t in &ts {
            let g0 = curve.eval(t, DerivOrder::Zeroth);
            gamma_prime.push(curve.eval(t, DerivOrder::First));
            if let Some(g2) = gamma_second.as_mut() {
                g2.push(curve.eval(t, DerivOrder::Second));
            }
            for m in &mu {
                let theta = TAU * (m[0] * g0[0] + m[1] * g0[1]);
                let (s, c) = theta.sin_cos();
                cos_tab.push(c);
                sin_tab.push(s);
            }
        }
        CurveBasis {
            ts,
            gamma_prime,
            gamma_second,
            cos_tab,
            sin_tab,
            mu,
            norm,
        }
    }

    /// Uniform grid `t_j = j/n`, `j = 0..n`.
    pub fn uniform_grid(
        spec: &EigenvalueSpec,
        curve: &CurveDef,
        n: usize,
        with_second: bool,
    ) -> CurveBasis {
        let ts = (0..n).map(|j| j as f64 / n as f64).collect();
        CurveBasis::new(spec, curve, ts, with_second)
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// Fill `out[j] = f^{(order)}(t_j)` for the wave with coefficients
    /// `(a, b)`.
    pub fn eval_all(
        &self,
        a: &[f64],
        b: &[f64],
        order: DerivOrder,
        out: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) {
        let hn = self.mu.len();
        assert_eq!(a.len(), hn);
        assert_eq!(b.len(), hn);
        if matches!(order, DerivOrder::Second) {
            assert!(
                self.gamma_second.is_some(),
                "basis was built without second derivatives"
            );
        }
        out.clear();
        out.reserve(self.ts.len());
        for j in 0..self.ts.len() {
            let cs = &self.cos_tab[j * hn..(j + 1) * hn];
            let sn = &self.sin_tab[j * hn..(j + 1) * hn];
            let g1 = self.gamma_prime[j];
            let g2 = self
                .gamma_second
                .as_ref()
                .map(|g| g[j])
                .unwrap_or([0.0, 0.0]);
            scratch.clear();
            for ((((m, &ak), &bk), &c), &s) in
                self.mu.iter().zip(a).zip(b).zip(cs).zip(sn)
            {
                let w1 = match order {
                    DerivOrder::Zeroth => 0.0,
                    _ => TAU * (m[0] * g1[0] + m[1] * g1[1]),
                };
                let w2 = match order {
                    DerivOrder::Second => TAU * (m[0] * g2[0] + m[1] * g2[1]),
                    _ => 0.0,
                };
                scratch.push(term(order, ak, bk, c, s, w1, w2));
            }
            out.push(self.norm * pairwise_sum(scratch));
        }
    }
}
