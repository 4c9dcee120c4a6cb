//! Unit-length, unit-speed, positively curved closed curves on the torus.
//!
//! Two families are provided: the circle of radius `1/2π` (constant curvature
//! `2π`, closed form throughout) and an ellipse-derived analytic oval with
//! non-constant curvature, rescaled to unit perimeter and reparametrized to
//! unit speed. Curves are laid out in the fundamental domain without
//! wrapping; torus periodicity is handled downstream in the wave phase
//! `2π⟨μ, γ(t)⟩`, which is insensitive to integer shifts of the coordinates.

use crate::quad::GaussLegendre;
use crate::DerivOrder;
use serde::Serialize;
use std::f64::consts::TAU;

/// Unit-speed tolerance enforced by [`validate_curve`].
pub const TOL_UNIT_SPEED: f64 = 1e-9;
/// Arc-length inversion tolerance for the oval reparametrization.
pub const TOL_REPARAM: f64 = 1e-10;
/// Number of knots in the cumulative arc-length table.
const TABLE_KNOTS: usize = 4096;

/// A closed curve `γ : [0,1] → T²` with `‖γ′‖ = 1` and `‖γ″‖ ≥ curvature_min`.
#[derive(Debug, Clone)]
pub struct CurveDef {
    kind: CurveKind,
    /// Total length; 1 by construction for both families.
    pub length: f64,
    /// Minimum of `‖γ″‖` over the construction grid.
    pub curvature_min: f64,
    /// Maximum of `‖γ″‖` over the construction grid.
    pub curvature_max: f64,
}

#[derive(Debug, Clone)]
enum CurveKind {
    Circle {
        center: [f64; 2],
    },
    Oval {
        a: f64,
        b: f64,
        center: [f64; 2],
        /// Perimeter of the native ellipse `(a cos s, b sin s)`.
        perimeter: f64,
        table: ArcTable,
    },
    /// Test-only: the native ellipse driven by `s = 2πt` with no arc-length
    /// reparametrization, deliberately violating unit speed.
    #[cfg(test)]
    RawEllipse {
        a: f64,
        b: f64,
        center: [f64; 2],
        perimeter: f64,
    },
}

/// Monotone cumulative arc-length table for the native ellipse parameter:
/// `ell[i] = ∫₀^{sᵢ} ‖(−a sin σ, b cos σ)‖ dσ` at the uniform knots
/// `sᵢ = i·2π/K`. Inversion brackets on the table and polishes with Newton.
#[derive(Debug, Clone)]
struct ArcTable {
    ell: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("oval semi-axes must differ; got A = B = {0} (use a circle instead)")]
    DegenerateOval(f64),
    #[error("oval semi-axes must be positive, got A = {0}, B = {1}")]
    NonPositiveAxes(f64, f64),
    #[error("arc-length reparametrization failed to converge to {tol:e} at t = {t}")]
    ReparamFailed { t: f64, tol: f64 },
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
}

/// The unit-length circle `γ(t) = center + (1/2π)(cos 2πt, sin 2πt)`.
pub fn make_circle(center: (f64, f64)) -> CurveDef {
    CurveDef {
        kind: CurveKind::Circle {
            center: [center.0, center.1],
        },
        length: 1.0,
        curvature_min: TAU,
        curvature_max: TAU,
    }
}

fn ellipse_speed(a: f64, b: f64, s: f64) -> f64 {
    let (sin, cos) = s.sin_cos();
    (a * a * sin * sin + b * b * cos * cos).sqrt()
}

/// Ellipse `(A cos s, B sin s) + center`, rescaled to unit perimeter and
/// reparametrized to unit speed.
///
/// The curvature of the unit-speed curve is `P·AB/v(s)³` with
/// `v(s) = √(A² sin²s + B² cos²s)` and `P` the native perimeter, so the
/// max/min curvature ratio is `(max(A,B)/min(A,B))³`.
pub fn make_analytic_oval(a: f64, b: f64, center: (f64, f64)) -> Result<CurveDef, CurveError> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(CurveError::NonPositiveAxes(a, b));
    }
    if a == b {
        return Err(CurveError::DegenerateOval(a));
    }
    let gl = GaussLegendre::new(16);
    let h = TAU / TABLE_KNOTS as f64;
    let mut ell = Vec::with_capacity(TABLE_KNOTS + 1);
    ell.push(0.0);
    let mut acc = 0.0;
    for i in 0..TABLE_KNOTS {
        acc += gl.integrate(i as f64 * h, (i + 1) as f64 * h, |s| ellipse_speed(a, b, s));
        ell.push(acc);
    }
    let perimeter = acc;

    let mut curve = CurveDef {
        kind: CurveKind::Oval {
            a,
            b,
            center: [center.0, center.1],
            perimeter,
            table: ArcTable { ell },
        },
        length: 1.0,
        curvature_min: 0.0,
        curvature_max: 0.0,
    };

    // Probe the inversion across the parameter range; the residual must meet
    // the reparametrization tolerance everywhere.
    for i in 0..=1024 {
        let t = i as f64 / 1024.0;
        let s = curve.native_param(t)?;
        let resid = (curve.native_arc_length(s) - t * perimeter).abs();
        if resid > TOL_REPARAM * perimeter {
            return Err(CurveError::ReparamFailed { t, tol: TOL_REPARAM });
        }
    }

    let (mut kmin, mut kmax) = (f64::INFINITY, 0.0f64);
    for i in 0..TABLE_KNOTS {
        let v = ellipse_speed(a, b, i as f64 * h);
        let k = perimeter * a * b / (v * v * v);
        kmin = kmin.min(k);
        kmax = kmax.max(k);
    }
    curve.curvature_min = kmin;
    curve.curvature_max = kmax;
    Ok(curve)
}

impl CurveDef {
    /// `γ(t)`, `γ′(t)` or `γ″(t)`; periodic in `t` with period 1 (the
    /// argument is reduced before evaluation).
    pub fn eval(&self, t: f64, order: DerivOrder) -> [f64; 2] {
        let t = t - t.floor();
        match &self.kind {
            CurveKind::Circle { center } => {
                let (sin, cos) = (TAU * t).sin_cos();
                let rho = 1.0 / TAU;
                match order {
                    DerivOrder::Zeroth => [center[0] + rho * cos, center[1] + rho * sin],
                    DerivOrder::First => [-sin, cos],
                    DerivOrder::Second => [-TAU * cos, -TAU * sin],
                }
            }
            CurveKind::Oval {
                a,
                b,
                center,
                perimeter,
                ..
            } => {
                let s = self
                    .native_param(t)
                    .expect("inversion validated at construction");
                let (sin, cos) = s.sin_cos();
                let e = [-a * sin, b * cos];
                let v = (e[0] * e[0] + e[1] * e[1]).sqrt();
                match order {
                    DerivOrder::Zeroth => [
                        center[0] + a * cos / perimeter,
                        center[1] + b * sin / perimeter,
                    ],
                    DerivOrder::First => [e[0] / v, e[1] / v],
                    DerivOrder::Second => {
                        let ep = [-a * cos, -b * sin];
                        let vp = (a * a - b * b) * sin * cos / v;
                        let scale = perimeter / (v * v);
                        [
                            scale * (ep[0] - e[0] * vp / v),
                            scale * (ep[1] - e[1] * vp / v),
                        ]
                    }
                }
            }
            #[cfg(test)]
            CurveKind::RawEllipse {
                a,
                b,
                center,
                perimeter,
            } => {
                let (sin, cos) = (TAU * t).sin_cos();
                match order {
                    DerivOrder::Zeroth => [
                        center[0] + a * cos / perimeter,
                        center[1] + b * sin / perimeter,
                    ],
                    DerivOrder::First => {
                        [-TAU * a * sin / perimeter, TAU * b * cos / perimeter]
                    }
                    DerivOrder::Second => [
                        -TAU * TAU * a * cos / perimeter,
                        -TAU * TAU * b * sin / perimeter,
                    ],
                }
            }
        }
    }

    pub fn position(&self, t: f64) -> [f64; 2] {
        self.eval(t, DerivOrder::Zeroth)
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        self.eval(t, DerivOrder::First)
    }

    pub fn acceleration(&self, t: f64) -> [f64; 2] {
        self.eval(t, DerivOrder::Second)
    }

    /// Short descriptor in the CLI syntax, `circle:cx,cy` or `oval:A,B,cx,cy`.
    pub fn describe(&self) -> String {
        match &self.kind {
            CurveKind::Circle { center } => format!("circle:{},{}", center[0], center[1]),
            CurveKind::Oval { a, b, center, .. } => {
                format!("oval:{},{},{},{}", a, b, center[0], center[1])
            }
            #[cfg(test)]
            CurveKind::RawEllipse { a, b, .. } => format!("raw-ellipse:{a},{b}"),
        }
    }

    /// Cumulative native arc length `ℓ(s)` for the oval.
    fn native_arc_length(&self, s: f64) -> f64 {
        match &self.kind {
            CurveKind::Oval { a, b, table, .. } => {
                let h = TAU / TABLE_KNOTS as f64;
                let i = ((s / h) as usize).min(TABLE_KNOTS - 1);
                let gl = GaussLegendre::new(16);
                table.ell[i] + gl.integrate(i as f64 * h, s, |x| ellipse_speed(*a, *b, x))
            }
            _ => unreachable!("only reparametrized ovals track arc length"),
        }
    }

    /// Invert `ℓ(s) = t·P`: table bracket, then Newton with bisection
    /// fallback.
    fn native_param(&self, t: f64) -> Result<f64, CurveError> {
        let (a, b, perimeter, table) = match &self.kind {
            CurveKind::Oval {
                a,
                b,
                perimeter,
                table,
                ..
            } => (*a, *b, *perimeter, table),
            _ => unreachable!("only reparametrized ovals invert arc length"),
        };
        let target = t * perimeter;
        let h = TAU / TABLE_KNOTS as f64;
        let idx = match table
            .ell
            .binary_search_by(|v| v.partial_cmp(&target).unwrap())
        {
            Ok(i) => i.min(TABLE_KNOTS - 1),
            Err(i) => i.saturating_sub(1).min(TABLE_KNOTS - 1),
        };
        let mut lo = idx as f64 * h;
        let mut hi = lo + h;
        let frac = if table.ell[idx + 1] > table.ell[idx] {
            (target - table.ell[idx]) / (table.ell[idx + 1] - table.ell[idx])
        } else {
            0.5
        };
        let mut s = lo + frac * h;
        // Iterate to the floating-point noise floor, well below TOL_REPARAM,
        // so finite differences of the position stay clean.
        let floor = 4.0 * f64::EPSILON * perimeter;
        let mut best = (f64::INFINITY, s);
        for _ in 0..60 {
            let f = self.native_arc_length(s) - target;
            if f.abs() < best.0 {
                best = (f.abs(), s);
            }
            if f.abs() <= floor {
                return Ok(s);
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let step = f / ellipse_speed(a, b, s);
            let next = s - step;
            s = if next <= lo || next >= hi {
                0.5 * (lo + hi)
            } else {
                next
            };
        }
        if best.0 <= TOL_REPARAM * perimeter {
            Ok(best.1)
        } else {
            Err(CurveError::ReparamFailed { t, tol: TOL_REPARAM })
        }
    }

    /// Test-only constructor for a deliberately non-unit-speed curve: the
    /// native ellipse without arc-length reparametrization. Must fail
    /// validation.
    #[cfg(test)]
    pub(crate) fn unreparametrized_oval(a: f64, b: f64, center: (f64, f64)) -> CurveDef {
        let gl = GaussLegendre::new(16);
        let perimeter = gl.integrate_composite(0.0, TAU, 64, |s| ellipse_speed(a, b, s));
        CurveDef {
            kind: CurveKind::RawEllipse {
                a,
                b,
                center: [center.0, center.1],
                perimeter,
            },
            length: 1.0,
            curvature_min: 0.0,
            curvature_max: 0.0,
        }
    }
}

/// Grid validation report for a curve.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub curve: String,
    pub grid_size: usize,
    /// `max |‖γ′(t)‖ − 1|` over the grid.
    pub max_unit_speed_defect: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub closure_position_defect: f64,
    pub closure_velocity_defect: f64,
    pub passed: bool,
}

/// Check unit speed, positive curvature and closure on a uniform grid.
/// Violations produce a failing report, not an error.
pub fn validate_curve(curve: &CurveDef, grid_size: usize) -> Result<ValidationReport, CurveError> {
    if grid_size < 1000 {
        return Err(CurveError::InvalidParameter(format!(
            "validation grid must have at least 1000 points, got {grid_size}"
        )));
    }
    let mut max_defect = 0.0f64;
    let mut min_curv = f64::INFINITY;
    let mut max_curv = 0.0f64;
    for i in 0..grid_size {
        let t = i as f64 / grid_size as f64;
        let v = curve.velocity(t);
        let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
        max_defect = max_defect.max((speed - 1.0).abs());
        let a = curve.acceleration(t);
        let k = (a[0] * a[0] + a[1] * a[1]).sqrt();
        min_curv = min_curv.min(k);
        max_curv = max_curv.max(k);
    }
    let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let closure_pos = d(curve.position(0.0), curve.position(1.0));
    let closure_vel = d(curve.velocity(0.0), curve.velocity(1.0));
    let passed = max_defect <= TOL_UNIT_SPEED
        && min_curv > 0.0
        && closure_pos <= 1e-12
        && closure_vel <= 1e-12;
    Ok(ValidationReport {
        curve: curve.describe(),
        grid_size,
        max_unit_speed_defect: max_defect,
        min_curvature: min_curv,
        max_curvature: max_curv,
        closure_position_defect: closure_pos,
        closure_velocity_defect: closure_vel,
        passed,
    })
}

/// Parse a CLI curve descriptor: `circle:cx,cy` or `oval:A,B,cx,cy`.
pub fn parse_curve(s: &str) -> Result<CurveDef, CurveError> {
    let bad = |msg: &str| CurveError::InvalidParameter(format!("{msg}: {s:?}"));
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| bad("expected curve descriptor \"kind:params\""))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("malformed numeric parameter"))?;
    match kind {
        "circle" => {
            if nums.len() != 2 {
                return Err(bad("circle takes cx,cy"));
            }
            Ok(make_circle((nums[0], nums[1])))
        }
        "oval" => {
            if nums.len() != 4 {
                return Err(bad("oval takes A,B,cx,cy"));
            }
            make_analytic_oval(nums[0], nums[1], (nums[2], nums[3]))
        }
        _ => Err(bad("unknown curve kind")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(p: [f64; 2]) -> f64 {
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }

    /// Quadrature oracle for total length, independent of the construction.
    fn length_by_quadrature(curve: &CurveDef, panels: usize) -> f64 {
        let gl = GaussLegendre::new(16);
        gl.integrate_composite(0.0, 1.0, panels, |t| norm(curve.velocity(t)))
    }

    #[test]
    fn circle_closed_forms() {
        let rho = 1.0 / TAU;
        let c = make_circle((0.5, 0.5));
        let p0 = c.position(0.0);
        assert!((p0[0] - (0.5 + rho)).abs() < 1e-15);
        assert!((p0[1] - 0.5).abs() < 1e-15);
        let v0 = c.velocity(0.0);
        assert!((v0[0]).abs() < 1e-15 && (v0[1] - 1.0).abs() < 1e-15);

        let c = make_circle((0.25, 0.5));
        let p = c.position(0.25);
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - (0.5 + rho)).abs() < 1e-15);

        for i in 0..100 {
            let t = i as f64 / 100.0;
            assert!((norm(c.acceleration(t)) - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_length_is_one() {
        let c = make_circle((0.3, 0.7));
        assert!((length_by_quadrature(&c, 32) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oval_rejects_degenerate_axes() {
        assert!(matches!(
            make_analytic_oval(1.5, 1.5, (0.5, 0.5)),
            Err(CurveError::DegenerateOval(_))
        ));
        assert!(make_analytic_oval(-1.0, 2.0, (0.5, 0.5)).is_err());
    }

    #[test]
    fn oval_has_unit_length_and_unit_speed() {
        let c = make_analytic_oval(2.0, 1.0, (0.5, 0.5)).unwrap();
        assert!((length_by_quadrature(&c, 64) - 1.0).abs() < 1e-9);
        let mut rng = 0x12345u64;
        for _ in 0..1000 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
            let t = (rng >> 11) as f64 / (1u64 << 53) as f64;
            assert!((norm(c.velocity(t)) - 1.0).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn oval_curvature_ratio_matches_ellipse() {
        let c = make_analytic_oval(2.0, 1.0, (0.5, 0.5)).unwrap();
        assert!(c.curvature_min > 0.0);
        let ratio = c.curvature_max / c.curvature_min;
        assert!((ratio - 8.0).abs() < 1e-6, "ratio = {ratio}");
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let curves = [
            make_circle((0.5, 0.5)),
            make_analytic_oval(2.0, 1.0, (0.5, 0.5)).unwrap(),
        ];
        let hstep = 1e-6;
        let mut rng = 0xabcdefu64;
        for c in &curves {
            for _ in 0..1000 {
                rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
                let t = (rng >> 11) as f64 / (1u64 << 53) as f64;
                for axis in 0..2 {
                    let fd1 = (c.position(t + hstep)[axis] - c.position(t - hstep)[axis])
                        / (2.0 * hstep);
                    assert!((fd1 - c.velocity(t)[axis]).abs() < 1e-5, "t={t} axis={axis}");
                    let fd2 = (c.velocity(t + hstep)[axis] - c.velocity(t - hstep)[axis])
                        / (2.0 * hstep);
                    assert!(
                        (fd2 - c.acceleration(t)[axis]).abs() < 1e-5,
                        "t={t} axis={axis}"
                    );
                }
            }
        }
    }

    #[test]
    fn arc_length_property_on_subintervals() {
        let c = make_analytic_oval(1.7, 0.9, (0.5, 0.5)).unwrap();
        let gl = GaussLegendre::new(32);
        for (t1, t2) in [(0.0, 0.37), (0.11, 0.52), (0.25, 1.0), (0.6, 0.83)] {
            let len = gl.integrate_composite(t1, t2, 16, |t| norm(c.velocity(t)));
            assert!((len - (t2 - t1)).abs() < 1e-8, "[{t1}, {t2}]: {len}");
        }
    }

    #[test]
    fn periodicity_is_exact_on_representable_arguments() {
        let c = make_analytic_oval(2.0, 1.0, (0.5, 0.5)).unwrap();
        // arguments on the 2^-20 grid survive t+1 exactly in f64
        for k in [0u64, 1, 77, 524_287, 1_000_000] {
            let t = k as f64 / (1u64 << 20) as f64;
            assert_eq!(c.position(t), c.position(t + 1.0));
            assert_eq!(c.velocity(t), c.velocity(t + 1.0));
            assert_eq!(c.acceleration(t), c.acceleration(t + 1.0));
        }
    }

    #[test]
    fn validation_passes_for_good_curves() {
        let r = validate_curve(&make_circle((0.5, 0.5)), 2000).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.min_curvature - TAU).abs() < 1e-12);

        let oval = make_analytic_oval(2.0, 1.0, (0.5, 0.5)).unwrap();
        let r = validate_curve(&oval, 2000).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.min_curvature > 0.0);

        assert!(validate_curve(&oval, 10).is_err());
    }

    #[test]
    fn validation_fails_for_unreparametrized_oval() {
        let broken = CurveDef::unreparametrized_oval(2.0, 1.0, (0.5, 0.5));
        let r = validate_curve(&broken, 2000).unwrap();
        assert!(!r.passed, "{r:?}");
        assert!(r.max_unit_speed_defect > 1e-3);
    }

    #[test]
    fn reparam_inversion_residual_is_tiny() {
        let c = make_analytic_oval(2.0, 1.0, (0.5, 0.5)).unwrap();
        if let CurveKind::Oval { perimeter, .. } = c.kind {
            for i in 0..=257 {
                let t = i as f64 / 257.0;
                let s = c.native_param(t).unwrap();
                assert!((c.native_arc_length(s) - t * perimeter).abs() <= TOL_REPARAM * perimeter);
            }
        } else {
            unreachable!()
        }
    }

    #[test]
    fn parse_curve_round_trips() {
        let c = parse_curve("circle:0.5,0.5").unwrap();
        assert_eq!(c.describe(), "circle:0.5,0.5");
        let c = parse_curve("oval:2,1,0.5,0.5").unwrap();
        assert_eq!(c.describe(), "oval:2,1,0.5,0.5");
        assert!(parse_curve("circle:0.5").is_err());
        assert!(parse_curve("square:1,2").is_err());
        assert!(parse_curve("oval:1,1,0.5,0.5").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn random_ovals_are_unit_speed(
            a in 0.5f64..3.0,
            ratio in 1.1f64..3.0,
            t in 0.0f64..1.0,
        ) {
            let c = make_analytic_oval(a, a / ratio, (0.5, 0.5)).unwrap();
            prop_assert!((norm(c.velocity(t)) - 1.0).abs() < 1e-9);
            prop_assert!(c.curvature_min > 0.0);
        }
    }
}
