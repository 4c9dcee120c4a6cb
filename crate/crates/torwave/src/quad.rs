//! Gauss–Legendre quadrature and compensated summation helpers.

/// Gauss–Legendre rule on the reference interval `[-1, 1]`.
///
/// Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
/// iteration from the Chebyshev-like initial guess; weights follow from the
/// derivative at the node. Accurate to machine precision for n up to a few
/// thousand.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            // cos() above enumerates roots in descending order; store ascending.
            nodes[n - 1 - k] = x;
            weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to the interval `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal subintervals of `[a, b]`.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for i in 0..panels {
            total += self.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f);
        }
        total
    }
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// In-place pairwise (tree) sum. The buffer is consumed as scratch space.
///
/// Used for all coefficient-indexed reductions so that evaluation results do
/// not depend on chunking or thread count.
pub fn pairwise_sum(xs: &mut [f64]) -> f64 {
    let mut n = xs.len();
    if n == 0 {
        return 0.0;
    }
    while n > 1 {
        let half = n / 2;
        for i in 0..half {
            xs[i] = xs[2 * i] + xs[2 * i + 1];
        }
        if n % 2 == 1 {
            xs[half] = xs[n - 1];
        }
        n = half + (n & 1);
    }
    xs[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the highest exact degree for n = 8
        let exact = 2.0 / 16.0 * (1f64.powi(16) - (-1f64).powi(16)); // == 0
        let got = gl.integrate(-1.0, 1.0, |x| x.powi(15));
        assert!((got - exact).abs() < 1e-15);
        let got = gl.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((got - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn gl_weights_sum_to_interval_length() {
        for n in [1, 2, 5, 16, 64, 129] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.mapped(0.0, 1.0).map(|(_, w)| w).sum();
            assert!((s - 1.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn gl_handles_oscillatory_integrand() {
        let gl = GaussLegendre::new(64);
        // ∫_0^1 cos(4πt) dt = 0
        let got = gl.integrate(0.0, 1.0, |t| (4.0 * std::f64::consts::PI * t).cos());
        assert!(got.abs() < 1e-14, "{got}");
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_inputs() {
        let mut buf = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(pairwise_sum(&mut buf), 15.0);
        let mut empty: Vec<f64> = vec![];
        assert_eq!(pairwise_sum(&mut empty), 0.0);
        let mut one = vec![42.0];
        assert_eq!(pairwise_sum(&mut one), 42.0);
    }
}
