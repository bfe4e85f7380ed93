//! Small numerical helpers: power-weight integrals, Gauss–Legendre rules and
//! modified Bessel functions for the elliptic benchmark.

use std::sync::OnceLock;

/// `∫_a^b s^p ds` for `0 ≤ a ≤ b`, accurate when `b − a ≪ a`.
///
/// Requires `p > −1` when `a = 0`.
pub fn power_integral(a: f64, b: f64, p: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let q = p + 1.0;
    if a == 0.0 {
        return b.powf(q) / q;
    }
    let ln_ratio = ((b - a) / a).ln_1p();
    if q == 0.0 {
        return ln_ratio;
    }
    a.powf(q) * (q * ln_ratio).exp_m1() / q
}

/// `∫_0^b s^p ds`, infinite when `p ≤ −1`.
pub fn power_integral_from_zero(b: f64, p: f64) -> f64 {
    if p <= -1.0 {
        f64::INFINITY
    } else {
        b.powf(p + 1.0) / (p + 1.0)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 12-point rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(12))
    }

    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * g(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// Modified Bessel function `I₀(x)` by its power series.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Modified Bessel function `I₁(x)` by its power series.
pub fn bessel_i1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..500 {
        term *= q / (k * (k + 1)) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_integral_matches_closed_form() {
        for p in [-0.9, -0.5, 0.0, 1.0, 2.4] {
            let want = (2.0f64.powf(p + 1.0) - 0.5f64.powf(p + 1.0)) / (p + 1.0);
            assert!((power_integral(0.5, 2.0, p) - want).abs() < 1e-14);
        }
        assert!((power_integral(1.0, std::f64::consts::E, -1.0) - 1.0).abs() < 1e-15);
        assert!((power_integral(0.0, 1.0, -0.5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_integral_short_interval_is_accurate() {
        let a = 0.7;
        let b = a + 1e-9;
        let got = power_integral(a, b, -1.7);
        let h = b - a;
        let want = h * (a + 0.5 * h).powf(-1.7);
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = GaussLegendre::new(12);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let got = rule.integrate(0.0, 2.0, |x| x.powi(23));
        let want = 2.0f64.powi(24) / 24.0;
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun table 9.8
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i1(1.0) - 0.565_159_103_992_485).abs() < 1e-15);
        assert!((bessel_i0(2.0) - 2.279_585_302_336_067).abs() < 1e-14);
    }
}
