//! Gauss–Legendre rules and trapezoid time weights.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

/// Composite trapezoid weights for `count` equispaced samples with step `dt`.
pub fn trapezoid_weights(count: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![dt; count];
    if count == 1 {
        w[0] = 0.0;
        return w;
    }
    w[0] *= 0.5;
    w[count - 1] *= 0.5;
    w
}

/// `(Σ w_m a_m^q)^{1/q}` with trapezoid weights; `q = ∞` gives the max.
pub fn time_norm(values: &[f64], dt: f64, q: f64) -> f64 {
    if q == f64::INFINITY {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let w = trapezoid_weights(values.len(), dt);
    let sum: f64 = values.iter().zip(&w).map(|(a, w)| w * a.powf(q)).sum();
    sum.powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [2usize, 5, 16, 64, 128] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // degree 2n-1 exactness, checked on x^(2n-2) which is even
            let deg = (2 * n - 2).min(40) as i32;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((got - exact).abs() < 1e-12, "n={n} got={got}");
        }
    }

    #[test]
    fn unit_rule_integrates_cos() {
        let (x, w) = gauss_legendre_unit(20);
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert!((got - 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn time_norm_of_constant() {
        let vals = vec![3.0; 11];
        let got = time_norm(&vals, 0.1, 4.0);
        assert!((got - 3.0 * 1f64.powf(0.25)).abs() < 1e-14);
        assert_eq!(time_norm(&vals, 0.1, f64::INFINITY), 3.0);
    }
}
