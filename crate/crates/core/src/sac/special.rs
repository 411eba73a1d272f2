//! Special functions backing the Beta policy head: log-gamma, digamma, the
//! regularized incomplete beta function, and its inverse. All math is in
//! f64; callers convert at the boundary.

/// Natural log of the gamma function (Lanczos approximation, g = 7, n = 9).
/// Accurate to ~1e-13 for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Digamma ψ(x) = d/dx ln Γ(x): upward recurrence into the asymptotic
/// region, then the Bernoulli series. Accurate to ~1e-12 for x > 0.
pub fn digamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    // Lift the argument until the asymptotic series is accurate to ~1e-12.
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)))
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a+b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (Lentz's method).
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b) — the Beta(a, b) CDF at x.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    // Use the symmetry that keeps the continued fraction convergent.
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Beta(a, b) log-density at x ∈ (0, 1).
pub fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)
}

/// Inverse CDF (quantile) of Beta(a, b) by bisection refined with Newton
/// steps, so the sample is a smooth deterministic function of (v, a, b).
pub fn beta_quantile(v: f64, a: f64, b: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    if v >= 1.0 {
        return 1.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut x = a / (a + b); // start at the mean
    for _ in 0..200 {
        let f = beta_cdf(x, a, b) - v;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        // Newton step from the current bracket midpoint when usable.
        let pdf = beta_ln_pdf(x, a, b).exp();
        let next = if pdf > 1e-12 {
            let n = x - f / pdf;
            if n > lo && n < hi {
                n
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() < 1e-15 {
            return next;
        }
        x = next;
    }
    x
}

/// ∂I_x(a, b)/∂a by central differences — the derivative has no closed
/// form; the step scales with the parameter.
pub fn beta_cdf_da(x: f64, a: f64, b: f64) -> f64 {
    let h = 1e-5 * a.max(1.0);
    (beta_cdf(x, a + h, b) - beta_cdf(x, a - h, b)) / (2.0 * h)
}

/// ∂I_x(a, b)/∂b by central differences.
pub fn beta_cdf_db(x: f64, a: f64, b: f64) -> f64 {
    let h = 1e-5 * b.max(1.0);
    (beta_cdf(x, a, b + h) - beta_cdf(x, a, b - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        // Γ(1) = Γ(2) = 1; Γ(5) = 24; Γ(1/2) = √π.
        assert!(ln_gamma(1.0).abs() < 1e-12);
        assert!(ln_gamma(2.0).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn digamma_known_values() {
        // ψ(1) = −γ (Euler–Mascheroni); ψ(1/2) = −γ − 2 ln 2.
        let gamma = 0.577_215_664_901_532_9;
        assert!((digamma(1.0) + gamma).abs() < 1e-10);
        assert!((digamma(0.5) + gamma + 2.0 * 2.0f64.ln()).abs() < 1e-10);
        // Recurrence ψ(x+1) = ψ(x) + 1/x.
        for &x in &[0.3, 1.7, 4.2] {
            assert!((digamma(x + 1.0) - digamma(x) - 1.0 / x).abs() < 1e-10);
        }
    }

    #[test]
    fn digamma_matches_ln_gamma_derivative() {
        for &x in &[0.7, 1.5, 3.0, 8.0] {
            let h = 1e-6;
            let fd = (ln_gamma(x + h) - ln_gamma(x - h)) / (2.0 * h);
            assert!((digamma(x) - fd).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn beta_cdf_symmetric_case() {
        // Beta(2, 2) CDF is 3x² − 2x³.
        for &x in &[0.1, 0.25, 0.5, 0.8] {
            let expect = 3.0 * x * x - 2.0 * x * x * x;
            assert!((beta_cdf(x, 2.0, 2.0) - expect).abs() < 1e-12, "x = {x}");
        }
        // Uniform special case Beta(1, 1): CDF = x.
        assert!((beta_cdf(0.37, 1.0, 1.0) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn beta_quantile_inverts_cdf() {
        for &(a, b) in &[(2.0, 5.0), (1.5, 1.5), (4.0, 1.2), (1.0, 3.0)] {
            for &v in &[0.01, 0.2, 0.5, 0.8, 0.99] {
                let x = beta_quantile(v, a, b);
                assert!(
                    (beta_cdf(x, a, b) - v).abs() < 1e-10,
                    "a={a} b={b} v={v} x={x}"
                );
            }
        }
    }

    #[test]
    fn beta_cdf_parameter_derivative_consistency() {
        // Wider-step finite differences agree with the built-in step.
        let (x, a, b) = (0.4, 2.5, 3.5);
        let h = 1e-4;
        let wide = (beta_cdf(x, a + h, b) - beta_cdf(x, a - h, b)) / (2.0 * h);
        assert!((beta_cdf_da(x, a, b) - wide).abs() < 1e-7);
    }

    #[test]
    fn beta_pdf_integrates_to_cdf() {
        // Trapezoid integral of the pdf ≈ CDF.
        let (a, b) = (2.0, 3.0);
        let n = 20_000;
        let x_end = 0.6;
        let mut acc = 0.0;
        for i in 0..n {
            let x0 = x_end * i as f64 / n as f64 + 1e-12;
            let x1 = x_end * (i + 1) as f64 / n as f64;
            acc += 0.5 * (beta_ln_pdf(x0, a, b).exp() + beta_ln_pdf(x1, a, b).exp()) * (x1 - x0);
        }
        assert!((acc - beta_cdf(x_end, a, b)).abs() < 1e-6);
    }
}
