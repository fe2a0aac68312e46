//! Simultaneous polynomial root finding (Aberth–Ehrlich) with Newton polishing.

use num_complex::Complex64;

/// Relative backward error |p(z)| / Σ|c_i||z|^i, coefficients ascending.
pub fn relative_residual(c: &[f64], z: Complex64) -> f64 {
    let mut v = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let r = z.norm();
    for &a in c.iter().rev() {
        v = v * z + a;
        scale = scale * r + a.abs();
    }
    if scale == 0.0 {
        0.0
    } else {
        v.norm() / scale
    }
}

fn eval_with_derivative(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// All roots of a polynomial with real ascending coefficients and nonzero leading term.
/// Returns `None` if the iteration fails to converge.
pub fn aberth(c: &[f64]) -> Option<Vec<Complex64>> {
    let n = c.len().checked_sub(1)?;
    if n == 0 {
        return Some(Vec::new());
    }
    let lead = c[n];
    if lead == 0.0 || c.iter().any(|x| !x.is_finite()) {
        return None;
    }
    if n == 1 {
        return Some(vec![Complex64::new(-c[0] / lead, 0.0)]);
    }
    // Initial guesses on a circle sized by the Fujiwara bound.
    let bound = (0..n)
        .map(|i| (c[i] / lead).abs().powf(1.0 / (n - i) as f64))
        .fold(0.0_f64, f64::max)
        .max(1e-300)
        * 2.0;
    let radius = bound * 0.5;
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    let mut converged = false;
    for _ in 0..2000 {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = eval_with_derivative(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * sum);
            if w.is_finite() {
                z[i] -= w;
                max_step = max_step.max(w.norm() / z[i].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_with_derivative(c, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let next = *zi - p / dp;
            if relative_residual(c, next) <= relative_residual(c, *zi) {
                *zi = next;
            } else {
                break;
            }
        }
        // Snap numerically real roots onto the real axis.
        if zi.im.abs() <= 1e-14 * zi.norm().max(1.0) {
            let re = Complex64::new(zi.re, 0.0);
            if relative_residual(c, re) <= relative_residual(c, *zi) * 10.0 + 1e-16 {
                *zi = re;
            }
        }
    }
    let ok = z.iter().all(|zi| relative_residual(c, *zi) < 1e-10);
    if converged || ok {
        Some(z)
    } else {
        None
    }
}
