//! Complete and incomplete elliptic integrals (Carlson symmetric forms) and
//! Jacobi amplitude / elliptic cosine (arithmetic-geometric mean).
//!
//! Every function takes the modulus `k`, not the parameter `m = k²`. The
//! complementary `k'² = (1 − k)(1 + k)` is formed directly so that moduli a
//! few ulps below one keep their precision.

use crate::error::{QgpeError, Result};

const CARLSON_TOL: f64 = 1e-3;

fn check_modulus(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(QgpeError::Domain(format!("elliptic modulus must lie in [0, 1), got {k}")));
    }
    Ok((1.0 - k) * (1.0 + k))
}

/// Carlson's `R_F(x, y, z)`; at most one argument may be zero.
fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = (x + y + z) / 3.0;
        let (dx, dy, dz) = ((ave - x) / ave, (ave - y) / ave, (ave - z) / ave);
        if dx.abs().max(dy.abs()).max(dz.abs()) < CARLSON_TOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt();
        }
    }
}

/// Carlson's `R_J(x, y, z, p)` for `p > 0`.
fn carlson_rj(mut x: f64, mut y: f64, mut z: f64, mut p: f64) -> f64 {
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 3.0;
    const C3: f64 = 3.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.75 * C3;
    const C6: f64 = 1.5 * C4;
    const C7: f64 = 0.5 * C2;
    const C8: f64 = C3 + C3;
    let mut sum = 0.0;
    let mut fac = 1.0;
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        let alpha = (p * (sx + sy + sz) + sx * sy * sz).powi(2);
        let beta = p * (p + lambda).powi(2);
        sum += fac * carlson_rf(alpha, beta, beta);
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        p = 0.25 * (p + lambda);
        let ave = 0.2 * (x + y + z + p + p);
        let (dx, dy, dz, dp) = ((ave - x) / ave, (ave - y) / ave, (ave - z) / ave, (ave - p) / ave);
        if dx.abs().max(dy.abs()).max(dz.abs()).max(dp.abs()) < CARLSON_TOL {
            let ea = dx * (dy + dz) + dy * dz;
            let eb = dx * dy * dz;
            let ec = dp * dp;
            let ed = ea - 3.0 * ec;
            let ee = eb + 2.0 * dp * (ea - ec);
            let series = 1.0 + ed * (-C1 + C5 * ed - C6 * ee)
                + eb * (C7 + dp * (-C8 + dp * C4))
                + dp * ea * (C2 - dp * C3)
                - C2 * dp * ec;
            return 3.0 * sum + fac * series / (ave * ave.sqrt());
        }
    }
}

/// Complete integral of the first kind `K(k)`.
pub fn complete_k(k: f64) -> Result<f64> {
    let kc2 = check_modulus(k)?;
    Ok(carlson_rf(0.0, kc2, 1.0))
}

/// Complete integral of the third kind
/// `Π(n, k) = ∫₀^{π/2} dθ / ((1 − n sin²θ) √(1 − k² sin²θ))`, for `n < 1`.
pub fn complete_pi(n: f64, k: f64) -> Result<f64> {
    let kc2 = check_modulus(k)?;
    check_characteristic(n)?;
    Ok(carlson_rf(0.0, kc2, 1.0) + n / 3.0 * carlson_rj(0.0, kc2, 1.0, 1.0 - n))
}

fn check_characteristic(n: f64) -> Result<()> {
    if !(n < 1.0) || !n.is_finite() {
        return Err(QgpeError::Domain(format!("characteristic must be finite and below 1, got {n}")));
    }
    Ok(())
}

/// Incomplete integral of the third kind `Π(n; φ | k)` for any real `φ`.
pub fn incomplete_pi(n: f64, phi: f64, k: f64) -> Result<f64> {
    let kc2 = check_modulus(k)?;
    check_characteristic(n)?;
    if !phi.is_finite() {
        return Err(QgpeError::Domain("amplitude must be finite".into()));
    }
    // Reduce to |φ| ≤ π/2 with Π(n; φ + jπ) = Π(n; φ) + 2jΠ(n).
    let turns = (phi / std::f64::consts::PI).round();
    let reduced = phi - turns * std::f64::consts::PI;
    let (s, c) = reduced.sin_cos();
    // 1 − k² s² written as c² + k'² s² to avoid cancellation near k = 1.
    let delta = c * c + kc2 * s * s;
    let partial = s * carlson_rf(c * c, delta, 1.0) + n / 3.0 * s.powi(3) * carlson_rj(c * c, delta, 1.0, 1.0 - n * s * s);
    let full = if turns != 0.0 { 2.0 * turns * complete_pi(n, k)? } else { 0.0 };
    Ok(partial + full)
}

/// Jacobi amplitude `am(u, k)`, continuous and increasing in `u`.
pub fn jacobi_am(u: f64, k: f64) -> Result<f64> {
    let kc2 = check_modulus(k)?;
    if k == 0.0 {
        return Ok(u);
    }
    let mut a = vec![1.0f64];
    let mut c = vec![k];
    let mut b = kc2.sqrt();
    while c.last().copied().unwrap_or(0.0).abs() > 1e-16 * a.last().copied().unwrap_or(1.0) && a.len() < 64 {
        let an = *a.last().expect("non-empty");
        let next_a = 0.5 * (an + b);
        let next_c = 0.5 * (an - b);
        b = (an * b).sqrt();
        a.push(next_a);
        c.push(next_c);
    }
    let last = a.len() - 1;
    let mut phi = 2f64.powi(last as i32) * a[last] * u;
    for j in (1..=last).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    Ok(phi)
}

/// Jacobi elliptic cosine `cn(u, k) = cos am(u, k)`.
pub fn jacobi_cn(u: f64, k: f64) -> Result<f64> {
    Ok(jacobi_am(u, k)?.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Composite Gauss-Legendre quadrature on `[lo, hi]` split into `panels`.
    fn quad(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        // Five-point nodes and weights.
        let nodes = [0.0, 0.5384693101056831, -0.5384693101056831, 0.9061798459386640, -0.9061798459386640];
        let weights = [0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891, 0.2369268850561891];
        let h = (hi - lo) / panels as f64;
        (0..panels)
            .map(|p| {
                let mid = lo + (p as f64 + 0.5) * h;
                nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
            })
            .sum()
    }

    fn pi_oracle(n: f64, phi: f64, k: f64) -> f64 {
        quad(|t| 1.0 / ((1.0 - n * t.sin().powi(2)) * (1.0 - k * k * t.sin().powi(2)).sqrt()), 0.0, phi, 400)
    }

    /// `am` by integrating `dφ/du = √(1 − k² sin²φ)` with classical RK4.
    fn am_oracle(u: f64, k: f64) -> f64 {
        let steps = 20_000;
        let h = u / steps as f64;
        let f = |p: f64| (1.0 - k * k * p.sin().powi(2)).sqrt();
        let mut p = 0.0;
        for _ in 0..steps {
            let k1 = f(p);
            let k2 = f(p + 0.5 * h * k1);
            let k3 = f(p + 0.5 * h * k2);
            let k4 = f(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        p
    }

    #[test]
    fn complete_first_kind_values() {
        assert!((complete_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((complete_k(0.5).unwrap() - 1.6857503548125961).abs() < 1e-14);
        for k in [0.1f64, 0.7, 0.95] {
            let oracle = quad(|t| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, 200);
            assert!((complete_k(k).unwrap() - oracle).abs() < 1e-12 * oracle);
        }
    }

    #[test]
    fn third_kind_matches_quadrature() {
        for &(n, k) in &[(0.0, 0.5), (0.3, 0.2), (-2.0, 0.8), (-9.0, 0.9), (0.9, 0.6)] {
            let c = complete_pi(n, k).unwrap();
            let o = pi_oracle(n, PI / 2.0, k);
            assert!((c - o).abs() < 1e-12 * o.abs(), "Π({n}, {k}) = {c} vs {o}");
            for phi in [0.3, 1.1, -0.7] {
                let c = incomplete_pi(n, phi, k).unwrap();
                let o = pi_oracle(n, phi, k);
                assert!((c - o).abs() < 1e-12 * o.abs().max(1e-3), "Π({n}; {phi} | {k})");
            }
        }
        assert!((complete_pi(0.0, 0.5).unwrap() - complete_k(0.5).unwrap()).abs() < 1e-15);
        // Quasi-periodicity beyond a half turn.
        let (n, k) = (-3.0, 0.7);
        let wrapped = incomplete_pi(n, 0.4 + PI, k).unwrap();
        assert!((wrapped - incomplete_pi(n, 0.4, k).unwrap() - 2.0 * complete_pi(n, k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn modulus_close_to_one() {
        // K(k) → ln(4/k') as k' → 0, with the next term O(k'² ln k').
        let k: f64 = 1.0 - 5e-13;
        let kc = ((1.0 - k) * (1.0 + k)).sqrt();
        let approx = (4.0 / kc).ln();
        assert!((complete_k(k).unwrap() - approx).abs() < 1e-9);
        // The amplitude reaches π/2 at the quarter period.
        let quarter = complete_k(k).unwrap();
        assert!((jacobi_am(quarter, k).unwrap() - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn amplitude_and_cosine() {
        for u in [0.0, 1.0, 2.5, 7.0, 10.0] {
            assert!((jacobi_cn(u, 0.0).unwrap() - u.cos()).abs() < 1e-13);
        }
        for k in [0.3f64, 0.8, 0.99] {
            assert_eq!(jacobi_cn(0.0, k).unwrap(), 1.0);
            let kk = complete_k(k).unwrap();
            assert!(jacobi_cn(kk, k).unwrap().abs() < 1e-12);
            // Period 4K and quasi-linearity am(u + 2K) = am(u) + π.
            assert!((jacobi_cn(0.7 + 4.0 * kk, k).unwrap() - jacobi_cn(0.7, k).unwrap()).abs() < 1e-12);
            assert!((jacobi_am(0.7 + 2.0 * kk, k).unwrap() - jacobi_am(0.7, k).unwrap() - PI).abs() < 1e-12);
            for u in [0.4, 1.3, 2.2] {
                assert!((jacobi_am(u, k).unwrap() - am_oracle(u, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(complete_k(1.0).is_err());
        assert!(complete_k(-0.1).is_err());
        assert!(complete_pi(1.0, 0.5).is_err());
        assert!(jacobi_cn(0.1, 1.2).is_err());
        assert!(incomplete_pi(0.5, f64::NAN, 0.5).is_err());
    }
}
