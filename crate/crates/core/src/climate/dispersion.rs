//! Linear dispersion relation `ω² = g k tanh(k h)`.

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;

/// Wave number for angular frequency `omega` in water of depth `depth`.
///
/// Newton iteration from the deep-water guess `ω²/g`, safeguarded by a
/// bracket so that a step leaving it falls back to bisection.
pub fn dispersion_solve(omega: f64, depth: f64, gravity: f64) -> Result<f64> {
    if !(omega > 0.0) || !(depth > 0.0) || !(gravity > 0.0) {
        return Err(Error::Domain(format!(
            "dispersion needs positive omega, depth and gravity (got {omega}, {depth}, {gravity})"
        )));
    }
    let target = omega * omega;
    let residual = |k: f64| gravity * k * (k * depth).tanh() - target;

    // both guesses under-predict k: tanh(kh) < 1 and tanh(kh) < kh
    let deep = target / gravity;
    let shallow = omega / (gravity * depth).sqrt();
    let mut lo = deep.max(shallow);
    let mut hi = lo;
    while residual(hi) < 0.0 {
        hi *= 2.0;
    }
    if residual(lo) >= 0.0 {
        return Ok(lo);
    }

    let mut k = deep;
    for _ in 0..MAX_ITERATIONS {
        let r = residual(k);
        if (r / target).abs() < 1e-15 {
            return Ok(k);
        }
        if r < 0.0 {
            lo = lo.max(k);
        } else {
            hi = hi.min(k);
        }
        let t = (k * depth).tanh();
        let slope = gravity * (t + k * depth * (1.0 - t * t));
        let mut next = k - r / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() <= 4.0 * f64::EPSILON * k {
            return Ok(next);
        }
        k = next;
    }
    if (residual(k) / target).abs() < 1e-10 {
        return Ok(k);
    }
    Err(Error::Numerical(format!(
        "dispersion relation did not converge for omega = {omega}, depth = {depth}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.81;

    fn bisection(omega: f64, h: f64) -> f64 {
        let f = |k: f64| G * k * (k * h).tanh() - omega * omega;
        let (mut a, mut b) = (1e-6, 10.0 * omega * omega / G);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn matches_bisection_oracle() {
        let k = dispersion_solve(1.0, 50.0, G).unwrap();
        let residual = (1.0 - G * k * (k * 50.0).tanh()).abs();
        assert!(residual < 1e-10);
        assert!((k - bisection(1.0, 50.0)).abs() / k < 1e-12);
    }

    #[test]
    fn deep_and_shallow_limits() {
        // deep: kh > 5
        let omega = 3.0;
        let k = dispersion_solve(omega, 50.0, G).unwrap();
        assert!(k * 50.0 > 5.0);
        assert!((k - omega * omega / G).abs() / k < 1e-3);
        // shallow: kh < 0.05
        let omega = 0.01;
        let h = 10.0;
        let k = dispersion_solve(omega, h, G).unwrap();
        assert!(k * h < 0.05);
        assert!((k - omega / (G * h).sqrt()).abs() / k < 1e-2);
    }

    #[test]
    fn residual_small_across_regimes() {
        for &h in &[0.5, 5.0, 50.0, 5000.0] {
            for i in 1..200 {
                let omega = 0.01 * i as f64;
                let k = dispersion_solve(omega, h, G).unwrap();
                let rel = (G * k * (k * h).tanh() - omega * omega).abs() / (omega * omega);
                assert!(rel < 1e-10, "omega {omega} h {h}: {rel}");
            }
        }
    }

    #[test]
    fn strictly_increasing_in_omega() {
        let mut prev = 0.0;
        for i in 1..500 {
            let k = dispersion_solve(0.01 * i as f64, 20.0, G).unwrap();
            assert!(k > prev);
            prev = k;
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(dispersion_solve(0.0, 1.0, G).is_err());
        assert!(dispersion_solve(1.0, -1.0, G).is_err());
    }
}
