//! First Dirichlet eigenvalue of the fork cluster of the cut 3-star.

use std::f64::consts::FRAC_PI_2;

use crate::numeric::bisect;

/// Smallest `omega` in `(0, pi/2]` with `2 tan(a omega) = cot(omega)`.
///
/// `omega(a)^2` is the first eigenvalue of two unit pendant edges joined to a
/// stub of length `a` carrying a Dirichlet condition at its free end.
pub fn solve_fork(a: f64) -> f64 {
    if a <= 0.0 {
        return FRAC_PI_2;
    }
    let f = |w: f64| 2.0 * (a * w).tan() - 1.0 / w.tan();
    bisect(f, f64::MIN_POSITIVE.sqrt(), FRAC_PI_2, 1e-16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_values() {
        assert!((solve_fork(1e-12) - FRAC_PI_2).abs() < 1e-10);
        let w = solve_fork(1.0);
        assert!((w.tan().powi(2) - 0.5).abs() < 1e-14);
        assert!((w - (1.0 / 2f64.sqrt()).atan()).abs() < 1e-15);
    }

    #[test]
    fn stays_below_half_pi_and_decreases() {
        let mut prev = FRAC_PI_2;
        for i in 1..100 {
            let w = solve_fork(i as f64 / 100.0);
            assert!(w < FRAC_PI_2 && w < prev);
            prev = w;
        }
    }
}
