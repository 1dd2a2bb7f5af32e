//! Matérn correlation with smoothness 5/2.

#[allow(unused_imports)]
use num_traits::Float;

/// `c(d; α) = (1 + d/α + d²/(3α²)) e^{−d/α}`.
pub fn matern52(distance: f64, alpha: f64) -> f64 {
    let r = distance / alpha;
    (1.0 + r + r * r / 3.0) * (-r).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_at_zero() {
        for alpha in [0.01, 0.2, 1.0, 50.0] {
            assert_eq!(matern52(0.0, alpha), 1.0);
        }
    }

    #[test]
    fn value_at_alpha() {
        let want = 7.0 / 3.0 * (-1.0f64).exp();
        assert!((matern52(0.3, 0.3) - want).abs() < 1e-15);
    }

    #[test]
    fn strictly_decreasing_and_bounded() {
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let c = matern52(i as f64 * 0.1, 0.2);
            assert!(c < last && c > 0.0 && c <= 1.0);
            if i > 0 {
                assert!(c < 1.0);
            }
            last = c;
        }
    }
}
