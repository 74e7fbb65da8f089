//! Conversions between radial derivatives and derivatives in `t = log(1/r)`.

/// Coefficients `a_j` with `∂_r^k f = e^{k t} Σ_j a_j ∂_t^j f`.
pub fn radial_derivative_coeffs(k: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    for step in 0..k {
        let mut next = vec![0.0; a.len() + 1];
        for (j, c) in a.iter().enumerate() {
            next[j] -= step as f64 * c;
            next[j + 1] -= c;
        }
        a = next;
    }
    a
}

/// Applies the conversion to a list of t-derivatives `d[j] = ∂_t^j f` at `t`.
pub fn radial_derivative(k: usize, t: f64, d: &[f64]) -> f64 {
    let a = radial_derivative_coeffs(k);
    let s: f64 = a.iter().zip(d).map(|(c, v)| c * v).sum();
    (k as f64 * t).exp() * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_function() {
        // f = r^3 = e^{-3t}; f'' = 6r
        let t: f64 = 0.7;
        let d: Vec<f64> = (0..3).map(|j| (-3f64).powi(j) * (-3.0 * t).exp()).collect();
        let r = (-t).exp();
        assert!((radial_derivative(2, t, &d) - 6.0 * r).abs() < 1e-12);
        assert_eq!(radial_derivative_coeffs(1), vec![0.0, -1.0]);
    }
}
