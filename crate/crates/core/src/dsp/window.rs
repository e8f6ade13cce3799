use std::f64::consts::PI;

/// Analysis/synthesis window shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / L)`.
    #[default]
    Hann,
    /// All ones. Only useful for tests and normalisation checks.
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_hann_endpoints() {
        let w = WindowKind::Hann.coefficients(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[2] - 0.5).abs() < 1e-15);
        // periodic, so w[n] == w[L - n]
        assert!((w[1] - w[7]).abs() < 1e-15);
    }

    #[test]
    fn hann_quarter_hop_squared_sum_is_constant() {
        let len = 64;
        let w = WindowKind::Hann.coefficients(len);
        for n in 0..len / 4 {
            let s: f64 = (0..4).map(|j| w[n + j * len / 4].powi(2)).sum();
            assert!((s - 1.5).abs() < 1e-12);
        }
    }
}
