//! One-dimensional quadrature rules for integrals over `(0, τ]`.

use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` via the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Rule used for the σ-integrals of the interpolant terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// Gauss–Legendre with the given number of points on `(0, τ)`.
    GaussLegendre(usize),
    /// Geometric grid `τ 2^{-j}`, `j = 0..m-1`, each point weighted by the
    /// length of the interval it closes from the left (the last one down to 0).
    Geometric(usize),
}

impl SigmaRule {
    /// Nodes in `(0, τ]` (decreasing) with weights summing to `τ`.
    pub fn nodes(&self, tau: f64) -> (Vec<f64>, Vec<f64>) {
        match *self {
            SigmaRule::GaussLegendre(n) => {
                let (x, w) = gauss_legendre(n);
                let mut pts: Vec<(f64, f64)> = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| (0.5 * tau * (xi + 1.0), 0.5 * tau * wi))
                    .collect();
                pts.reverse();
                pts.into_iter().unzip()
            }
            SigmaRule::Geometric(m) => {
                let s: Vec<f64> = (0..m).map(|j| tau * 0.5f64.powi(j as i32)).collect();
                let w = (0..m)
                    .map(|j| if j + 1 < m { s[j] - s[j + 1] } else { s[j] })
                    .collect();
                (s, w)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
        // known node of the 2-point rule
        let (x2, _) = gauss_legendre(2);
        assert!((x2[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sigma_rules_cover_the_interval() {
        for rule in [SigmaRule::GaussLegendre(8), SigmaRule::Geometric(8)] {
            let (s, w) = rule.nodes(0.25);
            assert_eq!(s.len(), 8);
            assert!((w.iter().sum::<f64>() - 0.25).abs() < 1e-15);
            assert!(s.windows(2).all(|p| p[0] > p[1]));
            assert!(s.iter().all(|&x| x > 0.0 && x <= 0.25));
        }
        let (s, _) = SigmaRule::Geometric(3).nodes(1.0);
        assert_eq!(s, vec![1.0, 0.5, 0.25]);
        let (s, w) = SigmaRule::GaussLegendre(8).nodes(2.0);
        let cubic: f64 = s.iter().zip(&w).map(|(x, wi)| wi * x.powi(3)).sum();
        assert!((cubic - 4.0).abs() < 1e-13);
    }
}
