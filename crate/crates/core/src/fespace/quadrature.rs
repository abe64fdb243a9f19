//! Gauss–Legendre rules on `[0, 1]` and symmetric rules on the reference
//! triangle `{(0,0), (1,0), (0,1)}`.

use crate::error::{Error, Result};

/// Highest polynomial degree served by [`quadrature_rule`].
pub const MAX_TRIANGLE_DEGREE: usize = 10;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]` (weights sum to 1).
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 1, "at least one Gauss point");
    let n = points;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
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
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on the reference triangle; weights sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

/// Builder for S3-symmetric rules given as barycentric orbits with weights
/// normalized to sum 1 over the triangle.
struct OrbitRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl OrbitRule {
    fn new() -> Self {
        OrbitRule {
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    fn centroid(mut self, w: f64) -> Self {
        self.points.push([1.0 / 3.0, 1.0 / 3.0]);
        self.weights.push(w);
        self
    }

    /// Orbit of `(1 - 2a, a, a)`.
    fn three(mut self, a: f64, w: f64) -> Self {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a], [b, a], [a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
        self
    }

    /// Orbit of `(a, b, 1 - a - b)`.
    fn six(mut self, a: f64, b: f64, w: f64) -> Self {
        let c = 1.0 - a - b;
        for p in [[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
        self
    }

    fn finish(self, degree: usize) -> QuadratureRule {
        QuadratureRule {
            degree,
            points: self.points,
            weights: self.weights.into_iter().map(|w| 0.5 * w).collect(),
        }
    }
}

/// Symmetric rule exact for polynomials of degree at least `min_degree`.
pub fn quadrature_rule(min_degree: usize) -> Result<QuadratureRule> {
    let rule = match min_degree {
        1 => OrbitRule::new().centroid(1.0).finish(1),
        2 => OrbitRule::new().three(1.0 / 6.0, 1.0 / 3.0).finish(2),
        3 | 4 => OrbitRule::new()
            .three(0.445_948_490_915_965, 0.223_381_589_678_011)
            .three(0.091_576_213_509_771, 0.109_951_743_655_322)
            .finish(4),
        5 => {
            let s = 15f64.sqrt();
            OrbitRule::new()
                .centroid(9.0 / 40.0)
                .three((6.0 - s) / 21.0, (155.0 - s) / 1200.0)
                .three((6.0 + s) / 21.0, (155.0 + s) / 1200.0)
                .finish(5)
        }
        6 => OrbitRule::new()
            .three(0.249_286_745_170_910, 0.116_786_275_726_379)
            .three(0.063_089_014_491_502, 0.050_844_906_370_207)
            .six(0.053_145_049_844_817, 0.310_352_451_033_784, 0.082_851_075_618_374)
            .finish(6),
        7..=MAX_TRIANGLE_DEGREE => symmetrized_collapsed(min_degree),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "no triangle quadrature for degree {min_degree} (supported 1..={MAX_TRIANGLE_DEGREE})"
            )))
        }
    };
    Ok(rule)
}

/// Collapsed tensor Gauss rule averaged over the six vertex permutations.
fn symmetrized_collapsed(degree: usize) -> QuadratureRule {
    let k = (degree + 2).div_ceil(2);
    let (x, wx) = gauss_legendre(k);
    let mut points = Vec::with_capacity(6 * k * k);
    let mut weights = Vec::with_capacity(6 * k * k);
    for (&u, &wu) in x.iter().zip(&wx) {
        for (&v, &wv) in x.iter().zip(&wx) {
            let px = u;
            let py = v * (1.0 - u);
            let w = wu * wv * (1.0 - u) / 6.0;
            let l = [1.0 - px - py, px, py];
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                points.push([l[perm[1]], l[perm[2]]]);
                weights.push(w);
            }
        }
    }
    QuadratureRule {
        degree,
        points,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of x^a y^b over the reference triangle.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for p in 0..(2 * n) as i32 {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact_to_advertised_degree() {
        for d in 1..=MAX_TRIANGLE_DEGREE {
            let rule = quadrature_rule(d).unwrap();
            assert!(rule.degree >= d);
            assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            for a in 0..=rule.degree as u32 {
                for b in 0..=(rule.degree as u32 - a) {
                    let q = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!(
                        (q - monomial_integral(a, b)).abs() < 1e-13,
                        "degree {d}: x^{a} y^{b}: {q} vs {}",
                        monomial_integral(a, b)
                    );
                }
            }
        }
    }

    #[test]
    fn spot_values() {
        let r4 = quadrature_rule(4).unwrap();
        assert!((r4.integrate(|p| p[0] * p[0] * p[1] * p[1]) - 1.0 / 180.0).abs() < 1e-15);
        let r2 = quadrature_rule(2).unwrap();
        assert!((r2.integrate(|p| p[0] * p[1]) - 1.0 / 24.0).abs() < 1e-15);
        assert!((quadrature_rule(1).unwrap().integrate(|_| 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rules_are_symmetric() {
        for d in 1..=MAX_TRIANGLE_DEGREE {
            let rule = quadrature_rule(d).unwrap();
            // Swapping x and y maps the rule onto itself.
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let found = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .any(|(q, v)| (q[0] - p[1]).abs() < 1e-14 && (q[1] - p[0]).abs() < 1e-14 && (v - w).abs() < 1e-14);
                assert!(found, "degree {d}");
            }
        }
    }

    #[test]
    fn unsupported_degrees_rejected() {
        assert!(quadrature_rule(0).is_err());
        assert!(quadrature_rule(11).is_err());
    }
}
