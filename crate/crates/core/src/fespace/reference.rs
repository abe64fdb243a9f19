//! Lagrange P1 and P2 shape functions on the reference triangle.
//!
//! P2 node order: the three vertices, then the midpoints of edges
//! (0,1), (1,2), (2,0).

use super::quadrature::QuadratureRule;

/// Lagrange element of degree 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceElement {
    degree: usize,
}

impl ReferenceElement {
    pub const P1: ReferenceElement = ReferenceElement { degree: 1 };
    pub const P2: ReferenceElement = ReferenceElement { degree: 2 };

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    /// Node positions in barycentric coordinates.
    pub fn node_barycentric(&self) -> Vec<[f64; 3]> {
        let mut nodes = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        if self.degree == 2 {
            nodes.extend([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]);
        }
        nodes
    }

    /// Node positions in reference coordinates.
    pub fn node_coords(&self) -> Vec<[f64; 2]> {
        self.node_barycentric().iter().map(|l| [l[1], l[2]]).collect()
    }

    /// Values and reference gradients of all shape functions at `x`.
    pub fn evaluate(&self, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        if self.degree == 1 {
            let (v, g) = p1_eval(x);
            (v.to_vec(), g.to_vec())
        } else {
            let (v, g) = p2_eval(x);
            (v.to_vec(), g.to_vec())
        }
    }
}

#[inline]
pub fn p1_eval(x: [f64; 2]) -> ([f64; 3], [[f64; 2]; 3]) {
    (
        [1.0 - x[0] - x[1], x[0], x[1]],
        [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
    )
}

#[inline]
pub fn p2_eval(x: [f64; 2]) -> ([f64; 6], [[f64; 2]; 6]) {
    let l0 = 1.0 - x[0] - x[1];
    let (l1, l2) = (x[0], x[1]);
    let values = [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l0 * l1,
        4.0 * l1 * l2,
        4.0 * l2 * l0,
    ];
    let g0 = 1.0 - 4.0 * l0;
    let grads = [
        [g0, g0],
        [4.0 * l1 - 1.0, 0.0],
        [0.0, 4.0 * l2 - 1.0],
        [4.0 * (l0 - l1), -4.0 * l1],
        [4.0 * l2, 4.0 * l1],
        [-4.0 * l2, 4.0 * (l0 - l2)],
    ];
    (values, grads)
}

/// Shape functions tabulated at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub rule: QuadratureRule,
    pub p1: Vec<[f64; 3]>,
    pub p2: Vec<[f64; 6]>,
    pub p2_grad: Vec<[[f64; 2]; 6]>,
}

impl Tabulation {
    pub fn new(rule: QuadratureRule) -> Self {
        let p1 = rule.points.iter().map(|&x| p1_eval(x).0).collect();
        let (p2, p2_grad) = rule.points.iter().map(|&x| p2_eval(x)).unzip();
        Tabulation { rule, p1, p2, p2_grad }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(count: usize) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        (0..count)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                if a + b > 1.0 {
                    [1.0 - a, 1.0 - b]
                } else {
                    [a, b]
                }
            })
            .collect()
    }

    #[test]
    fn partition_of_unity_and_zero_gradient_sum() {
        for el in [ReferenceElement::P1, ReferenceElement::P2] {
            for x in random_points(50) {
                let (v, g) = el.evaluate(x);
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                let gx: f64 = g.iter().map(|d| d[0]).sum();
                let gy: f64 = g.iter().map(|d| d[1]).sum();
                assert!(gx.abs() < 1e-13 && gy.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn kronecker_property() {
        for el in [ReferenceElement::P1, ReferenceElement::P2] {
            for (j, node) in el.node_coords().into_iter().enumerate() {
                let (v, _) = el.evaluate(node);
                for (i, vi) in v.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((vi - expected).abs() < 1e-14, "deg {} phi_{i}(node_{j})", el.degree());
                }
            }
        }
    }

    #[test]
    fn reference_gradients_match_finite_differences() {
        let h = 1e-6;
        for el in [ReferenceElement::P1, ReferenceElement::P2] {
            for x in random_points(20) {
                let (_, g) = el.evaluate(x);
                let (vxp, _) = el.evaluate([x[0] + h, x[1]]);
                let (vxm, _) = el.evaluate([x[0] - h, x[1]]);
                let (vyp, _) = el.evaluate([x[0], x[1] + h]);
                let (vym, _) = el.evaluate([x[0], x[1] - h]);
                for i in 0..el.num_nodes() {
                    assert!((g[i][0] - (vxp[i] - vxm[i]) / (2.0 * h)).abs() < 1e-8);
                    assert!((g[i][1] - (vyp[i] - vym[i]) / (2.0 * h)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let f = |x: [f64; 2]| 1.0 - 2.0 * x[0] + 0.5 * x[1] + 3.0 * x[0] * x[1] - x[0] * x[0] + 2.0 * x[1] * x[1];
        let nodal: Vec<f64> = ReferenceElement::P2.node_coords().into_iter().map(f).collect();
        for x in random_points(30) {
            let (v, _) = p2_eval(x);
            let interp: f64 = v.iter().zip(&nodal).map(|(a, b)| a * b).sum();
            assert!((interp - f(x)).abs() < 1e-13);
        }
    }
}
