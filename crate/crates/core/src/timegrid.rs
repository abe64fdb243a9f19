//! Time partitions, the piecewise-polynomial temporal space of degree `w`,
//! traces and jumps, the temporal projections `pi_tau` and `P_tau`, and
//! Gauss quadrature in time.
//!
//! On every interval `I_m = (t_{m-1}, t_m]` functions are expanded in the
//! shifted Legendre polynomials `phi_0 = 1`, `phi_1 = 2s - 1` of the local
//! coordinate `s = (t - t_{m-1}) / tau_m`. Note `phi_j(1) = 1` and
//! `phi_j(0) = (-1)^j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::gauss_legendre;

/// Highest supported temporal degree.
pub const MAX_TIME_DEGREE: usize = 1;

/// Monotone time nodes `0 = t_0 < t_1 < ... < t_M = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePartition {
    nodes: Vec<f64>,
}

/// Checks of the partition assumptions; violations are reported, not fatal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    /// Largest ratio between adjacent step sizes (either direction).
    pub max_adjacent_ratio: f64,
    pub kappa: f64,
    pub kappa_satisfied: bool,
    /// Whether `tau <= T / 4`.
    pub quarter_satisfied: bool,
    /// `tau_min / tau^beta` for the supplied `beta`.
    pub tau_min_over_tau_beta: f64,
}

impl TimePartition {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("a time partition needs at least one interval".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidArgument("time partitions start at t = 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("time nodes must be strictly increasing".into()));
        }
        Ok(TimePartition { nodes })
    }

    /// `M` equal steps on `[0, T]`.
    pub fn uniform(final_time: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidArgument("number of time intervals must be at least 1".into()));
        }
        if !(final_time > 0.0) || !final_time.is_finite() {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {final_time}")));
        }
        let tau = final_time / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|m| m as f64 * tau).collect();
        nodes[intervals] = final_time;
        Ok(TimePartition { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals `M`.
    pub fn num_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Endpoints of interval `i` (0-based, i.e. `I_{i+1}`).
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    /// Step size of interval `i` (0-based).
    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn steps(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `tau = max_m tau_m`.
    pub fn tau(&self) -> f64 {
        self.steps().into_iter().fold(0.0, f64::max)
    }

    pub fn tau_min(&self) -> f64 {
        self.steps().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_adjacent_ratio(&self) -> f64 {
        self.steps()
            .windows(2)
            .map(|w| (w[0] / w[1]).max(w[1] / w[0]))
            .fold(1.0, f64::max)
    }

    /// Evaluate the partition assumptions for mesh ratio bound `kappa` and
    /// the exponent `beta` of `tau_min >= C tau^beta`.
    pub fn check(&self, kappa: f64, beta: f64) -> PartitionReport {
        let ratio = self.max_adjacent_ratio();
        PartitionReport {
            max_adjacent_ratio: ratio,
            kappa,
            kappa_satisfied: ratio <= kappa,
            quarter_satisfied: self.tau() <= self.final_time() / 4.0,
            tau_min_over_tau_beta: self.tau_min() / self.tau().powf(beta),
        }
    }

    /// Index of the interval containing `t` (left-open, right-closed).
    pub fn locate(&self, t: f64) -> usize {
        let m = self.num_intervals();
        match self.nodes[1..].binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i.min(m - 1),
        }
    }
}

/// Shifted Legendre basis of degree `w` on the reference interval `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalBasis {
    degree: usize,
}

impl TemporalBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_TIME_DEGREE {
            return Err(Error::InvalidArgument(format!("temporal degree {degree} not supported (w in {{0, 1}})")));
        }
        Ok(TemporalBasis { degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions `w + 1`.
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `phi_j(s)`.
    #[inline]
    pub fn value(&self, j: usize, s: f64) -> f64 {
        match j {
            0 => 1.0,
            1 => 2.0 * s - 1.0,
            _ => unreachable!("temporal basis index out of range"),
        }
    }

    /// `d phi_j / ds`.
    #[inline]
    pub fn derivative(&self, j: usize, _s: f64) -> f64 {
        match j {
            0 => 0.0,
            1 => 2.0,
            _ => unreachable!("temporal basis index out of range"),
        }
    }

    /// `int_0^1 phi_j^2 ds = 1 / (2j + 1)`.
    #[inline]
    pub fn norm_sq(&self, j: usize) -> f64 {
        1.0 / (2 * j + 1) as f64
    }

    /// `D_ij = int_0^1 phi_j' phi_i ds` (only `D_01 = 2` is nonzero for `w <= 1`).
    pub fn derivative_matrix(&self) -> Vec<Vec<f64>> {
        let r = self.len();
        let mut d = vec![vec![0.0; r]; r];
        if r > 1 {
            d[0][1] = 2.0;
        }
        d
    }
}

/// Per-interval temporal coefficients of a discrete space-time field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeCoefficients {
    pub partition: TimePartition,
    pub basis: TemporalBasis,
    /// `coeffs[i][j]` is the spatial vector multiplying `phi_j` on interval `i`.
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

/// Left trace, right trace and jump at one time node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTraces {
    pub left: Option<Vec<f64>>,
    pub right: Option<Vec<f64>>,
    pub jump: Option<Vec<f64>>,
}

impl SpaceTimeCoefficients {
    pub fn new(partition: TimePartition, basis: TemporalBasis, coeffs: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if coeffs.len() != partition.num_intervals() {
            return Err(Error::Mismatch(format!(
                "{} coefficient blocks for {} intervals",
                coeffs.len(),
                partition.num_intervals()
            )));
        }
        let dim = coeffs.first().and_then(|c| c.first()).map_or(0, Vec::len);
        if coeffs.iter().any(|c| c.len() != basis.len() || c.iter().any(|v| v.len() != dim)) {
            return Err(Error::Mismatch("ragged space-time coefficients".into()));
        }
        Ok(SpaceTimeCoefficients { partition, basis, coeffs })
    }

    pub fn zeros(partition: &TimePartition, basis: TemporalBasis, dim: usize) -> Self {
        let coeffs = vec![vec![vec![0.0; dim]; basis.len()]; partition.num_intervals()];
        SpaceTimeCoefficients {
            partition: partition.clone(),
            basis,
            coeffs,
        }
    }

    /// Spatial dimension of each coefficient vector.
    pub fn dim(&self) -> usize {
        self.coeffs[0][0].len()
    }

    pub fn num_intervals(&self) -> usize {
        self.coeffs.len()
    }

    /// Value on interval `i` at local coordinate `s`.
    pub fn eval_local(&self, i: usize, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (j, c) in self.coeffs[i].iter().enumerate() {
            let phi = self.basis.value(j, s);
            for (o, v) in out.iter_mut().zip(c) {
                *o += phi * v;
            }
        }
        out
    }

    /// Time derivative on interval `i` (constant for `w <= 1`).
    pub fn dt_local(&self, i: usize, s: f64) -> Vec<f64> {
        let tau = self.partition.step(i);
        let mut out = vec![0.0; self.dim()];
        for (j, c) in self.coeffs[i].iter().enumerate() {
            let d = self.basis.derivative(j, s) / tau;
            for (o, v) in out.iter_mut().zip(c) {
                *o += d * v;
            }
        }
        out
    }

    /// Value at time `t` (left-continuous at nodes).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let i = self.partition.locate(t);
        let (a, _) = self.partition.interval(i);
        self.eval_local(i, (t - a) / self.partition.step(i))
    }

    /// `u_m^-` for `m >= 1`.
    pub fn left_trace(&self, m: usize) -> Vec<f64> {
        self.eval_local(m - 1, 1.0)
    }

    /// `u_m^+` for `m < M`.
    pub fn right_trace(&self, m: usize) -> Vec<f64> {
        self.eval_local(m, 0.0)
    }

    /// `[u]_m = u_m^+ - u_m^-` for `1 <= m < M`.
    pub fn jump(&self, m: usize) -> Vec<f64> {
        let (r, l) = (self.right_trace(m), self.left_trace(m));
        r.iter().zip(&l).map(|(a, b)| a - b).collect()
    }
}

/// Traces and jumps at every node `t_0, ..., t_M`: at `t_0` only the right
/// trace, at `t_M` only the left trace.
pub fn traces_and_jumps(c: &SpaceTimeCoefficients) -> Vec<NodeTraces> {
    let m_count = c.num_intervals();
    (0..=m_count)
        .map(|m| {
            let left = (m > 0).then(|| c.left_trace(m));
            let right = (m < m_count).then(|| c.right_trace(m));
            let jump = match (&left, &right) {
                (Some(l), Some(r)) => Some(r.iter().zip(l).map(|(a, b)| a - b).collect()),
                _ => None,
            };
            NodeTraces { left, right, jump }
        })
        .collect()
}

/// Gauss nodes and weights for one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalQuadrature {
    /// Local coordinates in `(0, 1)`.
    pub local: Vec<f64>,
    /// Physical times.
    pub times: Vec<f64>,
    /// Physical weights (sum to `tau_m`).
    pub weights: Vec<f64>,
}

/// Gauss–Legendre rule with `points` nodes on every interval.
pub fn time_quadrature(partition: &TimePartition, points: usize) -> Result<Vec<IntervalQuadrature>> {
    if !(1..=10).contains(&points) {
        return Err(Error::InvalidArgument(format!("time quadrature needs 1..=10 points, got {points}")));
    }
    let (s, w) = gauss_legendre(points);
    Ok((0..partition.num_intervals())
        .map(|i| {
            let (a, _) = partition.interval(i);
            let tau = partition.step(i);
            IntervalQuadrature {
                local: s.clone(),
                times: s.iter().map(|&s| a + tau * s).collect(),
                weights: w.iter().map(|&w| w * tau).collect(),
            }
        })
        .collect())
}

/// Points used to evaluate temporal moments in the projections.
const PROJECTION_POINTS: usize = 8;

fn moments(v: &dyn Fn(f64) -> Vec<f64>, a: f64, tau: f64, basis: &TemporalBasis, upto: usize) -> Vec<Vec<f64>> {
    let (s, w) = gauss_legendre(PROJECTION_POINTS);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(upto);
    for (&sk, &wk) in s.iter().zip(&w) {
        let val = v(a + tau * sk);
        if out.is_empty() {
            out = vec![vec![0.0; val.len()]; upto];
        }
        for (j, o) in out.iter_mut().enumerate() {
            let c = wk * basis.value(j, sk) / basis.norm_sq(j);
            for (oi, vi) in o.iter_mut().zip(&val) {
                *oi += c * vi;
            }
        }
    }
    out
}

/// `pi_tau v`: on each interval matches `v(t_m^-)` and is `L^2(I_m)`-orthogonal
/// to polynomials of degree `<= w - 1` (endpoint condition only for `w = 0`).
pub fn pi_tau(v: &dyn Fn(f64) -> Vec<f64>, partition: &TimePartition, w: usize) -> Result<SpaceTimeCoefficients> {
    let basis = TemporalBasis::new(w)?;
    let coeffs = (0..partition.num_intervals())
        .map(|i| {
            let (a, b) = partition.interval(i);
            let mut c = if w > 0 { moments(v, a, partition.step(i), &basis, w) } else { Vec::new() };
            // phi_j(1) = 1 for every j, so the last coefficient closes the endpoint match.
            let mut last = v(b);
            for cj in &c {
                for (l, x) in last.iter_mut().zip(cj) {
                    *l -= x;
                }
            }
            c.push(last);
            c
        })
        .collect();
    SpaceTimeCoefficients::new(partition.clone(), basis, coeffs)
}

/// Interval-wise `L^2` projection onto polynomials of degree `w`.
pub fn p_tau(v: &dyn Fn(f64) -> Vec<f64>, partition: &TimePartition, w: usize) -> Result<SpaceTimeCoefficients> {
    let basis = TemporalBasis::new(w)?;
    let coeffs = (0..partition.num_intervals())
        .map(|i| {
            let (a, _) = partition.interval(i);
            moments(v, a, partition.step(i), &basis, basis.len())
        })
        .collect();
    SpaceTimeCoefficients::new(partition.clone(), basis, coeffs)
}

/// Ratio `int_0^1 v^2 / int_0^1 s v^2` for the polynomial with Legendre
/// coefficients `coeffs`; the inverse Hölder inequality bounds it by a
/// constant depending only on the degree.
pub fn inverse_holder_ratio(coeffs: &[f64]) -> Result<f64> {
    let basis = TemporalBasis::new(coeffs.len().saturating_sub(1))?;
    let (s, w) = gauss_legendre(4);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&sk, &wk) in s.iter().zip(&w) {
        let v: f64 = coeffs.iter().enumerate().map(|(j, c)| c * basis.value(j, sk)).sum();
        num += wk * v * v;
        den += wk * sk * v * v;
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("zero polynomial".into()));
    }
    Ok(num / den)
}
