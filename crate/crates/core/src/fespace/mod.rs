//! Taylor–Hood P2–P1 spaces on a triangulation: DOF maps, Dirichlet
//! constraints, nodal interpolation and quadrature-based field evaluation.
//!
//! Scalar P2 nodes are numbered vertices first, then edge midpoints. The
//! velocity uses two interleaved components per scalar node; only nodes off
//! the boundary carry free velocity DOFs. The pressure is P1 on vertices and
//! keeps every vertex DOF; its zero-mean constraint is imposed at solve time.

pub mod quadrature;
pub mod reference;

pub use quadrature::{gauss_legendre, quadrature_rule, QuadratureRule};
pub use reference::{p1_eval, p2_eval, ReferenceElement, Tabulation};

use crate::mesh::{EdgeTable, Mesh};

/// Quadrature degree used for assembly and error integrals.
pub const DEFAULT_QUADRATURE_DEGREE: usize = 6;

const NOT_FREE: usize = usize::MAX;

/// Affine map from the reference triangle onto a mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: [f64; 2],
    /// Columns are the edge vectors `p1 - p0`, `p2 - p0`.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let jacobian = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        ElementMap {
            origin: p[0],
            jacobian,
            det,
        }
    }

    #[inline]
    pub fn map(&self, x: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * x[0] + j[0][1] * x[1],
            self.origin[1] + j[1][0] * x[0] + j[1][1] * x[1],
        ]
    }

    /// Physical gradient from a reference gradient (`J^{-T} g`).
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.jacobian;
        [(d * g[0] - c * g[1]) / self.det, (-b * g[0] + a * g[1]) / self.det]
    }

    /// Reference coordinates of a physical point.
    pub fn inverse(&self, x: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.jacobian;
        let (dx, dy) = (x[0] - self.origin[0], x[1] - self.origin[1]);
        [(d * dx - b * dy) / self.det, (-c * dx + a * dy) / self.det]
    }
}

/// What a coefficient vector discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Vector P2, free DOFs only.
    Velocity,
    /// P1 on vertices.
    Pressure,
    /// Scalar P2, free DOFs only.
    Scalar,
}

/// The Taylor–Hood pair `(X_h, M_h)` together with the scalar P2 space
/// used for the heat equation.
#[derive(Debug, Clone)]
pub struct FESpacePair {
    mesh: Mesh,
    edges: EdgeTable,
    maps: Vec<ElementMap>,
    node_coords: Vec<[f64; 2]>,
    boundary_node: Vec<bool>,
    free_of_node: Vec<usize>,
    node_of_free: Vec<usize>,
}

/// Nodal values of a field at all scalar P2 nodes, including Dirichlet ones.
pub type FullCoefficients = Vec<f64>;

impl FESpacePair {
    /// Build the Taylor–Hood pair on `mesh`.
    pub fn taylor_hood(mesh: &Mesh) -> FESpacePair {
        let edges = mesh.edge_table();
        let nv = mesh.num_vertices();
        let mut node_coords = mesh.vertices.clone();
        node_coords.extend(edges.edges.iter().map(|&[a, b]| {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }));
        let mut boundary_node = vec![false; node_coords.len()];
        for (e, (&[a, b], &mult)) in edges.edges.iter().zip(&edges.multiplicity).enumerate() {
            if mult == 1 {
                boundary_node[a] = true;
                boundary_node[b] = true;
                boundary_node[nv + e] = true;
            }
        }
        let mut free_of_node = vec![NOT_FREE; node_coords.len()];
        let mut node_of_free = Vec::new();
        for (node, &on_boundary) in boundary_node.iter().enumerate() {
            if !on_boundary {
                free_of_node[node] = node_of_free.len();
                node_of_free.push(node);
            }
        }
        let maps = (0..mesh.num_triangles())
            .map(|t| ElementMap::new(mesh.triangle_coords(t)))
            .collect();
        FESpacePair {
            mesh: mesh.clone(),
            edges,
            maps,
            node_coords,
            boundary_node,
            free_of_node,
            node_of_free,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn edges(&self) -> &EdgeTable {
        &self.edges
    }

    pub fn element_map(&self, t: usize) -> &ElementMap {
        &self.maps[t]
    }

    pub fn num_elements(&self) -> usize {
        self.maps.len()
    }

    /// Scalar P2 node count (vertices + edges).
    pub fn n_scalar_total(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_scalar_free(&self) -> usize {
        self.node_of_free.len()
    }

    pub fn n_u_total(&self) -> usize {
        2 * self.n_scalar_total()
    }

    pub fn n_u_free(&self) -> usize {
        2 * self.n_scalar_free()
    }

    pub fn n_p(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn dof_count(&self, kind: FieldKind) -> usize {
        match kind {
            FieldKind::Velocity => self.n_u_free(),
            FieldKind::Pressure => self.n_p(),
            FieldKind::Scalar => self.n_scalar_free(),
        }
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.boundary_node[node]
    }

    /// Free scalar index of a node, if it is not on the boundary.
    pub fn free_index(&self, node: usize) -> Option<usize> {
        let f = self.free_of_node[node];
        (f != NOT_FREE).then_some(f)
    }

    pub fn node_of_free(&self, free: usize) -> usize {
        self.node_of_free[free]
    }

    /// Global scalar P2 node ids of element `t` in reference order.
    #[inline]
    pub fn element_nodes(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.mesh.triangles[t];
        let e = self.edges.triangle_edges[t];
        let nv = self.mesh.num_vertices();
        [a, b, c, nv + e[0], nv + e[1], nv + e[2]]
    }

    /// Element-local free scalar indices (`None` on Dirichlet nodes).
    #[inline]
    pub fn element_free(&self, t: usize) -> [Option<usize>; 6] {
        self.element_nodes(t).map(|n| self.free_index(n))
    }

    #[inline]
    pub fn element_vertices(&self, t: usize) -> [usize; 3] {
        self.mesh.triangles[t]
    }

    /// Nodal interpolant of a scalar field at all P2 nodes.
    pub fn interpolate_scalar(&self, f: impl Fn([f64; 2]) -> f64) -> FullCoefficients {
        self.node_coords.iter().map(|&x| f(x)).collect()
    }

    /// Nodal interpolant of a vector field at all P2 nodes (interleaved
    /// components, Dirichlet values included).
    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> FullCoefficients {
        self.node_coords.iter().flat_map(|&x| f(x)).collect()
    }

    /// P1 interpolant of a scalar field at the vertices.
    pub fn interpolate_pressure(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.mesh.vertices.iter().map(|&x| f(x)).collect()
    }

    /// Free velocity DOFs of a full interleaved vector.
    pub fn restrict_velocity(&self, full: &[f64]) -> Vec<f64> {
        self.node_of_free
            .iter()
            .flat_map(|&n| [full[2 * n], full[2 * n + 1]])
            .collect()
    }

    /// Full velocity vector with zero Dirichlet values.
    pub fn extend_velocity(&self, free: &[f64]) -> FullCoefficients {
        let mut full = vec![0.0; self.n_u_total()];
        for (f, &n) in self.node_of_free.iter().enumerate() {
            full[2 * n] = free[2 * f];
            full[2 * n + 1] = free[2 * f + 1];
        }
        full
    }

    pub fn restrict_scalar(&self, full: &[f64]) -> Vec<f64> {
        self.node_of_free.iter().map(|&n| full[n]).collect()
    }

    pub fn extend_scalar(&self, free: &[f64]) -> FullCoefficients {
        let mut full = vec![0.0; self.n_scalar_total()];
        for (f, &n) in self.node_of_free.iter().enumerate() {
            full[n] = free[f];
        }
        full
    }

    /// Interpolate a vector field and keep its free DOFs.
    pub fn interpolate_velocity_free(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        self.node_of_free.iter().flat_map(|&n| f(self.node_coords[n])).collect()
    }

    pub fn interpolate_scalar_free(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.node_of_free.iter().map(|&n| f(self.node_coords[n])).collect()
    }

    /// Element-local velocity coefficients from a free vector.
    #[inline]
    pub fn gather_velocity(&self, free: &[f64], t: usize) -> [[f64; 2]; 6] {
        self.element_free(t)
            .map(|f| f.map_or([0.0, 0.0], |f| [free[2 * f], free[2 * f + 1]]))
    }

    #[inline]
    pub fn gather_scalar(&self, free: &[f64], t: usize) -> [f64; 6] {
        self.element_free(t).map(|f| f.map_or(0.0, |f| free[f]))
    }

    #[inline]
    pub fn gather_pressure(&self, p: &[f64], t: usize) -> [f64; 3] {
        self.element_vertices(t).map(|v| p[v])
    }

    /// Quadrature of `integrand(x, u, grad u)` for a free velocity vector;
    /// `grad[c][d] = d u_c / d x_d`.
    pub fn integrate_velocity(
        &self,
        free: &[f64],
        tab: &Tabulation,
        mut integrand: impl FnMut([f64; 2], [f64; 2], [[f64; 2]; 2]) -> f64,
    ) -> f64 {
        let mut total = 0.0;
        for t in 0..self.num_elements() {
            let map = &self.maps[t];
            let local = self.gather_velocity(free, t);
            let mut acc = 0.0;
            for q in 0..tab.rule.len() {
                let (value, grad) = eval_vector_local(&local, &tab.p2[q], &tab.p2_grad[q], map);
                acc += tab.rule.weights[q] * integrand(map.map(tab.rule.points[q]), value, grad);
            }
            total += acc * map.det;
        }
        total
    }

    /// Quadrature of `integrand(x, u, grad u)` for a free scalar P2 vector.
    pub fn integrate_scalar(
        &self,
        free: &[f64],
        tab: &Tabulation,
        mut integrand: impl FnMut([f64; 2], f64, [f64; 2]) -> f64,
    ) -> f64 {
        let mut total = 0.0;
        for t in 0..self.num_elements() {
            let map = &self.maps[t];
            let local = self.gather_scalar(free, t);
            let mut acc = 0.0;
            for q in 0..tab.rule.len() {
                let (value, grad) = eval_scalar_local(&local, &tab.p2[q], &tab.p2_grad[q], map);
                acc += tab.rule.weights[q] * integrand(map.map(tab.rule.points[q]), value, grad);
            }
            total += acc * map.det;
        }
        total
    }

    /// Quadrature of `integrand(x, p)` for a P1 pressure vector.
    pub fn integrate_pressure(&self, p: &[f64], tab: &Tabulation, mut integrand: impl FnMut([f64; 2], f64) -> f64) -> f64 {
        let mut total = 0.0;
        for t in 0..self.num_elements() {
            let map = &self.maps[t];
            let local = self.gather_pressure(p, t);
            let mut acc = 0.0;
            for q in 0..tab.rule.len() {
                let value: f64 = local.iter().zip(&tab.p1[q]).map(|(a, b)| a * b).sum();
                acc += tab.rule.weights[q] * integrand(map.map(tab.rule.points[q]), value);
            }
            total += acc * map.det;
        }
        total
    }

    /// Locate the element containing `x` and its reference coordinates.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        const SLACK: f64 = 1e-12;
        self.maps.iter().enumerate().find_map(|(t, map)| {
            let r = map.inverse(x);
            (r[0] >= -SLACK && r[1] >= -SLACK && r[0] + r[1] <= 1.0 + SLACK).then_some((t, r))
        })
    }

    /// Point value of a full interleaved velocity vector.
    pub fn eval_velocity_full(&self, full: &[f64], x: [f64; 2]) -> Option<[f64; 2]> {
        let (t, r) = self.locate(x)?;
        let (phi, _) = p2_eval(r);
        let nodes = self.element_nodes(t);
        let mut u = [0.0; 2];
        for (i, &n) in nodes.iter().enumerate() {
            u[0] += phi[i] * full[2 * n];
            u[1] += phi[i] * full[2 * n + 1];
        }
        Some(u)
    }
}

/// Value and gradient of a vector P2 field on one element at a tabulated point.
#[inline]
pub fn eval_vector_local(
    local: &[[f64; 2]; 6],
    phi: &[f64; 6],
    dphi_ref: &[[f64; 2]; 6],
    map: &ElementMap,
) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut u = [0.0; 2];
    let mut g = [[0.0; 2]; 2];
    for i in 0..6 {
        let d = map.grad(dphi_ref[i]);
        for c in 0..2 {
            u[c] += phi[i] * local[i][c];
            g[c][0] += d[0] * local[i][c];
            g[c][1] += d[1] * local[i][c];
        }
    }
    (u, g)
}

#[inline]
pub fn eval_scalar_local(local: &[f64; 6], phi: &[f64; 6], dphi_ref: &[[f64; 2]; 6], map: &ElementMap) -> (f64, [f64; 2]) {
    let mut u = 0.0;
    let mut g = [0.0; 2];
    for i in 0..6 {
        let d = map.grad(dphi_ref[i]);
        u += phi[i] * local[i];
        g[0] += d[0] * local[i];
        g[1] += d[1] * local[i];
    }
    (u, g)
}

/// Default tabulation used for assembly and error integrals.
pub fn default_tabulation() -> Tabulation {
    Tabulation::new(quadrature_rule(DEFAULT_QUADRATURE_DEGREE).expect("degree 6 is supported"))
}
