//! Structured triangulations of the unit square and the L-shaped domain,
//! red refinement, and mesh-family quality metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polygonal domains the lab knows how to mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `[0,1]^2`.
    UnitSquare,
    /// `[0,1]^2` without the open upper-right quadrant `(0.5,1)^2`.
    LShape,
}

impl DomainKind {
    pub fn area(self) -> f64 {
        match self {
            DomainKind::UnitSquare => 1.0,
            DomainKind::LShape => 0.75,
        }
    }

    pub fn is_convex(self) -> bool {
        matches!(self, DomainKind::UnitSquare)
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::UnitSquare => "unit_square",
            DomainKind::LShape => "l_shape",
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_square" => Ok(DomainKind::UnitSquare),
            "l_shape" => Ok(DomainKind::LShape),
            other => Err(Error::InvalidArgument(format!("unknown domain `{other}`"))),
        }
    }
}

/// A conforming 2D triangulation. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<[usize; 2]>,
    pub domain_kind: DomainKind,
}

/// Size and shape statistics of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshMetrics {
    pub h_max: f64,
    pub h_min: f64,
    /// Max over triangles of diameter / inradius.
    pub shape_regularity: f64,
    /// `h_max / h_min`.
    pub quasi_uniformity: f64,
}

/// Unique undirected edges with triangle-to-edge incidence.
///
/// Local edges of a triangle `[a, b, c]`: 0 = (a,b), 1 = (b,c), 2 = (c,a).
#[derive(Debug, Clone)]
pub struct EdgeTable {
    /// Sorted vertex pairs.
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
    /// Number of triangles sharing each edge (1 on the boundary, 2 inside).
    pub multiplicity: Vec<u8>,
}

pub(crate) const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Build a mesh of the requested domain with `n` subdivisions per unit
/// length (unit square) or per half-length (L-shape).
pub fn build_domain(kind: DomainKind, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("subdivision count must be >= 1".into()));
    }
    let (cells, keep): (usize, Box<dyn Fn(usize, usize) -> bool>) = match kind {
        DomainKind::UnitSquare => (n, Box::new(|_, _| true)),
        // Cell (i, j) lies in the removed quadrant iff both i >= n and j >= n.
        DomainKind::LShape => (2 * n, Box::new(move |i, j| !(i >= n && j >= n))),
    };
    let spacing = 1.0 / cells as f64;
    let stride = cells + 1;
    let mut index = vec![usize::MAX; stride * stride];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();

    let mut vertex = |i: usize, j: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        let slot = &mut index[j * stride + i];
        if *slot == usize::MAX {
            *slot = vertices.len();
            vertices.push([i as f64 * spacing, j as f64 * spacing]);
        }
        *slot
    };

    for j in 0..cells {
        for i in 0..cells {
            if !keep(i, j) {
                continue;
            }
            let v00 = vertex(i, j, &mut vertices);
            let v10 = vertex(i + 1, j, &mut vertices);
            let v01 = vertex(i, j + 1, &mut vertices);
            let v11 = vertex(i + 1, j + 1, &mut vertices);
            // Diagonal along (+1, +1).
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Mesh::from_parts(vertices, triangles, kind)
}

impl Mesh {
    /// Assemble a mesh from vertices and triangles, deriving boundary edges
    /// and validating the result.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        domain_kind: DomainKind,
    ) -> Result<Mesh> {
        let mut mesh = Mesh {
            vertices,
            triangles,
            boundary_edges: Vec::new(),
            domain_kind,
        };
        let table = mesh.edge_table();
        mesh.boundary_edges = table
            .edges
            .iter()
            .zip(&table.multiplicity)
            .filter(|(_, &m)| m == 1)
            .map(|(e, _)| *e)
            .collect();
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_coords(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn edge_table(&self) -> EdgeTable {
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(self.triangles.len() * 2);
        let mut edges = Vec::new();
        let mut multiplicity = Vec::new();
        let mut triangle_edges = Vec::with_capacity(self.triangles.len());
        for tri in &self.triangles {
            let mut local = [0; 3];
            for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let key = edge_key(tri[*a], tri[*b]);
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    multiplicity.push(0u8);
                    edges.len() - 1
                });
                multiplicity[id] = multiplicity[id].saturating_add(1);
                local[k] = id;
            }
            triangle_edges.push(local);
        }
        EdgeTable {
            edges,
            triangle_edges,
            multiplicity,
        }
    }

    /// Check orientation, edge manifoldness and the area identity.
    pub fn validate(&self) -> Result<()> {
        let nv = self.num_vertices();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t} is not positively oriented")));
            }
        }
        let table = self.edge_table();
        if let Some(e) = table.multiplicity.iter().position(|&m| m > 2) {
            return Err(Error::InvalidMesh(format!(
                "edge {:?} is shared by more than two triangles",
                table.edges[e]
            )));
        }
        let area = self.total_area();
        let expected = self.domain_kind.area();
        if ((area - expected) / expected).abs() > 1e-12 {
            return Err(Error::InvalidMesh(format!(
                "total area {area} differs from domain area {expected}"
            )));
        }
        Ok(())
    }

    /// Red refinement: every triangle is split into four congruent children
    /// through its edge midpoints.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let table = self.edge_table();
        let nv = self.num_vertices();
        let mut vertices = self.vertices.clone();
        vertices.extend(table.edges.iter().map(|&[a, b]| {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }));
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (tri, e) in self.triangles.iter().zip(&table.triangle_edges) {
            let [a, b, c] = *tri;
            let (mab, mbc, mca) = (nv + e[0], nv + e[1], nv + e[2]);
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        }
        Mesh::from_parts(vertices, triangles, self.domain_kind)
    }

    pub fn metrics(&self) -> MeshMetrics {
        let mut h_max = 0.0_f64;
        let mut h_min = f64::INFINITY;
        let mut shape = 0.0_f64;
        for t in 0..self.num_triangles() {
            let [p0, p1, p2] = self.triangle_coords(t);
            let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            let (l0, l1, l2) = (len(p0, p1), len(p1, p2), len(p2, p0));
            let diameter = l0.max(l1).max(l2);
            let inradius = self.signed_area(t) / (0.5 * (l0 + l1 + l2));
            h_max = h_max.max(diameter);
            h_min = h_min.min(diameter);
            shape = shape.max(diameter / inradius);
        }
        MeshMetrics {
            h_max,
            h_min,
            shape_regularity: shape,
            quasi_uniformity: h_max / h_min,
        }
    }

    /// Apply a vertex permutation: new index of old vertex `v` is `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Mesh> {
        if perm.len() != self.num_vertices() {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        let mut vertices = vec![[0.0; 2]; perm.len()];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old];
        }
        let triangles = self
            .triangles
            .iter()
            .map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]])
            .collect();
        Mesh::from_parts(vertices, triangles, self.domain_kind)
    }

    /// JSON dump with `vertices` and `triangles` arrays.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            vertices: &'a [[f64; 2]],
            triangles: &'a [[usize; 3]],
        }
        Ok(serde_json::to_string(&Dump {
            vertices: &self.vertices,
            triangles: &self.triangles,
        })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn unit_square_counts() {
        let m = build_domain(DomainKind::UnitSquare, 1).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_triangles(), 2);
        assert!((m.total_area() - 1.0).abs() < 1e-14);

        let m = build_domain(DomainKind::UnitSquare, 2).unwrap();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_triangles(), 8);
    }

    #[test]
    fn l_shape_counts() {
        let m = build_domain(DomainKind::LShape, 1).unwrap();
        assert_eq!(m.num_triangles(), 6);
        assert_eq!(m.num_vertices(), 8);
        assert!((m.total_area() - 0.75).abs() < 1e-14);
        // No vertex strictly inside the removed quadrant.
        assert!(m.vertices.iter().all(|p| !(p[0] > 0.5 && p[1] > 0.5)));
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(build_domain(DomainKind::UnitSquare, 0).is_err());
        assert!(build_domain(DomainKind::LShape, 0).is_err());
    }

    #[test]
    fn refinement_quadruples_and_halves() {
        let m = build_domain(DomainKind::UnitSquare, 1).unwrap();
        assert!((m.metrics().h_max - SQRT2).abs() < 1e-15);
        let r = m.refine_uniform().unwrap();
        assert_eq!(r.num_triangles(), 8);
        assert!((r.metrics().h_max - SQRT2 / 2.0).abs() < 1e-15);
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        assert_eq!(r.domain_kind, DomainKind::UnitSquare);
    }

    #[test]
    fn metrics_of_structured_meshes() {
        let m = build_domain(DomainKind::UnitSquare, 2).unwrap();
        let met = m.metrics();
        assert!((met.h_max - SQRT2 / 2.0).abs() < 1e-15);
        assert_eq!(met.quasi_uniformity, 1.0);
        assert!(met.h_min <= met.h_max);
    }

    #[test]
    fn shape_regularity_of_right_isosceles() {
        // Legs a: diameter a*sqrt2, inradius a/(2+sqrt2) => ratio 2 + 2*sqrt2.
        let expected = 2.0 + 2.0 * SQRT2;
        for n in [1, 3, 8, 17] {
            let s = build_domain(DomainKind::UnitSquare, n).unwrap().metrics().shape_regularity;
            assert!((s - expected).abs() < 1e-12, "n={n}: {s}");
        }
    }

    #[test]
    fn euler_relation_and_edge_multiplicity() {
        for kind in [DomainKind::UnitSquare, DomainKind::LShape] {
            let mut m = build_domain(kind, 2).unwrap();
            for _ in 0..2 {
                let table = m.edge_table();
                let v = m.num_vertices() as i64;
                let e = table.edges.len() as i64;
                let t = m.num_triangles() as i64;
                assert_eq!(v - e + t, 1);
                assert!(table.multiplicity.iter().all(|&k| k == 1 || k == 2));
                assert_eq!(
                    table.multiplicity.iter().filter(|&&k| k == 1).count(),
                    m.boundary_edges.len()
                );
                m = m.refine_uniform().unwrap();
            }
        }
    }

    #[test]
    fn refinement_keeps_shape_and_uniformity() {
        let m = build_domain(DomainKind::LShape, 2).unwrap();
        let r = m.refine_uniform().unwrap();
        let (a, b) = (m.metrics(), r.metrics());
        assert!((a.shape_regularity - b.shape_regularity).abs() < 1e-12);
        assert!((a.quasi_uniformity - b.quasi_uniformity).abs() < 1e-12);
        assert!((r.total_area() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn refined_equals_finer_structured_metrics() {
        let coarse = build_domain(DomainKind::UnitSquare, 4).unwrap().refine_uniform().unwrap();
        let fine = build_domain(DomainKind::UnitSquare, 8).unwrap();
        assert_eq!(coarse.num_triangles(), fine.num_triangles());
        assert!((coarse.metrics().h_max - fine.metrics().h_max).abs() < 1e-15);
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let err = Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![[0, 2, 1], [1, 3, 2]],
            DomainKind::UnitSquare,
        );
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn json_dump_has_arrays() {
        let m = build_domain(DomainKind::UnitSquare, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["vertices"].as_array().unwrap().len(), 4);
        assert_eq!(v["triangles"][0].as_array().unwrap().len(), 3);
    }
}
