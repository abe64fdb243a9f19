//! Global sparse operators of the Taylor–Hood discretization and load vectors.
//!
//! Velocity unknowns are the free P2 nodes with interleaved components:
//! free node `f` owns indices `2f` (x-component) and `2f + 1` (y-component).
//! Dirichlet nodes are eliminated, which realizes homogeneous boundary values.

use crate::fespace::{default_tabulation, FESpacePair, Tabulation};
use crate::linalg::CsrMatrix;

/// `M`, `K`, `B`, `M_p` and the pressure mean functional.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    /// Velocity mass matrix on free DOFs.
    pub m: CsrMatrix,
    /// Velocity stiffness matrix `(grad u, grad v)` on free DOFs.
    pub k: CsrMatrix,
    /// `n_p x n_u_free` coupling with entries `(q_i, div v_j)`.
    pub b: CsrMatrix,
    /// P1 pressure mass matrix.
    pub m_p: CsrMatrix,
    /// Integrals of the pressure basis functions.
    pub mean_vector: Vec<f64>,
}

/// Scalar P2 mass and stiffness on free DOFs (heat equation).
#[derive(Debug, Clone)]
pub struct ScalarOperators {
    pub m: CsrMatrix,
    pub k: CsrMatrix,
}

/// P2 element mass and stiffness matrices.
fn p2_element_matrices(space: &FESpacePair, tab: &Tabulation, t: usize) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let map = space.element_map(t);
    let mut mass = [[0.0; 6]; 6];
    let mut stiff = [[0.0; 6]; 6];
    for q in 0..tab.rule.len() {
        let w = tab.rule.weights[q] * map.det;
        let phi = &tab.p2[q];
        let grads = tab.p2_grad[q].map(|g| map.grad(g));
        for i in 0..6 {
            for j in 0..6 {
                mass[i][j] += w * phi[i] * phi[j];
                stiff[i][j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
        }
    }
    (mass, stiff)
}

/// Assemble all Stokes operators with the default (degree 6) quadrature.
pub fn assemble_operators(space: &FESpacePair) -> OperatorSet {
    let tab = default_tabulation();
    let (nu, np) = (space.n_u_free(), space.n_p());
    let mut tm = Vec::new();
    let mut tk = Vec::new();
    let mut tb = Vec::new();
    let mut tp = Vec::new();
    let mut mean_vector = vec![0.0; np];

    for t in 0..space.num_elements() {
        let map = space.element_map(t);
        let free = space.element_free(t);
        let verts = space.element_vertices(t);
        let (mass, stiff) = p2_element_matrices(space, &tab, t);
        for i in 0..6 {
            let Some(fi) = free[i] else { continue };
            for j in 0..6 {
                let Some(fj) = free[j] else { continue };
                for c in 0..2 {
                    tm.push((2 * fi + c, 2 * fj + c, mass[i][j]));
                    tk.push((2 * fi + c, 2 * fj + c, stiff[i][j]));
                }
            }
        }

        let mut coupling = [[[0.0; 2]; 6]; 3];
        let mut pmass = [[0.0; 3]; 3];
        let mut pint = [0.0; 3];
        for q in 0..tab.rule.len() {
            let w = tab.rule.weights[q] * map.det;
            let psi = &tab.p1[q];
            let grads = tab.p2_grad[q].map(|g| map.grad(g));
            for a in 0..3 {
                pint[a] += w * psi[a];
                for b in 0..3 {
                    pmass[a][b] += w * psi[a] * psi[b];
                }
                for (j, g) in grads.iter().enumerate() {
                    coupling[a][j][0] += w * psi[a] * g[0];
                    coupling[a][j][1] += w * psi[a] * g[1];
                }
            }
        }
        for a in 0..3 {
            mean_vector[verts[a]] += pint[a];
            for b in 0..3 {
                tp.push((verts[a], verts[b], pmass[a][b]));
            }
            for j in 0..6 {
                let Some(fj) = free[j] else { continue };
                for c in 0..2 {
                    tb.push((verts[a], 2 * fj + c, coupling[a][j][c]));
                }
            }
        }
    }
    OperatorSet {
        m: CsrMatrix::from_triplets(nu, nu, &tm),
        k: CsrMatrix::from_triplets(nu, nu, &tk),
        b: CsrMatrix::from_triplets(np, nu, &tb),
        m_p: CsrMatrix::from_triplets(np, np, &tp),
        mean_vector,
    }
}

/// Assemble scalar P2 mass and stiffness on free DOFs.
pub fn assemble_scalar_operators(space: &FESpacePair) -> ScalarOperators {
    let tab = default_tabulation();
    let n = space.n_scalar_free();
    let mut tm = Vec::new();
    let mut tk = Vec::new();
    for t in 0..space.num_elements() {
        let free = space.element_free(t);
        let (mass, stiff) = p2_element_matrices(space, &tab, t);
        for i in 0..6 {
            let Some(fi) = free[i] else { continue };
            for j in 0..6 {
                let Some(fj) = free[j] else { continue };
                tm.push((fi, fj, mass[i][j]));
                tk.push((fi, fj, stiff[i][j]));
            }
        }
    }
    ScalarOperators {
        m: CsrMatrix::from_triplets(n, n, &tm),
        k: CsrMatrix::from_triplets(n, n, &tk),
    }
}

/// Vector `l_i = int value(x) . phi_i + grad(x) : grad phi_i` over free
/// velocity basis functions, where `integrand(x) = (value, grad)` and
/// `grad[c][d]` pairs with `d phi_c / d x_d`.
pub fn assemble_weak_vector(
    space: &FESpacePair,
    tab: &Tabulation,
    mut integrand: impl FnMut([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
) -> Vec<f64> {
    let mut out = vec![0.0; space.n_u_free()];
    for t in 0..space.num_elements() {
        let map = space.element_map(t);
        let free = space.element_free(t);
        let mut local = [[0.0; 2]; 6];
        for q in 0..tab.rule.len() {
            let w = tab.rule.weights[q] * map.det;
            let (value, grad) = integrand(map.map(tab.rule.points[q]));
            let phi = &tab.p2[q];
            for i in 0..6 {
                let g = map.grad(tab.p2_grad[q][i]);
                for c in 0..2 {
                    local[i][c] += w * (value[c] * phi[i] + grad[c][0] * g[0] + grad[c][1] * g[1]);
                }
            }
        }
        for i in 0..6 {
            if let Some(fi) = free[i] {
                out[2 * fi] += local[i][0];
                out[2 * fi + 1] += local[i][1];
            }
        }
    }
    out
}

/// Scalar analogue of [`assemble_weak_vector`]: `int value phi_i + grad . grad phi_i`.
pub fn assemble_weak_scalar(
    space: &FESpacePair,
    tab: &Tabulation,
    mut integrand: impl FnMut([f64; 2]) -> (f64, [f64; 2]),
) -> Vec<f64> {
    let mut out = vec![0.0; space.n_scalar_free()];
    for t in 0..space.num_elements() {
        let map = space.element_map(t);
        let free = space.element_free(t);
        let mut local = [0.0; 6];
        for q in 0..tab.rule.len() {
            let w = tab.rule.weights[q] * map.det;
            let (value, grad) = integrand(map.map(tab.rule.points[q]));
            for i in 0..6 {
                let g = map.grad(tab.p2_grad[q][i]);
                local[i] += w * (value * tab.p2[q][i] + grad[0] * g[0] + grad[1] * g[1]);
            }
        }
        for i in 0..6 {
            if let Some(fi) = free[i] {
                out[fi] += local[i];
            }
        }
    }
    out
}

/// Pressure moments `int g(x) psi_q` over the P1 basis.
pub fn assemble_pressure_moments(space: &FESpacePair, tab: &Tabulation, mut g: impl FnMut([f64; 2]) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; space.n_p()];
    for t in 0..space.num_elements() {
        let map = space.element_map(t);
        let verts = space.element_vertices(t);
        for q in 0..tab.rule.len() {
            let w = tab.rule.weights[q] * map.det * g(map.map(tab.rule.points[q]));
            for a in 0..3 {
                out[verts[a]] += w * tab.p1[q][a];
            }
        }
    }
    out
}

/// Load vector `int f(t, x) . phi_i` over free velocity DOFs (degree-6 quadrature).
pub fn assemble_load(space: &FESpacePair, f: impl Fn(f64, [f64; 2]) -> [f64; 2], t: f64) -> Vec<f64> {
    assemble_load_with(space, &default_tabulation(), f, t)
}

pub fn assemble_load_with(
    space: &FESpacePair,
    tab: &Tabulation,
    f: impl Fn(f64, [f64; 2]) -> [f64; 2],
    t: f64,
) -> Vec<f64> {
    assemble_weak_vector(space, tab, |x| (f(t, x), [[0.0; 2]; 2]))
}

/// Scalar load vector `int f(t, x) phi_i` over free scalar DOFs.
pub fn assemble_scalar_load(space: &FESpacePair, f: impl Fn(f64, [f64; 2]) -> f64, t: f64) -> Vec<f64> {
    assemble_scalar_load_with(space, &default_tabulation(), f, t)
}

pub fn assemble_scalar_load_with(
    space: &FESpacePair,
    tab: &Tabulation,
    f: impl Fn(f64, [f64; 2]) -> f64,
    t: f64,
) -> Vec<f64> {
    assemble_weak_scalar(space, tab, |x| (f(t, x), [0.0; 2]))
}
