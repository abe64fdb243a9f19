//! Analytic exact solutions with closed-form derivatives and forcings.
//!
//! Stokes presets use the stream function `psi = sin^2(pi x) sin^2(pi y) g(t)`,
//! `u = (d_y psi, -d_x psi)` and `p = sin(2 pi x) cos(2 pi y) g(t)`, so that
//! `u` is exactly divergence-free, vanishes on the boundary of the unit
//! square and `p` has zero mean. Heat presets solve `u_t - Laplace u = f`
//! with homogeneous Dirichlet data.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which equation a problem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Stokes,
    Heat,
}

impl FromStr for Equation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stokes" => Ok(Equation::Stokes),
            "heat" => Ok(Equation::Heat),
            other => Err(Error::Config(format!("unknown equation '{other}'"))),
        }
    }
}

/// Scalar time profile `g(t)` with its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TimeProfile {
    /// `g(t) = exp(-rate t)`.
    Exp { rate: f64 },
    /// `g(t) = a + b t`.
    Affine { a: f64, b: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Exp { rate } => (-rate * t).exp(),
            TimeProfile::Affine { a, b } => a + b * t,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Exp { rate } => -rate * (-rate * t).exp(),
            TimeProfile::Affine { b, .. } => b,
        }
    }
}

/// Exact solution family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    /// Stream-function vortex `psi(k x)` with time profile `g`; the integer
    /// wavenumber `k` places extra no-slip lines at multiples of `1/k`.
    StokesVortex {
        profile: TimeProfile,
        #[serde(default = "unit_wavenumber")]
        wavenumber: f64,
    },
    /// `u = sin(pi x) sin(pi y) exp(-decay t)`.
    HeatSeparable { decay: f64 },
    /// `u = sin(pi x) sin(pi y) cos t + x(1-x) y(1-y) (1+t)`.
    HeatGeneric,
}

fn unit_wavenumber() -> f64 {
    1.0
}

/// A manufactured problem: exact fields, forcing and initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManufacturedProblem {
    pub name: &'static str,
    pub family: Family,
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 5] = [
    "stokes_vortex_exp",
    "stokes_vortex_linear",
    "stokes_vortex_lshape",
    "heat_mode",
    "heat_generic",
];

/// Look up a named preset.
pub fn preset(name: &str) -> Result<ManufacturedProblem> {
    match name {
        "stokes_vortex_exp" => Ok(make_stokes_vortex(TimeProfile::Exp { rate: 1.0 }).named("stokes_vortex_exp")),
        "stokes_vortex_linear" => {
            Ok(make_stokes_vortex(TimeProfile::Affine { a: 1.0, b: 1.0 }).named("stokes_vortex_linear"))
        }
        "stokes_vortex_lshape" => {
            Ok(make_stokes_vortex_scaled(TimeProfile::Exp { rate: 1.0 }, 2.0).named("stokes_vortex_lshape"))
        }
        "heat_mode" => Ok(make_heat_separable(1.0).named("heat_mode")),
        "heat_generic" => Ok(ManufacturedProblem {
            name: "heat_generic",
            family: Family::HeatGeneric,
        }),
        other => Err(Error::Config(format!(
            "unknown problem preset '{other}' (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub fn make_stokes_vortex(profile: TimeProfile) -> ManufacturedProblem {
    make_stokes_vortex_scaled(profile, 1.0)
}

/// Vortex with stream function `sin^2(k pi x) sin^2(k pi y) g(t)`; for
/// `k = 2` it also satisfies no-slip on the reentrant edges of the L-shape.
pub fn make_stokes_vortex_scaled(profile: TimeProfile, wavenumber: f64) -> ManufacturedProblem {
    ManufacturedProblem {
        name: "stokes_vortex",
        family: Family::StokesVortex { profile, wavenumber },
    }
}

pub fn make_heat_separable(decay: f64) -> ManufacturedProblem {
    ManufacturedProblem {
        name: "heat_separable",
        family: Family::HeatSeparable { decay },
    }
}

/// Trigonometric building blocks at a point.
struct Trig {
    sx: f64,
    sy: f64,
    s2x: f64,
    s2y: f64,
    c2x: f64,
    c2y: f64,
}

impl Trig {
    fn at(x: [f64; 2]) -> Trig {
        let (ax, ay) = (PI * x[0], PI * x[1]);
        Trig {
            sx: ax.sin(),
            sy: ay.sin(),
            s2x: (2.0 * ax).sin(),
            s2y: (2.0 * ay).sin(),
            c2x: (2.0 * ax).cos(),
            c2y: (2.0 * ay).cos(),
        }
    }
}

fn scaled(k: f64, x: [f64; 2]) -> [f64; 2] {
    [k * x[0], k * x[1]]
}

/// Spatial vortex velocity (without time factor) for wavenumber 1.
fn vortex_u(x: [f64; 2]) -> [f64; 2] {
    let s = Trig::at(x);
    [PI * s.sx * s.sx * s.s2y, -PI * s.s2x * s.sy * s.sy]
}

fn vortex_grad(x: [f64; 2]) -> [[f64; 2]; 2] {
    let s = Trig::at(x);
    let p2 = PI * PI;
    [
        [p2 * s.s2x * s.s2y, 2.0 * p2 * s.sx * s.sx * s.c2y],
        [-2.0 * p2 * s.c2x * s.sy * s.sy, -p2 * s.s2x * s.s2y],
    ]
}

fn vortex_laplacian(x: [f64; 2]) -> [f64; 2] {
    let s = Trig::at(x);
    let p3 = PI * PI * PI;
    [p3 * s.s2y * (4.0 * s.c2x - 2.0), p3 * s.s2x * (2.0 - 4.0 * s.c2y)]
}

fn vortex_p(x: [f64; 2]) -> f64 {
    let s = Trig::at(x);
    s.s2x * s.c2y
}

fn vortex_p_grad(x: [f64; 2]) -> [f64; 2] {
    let s = Trig::at(x);
    [2.0 * PI * s.c2x * s.c2y, -2.0 * PI * s.s2x * s.s2y]
}

fn sine_mode(x: [f64; 2]) -> (f64, [f64; 2]) {
    let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
    let (cx, cy) = ((PI * x[0]).cos(), (PI * x[1]).cos());
    (sx * sy, [PI * cx * sy, PI * sx * cy])
}

fn bubble(x: [f64; 2]) -> (f64, [f64; 2], f64) {
    let (a, b) = (x[0] * (1.0 - x[0]), x[1] * (1.0 - x[1]));
    (a * b, [(1.0 - 2.0 * x[0]) * b, a * (1.0 - 2.0 * x[1])], -2.0 * (a + b))
}

impl ManufacturedProblem {
    fn named(mut self, name: &'static str) -> Self {
        self.name = name;
        self
    }

    pub fn equation(&self) -> Equation {
        match self.family {
            Family::StokesVortex { .. } => Equation::Stokes,
            _ => Equation::Heat,
        }
    }

    /// Velocity (Stokes) or `[u, 0]` (heat).
    pub fn u(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.family {
            Family::StokesVortex { profile, wavenumber: k } => {
                let g = profile.value(t);
                vortex_u(scaled(k, x)).map(|v| k * g * v)
            }
            _ => [self.scalar(t, x), 0.0],
        }
    }

    /// `grad[c][d] = d u_c / d x_d`.
    pub fn grad_u(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        match self.family {
            Family::StokesVortex { profile, wavenumber: k } => {
                let g = profile.value(t);
                vortex_grad(scaled(k, x)).map(|r| r.map(|v| k * k * g * v))
            }
            _ => [self.scalar_grad(t, x), [0.0, 0.0]],
        }
    }

    pub fn dt_u(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.family {
            Family::StokesVortex { profile, wavenumber: k } => {
                let g = profile.derivative(t);
                vortex_u(scaled(k, x)).map(|v| k * g * v)
            }
            _ => [self.scalar_dt(t, x), 0.0],
        }
    }

    pub fn laplacian_u(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.family {
            Family::StokesVortex { profile, wavenumber: k } => {
                let g = profile.value(t);
                vortex_laplacian(scaled(k, x)).map(|v| k * k * k * g * v)
            }
            _ => [self.scalar_laplacian(t, x), 0.0],
        }
    }

    /// Pressure (zero for heat problems).
    pub fn p(&self, t: f64, x: [f64; 2]) -> f64 {
        match self.family {
            Family::StokesVortex { profile, wavenumber: k } => profile.value(t) * vortex_p(scaled(k, x)),
            _ => 0.0,
        }
    }

    pub fn grad_p(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.family {
            Family::StokesVortex { profile, wavenumber: k } => {
                let g = profile.value(t);
                vortex_p_grad(scaled(k, x)).map(|v| k * g * v)
            }
            _ => [0.0, 0.0],
        }
    }

    /// Forcing `f = u_t - Laplace u + grad p` (heat: `[f, 0]`).
    pub fn f(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.family {
            Family::StokesVortex { profile, wavenumber: k } => {
                let (g, dg) = (profile.value(t), profile.derivative(t));
                let y = scaled(k, x);
                let u = vortex_u(y).map(|v| k * v);
                let lap = vortex_laplacian(y).map(|v| k * k * k * v);
                let gp = vortex_p_grad(y).map(|v| k * v);
                [dg * u[0] - g * lap[0] + g * gp[0], dg * u[1] - g * lap[1] + g * gp[1]]
            }
            _ => [self.scalar_f(t, x), 0.0],
        }
    }

    pub fn u0(&self, x: [f64; 2]) -> [f64; 2] {
        self.u(0.0, x)
    }

    pub fn scalar(&self, t: f64, x: [f64; 2]) -> f64 {
        match self.family {
            Family::HeatSeparable { decay } => sine_mode(x).0 * (-decay * t).exp(),
            Family::HeatGeneric => sine_mode(x).0 * t.cos() + bubble(x).0 * (1.0 + t),
            Family::StokesVortex { .. } => self.u(t, x)[0],
        }
    }

    pub fn scalar_grad(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.family {
            Family::HeatSeparable { decay } => sine_mode(x).1.map(|v| v * (-decay * t).exp()),
            Family::HeatGeneric => {
                let (gs, gb) = (sine_mode(x).1, bubble(x).1);
                [gs[0] * t.cos() + gb[0] * (1.0 + t), gs[1] * t.cos() + gb[1] * (1.0 + t)]
            }
            Family::StokesVortex { .. } => self.grad_u(t, x)[0],
        }
    }

    pub fn scalar_dt(&self, t: f64, x: [f64; 2]) -> f64 {
        match self.family {
            Family::HeatSeparable { decay } => -decay * sine_mode(x).0 * (-decay * t).exp(),
            Family::HeatGeneric => -sine_mode(x).0 * t.sin() + bubble(x).0,
            Family::StokesVortex { .. } => self.dt_u(t, x)[0],
        }
    }

    pub fn scalar_laplacian(&self, t: f64, x: [f64; 2]) -> f64 {
        let mode_lap = -2.0 * PI * PI * sine_mode(x).0;
        match self.family {
            Family::HeatSeparable { decay } => mode_lap * (-decay * t).exp(),
            Family::HeatGeneric => mode_lap * t.cos() + bubble(x).2 * (1.0 + t),
            Family::StokesVortex { .. } => self.laplacian_u(t, x)[0],
        }
    }

    /// Heat forcing `u_t - Laplace u`.
    pub fn scalar_f(&self, t: f64, x: [f64; 2]) -> f64 {
        match self.family {
            Family::HeatSeparable { decay } => (2.0 * PI * PI - decay) * self.scalar(t, x),
            Family::HeatGeneric => {
                let s = sine_mode(x).0;
                let (b, _, lap_b) = bubble(x);
                -t.sin() * s + b + 2.0 * PI * PI * t.cos() * s - (1.0 + t) * lap_b
            }
            Family::StokesVortex { .. } => self.f(t, x)[0],
        }
    }

    pub fn scalar_u0(&self, x: [f64; 2]) -> f64 {
        self.scalar(0.0, x)
    }
}

/// Outcome of [`verify_problem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub samples: usize,
    /// Max over samples of `|f - (u_t - Laplace u + grad p)|` with analytic derivatives.
    pub max_analytic_residual: f64,
    /// Same with central differences (time derivative and pressure gradient
    /// from values, Laplacian from the analytic gradient).
    pub max_fd_residual: f64,
    /// Largest `|div u|` (Stokes) from the analytic gradient.
    pub max_divergence: f64,
    /// Largest `|u|` over boundary samples.
    pub max_boundary_value: f64,
    /// `(t, x, y)` of the worst finite-difference residual.
    pub worst_point: [f64; 3],
    pub passed: bool,
}

/// Residual threshold for both checks.
pub const VERIFY_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;

/// Fourth-order central difference `(8 (g(h) - g(-h)) - (g(2h) - g(-2h))) / 12h`.
fn central(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    (8.0 * (g(h) - g(-h)) - (g(2.0 * h) - g(-2.0 * h))) / (12.0 * h)
}

/// Check the defining PDE, divergence and boundary conditions at random
/// space-time points in `(0, 1) x (0, 1)^2`.
pub fn verify_problem(problem: &ManufacturedProblem, samples: usize, seed: u64) -> Diagnostics {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = FD_STEP;
    let mut diag = Diagnostics {
        samples,
        max_analytic_residual: 0.0,
        max_fd_residual: 0.0,
        max_divergence: 0.0,
        max_boundary_value: 0.0,
        worst_point: [0.0; 3],
        passed: true,
    };
    for _ in 0..samples {
        let t: f64 = rng.gen_range(0.0..1.0);
        let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let f = problem.f(t, x);
        let dt = problem.dt_u(t, x);
        let lap = problem.laplacian_u(t, x);
        let gp = problem.grad_p(t, x);
        let analytic = (0..2).map(|c| (f[c] - (dt[c] - lap[c] + gp[c])).abs()).fold(0.0, f64::max);

        let shift = |d: usize, s: f64| {
            let mut y = x;
            y[d] += s;
            y
        };
        let mut fd = 0.0_f64;
        for c in 0..2 {
            let dt_fd = central(|s| problem.u(t + s, x)[c], h);
            let lap_fd: f64 = (0..2).map(|d| central(|s| problem.grad_u(t, shift(d, s))[c][d], h)).sum();
            let gp_fd = central(|s| problem.p(t, shift(c, s)), h);
            fd = fd.max((f[c] - (dt_fd - lap_fd + gp_fd)).abs());
        }
        if fd > diag.max_fd_residual {
            diag.worst_point = [t, x[0], x[1]];
        }
        diag.max_analytic_residual = diag.max_analytic_residual.max(analytic);
        diag.max_fd_residual = diag.max_fd_residual.max(fd);
        if problem.equation() == Equation::Stokes {
            let g = problem.grad_u(t, x);
            diag.max_divergence = diag.max_divergence.max((g[0][0] + g[1][1]).abs());
        }
        let s: f64 = rng.gen_range(0.0..1.0);
        let edge = [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]][rng.gen_range(0..4)];
        let ub = problem.u(t, edge);
        diag.max_boundary_value = diag.max_boundary_value.max(ub[0].abs().max(ub[1].abs()));
    }
    diag.passed = diag.max_analytic_residual <= VERIFY_TOL
        && diag.max_fd_residual <= VERIFY_TOL
        && diag.max_divergence <= 1e-12
        && diag.max_boundary_value <= 1e-12;
    diag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::quadrature_rule;
    use crate::mesh::{build_domain, DomainKind};

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            assert_eq!(preset(name).unwrap().name, name);
        }
        assert!(preset("nope").is_err());
        assert_eq!(preset("heat_mode").unwrap().equation(), Equation::Heat);
    }

    #[test]
    fn vortex_point_value() {
        let p = preset("stokes_vortex_exp").unwrap();
        for t in [0.0, 0.4, 1.0] {
            let u = p.u(t, [0.5, 0.25]);
            assert!((u[0] - PI * (-t).exp()).abs() < 1e-14);
            assert!(u[1].abs() < 1e-14);
        }
    }

    #[test]
    fn all_presets_verify() {
        for name in PRESET_NAMES {
            let d = verify_problem(&preset(name).unwrap(), 100, 1);
            assert!(d.passed, "{name}: {d:?}");
            assert!(d.max_analytic_residual <= 1e-10, "{name}");
            assert!(d.max_fd_residual <= 1e-5, "{name}");
        }
    }

    #[test]
    fn heat_mode_forcing() {
        let pure = make_heat_separable(2.0 * PI * PI);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = [rng.gen(), rng.gen()];
            assert!(pure.scalar_f(rng.gen(), x).abs() <= 1e-12);
        }
        let one = make_heat_separable(1.0);
        let (t, x) = (0.3, [0.2, 0.7]);
        assert!((one.scalar_f(t, x) - (2.0 * PI * PI - 1.0) * one.scalar(t, x)).abs() < 1e-13);
        assert_eq!(one.scalar(0.0, x), one.scalar_u0(x));
    }

    #[test]
    fn vortex_vanishes_on_boundary() {
        let p = preset("stokes_vortex_linear").unwrap();
        for k in 0..10 {
            let s = k as f64 / 9.0;
            for x in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                let u = p.u(0.7, x);
                assert!(u[0].abs() < 1e-13 && u[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pressure_mean_and_velocity_norm() {
        let p = preset("stokes_vortex_linear").unwrap();
        let mesh = build_domain(DomainKind::UnitSquare, 8).unwrap();
        let rule = quadrature_rule(10).unwrap();
        let (mut mean, mut norm) = (0.0, 0.0);
        for t in 0..mesh.num_triangles() {
            let map = crate::fespace::ElementMap::new(mesh.triangle_coords(t));
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let y = map.map(*x);
                mean += w * map.det * p.p(0.0, y);
                let u = p.u(0.0, y);
                norm += w * map.det * (u[0] * u[0] + u[1] * u[1]);
            }
        }
        assert!(mean.abs() < 1e-12);
        assert!((norm - 3.0 * PI * PI / 8.0).abs() < 1e-8);
    }

    #[test]
    fn lshape_vortex_vanishes_on_reentrant_edges() {
        let p = preset("stokes_vortex_lshape").unwrap();
        for k in 0..=20 {
            let s = 0.5 + 0.5 * k as f64 / 20.0;
            for x in [[0.5, s], [s, 0.5]] {
                let u = p.u(0.3, x);
                assert!(u[0].abs() < 1e-13 && u[1].abs() < 1e-13);
            }
        }
        // Zero pressure mean over the three quarter squares of the L-shape.
        let (g, w) = crate::fespace::gauss_legendre(8);
        let mut mean = 0.0;
        for (ox, oy) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)] {
            for (a, wa) in g.iter().zip(&w) {
                for (b, wb) in g.iter().zip(&w) {
                    mean += 0.25 * wa * wb * p.p(0.7, [ox + 0.5 * a, oy + 0.5 * b]);
                }
            }
        }
        assert!(mean.abs() < 1e-13);
    }
}
