//! Benchmark problems: the Kellogg interface problem, a convection-reaction
//! problem on the L-shaped domain and a quasi-linear problem on the Z-shaped
//! domain.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use crate::error::{AfemError, Result};
use crate::fem::{DirichletData, ExactSolution, Nonlinearity, ProblemDef, IDENTITY};
use crate::mesh::{Mesh, Point};

pub const KELLOGG_COEFFICIENT: f64 = 161.4476387975881;
pub const KELLOGG_ALPHA: f64 = 0.1;
pub const KELLOGG_BETA: f64 = -14.92256510455152;
pub const KELLOGG_DELTA: f64 = FRAC_PI_4;

pub const ZSHAPE_ALPHA: f64 = 0.9582898017;
pub const ZSHAPE_LIPSCHITZ: f64 = 1.542343818;

pub const NAMES: [&str; 3] = ["kellogg", "lshape-convection", "zshape-nonlinear"];

/// Look up a benchmark by name.
pub fn by_name(name: &str) -> Result<(ProblemDef, Mesh)> {
    match name {
        "kellogg" => Ok(kellogg()),
        "lshape-convection" => Ok(lshape_convection()),
        "zshape-nonlinear" => Ok(zshape_nonlinear()),
        _ => Err(AfemError::Argument(format!(
            "unknown problem `{name}` (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}

/// Triangulate unit squares given by their lower-left corners, each into four
/// triangles around its centre. Shared corners are merged.
fn criss_cross(corners: &[Point], extra: &[[Point; 3]]) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mut vertices: Vec<Point> = Vec::new();
    let id = |p: Point, vertices: &mut Vec<Point>| -> usize {
        match vertices.iter().position(|q| (q[0] - p[0]).abs() < 1e-14 && (q[1] - p[1]).abs() < 1e-14) {
            Some(i) => i,
            None => {
                vertices.push(p);
                vertices.len() - 1
            }
        }
    };
    let mut triangles = Vec::new();
    for &[x, y] in corners {
        let q = [[x, y], [x + 1.0, y], [x + 1.0, y + 1.0], [x, y + 1.0]];
        let c = id([x + 0.5, y + 0.5], &mut vertices);
        let ids: Vec<usize> = q.iter().map(|&p| id(p, &mut vertices)).collect();
        for k in 0..4 {
            triangles.push([ids[k], ids[(k + 1) % 4], c]);
        }
    }
    for t in extra {
        let ids = [id(t[0], &mut vertices), id(t[1], &mut vertices), id(t[2], &mut vertices)];
        triangles.push(ids);
    }
    (vertices, triangles)
}

fn kellogg_mu(phi: f64) -> f64 {
    let (a, b, d) = (KELLOGG_ALPHA, KELLOGG_BETA, KELLOGG_DELTA);
    if phi < FRAC_PI_2 {
        ((FRAC_PI_2 - b) * a).cos() * ((phi - FRAC_PI_2 + d) * a).cos()
    } else if phi < PI {
        (d * a).cos() * ((phi - PI + b) * a).cos()
    } else if phi < 3.0 * FRAC_PI_2 {
        (b * a).cos() * ((phi - PI - d) * a).cos()
    } else {
        ((FRAC_PI_2 - d) * a).cos() * ((phi - 3.0 * FRAC_PI_2 - b) * a).cos()
    }
}

fn kellogg_dmu(phi: f64) -> f64 {
    let (a, b, d) = (KELLOGG_ALPHA, KELLOGG_BETA, KELLOGG_DELTA);
    if phi < FRAC_PI_2 {
        -a * ((FRAC_PI_2 - b) * a).cos() * ((phi - FRAC_PI_2 + d) * a).sin()
    } else if phi < PI {
        -a * (d * a).cos() * ((phi - PI + b) * a).sin()
    } else if phi < 3.0 * FRAC_PI_2 {
        -a * (b * a).cos() * ((phi - PI - d) * a).sin()
    } else {
        -a * ((FRAC_PI_2 - d) * a).cos() * ((phi - 3.0 * FRAC_PI_2 - b) * a).sin()
    }
}

fn polar(x: Point) -> (f64, f64) {
    let r = x[0].hypot(x[1]);
    let mut phi = x[1].atan2(x[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (r, phi)
}

/// Exact solution `r^alpha mu(phi)` of the Kellogg problem.
pub fn kellogg_solution(x: Point) -> f64 {
    let (r, phi) = polar(x);
    r.powf(KELLOGG_ALPHA) * kellogg_mu(phi)
}

/// Gradient of [`kellogg_solution`]; unbounded at the origin.
pub fn kellogg_gradient(x: Point) -> [f64; 2] {
    let (r, phi) = polar(x);
    if r == 0.0 {
        return [f64::INFINITY, f64::INFINITY];
    }
    let ur = KELLOGG_ALPHA * r.powf(KELLOGG_ALPHA - 1.0) * kellogg_mu(phi);
    let uphi = r.powf(KELLOGG_ALPHA - 1.0) * kellogg_dmu(phi);
    let (c, s) = (phi.cos(), phi.sin());
    [ur * c - uphi * s, ur * s + uphi * c]
}

/// Piecewise-constant Kellogg coefficient, decided by the element centroid.
pub fn kellogg_coefficient(centroid: Point) -> f64 {
    if centroid[0] * centroid[1] > 0.0 {
        KELLOGG_COEFFICIENT
    } else {
        1.0
    }
}

/// `-div(a grad u) = 0` on `(-1,1)^2` with the four-quadrant coefficient and
/// boundary data from the exact solution. The initial mesh has 16 triangles
/// aligned with the interfaces.
pub fn kellogg() -> (ProblemDef, Mesh) {
    let (v, t) = criss_cross(&[[-1.0, -1.0], [0.0, -1.0], [0.0, 0.0], [-1.0, 0.0]], &[]);
    let mesh = Mesh::new(v, t).expect("static mesh is valid");
    let prob = ProblemDef {
        name: "kellogg".into(),
        diffusion: Arc::new(|_, c| {
            let a = kellogg_coefficient(c);
            [[a, 0.0], [0.0, a]]
        }),
        diffusion_divergence: None,
        convection: None,
        reaction: None,
        load: None,
        flux_load: None,
        flux_load_divergence: None,
        dirichlet: Some(DirichletData {
            value: Arc::new(kellogg_solution),
            gradient: Some(Arc::new(kellogg_gradient)),
        }),
        nonlinearity: None,
        exact: Some(ExactSolution {
            value: Arc::new(kellogg_solution),
            gradient: Arc::new(kellogg_gradient),
        }),
    };
    (prob, mesh)
}

/// `-Laplace u + x . grad u + u = 1` on the L-shaped domain
/// `(-1,1)^2 \ [0,1) x (-1,0)` with homogeneous boundary data.
pub fn lshape_convection() -> (ProblemDef, Mesh) {
    let (v, t) = criss_cross(&[[-1.0, -1.0], [-1.0, 0.0], [0.0, 0.0]], &[]);
    let mesh = Mesh::new(v, t).expect("static mesh is valid");
    let prob = ProblemDef {
        name: "lshape-convection".into(),
        diffusion: Arc::new(|_, _| IDENTITY),
        diffusion_divergence: None,
        convection: Some(Arc::new(|x, _| x)),
        reaction: Some(Arc::new(|_, _| 1.0)),
        load: Some(Arc::new(|_, _| 1.0)),
        flux_load: None,
        flux_load_divergence: None,
        dirichlet: None,
        nonlinearity: None,
        exact: None,
    };
    (prob, mesh)
}

/// `a(t) = 1 + log(1 + t) / (1 + t)`.
pub fn zshape_a(t: f64) -> f64 {
    1.0 + (1.0 + t).ln() / (1.0 + t)
}

pub fn zshape_da(t: f64) -> f64 {
    (1.0 - (1.0 + t).ln()) / ((1.0 + t) * (1.0 + t))
}

/// `int_0^t a(s) ds = t + log(1 + t)^2 / 2`.
pub fn zshape_potential(t: f64) -> f64 {
    let l = (1.0 + t).ln();
    t + 0.5 * l * l
}

/// `-div(a(|grad u|^2) grad u) + u = 1` on the Z-shaped domain
/// `(-1,1)^2 \ conv{(-1,0), (0,0), (-1,-1)}` with homogeneous boundary data.
pub fn zshape_nonlinear() -> (ProblemDef, Mesh) {
    let m = [-0.5, -0.5];
    let (v, t) = criss_cross(
        &[[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]],
        &[[[-1.0, -1.0], [0.0, -1.0], m], [[0.0, -1.0], [0.0, 0.0], m]],
    );
    let mesh = Mesh::new(v, t).expect("static mesh is valid");
    let prob = ProblemDef {
        name: "zshape-nonlinear".into(),
        diffusion: Arc::new(|_, _| IDENTITY),
        diffusion_divergence: None,
        convection: None,
        reaction: Some(Arc::new(|_, _| 1.0)),
        load: Some(Arc::new(|_, _| 1.0)),
        flux_load: None,
        flux_load_divergence: None,
        dirichlet: None,
        nonlinearity: Some(Nonlinearity {
            a: Arc::new(zshape_a),
            da: Arc::new(zshape_da),
            potential: Arc::new(zshape_potential),
            alpha: ZSHAPE_ALPHA,
            lipschitz: ZSHAPE_LIPSCHITZ,
        }),
        exact: None,
    };
    (prob, mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_meshes() {
        for (name, n, area) in [("kellogg", 16, 4.0), ("lshape-convection", 12, 3.0), ("zshape-nonlinear", 14, 3.5)] {
            let (_, m) = by_name(name).unwrap();
            assert_eq!(m.n_elements(), n);
            assert!(m.check_conforming());
            assert!((m.total_area() - area).abs() < 1e-14);
        }
        assert!(by_name("nope").is_err());
    }

    #[test]
    fn potential_derivative() {
        for t in [0.0, 0.3, 2.0, 50.0] {
            let h = 1e-6;
            let fd = (zshape_potential(t + h) - zshape_potential((t - h).max(0.0))) / (t + h - (t - h).max(0.0));
            assert!((fd - zshape_a(t)).abs() < 1e-6);
            let fd = (zshape_a(t + h) - zshape_a((t - h).max(0.0))) / (t + h - (t - h).max(0.0));
            assert!((fd - zshape_da(t)).abs() < 1e-5);
        }
    }
}
