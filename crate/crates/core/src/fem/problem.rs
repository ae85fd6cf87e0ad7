use std::fmt;
use std::sync::Arc;

use crate::mesh::Point;

/// Coefficient callbacks receive the evaluation point and the centroid of the
/// element being integrated, so piecewise data can pick the correct piece on
/// interfaces.
pub type ScalarField = Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point, Point) -> [f64; 2] + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(Point, Point) -> [[f64; 2]; 2] + Send + Sync>;
pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type PointGradFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar nonlinearity `a(t)` of the diffusion `a(|grad u|^2) grad u`.
#[derive(Clone)]
pub struct Nonlinearity {
    pub a: RealFn,
    pub da: RealFn,
    /// `int_0^t a(s) ds`, used by the energy functional.
    pub potential: RealFn,
    /// Strong monotonicity constant.
    pub alpha: f64,
    /// Lipschitz constant.
    pub lipschitz: f64,
}

#[derive(Clone)]
pub struct DirichletData {
    pub value: PointFn,
    /// Gradient of an extension of the data; used for the tangential
    /// derivative in the boundary oscillation. Finite differences are used
    /// when absent.
    pub gradient: Option<PointGradFn>,
}

#[derive(Clone)]
pub struct ExactSolution {
    pub value: PointFn,
    pub gradient: PointGradFn,
}

/// Data of `-div(A grad u - f_vec) + b . grad u + c u = f` with `u = u_D` on the boundary,
/// or of the quasi-linear variant with `A grad u` replaced by `a(|grad u|^2) grad u`.
#[derive(Clone)]
pub struct ProblemDef {
    pub name: String,
    pub diffusion: MatrixField,
    /// Column-wise divergence of `A`, `(div A)_j = sum_i d_i A_ij`; zero when absent.
    pub diffusion_divergence: Option<VectorField>,
    pub convection: Option<VectorField>,
    pub reaction: Option<ScalarField>,
    pub load: Option<ScalarField>,
    pub flux_load: Option<VectorField>,
    /// `div f_vec`; zero when absent.
    pub flux_load_divergence: Option<ScalarField>,
    pub dirichlet: Option<DirichletData>,
    pub nonlinearity: Option<Nonlinearity>,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("name", &self.name)
            .field("convection", &self.convection.is_some())
            .field("reaction", &self.reaction.is_some())
            .field("nonlinear", &self.nonlinearity.is_some())
            .field("inhomogeneous", &self.dirichlet.is_some())
            .finish()
    }
}

pub const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

impl ProblemDef {
    /// `-Laplace u = f` with homogeneous boundary data.
    pub fn poisson(name: &str, load: Option<ScalarField>) -> ProblemDef {
        ProblemDef {
            name: name.to_string(),
            diffusion: Arc::new(|_, _| IDENTITY),
            diffusion_divergence: None,
            convection: None,
            reaction: None,
            load,
            flux_load: None,
            flux_load_divergence: None,
            dirichlet: None,
            nonlinearity: None,
            exact: None,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinearity.is_none()
    }

    /// True when `b(.,.)` coincides with `a(.,.)`.
    pub fn is_symmetric(&self) -> bool {
        self.is_linear() && self.convection.is_none() && self.reaction.is_none()
    }

    pub fn diffusion_at(&self, x: Point, c: Point) -> [[f64; 2]; 2] {
        (self.diffusion)(x, c)
    }

    pub fn convection_at(&self, x: Point, c: Point) -> [f64; 2] {
        self.convection.as_ref().map_or([0.0; 2], |b| b(x, c))
    }

    pub fn reaction_at(&self, x: Point, c: Point) -> f64 {
        self.reaction.as_ref().map_or(0.0, |r| r(x, c))
    }

    pub fn load_at(&self, x: Point, c: Point) -> f64 {
        self.load.as_ref().map_or(0.0, |f| f(x, c))
    }

    pub fn flux_load_at(&self, x: Point, c: Point) -> [f64; 2] {
        self.flux_load.as_ref().map_or([0.0; 2], |f| f(x, c))
    }

    pub fn dirichlet_at(&self, x: Point) -> f64 {
        self.dirichlet.as_ref().map_or(0.0, |d| (d.value)(x))
    }

    /// Flux `A grad v` (or `a(|grad v|^2) grad v`).
    pub fn flux(&self, grad: [f64; 2], x: Point, c: Point) -> [f64; 2] {
        match &self.nonlinearity {
            Some(n) => {
                let s = (n.a)(grad[0] * grad[0] + grad[1] * grad[1]);
                [s * grad[0], s * grad[1]]
            }
            None => {
                let a = self.diffusion_at(x, c);
                [
                    a[0][0] * grad[0] + a[0][1] * grad[1],
                    a[1][0] * grad[0] + a[1][1] * grad[1],
                ]
            }
        }
    }

    /// `div` of the flux for a function with the given gradient and Hessian.
    pub fn flux_divergence(&self, grad: [f64; 2], hess: [[f64; 2]; 2], x: Point, c: Point) -> f64 {
        match &self.nonlinearity {
            Some(n) => {
                // div(a(|g|^2) g) = a tr(H) + 2 a'(|g|^2) g^T H g
                let t = grad[0] * grad[0] + grad[1] * grad[1];
                let ghg = grad[0] * (hess[0][0] * grad[0] + hess[0][1] * grad[1])
                    + grad[1] * (hess[1][0] * grad[0] + hess[1][1] * grad[1]);
                (n.a)(t) * (hess[0][0] + hess[1][1]) + 2.0 * (n.da)(t) * ghg
            }
            None => {
                let a = self.diffusion_at(x, c);
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += a[i][j] * hess[j][i];
                    }
                }
                if let Some(d) = &self.diffusion_divergence {
                    let dv = d(x, c);
                    s += dv[0] * grad[0] + dv[1] * grad[1];
                }
                s
            }
        }
    }
}
