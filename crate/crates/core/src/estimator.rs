//! Residual error indicators.
//!
//! For an element `T` and a discrete function `v`,
//!
//! ```text
//! eta(T, v)^2 = |T| ||-div(A grad v - f_vec) + b . grad v + c v - f||^2_T
//!             + |T|^{1/2} ||[(A grad v - f_vec) . n]||^2_{dT interior}
//!             + |T|^{1/2} ||(1 - Pi^{p-1}) d u_D / ds||^2_{dT boundary}
//! ```
//!
//! Every interior edge integral is computed once and added to both adjacent
//! elements with their own weights. The last term is the boundary-data
//! oscillation with the L2 projection `Pi^{p-1}` onto edgewise polynomials.

use std::sync::Arc;

use crate::error::{AfemError, Result};
use crate::fem::{
    checked_geometry, linear_order, nonlinear_order, DiscreteFunction, ProblemDef,
    ReferenceTable, Space,
};
use crate::fem::quadrature::LineRule;
use crate::mesh::{Point, NONE};

/// Squared per-element indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicators {
    per_element: Vec<f64>,
    total_squared: f64,
}

impl Indicators {
    pub fn new(per_element: Vec<f64>) -> Result<Self> {
        if let Some(i) = per_element.iter().position(|&x| !(x >= 0.0)) {
            return Err(AfemError::Argument(format!("indicator {i} is negative or NaN")));
        }
        let total_squared = per_element.iter().sum();
        Ok(Indicators { per_element, total_squared })
    }

    pub fn per_element(&self) -> &[f64] {
        &self.per_element
    }

    pub fn len(&self) -> usize {
        self.per_element.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_element.is_empty()
    }

    pub fn total_squared(&self) -> f64 {
        self.total_squared
    }

    /// `eta = (sum of all indicators)^{1/2}`.
    pub fn total(&self) -> f64 {
        self.total_squared.sqrt()
    }
}

/// `(sum_{T in subset} eta(T)^2)^{1/2}`; the whole mesh when `subset` is `None`.
pub fn estimator_total(ind: &Indicators, subset: Option<&[usize]>) -> Result<f64> {
    match subset {
        None => Ok(ind.total()),
        Some(s) => {
            let mut sum = 0.0;
            for &e in s {
                sum += *ind.per_element.get(e).ok_or_else(|| {
                    AfemError::Argument(format!("element {e} out of range ({} elements)", ind.len()))
                })?;
            }
            Ok(sum.sqrt())
        }
    }
}

struct SideData {
    grad: [f64; 2],
    centroid: Point,
}

fn side_gradient(v: &DiscreteFunction, e: usize, x: Point) -> SideData {
    let mesh = v.space.mesh();
    let l = mesh.barycentric(e, x);
    SideData { grad: v.gradient_in(e, l), centroid: mesh.centroid(e) }
}

/// Tangential derivative of the boundary data along `a -> b` at `x`.
fn tangential_derivative(prob: &ProblemDef, x: Point, t: [f64; 2], len: f64) -> f64 {
    let data = prob.dirichlet.as_ref().expect("caller checks for boundary data");
    match &data.gradient {
        Some(g) => {
            let g = g(x);
            g[0] * t[0] + g[1] * t[1]
        }
        None => {
            let h = 1e-6 * len;
            let xp = [x[0] + h * t[0], x[1] + h * t[1]];
            let xm = [x[0] - h * t[0], x[1] - h * t[1]];
            ((data.value)(xp) - (data.value)(xm)) / (2.0 * h)
        }
    }
}

/// `||(1 - Pi^{p-1}) g||^2_{L2(E)}` for `g` sampled on a Gauss rule of `[0, 1]`.
fn projection_defect(g: &[f64], rule: &LineRule, p: usize, len: f64) -> f64 {
    // shifted Legendre polynomials P_k(2t - 1), orthogonal with norm 1/(2k+1)
    let legendre = |k: usize, t: f64| {
        let s = 2.0 * t - 1.0;
        let (mut p0, mut p1) = (1.0, s);
        if k == 0 {
            return p0;
        }
        for n in 1..k {
            let p2 = ((2 * n + 1) as f64 * s * p1 - n as f64 * p0) / (n as f64 + 1.0);
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let mut coef = vec![0.0; p];
    for (k, c) in coef.iter_mut().enumerate() {
        let s: f64 = rule.points.iter().zip(&rule.weights).zip(g).map(|((&t, w), gi)| w * gi * legendre(k, t)).sum();
        *c = (2 * k + 1) as f64 * s;
    }
    let mut sum = 0.0;
    for ((&t, w), gi) in rule.points.iter().zip(&rule.weights).zip(g) {
        let proj: f64 = coef.iter().enumerate().map(|(k, c)| c * legendre(k, t)).sum();
        sum += w * (gi - proj).powi(2);
    }
    sum * len
}

/// Squared residual indicators of `v` on `space`.
pub fn compute_indicators(space: &Arc<Space>, v: &DiscreteFunction, prob: &ProblemDef) -> Result<Indicators> {
    if !Arc::ptr_eq(space, &v.space) || v.coeffs.len() != space.n_dofs() {
        return Err(AfemError::Argument("function does not live on the given space".into()));
    }
    let mesh = space.mesh();
    let p = space.degree();
    let ne = mesh.n_elements();
    let mut eta = vec![0.0; ne];

    let order = if prob.is_linear() { linear_order(p) } else { nonlinear_order(p) };
    let table = ReferenceTable::new(space, order);
    let nl = space.n_local();
    for (e, eta_e) in eta.iter_mut().enumerate() {
        let geo = checked_geometry(space, e)?;
        let dofs = space.element_dofs(e);
        let mut vol = 0.0;
        for (q, shape) in table.shapes.iter().enumerate() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let x = geo.point(table.lambdas[q]);
            let (mut val, mut g, mut h) = (0.0, [0.0; 2], [[0.0; 2]; 2]);
            for i in 0..nl {
                let c = v.coeffs[dofs[i]];
                val += c * shape.value[i];
                let gi = geo.gradient(&shape.dl[i]);
                g[0] += c * gi[0];
                g[1] += c * gi[1];
                if p >= 2 {
                    let hi = geo.hessian(&shape.d2l[i]);
                    for r in 0..2 {
                        for s in 0..2 {
                            h[r][s] += c * hi[r][s];
                        }
                    }
                }
            }
            let div_flux = prob.flux_divergence(g, h, x, geo.centroid);
            let div_fvec = prob.flux_load_divergence.as_ref().map_or(0.0, |d| d(x, geo.centroid));
            let b = prob.convection_at(x, geo.centroid);
            let r = -(div_flux - div_fvec) + b[0] * g[0] + b[1] * g[1]
                + prob.reaction_at(x, geo.centroid) * val
                - prob.load_at(x, geo.centroid);
            vol += w * r * r;
        }
        *eta_e = geo.area * vol;
    }

    let topo = mesh.topology();
    let jump_rule = LineRule::new(p + 2);
    let osc_rule = LineRule::new(p + 4);
    for (g, edge) in topo.edges.iter().enumerate() {
        let [e0, e1] = topo.edge_elements[g];
        let (a, b) = (mesh.vertices()[edge[0]], mesh.vertices()[edge[1]]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        if e1 != NONE {
            let mut normal = [d[1] / len, -d[0] / len];
            let c0 = mesh.centroid(e0);
            if normal[0] * (a[0] - c0[0]) + normal[1] * (a[1] - c0[1]) < 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            let mut jump2 = 0.0;
            for (&t, &w) in jump_rule.points.iter().zip(&jump_rule.weights) {
                let x = [a[0] + t * d[0], a[1] + t * d[1]];
                let mut j = 0.0;
                for (side, sign) in [(e0, 1.0), (e1, -1.0)] {
                    let s = side_gradient(v, side, x);
                    let flux = prob.flux(s.grad, x, s.centroid);
                    let fv = prob.flux_load_at(x, s.centroid);
                    j += sign * ((flux[0] - fv[0]) * normal[0] + (flux[1] - fv[1]) * normal[1]);
                }
                jump2 += w * j * j;
            }
            jump2 *= len;
            eta[e0] += mesh.area(e0).sqrt() * jump2;
            eta[e1] += mesh.area(e1).sqrt() * jump2;
        } else if prob.dirichlet.is_some() {
            let t = [d[0] / len, d[1] / len];
            let samples: Vec<f64> = osc_rule
                .points
                .iter()
                .map(|&s| tangential_derivative(prob, [a[0] + s * d[0], a[1] + s * d[1]], t, len))
                .collect();
            eta[e0] += mesh.area(e0).sqrt() * projection_defect(&samples, &osc_rule, p, len);
        }
    }
    Indicators::new(eta)
}
