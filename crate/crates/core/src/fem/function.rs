use std::sync::Arc;

use crate::error::{AfemError, Result};
use crate::mesh::Point;

use super::assembly::{assemble_a, ReferenceTable};
use super::problem::ProblemDef;
use super::space::Space;
use super::sparse::sub;

/// A finite element function: coefficients with respect to the nodal basis
/// of `space`, Dirichlet DOFs included.
#[derive(Clone, Debug)]
pub struct DiscreteFunction {
    pub space: Arc<Space>,
    pub coeffs: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(space: Arc<Space>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(AfemError::Argument(format!(
                "coefficient vector has length {}, space has {} DOFs",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(DiscreteFunction { space, coeffs })
    }

    pub fn zero(space: Arc<Space>) -> Self {
        let n = space.n_dofs();
        DiscreteFunction { space, coeffs: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(space: Arc<Space>, f: impl Fn(Point) -> f64) -> Self {
        let coeffs = space.dof_coords().iter().map(|&x| f(x)).collect();
        DiscreteFunction { space, coeffs }
    }

    pub fn value_in(&self, e: usize, lambda: [f64; 3]) -> f64 {
        let v = self.space.basis().values(lambda);
        self.space
            .element_dofs(e)
            .iter()
            .zip(v)
            .map(|(&d, phi)| self.coeffs[d] * phi)
            .sum()
    }

    pub fn gradient_in(&self, e: usize, lambda: [f64; 3]) -> [f64; 2] {
        let s = self.space.basis().eval(lambda);
        let geo = self.space.geometry(e);
        let mut g = [0.0; 2];
        for (i, &d) in self.space.element_dofs(e).iter().enumerate() {
            let gi = geo.gradient(&s.dl[i]);
            g[0] += self.coeffs[d] * gi[0];
            g[1] += self.coeffs[d] * gi[1];
        }
        g
    }

    /// Point evaluation (brute-force element search).
    pub fn eval(&self, x: Point) -> Option<f64> {
        self.space.mesh().locate(x).map(|(e, l)| self.value_in(e, l))
    }
}

/// Coefficients of the coarse function, viewed on a refinement.
///
/// `fine_space` must live on the mesh itself or on a direct NVB child of it
/// (one call to `refine`/`uniform_refine`); the result represents the same
/// piecewise polynomial.
pub fn prolongate(coarse: &DiscreteFunction, fine_space: &Arc<Space>) -> Result<DiscreteFunction> {
    let cs = &coarse.space;
    if cs.degree() != fine_space.degree() {
        return Err(AfemError::Argument("prolongation requires equal polynomial degrees".into()));
    }
    let (cm, fm) = (cs.mesh(), fine_space.mesh());
    if cm.id() == fm.id() {
        return DiscreteFunction::new(fine_space.clone(), coarse.coeffs.clone());
    }
    let lineage = fm
        .lineage()
        .filter(|l| l.parent_id == cm.id())
        .ok_or_else(|| AfemError::Argument("fine mesh is not a refinement of the coarse mesh".into()))?;
    let mut coeffs = vec![0.0; fine_space.n_dofs()];
    if cs.degree() == 1 {
        // vertex DOFs: old vertices keep their index, new ones are edge midpoints
        coeffs[..lineage.n_parent_vertices].copy_from_slice(&coarse.coeffs[..lineage.n_parent_vertices]);
        for (i, &[a, b]) in lineage.vertex_parents.iter().enumerate() {
            coeffs[lineage.n_parent_vertices + i] = 0.5 * (coeffs[a] + coeffs[b]);
        }
        return DiscreteFunction::new(fine_space.clone(), coeffs);
    }
    let basis = fine_space.basis();
    for e in 0..fm.n_elements() {
        let parent = lineage.parent[e];
        let geo = fine_space.geometry(e);
        for (i, &d) in fine_space.element_dofs(e).iter().enumerate() {
            let x = geo.point(basis.node_barycentric(i));
            let l = cm.barycentric(parent, x);
            coeffs[d] = coarse.value_in(parent, l);
        }
    }
    DiscreteFunction::new(fine_space.clone(), coeffs)
}

/// `a(v, w)` with the diffusion of `prob`.
pub fn energy_inner(prob: &ProblemDef, v: &DiscreteFunction, w: &DiscreteFunction) -> Result<f64> {
    if !Arc::ptr_eq(&v.space, &w.space) {
        return Err(AfemError::Argument("functions live on different spaces".into()));
    }
    let a = assemble_a(&v.space, prob)?;
    Ok(a.bilinear(&v.coeffs, &w.coeffs))
}

/// `|||v||| = a(v, v)^{1/2}`.
pub fn energy_norm(prob: &ProblemDef, v: &DiscreteFunction) -> Result<f64> {
    Ok(energy_inner(prob, v, v)?.max(0.0).sqrt())
}

/// `|||v - w|||` on a common space.
pub fn energy_distance(prob: &ProblemDef, v: &DiscreteFunction, w: &DiscreteFunction) -> Result<f64> {
    if !Arc::ptr_eq(&v.space, &w.space) {
        return Err(AfemError::Argument("functions live on different spaces".into()));
    }
    let d = DiscreteFunction { space: v.space.clone(), coeffs: sub(&v.coeffs, &w.coeffs) };
    energy_norm(prob, &d)
}

/// Quadrature order for errors against an analytic solution.
pub fn exact_error_order(p: usize) -> usize {
    2 * p + 6
}

/// `|||u - v|||` against the analytic solution of `prob`.
pub fn energy_error_exact(prob: &ProblemDef, v: &DiscreteFunction) -> Result<f64> {
    let exact = prob
        .exact
        .as_ref()
        .ok_or_else(|| AfemError::Argument(format!("problem `{}` has no exact solution", prob.name)))?;
    let space = &v.space;
    let table = ReferenceTable::new(space, exact_error_order(space.degree()));
    let mut total = 0.0;
    for e in 0..space.mesh().n_elements() {
        let geo = space.geometry(e);
        let dofs = space.element_dofs(e);
        for (q, shape) in table.shapes.iter().enumerate() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let x = geo.point(table.lambdas[q]);
            let mut g = (exact.gradient)(x);
            for (i, &d) in dofs.iter().enumerate() {
                let gi = geo.gradient(&shape.dl[i]);
                g[0] -= v.coeffs[d] * gi[0];
                g[1] -= v.coeffs[d] * gi[1];
            }
            let a = prob.diffusion_at(x, geo.centroid);
            total += w
                * (g[0] * (a[0][0] * g[0] + a[0][1] * g[1]) + g[1] * (a[1][0] * g[0] + a[1][1] * g[1]));
        }
    }
    Ok(total.sqrt())
}
