//! Element-wise assembly of the bilinear forms, the load functional and the
//! quasi-linear operator.

use crate::error::{AfemError, Result};

use super::lagrange::ShapeValues;
use super::problem::ProblemDef;
use super::quadrature::TriangleRule;
use super::space::{ElementGeometry, Space};
use super::sparse::CsrMatrix;

/// Quadrature order for bilinear and linear forms.
pub fn linear_order(p: usize) -> usize {
    2 * p
}

/// Quadrature order for the nonlinear flux and the energy functional.
pub fn nonlinear_order(p: usize) -> usize {
    2 * p + 4
}

/// Shape data of a space's reference basis at every point of a rule.
pub(crate) struct ReferenceTable {
    pub rule: TriangleRule,
    pub shapes: Vec<ShapeValues>,
    pub lambdas: Vec<[f64; 3]>,
}

impl ReferenceTable {
    pub fn new(space: &Space, order: usize) -> Self {
        let rule = TriangleRule::new(order);
        let lambdas: Vec<[f64; 3]> = rule.barycentric().collect();
        let shapes = lambdas.iter().map(|&l| space.basis().eval(l)).collect();
        ReferenceTable { rule, shapes, lambdas }
    }
}

pub(crate) fn checked_geometry(space: &Space, e: usize) -> Result<ElementGeometry> {
    let g = space.geometry(e);
    if !(g.area > 0.0) {
        return Err(AfemError::Assembly(format!(
            "element {e} has non-positive area {:e}",
            g.area
        )));
    }
    Ok(g)
}

fn assemble_matrix(space: &Space, prob: &ProblemDef, with_lower_order: bool) -> Result<CsrMatrix> {
    let table = ReferenceTable::new(space, linear_order(space.degree()));
    let nl = space.n_local();
    let mut trip = Vec::with_capacity(space.mesh().n_elements() * nl * nl);
    let mut local = vec![0.0; nl * nl];
    let mut grads = vec![[0.0; 2]; nl];
    for e in 0..space.mesh().n_elements() {
        let geo = checked_geometry(space, e)?;
        local.iter_mut().for_each(|x| *x = 0.0);
        for (q, shape) in table.shapes.iter().enumerate() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let x = geo.point(table.lambdas[q]);
            let a = prob.diffusion_at(x, geo.centroid);
            for (g, dl) in grads.iter_mut().zip(&shape.dl) {
                *g = geo.gradient(dl);
            }
            let (b, c) = if with_lower_order {
                (prob.convection_at(x, geo.centroid), prob.reaction_at(x, geo.centroid))
            } else {
                ([0.0; 2], 0.0)
            };
            for i in 0..nl {
                // row i is the test function
                let gi = grads[i];
                let agi = [a[0][0] * gi[0] + a[1][0] * gi[1], a[0][1] * gi[0] + a[1][1] * gi[1]];
                let vi = shape.value[i];
                for j in 0..nl {
                    let gj = grads[j];
                    let mut s = agi[0] * gj[0] + agi[1] * gj[1];
                    if with_lower_order {
                        s += (b[0] * gj[0] + b[1] * gj[1] + c * shape.value[j]) * vi;
                    }
                    local[i * nl + j] += w * s;
                }
            }
        }
        let dofs = space.element_dofs(e);
        for i in 0..nl {
            for j in 0..nl {
                trip.push((dofs[i], dofs[j], local[i * nl + j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs(), space.n_dofs(), &trip))
}

/// Matrix of `a(u, v) = <A grad u, grad v>` on all DOFs (row = test function).
/// Element matrices are symmetrized for symmetric `A`, so the result is
/// exactly symmetric.
pub fn assemble_a(space: &Space, prob: &ProblemDef) -> Result<CsrMatrix> {
    let m = assemble_matrix(space, prob, false)?;
    Ok(symmetrize(m))
}

fn symmetrize(m: CsrMatrix) -> CsrMatrix {
    let t = m.transpose();
    let mut out = m;
    for (v, w) in out.values.iter_mut().zip(&t.values) {
        *v = 0.5 * (*v + *w);
    }
    out
}

/// Matrix of `b(u, v) = a(u, v) + <b . grad u + c u, v>` on all DOFs.
pub fn assemble_b(space: &Space, prob: &ProblemDef) -> Result<CsrMatrix> {
    if !prob.is_linear() {
        return Err(AfemError::UnsupportedForm(
            "the bilinear form b(.,.) is undefined for a quasi-linear problem".into(),
        ));
    }
    if prob.convection.is_none() && prob.reaction.is_none() {
        return assemble_a(space, prob);
    }
    assemble_matrix(space, prob, true)
}

/// Load vector `F(v) = <f, v> + <f_vec, grad v>` on all DOFs.
pub fn assemble_rhs(space: &Space, prob: &ProblemDef) -> Vec<f64> {
    let mut rhs = vec![0.0; space.n_dofs()];
    if prob.load.is_none() && prob.flux_load.is_none() {
        return rhs;
    }
    let table = ReferenceTable::new(space, linear_order(space.degree()));
    for e in 0..space.mesh().n_elements() {
        let geo = space.geometry(e);
        let dofs = space.element_dofs(e);
        for (q, shape) in table.shapes.iter().enumerate() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let x = geo.point(table.lambdas[q]);
            let f = prob.load_at(x, geo.centroid);
            let fv = prob.flux_load_at(x, geo.centroid);
            for (i, &d) in dofs.iter().enumerate() {
                let g = geo.gradient(&shape.dl[i]);
                rhs[d] += w * (f * shape.value[i] + fv[0] * g[0] + fv[1] * g[1]);
            }
        }
    }
    rhs
}

/// `<A(u), v>` for every basis function `v`: the quasi-linear flux plus
/// convection and reaction. For linear problems this equals `B u`.
pub fn apply_operator(space: &Space, prob: &ProblemDef, u: &[f64]) -> Result<Vec<f64>> {
    if prob.is_linear() {
        return Ok(assemble_b(space, prob)?.mul_vec(u));
    }
    let table = ReferenceTable::new(space, nonlinear_order(space.degree()));
    let mut out = vec![0.0; space.n_dofs()];
    let nl = space.n_local();
    let mut grads = vec![[0.0; 2]; nl];
    for e in 0..space.mesh().n_elements() {
        let geo = checked_geometry(space, e)?;
        let dofs = space.element_dofs(e);
        for (q, shape) in table.shapes.iter().enumerate() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let x = geo.point(table.lambdas[q]);
            let mut gu = [0.0; 2];
            let mut uq = 0.0;
            for i in 0..nl {
                grads[i] = geo.gradient(&shape.dl[i]);
                let c = u[dofs[i]];
                gu[0] += c * grads[i][0];
                gu[1] += c * grads[i][1];
                uq += c * shape.value[i];
            }
            let flux = prob.flux(gu, x, geo.centroid);
            let b = prob.convection_at(x, geo.centroid);
            let lower = b[0] * gu[0] + b[1] * gu[1] + prob.reaction_at(x, geo.centroid) * uq;
            for i in 0..nl {
                out[dofs[i]] += w
                    * (flux[0] * grads[i][0] + flux[1] * grads[i][1] + lower * shape.value[i]);
            }
        }
    }
    Ok(out)
}

/// Energy `E(v) = int psi(|grad v|^2)/2 + c v^2/2 - F(v)` of a quasi-linear
/// problem, where `psi` is the antiderivative of `a`. For linear symmetric
/// problems `psi(t) = A`-weighted `t`.
pub fn energy_functional(space: &Space, prob: &ProblemDef, v: &[f64]) -> f64 {
    let table = ReferenceTable::new(space, nonlinear_order(space.degree()));
    let nl = space.n_local();
    let mut total = 0.0;
    for e in 0..space.mesh().n_elements() {
        let geo = space.geometry(e);
        let dofs = space.element_dofs(e);
        for (q, shape) in table.shapes.iter().enumerate() {
            let w = table.rule.weights[q] * 2.0 * geo.area;
            let x = geo.point(table.lambdas[q]);
            let mut g = [0.0; 2];
            let mut vq = 0.0;
            for i in 0..nl {
                let gi = geo.gradient(&shape.dl[i]);
                let c = v[dofs[i]];
                g[0] += c * gi[0];
                g[1] += c * gi[1];
                vq += c * shape.value[i];
            }
            let principal = match &prob.nonlinearity {
                Some(n) => (n.potential)(g[0] * g[0] + g[1] * g[1]),
                None => {
                    let a = prob.diffusion_at(x, geo.centroid);
                    g[0] * (a[0][0] * g[0] + a[0][1] * g[1]) + g[1] * (a[1][0] * g[0] + a[1][1] * g[1])
                }
            };
            let fv = prob.flux_load_at(x, geo.centroid);
            let load = prob.load_at(x, geo.centroid) * vq + fv[0] * g[0] + fv[1] * g[1];
            total += w * (0.5 * principal + 0.5 * prob.reaction_at(x, geo.centroid) * vq * vq - load);
        }
    }
    total
}
