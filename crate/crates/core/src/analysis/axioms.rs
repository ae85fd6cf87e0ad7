//! Empirical checks of the axioms of adaptivity on a verification run.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::driver::History;
use crate::error::{AfemError, Result};
use crate::estimator::{compute_indicators, Indicators};
use crate::fem::{assemble_a, energy_error_exact, prolongate, solve_galerkin_exact, sub, DiscreteFunction, ProblemDef, Space};
use crate::marking::{doerfler_mark, Marking};
use crate::mesh::Lineage;

/// Reduction factor of newest-vertex bisection in 2D: `2^{-1/4}`.
pub const Q_RED: f64 = 0.840_896_415_253_714_5;

#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    pub levels: usize,
    /// `eta_h(T_h \ T_H, v_H) / eta_H(T_H \ T_h, v_H)` for every refinement step.
    pub reduction_ratios: Vec<f64>,
    /// Reduction holds with `Q_RED` on every step.
    pub reduction_holds: bool,
    /// `max |eta(v) - eta(w)| / |||v - w|||`.
    pub stability_max: f64,
    /// `max |||u - u*_l||| / eta_l(u*_l)` when the exact solution is known.
    pub reliability_max: Option<f64>,
    /// `max eta_{l+1}(u*_{l+1}) / eta_l(u*_l)`.
    pub quasi_monotonicity_max: f64,
    /// `max_l sum_{l' >= l} |||u*_{l'+1} - u*_{l'}|||^2 / |||u*_ref - u*_l|||^2`,
    /// with a reference solution two adaptive levels beyond the run.
    pub orthogonality_max: f64,
    /// Relative Pythagoras residual for random coarse perturbations
    /// (symmetric problems only).
    pub pythagoras_max_residual: Option<f64>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn energy_sq(a: &crate::fem::CsrMatrix, v: &[f64], w: &[f64]) -> f64 {
    let d = sub(v, w);
    a.bilinear(&d, &d).max(0.0)
}

fn random_free(space: &Space, scale: f64, rng: &mut StdRng) -> Vec<f64> {
    let mut v = vec![0.0; space.n_dofs()];
    for &d in space.free_dofs() {
        v[d] = scale * (2.0 * rng.random::<f64>() - 1.0);
    }
    v
}

fn refine_adaptively(space: &Arc<Space>, u: &DiscreteFunction, prob: &ProblemDef, theta: f64) -> Result<Arc<Space>> {
    let ind = compute_indicators(space, u, prob)?;
    let mesh = match doerfler_mark(&ind, theta)? {
        Marking::Marked(m) => space.mesh().refine(&m)?,
        Marking::Converged => space.mesh().uniform_refine(),
    };
    Ok(Arc::new(Space::new(Arc::new(mesh), space.degree())))
}

/// Reduction on refined elements: returns
/// `eta_h(T_h \ T_H) / eta_H(T_H \ T_h)` for indicators of one function on
/// a mesh and its direct child, and whether it is at most `Q_RED`.
pub fn reduction_check(coarse: &Indicators, fine: &Indicators, lineage: &Lineage) -> Result<(f64, bool)> {
    if coarse.len() != lineage.n_parent_elements || fine.len() != lineage.parent.len() {
        return Err(AfemError::Argument("indicators do not match the refinement".into()));
    }
    let mut children = vec![0usize; coarse.len()];
    for &p in &lineage.parent {
        children[p] += 1;
    }
    let coarse_sq: f64 = (0..children.len()).filter(|&e| children[e] > 1).map(|e| coarse.per_element()[e]).sum();
    let fine_sq: f64 = (0..fine.len())
        .filter(|&e| children[lineage.parent[e]] > 1)
        .map(|e| fine.per_element()[e])
        .sum();
    let holds = fine_sq <= Q_RED * Q_RED * coarse_sq * (1.0 + 1e-10);
    Ok((ratio(fine_sq, coarse_sq).sqrt(), holds))
}

/// Record empirical constants of stability, reduction, reliability,
/// quasi-monotonicity and quasi-orthogonality on the stored levels of a
/// verification run (see `RunConfig::verification`). Only reduction is a
/// hard check; the other quantities are observed ratios.
pub fn verify_axioms(prob: &ProblemDef, hist: &History, theta: f64, seed: u64) -> Result<AxiomReport> {
    let arts = &hist.artifacts;
    let mut report = AxiomReport { levels: arts.len(), reduction_holds: true, ..AxiomReport::default() };
    if arts.is_empty() {
        return Ok(report);
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let exact: Vec<DiscreteFunction> = arts.iter().map(|a| a.exact.clone().unwrap_or_else(|| a.last.clone())).collect();
    let matrices = arts.iter().map(|a| assemble_a(&a.space, prob)).collect::<Result<Vec<_>>>()?;
    let etas = arts
        .iter()
        .zip(&exact)
        .map(|(a, u)| compute_indicators(&a.space, u, prob))
        .collect::<Result<Vec<_>>>()?;

    let mut reliability: Option<f64> = None;
    for (l, art) in arts.iter().enumerate() {
        // A1 on the whole mesh
        let u = &exact[l];
        let scale = 1e-2 * u.coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-3);
        let mut w = u.coeffs.clone();
        for (wi, pi) in w.iter_mut().zip(random_free(&art.space, scale, &mut rng)) {
            *wi += pi;
        }
        let wf = DiscreteFunction::new(art.space.clone(), w)?;
        let eta_w = compute_indicators(&art.space, &wf, prob)?.total();
        let dist = energy_sq(&matrices[l], &u.coeffs, &wf.coeffs).sqrt();
        report.stability_max = report.stability_max.max(ratio((etas[l].total() - eta_w).abs(), dist));

        if prob.exact.is_some() {
            let r = ratio(energy_error_exact(prob, u)?, etas[l].total());
            reliability = Some(reliability.map_or(r, |m: f64| m.max(r)));
        }
        if l > 0 {
            report.quasi_monotonicity_max =
                report.quasi_monotonicity_max.max(ratio(etas[l].total(), etas[l - 1].total()));
        }
    }
    report.reliability_max = reliability;

    let symmetric = prob.is_linear() && prob.is_symmetric();
    let mut pyth: Option<f64> = None;
    for l in 0..arts.len() - 1 {
        let (coarse, fine) = (&arts[l].space, &arts[l + 1].space);
        let lineage = match fine.mesh().lineage() {
            Some(lin) if lin.parent_id == coarse.mesh().id() => lin,
            _ => continue,
        };
        // A2 with the final iterate of the coarse level
        let v = &arts[l].last;
        let eta_c = compute_indicators(coarse, v, prob)?;
        let eta_f = compute_indicators(fine, &prolongate(v, fine)?, prob)?;
        let (r, holds) = reduction_check(&eta_c, &eta_f, lineage)?;
        report.reduction_holds &= holds;
        report.reduction_ratios.push(r);

        // a(u*_h - u*_H, w_H) = 0 for coarse test functions
        if symmetric {
            let w = random_free(coarse, 1.0, &mut rng);
            let mut vc = exact[l].coeffs.clone();
            for (x, y) in vc.iter_mut().zip(&w) {
                *x += y;
            }
            let vh = prolongate(&DiscreteFunction::new(coarse.clone(), vc)?, fine)?;
            let uh = prolongate(&exact[l], fine)?;
            let wf = prolongate(&DiscreteFunction::new(coarse.clone(), w)?, fine)?;
            let a = &matrices[l + 1];
            let lhs = energy_sq(a, &exact[l + 1].coeffs, &vh.coeffs);
            let rhs = energy_sq(a, &exact[l + 1].coeffs, &uh.coeffs) + a.bilinear(&wf.coeffs, &wf.coeffs);
            let res = ratio((lhs - rhs).abs(), lhs);
            pyth = Some(pyth.map_or(res, |m: f64| m.max(res)));
        }
    }
    report.pythagoras_max_residual = pyth;

    // A4 against a reference solution two adaptive levels beyond the run
    let last = arts.len() - 1;
    let mut carried: Vec<DiscreteFunction> = vec![exact[0].clone()];
    let mut increments = vec![0.0; last];
    for l in 0..last {
        let fine = &arts[l + 1].space;
        if fine.mesh().lineage().is_none_or(|lin| lin.parent_id != arts[l].space.mesh().id()) {
            // levels are not nested; quasi-orthogonality is not measurable
            return Ok(report);
        }
        carried = carried.iter().map(|f| prolongate(f, fine)).collect::<Result<_>>()?;
        increments[l] = energy_sq(&matrices[l + 1], &exact[l + 1].coeffs, &carried[l].coeffs);
        carried.push(exact[l + 1].clone());
    }
    let mut space = arts[last].space.clone();
    let mut u_ref = exact[last].clone();
    for _ in 0..2 {
        let next = refine_adaptively(&space, &u_ref, prob, theta)?;
        carried = carried.iter().map(|f| prolongate(f, &next)).collect::<Result<_>>()?;
        u_ref = solve_galerkin_exact(&next, prob)?;
        space = next;
    }
    let a_ref = assemble_a(&space, prob)?;
    let mut tail = 0.0;
    for l in (0..last).rev() {
        tail += increments[l];
        let den = energy_sq(&a_ref, &u_ref.coeffs, &carried[l].coeffs);
        report.orthogonality_max = report.orthogonality_max.max(ratio(tail, den));
    }
    Ok(report)
}
