//! Zarantonello symmetrization and the stopping rules of the nested loops.

use crate::error::{AfemError, Result};
use crate::fem::{apply_operator, assemble_a, free_block, DiscreteFunction, ProblemDef};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZarantonelloConfig {
    pub delta: f64,
    pub lambda_sym: f64,
    pub lambda_alg: f64,
}

impl ZarantonelloConfig {
    pub fn new(delta: f64, lambda_sym: f64, lambda_alg: f64) -> Result<Self> {
        if !(delta > 0.0 && lambda_sym > 0.0 && lambda_alg > 0.0) {
            return Err(AfemError::Argument(
                "delta, lambda_sym and lambda_alg must be positive".into(),
            ));
        }
        Ok(ZarantonelloConfig { delta, lambda_sym, lambda_alg })
    }
}

/// Free-DOF right-hand side of the SPD system `a(Phi, v) = a(u, v) + delta [F(v) - <A u, v>]`
/// whose solution is the Zarantonello update `Phi(delta; u)`.
///
/// `load` is the full load vector and `a_ff` the free block of the energy
/// matrix. The Dirichlet values of `Phi` are those of `u`.
pub fn zarantonello_rhs_with(
    prob: &ProblemDef,
    delta: f64,
    u: &DiscreteFunction,
    load: &[f64],
    a_ff: &crate::fem::CsrMatrix,
    operator: Option<&crate::fem::CsrMatrix>,
) -> Result<Vec<f64>> {
    let space = &u.space;
    let au = match operator {
        Some(b) => b.mul_vec(&u.coeffs),
        None => apply_operator(space, prob, &u.coeffs)?,
    };
    let uf = space.restrict_free(&u.coeffs);
    let mut rhs = a_ff.mul_vec(&uf);
    for (k, &i) in space.free_dofs().iter().enumerate() {
        rhs[k] += delta * (load[i] - au[i]);
    }
    Ok(rhs)
}

/// [`zarantonello_rhs_with`] assembling every operator from scratch.
pub fn zarantonello_rhs(prob: &ProblemDef, delta: f64, u: &DiscreteFunction) -> Result<Vec<f64>> {
    let space = &u.space;
    let load = crate::fem::assemble_rhs(space, prob);
    let a_ff = free_block(space, &assemble_a(space, prob)?);
    zarantonello_rhs_with(prob, delta, u, &load, &a_ff, None)
}

/// One exact Zarantonello step `Phi(delta; u)` (direct solve of the SPD system).
pub fn zarantonello_update(prob: &ProblemDef, delta: f64, u: &DiscreteFunction) -> Result<DiscreteFunction> {
    let space = &u.space;
    let a_ff = free_block(space, &assemble_a(space, prob)?);
    let rhs = zarantonello_rhs(prob, delta, u)?;
    let phi = crate::solvers::solve_direct(&a_ff, &rhs)?;
    let mut coeffs = u.coeffs.clone();
    space.scatter_free(&phi, &mut coeffs);
    DiscreteFunction::new(space.clone(), coeffs)
}

/// `q_sym* = [1 - delta (2 alpha - delta L^2)]^{1/2}` for `0 < delta < 2 alpha / L^2`.
pub fn zarantonello_contraction_bound(alpha: f64, lipschitz: f64, delta: f64) -> Result<f64> {
    if !(alpha > 0.0 && lipschitz >= alpha) {
        return Err(AfemError::Argument(format!(
            "need 0 < alpha <= L, got alpha = {alpha}, L = {lipschitz}"
        )));
    }
    let upper = 2.0 * alpha / (lipschitz * lipschitz);
    if !(delta > 0.0 && delta < upper) {
        return Err(AfemError::Argument(format!("delta = {delta} is outside (0, {upper})")));
    }
    Ok((1.0 - delta * (2.0 * alpha - delta * lipschitz * lipschitz)).max(0.0).sqrt())
}

/// Algebraic stopping rule
/// `|||u^{k,j} - u^{k,j-1}||| <= lambda_alg [lambda_sym eta(u^{k,j}) + |||u^{k,j} - u^{k-1,j_}|||]`.
pub fn inner_stop(increment: f64, eta: f64, outer_increment: f64, cfg: &ZarantonelloConfig) -> bool {
    increment <= cfg.lambda_alg * (cfg.lambda_sym * eta + outer_increment)
}

/// Outer stopping rule `|||u^k - u^{k-1}||| <= lambda eta(u^k)`.
pub fn outer_stop(increment: f64, eta: f64, lambda: f64) -> bool {
    increment <= lambda * eta
}

/// Contraction factor `q_sym` of the inexact Zarantonello iteration and
/// whether the sufficient parameter condition holds. Advisory only.
pub fn check_lambda_constraint(
    cfg: &ZarantonelloConfig,
    q_sym_star: f64,
    q_alg: f64,
    q_theta: f64,
    c_stab: f64,
) -> (f64, bool) {
    if cfg.lambda_alg == 0.0 || q_alg == 0.0 {
        return (q_sym_star, q_sym_star < 1.0);
    }
    let factor = 2.0 * q_alg / (1.0 - q_alg) * cfg.lambda_alg;
    let q_sym = (q_sym_star + factor) / (1.0 - factor);
    let first = factor < 1.0 && q_sym < 1.0;
    let bound = (1.0 - q_alg) * (1.0 - q_sym_star) * (1.0 - q_theta) / (8.0 * q_alg * c_stab);
    let second = cfg.lambda_alg * cfg.lambda_sym < bound;
    (q_sym, first && second)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_bound_values() {
        assert_eq!(zarantonello_contraction_bound(1.0, 1.0, 1.0).unwrap(), 0.0);
        let (alpha, l) = (0.9582898017, 1.542343818);
        let q = zarantonello_contraction_bound(alpha, l, 1.0 / l).unwrap();
        assert!((q - 0.870).abs() < 1e-3, "{q}");
        assert!(zarantonello_contraction_bound(1.0, 1.0, 2.0).is_err());
        let small = zarantonello_contraction_bound(1.0, 2.0, 1e-8).unwrap();
        let larger = zarantonello_contraction_bound(1.0, 2.0, 1e-4).unwrap();
        assert!(small < 1.0 && small > larger);
    }

    #[test]
    fn stop_rules() {
        let cfg = ZarantonelloConfig::new(0.5, 0.2, 0.5).unwrap();
        assert!(inner_stop(0.0, 0.0, 0.0, &cfg));
        assert!(!inner_stop(1.0, 0.0, 0.0, &cfg));
        assert!(!inner_stop(0.1, 0.4, 0.1, &cfg));
        assert!(outer_stop(0.0, 0.0, 0.1));
        assert!(!outer_stop(0.1, 0.0, 0.1));
        assert!(outer_stop(0.05, 0.6, 0.1));
    }

    #[test]
    fn lambda_constraint() {
        let mut cfg = ZarantonelloConfig { delta: 1.0, lambda_sym: 5.0, lambda_alg: 0.0 };
        assert_eq!(check_lambda_constraint(&cfg, 0.8, 0.5, 0.5, 1.0), (0.8, true));
        cfg.lambda_alg = 0.05;
        let (q, ok) = check_lambda_constraint(&cfg, 0.8, 0.5, 0.5, 1.0);
        assert!((q - 1.0).abs() < 1e-12 && !ok);
        let (q, _) = check_lambda_constraint(&cfg, 0.5, 0.5, 0.5, 1.0);
        assert!((q - 0.6 / 0.9).abs() < 1e-12);
    }
}
