/// Sufficient parameter thresholds for optimal complexity. The stability and
/// discrete reliability constants are not computable in general, so these
/// values are advisory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// `(1 + C_stab^2 C_drel^2)^{-1}`
    pub theta_star: f64,
    /// `min{1, (1 - q_alg) / (q_alg C_stab)}`
    pub lambda_star: f64,
    /// `(2 q_alg / (1 - q_alg) lambda_alg* + q_sym*) / (1 - q_sym*)`
    pub c_alg: f64,
    /// `min{1, 1 / (C_stab C_alg)}`
    pub lambda_sym_star: f64,
}

pub fn threshold_helpers(q_alg: f64, c_stab: f64, c_drel: f64, q_sym_star: f64, lambda_alg_star: f64) -> Thresholds {
    let theta_star = 1.0 / (1.0 + c_stab * c_stab * c_drel * c_drel);
    let lambda_star = ((1.0 - q_alg) / q_alg / c_stab).min(1.0);
    let c_alg = (2.0 * q_alg / (1.0 - q_alg) * lambda_alg_star + q_sym_star) / (1.0 - q_sym_star);
    let lambda_sym_star = (1.0 / (c_stab * c_alg)).min(1.0);
    Thresholds { theta_star, lambda_star, c_alg, lambda_sym_star }
}
