//! R-linear convergence of nonnegative sequences: constructive constants from
//! the tail-summability criterion, and the equivalence between tail
//! summability and R-linear convergence.

use rand::{Rng, RngExt};

use crate::error::{AfemError, Result};

/// Constants of `a_{m+n} <= C_lin q_lin^n a_m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RLinearFit {
    pub c_lin: f64,
    pub q_lin: f64,
    /// `max_{m <= n} a_n / (C_lin q_lin^{n-m} a_m)`; at most 1 when the bound holds.
    pub max_violation: f64,
}

impl RLinearFit {
    pub fn holds(&self) -> bool {
        self.max_violation <= 1.0 + 1e-9
    }
}

/// `max_{m <= n} a_n / (q^{n-m} a_m)` in O(N), computed in log space.
/// Returns infinity if a positive entry follows a zero one.
pub fn rlinear_ratio(a: &[f64], q: f64) -> f64 {
    let lq = q.ln();
    let mut best_start = f64::INFINITY; // min over m of (log a_m - m log q)
    let mut worst = f64::NEG_INFINITY;
    let mut seen_zero = false;
    for (n, &x) in a.iter().enumerate() {
        if x <= 0.0 {
            // leading zeros impose nothing
            seen_zero |= best_start < f64::INFINITY;
            continue;
        }
        if seen_zero {
            return f64::INFINITY;
        }
        let v = x.ln() - n as f64 * lq;
        best_start = best_start.min(v);
        worst = worst.max(v - best_start);
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst.exp()
    }
}

/// Verify given constants on a finite sequence.
pub fn verify_rlinear(a: &[f64], c_lin: f64, q_lin: f64) -> RLinearFit {
    RLinearFit { c_lin, q_lin, max_violation: rlinear_ratio(a, q_lin) / c_lin }
}

/// Fit `q_lin` by least squares on `log a_n` versus `n` and take the
/// smallest `C_lin` that makes the bound hold on the data.
pub fn fit_rlinear(a: &[f64]) -> Result<RLinearFit> {
    let pts: Vec<(f64, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, &x)| (i as f64, x.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(AfemError::Argument("need at least two positive entries".into()));
    }
    let slope = super::rates::least_squares_slope(&pts);
    let q_lin = slope.exp();
    let c_lin = rlinear_ratio(a, q_lin).max(1.0);
    Ok(verify_rlinear(a, c_lin, q_lin))
}

/// Constants produced by the constructive proof of the summability criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriterionConstants {
    /// Constants for `a` itself.
    pub fit: RLinearFit,
    /// The proof's constants for `a^2`: `C_3^2 / q_0` and `q_0^{1/n_0}`.
    pub c_lin_squared: f64,
    pub q_lin_squared: f64,
    pub epsilon: f64,
    pub kappa: f64,
    /// First index with `M_n < 0`, or, when that index lies beyond an exact
    /// scan of `EXACT_SCAN` terms, an index where an upper bound of `M_n` is negative.
    pub n0: f64,
    pub q0: f64,
    pub c3: f64,
}

/// Number of terms of `M_n` evaluated exactly before switching to a bound.
pub const EXACT_SCAN: usize = 1_000_000;

/// `n0` is the first index with `M_{n0} <= log(1/2)`, so that `q0 <= 1/2`.
const TARGET: f64 = -std::f64::consts::LN_2;

fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + 1e-12) + 1e-300
}

/// Check `a_{l+1} <= q a_l + b_l`, `b_{l+N} <= C1 a_l` and
/// `sum_{l'=l}^{l+N} b_{l'}^2 <= C2 (N+1)^{1-delta} a_l^2` on all available indices.
pub fn check_criterion(a: &[f64], b: &[f64], q: f64, c1: f64, c2: f64, delta: f64) -> Result<()> {
    if a.len() != b.len() {
        return Err(AfemError::Argument("sequences must have equal length".into()));
    }
    if !(q > 0.0 && q < 1.0 && c1 > 0.0 && c2 > 0.0 && delta > 0.0 && delta <= 1.0) {
        return Err(AfemError::Argument("need 0 < q < 1, 0 < delta <= 1 and C1, C2 > 0".into()));
    }
    if let Some(i) = a.iter().chain(b).position(|&x| !(x >= 0.0)) {
        return Err(AfemError::Argument(format!("entry {i} is negative or NaN")));
    }
    let n = a.len();
    for l in 0..n.saturating_sub(1) {
        if !le(a[l + 1], q * a[l] + b[l]) {
            return Err(AfemError::Hypothesis(format!(
                "perturbed contraction a[{}] <= q a[{l}] + b[{l}] fails ({} > {})",
                l + 1,
                a[l + 1],
                q * a[l] + b[l]
            )));
        }
    }
    // suffix maxima of b for the uniform bound
    let mut bmax = vec![0.0f64; n + 1];
    for l in (0..n).rev() {
        bmax[l] = bmax[l + 1].max(b[l]);
    }
    for l in 0..n {
        if !le(bmax[l], c1 * a[l]) {
            let at = (l..n).find(|&m| !le(b[m], c1 * a[l])).unwrap_or(l);
            return Err(AfemError::Hypothesis(format!(
                "b[{at}] <= C1 a[{l}] fails ({} > {})",
                b[at],
                c1 * a[l]
            )));
        }
    }
    for l in 0..n {
        let mut sum = 0.0;
        for nn in 0..n - l {
            sum += b[l + nn] * b[l + nn];
            let bound = c2 * ((nn + 1) as f64).powf(1.0 - delta) * a[l] * a[l];
            if !le(sum, bound) {
                return Err(AfemError::Hypothesis(format!(
                    "sum of b^2 over [{l}, {}] <= C2 (N+1)^(1-delta) a[{l}]^2 fails ({sum} > {bound})",
                    l + nn
                )));
            }
        }
    }
    Ok(())
}

/// Constructive R-linear constants from the summability criterion.
///
/// After validating the hypotheses, `eps` is the largest of `1/2, 1/4, ...`
/// with `kappa = (1 + eps) q^2 < 1`,
/// `D_N = 1 + (kappa + (1 + 1/eps) C2 N^{1-delta}) / (1 - kappa)`,
/// `M_n = sum_{j<=n} log(1 - 1/D_j) + log D_n`, `n0` is the first index with
/// `M_{n0} < 0` (see [`CriterionConstants::n0`]), `q0 = exp(M_{n0})` and `C3 = 1 + C1 / (1 - q)`. The bound
/// `a_{l+n}^2 <= (C3^2/q0) (q0^{1/n0})^n a_l^2` gives `C_lin = C3 / sqrt(q0)`
/// and `q_lin = q0^{1/(2 n0)}` for `a`.
pub fn rlinear_constants_from_criterion(
    a: &[f64],
    b: &[f64],
    q: f64,
    c1: f64,
    c2: f64,
    delta: f64,
) -> Result<CriterionConstants> {
    check_criterion(a, b, q, c1, c2, delta)?;
    let mut epsilon = 0.5;
    while (1.0 + epsilon) * q * q >= 1.0 {
        epsilon *= 0.5;
    }
    let kappa = (1.0 + epsilon) * q * q;
    let a_const = 1.0 + kappa / (1.0 - kappa);
    let b_const = (1.0 + 1.0 / epsilon) * c2 / (1.0 - kappa);
    let d = |n: f64| a_const + b_const * n.powf(1.0 - delta);
    let mut sum_log = 0.0;
    let mut found = None;
    for n in 1..=EXACT_SCAN {
        let dn = d(n as f64);
        sum_log += (-1.0 / dn).ln_1p();
        let m = sum_log + dn.ln();
        if m <= TARGET {
            found = Some((n as f64, m));
            break;
        }
    }
    // Beyond the scan use log(1 - x) <= -x and
    // sum_{j<=n} 1/D_j >= ((n + 1)^delta - 1) / (delta (A + B)), which bound M_n from above.
    let upper = |n: f64| -((n + 1.0).powf(delta) - 1.0) / (delta * (a_const + b_const)) + d(n).ln();
    if found.is_none() {
        let mut n = EXACT_SCAN as f64;
        while upper(n) > TARGET {
            n *= 2.0;
            if n > 1e300 {
                return Err(AfemError::Hypothesis("no index with M_n < 0 is representable".into()));
            }
        }
        let (mut lo, mut hi) = (n / 2.0, n);
        while hi - lo > 1.0_f64.max(1e-12 * hi) {
            let mid = (0.5 * (lo + hi)).floor();
            if upper(mid) <= TARGET {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        found = Some((hi, upper(hi)));
    }
    let (n0, m) = found.expect("set above");
    let q0 = m.exp();
    let c3 = 1.0 + c1 / (1.0 - q);
    let c_lin = c3 / q0.sqrt();
    let q_lin = (m / (2.0 * n0)).exp();
    if !(q_lin < 1.0) {
        return Err(AfemError::Argument(format!(
            "constructive q_lin = exp(M/(2 n0)) with n0 = {n0:e} rounds to 1 in double precision"
        )));
    }
    Ok(CriterionConstants {
        fit: verify_rlinear(a, c_lin, q_lin),
        c_lin_squared: c3 * c3 / q0,
        q_lin_squared: (m / n0).exp(),
        epsilon,
        kappa,
        n0,
        q0,
        c3,
    })
}

/// `C_m = max_l (sum_{l' > l} a_{l'}^m) / a_l^m` over indices with `a_l > 0`.
/// Tails are truncated at the end of the data.
pub fn tail_sum_constant(a: &[f64], m: f64) -> f64 {
    let pow: Vec<f64> = a.iter().map(|x| x.powf(m)).collect();
    let mut tail = 0.0;
    let mut best: f64 = 0.0;
    for l in (0..pow.len()).rev() {
        if pow[l] > 0.0 {
            best = best.max(tail / pow[l]);
        }
        tail += pow[l];
    }
    best
}

/// Tail summability implies R-linear convergence: for `a^m` the constants are
/// `1 + C_m` and `C_m / (1 + C_m)`; the returned fit is for `a` itself.
pub fn rlinear_from_tailsum(a: &[f64], m: f64) -> Result<(f64, RLinearFit)> {
    if !(m > 0.0) {
        return Err(AfemError::Argument("m must be positive".into()));
    }
    let c = tail_sum_constant(a, m);
    let c_lin = (1.0 + c).powf(1.0 / m);
    let q_lin = if c == 0.0 { 0.0 } else { (c / (1.0 + c)).powf(1.0 / m) };
    let fit = if q_lin == 0.0 {
        // finite support of length one: only a_0 may be positive
        let bad = a.iter().skip(1).any(|&x| x > 0.0);
        RLinearFit { c_lin, q_lin, max_violation: if bad { f64::INFINITY } else { 1.0 / c_lin } }
    } else {
        verify_rlinear(a, c_lin, q_lin)
    };
    Ok((c, fit))
}

/// R-linear convergence implies tail summability of `a^m` with
/// `C_m = C^m q^m / (1 - q^m)`. Returns the bound and the largest observed
/// ratio of (truncated) tail sums to it.
pub fn tailsum_from_rlinear(a: &[f64], c_lin: f64, q_lin: f64, m: f64) -> Result<(f64, f64)> {
    if !(q_lin > 0.0 && q_lin < 1.0 && c_lin > 0.0 && m > 0.0) {
        return Err(AfemError::Argument("need C_lin > 0, 0 < q_lin < 1 and m > 0".into()));
    }
    let qm = q_lin.powf(m);
    let bound = c_lin.powf(m) * qm / (1.0 - qm);
    let observed = tail_sum_constant(a, m);
    Ok((bound, observed / bound))
}

/// A pair `(a, b)` with constants satisfying the summability hypotheses.
#[derive(Clone, Debug)]
pub struct CriterionInstance {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
}

/// Random instance: `a_{l+1} = q a_l + b_l` with `b_l = beta_l a_l` for
/// random `beta_l`, and the smallest `C1`, `C2` valid on the data (inflated by
/// `1e-9` relative).
pub fn random_criterion_instance<R: Rng>(rng: &mut R) -> CriterionInstance {
    let n = rng.random_range(20..120);
    let q = rng.random_range(0.05..0.95);
    let delta = rng.random_range(0.3..=1.0);
    let beta_max = rng.random_range(0.0..(1.0 - q) * 1.5);
    let mut a = vec![rng.random_range(0.1..10.0)];
    let mut b = Vec::with_capacity(n);
    for l in 0..n {
        let bl = rng.random::<f64>() * beta_max * a[l];
        b.push(bl);
        if l + 1 < n {
            a.push(q * a[l] + bl);
        }
    }
    let (mut c1, mut c2) = (1e-12f64, 1e-12f64);
    for l in 0..n {
        let mut sum = 0.0;
        for k in l..n {
            c1 = c1.max(b[k] / a[l]);
            sum += b[k] * b[k];
            c2 = c2.max(sum / (((k - l + 1) as f64).powf(1.0 - delta) * a[l] * a[l]));
        }
    }
    CriterionInstance { a, b, q, c1: c1 * (1.0 + 1e-9), c2: c2 * (1.0 + 1e-9), delta }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_geometric_sequence() {
        let a: Vec<f64> = (0..50).map(|i| 0.5f64.powi(i)).collect();
        assert!((rlinear_ratio(&a, 0.5) - 1.0).abs() < 1e-12);
        assert!(rlinear_ratio(&a, 0.4) > 1e3);
        let fit = fit_rlinear(&a).unwrap();
        assert!((fit.q_lin - 0.5).abs() < 1e-12 && fit.holds());
    }

    #[test]
    fn zeros() {
        assert_eq!(rlinear_ratio(&[1.0, 0.0, 0.0], 0.5), 1.0);
        assert_eq!(rlinear_ratio(&[1.0, 0.0, 1.0], 0.5), f64::INFINITY);
    }

    #[test]
    fn criterion_rejects_increasing() {
        let a = [1.0, 2.0, 3.0];
        let err = rlinear_constants_from_criterion(&a, &[0.0; 3], 0.5, 1.0, 1.0, 0.5).unwrap_err();
        assert!(err.to_string().contains("a[1]"), "{err}");
    }
}
