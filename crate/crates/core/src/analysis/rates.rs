use super::sequences::{fit_rlinear, RLinearFit};
use crate::driver::History;
use crate::error::{AfemError, Result};

/// Least-squares slope of the points `(x, y)`.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

pub const DEFAULT_WINDOW: f64 = 0.5;

/// Slope of `log y` against `log x` over the trailing `window` fraction of
/// the points (at least three points are always used).
pub fn fit_rate_loglog(x: &[f64], y: &[f64], window: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(AfemError::Argument("x and y differ in length".into()));
    }
    if x.len() < 3 {
        return Err(AfemError::Argument(format!("need at least 3 points, got {}", x.len())));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(AfemError::Argument(format!("window {window} not in (0, 1]")));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(AfemError::Argument("log-log fit needs positive finite data".into()));
    }
    let take = ((window * x.len() as f64).ceil() as usize).clamp(3, x.len());
    let start = x.len() - take;
    let pts: Vec<(f64, f64)> = x[start..].iter().zip(&y[start..]).map(|(a, b)| (a.ln(), b.ln())).collect();
    Ok(least_squares_slope(&pts))
}

/// Result of comparing rates with respect to degrees of freedom against
/// rates with respect to cumulative cost.
#[derive(Clone, Debug)]
pub struct Complexity {
    /// `sup_r (#T_r)^s H_r`
    pub m_dofs: f64,
    /// `sup_r (sum_{r' <= r} #T_{r'})^s H_r`
    pub m_cost: f64,
    pub ratio: f64,
    /// R-linear fit of the quasi-error sequence.
    pub fit: RLinearFit,
    /// `(C_lin^{1/s} / (1 - q_lin^{1/s}))^{2s}`
    pub c_cost: f64,
    /// `max #T_{r+1} / #T_r`
    pub growth: f64,
    /// `log(1/q_lin) / log(growth)`; infinite when the mesh never grows.
    pub s0: f64,
}

/// Suprema of `(#T)^s H` and `(cost)^s H` along per-step element counts and
/// quasi-errors; cost is the running sum of element counts.
pub fn complexity_from_series(n_elem: &[f64], h: &[f64], s: f64) -> Result<Complexity> {
    let mut cost = Vec::with_capacity(n_elem.len());
    let mut acc = 0.0;
    for &t in n_elem {
        acc += t;
        cost.push(acc);
    }
    complexity_with_cost(n_elem, &cost, h, s)
}

fn complexity_with_cost(n_elem: &[f64], cost: &[f64], h: &[f64], s: f64) -> Result<Complexity> {
    if !(s > 0.0) {
        return Err(AfemError::Argument(format!("rate s = {s} must be positive")));
    }
    if n_elem.is_empty() || n_elem.len() != h.len() || cost.len() != h.len() {
        return Err(AfemError::Argument("need nonempty series of equal length".into()));
    }
    let m_dofs = n_elem.iter().zip(h).map(|(t, x)| t.powf(s) * x).fold(0.0, f64::max);
    let m_cost = cost.iter().zip(h).map(|(t, x)| t.powf(s) * x).fold(0.0, f64::max);
    let ratio = if m_dofs > 0.0 { m_cost / m_dofs } else { 1.0 };
    let fit = if h.len() >= 2 && h.iter().filter(|&&x| x > 0.0).count() >= 2 {
        fit_rlinear(h)?
    } else {
        RLinearFit { c_lin: 1.0, q_lin: 0.0, max_violation: 0.0 }
    };
    let c_cost = (fit.c_lin.powf(1.0 / s) / (1.0 - fit.q_lin.powf(1.0 / s))).powf(2.0 * s);
    let growth = n_elem.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max);
    let s0 = if growth > 1.0 { (1.0 / fit.q_lin).ln() / growth.ln() } else { f64::INFINITY };
    Ok(Complexity { m_dofs, m_cost, ratio, fit, c_cost: if fit.q_lin < 1.0 { c_cost } else { f64::INFINITY }, growth, s0 })
}

/// Rates versus complexity on a run, using the recorded quasi-error
/// surrogate and the recorded cumulative cost of every step.
pub fn rates_equals_complexity(history: &History, s: f64) -> Result<Complexity> {
    let n: Vec<f64> = history.records.iter().map(|r| r.n_elem as f64).collect();
    let cost: Vec<f64> = history.records.iter().map(|r| r.cum_cost as f64).collect();
    let h: Vec<f64> = history.records.iter().map(|r| r.quasi_error).collect();
    complexity_with_cost(&n, &cost, &h, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (1..20).map(|i| (i * i) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powf(-0.5)).collect();
        assert!((fit_rate_loglog(&x, &y, DEFAULT_WINDOW).unwrap() + 0.5).abs() < 1e-12);
        assert!(fit_rate_loglog(&x[..2], &y[..2], 1.0).is_err());
    }

    #[test]
    fn single_record() {
        let c = complexity_from_series(&[7.0], &[0.3], 0.5).unwrap();
        assert_eq!(c.ratio, 1.0);
        assert!(complexity_from_series(&[7.0], &[0.3], 0.0).is_err());
    }
}
