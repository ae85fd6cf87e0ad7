//! Dörfler marking with minimal cardinality.

use crate::error::{AfemError, Result};
use crate::estimator::Indicators;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Marking {
    /// Marked element indices in order of decreasing indicator.
    Marked(Vec<usize>),
    /// The estimator vanishes; there is nothing to refine.
    Converged,
}

impl Marking {
    pub fn elements(&self) -> &[usize] {
        match self {
            Marking::Marked(m) => m,
            Marking::Converged => &[],
        }
    }
}

/// Smallest set `M` with `theta * sum_T eta(T)^2 <= sum_{T in M} eta(T)^2`.
///
/// Indicators are taken in decreasing order, ties by lower element index.
pub fn doerfler_mark(ind: &Indicators, theta: f64) -> Result<Marking> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(AfemError::Argument(format!("theta = {theta} is outside (0, 1]")));
    }
    let eta = ind.per_element();
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    // Sum in the same order as the prefix so that theta = 1 is attainable
    // without rounding trouble.
    let total: f64 = order.iter().map(|&i| eta[i]).sum();
    if total == 0.0 {
        return Ok(Marking::Converged);
    }
    let goal = theta * total;
    let mut marked = Vec::new();
    let mut sum = 0.0;
    for &i in &order {
        if sum >= goal || eta[i] == 0.0 {
            break;
        }
        sum += eta[i];
        marked.push(i);
    }
    Ok(Marking::Marked(marked))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mark(v: &[f64], theta: f64) -> Vec<usize> {
        let mut m = doerfler_mark(&Indicators::new(v.to_vec()).unwrap(), theta)
            .unwrap()
            .elements()
            .to_vec();
        m.sort();
        m
    }

    #[test]
    fn examples() {
        assert_eq!(mark(&[4.0, 3.0, 2.0, 1.0], 0.5), vec![0, 1]);
        assert_eq!(mark(&[5.0, 5.0], 0.5), vec![0]);
        assert_eq!(mark(&[0.5, 0.0, 2.0, 1.0], 1.0), vec![0, 2, 3]);
    }

    #[test]
    fn zero_estimator_converges() {
        let ind = Indicators::new(vec![0.0; 3]).unwrap();
        assert_eq!(doerfler_mark(&ind, 0.5).unwrap(), Marking::Converged);
    }

    #[test]
    fn theta_range() {
        let ind = Indicators::new(vec![1.0]).unwrap();
        assert!(doerfler_mark(&ind, 0.0).is_err());
        assert!(doerfler_mark(&ind, 1.5).is_err());
    }
}
