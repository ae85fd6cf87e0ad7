use afem_core::estimator::Indicators;
use afem_core::marking::{doerfler_mark, Marking};
use proptest::prelude::*;

fn mark(v: &[f64], theta: f64) -> Marking {
    doerfler_mark(&Indicators::new(v.to_vec()).unwrap(), theta).unwrap()
}

fn sorted(m: &Marking) -> Vec<usize> {
    let mut s = m.elements().to_vec();
    s.sort();
    s
}

/// Smallest cardinality of any subset meeting the criterion, by enumeration.
fn brute_force_minimum(v: &[f64], theta: f64) -> usize {
    let total: f64 = v.iter().sum();
    (0u32..1 << v.len())
        .filter(|mask| {
            let s: f64 = (0..v.len()).filter(|&i| mask & (1 << i) != 0).map(|i| v[i]).sum();
            theta * total <= s
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap()
}

#[test]
fn two_largest_of_four() {
    let m = mark(&[4.0, 3.0, 2.0, 1.0], 0.5);
    assert_eq!(sorted(&m), vec![0, 1]);
    assert_eq!(brute_force_minimum(&[4.0, 3.0, 2.0, 1.0], 0.5), 2);
}

#[test]
fn full_bulk_marks_every_nonzero_element() {
    let m = mark(&[1.0, 0.0, 3.0, 2.0, 0.0], 1.0);
    assert_eq!(sorted(&m), vec![0, 2, 3]);
}

#[test]
fn ties_prefer_the_lower_index() {
    assert_eq!(mark(&[5.0, 5.0], 0.5).elements(), &[0]);
    assert_eq!(mark(&[1.0, 5.0, 5.0, 5.0], 0.3).elements(), &[1]);
    assert_eq!(mark(&[1.0, 5.0, 5.0, 5.0], 0.5).elements(), &[1, 2]);
}

#[test]
fn vanishing_estimator_signals_convergence() {
    assert_eq!(mark(&[0.0, 0.0], 0.5), Marking::Converged);
    assert_eq!(mark(&[], 0.5), Marking::Converged);
}

#[test]
fn theta_outside_the_unit_interval_is_rejected() {
    let ind = Indicators::new(vec![1.0, 2.0]).unwrap();
    for theta in [0.0, -0.1, 1.0 + 1e-12, f64::NAN] {
        assert!(doerfler_mark(&ind, theta).is_err());
    }
}

fn indicators() -> impl Strategy<Value = Vec<f64>> {
    // small integers make ties frequent
    prop::collection::vec(prop_oneof![(0u32..6).prop_map(f64::from), 0.0f64..10.0], 1..=12)
}

proptest! {
    #[test]
    fn cardinality_is_minimal(v in indicators(), theta in 0.01f64..=1.0) {
        prop_assume!(v.iter().any(|&x| x > 0.0));
        let m = mark(&v, theta);
        prop_assert_eq!(m.elements().len(), brute_force_minimum(&v, theta));
    }

    #[test]
    fn criterion_holds(v in prop::collection::vec(0.0f64..1e3, 1..200), theta in 0.01f64..=1.0) {
        prop_assume!(v.iter().any(|&x| x > 0.0));
        let m = mark(&v, theta);
        let total: f64 = v.iter().sum();
        let marked: f64 = m.elements().iter().map(|&i| v[i]).sum();
        prop_assert!(theta * total <= marked * (1.0 + 1e-12));
        let s = sorted(&m);
        s.windows(2).for_each(|w| assert!(w[0] < w[1]));
    }

    #[test]
    fn larger_theta_marks_at_least_as_many(v in indicators(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
        prop_assume!(v.iter().any(|&x| x > 0.0));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(mark(&v, lo).elements().len() <= mark(&v, hi).elements().len());
    }
}
