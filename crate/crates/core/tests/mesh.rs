use afem_core::mesh::{BoundaryEdge, Mesh};
use afem_core::problems;
use proptest::prelude::*;

fn square() -> Mesh {
    Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap()
}

fn boundary(pairs: &[[usize; 2]]) -> Vec<BoundaryEdge> {
    pairs.iter().map(|&vertices| BoundaryEdge { vertices, segment: 0 }).collect()
}

/// Every fine element must lie inside the coarse element recorded as its parent.
fn assert_nested(coarse: &Mesh, fine: &Mesh) {
    let lineage = fine.lineage().expect("refined mesh keeps its lineage");
    assert_eq!(lineage.parent_id, coarse.id());
    assert_eq!(lineage.parent.len(), fine.n_elements());
    for e in 0..fine.n_elements() {
        let parent = lineage.parent[e];
        for p in fine.element_points(e) {
            let l = coarse.barycentric(parent, p);
            assert!(l.iter().all(|&x| x >= -1e-12), "element {e} leaves parent {parent}");
        }
    }
    // the children tile each parent
    let mut covered = vec![0.0; coarse.n_elements()];
    for e in 0..fine.n_elements() {
        covered[lineage.parent[e]] += fine.area(e);
    }
    for (t, a) in covered.iter().enumerate() {
        assert!((a - coarse.area(t)).abs() <= 1e-14 * coarse.total_area());
    }
}

#[test]
fn square_shares_the_diagonal_as_reference_edge() {
    let m = square();
    let diag = |t: [usize; 3]| {
        let mut e = [t[0], t[1]];
        e.sort();
        e
    };
    assert_eq!(diag(m.elements()[0]), [0, 2]);
    assert_eq!(diag(m.elements()[1]), [0, 2]);
}

#[test]
fn marking_both_square_triangles_gives_four() {
    let m = square();
    let r = m.refine(&[0, 1]).unwrap();
    assert_eq!(r.n_elements(), 4);
    assert_eq!(r.n_vertices(), 5);
    assert!(r.check_conforming());
    assert_eq!(r.generation(), &[1, 1, 1, 1]);
    assert_nested(&m, &r);
}

#[test]
fn closure_splits_the_neighbour() {
    let m = square();
    let r = m.refine(&[0]).unwrap();
    assert_eq!(r.n_elements(), 4);
    assert!(r.check_conforming());
    // the closure is the same mesh as marking both
    let both = m.refine(&[0, 1]).unwrap();
    assert_eq!(r.elements(), both.elements());
    assert_eq!(r.vertices(), both.vertices());
}

#[test]
fn empty_marking_is_a_no_op() {
    let (_, m) = problems::kellogg();
    let r = m.refine(&[]).unwrap();
    assert_eq!(r.vertices(), m.vertices());
    assert_eq!(r.elements(), m.elements());
    assert_eq!(r.generation(), m.generation());
    assert_eq!(r.boundary(), m.boundary());
}

#[test]
fn out_of_range_mark_is_rejected() {
    let m = square();
    assert!(m.refine(&[2]).is_err());
}

#[test]
fn uniform_square_has_eight_triangles_of_generation_two() {
    let m = square();
    let u = m.uniform_refine();
    assert_eq!(u.n_elements(), 8);
    assert!(u.generation().iter().all(|&g| g == 2));
    assert!(u.check_conforming());
    assert_nested(&m, &u);
    // marking everything twice gives the same element count
    let twice = m.refine(&[0, 1]).unwrap();
    let all: Vec<usize> = (0..twice.n_elements()).collect();
    assert_eq!(twice.refine(&all).unwrap().n_elements(), 8);
}

#[test]
fn uniform_growth_factor_is_between_two_and_four() {
    for (_, m) in [problems::kellogg(), problems::lshape_convection(), problems::zshape_nonlinear()] {
        let mut m = m;
        for _ in 0..3 {
            let u = m.uniform_refine();
            let ratio = u.n_elements() as f64 / m.n_elements() as f64;
            assert!((2.0..=4.0).contains(&ratio));
            assert!(u.check_conforming());
            m = u;
        }
    }
}

#[test]
fn hanging_vertex_is_detected() {
    // the midpoint of the diagonal is a vertex of the lower triangles only
    let m = Mesh::from_raw_parts(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]],
        vec![[0, 1, 4], [1, 2, 4], [0, 2, 3]],
        vec![0; 3],
        boundary(&[[0, 1], [1, 2], [2, 3], [3, 0]]),
    );
    assert!(!m.check_conforming());
}

#[test]
fn negative_orientation_is_detected() {
    let m = Mesh::from_raw_parts(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 2, 1], [0, 2, 3]],
        vec![0; 2],
        boundary(&[[0, 1], [1, 2], [2, 3], [3, 0]]),
    );
    assert!(!m.check_conforming());
}

#[test]
fn dump_round_trip() {
    let (_, m) = problems::zshape_nonlinear();
    let m = m.refine(&[0, 5]).unwrap().uniform_refine();
    let back = Mesh::parse_dump(&m.to_dump()).unwrap();
    assert_eq!(back.vertices(), m.vertices());
    assert_eq!(back.elements(), m.elements());
    assert_eq!(back.generation(), m.generation());
    assert_eq!(back.boundary(), m.boundary());
    assert!(back.check_conforming());
}

#[test]
fn malformed_dump_is_a_parse_error() {
    assert!(Mesh::parse_dump("afem-mesh v1\n3 1 3\n0 0\n1 0\n").is_err());
    assert!(Mesh::parse_dump("not a mesh\n").is_err());
}

/// Apply `rounds` random refinements driven by `picks`.
fn descendant(mut m: Mesh, picks: &[Vec<usize>]) -> Mesh {
    for p in picks {
        let marked: Vec<usize> = p.iter().map(|&i| i % m.n_elements()).collect();
        m = m.refine(&marked).unwrap();
    }
    m
}

fn picks() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..10_000, 0..6), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_descendants_are_conforming_and_nested(p in picks(), which in 0usize..3) {
        let (_, m0) = problems::by_name(problems::NAMES[which]).unwrap();
        let mut m = m0;
        for round in &p {
            let marked: Vec<usize> = round.iter().map(|&i| i % m.n_elements()).collect();
            let r = m.refine(&marked).unwrap();
            prop_assert!(r.check_conforming());
            assert_nested(&m, &r);
            // every marked element was bisected
            let lineage = r.lineage().unwrap();
            for &t in &marked {
                prop_assert!(lineage.parent.iter().filter(|&&q| q == t).count() >= 2);
            }
            m = r;
        }
    }

    #[test]
    fn minimum_angle_stays_bounded(p in picks()) {
        // right isosceles initial elements stay right isosceles under NVB
        let (_, m0) = problems::kellogg();
        let m = descendant(m0, &p);
        prop_assert!(m.min_angle() >= std::f64::consts::FRAC_PI_4 - 1e-9);
    }

    #[test]
    fn more_marks_never_give_fewer_elements(p in picks(), extra in prop::collection::vec(0usize..10_000, 0..6)) {
        let (_, m0) = problems::lshape_convection();
        let m = descendant(m0, &p);
        let n = m.n_elements();
        let b: Vec<usize> = p.last().unwrap().iter().map(|&i| i % n).collect();
        let mut a = b.clone();
        a.extend(extra.iter().map(|&i| i % n));
        prop_assert!(m.refine(&a).unwrap().n_elements() >= m.refine(&b).unwrap().n_elements());
    }

    #[test]
    fn generation_counts_bisections(p in picks()) {
        let (_, m0) = problems::zshape_nonlinear();
        let m = descendant(m0, &p);
        // an element of generation g has area 2^-g of its initial ancestor
        let u = m.uniform_refine();
        let lineage = u.lineage().unwrap();
        for e in 0..u.n_elements() {
            let parent = lineage.parent[e];
            prop_assert_eq!(u.generation()[e], m.generation()[parent] + 2);
            prop_assert!((4.0 * u.area(e) - m.area(parent)).abs() <= 1e-14);
        }
    }
}
