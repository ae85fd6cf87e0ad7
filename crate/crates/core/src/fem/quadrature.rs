//! Quadrature on the reference triangle and on the unit interval.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Rule on the reference triangle with vertices (0,0), (1,0), (0,1).
/// Weights sum to the reference area 1/2.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed Gauss product rule, exact for polynomials of total degree
    /// `order`.
    pub fn new(order: usize) -> Self {
        // x = u, y = (1 - u) v with Jacobian (1 - u): degree order + 1 in u
        let gu = GaussLegendre::new(NonZeroUsize::new(order / 2 + 1 + order % 2).unwrap());
        let gv = GaussLegendre::new(NonZeroUsize::new(order / 2 + 1).unwrap());
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(xi, wu) in gu.as_node_weight_pairs() {
            let u = 0.5 * (1.0 + xi);
            for &(eta, wv) in gv.as_node_weight_pairs() {
                let v = 0.5 * (1.0 + eta);
                points.push([u, (1.0 - u) * v]);
                weights.push(0.25 * wu * wv * (1.0 - u));
            }
        }
        TriangleRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates of each point.
    pub fn barycentric(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.points.iter().map(|p| [1.0 - p[0] - p[1], p[0], p[1]])
    }
}

/// Gauss–Legendre rule on [0, 1] with `n` points (weights sum to 1).
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let (points, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (1.0 + x), 0.5 * w))
            .unzip();
        LineRule { points, weights }
    }
}
