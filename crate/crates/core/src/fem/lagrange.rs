//! P_p Lagrange shape functions in barycentric form.
//!
//! The basis function attached to the node with barycentric multi-index
//! `(i, j, k)`, `i + j + k = p`, is `R_i(l0) R_j(l1) R_k(l2)` where
//! `R_n(s) = prod_{m<n} (p s - m) / (m + 1)`.
//!
//! Local node order: the three vertices, then `p - 1` nodes on each edge
//! (edges `(v0,v1)`, `(v1,v2)`, `(v2,v0)`, each walked from its first vertex),
//! then interior nodes.

#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    pub degree: usize,
    /// Barycentric multi-index of every local node.
    pub nodes: Vec<[usize; 3]>,
}

/// Values and barycentric derivatives of all shape functions at one point.
#[derive(Clone, Debug, Default)]
pub struct ShapeValues {
    pub value: Vec<f64>,
    /// `d phi / d lambda_a`.
    pub dl: Vec<[f64; 3]>,
    /// `d^2 phi / d lambda_a d lambda_b`.
    pub d2l: Vec<[[f64; 3]; 3]>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "polynomial degree must be at least 1");
        let p = degree;
        let mut nodes = vec![[p, 0, 0], [0, p, 0], [0, 0, p]];
        for s in 1..p {
            nodes.push([p - s, s, 0]);
        }
        for s in 1..p {
            nodes.push([0, p - s, s]);
        }
        for s in 1..p {
            nodes.push([s, 0, p - s]);
        }
        for i in 1..p {
            for j in 1..p - i {
                nodes.push([i, j, p - i - j]);
            }
        }
        LagrangeBasis { degree, nodes }
    }

    pub fn n_local(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        let p = self.degree;
        if p < 3 {
            0
        } else {
            (p - 1) * (p - 2) / 2
        }
    }

    /// Barycentric coordinates of local node `i`.
    pub fn node_barycentric(&self, i: usize) -> [f64; 3] {
        let p = self.degree as f64;
        let n = self.nodes[i];
        [n[0] as f64 / p, n[1] as f64 / p, n[2] as f64 / p]
    }

    /// `R_n(s)` and its first two derivatives.
    fn silvester(&self, n: usize, s: f64) -> [f64; 3] {
        let p = self.degree as f64;
        let (mut f, mut df, mut d2f) = (1.0, 0.0, 0.0);
        for m in 0..n {
            let c = 1.0 / (m as f64 + 1.0);
            let l = (p * s - m as f64) * c;
            let dl = p * c;
            d2f = d2f * l + 2.0 * df * dl;
            df = df * l + f * dl;
            f *= l;
        }
        [f, df, d2f]
    }

    pub fn values(&self, lambda: [f64; 3]) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| (0..3).map(|a| self.silvester(n[a], lambda[a])[0]).product())
            .collect()
    }

    pub fn eval(&self, lambda: [f64; 3]) -> ShapeValues {
        let mut out = ShapeValues {
            value: Vec::with_capacity(self.nodes.len()),
            dl: Vec::with_capacity(self.nodes.len()),
            d2l: Vec::with_capacity(self.nodes.len()),
        };
        for n in &self.nodes {
            let r: [[f64; 3]; 3] = std::array::from_fn(|a| self.silvester(n[a], lambda[a]));
            out.value.push(r[0][0] * r[1][0] * r[2][0]);
            let mut dl = [0.0; 3];
            let mut d2l = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let mut prod = 1.0;
                    for (c, rc) in r.iter().enumerate() {
                        let order = (a == c) as usize + (b == c) as usize;
                        prod *= rc[order];
                    }
                    d2l[a][b] = prod;
                }
                dl[a] = (0..3)
                    .map(|c| r[c][(a == c) as usize])
                    .product();
            }
            out.dl.push(dl);
            out.d2l.push(d2l);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension() {
        for p in 1..=5 {
            let b = LagrangeBasis::new(p);
            assert_eq!(b.n_local(), (p + 1) * (p + 2) / 2);
            assert_eq!(b.nodes.len(), 3 + 3 * (p - 1) + b.n_interior());
        }
    }

    #[test]
    fn kronecker_property() {
        for p in 1..=4 {
            let b = LagrangeBasis::new(p);
            for i in 0..b.n_local() {
                let v = b.values(b.node_barycentric(i));
                for (j, x) in v.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((x - expect).abs() < 1e-12, "p={p} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        for p in 1..=4 {
            let b = LagrangeBasis::new(p);
            let s = b.eval([0.2, 0.3, 0.5]);
            assert!((s.value.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = LagrangeBasis::new(3);
        let l = [0.21, 0.37, 0.42];
        let s = b.eval(l);
        let h = 1e-6;
        for a in 0..3 {
            let mut lp = l;
            let mut lm = l;
            lp[a] += h;
            lm[a] -= h;
            let (vp, vm) = (b.eval(lp), b.eval(lm));
            for i in 0..b.n_local() {
                let fd = (vp.value[i] - vm.value[i]) / (2.0 * h);
                assert!((fd - s.dl[i][a]).abs() < 1e-6);
                for c in 0..3 {
                    let fd2 = (vp.dl[i][c] - vm.dl[i][c]) / (2.0 * h);
                    assert!((fd2 - s.d2l[i][a][c]).abs() < 1e-5);
                }
            }
        }
    }
}
