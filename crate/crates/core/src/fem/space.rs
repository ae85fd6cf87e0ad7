use std::sync::Arc;

use crate::mesh::{Mesh, Point, NONE};

use super::lagrange::LagrangeBasis;

/// Affine element map data.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub points: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
    pub centroid: Point,
}

impl ElementGeometry {
    pub fn new(points: [Point; 3]) -> Self {
        let [a, b, c] = points;
        let area = crate::mesh::signed_area(a, b, c);
        let two_a = 2.0 * area;
        let grad_lambda = std::array::from_fn(|i| {
            let p = points[(i + 1) % 3];
            let q = points[(i + 2) % 3];
            [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a]
        });
        ElementGeometry {
            points,
            area,
            grad_lambda,
            centroid: [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0],
        }
    }

    pub fn point(&self, lambda: [f64; 3]) -> Point {
        let [a, b, c] = self.points;
        [
            lambda[0] * a[0] + lambda[1] * b[0] + lambda[2] * c[0],
            lambda[0] * a[1] + lambda[1] * b[1] + lambda[2] * c[1],
        ]
    }

    /// Physical gradient from barycentric derivatives.
    pub fn gradient(&self, dl: &[f64; 3]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [
            dl[0] * g[0][0] + dl[1] * g[1][0] + dl[2] * g[2][0],
            dl[0] * g[0][1] + dl[1] * g[1][1] + dl[2] * g[2][1],
        ]
    }

    /// Physical Hessian from barycentric second derivatives.
    pub fn hessian(&self, d2l: &[[f64; 3]; 3]) -> [[f64; 2]; 2] {
        let g = &self.grad_lambda;
        let mut h = [[0.0; 2]; 2];
        for a in 0..3 {
            for b in 0..3 {
                let s = d2l[a][b];
                if s == 0.0 {
                    continue;
                }
                for r in 0..2 {
                    for c in 0..2 {
                        h[r][c] += s * g[a][r] * g[b][c];
                    }
                }
            }
        }
        h
    }
}

/// Conforming P_p Lagrange space with homogeneous treatment of the whole
/// boundary as Dirichlet boundary.
///
/// Global numbering: vertex DOFs carry the vertex index, then `p - 1` DOFs per
/// edge (edge-major, ordered from the lower to the higher vertex index), then
/// the interior DOFs element by element.
#[derive(Debug)]
pub struct Space {
    mesh: Arc<Mesh>,
    basis: LagrangeBasis,
    dof_map: Vec<usize>,
    n_dofs: usize,
    dof_coords: Vec<Point>,
    is_dirichlet: Vec<bool>,
    free: Vec<usize>,
    free_index: Vec<usize>,
    dirichlet: Vec<usize>,
}

impl Space {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Space {
        let basis = LagrangeBasis::new(degree);
        let p = degree;
        let topo = mesh.topology();
        let nv = mesh.n_vertices();
        let ne = topo.n_edges();
        let n_int = basis.n_interior();
        let n_local = basis.n_local();
        let edge_base = nv;
        let int_base = nv + ne * (p - 1);
        let n_dofs = int_base + mesh.n_elements() * n_int;

        let mut dof_map = Vec::with_capacity(mesh.n_elements() * n_local);
        for (e, t) in mesh.elements().iter().enumerate() {
            dof_map.extend_from_slice(t);
            for k in 0..3 {
                let g = topo.element_edges[e][k];
                let forward = t[k] < t[(k + 1) % 3];
                for s in 1..p {
                    let off = if forward { s - 1 } else { p - 1 - s };
                    dof_map.push(edge_base + g * (p - 1) + off);
                }
            }
            for i in 0..n_int {
                dof_map.push(int_base + e * n_int + i);
            }
        }

        let mut dof_coords = vec![[0.0; 2]; n_dofs];
        for e in 0..mesh.n_elements() {
            let geo = ElementGeometry::new(mesh.element_points(e));
            for i in 0..n_local {
                dof_coords[dof_map[e * n_local + i]] = geo.point(basis.node_barycentric(i));
            }
        }

        let mut is_dirichlet = vec![false; n_dofs];
        for (g, adj) in topo.edge_elements.iter().enumerate() {
            if adj[1] == NONE {
                let [a, b] = topo.edges[g];
                is_dirichlet[a] = true;
                is_dirichlet[b] = true;
                for s in 0..p - 1 {
                    is_dirichlet[edge_base + g * (p - 1) + s] = true;
                }
            }
        }
        let mut free = Vec::new();
        let mut dirichlet = Vec::new();
        let mut free_index = vec![NONE; n_dofs];
        for (i, &d) in is_dirichlet.iter().enumerate() {
            if d {
                dirichlet.push(i);
            } else {
                free_index[i] = free.len();
                free.push(i);
            }
        }
        Space {
            mesh,
            basis,
            dof_map,
            n_dofs,
            dof_coords,
            is_dirichlet,
            free,
            free_index,
            dirichlet,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_local(&self) -> usize {
        self.basis.n_local()
    }

    /// Global DOFs of element `e` in local node order.
    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let n = self.n_local();
        &self.dof_map[e * n..(e + 1) * n]
    }

    pub fn geometry(&self, e: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.element_points(e))
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.is_dirichlet[dof]
    }

    /// Free (non-Dirichlet) DOFs in increasing order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet
    }

    /// Position of `dof` among the free DOFs, or [`NONE`].
    pub fn free_index(&self, dof: usize) -> usize {
        self.free_index[dof]
    }

    pub fn restrict_free(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Overwrite the free entries of `full` with `free_values`.
    pub fn scatter_free(&self, free_values: &[f64], full: &mut [f64]) {
        for (&i, &v) in self.free.iter().zip(free_values) {
            full[i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Arc<Mesh> {
        Arc::new(
            Mesh::new(
                vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
                vec![[0, 1, 2], [0, 2, 3]],
            )
            .unwrap(),
        )
    }

    #[test]
    fn lagrange_dimension() {
        let m = Arc::new(square().uniform_refine());
        let topo = m.topology();
        for p in 1..=4 {
            let s = Space::new(m.clone(), p);
            let int = if p >= 3 { (p - 1) * (p - 2) / 2 } else { 0 };
            assert_eq!(
                s.n_dofs(),
                m.n_vertices() + topo.n_edges() * (p - 1) + m.n_elements() * int
            );
        }
    }

    #[test]
    fn shared_nodes_have_equal_coordinates() {
        // conformity: a DOF seen from two elements sits at one physical point
        let m = Arc::new(square().uniform_refine());
        let s = Space::new(m.clone(), 3);
        for e in 0..m.n_elements() {
            let geo = s.geometry(e);
            for (i, &d) in s.element_dofs(e).iter().enumerate() {
                let x = geo.point(s.basis().node_barycentric(i));
                let y = s.dof_coords()[d];
                assert!((x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn boundary_classification() {
        let s = Space::new(square(), 2);
        // 4 vertices + 5 edges, 4 of them on the boundary; only the diagonal midpoint is free
        assert_eq!(s.n_dofs(), 9);
        assert_eq!(s.n_free(), 1);
        let x = s.dof_coords()[s.free_dofs()[0]];
        assert_eq!(x, [0.5, 0.5]);
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let g = ElementGeometry::new([[0.1, 0.2], [1.3, 0.1], [0.4, 0.9]]);
        for c in 0..2 {
            let s: f64 = g.grad_lambda.iter().map(|v| v[c]).sum();
            assert!(s.abs() < 1e-14);
        }
    }
}
