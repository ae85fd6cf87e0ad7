//! Conforming triangulations and newest-vertex bisection (NVB).
//!
//! Every element is stored as a vertex triple `[v0, v1, v2]` in counter-clockwise
//! order. The reference edge is always the local edge `(v0, v1)`, i.e. the edge
//! opposite the newest vertex `v2`. Local edge `k` joins `v_k` and `v_{k+1 mod 3}`.
//!
//! Bisecting `[a, b, c]` at the midpoint `m` of `(a, b)` produces the children
//! `[c, a, m]` and `[b, c, m]`, so the reference edges of the children are the
//! two remaining edges of the parent and `m` becomes their newest vertex.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use crate::error::{AfemError, Result};

pub type Point = [f64; 2];

/// Marker for "no neighbour" in [`Topology::edge_elements`].
pub const NONE: usize = usize::MAX;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub segment: u32,
}

/// Provenance of a mesh produced by one call to [`Mesh::refine`].
#[derive(Clone, Debug)]
pub struct Lineage {
    pub parent_id: u64,
    /// For every element, the index of the element of the parent mesh it lies in.
    pub parent: Vec<usize>,
    pub n_parent_vertices: usize,
    pub n_parent_elements: usize,
    /// Endpoints of the bisected edge for every new vertex, in creation order
    /// (vertex `n_parent_vertices + i` is the midpoint of `vertex_parents[i]`).
    pub vertex_parents: Vec<[usize; 2]>,
}

/// Edge numbering of a mesh.
#[derive(Clone, Debug)]
pub struct Topology {
    /// Edge endpoints, sorted ascending.
    pub edges: Vec<[usize; 2]>,
    /// Global edge index of local edge `k` of each element.
    pub element_edges: Vec<[usize; 3]>,
    /// Elements adjacent to each edge; the second entry is [`NONE`] on the boundary.
    pub edge_elements: Vec<[usize; 2]>,
}

impl Topology {
    fn build(n_vertices: usize, elements: &[[usize; 3]]) -> Self {
        let mut lookup: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(elements.len() * 2 + n_vertices);
        let mut edges = Vec::with_capacity(elements.len() * 2);
        let mut edge_elements: Vec<[usize; 2]> = Vec::with_capacity(elements.len() * 2);
        let mut element_edges = Vec::with_capacity(elements.len());
        for (e, t) in elements.iter().enumerate() {
            let mut local = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_elements.push([NONE, NONE]);
                    edges.len() - 1
                });
                let slot = &mut edge_elements[id];
                if slot[0] == NONE {
                    slot[0] = e;
                } else if slot[1] == NONE {
                    slot[1] = e;
                } else {
                    // Third element on one edge; record overflow by poisoning.
                    slot[1] = usize::MAX - 1;
                }
                local[k] = id;
            }
            element_edges.push(local);
        }
        Topology {
            edges,
            element_edges,
            edge_elements,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_elements[edge][1] == NONE
    }
}

#[derive(Debug)]
pub struct Mesh {
    id: u64,
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    generation: Vec<u32>,
    boundary: Vec<BoundaryEdge>,
    lineage: Option<Lineage>,
    topology: OnceLock<Topology>,
}

impl Clone for Mesh {
    fn clone(&self) -> Self {
        Mesh {
            id: self.id,
            vertices: self.vertices.clone(),
            elements: self.elements.clone(),
            generation: self.generation.clone(),
            boundary: self.boundary.clone(),
            lineage: self.lineage.clone(),
            topology: self.topology.clone(),
        }
    }
}

/// Content equality; mesh identities and lineage are ignored.
impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.elements == other.elements
            && self.generation == other.generation
            && self.boundary == other.boundary
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Rotate a counter-clockwise triangle so that its longest edge becomes the
/// reference edge `(v0, v1)`. Ties go to the edge whose opposite vertex has the
/// smallest global index.
fn longest_edge_first(t: [usize; 3], vertices: &[Point]) -> [usize; 3] {
    let mut best = 0;
    let mut best_len = -1.0;
    let mut best_opp = usize::MAX;
    for k in 0..3 {
        let len = dist2(vertices[t[k]], vertices[t[(k + 1) % 3]]);
        let opp = t[(k + 2) % 3];
        let scale = len.max(best_len).max(f64::MIN_POSITIVE);
        let longer = len > best_len + 1e-12 * scale;
        let tie = (len - best_len).abs() <= 1e-12 * scale;
        if longer || (tie && opp < best_opp) {
            best = k;
            best_len = len;
            best_opp = opp;
        }
    }
    [t[best], t[(best + 1) % 3], t[(best + 2) % 3]]
}

impl Mesh {
    /// Build an initial mesh from arbitrary triangles.
    ///
    /// Triangles are reoriented counter-clockwise, reference edges are set to
    /// the longest edge, and every edge with a single neighbour becomes a
    /// boundary edge with segment id 0.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        Self::with_segments(vertices, triangles, |_, _| 0)
    }

    /// Like [`Mesh::new`], assigning boundary segment ids with `segment(a, b)`.
    pub fn with_segments(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        segment: impl Fn(Point, Point) -> u32,
    ) -> Result<Mesh> {
        let mut elements = Vec::with_capacity(triangles.len());
        for (e, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(AfemError::Mesh(format!("element {e} references a missing vertex")));
            }
            let area = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if area == 0.0 {
                return Err(AfemError::Mesh(format!("element {e} is degenerate")));
            }
            let ccw = if area > 0.0 { *t } else { [t[0], t[2], t[1]] };
            elements.push(longest_edge_first(ccw, &vertices));
        }
        let topo = Topology::build(vertices.len(), &elements);
        let mut boundary = Vec::new();
        for (edge, adj) in topo.edges.iter().zip(&topo.edge_elements) {
            if adj[1] == NONE {
                // keep the orientation of the owning element
                let t = elements[adj[0]];
                let k = (0..3)
                    .find(|&k| {
                        let (a, b) = (t[k], t[(k + 1) % 3]);
                        a.min(b) == edge[0] && a.max(b) == edge[1]
                    })
                    .expect("edge belongs to its element");
                let (a, b) = (t[k], t[(k + 1) % 3]);
                boundary.push(BoundaryEdge {
                    vertices: [a, b],
                    segment: segment(vertices[a], vertices[b]),
                });
            }
        }
        let n = elements.len();
        let mesh = Mesh {
            id: next_id(),
            vertices,
            elements,
            generation: vec![0; n],
            boundary,
            lineage: None,
            topology: OnceLock::from(topo),
        };
        if !mesh.check_conforming() {
            return Err(AfemError::Mesh("initial triangulation is not conforming".into()));
        }
        Ok(mesh)
    }

    /// Assemble a mesh from stored parts without any validation or reordering.
    /// Element triples must already follow the reference-edge convention.
    pub fn from_raw_parts(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        generation: Vec<u32>,
        boundary: Vec<BoundaryEdge>,
    ) -> Mesh {
        Mesh {
            id: next_id(),
            vertices,
            elements,
            generation,
            boundary,
            lineage: None,
            topology: OnceLock::new(),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn generation(&self) -> &[u32] {
        &self.generation
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn lineage(&self) -> Option<&Lineage> {
        self.lineage.as_ref()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn topology(&self) -> &Topology {
        self.topology
            .get_or_init(|| Topology::build(self.vertices.len(), &self.elements))
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        let t = self.elements[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_points(e);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_points(e);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.area(e)).sum()
    }

    /// Smallest interior angle (radians) over all elements.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for e in 0..self.n_elements() {
            let p = self.element_points(e);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist2(a, b).sqrt() * dist2(a, c).sqrt());
                min = min.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.element_points(e);
        let area = signed_area(a, b, c);
        let l0 = signed_area(p, b, c) / area;
        let l1 = signed_area(a, p, c) / area;
        [l0, l1, 1.0 - l0 - l1]
    }

    /// Element containing `p` (brute force), with its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        (0..self.n_elements()).find_map(|e| {
            let l = self.barycentric(e, p);
            l.iter().all(|&x| x >= -1e-12).then_some((e, l))
        })
    }

    /// True iff the mesh is a conforming, positively oriented triangulation
    /// whose boundary edge list matches its topological boundary.
    pub fn check_conforming(&self) -> bool {
        let nv = self.vertices.len();
        if self.generation.len() != self.elements.len() {
            return false;
        }
        for t in &self.elements {
            if t.iter().any(|&v| v >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return false;
            }
            let area = signed_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            if !(area > 0.0) {
                return false;
            }
        }
        let topo = Topology::build(nv, &self.elements);
        let mut boundary_keys: HashMap<(usize, usize), usize> = HashMap::new();
        for b in &self.boundary {
            let [a, c] = b.vertices;
            if a >= nv || c >= nv {
                return false;
            }
            *boundary_keys.entry((a.min(c), a.max(c))).or_default() += 1;
        }
        let mut n_topo_boundary = 0;
        for (edge, adj) in topo.edges.iter().zip(&topo.edge_elements) {
            match adj {
                [_, x] if *x == usize::MAX - 1 => return false,
                [_, x] if *x == NONE => {
                    n_topo_boundary += 1;
                    if boundary_keys.get(&(edge[0], edge[1])) != Some(&1) {
                        // hanging vertex or missing boundary edge
                        return false;
                    }
                }
                [e0, e1] => {
                    // the two neighbours must traverse the edge in opposite directions
                    let dir = |e: usize| {
                        let t = self.elements[e];
                        (0..3)
                            .find(|&k| t[k] == edge[0] && t[(k + 1) % 3] == edge[1])
                            .is_some()
                    };
                    if dir(*e0) == dir(*e1) {
                        return false;
                    }
                }
            }
        }
        n_topo_boundary == self.boundary.len() && boundary_keys.len() == self.boundary.len()
    }

    /// Coarsest conforming NVB refinement in which every marked element is bisected.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh> {
        let ne = self.n_elements();
        if let Some(&bad) = marked.iter().find(|&&e| e >= ne) {
            return Err(AfemError::Argument(format!(
                "marked element {bad} out of range (mesh has {ne} elements)"
            )));
        }
        let topo = self.topology();
        let mut edge_marked = vec![false; topo.n_edges()];
        let mut queue = Vec::new();
        for &e in marked {
            let r = topo.element_edges[e][0];
            if !edge_marked[r] {
                edge_marked[r] = true;
                queue.push(r);
            }
        }
        // Closure: an element with any marked edge must have its reference edge marked.
        while let Some(edge) = queue.pop() {
            for &e in &topo.edge_elements[edge] {
                if e == NONE {
                    continue;
                }
                let r = topo.element_edges[e][0];
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    queue.push(r);
                }
            }
        }
        Ok(self.bisect_marked_edges(&edge_marked))
    }

    /// Uniform refinement: every edge is bisected, so each element is replaced by
    /// four children of generation `+2`.
    pub fn uniform_refine(&self) -> Mesh {
        let marked = vec![true; self.topology().n_edges()];
        self.bisect_marked_edges(&marked)
    }

    /// Bisect all elements according to a closed set of marked edges.
    fn bisect_marked_edges(&self, edge_marked: &[bool]) -> Mesh {
        let topo = self.topology();
        let nv0 = self.vertices.len();
        let mut vertices = self.vertices.clone();
        let mut vertex_parents = Vec::new();
        let mut edge_mid = vec![NONE; topo.n_edges()];
        for (i, &m) in edge_marked.iter().enumerate() {
            if m {
                let [a, b] = topo.edges[i];
                edge_mid[i] = vertices.len();
                vertices.push(midpoint(vertices[a], vertices[b]));
                vertex_parents.push([a, b]);
            }
        }

        let mut elements = Vec::with_capacity(self.n_elements() * 2);
        let mut generation = Vec::with_capacity(self.n_elements() * 2);
        let mut parent = Vec::with_capacity(self.n_elements() * 2);
        let bisect = |t: [usize; 3], m: usize| ([t[2], t[0], m], [t[1], t[2], m]);

        for (e, &t) in self.elements.iter().enumerate() {
            let g = self.generation[e];
            let [e0, e1, e2] = topo.element_edges[e];
            if !edge_marked[e0] {
                debug_assert!(!edge_marked[e1] && !edge_marked[e2], "closure violated");
                elements.push(t);
                generation.push(g);
                parent.push(e);
                continue;
            }
            let (left, right) = bisect(t, edge_mid[e0]);
            // left = [c, a, m] has reference edge (c, a) = local edge 2 of t
            if edge_marked[e2] {
                let (l1, l2) = bisect(left, edge_mid[e2]);
                elements.extend([l1, l2]);
                generation.extend([g + 2, g + 2]);
                parent.extend([e, e]);
            } else {
                elements.push(left);
                generation.push(g + 1);
                parent.push(e);
            }
            // right = [b, c, m] has reference edge (b, c) = local edge 1 of t
            if edge_marked[e1] {
                let (r1, r2) = bisect(right, edge_mid[e1]);
                elements.extend([r1, r2]);
                generation.extend([g + 2, g + 2]);
                parent.extend([e, e]);
            } else {
                elements.push(right);
                generation.push(g + 1);
                parent.push(e);
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, edge) in topo.edges.iter().enumerate() {
            if edge_marked[i] && topo.is_boundary_edge(i) {
                lookup.insert((edge[0], edge[1]), edge_mid[i]);
            }
        }
        let mut boundary = Vec::with_capacity(self.boundary.len() * 2);
        for b in &self.boundary {
            let [a, c] = b.vertices;
            match lookup.get(&(a.min(c), a.max(c))) {
                Some(&m) => {
                    boundary.push(BoundaryEdge { vertices: [a, m], segment: b.segment });
                    boundary.push(BoundaryEdge { vertices: [m, c], segment: b.segment });
                }
                None => boundary.push(*b),
            }
        }

        Mesh {
            id: next_id(),
            vertices,
            elements,
            generation,
            boundary,
            lineage: Some(Lineage {
                parent_id: self.id,
                parent,
                n_parent_vertices: nv0,
                n_parent_elements: self.n_elements(),
                vertex_parents,
            }),
            topology: OnceLock::new(),
        }
    }

    /// Plain-text dump (`afem-mesh v1`).
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "afem-mesh v1");
        let _ = writeln!(
            s,
            "{} {} {}",
            self.n_vertices(),
            self.n_elements(),
            self.boundary.len()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", v[0], v[1]);
        }
        for (t, g) in self.elements.iter().zip(&self.generation) {
            let _ = writeln!(s, "{} {} {} 0 {}", t[0], t[1], t[2], g);
        }
        for b in &self.boundary {
            let _ = writeln!(s, "{} {} {}", b.vertices[0], b.vertices[1], b.segment);
        }
        s
    }

    /// Parse the format written by [`Mesh::to_dump`]. A nonzero `ref_edge` column
    /// rotates the triple so that local edge `ref_edge` becomes the reference edge.
    pub fn parse_dump(text: &str) -> Result<Mesh> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, msg: &str| AfemError::Parse { line, msg: msg.to_string() };
        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
        if header != "afem-mesh v1" {
            return Err(err(ln, "expected header `afem-mesh v1`"));
        }
        fn fields<T: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<T>> {
            let v: Vec<T> = s
                .split_whitespace()
                .map(|x| x.parse::<T>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| AfemError::Parse { line, msg: format!("cannot parse `{s}`") })?;
            if v.len() != n {
                return Err(AfemError::Parse { line, msg: format!("expected {n} fields") });
            }
            Ok(v)
        }
        let (ln, counts) = lines.next().ok_or_else(|| err(ln + 1, "missing counts"))?;
        let c: Vec<usize> = fields(ln, counts, 3)?;
        let (nv, ne, nb) = (c[0], c[1], c[2]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated vertex block"))?;
            let v: Vec<f64> = fields(ln, l, 2)?;
            vertices.push([v[0], v[1]]);
        }
        let mut elements = Vec::with_capacity(ne);
        let mut generation = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated element block"))?;
            let v: Vec<usize> = fields(ln, l, 5)?;
            if v[3] > 2 {
                return Err(err(ln, "ref_edge must be 0, 1 or 2"));
            }
            let r = v[3];
            elements.push([v[r], v[(r + 1) % 3], v[(r + 2) % 3]]);
            generation.push(v[4] as u32);
        }
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated boundary block"))?;
            let v: Vec<usize> = fields(ln, l, 3)?;
            boundary.push(BoundaryEdge { vertices: [v[0], v[1]], segment: v[2] as u32 });
        }
        Ok(Mesh::from_raw_parts(vertices, elements, generation, boundary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit square split along the diagonal (0,0)-(1,1).
    pub(crate) fn square() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn initial_reference_edge_is_the_diagonal() {
        let m = square();
        for t in m.elements() {
            let mut r = [t[0], t[1]];
            r.sort();
            assert_eq!(r, [0, 2]);
        }
        assert!(m.check_conforming());
        assert_eq!(m.boundary().len(), 4);
    }

    #[test]
    fn refine_both_gives_four() {
        let m = square();
        let r = m.refine(&[0, 1]).unwrap();
        assert_eq!(r.n_elements(), 4);
        assert_eq!(r.n_vertices(), 5);
        assert!(r.check_conforming());
        assert!(r.generation().iter().all(|&g| g == 1));
    }

    #[test]
    fn refine_one_closes_neighbour() {
        let m = square();
        let r = m.refine(&[0]).unwrap();
        assert_eq!(r.n_elements(), 4);
        assert!(r.check_conforming());
        let l = r.lineage().unwrap();
        assert_eq!(l.parent.iter().filter(|&&p| p == 1).count(), 2);
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = square();
        let r = m.refine(&[]).unwrap();
        assert_eq!(r, m);
    }

    #[test]
    fn out_of_range_marking_is_rejected() {
        assert!(matches!(square().refine(&[2]), Err(AfemError::Argument(_))));
    }

    #[test]
    fn uniform_square_gives_eight() {
        let m = square();
        let u = m.uniform_refine();
        assert_eq!(u.n_elements(), 8);
        assert!(u.check_conforming());
        assert!(u.generation().iter().all(|&g| g == 2));
        // equals two rounds of full marking
        let twice = m.refine(&[0, 1]).unwrap();
        let twice = twice.refine(&(0..twice.n_elements()).collect::<Vec<_>>()).unwrap();
        assert_eq!(twice.n_elements(), 8);
    }

    #[test]
    fn uniform_growth_factor() {
        let mut m = square();
        for _ in 0..4 {
            let u = m.uniform_refine();
            let ratio = u.n_elements() as f64 / m.n_elements() as f64;
            assert!((2.0..=4.0).contains(&ratio));
            m = u;
        }
    }

    #[test]
    fn hanging_vertex_detected() {
        // vertex 4 sits on the diagonal of the left triangle's neighbour
        let m = Mesh::from_raw_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]],
            vec![[0, 1, 2], [3, 0, 4], [2, 3, 4]],
            vec![0, 1, 1],
            vec![
                BoundaryEdge { vertices: [0, 1], segment: 0 },
                BoundaryEdge { vertices: [1, 2], segment: 0 },
                BoundaryEdge { vertices: [2, 3], segment: 0 },
                BoundaryEdge { vertices: [3, 0], segment: 0 },
            ],
        );
        assert!(!m.check_conforming());
    }

    #[test]
    fn negative_orientation_detected() {
        let m = square();
        let mut elements = m.elements().to_vec();
        elements[0] = [elements[0][1], elements[0][0], elements[0][2]];
        let bad = Mesh::from_raw_parts(
            m.vertices().to_vec(),
            elements,
            m.generation().to_vec(),
            m.boundary().to_vec(),
        );
        assert!(!bad.check_conforming());
    }

    #[test]
    fn dump_round_trip() {
        let m = square().refine(&[0]).unwrap();
        let text = m.to_dump();
        assert!(text.starts_with("afem-mesh v1\n5 4 4\n"), "{text}");
        let back = Mesh::parse_dump(&text).unwrap();
        assert_eq!(back, m);
        assert!(back.check_conforming());
    }

    #[test]
    fn dump_rejects_bad_header() {
        assert!(matches!(Mesh::parse_dump("mesh v2\n"), Err(AfemError::Parse { .. })));
    }
}
