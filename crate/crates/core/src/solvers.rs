//! Algebraic solvers for the SPD energy system: sparse direct factorizations
//! and contractive one-step iterations (local multigrid V-cycle, damped
//! Richardson).

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Col, Side};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

use crate::error::{AfemError, Result};
use crate::fem::{CsrMatrix, Space};
use crate::mesh::NONE;

enum Factor {
    Cholesky(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

/// A factorized sparse matrix.
pub struct DirectSolver {
    n: usize,
    factor: Factor,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.factor {
            Factor::Cholesky(_) => "cholesky",
            Factor::Lu(_) => "lu",
        };
        f.debug_struct("DirectSolver").field("n", &self.n).field("kind", &kind).finish()
    }
}

impl DirectSolver {
    /// Cholesky factorization; fails unless the matrix is symmetric positive definite.
    pub fn cholesky(m: &CsrMatrix) -> Result<Self> {
        let a = m.to_faer()?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| AfemError::Solver(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(DirectSolver { n: m.n_rows, factor: Factor::Cholesky(llt) })
    }

    pub fn lu(m: &CsrMatrix) -> Result<Self> {
        let a = m.to_faer()?;
        let lu = a
            .sp_lu()
            .map_err(|e| AfemError::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(DirectSolver { n: m.n_rows, factor: Factor::Lu(lu) })
    }

    /// Cholesky for exactly symmetric input, LU otherwise.
    pub fn new(m: &CsrMatrix) -> Result<Self> {
        if m.n_rows != m.n_cols {
            return Err(AfemError::Solver("matrix is not square".into()));
        }
        if m.asymmetry() == 0.0 {
            if let Ok(s) = Self::cholesky(m) {
                return Ok(s);
            }
        }
        Self::lu(m)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let b = Col::from_fn(self.n, |i| rhs[i]);
        let x = match &self.factor {
            Factor::Cholesky(f) => f.solve(&b),
            Factor::Lu(f) => f.solve(&b),
        };
        (0..self.n).map(|i| x[i]).collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve `A x = rhs` by sparse factorization with iterative refinement.
/// The relative residual of the result is at most `1e-12` unless the
/// system is numerically singular, which is reported as an error.
pub fn solve_direct(op: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let solver = DirectSolver::new(op)?;
    refined_solve(op, &solver, rhs)
}

pub(crate) fn refined_solve(op: &CsrMatrix, solver: &DirectSolver, rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = solver.solve(rhs);
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; op.n_rows]);
    }
    let mut rel = f64::INFINITY;
    for _ in 0..4 {
        let ax = op.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = norm(&r) / bnorm;
        if !rel.is_finite() {
            break;
        }
        if rel <= 1e-12 {
            return Ok(x);
        }
        let d = solver.solve(&r);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
    }
    if rel.is_finite() && rel <= 1e-8 {
        // attainable accuracy for a badly conditioned but regular system
        return Ok(x);
    }
    Err(AfemError::Solver(format!("system is singular (relative residual {rel:e})")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    LocalMultigrid,
    DampedRichardson,
    Direct,
}

impl std::str::FromStr for SolverKind {
    type Err = AfemError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local-mg" | "local_multigrid" | "mg" => Ok(SolverKind::LocalMultigrid),
            "richardson" | "damped_richardson" => Ok(SolverKind::DampedRichardson),
            "direct" => Ok(SolverKind::Direct),
            _ => Err(AfemError::Argument(format!("unknown solver `{s}`"))),
        }
    }
}

/// Gauss-Seidel sweeps before and after the coarse correction.
const SWEEPS: usize = 2;

struct Level {
    a: CsrMatrix,
    diag: Vec<f64>,
    /// Free DOFs of the previous level to free DOFs of this level.
    prolongation: Option<CsrMatrix>,
    smoothing: Vec<usize>,
}

/// Hierarchy and per-level data of a contractive solver for the energy system.
pub struct SolverState {
    kind: SolverKind,
    levels: Vec<Level>,
    coarse: Option<DirectSolver>,
    finest: Option<DirectSolver>,
    omega: f64,
}

impl std::fmt::Debug for SolverState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverState")
            .field("kind", &self.kind)
            .field("levels", &self.levels.len())
            .field("omega", &self.omega)
            .finish()
    }
}

fn check_spd_structure(a: &CsrMatrix) -> Result<Vec<f64>> {
    if a.n_rows != a.n_cols {
        return Err(AfemError::Solver("operator is not square".into()));
    }
    let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if a.asymmetry() > 1e-12 * scale {
        return Err(AfemError::Solver("operator is not symmetric".into()));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(AfemError::Solver(format!("operator has non-positive diagonal entry at {i}")));
    }
    Ok(diag)
}

/// Damping `1 / rho` with `rho` the Gershgorin bound of `D^{-1/2} A D^{-1/2}`.
fn richardson_omega(a: &CsrMatrix, diag: &[f64]) -> f64 {
    let mut rho: f64 = 0.0;
    for i in 0..a.n_rows {
        let s: f64 = a.row(i).map(|(j, v)| v.abs() / (diag[i] * diag[j]).sqrt()).sum();
        rho = rho.max(s);
    }
    if rho > 0.0 {
        1.0 / rho
    } else {
        1.0
    }
}

impl SolverState {
    /// Set up the solver on the coarsest level with the free-DOF energy matrix.
    pub fn new(kind: SolverKind, a: CsrMatrix) -> Result<Self> {
        let diag = check_spd_structure(&a)?;
        let mut state = SolverState { kind, levels: Vec::new(), coarse: None, finest: None, omega: 1.0 };
        match kind {
            SolverKind::LocalMultigrid => state.coarse = Some(DirectSolver::cholesky(&a)?),
            SolverKind::Direct => state.finest = Some(DirectSolver::cholesky(&a)?),
            SolverKind::DampedRichardson => state.omega = richardson_omega(&a, &diag),
        }
        state.levels.push(Level { a, diag, prolongation: None, smoothing: Vec::new() });
        Ok(state)
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Energy matrix of the finest level.
    pub fn operator(&self) -> &CsrMatrix {
        &self.levels.last().expect("at least one level").a
    }

    /// Damping factor of the Richardson iteration.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Append a finer level. `prolongation` maps free coefficients of the
    /// current finest level to the new one; `smoothing` lists the free DOFs
    /// smoothed on the new level.
    pub fn push_level(&mut self, a: CsrMatrix, prolongation: CsrMatrix, smoothing: Vec<usize>) -> Result<()> {
        let diag = check_spd_structure(&a)?;
        if prolongation.n_rows != a.n_rows || prolongation.n_cols != self.operator().n_rows {
            return Err(AfemError::Argument("prolongation has inconsistent dimensions".into()));
        }
        match self.kind {
            SolverKind::Direct => self.finest = Some(DirectSolver::cholesky(&a)?),
            SolverKind::DampedRichardson => self.omega = richardson_omega(&a, &diag),
            SolverKind::LocalMultigrid => {}
        }
        self.levels.push(Level { a, diag, prolongation: Some(prolongation), smoothing });
        Ok(())
    }

    /// Append the level of `fine`, a P1 space on the direct NVB child of the
    /// mesh of `coarse`. Smoothing acts on new vertices and their neighbours.
    pub fn push_refinement(&mut self, coarse: &Space, fine: &Space, a: CsrMatrix) -> Result<()> {
        if self.kind != SolverKind::LocalMultigrid {
            let n = a.n_rows;
            let placeholder = CsrMatrix::from_triplets(n, self.operator().n_rows, &[]);
            return self.push_level(a, placeholder, Vec::new());
        }
        let p = p1_prolongation(coarse, fine)?;
        let lineage = fine.mesh().lineage().expect("checked by p1_prolongation");
        let mut flag = vec![false; fine.n_free()];
        for v in lineage.n_parent_vertices..fine.mesh().n_vertices() {
            let i = fine.free_index(v);
            if i == NONE {
                continue;
            }
            flag[i] = true;
            for (j, _) in a.row(i) {
                flag[j] = true;
            }
        }
        let smoothing = (0..flag.len()).filter(|&i| flag[i]).collect();
        self.push_level(a, p, smoothing)
    }

    /// One step `x + B (rhs - A x)` of the iteration on the finest level.
    pub fn step(&self, rhs: &[f64], x: &[f64]) -> Vec<f64> {
        let top = self.levels.len() - 1;
        let a = &self.levels[top].a;
        match self.kind {
            SolverKind::Direct => self.finest.as_ref().expect("factorized").solve(rhs),
            SolverKind::DampedRichardson => {
                let ax = a.mul_vec(x);
                let d = &self.levels[top].diag;
                (0..x.len()).map(|i| x[i] + self.omega * (rhs[i] - ax[i]) / d[i]).collect()
            }
            SolverKind::LocalMultigrid => {
                let ax = a.mul_vec(x);
                let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
                let c = self.vcycle(top, &r);
                x.iter().zip(&c).map(|(a, b)| a + b).collect()
            }
        }
    }

    /// Multiplicative V-cycle applied to residual `r` on level `l`.
    fn vcycle(&self, l: usize, r: &[f64]) -> Vec<f64> {
        if l == 0 {
            return self.coarse.as_ref().expect("coarse factorization").solve(r);
        }
        let level = &self.levels[l];
        let a = &level.a;
        let mut x = vec![0.0; r.len()];
        let gs = |x: &mut [f64], i: usize| {
            let ax: f64 = a.row(i).map(|(j, v)| v * x[j]).sum();
            x[i] += (r[i] - ax) / level.diag[i];
        };
        for _ in 0..SWEEPS {
            for &i in &level.smoothing {
                gs(&mut x, i);
            }
        }
        let ax = a.mul_vec(&x);
        let res: Vec<f64> = r.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let p = level.prolongation.as_ref().expect("fine levels carry a prolongation");
        let coarse_corr = self.vcycle(l - 1, &p.mul_transpose_vec(&res));
        let pc = p.mul_vec(&coarse_corr);
        for (xi, ci) in x.iter_mut().zip(&pc) {
            *xi += ci;
        }
        for _ in 0..SWEEPS {
            for &i in level.smoothing.iter().rev() {
                gs(&mut x, i);
            }
        }
        x
    }

    /// Empirical contraction factor in the energy norm of the finest level.
    ///
    /// Each trial starts from a random error and applies a few steps with
    /// zero right-hand side (so the exact solution is zero), recording the
    /// largest one-step ratio. Returns `min(1.05 q, (1 + q) / 2)` for the
    /// measured `q`, or an error if some ratio reaches 1.
    pub fn certify_contraction(&self, trials: usize, seed: u64) -> Result<f64> {
        if trials == 0 {
            return Err(AfemError::Argument("at least one trial is required".into()));
        }
        let a = self.operator();
        let n = a.n_rows;
        if n == 0 || self.kind == SolverKind::Direct {
            return Ok(0.0);
        }
        let zero = vec![0.0; n];
        let mut rng = StdRng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let mut e: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            for _ in 0..8 {
                let before = a.bilinear(&e, &e).sqrt();
                if before == 0.0 {
                    break;
                }
                e.iter_mut().for_each(|v| *v /= before);
                let next = self.step(&zero, &e);
                let after = a.bilinear(&next, &next).max(0.0).sqrt();
                worst = worst.max(after);
                e = next;
            }
        }
        if !(worst < 1.0) {
            return Err(AfemError::NonContractive { ratio: worst });
        }
        Ok((1.05 * worst).min(0.5 * (1.0 + worst)))
    }
}

/// Matrix of the P1 embedding between free DOFs of a mesh and its direct
/// NVB child: old vertices keep their value, new vertices take the mean of
/// the endpoints of the bisected edge.
pub fn p1_prolongation(coarse: &Space, fine: &Space) -> Result<CsrMatrix> {
    if coarse.degree() != 1 || fine.degree() != 1 {
        return Err(AfemError::Argument("local multigrid requires polynomial degree 1".into()));
    }
    let lineage = fine
        .mesh()
        .lineage()
        .filter(|l| l.parent_id == coarse.mesh().id())
        .ok_or_else(|| AfemError::Argument("fine mesh is not a refinement of the coarse mesh".into()))?;
    let mut trip = Vec::new();
    let nv0 = lineage.n_parent_vertices;
    for v in 0..fine.mesh().n_vertices() {
        let i = fine.free_index(v);
        if i == NONE {
            continue;
        }
        if v < nv0 {
            let j = coarse.free_index(v);
            if j != NONE {
                trip.push((i, j, 1.0));
            }
        } else {
            for &w in &lineage.vertex_parents[v - nv0] {
                let j = coarse.free_index(w);
                if j != NONE {
                    trip.push((i, j, 0.5));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(fine.n_free(), coarse.n_free(), &trip))
}
