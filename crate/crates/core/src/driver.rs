//! The adaptive loops: exact solves, a single contractive solver, and nested
//! Zarantonello plus algebraic iterations.
//!
//! Every solver step produces one [`Record`]; the record index is the total
//! step counter of the run and `cum_cost` accumulates the element counts of
//! all records so far.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{AfemError, Result};
use crate::estimator::{compute_indicators, Indicators};
use crate::fem::{
    apply_operator, assemble_a, assemble_b, assemble_rhs, dirichlet_lift, free_block, prolongate,
    reduced_rhs, solve_galerkin_exact, sub, CsrMatrix, DiscreteFunction, ProblemDef, Space,
};
use crate::iteration::{
    inner_stop, outer_stop, zarantonello_contraction_bound, zarantonello_rhs_with, ZarantonelloConfig,
};
use crate::marking::{doerfler_mark, Marking};
use crate::mesh::Mesh;
use crate::solvers::{solve_direct, SolverKind, SolverState};

pub const CSV_HEADER: &str =
    "ell,k,j,n_elem,n_dof,eta,increment,stop_outer,stop_inner,t_solve,t_estimate,t_mark,t_refine,cum_cost";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Exact,
    Uniform,
    Single,
    Nested,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Uniform => "uniform",
            Algorithm::Single => "single",
            Algorithm::Nested => "nested",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    /// Levels whose free DOF count would exceed this are not solved.
    pub max_dofs: usize,
    /// Stop once the estimator of a level's final iterate is at most this.
    pub eta_tol: f64,
    pub max_levels: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { max_dofs: 50_000, eta_tol: 0.0, max_levels: usize::MAX }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub degree: usize,
    pub theta: f64,
    pub stop: StopRule,
    pub solver: SolverKind,
    /// Stopping parameter of the single-solver loop.
    pub lambda: f64,
    pub zarantonello: ZarantonelloConfig,
    /// Trials of the contraction certificate on every level (0 disables it).
    pub certify_trials: usize,
    /// Largest certified contraction accepted for the local multigrid solver.
    pub mg_ceiling: f64,
    pub inner_cap: usize,
    pub seed: u64,
    /// Compute exact discrete solutions on every level and keep all meshes,
    /// spaces and iterates.
    pub verification: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            degree: 1,
            theta: 0.5,
            stop: StopRule::default(),
            solver: SolverKind::LocalMultigrid,
            lambda: 0.01,
            zarantonello: ZarantonelloConfig { delta: 0.5, lambda_sym: 0.7, lambda_alg: 0.7 },
            certify_trials: 2,
            mg_ceiling: 0.99,
            inner_cap: 500,
            seed: 0,
            verification: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Record {
    pub ell: usize,
    pub k: Option<usize>,
    pub j: Option<usize>,
    pub n_elem: usize,
    /// Number of free DOFs.
    pub n_dof: usize,
    pub eta: f64,
    /// Energy norm of the last algebraic increment (zero for exact solves).
    pub increment: f64,
    /// `|||u^{k,j} - u^{k-1,j_}|||` for nested runs, equal to `increment` otherwise.
    pub outer_increment: f64,
    pub stop_outer: bool,
    pub stop_inner: bool,
    pub t_solve: f64,
    pub t_estimate: f64,
    pub t_mark: f64,
    pub t_refine: f64,
    pub cum_cost: u64,
    /// Computable upper surrogate of the quasi-error.
    pub quasi_error: f64,
    /// `|||u*_ell - u|||` (verification runs).
    pub error: Option<f64>,
    /// Quasi-error with exact discrete references (verification runs).
    pub true_quasi_error: Option<f64>,
}

impl Record {
    pub fn time(&self) -> f64 {
        self.t_solve + self.t_estimate + self.t_mark + self.t_refine
    }
}

/// Data kept per level in verification runs.
#[derive(Clone, Debug)]
pub struct LevelArtifact {
    pub space: Arc<Space>,
    pub initial: DiscreteFunction,
    pub last: DiscreteFunction,
    pub exact: Option<DiscreteFunction>,
    pub indicators: Indicators,
    pub marked: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct History {
    pub algorithm: Algorithm,
    pub records: Vec<Record>,
    /// Certified algebraic contraction factor per level.
    pub q_alg: Vec<f64>,
    /// Contraction factor used for the symmetrization in nested runs.
    pub q_sym: Option<f64>,
    pub artifacts: Vec<LevelArtifact>,
    pub final_mesh: Option<Arc<Mesh>>,
}

impl History {
    fn new(algorithm: Algorithm) -> Self {
        History { algorithm, records: Vec::new(), q_alg: Vec::new(), q_sym: None, artifacts: Vec::new(), final_mesh: None }
    }

    fn push(&mut self, mut r: Record) {
        let prev = self.records.last().map_or(0, |p| p.cum_cost);
        r.cum_cost = prev + r.n_elem as u64;
        self.records.push(r);
    }

    pub fn n_levels(&self) -> usize {
        self.records.last().map_or(0, |r| r.ell + 1)
    }

    /// Index of the last record of every level.
    pub fn level_finals(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            if self.records.get(i + 1).is_none_or(|n| n.ell != r.ell) {
                out.push(i);
            }
        }
        out
    }

    /// `(n_dof, eta, cum_cost)` at the final iterate of every level.
    pub fn level_series(&self) -> Vec<(f64, f64, f64)> {
        self.level_finals()
            .into_iter()
            .map(|i| {
                let r = &self.records[i];
                (r.n_dof as f64, r.eta, r.cum_cost as f64)
            })
            .collect()
    }

    /// Number of outer steps on level `ell`.
    pub fn k_bar(&self, ell: usize) -> Option<usize> {
        self.records.iter().filter(|r| r.ell == ell).filter_map(|r| r.k).max()
    }

    /// Number of inner steps of outer step `k` on level `ell`.
    pub fn j_bar(&self, ell: usize, k: usize) -> Option<usize> {
        self.records.iter().filter(|r| r.ell == ell && r.k == Some(k)).filter_map(|r| r.j).max()
    }

    /// Cumulative wall time up to and including every record.
    pub fn cumulative_time(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.records.iter().map(|r| {
            t += r.time();
            t
        }).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:e},{:e},{},{},{:e},{:e},{:e},{:e},{}",
                r.ell,
                opt(r.k),
                opt(r.j),
                r.n_elem,
                r.n_dof,
                r.eta,
                r.increment,
                r.stop_outer as u8,
                r.stop_inner as u8,
                r.t_solve,
                r.t_estimate,
                r.t_mark,
                r.t_refine,
                r.cum_cost
            );
        }
        s
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Matrices and vectors of one level.
struct LevelSetup {
    space: Arc<Space>,
    /// Free block of the energy matrix.
    a_ff: CsrMatrix,
    lift: Vec<f64>,
    load: Vec<f64>,
    /// Full matrix of `b(.,.)` for linear problems.
    b_full: Option<CsrMatrix>,
    /// Free rhs `F - B lift` of the linear system.
    rhs: Option<Vec<f64>>,
}

fn setup_level(mesh: Arc<Mesh>, prob: &ProblemDef, degree: usize) -> Result<LevelSetup> {
    let space = Arc::new(Space::new(mesh, degree));
    let a = assemble_a(&space, prob)?;
    let a_ff = free_block(&space, &a);
    let lift = dirichlet_lift(&space, prob);
    let load = assemble_rhs(&space, prob);
    let (b_full, rhs) = if prob.is_linear() {
        let b = if prob.is_symmetric() { a } else { assemble_b(&space, prob)? };
        let rhs = reduced_rhs(&space, &b, &load, &lift);
        (Some(b), Some(rhs))
    } else {
        (None, None)
    };
    Ok(LevelSetup { space, a_ff, lift, load, b_full, rhs })
}

fn energy(a_ff: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    let d = sub(x, y);
    a_ff.bilinear(&d, &d).max(0.0).sqrt()
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.degree == 0 {
        return Err(AfemError::Argument("polynomial degree must be at least 1".into()));
    }
    if !(cfg.theta > 0.0 && cfg.theta <= 1.0) {
        return Err(AfemError::Argument(format!("theta = {} is outside (0, 1]", cfg.theta)));
    }
    if cfg.solver == SolverKind::LocalMultigrid && cfg.degree != 1 {
        return Err(AfemError::Argument("the local multigrid solver supports p = 1 only".into()));
    }
    Ok(())
}

/// Mark and refine; returns the new mesh or `None` when the run ends.
struct Advance {
    mesh: Option<Arc<Mesh>>,
    marked: Vec<usize>,
    t_mark: f64,
    t_refine: f64,
}

fn advance(
    mesh: &Arc<Mesh>,
    ind: &Indicators,
    theta: Option<f64>,
    ell: usize,
    degree: usize,
    stop: &StopRule,
) -> Result<Advance> {
    let eta = ind.total();
    if eta <= stop.eta_tol || eta == 0.0 || ell + 1 >= stop.max_levels {
        return Ok(Advance { mesh: None, marked: Vec::new(), t_mark: 0.0, t_refine: 0.0 });
    }
    let t = Instant::now();
    let marked = match theta {
        Some(theta) => match doerfler_mark(ind, theta)? {
            Marking::Converged => {
                return Ok(Advance { mesh: None, marked: Vec::new(), t_mark: secs(t), t_refine: 0.0 })
            }
            Marking::Marked(m) => m,
        },
        None => Vec::new(),
    };
    let t_mark = secs(t);
    let t = Instant::now();
    let fine = match theta {
        Some(_) => mesh.refine(&marked)?,
        None => mesh.uniform_refine(),
    };
    let t_refine = secs(t);
    // Count free DOFs of the prospective space without building it.
    let topo = fine.topology();
    let n_boundary = fine.boundary().len();
    let p = degree;
    let n_int = if p >= 3 { (p - 1) * (p - 2) / 2 } else { 0 };
    let n_all = fine.n_vertices() + topo.n_edges() * (p - 1) + fine.n_elements() * n_int;
    let n_free = n_all - n_boundary * p;
    if n_free > stop.max_dofs {
        return Ok(Advance { mesh: None, marked, t_mark, t_refine });
    }
    Ok(Advance { mesh: Some(Arc::new(fine)), marked, t_mark, t_refine })
}

fn exact_like(prob: &ProblemDef, mesh0: &Mesh, cfg: &RunConfig, uniform: bool) -> Result<History> {
    validate(cfg)?;
    let mut hist = History::new(if uniform { Algorithm::Uniform } else { Algorithm::Exact });
    let mut mesh = Arc::new(mesh0.clone());
    let mut ell = 0;
    loop {
        let t = Instant::now();
        let space = Arc::new(Space::new(mesh.clone(), cfg.degree));
        let u = solve_galerkin_exact(&space, prob)?;
        let t_solve = secs(t);
        let t = Instant::now();
        let ind = compute_indicators(&space, &u, prob)?;
        let t_estimate = secs(t);
        let eta = ind.total();
        let error = if cfg.verification { prob.exact.as_ref().map(|_| crate::fem::energy_error_exact(prob, &u)).transpose()? } else { None };
        hist.push(Record {
            ell,
            n_elem: mesh.n_elements(),
            n_dof: space.n_free(),
            eta,
            stop_outer: true,
            stop_inner: true,
            t_solve,
            t_estimate,
            quasi_error: eta,
            error,
            true_quasi_error: Some(eta),
            ..Record::default()
        });
        let adv = advance(&mesh, &ind, (!uniform).then_some(cfg.theta), ell, cfg.degree, &cfg.stop)?;
        let last = hist.records.last_mut().expect("pushed");
        last.t_mark = adv.t_mark;
        last.t_refine = adv.t_refine;
        if cfg.verification {
            hist.artifacts.push(LevelArtifact {
                space: space.clone(),
                initial: u.clone(),
                last: u.clone(),
                exact: Some(u),
                indicators: ind,
                marked: adv.marked,
            });
        }
        match adv.mesh {
            Some(m) => mesh = m,
            None => break,
        }
        ell += 1;
    }
    hist.final_mesh = Some(mesh);
    Ok(hist)
}

/// Adaptive loop with exact Galerkin solves on every level.
pub fn run_exact(prob: &ProblemDef, mesh0: &Mesh, cfg: &RunConfig) -> Result<History> {
    exact_like(prob, mesh0, cfg, false)
}

/// Exact solves on a sequence of uniform refinements.
pub fn run_uniform(prob: &ProblemDef, mesh0: &Mesh, cfg: &RunConfig) -> Result<History> {
    exact_like(prob, mesh0, cfg, true)
}

/// Solver bookkeeping shared by the iterative loops.
struct IterativeState {
    solver: Option<SolverState>,
    prev_space: Option<Arc<Space>>,
}

impl IterativeState {
    /// Add the level to the solver and certify it; returns the time spent certifying.
    fn push(&mut self, cfg: &RunConfig, level: &LevelSetup, hist: &mut History) -> Result<f64> {
        match (&mut self.solver, &self.prev_space) {
            (Some(s), Some(prev)) => s.push_refinement(prev, &level.space, level.a_ff.clone())?,
            _ => self.solver = Some(SolverState::new(cfg.solver, level.a_ff.clone())?),
        }
        self.prev_space = Some(level.space.clone());
        let solver = self.solver.as_ref().expect("initialized");
        let t = Instant::now();
        let q = if cfg.certify_trials > 0 || hist.q_alg.is_empty() {
            solver.certify_contraction(cfg.certify_trials.max(1), cfg.seed.wrapping_add(hist.q_alg.len() as u64))?
        } else {
            *hist.q_alg.last().expect("nonempty")
        };
        if cfg.solver == SolverKind::LocalMultigrid && q > cfg.mg_ceiling {
            return Err(AfemError::Solver(format!(
                "certified contraction {q:.4} on level {} exceeds the ceiling {}",
                hist.q_alg.len(),
                cfg.mg_ceiling
            )));
        }
        hist.q_alg.push(q);
        Ok(secs(t))
    }
}

fn initial_iterate(
    level: &LevelSetup,
    prev: Option<&DiscreteFunction>,
) -> Result<DiscreteFunction> {
    let mut u = match prev {
        Some(p) => prolongate(p, &level.space)?,
        None => DiscreteFunction::zero(level.space.clone()),
    };
    // The discrete boundary data changes with the mesh.
    for &d in level.space.dirichlet_dofs() {
        u.coeffs[d] = level.lift[d];
    }
    Ok(u)
}

fn c_of(q: f64) -> f64 {
    if q >= 1.0 {
        f64::INFINITY
    } else {
        q / (1.0 - q)
    }
}

/// Adaptive loop with one contractive solver step per iteration, stopped by
/// `|||u^k - u^{k-1}||| <= lambda eta(u^k)`. Requires a symmetric problem.
pub fn run_single(prob: &ProblemDef, mesh0: &Mesh, cfg: &RunConfig) -> Result<History> {
    validate(cfg)?;
    if !prob.is_symmetric() {
        return Err(AfemError::UnsupportedForm(
            "the single-solver loop needs a symmetric problem; use the nested loop".into(),
        ));
    }
    let mut hist = History::new(Algorithm::Single);
    let mut mesh = Arc::new(mesh0.clone());
    let mut st = IterativeState { solver: None, prev_space: None };
    let mut prev: Option<DiscreteFunction> = None;
    let mut setup_time = 0.0;
    let mut ell = 0;
    loop {
        let t = Instant::now();
        let level = setup_level(mesh.clone(), prob, cfg.degree)?;
        setup_time += secs(t);
        let t = Instant::now();
        let t_cert = st.push(cfg, &level, &mut hist)?;
        setup_time += secs(t) - t_cert;
        let q = *hist.q_alg.last().expect("certified");
        let solver = st.solver.as_ref().expect("initialized");
        let rhs = level.rhs.as_ref().expect("linear");
        let exact = if cfg.verification { Some(solve_galerkin_exact(&level.space, prob)?) } else { None };
        let exact_f = exact.as_ref().map(|e| level.space.restrict_free(&e.coeffs));

        let mut u = initial_iterate(&level, prev.as_ref())?;
        let initial = u.clone();
        let mut x = level.space.restrict_free(&u.coeffs);
        let mut k = 0;
        let ind = loop {
            k += 1;
            if k > cfg.inner_cap {
                return Err(AfemError::IterationCap { ell, cap: cfg.inner_cap });
            }
            let t = Instant::now();
            let next = solver.step(rhs, &x);
            let inc = energy(&level.a_ff, &next, &x);
            x = next;
            level.space.scatter_free(&x, &mut u.coeffs);
            let t_solve = secs(t);
            let t = Instant::now();
            let ind = compute_indicators(&level.space, &u, prob)?;
            let t_estimate = secs(t);
            let eta = ind.total();
            let stop = outer_stop(inc, eta, cfg.lambda);
            let error = exact_f.as_ref().map(|e| energy(&level.a_ff, e, &x));
            hist.push(Record {
                ell,
                k: Some(k),
                n_elem: mesh.n_elements(),
                n_dof: level.space.n_free(),
                eta,
                increment: inc,
                outer_increment: inc,
                stop_outer: stop,
                t_solve,
                t_estimate,
                t_refine: std::mem::take(&mut setup_time),
                quasi_error: eta + c_of(q) * inc,
                error,
                true_quasi_error: error.map(|e| e + eta),
                ..Record::default()
            });
            if stop {
                break ind;
            }
        };
        let adv = advance(&mesh, &ind, Some(cfg.theta), ell, cfg.degree, &cfg.stop)?;
        let last = hist.records.last_mut().expect("pushed");
        last.t_mark = adv.t_mark;
        last.t_refine += adv.t_refine;
        if cfg.verification {
            hist.artifacts.push(LevelArtifact {
                space: level.space.clone(),
                initial,
                last: u.clone(),
                exact,
                indicators: ind,
                marked: adv.marked,
            });
        }
        prev = Some(u);
        match adv.mesh {
            Some(m) => mesh = m,
            None => break,
        }
        ell += 1;
    }
    hist.final_mesh = Some(mesh);
    Ok(hist)
}

/// Largest observed one-step ratio of the exact Zarantonello map on `level`,
/// measured from random starts against the exact discrete solution.
fn measure_zarantonello(prob: &ProblemDef, level: &LevelSetup, delta: f64, trials: usize, seed: u64) -> Result<f64> {
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};
    let exact = solve_galerkin_exact(&level.space, prob)?;
    let ef = level.space.restrict_free(&exact.coeffs);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let mut u = exact.clone();
        for &i in level.space.free_dofs() {
            u.coeffs[i] += rng.random::<f64>() * 2.0 - 1.0;
        }
        let rhs = zarantonello_rhs_with(prob, delta, &u, &level.load, &level.a_ff, level.b_full.as_ref())?;
        let phi = solve_direct(&level.a_ff, &rhs)?;
        let before = energy(&level.a_ff, &level.space.restrict_free(&u.coeffs), &ef);
        worst = worst.max(energy(&level.a_ff, &phi, &ef) / before);
    }
    Ok(worst)
}

/// Adaptive loop with an outer Zarantonello iteration whose SPD systems are
/// solved inexactly by the contractive solver.
pub fn run_nested(prob: &ProblemDef, mesh0: &Mesh, cfg: &RunConfig) -> Result<History> {
    validate(cfg)?;
    let zc = cfg.zarantonello;
    let mut hist = History::new(Algorithm::Nested);
    let mut mesh = Arc::new(mesh0.clone());
    let mut st = IterativeState { solver: None, prev_space: None };
    let mut prev: Option<DiscreteFunction> = None;
    let mut setup_time = 0.0;
    let mut ell = 0;
    loop {
        let t = Instant::now();
        let level = setup_level(mesh.clone(), prob, cfg.degree)?;
        setup_time += secs(t);
        if hist.q_sym.is_none() {
            let q = match &prob.nonlinearity {
                Some(n) => zarantonello_contraction_bound(n.alpha, n.lipschitz, zc.delta)?,
                None => measure_zarantonello(prob, &level, zc.delta, 8, cfg.seed)?,
            };
            hist.q_sym = Some(q);
        }
        let t = Instant::now();
        let t_cert = st.push(cfg, &level, &mut hist)?;
        setup_time += secs(t) - t_cert;
        let q_alg = *hist.q_alg.last().expect("certified");
        let c_alg = c_of(q_alg);
        let c_sym = c_of(hist.q_sym.expect("set"));
        let solver = st.solver.as_ref().expect("initialized");
        let exact = if cfg.verification { Some(solve_galerkin_exact(&level.space, prob)?) } else { None };
        let exact_f = exact.as_ref().map(|e| level.space.restrict_free(&e.coeffs));

        let mut u = initial_iterate(&level, prev.as_ref())?;
        let initial = u.clone();
        let mut k = 0;
        let ind = 'outer: loop {
            k += 1;
            if k > cfg.inner_cap {
                return Err(AfemError::IterationCap { ell, cap: cfg.inner_cap });
            }
            let t = Instant::now();
            let rhs = zarantonello_rhs_with(prob, zc.delta, &u, &level.load, &level.a_ff, level.b_full.as_ref())?;
            let mut rhs_time = secs(t);
            let outer_start = level.space.restrict_free(&u.coeffs);
            let phi_exact = if cfg.verification { Some(solve_direct(&level.a_ff, &rhs)?) } else { None };
            let mut w = outer_start.clone();
            let mut j = 0;
            loop {
                j += 1;
                if j > cfg.inner_cap {
                    return Err(AfemError::IterationCap { ell, cap: cfg.inner_cap });
                }
                let t = Instant::now();
                let next = solver.step(&rhs, &w);
                let inc = energy(&level.a_ff, &next, &w);
                w = next;
                level.space.scatter_free(&w, &mut u.coeffs);
                let outer_inc = energy(&level.a_ff, &w, &outer_start);
                let t_solve = secs(t) + std::mem::take(&mut rhs_time);
                let t = Instant::now();
                let ind = compute_indicators(&level.space, &u, prob)?;
                let t_estimate = secs(t);
                let eta = ind.total();
                let inner = inner_stop(inc, eta, outer_inc, &zc);
                let outer = inner && outer_stop(outer_inc, eta, zc.lambda_sym);
                let error = exact_f.as_ref().map(|e| energy(&level.a_ff, e, &w));
                let alg = phi_exact.as_ref().map(|p| energy(&level.a_ff, p, &w));
                hist.push(Record {
                    ell,
                    k: Some(k),
                    j: Some(j),
                    n_elem: mesh.n_elements(),
                    n_dof: level.space.n_free(),
                    eta,
                    increment: inc,
                    outer_increment: outer_inc,
                    stop_outer: outer,
                    stop_inner: inner,
                    t_solve,
                    t_estimate,
                    t_refine: std::mem::take(&mut setup_time),
                    quasi_error: eta + c_alg * inc + c_sym * (outer_inc + c_alg * inc),
                    error,
                    true_quasi_error: error.zip(alg).map(|(e, a)| e + a + eta),
                    ..Record::default()
                });
                if outer {
                    break 'outer ind;
                }
                if inner {
                    break;
                }
            }
        };
        let adv = advance(&mesh, &ind, Some(cfg.theta), ell, cfg.degree, &cfg.stop)?;
        let last = hist.records.last_mut().expect("pushed");
        last.t_mark = adv.t_mark;
        last.t_refine += adv.t_refine;
        if cfg.verification {
            hist.artifacts.push(LevelArtifact {
                space: level.space.clone(),
                initial,
                last: u.clone(),
                exact,
                indicators: ind,
                marked: adv.marked,
            });
        }
        prev = Some(u);
        match adv.mesh {
            Some(m) => mesh = m,
            None => break,
        }
        ell += 1;
    }
    hist.final_mesh = Some(mesh);
    Ok(hist)
}

/// One cell of a weighted-cost table.
#[derive(Clone, Debug, PartialEq)]
pub struct CostCell {
    /// Record at which the estimator first met the threshold.
    pub record: usize,
    /// `eta * cumulative wall time`.
    pub time_weighted: f64,
    /// `eta * cumulative element cost`.
    pub cost_weighted: f64,
}

/// Weighted cumulative cost for a `theta x lambda` grid of runs.
#[derive(Clone, Debug)]
pub struct CostTable {
    pub thetas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `cells[row][col]` for `thetas[row]`, `lambdas[col]`; `None` when the
    /// threshold was never reached.
    pub cells: Vec<Vec<Option<CostCell>>>,
}

/// Evaluate a history at the first record with `eta <= factor * eta_0`.
pub fn weighted_cost(history: &History, eta_stop_factor: f64) -> Option<CostCell> {
    let eta0 = history.records.first()?.eta;
    let times = history.cumulative_time();
    history.records.iter().enumerate().find(|(_, r)| r.eta <= eta_stop_factor * eta0).map(|(i, r)| CostCell {
        record: i,
        time_weighted: r.eta * times[i],
        cost_weighted: r.eta * r.cum_cost as f64,
    })
}

pub fn weighted_cost_table(runs: &[((f64, f64), &History)], eta_stop_factor: f64) -> CostTable {
    let mut thetas: Vec<f64> = Vec::new();
    let mut lambdas: Vec<f64> = Vec::new();
    for ((t, l), _) in runs {
        if !thetas.contains(t) {
            thetas.push(*t);
        }
        if !lambdas.contains(l) {
            lambdas.push(*l);
        }
    }
    thetas.sort_by(f64::total_cmp);
    lambdas.sort_by(f64::total_cmp);
    let mut cells = vec![vec![None; lambdas.len()]; thetas.len()];
    for ((t, l), h) in runs {
        let r = thetas.iter().position(|x| x == t).expect("collected");
        let c = lambdas.iter().position(|x| x == l).expect("collected");
        cells[r][c] = weighted_cost(h, eta_stop_factor);
    }
    CostTable { thetas, lambdas, cells }
}

impl CostTable {
    fn value(&self, r: usize, c: usize, by_time: bool) -> Option<f64> {
        self.cells[r][c].as_ref().map(|x| if by_time { x.time_weighted } else { x.cost_weighted })
    }

    fn argmin(values: impl Iterator<Item = (usize, Option<f64>)>) -> Option<usize> {
        values
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    /// Column of the smallest entry in every row.
    pub fn row_minima(&self, by_time: bool) -> Vec<Option<usize>> {
        (0..self.thetas.len())
            .map(|r| Self::argmin((0..self.lambdas.len()).map(|c| (c, self.value(r, c, by_time)))))
            .collect()
    }

    /// Row of the smallest entry in every column.
    pub fn column_minima(&self, by_time: bool) -> Vec<Option<usize>> {
        (0..self.lambdas.len())
            .map(|c| Self::argmin((0..self.thetas.len()).map(|r| (r, self.value(r, c, by_time)))))
            .collect()
    }

    /// CSV with one line per cell; `row_min`/`col_min` flag the minima of the
    /// cost-weighted variant.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,lambda,status,record,time_weighted,cost_weighted,row_min,col_min,time_row_min,time_col_min\n");
        let (rm, cm) = (self.row_minima(false), self.column_minima(false));
        let (trm, tcm) = (self.row_minima(true), self.column_minima(true));
        for (r, t) in self.thetas.iter().enumerate() {
            for (c, l) in self.lambdas.iter().enumerate() {
                let flags = [rm[r] == Some(c), cm[c] == Some(r), trm[r] == Some(c), tcm[c] == Some(r)].map(|b| b as u8);
                match &self.cells[r][c] {
                    Some(x) => {
                        let _ = writeln!(
                            s,
                            "{t},{l},complete,{},{:e},{:e},{},{},{},{}",
                            x.record, x.time_weighted, x.cost_weighted, flags[0], flags[1], flags[2], flags[3]
                        );
                    }
                    None => {
                        let _ = writeln!(s, "{t},{l},incomplete,,,,0,0,0,0");
                    }
                }
            }
        }
        s
    }
}

/// Operator action helper used by verification code: `<A u, v>` for all basis `v`.
pub fn operator_residual(space: &Arc<Space>, prob: &ProblemDef, u: &DiscreteFunction) -> Result<Vec<f64>> {
    let load = assemble_rhs(space, prob);
    let au = apply_operator(space, prob, &u.coeffs)?;
    Ok(space.free_dofs().iter().map(|&i| load[i] - au[i]).collect())
}
