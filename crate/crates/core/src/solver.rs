//! Solution of the saddle-point system.

use std::time::{Duration, Instant};

use faer::linalg::solvers::{Solve, SolveCore};
use faer::sparse::Triplet;
use faer::{Mat, Side};

use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::linalg::{self, SparseMat};
use crate::space::DiscreteVelocity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverMode {
    /// Sparse LU of the full KKT matrix with iterative refinement.
    #[default]
    Direct,
    /// Block-preconditioned MINRES.
    Iterative,
}

/// How the pressure constant is removed when the system has no Neumann boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PressureGauge {
    /// Lagrange multiplier row exactly when the system asks for it.
    #[default]
    Auto,
    /// Fix the given pressure unknown to zero and shift to mean zero
    /// afterwards. Ignored when a traction boundary already fixes the
    /// pressure level.
    Pin(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub mode: SolverMode,
    pub gauge: PressureGauge,
    /// Required relative KKT residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub stagnation_window: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: SolverMode::Direct,
            gauge: PressureGauge::Auto,
            tolerance: 1e-10,
            max_iterations: 10_000,
            stagnation_window: 50,
        }
    }
}

impl SolveOptions {
    pub fn with_mode(mode: SolverMode) -> Self {
        Self { mode, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Free velocity unknowns.
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// `||K x - rhs|| / ||rhs||` of the system that was solved.
    pub relative_residual: f64,
    /// Krylov iterations, or refinement steps for the direct path.
    pub iterations: usize,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn discrete_velocity(&self, system: &SaddleSystem) -> DiscreteVelocity {
        DiscreteVelocity { free: self.velocity.clone(), fixed: system.fixed.clone() }
    }
}

/// The constant function one in the pressure unknowns, recovered from the
/// mass blocks: `M e = c` blockwise.
fn pressure_constant(system: &SaddleSystem) -> Vec<f64> {
    let mut out = Vec::with_capacity(system.n_p());
    let mut offset = 0;
    for m in &system.pressure_mass {
        let n = m.nrows();
        let rhs = Mat::from_fn(n, 1, |i, _| system.mean_row[offset + i]);
        let sol = m.llt(Side::Lower).map(|l| l.solve(&rhs)).unwrap_or_else(|_| m.partial_piv_lu().solve(&rhs));
        out.extend((0..n).map(|i| sol[(i, 0)]));
        offset += n;
    }
    out
}

struct Kkt {
    matrix: SparseMat,
    rhs: Vec<f64>,
}

fn build_kkt(system: &SaddleSystem, multiplier: bool, pin: Option<usize>) -> Result<Kkt> {
    let (nu, np) = (system.n_u(), system.n_p());
    let n = nu + np + usize::from(multiplier);
    let mut trip = Vec::with_capacity(system.a.compute_nnz() + 2 * system.b.compute_nnz() + 2 * np + 1);
    // `skip` drops the entries of one row of `m` (the pinned pressure of `B`)
    let push_sparse = |m: &SparseMat, roff: usize, coff: usize, transpose: bool, skip: Option<usize>, trip: &mut Vec<Triplet<usize, usize, f64>>| {
        let (cp, ri, v) = (m.col_ptr(), m.row_idx(), m.val());
        for j in 0..m.ncols() {
            for p in cp[j]..cp[j + 1] {
                if skip == Some(ri[p]) {
                    continue;
                }
                let (r, c) = if transpose { (j, ri[p]) } else { (ri[p], j) };
                trip.push(Triplet::new(r + roff, c + coff, v[p]));
            }
        }
    };
    push_sparse(&system.a, 0, 0, false, None, &mut trip);
    push_sparse(&system.b, nu, 0, false, pin, &mut trip);
    push_sparse(&system.b, 0, nu, true, pin, &mut trip);
    if multiplier {
        for (j, &c) in system.mean_row.iter().enumerate() {
            trip.push(Triplet::new(nu + np, nu + j, c));
            trip.push(Triplet::new(nu + j, nu + np, c));
        }
    }
    if let Some(pin) = pin {
        trip.push(Triplet::new(nu + pin, nu + pin, 1.0));
    }
    let matrix = linalg::sparse_from_triplets(n, n, &trip)?;
    let mut rhs = Vec::with_capacity(n);
    rhs.extend_from_slice(&system.f);
    rhs.extend_from_slice(&system.g);
    if let Some(pin) = pin {
        rhs[nu + pin] = 0.0;
    }
    if multiplier {
        rhs.push(0.0);
    }
    Ok(Kkt { matrix, rhs })
}

fn residual(k: &SparseMat, x: &[f64], rhs: &[f64]) -> Vec<f64> {
    let kx = linalg::spmv(k, x);
    rhs.iter().zip(&kx).map(|(b, y)| b - y).collect()
}

fn col(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Solves the saddle-point system. With the mean constraint active the
/// returned pressure has zero mean.
pub fn solve(system: &SaddleSystem, options: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let (nu, np) = (system.n_u(), system.n_p());
    if system.mean_row.len() != np || system.f.len() != nu || system.g.len() != np {
        return Err(Error::DimensionMismatch { expected: np, found: system.mean_row.len() });
    }
    let rhs_norm = linalg::norm2(&system.f).hypot(linalg::norm2(&system.g));
    if rhs_norm == 0.0 {
        return Ok(SolveReport {
            velocity: vec![0.0; nu],
            pressure: vec![0.0; np],
            relative_residual: 0.0,
            iterations: 0,
            wall_time: start.elapsed(),
        });
    }
    let (mut velocity, mut pressure, iterations) = match options.mode {
        SolverMode::Direct => solve_direct(system, options)?,
        SolverMode::Iterative => solve_minres(system, options)?,
    };
    if system.mean_constraint {
        let one = pressure_constant(system);
        let shift = linalg::dot(&system.mean_row, &pressure) / linalg::dot(&system.mean_row, &one);
        for (p, o) in pressure.iter_mut().zip(&one) {
            *p -= shift * o;
        }
    }
    // residual of the unconstrained saddle-point equations
    let plain = build_kkt(system, false, None)?;
    let x: Vec<f64> = velocity.iter().chain(&pressure).copied().collect();
    let r = residual(&plain.matrix, &x, &plain.rhs);
    let relative_residual = linalg::norm2(&r) / rhs_norm;
    if !relative_residual.is_finite() || relative_residual > options.tolerance {
        velocity.clear();
        return Err(Error::Solver(format!(
            "relative KKT residual {relative_residual:e} exceeds {:e} (singular or rank-deficient system?)",
            options.tolerance
        )));
    }
    Ok(SolveReport { velocity, pressure, relative_residual, iterations, wall_time: start.elapsed() })
}

fn solve_direct(system: &SaddleSystem, options: &SolveOptions) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (nu, np) = (system.n_u(), system.n_p());
    let (multiplier, pin) = match options.gauge {
        _ if !system.mean_constraint => (false, None),
        PressureGauge::Auto => (true, None),
        PressureGauge::Pin(i) if i < np => {
            let one = pressure_constant(system);
            let scale = one.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if one[i].abs() <= 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "pressure unknown {i} does not see constants and cannot fix the gauge"
                )));
            }
            (false, Some(i))
        }
        PressureGauge::Pin(i) => {
            return Err(Error::InvalidArgument(format!("pinned pressure {i} out of range")))
        }
    };
    let kkt = build_kkt(system, multiplier, pin)?;
    let lu = kkt
        .matrix
        .sp_lu()
        .map_err(|e| Error::Solver(format!("sparse LU factorization failed: {e:?}")))?;
    let rhs_norm = linalg::norm2(&kkt.rhs);
    let mut x = vec![0.0; kkt.rhs.len()];
    let mut r = kkt.rhs.clone();
    let mut best = f64::INFINITY;
    let mut steps = 0;
    for _ in 0..8 {
        let mut dx = col(&r);
        lu.solve_in_place_with_conj(faer::Conj::No, dx.as_mut());
        let trial: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + dx[(i, 0)]).collect();
        let tr = residual(&kkt.matrix, &trial, &kkt.rhs);
        let rn = linalg::norm2(&tr) / rhs_norm;
        if !(rn < best) {
            break;
        }
        x = trial;
        r = tr;
        best = rn;
        steps += 1;
        if rn < 1e-15 {
            break;
        }
    }
    if !best.is_finite() {
        return Err(Error::Solver("sparse LU produced a non-finite solution (singular system)".into()));
    }
    Ok((x[..nu].to_vec(), x[nu..nu + np].to_vec(), steps))
}

/// Preconditioned MINRES on `[A B^T; B 0]` with `diag(A, M_p / mu)`.
fn solve_minres(system: &SaddleSystem, options: &SolveOptions) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (nu, np) = (system.n_u(), system.n_p());
    let kkt = build_kkt(system, false, None)?;
    let llt = system
        .a
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Solver(format!("viscous block is not positive definite: {e:?}")))?;
    let mass: Vec<_> = system
        .pressure_mass
        .iter()
        .map(|m| m.llt(Side::Lower).map_err(|e| Error::Solver(format!("pressure mass: {e:?}"))))
        .collect::<Result<_>>()?;
    let precond = |r: &[f64]| -> Vec<f64> {
        let mut top = col(&r[..nu]);
        llt.solve_in_place_with_conj(faer::Conj::No, top.as_mut());
        let mut out: Vec<f64> = (0..nu).map(|i| top[(i, 0)]).collect();
        let mut off = nu;
        for l in &mass {
            let n = l.L().nrows();
            let mut blk = col(&r[off..off + n]);
            l.solve_in_place_with_conj(faer::Conj::No, blk.as_mut());
            out.extend((0..n).map(|i| system.mu * blk[(i, 0)]));
            off += n;
        }
        out
    };
    let b = &kkt.rhs;
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.clone();
    let mut y = precond(&r1);
    let beta1 = linalg::dot(&r1, &y).sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta, mut dbar, mut epsln, mut phibar) = (0.0, beta1, 0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();
    let target = 0.1 * options.tolerance;
    for itn in 1..=options.max_iterations {
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|t| s * t).collect();
        y = linalg::spmv(&kkt.matrix, &v);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = linalg::dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        r1 = std::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        beta = linalg::dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        let rel = phibar / beta1;
        history.push(rel);
        if rel <= target || beta == 0.0 {
            let r = residual(&kkt.matrix, &x, b);
            if linalg::norm2(&r) / linalg::norm2(b) <= options.tolerance {
                return Ok((x[..nu].to_vec(), x[nu..nu + np].to_vec(), itn));
            }
        }
        let win = options.stagnation_window;
        if history.len() > win && history[history.len() - 1] >= 0.999 * history[history.len() - 1 - win] {
            return Err(Error::Solver(format!(
                "MINRES stagnated at relative residual {rel:e} after {itn} iterations"
            )));
        }
    }
    Err(Error::Solver(format!(
        "MINRES did not converge within {} iterations",
        options.max_iterations
    )))
}
