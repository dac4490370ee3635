//! Generalized convolution quadrature time stepping: per-node history
//! recursion, the per-step matrix-argument system solve, the right-hand-side
//! history convolution, and the BiCGstab linear solver.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // f64 math through libm in no_std builds
use num_traits::Float;

use crate::contour::{Contour, StepSchedule};
use crate::error::{Error, Result};
use crate::linalg::{vec_dot, vec_norm, CMat, Lu};
use crate::operator::{freq_key, FreqOperator};
use crate::rk::{quantize_dt, ButcherTableau, StageSpectrum};

/// Unpreconditioned BiCGstab for complex systems given the operator action.
pub struct SolveReport {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

pub fn bicgstab(
    apply: &mut dyn FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    rhs: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain("solver tolerance must be positive"));
    }
    let n = rhs.len();
    let bnorm = vec_norm(rhs);
    if bnorm == 0.0 {
        return Ok(SolveReport { x: vec![Complex64::new(0.0, 0.0); n], iterations: 0, residual: 0.0 });
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut x = vec![zero; n];
    let mut r: Vec<Complex64> = rhs.to_vec();
    let mut rhat = r.clone();
    let mut rho = one;
    let mut alpha = one;
    let mut omega = one;
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    let mut restarted = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let rho_new = vec_dot(&rhat, &r);
        if rho_new.norm() < 1e-30 * bnorm * bnorm {
            if restarted {
                return Err(Error::Convergence("BiCGstab breakdown after restart"));
            }
            // restart with a fresh shadow vector once
            restarted = true;
            rhat = r.clone();
            for (k, z) in rhat.iter_mut().enumerate() {
                *z += Complex64::new(0.5 + (k % 7) as f64 * 0.1, 0.25 - (k % 3) as f64 * 0.05);
            }
            rho = one;
            alpha = one;
            omega = one;
            for z in v.iter_mut() {
                *z = zero;
            }
            for z in p.iter_mut() {
                *z = zero;
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = apply(&p)?;
        let denom = vec_dot(&rhat, &v);
        if denom.norm() < 1e-300 {
            return Err(Error::Convergence("BiCGstab breakdown (r^ . v = 0)"));
        }
        alpha = rho / denom;
        let s: Vec<Complex64> = r.iter().zip(v.iter()).map(|(ri, vi)| ri - alpha * vi).collect();
        if vec_norm(&s) <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok(SolveReport { x, iterations, residual: vec_norm(&s) / bnorm });
        }
        let t = apply(&s)?;
        let tt = vec_dot(&t, &t);
        if tt.norm() < 1e-300 {
            return Err(Error::Convergence("BiCGstab breakdown (t = 0)"));
        }
        omega = vec_dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        let res = vec_norm(&r) / bnorm;
        if res <= tol {
            return Ok(SolveReport { x, iterations, residual: res });
        }
    }
    Err(Error::Convergence("BiCGstab reached the iteration limit"))
}

/// One block of a system side: an operator acting from a column range of the
/// side's density vector into a row range, with a sign.
pub struct BlockOp {
    pub op: FreqOperator,
    pub row_offset: usize,
    pub col_offset: usize,
    pub scale: f64,
}

/// Frequency-independent sparse coupling (the integral-free term entries).
#[derive(Debug, Clone, Default)]
pub struct Coupling {
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    pub fn apply_acc(&self, x: &[Complex64], y: &mut [Complex64]) {
        for &(i, j, v) in &self.entries {
            y[i] += x[j] * v;
        }
    }
}

/// Row-space operator family acting on one density vector (either the
/// unknowns or the given data): the convolution side of the block system.
pub struct SystemSide {
    pub blocks: Vec<BlockOp>,
    /// instantaneous coupling (integral-free term); enters the local
    /// matrix-argument action only, never the history sums
    pub coupling: Coupling,
    pub nrows: usize,
    pub ncols: usize,
}

impl SystemSide {
    pub fn apply_eigen(&self, key: u64, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.ncols {
            return Err(Error::Dimension("system side length mismatch"));
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        for b in &self.blocks {
            let xs = &x[b.col_offset..b.col_offset + b.op.ncols()];
            let yb = b.op.apply_eigen(key, xs)?;
            for (i, v) in yb.iter().enumerate() {
                y[b.row_offset + i] += v * b.scale;
            }
        }
        self.coupling.apply_acc(x, &mut y);
        Ok(y)
    }

    /// Convolution term sum over stored contour representatives: returns the
    /// complex half-sum, stage columns laid out as an nrows x m matrix.
    /// weights are (y_l, v_l) with w_l = y_l (x) v_l.
    pub fn convolve(&self, weights: &[(Vec<Complex64>, Vec<Complex64>)], stages: usize) -> Result<CMat> {
        let mut out = CMat::zeros(self.nrows, stages);
        let mut w_stage: Vec<Vec<Complex64>> = Vec::new();
        for b in &self.blocks {
            let ncols = b.op.ncols();
            for j in 0..stages {
                w_stage.clear();
                for (y_l, v_l) in weights {
                    let vj = v_l[j];
                    w_stage.push(
                        y_l[b.col_offset..b.col_offset + ncols]
                            .iter()
                            .map(|z| z * vj)
                            .collect(),
                    );
                }
                let yb = b.op.convolve(&w_stage)?;
                for (i, v) in yb.iter().enumerate() {
                    let cur = out.get(b.row_offset + i, j);
                    out.set(b.row_offset + i, j, cur + v * b.scale);
                }
            }
        }
        Ok(out)
    }
}

/// Histories x_{n-1}(s_l) of one density vector at the representative nodes;
/// stage-major layout (stage * dim + row).
pub struct TimeState {
    pub hist: Vec<Vec<Complex64>>,
    pub dim: usize,
    pub stages: usize,
}

impl TimeState {
    pub fn new(n_nodes: usize, dim: usize, stages: usize) -> Self {
        TimeState {
            hist: vec![vec![Complex64::new(0.0, 0.0); dim * stages]; n_nodes],
            dim,
            stages,
        }
    }

    /// x_{n-1}(s_l) = (I - dt s A)^{-1} [ (b^T A^{-1} x_{n-2}(s_l)) 1
    ///                                    + dt A g_{n-1} ]  per node.
    pub fn update(
        &mut self,
        contour: &Contour,
        tableau: &ButcherTableau,
        dt_prev: f64,
        stage_data: &CMat, // dim x stages, step n-1 values
    ) -> Result<()> {
        let m = self.stages;
        let dim = self.dim;
        let bta = tableau.bt_a_inv()?;
        for (l, s) in contour.nodes.iter().enumerate() {
            // factor (I - dt s A) once per node
            let sys = CMat::from_fn(m, m, |i, j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                Complex64::new(delta, 0.0) - s * dt_prev * tableau.a[i][j]
            });
            let lu = Lu::factor(&sys)
                .map_err(|_| Error::Singular("I - dt s A singular (A-stability violated)"))?;
            let h = &mut self.hist[l];
            let mut rhs = vec![Complex64::new(0.0, 0.0); m];
            for row in 0..dim {
                let mut dot = Complex64::new(0.0, 0.0);
                for (i, b) in bta.iter().enumerate() {
                    dot += h[i * dim + row] * *b;
                }
                for (i, r) in rhs.iter_mut().enumerate() {
                    let mut acc = dot;
                    for j in 0..m {
                        acc += stage_data.get(row, j) * (dt_prev * tableau.a[i][j]);
                    }
                    *r = acc;
                }
                let xi = lu.solve(&rhs);
                for (i, v) in xi.iter().enumerate() {
                    h[i * dim + row] = *v;
                }
            }
        }
        Ok(())
    }

    /// Weight factors of the history convolution at step n:
    /// y_l = w_l (b^T A^{-1} x_{n-1}(s_l)) and v_l = (I - dt_n s_l A)^{-1} 1.
    pub fn rhs_weights(
        &self,
        contour: &Contour,
        tableau: &ButcherTableau,
        dt_n: f64,
    ) -> Result<Vec<(Vec<Complex64>, Vec<Complex64>)>> {
        let m = self.stages;
        let dim = self.dim;
        let bta = tableau.bt_a_inv()?;
        let mut out = Vec::with_capacity(contour.nodes.len());
        for (l, s) in contour.nodes.iter().enumerate() {
            let sys = CMat::from_fn(m, m, |i, j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                Complex64::new(delta, 0.0) - s * dt_n * tableau.a[i][j]
            });
            let lu = Lu::factor(&sys)
                .map_err(|_| Error::Singular("I - dt s A singular (A-stability violated)"))?;
            let ones = vec![Complex64::new(1.0, 0.0); m];
            let v_l = lu.solve(&ones);
            let h = &self.hist[l];
            let w = contour.weights[l];
            let y_l: Vec<Complex64> = (0..dim)
                .map(|row| {
                    let mut dot = Complex64::new(0.0, 0.0);
                    for (i, b) in bta.iter().enumerate() {
                        dot += h[i * dim + row] * *b;
                    }
                    dot * w
                })
                .collect();
            out.push((y_l, v_l));
        }
        Ok(out)
    }
}

/// The time-stepping system: left side applied to the unknowns, right side
/// to the given data.
pub struct GcqSystem {
    pub lhs: SystemSide,
    pub rhs: SystemSide,
    pub tableau: ButcherTableau,
    pub contour: Contour,
    pub schedule: StepSchedule,
    pub solver_tol: f64,
    pub max_iter: usize,
}

/// Eigenfrequencies of (dt A)^{-1} for every distinct step size; the
/// operators must be prepared at exactly these.
pub fn eigen_frequencies(schedule: &StepSchedule, tableau: &ButcherTableau) -> Result<Vec<Complex64>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for &dt in schedule.steps() {
        let key = quantize_dt(dt);
        if seen.contains_key(&key) {
            continue;
        }
        let sp = crate::rk::stage_spectrum(tableau, dt)?;
        for mu in &sp.mu {
            out.push(*mu);
        }
        seen.insert(key, ());
    }
    Ok(out)
}

/// Solution stages per step (dim x m each); the physical trace at t_n is the
/// last stage column.
pub struct GcqSolution {
    pub stages: Vec<CMat>,
    pub solver_iterations: Vec<usize>,
}

impl GcqSolution {
    pub fn trace_at(&self, n: usize) -> Vec<f64> {
        let m = &self.stages[n];
        (0..m.nrows).map(|i| m.get(i, m.ncols - 1).re).collect()
    }
}

impl GcqSystem {
    fn spectra(&self) -> Result<BTreeMap<u64, StageSpectrum>> {
        let mut map = BTreeMap::new();
        for &dt in self.schedule.steps() {
            let key = quantize_dt(dt);
            map.entry(key)
                .or_insert(crate::rk::stage_spectrum(&self.tableau, dt)?);
        }
        Ok(map)
    }

    /// Apply a side's matrix-argument operator B((dt A)^{-1}) to stage
    /// columns X via the stage spectrum.
    fn matrix_arg_apply(&self, side: &SystemSide, sp: &StageSpectrum, x: &CMat) -> Result<CMat> {
        let m = self.tableau.stages;
        // U = X T^{-T}
        let mut out = CMat::zeros(side.nrows, m);
        for alpha in 0..m {
            let mut u = vec![Complex64::new(0.0, 0.0); x.nrows];
            for b in 0..m {
                let t = sp.t_inv.get(alpha, b);
                for (i, z) in u.iter_mut().enumerate() {
                    *z += x.get(i, b) * t;
                }
            }
            let v = side.apply_eigen(freq_key(sp.mu[alpha]), &u)?;
            for b in 0..m {
                let t = sp.t.get(b, alpha);
                for (i, z) in v.iter().enumerate() {
                    let cur = out.get(i, b);
                    out.set(i, b, cur + z * t);
                }
            }
        }
        Ok(out)
    }

    /// Solve LHS((dt A)^{-1}) X = R for the stage columns X by per-eigenvalue
    /// BiCGstab; conjugate eigenvalue pairs reuse one solve when R is real.
    fn matrix_arg_solve(&self, sp: &StageSpectrum, r: &CMat, iters: &mut usize) -> Result<CMat> {
        let m = self.tableau.stages;
        let n = r.nrows;
        let r_real = r.data.iter().all(|z| z.im.abs() <= 1e-10 * (1.0 + z.re.abs()));
        let mut solved: Vec<Option<Vec<Complex64>>> = vec![None; m];
        for alpha in 0..m {
            if solved[alpha].is_some() {
                continue;
            }
            let mut rhs = vec![Complex64::new(0.0, 0.0); n];
            for b in 0..m {
                let t = sp.t_inv.get(alpha, b);
                for (i, z) in rhs.iter_mut().enumerate() {
                    *z += r.get(i, b) * t;
                }
            }
            let key = freq_key(sp.mu[alpha]);
            let mut apply = |x: &[Complex64]| self.lhs.apply_eigen(key, x);
            let rep = bicgstab(&mut apply, &rhs, self.solver_tol, self.max_iter)?;
            *iters += rep.iterations;
            // a conjugate partner reuses the solution when the data is real
            if r_real {
                for beta in alpha + 1..m {
                    if (sp.mu[beta] - sp.mu[alpha].conj()).norm() < 1e-12 * sp.mu[alpha].norm() {
                        solved[beta] = Some(rep.x.iter().map(|z| z.conj()).collect());
                    }
                }
            }
            solved[alpha] = Some(rep.x);
        }
        let mut x = CMat::zeros(n, m);
        for b in 0..m {
            for (alpha, sol) in solved.iter().enumerate() {
                let t = sp.t.get(b, alpha);
                for (i, z) in sol.as_ref().unwrap().iter().enumerate() {
                    let cur = x.get(i, b);
                    x.set(i, b, cur + z * t);
                }
            }
        }
        Ok(x)
    }

    /// Run the time loop. `data` yields the given-density vector at an
    /// arbitrary time; returns the unknown stages per step.
    pub fn run(&self, data: &dyn Fn(f64) -> Vec<f64>) -> Result<GcqSolution> {
        let m = self.tableau.stages;
        let n_unknown = self.lhs.ncols;
        let n_data = self.rhs.ncols;
        if self.lhs.nrows != n_unknown || self.rhs.nrows != n_unknown {
            return Err(Error::Dimension("square system required"));
        }
        let spectra = self.spectra()?;
        let n_steps = self.schedule.len();
        let steps = self.schedule.steps();
        let mut t_prev = 0.0;
        let mut state_unknown = TimeState::new(self.contour.n_half(), n_unknown, m);
        let mut state_data = TimeState::new(self.contour.n_half(), n_data, m);
        let mut solution = GcqSolution { stages: Vec::with_capacity(n_steps), solver_iterations: Vec::new() };
        let mut data_stages_prev: Option<CMat> = None;
        for n1 in 0..n_steps {
            let dt = steps[n1];
            let sp = &spectra[&quantize_dt(dt)];
            // stage data of this step
            let mut g = CMat::zeros(n_data, m);
            for (j, c) in self.tableau.c.iter().enumerate() {
                let vals = data(t_prev + c * dt);
                if vals.len() != n_data {
                    return Err(Error::Dimension("data vector length mismatch"));
                }
                for (i, v) in vals.iter().enumerate() {
                    g.set(i, j, Complex64::new(*v, 0.0));
                }
            }
            // histories advance with the previous step's values
            if n1 >= 1 {
                let dt_prev = steps[n1 - 1];
                state_data.update(&self.contour, &self.tableau, dt_prev, data_stages_prev.as_ref().unwrap())?;
                state_unknown.update(&self.contour, &self.tableau, dt_prev, &solution.stages[n1 - 1])?;
            }
            // right-hand side: local data term plus history convolutions
            let mut rhs_total = self.matrix_arg_apply(&self.rhs, sp, &g)?;
            if n1 >= 1 {
                let w_data = state_data.rhs_weights(&self.contour, &self.tableau, dt)?;
                let conv_data = self.rhs.convolve(&w_data, m)?;
                let w_unknown = state_unknown.rhs_weights(&self.contour, &self.tableau, dt)?;
                let conv_unknown = self.lhs.convolve(&w_unknown, m)?;
                // conjugate halves double the real part
                for i in 0..rhs_total.nrows {
                    for j in 0..m {
                        let add = 2.0 * (conv_data.get(i, j) - conv_unknown.get(i, j)).re;
                        let cur = rhs_total.get(i, j);
                        rhs_total.set(i, j, cur + add);
                    }
                }
            }
            let mut iters = 0usize;
            let x = self.matrix_arg_solve(sp, &rhs_total, &mut iters)?;
            solution.solver_iterations.push(iters);
            solution.stages.push(x);
            data_stages_prev = Some(g);
            t_prev += dt;
        }
        Ok(solution)
    }

    /// Forward evaluation: both densities known, compute the side's
    /// convolution values per step (used for interior evaluation).
    pub fn run_forward(
        side: &SystemSide,
        tableau: &ButcherTableau,
        contour: &Contour,
        schedule: &StepSchedule,
        density: &dyn Fn(usize) -> CMat, // stage values of the density at step n
    ) -> Result<Vec<CMat>> {
        let m = tableau.stages;
        let spectra = {
            let mut map = BTreeMap::new();
            for &dt in schedule.steps() {
                let key = quantize_dt(dt);
                if !map.contains_key(&key) {
                    map.insert(key, crate::rk::stage_spectrum(tableau, dt)?);
                }
            }
            map
        };
        let mut state = TimeState::new(contour.n_half(), side.ncols, m);
        let mut out = Vec::with_capacity(schedule.len());
        let steps = schedule.steps();
        for n1 in 0..steps.len() {
            let dt = steps[n1];
            let sp = &spectra[&quantize_dt(dt)];
            let g = density(n1);
            if n1 >= 1 {
                state.update(contour, tableau, steps[n1 - 1], &density(n1 - 1))?;
            }
            // local part via the stage spectrum
            let m_arg = {
                let mut u_out = CMat::zeros(side.nrows, m);
                for alpha in 0..m {
                    let mut u = vec![Complex64::new(0.0, 0.0); side.ncols];
                    for b in 0..m {
                        let t = sp.t_inv.get(alpha, b);
                        for (i, z) in u.iter_mut().enumerate() {
                            *z += g.get(i, b) * t;
                        }
                    }
                    let v = side.apply_eigen(freq_key(sp.mu[alpha]), &u)?;
                    for b in 0..m {
                        let t = sp.t.get(b, alpha);
                        for (i, z) in v.iter().enumerate() {
                            let cur = u_out.get(i, b);
                            u_out.set(i, b, cur + z * t);
                        }
                    }
                }
                u_out
            };
            let mut f = m_arg;
            if n1 >= 1 {
                let w = state.rhs_weights(contour, tableau, dt)?;
                let conv = side.convolve(&w, m)?;
                for i in 0..f.nrows {
                    for j in 0..m {
                        let cur = f.get(i, j);
                        f.set(i, j, cur + 2.0 * conv.get(i, j).re);
                    }
                }
            }
            out.push(f);
        }
        Ok(out)
    }
}
