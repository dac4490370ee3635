//! End-to-end problem runs: assemble the operator bundle for the chosen
//! backend, drive the time stepping, measure errors against the manufactured
//! solution, and evaluate interior probes.

use std::time::Instant;

use tdbem_core::assemble::Assembler;
use tdbem_core::contour::{build_contour, quadrature_count, Contour, StepSchedule};
use tdbem_core::gcq::{GcqSolution, GcqSystem};
use tdbem_core::geom::V3;
use tdbem_core::mesh::TriangleMesh;
use tdbem_core::operator::{OperatorConfig, OperatorStats};
use tdbem_core::rk::ButcherTableau;

use crate::config::{MeshSource, RunConfig};
use crate::errors::{l2_error_on_space, midpoint_coefficients};
use crate::interior::evaluate_interior;
use crate::problem::{smooth_pulse, smooth_pulse_flux, ProblemSetup};

pub struct Timings {
    /// operator-bundle construction ("matrix" phase)
    pub matrix_s: f64,
    /// time loop: history convolutions plus the solves
    pub stepping_s: f64,
}

pub struct RunArtifacts {
    pub mesh: TriangleMesh,
    pub setup: ProblemSetup,
    pub schedule: StepSchedule,
    pub contour: Contour,
    pub tableau: ButcherTableau,
    pub solution: GcqSolution,
    /// L_max of the flux unknown (all problems)
    pub lmax_flux: f64,
    /// L_max of the pressure unknown (mixed problem)
    pub lmax_pressure: Option<f64>,
    pub op_stats: Vec<(String, OperatorStats)>,
    pub timings: Timings,
    pub h: f64,
    pub dt: f64,
    pub n_q: usize,
    /// per interior probe: pressure at each step endpoint
    pub interior: Vec<(V3, Vec<f64>)>,
}

pub fn resolve_mesh(source: &MeshSource) -> Result<TriangleMesh, String> {
    match source {
        MeshSource::CubeLevel(l) => tdbem_core::mesh::unit_cube(*l).map_err(|e| e.to_string()),
        MeshSource::OffFile(p) => crate::off::load_mesh(p),
    }
}

pub fn step_count(cfg: &RunConfig, h: f64) -> usize {
    if cfg.n_steps > 0 {
        cfg.n_steps
    } else {
        let dt = cfg.dt_ratio * h / cfg.wave_speed;
        ((cfg.t_end / dt).round() as usize).max(2)
    }
}

pub fn operator_config(cfg: &RunConfig) -> OperatorConfig {
    OperatorConfig {
        backend: cfg.backend,
        eps_aca: cfg.eps_aca,
        eps: cfg.eps,
        b_min: cfg.b_min,
        eta: cfg.eta,
        fmm_levels: cfg.fmm_levels,
        fmm_order: cfg.fmm_order,
        fmm_quad_order: 6,
        r_max: cfg.r_max,
    }
}

pub fn execute(cfg: &RunConfig) -> Result<RunArtifacts, String> {
    let mesh = resolve_mesh(&cfg.mesh)?;
    let h = mesh.mesh_width();
    let asm = Assembler::new(&mesh, cfg.wave_speed).map_err(|e| e.to_string())?;
    let setup = ProblemSetup::new(&mesh, &asm, cfg.problem).map_err(|e| e.to_string())?;
    let tableau = ButcherTableau::radau_iia_2();
    let n = step_count(cfg, h);
    let schedule = StepSchedule::uniform(cfg.t_end, n).map_err(|e| e.to_string())?;
    let n_q = quadrature_count(n, tableau.stages);
    let contour = build_contour(&schedule, &tableau, n_q).map_err(|e| e.to_string())?;
    let eigen = tdbem_core::gcq::eigen_frequencies(&schedule, &tableau).map_err(|e| e.to_string())?;
    let opcfg = operator_config(cfg);

    let t0 = Instant::now();
    let (lhs, rhs) = setup
        .build_sides(&asm, &mesh, &contour, &eigen, &opcfg)
        .map_err(|e| e.to_string())?;
    let matrix_s = t0.elapsed().as_secs_f64();
    let mut op_stats = Vec::new();
    for (idx, b) in lhs.blocks.iter().enumerate() {
        op_stats.push((format!("lhs{}", idx), b.op.stats()));
    }
    for (idx, b) in rhs.blocks.iter().enumerate() {
        op_stats.push((format!("rhs{}", idx), b.op.stats()));
    }

    let sys = GcqSystem {
        lhs,
        rhs,
        tableau: tableau.clone(),
        contour: contour.clone(),
        schedule: schedule.clone(),
        solver_tol: cfg.effective_solver_tol(),
        max_iter: cfg.max_iter,
    };
    let x_star = V3::new(cfg.excitation[0], cfg.excitation[1], cfg.excitation[2]);
    let c = cfg.wave_speed;
    let data = {
        let mesh = &mesh;
        let setup = &setup;
        move |t: f64| setup.data_at(mesh, t, c, &x_star)
    };
    let t1 = Instant::now();
    let solution = sys.run(&data).map_err(|e| e.to_string())?;
    let stepping_s = t1.elapsed().as_secs_f64();

    // L_max at midpoints
    let dt = schedule.steps()[0];
    let n_p0u = setup.unknown_p0.len();
    let mut lmax_flux = 0.0f64;
    let mut lmax_pressure = if setup.unknown_p1.is_empty() { None } else { Some(0.0f64) };
    for n1 in 0..n {
        let t_mid = (n1 as f64 + 0.5) * dt;
        let coeff = midpoint_coefficients(&solution, &tableau, n1);
        let flux_err = l2_error_on_space(&mesh, &setup.unknown_p0, &coeff[..n_p0u], &|p, nrm| {
            smooth_pulse_flux(p, nrm, t_mid, c, &x_star)
        });
        lmax_flux = lmax_flux.max(flux_err);
        if let Some(lp) = lmax_pressure.as_mut() {
            let perr = l2_error_on_space(&mesh, &setup.unknown_p1, &coeff[n_p0u..], &|p, _| {
                smooth_pulse(p, t_mid, c, &x_star)
            });
            *lp = lp.max(perr);
        }
    }

    // interior probes through the representation formula
    let interior = if cfg.interior_probes.is_empty() {
        Vec::new()
    } else {
        let probes: Vec<V3> = cfg
            .interior_probes
            .iter()
            .map(|p| V3::new(p[0], p[1], p[2]))
            .collect();
        evaluate_interior(
            &mesh, &asm, &setup, &tableau, &contour, &schedule, &solution, &probes, c, &x_star,
        )
        .map_err(|e| e.to_string())?
    };

    Ok(RunArtifacts {
        mesh,
        setup,
        schedule,
        contour,
        tableau,
        solution,
        lmax_flux,
        lmax_pressure,
        op_stats,
        timings: Timings { matrix_s, stepping_s },
        h,
        dt,
        n_q,
        interior,
    })
}
