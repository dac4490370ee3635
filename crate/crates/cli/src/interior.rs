//! Interior field evaluation through the representation formula
//! u = V*q - K*u with the same time-stepping machinery; probe rows stay
//! dense.

use num_complex::Complex64;
use tdbem_core::assemble::Assembler;
use tdbem_core::contour::{Contour, StepSchedule};
use tdbem_core::gcq::{BlockOp, Coupling, GcqSolution, GcqSystem, SystemSide};
use tdbem_core::geom::V3;
use tdbem_core::linalg::CMat;
use tdbem_core::mesh::TriangleMesh;
use tdbem_core::operator::{build_operator, KernelKind, OperatorConfig, OperatorGeometry};
use tdbem_core::rk::ButcherTableau;
use tdbem_core::{Error, Result};

use crate::problem::{smooth_pulse, ProblemSetup};

/// Pressure history at interior points: one value per step endpoint per
/// probe. Densities are replayed from the solved traces plus the given data.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_interior(
    mesh: &TriangleMesh,
    asm: &Assembler<'_>,
    setup: &ProblemSetup,
    tableau: &ButcherTableau,
    contour: &Contour,
    schedule: &StepSchedule,
    solution: &GcqSolution,
    probes: &[V3],
    c: f64,
    x_star: &V3,
) -> Result<Vec<(V3, Vec<f64>)>> {
    let h = mesh.mesh_width();
    for p in probes {
        let min_dist = (0..mesh.n_triangles())
            .map(|e| mesh.centroid(e).dist(p))
            .fold(f64::INFINITY, f64::min);
        if min_dist <= 0.5 * h {
            return Err(Error::Invalid("interior probe too close to the surface"));
        }
    }
    let eigen = tdbem_core::gcq::eigen_frequencies(schedule, tableau)?;
    let cfg = OperatorConfig::dense();
    // density layout: [unknowns | data] = [q_D | u_N | g_D | g_N]
    let n_u = setup.n_unknown;
    let n_p0u = setup.unknown_p0.len();
    let n_p1d = setup.data_p1.len();
    let mut blocks = Vec::new();
    if !setup.unknown_p0.is_empty() {
        let geo = OperatorGeometry::new(asm, probes, &setup.unknown_p0, KernelKind::SingleLayer)?;
        blocks.push(BlockOp {
            op: build_operator(&geo, &contour.nodes, &eigen, &cfg)?,
            row_offset: 0,
            col_offset: 0,
            scale: 1.0,
        });
    }
    if !setup.unknown_p1.is_empty() {
        let geo = OperatorGeometry::new(asm, probes, &setup.unknown_p1, KernelKind::DoubleLayer)?;
        blocks.push(BlockOp {
            op: build_operator(&geo, &contour.nodes, &eigen, &cfg)?,
            row_offset: 0,
            col_offset: n_p0u,
            scale: -1.0,
        });
    }
    if !setup.data_p1.is_empty() {
        let geo = OperatorGeometry::new(asm, probes, &setup.data_p1, KernelKind::DoubleLayer)?;
        blocks.push(BlockOp {
            op: build_operator(&geo, &contour.nodes, &eigen, &cfg)?,
            row_offset: 0,
            col_offset: n_u,
            scale: -1.0,
        });
    }
    if !setup.data_p0.is_empty() {
        let geo = OperatorGeometry::new(asm, probes, &setup.data_p0, KernelKind::SingleLayer)?;
        blocks.push(BlockOp {
            op: build_operator(&geo, &contour.nodes, &eigen, &cfg)?,
            row_offset: 0,
            col_offset: n_u + n_p1d,
            scale: 1.0,
        });
    }
    let side = SystemSide {
        blocks,
        coupling: Coupling::default(),
        nrows: probes.len(),
        ncols: n_u + setup.n_data,
    };
    let m = tableau.stages;
    let dt = schedule.steps()[0];
    let density = |n1: usize| -> CMat {
        CMat::from_fn(side.ncols, m, |i, j| {
            if i < n_u {
                solution.stages[n1].get(i, j)
            } else {
                let t = (n1 as f64 + tableau.c[j]) * dt;
                let vals = setup.data_at(mesh, t, c, x_star);
                Complex64::new(vals[i - n_u], 0.0)
            }
        })
    };
    let series = GcqSystem::run_forward(&side, tableau, contour, schedule, &density)?;
    let mut out = Vec::with_capacity(probes.len());
    for (pi, p) in probes.iter().enumerate() {
        let hist: Vec<f64> = series.iter().map(|f| f.get(pi, m - 1).re).collect();
        out.push((*p, hist));
    }
    Ok(out)
}

/// Analytic interior pressure of the manufactured problem (the pulse field).
pub fn exact_interior(p: &V3, t: f64, c: f64, x_star: &V3) -> f64 {
    smooth_pulse(p, t, c, x_star)
}
