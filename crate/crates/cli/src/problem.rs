//! Problem definitions on a closed surface: the smooth-pulse load radiating
//! from an exterior excitation point serves as manufactured Cauchy data for
//! the Dirichlet and mixed formulations.

use num_complex::Complex64;
use tdbem_core::assemble::Assembler;
use tdbem_core::contour::Contour;
use tdbem_core::gcq::{BlockOp, Coupling, SystemSide};
use tdbem_core::geom::V3;
use tdbem_core::mesh::{cube_mixed_split, BoundaryPart, DofMap, TriangleMesh};
use tdbem_core::operator::{build_operator, KernelKind, OperatorConfig, OperatorGeometry};
use tdbem_core::Result;

use crate::config::Problem;

/// Pressure of the smooth pulse radiating from `x_star`:
/// u(y, t) = (t - r/c)^2 / r * exp(-c (t - r/c)) for t > r/c.
pub fn smooth_pulse(y: &V3, t: f64, c: f64, x_star: &V3) -> f64 {
    let r = x_star.dist(y);
    let tau = t - r / c;
    if tau <= 0.0 {
        return 0.0;
    }
    tau * tau / r * (-c * tau).exp()
}

/// Conormal derivative of the pulse at `y` with normal `n`.
pub fn smooth_pulse_flux(y: &V3, n: &V3, t: f64, c: f64, x_star: &V3) -> f64 {
    let d = *y - *x_star;
    let r = d.norm();
    let tau = t - r / c;
    if tau <= 0.0 {
        return 0.0;
    }
    let e = (-c * tau).exp();
    // d/dr of tau^2 e^{-c tau} / r with dtau/dr = -1/c
    let du_dr = (tau * tau - 2.0 * tau / c) * e / r - tau * tau * e / (r * r);
    du_dr * (d.dot(n) / r)
}

/// Everything the runner needs about the discrete problem: collocation rows,
/// unknown/data layouts, analytic references, and the system sides.
pub struct ProblemSetup {
    /// collocation points (centroid rows then vertex rows)
    pub rows: Vec<V3>,
    /// unknown layout
    pub unknown_p0: DofMap,
    pub unknown_p1: DofMap,
    /// data layout
    pub data_p1: DofMap,
    pub data_p0: DofMap,
    pub n_unknown: usize,
    pub n_data: usize,
    /// integral-free term at the collocation rows
    pub c_term: Vec<f64>,
}

impl ProblemSetup {
    pub fn new(mesh: &TriangleMesh, asm: &Assembler<'_>, problem: Problem) -> Result<Self> {
        match problem {
            Problem::Dirichlet => {
                let unknown_p0 = DofMap::p0_all(mesh);
                let data_p1 = DofMap::p1_all(mesh);
                let rows: Vec<V3> = unknown_p0.support.iter().map(|&e| mesh.centroid(e)).collect();
                let c_term = asm.integral_free_term(&rows)?;
                Ok(ProblemSetup {
                    n_unknown: unknown_p0.len(),
                    n_data: data_p1.len(),
                    rows,
                    unknown_p0,
                    unknown_p1: DofMap { kind: tdbem_core::mesh::SpaceKind::P1, support: Vec::new() },
                    data_p1,
                    data_p0: DofMap { kind: tdbem_core::mesh::SpaceKind::P0, support: Vec::new() },
                    c_term,
                })
            }
            Problem::Mixed => {
                let part = cube_mixed_split(mesh);
                let unknown_p0 = DofMap::p0_part(&part, BoundaryPart::Dirichlet);
                let unknown_p1 = DofMap::p1_part(&part, BoundaryPart::Neumann);
                let data_p1 = DofMap::p1_part(&part, BoundaryPart::Dirichlet);
                let data_p0 = DofMap::p0_part(&part, BoundaryPart::Neumann);
                let mut rows: Vec<V3> =
                    unknown_p0.support.iter().map(|&e| mesh.centroid(e)).collect();
                rows.extend(unknown_p1.support.iter().map(|&v| mesh.vertices[v]));
                let c_term = asm.integral_free_term(&rows)?;
                Ok(ProblemSetup {
                    n_unknown: unknown_p0.len() + unknown_p1.len(),
                    n_data: data_p1.len() + data_p0.len(),
                    rows,
                    unknown_p0,
                    unknown_p1,
                    data_p1,
                    data_p0,
                    c_term,
                })
            }
        }
    }

    /// Vertex classes of each collocation row's element (centroid rows only):
    /// (row, vertex, hat value 1/3) for the integral-free coupling.
    fn centroid_c_entries(
        &self,
        mesh: &TriangleMesh,
        space: &DofMap,
        sign: f64,
    ) -> Vec<(usize, usize, f64)> {
        let mut col_of = vec![usize::MAX; mesh.n_vertices()];
        for (j, &v) in space.support.iter().enumerate() {
            col_of[v] = j;
        }
        let mut entries = Vec::new();
        for (i, &e) in self.unknown_p0.support.iter().enumerate() {
            for &v in &mesh.triangles[e] {
                let j = col_of[v];
                if j != usize::MAX {
                    entries.push((i, j, sign * self.c_term[i] / 3.0));
                }
            }
        }
        entries
    }

    /// Build the left/right system sides for the coupled collocation system.
    /// Column offsets: unknowns = [q (P0) | u (P1)], data = [g_D (P1) | g_N (P0)].
    pub fn build_sides(
        &self,
        asm: &Assembler<'_>,
        mesh: &TriangleMesh,
        contour: &Contour,
        eigen: &[Complex64],
        cfg: &OperatorConfig,
    ) -> Result<(SystemSide, SystemSide)> {
        let nodes = &contour.nodes;
        let n_p0u = self.unknown_p0.len();
        let n_p1u = self.unknown_p1.len();
        let n_p1d = self.data_p1.len();
        let n_p0d = self.data_p0.len();
        let mut lhs_blocks = Vec::new();
        let mut rhs_blocks = Vec::new();
        // V over the unknown flux
        if n_p0u > 0 {
            let geo = OperatorGeometry::new(asm, &self.rows, &self.unknown_p0, KernelKind::SingleLayer)?;
            lhs_blocks.push(BlockOp {
                op: build_operator(&geo, nodes, eigen, cfg)?,
                row_offset: 0,
                col_offset: 0,
                scale: 1.0,
            });
        }
        // -(C + K) over the unknown pressure
        let mut lhs_coupling = Coupling::default();
        if n_p1u > 0 {
            let geo = OperatorGeometry::new(asm, &self.rows, &self.unknown_p1, KernelKind::DoubleLayer)?;
            lhs_blocks.push(BlockOp {
                op: build_operator(&geo, nodes, eigen, cfg)?,
                row_offset: 0,
                col_offset: n_p0u,
                scale: -1.0,
            });
            // centroid rows couple into the unknown pressure columns
            for (i, j, v) in self.centroid_c_entries(mesh, &self.unknown_p1, -1.0) {
                lhs_coupling.entries.push((i, n_p0u + j, v));
            }
            // vertex rows: the hat of the own vertex is one there
            let mut col_of = vec![usize::MAX; mesh.n_vertices()];
            for (j, &v) in self.unknown_p1.support.iter().enumerate() {
                col_of[v] = j;
            }
            for (k, &v) in self.unknown_p1.support.iter().enumerate() {
                let row = n_p0u + k;
                let j = col_of[v];
                lhs_coupling.entries.push((row, n_p0u + j, -self.c_term[row]));
            }
        }
        // (C + K) over the given Dirichlet data
        let mut rhs_coupling = Coupling::default();
        if n_p1d > 0 {
            let geo = OperatorGeometry::new(asm, &self.rows, &self.data_p1, KernelKind::DoubleLayer)?;
            rhs_blocks.push(BlockOp {
                op: build_operator(&geo, nodes, eigen, cfg)?,
                row_offset: 0,
                col_offset: 0,
                scale: 1.0,
            });
            for (i, j, v) in self.centroid_c_entries(mesh, &self.data_p1, 1.0) {
                rhs_coupling.entries.push((i, j, v));
            }
        }
        // -V over the given Neumann data
        if n_p0d > 0 {
            let geo = OperatorGeometry::new(asm, &self.rows, &self.data_p0, KernelKind::SingleLayer)?;
            rhs_blocks.push(BlockOp {
                op: build_operator(&geo, nodes, eigen, cfg)?,
                row_offset: 0,
                col_offset: n_p1d,
                scale: -1.0,
            });
        }
        let n = self.n_unknown;
        Ok((
            SystemSide { blocks: lhs_blocks, coupling: lhs_coupling, nrows: n, ncols: n },
            SystemSide { blocks: rhs_blocks, coupling: rhs_coupling, nrows: n, ncols: self.n_data },
        ))
    }

    /// Given data vector at time t: [g_D at P1 dofs | g_N at P0 centroids].
    pub fn data_at(&self, mesh: &TriangleMesh, t: f64, c: f64, x_star: &V3) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_data);
        for &v in &self.data_p1.support {
            out.push(smooth_pulse(&mesh.vertices[v], t, c, x_star));
        }
        for &e in &self.data_p0.support {
            let tri = mesh.triangle(e);
            out.push(smooth_pulse_flux(&tri.centroid(), &tri.unit_normal(), t, c, x_star));
        }
        out
    }

    /// Analytic values of the unknowns at time t (interpolated coefficients):
    /// [flux at P0 centroids | pressure at P1 vertices].
    pub fn exact_unknowns_at(&self, mesh: &TriangleMesh, t: f64, c: f64, x_star: &V3) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_unknown);
        for &e in &self.unknown_p0.support {
            let tri = mesh.triangle(e);
            out.push(smooth_pulse_flux(&tri.centroid(), &tri.unit_normal(), t, c, x_star));
        }
        for &v in &self.unknown_p1.support {
            out.push(smooth_pulse(&mesh.vertices[v], t, c, x_star));
        }
        out
    }
}
