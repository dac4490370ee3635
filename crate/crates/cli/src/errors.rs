//! Space-time error measure: the spatial L2 error at the step midpoints
//! (numeric side interpolated through the collocation stages), maximized
//! over the steps, and the observed convergence order between refinements.

use tdbem_core::gcq::GcqSolution;
use tdbem_core::geom::V3;
use tdbem_core::mesh::{DofMap, SpaceKind, TriangleMesh};
use tdbem_core::quad::gauss_triangle;
use tdbem_core::rk::ButcherTableau;

/// Lagrange weights at normalized time xi over the nodes {0, c_1, .., c_m}
/// (previous endpoint plus the collocation stages).
fn lagrange_weights(tableau: &ButcherTableau, xi: f64) -> Vec<f64> {
    let mut nodes = vec![0.0];
    nodes.extend_from_slice(&tableau.c);
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let mut w = 1.0;
            for k in 0..n {
                if k != j {
                    w *= (xi - nodes[k]) / (nodes[j] - nodes[k]);
                }
            }
            w
        })
        .collect()
}

/// Numeric coefficient vector at the midpoint of step n (0-based): the
/// collocation polynomial through the previous endpoint and this step's
/// stages.
pub fn midpoint_coefficients(
    solution: &GcqSolution,
    tableau: &ButcherTableau,
    n: usize,
) -> Vec<f64> {
    let w = lagrange_weights(tableau, 0.5);
    let m = tableau.stages;
    let dim = solution.stages[n].nrows;
    let mut out = vec![0.0; dim];
    // previous endpoint (zero initial data before the first step)
    if n > 0 {
        let prev = &solution.stages[n - 1];
        for i in 0..dim {
            out[i] += w[0] * prev.get(i, m - 1).re;
        }
    }
    for j in 0..m {
        let cur = &solution.stages[n];
        for i in 0..dim {
            out[i] += w[j + 1] * cur.get(i, j).re;
        }
    }
    out
}

/// Spatial L2 norm over the listed part of the surface of (numeric - exact)
/// where `coeff` holds P0 (per element) or P1 (per vertex) coefficients.
pub fn l2_error_on_space(
    mesh: &TriangleMesh,
    space: &DofMap,
    coeff: &[f64],
    exact: &dyn Fn(&V3, &V3) -> f64, // point, element normal
) -> f64 {
    let rule = gauss_triangle(6).expect("order 6 rule");
    let mut total = 0.0;
    match space.kind {
        SpaceKind::P0 => {
            for (j, &e) in space.support.iter().enumerate() {
                let tri = mesh.triangle(e);
                let nrm = tri.unit_normal();
                let area2 = 2.0 * tri.area();
                for ((xi, eta), w) in rule.points.iter().zip(rule.weights.iter()) {
                    let y = tri.map_ref(*xi, *eta);
                    let d = coeff[j] - exact(&y, &nrm);
                    total += w * area2 * d * d;
                }
            }
        }
        SpaceKind::P1 => {
            let mut col_of = vec![usize::MAX; mesh.n_vertices()];
            for (j, &v) in space.support.iter().enumerate() {
                col_of[v] = j;
            }
            // elements fully supported by the listed vertices
            for e in 0..mesh.n_triangles() {
                let vs = mesh.triangles[e];
                if vs.iter().any(|&v| col_of[v] == usize::MAX) {
                    continue;
                }
                let tri = mesh.triangle(e);
                let nrm = tri.unit_normal();
                let area2 = 2.0 * tri.area();
                for ((xi, eta), w) in rule.points.iter().zip(rule.weights.iter()) {
                    let y = tri.map_ref(*xi, *eta);
                    let lam = [1.0 - xi - eta, *xi, *eta];
                    let num: f64 = (0..3).map(|k| coeff[col_of[vs[k]]] * lam[k]).sum();
                    let d = num - exact(&y, &nrm);
                    total += w * area2 * d * d;
                }
            }
        }
    }
    total.sqrt()
}

/// Observed order of convergence between two refinements.
pub fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
