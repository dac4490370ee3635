//! CSV and manifest outputs of a run: trace histories, compression and rank
//! statistics, the frequency-selection histogram, and the full parameter
//! echo.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::run::RunArtifacts;

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// traces.csv: step index, midpoint time, probe dof values, interior probes.
pub fn write_traces(dir: &Path, cfg: &RunConfig, art: &RunArtifacts) -> Result<(), String> {
    let mut out = String::from("step,t_mid");
    for d in &cfg.probe_dofs {
        let _ = write!(out, ",dof{}", d);
    }
    for (p, _) in &art.interior {
        let _ = write!(out, ",interior({:.3};{:.3};{:.3})", p.x(), p.y(), p.z());
    }
    out.push('\n');
    let n = art.schedule.len();
    for n1 in 0..n {
        let t_mid = (n1 as f64 + 0.5) * art.dt;
        let coeff = crate::errors::midpoint_coefficients(&art.solution, &art.tableau, n1);
        let _ = write!(out, "{},{:.9e}", n1 + 1, t_mid);
        for &d in &cfg.probe_dofs {
            let v = coeff.get(d).copied().unwrap_or(f64::NAN);
            let _ = write!(out, ",{:.9e}", v);
        }
        for (_, hist) in &art.interior {
            let _ = write!(out, ",{:.9e}", hist[n1]);
        }
        out.push('\n');
    }
    write_file(dir, "traces.csv", &out)
}

/// compression.csv: operator, blocks, compressed and dense bytes, ratio.
pub fn write_compression(dir: &Path, art: &RunArtifacts) -> Result<(), String> {
    let mut out = String::from("operator,blocks,compressed_bytes,dense_bytes,ratio\n");
    let mut total_c = 0usize;
    let mut total_d = 0usize;
    for (name, st) in &art.op_stats {
        total_c += st.compressed_bytes;
        total_d += st.dense_bytes;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6e}",
            name,
            st.ranks.len(),
            st.compressed_bytes,
            st.dense_bytes,
            st.compression_ratio()
        );
    }
    let _ = writeln!(
        out,
        "total,,{},{},{:.6e}",
        total_c,
        total_d,
        total_c as f64 / total_d.max(1) as f64
    );
    write_file(dir, "compression.csv", &out)
}

/// ranks.csv: per-operator block ranks with admissibility flags.
pub fn write_ranks(dir: &Path, art: &RunArtifacts) -> Result<(), String> {
    let mut out = String::from("operator,block,admissible,rank\n");
    for (name, st) in &art.op_stats {
        for (b, r) in st.ranks.iter().enumerate() {
            let adm = st.admissible.get(b).copied().unwrap_or(false);
            let _ = writeln!(out, "{},{},{},{}", name, b, adm, r);
        }
    }
    write_file(dir, "ranks.csv", &out)
}

/// freq_histogram.csv: per contour node, how many blocks selected it.
pub fn write_freq_histogram(dir: &Path, art: &RunArtifacts) -> Result<(), String> {
    let mut counts = vec![0usize; art.contour.n_half()];
    for (_, st) in &art.op_stats {
        for (k, c) in st.frequency_counts.iter().enumerate() {
            counts[k] += c;
        }
    }
    let mut out = String::from("node,re_s,im_s,selections\n");
    for (k, s) in art.contour.nodes.iter().enumerate() {
        let _ = writeln!(out, "{},{:.9e},{:.9e},{}", k, s.re, s.im, counts[k]);
    }
    write_file(dir, "freq_histogram.csv", &out)
}

/// errors.csv row for convergence series.
pub fn errors_csv_header() -> &'static str {
    "level,h,dt,lmax_flux,eoc_flux,lmax_pressure,eoc_pressure\n"
}

/// manifest.txt with every config key and derived quantity.
pub fn write_manifest(
    dir: &Path,
    cfg: &RunConfig,
    art: Option<&RunArtifacts>,
    failure: Option<&str>,
) -> Result<(), String> {
    let mut out = String::new();
    for line in cfg.manifest_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    let _ = writeln!(out, "outdir={}", cfg.outdir.display());
    let _ = writeln!(out, "l2_error_quadrature_order=6");
    if let Some(a) = art {
        let _ = writeln!(out, "n_steps_effective={}", a.schedule.len());
        let _ = writeln!(out, "dt_effective={:.12e}", a.dt);
        let _ = writeln!(out, "h={:.12e}", a.h);
        let _ = writeln!(out, "n_q={}", a.n_q);
        let _ = writeln!(out, "contour_q={:.12e}", a.contour.q);
        let _ = writeln!(out, "contour_k={:.12e}", a.contour.k);
        let _ = writeln!(out, "contour_shift={:.12e}", a.contour.shift);
        let _ = writeln!(out, "n_unknown={}", a.setup.n_unknown);
        let _ = writeln!(out, "n_data={}", a.setup.n_data);
        let _ = writeln!(out, "lmax_flux={:.12e}", a.lmax_flux);
        if let Some(lp) = a.lmax_pressure {
            let _ = writeln!(out, "lmax_pressure={:.12e}", lp);
        }
        let _ = writeln!(out, "time_matrix_s={:.3}", a.timings.matrix_s);
        let _ = writeln!(out, "time_stepping_s={:.3}", a.timings.stepping_s);
        let iters: usize = a.solution.solver_iterations.iter().sum();
        let _ = writeln!(out, "solver_iterations_total={}", iters);
        for (name, st) in &a.op_stats {
            if st.ranks.is_empty() {
                let _ = writeln!(out, "op.{name}.backend=dense");
                continue;
            }
            let min = st.ranks.iter().min().unwrap();
            let max = st.ranks.iter().max().unwrap();
            let mean = st.ranks.iter().sum::<usize>() as f64 / st.ranks.len() as f64;
            let _ = writeln!(
                out,
                "op.{name}.rank_min={min} op.{name}.rank_mean={mean:.3} op.{name}.rank_max={max} op.{name}.capped={} op.{name}.ratio={:.6e}",
                st.capped_blocks,
                st.compression_ratio()
            );
        }
    }
    if let Some(f) = failure {
        let _ = writeln!(out, "status=failed");
        let _ = writeln!(out, "failure={f}");
    } else {
        let _ = writeln!(out, "status=ok");
    }
    write_file(dir, "manifest.txt", &out)
}

pub fn write_all(dir: &Path, cfg: &RunConfig, art: &RunArtifacts) -> Result<(), String> {
    write_traces(dir, cfg, art)?;
    write_compression(dir, art)?;
    write_ranks(dir, art)?;
    write_freq_histogram(dir, art)?;
    write_manifest(dir, cfg, Some(art), None)
}
