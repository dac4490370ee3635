//! tdbem: time-domain BEM benchmark driver.
//!
//! Subcommands:
//!   mesh cube --level L --out cube.off
//!   run --config run.cfg
//!   convergence --problem dirichlet|mixed --levels A..B --backend dense|aca|fmm
//!               [--t-end T] [--out dir]
//!   stats --config run.cfg

use std::path::PathBuf;
use std::process::ExitCode;

use tdbem::config::{MeshSource, Problem, RunConfig};
use tdbem::errors::eoc;
use tdbem::{off, run, stats};
use tdbem_core::operator::Backend;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(args: &[String]) -> Result<(), String> {
    match args.first().map(|s| s.as_str()) {
        Some("mesh") => cmd_mesh(&args[1..]),
        Some("run") => cmd_run(&args[1..]),
        Some("convergence") => cmd_convergence(&args[1..]),
        Some("stats") => cmd_stats(&args[1..]),
        Some("help") | Some("--help") | Some("-h") | None => {
            print_usage();
            Ok(())
        }
        Some(other) => Err(format!("unknown subcommand '{other}' (try 'tdbem help')")),
    }
}

fn print_usage() {
    println!(
        "tdbem — time-domain boundary element benchmark\n\n\
         USAGE:\n\
         \x20 tdbem mesh cube --level L --out cube.off\n\
         \x20 tdbem run --config run.cfg\n\
         \x20 tdbem convergence --problem dirichlet|mixed --levels 1..3 --backend dense|aca|fmm\n\
         \x20        [--t-end T] [--out DIR]\n\
         \x20 tdbem stats --config run.cfg\n\n\
         The config file is flat key=value text with '#' comments; see README."
    );
}

fn flag_value<'a>(args: &'a [String], name: &str) -> Option<&'a str> {
    args.iter()
        .position(|a| a == name)
        .and_then(|i| args.get(i + 1))
        .map(|s| s.as_str())
}

fn cmd_mesh(args: &[String]) -> Result<(), String> {
    if args.first().map(|s| s.as_str()) != Some("cube") {
        return Err("usage: tdbem mesh cube --level L --out cube.off".into());
    }
    let level: u32 = flag_value(args, "--level")
        .ok_or("missing --level")?
        .parse()
        .map_err(|_| "invalid --level")?;
    let out = PathBuf::from(flag_value(args, "--out").ok_or("missing --out")?);
    let mesh = tdbem_core::mesh::unit_cube(level).map_err(|e| e.to_string())?;
    off::save_mesh(&mesh, &out)?;
    println!(
        "wrote {} ({} vertices, {} triangles, h = {})",
        out.display(),
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.mesh_width()
    );
    Ok(())
}

fn cmd_run(args: &[String]) -> Result<(), String> {
    let cfg_path = PathBuf::from(flag_value(args, "--config").ok_or("missing --config")?);
    let cfg = RunConfig::parse_file(&cfg_path)?;
    println!("running {} on {:?} with {:?} backend ...", cfg.problem, cfg.mesh, cfg.backend);
    match run::execute(&cfg) {
        Ok(art) => {
            stats::write_all(&cfg.outdir, &cfg, &art)?;
            println!(
                "done: N={} N_Q={} Lmax(flux)={:.6e}{}",
                art.schedule.len(),
                art.n_q,
                art.lmax_flux,
                art.lmax_pressure
                    .map(|v| format!(" Lmax(pressure)={v:.6e}"))
                    .unwrap_or_default()
            );
            println!(
                "timings: matrix {:.2}s, stepping {:.2}s; outputs in {}",
                art.timings.matrix_s,
                art.timings.stepping_s,
                cfg.outdir.display()
            );
            Ok(())
        }
        Err(e) => {
            // the manifest records the failure either way
            stats::write_manifest(&cfg.outdir, &cfg, None, Some(&e))?;
            Err(e)
        }
    }
}

fn cmd_convergence(args: &[String]) -> Result<(), String> {
    let problem = match flag_value(args, "--problem").unwrap_or("dirichlet") {
        "dirichlet" => Problem::Dirichlet,
        "mixed" => Problem::Mixed,
        other => return Err(format!("unknown problem '{other}'")),
    };
    let backend = match flag_value(args, "--backend").unwrap_or("dense") {
        "dense" => Backend::Dense,
        "aca" => Backend::Aca,
        "fmm" => Backend::Fmm,
        other => return Err(format!("unknown backend '{other}'")),
    };
    let levels_arg = flag_value(args, "--levels").unwrap_or("1..3");
    let (lo, hi) = levels_arg
        .split_once("..")
        .ok_or("levels must be A..B")
        .and_then(|(a, b)| {
            Ok((
                a.parse::<u32>().map_err(|_| "bad level")?,
                b.parse::<u32>().map_err(|_| "bad level")?,
            ))
        })?;
    let t_end: f64 = flag_value(args, "--t-end").unwrap_or("3.0").parse().map_err(|_| "bad --t-end")?;
    let outdir = PathBuf::from(flag_value(args, "--out").unwrap_or("out"));
    let mut csv = String::from(stats::errors_csv_header());
    let mut prev: Option<(f64, Option<f64>)> = None;
    for level in lo..=hi {
        let mut cfg = RunConfig {
            problem,
            mesh: MeshSource::CubeLevel(level),
            backend,
            t_end,
            outdir: outdir.join(format!("level{level}")),
            ..RunConfig::default()
        };
        cfg.apply_preset(level)?;
        let art = run::execute(&cfg)?;
        stats::write_all(&cfg.outdir, &cfg, &art)?;
        let (ef, ep) = (art.lmax_flux, art.lmax_pressure);
        let eoc_f = prev.map(|(pf, _)| eoc(pf, ef));
        let eoc_p = prev
            .and_then(|(_, pp)| pp.zip(ep))
            .map(|(pp, e)| eoc(pp, e));
        csv.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e},{},{},{}\n",
            level,
            art.h,
            art.dt,
            ef,
            eoc_f.map(|v| format!("{v:.3}")).unwrap_or_default(),
            ep.map(|v| format!("{v:.6e}")).unwrap_or_default(),
            eoc_p.map(|v| format!("{v:.3}")).unwrap_or_default(),
        ));
        println!(
            "level {level}: h={:.4} dt={:.4} Lmax(flux)={:.6e}{}{}",
            art.h,
            art.dt,
            ef,
            eoc_f.map(|v| format!(" eoc={v:.3}")).unwrap_or_default(),
            ep.map(|v| format!(" Lmax(pressure)={v:.4e}")).unwrap_or_default()
        );
        prev = Some((ef, ep));
    }
    std::fs::create_dir_all(&outdir).map_err(|e| e.to_string())?;
    let path = outdir.join("errors.csv");
    std::fs::write(&path, csv).map_err(|e| e.to_string())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_stats(args: &[String]) -> Result<(), String> {
    let cfg_path = PathBuf::from(flag_value(args, "--config").ok_or("missing --config")?);
    let cfg = RunConfig::parse_file(&cfg_path)?;
    let art = run::execute(&cfg)?;
    stats::write_compression(&cfg.outdir, &art)?;
    stats::write_ranks(&cfg.outdir, &art)?;
    stats::write_freq_histogram(&cfg.outdir, &art)?;
    stats::write_manifest(&cfg.outdir, &cfg, Some(&art), None)?;
    // console summary
    for (name, st) in &art.op_stats {
        if st.ranks.is_empty() {
            println!("{name}: dense backend (ratio 1)");
            continue;
        }
        let min = st.ranks.iter().min().unwrap();
        let max = st.ranks.iter().max().unwrap();
        let mean = st.ranks.iter().sum::<usize>() as f64 / st.ranks.len() as f64;
        println!(
            "{name}: {} blocks, rank min/mean/max = {}/{:.2}/{}, ratio {:.4e}, capped {}",
            st.ranks.len(),
            min,
            mean,
            max,
            st.compression_ratio(),
            st.capped_blocks
        );
    }
    println!(
        "timings: matrix {:.2}s, stepping {:.2}s; outputs in {}",
        art.timings.matrix_s,
        art.timings.stepping_s,
        cfg.outdir.display()
    );
    Ok(())
}
