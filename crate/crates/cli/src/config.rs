//! Flat key=value run configuration with `#` comments, plus the per-level
//! parameter presets of the benchmark series.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use tdbem_core::operator::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Dirichlet,
    Mixed,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Dirichlet => write!(f, "dirichlet"),
            Problem::Mixed => write!(f, "mixed"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum MeshSource {
    CubeLevel(u32),
    OffFile(PathBuf),
}

/// Complete run configuration; `apply_preset` fills the compression
/// parameters from the per-level table.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub mesh: MeshSource,
    pub wave_speed: f64,
    pub t_end: f64,
    /// 0 requests the default dt = dt_ratio * h / c rounded to a whole count
    pub n_steps: usize,
    pub dt_ratio: f64,
    pub backend: Backend,
    pub eps_aca: f64,
    pub eps: f64,
    pub fmm_levels: usize,
    pub fmm_order: usize,
    pub b_min: usize,
    pub eta: f64,
    pub r_max: usize,
    /// 0 means "use eps_aca" per the solver-precision convention
    pub solver_tol: f64,
    pub max_iter: usize,
    pub excitation: [f64; 3],
    pub probe_dofs: Vec<usize>,
    pub interior_probes: Vec<[f64; 3]>,
    pub outdir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: Problem::Dirichlet,
            mesh: MeshSource::CubeLevel(1),
            wave_speed: 1.0,
            t_end: 3.0,
            n_steps: 0,
            dt_ratio: 0.7,
            backend: Backend::Dense,
            eps_aca: 1e-4,
            eps: 1e-2,
            fmm_levels: 1,
            fmm_order: 1,
            b_min: 20,
            eta: 0.8,
            r_max: usize::MAX,
            solver_tol: 0.0,
            max_iter: 2000,
            excitation: [0.8, 0.2, 0.3],
            probe_dofs: vec![0],
            interior_probes: vec![[0.0, 0.0, 0.0]],
            outdir: PathBuf::from("out"),
        }
    }
}

/// Compression parameters of the benchmark series per refinement level:
/// (eps_aca, eps, fmm levels, fmm order).
pub fn preset_for_level(level: u32) -> Option<(f64, f64, usize, usize)> {
    match level {
        1 => Some((1e-4, 1e-2, 1, 1)),
        2 => Some((1e-5, 1e-3, 2, 2)),
        3 => Some((1e-6, 1e-4, 2, 3)),
        4 => Some((1e-7, 1e-5, 3, 4)),
        5 => Some((1e-8, 1e-6, 4, 5)),
        _ => None,
    }
}

impl RunConfig {
    pub fn apply_preset(&mut self, level: u32) -> Result<(), String> {
        let (eps_aca, eps, levels, order) =
            preset_for_level(level).ok_or_else(|| format!("no preset for level {level}"))?;
        self.eps_aca = eps_aca;
        self.eps = eps;
        self.fmm_levels = levels;
        self.fmm_order = order;
        Ok(())
    }

    pub fn effective_solver_tol(&self) -> f64 {
        if self.solver_tol > 0.0 {
            self.solver_tol
        } else {
            self.eps_aca
        }
    }

    pub fn parse_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        let mut preset: Option<u32> = None;
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        // the preset fills compression defaults first so explicit keys win
        if let Some(v) = map.get("preset") {
            let level: u32 = v
                .strip_prefix("paper-level-")
                .unwrap_or(v)
                .parse()
                .map_err(|_| format!("invalid preset '{v}'"))?;
            preset = Some(level);
        }
        if let Some(level) = preset {
            cfg.mesh = MeshSource::CubeLevel(level);
            cfg.apply_preset(level)?;
        }
        for (key, value) in &map {
            let v = value.as_str();
            match key.as_str() {
                "preset" => {}
                "problem" => {
                    cfg.problem = match v {
                        "dirichlet" => Problem::Dirichlet,
                        "mixed" => Problem::Mixed,
                        _ => return Err(format!("unknown problem '{v}'")),
                    }
                }
                "cube_level" => cfg.mesh = MeshSource::CubeLevel(parse(key, v)?),
                "mesh" => cfg.mesh = MeshSource::OffFile(PathBuf::from(v)),
                "c" => cfg.wave_speed = parse(key, v)?,
                "t_end" => cfg.t_end = parse(key, v)?,
                "n_steps" => cfg.n_steps = parse(key, v)?,
                "dt_ratio" => cfg.dt_ratio = parse(key, v)?,
                "backend" => {
                    cfg.backend = match v {
                        "dense" => Backend::Dense,
                        "aca" => Backend::Aca,
                        "fmm" => Backend::Fmm,
                        _ => return Err(format!("unknown backend '{v}'")),
                    }
                }
                "eps_aca" => cfg.eps_aca = parse(key, v)?,
                "eps" => cfg.eps = parse(key, v)?,
                "fmm.levels" => cfg.fmm_levels = parse(key, v)?,
                "fmm.order" => cfg.fmm_order = parse(key, v)?,
                "b_min" => cfg.b_min = parse(key, v)?,
                "eta" => cfg.eta = parse(key, v)?,
                "r_max" => cfg.r_max = parse(key, v)?,
                "solver_tol" => cfg.solver_tol = parse(key, v)?,
                "max_iter" => cfg.max_iter = parse(key, v)?,
                "excitation" => cfg.excitation = parse_triple(key, v)?,
                "probe_dofs" => {
                    cfg.probe_dofs = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| s.trim().parse().map_err(|_| format!("bad probe dof '{s}'")))
                        .collect::<Result<_, _>>()?;
                }
                "interior_probes" => {
                    cfg.interior_probes = v
                        .split(';')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_triple(key, s.trim()))
                        .collect::<Result<_, _>>()?;
                }
                "outdir" => cfg.outdir = PathBuf::from(v),
                _ => return Err(format!("unknown key '{key}'")),
            }
        }
        Ok(cfg)
    }

    /// Echo every key for the manifest.
    pub fn manifest_lines(&self) -> Vec<String> {
        let mesh = match &self.mesh {
            MeshSource::CubeLevel(l) => format!("cube_level={l}"),
            MeshSource::OffFile(p) => format!("mesh={}", p.display()),
        };
        vec![
            format!("problem={}", self.problem),
            mesh,
            format!("c={}", self.wave_speed),
            format!("t_end={}", self.t_end),
            format!("n_steps={}", self.n_steps),
            format!("dt_ratio={}", self.dt_ratio),
            format!("backend={:?}", self.backend).to_lowercase(),
            format!("eps_aca={:e}", self.eps_aca),
            format!("eps={:e}", self.eps),
            format!("fmm.levels={}", self.fmm_levels),
            format!("fmm.order={}", self.fmm_order),
            format!("b_min={}", self.b_min),
            format!("eta={}", self.eta),
            format!(
                "r_max={}",
                if self.r_max == usize::MAX { "unbounded".to_string() } else { self.r_max.to_string() }
            ),
            format!("solver_tol={:e}", self.effective_solver_tol()),
            format!("max_iter={}", self.max_iter),
            format!(
                "excitation={},{},{}",
                self.excitation[0], self.excitation[1], self.excitation[2]
            ),
        ]
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid value '{v}' for {key}"))
}

fn parse_triple(key: &str, v: &str) -> Result<[f64; 3], String> {
    let vals: Vec<f64> = v
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("invalid triple '{v}' for {key}")))
        .collect::<Result<_, _>>()?;
    if vals.len() != 3 {
        return Err(format!("{key} needs three comma-separated values"));
    }
    Ok([vals[0], vals[1], vals[2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_presets() {
        let cfg = RunConfig::parse_str(
            "# comment\npreset = paper-level-2\nproblem = mixed\nbackend = aca\nt_end = 1.5\n",
        )
        .unwrap();
        assert_eq!(cfg.problem, Problem::Mixed);
        assert!(matches!(cfg.mesh, MeshSource::CubeLevel(2)));
        assert_eq!(cfg.backend, Backend::Aca);
        assert!((cfg.eps_aca - 1e-5).abs() < 1e-20);
        assert!((cfg.eps - 1e-3).abs() < 1e-18);
        assert_eq!(cfg.fmm_levels, 2);
        assert_eq!(cfg.fmm_order, 2);
        assert!((cfg.t_end - 1.5).abs() < 1e-15);
        // eps = 100 eps_aca in every preset
        for level in 1..=5 {
            let (ea, e, _, _) = preset_for_level(level).unwrap();
            assert!((e / ea - 100.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::parse_str("nonsense = 1\n").is_err());
        assert!(RunConfig::parse_str("problem = heat\n").is_err());
    }
}
