//! ASCII OFF surface mesh files: header "OFF", a counts line, vertex lines,
//! and triangle faces with a leading arity. Loading checks closedness and
//! attempts an automatic reorientation.

use std::fmt::Write as _;
use std::path::Path;

use tdbem_core::geom::V3;
use tdbem_core::mesh::TriangleMesh;

pub fn save_mesh(mesh: &TriangleMesh, path: &Path) -> Result<(), String> {
    let mut out = String::new();
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.n_vertices(), mesh.n_triangles());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", v.x(), v.y(), v.z());
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    std::fs::write(path, out).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn load_mesh(path: &Path) -> Result<TriangleMesh, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_off(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse_off(text: &str) -> Result<TriangleMesh, String> {
    // iterate non-empty, non-comment lines with their 1-based numbers
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or("empty file")?;
    let mut rest = header.split_whitespace();
    let tag = rest.next().unwrap_or("");
    if tag != "OFF" {
        return Err(format!("line {ln}: expected OFF header"));
    }
    // counts may follow the header on the same line
    let counts: Vec<&str> = rest.collect();
    let (ln_counts, counts) = if counts.is_empty() {
        let (ln2, l) = lines.next().ok_or("missing counts line")?;
        (ln2, l.split_whitespace().map(|s| s.to_string()).collect::<Vec<_>>())
    } else {
        (ln, counts.iter().map(|s| s.to_string()).collect())
    };
    if counts.len() < 2 {
        return Err(format!("line {ln_counts}: expected vertex and face counts"));
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|_| format!("line {ln_counts}: bad vertex count"))?;
    let nf: usize = counts[1]
        .parse()
        .map_err(|_| format!("line {ln_counts}: bad face count"))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or("unexpected end of file in vertex list")?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| format!("line {ln}: bad coordinate '{s}'")))
            .collect::<Result<_, _>>()?;
        if vals.len() != 3 {
            return Err(format!("line {ln}: expected three coordinates"));
        }
        vertices.push(V3::new(vals[0], vals[1], vals[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or("unexpected end of file in face list")?;
        let vals: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| format!("line {ln}: bad index '{s}'")))
            .collect::<Result<_, _>>()?;
        if vals.is_empty() {
            return Err(format!("line {ln}: empty face"));
        }
        if vals[0] != 3 {
            return Err(format!("face arity {} at line {ln}", vals[0]));
        }
        if vals.len() != 4 {
            return Err(format!("line {ln}: triangle needs exactly three indices"));
        }
        triangles.push([vals[1], vals[2], vals[3]]);
    }
    let mut mesh = TriangleMesh::new(vertices, triangles).map_err(|e| e.to_string())?;
    if mesh.check_closed_oriented().is_err() {
        // warn and try to repair the orientation
        eprintln!("warning: inconsistent orientation, attempting automatic reorientation");
        mesh.reorient().map_err(|e| e.to_string())?;
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdbem_core::mesh::unit_cube;

    #[test]
    fn round_trip_is_identity() {
        let mesh = unit_cube(1).unwrap();
        let dir = std::env::temp_dir().join("tdbem_off_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cube1.off");
        save_mesh(&mesh, &path).unwrap();
        let loaded = load_mesh(&path).unwrap();
        assert_eq!(loaded.n_vertices(), mesh.n_vertices());
        assert_eq!(loaded.n_triangles(), mesh.n_triangles());
        for (a, b) in loaded.vertices.iter().zip(mesh.vertices.iter()) {
            assert!((*a - *b).norm() < 1e-15);
        }
        assert_eq!(loaded.triangles, mesh.triangles);
    }

    #[test]
    fn quad_face_is_rejected_with_line_number() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let err = parse_off(text).unwrap_err();
        assert!(err.contains("face arity 4 at line 7"), "{err}");
    }

    #[test]
    fn flipped_triangle_is_repaired() {
        let mesh = unit_cube(1).unwrap();
        let mut flipped = mesh.clone();
        flipped.triangles[10].swap(1, 2);
        let dir = std::env::temp_dir().join("tdbem_off_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("flipped.off");
        save_mesh(&flipped, &path).unwrap();
        let loaded = load_mesh(&path).unwrap();
        loaded.check_closed_oriented().unwrap();
        assert!(loaded.signed_volume() > 0.0);
    }
}
