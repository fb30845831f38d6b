//! OBJ meshes and CSV tables.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

/// Counts written by [`write_mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
}

/// Write grid points (`n2` index fastest) as an OBJ mesh. Missing points are
/// skipped together with every quad that touches them; each complete quad
/// becomes two triangles.
pub fn write_mesh(out: &mut impl Write, points: &[Option<[f64; 3]>], n1: usize, n2: usize) -> io::Result<MeshStats> {
    assert_eq!(points.len(), n1 * n2, "point count does not match the grid");
    let mut index = vec![0usize; points.len()];
    let mut vertices = 0;
    for (k, p) in points.iter().enumerate() {
        if let Some(p) = p {
            vertices += 1;
            index[k] = vertices;
            writeln!(out, "v {} {} {}", p[0], p[1], p[2])?;
        }
    }
    let mut triangles = 0;
    for i in 0..n1.saturating_sub(1) {
        for j in 0..n2.saturating_sub(1) {
            let corners = [i * n2 + j, (i + 1) * n2 + j, (i + 1) * n2 + j + 1, i * n2 + j + 1];
            if corners.iter().any(|&c| points[c].is_none()) {
                continue;
            }
            let [a, b, c, d] = corners.map(|c| index[c]);
            writeln!(out, "f {a} {b} {c}")?;
            writeln!(out, "f {a} {c} {d}")?;
            triangles += 2;
        }
    }
    Ok(MeshStats { vertices, triangles })
}

pub fn emit_mesh(path: &Path, points: &[Option<[f64; 3]>], n1: usize, n2: usize) -> io::Result<MeshStats> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    let stats = write_mesh(&mut w, points, n1, n2)?;
    w.flush()?;
    Ok(stats)
}

/// Write serializable rows as CSV with a header line.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(points: &[Option<[f64; 3]>], n1: usize, n2: usize) -> (String, MeshStats) {
        let mut buf = Vec::new();
        let s = write_mesh(&mut buf, points, n1, n2).unwrap();
        (String::from_utf8(buf).unwrap(), s)
    }

    #[test]
    fn two_by_two_grid() {
        let p = [Some([0.0, 0.0, 0.0]), Some([0.0, 1.0, 0.0]), Some([1.0, 0.0, 0.0]), Some([1.0, 1.0, 0.0])];
        let (text, s) = mesh(&p, 2, 2);
        assert_eq!(s, MeshStats { vertices: 4, triangles: 2 });
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 2);
        assert!(text.contains("f 1 3 4\nf 1 4 2"));
    }

    #[test]
    fn degenerate_point_drops_its_quads() {
        let p = [Some([0.0, 0.0, 0.0]), None, Some([1.0, 0.0, 0.0]), Some([1.0, 1.0, 0.0])];
        let (text, s) = mesh(&p, 2, 2);
        assert_eq!(s, MeshStats { vertices: 3, triangles: 0 });
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn indices_skip_missing_vertices() {
        // 2×3 grid with the corner (0, 0) missing: only the right quad survives
        let p = [None, Some([0.0, 1.0, 0.0]), Some([0.0, 2.0, 0.0]), Some([1.0, 0.0, 0.0]), Some([1.0, 1.0, 0.0]), Some([1.0, 2.0, 0.0])];
        let (text, s) = mesh(&p, 2, 3);
        assert_eq!(s, MeshStats { vertices: 5, triangles: 2 });
        assert!(text.contains("f 1 4 5\nf 1 5 2"));
    }
}
