use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::geometry::Point;
use super::mesh::Mesh;
use crate::{Error, Result};

/// On-disk JSON shape of a mesh.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshFile {
    pub nodes: Vec<Point>,
    pub cells: Vec<[usize; 3]>,
    pub boundary: Vec<usize>,
}

impl From<&Mesh> for MeshFile {
    fn from(m: &Mesh) -> Self {
        Self {
            nodes: m.nodes().to_vec(),
            cells: m.cells().to_vec(),
            boundary: m.boundary_nodes().to_vec(),
        }
    }
}

pub fn write_mesh_json<W: Write>(mesh: &Mesh, w: W) -> Result<()> {
    serde_json::to_writer(w, &MeshFile::from(mesh))?;
    Ok(())
}

pub fn read_mesh_json<R: std::io::Read>(r: R) -> Result<Mesh> {
    let f: MeshFile = serde_json::from_reader(r)?;
    Mesh::new(f.nodes, f.cells, f.boundary)
}

/// Writes `node,value` rows with a header line.
pub fn write_field_csv<W: Write>(values: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "node,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v:e}")?;
    }
    Ok(())
}

/// Reads `node,value` rows; missing nodes are an error.
pub fn read_field_csv<R: BufRead>(r: R, num_nodes: usize) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; num_nodes];
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (ln == 0 && line.starts_with("node")) {
            continue;
        }
        let mut it = line.split(',');
        let (Some(i), Some(v)) = (it.next(), it.next()) else {
            return Err(Error::Format(format!(
                "line {}: expected `node,value`",
                ln + 1
            )));
        };
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad node index", ln + 1)))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad value", ln + 1)))?;
        if i >= num_nodes {
            return Err(Error::Format(format!(
                "line {}: node {i} out of range",
                ln + 1
            )));
        }
        out[i] = v;
    }
    if let Some(i) = out.iter().position(|v| v.is_nan()) {
        return Err(Error::Format(format!("no value for node {i}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::build_disk_mesh;

    #[test]
    fn mesh_and_field_survive_a_round_trip() {
        let m = build_disk_mesh(1.0, 0.25).unwrap();
        let mut buf = Vec::new();
        write_mesh_json(&m, &mut buf).unwrap();
        let back = read_mesh_json(buf.as_slice()).unwrap();
        assert_eq!(MeshFile::from(&m), MeshFile::from(&back));

        let vals: Vec<f64> = m.nodes().iter().map(|p| p[0] - 0.3 * p[1]).collect();
        let mut buf = Vec::new();
        write_field_csv(&vals, &mut buf).unwrap();
        assert_eq!(read_field_csv(buf.as_slice(), m.num_nodes()).unwrap(), vals);
    }

    #[test]
    fn incomplete_field_is_rejected() {
        assert!(read_field_csv("node,value\n0,1.0\n".as_bytes(), 2).is_err());
    }
}
