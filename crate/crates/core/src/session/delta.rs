//! Incremental mesh updates sent to clients after every command.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::mesh::{MeshError, TriMesh};

/// Turns `old` into `new`: resize to `vertex_count`, overwrite the listed
/// vertices, drop the listed face indices (of `old`, order kept) and append
/// `faces_added`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeshDelta {
    pub vertex_count: usize,
    /// `[index, x, y, z]`.
    pub vertices: Vec<(u32, f64, f64, f64)>,
    pub faces_added: Vec<[u32; 3]>,
    pub faces_removed: Vec<u32>,
}

impl MeshDelta {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.faces_added.is_empty() && self.faces_removed.is_empty()
    }

    pub fn changes_connectivity(&self) -> bool {
        !self.faces_added.is_empty() || !self.faces_removed.is_empty()
    }
}

fn same_point(a: &Point, b: &Point) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Vertices that differ bitwise or are new; faces matched greedily in order
/// so that kept faces need not be resent.
pub fn diff(old: &TriMesh, new: &TriMesh) -> MeshDelta {
    let vertices = new
        .positions()
        .iter()
        .enumerate()
        .filter(|&(i, p)| old.positions().get(i).is_none_or(|q| !same_point(p, q)))
        .map(|(i, p)| (i as u32, p.x, p.y, p.z))
        .collect();
    let (of, nf) = (old.faces(), new.faces());
    let mut faces_removed = Vec::new();
    let mut j = 0;
    for (i, f) in of.iter().enumerate() {
        if j < nf.len() && nf[j] == *f {
            j += 1;
        } else {
            faces_removed.push(i as u32);
        }
    }
    let faces_added = nf[j..].iter().map(|f| f.map(|v| v as u32)).collect();
    MeshDelta { vertex_count: new.vertex_count(), vertices, faces_added, faces_removed }
}

pub fn apply_delta(old: &TriMesh, delta: &MeshDelta) -> Result<TriMesh, MeshError> {
    let mut positions: Vec<Option<Point>> = (0..delta.vertex_count).map(|i| old.positions().get(i).copied()).collect();
    for &(i, x, y, z) in &delta.vertices {
        let i = i as usize;
        if i >= delta.vertex_count {
            return Err(MeshError::PositionCount { expected: delta.vertex_count, found: i + 1 });
        }
        positions[i] = Some(Point::new(x, y, z));
    }
    let positions: Vec<Point> = positions
        .into_iter()
        .collect::<Option<_>>()
        .ok_or(MeshError::PositionCount { expected: delta.vertex_count, found: old.vertex_count() })?;
    let removed: BTreeSet<usize> = delta.faces_removed.iter().map(|&f| f as usize).collect();
    let mut faces: Vec<[usize; 3]> =
        old.faces().iter().enumerate().filter(|(i, _)| !removed.contains(i)).map(|(_, f)| *f).collect();
    faces.extend(delta.faces_added.iter().map(|f| f.map(|v| v as usize)));
    if positions.is_empty() && faces.is_empty() {
        return Ok(TriMesh::empty());
    }
    TriMesh::new(positions, faces)
}
