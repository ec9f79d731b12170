use std::collections::HashMap;

use super::{MeshError, TriMesh, VertexRegion};

/// Splits every face whose three corners are in `region` 1→4 at its edge
/// midpoints. Faces sharing a split edge with the region are split 1→2 or
/// 1→3 so that no T-junction remains.
///
/// Original vertices keep their indices and positions; midpoints are appended.
/// Untouched faces keep their relative order at the front of the face list and
/// all new faces follow. The returned region also contains the new midpoints.
pub fn midpoint_subdivide(mesh: &TriMesh, region: &VertexRegion) -> Result<(TriMesh, VertexRegion), MeshError> {
    if region.is_empty() {
        return Ok((mesh.clone(), region.clone()));
    }
    let inside = region.mask(mesh.vertex_count());
    let mut edges = Vec::new();
    for tri in mesh.faces() {
        if tri.iter().all(|&i| inside[i]) {
            for k in 0..3 {
                edges.push((tri[k], tri[(k + 1) % 3]));
            }
        }
    }
    if edges.is_empty() {
        return Ok((mesh.clone(), region.clone()));
    }
    let (out, new_ids) = split_edges(mesh, &edges)?;
    let region = VertexRegion::new(&out, region.members().iter().copied().chain(new_ids))?;
    Ok((out, region))
}

/// Interior edges whose endpoints both lie on the open boundary.
pub fn boundary_chords(mesh: &TriMesh) -> Vec<(usize, usize)> {
    let mut on_boundary = vec![false; mesh.vertex_count()];
    for (a, b) in mesh.boundary_edges() {
        on_boundary[a] = true;
        on_boundary[b] = true;
    }
    mesh.edges()
        .into_iter()
        .filter(|&((a, b), count)| count == 2 && on_boundary[a] && on_boundary[b])
        .map(|(e, _)| e)
        .collect()
}

/// Splits every boundary chord at its midpoint so that no interior edge
/// connects two boundary vertices.
pub fn split_boundary_chords(mesh: &TriMesh) -> Result<TriMesh, MeshError> {
    let chords = boundary_chords(mesh);
    if chords.is_empty() {
        return Ok(mesh.clone());
    }
    Ok(split_edges(mesh, &chords)?.0)
}

/// Splits the given undirected edges at their midpoints with conforming 1→2,
/// 1→3 and 1→4 face splits. Returns the new mesh and the midpoint indices in
/// order of first appearance in `edges`.
pub fn split_edges(mesh: &TriMesh, edges: &[(usize, usize)]) -> Result<(TriMesh, Vec<usize>), MeshError> {
    let mut positions = mesh.positions().to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut new_ids = Vec::new();
    for &(a, b) in edges {
        midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
            positions.push(nalgebra::center(&positions[a], &positions[b]));
            new_ids.push(positions.len() - 1);
            positions.len() - 1
        });
    }
    if new_ids.is_empty() {
        return Ok((mesh.clone(), new_ids));
    }
    let split = |a: usize, b: usize| midpoint.get(&(a.min(b), a.max(b))).copied();

    let mut kept = Vec::with_capacity(mesh.face_count());
    let mut added = Vec::new();
    for tri in mesh.faces() {
        let mids = [split(tri[0], tri[1]), split(tri[1], tri[2]), split(tri[2], tri[0])];
        match mids.iter().filter(|m| m.is_some()).count() {
            0 => kept.push(*tri),
            3 => {
                let [a, b, c] = *tri;
                let [ab, bc, ca] = mids.map(|m| m.unwrap());
                added.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            }
            1 => {
                let k = mids.iter().position(|m| m.is_some()).unwrap();
                let (x, y, z) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let m = mids[k].unwrap();
                added.extend_from_slice(&[[x, m, z], [m, y, z]]);
            }
            _ => {
                // Rotate so the unsplit edge is (c, a).
                let k = mids.iter().position(|m| m.is_none()).unwrap();
                let r = (k + 1) % 3;
                let (a, b, c) = (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]);
                let (mab, mbc) = (mids[r].unwrap(), mids[(r + 1) % 3].unwrap());
                added.push([mab, b, mbc]);
                let d1 = (positions[a] - positions[mbc]).norm_squared();
                let d2 = (positions[mab] - positions[c]).norm_squared();
                if d1 <= d2 {
                    added.extend_from_slice(&[[a, mab, mbc], [a, mbc, c]]);
                } else {
                    added.extend_from_slice(&[[a, mab, c], [mab, mbc, c]]);
                }
            }
        }
    }
    kept.extend(added);
    Ok((TriMesh::new(positions, kept)?, new_ids))
}
