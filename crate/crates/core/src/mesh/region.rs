use std::collections::{BTreeSet, VecDeque};

use super::{MeshError, TriMesh};

/// A set of mesh vertices plus the members that touch the outside.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VertexRegion {
    members: BTreeSet<usize>,
    boundary_ring: Vec<usize>,
}

impl VertexRegion {
    pub fn new(mesh: &TriMesh, members: impl IntoIterator<Item = usize>) -> Result<Self, MeshError> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&bad) = members.iter().find(|&&i| i >= mesh.vertex_count()) {
            return Err(MeshError::RegionOutOfRange { index: bad, count: mesh.vertex_count() });
        }
        let boundary_ring =
            members.iter().copied().filter(|&i| mesh.neighbors(i).iter().any(|j| !members.contains(j))).collect();
        Ok(Self { members, boundary_ring })
    }

    pub fn all(mesh: &TriMesh) -> Self {
        Self::new(mesh, 0..mesh.vertex_count()).expect("indices in range")
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    /// Members with at least one neighbor outside, ascending.
    pub fn boundary_ring(&self) -> &[usize] {
        &self.boundary_ring
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Membership as a dense mask over `n` vertices.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.members {
            m[i] = true;
        }
        m
    }

    /// Vertices within `rings` edges of the region that are not members.
    pub fn band(&self, mesh: &TriMesh, rings: usize) -> Result<VertexRegion, MeshError> {
        let grown = k_ring(mesh, self.members.iter().copied(), rings);
        VertexRegion::new(mesh, grown.into_iter().filter(|i| !self.members.contains(i)))
    }
}

/// Graph distance (in edges) from the nearest seed; `usize::MAX` if unreachable.
pub fn ring_distances(mesh: &TriMesh, seeds: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; mesh.vertex_count()];
    let mut queue = VecDeque::new();
    for s in seeds {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in mesh.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// All vertices within `k` edges of a seed (seeds included).
pub fn k_ring(mesh: &TriMesh, seeds: impl IntoIterator<Item = usize>, k: usize) -> BTreeSet<usize> {
    ring_distances(mesh, seeds).into_iter().enumerate().filter(|&(_, d)| d <= k).map(|(i, _)| i).collect()
}
