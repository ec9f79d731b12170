//! Reference shapes used by tests, examples and the CLI.

use std::collections::HashMap;

use super::TriMesh;
use crate::geom::Point;

/// Flat grid in the `z = 0` plane centered at the origin, `cols × rows`
/// cells each split into two counterclockwise triangles.
pub fn grid(cols: usize, rows: usize, width: f64, height: f64) -> TriMesh {
    let mut positions = Vec::with_capacity((cols + 1) * (rows + 1));
    for j in 0..=rows {
        for i in 0..=cols {
            positions.push(Point::new(
                width * (i as f64 / cols as f64 - 0.5),
                height * (j as f64 / rows as f64 - 0.5),
                0.0,
            ));
        }
    }
    let idx = |i: usize, j: usize| j * (cols + 1) + i;
    let mut faces = Vec::with_capacity(2 * cols * rows);
    for j in 0..rows {
        for i in 0..cols {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new(positions, faces).expect("grid is valid")
}

/// Axis-aligned cube centered at the origin, 8 vertices and 12 faces.
pub fn cube(side: f64) -> TriMesh {
    let h = side / 2.0;
    let positions = (0..8)
        .map(|i| {
            Point::new(
                if i & 1 == 0 { -h } else { h },
                if i & 2 == 0 { -h } else { h },
                if i & 4 == 0 { -h } else { h },
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriMesh::new(positions, faces).expect("cube is valid")
}

/// Regular tetrahedron centered at the origin (vertices sum to zero).
pub fn tetrahedron(radius: f64) -> TriMesh {
    let s = radius / 3f64.sqrt();
    let positions = vec![Point::new(s, s, s), Point::new(s, -s, -s), Point::new(-s, s, -s), Point::new(-s, -s, s)];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(positions, faces).expect("tetrahedron is valid")
}

pub fn octahedron(radius: f64) -> TriMesh {
    let r = radius;
    let positions = vec![
        Point::new(r, 0.0, 0.0),
        Point::new(-r, 0.0, 0.0),
        Point::new(0.0, r, 0.0),
        Point::new(0.0, -r, 0.0),
        Point::new(0.0, 0.0, r),
        Point::new(0.0, 0.0, -r),
    ];
    let faces = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    TriMesh::new(positions, faces).expect("octahedron is valid")
}

/// Subdivided icosahedron with all vertices on the sphere of `radius`.
pub fn icosphere(level: u32, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: usize, j: usize| {
                *midpoints.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    positions.push(nalgebra::center(&positions[i], &positions[j]));
                    positions.len() - 1
                })
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for p in &mut positions {
        *p = Point::from(p.coords.normalize() * radius);
    }
    TriMesh::new(positions, faces).expect("icosphere is valid")
}
