//! Occluding contours and projected strokes, thinned to one pixel.

use std::collections::BTreeMap;

use super::{rasterize, GBuffer, OrthoCamera, RasterImage};
use crate::geom::Point;
use crate::mesh::TriMesh;
use crate::stroke::Stroke;

/// Depth slack (normalized units) when testing a line sample against the
/// z-buffer.
const VISIBILITY_SLACK: f64 = 0.02;
/// Line sampling step in pixels.
const LINE_STEP: f64 = 0.25;

/// Mesh edges whose two faces face opposite ways relative to the camera,
/// plus boundary edges, union the projected strokes; visible parts only,
/// thinned to 1-pixel width. Values are 0 or 1.
pub fn render_contours(mesh: &TriMesh, cam: &OrthoCamera, strokes: &[Stroke]) -> RasterImage {
    let g = rasterize(mesh, cam);
    let mut img = RasterImage::filled(cam.width, cam.height, 1, 0.0).expect("camera dimensions are positive");
    let view = cam.toward_viewer();
    let facing: Vec<bool> = (0..mesh.face_count()).map(|f| mesh.face_normal(f).dot(&view) > 0.0).collect();
    let mut edge_faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (f, tri) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }
    let x = mesh.positions();
    for ((a, b), faces) in &edge_faces {
        let contour = match faces.as_slice() {
            [_] => true,
            [f0, f1] => facing[*f0] != facing[*f1],
            _ => false,
        };
        if contour {
            draw_segment(&mut img, &g, cam, &x[*a], &x[*b]);
        }
    }
    for s in strokes {
        match s.points.as_slice() {
            [] => {}
            [p] => draw_segment(&mut img, &g, cam, p, p),
            pts => {
                for w in pts.windows(2) {
                    draw_segment(&mut img, &g, cam, &w[0], &w[1]);
                }
            }
        }
    }
    thin(&img)
}

fn draw_segment(img: &mut RasterImage, g: &GBuffer, cam: &OrthoCamera, a: &Point, b: &Point) {
    let pa = cam.project(a);
    let pb = cam.project(b);
    let len = ((pb.0 - pa.0).powi(2) + (pb.1 - pa.1).powi(2)).sqrt();
    let steps = (len / LINE_STEP).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let c = pa.0 + (pb.0 - pa.0) * t;
        let r = pa.1 + (pb.1 - pa.1) * t;
        let d = pa.2 + (pb.2 - pa.2) * t;
        if c < 0.0 || r < 0.0 || c >= cam.width as f64 || r >= cam.height as f64 {
            continue;
        }
        let (col, row) = (c as usize, r as usize);
        if d <= farthest_nearby(g, col, row) + VISIBILITY_SLACK {
            img.pixel_mut(col, row)[0] = 1.0;
        }
    }
}

/// Largest z-buffer depth in the 3×3 block around a pixel (∞ if any of it
/// is uncovered). Depth changes fastest exactly where contours lie, so a
/// single-pixel test would hide them.
fn farthest_nearby(g: &GBuffer, col: usize, row: usize) -> f64 {
    let mut far = f64::NEG_INFINITY;
    for r in row.saturating_sub(1)..=(row + 1).min(g.height - 1) {
        for c in col.saturating_sub(1)..=(col + 1).min(g.width - 1) {
            let i = r * g.width + c;
            if g.face[i].is_none() {
                return f64::INFINITY;
            }
            far = far.max(g.depth[i]);
        }
    }
    far
}

/// Zhang–Suen thinning of the non-zero pixels of channel 0.
pub fn thin(img: &RasterImage) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    let mut on: Vec<bool> = (0..w * h).map(|i| img.get(i % w, i / w, 0) != 0.0).collect();
    let at = |on: &[bool], c: isize, r: isize| -> bool {
        c >= 0 && r >= 0 && (c as usize) < w && (r as usize) < h && on[r as usize * w + c as usize]
    };
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for r in 0..h as isize {
                for c in 0..w as isize {
                    if !on[r as usize * w + c as usize] {
                        continue;
                    }
                    // P2..P9 clockwise from north.
                    let n = [
                        at(&on, c, r - 1),
                        at(&on, c + 1, r - 1),
                        at(&on, c + 1, r),
                        at(&on, c + 1, r + 1),
                        at(&on, c, r + 1),
                        at(&on, c - 1, r + 1),
                        at(&on, c - 1, r),
                        at(&on, c - 1, r - 1),
                    ];
                    let count = n.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&count) {
                        continue;
                    }
                    let transitions = (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count();
                    if transitions != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
                    let ok = if pass == 0 {
                        !(p2 && p4 && p6) && !(p4 && p6 && p8)
                    } else {
                        !(p2 && p4 && p8) && !(p2 && p6 && p8)
                    };
                    if ok {
                        remove.push(r as usize * w + c as usize);
                    }
                }
            }
            changed |= !remove.is_empty();
            for i in remove {
                on[i] = false;
            }
        }
        if !changed {
            break;
        }
    }
    // Staircase corners: a pixel with two orthogonal 4-neighbours on is
    // redundant when removing it keeps the 8-neighbourhood connected (Yokoi
    // connectivity number 1). Removed in scan order so each test sees the
    // current state.
    for r in 0..h as isize {
        for c in 0..w as isize {
            if !on[r as usize * w + c as usize] {
                continue;
            }
            // E, NE, N, NW, W, SW, S, SE.
            let x = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)]
                .map(|(dc, dr)| at(&on, c + dc, r + dr));
            let corner = (0..4).any(|k| x[2 * k] && x[(2 * k + 2) % 8]);
            let off = |k: usize| !x[k % 8] as u8;
            let yokoi: u8 = [0, 2, 4, 6].iter().map(|&k| off(k) - off(k) * off(k + 1) * off(k + 2)).sum();
            if corner && yokoi == 1 {
                on[r as usize * w + c as usize] = false;
            }
        }
    }
    let data = on.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    RasterImage::from_data(w, h, 1, data).expect("same dimensions")
}
