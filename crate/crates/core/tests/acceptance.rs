//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sketchmesh::deform::*;
use sketchmesh::geom::{Point, Vector};
use sketchmesh::implicit::*;
use sketchmesh::mesh::obj::to_obj_string;
use sketchmesh::mesh::{bilateral_normal_filter, grid, icosphere, BilateralParams, TriMesh, VertexRegion};
use sketchmesh::raster::{compose_detail_input, render_detail_inputs, write_stack, DEFAULT_SIZE, STACK_CHANNELS};
use sketchmesh::refine::*;
use sketchmesh::session::{replay, EngineConfig, SessionLog};
use sketchmesh::silhouette::*;
use sketchmesh::stroke::Stroke;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_dist(a: &[Point], b: &[Point]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

fn uniform_laplacian(mesh: &TriMesh, i: usize) -> Vector {
    let nb = mesh.neighbors(i);
    nb.iter().map(|&j| mesh.positions()[j].coords).sum::<Vector>() / nb.len() as f64 - mesh.positions()[i].coords
}

fn circle(n: usize, r: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

fn constant_diffusion() -> Check {
    let g = grid(70, 70, 1.0, 1.0);
    let boundary: Vec<usize> = g.boundary_edges().iter().map(|&(a, _)| a).collect();
    let cons: BTreeMap<usize, f64> = boundary.iter().map(|&i| (i, 0.7)).collect();
    let t = Instant::now();
    let f = diffuse_magnitudes(&g, &cons).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let err = f.values.iter().map(|v| (v - 0.7).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-8 && secs < 1.0, format!("{} vertices, max error {err:.2e}, {secs:.3} s", g.vertex_count()))
}

fn membrane() -> Check {
    let curve = SilhouetteCurve::new(&circle(64, 1.0)).map_err(|e| e.to_string())?;
    let disk = triangulate_polygon(&curve).map_err(|e| e.to_string())?;
    let pinned: BTreeMap<usize, Point> = disk
        .boundary_edges()
        .iter()
        .map(|&(i, _)| {
            let p = disk.positions()[i];
            (i, Point::new(p.x, p.y, 0.3 * (2.0 * p.y.atan2(p.x)).sin()))
        })
        .collect();
    let out =
        solve_positions(&disk, &vec![Vector::zeros(); disk.vertex_count()], &pinned).map_err(|e| e.to_string())?;
    let bound = 1e-6 * out.bbox_diagonal();
    let worst = (0..out.vertex_count())
        .filter(|i| !pinned.contains_key(i))
        .map(|i| uniform_laplacian(&out, i).norm())
        .fold(0.0, f64::max);
    ensure(
        worst <= bound,
        format!("{} interior vertices, max |L(v)| {worst:.2e} (bound {bound:.2e})", out.vertex_count() - pinned.len()),
    )
}

/// Scalar walk along a ray: `r ← r + d·sign(f(r) − α)`, `d` scaled by the
/// ratio whenever the sign flips.
fn radial_walk(r0: f64, w: f64, s: &ProjectionSchedule) -> Vec<f64> {
    let occ = |r: f64| (0.5 - (r - 1.0) / w).clamp(0.0, 1.0);
    let (mut r, mut d, mut prev) = (r0, s.step0, 0.0f64);
    let mut out = vec![r];
    for _ in 0..s.iters {
        let diff = occ(r) - s.alpha;
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        if sign != 0.0 && prev != 0.0 && sign != prev {
            d *= s.ratio;
        }
        prev = sign;
        r += d * sign;
        out.push(r);
    }
    out
}

const W: f64 = 0.05;

fn projection_oracle() -> Check {
    let s = ProjectionSchedule::default();
    if (s.step0, s.ratio, s.alpha, s.iters) != (0.1, 0.5, 0.5, 5) {
        return Err(format!("schedule {s:?}"));
    }
    let field = AnalyticField::sphere(Point::origin(), 1.0, W).map_err(|e| e.to_string())?;
    let mesh = icosphere(4, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let starts: Vec<Point> = mesh.positions().iter().map(|u| Point::from(u.coords * rng.gen_range(0.3..1.7))).collect();
    let normals: Vec<Vector> = starts.iter().map(|p| p.coords.normalize()).collect();
    let p = project_points(&starts, &normals, None, &field, &s, true).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (path, start) in p.trajectories.iter().zip(&starts) {
        let oracle = radial_walk(start.coords.norm(), W, &s);
        if path.len() != oracle.len() {
            return Err(format!("trajectory has {} points, oracle {}", path.len(), oracle.len()));
        }
        for (q, r) in path.iter().zip(&oracle) {
            worst =
                worst.max((q.coords.norm() - r).abs()).max((q.coords.normalize() - start.coords.normalize()).norm());
        }
    }
    ensure(worst <= 1e-12, format!("{} trajectories x 5 steps, max deviation {worst:.2e}", starts.len()))
}

fn sphere_fit() -> Check {
    let s = ProjectionSchedule::default();
    let bound = (-8i32..=8)
        .map(|k| 1.3 + k as f64 * f64::EPSILON * 1.3)
        .map(|r| (radial_walk(r, W, &s).last().unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let field = AnalyticField::sphere(Point::origin(), 1.0, W).map_err(|e| e.to_string())?;
    let mesh = icosphere(5, 1.3);
    let residual = |m: &TriMesh| m.positions().iter().map(|q| (q.coords.norm() - 1.0).abs()).fold(0.0, f64::max);
    let one = refine_coarse(&mesh, &field, &CoarseParams::default()).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let two = refine_coarse(&mesh, &field, &CoarseParams { outer_rounds: 2, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let (r1, r2) = (residual(&one), residual(&two));
    ensure(
        r2 <= bound && secs < 1.0,
        format!(
            "{} vertices, oracle bound {bound:.4}, residual {r2:.4} with 2 rounds ({r1:.5} with 1), {secs:.3} s",
            mesh.vertex_count()
        ),
    )
}

fn fit_exactness() -> Check {
    let m = icosphere(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let targets: Vec<Point> =
        m.positions().iter().map(|p| p + Vector::new(rng.gen(), rng.gen(), rng.gen()) * 0.1).collect();
    let exact = fit_with_smoothness(&m, &targets, &FitParams::new(0.0)).map_err(|e| e.to_string())?;
    let e0 = max_dist(exact.positions(), &targets);
    let t = Vector::new(0.3, -1.7, 2.5);
    let moved = m.with_positions(m.positions().iter().map(|p| p + t).collect()).map_err(|e| e.to_string())?;
    let shifted: Vec<Point> = targets.iter().map(|p| p + t).collect();
    let mut eq = 0.0f64;
    for lambda in [0.0, DETAIL_LAMBDA, 1.0] {
        let a = fit_with_smoothness(&m, &targets, &FitParams::new(lambda)).map_err(|e| e.to_string())?;
        let b = fit_with_smoothness(&moved, &shifted, &FitParams::new(lambda)).map_err(|e| e.to_string())?;
        let expect: Vec<Point> = a.positions().iter().map(|p| p + t).collect();
        eq = eq.max(max_dist(b.positions(), &expect));
    }
    ensure(
        e0 <= 1e-10 && eq <= 1e-9 && DETAIL_LAMBDA == 0.2 && CarveParams::default().lambda == 0.2,
        format!("λ=0 error {e0:.2e}, translation error {eq:.2e}, detail λ {}", CarveParams::default().lambda),
    )
}

fn detail_locality() -> Check {
    let s = ProjectionSchedule::default();
    let m = icosphere(4, 1.0);
    let stroke: Vec<Point> =
        (0..=8).map(|k| -0.4 + 0.1 * k as f64).map(|t: f64| Point::new(t.sin(), 0.0, t.cos())).collect();
    let field = mesh_to_field(&m, 0.02).map_err(|e| e.to_string())?;
    let out =
        carve_details(&m, &[Stroke::on_surface(stroke)], &field, &CarveParams::default()).map_err(|e| e.to_string())?;
    let sub = &out.subdivided;
    let outside = (0..sub.vertex_count()).filter(|&v| !out.region.contains(v) && !out.band.contains(v));
    let mut changed = 0usize;
    let mut count = 0usize;
    for v in outside {
        count += 1;
        let (a, b) = (out.mesh.positions()[v], sub.positions()[v]);
        if a.x.to_bits() != b.x.to_bits() || a.y.to_bits() != b.y.to_bits() || a.z.to_bits() != b.z.to_bits() {
            changed += 1;
        }
    }
    let prefix_kept = sub.positions()[..m.vertex_count()] == *m.positions();
    let moved =
        out.region.members().iter().map(|&v| (out.mesh.positions()[v] - sub.positions()[v]).norm()).fold(0.0, f64::max);
    let bound = s.step0 * s.ratio.powi(4);
    ensure(
        changed == 0 && prefix_kept && moved <= bound,
        format!(
            "{changed} of {count} outside vertices changed, region {} + band {}, self-field displacement {moved:.4} (bound {bound:.4})",
            out.region.len(),
            out.band.len()
        ),
    )
}

fn handle_deformation() -> Check {
    let err = |e: DeformError| e.to_string();
    let m = icosphere(4, 1.0);
    let h = HandleCurve::new(&m, vec![3, 50, 51], ANCHOR_RINGS).map_err(err)?;
    let rest = h.rest_targets(&m);
    let still =
        deform_fresh(&m, &h.clone().with_targets(rest.clone()).map_err(err)?, DeformParams::default()).map_err(err)?;
    let noop = max_dist(still.positions(), m.positions());

    let pull: Vec<Point> = rest.iter().map(|p| p + Vector::new(0.0, 0.05, 0.1)).collect();
    let t = Vector::new(1.5, -0.25, 2.0);
    let moved = m.with_positions(m.positions().iter().map(|p| p + t).collect()).map_err(|e| e.to_string())?;
    let a =
        deform_fresh(&m, &h.clone().with_targets(pull.clone()).map_err(err)?, DeformParams::default()).map_err(err)?;
    let b = deform_fresh(
        &moved,
        &h.clone().with_targets(pull.iter().map(|p| p + t).collect()).map_err(err)?,
        DeformParams::default(),
    )
    .map_err(err)?;
    let expect: Vec<Point> = a.positions().iter().map(|p| p + t).collect();
    let equiv = max_dist(b.positions(), &expect);

    let hp = h.with_targets(pull).map_err(err)?;
    let sys = prefactorize(&m, &hp, DeformParams::default()).map_err(err)?;
    let pre = deform(&m, &hp, &sys).map_err(err)?;
    let agree = max_dist(pre.positions(), a.positions());
    ensure(
        noop <= 1e-8 && equiv <= 1e-8 && agree <= 1e-12,
        format!("identity {noop:.2e}, translation {equiv:.2e}, prefactorized vs fresh {agree:.2e}"),
    )
}

fn bilateral() -> Check {
    let deviation = |mesh: &TriMesh| {
        let total: f64 = (0..mesh.face_count()).map(|f| mesh.face_normal(f).z.clamp(-1.0, 1.0).acos()).sum();
        total.to_degrees() / mesh.face_count() as f64
    };
    let params = BilateralParams::default();
    let g = grid(20, 20, 1.0, 1.0);
    let clean = bilateral_normal_filter(&g, &VertexRegion::all(&g), &params).map_err(|e| e.to_string())?;
    let drift = max_dist(clean.positions(), g.positions());
    let sigma = 0.01 * g.bbox_diagonal();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let noise = Normal::new(0.0, sigma).map_err(|e| e.to_string())?;
    let noisy = g
        .with_positions(g.positions().iter().map(|p| Point::new(p.x, p.y, noise.sample(&mut rng))).collect())
        .map_err(|e| e.to_string())?;
    let out = bilateral_normal_filter(&noisy, &VertexRegion::all(&noisy), &params).map_err(|e| e.to_string())?;
    let (before, after) = (deviation(&noisy), deviation(&out));
    let reduction = 1.0 - after / before;
    ensure(
        drift <= 1e-9 && reduction >= 0.5 && params.iters == 3,
        format!(
            "clean drift {drift:.2e}, deviation {before:.2}° → {after:.2}° ({:.0}% reduction, {} iterations)",
            reduction * 100.0,
            params.iters
        ),
    )
}

fn constants() -> Check {
    let s = Stroke::on_surface(vec![Point::origin(), Point::new(1.0, 2.0, 0.5), Point::new(-1.0, 0.3, 0.2)]);
    let g = voxelize_strokes(&[s], DEFAULT_RESOLUTION).map_err(|e| e.to_string())?;
    let sphere = icosphere(3, 1.0);
    let a = sample_points(&sphere, 60_000, 0.9, 0.02, 3).map_err(|e| e.to_string())?;
    let b = sample_points(&sphere, 8_000, 7.0 / 8.0, 0.02, 3).map_err(|e| e.to_string())?;
    let head = icosphere(3, 0.5);
    let inputs = render_detail_inputs(&head, &[], DEFAULT_SIZE);
    let stack = compose_detail_input(&inputs.sketch, &inputs.normals, &inputs.front_depth, &inputs.back_depth)
        .map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    write_stack(&stack, &mut bytes).map_err(|e| e.to_string())?;
    let dims = (stack.width(), stack.height(), stack.channels());
    ensure(
        g.resolution() == 128
            && STROKE_SAMPLES == 3000
            && (a.near_count, a.uniform_count()) == (54_000, 6_000)
            && (b.near_count, b.uniform_count()) == (7_000, 1_000)
            && dims == (256, 256, STACK_CHANNELS)
            && bytes.len() == 20 + 256 * 256 * STACK_CHANNELS * 4,
        format!(
            "voxels {}³ from {STROKE_SAMPLES} samples, mixtures {}/{} and {}/{}, stack {}x{}x{}",
            g.resolution(),
            a.near_count,
            a.uniform_count(),
            b.near_count,
            b.uniform_count(),
            dims.0,
            dims.1,
            dims.2
        ),
    )
}

fn replay_determinism() -> Check {
    let config = EngineConfig::default();
    let log = common::scripted_log();
    let run = |log: &SessionLog| replay(log, &config).map(|s| to_obj_string(s.mesh())).map_err(|e| e.to_string());
    let (first, second) = (run(&log)?, run(&log)?);
    let text = log.to_jsonl();
    let parsed = SessionLog::from_jsonl(&text).map_err(|e| e.to_string())?;
    let third = run(&parsed)?;
    ensure(
        log.commands.len() == 30 && first == second && first == third && parsed == log,
        format!(
            "{} commands, OBJ {} bytes, two replays and serde round trip identical: {}",
            log.commands.len(),
            first.len(),
            first == second && first == third
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("constant-field diffusion exactness", constant_diffusion),
        ("membrane property", membrane),
        ("projection oracle equivalence", projection_oracle),
        ("sphere-fit residual", sphere_fit),
        ("fit exactness and equivariance", fit_exactness),
        ("detail locality", detail_locality),
        ("handle deformation", handle_deformation),
        ("bilateral filter", bilateral),
        ("constants", constants),
        ("replay determinism", replay_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let (tag, detail) = match std::panic::catch_unwind(check) {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(_) => ("FAIL", "panicked".to_string()),
        };
        failed += (tag == "FAIL") as usize;
        println!("{tag} {:>2} {name}: {detail}", k + 1);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
