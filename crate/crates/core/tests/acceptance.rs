//! Acceptance checks, one line of output per criterion.
//!
//! Runs without the libtest harness so the report is always printed:
//! `cargo test -p segservo --test acceptance`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use segservo::depth::{estimate, DepthObservation};
use segservo::grasp::{grasp_check, select_wrist_rotation, GripperTemplate};
use segservo::harness::{self, ExperimentKind, Scenario};
use segservo::mask::{area, centroid, jaccard, BinaryMask, MaskError};
use segservo::scene::{CameraModel, Pose, SceneObject, Shape};
use segservo::servo::{control_step, hb_update, CouplingMatrix, JacobianFile, PseudoJacobian, UpdateOutcome};

const HB_TOL: f64 = 1e-12;
const SUGAR_BOX_Z: f64 = 0.2025;
const SUGAR_BOX_TOL: f64 = 0.005;
const SUGAR_BOX_MONOTONE_FROM: usize = 10;
const SQUARE_CUBE_SPREAD_VGA: f64 = 0.02;
const SQUARE_CUBE_SPREAD_2X: f64 = 0.01;
const SQUARE_CUBE_POSITIONS: usize = 12;
const DEPTH_EXACT_TOL: f64 = 1e-6;
const DEPTH_ORACLE_TOL: f64 = 1e-9;
const DEPTH_INSTANCES: usize = 1000;
const LEARN_MAX_UPDATES: usize = 30;
const CENTERED_PX: f64 = 5.0;
const CONTRACTION_TOL: f64 = 1e-9;
const CONTRACTION_TRIALS: usize = 100;
const GRASP_MASKS: usize = 100;
const GRASP_STEP: f64 = PI / 36.0;
const MASK_TRIALS: usize = 10_000;
const CENTROID_TOL: f64 = 1e-12;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&manifest().join("configs").join(name)).unwrap()
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn jac(joints: &[&str], values: DMatrix<f64>) -> PseudoJacobian {
    PseudoJacobian::new(joints.iter().map(|s| s.to_string()).collect(), values).unwrap()
}

fn ones(joints: &[&str], rows: Vec<Vec<bool>>) -> CouplingMatrix {
    CouplingMatrix::new(joints.iter().map(|s| s.to_string()).collect(), rows).unwrap()
}

fn applied(out: UpdateOutcome) -> DMatrix<f64> {
    match out {
        UpdateOutcome::Applied(j) => j.values().clone(),
        other => panic!("update skipped: {other:?}"),
    }
}

fn c1_hb_update() -> String {
    let h1 = ones(&["q"], vec![vec![true]]);
    let j1 = jac(&["q"], DMatrix::from_element(1, 1, 0.001));
    let dq = DVector::from_element(1, 0.01);
    let de = DVector::from_element(1, -5.0);
    let out = applied(hb_update(&j1, &dq, &de, 0.1, &h1, 1e-9).unwrap());
    assert!(near(out[(0, 0)], 0.0007, HB_TOL), "scalar {}", out[(0, 0)]);

    // J⁺Δe = (−0.005, 0.008), Δq − J⁺Δe = (0.015, 0.012), ΔqᵀJ⁺ = (1e-5, 4e-5), denominator 1.1e-4
    let names = ["a", "b"];
    let j2 = jac(&names, DMatrix::from_row_slice(2, 2, &[0.001, 0.0, 0.0, 0.002]));
    let dq = DVector::from_vec(vec![0.01, 0.02]);
    let de = DVector::from_vec(vec![-5.0, 4.0]);
    let diag = ones(&names, vec![vec![true, false], vec![false, true]]);
    let out = applied(hb_update(&j2, &dq, &de, 0.5, &diag, 1e-9).unwrap());
    let want = [0.001 + 0.75 / 1100.0, 0.0, 0.0, 0.002 + 2.4 / 1100.0];
    for (got, want) in out.transpose().iter().zip(want) {
        assert!(near(*got, want, HB_TOL), "diagonal H: {got} vs {want}");
    }
    let full = ones(&names, vec![vec![true, true], vec![true, true]]);
    let out = applied(hb_update(&j2, &dq, &de, 0.5, &full, 1e-9).unwrap());
    let want = [0.001 + 0.75 / 1100.0, 3.0 / 1100.0, 0.6 / 1100.0, 0.002 + 2.4 / 1100.0];
    for (got, want) in out.transpose().iter().zip(want) {
        assert!(near(*got, want, HB_TOL), "full H: {got} vs {want}");
    }

    let frozen = hb_update(&j2, &dq, &de, 0.0, &full, 1e-9).unwrap();
    assert_eq!(frozen.jacobian_or(&j2).values(), j2.values());
    let zero = CouplingMatrix::zeros(vec!["a".into(), "b".into()], 2);
    let gated = hb_update(&j2, &dq, &de, 0.7, &zero, 1e-9).unwrap();
    assert_eq!(gated.jacobian_or(&j2).values(), j2.values());
    "scalar 0.001 -> 0.0007, 2x2 diagonal and full H within 1e-12; alpha=0 and H=0 leave J+ unchanged".into()
}

fn read_column(path: &Path, name: &str) -> Vec<Option<f64>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let col = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader.records().map(|r| r.unwrap()[col].parse().ok()).collect()
}

fn c2_sugar_box_replay() -> String {
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_segservo"))
        .arg("approach-depth")
        .arg("--replay")
        .arg(manifest().join("fixtures/sugar_box_approach.csv"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let z = read_column(&out.path().join("observations.csv"), "z_hat_m");
    assert_eq!(z.len(), 26);
    let last = z.last().copied().flatten().unwrap();
    assert!(near(last, SUGAR_BOX_Z, SUGAR_BOX_TOL), "final {last}");
    let tail: Vec<f64> = z[SUGAR_BOX_MONOTONE_FROM..].iter().map(|v| v.unwrap()).collect();
    assert!(tail.windows(2).all(|w| w[1] <= w[0]), "not monotone after observation {SUGAR_BOX_MONOTONE_FROM}: {tail:?}");
    format!("final z_hat {last:.4} m (target {SUGAR_BOX_Z} +/- {SUGAR_BOX_TOL}), non-increasing from observation {SUGAR_BOX_MONOTONE_FROM}")
}

fn d_sqrt_area_spread(model: &CameraModel, radius: f64) -> f64 {
    let products: Vec<f64> = (0..SQUARE_CUBE_POSITIONS)
        .map(|i| {
            let d = 0.30 + 0.05 * i as f64;
            let ball = SceneObject::new("ball", Shape::Sphere { radius }, Pose::from_translation(0.0, 0.0, d)).unwrap();
            let s = area(&ball.render(&Pose::identity(), model)) as f64;
            d * s.sqrt()
        })
        .collect();
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    let (lo, hi) = products.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &p| (l.min(p), h.max(p)));
    (hi - lo) / mean
}

fn c3_square_cube() -> String {
    let vga = CameraModel::new(500.0, 640, 480).unwrap();
    let radius = 0.0365;
    let low = d_sqrt_area_spread(&vga, radius);
    let high = d_sqrt_area_spread(&vga.scaled(2), radius);
    assert!(low < SQUARE_CUBE_SPREAD_VGA, "640x480 spread {low}");
    assert!(high < SQUARE_CUBE_SPREAD_2X, "1280x960 spread {high}");
    format!(
        "d*sqrt(s_A) spread {:.2}% at 640x480 (< 2%), {:.2}% at 1280x960 (< 1%) over {SQUARE_CUBE_POSITIONS} positions",
        100.0 * low,
        100.0 * high
    )
}

/// Least squares through the 2x2 normal equations, solved by Cramer's rule.
fn normal_equations(obs: &[(f64, f64)]) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(z, s) in obs {
        let r = s.sqrt();
        s11 += r * r;
        s12 += r;
        s22 += 1.0;
        b1 += r * z * r;
        b2 += z * r;
    }
    let det = s11 * s22 - s12 * s12;
    ((b1 * s22 - s12 * b2) / det, (s11 * b2 - s12 * b1) / det)
}

fn c4_depth_exactness() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_exact, mut worst_oracle) = (0.0f64, 0.0f64);
    for _ in 0..DEPTH_INSTANCES {
        let z_obj = rng.random_range(0.0..0.3);
        let c = rng.random_range(5.0..80.0);
        let m = rng.random_range(3..30);
        let gap = rng.random_range(0.3..0.8);
        let start = z_obj + gap;
        // the camera stays above the object
        let step = rng.random_range(0.005..0.02f64).min(0.8 * gap / (m - 1) as f64);
        let clean: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let z_cam = start - step * i as f64;
                (z_cam, (c / (z_cam - z_obj)).powi(2))
            })
            .collect();
        let obs: Vec<DepthObservation> = clean.iter().map(|&(z, s)| DepthObservation::new(z, s).unwrap()).collect();
        let est = estimate(&obs).unwrap();
        worst_exact = worst_exact.max((est.z_object - z_obj).abs());

        let noisy: Vec<(f64, f64)> = clean.iter().map(|&(z, s)| (z, s * rng.random_range(0.95..1.05))).collect();
        let obs: Vec<DepthObservation> = noisy.iter().map(|&(z, s)| DepthObservation::new(z, s).unwrap()).collect();
        let est = estimate(&obs).unwrap();
        let (z_ref, c_ref) = normal_equations(&noisy);
        worst_oracle = worst_oracle.max((est.z_object - z_ref).abs()).max((est.c_object - c_ref).abs() / c_ref.abs().max(1.0));
    }
    assert!(worst_exact <= DEPTH_EXACT_TOL, "noiseless error {worst_exact}");
    assert!(worst_oracle <= DEPTH_ORACLE_TOL, "oracle gap {worst_oracle}");
    format!("{DEPTH_INSTANCES} instances: noiseless error {worst_exact:.1e} m (<= 1e-6), normal-equations gap {worst_oracle:.1e} (<= 1e-9)")
}

fn zero_crossings(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

fn c5_learning() -> String {
    let s = scenario("learn_base.toml");
    let r = harness::learn(&s).unwrap();
    assert!(r.converged, "did not converge");
    let updates = r.updates_to_first_convergence.unwrap();
    assert!(updates <= LEARN_MAX_UPDATES, "{updates} updates");
    let last = r.segments.last().unwrap().2.last_error().unwrap();
    assert!(last[0].hypot(last[1]) <= CENTERED_PX, "final error {last:?}");
    let forward: Vec<f64> = r.trace.iter().map(|j| j.values()[(0, 0)]).collect();
    assert!(forward[0] > 0.0, "forward gain should start with the wrong sign");
    let crossings = zero_crossings(&forward);
    assert_eq!(crossings, 1, "{forward:?}");
    format!("base: centred after {updates} updates (<= {LEARN_MAX_UPDATES}), forward gain crosses zero {crossings} time")
}

fn c6_contraction() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let names = ["a", "b"];
    let mut worst = 0.0f64;
    for _ in 0..CONTRACTION_TRIALS {
        let j = loop {
            let m: Matrix2<f64> = Matrix2::from_fn(|_, _| rng.random_range(-1.0..1.0)) * 200.0;
            if m.determinant().abs() > 100.0 {
                break m;
            }
        };
        let pinv = j.try_inverse().unwrap();
        let jp = jac(&names, DMatrix::from_column_slice(2, 2, pinv.as_slice()));
        let e: [f64; 2] = [rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0)];
        let e_norm = e[0].hypot(e[1]);
        let plant = |gain: f64| {
            let dq = control_step(&jp, &e, gain).unwrap();
            let next = nalgebra::Vector2::new(e[0], e[1]) + j * nalgebra::Vector2::new(dq[0], dq[1]);
            next.norm()
        };
        worst = worst.max(plant(1.0) / e_norm.max(1.0));
        worst = worst.max((plant(0.5) / e_norm - 0.5).abs());
    }
    assert!(worst <= CONTRACTION_TOL, "{worst}");
    format!("{CONTRACTION_TRIALS} random errors: lambda=1 residual and |ratio - 0.5| at lambda=0.5 both <= {worst:.1e}")
}

fn c7_signs() -> String {
    // (config, expected sign of J⁺[0,0], expected sign of J⁺[1,1])
    let cases = [("learn_base.toml", -1.0, 1.0), ("learn_base_grasp.toml", -1.0, 1.0), ("learn_head.toml", 1.0, 1.0)];
    let mut seen = Vec::new();
    for (file, s0, s1) in cases {
        let r = harness::learn(&scenario(file)).unwrap();
        assert!(r.converged, "{file} did not converge");
        let v = r.file.jacobian.values();
        assert_eq!(v[(0, 0)].signum(), s0, "{file}: {v}");
        assert_eq!(v[(1, 1)].signum(), s1, "{file}: {v}");
        seen.push(format!("{} ({:+.5}, {:+.5})", file.trim_end_matches(".toml").trim_start_matches("learn_"), v[(0, 0)], v[(1, 1)]));
    }
    format!("diagonal signs match: {}", seen.join(", "))
}

/// Reference gripper template: convex-polygon containment for every pixel of the image.
fn oracle_template(t: &GripperTemplate, model: &CameraModel, roll: f64) -> Vec<bool> {
    let px = model.focal / t.z_gripper;
    let (cu, cv) = (model.cx + t.offset[0] * px, model.cy + t.offset[1] * px);
    let (hb, inner, outer) = (t.finger_breadth / 2.0 * px, t.opening / 2.0 * px, (t.opening / 2.0 + t.finger_thickness) * px);
    let (s, c) = roll.sin_cos();
    let rot = |x: f64, y: f64| (cu + c * x - s * y, cv + s * x + c * y);
    let polys = [
        [rot(-hb, inner), rot(hb, inner), rot(hb, outer), rot(-hb, outer)],
        [rot(-hb, -outer), rot(hb, -outer), rot(hb, -inner), rot(-hb, -inner)],
    ];
    let tol = 1e-9 * px;
    let inside = |poly: &[(f64, f64); 4], u: f64, v: f64| {
        let sign = |k: usize| {
            let (a, b) = (poly[k], poly[(k + 1) % 4]);
            let (ex, ey) = (b.0 - a.0, b.1 - a.1);
            (ex * (v - a.1) - ey * (u - a.0)) / ex.hypot(ey)
        };
        let d: Vec<f64> = (0..4).map(sign).collect();
        d.iter().all(|&x| x >= -tol) || d.iter().all(|&x| x <= tol)
    };
    let mut out = vec![false; model.width * model.height];
    for v in 0..model.height {
        for u in 0..model.width {
            out[v * model.width + u] = polys.iter().any(|p| inside(p, u as f64, v as f64));
        }
    }
    out
}

fn random_object(rng: &mut ChaCha8Rng, model: &CameraModel, i: usize) -> Vec<(usize, usize)> {
    let (w, h) = (model.width, model.height);
    if i.is_multiple_of(10) {
        // far from every gripper pose: all scores are zero and roll 0 must win
        let (x0, y0) = (rng.random_range(560..620), rng.random_range(10..60));
        return (y0..y0 + 10).flat_map(|y| (x0..x0 + 10).map(move |x| (x, y))).collect();
    }
    // fingers span 135-165 px from the fingertip pixel; a minor semi-axis above that overlaps at every roll
    let wide = i % 2 == 1;
    let (cx, cy) = (220.0 + rng.random_range(-60.0..60.0), 240.0 + rng.random_range(-60.0..60.0));
    let (a, b) = if wide {
        (rng.random_range(180.0..320.0), rng.random_range(140.0..200.0))
    } else {
        (rng.random_range(20.0..150.0), rng.random_range(4.0..40.0))
    };
    let theta = rng.random_range(0.0..PI);
    let (s, c) = theta.sin_cos();
    let blob = (rng.random_range(0.0..1.0) < 0.3)
        .then(|| (cx + rng.random_range(-150.0..150.0), cy + rng.random_range(-150.0..150.0), rng.random_range(5.0..30.0)));
    let mut pixels = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let (p, q) = (c * dx + s * dy, -s * dx + c * dy);
            let body = if wide { (p / a).powi(2) + (q / b).powi(2) <= 1.0 } else { p.abs() <= a && q.abs() <= b };
            let disk = blob.is_some_and(|(bx, by, r)| (x as f64 - bx).hypot(y as f64 - by) <= r);
            if body || disk {
                pixels.push((x, y));
            }
        }
    }
    pixels
}

fn c8_grasp_oracle() -> String {
    let model = CameraModel::new(500.0, 640, 480).unwrap();
    let template = GripperTemplate::default();
    let angles: Vec<f64> = (0..36).map(|k| k as f64 * GRASP_STEP).collect();
    let templates: Vec<Vec<bool>> = angles.iter().map(|&r| oracle_template(&template, &model, r)).collect();
    let template_areas: Vec<usize> = templates.iter().map(|t| t.iter().filter(|&&b| b).count()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ties = 0;
    for i in 0..GRASP_MASKS {
        let pixels = random_object(&mut rng, &model, i);
        let mask = BinaryMask::from_pixels(model.width, model.height, pixels.iter().copied()).unwrap();
        let mut best = (0usize, f64::INFINITY);
        for (k, t) in templates.iter().enumerate() {
            let inter = pixels.iter().filter(|&&(x, y)| t[y * model.width + x]).count();
            let score = inter as f64 / (pixels.len() + template_areas[k] - inter) as f64;
            if score < best.1 {
                best = (k, score);
            }
        }
        let got = select_wrist_rotation(&mask, &template, &model, GRASP_STEP).unwrap();
        let k = (got.wrist_roll / GRASP_STEP).round() as usize;
        assert_eq!((k, got.score), best, "mask {i}");
        ties += usize::from(best.1 == 0.0);
    }
    assert!(ties >= GRASP_MASKS / 10, "tie cases not exercised");
    assert!(GRASP_MASKS - ties >= GRASP_MASKS / 3, "too few masks overlap at every roll");
    assert!(!grasp_check(1000, 400).unwrap());
    assert!(!grasp_check(1000, 500).unwrap());
    assert!(grasp_check(1000, 600).unwrap());
    format!("{GRASP_MASKS} masks ({ties} with zero-overlap ties, {} overlapping at every roll) match the reference template at pi/36; check 400/500/600 of 1000 -> fail/fail/pass", GRASP_MASKS - ties)
}

fn c9_determinism() -> String {
    let runs = [
        ("learn_base.toml", ExperimentKind::Learn),
        ("servo_step.toml", ExperimentKind::ServoStep),
        ("approach_depth.toml", ExperimentKind::ApproachDepth),
        ("approach_replay.toml", ExperimentKind::ApproachDepth),
        ("grasp.toml", ExperimentKind::Grasp),
        ("trials.toml", ExperimentKind::TrialSuite),
    ];
    let mut files = 0;
    for (name, kind) in runs {
        let s = scenario(name);
        let a = harness::run(kind, &s).unwrap();
        let b = harness::run(kind, &s).unwrap();
        assert_eq!(a, b, "{name}");
        files += a.files.len();
    }

    let r = harness::learn(&scenario("learn_base.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    r.file.save(&p1).unwrap();
    JacobianFile::load(&p1).unwrap().save(&p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    format!("{} scenarios rerun with identical output ({files} files); J+ save/load/save byte-identical", runs.len())
}

fn c10_mask_oracles() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..MASK_TRIALS {
        let (w, h) = (rng.random_range(1..48), rng.random_range(1..48));
        let density = rng.random_range(0.0..1.0);
        let grid = |rng: &mut ChaCha8Rng| -> Vec<Vec<bool>> {
            (0..h).map(|_| (0..w).map(|_| rng.random_range(0.0..1.0) < density).collect()).collect()
        };
        let (ga, gb) = (grid(&mut rng), grid(&mut rng));
        let build = |g: &Vec<Vec<bool>>| BinaryMask::from_fn(w, h, |x, y| g[y][x]).unwrap();
        let (a, b) = (build(&ga), build(&gb));

        let (mut n, mut sx, mut sy, mut inter, mut union) = (0usize, 0.0, 0.0, 0usize, 0usize);
        for y in 0..h {
            for x in 0..w {
                if ga[y][x] {
                    n += 1;
                    sx += x as f64;
                    sy += y as f64;
                }
                inter += usize::from(ga[y][x] && gb[y][x]);
                union += usize::from(ga[y][x] || gb[y][x]);
            }
        }
        assert_eq!(area(&a), n);
        match centroid(&a) {
            Ok(c) => assert!(near(c.x, sx / n as f64, CENTROID_TOL) && near(c.y, sy / n as f64, CENTROID_TOL)),
            Err(e) => assert!(n == 0 && e == MaskError::EmptyMask, "{e:?}"),
        }
        match jaccard(&a, &b) {
            Ok(j) => assert_eq!(j, inter as f64 / union as f64),
            Err(e) => assert!(union == 0 && e == MaskError::EmptyUnion, "{e:?}"),
        }
    }
    format!("{MASK_TRIALS} random masks: area and jaccard exact, centroid within 1e-12")
}

/// Name, runtime budget in seconds, check.
type Criterion = (&'static str, f64, fn() -> String);

fn main() {
    let criteria: [Criterion; 10] = [
        ("hadamard-broyden update", 1.0, c1_hb_update),
        ("sugar box approach replay", 1.0, c2_sugar_box_replay),
        ("square-cube invariance", 30.0, c3_square_cube),
        ("noiseless depth and least-squares oracle", 10.0, c4_depth_exactness),
        ("online learning on the base", 30.0, c5_learning),
        ("linear-plant contraction", 1.0, c6_contraction),
        ("learned gain signs", 120.0, c7_signs),
        ("wrist-roll selection oracle", 30.0, c8_grasp_oracle),
        ("determinism and persistence", 10.0, c9_determinism),
        ("mask feature oracles", 30.0, c10_mask_oracles),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        let timing = format!("{:.2}s, budget {budget}s", took.as_secs_f64());
        match result {
            Ok(detail) => {
                let over = if took > Duration::from_secs_f64(*budget) { " [over budget in this build]" } else { "" };
                println!("criterion {:>2} PASS  {name}: {detail} ({timing}){over}", i + 1);
            }
            Err(panic) => {
                failed += 1;
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {:>2} FAIL  {name}: {msg} ({timing})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
