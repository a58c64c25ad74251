//! Acceptance checks. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p heatdecode-cli --test acceptance -- --nocapture` to see them.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use heatdecode::io::{decode_hmap, encode_hmap, read_annotations, write_annotations, AnnotationRecord, LandmarkStatus};
use heatdecode::{
    decode_distribution_aware, encode, multilaterate, Anchor, AnchorSet, Coordinate, DecodeConfig, DecoderKind,
    EncodingConfig, EncodingMode, Heatmap, Normalization,
};
use heatdecode_cli::{run_bench, run_sweep, BenchConfig, BenchOutcome, SweepConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESOLUTIONS: [&str; 5] = ["64x64", "32x32", "16x16", "8x8", "4x4"];

fn report(id: u32, what: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {what} ({detail})");
}

fn default_bench() -> &'static (BenchOutcome, Duration) {
    static RUN: OnceLock<(BenchOutcome, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let out = run_bench(&BenchConfig::default()).expect("bench runs");
        (out, start.elapsed())
    })
}

fn heatdecode() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heatdecode"))
}

#[test]
fn criterion_1_multilateration_is_exact_at_every_resolution() {
    let (out, elapsed) = default_bench();
    let worst = RESOLUTIONS
        .iter()
        .map(|r| out.nme.get("multilateration", r).unwrap())
        .fold(0.0_f64, f64::max);
    let failures: usize = out.reports.iter().map(|(_, _, r)| r.failures).sum();
    let ok = worst <= 1e-6 && failures == 0;
    report(
        1,
        "multilateration NME <= 1e-6 at 64..4, 10000 samples",
        ok,
        &format!("worst {worst:.3e}, {failures} failures, bench {:.1}s", elapsed.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn criterion_2_decoder_ordering() {
    let (out, _) = default_bench();
    let get = |d: &str, r: &str| out.nme.get(d, r).unwrap();
    let mut problems = Vec::new();
    for r in RESOLUTIONS {
        let (oh, th, ml) = (get("one-hot", r), get("two-hot", r), get("multilateration", r));
        if !(oh > th && th > ml) {
            problems.push(format!("{r}: one-hot {oh:.4e}, two-hot {th:.4e}, multilateration {ml:.4e}"));
        }
    }
    for r in ["64x64", "32x32"] {
        let da = get("distribution-aware", r);
        if da > 1e-3 {
            problems.push(format!("{r}: distribution-aware {da:.4e} > 1e-3"));
        }
    }
    for r in ["8x8", "4x4"] {
        let (da, ml) = (get("distribution-aware", r), get("multilateration", r));
        if da <= ml {
            problems.push(format!("{r}: distribution-aware {da:.4e} <= multilateration {ml:.4e}"));
        }
    }
    let ok = problems.is_empty();
    report(
        2,
        "one-hot > two-hot > multilateration; distribution-aware fine at 64/32, degraded at 8/4",
        ok,
        &if ok { "all resolutions".to_string() } else { problems.join("; ") },
    );
    assert!(ok, "{problems:?}");
}

/// Mean length of a point uniform on the unit square centered at the origin.
fn uniform_rounding_oracle(draws: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let total: f64 = (0..draws)
        .map(|_| {
            let dx: f64 = rng.random_range(-0.5..0.5);
            let dy: f64 = rng.random_range(-0.5..0.5);
            dx.hypot(dy)
        })
        .sum();
    total / draws as f64
}

#[test]
fn criterion_3_one_hot_matches_rounding_error_oracle() {
    let oracle = uniform_rounding_oracle(1_000_000);
    let mut details = Vec::new();
    let mut ok = true;
    for res in [64u32, 32, 16] {
        // lambda = 1 puts image and heatmap space on the same grid.
        let cfg = BenchConfig {
            resolutions: vec![res],
            decoders: vec![DecoderKind::OneHot],
            image_size: res as f64,
            normalization: Normalization::HeatmapWidth(res as f64),
            ..Default::default()
        };
        let out = run_bench(&cfg).unwrap();
        let label = format!("{res}x{res}");
        let nme = out.nme.get("one-hot", &label).unwrap();
        let expected = oracle / res as f64;
        let rel = (nme - expected).abs() / expected;
        ok &= rel <= 0.05;
        details.push(format!("{label}: {nme:.5e} vs {expected:.5e} ({:.2}%)", rel * 100.0));
    }
    report(
        3,
        "one-hot NME within 5% of E|U|/r at 64/32/16",
        ok,
        &format!("oracle E|U| = {oracle:.6}; {}", details.join(", ")),
    );
    assert!(ok);
}

fn range_residual(anchors: &[Anchor], x: f64, y: f64) -> f64 {
    anchors
        .iter()
        .map(|a| {
            let r = (x - a.x as f64).hypot(y - a.y as f64) - a.distance;
            r * r
        })
        .sum()
}

/// Brute-force minimizer of the squared range residual: a coarse grid over
/// `[lo, hi]^2`, a 1e-3 grid around the best few coarse cells, then one
/// refinement at 1e-5 around the best of those.
fn grid_search(anchors: &[Anchor], lo: f64, hi: f64) -> (f64, f64) {
    const COARSE: f64 = 0.05;
    const FINE: f64 = 1e-3;
    const REFINED: f64 = 1e-5;
    let steps = ((hi - lo) / COARSE).round() as usize;
    let mut coarse = Vec::with_capacity((steps + 1) * (steps + 1));
    for i in 0..=steps {
        for j in 0..=steps {
            let (x, y) = (lo + i as f64 * COARSE, lo + j as f64 * COARSE);
            coarse.push((range_residual(anchors, x, y), x, y));
        }
    }
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = (COARSE / FINE).round() as i64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &(_, cx, cy) in coarse.iter().take(4) {
        for i in -half..=half {
            for j in -half..=half {
                let (x, y) = (cx + i as f64 * FINE, cy + j as f64 * FINE);
                let f = range_residual(anchors, x, y);
                if f < best.0 {
                    best = (f, x, y);
                }
            }
        }
    }
    let (bx, by) = (best.1, best.2);
    let half = (FINE / REFINED).round() as i64;
    for i in -half..=half {
        for j in -half..=half {
            let (x, y) = (bx + i as f64 * REFINED, by + j as f64 * REFINED);
            let f = range_residual(anchors, x, y);
            if f < best.0 {
                best = (f, x, y);
            }
        }
    }
    (best.1, best.2)
}

fn random_anchor_set(rng: &mut ChaCha8Rng, side: usize, point: (f64, f64)) -> Vec<Anchor> {
    loop {
        let n = rng.random_range(3..=9);
        let mut positions: Vec<(usize, usize)> = Vec::with_capacity(n);
        while positions.len() < n {
            let p = (rng.random_range(0..side), rng.random_range(0..side));
            if !positions.contains(&p) {
                positions.push(p);
            }
        }
        let anchors: Vec<Anchor> = positions
            .iter()
            .map(|&(x, y)| Anchor::new(x, y, (point.0 - x as f64).hypot(point.1 - y as f64)))
            .collect();
        if AnchorSet::new(anchors.clone()).is_ok() {
            return anchors;
        }
    }
}

#[test]
fn criterion_4_multilateration_matches_brute_force_oracle() {
    const SIDE: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_grid, mut worst_truth) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let point = (rng.random_range(0.0..(SIDE - 1) as f64), rng.random_range(0.0..(SIDE - 1) as f64));
        let anchors = random_anchor_set(&mut rng, SIDE, point);
        let solved = multilaterate(&anchors).expect("non-collinear set solves");
        let (gx, gy) = grid_search(&anchors, -1.0, SIDE as f64);
        worst_grid = worst_grid.max((solved.x - gx).hypot(solved.y - gy));
        worst_truth = worst_truth.max((solved.x - point.0).hypot(solved.y - point.1));
    }
    let ok = worst_grid <= 2e-3 && worst_truth <= 1e-9;
    report(
        4,
        "least-squares solution matches grid search within 2e-3 and the true point within 1e-9",
        ok,
        &format!("1000 sets, worst vs grid {worst_grid:.2e}, worst vs truth {worst_truth:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_distribution_aware_is_exact_on_interior_gaussians() {
    let enc = EncodingConfig::new(1.0, 1.5, EncodingMode::Unbiased).unwrap();
    let cfg = DecodeConfig::with_decoder(DecoderKind::DistributionAware);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let (x, y) = (rng.random_range(1.0..14.0), rng.random_range(1.0..14.0));
        // lambda = 1: image and heatmap coordinates coincide.
        let h = encode(Coordinate::image(x, y).unwrap(), &enc, 16, 16).unwrap().heatmap;
        let beta = Coordinate::heatmap(x, y).unwrap();
        let r = decode_distribution_aware(&h, &cfg).unwrap();
        worst = worst.max(r.beta_hat.distance(&beta) / 16.0);
    }
    let ok = worst <= 1e-6;
    report(
        5,
        "distribution-aware NME <= 1e-6 on 1000 interior centers at 16x16",
        ok,
        &format!("worst {worst:.3e}"),
    );
    assert!(ok);
}

fn random_heatmaps(rng: &mut ChaCha8Rng) -> Vec<Heatmap> {
    let k = rng.random_range(0..4);
    let (w, h) = (rng.random_range(1..20), rng.random_range(1..20));
    (0..k)
        .map(|i| {
            let values = (0..w * h)
                .map(|_| f64::from(rng.random_range(-1e3_f32..1e3)))
                .collect();
            Heatmap::new(w, h, values, i).unwrap()
        })
        .collect()
}

fn random_records(rng: &mut ChaCha8Rng, round: usize) -> Vec<AnnotationRecord> {
    let k = rng.random_range(1..6);
    let n = rng.random_range(0..8);
    (0..n)
        .map(|i| {
            let failed = rng.random_bool(0.2);
            let landmarks: Vec<Option<[f64; 2]>> = (0..k)
                .map(|j| {
                    if failed && j == 0 {
                        None
                    } else {
                        let scale = 10f64.powi(rng.random_range(-8..8));
                        Some([rng.random_range(-1.0..1.0) * scale, rng.random::<f64>() * scale])
                    }
                })
                .collect();
            let status = failed.then(|| {
                (0..k)
                    .map(|j| if j == 0 { LandmarkStatus::Failed } else { LandmarkStatus::Ok })
                    .collect()
            });
            AnnotationRecord {
                id: format!("r{round}-{i}"),
                landmarks,
                normalization: rng.random_bool(0.5).then(|| rng.random_range(1.0..500.0)),
                status,
            }
        })
        .collect()
}

fn write_header(version: u32, dtype: u32) -> Vec<u8> {
    let mut b = b"HMAP".to_vec();
    for v in [version, 1, 2, 2, dtype] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b
}

fn decode_exit(path: &Path, dir: &Path) -> (Option<i32>, String) {
    let out = heatdecode()
        .arg("decode")
        .arg(path)
        .arg("--out")
        .arg(dir.join("out.json"))
        .output()
        .unwrap();
    (out.status.code(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn criterion_6_io_round_trips_and_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut problems = Vec::new();

    for round in 0..100 {
        let maps = random_heatmaps(&mut rng);
        let bytes = encode_hmap(&maps, (3, 5)).unwrap();
        let back = decode_hmap(&bytes).unwrap();
        let same = back.len() == maps.len()
            && back.iter().zip(&maps).all(|(a, b)| {
                a.width() == b.width()
                    && a.height() == b.height()
                    && a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
            });
        if !same || encode_hmap(&back, (3, 5)).unwrap() != bytes {
            problems.push(format!("hmap fixture {round} changed"));
        }

        let records = random_records(&mut rng, round);
        let path = dir.path().join(format!("ann-{round}.json"));
        write_annotations(&records, &path).unwrap();
        let read = read_annotations(&path).unwrap();
        let bit_exact = read == records
            && read.iter().zip(&records).all(|(a, b)| {
                a.landmarks.iter().zip(&b.landmarks).all(|(p, q)| match (p, q) {
                    (Some(p), Some(q)) => p[0].to_bits() == q[0].to_bits() && p[1].to_bits() == q[1].to_bits(),
                    (None, None) => true,
                    _ => false,
                })
            });
        if !bit_exact {
            problems.push(format!("annotation fixture {round} changed"));
        }
    }

    let mut good = write_header(1, 0);
    for v in [0.1f32, 0.9, 0.2, 0.3] {
        good.extend_from_slice(&v.to_le_bytes());
    }
    let mut bad_magic = good.clone();
    bad_magic[..4].copy_from_slice(b"HMAQ");
    let truncated = good[..good.len() - 3].to_vec();
    let mut bad_dtype = write_header(1, 1);
    bad_dtype.extend_from_slice(&good[24..]);
    for (name, bytes, needle) in [
        ("bad-magic", bad_magic, "bad magic"),
        ("truncated", truncated, "truncated"),
        ("bad-dtype", bad_dtype, "unsupported dtype"),
    ] {
        let path = dir.path().join(format!("{name}.hmap"));
        fs::write(&path, bytes).unwrap();
        let (code, stderr) = decode_exit(&path, dir.path());
        if code != Some(2) || !stderr.contains(needle) {
            problems.push(format!("{name}: exit {code:?}, stderr {stderr:?}"));
        }
    }
    let good_path = dir.path().join("good.hmap");
    fs::write(&good_path, &good).unwrap();
    let (code, stderr) = decode_exit(&good_path, dir.path());
    if code != Some(0) {
        problems.push(format!("well-formed file: exit {code:?}, stderr {stderr:?}"));
    }

    let ok = problems.is_empty();
    report(
        6,
        "100 HMAP + 100 annotation round trips bit-exact; malformed files exit 2 with named errors",
        ok,
        &if ok { "bad magic, truncated, dtype rejected".to_string() } else { problems.join("; ") },
    );
    assert!(ok, "{problems:?}");
}

fn bench_table(dir: &Path, workers: u32) -> Vec<u8> {
    let out = dir.join(format!("bench-{workers}.txt"));
    let status = heatdecode()
        .args(["bench", "--samples", "2000", "--seed", "11", "--workers"])
        .arg(workers.to_string())
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    fs::read(out).unwrap()
}

#[test]
fn criterion_7_bench_output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let one = bench_table(dir.path(), 1);
    let four = bench_table(dir.path(), 4);
    let cli_same = one == four;

    let lib = |workers| {
        run_bench(&BenchConfig {
            workers,
            seed: 11,
            ..Default::default()
        })
        .unwrap()
        .nme
        .to_text()
    };
    let lib_same = lib(1) == lib(4);
    let ok = cli_same && lib_same;
    report(
        7,
        "bench tables byte-identical for workers 1 and 4 at a fixed seed",
        ok,
        &format!("cli --out {} bytes identical: {cli_same}; 10000-sample library run identical: {lib_same}", one.len()),
    );
    assert!(ok);
}

#[test]
fn criterion_8_anchor_sweep_shape_and_argmin() {
    let table = run_sweep(&SweepConfig::default()).unwrap();
    let kernels = ["2x2", "3x3", "4x4", "5x5", "6x6"];
    let mut problems = Vec::new();
    if table.row_labels != kernels || table.col_labels != RESOLUTIONS {
        problems.push(format!("grid {:?} x {:?}", table.row_labels, table.col_labels));
    }
    for (ki, k) in kernels.iter().enumerate() {
        for r in RESOLUTIONS {
            let res: usize = r.split('x').next().unwrap().parse().unwrap();
            let na = ki + 2 > res;
            if table.get(k, r).is_some() == na {
                problems.push(format!("cell {k} @ {r} applicable mismatch"));
            }
        }
    }
    for r in ["8x8", "4x4"] {
        let base = table.get("2x2", r).unwrap_or(f64::INFINITY);
        for k in &kernels[1..] {
            if let Some(v) = table.get(k, r) {
                if v <= base {
                    problems.push(format!("{r}: {k} {v:.4e} <= 2x2 {base:.4e}"));
                }
            }
        }
    }
    let ok = problems.is_empty();
    report(
        8,
        "sweep grid 2..6 x 64..4, N/A where k > r, 2x2 best at 8x8 and 4x4",
        ok,
        &if ok {
            format!(
                "2x2 at 8x8 {:.4e}, at 4x4 {:.4e}",
                table.get("2x2", "8x8").unwrap(),
                table.get("2x2", "4x4").unwrap()
            )
        } else {
            problems.join("; ")
        },
    );
    assert!(ok, "{problems:?}\n{}", table.to_text());
}
