//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed. Built with `harness = false`.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use vfclassify::classifiers::{
    fit, forest_fit_with, logreg_loss_grad, model_from_text, model_to_text, nb_fit,
    nb_log_posterior, predict, tree_fit, Algorithm, ForestOptions, Hyperparams, TrainedModel,
};
use vfclassify::eval::{
    classification_report, reconstruct_confusion, round_metric, verify_paper_tables,
    ConfusionMatrix, PAPER_TABLES,
};
use vfclassify::pipeline::{parse_config, run_pipeline};
use vfclassify::preprocess::{extract_grid, median_filter, normalize_raster};
use vfclassify::rng::SplitMix64;
use vfclassify::synthgen::{
    generate_dataset, render_raster, simulate_capture, CaptureConfig, GenConfig, Raster,
};
use vfclassify::vfdata::{load_dataset, save_dataset, Label};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)*));
        }
    };
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn random_data(rng: &mut SplitMix64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let y: Vec<Label> = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                Label::Other
            } else {
                Label::Glaucoma
            }
        })
        .collect();
    let x = y
        .iter()
        .map(|l| {
            let shift = if *l == Label::Glaucoma { 0.8 } else { -0.8 };
            (0..d).map(|_| rng.next_gaussian() + shift).collect()
        })
        .collect();
    (x, y)
}

fn random_input(rng: &mut SplitMix64, d: usize) -> Vec<f64> {
    (0..d).map(|_| 3.0 * rng.next_gaussian()).collect()
}

fn published_tables() -> Outcome {
    let started = Instant::now();
    let expected = [
        [[9, 4], [4, 12]],
        [[1, 12], [4, 12]],
        [[11, 2], [7, 9]],
        [[8, 5], [4, 12]],
    ];
    let results = verify_paper_tables();
    let mut cells = 0;
    for (v, want) in results.iter().zip(expected) {
        let got: Vec<_> = v.matrices.iter().map(|m| m.counts()).collect();
        ensure!(
            got == vec![want],
            "table {}: matrices {got:?}",
            v.table.table_id
        );
        ensure!(v.passed(), "table {}: {:?}", v.table.table_id, v.mismatches);
        // Independent recount of every printed value from the matrix.
        let [[a, b], [c, d]] = want;
        let t = &v.table;
        let f = |x: usize, y: usize| x as f64 / y as f64;
        let (p0, r0, p1, r1) = (f(a, a + c), f(a, a + b), f(d, b + d), f(d, c + d));
        let f1 = |p: f64, r: f64| 2.0 * p * r / (p + r);
        let pairs = [
            (p0, t.rows[0].precision),
            (r0, t.rows[0].recall),
            (f1(p0, r0), t.rows[0].f1),
            (p1, t.rows[1].precision),
            (r1, t.rows[1].recall),
            (f1(p1, r1), t.rows[1].f1),
            (f(a + d, a + b + c + d), t.accuracy),
        ];
        for (got, printed) in pairs {
            ensure!(
                round_metric(got, 2) == printed,
                "table {}: {got} rounds to {}, printed {printed}",
                t.table_id,
                round_metric(got, 2)
            );
            cells += 1;
        }
        ensure!(
            a + b == t.rows[0].support && c + d == t.rows[1].support,
            "supports"
        );
        ensure!(a + b + c + d == t.n, "n");
        cells += 3;
    }
    ensure!(
        results.len() == PAPER_TABLES.len() && results.len() == 4,
        "expected 4 tables"
    );
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!(
        "4/4 tables, unique matrices, {cells} printed values match, {took:.2?}"
    ))
}

fn reconstruction_round_trip() -> Outcome {
    let started = Instant::now();
    let mut rng = SplitMix64::new(20240601);
    let (mut unique, trials) = (0, 1000);
    for _ in 0..trials {
        let (s0, s1) = (1 + rng.below(50), 1 + rng.below(50));
        let (tp0, tp1) = (rng.below(s0 + 1), rng.below(s1 + 1));
        let cm = ConfusionMatrix::new([[tp0, s0 - tp0], [s1 - tp1, tp1]]).unwrap();
        let r = classification_report(&cm);
        let rows = [
            (
                round_metric(r.precision[0], 2),
                round_metric(r.recall[0], 2),
                s0,
            ),
            (
                round_metric(r.precision[1], 2),
                round_metric(r.recall[1], 2),
                s1,
            ),
        ];
        let found = reconstruct_confusion(rows, round_metric(r.accuracy, 2), 2);
        ensure!(
            found.contains(&cm),
            "{:?} not recovered; got {found:?}",
            cm.counts()
        );
        unique += usize::from(found.len() == 1);
    }
    let took = within(Duration::from_secs(10), started)?;
    Ok(format!(
        "{trials} random matrices recovered ({unique} uniquely), {took:.2?}"
    ))
}

const BENCHMARK: &str = "\
[data]
generate = true
[gen]
seed = 42
[split]
test_fraction = 0.2
seed = 42
[preprocess]
enabled = true
seed = 42
[random_forest]
seed = 42
[sgd_svm]
seed = 42
";

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn synthetic_benchmark() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    let mut accuracies = String::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let text = format!("{BENCHMARK}[output]\ndir = {}\n", out.display());
        let config = parse_config(Path::new("benchmark.conf"), &text).map_err(|e| e.to_string())?;
        ensure!(
            config.generate.as_ref().unwrap().0 == GenConfig::default(),
            "non-default generator"
        );
        let outcome = run_pipeline(&config).map_err(|e| e.to_string())?;
        ensure!(
            outcome.results.len() == 4,
            "{} algorithms ran",
            outcome.results.len()
        );
        accuracies.clear();
        for r in &outcome.results {
            ensure!(
                r.report.support == [13, 16],
                "test supports {:?}",
                r.report.support
            );
            ensure!(
                r.report.accuracy >= 0.80,
                "{} accuracy {:.4} < 0.80",
                r.algorithm.tag(),
                r.report.accuracy
            );
            accuracies.push_str(&format!("{} {:.2} ", r.algorithm.tag(), r.report.accuracy));
        }
        let counts = load_dataset(&out.join("dataset.csv"))
            .map_err(|e| e.to_string())?
            .label_counts();
        ensure!(counts == [65, 80], "label counts {counts:?}");
        outputs.push(read_outputs(&out));
    }
    ensure!(outputs[0] == outputs[1], "two runs differ");
    let took = within(Duration::from_secs(60), started)?;
    Ok(format!(
        "{}supports 13/16, {} files byte-identical across runs, {took:.2?}",
        accuracies,
        outputs[0].len()
    ))
}

fn logreg_gradient() -> Outcome {
    let h = 1e-5;
    let mut rng = SplitMix64::new(99);
    let mut worst: f64 = 0.0;
    let instances = 25;
    for k in 0..instances {
        let (n, d) = (5 + rng.below(40), 1 + rng.below(8));
        let (x, y) = random_data(&mut rng, n, d);
        let w: Vec<f64> = (0..d).map(|_| rng.next_gaussian()).collect();
        let b = rng.next_gaussian();
        let l2 = if k % 2 == 0 {
            0.0
        } else {
            0.1 * rng.next_f64()
        };
        let loss = |w: &[f64], b: f64| logreg_loss_grad(w, b, &x, &y, l2).unwrap().loss;
        let g = logreg_loss_grad(&w, b, &x, &y, l2).map_err(|e| e.to_string())?;
        let mut analytic = g.grad_w.clone();
        analytic.push(g.grad_b);
        let mut numeric = Vec::with_capacity(d + 1);
        for j in 0..d {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            numeric.push((loss(&wp, b) - loss(&wm, b)) / (2.0 * h));
        }
        numeric.push((loss(&w, b + h) - loss(&w, b - h)) / (2.0 * h));
        for (j, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
            let scale = a.abs().max(n.abs());
            let rel = if scale == 0.0 {
                0.0
            } else {
                (a - n).abs() / scale
            };
            ensure!(rel < 1e-5, "instance {k} coordinate {j}: analytic {a:e}, numeric {n:e}, relative error {rel:e}");
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "{instances} instances, worst per-coordinate relative error {worst:.1e}"
    ))
}

fn oracles() -> Outcome {
    let mut rng = SplitMix64::new(7);

    // Naive Bayes against a direct Gaussian log-density sum.
    let (x, y) = random_data(&mut rng, 40, 6);
    let hyper = Hyperparams::defaults(Algorithm::NaiveBayes, 0);
    let model = nb_fit(&x, &y, &hyper).map_err(|e| e.to_string())?;
    let d = 6;
    let mean =
        |rows: &[&Vec<f64>], j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
    let var = |rows: &[&Vec<f64>], j: usize| {
        let m = mean(rows, j);
        rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / rows.len() as f64
    };
    let all: Vec<&Vec<f64>> = x.iter().collect();
    let eps = hyper.var_smoothing * (0..d).map(|j| var(&all, j)).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let f = random_input(&mut rng, d);
        let (s0, s1) = nb_log_posterior(&model, &f).map_err(|e| e.to_string())?;
        for (c, got) in [(Label::Other, s0), (Label::Glaucoma, s1)] {
            let rows: Vec<&Vec<f64>> = x
                .iter()
                .zip(&y)
                .filter(|(_, l)| **l == c)
                .map(|(r, _)| r)
                .collect();
            let prior = (rows.len() as f64 / x.len() as f64).ln();
            let want = prior
                + (0..d)
                    .map(|j| {
                        let (m, v) = (mean(&rows, j), var(&rows, j) + eps);
                        let pdf = (-(f[j] - m).powi(2) / (2.0 * v)).exp()
                            / (2.0 * std::f64::consts::PI * v).sqrt();
                        pdf.ln()
                    })
                    .sum::<f64>();
            worst = worst.max((got - want).abs());
        }
    }
    ensure!(worst < 1e-10, "naive Bayes deviates by {worst:e}");

    // Median filter against a brute-force clamped 3x3 median.
    let (w, h) = (23, 17);
    let pixels: Vec<f64> = (0..w * h).map(|_| rng.next_f64()).collect();
    let raster = Raster::new(w, h, pixels.clone()).map_err(|e| e.to_string())?;
    let filtered = median_filter(&raster).map_err(|e| e.to_string())?;
    for yy in 0..h as i64 {
        for xx in 0..w as i64 {
            let mut window = Vec::with_capacity(9);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let cx = (xx + dx).clamp(0, w as i64 - 1) as usize;
                    let cy = (yy + dy).clamp(0, h as i64 - 1) as usize;
                    window.push(pixels[cy * w + cx]);
                }
            }
            window.sort_by(f64::total_cmp);
            ensure!(
                filtered.get(xx as usize, yy as usize) == window[4],
                "median differs at ({xx}, {yy})"
            );
        }
    }

    // Unlimited-depth tree memorizes conflict-free data.
    let (x, y) = random_data(&mut rng, 120, 5);
    let mut hyper = Hyperparams::defaults(Algorithm::RandomForest, 3);
    hyper.max_depth = None;
    let tree = tree_fit(&x, &y, &hyper, &mut SplitMix64::new(3)).map_err(|e| e.to_string())?;
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(r, l)| tree.predict(r) == **l)
        .count();
    ensure!(
        correct == x.len(),
        "tree training accuracy {correct}/{}",
        x.len()
    );

    Ok(format!(
        "naive Bayes within {worst:.1e}; median {w}x{h} exact; tree training accuracy 1.0 (depth {})",
        tree.depth()
    ))
}

fn round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;

    let data = generate_dataset(&GenConfig::default(), 42).map_err(|e| e.to_string())?;
    let path = dir.path().join("d.csv");
    save_dataset(&data, &path).map_err(|e| e.to_string())?;
    let back = load_dataset(&path).map_err(|e| e.to_string())?;
    ensure!(back == data, "dataset changed after load(save(.))");
    let again = dir.path().join("e.csv");
    save_dataset(&back, &again).map_err(|e| e.to_string())?;
    ensure!(
        fs::read(&path).unwrap() == fs::read(&again).unwrap(),
        "CSV bytes changed"
    );

    let mut rng = SplitMix64::new(11);
    let (x, y) = random_data(&mut rng, 60, 8);
    for a in Algorithm::ALL {
        let mut hyper = Hyperparams::defaults(a, 5);
        hyper.n_trees = 25;
        let model = fit(&x, &y, &hyper).map_err(|e| e.to_string())?;
        let file = dir.path().join(format!("{}.txt", a.slug()));
        fs::write(&file, model_to_text(&model)).unwrap();
        let loaded: TrainedModel =
            model_from_text(&fs::read_to_string(&file).unwrap()).map_err(|e| e.to_string())?;
        ensure!(loaded == model, "{} model changed on reload", a.tag());
        for _ in 0..100 {
            let f = random_input(&mut rng, 8);
            ensure!(
                predict(&model, &f).unwrap() == predict(&loaded, &f).unwrap(),
                "{} reloaded model predicts differently",
                a.tag()
            );
        }
    }

    let mut worst: f64 = 0.0;
    let mut worst_captured: f64 = 0.0;
    let clean = CaptureConfig {
        salt_fraction: 0.0,
        ..CaptureConfig::default()
    };
    for rec in data.records().iter().take(20) {
        let raster = render_raster(rec, data.grid(), 256, 256).map_err(|e| e.to_string())?;
        let direct = extract_grid(&raster, data.grid(), rec.eye).map_err(|e| e.to_string())?;
        let captured = simulate_capture(&raster, &clean, 1).map_err(|e| e.to_string())?;
        let cleaned = normalize_raster(&median_filter(&captured).unwrap()).unwrap();
        let via_capture =
            extract_grid(&cleaned, data.grid(), rec.eye).map_err(|e| e.to_string())?;
        for ((s, a), b) in rec.sensitivities.iter().zip(&direct).zip(&via_capture) {
            worst = worst.max((s - a).abs());
            worst_captured = worst_captured.max((s - b).abs());
        }
    }
    ensure!(worst <= 0.2, "render/extract error {worst} dB");
    ensure!(
        worst_captured <= 0.2,
        "render/capture/extract error {worst_captured} dB"
    );
    Ok(format!(
        "CSV identity; 4 models x 100 inputs identical after reload; render/extract max error {worst:.1e} dB ({worst_captured:.1e} dB through capture)"
    ))
}

fn serial_parallel_forest() -> Outcome {
    let mut rng = SplitMix64::new(13);
    let (x, y) = random_data(&mut rng, 80, 10);
    let mut hyper = Hyperparams::defaults(Algorithm::RandomForest, 2024);
    hyper.n_trees = 40;
    let serial = forest_fit_with(
        &x,
        &y,
        &hyper,
        ForestOptions {
            parallel: false,
            bootstrap: true,
        },
    )
    .map_err(|e| e.to_string())?;
    let parallel = forest_fit_with(
        &x,
        &y,
        &hyper,
        ForestOptions {
            parallel: true,
            bootstrap: true,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        serial == parallel,
        "serial and parallel forests differ structurally"
    );
    for _ in 0..100 {
        let f = random_input(&mut rng, 10);
        ensure!(
            serial.predict(&f).unwrap() == parallel.predict(&f).unwrap(),
            "prediction differs"
        );
    }
    Ok("40 trees identical; 100 random inputs predicted identically".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("published tables verify", published_tables),
        ("reconstruction round-trip", reconstruction_round_trip),
        ("synthetic benchmark", synthetic_benchmark),
        ("logistic gradient vs finite differences", logreg_gradient),
        ("oracle checks", oracles),
        ("round-trips", round_trips),
        (
            "serial forest equals parallel forest",
            serial_parallel_forest,
        ),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
