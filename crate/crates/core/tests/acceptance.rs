//! Acceptance suite: one PASS/FAIL line per criterion, run sequentially so the timing
//! checks are not disturbed by other work. Exits non-zero if any criterion fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use macfield::experiments::generate_synthetic;
use macfield::experiments::{
    run_experiment, run_fixed_time, run_mnist, run_sanity, run_video, ExperimentConfig,
    ExperimentKind, RunOutput,
};
use macfield::hierarchy::ModelConfig;
use macfield::mac::{code_intersection, UnitActivations};
use macfield::preprocess::{
    add_pixel_noise, preprocess_mnist, skeletonize, BinaryFrame, MnistSet, MNIST_HEIGHT,
    MNIST_WIDTH,
};
use macfield::{seed, Code, CsaParams, InputVector, Mac, MacConfig, Mode, OpCounts};
use rand::seq::index::sample;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/mnist-5k")
        .join(name)
}

fn mnist_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.mnist_images = Some(data("images-idx3-ubyte.gz"));
    cfg.mnist_labels = Some(data("labels-idx1-ubyte.gz"));
    cfg
}

fn random_input<R: Rng>(rng: &mut R, n: usize, active: usize) -> Vec<u32> {
    let mut v: Vec<u32> = sample(rng, n, active).iter().map(|i| i as u32).collect();
    v.sort_unstable();
    v
}

fn top_geometry(m: &ModelConfig) -> (usize, usize, usize) {
    let top = m.levels.last().expect("at least one level");
    (top.grid[0] * top.grid[1], top.mac_cfg.q, top.mac_cfg.k)
}

fn c1_sparsity() -> Outcome {
    let start = Instant::now();
    let csa = CsaParams::default();
    let mut rng = seed::stream(1, &[1]);
    let gs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut failures = 0;
    for call in 0..10_000 {
        let q = rng.gen_range(2..=16);
        let k = rng.gen_range(2..=16);
        let mut acts = UnitActivations::zeros(q, k);
        for v in acts.v.iter_mut() {
            *v = rng.gen::<f64>();
        }
        for (cm, max) in acts.v.chunks_exact(k).zip(acts.cm_max.iter_mut()) {
            *max = cm.iter().cloned().fold(0.0, f64::max);
        }
        let mode = if call % 2 == 0 {
            Mode::Learning
        } else {
            Mode::Retrieval
        };
        let code = csa.select_code(&acts, gs[call % gs.len()], mode, &mut rng);
        if code.winners.len() != q || code.check(q, k).is_err() {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        failures == 0 && secs < 10.0,
        format!("{failures} failures in 10000 calls, {secs:.2}s"),
    )
}

fn c2_exact_recall() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::stream(2, &[2]);
    let mut ops = OpCounts::default();
    let mut ok = 0;
    for _ in 0..100 {
        let n_u = 64;
        let mut mac = Mac::new(MacConfig::new(8, 8, n_u)).map_err(|e| e.to_string())?;
        let input = InputVector::bottom_up(random_input(&mut rng, n_u, 12));
        let (code, _) = mac
            .encode(&input, Mode::Learning, &mut rng, &mut ops)
            .map_err(|e| e.to_string())?;
        mac.learn(&input, &code).map_err(|e| e.to_string())?;
        let (replay, g) = mac
            .encode(&input, Mode::Retrieval, &mut rng, &mut ops)
            .map_err(|e| e.to_string())?;
        if g == 1.0 && replay == code {
            ok += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        ok == 100 && secs < 5.0,
        format!("{ok}/100 exact, {secs:.2}s"),
    )
}

/// Upper 0.1% point of chi-square with 6 degrees of freedom.
const CHI2_6_999: f64 = 22.4577;

fn c3_chance_floor() -> Outcome {
    let (q, k, draws) = (7, 7, 10_000);
    let csa = CsaParams::default();
    let mut rng = seed::stream(3, &[3]);
    let stored = Code::new((0..q as u32).map(|i| i % k as u32).collect());
    let acts = UnitActivations::zeros(q, k);
    let mut counts = vec![vec![0usize; k]; q];
    let mut total = 0usize;
    for _ in 0..draws {
        let code = csa.select_code(&acts, 0.0, Mode::Learning, &mut rng);
        total += code_intersection(&stored, &code).map_err(|e| e.to_string())?;
        for (cm, &w) in code.winners.iter().enumerate() {
            counts[cm][w as usize] += 1;
        }
    }
    let mean = total as f64 / draws as f64;
    let expected = draws as f64 / k as f64;
    let worst = counts
        .iter()
        .map(|c| {
            c.iter()
                .map(|&o| (o as f64 - expected).powi(2) / expected)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    check(
        (0.97..=1.03).contains(&mean) && worst < CHI2_6_999,
        format!("mean intersection {mean:.4}, worst per-CM chi-square {worst:.2}"),
    )
}

fn c4_similarity() -> Outcome {
    let (q, k, n_u, active, trials) = (10, 10, 100, 20, 1000);
    let mut rng = seed::stream(4, &[4]);
    let mut ops = OpCounts::default();
    let mut means = Vec::new();
    for overlap in [0.9, 0.7, 0.5, 0.3, 0.1] {
        let keep = (overlap * active as f64).round() as usize;
        let mut sum = 0usize;
        for _ in 0..trials {
            let mut mac = Mac::new(MacConfig::new(q, k, n_u)).map_err(|e| e.to_string())?;
            let stored = random_input(&mut rng, n_u, active);
            let input = InputVector::bottom_up(stored.clone());
            let (code, _) = mac
                .encode(&input, Mode::Learning, &mut rng, &mut ops)
                .map_err(|e| e.to_string())?;
            mac.learn(&input, &code).map_err(|e| e.to_string())?;
            let others: Vec<u32> = (0..n_u as u32)
                .filter(|i| stored.binary_search(i).is_err())
                .collect();
            let mut probe: Vec<u32> = sample(&mut rng, active, keep)
                .iter()
                .map(|i| stored[i])
                .collect();
            probe.extend(
                sample(&mut rng, others.len(), active - keep)
                    .iter()
                    .map(|i| others[i]),
            );
            let (c, _) = mac
                .encode(
                    &InputVector::bottom_up(probe),
                    Mode::Learning,
                    &mut rng,
                    &mut ops,
                )
                .map_err(|e| e.to_string())?;
            sum += code_intersection(&code, &c).map_err(|e| e.to_string())?;
        }
        means.push(sum as f64 / trials as f64);
    }
    let decreasing = means.windows(2).all(|w| w[0] > w[1]);
    let ladder: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
    check(
        decreasing,
        format!(
            "mean intersections at 90/70/50/30/10%: {}",
            ladder.join(", ")
        ),
    )
}

fn c5_fixed_time() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::FixedTime);
    let out = run_fixed_time(&cfg).map_err(|e| e.to_string())?;
    let series = &out.report.op_series;
    let at = |n: usize| {
        series
            .iter()
            .find(|c| c.stored == n)
            .ok_or(format!("no checkpoint at {n}"))
    };
    let (first, last) = (at(10)?, at(10_000)?);
    let equal = first.store_ops == last.store_ops && first.retrieve_ops == last.retrieve_ops;
    let ratio = (last.store_seconds + last.retrieve_seconds)
        / (first.store_seconds + first.retrieve_seconds);
    check(
        equal && out.report.ops_constant == Some(true) && ratio <= 1.25,
        format!(
            "store ops {} vs {}, retrieve ops {} vs {}, wall-time ratio {ratio:.3}",
            first.store_ops.total(),
            last.store_ops.total(),
            first.retrieve_ops.total(),
            last.retrieve_ops.total()
        ),
    )
}

fn c6_sanity() -> Outcome {
    let start = Instant::now();
    let cfg = mnist_config(ExperimentKind::Sanity);
    let out = run_sanity(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let model = out.report.model_config.as_ref().ok_or("no model config")?;
    let macs: usize = model.levels.iter().map(|l| l.grid[0] * l.grid[1]).sum();
    let (_, q, k) = top_geometry(model);
    let m = out.report.recognition_match.unwrap_or(0.0);
    check(
        macs >= 100
            && q >= 8
            && k >= 8
            && out.report.train_presentations == 500
            && m >= 0.95
            && secs < 300.0,
        format!(
            "recognition match {m:.4} over {} items, {macs} macs Q={q} K={k}, {secs:.1}s",
            out.report.train_presentations
        ),
    )
}

fn c7_mnist() -> Outcome {
    let cfg = mnist_config(ExperimentKind::Mnist);
    let out = run_mnist(&cfg).map_err(|e| e.to_string())?;
    let acc = out.report.accuracy.unwrap_or(0.0);
    check(
        acc >= 0.75 && out.report.total == 1000 && out.report.train_presentations == 2000,
        format!(
            "accuracy {acc:.4} ({}/{}), train {:.1}s",
            out.report.correct, out.report.total, out.report.train_seconds
        ),
    )
}

fn c8_video() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::SyntheticSeq);
    let out = run_video(&cfg).map_err(|e| e.to_string())?;
    let acc = out.report.accuracy.unwrap_or(0.0);
    let model = out.report.model_config.as_ref().ok_or("no model config")?;
    let (macs, q, k) = top_geometry(model);
    let len = out.report.snippet_vector_len.unwrap_or(0);
    check(
        acc >= 0.30 && len == macs * q * k && len == 1944 && out.report.total == 90,
        format!(
            "LOO accuracy {acc:.4} ({}/{}), vector length {len}",
            out.report.correct, out.report.total
        ),
    )
}

/// Zhang-Suen results from an independent reference implementation.
fn skeleton_fixtures() -> Vec<(&'static str, Vec<&'static str>, Vec<&'static str>)> {
    vec![
        (
            "square5",
            vec![
                ".........",
                ".........",
                "..#####..",
                "..#####..",
                "..#####..",
                "..#####..",
                "..#####..",
                ".........",
                ".........",
            ],
            vec![
                ".........",
                ".........",
                ".........",
                ".........",
                "....#....",
                ".........",
                ".........",
                ".........",
                ".........",
            ],
        ),
        (
            "bar3x9",
            vec![
                "...........",
                ".#########.",
                ".#########.",
                ".#########.",
                "...........",
            ],
            vec![
                "...........",
                "...........",
                "..######...",
                "...........",
                "...........",
            ],
        ),
        (
            "ring",
            vec![
                "...........",
                "..#######..",
                ".#########.",
                ".##.....##.",
                ".##.....##.",
                ".##.....##.",
                ".#########.",
                "..#######..",
                "...........",
            ],
            vec![
                "...........",
                "...#####...",
                "..#.....#..",
                ".#......#..",
                ".#......#..",
                ".#......#..",
                "..#######..",
                "...........",
                "...........",
            ],
        ),
        (
            "plus",
            vec![
                "...........",
                "....###....",
                "....###....",
                "....###....",
                ".#########.",
                ".#########.",
                ".#########.",
                "....###....",
                "....###....",
                "....###....",
                "...........",
            ],
            vec![
                "...........",
                "...........",
                ".....#.....",
                ".....#.....",
                ".....#.....",
                "..######...",
                ".....#.....",
                ".....#.....",
                "...........",
                "...........",
                "...........",
            ],
        ),
        (
            "ell",
            vec![
                "........", ".###....", ".###....", ".###....", ".###....", ".######.", ".######.",
                ".######.", "........",
            ],
            vec![
                "........", "........", "..#.....", "..#.....", "..#.....", "..#.....", "..###...",
                "........", "........",
            ],
        ),
    ]
}

/// Every pixel that was not set before the noise touches a pixel that was kept.
fn noise_keeps_adjacency(before: &BinaryFrame, after: &BinaryFrame) -> bool {
    (0..after.height).all(|y| {
        (0..after.width).all(|x| {
            if !after.get(x, y) || before.get(x, y) {
                return true;
            }
            (-1isize..=1).any(|dy| {
                (-1isize..=1).any(|dx| {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    (dx, dy) != (0, 0) && before.get_signed(nx, ny) && after.get_signed(nx, ny)
                })
            })
        })
    })
}

fn c9_preprocessing() -> Outcome {
    let mut failed = Vec::new();
    for (name, input, expected) in skeleton_fixtures() {
        let got = skeletonize(&BinaryFrame::from_ascii(&input));
        if got != BinaryFrame::from_ascii(&expected) {
            failed.push(name);
        }
    }

    let mut frames = Vec::new();
    for s in 0.. {
        if frames.len() >= 1000 {
            break;
        }
        for snippet in generate_synthetic(&Default::default(), s).map_err(|e| e.to_string())? {
            frames.extend(snippet.frames.into_iter().filter(|f| f.count_ones() > 0));
        }
    }
    frames.truncate(1000);
    let mut noise_bad = 0;
    for (i, f) in frames.iter().enumerate() {
        let mut rng = seed::stream(9, &[i as u64]);
        let fraction = [0.05, 0.1, 0.2, 0.3][i % 4];
        let (noisy, _) = add_pixel_noise(f, fraction, &mut rng);
        if noisy.count_ones() != f.count_ones() || !noise_keeps_adjacency(f, &noisy) {
            noise_bad += 1;
        }
    }

    let set = MnistSet::load(&data("images-idx3-ubyte.gz"), &data("labels-idx1-ubyte.gz"))
        .map_err(|e| e.to_string())?;
    let mut bad_shape = 0;
    for img in set.images.iter().take(1000) {
        let p = preprocess_mnist(img).map_err(|e| e.to_string())?;
        if (p.frame.width, p.frame.height) != (MNIST_WIDTH, MNIST_HEIGHT) {
            bad_shape += 1;
        }
    }
    check(
        failed.is_empty() && noise_bad == 0 && bad_shape == 0 && set.images.len() >= 1000,
        format!(
            "skeleton fixtures failed {failed:?}, noise violations {noise_bad}/1000, non-16x24 {bad_shape}/1000"
        ),
    )
}

fn run_in_pool(threads: usize, cfg: &ExperimentConfig) -> Result<RunOutput, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| run_experiment(cfg))
        .map_err(|e| e.to_string())
}

fn c10_determinism() -> Outcome {
    let mut mnist = mnist_config(ExperimentKind::Mnist);
    mnist.train_per_class = 20;
    mnist.test_per_class = 10;
    mnist.seed = 10;
    let mut video = ExperimentConfig::new(ExperimentKind::SyntheticSeq);
    video.seed = 10;
    video.variants = 1;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for cfg in [&mnist, &video] {
        let dirs: Vec<PathBuf> = [1, 3, 1]
            .iter()
            .enumerate()
            .map(|(run, &threads)| {
                let dir = tmp.path().join(format!("{:?}-{run}", cfg.kind));
                run_in_pool(threads, cfg)?
                    .write(&dir)
                    .map_err(|e| e.to_string())?;
                Ok(dir)
            })
            .collect::<Result<_, String>>()?;
        for file in ["predictions.csv", "model.sprs"] {
            let bytes: Vec<Vec<u8>> = dirs
                .iter()
                .map(|d| fs::read(d.join(file)).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            if bytes.iter().any(|b| b != &bytes[0]) || bytes[0].is_empty() {
                differing.push(format!("{:?}/{file}", cfg.kind));
            }
        }
    }
    check(
        differing.is_empty(),
        format!("mnist and synthetic-seq re-runs at 1/3/1 threads; differing files {differing:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("structural sparsity", c1_sparsity),
        ("exact recall", c2_exact_recall),
        ("chance floor", c3_chance_floor),
        ("similarity preservation", c4_similarity),
        ("fixed time", c5_fixed_time),
        ("episodic recognition", c6_sanity),
        ("mnist classification", c7_mnist),
        ("synthetic video loo", c8_video),
        ("preprocessing oracles", c9_preprocessing),
        ("determinism", c10_determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{took:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name}: {detail} [{took:.1}s]", i + 1);
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
