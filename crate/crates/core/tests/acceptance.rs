//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.
//!
//! Source data defaults to the deterministic synthetic generators. Set
//! `AGBENCH_MNIST_DIR` (IDX test split) and/or `AGBENCH_SILHOUETTE_DIR`
//! (`<category>/*.png`) to run on the real datasets instead.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use agbench_core::benchgen::{
    generate, sample_human_subset, sample_human_subset_excluding, write_benchmark, ConditionGrid, DatasetKind,
    GenOptions, OutputOptions, Pipeline,
};
use agbench_core::dataset_io::{
    load_mnist, load_silhouettes, parse_labeled_idx, read_png_file, write_idx_images, write_idx_labels, write_png_gray,
    load_png_gray, ClassMap, LabeledDataset, Manifest, MnistSplit, Sample,
};
use agbench_core::grating::{apply_abutting_grating, binarize_with, compose, render_grating};
use agbench_core::probe::{
    batch_norm, conv2d, end_stopping_score, load_weight_bundle, max_pool, relu, write_weight_bundle, BatchNorm,
    StemOutputs, Tensor, WeightBundle, BN_EPS,
};
use agbench_core::scoring::{manifest_truth, score_labels, Condition, PredictionSet};
use agbench_core::synth::{synthetic_digits, synthetic_silhouettes};
use agbench_core::{Direction, GratingSpec, GrayImage, MaskPair, Polarity};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mnist() -> &'static (LabeledDataset, String) {
    static DATA: OnceLock<(LabeledDataset, String)> = OnceLock::new();
    DATA.get_or_init(|| match std::env::var_os("AGBENCH_MNIST_DIR") {
        Some(dir) => {
            let ds = load_mnist(Path::new(&dir), None, MnistSplit::Test).expect("AGBENCH_MNIST_DIR");
            (ds, "MNIST test split".into())
        }
        None => (synthetic_digits(10_000, 2024), "synthetic digits".into()),
    })
}

fn silhouettes() -> &'static (LabeledDataset, String) {
    static DATA: OnceLock<(LabeledDataset, String)> = OnceLock::new();
    DATA.get_or_init(|| match std::env::var_os("AGBENCH_SILHOUETTE_DIR") {
        Some(dir) => {
            let ds = load_silhouettes(Path::new(&dir)).expect("AGBENCH_SILHOUETTE_DIR");
            (ds, "silhouette images".into())
        }
        None => (synthetic_silhouettes(10, 224, 2024), "synthetic silhouettes".into()),
    })
}

/// The full silhouette benchmark, written once per run.
fn silhouette_benchmark() -> &'static (PathBuf, Manifest) {
    static BENCH: OnceLock<(PathBuf, Manifest)> = OnceLock::new();
    BENCH.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-silhouettes");
        let _ = std::fs::remove_dir_all(&dir);
        let grid = ConditionGrid::default_for(DatasetKind::Silhouettes);
        let manifest = write_benchmark(
            &silhouettes().0,
            None,
            &grid,
            &GenOptions::default(),
            &dir,
            &OutputOptions::default(),
        )
        .expect("silhouette benchmark");
        (dir, manifest)
    })
}

// Independent per-pixel model of the corruption.

fn coordinate(x: usize, y: usize, d: Direction, interval: usize) -> usize {
    let (x, y, i) = (x as i64, y as i64, interval as i64);
    let c = match d {
        Direction::Horizontal => y,
        Direction::Vertical => x,
        Direction::DiagUr => x + y,
        Direction::DiagUl => x - y,
    };
    c.rem_euclid(i) as usize
}

fn region_phase(figure: bool, spec: &GratingSpec) -> usize {
    if figure {
        spec.figure_phase
    } else {
        (spec.figure_phase + spec.interval / 2) % spec.interval
    }
}

fn oracle_is_line(x: usize, y: usize, figure: bool, spec: &GratingSpec) -> bool {
    coordinate(x, y, spec.direction, spec.interval) == region_phase(figure, spec)
}

fn oracle_output(image: &GrayImage, spec: &GratingSpec, figure_is_dark: bool) -> Vec<f32> {
    let (w, h) = image.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = image.get(x, y);
            let figure = if figure_is_dark { v < spec.threshold } else { v > spec.threshold };
            out.push(if oracle_is_line(x, y, figure, spec) { 1.0 } else { 0.0 });
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (source, name) = mnist();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let picks: Vec<usize> = (0..200).map(|_| rng.random_range(0..source.len())).collect();
    let mut jobs = Vec::new();
    for &i in &picks {
        for d in Direction::ALL {
            for interval in [2, 4, 6, 8] {
                jobs.push((i, GratingSpec::new(d, interval)));
            }
        }
    }
    let mismatches: usize = jobs
        .par_iter()
        .map(|(i, spec)| {
            let img = &source.items()[*i].image;
            let out = apply_abutting_grating(img, spec).expect("valid spec");
            out.data().iter().zip(oracle_output(img, spec, false)).filter(|(a, b)| **a != *b).count()
        })
        .sum();
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{mismatches} mismatching pixels over {} stimuli from {name} in {:.2?} (limit 10 s)", jobs.len(), elapsed),
    )
}

fn benchmark_constants() -> Outcome {
    let digits = synthetic_digits(20, 7);
    let opts = GenOptions::default();
    let m = generate(&digits, &ConditionGrid::default_for(DatasetKind::Mnist), &opts).unwrap().manifest;
    let mnist_paths: Vec<_> = m.sets.iter().map(|s| s.path.clone()).collect();
    let mnist_ok = mnist_paths == ["mnist/h_2", "mnist/h_4", "mnist/h_6", "mnist/h_8"];

    let hires = generate(&digits, &ConditionGrid::default_for(DatasetKind::MnistHires), &opts).unwrap().manifest;
    let mut expected = Vec::new();
    for d in Direction::ALL {
        for i in [4, 8, 16, 32] {
            expected.push((d, i));
        }
    }
    let got: Vec<_> = hires.sets.iter().map(|s| (s.spec.direction, s.spec.interval)).collect();
    let hires_ok = got == expected && (hires.width, hires.height) == (224, 224);

    let (_, sil) = silhouette_benchmark();
    let intervals: std::collections::BTreeSet<_> = sil.sets.iter().map(|s| s.spec.interval).collect();
    let sil_ok = sil.sets.len() == 24
        && sil.total_stimuli == 3840
        && sil.sets.iter().all(|s| s.items.len() == 160)
        && intervals.into_iter().collect::<Vec<_>>() == [4, 6, 8, 10, 12, 14];
    outcome(
        mnist_ok && hires_ok && sil_ok,
        format!(
            "mnist sets {:?}; hires {} sets at {}x{}; silhouettes {} sets, {} stimuli",
            mnist_paths,
            hires.sets.len(),
            hires.width,
            hires.height,
            sil.sets.len(),
            sil.total_stimuli
        ),
    )
}

fn random_image(rng: &mut ChaCha8Rng) -> GrayImage {
    let (w, h) = (rng.random_range(1..=48), rng.random_range(1..=48));
    let block = rng.random_range(1..=6);
    let seeds: Vec<f32> = (0..(w / block + 1) * (h / block + 1)).map(|_| rng.random()).collect();
    let stride = w / block + 1;
    GrayImage::from_fn(w, h, |x, y| seeds[(y / block) * stride + x / block])
}

fn mask_phase_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut partition, mut phase, mut binary, mut pixels) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..1000 {
        let img = random_image(&mut rng);
        let threshold = rng.random_range(0.05..0.95f32);
        let interval = 2 * rng.random_range(1..=8);
        let spec = GratingSpec::new(*Direction::ALL.choose(&mut rng).unwrap(), interval)
            .with_threshold(threshold)
            .with_figure_phase(rng.random_range(0..interval))
            .with_polarity(if rng.random() { Polarity::LinesWhiteOnBlack } else { Polarity::LinesBlackOnWhite });
        let dark = rng.random();
        let masks = binarize_with(&img, threshold, dark);
        let (w, h) = img.dims();
        pixels += w * h;
        for (k, &v) in img.data().iter().enumerate() {
            let expect = if dark { v < threshold } else { v > threshold };
            if masks.figure()[k] == masks.background()[k] || masks.figure()[k] != expect {
                partition += 1;
            }
        }
        let fg = render_grating(w, h, &spec, spec.figure_phase).unwrap();
        let bg = render_grating(w, h, &spec, spec.background_phase()).unwrap();
        let line = spec.polarity.line_value();
        if spec.figure_phase == spec.background_phase() {
            phase += 1;
        }
        phase += fg.data().iter().zip(bg.data()).filter(|(a, b)| **a == line && **b == line).count();
        let out = compose(&masks, &spec).unwrap();
        binary += out.data().iter().filter(|&&v| v != line && v != spec.polarity.ground_value()).count();
    }
    outcome(
        partition + phase + binary == 0,
        format!("{partition} partition, {phase} phase-coincidence, {binary} non-binary violations over 1000 images ({pixels} pixels)"),
    )
}

fn local_edge_destruction() -> Outcome {
    let (dir, manifest) = silhouette_benchmark();
    let source = &silhouettes().0;
    let steps: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    let mut total_pairs = 0usize;
    let mut violations = 0usize;
    let mut stimuli = 0usize;
    for set in manifest.sets.iter().filter(|s| s.spec.interval >= 4) {
        let pipeline = Pipeline::new(DatasetKind::Silhouettes, GenOptions::default());
        let (pairs, bad): (usize, usize) = set
            .items
            .par_iter()
            .map(|item| {
                let masks: MaskPair = pipeline.masks(&source.items()[item.index].image).unwrap();
                let out = read_png_file(&dir.join(&set.path).join(&item.file)).unwrap();
                let (w, h) = out.dims();
                let (mut pairs, mut bad) = (0, 0);
                for y in 0..h {
                    for x in 0..w {
                        for (dx, dy) in steps {
                            let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                            if qx < 0 || qy < 0 || qx >= w as i64 || qy >= h as i64 {
                                continue;
                            }
                            let (qx, qy) = (qx as usize, qy as usize);
                            let (fp, fq) = (masks.is_figure(x, y), masks.is_figure(qx, qy));
                            if fp == fq
                                || oracle_is_line(x, y, fp, &set.spec)
                                || oracle_is_line(qx, qy, fq, &set.spec)
                            {
                                continue;
                            }
                            pairs += 1;
                            if out.get(x, y) != out.get(qx, qy) {
                                bad += 1;
                            }
                        }
                    }
                }
                (pairs, bad)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        total_pairs += pairs;
        violations += bad;
        stimuli += set.items.len();
    }
    outcome(
        violations == 0 && total_pairs > 0,
        format!("{violations} violations over {total_pairs} off-line boundary pairs in {stimuli} stimuli"),
    )
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>, scale: f32) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-scale..scale)).unwrap()
}

fn oracle_conv(input: &Tensor, weights: &Tensor, stride: usize, pad: usize) -> (Vec<usize>, Vec<f64>) {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (o, k) = (weights.shape()[0], weights.shape()[2]);
    let (oh, ow) = ((h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1);
    let mut out = Vec::new();
    for oc in 0..o {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0f64;
                for ic in 0..c {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky) as i64 - pad as i64;
                            let ix = (ox * stride + kx) as i64 - pad as i64;
                            if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                acc += f64::from(input.data()[(ic * h + iy as usize) * w + ix as usize])
                                    * f64::from(weights.data()[((oc * c + ic) * k + ky) * k + kx]);
                            }
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    (vec![o, oh, ow], out)
}

fn oracle_pool(input: &Tensor, k: usize, stride: usize, pad: usize) -> (Vec<usize>, Vec<f64>) {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oh, ow) = ((h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1);
    let mut out = Vec::new();
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f64::NEG_INFINITY;
                for ky in 0..k {
                    for kx in 0..k {
                        let iy = (oy * stride + ky) as i64 - pad as i64;
                        let ix = (ox * stride + kx) as i64 - pad as i64;
                        if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                            m = m.max(f64::from(input.data()[(ch * h + iy as usize) * w + ix as usize]));
                        }
                    }
                }
                out.push(m);
            }
        }
    }
    (vec![c, oh, ow], out)
}

fn max_diff(t: &Tensor, shape: &[usize], expect: &[f64]) -> f64 {
    if t.shape() != shape {
        return f64::INFINITY;
    }
    t.data().iter().zip(expect).map(|(&a, &b)| (f64::from(a) - b).abs()).fold(0.0, f64::max)
}

fn tensor_op_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = [0.0f64; 4];
    for _ in 0..100 {
        let c = rng.random_range(1..=4);
        let (h, w) = (rng.random_range(3..=12), rng.random_range(3..=12));
        let input = random_tensor(&mut rng, vec![c, h, w], 1.0);
        let k = [1, 3, 5, 7][rng.random_range(0..4)];
        let pad = rng.random_range(0..=k / 2);
        let stride = rng.random_range(1..=3);
        let o = rng.random_range(1..=4);
        if h + 2 * pad >= k && w + 2 * pad >= k {
            let weights = random_tensor(&mut rng, vec![o, c, k, k], 0.5);
            let (shape, expect) = oracle_conv(&input, &weights, stride, pad);
            worst[0] = worst[0].max(max_diff(&conv2d(&input, &weights, stride, pad).unwrap(), &shape, &expect));
        }

        let bn = BatchNorm::new(
            (0..c).map(|_| rng.random_range(-2.0..2.0)).collect(),
            (0..c).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..c).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..c).map(|_| rng.random_range(0.1..2.0)).collect(),
        );
        let expect: Vec<f64> = (0..input.len())
            .map(|i| {
                let ch = i / (h * w);
                let x = f64::from(input.data()[i]);
                f64::from(bn.gamma[ch]) * (x - f64::from(bn.mean[ch])) / (f64::from(bn.var[ch]) + f64::from(BN_EPS)).sqrt()
                    + f64::from(bn.beta[ch])
            })
            .collect();
        worst[1] = worst[1].max(max_diff(&batch_norm(&input, &bn, BN_EPS).unwrap(), input.shape(), &expect));

        let expect: Vec<f64> = input.data().iter().map(|&v| f64::from(v).max(0.0)).collect();
        worst[2] = worst[2].max(max_diff(&relu(&input), input.shape(), &expect));

        let pk = rng.random_range(2..=3);
        let ppad = rng.random_range(0..=pk / 2);
        let ps = rng.random_range(1..=2);
        let (shape, expect) = oracle_pool(&input, pk, ps, ppad);
        worst[3] = worst[3].max(max_diff(&max_pool(&input, pk, ps, ppad).unwrap(), &shape, &expect));
    }

    let weights = random_tensor(&mut rng, vec![64, 3, 7, 7], 0.1);
    let bundle = WeightBundle::new(weights, BatchNorm::identity(64), "random").unwrap();
    let input = random_tensor(&mut rng, vec![3, 224, 224], 2.0);
    let stem = StemOutputs::run(&bundle, &input).unwrap();
    let chain = [stem.conv.shape(), stem.bn.shape(), stem.relu.shape(), stem.pool.shape()];
    let chain_ok = chain == [&[64, 112, 112][..], &[64, 112, 112], &[64, 112, 112], &[64, 56, 56]];
    let elapsed = start.elapsed();
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max <= 1e-6 && chain_ok && elapsed < Duration::from_secs(30),
        format!(
            "max abs error conv {:.1e}, bn {:.1e}, relu {:.1e}, pool {:.1e} (limit 1e-6); stem 3x224x224 -> {:?} -> {:?}; {:.2?} (limit 30 s)",
            worst[0], worst[1], worst[2], worst[3], stem.conv.shape(), stem.pool.shape(), elapsed
        ),
    )
}

fn random_guess() -> Outcome {
    let (_, manifest) = silhouette_benchmark();
    let set = manifest.sets.iter().find(|s| s.spec.direction == Direction::Horizontal && s.spec.interval == 4).unwrap();
    let truth = manifest_truth(set);
    // Each category owns a different number of fine classes.
    let mut map = ClassMap::default();
    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); 16];
    let mut fine = 0;
    for (k, list) in owned.iter_mut().enumerate() {
        for _ in 0..1 + k % 5 {
            map.insert(fine, k).unwrap();
            list.push(fine);
            fine += 7;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let accuracies: Vec<f64> = (0..100)
        .map(|m| {
            let rows = truth
                .iter()
                .map(|(id, _)| (id.clone(), *owned[rng.random_range(0..16)].choose(&mut rng).unwrap()))
                .collect();
            let preds = PredictionSet::new(format!("random-{m}"), rows).unwrap();
            let cond = Condition::of_set(manifest, set);
            score_labels(&preds, &truth, Some(&map), cond).unwrap().accuracy
        })
        .collect();
    let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    outcome(
        (mean - 0.0625).abs() <= 0.01,
        format!("mean accuracy {mean:.4} over 100 sets of {} predictions (target 0.0625 +/- 0.01)", truth.len()),
    )
}

fn human_subset() -> Outcome {
    let (source, name) = mnist();
    let a = sample_human_subset(source, 1).unwrap();
    let again = sample_human_subset(source, 1).unwrap();
    let b = sample_human_subset_excluding(source, 2, 1).unwrap();
    let hist = |labels: Vec<usize>| {
        let mut h = [0usize; 10];
        for l in labels {
            h[l] += 1;
        }
        h
    };
    let ha = hist(a.indices.iter().map(|&i| source.items()[i].label).collect());
    let hb = hist(b.indices.iter().map(|&i| source.items()[i].label).collect());
    let overlap = b.indices.iter().filter(|i| a.indices.contains(i)).count();
    let deterministic = a.indices == again.indices;
    outcome(
        ha == [10; 10] && hb == [10; 10] && deterministic && overlap == 0,
        format!("{name}: first draw {ha:?}, second {hb:?}, deterministic {deterministic}, overlap {overlap}"),
    )
}

/// Line pixels whose along-line neighbour on either side lies in the other region.
fn oracle_line_ends(masks: &MaskPair, spec: &GratingSpec) -> Vec<bool> {
    let (w, h) = masks.dims();
    let (dx, dy): (i64, i64) = match spec.direction {
        Direction::Horizontal => (1, 0),
        Direction::Vertical => (0, 1),
        Direction::DiagUl => (1, 1),
        Direction::DiagUr => (1, -1),
    };
    let mut ends = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let f = masks.is_figure(x, y);
            if !oracle_is_line(x, y, f, spec) {
                continue;
            }
            for s in [-1i64, 1] {
                let (qx, qy) = (x as i64 + s * dx, y as i64 + s * dy);
                if qx >= 0 && qy >= 0 && qx < w as i64 && qy < h as i64 && masks.is_figure(qx as usize, qy as usize) != f {
                    ends[y * w + x] = true;
                }
            }
        }
    }
    ends
}

fn end_stopping() -> Outcome {
    let (source, _) = mnist();
    let pipeline = Pipeline::new(DatasetKind::MnistHires, GenOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut lit_min, mut uniform_max, mut shift_max) = (f64::INFINITY, 0.0f64, 0.0f64);
    let mut cases = 0;
    for d in Direction::ALL {
        for interval in [4, 8, 16] {
            let img = &source.items()[rng.random_range(0..source.len())].image;
            let spec = pipeline.spec(d, interval);
            let masks = pipeline.masks(img).unwrap();
            let (w, h) = masks.dims();
            let ends = oracle_line_ends(&masks, &spec);
            let lit = GrayImage::new(w, h, ends.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect()).unwrap();
            lit_min = lit_min.min(end_stopping_score(&lit, &spec, &masks).unwrap());
            let c = rng.random_range(0.0..1.0f32);
            uniform_max = uniform_max.max(end_stopping_score(&GrayImage::filled(w, h, c), &spec, &masks).unwrap().abs());
            let base = GrayImage::from_fn(w, h, |_, _| rng.random_range(0.0..0.6f32));
            let shifted = GrayImage::new(w, h, base.data().iter().map(|v| v + 0.35).collect()).unwrap();
            let s0 = end_stopping_score(&base, &spec, &masks).unwrap();
            let s1 = end_stopping_score(&shifted, &spec, &masks).unwrap();
            shift_max = shift_max.max((s0 - s1).abs());
            cases += 1;
        }
    }
    outcome(
        lit_min > 0.0 && uniform_max == 0.0 && shift_max < 1e-6,
        format!(
            "{cases} stimuli: min line-end-lit score {lit_min:.4} (> 0), max |uniform score| {uniform_max:e} (= 0), max shift change {shift_max:.1e} (< 1e-6)"
        ),
    )
}

fn round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let names: Vec<String> = (0..10).map(|i| i.to_string()).collect();
    let (w, h) = (28, 28);
    let items: Vec<Sample> = (0..64)
        .map(|_| {
            let bytes: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
            Sample {
                image: GrayImage::from_u8(w, h, &bytes).unwrap(),
                label: rng.random_range(0..10),
            }
        })
        .collect();
    let ds = LabeledDataset::new(items, names.clone(), "random").unwrap();
    let (img_bytes, lbl_bytes) = (write_idx_images(&ds), write_idx_labels(&ds).unwrap());
    let back = parse_labeled_idx(&img_bytes, &lbl_bytes, names, "back").unwrap();
    let idx_diff = usize::from(back.items() != ds.items())
        + diff_bytes(&write_idx_images(&back), &img_bytes)
        + diff_bytes(&write_idx_labels(&back).unwrap(), &lbl_bytes);

    let mut png_diff = 0;
    for s in ds.items() {
        let encoded = write_png_gray(&s.image).unwrap();
        png_diff += diff_bytes(&load_png_gray(&encoded).unwrap().to_u8(), &s.image.to_u8());
    }

    let bundle = WeightBundle::new(
        random_tensor(&mut rng, vec![64, 3, 7, 7], 1.0),
        BatchNorm::new(
            (0..64).map(|_| rng.random()).collect(),
            (0..64).map(|_| rng.random()).collect(),
            (0..64).map(|_| rng.random()).collect(),
            (0..64).map(|_| rng.random_range(0.0..3.0)).collect(),
        ),
        "random",
    )
    .unwrap();
    let (json, blob) = write_weight_bundle(&bundle).unwrap();
    let loaded = load_weight_bundle(&json, &blob).unwrap();
    let (json2, blob2) = write_weight_bundle(&loaded).unwrap();
    let bundle_diff = diff_bytes(&blob, &blob2) + diff_bytes(json.as_bytes(), json2.as_bytes()) + usize::from(loaded != bundle);
    outcome(
        idx_diff + png_diff + bundle_diff == 0,
        format!("byte differences: idx {idx_diff}, png {png_diff} (64 images), weight bundle {bundle_diff} ({} bytes)", blob.len()),
    )
}

fn diff_bytes(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("corruption oracle equivalence", oracle_equivalence),
        ("benchmark constants", benchmark_constants),
        ("mask/phase properties", mask_phase_properties),
        ("local-edge destruction", local_edge_destruction),
        ("tensor-op oracles", tensor_op_oracles),
        ("random-guess scoring", random_guess),
        ("human-subset sampling", human_subset),
        ("end-stopping metric sanity", end_stopping),
        ("round-trips", round_trips),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.2?}]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
