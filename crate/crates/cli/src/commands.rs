//! One function per subcommand. Each reads its inputs from the working
//! directory laid out by the previous stage, so the pipeline can be driven
//! stepwise or replayed per block size.
//!
//! Timing-derived numbers live in files that deterministic replays are
//! allowed to differ on (`*_metrics.csv`, `train_timing.csv`); everything
//! else (manifest, matrices, checkpoints, loss curves) is byte-stable for a
//! fixed config and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use beamwek_core::channel::dataset::{read_manifest, ManifestRow};
use beamwek_core::channel::generate_dataset;
use beamwek_core::metrics::{build_report, pcei, sigma_t, RunRow};
use beamwek_core::nn::checkpoint::{load_checkpoint, save_checkpoint};
use beamwek_core::nn::{evaluate, load_dataset, split_dataset, train};
use beamwek_core::taxonomy::{extract_pes, load_label_map};
use beamwek_core::wek::{build_wek, eir3, partition};
use beamwek_core::{seeds, Error, Result};

use crate::config::RunConfig;

pub fn cmd_gen_scenes(
    cfg: &RunConfig,
    count: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let gen = cfg.gen_config(count);
    let dir = out.unwrap_or_else(|| cfg.dataset_dir());
    let records = generate_dataset(&gen, cfg.seed, &dir)?;

    println!("manifest: {}", dir.join(beamwek_core::channel::dataset::MANIFEST_FILE).display());
    if records.is_empty() {
        println!("samples: 0");
        return Ok(());
    }
    let mut hist = vec![0usize; gen.array.n_beams];
    for r in &records {
        hist[r.beam_label] += 1;
    }
    let used = hist.iter().filter(|&&c| c > 0).count();
    let (top_beam, top_count) =
        hist.iter().enumerate().max_by_key(|&(b, c)| (*c, std::cmp::Reverse(b))).unwrap();
    println!(
        "samples: {}; beams used: {}/{}; most common: beam {} ({} samples)",
        records.len(),
        used,
        gen.array.n_beams,
        top_beam,
        top_count,
    );
    Ok(())
}

pub fn cmd_build_wek(cfg: &RunConfig, block: Option<usize>) -> Result<()> {
    let manifest = require(cfg.manifest_path(), "run gen-scenes first")?;
    let rows = read_manifest(&manifest)?;
    let taxonomy = cfg.taxonomy()?;
    let eps = cfg.permittivity()?;
    let dataset_dir = cfg.dataset_dir();

    for b in cfg.selected_blocks(block)? {
        let out = cfg.wek_dir(b);
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let mut announced = false;
        for row in &rows {
            let map = load_label_map(&dataset_dir.join(&row.labelmap), taxonomy.registry())?;
            if b > map.height.min(map.width) {
                return Err(Error::config(format!(
                    "block size {b} exceeds the {}x{} label map",
                    map.height, map.width
                )));
            }
            let materials = extract_pes(&map, &taxonomy)?;
            let wek = build_wek(
                &materials,
                b,
                &eps,
                row.tx_geo,
                row.rx_geo,
                seeds::derive(cfg.seed, "wek", row.sample_id),
            )?;
            if !announced {
                let grid = partition(map.height, map.width, b)?;
                println!("{}x{}, EIR3={:.2}%", grid.ny, grid.nx, eir3(map.height, map.width, grid));
                announced = true;
            }
            wek.save(&out.join(sample_csv(row)))?;
        }
        if !announced {
            println!("B={b}: no samples listed, nothing to build");
        }
    }
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, block: Option<usize>) -> Result<()> {
    let manifest = require(cfg.manifest_path(), "run gen-scenes first")?;
    let mode = cfg.sigma_mode()?;

    for b in cfg.selected_blocks(block)? {
        let wek_dir = require(cfg.wek_dir(b), "run build-wek first")?;
        let ds = load_dataset(&manifest, &wek_dir, cfg.array.n_beams)?;
        let (train_set, _) = split_dataset(&ds, cfg.seed, cfg.train_fraction);
        if train_set.is_empty() {
            return Err(Error::Dataset(format!("B={b}: the train split is empty")));
        }

        // The file's input dims are placeholders; the matrices decide.
        let mut net_cfg = cfg.net.clone();
        net_cfg.input_h = ds.ny;
        net_cfg.input_w = ds.nx;
        net_cfg.n_beams = cfg.array.n_beams;
        let mut tc = cfg.train.clone();
        tc.seed = cfg.seed;

        let res = train(&net_cfg, &tc, &train_set)?;
        let run_dir = cfg.run_dir(b);
        fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
        save_checkpoint(&res.net, &run_dir.join("checkpoint.bin"))?;

        let mut curve = String::from("epoch,loss\n");
        for (e, loss) in res.loss_curve.iter().enumerate() {
            curve.push_str(&format!("{e},{loss}\n"));
        }
        write_text(&run_dir.join("loss_curve.csv"), &curve)?;

        let mut timing = String::from("epoch,seconds\n");
        for (e, s) in res.timing.samples_s.iter().enumerate() {
            timing.push_str(&format!("{e},{s}\n"));
        }
        timing.push_str(&format!("total,{}\n", res.timing.total_s));
        write_text(&run_dir.join("train_timing.csv"), &timing)?;

        let top1 = depth_accuracy(&res.topk, 1)? / 100.0;
        let sigma = sigma_t(&res.timing.samples_s, mode)?;
        let score = pcei(top1, res.timing.total_s, cfg.alpha, sigma)?;
        let min_loss = res.loss_curve.iter().cloned().fold(f64::INFINITY, f64::min);
        write_kv(
            &run_dir.join("train_metrics.csv"),
            &[
                ("b", b as f64),
                ("ny", ds.ny as f64),
                ("nx", ds.nx as f64),
                ("iters", res.loss_curve.len() as f64),
                ("min_loss", min_loss),
                ("top1_train", top1),
                ("train_s", res.timing.total_s),
                ("sigma_train", sigma),
                ("pcei_train", score),
            ],
        )?;
        println!(
            "B={b}: {} epochs on {} samples, final loss {:.4}, train top-1 {:.2}%",
            res.loss_curve.len(),
            train_set.len(),
            res.loss_curve.last().unwrap(),
            top1 * 100.0,
        );
    }
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig, block: Option<usize>, k: Option<usize>) -> Result<()> {
    let manifest = require(cfg.manifest_path(), "run gen-scenes first")?;
    let mode = cfg.sigma_mode()?;
    if cfg.array.n_beams < 5 {
        return Err(Error::config("the report needs top-1..top-5, so n_beams must be at least 5"));
    }

    for b in cfg.selected_blocks(block)? {
        let wek_dir = require(cfg.wek_dir(b), "run build-wek first")?;
        let ckpt = require(cfg.run_dir(b).join("checkpoint.bin"), "run train first")?;
        let ds = load_dataset(&manifest, &wek_dir, cfg.array.n_beams)?;
        let (_, test_set) = split_dataset(&ds, cfg.seed, cfg.train_fraction);
        if test_set.is_empty() {
            return Err(Error::Dataset(format!("B={b}: the test split is empty")));
        }
        let net = load_checkpoint(&ckpt)?;

        // Always score depths 1..5 for the report, plus whatever was asked.
        let mut ks: Vec<usize> = (1..=5).collect();
        ks.extend(&cfg.train.k_list);
        if let Some(k) = k {
            if k == 0 || k > cfg.array.n_beams {
                return Err(Error::config(format!("k must lie in 1..={}", cfg.array.n_beams)));
            }
            ks.push(k);
        }
        ks.sort_unstable();
        ks.dedup();

        let ev = evaluate(&net, &test_set, &ks)?;
        let sigma = sigma_t(&ev.timing.samples_s, mode)?;
        let top1 = depth_accuracy(&ev.topk, 1)? / 100.0;
        let score = pcei(top1, ev.timing.total_s, cfg.alpha, sigma)?;

        let mut kv = vec![("b".to_string(), b as f64)];
        kv.push(("test_s".into(), ev.timing.total_s));
        kv.push(("sigma_test".into(), sigma));
        for d in 1..=5 {
            kv.push((format!("top{d}"), depth_accuracy(&ev.topk, d)? / 100.0));
        }
        kv.push(("pcei_test".into(), score));
        let kv: Vec<(&str, f64)> = kv.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        write_kv(&cfg.run_dir(b).join("eval_metrics.csv"), &kv)?;

        let accs: Vec<String> =
            ev.topk.iter().map(|(d, a)| format!("top{d}={a:.2}%")).collect();
        println!("B={b}: {} pcei_test={score:.4}", accs.join(" "));
    }
    Ok(())
}

pub fn cmd_report(cfg: &RunConfig, out: Option<PathBuf>) -> Result<()> {
    let label = format!("seed={} frac={} sigma={}", cfg.seed, cfg.train_fraction, cfg.sigma_mode);
    let mut rows = Vec::new();
    for &b in &cfg.block_sizes {
        let tm = read_kv(&require(cfg.run_dir(b).join("train_metrics.csv"), "run train first")?)?;
        let em = read_kv(&require(cfg.run_dir(b).join("eval_metrics.csv"), "run eval first")?)?;
        let get = |m: &BTreeMap<String, f64>, key: &str, file: &str| -> Result<f64> {
            m.get(key).copied().ok_or_else(|| {
                Error::Dataset(format!("B={b}: {file} is missing the {key} entry"))
            })
        };
        rows.push(RunRow {
            config: label.clone(),
            b,
            ny: get(&tm, "ny", "train_metrics.csv")? as usize,
            nx: get(&tm, "nx", "train_metrics.csv")? as usize,
            iters: get(&tm, "iters", "train_metrics.csv")? as usize,
            min_loss: get(&tm, "min_loss", "train_metrics.csv")?,
            top1_train: get(&tm, "top1_train", "train_metrics.csv")?,
            train_s: get(&tm, "train_s", "train_metrics.csv")?,
            pcei_train: get(&tm, "pcei_train", "train_metrics.csv")?,
            test_s: get(&em, "test_s", "eval_metrics.csv")?,
            topk_test: [
                get(&em, "top1", "eval_metrics.csv")?,
                get(&em, "top2", "eval_metrics.csv")?,
                get(&em, "top3", "eval_metrics.csv")?,
                get(&em, "top4", "eval_metrics.csv")?,
                get(&em, "top5", "eval_metrics.csv")?,
            ],
            pcei_test: get(&em, "pcei_test", "eval_metrics.csv")?,
            alpha: cfg.alpha,
            sigma_train: get(&tm, "sigma_train", "train_metrics.csv")?,
            sigma_test: get(&em, "sigma_test", "eval_metrics.csv")?,
        });
    }
    let text = build_report(&rows)?;
    let path = out.unwrap_or_else(|| cfg.workdir().join("report.csv"));
    write_text(&path, &text)?;
    println!("report: {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn sample_csv(row: &ManifestRow) -> String {
    format!("sample_{:06}.csv", row.sample_id)
}

/// Missing pipeline inputs are their own failure class: the message names
/// the artifact and the stage that produces it.
fn require(path: PathBuf, hint: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(format!("{}: {hint}", path.display())))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_kv(path: &Path, pairs: &[(&str, f64)]) -> Result<()> {
    let mut text = String::from("key,value\n");
    for (k, v) in pairs {
        text.push_str(&format!("{k},{v}\n"));
    }
    write_text(path, &text)
}

fn read_kv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("key,value") {
        return Err(Error::Dataset(format!("{}: expected a key,value header", path.display())));
    }
    let mut map = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let (k, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Dataset(format!("{}: line {}: not key,value", path.display(), i + 2)))?;
        let v: f64 = v.parse().map_err(|_| {
            Error::Dataset(format!("{}: line {}: bad number {v:?}", path.display(), i + 2))
        })?;
        map.insert(k.to_string(), v);
    }
    Ok(map)
}

fn depth_accuracy(topk: &[(usize, f64)], depth: usize) -> Result<f64> {
    topk.iter()
        .find(|(d, _)| *d == depth)
        .map(|(_, a)| *a)
        .ok_or_else(|| Error::Dataset(format!("no top-{depth} accuracy was computed")))
}
