use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use embedscope_core::config::RunConfig;
use embedscope_core::dataset::{self, candidates_from_csv, load_csv, save_csv, save_plans};
use embedscope_core::fsutil::{read, write_atomic};
use embedscope_core::importance::{permutation_importance, shapley_mc};
use embedscope_core::learners::{self, evaluate_all, leave_one_dataset_out, recommend, split, TrainedRecommender};
use embedscope_core::metrics::{l2_histogram, metric_vector, value_histogram};
use embedscope_core::probe::train_probe;
use embedscope_core::tensor_io::{load_set, Manifest};
use embedscope_core::{Error, FEATURE_NAMES};

use crate::{Cli, Command, Format, HistKind, Method, Split};

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = Some(seed);
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = Some(t);
    }
    cfg.validate()?;
    let cfg = cfg.resolved();
    if let Some(n) = cfg.run.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::ThreadPool(e.to_string()))?;
    }

    match cli.command {
        Command::Metrics { manifest, format, out } => metrics(&manifest, format, out.as_deref(), &cfg),
        Command::Hist {
            manifest,
            kind,
            bins,
            split,
            out,
        } => hist(&manifest, kind, bins as usize, split, out.as_deref()),
        Command::Probe {
            manifest,
            learning_rate,
            epochs,
            batch_size,
            repeats,
            no_standardize,
            out,
        } => {
            let mut p = cfg.build.probe;
            p.learning_rate = learning_rate.unwrap_or(p.learning_rate);
            p.epochs = epochs.unwrap_or(p.epochs);
            p.batch_size = batch_size.unwrap_or(p.batch_size);
            p.repeats = repeats.unwrap_or(p.repeats);
            if no_standardize {
                p.standardize = false;
            }
            p.validate()?;
            let set = load_set(&Manifest::load(&manifest)?)?;
            let result = train_probe(&set, &p)?;
            emit(out.as_deref(), &json_line(&result)?)
        }
        Command::BuildDataset {
            manifests,
            manifest,
            n_samples,
            top_k,
            train_size,
            test_size,
            out_dir,
        } => {
            let mut paths = cfg.run.manifests.clone();
            if let Some(list) = manifests {
                paths.extend(read_manifest_list(&list)?);
            }
            paths.extend(manifest);
            if paths.is_empty() {
                bail!("no manifests given (use --manifests, --manifest or [run] manifests)");
            }
            let mut b = cfg.build;
            b.n_samples = n_samples.unwrap_or(b.n_samples);
            b.top_k = top_k.unwrap_or(b.top_k);
            b.sampler.train_size = train_size.unwrap_or(b.sampler.train_size);
            b.sampler.test_size = test_size.unwrap_or(b.sampler.test_size);
            let loaded = paths.iter().map(Manifest::load).collect::<Result<Vec<_>, _>>()?;
            let built = dataset::build(&loaded, &b)?;
            let dir = output_dir(out_dir, &cfg)?;
            save_csv(&built.dataset, dir.join("recommendation_dataset.csv"))?;
            save_plans(&built.plans, dir.join("plans.json"))?;
            log::info!(
                "{} instances in {} groups written to {}",
                built.dataset.len(),
                built.dataset.groups().len(),
                dir.display()
            );
            Ok(())
        }
        Command::TrainRecommender {
            dataset,
            kind,
            all,
            out_dir,
        } => {
            let ds = load_csv(&dataset)?;
            let train = if all { ds } else { split(&ds, &cfg.split)?.train };
            let model = learners::fit(kind, &train, &cfg.learners)?;
            let dir = output_dir(out_dir, &cfg)?;
            model.save(dir.join("model.json"))?;
            Ok(())
        }
        Command::Evaluate {
            dataset,
            leave_out,
            kind,
            out_dir,
        } => {
            let ds = load_csv(&dataset)?;
            match leave_out {
                Some(held) => {
                    let report = leave_one_dataset_out(&ds, &held, kind, &cfg.learners)?;
                    let dir = output_dir(out_dir, &cfg)?;
                    write_atomic(&dir.join(format!("lodo_{held}.json")), json_line(&report)?.as_bytes())?;
                    println!(
                        "held out {held} ({} samples, {kind}): top-1 in actual top-{} {:.3}, top-1 is best {:.3}, accuracy {:.3}",
                        report.samples.len(),
                        ds.top_k,
                        report.top1_in_actual_top_k,
                        report.top1_is_best,
                        report.classification_accuracy
                    );
                }
                None => {
                    let report = evaluate_all(&ds, &cfg.split, &cfg.learners)?;
                    let dir = output_dir(out_dir, &cfg)?;
                    let table = report.to_table();
                    write_atomic(&dir.join("evaluation.json"), json_line(&report)?.as_bytes())?;
                    write_atomic(&dir.join("evaluation.txt"), table.as_bytes())?;
                    print!("{table}");
                }
            }
            Ok(())
        }
        Command::Recommend {
            model,
            candidates,
            top_k,
            out,
        } => {
            if top_k == 0 {
                bail!("--top-k must be at least 1");
            }
            let model = TrainedRecommender::load(&model)?;
            let cands = candidates_from_csv(read(&candidates)?.as_slice())?;
            let ranked = recommend(&model, &cands, top_k)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["rank", "ptm_id", "score", "recommended"])?;
            for r in &ranked {
                w.write_record([
                    r.rank.to_string(),
                    r.ptm_id.clone(),
                    format!("{:?}", r.score),
                    r.recommended.to_string(),
                ])?;
            }
            emit(out.as_deref(), &String::from_utf8(w.into_inner()?)?)
        }
        Command::Importance {
            dataset,
            model,
            method,
            metric,
            repeats,
            out_dir,
        } => {
            let ds = load_csv(&dataset)?;
            let model = TrainedRecommender::load(&model)?;
            let test = split(&ds, &cfg.split)?.test;
            let imp = cfg.importance;
            let metric = metric.unwrap_or(imp.metric);
            let report = match method {
                Method::Permutation => {
                    permutation_importance(&model, &test, metric, repeats.unwrap_or(imp.n_repeats), imp.seed)?
                }
                Method::Shapley => shapley_mc(&model, &test, metric, repeats.unwrap_or(imp.n_permutations), imp.seed)?,
            };
            let dir = output_dir(out_dir, &cfg)?;
            write_atomic(&dir.join("importance.csv"), report.to_csv().as_bytes())?;
            print!("{}", report.to_table());
            Ok(())
        }
    }
}

fn metrics(manifest: &Path, format: Format, out: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let m = Manifest::load(manifest)?;
    let set = load_set(&m)?;
    let mv = metric_vector(&set, &cfg.build.metrics)?;
    let text = match format {
        Format::Json => json_line(&mv)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["dataset_id", "ptm_id"].into_iter().chain(FEATURE_NAMES))?;
            let mut rec = vec![m.dataset_id, m.ptm_id];
            rec.extend(mv.to_array().iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
            String::from_utf8(w.into_inner()?)?
        }
    };
    emit(out, &text)
}

fn hist(manifest: &Path, kind: HistKind, bins: usize, split: Split, out: Option<&Path>) -> Result<()> {
    let set = load_set(&Manifest::load(manifest)?)?;
    let m = match split {
        Split::Train => &set.train,
        Split::Test => &set.test,
    };
    let h = match kind {
        HistKind::Value => value_histogram(m, bins)?,
        HistKind::L2norm => l2_histogram(m, bins)?,
    };
    emit(out, &h.to_csv())
}

/// One path per line; blank lines and `#` comments are skipped. Relative
/// paths are resolved against the list file's directory.
fn read_manifest_list(list: &Path) -> Result<Vec<PathBuf>> {
    let text = String::from_utf8(read(list)?).with_context(|| format!("{} is not UTF-8", list.display()))?;
    let base = list.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        })
        .collect())
}

fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.run.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    Ok(dir)
}

fn json_line<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

