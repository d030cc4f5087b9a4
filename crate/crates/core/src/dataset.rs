//! Builds the recommendation dataset: one row of metric features per
//! (dataset, sample, PTM), labelled positive when the PTM's probe AUC is
//! among the top k of its sample group.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::metrics::{metric_vector, MetricConfig, MetricVector, FEATURE_NAMES, NUM_FEATURES};
use crate::probe::{train_probe, ProbeConfig};
use crate::sampler::{make_plans, SamplerConfig, SamplePlan};
use crate::seed;
use crate::tensor_io::{load_set, EmbeddingSet, Manifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationInstance {
    pub dataset_id: String,
    pub sample_id: usize,
    pub ptm_id: String,
    pub features: MetricVector,
    pub probe_auc: f64,
    pub label: u8,
}

impl RecommendationInstance {
    fn group_key(&self) -> (&str, usize) {
        (&self.dataset_id, self.sample_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationDataset {
    pub instances: Vec<RecommendationInstance>,
    pub ptm_ids: Vec<String>,
    pub top_k: usize,
}

impl RecommendationDataset {
    /// Sorts instances into canonical (dataset, sample, ptm) order and checks
    /// the group invariants.
    pub fn new(mut instances: Vec<RecommendationInstance>, top_k: usize) -> Result<Self> {
        instances.sort_by(|a, b| {
            (&a.dataset_id, a.sample_id, &a.ptm_id).cmp(&(&b.dataset_id, b.sample_id, &b.ptm_id))
        });
        let ptm_ids: Vec<String> = instances
            .iter()
            .map(|i| i.ptm_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ds = Self {
            instances,
            ptm_ids,
            top_k,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instances grouped by (dataset, sample), in canonical order.
    pub fn groups(&self) -> Vec<&[RecommendationInstance]> {
        self.instances
            .chunk_by(|a, b| a.group_key() == b.group_key())
            .collect()
    }

    pub fn dataset_ids(&self) -> Vec<String> {
        self.instances
            .iter()
            .map(|i| i.dataset_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn features(&self) -> Vec<[f64; NUM_FEATURES]> {
        self.instances.iter().map(|i| i.features.to_array()).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.instances.iter().filter(|i| i.label == 1).count();
        p > 0 && p < self.instances.len()
    }

    /// Keeps the instances for which `keep` holds. Callers are expected to
    /// select whole groups.
    pub fn filter(&self, keep: impl Fn(&RecommendationInstance) -> bool) -> Self {
        Self {
            instances: self.instances.iter().filter(|i| keep(i)).cloned().collect(),
            ptm_ids: self.ptm_ids.clone(),
            top_k: self.top_k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected_pos = self.top_k.min(self.ptm_ids.len());
        for inst in &self.instances {
            if inst.label > 1 {
                return Err(Error::DatasetInvariant(format!(
                    "label {} for {}/{}/{}",
                    inst.label, inst.dataset_id, inst.sample_id, inst.ptm_id
                )));
            }
            if !(0.0..=1.0).contains(&inst.probe_auc) {
                return Err(Error::DatasetInvariant(format!(
                    "probe_auc {} outside [0, 1]",
                    inst.probe_auc
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for group in self.groups() {
            let (d, s) = group[0].group_key();
            if !seen.insert((d.to_string(), s)) {
                return Err(Error::DatasetInvariant(format!("group {d}/{s} is not contiguous")));
            }
            let ptms: Vec<&str> = group.iter().map(|i| i.ptm_id.as_str()).collect();
            if ptms.len() != self.ptm_ids.len() || ptms.iter().zip(&self.ptm_ids).any(|(a, b)| a != b)
            {
                return Err(Error::DatasetInvariant(format!(
                    "group {d}/{s} has PTMs {ptms:?}, expected each of {:?} once",
                    self.ptm_ids
                )));
            }
            let pos = group.iter().filter(|i| i.label == 1).count();
            if pos != expected_pos {
                return Err(Error::DatasetInvariant(format!(
                    "group {d}/{s} has {pos} positives, expected {expected_pos}"
                )));
            }
        }
        Ok(())
    }
}

/// Labels the `top_k` highest AUCs positive. Ties are broken by ascending
/// PTM id. The output keeps the input order.
pub fn label_by_rank(aucs: &[(String, f64)], top_k: usize) -> Vec<(String, u8)> {
    let mut order: Vec<usize> = (0..aucs.len()).collect();
    order.sort_by(|&a, &b| {
        aucs[b]
            .1
            .total_cmp(&aucs[a].1)
            .then_with(|| aucs[a].0.cmp(&aucs[b].0))
    });
    let mut labels = vec![0u8; aucs.len()];
    for &i in order.iter().take(top_k) {
        labels[i] = 1;
    }
    aucs.iter()
        .zip(labels)
        .map(|((id, _), l)| (id.clone(), l))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub n_samples: usize,
    pub top_k: usize,
    pub seed: u64,
    pub probe: ProbeConfig,
    pub metrics: MetricConfig,
    pub sampler: SamplerConfig,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            n_samples: 200,
            top_k: 3,
            seed: 0,
            probe: ProbeConfig::default(),
            metrics: MetricConfig::default(),
            sampler: SamplerConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub dataset: RecommendationDataset,
    pub plans: Vec<SamplePlan>,
}

/// Loads every manifest and groups the sets as dataset -> ptm -> set.
pub fn load_manifests(
    manifests: &[Manifest],
) -> Result<BTreeMap<String, BTreeMap<String, EmbeddingSet>>> {
    let sets = manifests
        .par_iter()
        .map(load_set)
        .collect::<Result<Vec<_>>>()?;
    group_sets(sets)
}

pub fn group_sets(
    sets: Vec<EmbeddingSet>,
) -> Result<BTreeMap<String, BTreeMap<String, EmbeddingSet>>> {
    let mut by_dataset: BTreeMap<String, BTreeMap<String, EmbeddingSet>> = BTreeMap::new();
    for set in sets {
        let entry = by_dataset.entry(set.dataset_id.clone()).or_default();
        if entry.contains_key(&set.ptm_id) {
            return Err(Error::Manifest(format!(
                "duplicate set for dataset {:?}, ptm {:?}",
                set.dataset_id, set.ptm_id
            )));
        }
        entry.insert(set.ptm_id.clone(), set);
    }
    let mut reference: Option<Vec<&String>> = None;
    for (dataset, ptms) in &by_dataset {
        let ids: Vec<&String> = ptms.keys().collect();
        match &reference {
            None => reference = Some(ids),
            Some(r) if *r != ids => {
                return Err(Error::Manifest(format!(
                    "dataset {dataset:?} has PTMs {ids:?}, expected {r:?}"
                )))
            }
            _ => {}
        }
        let mut it = ptms.values();
        let first = it.next().expect("non-empty group");
        for other in it {
            if other.train_labels != first.train_labels || other.test_labels != first.test_labels {
                return Err(Error::Manifest(format!(
                    "dataset {dataset:?}: labels of {:?} differ from {:?}",
                    other.ptm_id, first.ptm_id
                )));
            }
        }
    }
    Ok(by_dataset)
}

struct WorkItem<'a> {
    set: &'a EmbeddingSet,
    plan: &'a SamplePlan,
}

fn evaluate_item(item: &WorkItem<'_>, cfg: &BuildConfig) -> Result<(MetricVector, f64)> {
    let keys = [
        seed::hash_str(&item.set.dataset_id),
        item.plan.sample_id as u64,
        seed::hash_str(&item.set.ptm_id),
    ];
    let sub = item
        .set
        .subset(&item.plan.train_indices, &item.plan.test_indices)?;
    let mut metrics = cfg.metrics;
    metrics.mmd.seed = seed::derive(cfg.metrics.mmd.seed ^ cfg.seed, &keys);
    let mut probe = cfg.probe;
    probe.seed = seed::derive(cfg.probe.seed ^ cfg.seed, &keys);
    let features = metric_vector(&sub, &metrics)?;
    let result = train_probe(&sub, &probe)?;
    Ok((features, result.auc))
}

/// Runs the full construction over already loaded sets. Work items run in
/// parallel on the current rayon pool; output order is canonical.
pub fn build_from_sets(
    sets: &BTreeMap<String, BTreeMap<String, EmbeddingSet>>,
    cfg: &BuildConfig,
) -> Result<BuildOutput> {
    if cfg.top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    if cfg.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    cfg.probe.validate()?;
    cfg.metrics.mmd.validate()?;

    if let Some(ptms) = sets.values().next() {
        if cfg.top_k >= ptms.len() {
            log::warn!(
                "top_k {} with {} PTMs labels every instance positive",
                cfg.top_k,
                ptms.len()
            );
        }
    }
    let mut plans = Vec::new();
    for (dataset_id, ptms) in sets {
        let first = ptms.values().next().expect("non-empty group");
        plans.extend(make_plans(
            dataset_id,
            &first.train_labels,
            &first.test_labels,
            cfg.n_samples,
            &cfg.sampler,
            seed::derive(cfg.seed, &[seed::hash_str(dataset_id)]),
        )?);
    }

    let items: Vec<WorkItem<'_>> = plans
        .iter()
        .flat_map(|plan| {
            sets[&plan.dataset_id]
                .values()
                .map(move |set| WorkItem { set, plan })
        })
        .collect();
    let results: Vec<Result<(MetricVector, f64)>> =
        items.par_iter().map(|item| evaluate_item(item, cfg)).collect();

    let mut instances = Vec::with_capacity(items.len());
    let mut start = 0;
    while start < items.len() {
        let plan = items[start].plan;
        let end = start + sets[&plan.dataset_id].len();
        let group = &results[start..end];
        if let Some((i, Err(e))) = group.iter().enumerate().find(|(_, r)| r.is_err()) {
            log::warn!(
                "dropping sample {}/{}: {} failed: {e}",
                plan.dataset_id,
                plan.sample_id,
                items[start + i].set.ptm_id
            );
        } else {
            let aucs: Vec<(String, f64)> = items[start..end]
                .iter()
                .zip(group)
                .map(|(it, r)| (it.set.ptm_id.clone(), r.as_ref().unwrap().1))
                .collect();
            let labels = label_by_rank(&aucs, cfg.top_k);
            for ((it, r), (_, label)) in items[start..end].iter().zip(group).zip(labels) {
                let (features, probe_auc) = *r.as_ref().unwrap();
                instances.push(RecommendationInstance {
                    dataset_id: plan.dataset_id.clone(),
                    sample_id: plan.sample_id,
                    ptm_id: it.set.ptm_id.clone(),
                    features,
                    probe_auc,
                    label,
                });
            }
        }
        start = end;
    }
    if instances.is_empty() {
        return Err(Error::DatasetInvariant("every sample group failed".into()));
    }
    Ok(BuildOutput {
        dataset: RecommendationDataset::new(instances, cfg.top_k)?,
        plans,
    })
}

pub fn build(manifests: &[Manifest], cfg: &BuildConfig) -> Result<BuildOutput> {
    build_from_sets(&load_manifests(manifests)?, cfg)
}

const ID_COLUMNS: [&str; 3] = ["dataset_id", "sample_id", "ptm_id"];
const TAIL_COLUMNS: [&str; 2] = ["probe_auc", "label"];

pub fn csv_header() -> Vec<&'static str> {
    ID_COLUMNS
        .iter()
        .chain(FEATURE_NAMES.iter())
        .chain(TAIL_COLUMNS.iter())
        .copied()
        .collect()
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn to_csv_bytes(ds: &RecommendationDataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header())?;
    for inst in &ds.instances {
        let mut rec = vec![
            inst.dataset_id.clone(),
            inst.sample_id.to_string(),
            inst.ptm_id.clone(),
        ];
        rec.extend(inst.features.to_array().iter().map(|&v| fmt_f64(v)));
        rec.push(fmt_f64(inst.probe_auc));
        rec.push(inst.label.to_string());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.to_string()))
}

pub fn save_csv(ds: &RecommendationDataset, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &to_csv_bytes(ds)?)
}

/// Maps each required column name to its position in `headers`.
pub(crate) fn column_map<'a>(
    headers: &csv::StringRecord,
    required: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<usize>> {
    required
        .into_iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::SchemaMismatch(name.to_string()))
        })
        .collect()
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    col: usize,
    name: &str,
) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(col).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| Error::Csv(format!("line {line}: cannot parse {name} from {raw:?}")))
}

pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<RecommendationDataset> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let header = csv_header();
    let cols = column_map(&headers, header.iter().copied())?;
    let mut instances = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut features = [0.0; NUM_FEATURES];
        for (k, f) in features.iter_mut().enumerate() {
            *f = parse_field(&rec, cols[3 + k], FEATURE_NAMES[k])?;
        }
        instances.push(RecommendationInstance {
            dataset_id: rec.get(cols[0]).unwrap_or("").to_string(),
            sample_id: parse_field(&rec, cols[1], "sample_id")?,
            ptm_id: rec.get(cols[2]).unwrap_or("").to_string(),
            features: MetricVector::from_array(features),
            probe_auc: parse_field(&rec, cols[3 + NUM_FEATURES], "probe_auc")?,
            label: parse_field(&rec, cols[4 + NUM_FEATURES], "label")?,
        });
    }
    // top_k is not a column; the positives of the first group recover it
    let top_k = instances
        .chunk_by(|a, b| a.group_key() == b.group_key())
        .next()
        .map_or(1, |g| g.iter().filter(|i| i.label == 1).count().max(1));
    RecommendationDataset::new(instances, top_k)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<RecommendationDataset> {
    let bytes = fsutil::read(path.as_ref())?;
    from_csv_reader(bytes.as_slice())
}

/// Candidate PTMs for recommendation: a `ptm_id` column plus the thirteen
/// feature columns in any order. Other columns are ignored.
pub fn candidates_from_csv<R: std::io::Read>(reader: R) -> Result<Vec<(String, MetricVector)>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let cols = column_map(&headers, std::iter::once("ptm_id").chain(FEATURE_NAMES))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut features = [0.0; NUM_FEATURES];
        for (k, f) in features.iter_mut().enumerate() {
            *f = parse_field(&rec, cols[1 + k], FEATURE_NAMES[k])?;
        }
        out.push((rec.get(cols[0]).unwrap_or("").to_string(), MetricVector::from_array(features)));
    }
    Ok(out)
}

pub fn save_plans(plans: &[SamplePlan], path: impl AsRef<Path>) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(plans)?;
    json.push(b'\n');
    fsutil::write_atomic(path.as_ref(), &json)
}
