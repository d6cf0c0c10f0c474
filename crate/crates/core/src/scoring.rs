//! Scoring external model predictions against generated benchmarks.
//!
//! Correctness is tallied as integer counts; accuracy is only derived at the
//! end as `correct / n`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::dataset_io::{ClassMap, LabeledDataset, Manifest, ManifestSet};
use crate::error::{Error, Result};
use crate::grating::Direction;

/// Chance level for the sixteen-category task.
pub const RANDOM_GUESS_16: f64 = 1.0 / 16.0;

/// Default histogram bin width.
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Default accuracy threshold for [`outliers`].
pub const OUTLIER_THRESHOLD: f64 = 0.20;

/// How predictions of unmapped fine classes are treated.
pub const UNMAPPED_POLICY: &str = "incorrect";

/// One model's predictions, keyed by stimulus id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    model_name: String,
    rows: Vec<(String, usize)>,
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct PredictionRow {
    stimulus_id: String,
    fine_class: usize,
}

impl PredictionSet {
    /// Ids ending in `.png` are stored without the extension.
    pub fn new(model_name: impl Into<String>, rows: Vec<(String, usize)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(rows.len());
        let mut clean = Vec::with_capacity(rows.len());
        for (id, class) in rows {
            let id = normalize_id(&id).to_string();
            if index.insert(id.clone(), class).is_some() {
                return Err(Error::format(format!("duplicate stimulus id `{id}` in predictions")));
            }
            clean.push((id, class));
        }
        Ok(Self {
            model_name: model_name.into(),
            rows: clean,
            index,
        })
    }

    /// Reads CSV with header `stimulus_id,fine_class`.
    pub fn from_csv(model_name: impl Into<String>, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let rows = rdr
            .deserialize::<PredictionRow>()
            .map(|r| r.map(|r| (r.stimulus_id, r.fine_class)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(model_name, rows)
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn rows(&self) -> &[(String, usize)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Looks up `id`, falling back to its last path component so bare file
    /// stems also match qualified `<set>/<stem>` ids.
    fn lookup(&self, id: &str) -> Option<usize> {
        self.get(id).or_else(|| id.rsplit_once('/').and_then(|(_, stem)| self.get(stem)))
    }
}

fn normalize_id(id: &str) -> &str {
    id.strip_suffix(".png").unwrap_or(id)
}

/// Coarse category of a fine prediction; `None` when unmapped.
pub fn map_to_16(fine: usize, map: &ClassMap) -> Result<Option<usize>> {
    map.coarse(fine)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub dataset: String,
    pub direction: Direction,
    pub interval: usize,
}

impl Condition {
    pub fn new(dataset: impl Into<String>, direction: Direction, interval: usize) -> Self {
        Self {
            dataset: dataset.into(),
            direction,
            interval,
        }
    }

    pub fn of_set(manifest: &Manifest, set: &ManifestSet) -> Self {
        Self::new(manifest.dataset.clone(), set.spec.direction, set.spec.interval)
    }
}

/// Accuracy of one model under one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub model_name: String,
    pub condition: Condition,
    pub correct: u64,
    pub n: u64,
    pub accuracy: f64,
}

impl ConditionResult {
    pub fn new(model_name: impl Into<String>, condition: Condition, correct: u64, n: u64) -> Result<Self> {
        if n == 0 || correct > n {
            return Err(Error::param(format!("invalid count {correct}/{n}")));
        }
        Ok(Self {
            model_name: model_name.into(),
            condition,
            correct,
            n,
            accuracy: correct as f64 / n as f64,
        })
    }
}

/// Scores `predictions` against `(stimulus id, label)` pairs. With a class
/// map, predictions are fine classes projected onto the sixteen categories
/// and unmapped ones count as wrong; without one they are compared to the
/// label directly.
pub fn score_labels(
    predictions: &PredictionSet,
    truth: &[(String, usize)],
    map: Option<&ClassMap>,
    condition: Condition,
) -> Result<ConditionResult> {
    if truth.is_empty() {
        return Err(Error::param("truth set is empty"));
    }
    let mut missing = Vec::new();
    let mut correct = 0u64;
    for (id, label) in truth {
        let Some(pred) = predictions.lookup(id) else {
            missing.push(id.clone());
            continue;
        };
        let predicted = match map {
            Some(m) => map_to_16(pred, m)?,
            None => Some(pred),
        };
        if predicted == Some(*label) {
            correct += 1;
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    ConditionResult::new(predictions.model_name(), condition, correct, truth.len() as u64)
}

/// Scores against an in-memory dataset, whose ids are [`LabeledDataset::stimulus_id`].
pub fn score(
    predictions: &PredictionSet,
    truth: &LabeledDataset,
    map: Option<&ClassMap>,
    condition: Condition,
) -> Result<ConditionResult> {
    let pairs: Vec<(String, usize)> = (0..truth.len()).map(|i| (truth.stimulus_id(i), truth.items()[i].label)).collect();
    score_labels(predictions, &pairs, map, condition)
}

/// Truth pairs of a manifest set, with ids qualified as `<set path>/<stem>`.
pub fn manifest_truth(set: &ManifestSet) -> Vec<(String, usize)> {
    set.items
        .iter()
        .map(|i| (format!("{}/{}", set.path, normalize_id(&i.file)), i.label))
        .collect()
}

/// Scores every set of a benchmark manifest.
pub fn score_manifest(predictions: &PredictionSet, manifest: &Manifest, map: Option<&ClassMap>) -> Result<Vec<ConditionResult>> {
    manifest
        .sets
        .iter()
        .map(|set| score_labels(predictions, &manifest_truth(set), map, Condition::of_set(manifest, set)))
        .collect()
}

/// Serialized output of a scoring run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub unmapped_policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_map: Option<String>,
    pub results: Vec<ConditionResult>,
}

impl ScoreReport {
    pub fn new(results: Vec<ConditionResult>, class_map: Option<String>) -> Self {
        Self {
            unmapped_policy: UNMAPPED_POLICY.to_string(),
            class_map,
            results,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionHistogram {
    pub condition: Condition,
    /// Count per bin; bin `k` covers `[k * width, (k + 1) * width)`, the
    /// last bin also holding 1.0.
    pub counts: Vec<u64>,
    pub models: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub bin_width: f64,
    pub bins: usize,
    pub random_guess: f64,
    pub outlier_threshold: f64,
    pub outliers: Vec<String>,
    pub histograms: Vec<ConditionHistogram>,
}

/// Number of bins for `bin_width`, which must divide 1 evenly.
pub fn bin_count(bin_width: f64) -> Result<usize> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::param(format!("bin width {bin_width} outside (0, 1]")));
    }
    let bins = (1.0 / bin_width).round();
    if (bins * bin_width - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("bin width {bin_width} does not divide 1")));
    }
    Ok(bins as usize)
}

/// Bin of `correct / n` computed on integers: a value exactly on a bin edge
/// goes to the higher bin.
pub fn bin_of(correct: u64, n: u64, bins: usize) -> usize {
    ((correct as u128 * bins as u128 / n as u128) as usize).min(bins - 1)
}

/// Accuracy histogram per condition, conditions in sorted order.
pub fn summarize(results: &[ConditionResult], bin_width: f64) -> Result<Summary> {
    let bins = bin_count(bin_width)?;
    let mut per: BTreeMap<&Condition, Vec<u64>> = BTreeMap::new();
    for r in results {
        let counts = per.entry(&r.condition).or_insert_with(|| vec![0; bins]);
        counts[bin_of(r.correct, r.n, bins)] += 1;
    }
    Ok(Summary {
        bin_width,
        bins,
        random_guess: RANDOM_GUESS_16,
        outlier_threshold: OUTLIER_THRESHOLD,
        outliers: outliers(results, OUTLIER_THRESHOLD)?,
        histograms: per
            .into_iter()
            .map(|(c, counts)| ConditionHistogram {
                condition: c.clone(),
                models: counts.iter().sum(),
                counts,
            })
            .collect(),
    })
}

/// Models whose accuracy exceeds `threshold` under at least one condition,
/// sorted and deduplicated.
pub fn outliers(results: &[ConditionResult], threshold: f64) -> Result<Vec<String>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::param(format!("threshold {threshold} outside (0, 1)")));
    }
    Ok(results
        .iter()
        .filter(|r| r.correct as f64 > threshold * r.n as f64)
        .map(|r| r.model_name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::digit_class_names;
    use crate::image::GrayImage;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cond() -> Condition {
        Condition::new("mnist", Direction::Horizontal, 4)
    }

    fn digits(labels: &[usize]) -> LabeledDataset {
        let mut ds = LabeledDataset::empty(1, 1, digit_class_names(), "t");
        for &l in labels {
            ds.push(GrayImage::filled(1, 1, 0.0), l).unwrap();
        }
        ds
    }

    fn result(model: &str, correct: u64, n: u64) -> ConditionResult {
        ConditionResult::new(model, cond(), correct, n).unwrap()
    }

    #[test]
    fn perfect_and_all_wrong() {
        let ds = digits(&[3, 1, 4, 1, 5]);
        let right: Vec<_> = (0..5).map(|i| (ds.stimulus_id(i), ds.items()[i].label)).collect();
        let wrong: Vec<_> = right.iter().map(|(id, l)| (id.clone(), (l + 1) % 10)).collect();
        let r = score(&PredictionSet::new("m", right).unwrap(), &ds, None, cond()).unwrap();
        assert_eq!((r.correct, r.n, r.accuracy), (5, 5, 1.0));
        let r = score(&PredictionSet::new("m", wrong).unwrap(), &ds, None, cond()).unwrap();
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn missing_predictions_are_listed() {
        let ds = digits(&[0, 1, 2]);
        let preds = PredictionSet::new("m", vec![(ds.stimulus_id(1), 1)]).unwrap();
        match score(&preds, &ds, None, cond()) {
            Err(Error::MissingPredictions(ids)) => assert_eq!(ids, vec!["00000_0", "00002_2"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(PredictionSet::new("m", vec![("a".into(), 1), ("a.png".into(), 2)]).is_err());
    }

    #[test]
    fn csv_parsing() {
        let p = PredictionSet::from_csv("m", "stimulus_id,fine_class\n00000_3.png, 7\n00001_2,2\n".as_bytes()).unwrap();
        assert_eq!(p.rows(), &[("00000_3".to_string(), 7), ("00001_2".to_string(), 2)]);
        assert!(PredictionSet::from_csv("m", "stimulus_id,fine_class\nx,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn class_map_projection() {
        let mut map = ClassMap::default();
        map.insert(207, 10).unwrap();
        assert_eq!(map_to_16(207, &map).unwrap(), Some(10));
        assert_eq!(map_to_16(3, &map).unwrap(), None);
        assert!(map_to_16(1000, &map).is_err());

        let truth = vec![("a".to_string(), 10), ("b".to_string(), 0)];
        // Fine class 0 is unmapped, so it is wrong even though 0 == label.
        let preds = PredictionSet::new("m", vec![("a".into(), 207), ("b".into(), 0)]).unwrap();
        let r = score_labels(&preds, &truth, Some(&map), cond()).unwrap();
        assert_eq!((r.correct, r.n), (1, 2));
        let bad = PredictionSet::new("m", vec![("a".into(), 1000), ("b".into(), 0)]).unwrap();
        assert!(score_labels(&bad, &truth, Some(&map), cond()).is_err());
    }

    #[test]
    fn qualified_ids_fall_back_to_stems() {
        let truth = vec![("mnist/h_4/00000_1".to_string(), 1)];
        let bare = PredictionSet::new("m", vec![("00000_1".into(), 1)]).unwrap();
        let full = PredictionSet::new("m", vec![("mnist/h_4/00000_1.png".into(), 1)]).unwrap();
        assert_eq!(score_labels(&bare, &truth, None, cond()).unwrap().correct, 1);
        assert_eq!(score_labels(&full, &truth, None, cond()).unwrap().correct, 1);
    }

    #[test]
    fn uniform_random_digits_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let labels: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..10)).collect();
        let ds = digits(&labels);
        let rows = (0..ds.len()).map(|i| (ds.stimulus_id(i), rng.random_range(0..10))).collect();
        let r = score(&PredictionSet::new("rand", rows).unwrap(), &ds, None, cond()).unwrap();
        // sd = sqrt(0.09 / 10000) = 0.003; 0.01 is over 3.3 sd.
        assert!((r.accuracy - 0.10).abs() <= 0.01, "{}", r.accuracy);
    }

    #[test]
    fn permutation_invariant() {
        let truth: Vec<_> = (0..50).map(|i| (format!("s{i}"), i % 7)).collect();
        let mut rows: Vec<_> = (0..50).map(|i| (format!("s{i}"), (i * 3) % 7)).collect();
        let a = score_labels(&PredictionSet::new("m", rows.clone()).unwrap(), &truth, None, cond()).unwrap();
        rows.reverse();
        let b = score_labels(&PredictionSet::new("m", rows).unwrap(), &truth, None, cond()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_edges_and_counts() {
        assert!(summarize(&[], 0.05).unwrap().histograms.is_empty());
        assert!(summarize(&[], 0.3).is_err());
        assert!(summarize(&[], 0.0).is_err());

        let same = vec![result("a", 3, 10), result("b", 3, 10)];
        let h = &summarize(&same, 0.05).unwrap().histograms[0];
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);

        // 1/20 sits exactly on the edge between bins 0 and 1.
        let edge = vec![result("a", 1, 20), result("b", 20, 20), result("c", 0, 20)];
        let s = summarize(&edge, 0.05).unwrap();
        let counts = &s.histograms[0].counts;
        assert_eq!((counts[0], counts[1], counts[19]), (1, 1, 1));
        assert_eq!(counts.iter().sum::<u64>(), 3);
        assert_eq!(s.random_guess, 0.0625);
    }

    #[test]
    fn outlier_listing() {
        let low: Vec<_> = ["a", "b"].iter().map(|m| result(m, 6, 100)).collect();
        assert!(outliers(&low, 0.2).unwrap().is_empty());
        let mut mixed = low.clone();
        mixed.push(result("c", 35, 100));
        mixed.push(ConditionResult::new("c", Condition::new("mnist", Direction::Vertical, 8), 40, 100).unwrap());
        mixed.push(result("d", 20, 100));
        assert_eq!(outliers(&mixed, 0.2).unwrap(), vec!["c"]);
        assert!(outliers(&mixed, 1.0).is_err());
    }
}
