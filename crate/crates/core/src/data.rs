//! Dataset ingestion: CSV loading, ordinal encoding, min-max normalization,
//! log-ratio subsampling of large datasets, and stratified
//! train/validation/test splits with a test set that is fixed across
//! repetitions.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::rng::stream_rng;
use crate::{Error, Result};

/// Column role declared by the caller; columns not declared categorical are
/// treated as numeric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Parsed CSV with column roles attached. Feature cells stay raw strings
/// until `encode_ordinal` runs; numeric cells are validated at load time.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<ColumnKind>,
    /// Raw feature cells, row major.
    pub rows: Vec<Vec<String>>,
    /// Raw target values, one per row.
    pub target: Vec<String>,
}

/// Encoded numeric dataset. Labels are codes `0..n_classes` in lexicographic
/// order of the raw label strings. After `normalize_minmax` every feature
/// value lies in [0,1] and `scalers` records the training min/max that
/// defined the affine map.
#[derive(Clone, Debug)]
pub struct Dataset {
    /// Feature matrix, row major, n x d.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    /// Per feature: sorted category list for categorical columns (code =
    /// index into the list), `None` for numeric columns.
    pub encoders: Vec<Option<Vec<String>>>,
    /// Class labels in code order.
    pub labels: Vec<String>,
    /// Per-feature (train_min, train_max) once normalized.
    pub scalers: Option<Vec<(f64, f64)>>,
}

impl Dataset {
    /// Builds a dataset from bare numeric rows and coded labels, with
    /// generated feature and class names. The entry point for synthetic
    /// data; CSV ingestion goes through [`load_csv`] and [`encode_ordinal`].
    pub fn from_parts(x: Vec<Vec<f64>>, y: Vec<usize>, n_classes: usize) -> Dataset {
        let d = x.first().map_or(0, Vec::len);
        Dataset {
            x,
            y,
            n_classes,
            feature_names: (0..d).map(|k| format!("f{k}")).collect(),
            encoders: vec![None; d],
            labels: (0..n_classes).map(|c| c.to_string()).collect(),
            scalers: None,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Recovers the original category string for an (unnormalized) code.
    /// Returns `None` for numeric columns or out-of-range codes.
    pub fn decode_feature(&self, feature: usize, code: f64) -> Option<&str> {
        let cats = self.encoders.get(feature)?.as_ref()?;
        if code < 0.0 || code.fract() != 0.0 {
            return None;
        }
        cats.get(code as usize).map(|s| s.as_str())
    }

    /// Per-class sample counts over the whole dataset.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}

/// Disjoint train/validation/test row indices, each sorted ascending.
/// The test set is a pure function of (dataset, `test_seed`); only the
/// train/validation boundary moves with `rep_seed`.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
    pub test_seed: u64,
    pub rep_seed: u64,
}

/// Loads a delimited file with a header row. `kinds` declares categorical
/// columns by name; anything else is numeric and must parse as a finite
/// float. Missing cells (empty strings) are rejected.
pub fn load_csv(
    path: &Path,
    kinds: &BTreeMap<String, ColumnKind>,
    target: &str,
) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?; // the csv reader rejects arity mismatches itself
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Dataset(format!("{}: no rows", path.display())));
    }

    let target_col = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::Dataset(format!("target column '{target}' not found")))?;

    let mut feature_names = Vec::new();
    let mut feature_kinds = Vec::new();
    for (j, name) in headers.iter().enumerate() {
        if j == target_col {
            continue;
        }
        feature_names.push(name.clone());
        feature_kinds.push(*kinds.get(name).unwrap_or(&ColumnKind::Numeric));
    }

    let mut rows = Vec::with_capacity(records.len());
    let mut target_vals = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        if rec.len() != headers.len() {
            return Err(Error::Dataset(format!(
                "row {}: expected {} cells, found {}",
                i + 1,
                headers.len(),
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(feature_names.len());
        let mut feat = 0usize;
        for (j, cell) in rec.iter().enumerate() {
            if j == target_col {
                if cell.is_empty() {
                    return Err(Error::Dataset(format!("row {}: missing target", i + 1)));
                }
                target_vals.push(cell.to_string());
                continue;
            }
            if cell.is_empty() {
                return Err(Error::Dataset(format!(
                    "row {}: missing value in column '{}'",
                    i + 1,
                    feature_names[feat]
                )));
            }
            if feature_kinds[feat] == ColumnKind::Numeric {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Dataset(format!(
                        "row {}: cannot parse '{}' in numeric column '{}'",
                        i + 1,
                        cell,
                        feature_names[feat]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Dataset(format!(
                        "row {}: non-finite value in column '{}'",
                        i + 1,
                        feature_names[feat]
                    )));
                }
            }
            row.push(cell.to_string());
            feat += 1;
        }
        rows.push(row);
    }

    Ok(RawTable {
        feature_names,
        feature_kinds,
        rows,
        target: target_vals,
    })
}

/// Encodes categorical columns and the target ordinally, assigning codes by
/// lexicographic order of the category strings so codes are stable across
/// runs and platforms. Numeric columns pass through unchanged. The result is
/// unnormalized (`scalers` is `None`).
pub fn encode_ordinal(t: &RawTable) -> Result<Dataset> {
    let d = t.feature_names.len();
    let mut encoders: Vec<Option<Vec<String>>> = vec![None; d];
    for (j, kind) in t.feature_kinds.iter().enumerate() {
        if *kind == ColumnKind::Categorical {
            let mut cats: Vec<String> = t.rows.iter().map(|r| r[j].clone()).collect();
            cats.sort();
            cats.dedup();
            encoders[j] = Some(cats);
        }
    }

    let mut labels: Vec<String> = t.target.clone();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::Dataset(format!(
            "need at least 2 classes, found {}",
            labels.len()
        )));
    }

    let mut x = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let mut enc = Vec::with_capacity(d);
        for (j, cell) in row.iter().enumerate() {
            let v = match &encoders[j] {
                Some(cats) => cats.binary_search(cell).expect("category seen during scan") as f64,
                None => cell.parse::<f64>().expect("validated at load"),
            };
            enc.push(v);
        }
        x.push(enc);
    }
    let y = t
        .target
        .iter()
        .map(|s| labels.binary_search(s).expect("label seen during scan"))
        .collect();

    Ok(Dataset {
        x,
        y,
        n_classes: labels.len(),
        feature_names: t.feature_names.clone(),
        encoders,
        labels,
        scalers: None,
    })
}

/// Maps every feature affinely so the training rows span [0,1]: training
/// min to 0, training max to 1, constant features to 0. Non-training rows
/// can land outside the unit interval and are clamped into it.
pub fn normalize_minmax(d: &Dataset, train_idx: &[usize]) -> Result<Dataset> {
    if train_idx.is_empty() {
        return Err(Error::Dataset("normalization needs training rows".into()));
    }
    let nf = d.n_features();
    let mut scalers = Vec::with_capacity(nf);
    for j in 0..nf {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in train_idx {
            let v = d.x[i][j];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        scalers.push((lo, hi));
    }
    let mut out = d.clone();
    for row in &mut out.x {
        for (j, v) in row.iter_mut().enumerate() {
            let (lo, hi) = scalers[j];
            *v = if hi == lo {
                0.0
            } else {
                ((*v - lo) / (hi - lo)).clamp(0.0, 1.0)
            };
        }
    }
    out.scalers = Some(scalers);
    Ok(out)
}

/// Rounds real quotas that sum to `total` into integers that sum exactly to
/// `total`: floor everything, then hand out the remainder by descending
/// fractional part (ties toward the lower index).
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 || weights.is_empty() {
        // degenerate: spread as evenly as possible
        let n = weights.len().max(1);
        let base = total / n;
        let extra = total % n;
        return (0..weights.len())
            .map(|i| base + usize::from(i < extra))
            .collect();
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

/// Caps a dataset at `cap` rows. Per-class targets are proportional to the
/// natural log of the original class counts (largest-remainder rounded), so
/// an original ratio of e^2 : e approaches 2 : 1. Every class keeps at least
/// one row; targets never exceed a class's available count, with any
/// shortfall redistributed proportionally among classes that still have
/// headroom. Rows are drawn uniformly without replacement per class.
pub fn subsample_log_ratio(d: &Dataset, cap: usize, seed: u64) -> Result<Dataset> {
    if cap < d.n_classes {
        return Err(Error::Dataset(format!(
            "cap {} below class count {}",
            cap, d.n_classes
        )));
    }
    let n = d.n_samples();
    if n <= cap {
        return Ok(d.clone());
    }

    let counts = d.class_counts();
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let mut targets = largest_remainder(&weights, cap);

    // floor rule: a class whose log weight vanished still gets one row
    for c in 0..targets.len() {
        while targets[c] == 0 {
            let donor = targets
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .unwrap();
            targets[donor] -= 1;
            targets[c] += 1;
        }
    }

    // clip to availability, redistributing the shortfall proportionally
    loop {
        let mut shortfall = 0usize;
        for (c, t) in targets.iter_mut().enumerate() {
            if *t > counts[c] {
                shortfall += *t - counts[c];
                *t = counts[c];
            }
        }
        if shortfall == 0 {
            break;
        }
        let headroom: Vec<usize> = (0..targets.len())
            .filter(|&c| targets[c] < counts[c])
            .collect();
        if headroom.is_empty() {
            break; // cap >= n was excluded above, so this cannot happen
        }
        let w: Vec<f64> = headroom.iter().map(|&c| weights[c].max(0.0)).collect();
        let extra = largest_remainder(&w, shortfall);
        for (slot, &c) in headroom.iter().enumerate() {
            targets[c] += extra[slot];
        }
    }

    let mut selected = Vec::with_capacity(cap);
    for c in 0..d.n_classes {
        let mut rows: Vec<usize> = (0..n).filter(|&i| d.y[i] == c).collect();
        let mut rng = stream_rng(seed, c as u64);
        rows.shuffle(&mut rng);
        selected.extend_from_slice(&rows[..targets[c]]);
    }
    selected.sort_unstable();

    let mut out = d.clone();
    out.x = selected.iter().map(|&i| d.x[i].clone()).collect();
    out.y = selected.iter().map(|&i| d.y[i]).collect();
    Ok(out)
}

/// Draws `frac` of `pool` stratified by class: each class with at least 3
/// pool members forms its own stratum, smaller classes are pooled into one
/// joint stratum, and the total take is allocated over strata by largest
/// remainder. Returns (taken, rest), both sorted.
fn stratified_take(
    pool: &[usize],
    y: &[usize],
    n_classes: usize,
    frac: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let total_take = largest_remainder(&[frac, 1.0 - frac], pool.len())[0];

    // strata keyed by class index; the pooled small-class stratum gets key n_classes
    let mut strata: Vec<(u64, Vec<usize>)> = Vec::new();
    let mut small: Vec<usize> = Vec::new();
    for c in 0..n_classes {
        let members: Vec<usize> = pool.iter().copied().filter(|&i| y[i] == c).collect();
        if members.len() >= 3 {
            strata.push((c as u64, members));
        } else {
            small.extend(members);
        }
    }
    if !small.is_empty() {
        strata.push((n_classes as u64, small));
    }

    let sizes: Vec<f64> = strata.iter().map(|(_, m)| m.len() as f64).collect();
    let takes = largest_remainder(&sizes, total_take);

    let mut taken = Vec::with_capacity(total_take);
    let mut rest = Vec::with_capacity(pool.len() - total_take);
    for ((key, members), k) in strata.into_iter().zip(takes) {
        let mut members = members;
        let mut rng = stream_rng(seed, key);
        members.shuffle(&mut rng);
        taken.extend_from_slice(&members[..k]);
        rest.extend_from_slice(&members[k..]);
    }
    taken.sort_unstable();
    rest.sort_unstable();
    (taken, rest)
}

/// Splits a dataset into train/validation/test. The test fifth comes off
/// first with `test_seed`, so it is identical for every repetition; the
/// remainder is then split 80/20 into train and validation with `rep_seed`.
/// For n = 10 this yields sizes (6, 2, 2).
pub fn split_64_20_20(d: &Dataset, test_seed: u64, rep_seed: u64) -> Result<SplitIndices> {
    let n = d.n_samples();
    if n < 5 {
        return Err(Error::Dataset(format!("cannot split {n} samples")));
    }
    let all: Vec<usize> = (0..n).collect();
    let (test, rest) = stratified_take(&all, &d.y, d.n_classes, 0.2, test_seed);
    let (valid, train) = stratified_take(&rest, &d.y, d.n_classes, 0.2, rep_seed);
    Ok(SplitIndices {
        train,
        valid,
        test,
        test_seed,
        rep_seed,
    })
}
