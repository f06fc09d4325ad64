//! Dataset ingestion: interaction logs, provider maps and score matrices.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ScoreMatrix;

pub const INTERACTION_HEADER: [&str; 4] = ["user_id", "item_id", "rating", "timestamp"];
pub const PROVIDER_HEADER: [&str; 2] = ["item_id", "provider_id"];
pub const TRIPLET_HEADER: [&str; 3] = ["user_id", "item_id", "score"];

/// Ratings at or above this count as clicks.
pub const CLICK_RATING: f64 = 4.0;
pub const MIN_PROVIDER_ITEMS: usize = 5;
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
    pub timestamp: i64,
}

impl Interaction {
    pub fn click(&self) -> bool {
        self.rating >= CLICK_RATING
    }
}

/// Interaction log sorted by timestamp; ties keep file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InteractionTable {
    pub rows: Vec<Interaction>,
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(File::open(path)?))
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads the header row and checks it against `expected`.
fn expect_header(path: &Path, records: &mut csv::StringRecordsIter<'_, File>, expected: &[&str]) -> Result<()> {
    match records.next() {
        None => Err(parse_err(path, "empty file")),
        Some(rec) => {
            let rec = rec?;
            if rec.iter().eq(expected.iter().copied()) {
                Ok(())
            } else {
                Err(parse_err(
                    path,
                    format!("line 1: expected header `{}`, found `{}`", expected.join(","), rec.iter().collect::<Vec<_>>().join(",")),
                ))
            }
        }
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Loads `user_id,item_id,rating,timestamp`. Every malformed row is listed.
pub fn load_interactions(path: &Path) -> Result<InteractionTable> {
    let mut rdr = reader(path)?;
    let mut records = rdr.records();
    expect_header(path, &mut records, &INTERACTION_HEADER)?;

    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 4 {
            bad.push(format!("line {line}: expected 4 fields, found {}", rec.len()));
            continue;
        }
        let rating = rec[2].parse::<f64>().ok().filter(|r| r.is_finite());
        let timestamp = rec[3].parse::<i64>().ok();
        match (rating, timestamp) {
            _ if rec[0].is_empty() || rec[1].is_empty() => bad.push(format!("line {line}: empty id")),
            (None, _) => bad.push(format!("line {line}: rating `{}` is not a number", &rec[2])),
            (_, None) => bad.push(format!("line {line}: timestamp `{}` is not an integer", &rec[3])),
            (Some(rating), Some(timestamp)) => rows.push(Interaction {
                user_id: rec[0].to_string(),
                item_id: rec[1].to_string(),
                rating,
                timestamp,
            }),
        }
    }
    if !bad.is_empty() {
        return Err(parse_err(path, bad.join("\n")));
    }
    if rows.is_empty() {
        return Err(parse_err(path, "no interactions after the header"));
    }
    rows.sort_by_key(|r| r.timestamp);
    Ok(InteractionTable { rows })
}

/// Item to provider assignment. Providers get dense indices in order of
/// first appearance; items keep file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProviderMap {
    pub item_ids: Vec<String>,
    pub provider_ids: Vec<String>,
    /// Dense provider index per item, aligned with `item_ids`.
    pub provider_of: Vec<usize>,
    index: HashMap<String, usize>,
}

impl ProviderMap {
    pub fn from_pairs<I, S>(pairs: I) -> std::result::Result<Self, String>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut map = ProviderMap::default();
        let mut providers: HashMap<String, usize> = HashMap::new();
        for (item, provider) in pairs {
            let (item, provider) = (item.into(), provider.into());
            if map.index.contains_key(&item) {
                return Err(format!("item `{item}` listed twice"));
            }
            let next = providers.len();
            let p = *providers.entry(provider.clone()).or_insert_with(|| {
                map.provider_ids.push(provider);
                next
            });
            map.index.insert(item.clone(), map.item_ids.len());
            map.item_ids.push(item);
            map.provider_of.push(p);
        }
        Ok(map)
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    /// Provider id of an item, if mapped.
    pub fn provider(&self, item_id: &str) -> Option<&str> {
        self.index
            .get(item_id)
            .map(|&i| self.provider_ids[self.provider_of[i]].as_str())
    }
}

pub fn load_provider_map(path: &Path) -> Result<ProviderMap> {
    let mut rdr = reader(path)?;
    let mut records = rdr.records();
    expect_header(path, &mut records, &PROVIDER_HEADER)?;
    let mut pairs = Vec::new();
    let mut bad = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
            bad.push(format!("line {line}: expected `item_id,provider_id`"));
        } else {
            pairs.push((rec[0].to_string(), rec[1].to_string()));
        }
    }
    if !bad.is_empty() {
        return Err(parse_err(path, bad.join("\n")));
    }
    if pairs.is_empty() {
        return Err(parse_err(path, "no items after the header"));
    }
    ProviderMap::from_pairs(pairs).map_err(|m| parse_err(path, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedInteraction {
    pub user: usize,
    pub item: usize,
    pub click: bool,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub raw_interactions: usize,
    pub raw_users: usize,
    pub raw_items: usize,
    pub unmapped_items: usize,
    pub removed_users: usize,
    pub removed_items: usize,
    pub removed_providers: usize,
    pub rounds: usize,
}

/// Filtered dataset with dense indices and a temporal split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub providers: Vec<String>,
    /// Dense provider index per item.
    pub provider_of: Vec<usize>,
    pub train: Vec<IndexedInteraction>,
    pub test: Vec<IndexedInteraction>,
    pub stats: PreprocessStats,
}

fn count_distinct<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>) -> HashMap<&'a str, usize> {
    let mut seen = HashSet::new();
    let mut counts = HashMap::new();
    for (key, other) in pairs {
        if seen.insert((key, other)) {
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Degree filtering to a fixed point, provider pruning and an 80/20 split by time.
///
/// Users and items need `min_degree` distinct partners; providers need
/// [`MIN_PROVIDER_ITEMS`] surviving items. Unmapped items are dropped.
pub fn preprocess(table: &InteractionTable, providers: &ProviderMap, min_degree: usize) -> Result<Dataset> {
    let raw_users: HashSet<&str> = table.rows.iter().map(|r| r.user_id.as_str()).collect();
    let raw_items: HashSet<&str> = table.rows.iter().map(|r| r.item_id.as_str()).collect();
    let mut stats = PreprocessStats {
        raw_interactions: table.rows.len(),
        raw_users: raw_users.len(),
        raw_items: raw_items.len(),
        unmapped_items: raw_items.iter().filter(|i| providers.provider(i).is_none()).count(),
        ..Default::default()
    };

    let mut rows: Vec<&Interaction> = table
        .rows
        .iter()
        .filter(|r| providers.provider(&r.item_id).is_some())
        .collect();
    let mut dropped_providers = HashSet::new();
    loop {
        stats.rounds += 1;
        let before = rows.len();

        let provider_items = count_distinct(rows.iter().map(|r| (providers.provider(&r.item_id).unwrap(), r.item_id.as_str())));
        let small: HashSet<&str> = provider_items
            .iter()
            .filter(|(_, &n)| n < MIN_PROVIDER_ITEMS)
            .map(|(&p, _)| p)
            .collect();
        dropped_providers.extend(small.iter().copied());
        rows.retain(|r| !small.contains(providers.provider(&r.item_id).unwrap()));

        let user_deg = count_distinct(rows.iter().map(|r| (r.user_id.as_str(), r.item_id.as_str())));
        let item_deg = count_distinct(rows.iter().map(|r| (r.item_id.as_str(), r.user_id.as_str())));
        rows.retain(|r| user_deg[r.user_id.as_str()] >= min_degree && item_deg[r.item_id.as_str()] >= min_degree);

        if rows.len() == before {
            break;
        }
    }
    stats.removed_providers = dropped_providers.len();

    let mut user_index: HashMap<&str, usize> = HashMap::new();
    let mut item_index: HashMap<&str, usize> = HashMap::new();
    let mut provider_index: HashMap<&str, usize> = HashMap::new();
    let mut ds = Dataset {
        users: Vec::new(),
        items: Vec::new(),
        providers: Vec::new(),
        provider_of: Vec::new(),
        train: Vec::new(),
        test: Vec::new(),
        stats,
    };
    let mut indexed = Vec::with_capacity(rows.len());
    for r in &rows {
        let n = user_index.len();
        let user = *user_index.entry(&r.user_id).or_insert_with(|| {
            ds.users.push(r.user_id.clone());
            n
        });
        let n = item_index.len();
        let item = *item_index.entry(&r.item_id).or_insert_with(|| {
            let pid = providers.provider(&r.item_id).unwrap();
            let np = provider_index.len();
            let p = *provider_index.entry(pid).or_insert_with(|| {
                ds.providers.push(pid.to_string());
                np
            });
            ds.items.push(r.item_id.clone());
            ds.provider_of.push(p);
            n
        });
        indexed.push(IndexedInteraction {
            user,
            item,
            click: r.click(),
            timestamp: r.timestamp,
        });
    }
    ds.stats.removed_users = stats.raw_users - ds.users.len();
    ds.stats.removed_items = stats.raw_items - ds.items.len();

    if indexed.is_empty() {
        let s = ds.stats;
        return Err(Error::EmptyData(format!(
            "no interactions survive filtering: {} interactions, {} users, {} items in; \
             {} items without a provider, {} providers with fewer than {MIN_PROVIDER_ITEMS} items, \
             min degree {min_degree}",
            s.raw_interactions, s.raw_users, s.raw_items, s.unmapped_items, s.removed_providers
        )));
    }
    let n_train = (indexed.len() as f64 * TRAIN_FRACTION).floor() as usize;
    ds.test = indexed.split_off(n_train);
    ds.train = indexed;
    Ok(ds)
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the catalog files of a preprocessed dataset into `dir`.
///
/// `provider_map.csv` lists items in dense index order, so it can be fed back
/// to [`load_provider_map`] alongside a score matrix.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let path = |name: &str| dir.join(name);
    write_csv(&path("users.csv"), &["user_index", "user_id"], ds.users.iter().enumerate())?;
    write_csv(
        &path("items.csv"),
        &["item_index", "item_id", "provider_index"],
        ds.items.iter().zip(&ds.provider_of).enumerate().map(|(i, (id, p))| (i, id, p)),
    )?;
    write_csv(
        &path("provider_map.csv"),
        &PROVIDER_HEADER,
        ds.items.iter().zip(&ds.provider_of).map(|(id, &p)| (id, &ds.providers[p])),
    )?;
    let header = ["user", "item", "click", "timestamp"];
    let row = |r: &IndexedInteraction| (r.user, r.item, u8::from(r.click), r.timestamp);
    write_csv(&path("train.csv"), &header, ds.train.iter().map(row))?;
    write_csv(&path("test.csv"), &header, ds.test.iter().map(row))?;
    std::fs::write(path("stats.json"), serde_json::to_string_pretty(&ds.stats)? + "\n")?;
    Ok(["users.csv", "items.csv", "provider_map.csv", "train.csv", "test.csv", "stats.json"]
        .iter()
        .map(|n| path(n))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScores {
    pub matrix: ScoreMatrix,
    /// Values outside [0, 1] that were clamped.
    pub clamped: usize,
    /// Sparse entries that were missing and filled with 0.
    pub filled: usize,
}

/// Loads a score matrix for `n_items` items.
///
/// Two layouts are accepted: a headerless dense CSV with one row per user, or
/// sparse `user_id,item_id,score` triplets over dense indices. For triplets
/// the user count is `n_users` or, if `None`, one past the largest user id.
pub fn load_score_matrix(path: &Path, n_items: usize, n_users: Option<usize>) -> Result<LoadedScores> {
    let mut rdr = reader(path)?;
    let mut records = rdr.records().peekable();
    let first = match records.peek() {
        None => return Err(parse_err(path, "empty file")),
        Some(Err(_)) => return Err(records.next().unwrap().unwrap_err().into()),
        Some(Ok(r)) => r.clone(),
    };
    let mut clamped = 0;
    let mut value = |s: &str, line: u64| -> Result<f64> {
        let v: f64 = s
            .parse()
            .ok()
            .filter(|v: &f64| !v.is_nan())
            .ok_or_else(|| parse_err(path, format!("line {line}: score `{s}` is not a number")))?;
        if !(0.0..=1.0).contains(&v) {
            clamped += 1;
        }
        Ok(v.clamp(0.0, 1.0))
    };

    if first.iter().eq(TRIPLET_HEADER.iter().copied()) {
        records.next();
        let mut entries = Vec::new();
        for rec in records {
            let rec = rec?;
            let line = line_of(&rec);
            if rec.len() != 3 {
                return Err(parse_err(path, format!("line {line}: expected 3 fields, found {}", rec.len())));
            }
            let idx = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| parse_err(path, format!("line {line}: `{s}` is not an index")))
            };
            let (u, i) = (idx(&rec[0])?, idx(&rec[1])?);
            if i >= n_items {
                return Err(Error::Shape(format!("line {line}: item {i} outside catalog of {n_items} items")));
            }
            entries.push((u, i, value(&rec[2], line)?));
        }
        let max_user = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let users = match n_users {
            Some(n) if max_user > n => {
                return Err(Error::Shape(format!("user {} outside {n} users", max_user - 1)));
            }
            Some(n) => n,
            None => max_user,
        };
        if users == 0 {
            return Err(parse_err(path, "no score entries"));
        }
        let mut data = vec![0.0; users * n_items];
        let mut set = vec![false; users * n_items];
        for (u, i, v) in entries {
            let k = u * n_items + i;
            if set[k] {
                return Err(parse_err(path, format!("duplicate entry for user {u}, item {i}")));
            }
            set[k] = true;
            data[k] = v;
        }
        let filled = set.iter().filter(|s| !**s).count();
        let matrix = ScoreMatrix::new(users, n_items, data)?;
        return Ok(LoadedScores { matrix, clamped, filled });
    }

    let mut data = Vec::new();
    let mut rows = 0;
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != n_items {
            return Err(Error::Shape(format!("line {line}: {} columns for {n_items} items", rec.len())));
        }
        for s in rec.iter() {
            data.push(value(s, line)?);
        }
        rows += 1;
    }
    if let Some(n) = n_users.filter(|&n| n != rows) {
        return Err(Error::Shape(format!("{rows} score rows for {n} users")));
    }
    let matrix = ScoreMatrix::new(rows, n_items, data)?;
    Ok(LoadedScores {
        matrix,
        clamped,
        filled: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = file("");
        assert!(matches!(load_interactions(f.path()), Err(Error::Parse { .. })));
        let f = file("user_id,item_id,rating,timestamp\n");
        assert!(load_interactions(f.path()).is_err());
    }

    #[test]
    fn ratings_map_to_clicks() {
        let f = file("user_id,item_id,rating,timestamp\na,x,5,3\na,y,4,2\nb,x,3,1\nb,y,1,0\n");
        let t = load_interactions(f.path()).unwrap();
        let clicks: Vec<bool> = t.rows.iter().map(Interaction::click).collect();
        assert_eq!(clicks, vec![false, false, true, true]);
    }

    #[test]
    fn timestamp_ties_keep_file_order() {
        let f = file("user_id,item_id,rating,timestamp\nu1,a,5,7\nu2,b,5,7\nu3,c,5,1\nu4,d,5,7\n");
        let t = load_interactions(f.path()).unwrap();
        let users: Vec<&str> = t.rows.iter().map(|r| r.user_id.as_str()).collect();
        assert_eq!(users, vec!["u3", "u1", "u2", "u4"]);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let f = file("user_id,item_id,rating,timestamp\na,x,5,1\nb,y,five,2\nc,z,3\n");
        let msg = load_interactions(f.path()).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn wrong_header_rejected() {
        let f = file("user,item,rating,timestamp\na,x,5,1\n");
        assert!(load_interactions(f.path()).unwrap_err().to_string().contains("header"));
    }

    #[test]
    fn provider_ids_are_dense_in_first_seen_order() {
        let f = file("item_id,provider_id\nx,beta\ny,alpha\nz,beta\n");
        let m = load_provider_map(f.path()).unwrap();
        assert_eq!(m.provider_ids, vec!["beta", "alpha"]);
        assert_eq!(m.provider_of, vec![0, 1, 0]);
        assert_eq!(m.provider("y"), Some("alpha"));
        assert_eq!(m.provider("w"), None);
    }

    fn table(rows: &[(&str, &str, f64, i64)]) -> InteractionTable {
        let mut rows: Vec<Interaction> = rows
            .iter()
            .map(|&(u, i, r, t)| Interaction {
                user_id: u.into(),
                item_id: i.into(),
                rating: r,
                timestamp: t,
            })
            .collect();
        rows.sort_by_key(|r| r.timestamp);
        InteractionTable { rows }
    }

    /// Six users rating every item of the given providers.
    fn complete(items: &[(&str, &str)]) -> (InteractionTable, ProviderMap) {
        let users = ["u0", "u1", "u2", "u3", "u4", "u5"];
        let mut rows = Vec::new();
        let mut ts = 0;
        for u in users {
            for (item, _) in items {
                rows.push((u, *item, 5.0, ts));
                ts += 1;
            }
        }
        (
            table(&rows),
            ProviderMap::from_pairs(items.iter().map(|&(i, p)| (i, p))).unwrap(),
        )
    }

    #[test]
    fn low_degree_user_removed() {
        let items: Vec<(String, &str)> = (0..5).map(|i| (format!("i{i}"), "p")).collect();
        let items: Vec<(&str, &str)> = items.iter().map(|(i, p)| (i.as_str(), *p)).collect();
        let (mut t, map) = complete(&items);
        for (k, (i, _)) in items.iter().take(4).enumerate() {
            t.rows.push(Interaction {
                user_id: "sparse".into(),
                item_id: (*i).into(),
                rating: 5.0,
                timestamp: 1000 + k as i64,
            });
        }
        let ds = preprocess(&t, &map, 5).unwrap();
        assert_eq!(ds.users.len(), 6);
        assert!(!ds.users.iter().any(|u| u == "sparse"));
        assert_eq!(ds.stats.removed_users, 1);
    }

    #[test]
    fn small_provider_removed_with_items() {
        let names: Vec<String> = (0..8).map(|i| format!("i{i}")).collect();
        let items: Vec<(&str, &str)> = names
            .iter()
            .enumerate()
            .map(|(k, n)| (n.as_str(), if k < 5 { "big" } else { "small" }))
            .collect();
        let (t, map) = complete(&items);
        let ds = preprocess(&t, &map, 5).unwrap();
        assert_eq!(ds.providers, vec!["big"]);
        assert_eq!(ds.items.len(), 5);
        assert_eq!(ds.stats.removed_providers, 1);
        assert_eq!(ds.train.len() + ds.test.len(), 30);
        assert_eq!(ds.train.len(), 24);
        assert!(ds.train.last().unwrap().timestamp <= ds.test[0].timestamp);
    }

    #[test]
    fn filtering_reaches_a_fixed_point() {
        let names: Vec<String> = (0..6).map(|i| format!("i{i}")).collect();
        let items: Vec<(&str, &str)> = names.iter().map(|n| (n.as_str(), "p")).collect();
        let (t, map) = complete(&items);
        let ds = preprocess(&t, &map, 5).unwrap();
        let mut again = Vec::new();
        for r in ds.train.iter().chain(&ds.test) {
            again.push(Interaction {
                user_id: ds.users[r.user].clone(),
                item_id: ds.items[r.item].clone(),
                rating: 5.0,
                timestamp: r.timestamp,
            });
        }
        let ds2 = preprocess(&InteractionTable { rows: again }, &map, 5).unwrap();
        assert_eq!(ds2.users, ds.users);
        assert_eq!(ds2.items, ds.items);
        assert_eq!(ds2.stats.rounds, 1);
    }

    #[test]
    fn empty_result_reports_counts() {
        let t = table(&[("u", "x", 5.0, 0)]);
        let map = ProviderMap::from_pairs([("x", "p")]).unwrap();
        let msg = preprocess(&t, &map, 5).unwrap_err().to_string();
        assert!(msg.contains("1 interactions"), "{msg}");
    }

    #[test]
    fn dense_scores_with_clamp_count() {
        let f = file("0.5,0.5\n0.5,1.2\n-0.1,0.3\n");
        let s = load_score_matrix(f.path(), 2, None).unwrap();
        assert_eq!(s.matrix.n_users(), 3);
        assert_eq!(s.matrix.get(1, 1), 1.0);
        assert_eq!(s.matrix.get(2, 0), 0.0);
        assert_eq!(s.clamped, 2);
    }

    #[test]
    fn uniform_file_gives_uniform_matrix() {
        let f = file("0.5,0.5,0.5\n0.5,0.5,0.5\n");
        let s = load_score_matrix(f.path(), 3, Some(2)).unwrap();
        assert!(s.matrix.values().iter().all(|&v| v == 0.5));
        assert_eq!((s.clamped, s.filled), (0, 0));
    }

    #[test]
    fn sparse_scores_fill_missing() {
        let f = file("user_id,item_id,score\n0,0,0.7\n1,2,0.4\n");
        let s = load_score_matrix(f.path(), 3, None).unwrap();
        assert_eq!(s.matrix.n_users(), 2);
        assert_eq!(s.filled, 4);
        assert_eq!(s.matrix.get(1, 2), 0.4);
        assert_eq!(s.matrix.get(0, 1), 0.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let f = file("0.1,0.2\n0.3,0.4\n");
        assert!(matches!(load_score_matrix(f.path(), 3, None), Err(Error::Shape(_))));
        assert!(matches!(load_score_matrix(f.path(), 2, Some(5)), Err(Error::Shape(_))));
        let f = file("user_id,item_id,score\n0,7,0.5\n");
        assert!(matches!(load_score_matrix(f.path(), 3, None), Err(Error::Shape(_))));
    }
}
