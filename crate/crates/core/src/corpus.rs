//! Post, profile, and annotation archives.
//!
//! Archives are UTF-8 line-delimited JSON, one record per line. Malformed
//! lines are counted and reported rather than silently dropped; loading
//! fails outright when more than a configurable fraction of lines is bad.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fraction of malformed lines tolerated before a load becomes fatal.
pub const DEFAULT_MAX_BAD_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub user_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub is_retweet: bool,
    pub urls: Vec<String>,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub user_id: String,
    pub display_name: String,
    pub followers: u64,
    pub followees: u64,
    pub statuses_count: u64,
    pub account_created_at: DateTime<Utc>,
    pub verified: bool,
    /// Externally supplied organization label (e.g. from a dedicated
    /// organization/person classifier); preserved verbatim when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub org_label: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub item_id: String,
    pub annotator_id: String,
    pub label: String,
}

/// One rejected input line and the reason it was rejected.
#[derive(Debug, Clone, Serialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

/// Per-file load accounting: every rejected line is reported.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub total_lines: usize,
    pub loaded: usize,
    pub rejected: Vec<RejectedLine>,
}

impl LoadReport {
    fn reject(&mut self, line: usize, reason: impl Into<String>) {
        self.rejected.push(RejectedLine {
            line,
            reason: reason.into(),
        });
    }
}

/// Immutable post archive indexed by post id and by author.
#[derive(Debug, Clone, Default)]
pub struct PostCollection {
    posts: Vec<Post>,
    by_id: HashMap<String, usize>,
    by_user: HashMap<String, Vec<usize>>,
}

impl PostCollection {
    pub fn from_posts(posts: impl IntoIterator<Item = Post>) -> Result<Self> {
        let mut c = PostCollection::default();
        for p in posts {
            c.insert(p)
                .map_err(|reason| Error::InvalidInput(reason))?;
        }
        Ok(c)
    }

    fn insert(&mut self, post: Post) -> std::result::Result<(), String> {
        if post.id.is_empty() {
            return Err("empty post id".into());
        }
        if self.by_id.contains_key(&post.id) {
            return Err(format!("duplicate post id {:?}", post.id));
        }
        let idx = self.posts.len();
        self.by_id.insert(post.id.clone(), idx);
        self.by_user
            .entry(post.user_id.clone())
            .or_default()
            .push(idx);
        self.posts.push(post);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Post> {
        self.posts.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Post> {
        self.by_id.get(id).map(|&i| &self.posts[i])
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &String> {
        self.by_user.keys()
    }

    /// Posts by one user, sorted by timestamp (ties by post id).
    pub fn posts_by_user(&self, user_id: &str) -> Vec<&Post> {
        let mut out: Vec<&Post> = self
            .by_user
            .get(user_id)
            .map(|ids| ids.iter().map(|&i| &self.posts[i]).collect())
            .unwrap_or_default();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)));
        out
    }

    /// Earliest and latest post timestamps over the whole collection.
    pub fn time_span(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        let min = self.posts.iter().map(|p| p.created_at).min()?;
        let max = self.posts.iter().map(|p| p.created_at).max()?;
        Some((min, max))
    }
}

/// Immutable profile archive keyed by user id.
#[derive(Debug, Clone, Default)]
pub struct ProfileCollection {
    profiles: BTreeMap<String, Profile>,
}

impl ProfileCollection {
    pub fn from_profiles(profiles: impl IntoIterator<Item = Profile>) -> Result<Self> {
        let mut c = ProfileCollection::default();
        for p in profiles {
            if c.profiles.contains_key(&p.user_id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate user id {:?}",
                    p.user_id
                )));
            }
            c.profiles.insert(p.user_id.clone(), p);
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<&Profile> {
        self.profiles.get(user_id)
    }

    /// Iterates in user-id order, so downstream output is deterministic.
    pub fn iter(&self) -> impl Iterator<Item = &Profile> {
        self.profiles.values()
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn check_bad_fraction(path: &Path, report: &LoadReport, max_bad_fraction: f64) -> Result<()> {
    if report.total_lines == 0 {
        return Ok(());
    }
    let bad = report.rejected.len();
    if bad as f64 / report.total_lines as f64 > max_bad_fraction {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            bad,
            total: report.total_lines,
            limit: max_bad_fraction,
            lines: report.rejected.iter().take(20).map(|r| r.line).collect(),
        });
    }
    Ok(())
}

/// Loads a line-delimited post archive.
///
/// Duplicate ids keep the first occurrence; the duplicate line is rejected
/// with a reason. Blank lines are skipped without counting as malformed.
pub fn load_posts(path: impl AsRef<Path>, max_bad_fraction: f64) -> Result<(PostCollection, LoadReport)> {
    let path = path.as_ref();
    let mut collection = PostCollection::default();
    let mut report = LoadReport::default();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        match serde_json::from_str::<Post>(line) {
            Ok(post) => match collection.insert(post) {
                Ok(()) => report.loaded += 1,
                Err(reason) => report.reject(lineno, reason),
            },
            Err(e) => report.reject(lineno, e.to_string()),
        }
    }
    check_bad_fraction(path, &report, max_bad_fraction)?;
    Ok((collection, report))
}

/// Loads a line-delimited profile archive; analogous to [`load_posts`].
pub fn load_profiles(
    path: impl AsRef<Path>,
    max_bad_fraction: f64,
) -> Result<(ProfileCollection, LoadReport)> {
    let path = path.as_ref();
    let mut collection = ProfileCollection::default();
    let mut report = LoadReport::default();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        match serde_json::from_str::<Profile>(line) {
            Ok(profile) => {
                if profile.user_id.is_empty() {
                    report.reject(lineno, "empty user id");
                } else if collection.profiles.contains_key(&profile.user_id) {
                    report.reject(lineno, format!("duplicate user id {:?}", profile.user_id));
                } else {
                    collection.profiles.insert(profile.user_id.clone(), profile);
                    report.loaded += 1;
                }
            }
            Err(e) => report.reject(lineno, e.to_string()),
        }
    }
    check_bad_fraction(path, &report, max_bad_fraction)?;
    Ok((collection, report))
}

/// Loads annotations, enforcing (item_id, annotator_id) uniqueness and the
/// task-declared label set.
pub fn load_annotations(
    path: impl AsRef<Path>,
    label_set: &[&str],
    max_bad_fraction: f64,
) -> Result<(Vec<Annotation>, LoadReport)> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let mut seen: HashMap<(String, String), ()> = HashMap::new();
    let mut report = LoadReport::default();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        match serde_json::from_str::<Annotation>(line) {
            Ok(a) => {
                if !label_set.iter().any(|l| *l == a.label) {
                    report.reject(lineno, format!("label {:?} not in declared set", a.label));
                } else if seen
                    .insert((a.item_id.clone(), a.annotator_id.clone()), ())
                    .is_some()
                {
                    report.reject(
                        lineno,
                        format!("duplicate (item, annotator) = ({}, {})", a.item_id, a.annotator_id),
                    );
                } else {
                    out.push(a);
                    report.loaded += 1;
                }
            }
            Err(e) => report.reject(lineno, e.to_string()),
        }
    }
    check_bad_fraction(path, &report, max_bad_fraction)?;
    Ok((out, report))
}

/// Majority-vote aggregation of crowd labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelAggregate {
    /// item_id -> (winning label, winner count / total labels)
    pub decided: BTreeMap<String, (String, f64)>,
    /// Items whose top two labels tied; excluded from training.
    pub unresolved: Vec<String>,
    /// Items with fewer than `min_labels` annotations.
    pub below_threshold: Vec<String>,
}

/// Aggregates annotations per item by strict plurality.
///
/// Items with fewer than `min_labels` annotations are excluded and reported;
/// ties are marked unresolved rather than broken randomly.
pub fn aggregate_labels(annotations: &[Annotation], min_labels: usize) -> LabelAggregate {
    let mut per_item: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for a in annotations {
        per_item.entry(&a.item_id).or_default().push(&a.label);
    }
    let mut out = LabelAggregate::default();
    for (item, labels) in per_item {
        if labels.len() < min_labels {
            out.below_threshold.push(item.to_string());
            continue;
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in &labels {
            *counts.entry(l).or_default() += 1;
        }
        let best = counts.values().copied().max().unwrap_or(0);
        let winners: Vec<&str> = counts
            .iter()
            .filter(|(_, &c)| c == best)
            .map(|(&l, _)| l)
            .collect();
        if winners.len() == 1 {
            out.decided.insert(
                item.to_string(),
                (winners[0].to_string(), best as f64 / labels.len() as f64),
            );
        } else {
            out.unresolved.push(item.to_string());
        }
    }
    out
}

/// Mean over items of (modal label count / total labels on that item).
///
/// Only items carrying at least two labels are eligible. This is the
/// agreement statistic reported by the pipeline; the definition is stated
/// here because agreement conventions vary.
pub fn percent_agreement(annotations: &[Annotation]) -> Result<f64> {
    let mut per_item: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for a in annotations {
        per_item.entry(&a.item_id).or_default().push(&a.label);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for labels in per_item.values() {
        if labels.len() < 2 {
            continue;
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for l in labels {
            *counts.entry(l).or_default() += 1;
        }
        let modal = counts.values().copied().max().unwrap_or(0);
        sum += modal as f64 / labels.len() as f64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Undefined(
            "percent_agreement needs at least one item with two or more labels".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Profiles whose account creation postdates their newest post.
pub fn profile_timestamp_violations(
    profiles: &ProfileCollection,
    posts: &PostCollection,
) -> Vec<String> {
    let mut out = Vec::new();
    for profile in profiles.iter() {
        let newest = posts
            .posts_by_user(&profile.user_id)
            .last()
            .map(|p| p.created_at);
        if let Some(newest) = newest {
            if profile.account_created_at > newest {
                out.push(profile.user_id.clone());
            }
        }
    }
    out
}
