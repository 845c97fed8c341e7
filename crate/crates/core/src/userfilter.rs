//! Three-stage user selection: organization removal, name-dictionary
//! matching, and the tweeting-rate threshold, with a per-stage audit trail.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::corpus::{Post, PostCollection, Profile, ProfileCollection};
use crate::features::{interval_entropy, pronoun_person, tokenize, TokenKind};
use crate::lexicon::WordList;
use crate::{Error, Result};

/// Honorifics accepted by the name matcher. "Dr." is deliberately excluded:
/// it is often an organizational or clinic account.
pub const HONORIFICS: &[&str] = &["mr.", "mrs.", "ms.", "mr", "mrs"];

#[derive(Debug, Clone)]
pub struct NameDictionary {
    names: HashSet<String>,
    honorifics: Vec<String>,
}

impl NameDictionary {
    pub fn new(names: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let names: HashSet<String> = names.into_iter().map(|n| n.into().to_lowercase()).collect();
        if names.is_empty() {
            return Err(Error::InvalidInput("empty name dictionary".into()));
        }
        Ok(NameDictionary {
            names,
            honorifics: HONORIFICS.iter().map(|h| h.to_string()).collect(),
        })
    }

    /// One name per line, UTF-8.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::new(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Weights and thresholds of the transparent organization heuristic used
/// when no external organization label is supplied.
#[derive(Debug, Clone)]
pub struct OrgHeuristicConfig {
    pub keywords: Vec<String>,
    pub w_keyword: f64,
    pub w_no_first_person: f64,
    pub w_regular_timing: f64,
    pub w_follower_ratio: f64,
    /// Interval entropy below this counts as bot-like regularity.
    pub entropy_cutoff: f64,
    /// Minimum posts before the timing signal is considered at all.
    pub min_posts_for_timing: usize,
    /// followers / (followees + 1) above this counts as broadcast-like.
    pub follower_ratio_cutoff: f64,
    pub threshold: f64,
}

impl Default for OrgHeuristicConfig {
    fn default() -> Self {
        OrgHeuristicConfig {
            keywords: [
                "inc", "official", "news", "clinic", "center", "centre", "health", "daily",
                "media", "agency", "corp", "magazine", "network",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            w_keyword: 0.4,
            w_no_first_person: 0.2,
            w_regular_timing: 0.2,
            w_follower_ratio: 0.2,
            entropy_cutoff: 0.5,
            min_posts_for_timing: 5,
            follower_ratio_cutoff: 50.0,
            threshold: 0.5,
        }
    }
}

/// Organization score in [0, 1] and the resulting flag.
///
/// An externally supplied `org_label` short-circuits with score 1.0;
/// otherwise the score is the weighted sum of four documented signals:
/// an organization keyword in the display name, zero first-person pronouns
/// across the user's posts, bot-like posting regularity, and a high
/// follower/followee ratio.
pub fn organization_flag(
    profile: &Profile,
    posts: &[&Post],
    cfg: &OrgHeuristicConfig,
) -> (bool, f64) {
    if let Some(label) = profile.org_label {
        return (label, 1.0);
    }
    let mut score = 0.0;

    let name = profile.display_name.to_lowercase();
    let name_tokens: HashSet<&str> = name
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    if cfg.keywords.iter().any(|k| name_tokens.contains(k.as_str())) {
        score += cfg.w_keyword;
    }

    let empty = WordList::default();
    let any_first_person = posts.iter().any(|p| {
        tokenize(&p.text, &empty)
            .iter()
            .any(|t| t.kind == TokenKind::Word && pronoun_person(&t.folded) == Some(1))
    });
    if !any_first_person {
        score += cfg.w_no_first_person;
    }

    if posts.len() >= cfg.min_posts_for_timing {
        let mut times: Vec<DateTime<Utc>> = posts.iter().map(|p| p.created_at).collect();
        times.sort();
        if let Ok(h) = interval_entropy(&times) {
            if h < cfg.entropy_cutoff {
                score += cfg.w_regular_timing;
            }
        }
    }

    let ratio = profile.followers as f64 / (profile.followees as f64 + 1.0);
    if ratio > cfg.follower_ratio_cutoff {
        score += cfg.w_follower_ratio;
    }

    (score >= cfg.threshold, score)
}

/// True when the first token of the case-folded display name is in the
/// dictionary, or the name begins with a recognized honorific.
pub fn name_match(profile: &Profile, dict: &NameDictionary) -> bool {
    let folded = profile.display_name.to_lowercase();
    let mut tokens = folded.split_whitespace();
    let Some(first) = tokens.next() else {
        return false;
    };
    if dict.names.contains(first) {
        return true;
    }
    dict.honorifics.iter().any(|h| h == first)
}

/// Lifetime posts per day: statuses_count / max(1, whole days of account age).
pub fn tweeting_rate(profile: &Profile, as_of: DateTime<Utc>) -> Result<f64> {
    if as_of <= profile.account_created_at {
        return Err(Error::InvalidInput(format!(
            "as_of must be after account creation for user {}",
            profile.user_id
        )));
    }
    let days = (as_of - profile.account_created_at).num_days().max(1);
    Ok(profile.statuses_count as f64 / days as f64)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FilterAudit {
    pub stage: String,
    pub input_users: usize,
    pub removed: usize,
    pub retained: usize,
    pub reasons: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub org: OrgHeuristicConfig,
    /// Retained iff rate <= this (inclusive).
    pub rate_threshold: f64,
    pub as_of: DateTime<Utc>,
}

impl FilterConfig {
    pub fn new(as_of: DateTime<Utc>) -> Self {
        FilterConfig {
            org: OrgHeuristicConfig::default(),
            rate_threshold: 24.0,
            as_of,
        }
    }
}

/// Applies the three filter stages in order (organizations, name match,
/// tweeting rate) and returns the retained user ids with one audit per stage.
pub fn apply_filters(
    profiles: &ProfileCollection,
    posts: &PostCollection,
    dict: &NameDictionary,
    cfg: &FilterConfig,
) -> Result<(Vec<String>, Vec<FilterAudit>)> {
    let mut current: Vec<&Profile> = profiles.iter().collect();
    let mut audits = Vec::new();

    // stage 1: organization removal
    let input = current.len();
    let mut retained = Vec::new();
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for profile in current {
        let user_posts = posts.posts_by_user(&profile.user_id);
        let (is_org, _) = organization_flag(profile, &user_posts, &cfg.org);
        if is_org {
            *reasons.entry("organization".into()).or_default() += 1;
        } else {
            retained.push(profile);
        }
    }
    audits.push(FilterAudit {
        stage: "organization".into(),
        input_users: input,
        removed: input - retained.len(),
        retained: retained.len(),
        reasons,
    });
    current = retained;

    // stage 2: name-dictionary match
    let input = current.len();
    let mut retained = Vec::new();
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for profile in current {
        if name_match(profile, dict) {
            retained.push(profile);
        } else {
            *reasons.entry("no_name_match".into()).or_default() += 1;
        }
    }
    audits.push(FilterAudit {
        stage: "name_match".into(),
        input_users: input,
        removed: input - retained.len(),
        retained: retained.len(),
        reasons,
    });
    current = retained;

    // stage 3: tweeting rate
    let input = current.len();
    let mut retained = Vec::new();
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for profile in current {
        let rate = tweeting_rate(profile, cfg.as_of)?;
        if rate <= cfg.rate_threshold {
            retained.push(profile);
        } else {
            *reasons.entry("rate_above_threshold".into()).or_default() += 1;
        }
    }
    audits.push(FilterAudit {
        stage: "tweeting_rate".into(),
        input_users: input,
        removed: input - retained.len(),
        retained: retained.len(),
        reasons,
    });

    let mut ids: Vec<String> = retained.iter().map(|p| p.user_id.clone()).collect();
    ids.sort();
    Ok((ids, audits))
}
