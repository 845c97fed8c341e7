//! The ten pipeline stages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rumorlens::corpus::{
    aggregate_labels, load_annotations, load_posts, load_profiles, percent_agreement,
    profile_timestamp_violations, PostCollection, ProfileCollection,
};
use rumorlens::features::{
    feature_registry, pre_rumor_window, read_feature_matrix, sample_control_cutoffs, tokenize,
    user_vector, write_feature_matrix, FeatureLexicons, PosLexicon, TokenKind,
};
use rumorlens::learn::{
    derive_groups, evaluate, fit_logistic, forward_select_aic, mcfadden_r2, train_cascade,
    wald_inference, CascadeConfig, ControlLabel, DenseMatrix, FitParams, PostJudgment,
    RelevanceCascade, RumorLabel, UserGroup,
};
use rumorlens::lexicon::{load_category_lexicon, load_word_list, WordList};
use rumorlens::querylang::{load_topic_queries, match_corpus};
use rumorlens::stats::{
    bonferroni, box_stats, frequency_row, mann_whitney_u, match_on_followers, quantile,
    word_frequencies,
};
use rumorlens::userfilter::{apply_filters, name_match, FilterConfig, NameDictionary};

use crate::config::PipelineConfig;
use crate::manifest::{read_output, require_stage, sha256_file, Manifest};
use crate::model_io::{parse_models, render_models};

pub const RUMOR_LABELS: &[&str] = &["not_cure", "claims_cure", "prevention", "debunking"];
pub const CONTROL_LABELS: &[&str] = &[
    "not_cancer",
    "cancer",
    "cancer_personal",
    "cancer_cure",
    "cancer_personal_cure",
];

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub force: bool,
    pub config_digest: String,
}

impl Ctx {
    pub fn new(cfg: PipelineConfig, force: bool) -> Self {
        let config_digest = cfg.digest();
        Ctx {
            cfg,
            force,
            config_digest,
        }
    }

    fn manifest(&self, stage: &str) -> Manifest {
        Manifest::new(stage, &self.config_digest, self.cfg.seed)
    }

    fn require(&self, stage: &str) -> Result<Manifest> {
        require_stage(&self.cfg.out_dir, stage, &self.config_digest, self.force)
    }

    fn posts(&self) -> Result<PostCollection> {
        let (posts, _) = load_posts(&self.cfg.posts, self.cfg.max_bad_fraction)?;
        Ok(posts)
    }

    fn profiles(&self) -> Result<ProfileCollection> {
        let (profiles, _) = load_profiles(&self.cfg.profiles, self.cfg.max_bad_fraction)?;
        Ok(profiles)
    }

    fn lexicons(&self) -> Result<FeatureLexicons> {
        let (categories, _warnings) = load_category_lexicon(&self.cfg.category_lexicon)?;
        Ok(FeatureLexicons {
            categories,
            positive: load_word_list(&self.cfg.positive_words, "positive")?,
            negative: load_word_list(&self.cfg.negative_words, "negative")?,
            emoticons_pos: load_word_list(&self.cfg.emoticons_pos, "emoticons_pos")?,
            emoticons_neg: load_word_list(&self.cfg.emoticons_neg, "emoticons_neg")?,
            reference_vocab: load_word_list(&self.cfg.reference_vocab, "reference_vocab")?,
            medical_domains: load_word_list(&self.cfg.medical_domains, "medical_domains")?,
            pos_lexicon: PosLexicon::load(&self.cfg.pos_lexicon)?,
        })
    }
}

/// Folded word tokens of one post, the document unit for the cascades and
/// the frequency tables.
fn word_tokens(text: &str, emoticons: &WordList) -> Vec<String> {
    tokenize(text, emoticons)
        .into_iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.folded)
        .collect()
}

fn fig3_stars(p: f64) -> &'static str {
    if p < 0.0001 {
        "***"
    } else if p < 0.001 {
        "**"
    } else if p < 0.01 {
        "*"
    } else {
        ""
    }
}

fn parse_group(s: &str) -> Result<UserGroup> {
    match s {
        "rumor" => Ok(UserGroup::Rumor),
        "control_personal" => Ok(UserGroup::ControlPersonal),
        "control_non_personal" => Ok(UserGroup::ControlNonPersonal),
        "excluded" => Ok(UserGroup::Excluded),
        other => bail!("unknown group {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

pub fn ingest(ctx: &Ctx) -> Result<()> {
    let (posts, post_report) = load_posts(&ctx.cfg.posts, ctx.cfg.max_bad_fraction)?;
    let (profiles, profile_report) = load_profiles(&ctx.cfg.profiles, ctx.cfg.max_bad_fraction)?;
    let violations = profile_timestamp_violations(&profiles, &posts);

    let mut summary = String::new();
    writeln!(summary, "posts_loaded = {}", post_report.loaded)?;
    writeln!(summary, "posts_rejected = {}", post_report.rejected.len())?;
    writeln!(summary, "profiles_loaded = {}", profile_report.loaded)?;
    writeln!(summary, "profiles_rejected = {}", profile_report.rejected.len())?;
    if let Some((lo, hi)) = posts.time_span() {
        writeln!(summary, "time_span = {} .. {}", lo.to_rfc3339(), hi.to_rfc3339())?;
    }
    writeln!(summary, "timestamp_violations = {}", violations.join(","))?;
    for r in post_report.rejected.iter().chain(&profile_report.rejected) {
        writeln!(summary, "rejected_line = {}: {}", r.line, r.reason)?;
    }

    let mut m = ctx.manifest("ingest");
    m.record_input("posts", &ctx.cfg.posts)?;
    m.record_input("profiles", &ctx.cfg.profiles)?;
    m.write_output(&ctx.cfg.out_dir, "ingest/summary.txt", &summary)?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!(
        "ingest: {} posts, {} profiles",
        post_report.loaded, profile_report.loaded
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// match-queries
// ---------------------------------------------------------------------------

pub fn match_queries(ctx: &Ctx) -> Result<()> {
    ctx.require("ingest")?;
    let posts = ctx.posts()?;
    let queries = load_topic_queries(&ctx.cfg.queries)?;
    let matches = match_corpus(&queries, &posts);

    let names: BTreeMap<u32, &str> = queries
        .iter()
        .map(|q| (q.topic_id, q.topic_name.as_str()))
        .collect();
    let mut table = String::from("topic_id\ttopic_name\tn_posts\tunique_users\n");
    let mut post_topics = String::from("post_id\ttopic_id\n");
    for (id, tm) in &matches {
        writeln!(
            table,
            "{id}\t{}\t{}\t{}",
            names[id],
            tm.post_ids.len(),
            tm.unique_users
        )?;
        for pid in &tm.post_ids {
            writeln!(post_topics, "{pid}\t{id}")?;
        }
    }

    let mut m = ctx.manifest("match-queries");
    m.record_input("posts", &ctx.cfg.posts)?;
    m.record_input("queries", &ctx.cfg.queries)?;
    m.write_output(&ctx.cfg.out_dir, "match/topic_matches.tsv", &table)?;
    m.write_output(&ctx.cfg.out_dir, "match/post_topics.tsv", &post_topics)?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!("match-queries: {} topics evaluated", queries.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// filter-users
// ---------------------------------------------------------------------------

pub fn filter_users(ctx: &Ctx) -> Result<()> {
    ctx.require("ingest")?;
    let posts = ctx.posts()?;
    let profiles = ctx.profiles()?;
    let dict = NameDictionary::load(&ctx.cfg.name_dict)?;

    let mut filter_cfg = FilterConfig::new(ctx.cfg.as_of);
    filter_cfg.rate_threshold = ctx.cfg.rate_threshold;
    filter_cfg.org.threshold = ctx.cfg.org_threshold;
    let (mut retained, audits) = apply_filters(&profiles, &posts, &dict, &filter_cfg)?;
    retained.sort();

    let mut audit = String::from("stage\tinput_users\tremoved\tretained\treasons\n");
    for a in &audits {
        let reasons = a
            .reasons
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            audit,
            "{}\t{}\t{}\t{}\t{reasons}",
            a.stage, a.input_users, a.removed, a.retained
        )?;
    }

    let mut m = ctx.manifest("filter-users");
    m.record_input("posts", &ctx.cfg.posts)?;
    m.record_input("profiles", &ctx.cfg.profiles)?;
    m.record_input("name_dict", &ctx.cfg.name_dict)?;
    m.write_output(
        &ctx.cfg.out_dir,
        "filter/retained_users.txt",
        &(retained.join("\n") + "\n"),
    )?;
    m.write_output(&ctx.cfg.out_dir, "filter/audit.tsv", &audit)?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!("filter-users: {} of {} retained", retained.len(), profiles.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// label-aggregate
// ---------------------------------------------------------------------------

fn aggregate_one(path: &Path, label_set: &[&str], max_bad: f64) -> Result<(String, String)> {
    let (annotations, _) = load_annotations(path, label_set, max_bad)?;
    let agg = aggregate_labels(&annotations, 2);
    let agreement = percent_agreement(&annotations)?;
    let mut table = String::from("item_id\tlabel\tconfidence\n");
    for (item, (label, conf)) in &agg.decided {
        writeln!(table, "{item}\t{label}\t{conf}")?;
    }
    let mut notes = String::new();
    writeln!(notes, "annotations = {}", annotations.len())?;
    writeln!(notes, "decided = {}", agg.decided.len())?;
    writeln!(notes, "unresolved = {}", agg.unresolved.join(","))?;
    writeln!(notes, "below_threshold = {}", agg.below_threshold.join(","))?;
    writeln!(notes, "mean_modal_agreement = {agreement}")?;
    Ok((table, notes))
}

pub fn label_aggregate(ctx: &Ctx) -> Result<()> {
    ctx.require("ingest")?;
    let (rumor_table, rumor_notes) = aggregate_one(
        &ctx.cfg.annotations_rumor,
        RUMOR_LABELS,
        ctx.cfg.max_bad_fraction,
    )?;
    let (control_table, control_notes) = aggregate_one(
        &ctx.cfg.annotations_control,
        CONTROL_LABELS,
        ctx.cfg.max_bad_fraction,
    )?;

    let mut m = ctx.manifest("label-aggregate");
    m.record_input("annotations_rumor", &ctx.cfg.annotations_rumor)?;
    m.record_input("annotations_control", &ctx.cfg.annotations_control)?;
    m.write_output(&ctx.cfg.out_dir, "labels/rumor_labels.tsv", &rumor_table)?;
    m.write_output(&ctx.cfg.out_dir, "labels/control_labels.tsv", &control_table)?;
    m.write_output(
        &ctx.cfg.out_dir,
        "labels/agreement.txt",
        &format!("[rumor]\n{rumor_notes}\n[control]\n{control_notes}"),
    )?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!("label-aggregate: wrote decided labels and agreement stats");
    Ok(())
}

fn read_label_table(out_dir: &Path, rel: &str) -> Result<Vec<(String, String)>> {
    let text = read_output(out_dir, rel)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let mut it = line.split('\t');
        let (Some(item), Some(label)) = (it.next(), it.next()) else {
            bail!("{rel}: malformed line {line:?}");
        };
        out.push((item.to_string(), label.to_string()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// train-relevance
// ---------------------------------------------------------------------------

pub fn train_relevance(ctx: &Ctx) -> Result<()> {
    ctx.require("label-aggregate")?;
    let posts = ctx.posts()?;
    let emoticons = ctx.lexicons()?.all_emoticons();

    let doc = |item: &str| -> Result<Vec<String>> {
        let post = posts
            .get(item)
            .with_context(|| format!("labeled item {item:?} is not a known post id"))?;
        Ok(word_tokens(&post.text, &emoticons))
    };
    let mut rumor_train = Vec::new();
    for (item, label) in read_label_table(&ctx.cfg.out_dir, "labels/rumor_labels.tsv")? {
        rumor_train.push((doc(&item)?, RumorLabel::parse(&label)?));
    }
    let mut control_train = Vec::new();
    for (item, label) in read_label_table(&ctx.cfg.out_dir, "labels/control_labels.tsv")? {
        control_train.push((doc(&item)?, ControlLabel::parse(&label)?));
    }

    let cascade_cfg = CascadeConfig {
        lambda_grid: ctx.cfg.lambda_grid.clone(),
        min_df: 2,
        seed: ctx.cfg.seed,
        smote_k: 5,
    };
    let cascade = train_cascade(&rumor_train, &control_train, &cascade_cfg)?;

    let artifact = render_models(&[
        ("about_cure", &cascade.about_cure),
        ("kind_claims_cure", &cascade.kind_models[0]),
        ("kind_prevention", &cascade.kind_models[1]),
        ("kind_debunking", &cascade.kind_models[2]),
        ("cancer", &cascade.cancer),
        ("personal", &cascade.personal),
        ("suggests_cure", &cascade.suggests_cure),
    ]);
    let warnings = if cascade.warnings.is_empty() {
        String::from("none\n")
    } else {
        cascade.warnings.join("\n") + "\n"
    };

    let mut m = ctx.manifest("train-relevance");
    m.record_input("posts", &ctx.cfg.posts)?;
    m.record_input(
        "labels/rumor_labels.tsv",
        &ctx.cfg.out_dir.join("labels/rumor_labels.tsv"),
    )?;
    m.record_input(
        "labels/control_labels.tsv",
        &ctx.cfg.out_dir.join("labels/control_labels.tsv"),
    )?;
    m.write_output(&ctx.cfg.out_dir, "models/cascade.txt", &artifact)?;
    m.write_output(&ctx.cfg.out_dir, "models/cascade_warnings.txt", &warnings)?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!(
        "train-relevance: cascades trained on {} rumor / {} control docs",
        rumor_train.len(),
        control_train.len()
    );
    Ok(())
}

fn load_cascade(out_dir: &Path) -> Result<RelevanceCascade> {
    let text = read_output(out_dir, "models/cascade.txt")?;
    let mut models = parse_models(&text)?;
    let mut take = |name: &str| {
        models
            .remove(name)
            .with_context(|| format!("cascade artifact is missing model {name:?}"))
    };
    let about_cure = take("about_cure")?;
    let kind_models = vec![
        take("kind_claims_cure")?,
        take("kind_prevention")?,
        take("kind_debunking")?,
    ];
    let cancer = take("cancer")?;
    let personal = take("personal")?;
    let suggests_cure = take("suggests_cure")?;
    Ok(RelevanceCascade {
        rumor_vocab: about_cure.feature_names.clone(),
        about_cure,
        kind_models,
        control_vocab: cancer.feature_names.clone(),
        cancer,
        personal,
        suggests_cure,
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// derive-groups
// ---------------------------------------------------------------------------

pub fn derive_groups_stage(ctx: &Ctx) -> Result<()> {
    ctx.require("train-relevance")?;
    ctx.require("filter-users")?;
    ctx.require("match-queries")?;
    let cascade = load_cascade(&ctx.cfg.out_dir)?;
    let posts = ctx.posts()?;
    let emoticons = ctx.lexicons()?.all_emoticons();
    let retained: Vec<String> = read_output(&ctx.cfg.out_dir, "filter/retained_users.txt")?
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect();
    // the rumor cascade only applies to posts the topic queries selected;
    // the control cascade judges everything (it decides cancer relevance)
    let topical: BTreeSet<String> = read_output(&ctx.cfg.out_dir, "match/post_topics.tsv")?
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once('\t').map(|(pid, _)| pid.to_string()))
        .collect();

    let mut judgments: BTreeMap<String, Vec<PostJudgment>> = BTreeMap::new();
    let mut judgment_rows =
        String::from("post_id\tuser_id\tclaims_cure\tcancer\tpersonal_cancer\tsuggests_cure\n");
    for user in &retained {
        let mut per_user = Vec::new();
        for post in posts.posts_by_user(user) {
            let tokens = word_tokens(&post.text, &emoticons);
            let j = if topical.contains(&post.id) {
                cascade.judge(&tokens)?
            } else {
                let c = cascade.predict_control(&tokens)?;
                PostJudgment {
                    claims_cure: false,
                    cancer: c.cancer,
                    personal_cancer: c.cancer && c.personal,
                    suggests_cure: c.cancer && c.suggests_cure,
                }
            };
            writeln!(
                judgment_rows,
                "{}\t{user}\t{}\t{}\t{}\t{}",
                post.id, j.claims_cure as u8, j.cancer as u8, j.personal_cancer as u8,
                j.suggests_cure as u8
            )?;
            per_user.push(j);
        }
        if !per_user.is_empty() {
            judgments.insert(user.clone(), per_user);
        }
    }
    let groups = derive_groups(&judgments);
    let mut group_rows = String::from("user_id\tgroup\n");
    for (user, group) in &groups {
        writeln!(group_rows, "{user}\t{}", group.as_str())?;
    }

    let mut m = ctx.manifest("derive-groups");
    m.record_input("posts", &ctx.cfg.posts)?;
    m.record_input(
        "models/cascade.txt",
        &ctx.cfg.out_dir.join("models/cascade.txt"),
    )?;
    m.record_input(
        "filter/retained_users.txt",
        &ctx.cfg.out_dir.join("filter/retained_users.txt"),
    )?;
    m.record_input(
        "match/post_topics.tsv",
        &ctx.cfg.out_dir.join("match/post_topics.tsv"),
    )?;
    m.write_output(&ctx.cfg.out_dir, "groups/judgments.tsv", &judgment_rows)?;
    m.write_output(&ctx.cfg.out_dir, "groups/groups.tsv", &group_rows)?;
    m.save(&ctx.cfg.out_dir)?;
    let counts: BTreeMap<&str, usize> =
        groups.values().fold(BTreeMap::new(), |mut acc, g| {
            *acc.entry(g.as_str()).or_default() += 1;
            acc
        });
    eprintln!("derive-groups: {counts:?}");
    Ok(())
}

fn read_groups(out_dir: &Path) -> Result<BTreeMap<String, UserGroup>> {
    let mut out = BTreeMap::new();
    for line in read_output(out_dir, "groups/groups.tsv")?.lines().skip(1) {
        let (user, group) = line
            .split_once('\t')
            .with_context(|| format!("groups.tsv: malformed line {line:?}"))?;
        out.insert(user.to_string(), parse_group(group)?);
    }
    Ok(out)
}

/// post_id -> judged cancer flag, plus per-user claims-cure post times.
fn read_judgments(
    out_dir: &Path,
    posts: &PostCollection,
) -> Result<(BTreeMap<String, bool>, BTreeMap<String, DateTime<Utc>>)> {
    let mut cancer_flags = BTreeMap::new();
    let mut first_claim: BTreeMap<String, DateTime<Utc>> = BTreeMap::new();
    for line in read_output(out_dir, "groups/judgments.tsv")?.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            bail!("judgments.tsv: malformed line {line:?}");
        }
        let (post_id, user) = (cols[0], cols[1]);
        cancer_flags.insert(post_id.to_string(), cols[3] == "1");
        if cols[2] == "1" {
            let t = posts
                .get(post_id)
                .with_context(|| format!("judged post {post_id:?} not in corpus"))?
                .created_at;
            first_claim
                .entry(user.to_string())
                .and_modify(|cur| *cur = (*cur).min(t))
                .or_insert(t);
        }
    }
    Ok((cancer_flags, first_claim))
}

// ---------------------------------------------------------------------------
// extract-features
// ---------------------------------------------------------------------------

pub fn extract_features(ctx: &Ctx) -> Result<()> {
    ctx.require("derive-groups")?;
    let posts = ctx.posts()?;
    let profiles = ctx.profiles()?;
    let lex = ctx.lexicons()?;
    let registry = feature_registry(&lex.categories);
    let groups = read_groups(&ctx.cfg.out_dir)?;
    let (cancer_flags, first_claim) = read_judgments(&ctx.cfg.out_dir, &posts)?;

    let rumor_users: Vec<&String> = groups
        .iter()
        .filter(|(_, g)| **g == UserGroup::Rumor)
        .map(|(u, _)| u)
        .collect();
    let control_users: Vec<&String> = groups
        .iter()
        .filter(|(_, g)| matches!(g, UserGroup::ControlPersonal | UserGroup::ControlNonPersonal))
        .map(|(u, _)| u)
        .collect();
    if rumor_users.is_empty() || control_users.is_empty() {
        bail!("need at least one rumor and one control user to extract features");
    }

    // rumor cutoffs: the first claims-cure post; control cutoffs: sampled
    // from the rumor cutoff distribution so both windows look alike
    let mut cutoffs: BTreeMap<&String, DateTime<Utc>> = BTreeMap::new();
    let mut rumor_times = Vec::new();
    for user in &rumor_users {
        let t = *first_claim
            .get(*user)
            .with_context(|| format!("rumor user {user} has no claims-cure post"))?;
        cutoffs.insert(user, t);
        rumor_times.push(t);
    }
    let span = posts.time_span().context("empty corpus")?;
    let sampled = sample_control_cutoffs(
        &rumor_times,
        control_users.len(),
        ctx.cfg.seed.wrapping_add(101),
        span,
    )?;
    for (user, t) in control_users.iter().zip(sampled) {
        cutoffs.insert(user, t);
    }

    let mut vectors = Vec::new();
    let mut labels = String::from("user_id\tgroup\tlabel\n");
    let mut skipped = String::from("user_id\treason\n");
    for (user, group) in &groups {
        let Some(&cutoff) = cutoffs.get(user) else {
            continue; // excluded users carry no label
        };
        let user_posts = posts.posts_by_user(user);
        let Some(window) = pre_rumor_window(&user_posts, cutoff, ctx.cfg.min_posts) else {
            writeln!(
                skipped,
                "{user}\tfewer than {} posts before cutoff",
                ctx.cfg.min_posts
            )?;
            continue;
        };
        let profile = profiles
            .get(user)
            .with_context(|| format!("user {user} has posts but no profile"))?;
        let n_cancer = window
            .iter()
            .filter(|p| cancer_flags.get(&p.id).copied().unwrap_or(false))
            .count();
        vectors.push(user_vector(profile, &window, &lex, n_cancer, ctx.cfg.as_of)?);
        writeln!(
            labels,
            "{user}\t{}\t{}",
            group.as_str(),
            (*group == UserGroup::Rumor) as u8
        )?;
    }

    let matrix_rel = "features/matrix.tsv";
    let matrix_path = ctx.cfg.out_dir.join(matrix_rel);
    std::fs::create_dir_all(matrix_path.parent().unwrap())?;
    write_feature_matrix(&matrix_path, &registry, &vectors)?;

    let mut m = ctx.manifest("extract-features");
    m.record_input("posts", &ctx.cfg.posts)?;
    m.record_input("profiles", &ctx.cfg.profiles)?;
    m.record_input(
        "groups/groups.tsv",
        &ctx.cfg.out_dir.join("groups/groups.tsv"),
    )?;
    m.outputs
        .insert(matrix_rel.to_string(), sha256_file(&matrix_path)?);
    m.write_output(&ctx.cfg.out_dir, "features/labels.tsv", &labels)?;
    m.write_output(&ctx.cfg.out_dir, "features/skipped.tsv", &skipped)?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!("extract-features: {} users vectorized", vectors.len());
    Ok(())
}

/// Reads the feature matrix and labels back, aligned by user id.
fn read_features(
    out_dir: &Path,
    min_rows: usize,
) -> Result<(Vec<String>, DenseMatrix, Vec<u8>, Vec<(String, UserGroup)>)> {
    let (registry, vectors) = read_feature_matrix(out_dir.join("features/matrix.tsv"))?;
    let mut meta: BTreeMap<String, (UserGroup, u8)> = BTreeMap::new();
    for line in read_output(out_dir, "features/labels.tsv")?.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            bail!("labels.tsv: malformed line {line:?}");
        }
        meta.insert(
            cols[0].to_string(),
            (parse_group(cols[1])?, cols[2].parse().context("label")?),
        );
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut users = Vec::new();
    for v in &vectors {
        let (group, label) = *meta
            .get(&v.user_id)
            .with_context(|| format!("user {} in matrix but not in labels", v.user_id))?;
        rows.push(v.row(&registry).map_err(anyhow::Error::from)?);
        y.push(label);
        users.push((v.user_id.clone(), group));
    }
    if rows.len() < min_rows {
        bail!("only {} labeled users; need at least {min_rows}", rows.len());
    }
    Ok((registry, DenseMatrix::from_rows(&rows)?, y, users))
}

// ---------------------------------------------------------------------------
// train-user-model
// ---------------------------------------------------------------------------

pub fn train_user_model(ctx: &Ctx) -> Result<()> {
    ctx.require("extract-features")?;
    let (registry, x, y, _) = read_features(&ctx.cfg.out_dir, 4)?;

    let params = FitParams {
        lambda: 0.0,
        max_iter: 10_000,
        tol: 1e-7,
    };
    let sel = forward_select_aic(&x, &y, &registry, &params)?;
    let x_sel = x.select_columns(&sel.selected);
    let wald = wald_inference(&x_sel, &y, &sel.model)?;
    let r2 = mcfadden_r2(&sel.model)?;
    let in_sample = evaluate(&sel.model, &x_sel, &y, 0.5)?;

    // 5-fold cross-validated accuracy of the selected feature set; folds
    // that end up single-class are reported, not silently averaged in
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed.wrapping_add(202));
    order.shuffle(&mut rng);
    let mut fold_accs = Vec::new();
    let mut fold_notes = Vec::new();
    for f in 0..5 {
        let test: Vec<usize> = order.iter().copied().skip(f).step_by(5).collect();
        let train: Vec<usize> = order.iter().copied().filter(|i| !test.contains(i)).collect();
        if test.is_empty() || train.is_empty() {
            fold_notes.push(format!("fold {f}: empty split"));
            continue;
        }
        let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let yte: Vec<u8> = test.iter().map(|&i| y[i]).collect();
        match fit_logistic(&x_sel.select_rows(&train), &ytr, &sel.model.feature_names, &params)
        {
            Ok(model) => {
                let e = evaluate(&model, &x_sel.select_rows(&test), &yte, 0.5)?;
                fold_accs.push(e.accuracy);
            }
            Err(e) => fold_notes.push(format!("fold {f}: {e}")),
        }
    }
    let cv_accuracy = if fold_accs.is_empty() {
        f64::NAN
    } else {
        fold_accs.iter().sum::<f64>() / fold_accs.len() as f64
    };

    let artifact = render_models(&[("user_model", &sel.model)]);
    let mut selection = String::new();
    writeln!(
        selection,
        "selected = {}",
        sel.selected
            .iter()
            .map(|&j| registry[j].clone())
            .collect::<Vec<_>>()
            .join(",")
    )?;
    writeln!(
        selection,
        "aic_trace = {}",
        sel.trace
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )?;
    writeln!(selection, "aic = {}", sel.aic)?;
    writeln!(selection, "mcfadden_r2 = {r2}")?;
    writeln!(selection, "in_sample_accuracy = {}", in_sample.accuracy)?;
    writeln!(selection, "cv_accuracy = {cv_accuracy}")?;
    writeln!(selection, "cv_folds_used = {}", fold_accs.len())?;
    for note in &fold_notes {
        writeln!(selection, "cv_note = {note}")?;
    }

    let mut table = String::from("variable\tcoefficient\tstd_error\tp_value\tstars\n");
    for row in &wald {
        writeln!(
            table,
            "{}\t{}\t{}\t{}\t{}",
            row.name, row.coefficient, row.std_error, row.p_value, row.stars
        )?;
    }

    let mut m = ctx.manifest("train-user-model");
    m.record_input(
        "features/matrix.tsv",
        &ctx.cfg.out_dir.join("features/matrix.tsv"),
    )?;
    m.record_input(
        "features/labels.tsv",
        &ctx.cfg.out_dir.join("features/labels.tsv"),
    )?;
    m.write_output(&ctx.cfg.out_dir, "models/user_model.txt", &artifact)?;
    m.write_output(&ctx.cfg.out_dir, "models/selection.txt", &selection)?;
    m.write_output(&ctx.cfg.out_dir, "models/user_model_table.tsv", &table)?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!(
        "train-user-model: {} features selected, McFadden R2 {r2:.3}, CV accuracy {cv_accuracy:.3}",
        sel.selected.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// compare-groups
// ---------------------------------------------------------------------------

pub fn compare_groups(ctx: &Ctx) -> Result<()> {
    ctx.require("extract-features")?;
    let (registry, x, _y, users) = read_features(&ctx.cfg.out_dir, 2)?;
    let posts = ctx.posts()?;
    let profiles = ctx.profiles()?;
    let lex = ctx.lexicons()?;
    let stopwords = load_word_list(&ctx.cfg.stopwords, "stopwords")?;
    let emoticons = lex.all_emoticons();
    let dict = NameDictionary::load(&ctx.cfg.name_dict)?;

    let group_rows = |g: UserGroup| -> Vec<usize> {
        users
            .iter()
            .enumerate()
            .filter(|(_, (_, ug))| *ug == g)
            .map(|(i, _)| i)
            .collect()
    };
    let pairs = [
        ("rumor_vs_control_personal", UserGroup::Rumor, UserGroup::ControlPersonal),
        (
            "rumor_vs_control_non_personal",
            UserGroup::Rumor,
            UserGroup::ControlNonPersonal,
        ),
        (
            "control_personal_vs_non_personal",
            UserGroup::ControlPersonal,
            UserGroup::ControlNonPersonal,
        ),
    ];

    // per-feature pairwise Mann-Whitney, Bonferroni over every test run
    let mut tests: Vec<(String, &str, f64, f64, f64, f64)> = Vec::new();
    let mut raw_ps = Vec::new();
    for (j, feature) in registry.iter().enumerate() {
        for (pair_name, ga, gb) in &pairs {
            let a: Vec<f64> = group_rows(*ga).iter().map(|&i| x.get(i, j)).collect();
            let b: Vec<f64> = group_rows(*gb).iter().map(|&i| x.get(i, j)).collect();
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let (u, p) = mann_whitney_u(&a, &b)?;
            let med = |mut v: Vec<f64>| {
                v.sort_by(|x, y| x.partial_cmp(y).unwrap());
                quantile(&v, 0.5)
            };
            tests.push((feature.clone(), pair_name, med(a), med(b), u, p));
            raw_ps.push(p);
        }
    }
    let adjusted = bonferroni(&raw_ps, raw_ps.len());
    let mut comparison =
        String::from("feature\tpair\tmedian_a\tmedian_b\tU\traw_p\tadj_p\tstars\n");
    for ((feature, pair, ma, mb, u, p), adj) in tests.iter().zip(&adjusted) {
        writeln!(
            comparison,
            "{feature}\t{pair}\t{ma}\t{mb}\t{u}\t{p}\t{adj}\t{}",
            fig3_stars(*adj)
        )?;
    }

    // box statistics per feature per group (untrimmed data, p90 reported)
    let mut boxes = String::from(
        "feature\tgroup\tn\tmedian\tq1\tq3\twhisker_low\twhisker_high\tp90\n",
    );
    for (j, feature) in registry.iter().enumerate() {
        for g in [UserGroup::Rumor, UserGroup::ControlPersonal, UserGroup::ControlNonPersonal] {
            let vals: Vec<f64> = group_rows(g).iter().map(|&i| x.get(i, j)).collect();
            if vals.is_empty() {
                continue;
            }
            let b = box_stats(&vals)?;
            writeln!(
                boxes,
                "{feature}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                g.as_str(),
                vals.len(),
                b.median,
                b.q1,
                b.q3,
                b.whisker_low,
                b.whisker_high,
                b.p90
            )?;
        }
    }

    // follower matching: rumor users against the pooled controls
    let follower_pairs = |rows: &[usize]| -> Vec<(String, f64)> {
        rows.iter()
            .map(|&i| {
                let (user, _) = &users[i];
                (
                    user.clone(),
                    profiles.get(user).map(|p| p.followers as f64).unwrap_or(0.0),
                )
            })
            .collect()
    };
    let rumor_f = follower_pairs(&group_rows(UserGroup::Rumor));
    let mut control_rows = group_rows(UserGroup::ControlPersonal);
    control_rows.extend(group_rows(UserGroup::ControlNonPersonal));
    let control_f = follower_pairs(&control_rows);
    let mut matching = String::from("rumor_id\tcontrol_id\n");
    if !rumor_f.is_empty() && !control_f.is_empty() {
        let matched = match_on_followers(&rumor_f, &control_f)?;
        for (r, c) in &matched.pairs {
            writeln!(matching, "{r}\t{c}")?;
        }
        for r in &matched.unmatched {
            writeln!(matching, "{r}\t(unmatched)")?;
        }
    }

    // Table-1-style summary by name-match status, over all profiles
    let mut table1 = String::from(
        "name_match\tn\tmedian_followers\tmedian_followees\tmedian_statuses\tpct_verified\n",
    );
    for wanted in [true, false] {
        let group: Vec<_> = profiles.iter().filter(|p| name_match(p, &dict) == wanted).collect();
        if group.is_empty() {
            continue;
        }
        let med = |f: &dyn Fn(&rumorlens::corpus::Profile) -> f64| {
            let mut v: Vec<f64> = group.iter().map(|p| f(p)).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            quantile(&v, 0.5)
        };
        let verified =
            100.0 * group.iter().filter(|p| p.verified).count() as f64 / group.len() as f64;
        writeln!(
            table1,
            "{wanted}\t{}\t{}\t{}\t{}\t{verified}",
            group.len(),
            med(&|p| p.followers as f64),
            med(&|p| p.followees as f64),
            med(&|p| p.statuses_count as f64)
        )?;
    }

    // Table-5-style word frequencies per group
    let mut freq = String::from("group\trow\n");
    for g in [UserGroup::Rumor, UserGroup::ControlPersonal, UserGroup::ControlNonPersonal] {
        let members: BTreeSet<&String> = group_rows(g).iter().map(|&i| &users[i].0).collect();
        let mut words = Vec::new();
        for user in &members {
            for post in posts.posts_by_user(user) {
                words.extend(word_tokens(&post.text, &emoticons));
            }
        }
        for (word, pct) in word_frequencies(&words, &stopwords, 20) {
            writeln!(freq, "{}\t{}", g.as_str(), frequency_row(&word, pct))?;
        }
    }

    let mut m = ctx.manifest("compare-groups");
    m.record_input(
        "features/matrix.tsv",
        &ctx.cfg.out_dir.join("features/matrix.tsv"),
    )?;
    m.record_input(
        "features/labels.tsv",
        &ctx.cfg.out_dir.join("features/labels.tsv"),
    )?;
    m.record_input("profiles", &ctx.cfg.profiles)?;
    m.write_output(&ctx.cfg.out_dir, "compare/comparison.tsv", &comparison)?;
    m.write_output(&ctx.cfg.out_dir, "compare/box_stats.tsv", &boxes)?;
    m.write_output(&ctx.cfg.out_dir, "compare/matching.tsv", &matching)?;
    m.write_output(&ctx.cfg.out_dir, "compare/table1.tsv", &table1)?;
    m.write_output(&ctx.cfg.out_dir, "compare/word_frequencies.tsv", &freq)?;
    m.save(&ctx.cfg.out_dir)?;
    eprintln!("compare-groups: {} pairwise tests", raw_ps.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub fn report(ctx: &Ctx) -> Result<()> {
    ctx.require("match-queries")?;
    ctx.require("filter-users")?;
    ctx.require("derive-groups")?;
    ctx.require("train-user-model")?;
    ctx.require("compare-groups")?;
    let out = &ctx.cfg.out_dir;

    let mut r = String::new();
    writeln!(r, "# Cancer-cure rumor pipeline report")?;
    writeln!(r)?;
    writeln!(r, "## Filter audit")?;
    writeln!(r)?;
    r.push_str(&read_output(out, "filter/audit.tsv")?);
    writeln!(r)?;
    writeln!(r, "## Topic membership")?;
    writeln!(r)?;
    r.push_str(&read_output(out, "match/topic_matches.tsv")?);
    writeln!(r)?;
    writeln!(r, "## User groups")?;
    writeln!(r)?;
    let groups = read_groups(out)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for g in groups.values() {
        *counts.entry(g.as_str()).or_default() += 1;
    }
    for (g, n) in &counts {
        writeln!(r, "{g}\t{n}")?;
    }
    writeln!(r)?;
    writeln!(r, "## User model (forward AIC selection, unpenalized refit)")?;
    writeln!(r)?;
    writeln!(
        r,
        "Caveat: standard errors and p-values below are computed after feature"
    )?;
    writeln!(
        r,
        "selection on the same data and are optimistic (post-selection inference)."
    )?;
    writeln!(r)?;
    r.push_str(&read_output(out, "models/user_model_table.tsv")?);
    writeln!(r)?;
    r.push_str(&read_output(out, "models/selection.txt")?);
    writeln!(r)?;
    writeln!(r, "## Group comparisons (Mann-Whitney U, Bonferroni adjusted)")?;
    writeln!(r)?;
    writeln!(r, "Stars: p<0.0001 ***, p<0.001 **, p<0.01 *")?;
    writeln!(r)?;
    r.push_str(&read_output(out, "compare/comparison.tsv")?);
    writeln!(r)?;
    writeln!(r, "## Box statistics per group (untrimmed; p90 shown)")?;
    writeln!(r)?;
    r.push_str(&read_output(out, "compare/box_stats.tsv")?);
    writeln!(r)?;
    writeln!(r, "## Follower matching (rumor -> nearest unmatched control)")?;
    writeln!(r)?;
    r.push_str(&read_output(out, "compare/matching.tsv")?);
    writeln!(r)?;
    writeln!(r, "## Profile summary by name-match status")?;
    writeln!(r)?;
    r.push_str(&read_output(out, "compare/table1.tsv")?);
    writeln!(r)?;
    writeln!(r, "## Top words per group (stopwords excluded)")?;
    writeln!(r)?;
    r.push_str(&read_output(out, "compare/word_frequencies.tsv")?);

    let mut m = ctx.manifest("report");
    for stage in [
        "match-queries",
        "filter-users",
        "derive-groups",
        "train-user-model",
        "compare-groups",
    ] {
        m.record_input(
            &format!("manifest:{stage}"),
            &out.join("manifests").join(format!("{stage}.json")),
        )?;
    }
    m.write_output(out, "report.txt", &r)?;
    m.save(out)?;
    eprintln!("report: wrote {}", out.join("report.txt").display());
    Ok(())
}
