//! Deterministic synthetic data: a planted-signal user study for
//! end-to-end evaluation, and a complete on-disk pipeline fixture.
//!
//! The study generator elevates three signals for "rumor" users: share of
//! ingestion-lexicon words, average syllables per word, and URL share.
//! Everything else is drawn from the same distributions for both groups.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Annotation, Post, Profile};
use crate::features::{FeatureLexicons, PosLexicon, PosTag};
use crate::lexicon::{CategoryLexicon, WordList};
use crate::{Error, Result};

/// Everyday filler vocabulary, one or two syllables.
pub const PLAIN_WORDS: &[&str] = &[
    "sun", "run", "cat", "dog", "walk", "park", "game", "nice", "time", "day", "week", "home",
    "food", "rain", "snow", "song", "play", "work", "rest", "road", "trip", "lake", "hill",
    "night", "coffee", "garden", "window", "morning", "friend", "happy", "quiet", "simple",
];

/// Three-or-more-syllable vocabulary used to lift average syllables.
pub const POLY_WORDS: &[&str] = &[
    "remarkable", "testimonial", "alternative", "incredible", "unbelievable", "revolutionary",
    "immediately", "absolutely", "completely", "miraculous", "astonishing", "naturally",
];

/// Ingestion lexicon: short neutral words so the category fraction moves
/// without dragging the syllable features along.
pub const INGEST_WORDS: &[&str] = &[
    "juice", "tea", "pill", "dose", "syrup", "tonic", "broth", "shake", "blend", "brew",
];

const FIRST_NAMES: &[&str] = &[
    "alice", "bob", "carol", "dave", "erin", "frank", "grace", "henry", "ivy", "jack", "kate",
    "liam", "mary", "nick", "olga", "pete", "quinn", "rosa", "sam", "tina",
];

const SURNAMES: &[&str] = &[
    "Miller", "Stone", "Rivera", "Novak", "Ishida", "Okafor", "Larsen", "Dubois", "Khan", "Silva",
];

/// Lexicons matching the generator vocabulary.
pub fn study_lexicons() -> FeatureLexicons {
    let categories = CategoryLexicon::from_entries([
        ("ingest", INGEST_WORDS.to_vec()),
        ("social", vec!["friend", "friends", "party", "game", "play"]),
    ])
    .expect("static category lexicon");
    let mut reference: Vec<String> = PLAIN_WORDS.iter().map(|s| s.to_string()).collect();
    reference.extend(POLY_WORDS.iter().map(|s| s.to_string()));
    reference.extend(INGEST_WORDS.iter().map(|s| s.to_string()));
    for w in [
        "cancer", "cure", "cured", "cures", "my", "i", "remedy", "amazing", "truly", "works",
        "mother", "fights", "her", "diagnosis", "chemo", "today", "research", "charity",
        "raises", "funding", "awareness", "study", "try", "this", "now", "no", "evidence",
        "debunked", "myth", "false", "may", "help", "prevent", "risk", "says", "selling",
        "shirts", "for", "the", "event", "wheatgrass", "ginger", "baking", "soda", "great",
        "tonight", "with", "so", "fun", "in", "to", "of", "and", "a", "what", "long", "at",
        "love", "new", "all",
    ] {
        reference.push(w.to_string());
    }
    FeatureLexicons {
        categories,
        positive: WordList::new("positive", ["amazing", "great", "love", "works", "happy", "nice", "fun"]),
        negative: WordList::new("negative", ["bad", "sad", "awful", "false", "myth", "risk"]),
        emoticons_pos: WordList::new("emoticons_pos", [":)", ":-)", ":d"]),
        emoticons_neg: WordList::new("emoticons_neg", [":(", ":-("]),
        reference_vocab: WordList::new("reference", reference),
        medical_domains: WordList::new("medical", ["cancer.example.org", "medinfo.example"]),
        pos_lexicon: PosLexicon::from_entries([
            ("run", PosTag::Verb),
            ("walk", PosTag::Verb),
            ("play", PosTag::Verb),
            ("nice", PosTag::Adjective),
            ("happy", PosTag::Adjective),
            ("quiet", PosTag::Adjective),
            ("simple", PosTag::Adjective),
            ("great", PosTag::Adjective),
            ("dog", PosTag::Noun),
            ("cat", PosTag::Noun),
            ("park", PosTag::Noun),
        ]),
    }
}

#[derive(Debug, Clone)]
pub struct SynthUser {
    pub profile: Profile,
    pub posts: Vec<Post>,
    pub is_rumor: bool,
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// Generates `n_rumor + n_control` users with `posts_per_user` posts each.
/// Rumor users get heavy ingestion-word usage, more polysyllabic words,
/// and a higher URL share; both groups share every other distribution.
pub fn generate_user_study(
    n_rumor: usize,
    n_control: usize,
    posts_per_user: usize,
    seed: u64,
) -> Vec<SynthUser> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
    let created0 = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
    let mut users = Vec::with_capacity(n_rumor + n_control);
    for u in 0..n_rumor + n_control {
        let is_rumor = u < n_rumor;
        let user_id = if is_rumor {
            format!("ru{u:04}")
        } else {
            format!("cu{u:04}")
        };
        let display = format!(
            "{} {}",
            capitalize(FIRST_NAMES[u % FIRST_NAMES.len()]),
            SURNAMES[(u / FIRST_NAMES.len()) % SURNAMES.len()]
        );
        let profile = Profile {
            user_id: user_id.clone(),
            display_name: display,
            followers: 50 + rng.gen_range(0..500),
            followees: 40 + rng.gen_range(0..400),
            statuses_count: posts_per_user as u64 + rng.gen_range(0..200),
            account_created_at: created0 + Duration::days(rng.gen_range(0..365)),
            verified: rng.gen_range(0..50) == 0,
            org_label: None,
        };
        let mut posts = Vec::with_capacity(posts_per_user);
        let mut t = t0 + Duration::hours(u as i64);
        for k in 0..posts_per_user {
            t += Duration::hours(6 + rng.gen_range(0..12));
            let n_ingest = if is_rumor {
                4 + rng.gen_range(0..3)
            } else {
                rng.gen_range(0..2)
            };
            let n_poly = if is_rumor {
                2 + rng.gen_range(0..2)
            } else {
                rng.gen_range(0..2)
            };
            // fixed post length, so category fractions carry the signal
            // rather than raw word counts
            let n_plain = 18 - n_ingest - n_poly;
            let mut words: Vec<String> =
                (0..n_plain).map(|_| pick(&mut rng, PLAIN_WORDS).to_string()).collect();
            for _ in 0..n_ingest {
                words.push(pick(&mut rng, INGEST_WORDS).to_string());
            }
            for _ in 0..n_poly {
                words.push(pick(&mut rng, POLY_WORDS).to_string());
            }
            let url_p = if is_rumor { 0.5 } else { 0.1 };
            let mut text = words.join(" ");
            let mut urls = Vec::new();
            if rng.gen::<f64>() < url_p {
                let url = format!("http://news-blog.example/{u}/{k}");
                text.push(' ');
                text.push_str(&url);
                urls.push(url);
            }
            text.push('.');
            posts.push(Post {
                id: format!("{user_id}-p{k:04}"),
                user_id: user_id.clone(),
                created_at: t,
                text,
                is_retweet: false,
                urls,
                hashtags: Vec::new(),
                mentions: Vec::new(),
            });
        }
        users.push(SynthUser {
            profile,
            posts,
            is_rumor,
        });
    }
    users
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

// ---------------------------------------------------------------------------
// On-disk pipeline fixture
// ---------------------------------------------------------------------------

const FILLER_TEMPLATES: &[&str] = &[
    "great game tonight with friends so fun :)",
    "walking in the park with my dog today",
    "love this new song playing all day",
    "what a long week at work time to rest",
    "quiet morning coffee in the garden #fun",
    "road trip to the lake with @pal this week",
    "rain all day so i stayed home and played",
    "happy simple day a walk and a nice meal",
];

const TOPICS: &[(&str, &str)] = &[("wheatgrass", "wheatgrass"), ("ginger", "ginger"), ("baking soda", "baking soda")];

fn claims_text(topic: &str, k: usize) -> String {
    format!("{topic} cured my cancer amazing remedy truly works i swear {k}")
}

fn prevention_text(topic: &str, k: usize) -> String {
    format!("{topic} may help prevent cancer risk a study says {k}")
}

fn debunking_text(topic: &str, k: usize) -> String {
    format!("no evidence {topic} cures cancer debunked myth false {k}")
}

fn not_cure_text(topic: &str, k: usize) -> String {
    format!("selling {topic} shirts for the awareness event today fun {k}")
}

// deliberately names no topic: cure-suggesting control candidates surface
// through their cancer posts, not through the topic queries
fn cure_suggest_text(k: usize) -> String {
    format!("try this special tea remedy to cure cancer now friends {k}")
}

fn personal_cancer_text(k: usize) -> String {
    format!("my mother fights her cancer diagnosis chemo today hard {k}")
}

fn cancer_news_text(k: usize) -> String {
    format!("cancer research charity raises funding awareness study out {k}")
}

struct FixtureBuilder {
    posts: Vec<Post>,
    profiles: Vec<Profile>,
    rumor_ann: Vec<(String, &'static str)>,
    control_ann: Vec<(String, &'static str)>,
    rng: ChaCha8Rng,
}

impl FixtureBuilder {
    fn filler_time(&self, u: usize, k: usize) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
            + Duration::hours(u as i64)
            + Duration::days(5 * k as i64)
    }

    fn topical_time(&self, u: usize, k: usize) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap()
            + Duration::hours(u as i64)
            + Duration::days(k as i64)
    }

    fn add_user(
        &mut self,
        u: usize,
        user_id: &str,
        display_name: &str,
        statuses_count: u64,
        followers: u64,
        followees: u64,
    ) {
        self.profiles.push(Profile {
            user_id: user_id.to_string(),
            display_name: display_name.to_string(),
            followers,
            followees,
            statuses_count,
            account_created_at: Utc.with_ymd_and_hms(2018, 6, 1, 0, 0, 0).unwrap()
                + Duration::days(u as i64),
            verified: false,
            org_label: None,
        });
    }

    fn add_post(&mut self, user_id: &str, k: usize, t: DateTime<Utc>, text: String) -> String {
        let id = format!("{user_id}-p{k:03}");
        let urls = if text.contains("http://") {
            vec![text
                .split_whitespace()
                .find(|w| w.starts_with("http://"))
                .unwrap()
                .to_string()]
        } else {
            Vec::new()
        };
        self.posts.push(Post {
            id: id.clone(),
            user_id: user_id.to_string(),
            created_at: t,
            text,
            is_retweet: false,
            urls,
            hashtags: Vec::new(),
            mentions: Vec::new(),
        });
        id
    }

    fn add_filler(&mut self, u: usize, user_id: &str, count: usize) -> Vec<String> {
        (0..count)
            .map(|k| {
                let tpl = FILLER_TEMPLATES[self.rng.gen_range(0..FILLER_TEMPLATES.len())];
                let t = self.filler_time(u, k);
                self.add_post(user_id, k, t, format!("{tpl} {k}"))
            })
            .collect()
    }
}

/// Writes the complete input fileset for the CLI pipeline into `dir` and
/// returns the config file path. The fixture has 40 users / ~560 posts:
/// rumor, control-personal, control-non-personal, excluded (cure-
/// suggesting, prevention-only, debunking-only, irrelevant), plus users
/// that the organization, name, and rate filters remove.
pub fn write_pipeline_fixture(dir: &Path, seed: u64) -> Result<PathBuf> {
    let mut b = FixtureBuilder {
        posts: Vec::new(),
        profiles: Vec::new(),
        rumor_ann: Vec::new(),
        control_ann: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut u = 0usize;
    let name_for = |u: usize| {
        format!(
            "{} {}",
            capitalize(FIRST_NAMES[u % FIRST_NAMES.len()]),
            SURNAMES[u % SURNAMES.len()]
        )
    };

    // 10 rumor users: filler, then two claims-cure posts
    for i in 0..10 {
        let id = format!("rumor{i:02}");
        let dn = name_for(u);
        b.add_user(u, &id, &dn, 300 + u as u64, 150 + u as u64, 140);
        b.add_filler(u, &id, 12);
        let topic = TOPICS[i % TOPICS.len()].1;
        for k in 0..2 {
            let t = b.topical_time(u, k);
            let pid = b.add_post(&id, 12 + k, t, claims_text(topic, u * 10 + k));
            b.rumor_ann.push((pid, "claims_cure"));
        }
        u += 1;
    }

    // 8 control-personal users
    for i in 0..8 {
        let id = format!("ctrlp{i:02}");
        let dn = name_for(u);
        b.add_user(u, &id, &dn, 300 + u as u64, 150 + u as u64, 140);
        let filler = b.add_filler(u, &id, 12);
        if i < 2 {
            b.control_ann.push((filler[0].clone(), "not_cancer"));
            b.control_ann.push((filler[1].clone(), "not_cancer"));
        }
        for k in 0..2 {
            let t = b.topical_time(u, k);
            let pid = b.add_post(&id, 12 + k, t, personal_cancer_text(u * 10 + k));
            b.control_ann.push((pid, "cancer_personal"));
        }
        u += 1;
    }

    // 8 control-non-personal users
    for i in 0..8 {
        let id = format!("ctrln{i:02}");
        let dn = name_for(u);
        b.add_user(u, &id, &dn, 300 + u as u64, 150 + u as u64, 140);
        let filler = b.add_filler(u, &id, 12);
        if i < 2 {
            b.control_ann.push((filler[0].clone(), "not_cancer"));
            b.control_ann.push((filler[1].clone(), "not_cancer"));
        }
        for k in 0..2 {
            let t = b.topical_time(u, k);
            let pid = b.add_post(&id, 12 + k, t, cancer_news_text(u * 10 + k));
            b.control_ann.push((pid, "cancer"));
        }
        u += 1;
    }

    // 3 excluded: cure-suggesting posts
    for i in 0..3 {
        let id = format!("exclc{i:02}");
        let dn = name_for(u);
        b.add_user(u, &id, &dn, 300 + u as u64, 150 + u as u64, 140);
        b.add_filler(u, &id, 12);
        for k in 0..4 {
            let t = b.topical_time(u, k);
            let pid = b.add_post(&id, 12 + k, t, cure_suggest_text(u * 10 + k));
            b.control_ann.push((pid, "cancer_cure"));
        }
        u += 1;
    }

    // 2 excluded: prevention-only
    for i in 0..2 {
        let id = format!("exclp{i:02}");
        let dn = name_for(u);
        b.add_user(u, &id, &dn, 300 + u as u64, 150 + u as u64, 140);
        b.add_filler(u, &id, 12);
        let topic = TOPICS[i % TOPICS.len()].1;
        for k in 0..4 {
            let t = b.topical_time(u, k);
            let pid = b.add_post(&id, 12 + k, t, prevention_text(topic, u * 10 + k));
            b.rumor_ann.push((pid, "prevention"));
        }
        u += 1;
    }

    // 2 excluded: debunking-only
    for i in 0..2 {
        let id = format!("excld{i:02}");
        let dn = name_for(u);
        b.add_user(u, &id, &dn, 300 + u as u64, 150 + u as u64, 140);
        b.add_filler(u, &id, 12);
        let topic = TOPICS[(i + 1) % TOPICS.len()].1;
        for k in 0..4 {
            let t = b.topical_time(u, k);
            let pid = b.add_post(&id, 12 + k, t, debunking_text(topic, u * 10 + k));
            b.rumor_ann.push((pid, "debunking"));
        }
        u += 1;
    }

    // 3 excluded: topical but irrelevant posts
    for i in 0..3 {
        let id = format!("excli{i:02}");
        let dn = name_for(u);
        b.add_user(u, &id, &dn, 300 + u as u64, 150 + u as u64, 140);
        b.add_filler(u, &id, 12);
        let topic = TOPICS[i % TOPICS.len()].1;
        for k in 0..2 {
            let t = b.topical_time(u, k);
            let pid = b.add_post(&id, 12 + k, t, not_cure_text(topic, u * 10 + k));
            b.rumor_ann.push((pid, "not_cure"));
        }
        u += 1;
    }

    // 2 organization accounts (removed by the organization heuristic)
    for (i, dn) in ["Daily Health News", "Wellness Clinic Inc"].iter().enumerate() {
        let id = format!("org{i:02}");
        b.add_user(u, &id, dn, 3000, 20_000, 90);
        for k in 0..8 {
            let t = b.filler_time(u, k);
            let pid = b.add_post(&id, k, t, cancer_news_text(u * 10 + k));
            if k < 2 {
                b.control_ann.push((pid, "cancer"));
            }
        }
        u += 1;
    }

    // 1 user the name filter removes
    {
        let id = "noname00";
        b.add_user(u, id, "Zorblatt Qux", 300, 150, 140);
        b.add_filler(u, id, 8);
        u += 1;
    }

    // 1 user the rate filter removes
    {
        let id = "fast00";
        let dn = name_for(u);
        b.add_user(u, id, &dn, 200_000, 150, 140);
        b.add_filler(u, id, 8);
        u += 1;
    }
    let _ = u;

    // extra claims-cure material so every rumor-side class is well
    // represented: annotate the rumor users' posts only once each, but the
    // not_cure class needs more examples
    for i in 0..4 {
        let id = format!("rumor{:02}", i);
        let topic = TOPICS[i % TOPICS.len()].1;
        let t = b.topical_time(i, 5);
        let pid = b.add_post(&id, 20, t, not_cure_text(topic, 900 + i));
        b.rumor_ann.push((pid, "not_cure"));
    }

    write_fixture_files(dir, &b)
}

fn jsonl<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(
            &serde_json::to_string(&item)
                .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?,
        );
        out.push('\n');
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn annotations(pairs: &[(String, &'static str)], dissent_on_first: bool) -> Vec<Annotation> {
    let mut out = Vec::new();
    for (i, (item, label)) in pairs.iter().enumerate() {
        for a in ["a1", "a2", "a3"] {
            // one realistic dissenting vote; plurality still holds 2:1
            let l = if dissent_on_first && i == 0 && a == "a3" {
                "not_cure"
            } else {
                label
            };
            out.push(Annotation {
                item_id: item.clone(),
                annotator_id: a.to_string(),
                label: l.to_string(),
            });
        }
    }
    out
}

fn write_fixture_files(dir: &Path, b: &FixtureBuilder) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(dir, "posts.jsonl", &jsonl(b.posts.iter())?)?;
    write(dir, "profiles.jsonl", &jsonl(b.profiles.iter())?)?;
    write(
        dir,
        "annotations_rumor.jsonl",
        &jsonl(annotations(&b.rumor_ann, true))?,
    )?;
    let control = annotations(&b.control_ann, false);
    write(dir, "annotations_control.jsonl", &jsonl(control)?)?;
    write(
        dir,
        "topic_queries.tsv",
        "1\tWheatgrass\twheatgrass OR \"wheat grass\"\n\
         2\tGinger\tginger AND cancer\n\
         3\tBaking soda\t\"baking soda\" AND cancer\n",
    )?;
    write(
        dir,
        "category_lexicon.txt",
        &format!(
            "ingest: {}\nsocial: friend, friends, party, game, play\nLIWC48: ingest: drink*, swallow\n",
            INGEST_WORDS.join(", ")
        ),
    )?;
    write(
        dir,
        "stopwords.txt",
        "the\na\nto\nof\nand\nin\nmy\nis\nfor\non\nwith\nthis\nat\nso\n",
    )?;
    write(
        dir,
        "positive_words.txt",
        "amazing\ngreat\nlove\nworks\nhappy\nnice\nfun\n",
    )?;
    write(
        dir,
        "negative_words.txt",
        "bad\nsad\nawful\nfalse\nmyth\nrisk\nhard\n",
    )?;
    write(dir, "emoticons_pos.txt", ":)\n:-)\n:D\n")?;
    write(dir, "emoticons_neg.txt", ":(\n:-(\n")?;
    write(dir, "medical_domains.txt", "cancer.example.org\nmedinfo.example\n")?;
    let mut reference: Vec<String> = PLAIN_WORDS.iter().map(|s| s.to_string()).collect();
    reference.extend(INGEST_WORDS.iter().map(|s| s.to_string()));
    for tpl in FILLER_TEMPLATES {
        reference.extend(tpl.split_whitespace().map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_string()));
    }
    for extra in [
        "cancer", "cure", "cured", "cures", "remedy", "amazing", "truly", "works", "swear",
        "mother", "fights", "her", "diagnosis", "chemo", "research", "charity", "raises",
        "funding", "awareness", "study", "try", "now", "no", "evidence", "debunked", "myth",
        "false", "may", "help", "prevent", "risk", "says", "selling", "shirts", "event",
        "wheatgrass", "ginger", "baking", "soda", "out",
    ] {
        reference.push(extra.to_string());
    }
    reference.sort();
    reference.dedup();
    reference.retain(|w| !w.is_empty());
    write(dir, "reference_vocab.txt", &(reference.join("\n") + "\n"))?;
    write(
        dir,
        "pos_lexicon.tsv",
        "run\tverb\nwalk\tverb\nplay\tverb\nnice\tadjective\nhappy\tadjective\n\
         great\tadjective\nsimple\tadjective\ndog\tnoun\ncat\tnoun\npark\tnoun\n",
    )?;
    write(
        dir,
        "name_dict.txt",
        &(FIRST_NAMES.join("\n") + "\n"),
    )?;
    let config = "\
posts = posts.jsonl
profiles = profiles.jsonl
annotations_rumor = annotations_rumor.jsonl
annotations_control = annotations_control.jsonl
queries = topic_queries.tsv
category_lexicon = category_lexicon.txt
stopwords = stopwords.txt
positive_words = positive_words.txt
negative_words = negative_words.txt
emoticons_pos = emoticons_pos.txt
emoticons_neg = emoticons_neg.txt
medical_domains = medical_domains.txt
reference_vocab = reference_vocab.txt
pos_lexicon = pos_lexicon.tsv
name_dict = name_dict.txt
out_dir = out
seed = 42
rate_threshold = 24
min_posts = 5
org_threshold = 0.5
lambda_grid = 0.0001,0.001,0.01,0.1
max_bad_fraction = 0.01
as_of = 2024-01-01T00:00:00Z
";
    write(dir, "config.txt", config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_annotations, load_posts, load_profiles};
    use crate::lexicon::load_category_lexicon;
    use crate::querylang::load_topic_queries;

    #[test]
    fn study_generator_deterministic() {
        let a = generate_user_study(3, 3, 5, 9);
        let b = generate_user_study(3, 3, 5, 9);
        assert_eq!(a.len(), 6);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.profile, y.profile);
            assert_eq!(x.posts, y.posts);
        }
    }

    #[test]
    fn study_plants_ingest_signal() {
        let users = generate_user_study(20, 20, 10, 1);
        let lex = study_lexicons();
        let frac = |user: &SynthUser| {
            let mut total = 0.0;
            for p in &user.posts {
                let f = crate::features::post_features(p, &lex);
                total += f.lexicon.get("ingest").copied().unwrap_or(0.0);
            }
            total / user.posts.len() as f64
        };
        let rumor_min = users
            .iter()
            .filter(|u| u.is_rumor)
            .map(|u| frac(u))
            .fold(f64::INFINITY, f64::min);
        let control_max = users
            .iter()
            .filter(|u| !u.is_rumor)
            .map(|u| frac(u))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            rumor_min > control_max,
            "ingest fractions overlap: rumor min {rumor_min}, control max {control_max}"
        );
    }

    #[test]
    fn fixture_files_load_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_pipeline_fixture(dir.path(), 42).unwrap();
        assert!(config.exists());
        let (posts, rep) = load_posts(dir.path().join("posts.jsonl"), 0.01).unwrap();
        assert!(rep.rejected.is_empty());
        assert!(posts.len() > 500, "only {} posts", posts.len());
        let (profiles, rep) = load_profiles(dir.path().join("profiles.jsonl"), 0.01).unwrap();
        assert!(rep.rejected.is_empty());
        assert_eq!(profiles.len(), 40);
        let (ann, rep) = load_annotations(
            dir.path().join("annotations_rumor.jsonl"),
            &["not_cure", "claims_cure", "prevention", "debunking"],
            0.01,
        )
        .unwrap();
        assert!(rep.rejected.is_empty());
        assert!(!ann.is_empty());
        let (ann, rep) = load_annotations(
            dir.path().join("annotations_control.jsonl"),
            &["not_cancer", "cancer", "cancer_personal", "cancer_cure"],
            0.01,
        )
        .unwrap();
        assert!(rep.rejected.is_empty());
        assert!(!ann.is_empty());
        let queries = load_topic_queries(dir.path().join("topic_queries.tsv")).unwrap();
        assert_eq!(queries.len(), 3);
        let (lex, warnings) =
            load_category_lexicon(dir.path().join("category_lexicon.txt")).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(lex.category_count(), 3);
        assert!(lex.category_names().any(|c| c == "LIWC48: ingest"));
    }

    #[test]
    fn fixture_deterministic() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_pipeline_fixture(d1.path(), 42).unwrap();
        write_pipeline_fixture(d2.path(), 42).unwrap();
        for name in ["posts.jsonl", "profiles.jsonl", "annotations_rumor.jsonl"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }

    #[test]
    fn fixture_group_mix_present() {
        let dir = tempfile::tempdir().unwrap();
        write_pipeline_fixture(dir.path(), 42).unwrap();
        let (profiles, _) = load_profiles(dir.path().join("profiles.jsonl"), 0.01).unwrap();
        let ids: Vec<&str> = profiles.iter().map(|p| p.user_id.as_str()).collect();
        for prefix in ["rumor", "ctrlp", "ctrln", "exclc", "exclp", "excld", "excli", "org", "noname", "fast"] {
            assert!(
                ids.iter().any(|i| i.starts_with(prefix)),
                "missing {prefix} users"
            );
        }
    }
}
