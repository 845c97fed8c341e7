//! Tokenization and per-post / per-user feature extraction.
//!
//! Per-post features are averaged over a user's pre-rumor window to produce
//! a [`FeatureVector`]; the feature registry fixes name order so exported
//! matrices are column-stable across runs.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Post, Profile};
use crate::lexicon::{is_medical_url, CategoryLexicon, WordList};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Mention,
    Hashtag,
    Url,
    Emoticon,
    Punctuation,
    Number,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub original: String,
    pub folded: String,
}

impl Token {
    fn new(kind: TokenKind, original: &str) -> Self {
        Token {
            kind,
            original: original.to_string(),
            folded: original.to_lowercase(),
        }
    }
}

fn starts_with_ci(haystack: &[char], pos: usize, needle: &str) -> bool {
    let mut i = pos;
    for nc in needle.chars() {
        match haystack.get(i) {
            Some(c) if c.to_lowercase().eq(nc.to_lowercase()) => i += 1,
            _ => return false,
        }
    }
    true
}

fn is_handle_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Deterministic tweet tokenizer.
///
/// Mentions are `@` + word, hashtags `#` + word, URLs start with a scheme
/// prefix or `www.`, emoticons come from the supplied list (longest match),
/// numbers are digit runs with optional internal separators, remaining
/// alphabetic runs are words, everything else is single-character
/// punctuation.
pub fn tokenize(text: &str, emoticons: &WordList) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    // longest emoticon first
    let mut emo: Vec<&String> = emoticons.entries.iter().collect();
    emo.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if starts_with_ci(&chars, i, "http://")
            || starts_with_ci(&chars, i, "https://")
            || starts_with_ci(&chars, i, "www.")
        {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            tokens.push(Token::new(TokenKind::Url, &s));
            continue;
        }
        if (c == '@' || c == '#') && i + 1 < chars.len() && is_handle_char(chars[i + 1]) {
            let start = i;
            i += 1;
            while i < chars.len() && is_handle_char(chars[i]) {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let kind = if c == '@' { TokenKind::Mention } else { TokenKind::Hashtag };
            tokens.push(Token::new(kind, &s));
            continue;
        }
        if let Some(m) = emo.iter().find(|e| {
            let ec: Vec<char> = e.chars().collect();
            chars[i..].starts_with(&ec)
        }) {
            tokens.push(Token::new(TokenKind::Emoticon, m));
            i += m.chars().count();
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            i += 1;
            while i < chars.len() {
                let c = chars[i];
                if c.is_ascii_digit() {
                    i += 1;
                } else if (c == '.' || c == ',' || c == ':')
                    && i + 1 < chars.len()
                    && chars[i + 1].is_ascii_digit()
                {
                    i += 2;
                } else {
                    break;
                }
            }
            let s: String = chars[start..i].iter().collect();
            tokens.push(Token::new(TokenKind::Number, &s));
            continue;
        }
        if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_alphabetic() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            tokens.push(Token::new(TokenKind::Word, &s));
            continue;
        }
        tokens.push(Token::new(TokenKind::Punctuation, &c.to_string()));
        i += 1;
    }
    tokens
}

/// Heuristic syllable count: maximal vowel groups (a,e,i,o,u,y), minus one
/// for a terminal silent 'e' (kept for consonant + "le"), floored at 1.
pub fn count_syllables(word: &str) -> usize {
    let w: Vec<char> = word.to_lowercase().chars().collect();
    if w.is_empty() {
        return 1;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut in_group = false;
    for &c in &w {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
                in_group = true;
            }
        } else {
            in_group = false;
        }
    }
    let n = w.len();
    let silent_e = n >= 2
        && w[n - 1] == 'e'
        && !is_vowel(w[n - 2])
        && !(n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]));
    if silent_e && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReadabilityScores {
    pub automated: f64,
    pub flesch_kincaid: f64,
    pub gunning_fog: f64,
    pub smog: f64,
    /// Set when word or sentence counts were zero and scores forced to 0.
    pub degenerate: bool,
}

/// The four readability formulas over pre-tokenized counts.
///
/// `complex_count` is the number of words with at least three syllables.
pub fn readability(
    word_count: usize,
    sentence_count: usize,
    letter_count: usize,
    complex_count: usize,
    syllable_total: usize,
) -> ReadabilityScores {
    if word_count == 0 || sentence_count == 0 {
        return ReadabilityScores {
            degenerate: true,
            ..Default::default()
        };
    }
    let words = word_count as f64;
    let sentences = sentence_count as f64;
    let letters = letter_count as f64;
    let complex = complex_count as f64;
    let syllables = syllable_total as f64;
    ReadabilityScores {
        automated: 4.71 * (letters / words) + 0.5 * (words / sentences) - 21.43,
        flesch_kincaid: 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59,
        gunning_fog: 0.4 * (words / sentences + 100.0 * complex / words),
        smog: 1.0430 * (complex * 30.0 / sentences).sqrt() + 3.1291,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Pronoun,
}

impl PosTag {
    pub fn parse(s: &str) -> Option<PosTag> {
        match s.trim().to_lowercase().as_str() {
            "noun" => Some(PosTag::Noun),
            "verb" => Some(PosTag::Verb),
            "adjective" | "adj" => Some(PosTag::Adjective),
            "adverb" | "adv" => Some(PosTag::Adverb),
            "pronoun" => Some(PosTag::Pronoun),
            _ => None,
        }
    }
}

/// Word -> part-of-speech lookup with suffix fallback rules
/// (-ly adverb, -ing/-ed verb, else noun).
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: BTreeMap<String, PosTag>,
}

impl PosLexicon {
    pub fn from_entries(entries: impl IntoIterator<Item = (impl Into<String>, PosTag)>) -> Self {
        PosLexicon {
            entries: entries
                .into_iter()
                .map(|(w, t)| (w.into().to_lowercase(), t))
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut entries = BTreeMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, tag)) = line.split_once('\t') else {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: "expected word<TAB>tag".into(),
                });
            };
            let Some(tag) = PosTag::parse(tag) else {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: format!("unknown tag {tag:?}"),
                });
            };
            entries.insert(word.trim().to_lowercase(), tag);
        }
        Ok(PosLexicon { entries })
    }

    pub fn tag(&self, folded_word: &str) -> PosTag {
        if let Some(&t) = self.entries.get(folded_word) {
            return t;
        }
        if folded_word.ends_with("ly") {
            PosTag::Adverb
        } else if folded_word.ends_with("ing") || folded_word.ends_with("ed") {
            PosTag::Verb
        } else {
            PosTag::Noun
        }
    }
}

const FIRST_PERSON: &[&str] = &[
    "i", "we", "me", "us", "my", "our", "mine", "ours", "myself", "ourselves",
];
const SECOND_PERSON: &[&str] = &["you", "your", "yours", "yourself", "yourselves"];
const THIRD_PERSON: &[&str] = &[
    "he", "she", "it", "they", "him", "her", "them", "his", "hers", "its", "their", "theirs",
    "himself", "herself", "itself", "themselves",
];

pub fn pronoun_person(folded_word: &str) -> Option<u8> {
    if FIRST_PERSON.contains(&folded_word) {
        Some(1)
    } else if SECOND_PERSON.contains(&folded_word) {
        Some(2)
    } else if THIRD_PERSON.contains(&folded_word) {
        Some(3)
    } else {
        None
    }
}

/// Everything post_features needs besides the post itself.
#[derive(Debug, Clone, Default)]
pub struct FeatureLexicons {
    pub categories: CategoryLexicon,
    pub positive: WordList,
    pub negative: WordList,
    pub emoticons_pos: WordList,
    pub emoticons_neg: WordList,
    pub reference_vocab: WordList,
    pub medical_domains: WordList,
    pub pos_lexicon: PosLexicon,
}

impl FeatureLexicons {
    pub fn all_emoticons(&self) -> WordList {
        let mut entries = self.emoticons_pos.entries.clone();
        entries.extend(self.emoticons_neg.entries.iter().cloned());
        WordList {
            name: "emoticons".into(),
            entries,
        }
    }
}

/// Per-post (tweet-scope) feature values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PostFeatures {
    pub is_retweet: f64,
    pub has_mentions: f64,
    pub has_hashtag: f64,
    pub url_count: f64,
    pub hashtag_count: f64,
    pub mention_count: f64,
    pub word_count: f64,
    pub char_count: f64,
    pub upper_count: f64,
    pub sentence_count: f64,
    pub question_mark: f64,
    pub exclamation_mark: f64,
    pub pct_upper: f64,
    pub pct_upper_lower: f64,
    pub multiple_ques_excl: f64,
    pub noun_count: f64,
    pub adverb_count: f64,
    pub adjective_count: f64,
    pub verb_count: f64,
    pub pronoun_count: f64,
    pub has_pronoun_1: f64,
    pub has_pronoun_2: f64,
    pub has_pronoun_3: f64,
    pub sentiment_score: f64,
    pub positive_words: f64,
    pub negative_words: f64,
    pub emoticons_pos: f64,
    pub emoticons_neg: f64,
    pub complex_words: f64,
    pub readability_automated: f64,
    pub readability_flesch_kincaid: f64,
    pub readability_gunning: f64,
    pub readability_smog: f64,
    pub oov_count: f64,
    pub avg_syllables: f64,
    pub medical_domain_count: f64,
    /// One fraction per lexicon category, keyed by category name.
    pub lexicon: BTreeMap<String, f64>,
}

/// Tweet-scope feature names, in registry order (lexicon categories follow).
pub const TWEET_FEATURE_NAMES: &[&str] = &[
    "is_retweet",
    "has_mentions",
    "has_hashtag",
    "url_count",
    "hashtag_count",
    "mention_count",
    "word_count",
    "char_count",
    "upper_count",
    "sentence_count",
    "question_mark",
    "exclamation_mark",
    "pct_upper",
    "pct_upper_lower",
    "multiple_ques_excl",
    "noun_count",
    "adverb_count",
    "adjective_count",
    "verb_count",
    "pronoun_count",
    "has_pronoun_1",
    "has_pronoun_2",
    "has_pronoun_3",
    "sentiment_score",
    "positive_words",
    "negative_words",
    "emoticons_pos",
    "emoticons_neg",
    "complex_words",
    "readability_automated",
    "readability_flesch_kincaid",
    "readability_gunning",
    "readability_smog",
    "oov_count",
    "avg_syllables",
    "medical_domain_count",
];

/// User-scope feature names, appended after the lexicon categories.
pub const USER_FEATURE_NAMES: &[&str] = &[
    "following",
    "followers",
    "statuses_count",
    "account_age_days",
    "verified",
    "n_cancer_tweets",
    "interval_entropy",
];

impl PostFeatures {
    fn tweet_scope_pairs(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("is_retweet", self.is_retweet),
            ("has_mentions", self.has_mentions),
            ("has_hashtag", self.has_hashtag),
            ("url_count", self.url_count),
            ("hashtag_count", self.hashtag_count),
            ("mention_count", self.mention_count),
            ("word_count", self.word_count),
            ("char_count", self.char_count),
            ("upper_count", self.upper_count),
            ("sentence_count", self.sentence_count),
            ("question_mark", self.question_mark),
            ("exclamation_mark", self.exclamation_mark),
            ("pct_upper", self.pct_upper),
            ("pct_upper_lower", self.pct_upper_lower),
            ("multiple_ques_excl", self.multiple_ques_excl),
            ("noun_count", self.noun_count),
            ("adverb_count", self.adverb_count),
            ("adjective_count", self.adjective_count),
            ("verb_count", self.verb_count),
            ("pronoun_count", self.pronoun_count),
            ("has_pronoun_1", self.has_pronoun_1),
            ("has_pronoun_2", self.has_pronoun_2),
            ("has_pronoun_3", self.has_pronoun_3),
            ("sentiment_score", self.sentiment_score),
            ("positive_words", self.positive_words),
            ("negative_words", self.negative_words),
            ("emoticons_pos", self.emoticons_pos),
            ("emoticons_neg", self.emoticons_neg),
            ("complex_words", self.complex_words),
            ("readability_automated", self.readability_automated),
            ("readability_flesch_kincaid", self.readability_flesch_kincaid),
            ("readability_gunning", self.readability_gunning),
            ("readability_smog", self.readability_smog),
            ("oov_count", self.oov_count),
            ("avg_syllables", self.avg_syllables),
            ("medical_domain_count", self.medical_domain_count),
        ]
    }
}

/// Computes every tweet-scope feature for one post.
///
/// Sentiment score is the normalized difference
/// `(positive - negative) / (word_count + 1)`. URL count comes from URL
/// tokens in the text; medical-domain matching additionally considers the
/// post's `urls` entity list (deduplicated against text URLs).
pub fn post_features(post: &Post, lex: &FeatureLexicons) -> PostFeatures {
    let tokens = tokenize(&post.text, &lex.all_emoticons());
    let mut f = PostFeatures::default();

    let words: Vec<&Token> = tokens.iter().filter(|t| t.kind == TokenKind::Word).collect();
    let word_folded: Vec<String> = words.iter().map(|t| t.folded.clone()).collect();

    f.word_count = words.len() as f64;
    f.char_count = post.text.chars().count() as f64;

    let upper = post.text.chars().filter(|c| c.is_uppercase()).count();
    let lower = post.text.chars().filter(|c| c.is_lowercase()).count();
    f.upper_count = upper as f64;
    f.pct_upper = if f.char_count > 0.0 {
        100.0 * upper as f64 / f.char_count
    } else {
        0.0
    };
    f.pct_upper_lower = if upper + lower > 0 {
        100.0 * upper as f64 / (upper + lower) as f64
    } else {
        0.0
    };

    let n_q = post.text.chars().filter(|&c| c == '?').count();
    let n_e = post.text.chars().filter(|&c| c == '!').count();
    f.question_mark = (n_q > 0) as u8 as f64;
    f.exclamation_mark = (n_e > 0) as u8 as f64;
    f.multiple_ques_excl = (n_q + n_e >= 2) as u8 as f64;

    // sentence = maximal run of terminators; default to one sentence of text
    let mut sentences = 0usize;
    let mut in_term = false;
    for c in post.text.chars() {
        if c == '.' || c == '!' || c == '?' {
            if !in_term {
                sentences += 1;
                in_term = true;
            }
        } else {
            in_term = false;
        }
    }
    if sentences == 0 && !words.is_empty() {
        sentences = 1;
    }
    f.sentence_count = sentences as f64;

    for t in &tokens {
        match t.kind {
            TokenKind::Url => f.url_count += 1.0,
            TokenKind::Hashtag => f.hashtag_count += 1.0,
            TokenKind::Mention => f.mention_count += 1.0,
            TokenKind::Emoticon => {
                if lex.emoticons_pos.contains(&t.folded) {
                    f.emoticons_pos += 1.0;
                }
                if lex.emoticons_neg.contains(&t.folded) {
                    f.emoticons_neg += 1.0;
                }
            }
            _ => {}
        }
    }
    f.has_mentions = (f.mention_count > 0.0) as u8 as f64;
    f.has_hashtag = (f.hashtag_count > 0.0) as u8 as f64;
    f.is_retweet = (post.is_retweet || word_folded.first().map(String::as_str) == Some("rt")) as u8 as f64;

    let mut syllable_total = 0usize;
    let mut letters = 0usize;
    for w in &words {
        syllable_total += count_syllables(&w.folded);
        letters += w.original.chars().filter(|c| c.is_alphabetic()).count();
        if count_syllables(&w.folded) >= 3 {
            f.complex_words += 1.0;
        }
        match pronoun_person(&w.folded) {
            Some(1) => {
                f.pronoun_count += 1.0;
                f.has_pronoun_1 = 1.0;
            }
            Some(2) => {
                f.pronoun_count += 1.0;
                f.has_pronoun_2 = 1.0;
            }
            Some(3) => {
                f.pronoun_count += 1.0;
                f.has_pronoun_3 = 1.0;
            }
            _ => match lex.pos_lexicon.tag(&w.folded) {
                PosTag::Noun => f.noun_count += 1.0,
                PosTag::Verb => f.verb_count += 1.0,
                PosTag::Adjective => f.adjective_count += 1.0,
                PosTag::Adverb => f.adverb_count += 1.0,
                PosTag::Pronoun => f.pronoun_count += 1.0,
            },
        }
        if lex.positive.contains(&w.folded) {
            f.positive_words += 1.0;
        }
        if lex.negative.contains(&w.folded) {
            f.negative_words += 1.0;
        }
        if !lex.reference_vocab.contains(&w.folded) {
            f.oov_count += 1.0;
        }
    }
    f.sentiment_score = (f.positive_words - f.negative_words) / (f.word_count + 1.0);
    f.avg_syllables = if words.is_empty() {
        0.0
    } else {
        syllable_total as f64 / words.len() as f64
    };

    let scores = readability(
        words.len(),
        if words.is_empty() { 0 } else { sentences },
        letters,
        f.complex_words as usize,
        syllable_total,
    );
    f.readability_automated = scores.automated;
    f.readability_flesch_kincaid = scores.flesch_kincaid;
    f.readability_gunning = scores.gunning_fog;
    f.readability_smog = scores.smog;

    let mut all_urls: Vec<String> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Url)
        .map(|t| t.original.clone())
        .collect();
    for u in &post.urls {
        if !all_urls.contains(u) {
            all_urls.push(u.clone());
        }
    }
    f.medical_domain_count = all_urls
        .iter()
        .filter(|u| is_medical_url(u, &lex.medical_domains))
        .count() as f64;

    f.lexicon = lex.categories.category_fractions(&word_folded);
    f
}

/// Shannon entropy (natural log) of hour-binned gaps between consecutive
/// posts. Fewer than two timestamps yields 0; unsorted input is an error.
pub fn interval_entropy(timestamps: &[DateTime<Utc>]) -> Result<f64> {
    if timestamps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("timestamps must be sorted".into()));
    }
    if timestamps.len() < 2 {
        return Ok(0.0);
    }
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for w in timestamps.windows(2) {
        let secs = (w[1] - w[0]).num_seconds();
        let bin = secs.div_euclid(3600);
        *bins.entry(bin).or_default() += 1;
    }
    let total = (timestamps.len() - 1) as f64;
    let mut h = 0.0;
    for &count in bins.values() {
        let p = count as f64 / total;
        h -= p * p.ln();
    }
    Ok(h)
}

/// Posts strictly before the cutoff, or `None` when the window is too small.
pub fn pre_rumor_window<'a>(
    posts_sorted: &[&'a Post],
    cutoff: DateTime<Utc>,
    min_posts: usize,
) -> Option<Vec<&'a Post>> {
    let window: Vec<&Post> = posts_sorted
        .iter()
        .copied()
        .filter(|p| p.created_at < cutoff)
        .collect();
    if window.len() < min_posts {
        None
    } else {
        Some(window)
    }
}

/// Draws control-group cutoff dates from a normal distribution fitted to
/// the rumor users' first-post times, clamped to the corpus time span.
pub fn sample_control_cutoffs(
    rumor_first_post_times: &[DateTime<Utc>],
    n_control: usize,
    seed: u64,
    span: (DateTime<Utc>, DateTime<Utc>),
) -> Result<Vec<DateTime<Utc>>> {
    if rumor_first_post_times.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two rumor first-post times to fit a distribution".into(),
        ));
    }
    let xs: Vec<f64> = rumor_first_post_times
        .iter()
        .map(|t| t.timestamp() as f64)
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();

    let lo = span.0.timestamp() as f64;
    let hi = span.1.timestamp() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_control);
    if sd == 0.0 {
        for _ in 0..n_control {
            out.push(mean.clamp(lo, hi));
        }
    } else {
        let normal = Normal::new(mean, sd)
            .map_err(|e| Error::InvalidInput(format!("normal fit failed: {e}")))?;
        for _ in 0..n_control {
            out.push(normal.sample(&mut rng).clamp(lo, hi));
        }
    }
    Ok(out
        .into_iter()
        .map(|s| Utc.timestamp_opt(s as i64, 0).unwrap())
        .collect())
}

/// Ordered list of all feature names: tweet scope, then lexicon categories,
/// then user scope.
pub fn feature_registry(categories: &CategoryLexicon) -> Vec<String> {
    let mut names: Vec<String> = TWEET_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    names.extend(categories.category_names().cloned());
    names.extend(USER_FEATURE_NAMES.iter().map(|s| s.to_string()));
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub user_id: String,
    pub values: BTreeMap<String, f64>,
    pub n_posts_aggregated: usize,
}

impl FeatureVector {
    /// Values in registry order; missing names are an error.
    pub fn row(&self, registry: &[String]) -> Result<Vec<f64>> {
        registry
            .iter()
            .map(|name| {
                self.values
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("feature {name:?} missing for {}", self.user_id)))
            })
            .collect()
    }
}

/// Averages tweet-scope features over the window and attaches user-scope
/// features. `account_age_days` is whole days relative to `as_of`.
pub fn user_vector(
    profile: &Profile,
    window: &[&Post],
    lex: &FeatureLexicons,
    n_cancer_tweets: usize,
    as_of: DateTime<Utc>,
) -> Result<FeatureVector> {
    if window.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty window for user {}",
            profile.user_id
        )));
    }
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for post in window {
        let pf = post_features(post, lex);
        for (name, v) in pf.tweet_scope_pairs() {
            *sums.entry(name.to_string()).or_default() += v;
        }
        for (name, v) in &pf.lexicon {
            *sums.entry(name.clone()).or_default() += v;
        }
    }
    let n = window.len() as f64;
    let mut values: BTreeMap<String, f64> = sums.into_iter().map(|(k, v)| (k, v / n)).collect();

    values.insert("following".into(), profile.followees as f64);
    values.insert("followers".into(), profile.followers as f64);
    values.insert("statuses_count".into(), profile.statuses_count as f64);
    values.insert(
        "account_age_days".into(),
        (as_of - profile.account_created_at).num_days() as f64,
    );
    values.insert("verified".into(), profile.verified as u8 as f64);
    values.insert("n_cancer_tweets".into(), n_cancer_tweets as f64);
    let mut times: Vec<DateTime<Utc>> = window.iter().map(|p| p.created_at).collect();
    times.sort();
    values.insert("interval_entropy".into(), interval_entropy(&times)?);

    Ok(FeatureVector {
        user_id: profile.user_id.clone(),
        values,
        n_posts_aggregated: window.len(),
    })
}

/// Writes a delimited feature matrix: header row in registry order, then
/// one row per user (user_id first).
pub fn write_feature_matrix(
    path: impl AsRef<Path>,
    registry: &[String],
    vectors: &[FeatureVector],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("user_id");
    for name in registry {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for v in vectors {
        out.push_str(&v.user_id);
        for x in v.row(registry)? {
            out.push('\t');
            // round-trippable shortest representation
            out.push_str(&format!("{x:?}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a matrix written by [`write_feature_matrix`]. Returns the header
/// registry and the rows.
pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<FeatureVector>)> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = content.lines();
    let header = lines.next().ok_or_else(|| Error::MalformedLine {
        path: path.to_path_buf(),
        line: 1,
        reason: "empty matrix file".into(),
    })?;
    let registry: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
    let mut vectors = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let user_id = fields.next().unwrap_or("").to_string();
        let mut values = BTreeMap::new();
        for (name, raw) in registry.iter().zip(fields) {
            let v: f64 = raw.parse().map_err(|_| Error::MalformedLine {
                path: path.to_path_buf(),
                line: i + 2,
                reason: format!("bad number {raw:?}"),
            })?;
            values.insert(name.clone(), v);
        }
        if values.len() != registry.len() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: i + 2,
                reason: "row shorter than header".into(),
            });
        }
        vectors.push(FeatureVector {
            user_id,
            values,
            n_posts_aggregated: 0,
        });
    }
    Ok((registry, vectors))
}
