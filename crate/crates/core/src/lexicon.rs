//! Category lexicons (literal words plus `stem*` wildcards), plain word
//! lists, and medical-domain URL matching.
//!
//! File formats:
//! - category lexicon: one category per line, `category_name: pat, pat, ...`
//!   (the separator is the last `:` before the pattern list, so category
//!   names like `LIWC48: ingest` are representable)
//! - word list: one entry per line

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Literal(String),
    /// Matches any token starting with the stem ("happ*" matches "happy").
    Stem(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> std::result::Result<Pattern, String> {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err("empty pattern".into());
        }
        let star_positions: Vec<usize> = raw
            .char_indices()
            .filter(|(_, c)| *c == '*')
            .map(|(i, _)| i)
            .collect();
        match star_positions.as_slice() {
            [] => Ok(Pattern::Literal(raw.to_lowercase())),
            [i] if *i == raw.len() - 1 => {
                let stem = &raw[..*i];
                if stem.is_empty() {
                    return Err("bare '*' pattern".into());
                }
                Ok(Pattern::Stem(stem.to_lowercase()))
            }
            _ => Err(format!("'*' only allowed as final character: {raw:?}")),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Literal(w) => token == w,
            Pattern::Stem(s) => token.starts_with(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CategoryLexicon {
    categories: BTreeMap<String, Vec<Pattern>>,
}

impl CategoryLexicon {
    pub fn from_entries<'a>(
        entries: impl IntoIterator<Item = (&'a str, Vec<&'a str>)>,
    ) -> Result<Self> {
        let mut lex = CategoryLexicon::default();
        for (cat, pats) in entries {
            for p in pats {
                let pattern = Pattern::parse(p).map_err(Error::InvalidInput)?;
                lex.categories.entry(cat.to_string()).or_default().push(pattern);
            }
        }
        Ok(lex)
    }

    pub fn category_names(&self) -> impl Iterator<Item = &String> {
        self.categories.keys()
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    /// All categories matched by a case-folded token.
    pub fn match_token(&self, token: &str) -> BTreeSet<&str> {
        self.categories
            .iter()
            .filter(|(_, pats)| pats.iter().any(|p| p.matches(token)))
            .map(|(name, _)| name.as_str())
            .collect()
    }

    /// Per-category fraction of tokens matched. Empty input yields zeros.
    pub fn category_fractions(&self, tokens: &[String]) -> BTreeMap<String, f64> {
        let mut counts: BTreeMap<&str, usize> = self
            .categories
            .keys()
            .map(|k| (k.as_str(), 0))
            .collect();
        for token in tokens {
            for cat in self.match_token(token) {
                *counts.get_mut(cat).unwrap() += 1;
            }
        }
        let total = tokens.len();
        counts
            .into_iter()
            .map(|(cat, c)| {
                let frac = if total == 0 { 0.0 } else { c as f64 / total as f64 };
                (cat.to_string(), frac)
            })
            .collect()
    }
}

/// Loads a category lexicon; duplicate (category, pattern) pairs are
/// deduplicated and returned as warnings, malformed lines are fatal.
pub fn load_category_lexicon(path: impl AsRef<Path>) -> Result<(CategoryLexicon, Vec<String>)> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lex = CategoryLexicon::default();
    let mut warnings = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((name, pats)) = line.rsplit_once(':') else {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: "expected 'category_name: pattern, pattern, ...'".into(),
            });
        };
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: "empty category name".into(),
            });
        }
        if lex.categories.contains_key(name) {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: format!("duplicate category {name:?}"),
            });
        }
        let mut parsed = Vec::new();
        for raw in pats.split(',') {
            if raw.trim().is_empty() {
                continue;
            }
            let pattern = Pattern::parse(raw).map_err(|reason| Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason,
            })?;
            if parsed.contains(&pattern) {
                warnings.push(format!(
                    "{}:{}: duplicate pattern {:?} in category {:?}",
                    path.display(),
                    lineno,
                    raw.trim(),
                    name
                ));
            } else {
                parsed.push(pattern);
            }
        }
        if parsed.is_empty() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: format!("category {name:?} has no patterns"),
            });
        }
        lex.categories.insert(name.to_string(), parsed);
    }
    Ok((lex, warnings))
}

/// A named set of case-folded strings (stopwords, sentiment words,
/// emoticons, medical domains, reference vocabulary).
#[derive(Debug, Clone, Default)]
pub struct WordList {
    pub name: String,
    pub entries: HashSet<String>,
}

impl WordList {
    pub fn new(name: impl Into<String>, entries: impl IntoIterator<Item = impl Into<String>>) -> Self {
        WordList {
            name: name.into(),
            entries: entries.into_iter().map(|e| e.into().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains(token)
    }
}

/// Loads a one-entry-per-line word list, case-folding every entry.
pub fn load_word_list(path: impl AsRef<Path>, name: &str) -> Result<WordList> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let entries: HashSet<String> = content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect();
    Ok(WordList {
        name: name.to_string(),
        entries,
    })
}

/// Registrable domain of a URL: scheme and leading `www.` stripped, host
/// taken up to the first `/`, `?`, `#`, or `:`.
pub fn registrable_domain(url: &str) -> Option<String> {
    let lower = url.trim().to_lowercase();
    let rest = lower
        .strip_prefix("https://")
        .or_else(|| lower.strip_prefix("http://"))
        .unwrap_or(&lower);
    let rest = rest.strip_prefix("www.").unwrap_or(rest);
    let host: &str = rest
        .split(|c| c == '/' || c == '?' || c == '#' || c == ':')
        .next()
        .unwrap_or("");
    if host.is_empty() {
        None
    } else {
        Some(host.to_string())
    }
}

/// True when the URL's registrable domain is listed as medical.
pub fn is_medical_url(url: &str, medical_domains: &WordList) -> bool {
    registrable_domain(url).is_some_and(|d| medical_domains.contains(&d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "{content}").unwrap();
        f
    }

    #[test]
    fn loads_category_line() {
        let f = write_tmp("posemo: good, great, happ*\n");
        let (lex, warnings) = load_category_lexicon(f.path()).unwrap();
        assert_eq!(lex.category_count(), 1);
        assert!(warnings.is_empty());
        assert_eq!(lex.match_token("good").len(), 1);
    }

    #[test]
    fn category_name_with_colon() {
        let f = write_tmp("LIWC48: ingest: eat*, juice, food\n");
        let (lex, _) = load_category_lexicon(f.path()).unwrap();
        assert_eq!(lex.category_names().next().unwrap(), "LIWC48: ingest");
        assert!(lex.match_token("eating").contains("LIWC48: ingest"));
    }

    #[test]
    fn duplicate_pattern_warns_and_dedupes() {
        let f = write_tmp("posemo: good, good\n");
        let (lex, warnings) = load_category_lexicon(f.path()).unwrap();
        assert_eq!(warnings.len(), 1);
        let fr = lex.category_fractions(&["good".into()]);
        assert!((fr["posemo"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_wildcard_is_fatal() {
        let f = write_tmp("bad: he*llo\n");
        let err = load_category_lexicon(f.path()).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn stem_and_literal_semantics() {
        let lex = CategoryLexicon::from_entries([("posemo", vec!["good", "great", "happ*"])]).unwrap();
        assert_eq!(lex.match_token("happy").into_iter().collect::<Vec<_>>(), vec!["posemo"]);
        // stem over-matching is by design
        assert_eq!(lex.match_token("happen").into_iter().collect::<Vec<_>>(), vec!["posemo"]);
        assert!(lex.match_token("sad").is_empty());
    }

    #[test]
    fn fractions() {
        let lex = CategoryLexicon::from_entries([("posemo", vec!["happ*"])]).unwrap();
        let toks: Vec<String> = ["happy", "happy", "sad"].iter().map(|s| s.to_string()).collect();
        let fr = lex.category_fractions(&toks);
        assert!((fr["posemo"] - 2.0 / 3.0).abs() < 1e-12);

        let fr = lex.category_fractions(&[]);
        assert_eq!(fr["posemo"], 0.0);

        let toks: Vec<String> = vec!["happy".into(), "happiness".into()];
        let fr = lex.category_fractions(&toks);
        assert!((fr["posemo"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractions_independent_of_pattern_order() {
        let a = CategoryLexicon::from_entries([("c", vec!["good", "happ*"])]).unwrap();
        let b = CategoryLexicon::from_entries([("c", vec!["happ*", "good"])]).unwrap();
        let toks: Vec<String> = vec!["good".into(), "happy".into(), "other".into()];
        assert_eq!(a.category_fractions(&toks), b.category_fractions(&toks));
    }

    #[test]
    fn overlapping_categories_both_match() {
        let lex = CategoryLexicon::from_entries([
            ("affect", vec!["happ*", "sad"]),
            ("posemo", vec!["happ*"]),
        ])
        .unwrap();
        let matched = lex.match_token("happy");
        assert_eq!(matched.len(), 2);
    }

    #[test]
    fn registrable_domains() {
        assert_eq!(registrable_domain("http://www.cancer.gov/a/b"), Some("cancer.gov".into()));
        assert_eq!(registrable_domain("https://Mayo.Org"), Some("mayo.org".into()));
        assert_eq!(registrable_domain("www.nih.gov:443/x"), Some("nih.gov".into()));
        assert_eq!(registrable_domain("cancer.gov?q=1"), Some("cancer.gov".into()));
        assert_eq!(registrable_domain(""), None);
    }

    #[test]
    fn medical_url_matching() {
        let list = WordList::new("medical", ["cancer.gov", "mayo.org"]);
        assert!(is_medical_url("http://www.cancer.gov/page", &list));
        assert!(!is_medical_url("http://x.co", &list));
        // equality, not suffix matching
        assert!(!is_medical_url("http://fake-cancer.gov.evil.com", &list));
    }
}
