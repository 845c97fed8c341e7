//! Flat key-value pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};

/// Fully resolved pipeline configuration. All paths are absolute-ized
/// against the config file's directory at load time.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub posts: PathBuf,
    pub profiles: PathBuf,
    pub annotations_rumor: PathBuf,
    pub annotations_control: PathBuf,
    pub queries: PathBuf,
    pub category_lexicon: PathBuf,
    pub stopwords: PathBuf,
    pub positive_words: PathBuf,
    pub negative_words: PathBuf,
    pub emoticons_pos: PathBuf,
    pub emoticons_neg: PathBuf,
    pub medical_domains: PathBuf,
    pub reference_vocab: PathBuf,
    pub pos_lexicon: PathBuf,
    pub name_dict: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub rate_threshold: f64,
    pub min_posts: usize,
    pub org_threshold: f64,
    pub lambda_grid: Vec<f64>,
    pub max_bad_fraction: f64,
    pub as_of: DateTime<Utc>,
}

fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got {line:?}", i + 1);
        };
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            bail!("config line {}: duplicate key {:?}", i + 1, k.trim());
        }
    }
    Ok(out)
}

impl PipelineConfig {
    pub fn load(
        path: &Path,
        seed_override: Option<u64>,
        out_override: Option<&Path>,
    ) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut kv = parse_flat(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();

        fn take(kv: &mut BTreeMap<String, String>, key: &str) -> Result<String> {
            kv.remove(key).with_context(|| format!("config key {key:?} missing"))
        }
        let resolve = |base: &Path, v: String| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let posts = resolve(&base, take(&mut kv, "posts")?);
        let profiles = resolve(&base, take(&mut kv, "profiles")?);
        let annotations_rumor = resolve(&base, take(&mut kv, "annotations_rumor")?);
        let annotations_control = resolve(&base, take(&mut kv, "annotations_control")?);
        let queries = resolve(&base, take(&mut kv, "queries")?);
        let category_lexicon = resolve(&base, take(&mut kv, "category_lexicon")?);
        let stopwords = resolve(&base, take(&mut kv, "stopwords")?);
        let positive_words = resolve(&base, take(&mut kv, "positive_words")?);
        let negative_words = resolve(&base, take(&mut kv, "negative_words")?);
        let emoticons_pos = resolve(&base, take(&mut kv, "emoticons_pos")?);
        let emoticons_neg = resolve(&base, take(&mut kv, "emoticons_neg")?);
        let medical_domains = resolve(&base, take(&mut kv, "medical_domains")?);
        let reference_vocab = resolve(&base, take(&mut kv, "reference_vocab")?);
        let pos_lexicon = resolve(&base, take(&mut kv, "pos_lexicon")?);
        let name_dict = resolve(&base, take(&mut kv, "name_dict")?);
        let out_dir = match out_override {
            Some(p) => p.to_path_buf(),
            None => resolve(&base, take(&mut kv, "out_dir")?),
        };
        if out_override.is_some() {
            kv.remove("out_dir");
        }

        let seed = match seed_override {
            Some(s) => {
                kv.remove("seed");
                s
            }
            None => take(&mut kv, "seed")?.parse().context("config key `seed`")?,
        };
        let rate_threshold: f64 = take(&mut kv, "rate_threshold")?.parse().context("rate_threshold")?;
        let min_posts: usize = take(&mut kv, "min_posts")?.parse().context("min_posts")?;
        let org_threshold: f64 = take(&mut kv, "org_threshold")?.parse().context("org_threshold")?;
        let lambda_grid: Vec<f64> = take(&mut kv, "lambda_grid")?
            .split(',')
            .map(|s| s.trim().parse::<f64>().context("lambda_grid"))
            .collect::<Result<_>>()?;
        let max_bad_fraction: f64 =
            take(&mut kv, "max_bad_fraction")?.parse().context("max_bad_fraction")?;
        let as_of: DateTime<Utc> = take(&mut kv, "as_of")?
            .parse::<DateTime<Utc>>()
            .context("as_of (RFC 3339)")?;

        if let Some(extra) = kv.keys().next() {
            bail!("unknown config key {extra:?}");
        }
        if lambda_grid.is_empty() {
            bail!("lambda_grid must be non-empty");
        }

        let cfg = PipelineConfig {
            posts,
            profiles,
            annotations_rumor,
            annotations_control,
            queries,
            category_lexicon,
            stopwords,
            positive_words,
            negative_words,
            emoticons_pos,
            emoticons_neg,
            medical_domains,
            reference_vocab,
            pos_lexicon,
            name_dict,
            out_dir,
            seed,
            rate_threshold,
            min_posts,
            org_threshold,
            lambda_grid,
            max_bad_fraction,
            as_of,
        };
        for (name, p) in cfg.input_paths() {
            if !p.exists() {
                bail!("config key {name:?}: path {} does not exist", p.display());
            }
        }
        Ok(cfg)
    }

    /// Every input path, keyed by its config name.
    pub fn input_paths(&self) -> Vec<(&'static str, &Path)> {
        vec![
            ("posts", &self.posts),
            ("profiles", &self.profiles),
            ("annotations_rumor", &self.annotations_rumor),
            ("annotations_control", &self.annotations_control),
            ("queries", &self.queries),
            ("category_lexicon", &self.category_lexicon),
            ("stopwords", &self.stopwords),
            ("positive_words", &self.positive_words),
            ("negative_words", &self.negative_words),
            ("emoticons_pos", &self.emoticons_pos),
            ("emoticons_neg", &self.emoticons_neg),
            ("medical_domains", &self.medical_domains),
            ("reference_vocab", &self.reference_vocab),
            ("pos_lexicon", &self.pos_lexicon),
            ("name_dict", &self.name_dict),
        ]
    }

    /// A stable digest over the effective settings (out_dir excluded, so
    /// relocating outputs does not invalidate manifests).
    pub fn digest(&self) -> String {
        let mut lines = Vec::new();
        for (name, p) in self.input_paths() {
            lines.push(format!(
                "{name} = {}",
                crate::manifest::sha256_file(p).unwrap_or_else(|_| "unreadable".into())
            ));
        }
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("rate_threshold = {}", self.rate_threshold));
        lines.push(format!("min_posts = {}", self.min_posts));
        lines.push(format!("org_threshold = {}", self.org_threshold));
        lines.push(format!(
            "lambda_grid = {}",
            self.lambda_grid
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        lines.push(format!("max_bad_fraction = {}", self.max_bad_fraction));
        lines.push(format!("as_of = {}", self.as_of.to_rfc3339()));
        crate::manifest::sha256_bytes(lines.join("\n").as_bytes())
    }
}
