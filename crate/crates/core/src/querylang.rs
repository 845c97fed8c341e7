//! Boolean topic-query grammar and evaluation against post text.
//!
//! Grammar:
//!
//! ```text
//! EXPR   := OR_EXPR
//! OR_EXPR  := AND_EXPR (OR AND_EXPR)*
//! AND_EXPR := PRIMARY (AND PRIMARY)*
//! PRIMARY  := '(' EXPR ')' | PHRASE
//! PHRASE   := quoted string | bare word
//! ```
//!
//! `OR` binds looser than `AND`; keywords are case-sensitive uppercase, and
//! adjacency is never an implicit `AND`. Phrase matching is case-insensitive
//! and token-boundary aware: `juice` does not match `juicing`, while
//! punctuation inside a phrase literal (`Squalus:acanthias`) is matched
//! verbatim after case folding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::corpus::PostCollection;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryAst {
    Phrase(String),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicQuery {
    pub topic_id: u32,
    pub topic_name: String,
    pub ast: QueryAst,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Phrase(String),
}

fn lex(input: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            tokens.push((i, Token::LParen));
            i += 1;
        } else if c == ')' {
            tokens.push((i, Token::RParen));
            i += 1;
        } else if c == '"' {
            let start = i;
            i += 1;
            let mut end = None;
            for j in i..bytes.len() {
                if bytes[j] as char == '"' {
                    end = Some(j);
                    break;
                }
            }
            let Some(end) = end else {
                return Err(Error::QueryParse {
                    offset: start,
                    message: "unbalanced quote".into(),
                });
            };
            let literal = input[i..end].trim();
            if literal.is_empty() {
                return Err(Error::QueryParse {
                    offset: start,
                    message: "empty phrase".into(),
                });
            }
            tokens.push((start, Token::Phrase(literal.to_string())));
            i = end + 1;
        } else {
            let start = i;
            while i < bytes.len() {
                let c = bytes[i] as char;
                if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                    break;
                }
                i += 1;
            }
            let word = &input[start..i];
            match word {
                "AND" => tokens.push((start, Token::And)),
                "OR" => tokens.push((start, Token::Or)),
                _ => tokens.push((start, Token::Phrase(word.to_string()))),
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [(usize, Token)],
    pos: usize,
    input_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(o, _)| *o)
            .unwrap_or(self.input_len)
    }

    fn parse_expr(&mut self) -> Result<QueryAst> {
        let mut children = vec![self.parse_and()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            children.push(self.parse_and()?);
        }
        Ok(flatten_or(children))
    }

    fn parse_and(&mut self) -> Result<QueryAst> {
        let mut children = vec![self.parse_primary()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            children.push(self.parse_primary()?);
        }
        Ok(flatten_and(children))
    }

    fn parse_primary(&mut self) -> Result<QueryAst> {
        match self.peek().cloned() {
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(Error::QueryParse {
                        offset: self.offset(),
                        message: "expected ')'".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Phrase(p)) => {
                self.pos += 1;
                Ok(QueryAst::Phrase(p))
            }
            Some(Token::And) | Some(Token::Or) => Err(Error::QueryParse {
                offset: self.offset(),
                message: "dangling operator".into(),
            }),
            Some(Token::RParen) => Err(Error::QueryParse {
                offset: self.offset(),
                message: "unexpected ')'".into(),
            }),
            None => Err(Error::QueryParse {
                offset: self.offset(),
                message: "unexpected end of query".into(),
            }),
        }
    }
}

fn flatten_or(children: Vec<QueryAst>) -> QueryAst {
    if children.len() == 1 {
        return children.into_iter().next().unwrap();
    }
    let mut flat = Vec::new();
    for c in children {
        match c {
            QueryAst::Or(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }
    QueryAst::Or(flat)
}

fn flatten_and(children: Vec<QueryAst>) -> QueryAst {
    if children.len() == 1 {
        return children.into_iter().next().unwrap();
    }
    let mut flat = Vec::new();
    for c in children {
        match c {
            QueryAst::And(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }
    QueryAst::And(flat)
}

/// Parses a query string into a normalized AST (same-kind nodes flattened).
pub fn parse_query(text: &str) -> Result<QueryAst> {
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return Err(Error::QueryParse {
            offset: 0,
            message: "empty query".into(),
        });
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        input_len: text.len(),
    };
    let ast = parser.parse_expr()?;
    if parser.pos != tokens.len() {
        return Err(Error::QueryParse {
            offset: parser.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(ast)
}

impl QueryAst {
    /// Canonical printer: every phrase quoted, `parse(print(ast)) == ast`.
    pub fn to_query_string(&self) -> String {
        fn print(ast: &QueryAst, parent_is_and: bool, out: &mut String) {
            match ast {
                QueryAst::Phrase(p) => {
                    out.push('"');
                    out.push_str(p);
                    out.push('"');
                }
                QueryAst::And(children) => {
                    for (i, c) in children.iter().enumerate() {
                        if i > 0 {
                            out.push_str(" AND ");
                        }
                        print(c, true, out);
                    }
                }
                QueryAst::Or(children) => {
                    if parent_is_and {
                        out.push('(');
                    }
                    for (i, c) in children.iter().enumerate() {
                        if i > 0 {
                            out.push_str(" OR ");
                        }
                        print(c, true, out);
                    }
                    if parent_is_and {
                        out.push(')');
                    }
                }
            }
        }
        let mut out = String::new();
        print(self, false, &mut out);
        out
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_query_string())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Case-folded phrase occurrence on token boundaries.
///
/// Whitespace runs in the text match a single space in the phrase; all other
/// characters must match exactly after lowercasing. A boundary is required
/// at an edge only when the phrase's edge character is alphanumeric.
fn phrase_occurs(folded_text: &[char], folded_phrase: &[char]) -> bool {
    if folded_phrase.is_empty() {
        return false;
    }
    let n = folded_text.len();
    let first = folded_phrase[0];
    let last = *folded_phrase.last().unwrap();
    'outer: for start in 0..n {
        // boundary before
        if is_word_char(first) && start > 0 && is_word_char(folded_text[start - 1]) {
            continue;
        }
        let mut ti = start;
        let mut pi = 0;
        while pi < folded_phrase.len() {
            let pc = folded_phrase[pi];
            if pc == ' ' {
                // one space in the phrase consumes a whitespace run in the text
                if ti >= n || !folded_text[ti].is_whitespace() {
                    continue 'outer;
                }
                while ti < n && folded_text[ti].is_whitespace() {
                    ti += 1;
                }
                pi += 1;
            } else {
                if ti >= n || folded_text[ti] != pc {
                    continue 'outer;
                }
                ti += 1;
                pi += 1;
            }
        }
        // boundary after
        if is_word_char(last) && ti < n && is_word_char(folded_text[ti]) {
            continue;
        }
        return true;
    }
    false
}

/// Evaluates an AST against already-lowercased text.
pub fn matches_folded(ast: &QueryAst, folded_text: &[char]) -> bool {
    match ast {
        QueryAst::Phrase(p) => {
            let folded_phrase: Vec<char> = p.to_lowercase().chars().collect();
            phrase_occurs(folded_text, &folded_phrase)
        }
        QueryAst::And(children) => children.iter().all(|c| matches_folded(c, folded_text)),
        QueryAst::Or(children) => children.iter().any(|c| matches_folded(c, folded_text)),
    }
}

/// Evaluates an AST against raw post text.
pub fn matches(ast: &QueryAst, text: &str) -> bool {
    let folded: Vec<char> = text.to_lowercase().chars().collect();
    matches_folded(ast, &folded)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicMatches {
    /// Matching post ids, sorted.
    pub post_ids: Vec<String>,
    /// Count of distinct authors among the matching posts.
    pub unique_users: usize,
}

/// Tests every post against every query. Posts may belong to several topics.
pub fn match_corpus(queries: &[TopicQuery], posts: &PostCollection) -> BTreeMap<u32, TopicMatches> {
    let mut out: BTreeMap<u32, TopicMatches> = BTreeMap::new();
    let mut users: BTreeMap<u32, BTreeSet<&str>> = BTreeMap::new();
    for q in queries {
        out.entry(q.topic_id).or_default();
        users.entry(q.topic_id).or_default();
    }
    for post in posts.iter() {
        let folded: Vec<char> = post.text.to_lowercase().chars().collect();
        for q in queries {
            if matches_folded(&q.ast, &folded) {
                out.get_mut(&q.topic_id).unwrap().post_ids.push(post.id.clone());
                users.get_mut(&q.topic_id).unwrap().insert(&post.user_id);
            }
        }
    }
    for (topic, m) in out.iter_mut() {
        m.post_ids.sort();
        m.unique_users = users[topic].len();
    }
    out
}

/// Loads a topic query file: `topic_id <TAB> topic_name <TAB> query` per line.
pub fn load_topic_queries(path: impl AsRef<Path>) -> Result<Vec<TopicQuery>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (id, name, query) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: lineno,
                    reason: "expected topic_id<TAB>topic_name<TAB>query".into(),
                })
            }
        };
        let topic_id: u32 = id.trim().parse().map_err(|_| Error::MalformedLine {
            path: path.to_path_buf(),
            line: lineno,
            reason: format!("bad topic id {id:?}"),
        })?;
        if !seen.insert(topic_id) {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: format!("duplicate topic id {topic_id}"),
            });
        }
        let ast = parse_query(query).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: lineno,
            reason: e.to_string(),
        })?;
        out.push(TopicQuery {
            topic_id,
            topic_name: name.trim().to_string(),
            ast,
        });
    }
    Ok(out)
}
