//! LIWC-style category dictionaries and category percentage scoring.
//!
//! A dictionary file has a header block enclosed by two lines containing only
//! `%`, declaring `<id>\t<tag>` pairs, followed by body lines of the form
//! `<entry>\t<id>[\t<id>...]`. Entries ending in `*` match any token that
//! starts with the remaining prefix.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

/// The bundled open-license function-word dictionary.
pub const DEFAULT_LEXICON: &str = include_str!("../data/function_words.dic");

const WILDCARD: char = '*';
const DELIMITER: &str = "%";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("failed to read dictionary {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> LexiconError {
    LexiconError::Parse {
        line,
        message: message.into(),
    }
}

/// Numeric identifier of a category as written in the dictionary file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CategoryId(pub u32);

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Category {
    pub id: CategoryId,
    pub tag: String,
}

/// An immutable word → category dictionary.
#[derive(Debug, Clone)]
pub struct Lexicon {
    categories: Vec<Category>,
    exact_entries: HashMap<String, Vec<CategoryId>>,
    stem_entries: HashMap<String, Vec<CategoryId>>,
    /// Category id → position in `categories`.
    slots: HashMap<CategoryId, usize>,
}

impl Lexicon {
    /// Parses the bundled function-word dictionary.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled dictionary is well formed")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(source: &str) -> Result<Self, LexiconError> {
        #[derive(PartialEq)]
        enum Section {
            Preamble,
            Header,
            Body,
        }

        let mut section = Section::Preamble;
        let mut categories: Vec<Category> = Vec::new();
        let mut slots = HashMap::new();
        let mut exact_entries: HashMap<String, BTreeSet<CategoryId>> = HashMap::new();
        let mut stem_entries: HashMap<String, BTreeSet<CategoryId>> = HashMap::new();
        let mut last_line = 0;

        for (idx, raw) in source.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.trim_end_matches('\r');
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed == DELIMITER {
                section = match section {
                    Section::Preamble => Section::Header,
                    Section::Header => Section::Body,
                    Section::Body => {
                        return Err(parse_err(line_no, "unexpected third '%' delimiter"))
                    }
                };
                continue;
            }
            match section {
                Section::Preamble => {
                    return Err(parse_err(
                        line_no,
                        "dictionary must begin with a '%' header delimiter",
                    ))
                }
                Section::Header => {
                    let mut fields = trimmed.split('\t').map(str::trim).filter(|f| !f.is_empty());
                    let (Some(id), Some(tag), None) = (fields.next(), fields.next(), fields.next())
                    else {
                        return Err(parse_err(line_no, "header line must be '<id><TAB><tag>'"));
                    };
                    let id = parse_id(id, line_no)?;
                    if slots.contains_key(&id) {
                        return Err(parse_err(line_no, format!("duplicate category id {id}")));
                    }
                    if categories.iter().any(|c| c.tag == tag) {
                        return Err(parse_err(
                            line_no,
                            format!("duplicate category tag '{tag}'"),
                        ));
                    }
                    slots.insert(id, categories.len());
                    categories.push(Category {
                        id,
                        tag: tag.to_string(),
                    });
                }
                Section::Body => {
                    let mut fields = line.split('\t');
                    let entry = fields.next().unwrap_or("").trim().to_lowercase();
                    let ids = fields
                        .map(str::trim)
                        .filter(|f| !f.is_empty())
                        .map(|f| parse_id(f, line_no))
                        .collect::<Result<Vec<_>, _>>()?;
                    if ids.is_empty() {
                        return Err(parse_err(line_no, "entry lists no category ids"));
                    }
                    if let Some(unknown) = ids.iter().find(|id| !slots.contains_key(id)) {
                        return Err(parse_err(
                            line_no,
                            format!("entry references undeclared category {unknown}"),
                        ));
                    }
                    let (key, target) = match entry.strip_suffix(WILDCARD) {
                        Some(stem) => (stem.to_string(), &mut stem_entries),
                        None => (entry, &mut exact_entries),
                    };
                    if key.is_empty() || key.contains(WILDCARD) {
                        return Err(parse_err(line_no, "empty or malformed entry"));
                    }
                    target.entry(key).or_default().extend(ids);
                }
            }
        }

        match section {
            Section::Preamble => Err(parse_err(last_line.max(1), "missing dictionary header")),
            Section::Header => Err(parse_err(last_line, "unterminated header block")),
            Section::Body => Ok(Self {
                categories,
                exact_entries: freeze(exact_entries),
                stem_entries: freeze(stem_entries),
                slots,
            }),
        }
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.tag.as_str())
    }

    pub fn category_by_tag(&self, tag: &str) -> Option<CategoryId> {
        self.categories.iter().find(|c| c.tag == tag).map(|c| c.id)
    }

    /// Position of a category in profile vectors.
    pub fn slot(&self, id: CategoryId) -> Option<usize> {
        self.slots.get(&id).copied()
    }

    pub fn exact_entry(&self, word: &str) -> Option<&[CategoryId]> {
        self.exact_entries.get(word).map(Vec::as_slice)
    }

    pub fn stem_entry(&self, prefix: &str) -> Option<&[CategoryId]> {
        self.stem_entries.get(prefix).map(Vec::as_slice)
    }

    /// Categories of a token: the exact entry if one exists, otherwise the
    /// longest matching stem entry, otherwise nothing.
    pub fn categories_of(&self, token: &str) -> &[CategoryId] {
        if let Some(ids) = self.exact_entries.get(token) {
            return ids;
        }
        let mut ends: Vec<usize> = token
            .char_indices()
            .map(|(i, _)| i)
            .skip(1)
            .chain(std::iter::once(token.len()))
            .collect();
        ends.reverse();
        for end in ends {
            if let Some(ids) = self.stem_entries.get(&token[..end]) {
                return ids;
            }
        }
        &[]
    }

    /// Scores a preprocessed token sequence into per-category percentages.
    pub fn score<S: AsRef<str>>(&self, tokens: &[S]) -> CategoryProfile {
        let mut counts = vec![0usize; self.categories.len()];
        for token in tokens {
            for id in self.categories_of(token.as_ref()) {
                counts[self.slots[id]] += 1;
            }
        }
        CategoryProfile::from_counts(&counts, tokens.len())
    }
}

fn parse_id(field: &str, line: usize) -> Result<CategoryId, LexiconError> {
    field
        .parse::<u32>()
        .map(CategoryId)
        .map_err(|_| parse_err(line, format!("invalid category id '{field}'")))
}

fn freeze(map: HashMap<String, BTreeSet<CategoryId>>) -> HashMap<String, Vec<CategoryId>> {
    map.into_iter()
        .map(|(k, v)| (k, v.into_iter().collect()))
        .collect()
}

/// Per-category percentages of one token sequence, in lexicon category order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryProfile {
    pub percentages: Vec<f64>,
    pub token_count: usize,
}

impl CategoryProfile {
    pub fn zero(categories: usize) -> Self {
        Self {
            percentages: vec![0.0; categories],
            token_count: 0,
        }
    }

    pub fn from_counts(counts: &[usize], token_count: usize) -> Self {
        if token_count == 0 {
            return Self::zero(counts.len());
        }
        let denom = token_count as f64;
        Self {
            percentages: counts.iter().map(|&c| 100.0 * c as f64 / denom).collect(),
            token_count,
        }
    }

    /// Builds a profile directly from percentages, e.g. values read off a report.
    pub fn from_percentages(percentages: Vec<f64>) -> Self {
        Self {
            percentages,
            token_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.percentages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.percentages.is_empty()
    }

    /// Recovered occurrence counts (percentage × token_count / 100).
    pub fn counts(&self) -> Vec<f64> {
        let n = self.token_count as f64;
        self.percentages.iter().map(|p| p * n / 100.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NINE: &str = "%\n1\tppron\n2\tipron\n3\tarticle\n4\tauxverb\n5\tadverb\n6\tpreps\n7\tconj\n8\tnegate\n9\tquant\n%\n";

    fn with_body(body: &str) -> Result<Lexicon, LexiconError> {
        Lexicon::parse(&format!("{NINE}{body}"))
    }

    #[test]
    fn minimal_exact_entry() {
        let lex = with_body("not\t8\n").unwrap();
        assert_eq!(lex.len(), 9);
        assert_eq!(lex.exact_entry("not"), Some(&[CategoryId(8)][..]));
        assert_eq!(lex.categories_of("not"), &[CategoryId(8)]);
    }

    #[test]
    fn wildcard_lands_in_stems() {
        let lex = with_body("hundre*\t9\n").unwrap();
        assert_eq!(lex.stem_entry("hundre"), Some(&[CategoryId(9)][..]));
        assert!(lex.exact_entry("hundre").is_none());
        assert_eq!(lex.categories_of("hundreds"), &[CategoryId(9)]);
        assert_eq!(lex.categories_of("hundre"), &[CategoryId(9)]);
        assert!(lex.categories_of("hundr").is_empty());
    }

    #[test]
    fn undeclared_category_reports_line() {
        let err = with_body("a\t3\nfoo\t99\n").unwrap_err();
        match err {
            LexiconError::Parse { line, message } => {
                assert_eq!(line, 13);
                assert!(message.contains("99"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            Lexicon::parse("%\n1\ta\n1\tb\n%\n"),
            Err(LexiconError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Lexicon::parse("%\n1\ta\n2\ta\n%\n"),
            Err(LexiconError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Lexicon::parse("%\nnonsense\n%\n"),
            Err(LexiconError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Lexicon::parse("1\ta\n"),
            Err(LexiconError::Parse { line: 1, .. })
        ));
        assert!(Lexicon::parse("%\n1\ta\n").is_err());
        assert!(with_body("*\t1\n").is_err());
        assert!(with_body("word\n").is_err());
    }

    #[test]
    fn exact_overrides_stem_and_longest_stem_wins() {
        let lex = with_body("run*\t5\nrunning\t4\nrunn*\t6\n").unwrap();
        assert_eq!(lex.categories_of("running"), &[CategoryId(4)]);
        assert_eq!(lex.categories_of("runner"), &[CategoryId(6)]);
        assert_eq!(lex.categories_of("runs"), &[CategoryId(5)]);
        assert!(lex.categories_of("ran").is_empty());
    }

    #[test]
    fn comments_and_multi_ids() {
        let lex = with_body("# comment\ndon't\t4\t8\n\n").unwrap();
        assert_eq!(lex.categories_of("don't"), &[CategoryId(4), CategoryId(8)]);
    }

    #[test]
    fn bundled_has_nine_function_word_tags() {
        let lex = Lexicon::bundled();
        let tags: Vec<_> = lex.tags().collect();
        assert_eq!(
            tags,
            [
                "ppron", "ipron", "article", "auxverb", "adverb", "preps", "conj", "negate",
                "quant"
            ]
        );
        assert_eq!(
            lex.categories_of("not"),
            &[lex.category_by_tag("negate").unwrap()]
        );
    }

    #[test]
    fn negate_share_of_24_tokens() {
        let lex = with_body("not\t8\n").unwrap();
        let mut tokens = vec!["go"; 23];
        tokens.push("not");
        let profile = lex.score(&tokens);
        assert_eq!(profile.token_count, 24);
        let negate = lex.slot(CategoryId(8)).unwrap();
        assert!((profile.percentages[negate] - 100.0 / 24.0).abs() < 1e-12);
        assert!((profile.percentages[negate] - 4.17).abs() < 0.005);
    }

    #[test]
    fn empty_tokens_score_zero() {
        let lex = Lexicon::bundled();
        let profile = lex.score::<&str>(&[]);
        assert_eq!(profile.token_count, 0);
        assert!(profile.percentages.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn multi_category_sums_exceed_hundred() {
        let lex = Lexicon::parse("%\n1\ta\n2\tb\n%\nx\t1\t2\ny\t1\t2\n").unwrap();
        let profile = lex.score(&["x", "y", "x", "y"]);
        assert_eq!(profile.percentages, vec![100.0, 100.0]);
        assert_eq!(profile.percentages.iter().sum::<f64>(), 200.0);
    }

    fn vocabulary() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(
            prop::sample::select(vec![
                "i", "the", "not", "don't", "so", "hundreds", "map", "go",
            ]),
            0..40,
        )
        .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn scoring_is_order_invariant(mut tokens in vocabulary(), seed in any::<u64>()) {
            let lex = Lexicon::bundled();
            let before = lex.score(&tokens);
            let len = tokens.len();
            if len > 1 {
                tokens.rotate_left((seed as usize) % len);
                tokens.reverse();
            }
            prop_assert_eq!(before, lex.score(&tokens));
        }

        #[test]
        fn counts_add_under_concatenation(a in vocabulary(), b in vocabulary()) {
            let lex = Lexicon::bundled();
            let joined: Vec<String> = a.iter().chain(b.iter()).cloned().collect();
            let whole = lex.score(&joined).counts();
            let (ca, cb) = (lex.score(&a).counts(), lex.score(&b).counts());
            for k in 0..whole.len() {
                prop_assert!((whole[k] - ca[k] - cb[k]).abs() < 1e-9);
            }
        }

        #[test]
        fn doubling_keeps_percentages(a in vocabulary()) {
            let lex = Lexicon::bundled();
            let doubled: Vec<String> = a.iter().chain(a.iter()).cloned().collect();
            let (p1, p2) = (lex.score(&a), lex.score(&doubled));
            prop_assert_eq!(p2.token_count, 2 * p1.token_count);
            for (x, y) in p1.percentages.iter().zip(&p2.percentages) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
