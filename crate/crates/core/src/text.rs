//! Tokenization of rule descriptions and identifier extraction from code examples.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

/// Java keywords and primitive type names dropped before camel-case splitting.
pub const CODE_KEYWORDS: &[&str] = &[
    "if",
    "else",
    "for",
    "while",
    "return",
    "new",
    "null",
    "true",
    "false",
    "void",
    "int",
    "long",
    "boolean",
    "class",
    "public",
    "private",
    "protected",
    "static",
    "final",
];

/// Optional English stoplist for description text. Off unless requested.
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "can", "do", "does", "for", "from",
    "has", "have", "if", "in", "into", "is", "it", "its", "may", "of", "on", "or", "should", "so",
    "such", "than", "that", "the", "their", "then", "there", "these", "this", "to", "was", "when",
    "which", "will", "with",
];

/// Options applied when tokenizing description text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TextOptions {
    pub remove_stopwords: bool,
}

/// Splits one word at camel-case boundaries and underscores, lowercasing the pieces.
///
/// Boundaries fall at lower→Upper and digit→Upper transitions, and before the
/// last capital of an uppercase run that is followed by a lowercase letter
/// (`XMLParser` → `xml`, `parser`). Digits stay attached to the run before them.
pub fn camel_split(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    for part in word.split('_') {
        let chars: Vec<char> = part.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if i > 0 && !current.is_empty() {
                let prev = chars[i - 1];
                let next = chars.get(i + 1).copied();
                let boundary = c.is_uppercase()
                    && (prev.is_lowercase()
                        || prev.is_numeric()
                        || (prev.is_uppercase() && next.is_some_and(char::is_lowercase)));
                if boundary {
                    out.push(core::mem::take(&mut current));
                }
            }
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

/// Tokenizes description text with default options.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, TextOptions::default())
}

/// Splits text at non-alphanumeric characters and camel-case boundaries.
/// Duplicates are preserved.
pub fn tokenize_with(text: &str, options: TextOptions) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .flat_map(camel_split)
        .filter(|t| !(options.remove_stopwords && ENGLISH_STOPWORDS.contains(&t.as_str())))
        .collect()
}

/// Maximal identifier tokens of a source fragment, keywords removed.
///
/// Runs of `[A-Za-z0-9_]` starting with a digit are numeric literals and are
/// skipped; leading underscores are stripped.
pub fn identifiers(source: &str) -> impl Iterator<Item = &str> {
    source
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .map(|run| run.trim_start_matches('_'))
        .filter(|run| run.starts_with(|c: char| c.is_ascii_alphabetic()))
        .filter(|run| !CODE_KEYWORDS.contains(run))
}

/// Camel-split, lowercased terms of every identifier in the given sources.
pub fn code_terms<'a>(sources: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    sources
        .into_iter()
        .flat_map(identifiers)
        .flat_map(camel_split)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn tokenize_description() {
        assert_eq!(
            tokenize("throwable.printStackTrace should not be called"),
            strs(&[
                "throwable",
                "print",
                "stack",
                "trace",
                "should",
                "not",
                "be",
                "called"
            ])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a  a"), strs(&["a", "a"]));
    }

    #[test]
    fn camel_split_conventions() {
        assert_eq!(
            camel_split("AvoidPrintStackTrace"),
            strs(&["avoid", "print", "stack", "trace"])
        );
        assert_eq!(camel_split("XMLParser"), strs(&["xml", "parser"]));
        assert_eq!(camel_split("base64Encode"), strs(&["base64", "encode"]));
        assert_eq!(camel_split("HTML5Parser"), strs(&["html5", "parser"]));
        assert_eq!(camel_split("MAX_VALUE"), strs(&["max", "value"]));
        assert_eq!(camel_split("getURL"), strs(&["get", "url"]));
        assert!(camel_split("__").is_empty());
    }

    #[test]
    fn identifiers_skip_keywords_and_literals() {
        let ids: Vec<&str> = identifiers("if (x == null) return new Foo(42L, _bar);").collect();
        assert_eq!(ids, vec!["x", "Foo", "bar"]);
    }

    #[test]
    fn code_terms_from_call() {
        let terms = code_terms(["exp.printStackTrace()"]);
        let expected: BTreeSet<String> = strs(&["exp", "print", "stack", "trace"])
            .into_iter()
            .collect();
        assert_eq!(terms, expected);
    }

    #[test]
    fn stopwords_only_when_enabled() {
        let opts = TextOptions {
            remove_stopwords: true,
        };
        assert_eq!(
            tokenize_with("the rule should fire", opts),
            strs(&["rule", "fire"])
        );
        assert_eq!(tokenize("the rule").len(), 2);
    }
}
