//! Title and person-name canonicalization, plus the blocking keys derived
//! from names.
//!
//! Folding uses a fixed Latin transliteration table; characters with no
//! entry are dropped.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of raw whitespace tokens for a title to be matchable.
pub const MIN_TITLE_WORDS: usize = 5;

/// ASCII transliteration of one character, `None` when unmappable.
pub fn fold_char(c: char) -> Option<&'static str> {
    if c.is_ascii() {
        return ASCII.get(c as usize).copied();
    }
    let s = match c {
        'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' | 'Ā' | 'Ă' | 'Ą' => "A",
        'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' | 'ā' | 'ă' | 'ą' => "a",
        'Æ' => "AE",
        'æ' => "ae",
        'Ç' | 'Ć' | 'Ĉ' | 'Ċ' | 'Č' => "C",
        'ç' | 'ć' | 'ĉ' | 'ċ' | 'č' => "c",
        'Ð' | 'Ď' | 'Đ' => "D",
        'ð' | 'ď' | 'đ' => "d",
        'È' | 'É' | 'Ê' | 'Ë' | 'Ē' | 'Ĕ' | 'Ė' | 'Ę' | 'Ě' => "E",
        'è' | 'é' | 'ê' | 'ë' | 'ē' | 'ĕ' | 'ė' | 'ę' | 'ě' => "e",
        'Ĝ' | 'Ğ' | 'Ġ' | 'Ģ' => "G",
        'ĝ' | 'ğ' | 'ġ' | 'ģ' => "g",
        'Ĥ' | 'Ħ' => "H",
        'ĥ' | 'ħ' => "h",
        'Ì' | 'Í' | 'Î' | 'Ï' | 'Ĩ' | 'Ī' | 'Ĭ' | 'Į' | 'İ' => "I",
        'ì' | 'í' | 'î' | 'ï' | 'ĩ' | 'ī' | 'ĭ' | 'į' | 'ı' => "i",
        'Ĳ' => "IJ",
        'ĳ' => "ij",
        'Ĵ' => "J",
        'ĵ' => "j",
        'Ķ' => "K",
        'ķ' | 'ĸ' => "k",
        'Ĺ' | 'Ļ' | 'Ľ' | 'Ŀ' | 'Ł' => "L",
        'ĺ' | 'ļ' | 'ľ' | 'ŀ' | 'ł' => "l",
        'Ñ' | 'Ń' | 'Ņ' | 'Ň' | 'Ŋ' => "N",
        'ñ' | 'ń' | 'ņ' | 'ň' | 'ŉ' | 'ŋ' => "n",
        'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' | 'Ø' | 'Ō' | 'Ŏ' | 'Ő' => "O",
        'ò' | 'ó' | 'ô' | 'õ' | 'ö' | 'ø' | 'ō' | 'ŏ' | 'ő' => "o",
        'Œ' => "OE",
        'œ' => "oe",
        'Ŕ' | 'Ŗ' | 'Ř' => "R",
        'ŕ' | 'ŗ' | 'ř' => "r",
        'Ś' | 'Ŝ' | 'Ş' | 'Š' | 'Ș' => "S",
        'ś' | 'ŝ' | 'ş' | 'š' | 'ș' => "s",
        'ß' => "ss",
        'Ţ' | 'Ť' | 'Ŧ' | 'Ț' => "T",
        'ţ' | 'ť' | 'ŧ' | 'ț' => "t",
        'Þ' => "TH",
        'þ' => "th",
        'Ù' | 'Ú' | 'Û' | 'Ü' | 'Ũ' | 'Ū' | 'Ŭ' | 'Ů' | 'Ű' | 'Ų' => "U",
        'ù' | 'ú' | 'û' | 'ü' | 'ũ' | 'ū' | 'ŭ' | 'ů' | 'ű' | 'ų' => "u",
        'Ŵ' => "W",
        'ŵ' => "w",
        'Ý' | 'Ŷ' | 'Ÿ' => "Y",
        'ý' | 'ÿ' | 'ŷ' => "y",
        'Ź' | 'Ż' | 'Ž' => "Z",
        'ź' | 'ż' | 'ž' => "z",
        // Dash and space variants keep their role for the hyphen policy and
        // for tokenization.
        '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2212}' => "-",
        '\u{00A0}' | '\u{2002}'..='\u{200A}' | '\u{202F}' | '\u{3000}' => " ",
        _ => return None,
    };
    Some(s)
}

// Indexed by code point; lets ASCII share the `&'static str` return path.
static ASCII: [&str; 128] = [
    "\0", "\x01", "\x02", "\x03", "\x04", "\x05", "\x06", "\x07", "\x08", "\t", "\n", "\x0b",
    "\x0c", "\r", "\x0e", "\x0f", "\x10", "\x11", "\x12", "\x13", "\x14", "\x15", "\x16", "\x17",
    "\x18", "\x19", "\x1a", "\x1b", "\x1c", "\x1d", "\x1e", "\x1f", " ", "!", "\"", "#", "$", "%",
    "&", "'", "(", ")", "*", "+", ",", "-", ".", "/", "0", "1", "2", "3", "4", "5", "6", "7", "8",
    "9", ":", ";", "<", "=", ">", "?", "@", "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K",
    "L", "M", "N", "O", "P", "Q", "R", "S", "T", "U", "V", "W", "X", "Y", "Z", "[", "\\", "]", "^",
    "_", "`", "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n", "o", "p", "q",
    "r", "s", "t", "u", "v", "w", "x", "y", "z", "{", "|", "}", "~", "\x7f",
];

/// ASCII-folds `s`, dropping unmappable characters.
pub fn ascii_fold(s: &str) -> String {
    s.chars().filter_map(fold_char).collect()
}

/// How hyphens and dashes inside title tokens are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyphenPolicy {
    /// `Cancer-Risk` becomes `cancerrisk`.
    #[default]
    Delete,
    /// `Cancer-Risk` becomes `cancer risk`.
    Space,
}

/// A title reduced to lowercase ASCII letters separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormTitle {
    pub text: String,
    /// Whitespace token count of the raw title.
    pub word_count_raw: usize,
}

/// Applies the character transform of title normalization (fold, strip
/// non-letters, lowercase, collapse whitespace) without the length filter.
pub fn fold_title_text(raw: &str, hyphens: HyphenPolicy) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        let Some(folded) = fold_char(c) else { continue };
        for b in folded.bytes() {
            let separator =
                b.is_ascii_whitespace() || (b == b'-' && hyphens == HyphenPolicy::Space);
            if separator {
                pending_space = !out.is_empty();
            } else if b.is_ascii_alphabetic() {
                if pending_space {
                    out.push(' ');
                    pending_space = false;
                }
                out.push(b.to_ascii_lowercase() as char);
            }
        }
    }
    out
}

/// Normalizes a title for matching. Titles with fewer than
/// [`MIN_TITLE_WORDS`] raw tokens, or with no letters at all, are rejected.
pub fn normalize_title(raw: &str) -> Option<NormTitle> {
    normalize_title_with(raw, HyphenPolicy::default())
}

pub fn normalize_title_with(raw: &str, hyphens: HyphenPolicy) -> Option<NormTitle> {
    let word_count_raw = raw.split_whitespace().count();
    if word_count_raw < MIN_TITLE_WORDS {
        return None;
    }
    let text = fold_title_text(raw, hyphens);
    if text.is_empty() {
        return None;
    }
    Some(NormTitle {
        text,
        word_count_raw,
    })
}

/// A parsed author name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PersonName {
    pub raw: String,
    /// Lowercase ASCII; multi-word surnames keep single spaces.
    pub surname: String,
    /// Lowercase ASCII tokens, one per whitespace- or period-separated part.
    pub forenames: Vec<String>,
}

fn name_token(s: &str) -> String {
    s.chars()
        .filter_map(fold_char)
        .flat_map(str::chars)
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl PersonName {
    pub fn first_initial(&self) -> Option<char> {
        self.forenames.first().and_then(|f| f.chars().next())
    }

    pub fn all_initials(&self) -> String {
        self.forenames
            .iter()
            .filter_map(|f| f.chars().next())
            .collect()
    }
}

/// Parses `Surname, Forenames`; without a comma the last whitespace token
/// is the surname.
pub fn parse_name(raw: &str) -> Result<PersonName> {
    let trimmed = raw.trim();
    let (surname_part, forename_part) = match trimmed.split_once(',') {
        Some((s, f)) => (s, f),
        None => match trimmed.rsplit_once(char::is_whitespace) {
            Some((f, s)) => (s, f),
            None => (trimmed, ""),
        },
    };
    let surname = surname_part
        .split_whitespace()
        .map(name_token)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    if surname.is_empty() {
        return Err(Error::UnparseableName(raw.to_string()));
    }
    let forenames = forename_part
        .split(|c: char| c.is_whitespace() || c == '.' || c == ',')
        .map(name_token)
        .filter(|t| !t.is_empty())
        .collect();
    Ok(PersonName {
        raw: raw.to_string(),
        surname,
        forenames,
    })
}

/// Full surname plus first forename initial (FINI). Names without forenames
/// carry no initial; such keys never match anything.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockKey {
    pub surname: String,
    pub first_initial: Option<char>,
}

impl BlockKey {
    pub fn is_keyed(&self) -> bool {
        self.first_initial.is_some()
    }

    /// Key equality for linkage purposes: sentinel keys match nothing.
    pub fn matches(&self, other: &BlockKey) -> bool {
        self.is_keyed() && self == other
    }
}

impl fmt::Display for BlockKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_", self.surname)?;
        if let Some(c) = self.first_initial {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Full surname plus all forename initials (AINI).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NameKey {
    pub surname: String,
    pub initials: String,
}

impl NameKey {
    pub fn is_keyed(&self) -> bool {
        !self.initials.is_empty()
    }

    pub fn block_key(&self) -> BlockKey {
        BlockKey {
            surname: self.surname.clone(),
            first_initial: self.initials.chars().next(),
        }
    }
}

impl fmt::Display for NameKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.surname, self.initials)
    }
}

pub fn fini_key(name: &PersonName) -> BlockKey {
    BlockKey {
        surname: name.surname.clone(),
        first_initial: name.first_initial(),
    }
}

pub fn aini_key(name: &PersonName) -> NameKey {
    NameKey {
        surname: name.surname.clone(),
        initials: name.all_initials(),
    }
}

/// FINI key of a raw name string, `None` if unparseable.
pub fn fini_of(raw: &str) -> Option<BlockKey> {
    parse_name(raw).ok().map(|n| fini_key(&n))
}
