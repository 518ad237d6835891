//! Tokenization shared by the classifier and the translation metrics.
//!
//! Tokens are lowercased, split on Unicode whitespace and stripped of
//! leading/trailing punctuation. Separators inside numbers survive, so
//! `"1,500."` becomes the single token `1,500` and `"40%"` keeps its sign.

/// Splits `text` into lowercased word tokens with punctuation removed.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let (_, core, _) = split_punct(raw);
        if !core.is_empty() {
            out.push(core.to_lowercase());
        }
    }
    out
}

/// Like [`tokenize`], but stripped punctuation is kept as separate
/// single-character tokens. Used for the n-gram metrics.
pub fn tokenize_separating(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let (lead, core, trail) = split_punct(raw);
        out.extend(lead.chars().filter(|c| !c.is_whitespace()).map(String::from));
        if !core.is_empty() {
            out.push(core.to_lowercase());
        }
        out.extend(trail.chars().map(String::from));
    }
    out
}

/// Splits a whitespace-free chunk into (leading punctuation, core, trailing punctuation).
fn split_punct(raw: &str) -> (&str, &str, &str) {
    let start = raw
        .char_indices()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, _)| i)
        .unwrap_or(raw.len());
    let rest = &raw[start..];
    let mut end = rest
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    // keep a percent sign glued to a number
    if rest[..end].ends_with(|c: char| c.is_ascii_digit()) && rest[end..].starts_with('%') {
        end += 1;
    }
    (&raw[..start], &rest[..end], &rest[end..])
}

/// True for integer, decimal, thousands-separated and percent tokens.
pub fn is_numeric_token(token: &str) -> bool {
    let body = token.strip_suffix('%').unwrap_or(token);
    if body.is_empty() {
        return false;
    }
    let (int_part, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    if let Some(f) = frac {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return false;
        }
    }
    if int_part.is_empty() {
        return frac.is_some();
    }
    if int_part.contains(',') {
        let mut groups = int_part.split(',');
        let head = groups.next().unwrap_or("");
        (1..=3).contains(&head.len())
            && head.bytes().all(|b| b.is_ascii_digit())
            && groups.all(|g| g.len() == 3 && g.bytes().all(|b| b.is_ascii_digit()))
    } else {
        int_part.bytes().all(|b| b.is_ascii_digit())
    }
}

/// Collapses every whitespace run to one space and trims both ends.
pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Stable 64-bit FNV-1a, used to derive per-text seeds.
pub fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Converts a char offset into a byte offset, `None` when out of range.
pub fn char_to_byte(text: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in text.char_indices() {
        if count == char_idx {
            return Some(b);
        }
        count += 1;
    }
    (count == char_idx).then_some(text.len())
}

pub fn byte_to_char(text: &str, byte_idx: usize) -> usize {
    text[..byte_idx].chars().count()
}

/// Finds whole-word occurrences of `needle` in `hay`, returning byte ranges.
pub fn find_whole_word(hay: &str, needle: &str) -> Vec<(usize, usize)> {
    if needle.is_empty() {
        return Vec::new();
    }
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(pos) = hay[from..].find(needle) {
        let s = from + pos;
        let e = s + needle.len();
        let before_ok = hay[..s].chars().next_back().is_none_or(|c| !is_word(c));
        let after_ok = hay[e..].chars().next().is_none_or(|c| !is_word(c));
        if before_ok && after_ok {
            out.push((s, e));
            from = e;
        } else {
            from = s + hay[s..].chars().next().map_or(1, char::len_utf8);
        }
    }
    out
}

/// Replaces every whole-word occurrence of `from` by `to`.
pub fn replace_whole_word(hay: &str, from: &str, to: &str) -> (String, usize) {
    let spans = find_whole_word(hay, from);
    let mut out = String::with_capacity(hay.len());
    let mut last = 0;
    for &(s, e) in &spans {
        out.push_str(&hay[last..s]);
        out.push_str(to);
        last = e;
    }
    out.push_str(&hay[last..]);
    (out, spans.len())
}

/// Gives `replacement` the casing pattern of `surface`: all-caps stays
/// all-caps, a capitalized surface capitalizes a lowercase replacement.
pub fn match_casing(surface: &str, replacement: &str) -> String {
    let letters: Vec<char> = surface.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    let first_upper = surface.chars().next().is_some_and(char::is_uppercase);
    if first_upper && replacement.chars().all(|c| !c.is_uppercase()) {
        return replacement.split(' ').map(capitalize).collect::<Vec<_>>().join(" ");
    }
    replacement.to_string()
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
