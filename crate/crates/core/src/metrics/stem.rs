//! Minimal suffix-stripping stemmer for METEOR's stem matching stage.

const MIN_STEM: usize = 3;

/// Strips one common English inflectional suffix from a lowercased word.
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    let n = w.chars().count();
    let strip = |suffix: &str, repl: &str| -> Option<String> {
        let sn = suffix.chars().count();
        if w.ends_with(suffix) && n >= sn + MIN_STEM {
            Some(format!("{}{}", &w[..w.len() - suffix.len()], repl))
        } else {
            None
        }
    };
    if w.ends_with("ss") {
        return w;
    }
    strip("sses", "ss")
        .or_else(|| strip("ies", "y"))
        .or_else(|| strip("ingly", ""))
        .or_else(|| strip("edly", ""))
        .or_else(|| strip("ing", ""))
        .or_else(|| strip("ed", ""))
        .or_else(|| strip("ly", ""))
        .or_else(|| strip("es", ""))
        .or_else(|| strip("s", ""))
        .unwrap_or(w)
}
