//! Identifier rules and the natural ordering used for every sorted output.

use std::cmp::Ordering;

/// Words that cannot be used as machine names or event ids.
pub const RESERVED: &[&str] = &[
    "behavior",
    "constraint",
    "create",
    "edge",
    "event",
    "excl",
    "flow",
    "if",
    "intensity",
    "machine",
    "process",
    "receive",
    "region",
    "release",
    "store",
    "time",
    "transfer",
    "trigger",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// A letter followed by letters, digits or underscores.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

/// Turns free text (an activity label, say) into a usable identifier.
///
/// Words are capitalised and joined; anything that is not alphanumeric
/// separates words. The result never collides with a reserved word.
pub fn sanitize_identifier(text: &str) -> String {
    let mut out = String::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        let mut chars = word.chars();
        if let Some(first) = chars.next() {
            out.extend(first.to_uppercase());
            out.push_str(chars.as_str());
        }
    }
    if !out.chars().next().is_some_and(char::is_alphabetic) {
        out.insert(0, 'M');
    }
    if is_reserved(&out) {
        out.push('_');
    }
    out
}

/// Compares strings treating runs of ASCII digits as numbers, so `E2 < E10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (na, nb) = (trim_zeros(&a[..da]), trim_zeros(&b[..db]));
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb)).then(da.cmp(&db));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let skip = digits.iter().take_while(|&&d| d == b'0').count();
    &digits[skip..]
}

/// Sorts owned strings in natural order.
pub fn sort_natural(items: &mut [String]) {
    items.sort_by(|a, b| natural_cmp(a, b));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order_treats_digits_numerically() {
        let mut ids: Vec<String> = ["E10", "E2", "E1", "f3", "E19", "E9"].iter().map(|s| s.to_string()).collect();
        sort_natural(&mut ids);
        assert_eq!(ids, ["E1", "E2", "E9", "E10", "E19", "f3"]);
        assert_eq!(natural_cmp("a01", "a1"), Ordering::Greater);
        assert_eq!(natural_cmp("a1", "a1"), Ordering::Equal);
        assert_eq!(natural_cmp("A.create", "A.B.create"), Ordering::Greater);
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("Mentcare_2"));
        assert!(!is_identifier("2abc"));
        assert!(!is_identifier("_x"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }

    #[test]
    fn sanitize_produces_identifiers() {
        assert_eq!(sanitize_identifier("Record detention decision"), "RecordDetentionDecision");
        assert_eq!(sanitize_identifier("42 things"), "M42Things");
        assert_eq!(sanitize_identifier("!!!"), "M");
        assert_eq!(sanitize_identifier("flow"), "Flow");
        for text in ["x", "a b c", "3", "é-tude", "create"] {
            let id = sanitize_identifier(text);
            assert!(is_identifier(&id) && !is_reserved(&id), "{id}");
        }
    }
}
