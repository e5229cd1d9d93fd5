//! Tokenizer shared by the BLEU and BERTScore computations.

use unicode_normalization::UnicodeNormalization;

const SPLIT_PUNCT: [char; 6] = ['.', ',', '?', '!', ':', ';'];

/// NFKC-normalizes, lowercases, splits on Unicode whitespace, then splits
/// each of `. , ? ! : ;` off as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfkc().collect::<String>().to_lowercase();
    let mut tokens = Vec::new();
    for word in normalized.split_whitespace() {
        let mut current = String::new();
        for ch in word.chars() {
            if SPLIT_PUNCT.contains(&ch) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            } else {
                current.push(ch);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("That train is leaving from Cambridge on Sunday, correct?"),
            [
                "that",
                "train",
                "is",
                "leaving",
                "from",
                "cambridge",
                "on",
                "sunday",
                ",",
                "correct",
                "?"
            ]
        );
    }

    #[test]
    fn keeps_inner_apostrophes_and_hyphens() {
        assert_eq!(tokenize("i'm 3-star"), ["i'm", "3-star"]);
        assert_eq!(tokenize("17:00."), ["17", ":", "00", "."]);
    }

    #[test]
    fn nfkc_folds_compatibility_forms() {
        // full-width letters and the "fi" ligature
        assert_eq!(tokenize("ＡＢＣ ﬁne"), ["abc", "fine"]);
        assert!(tokenize(" \t\n").is_empty());
    }
}
