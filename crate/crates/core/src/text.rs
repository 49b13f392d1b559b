//! Tokenization shared by TF-IDF scoring, phrase extraction and the lexical classifier.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub is_capitalized: bool,
    pub position: usize,
}

impl Token {
    fn new(surface: String, position: usize) -> Self {
        let is_capitalized = surface.chars().next().is_some_and(char::is_uppercase);
        Token {
            surface,
            is_capitalized,
            position,
        }
    }

    /// True when the token carries no letter or digit.
    pub fn is_punctuation(&self) -> bool {
        !self.surface.chars().any(char::is_alphanumeric)
    }

    pub fn starts_with_digit(&self) -> bool {
        self.surface.chars().next().is_some_and(|c| c.is_ascii_digit())
    }
}

pub type TokenStream = Vec<Token>;

fn is_word_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '’')
}

/// Splits on whitespace and punctuation boundaries.
///
/// Words are maximal alphanumeric runs, kept whole across an internal hyphen or
/// apostrophe (`X-Men`, `n't`) and across `.`/`,` between digits (`3.5`,
/// `1,000`). A single capital letter followed by a period is an initial (`J.`),
/// except at the very end of the text. Every other non-space character is a
/// one-character punctuation token.
pub fn tokenize(text: &str) -> TokenStream {
    let chars: Vec<char> = text.chars().collect();
    let last_non_space = chars.iter().rposition(|c| !c.is_whitespace());
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !c.is_alphanumeric() {
            tokens.push(Token::new(c.to_string(), tokens.len()));
            i += 1;
            continue;
        }

        // Initials: `J.`, `U.S.`
        if c.is_uppercase() {
            let mut j = i;
            while j + 1 < chars.len()
                && chars[j].is_uppercase()
                && chars[j + 1] == '.'
                && chars.get(j + 2).is_none_or(|n| !n.is_alphanumeric() || n.is_uppercase())
                && Some(j + 1) != last_non_space
            {
                j += 2;
            }
            if j > i && chars.get(j).is_none_or(|n| !n.is_alphanumeric()) {
                tokens.push(Token::new(chars[i..j].iter().collect(), tokens.len()));
                i = j;
                continue;
            }
        }

        let start = i;
        i += 1;
        while i < chars.len() {
            let c = chars[i];
            if c.is_alphanumeric() {
                i += 1;
                continue;
            }
            let next = chars.get(i + 1).copied();
            let prev = chars[i - 1];
            let joins_word = is_word_joiner(c) && next.is_some_and(char::is_alphanumeric);
            let joins_number = matches!(c, '.' | ',')
                && prev.is_ascii_digit()
                && next.is_some_and(|n| n.is_ascii_digit());
            if joins_word || joins_number {
                i += 1;
            } else {
                break;
            }
        }
        tokens.push(Token::new(chars[start..i].iter().collect(), tokens.len()));
    }
    tokens
}

/// Lowercased non-punctuation tokens, in order.
pub fn words(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !t.is_punctuation())
        .map(|t| t.surface.to_lowercase())
        .collect()
}

/// Index terms: lowercased unigrams plus bigrams of tokens that are adjacent
/// in the original stream. Punctuation is never a term and breaks bigrams.
pub fn index_terms(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    let mut terms = Vec::with_capacity(tokens.len() * 2);
    let mut prev: Option<(usize, String)> = None;
    for token in tokens {
        if token.is_punctuation() {
            prev = None;
            continue;
        }
        let lower = token.surface.to_lowercase();
        if let Some((pos, p)) = &prev {
            if pos + 1 == token.position {
                terms.push(format!("{p} {lower}"));
            }
        }
        terms.push(lower.clone());
        prev = Some((token.position, lower));
    }
    terms
}
