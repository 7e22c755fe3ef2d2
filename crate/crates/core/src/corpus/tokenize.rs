//! Character-class tokenizer.
//!
//! Maximal runs of letters, maximal runs of digits, and every other
//! non-whitespace character as its own token. Mutation components such as
//! the wild type, position and mutant in "V600E" come out as separate
//! tokens so each can carry its own label.

use super::Token;

#[derive(Clone, Copy, PartialEq)]
enum CharClass {
    Letter,
    Digit,
    Punct,
    Space,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphabetic() {
        CharClass::Letter
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Punct
    }
}

/// Splits `text` into tokens with exact char offsets. Total function:
/// whitespace is skipped, everything else is covered.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run_start = 0usize;
    let mut run_class = CharClass::Space;
    let mut run = String::new();

    let flush = |tokens: &mut Vec<Token>, run: &mut String, start: usize, end: usize| {
        if !run.is_empty() {
            tokens.push(Token {
                surface: std::mem::take(run),
                start,
                end,
            });
        }
    };

    for (pos, c) in text.chars().enumerate() {
        let class = classify(c);
        let extends_run = class == run_class && matches!(class, CharClass::Letter | CharClass::Digit);
        if !extends_run {
            flush(&mut tokens, &mut run, run_start, pos);
            run_start = pos;
            run_class = class;
        }
        if class != CharClass::Space {
            run.push(c);
        }
    }
    let n_chars = text.chars().count();
    flush(&mut tokens, &mut run, run_start, n_chars);
    tokens
}
