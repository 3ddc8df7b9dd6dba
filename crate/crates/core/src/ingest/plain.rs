use super::{Document, IngestError, Sentence, Token};

/// Abbreviations whose final period never ends a sentence (compared lowercased, without the period).
const ABBREVIATIONS: &[&str] = &[
    "m", "mm", "mme", "mmes", "mlle", "mlles", "dr", "pr", "st", "ste", "etc", "cf", "p", "pp",
    "vol", "art", "env", "av", "bd", "éd", "fig", "chap", "n°", "vs",
];

/// Words whose apostrophe is not a clitic boundary.
const APOSTROPHE_WORDS: &[&str] = &["aujourd'hui", "presqu'île", "prud'homme"];

const TERMINATORS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &['"', '»', '”', ')', ']', '\''];
const OPENERS: &[char] = &['"', '«', '“', '(', '['];

fn is_abbreviation(word: &str) -> bool {
    let bare = word.trim_end_matches('.');
    let lower = bare.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let mut chars = bare.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase())
}

/// Splits a paragraph into sentence strings.
fn split_sentences(paragraph: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = paragraph.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && (TERMINATORS.contains(&chars[j].1) || CLOSERS.contains(&chars[j].1)) {
            j += 1;
        }
        if j >= chars.len() || !chars[j].1.is_whitespace() {
            i = j;
            continue;
        }
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        while k < chars.len() && OPENERS.contains(&chars[k].1) {
            k += 1;
        }
        let next_ok = k < chars.len() && (chars[k].1.is_uppercase() || chars[k].1.is_ascii_digit());
        // The word right before the period decides whether it is an abbreviation.
        let word_start = paragraph[start..chars[i].0]
            .rfind(char::is_whitespace)
            .map_or(start, |p| start + p + 1);
        let word = &paragraph[word_start..chars[i].0];
        let abbreviation = c == '.' && is_abbreviation(word);
        if next_ok && !abbreviation {
            let end = chars[j].0;
            out.push(paragraph[start..end].trim());
            start = end;
        }
        i = j;
    }
    let rest = paragraph[start..].trim();
    if !rest.is_empty() {
        out.push(rest);
    }
    out.retain(|s| !s.is_empty());
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits a whitespace-delimited chunk into word tokens. Punctuation is a
/// separator and is dropped, except the period of a known abbreviation, intra-word
/// hyphens, decimal separators and clitic apostrophes (`l'homme` -> `l'`, `homme`).
fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let lower = chunk.to_lowercase();
    if let Some(w) = APOSTROPHE_WORDS
        .iter()
        .find(|w| lower.trim_matches(|c: char| !is_word_char(c)) == **w)
    {
        let start = lower.find(w).unwrap_or(0);
        out.push(chunk[start..start + w.len()].to_string());
        return;
    }
    let chars: Vec<char> = chunk.chars().collect();
    let mut current = String::new();
    let flush = |current: &mut String, out: &mut Vec<String>| {
        if !current.is_empty() {
            out.push(std::mem::take(current));
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let next = chars.get(i + 1).copied();
        if is_word_char(c) {
            current.push(c);
        } else if (c == '\'' || c == '’') && !current.is_empty() && next.is_some_and(is_word_char) {
            current.push('\'');
            flush(&mut current, out);
        } else if c == '-' && !current.is_empty() && next.is_some_and(is_word_char) {
            current.push(c);
        } else if (c == ',' || c == '.')
            && prev.is_some_and(|p| p.is_ascii_digit())
            && next.is_some_and(|n| n.is_ascii_digit())
        {
            current.push(c);
        } else if c == '.' && !current.is_empty() && is_abbreviation(&current) {
            current.push(c);
            flush(&mut current, out);
        } else {
            flush(&mut current, out);
        }
    }
    flush(&mut current, out);
}

/// Segments raw text into a [`Document`] of untagged tokens. Paragraphs are
/// separated by blank lines. Sentences end at `.`, `!`, `?` or `…` followed
/// by whitespace and an uppercase letter or digit, unless the period closes
/// an abbreviation (`M.`, `Mme.`, `etc.`, single capitals).
pub fn segment_plain_text(input: &str) -> Result<Document, IngestError> {
    let mut sentences = Vec::new();
    let mut paragraph_id = 0;
    let normalized = input.replace("\r\n", "\n");
    for paragraph in normalized.split("\n\n") {
        let paragraph = paragraph.trim();
        if paragraph.is_empty() {
            continue;
        }
        let before = sentences.len();
        for sentence in split_sentences(paragraph) {
            let mut words = Vec::new();
            for chunk in sentence.split_whitespace() {
                split_chunk(chunk, &mut words);
            }
            if !words.is_empty() {
                let tokens = words.into_iter().map(Token::bare).collect();
                sentences.push(Sentence::new(tokens, paragraph_id));
            }
        }
        if sentences.len() > before {
            paragraph_id += 1;
        }
    }
    if sentences.is_empty() {
        return Err(IngestError::EmptyDocument);
    }
    Document::new("text", sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(doc: &Document) -> Vec<usize> {
        doc.sentences.iter().map(Sentence::len).collect()
    }

    fn forms(doc: &Document) -> Vec<&str> {
        doc.tokens().map(|t| t.form.as_str()).collect()
    }

    #[test]
    fn two_short_sentences() {
        let doc = segment_plain_text("Le chat dort. Il rêve.").unwrap();
        assert_eq!(shape(&doc), [3, 2]);
        assert!(doc.tokens().all(|t| t.upos == crate::Upos::X && t.head_index().is_none()));
    }

    #[test]
    fn abbreviation_is_not_a_boundary() {
        let doc = segment_plain_text("M. Dupont arrive.").unwrap();
        assert_eq!(shape(&doc), [3]);
        assert_eq!(forms(&doc), ["M.", "Dupont", "arrive"]);
        let doc = segment_plain_text("Il achète des pommes, des poires, etc. Puis il part.").unwrap();
        assert_eq!(doc.sentences.len(), 1);
        let doc = segment_plain_text("Mme. Durand et J. Martin sont là.").unwrap();
        assert_eq!(doc.sentences.len(), 1);
    }

    #[test]
    fn clitics_split() {
        let doc = segment_plain_text("l'homme qu'il voit aujourd'hui").unwrap();
        assert_eq!(forms(&doc), ["l'", "homme", "qu'", "il", "voit", "aujourd'hui"]);
    }

    #[test]
    fn lowercase_after_period_does_not_split() {
        let doc = segment_plain_text("Il a 3.5 ans. et puis voilà.").unwrap();
        assert_eq!(doc.sentences.len(), 1);
        assert!(forms(&doc).contains(&"3.5"));
    }

    #[test]
    fn paragraphs_and_other_terminators() {
        let doc = segment_plain_text("Quoi ? Non ! Bon…\n\nAutre paragraphe. 2024 arrive.").unwrap();
        assert_eq!(shape(&doc), [1, 1, 1, 2, 2]);
        let paras: Vec<usize> = doc.sentences.iter().map(|s| s.paragraph_id).collect();
        assert_eq!(paras, [0, 0, 0, 1, 1]);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(segment_plain_text(""), Err(IngestError::EmptyDocument));
        assert_eq!(segment_plain_text(" \n\t "), Err(IngestError::EmptyDocument));
        assert_eq!(segment_plain_text("… !"), Err(IngestError::EmptyDocument));
    }
}
