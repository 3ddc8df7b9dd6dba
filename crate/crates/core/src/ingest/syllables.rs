use super::IngestError;

fn is_vowel(c: char) -> bool {
    matches!(
        c,
        'a' | 'e' | 'i' | 'o' | 'u' | 'y' | 'é' | 'è' | 'ê' | 'ë' | 'à' | 'â' | 'î' | 'ï' | 'ô'
            | 'û' | 'ù' | 'ü'
    )
}

/// Heuristic French syllable count: maximal vowel groups, minus one for a
/// silent final `e`/`es`/`ent` after a consonant, floored at 1.
pub fn count_syllables_fr(word: &str) -> Result<usize, IngestError> {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return Err(IngestError::EmptyWord);
    }
    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let schwa_start = ["ent", "es", "e"].iter().find_map(|suffix| {
        let n = suffix.chars().count();
        (letters.len() > n && letters[letters.len() - n..].iter().copied().eq(suffix.chars()))
            .then(|| letters.len() - n)
    });
    if let Some(start) = schwa_start {
        let before = letters[start - 1];
        if !is_vowel(before) && groups > 1 {
            groups -= 1;
        }
    }
    Ok(groups.max(1))
}
