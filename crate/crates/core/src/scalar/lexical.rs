fn is_vowel(c: char, word_initial: bool) -> bool {
    match c.to_ascii_lowercase() {
        'a' | 'e' | 'i' | 'o' | 'u' => true,
        'y' => !word_initial,
        _ => false,
    }
}

/// Sum over whitespace-separated words of the number of maximal vowel runs.
/// `y` is a vowel except as the first character of a word.
pub fn count_syllables(s: &str) -> usize {
    s.split_whitespace()
        .map(|word| {
            let mut groups = 0;
            let mut in_group = false;
            for (i, c) in word.chars().enumerate() {
                let v = is_vowel(c, i == 0);
                if v && !in_group {
                    groups += 1;
                }
                in_group = v;
            }
            groups
        })
        .sum()
}

pub fn count_words(s: &str) -> usize {
    s.split_whitespace().count()
}

pub fn starts_with_vowel(s: &str) -> bool {
    s.chars()
        .find(|c| c.is_alphabetic())
        .is_some_and(|c| matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u'))
}

pub fn is_palindrome(s: &str) -> bool {
    let chars: Vec<char> = s
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect();
    chars.iter().eq(chars.iter().rev())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllables() {
        assert_eq!(count_syllables(""), 0);
        assert_eq!(count_syllables("   "), 0);
        assert_eq!(count_syllables("Yes"), 1);
        assert_eq!(count_syllables("rhythm"), 1);
        assert_eq!(count_syllables("Plaza Museum"), 4);
    }

    #[test]
    fn words_and_vowels() {
        assert_eq!(count_words("  Plaza   Museum "), 2);
        assert!(starts_with_vowel(" 'Anna'"));
        assert!(!starts_with_vowel("Yvonne"));
        assert!(!starts_with_vowel(""));
    }

    #[test]
    fn palindromes() {
        assert!(is_palindrome("A man, a plan, a canal: Panama"));
        assert!(is_palindrome(""));
        assert!(!is_palindrome("Todor"));
    }
}
