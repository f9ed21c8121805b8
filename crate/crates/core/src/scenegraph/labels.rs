use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;

/// Rename every occurrence of a repeated label to `label_k`, `k` counting
/// from 0 in slice order and skipping names that are already taken.
///
/// Names in `reserved` count as existing occurrences but are never renamed
/// themselves (used for the three root labels).
pub fn suffix_duplicates(labels: &mut [String], reserved: &[&str]) {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for label in reserved.iter().copied().chain(labels.iter().map(String::as_str)) {
        *counts.entry(label.into()).or_default() += 1;
    }
    let repeated: BTreeSet<String> = counts
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(l, _)| l)
        .collect();
    if repeated.is_empty() {
        return;
    }

    let mut taken: BTreeSet<String> = reserved.iter().map(|s| String::from(*s)).collect();
    taken.extend(labels.iter().cloned());
    let mut next: BTreeMap<String, usize> = BTreeMap::new();
    for label in labels.iter_mut() {
        if !repeated.contains(label.as_str()) {
            continue;
        }
        let k = next.entry(label.clone()).or_default();
        let candidate = loop {
            let c = format!("{label}_{k}");
            *k += 1;
            if !taken.contains(&c) {
                break c;
            }
        };
        taken.insert(candidate.clone());
        *label = candidate;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn run(input: &[&str], reserved: &[&str]) -> Vec<String> {
        let mut v: Vec<String> = input.iter().map(|s| String::from(*s)).collect();
        suffix_duplicates(&mut v, reserved);
        v
    }

    #[test]
    fn unique_labels_untouched() {
        assert_eq!(run(&["mug", "desk"], &[]), vec!["mug", "desk"]);
    }

    #[test]
    fn duplicates_numbered_from_zero() {
        assert_eq!(
            run(&["bookshelf", "mug", "bookshelf"], &[]),
            vec!["bookshelf_0", "mug", "bookshelf_1"]
        );
    }

    #[test]
    fn skips_existing_suffix() {
        assert_eq!(
            run(&["cup", "cup_0", "cup"], &[]),
            vec!["cup_1", "cup_0", "cup_2"]
        );
    }

    #[test]
    fn reserved_names_force_suffix() {
        assert_eq!(run(&["floor", "rug"], &["ceiling", "wall", "floor"]), vec!["floor_0", "rug"]);
    }
}
