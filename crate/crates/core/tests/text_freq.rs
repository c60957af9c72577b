mod common;

use relgraph_core::corpus::compute_text_freq;

use common::{naive_text_freq, random_site};

#[test]
fn matches_naive_counter_on_ten_corpora() {
    for seed in 0..10u64 {
        let docs = random_site(seed, 2 + seed as usize, 5, 60);
        let table = compute_text_freq(&docs).unwrap();
        let oracle = naive_text_freq(&docs);
        assert_eq!(table.counts.len(), oracle.len(), "seed {seed}");
        for (text, f) in &oracle {
            assert_eq!(table.freq(text), *f, "seed {seed} text {text:?}");
        }
        assert_eq!(table.freq("never appears anywhere"), 0.0);
    }
}

#[test]
fn duplicating_the_corpus_keeps_frequencies() {
    // Counts double and the page count doubles, so per-page frequency is unchanged.
    let docs = random_site(77, 5, 5, 40);
    let once = compute_text_freq(&docs).unwrap();
    let twice_docs: Vec<_> = docs.iter().chain(docs.iter()).cloned().collect();
    let twice = compute_text_freq(&twice_docs).unwrap();
    for (text, &c) in &once.counts {
        assert_eq!(twice.counts[text], 2 * c);
        assert_eq!(twice.freq(text), once.freq(text));
    }
}

#[test]
fn rejects_empty_and_mixed_input() {
    assert!(compute_text_freq(&[]).is_err());
    let mut docs = random_site(1, 2, 5, 10);
    docs.extend(random_site(2, 1, 5, 10));
    assert!(compute_text_freq(&docs).is_err());
}
