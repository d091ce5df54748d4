//! Writes the synthetic fixture corpora used by the shipped experiment config.
//!
//!     cargo run -p creole-lm --example make_fixtures -- fixtures/data

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use creole_lm::synth::{creole_of, SyntheticLanguage, CYRILLIC, GREEK, LATIN};

const CREOLE_OWN_WORDS: usize = 120;

fn lines(path: &PathBuf, rows: &[String]) {
    fs::write(path, rows.join("\n") + "\n").unwrap();
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/data".into()));
    fs::create_dir_all(&dir).unwrap();

    let a = SyntheticLanguage::with_alphabet("aux-a", LATIN, 200, 11);
    let b = SyntheticLanguage::with_alphabet("aux-b", GREEK, 200, 12);
    let c = SyntheticLanguage::with_alphabet("aux-c", CYRILLIC, 200, 13);
    let creole = creole_of("creole:syn", LATIN, CREOLE_OWN_WORDS, &[&a, &b, &c], 25, 14);

    lines(&dir.join("creole.txt"), &creole.sentences(400, 1));
    lines(&dir.join("creole_b.txt"), &creole.sentences(200, 2));
    lines(&dir.join("aux_a.txt"), &a.sentences(600, 3));
    lines(&dir.join("aux_b.txt"), &b.sentences(600, 4));
    lines(&dir.join("aux_c.txt"), &c.sentences(600, 5));

    let toy = SyntheticLanguage::with_alphabet("creole:toy", LATIN, 150, 3);
    lines(&dir.join("memorize.txt"), &toy.sentences(64, 4));

    let own = &creole.lexicon[..CREOLE_OWN_WORDS];
    lines(&dir.join("creole_dict.txt"), &own[..60].to_vec());

    // entity task: a fixed set of creole words are names
    let names: Vec<&String> = own[100..112].iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (split, n) in [("train", 300), ("dev", 60), ("test", 60)] {
        let mut out = String::new();
        for s in creole.sentences(n, rng.random()) {
            let mut words: Vec<String> = s.split_whitespace().map(String::from).collect();
            if rng.random_bool(0.6) {
                let at = rng.random_range(0..=words.len());
                let len = rng.random_range(1..=2);
                for k in 0..len {
                    words.insert(at + k, names[rng.random_range(0..names.len())].clone());
                }
            }
            let mut prev_name = false;
            for w in &words {
                let is_name = names.contains(&w);
                let label = match (is_name, prev_name) {
                    (true, true) => "I-PER",
                    (true, false) => "B-PER",
                    _ => "O",
                };
                prev_name = is_name;
                out.push_str(&format!("{w}\t{label}\n"));
            }
            out.push('\n');
        }
        fs::write(dir.join(format!("ner_{split}.tsv")), out).unwrap();
    }
}
