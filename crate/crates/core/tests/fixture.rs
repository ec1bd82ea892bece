//! Generator for the bundled toy fixture under `fixtures/toy`.
//!
//! Run with `CONCEPTVEC_REGENERATE_FIXTURE=1` to rewrite the files; otherwise
//! the test checks that the committed files match the generator.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STOPWORDS: &[&str] = &["the", "a", "of", "and", "to", "in", "is", "it", "with", "on"];

const ANIMALS: &[&str] = &["wolf", "bear", "deer", "fox", "eagle", "owl", "salmon", "otter", "badger", "horse"];
const PLANTS: &[&str] = &["oak", "fern", "moss", "willow"];
const VEHICLES: &[&str] = &["truck", "train", "tractor", "horse", "bus", "ferry"];
const TOOLS: &[&str] = &["hammer", "drill", "wrench"];

const NATURE_EXTRA: &[&str] = &[
    "forest", "river", "meadow", "valley", "lake", "mountain", "leaf", "nest", "den", "trail", "creek", "grove",
    "bark", "hollow", "pond", "ridge", "thicket", "burrow", "marsh", "glade",
];
const INDUSTRY_EXTRA: &[&str] = &[
    "factory", "steel", "engine", "rail", "depot", "workshop", "bolt", "gear", "motor", "cargo", "garage",
    "piston", "welder", "crane", "freight", "lathe", "rivet", "foundry", "highway", "diesel",
];
const RARE: &[&str] = &["quokka", "zither", "obelisk", "marimba"];

const COMMON_COUNT: usize = 80;
const TOPIC_PSEUDO: usize = 40;
/// Sampling weight of a thesaurus word relative to another topic word.
const GROUP_WEIGHT: f64 = 0.5;
const PARAGRAPHS: usize = 420;

fn common_words() -> Vec<String> {
    let onsets = ["b", "d", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
    let vowels = ["a", "e", "i", "o", "u"];
    let mut syllables = Vec::new();
    for o in onsets {
        for v in vowels {
            syllables.push(format!("{o}{v}"));
        }
    }
    let mut words = Vec::new();
    'outer: for (n, a) in syllables.iter().enumerate() {
        for b in syllables.iter().skip(n % 7).step_by(7) {
            words.push(format!("{a}{b}n"));
            if words.len() == COMMON_COUNT {
                break 'outer;
            }
        }
    }
    words
}

fn topic_words(topic: usize) -> Vec<(String, f64)> {
    let (groups, extra, suffix): (Vec<&str>, &[&str], &str) = if topic == 0 {
        (ANIMALS.iter().chain(PLANTS).copied().collect(), NATURE_EXTRA, "ra")
    } else {
        (VEHICLES.iter().chain(TOOLS).copied().collect(), INDUSTRY_EXTRA, "ko")
    };
    let onsets = ["gl", "br", "st", "fl", "tr"];
    let vowels = ["a", "e", "i", "o", "u", "ai", "ou", "ee"];
    let pseudo = onsets
        .iter()
        .flat_map(|o| vowels.iter().map(move |v| format!("{o}{v}{suffix}")))
        .take(TOPIC_PSEUDO);
    groups
        .into_iter()
        .map(|w| (w.to_string(), GROUP_WEIGHT))
        .chain(extra.iter().map(|w| (w.to_string(), 1.0)))
        .chain(pseudo.map(|w| (w, 1.0)))
        .collect()
}

fn weighted<'a, R: Rng>(rng: &mut R, items: &'a [(String, f64)], total: f64) -> &'a str {
    let mut t = rng.gen::<f64>() * total;
    for (w, p) in items {
        if t < *p {
            return w;
        }
        t -= p;
    }
    &items[items.len() - 1].0
}

fn corpus() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let common: Vec<(String, f64)> = common_words()
        .into_iter()
        .enumerate()
        .map(|(r, w)| (w, 1.0 / (r + 1) as f64))
        .collect();
    let common_total: f64 = common.iter().map(|c| c.1).sum();
    let topics = [topic_words(0), topic_words(1)];
    let totals = topics.clone().map(|t| t.iter().map(|c| c.1).sum::<f64>());

    let mut out = String::new();
    for p in 0..PARAGRAPHS {
        let topic = rng.gen_range(0..2);
        let sentences = rng.gen_range(4..=8);
        for s in 0..sentences {
            let len = rng.gen_range(6..=12);
            let mut words: Vec<String> = Vec::with_capacity(len);
            for _ in 0..len {
                let roll: f64 = rng.gen();
                let w = if roll < 0.15 {
                    STOPWORDS.choose(&mut rng).unwrap().to_string()
                } else if roll < 0.6 {
                    weighted(&mut rng, &topics[topic], totals[topic]).to_string()
                } else {
                    weighted(&mut rng, &common, common_total).to_string()
                };
                words.push(w);
            }
            if p % 97 == 0 && s == 0 {
                words.push(RARE[(p / 97) % RARE.len()].to_string());
            }
            let mut first = words[0].clone();
            first[..1].make_ascii_uppercase();
            words[0] = first;
            let sentence = words.join(" ");
            let end = if s % 5 == 4 { "!" } else { "." };
            if s > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{sentence}{end}");
        }
        out.push_str("\n\n");
    }
    out
}

fn thesaurus() -> String {
    let mut out = String::from("#root\n\t#nature\n\t\t#animals\n");
    for w in ANIMALS {
        let _ = writeln!(out, "\t\t\t{w}");
    }
    out.push_str("\t\t#plants\n");
    for w in PLANTS.iter().chain(&["zyxwv"]) {
        let _ = writeln!(out, "\t\t\t{w}");
    }
    out.push_str("\t#industry\n\t\t#transport\n\t\t\t#vehicles\n");
    for w in VEHICLES {
        let _ = writeln!(out, "\t\t\t\t{w}");
    }
    out.push_str("\t\t#tools\n");
    for w in TOOLS.iter().chain(&["power saw"]) {
        let _ = writeln!(out, "\t\t\t{w}");
    }
    out
}

fn categories() -> String {
    let nature: Vec<&str> = ANIMALS.iter().chain(PLANTS).copied().collect();
    let industry: Vec<&str> = VEHICLES.iter().chain(TOOLS).copied().collect();
    let common = common_words();
    let general: Vec<&str> = common.iter().skip(30).take(12).map(String::as_str).collect();
    format!(
        "nature\t{}\nindustry\t{}\ngeneral\t{}\n",
        nature.join(","),
        industry.join(","),
        general.join(",")
    )
}

fn similarity() -> String {
    let pairs = [
        ("wolf", "fox", 8.5),
        ("oak", "willow", 8.0),
        ("truck", "bus", 8.2),
        ("hammer", "wrench", 7.9),
        ("deer", "meadow", 6.1),
        ("train", "rail", 7.4),
        ("eagle", "owl", 7.7),
        ("factory", "steel", 6.6),
        ("wolf", "truck", 1.2),
        ("fern", "engine", 0.8),
        ("otter", "drill", 0.9),
        ("river", "cargo", 2.1),
        ("horse", "tractor", 5.0),
        ("salmon", "lake", 6.8),
        ("quokka", "wolf", 5.5),
    ];
    let mut out = String::new();
    for (a, b, s) in pairs {
        let _ = writeln!(out, "{a}\t{b}\t{s}");
    }
    out
}

fn analogies() -> String {
    let mut out = String::from(": habitat\n");
    let habitat = [("otter", "river"), ("eagle", "nest"), ("fox", "den"), ("salmon", "creek"), ("deer", "meadow")];
    for (i, (a, b)) in habitat.iter().enumerate() {
        for (c, d) in habitat.iter().skip(i + 1) {
            let _ = writeln!(out, "{a} {b} {c} {d}");
        }
    }
    out.push_str(": workplace\n");
    let work = [("welder", "workshop"), ("truck", "depot"), ("train", "rail"), ("lathe", "factory")];
    for (i, (a, b)) in work.iter().enumerate() {
        for (c, d) in work.iter().skip(i + 1) {
            let _ = writeln!(out, "{a} {b} {c} {d}");
        }
    }
    out.push_str(": gram-plural\n");
    out.push_str("wolf wolves bear bears\nhammer hammers drill drills\ntruck trucks bus buses\n");
    out
}

const PIPELINE: &str = r#"# Toy end-to-end configuration. Paths are relative to this file.
corpus = "corpus.txt"
stopwords = "stopwords.txt"
thesaurus = "thesaurus.txt"
categories = "categories.txt"
similarity = ["similarity.txt"]
analogy = "analogy.txt"
output_dir = "out"

min_count = 5
window = 8
weighting = "inverse-distance"

lambda_part = 20
min_size = 3
groups = 2

dims = 4
k = 0.1
iterations = 20
seed = 1
threads = 1

lambda_is = 5
nmin_range = [3, 9]
"#;

fn files() -> Vec<(&'static str, String)> {
    vec![
        ("corpus.txt", corpus()),
        ("stopwords.txt", STOPWORDS.iter().map(|w| format!("{w}\n")).collect()),
        ("thesaurus.txt", thesaurus()),
        ("categories.txt", categories()),
        ("similarity.txt", similarity()),
        ("analogy.txt", analogies()),
        ("pipeline.toml", PIPELINE.to_string()),
    ]
}

#[test]
fn committed_fixture_matches_generator() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let regenerate = std::env::var_os("CONCEPTVEC_REGENERATE_FIXTURE").is_some();
    for (name, content) in files() {
        let path = dir.join(name);
        if regenerate {
            std::fs::write(&path, &content).unwrap();
        } else {
            let committed = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(committed == content, "{name} differs from the generator output");
        }
    }
}
