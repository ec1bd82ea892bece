use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conceptvec::corpus::Vocabulary;
use conceptvec::embedding::EmbeddingMatrix;
use conceptvec::eval::{analogy_eval, similarity_eval, spearman, AnalogyDataset, SimilarityDataset};
use conceptvec::interpret::{score_embedding, CategoryDataset};
use conceptvec::lexicon::{partition, select_groups, ConceptAssignment, RawGroup, ThesaurusTree, Truncation};
use conceptvec::cooccur::CooccurrenceRecord;
use conceptvec::trainer::{record_cost, ModelParameters, Objective};

const WORDS: usize = 30;

fn word(i: usize) -> String {
    format!("w{i}")
}

fn vocab() -> Vocabulary {
    Vocabulary::from_ranked((0..WORDS).map(|i| (word(i), (WORDS - i) as u64 + 1)).collect()).unwrap()
}

/// Renders a random tree: each node either holds 1..8 words or 1..3 children.
fn tree_source(rng: &mut ChaCha8Rng, depth: usize, name: &mut usize, out: &mut String) {
    let indent = "\t".repeat(depth);
    out.push_str(&format!("{indent}#n{name}\n"));
    *name += 1;
    if depth < 3 && rng.gen_bool(0.6) {
        for _ in 0..rng.gen_range(1..=3) {
            tree_source(rng, depth + 1, name, out);
        }
    } else {
        for _ in 0..rng.gen_range(1..=8) {
            out.push_str(&format!("{indent}\t{}\n", word(rng.gen_range(0..WORDS))));
        }
    }
}

fn random_tree(seed: u64) -> ThesaurusTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut src = String::new();
    tree_source(&mut rng, 0, &mut 0, &mut src);
    ThesaurusTree::parse(&src).unwrap()
}

fn matrix(rows: usize, dims: usize, values: &[f64]) -> EmbeddingMatrix {
    EmbeddingMatrix::new((0..rows).map(word).collect(), dims, values[..rows * dims].to_vec()).unwrap()
}

fn categories(members: &[Vec<usize>]) -> CategoryDataset {
    CategoryDataset::new(
        (0..members.len()).map(|c| format!("c{c}")).collect(),
        members.iter().map(|m| m.iter().map(|&w| word(w)).collect()).collect(),
    )
    .unwrap()
}

prop_compose! {
    fn embedding_case()(rows in 10usize..30, dims in 1usize..5)
        (values in prop::collection::vec(-1.0f64..1.0, rows * dims), rows in Just(rows), dims in Just(dims),
         cats in prop::collection::vec(prop::collection::btree_set(0..rows, 1..8), 1..4))
        -> (EmbeddingMatrix, Vec<Vec<usize>>)
    {
        (matrix(rows, dims, &values), cats.into_iter().map(|c| c.into_iter().collect()).collect())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partition_groups_respect_threshold(seed in any::<u64>(), lambda in 1usize..12) {
        let tree = random_tree(seed);
        let groups = partition(&tree, lambda, &vocab(), Truncation::MostFrequent).unwrap();
        let all: HashSet<String> = tree.descendant_words(ThesaurusTree::ROOT).into_iter().map(str::to_owned).collect();
        for g in &groups {
            if g.truncated {
                prop_assert_eq!(g.words.len(), lambda);
            } else {
                prop_assert!(g.words.len() < lambda);
            }
            prop_assert!(g.words.iter().all(|w| all.contains(w)));
        }
    }

    #[test]
    fn raising_min_size_never_adds_groups(seed in any::<u64>(), lambda in 2usize..12, lo in 1usize..4, step in 0usize..4) {
        let v = vocab();
        let groups = partition(&random_tree(seed), lambda, &v, Truncation::MostFrequent).unwrap();
        let survivors = |min: usize| match select_groups(&groups, &v, min, 0) {
            Ok(sel) => sel.after_size_filter,
            Err(_) => 0,
        };
        prop_assert!(survivors(lo + step) <= survivors(lo));
    }

    #[test]
    fn selection_keeps_exactly_target(sizes in prop::collection::vec(1usize..6, 1..12), target in 0usize..12) {
        let v = vocab();
        let raw: Vec<RawGroup> = sizes
            .iter()
            .enumerate()
            .map(|(g, &s)| RawGroup { label: format!("g{g}"), words: (g..g + s).map(|w| word(w % WORDS)).collect(), truncated: false })
            .collect();
        match select_groups(&raw, &v, 2, target) {
            Ok(sel) => {
                prop_assert_eq!(sel.assignment.dims(), target);
                prop_assert_eq!(sel.after_size_filter - target, sel.dropped_by_rank.len());
            }
            Err(_) => prop_assert!(sizes.iter().filter(|&&s| s >= 2).count() < target),
        }
    }

    #[test]
    fn interpretability_in_range((e, cats) in embedding_case(), lambda in 1usize..6, n_min in 1usize..4) {
        if let Ok(r) = score_embedding(&e, &categories(&cats), lambda, n_min) {
            prop_assert!((0.0..=100.0).contains(&r.aggregate));
            prop_assert!(r.per_dimension.iter().all(|s| (0.0..=100.0).contains(s)));
        }
    }

    #[test]
    fn interpretability_ignores_scale_and_sign((e, cats) in embedding_case(), lambda in 1usize..6, dim in 0usize..4, power in -3i32..4) {
        let ds = categories(&cats);
        let dim = dim % e.dims();
        let scale = 2f64.powi(power);
        let mut scaled = e.clone();
        scaled.map_dim(dim, |v| v * scale);
        let mut flipped = e.clone();
        flipped.map_dim(dim, |v| -v);
        let base = score_embedding(&e, &ds, lambda, 1).unwrap();
        prop_assert_eq!(score_embedding(&scaled, &ds, lambda, 1).unwrap().aggregate, base.aggregate);
        prop_assert_eq!(score_embedding(&flipped, &ds, lambda, 1).unwrap().aggregate, base.aggregate);
    }

    #[test]
    fn spearman_is_rank_based(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..40)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(rho) = spearman(&a, &b) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
            let squashed: Vec<f64> = b.iter().map(|x| x.exp()).collect();
            prop_assert!((spearman(&a, &squashed).unwrap() - rho).abs() < 1e-12);
            prop_assert!((spearman(&b, &a).unwrap() - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluation_exact_under_sign_flips_and_scaling(
        values in prop::collection::vec(-1.0f64..1.0, 48),
        signs in prop::collection::vec(any::<bool>(), 4),
        scale in -2i32..4,
        questions in prop::collection::vec(prop::collection::vec(0usize..12, 4), 1..15),
    ) {
        // both transforms are exact in floating point, so results must match bit for bit
        let e = matrix(12, 4, &values);
        let mut t = e.clone();
        for (d, &flip) in signs.iter().enumerate() {
            t.map_dim(d, |v| if flip { -v } else { v } * 2f64.powi(scale));
        }
        let text: String = questions.iter().map(|q| format!("{} {} {} {}\n", word(q[0]), word(q[1]), word(q[2]), word(q[3]))).collect();
        let ds = AnalogyDataset::parse(&format!(": s\n{text}")).unwrap();
        prop_assert_eq!(analogy_eval(&e, &ds, None).overall, analogy_eval(&t, &ds, None).overall);
        let sim = SimilarityDataset::new(
            "s",
            questions.iter().enumerate().map(|(k, q)| (word(q[0]), word(q[1]), k as f64)).collect(),
        )
        .unwrap();
        match (similarity_eval(&e, &sim), similarity_eval(&t, &sim)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.correlation, b.correlation),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn similarity_invariant_under_dimension_permutation(
        values in prop::collection::vec(-1.0f64..1.0, 48),
        perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
        pairs in prop::collection::vec((0usize..12, 0usize..12), 2..15),
    ) {
        // permuting changes summation order, so cosines agree only to rounding;
        // require their gaps to exceed it
        let e = matrix(12, 4, &values);
        let mut permuted = Vec::with_capacity(48);
        for r in 0..12 {
            for d in 0..4 {
                permuted.push(e.row(r)[perm[d]]);
            }
        }
        let p = matrix(12, 4, &permuted);
        let mut cos: Vec<f64> = pairs.iter().map(|&(a, b)| conceptvec::eval::cosine(e.row(a), e.row(b))).collect();
        cos.sort_by(f64::total_cmp);
        prop_assume!(cos.windows(2).all(|w| w[1] - w[0] > 1e-9));
        let sim = SimilarityDataset::new(
            "s",
            pairs.iter().enumerate().map(|(k, &(a, b))| (word(a), word(b), k as f64)).collect(),
        )
        .unwrap();
        let (a, b) = (similarity_eval(&e, &sim).unwrap(), similarity_eval(&p, &sim).unwrap());
        prop_assert_eq!(a.correlation, b.correlation);
    }

    #[test]
    fn cost_is_nonnegative_and_zero_weight_matches_baseline(
        values in prop::collection::vec(-2.0f64..2.0, 20),
        x in 0.01f64..300.0,
        k in 0.0f64..2.0,
    ) {
        let mut p = ModelParameters::zeros(2, 4);
        p.word.copy_from_slice(&values[..8]);
        p.context.copy_from_slice(&values[8..16]);
        p.word_bias.copy_from_slice(&values[16..18]);
        p.context_bias.copy_from_slice(&values[18..20]);
        let a = ConceptAssignment::new(vec!["g".into()], vec![vec![0]], 2).unwrap();
        let rec = CooccurrenceRecord { i: 0, j: 1, x };
        let obj = |k| Objective { x_max: 75.0, alpha: 0.75, k };
        let with = record_cost(&rec, &p, &obj(k), Some(&a)).unwrap();
        let base = record_cost(&rec, &p, &obj(0.0), None).unwrap();
        prop_assert!(with >= base && base >= 0.0);
        prop_assert_eq!(record_cost(&rec, &p, &obj(0.0), Some(&a)).unwrap(), base);
    }
}
