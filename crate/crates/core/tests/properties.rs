//! Property tests for cross-cutting invariants: tokenization stability,
//! chunk coverage, discretization counts, ranking/selection determinism,
//! vote aggregation, parser totality and metric bounds.

use std::collections::BTreeMap;

use proptest::prelude::*;

use sentsel_core::alignment::match_score;
use sentsel_core::category::{ImpactCategory, ALL_CATEGORIES};
use sentsel_core::corpus::{count_tokens, reference_tokenize, segment_sentences, Document};
use sentsel_core::inference::{majority_vote, parse_llm_answer};
use sentsel_core::metrics::{compute_f1, compute_ndcg};
use sentsel_core::scoring::{chunk_text, entropy, softmax, ChunkConfig};
use sentsel_core::selection::{
    assemble_input, discretize_scores, sample_selection, select_top_k, InputStyle,
    RankWeighting, SelectionConfig, SelectionMode, SentenceRanking,
};

fn word() -> impl Strategy<Value = String> {
    "[A-Za-z][a-z]{0,7}"
}

fn sentence_doc(max_sentences: usize) -> impl Strategy<Value = Document> {
    prop::collection::vec(prop::collection::vec(word(), 1..8), 1..max_sentences).prop_map(
        |sentences| {
            let text = sentences
                .iter()
                .map(|words| {
                    let mut s = words.join(" ");
                    // Capitalize so segmentation splits at every terminal.
                    s[..1].make_ascii_uppercase();
                    s.push('.');
                    s
                })
                .collect::<Vec<_>>()
                .join(" ");
            Document {
                doc_id: "prop".into(),
                species: "Testus species".into(),
                title: String::new(),
                sentences: segment_sentences(&text).unwrap(),
                label: None,
                evidence_indices: None,
            }
        },
    )
}

proptest! {
    #[test]
    fn token_count_matches_tokenizer(text in ".{0,200}") {
        prop_assert_eq!(count_tokens(&text), reference_tokenize(&text).len());
    }

    #[test]
    fn tokens_have_no_whitespace(text in ".{0,200}") {
        for token in reference_tokenize(&text) {
            prop_assert!(!token.is_empty());
            prop_assert!(!token.chars().any(char::is_whitespace));
        }
    }

    #[test]
    fn segmentation_preserves_token_stream(doc in sentence_doc(12)) {
        let rejoined = doc
            .sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let original = doc.full_text();
        prop_assert_eq!(reference_tokenize(&rejoined), reference_tokenize(&original));
    }

    #[test]
    fn match_score_is_symmetric_and_bounded(
        a in prop::collection::vec(word(), 0..12),
        b in prop::collection::vec(word(), 0..12),
    ) {
        let ab = match_score(&a, &b);
        let ba = match_score(&b, &a);
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert_eq!(match_score(&a, &a), 1.0);
        }
    }

    #[test]
    fn chunks_cover_exactly_with_declared_overlap(
        n in 0usize..2000,
        max_tokens in 1usize..600,
        overlap_frac in 0.0f64..1.0,
    ) {
        let overlap = ((max_tokens - 1) as f64 * overlap_frac) as usize;
        let tokens: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        let cfg = ChunkConfig { max_tokens, overlap };
        let chunks = chunk_text(&tokens, &cfg).unwrap();

        if n == 0 {
            prop_assert!(chunks.is_empty());
            return Ok(());
        }
        prop_assert_eq!(chunks[0].token_start, 0);
        prop_assert_eq!(chunks.last().unwrap().token_end, n);
        for chunk in &chunks {
            prop_assert!(chunk.token_end > chunk.token_start);
            prop_assert!(chunk.token_end - chunk.token_start <= max_tokens);
        }
        for pair in chunks.windows(2) {
            // Every chunk except the last is full-size and the next starts
            // exactly `overlap` tokens before it ends.
            prop_assert_eq!(pair[0].token_end - pair[0].token_start, max_tokens);
            prop_assert_eq!(pair[1].token_start, pair[0].token_end - overlap);
        }
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-30.0f64..30.0, 1..10)) {
        let probs = softmax(&logits);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
        let h = entropy(&probs);
        prop_assert!(h >= -1e-12 && h <= (logits.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn discretization_counts_follow_ceiling_rule(
        scores in prop::collection::vec(-100.0f64..100.0, 1..400),
    ) {
        let n = scores.len();
        let classes = discretize_scores(&scores);
        prop_assert_eq!(classes.len(), n);
        let count = |c: u8| classes.iter().filter(|&&x| x == c).count();
        let c2 = n.div_ceil(5);
        let c1 = (3 * n).div_ceil(10).min(n - c2);
        prop_assert_eq!(count(2), c2);
        prop_assert_eq!(count(1), c1);
        prop_assert_eq!(count(0), n - c2 - c1);
    }

    #[test]
    fn ranking_order_is_a_sorted_permutation(
        scores in prop::collection::vec(-10.0f64..10.0, 1..60),
    ) {
        let ranking = SentenceRanking::from_scores("d", scores.clone());
        let mut sorted = ranking.order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..scores.len()).collect::<Vec<_>>());
        for pair in ranking.order.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            prop_assert!(
                scores[a] > scores[b] || (scores[a] == scores[b] && a < b),
                "order violates (score desc, index asc) at {a} vs {b}"
            );
        }
    }

    #[test]
    fn ranking_is_invariant_under_affine_rescale(
        scores in prop::collection::vec(-10.0f64..10.0, 1..60),
        scale in 0.001f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let base = SentenceRanking::from_scores("d", scores.clone());
        let rescaled: Vec<f64> = scores.iter().map(|s| s * scale + shift).collect();
        let other = SentenceRanking::from_scores("d", rescaled);
        prop_assert_eq!(base.order, other.order);
    }

    #[test]
    fn top_k_matches_brute_force(
        scores in prop::collection::vec(0.0f64..1.0, 1..80),
        k in 1usize..40,
    ) {
        let ranking = SentenceRanking::from_scores("d", scores.clone());
        let mut brute: Vec<usize> = (0..scores.len()).collect();
        brute.sort_by(|&a, &b| {
            scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b))
        });
        let mut expected = brute[..k.min(scores.len())].to_vec();
        expected.sort_unstable();
        prop_assert_eq!(select_top_k(&ranking, k), expected);
    }

    #[test]
    fn samples_are_pool_subsets_and_reproducible(
        n in 1usize..120,
        seed in 0u64..1000,
        sample_index in 0u64..50,
        inverse in any::<bool>(),
    ) {
        let ranking = SentenceRanking::from_scores("d", (0..n).map(|i| i as f64).collect());
        let cfg = SelectionConfig {
            mode: SelectionMode::Randomized,
            seed,
            weighting: if inverse { RankWeighting::InverseRank } else { RankWeighting::LinearRank },
            ..Default::default()
        };
        let selection = sample_selection(&ranking, &cfg, sample_index);
        prop_assert_eq!(selection.clone(), sample_selection(&ranking, &cfg, sample_index));
        let pool: Vec<usize> = ranking.order[..cfg.pool.min(n)].to_vec();
        prop_assert_eq!(selection.len(), cfg.k.min(pool.len()));
        prop_assert!(selection.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(selection.iter().all(|i| pool.contains(i)));
    }

    #[test]
    fn assembly_preserves_document_order(
        doc in sentence_doc(16),
        picks in prop::collection::btree_set(0usize..16, 1..8),
        gap_marked in any::<bool>(),
    ) {
        let indices: Vec<usize> =
            picks.into_iter().filter(|&i| i < doc.sentences.len()).collect();
        prop_assume!(!indices.is_empty());
        let style = if gap_marked { InputStyle::GapMarked } else { InputStyle::Concatenated };
        let assembled = assemble_input(&doc, &indices, style);
        let mut cursor = 0usize;
        for &index in &indices {
            let text = &doc.sentences[index].text;
            let at = assembled[cursor..].find(text.as_str());
            prop_assert!(at.is_some(), "sentence {index} missing or out of order");
            cursor += at.unwrap() + text.len();
        }
        if style == InputStyle::Concatenated {
            let texts: Vec<&str> = indices.iter().map(|&i| doc.sentences[i].text.as_str()).collect();
            prop_assert_eq!(assembled, texts.join(" "));
        }
    }

    #[test]
    fn majority_vote_matches_brute_force(
        raw in prop::collection::vec((0usize..6, 0usize..3), 1..30),
    ) {
        // Confidences from a coarse grid so count and confidence ties occur.
        let votes: Vec<(ImpactCategory, f64)> = raw
            .iter()
            .map(|&(c, conf)| (ALL_CATEGORIES[c], conf as f64 * 0.25))
            .collect();
        let (winner, counts) = majority_vote(&votes).unwrap();

        let mut by_cat: BTreeMap<ImpactCategory, (usize, f64)> = BTreeMap::new();
        for &(cat, conf) in &votes {
            let entry = by_cat.entry(cat).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += conf;
        }
        let expected = by_cat
            .iter()
            .map(|(&cat, &(count, sum))| (cat, count, sum / count as f64))
            .fold(None::<(ImpactCategory, usize, f64)>, |best, (cat, count, mean)| {
                match best {
                    None => Some((cat, count, mean)),
                    Some((bc, bcount, bmean)) => {
                        if count > bcount
                            || (count == bcount && mean > bmean)
                            || (count == bcount && mean == bmean && cat.index() < bc.index())
                        {
                            Some((cat, count, mean))
                        } else {
                            Some((bc, bcount, bmean))
                        }
                    }
                }
            })
            .unwrap();
        prop_assert_eq!(winner, expected.0);
        let total: usize = counts.values().sum();
        prop_assert_eq!(total, votes.len());
    }

    #[test]
    fn answer_parser_is_total(response in ".{0,400}") {
        let _ = parse_llm_answer(&response);
    }

    #[test]
    fn answer_parser_recovers_every_label(
        category_index in 0usize..6,
        upper in any::<bool>(),
        punct in any::<bool>(),
    ) {
        let category = ALL_CATEGORIES[category_index];
        let mut label = category.label().to_string();
        if upper {
            label = label.to_uppercase();
        }
        if punct {
            label.push('.');
        }
        let parsed = parse_llm_answer(&format!("Summary: s.\nAnswer: {label}\nEND.")).unwrap();
        prop_assert_eq!(parsed.category, category);
    }

    #[test]
    fn f1_matches_brute_force_confusion(
        pairs in prop::collection::vec((0usize..6, 0usize..6), 1..200),
    ) {
        let preds: Vec<ImpactCategory> = pairs.iter().map(|&(p, _)| ALL_CATEGORIES[p]).collect();
        let golds: Vec<ImpactCategory> = pairs.iter().map(|&(_, g)| ALL_CATEGORIES[g]).collect();
        let report = compute_f1(&preds, &golds).unwrap();

        // Independent confusion counting.
        let mut confusion = [[0usize; 6]; 6];
        for (&(p, g), _) in pairs.iter().zip(0..) {
            confusion[g][p] += 1;
        }
        prop_assert_eq!(report.confusion, confusion);

        let accuracy =
            pairs.iter().filter(|&&(p, g)| p == g).count() as f64 / pairs.len() as f64;
        prop_assert_eq!(report.micro_f1, accuracy);

        for category in ALL_CATEGORIES {
            let c = category.index();
            let tp = confusion[c][c];
            let fp: usize = (0..6).filter(|&g| g != c).map(|g| confusion[g][c]).sum();
            let fn_: usize = (0..6).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
            let expected = if 2 * tp + fp + fn_ == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
            };
            prop_assert_eq!(report.per_class[&category].f1, expected);
        }
    }

    #[test]
    fn ndcg_is_bounded_and_ideal_is_one(
        gains in prop::collection::vec(0.0f64..5.0, 1..100),
        seed in any::<u64>(),
    ) {
        prop_assume!(gains.iter().any(|&g| g > 0.0));
        // Deterministic shuffle of the identity order via an LCG.
        let mut order: Vec<usize> = (0..gains.len()).collect();
        let mut state = seed | 1;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let score = compute_ndcg(&order, &gains, None).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&score), "{score}");

        let mut ideal: Vec<usize> = (0..gains.len()).collect();
        ideal.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap());
        prop_assert!((compute_ndcg(&ideal, &gains, None).unwrap() - 1.0).abs() < 1e-12);
    }
}
