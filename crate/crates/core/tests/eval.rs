mod common;

use biolit_core::eval::{
    causal_lm_loss, classification_accuracy, closed_vqa_predict, infonce_loss, l2_normalize, recall_at_k,
    ClosedVqaInstance, ContrastiveBatch, Direction, RetrievalSet,
};
use common::oracle::{naive_info_nce, naive_recall};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_rows(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| l2_normalize(&(0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>())).collect()
}

#[test]
fn three_random_pairs_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (img, txt) = (unit_rows(3, 8, &mut rng), unit_rows(3, 8, &mut rng));
    let batch = ContrastiveBatch::new(img.clone(), txt.clone(), 0.07).unwrap();
    let got = infonce_loss(&batch).unwrap().loss;
    assert!((got - naive_info_nce(&img, &txt, 0.07)).abs() < 1e-9);
}

#[test]
fn swapping_modalities_swaps_directional_losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (img, txt) = (unit_rows(6, 5, &mut rng), unit_rows(6, 5, &mut rng));
    let a = infonce_loss(&ContrastiveBatch::new(img.clone(), txt.clone(), 0.1).unwrap()).unwrap();
    let b = infonce_loss(&ContrastiveBatch::new(txt, img, 0.1).unwrap()).unwrap();
    assert_eq!(a.image_to_text, b.text_to_image);
    assert_eq!(a.text_to_image, b.image_to_text);
    assert_eq!(a.loss, b.loss);
}

#[test]
fn ten_by_two_vqa_tally() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut variants = Vec::new();
    let mut tally = Vec::new();
    for _ in 0..2 {
        let mut correct = 0;
        let mut v = Vec::new();
        for _ in 0..10 {
            let cands = unit_rows(4, 6, &mut rng);
            let image = unit_rows(1, 6, &mut rng).remove(0);
            let answer = rng.random_range(0..4);
            let sims: Vec<f64> = cands.iter().map(|c| c.iter().zip(&image).map(|(a, b)| a * b).sum()).collect();
            let mut best = 0;
            for j in 1..4 {
                if sims[j] > sims[best] {
                    best = j;
                }
            }
            let inst = ClosedVqaInstance { image_embedding: image, candidate_embeddings: cands, correct_index: answer };
            assert_eq!(closed_vqa_predict(&inst), best);
            if best == answer {
                correct += 1;
            }
            v.push(inst);
        }
        tally.push(correct as f64 / 10.0);
        variants.push(v);
    }
    let acc = classification_accuracy(&variants, 2).unwrap();
    assert!((acc - (tally[0] + tally[1]) / 2.0).abs() < 1e-12);
}

#[test]
fn fifty_pair_recall_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let img = unit_rows(50, 16, &mut rng);
    let cap: Vec<Vec<f64>> = img
        .iter()
        .map(|v| l2_normalize(&v.iter().map(|x| x + rng.random_range(-0.6..0.6)).collect::<Vec<_>>()))
        .collect();
    let set = RetrievalSet { image_embeddings: img.clone(), caption_embeddings: cap.clone() };
    for k in [1, 5, 10, 50] {
        assert_eq!(recall_at_k(&set, k, Direction::I2T).unwrap(), naive_recall(&img, &cap, k));
        assert_eq!(recall_at_k(&set, k, Direction::T2I).unwrap(), naive_recall(&cap, &img, k));
    }
}

#[test]
fn causal_loss_matches_compensated_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p: Vec<f64> = (0..10).map(|_| rng.random_range(1e-6..1.0)).collect();
    // Neumaier summation of −ln p.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in p.iter().map(|v| -v.ln()) {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    assert!((causal_lm_loss(&p).unwrap() - (sum + comp)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn infonce_matches_oracle(seed in any::<u64>(), n in 1usize..12, d in 2usize..10, tau in 0.02f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (img, txt) = (unit_rows(n, d, &mut rng), unit_rows(n, d, &mut rng));
        let got = infonce_loss(&ContrastiveBatch::new(img.clone(), txt.clone(), tau).unwrap()).unwrap();
        prop_assert!((got.loss - naive_info_nce(&img, &txt, tau)).abs() < 1e-9);
    }

    #[test]
    fn large_temperature_tends_to_ln_n(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (img, txt) = (unit_rows(n, 6, &mut rng), unit_rows(n, 6, &mut rng));
        let l = infonce_loss(&ContrastiveBatch::new(img, txt, 1e3).unwrap()).unwrap().loss;
        prop_assert!((l - (n as f64).ln()).abs() < 1e-3);
    }

    #[test]
    fn argmax_ignores_positive_rescaling(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cands = unit_rows(5, 4, &mut rng);
        let image = unit_rows(1, 4, &mut rng).remove(0);
        let a = ClosedVqaInstance { image_embedding: image.clone(), candidate_embeddings: cands.clone(), correct_index: 0 };
        let b = ClosedVqaInstance {
            image_embedding: image.iter().map(|x| x * scale).collect(),
            candidate_embeddings: cands,
            correct_index: 0,
        };
        prop_assert_eq!(closed_vqa_predict(&a), closed_vqa_predict(&b));
    }

    #[test]
    fn recall_monotone_in_k_and_permutation_invariant(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (img, cap) = (unit_rows(n, 4, &mut rng), unit_rows(n, 4, &mut rng));
        let set = RetrievalSet { image_embeddings: img.clone(), caption_embeddings: cap.clone() };
        let curve: Vec<f64> = (1..=n + 1).map(|k| recall_at_k(&set, k, Direction::I2T).unwrap()).collect();
        prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(curve[n - 1], 1.0);

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let shuffled = RetrievalSet {
            image_embeddings: perm.iter().map(|&i| img[i].clone()).collect(),
            caption_embeddings: perm.iter().map(|&i| cap[i].clone()).collect(),
        };
        for k in [1, 3, 10] {
            prop_assert_eq!(recall_at_k(&set, k, Direction::T2I).unwrap(), recall_at_k(&shuffled, k, Direction::T2I).unwrap());
        }
        let a = infonce_loss(&ContrastiveBatch::new(img, cap, 0.5).unwrap()).unwrap().loss;
        let b = infonce_loss(&ContrastiveBatch::new(shuffled.image_embeddings, shuffled.caption_embeddings, 0.5).unwrap()).unwrap().loss;
        prop_assert!((a - b).abs() < 1e-12);
    }
}
