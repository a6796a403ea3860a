use beamcurse::corpus::generate_corpus;
use beamcurse::model::{random_lattice, HashModel, HashModelSpec};
use beamcurse::{
    decode, decode_greedy, exhaustive_best, DecodeConfig, ScoringMethod, SentenceContext, Stopping,
    Vocab,
};
use proptest::prelude::*;

fn hash_model(seed: u64) -> HashModel {
    HashModel::new(HashModelSpec::new(seed, Vocab::with_size(50).unwrap())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wide_beam_matches_exhaustive_search(
        seed in any::<u64>(),
        vocab in 3u32..=4,
        depth in 1usize..=5,
        l_frac in 0.0f64..1.0,
        r in 0.0f64..3.0,
    ) {
        let lattice = random_lattice(seed, vocab, depth).unwrap();
        let max_len = lattice.depth() + 1;
        let l_pred = 0.5 + l_frac * max_len as f64;
        let cfg = DecodeConfig::new(64, Stopping::MaxLen);
        for method in ScoringMethod::all(r, 0.8, 0.0) {
            let mut ctx = SentenceContext::new(vec![2], l_pred, max_len).unwrap();
            let beam = decode(&lattice, &mut ctx, &cfg, &method).unwrap();
            let (best, score) = exhaustive_best(&lattice, &ctx, &method, max_len - 1).unwrap();
            prop_assert_eq!(beam.best.tokens(), best.tokens(), "{}", method.label());
            prop_assert_eq!(beam.best_adjusted_score, score);
        }
    }
}

#[test]
fn decoding_is_repeatable() {
    let model = hash_model(21);
    let cfg = DecodeConfig::new(6, Stopping::Optimal);
    let src = vec![3, 14, 15, 9, 26, 5];
    let mut ctx = SentenceContext::new(src.clone(), 7.5, cfg.max_len(src.len())).unwrap();
    let first = decode(
        &model,
        &mut ctx,
        &cfg,
        &ScoringMethod::BoundedAdaptiveReward,
    )
    .unwrap();
    for _ in 0..1000 {
        let mut ctx = SentenceContext::new(src.clone(), 7.5, cfg.max_len(src.len())).unwrap();
        let again = decode(
            &model,
            &mut ctx,
            &cfg,
            &ScoringMethod::BoundedAdaptiveReward,
        )
        .unwrap();
        assert_eq!(again, first);
    }
}

#[test]
fn greedy_equals_beam_of_one() {
    let model = hash_model(33);
    let cfg = DecodeConfig::new(1, Stopping::TopmostFinished);
    let corpus = generate_corpus(&model, 33, 200, (3, 25), &cfg).unwrap();
    for rec in &corpus {
        let mut ctx =
            SentenceContext::new(rec.src.clone(), 1.0, cfg.max_len(rec.src.len())).unwrap();
        let greedy = decode_greedy(&model, &ctx).unwrap();
        let beam = decode(&model, &mut ctx, &cfg, &ScoringMethod::Default).unwrap();
        assert_eq!(beam.best.tokens(), greedy.best.tokens());
        assert_eq!(beam.best.score(), greedy.best.score());
    }
}

#[test]
fn finished_pool_grows_with_beam() {
    let model = hash_model(44);
    let corpus = generate_corpus(
        &model,
        44,
        40,
        (3, 20),
        &DecodeConfig::new(1, Stopping::MaxLen),
    )
    .unwrap();
    for rec in &corpus {
        let mut last = 0;
        for b in [1, 2, 4, 8, 16, 32] {
            let cfg = DecodeConfig::new(b, Stopping::MaxLen);
            let mut ctx =
                SentenceContext::new(rec.src.clone(), 1.0, cfg.max_len(rec.src.len())).unwrap();
            let result = decode(&model, &mut ctx, &cfg, &ScoringMethod::Default).unwrap();
            assert!(result.finished_pool.len() >= last, "b={b}");
            last = result.finished_pool.len();
        }
    }
}

#[test]
fn optimal_stopping_never_changes_the_result() {
    let model = hash_model(55);
    let corpus = generate_corpus(
        &model,
        55,
        60,
        (3, 20),
        &DecodeConfig::new(1, Stopping::MaxLen),
    )
    .unwrap();
    let methods = [
        ScoringMethod::BpNorm,
        ScoringMethod::LengthNorm,
        ScoringMethod::BoundedAdaptiveReward,
        ScoringMethod::BoundedWordReward { r: 1.5 },
    ];
    for b in [3, 12] {
        for method in &methods {
            for (i, rec) in corpus.iter().enumerate() {
                // deliberately off predictions so the bounds matter
                let l_pred = rec.src.len() as f64 * (0.5 + (i % 4) as f64 * 0.3);
                let full_cfg = DecodeConfig::new(b, Stopping::MaxLen);
                let max_len = full_cfg.max_len(rec.src.len());
                let mut ctx = SentenceContext::new(rec.src.clone(), l_pred, max_len).unwrap();
                let full = decode(&model, &mut ctx, &full_cfg, method).unwrap();
                let early_cfg = DecodeConfig::new(b, Stopping::Optimal);
                let early = decode(&model, &mut ctx, &early_cfg, method).unwrap();
                assert_eq!(
                    early.best_adjusted_score,
                    full.best_adjusted_score,
                    "{}",
                    method.label()
                );
                assert!(early.steps_run <= full.steps_run);
            }
        }
    }
}

#[test]
fn wider_beams_pick_shorter_outputs() {
    let model = hash_model(66);
    let corpus = generate_corpus(
        &model,
        66,
        30,
        (8, 20),
        &DecodeConfig::new(1, Stopping::MaxLen),
    )
    .unwrap();
    let mean_len = |b: usize| {
        let cfg = DecodeConfig::new(b, Stopping::MaxLen);
        corpus
            .iter()
            .map(|rec| {
                let mut ctx =
                    SentenceContext::new(rec.src.clone(), 1.0, cfg.max_len(rec.src.len())).unwrap();
                decode(&model, &mut ctx, &cfg, &ScoringMethod::Default)
                    .unwrap()
                    .best
                    .len() as f64
            })
            .sum::<f64>()
            / corpus.len() as f64
    };
    assert!(mean_len(40) < mean_len(1));
}
