use macfield::experiments::{default_video_model, generate_synthetic, SynthParams};
use macfield::format::{decode_model, encode_model, load_model, save_model};
use macfield::hierarchy::Model;
use macfield::mac::UnitActivations;
use macfield::preprocess::{add_pixel_noise, skeletonize, BinaryFrame};
use macfield::{seed, CsaParams, InputVector, Mac, MacConfig, Mode, OpCounts};
use proptest::prelude::*;
use rand::Rng;

fn frame_strategy() -> impl Strategy<Value = BinaryFrame> {
    (3usize..20, 3usize..20).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<bool>(), w * h)
            .prop_map(move |bits| BinaryFrame::from_bits(w, h, bits).unwrap())
    })
}

fn input_strategy(n_u: usize) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::btree_set(0..n_u as u32, 1..n_u.min(24))
        .prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_code_has_one_winner_per_cm(q in 1usize..20, k in 2usize..20, g in 0.0f64..=1.0, s in any::<u64>(), learning in any::<bool>()) {
        let mut rng = seed::stream(s, &[]);
        let mut acts = UnitActivations::zeros(q, k);
        for v in acts.v.iter_mut() {
            *v = rng.gen::<f64>();
        }
        for (cm, max) in acts.v.chunks_exact(k).zip(acts.cm_max.iter_mut()) {
            *max = cm.iter().cloned().fold(0.0, f64::max);
        }
        let mode = if learning { Mode::Learning } else { Mode::Retrieval };
        let code = CsaParams::default().select_code(&acts, g, mode, &mut rng);
        prop_assert_eq!(code.q(), q);
        prop_assert!(code.check(q, k).is_ok());
    }

    #[test]
    fn learning_only_adds_weights(items in proptest::collection::vec(input_strategy(40), 1..12), s in any::<u64>()) {
        let mut mac = Mac::new(MacConfig::new(5, 6, 40)).unwrap();
        let mut rng = seed::stream(s, &[]);
        let mut ops = OpCounts::default();
        for active in items {
            let before = mac.weights_u().clone();
            let input = InputVector::bottom_up(active);
            let (code, _) = mac.encode(&input, Mode::Learning, &mut rng, &mut ops).unwrap();
            mac.learn(&input, &code).unwrap();
            prop_assert!(mac.weights_u().is_superset_of(&before));
            let (replay, g) = mac.encode(&input, Mode::Retrieval, &mut rng, &mut ops).unwrap();
            prop_assert_eq!(g, 1.0);
            prop_assert!(mac.compute_activations(&input).unwrap().v.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert_eq!(replay.q(), 5);
        }
    }

    #[test]
    fn retrieval_is_deterministic(items in proptest::collection::vec(input_strategy(30), 1..8), probe in input_strategy(30)) {
        let mut mac = Mac::new(MacConfig::new(4, 5, 30)).unwrap();
        let mut rng = seed::stream(0, &[]);
        let mut ops = OpCounts::default();
        for active in items {
            let input = InputVector::bottom_up(active);
            let (code, _) = mac.encode(&input, Mode::Learning, &mut rng, &mut ops).unwrap();
            mac.learn(&input, &code).unwrap();
        }
        let probe = InputVector::bottom_up(probe);
        let a = mac.encode(&probe, Mode::Retrieval, &mut seed::stream(1, &[]), &mut ops).unwrap();
        let b = mac.encode(&probe, Mode::Retrieval, &mut seed::stream(2, &[]), &mut ops).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn skeleton_is_idempotent_subset(frame in frame_strategy()) {
        let once = skeletonize(&frame);
        prop_assert!(once.is_subset_of(&frame));
        prop_assert_eq!(skeletonize(&once), once.clone());
    }

    #[test]
    fn noise_preserves_pixel_count(frame in frame_strategy(), fraction in 0.0f64..=1.0, s in any::<u64>()) {
        let (noisy, stats) = add_pixel_noise(&frame, fraction, &mut seed::stream(s, &[]));
        prop_assert_eq!(noisy.count_ones(), frame.count_ones());
        prop_assert!(stats.moved + stats.stuck <= frame.count_ones());
    }
}

#[test]
fn two_by_two_block_thins_away() {
    let block = BinaryFrame::from_ascii(&["....", ".##.", ".##.", "...."]);
    assert!(skeletonize(&block).is_blank());
}

fn small_snippets() -> Vec<Vec<BinaryFrame>> {
    let params = SynthParams {
        classes: 3,
        actors: 2,
        ..SynthParams::default()
    };
    generate_synthetic(&params, 5)
        .unwrap()
        .into_iter()
        .map(|s| s.frames)
        .collect()
}

#[test]
fn same_seed_gives_same_model_and_traces() {
    let snippets = small_snippets();
    let run = || {
        let mut model = Model::build(default_video_model()).unwrap();
        let traces: Vec<_> = snippets
            .iter()
            .map(|f| model.process_sequence(f, Mode::Learning).unwrap())
            .collect();
        (encode_model(&model).unwrap(), traces)
    };
    assert_eq!(run(), run());
}

#[test]
fn model_file_round_trips() {
    let mut model = Model::build(default_video_model()).unwrap();
    for frames in small_snippets() {
        model.process_sequence(&frames, Mode::Learning).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.sprs");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(
        encode_model(&loaded).unwrap(),
        encode_model(&model).unwrap()
    );

    let probe = &small_snippets()[0];
    assert_eq!(
        loaded.recall_sequence(probe).unwrap(),
        model.recall_sequence(probe).unwrap()
    );

    let mut bytes = encode_model(&model).unwrap();
    bytes.truncate(bytes.len() / 2);
    assert!(decode_model(&bytes).is_err());
}

#[test]
fn stored_sequences_replay_faithfully() {
    let snippets = small_snippets();
    let mut model = Model::build(default_video_model()).unwrap();
    let stored: Vec<_> = snippets
        .iter()
        .map(|f| model.process_sequence(f, Mode::Learning).unwrap())
        .collect();
    for (frames, learned) in snippets.iter().zip(&stored) {
        let replay = model.recall_sequence(frames).unwrap();
        let m = macfield::hierarchy::recognition_match(learned, &replay).unwrap();
        assert!(m >= 0.9, "recognition match {m}");
    }
}
