mod common;

use common::{random_embedding, random_model};
use mixplda::metrics::{emit_rttm, parse_rttm, Turn};
use mixplda::mixture::MixturePlda;
use mixplda::synth::SynthRng;
use mixplda::{SpeakerType, SpeakerTypePrior};
use proptest::prelude::*;

#[test]
fn rttm_round_trip_hundred_turns() {
    let mut rng = SynthRng::new(5);
    let turns: Vec<Turn> = (0..100)
        .map(|i| {
            Turn::new(
                format!("rec{}", rng.below(3)),
                rng.uniform_range(0.0, 100.0),
                rng.uniform_range(0.01, 10.0),
                format!("spk{}", i % 7),
            )
        })
        .collect();
    let text = emit_rttm(&turns);
    let parsed = parse_rttm(&text);
    assert!(parsed.diagnostics.is_empty());
    let mut expected = turns.clone();
    expected.sort_by(Turn::cmp_key);
    assert_eq!(parsed.turns.len(), 100);
    for (a, b) in parsed.turns.iter().zip(&expected) {
        assert_eq!(a.recording_id, b.recording_id);
        assert_eq!(a.speaker, b.speaker);
        assert!((a.onset - b.onset).abs() <= 5e-4 + 1e-12);
        assert!((a.duration - b.duration).abs() <= 5e-4 + 1e-12);
    }
    // emission of parsed turns is a fixed point
    assert_eq!(emit_rttm(&parsed.turns), text);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prior_perturbation_moves_lr_little(seed in any::<u64>(), eps in 1e-9f64..1e-6) {
        let mut rng = SynthRng::new(seed);
        let d = 3;
        let [m, f, c] = [0, 1, 2].map(|_| random_model(&mut rng, d));
        let mix = MixturePlda::new(m, f, c, SpeakerTypePrior::uniform()).unwrap();
        let a = random_embedding(&mut rng, d, 1.0);
        let b = random_embedding(&mut rng, d, 1.0);
        let p = [0.3, 0.3, 0.4];
        let q = [0.3 + eps, 0.3 - eps, 0.4];
        let base = SpeakerTypePrior::new(p).unwrap();
        let moved = SpeakerTypePrior::new(q).unwrap();
        let l0 = mix.log_lr(&base, &base, &a, &b).unwrap();
        let l1 = mix.log_lr(&moved, &moved, &a, &b).unwrap();
        prop_assert!((l0 - l1).abs() <= 1e-3);
    }

    #[test]
    fn lr_is_symmetric(seed in any::<u64>()) {
        let mut rng = SynthRng::new(seed);
        let [m, f, c] = [0, 1, 2].map(|_| random_model(&mut rng, 4));
        let mix = MixturePlda::new(m, f, c, SpeakerTypePrior::uniform()).unwrap();
        let a = random_embedding(&mut rng, 4, 1.5);
        let b = random_embedding(&mut rng, 4, 1.5);
        let p1 = SpeakerTypePrior::nonuniform_paper();
        let p2 = SpeakerTypePrior::oracle(SpeakerType::Child);
        let ab = mix.log_lr(&p1, &p2, &a, &b).unwrap();
        let ba = mix.log_lr(&p2, &p1, &b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
    }
}
