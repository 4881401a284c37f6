use cachecoder::analysis::formulas::q;
use cachecoder::combinatorics::{min_valid_f, Profile};
use cachecoder::library::DemandVector;
use cachecoder::run::run;
use cachecoder::schemes::{
    centralized, valid_t, DecentralizedScheme, FeedbackScheme, GroupedScheme, MtScheme,
    PlacementMode, Scheme, SchemeKind, SystemParams,
};
use cachecoder::Field;
use proptest::prelude::*;

fn sys(k: usize, l: usize, n: usize, f: usize, seed: u64) -> SystemParams {
    SystemParams::new(k, l, n, f, Field::gf256(), seed).unwrap()
}

fn assert_recovers(scheme: &dyn Scheme, demand: &DemandVector) {
    let (report, art) = run(scheme, demand).unwrap();
    assert!(report.all_decoded(), "{:?}", report.first_failure());
    for (id, n) in art.log.key_uses() {
        assert_eq!(n, 1, "key {id} used {n} times");
    }
}

fn centralized_case(
    kind: SchemeKind,
    k: usize,
    l: usize,
    t: usize,
    mult: usize,
) -> Box<dyn Scheme> {
    let profile = match kind {
        SchemeKind::Mt => Profile::Mt { t },
        SchemeKind::Grouped => Profile::Grouped { t },
        _ => Profile::Feedback { t },
    };
    let f = min_valid_f(&profile, k, l).unwrap() as usize * mult;
    centralized(kind, sys(k, l, k + 1, f, 0), t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mt_random_demands(seed in any::<u64>(), dseed in any::<u64>(), mult in 1usize..3) {
        let t = [0, 1, 2, 3, 5][(seed % 5) as usize];
        let scheme = mt_case(seed, t, mult);
        assert_recovers(&scheme, &DemandVector::random(5, 6, dseed));
    }

    #[test]
    fn grouped_random_demands(seed in any::<u64>(), dseed in any::<u64>(), t in prop::sample::select(vec![0usize, 2, 4, 6])) {
        let scheme = GroupedScheme::new(sys(6, 2, 7, 6, seed), t).unwrap();
        assert_recovers(&scheme, &DemandVector::random(6, 7, dseed));
    }

    #[test]
    fn feedback_random_demands(seed in any::<u64>(), dseed in any::<u64>()) {
        let scheme = FeedbackScheme::new(sys(5, 2, 5, 10 * 2 * 4, seed), 2).unwrap();
        assert_recovers(&scheme, &DemandVector::random(5, 5, dseed));
    }

    #[test]
    fn decentralized_random_demands(seed in any::<u64>(), dseed in any::<u64>(), bernoulli in any::<bool>()) {
        let (mode, f) = if bernoulli { (PlacementMode::Bernoulli, 300) } else { (PlacementMode::Ideal, 96) };
        let scheme = DecentralizedScheme::new(sys(4, 2, 4, f, seed), q(1, 2), mode).unwrap();
        assert_recovers(&scheme, &DemandVector::random(4, 4, dseed));
    }
}

fn mt_case(seed: u64, t: usize, mult: usize) -> MtScheme {
    let f = min_valid_f(&Profile::Mt { t }, 5, 2).unwrap() as usize * mult;
    MtScheme::new(sys(5, 2, 6, f, seed), t).unwrap()
}

#[test]
fn every_valid_t_decodes_with_repeated_requests() {
    for kind in [SchemeKind::Mt, SchemeKind::Grouped, SchemeKind::Feedback] {
        for l in 1..=3 {
            for t in valid_t(kind, 6, l) {
                let scheme = centralized_case(kind, 6, l, t, 1);
                assert_recovers(scheme.as_ref(), &DemandVector(vec![0, 0, 1, 2, 2, 2]));
            }
        }
    }
}

#[test]
fn small_fields_still_decode_single_stream() {
    // GF(2) has no two distinct nonzero coefficients, so L = 1 and t = 0 or K
    let f2 = Field::with_bits(1).unwrap();
    for t in [0, 4] {
        let s = SystemParams::new(4, 1, 4, 4, f2.clone(), 3).unwrap();
        let scheme = centralized(SchemeKind::Mt, s, t).unwrap();
        assert_recovers(scheme.as_ref(), &DemandVector::worst(4, 4));
    }
    let f16 = Field::with_bits(4).unwrap();
    let s = SystemParams::new(4, 2, 4, 12, f16, 9).unwrap();
    let scheme = centralized(SchemeKind::Mt, s, 2).unwrap();
    assert_recovers(scheme.as_ref(), &DemandVector::worst(4, 4));
}

#[test]
fn fragments_stay_within_one_decoding_group() {
    // repetitions of a group resend the same fragments in new combinations;
    // nothing is resent outside its group
    for kind in [SchemeKind::Mt, SchemeKind::Feedback] {
        let scheme = centralized_case(kind, 5, 2, 2, 1);
        let (_, art) = run(scheme.as_ref(), &DemandVector::worst(5, 5)).unwrap();
        let mut home = std::collections::BTreeMap::new();
        for b in &art.log.blocks {
            for term in &b.terms {
                let g = *home.entry((term.for_user, term.frag)).or_insert(b.group);
                assert_eq!(g, b.group, "{} resent outside its group", term.frag);
            }
        }
    }
}
