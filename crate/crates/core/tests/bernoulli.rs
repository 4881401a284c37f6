use cachecoder::analysis::formulas::{decentralized_delay, q, to_f64};
use cachecoder::library::DemandVector;
use cachecoder::run::run;
use cachecoder::schemes::{DecentralizedScheme, PlacementMode, SystemParams};
use cachecoder::Field;

fn relative_error(k: usize, l: usize, num: i64, den: i64, seed: u64) -> f64 {
    let sys = SystemParams::new(k, l, k, 1 << 14, Field::gf256(), seed).unwrap();
    let prob = q(num, den);
    let scheme = DecentralizedScheme::new(sys, prob.clone(), PlacementMode::Bernoulli).unwrap();
    let (report, _) = run(&scheme, &DemandVector::worst(k, k)).unwrap();
    assert!(report.all_decoded(), "{:?}", report.first_failure());
    let predicted = to_f64(&decentralized_delay(k, l, &prob));
    (to_f64(&report.measured_delay) - predicted).abs() / predicted
}

// Padding to the widest fragment in a block biases the measured delay upward;
// the bias is small only when every sub-file expects many symbols.
#[test]
fn measured_delay_concentrates() {
    for (k, l, num, den) in [(3, 2, 1, 2), (4, 2, 1, 2), (4, 3, 1, 4)] {
        for seed in 0..3 {
            let err = relative_error(k, l, num, den, seed);
            assert!(err < 0.05, "K={k} L={l} q={num}/{den} seed={seed}: {err}");
        }
    }
}
