mod common;

use efasynth::config::{Granularity, SynthesisConfig};
use efasynth::oracle::{compare, DEFAULT_STATE_CAP};

#[test]
fn random_models_agree_with_explicit_synthesis() {
    let seeds: u64 = std::env::var("ORACLE_SEEDS").ok().and_then(|s| s.parse().ok()).unwrap_or(60);
    for seed in 0..seeds {
        let spec = common::random_model(seed);
        for mut config in [SynthesisConfig::v08(), SynthesisConfig::v40()] {
            config.forward = seed % 2 == 1;
            if seed % 3 == 0 {
                config.granularity = Granularity::PerEvent;
            }
            let c = compare(&spec, &config, DEFAULT_STATE_CAP).unwrap();
            assert!(
                c.agrees(),
                "seed {seed} config {}: {c:?}\n{}",
                config.fingerprint(),
                common::random_model_text(seed)
            );
        }
    }
}

#[test]
fn shipped_models_agree_with_explicit_synthesis() {
    for name in common::shipped_models() {
        if name == "dining_philosophers" {
            continue;
        }
        let spec = common::load_model(&name);
        for config in [SynthesisConfig::v08(), SynthesisConfig::v40()] {
            let c = compare(&spec, &config, DEFAULT_STATE_CAP).unwrap();
            assert!(c.agrees(), "{name} {}: {c:?}", config.fingerprint());
        }
    }
}
