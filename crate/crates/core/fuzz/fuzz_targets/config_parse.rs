#![no_main]

use libfuzzer_sys::fuzz_target;
use piezo_omit::sweep::{parse_document, SweepSpec};
use piezo_omit::{build_config, parse_config_str, OperatingPoint};

fuzz_target!(|text: &str| {
    if let Ok(raw) = parse_config_str(text) {
        if let Ok(cfg) = build_config(&raw) {
            // a validated config must round-trip through its canonical form
            assert_eq!(build_config(&cfg.to_raw()).unwrap(), cfg);
            let _ = OperatingPoint::resolve(&cfg);
        }
    }
    if let Ok(doc) = parse_document(text) {
        let _ = SweepSpec::layered(None, &[&doc]);
    }
});
