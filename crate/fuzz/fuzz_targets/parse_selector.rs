#![no_main]

use libfuzzer_sys::fuzz_target;
use sepnmf::SelectorSpec;

fuzz_target!(|data: &str| {
    let Ok(spec) = data.parse::<SelectorSpec>() else {
        return;
    };
    let again: SelectorSpec = spec.to_string().parse().expect("display output parses");
    assert_eq!(again, spec);
    let v = spec.evaluate(&[0.5, -2.0, 1.0]);
    assert!(v.is_finite() && v > 0.0, "{spec} gives {v}");
});
