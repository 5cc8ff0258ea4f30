#![no_main]

use libfuzzer_sys::fuzz_target;
use sepnmf::synth::InstanceSidecar;

fuzz_target!(|data: &str| {
    if let Ok(side) = InstanceSidecar::from_json(data) {
        let back = InstanceSidecar::from_json(&side.to_json()).expect("round trip");
        assert_eq!(back, side);
        assert_eq!(side.zero_based_map().len(), side.cols);
    }
});
