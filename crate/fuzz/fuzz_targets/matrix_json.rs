#![no_main]

use libfuzzer_sys::fuzz_target;
use sepnmf::DenseMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<DenseMatrix>(data) {
        assert_eq!(m.data().len(), m.rows() * m.cols());
        assert!(m.data().iter().all(|v| v.is_finite()));
    }
});
