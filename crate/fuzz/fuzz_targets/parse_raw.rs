#![no_main]

use libfuzzer_sys::fuzz_target;
use sepnmf::io::{parse_raw, write_raw};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = parse_raw(data) {
        assert_eq!(m.data().len(), m.rows() * m.cols());
        assert_eq!(write_raw(&m).expect("dims fit"), data);
    }
});
