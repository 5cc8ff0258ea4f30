#![no_main]

use libfuzzer_sys::fuzz_target;
use sepnmf::io::{parse_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = parse_csv(data) {
        // whatever parses must survive a write/read cycle unchanged
        let again = parse_csv(write_csv(&m).as_bytes()).expect("written csv parses");
        assert_eq!(again, m);
    }
});
