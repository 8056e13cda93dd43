#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(query) = treekernel::cli::parse_query(s) {
            // accepted queries must validate or reject cleanly
            let _ = query.validate(1.0);
        }
    }
});
