#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(potential) = treekernel::potential::parse_potential_table(s) {
            // parsed tables must evaluate without panicking anywhere
            for i in 0..=16 {
                let _ = potential.eval(i as f64 / 16.0, 1.0);
            }
            let _ = potential.sup_norm(1.0);
            let _ = potential.is_edge_symmetric(1.0, 1e-10);
        }
    }
});
