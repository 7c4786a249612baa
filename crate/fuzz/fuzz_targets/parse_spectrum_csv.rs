#![no_main]

use curvewire::io::parse_spectrum_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    match parse_spectrum_csv(text) {
        Ok(table) => {
            let again = parse_spectrum_csv(&table.to_csv()).expect("rewritten csv parses");
            assert_eq!(again.len(), table.len());
            assert_eq!(again.flags, table.flags);
        }
        Err(e) => assert!(e.line >= 1),
    }
});
