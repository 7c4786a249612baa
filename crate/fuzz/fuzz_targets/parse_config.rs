#![no_main]

use curvewire::io::{config_to_toml, parse_config_str};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = parse_config_str(text) {
        let echoed = config_to_toml(&config);
        let again = parse_config_str(&echoed).expect("echoed config parses");
        assert_eq!(again, config);
    }
});
