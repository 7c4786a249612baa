#![no_main]

use curvewire::Profile;
use libfuzzer_sys::fuzz_target;

// Pairs of little-endian f64 (x, f) samples.
fuzz_target!(|data: &[u8]| {
    let samples: Vec<(f64, f64)> = data
        .chunks_exact(16)
        .map(|c| {
            let x = f64::from_le_bytes(c[..8].try_into().unwrap());
            let f = f64::from_le_bytes(c[8..].try_into().unwrap());
            (x, f)
        })
        .collect();
    let Ok(profile) = Profile::tabulated(samples) else {
        return;
    };
    let l = profile.length();
    for i in 0..=16 {
        let x = l * i as f64 / 16.0;
        if let Ok(field) = profile.field(x, 1.0) {
            assert!(field.m_eff >= 1.0 || field.m_eff.is_nan());
        }
    }
    let _ = profile.arc_length(0.0, l);
});
