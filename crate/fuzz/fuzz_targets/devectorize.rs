#![no_main]

use boundwalk::open::{devectorize, vectorize};
use boundwalk::Complex64;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let values: Vec<Complex64> = data
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    let n = values.len();
    match devectorize(&values) {
        Ok(m) => {
            assert_eq!(m.nrows() * m.ncols(), n);
            let back = vectorize(&m);
            for (a, b) in back.iter().zip(&values) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
        Err(_) => {
            let side = (n as f64).sqrt().round() as usize;
            assert_ne!(side * side, n);
        }
    }
});
