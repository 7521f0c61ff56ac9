#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = boundwalk_cli::parse_config(text) {
        // anything accepted must convert cleanly
        let experiment = config.experiment().expect("accepted config converts");
        experiment.validate().expect("accepted config validates");
        let _ = config.interactions();
    }
});
