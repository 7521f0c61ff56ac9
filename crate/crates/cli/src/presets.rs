use crate::config::{parse_config, RunConfig};
use crate::error::ConfigError;

/// Bundled configurations, by name.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "pair-transfer",
        include_str!("../presets/pair-transfer.toml"),
    ),
    ("pair-locked", include_str!("../presets/pair-locked.toml")),
    (
        "single-transfer",
        include_str!("../presets/single-transfer.toml"),
    ),
    (
        "engineered-long",
        include_str!("../presets/engineered-long.toml"),
    ),
    (
        "pair-dephasing",
        include_str!("../presets/pair-dephasing.toml"),
    ),
    ("noon-pair", include_str!("../presets/noon-pair.toml")),
    ("split-pair", include_str!("../presets/split-pair.toml")),
    ("noon-triple", include_str!("../presets/noon-triple.toml")),
    ("split-triple", include_str!("../presets/split-triple.toml")),
    ("fringes", include_str!("../presets/fringes.toml")),
    ("quench", include_str!("../presets/quench.toml")),
    ("fisher-pair", include_str!("../presets/fisher-pair.toml")),
    (
        "fisher-triple",
        include_str!("../presets/fisher-triple.toml"),
    ),
    (
        "triple-dephasing",
        include_str!("../presets/triple-dephasing.toml"),
    ),
    ("effective", include_str!("../presets/effective.toml")),
    ("unlock", include_str!("../presets/unlock.toml")),
];

pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_owned()))?;
    parse_config(text)
}
