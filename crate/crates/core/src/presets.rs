//! Built-in configurations.

pub const NAMES: [&str; 2] = ["camsicle72", "testbed"];

/// TOML text of a built-in preset.
pub fn get(name: &str) -> Option<&'static str> {
    match name {
        "camsicle72" => Some(include_str!("../presets/camsicle72.toml")),
        "testbed" => Some(include_str!("../presets/testbed.toml")),
        _ => None,
    }
}
