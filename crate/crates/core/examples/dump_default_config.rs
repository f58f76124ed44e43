//! Print the default engine configuration as TOML.
//!
//! `cargo run -p affectstream --example dump_default_config > engine.toml`

use affectstream::EngineConfig;

fn main() {
    print!("{}", EngineConfig::default().to_toml());
}
