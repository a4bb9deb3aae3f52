//! Built-in named problems.

use crate::config::RunConfig;
use crate::error::{Error, Result};

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// Names and TOML sources of the built-in problems.
        pub const PRESETS: &[(&str, &str)] = &[$(($name, include_str!(concat!("presets/", $name, ".toml")))),*];
    };
}

presets!(
    "model-1d",
    "transport-decreasing-b",
    "transport-increasing-b",
    "manufactured-cos",
    "degenerate-q-x2",
    "heat-periodic",
    "heat-2d",
    "upwind-1d",
    "decay",
    "stationary",
    "drift-example",
);

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let source = preset_source(name).ok_or_else(|| Error::Config {
        line: None,
        message: format!("unknown preset `{name}`; available: {}", preset_names().collect::<Vec<_>>().join(", ")),
    })?;
    RunConfig::parse(source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_loads_and_round_trips() {
        for name in preset_names() {
            let cfg = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            cfg.problem().unwrap();
            assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg, "{name}");
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn manufactured_forcing_matches() {
        let cfg = preset("manufactured-cos").unwrap();
        let p = cfg.problem().unwrap();
        let v = crate::expr::Expr::parse(cfg.run.exact.as_deref().unwrap()).unwrap();
        let f = p.manufactured_forcing(&v);
        for i in 0..50 {
            let x = [i as f64 * 0.13];
            let want = f.eval(0.0, &x).unwrap();
            assert!((p.coeffs().f.eval(0.0, &x).unwrap() - want).abs() < 1e-12);
        }
    }
}
