//! Config file handling: a top-level `mode` key selects the runner, the
//! rest of the document is the scenario itself.

use serde::{Deserialize, Serialize};
use tdsim::scenario::ScenarioConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    ClosedLoop,
    OpenLoop,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::ClosedLoop => "closed_loop",
            Mode::OpenLoop => "open_loop",
        }
    }
}

/// Parses a config document. `mode` is optional and defaults to the closed
/// loop; every other key belongs to the scenario.
pub fn parse_config_str(text: &str) -> Result<(Mode, ScenarioConfig), String> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| format!("config is not valid TOML: {e}"))?;
    let mode = match table.remove("mode") {
        Some(value) => {
            Mode::deserialize(value).map_err(|e| format!("invalid mode: {e}"))?
        }
        None => Mode::default(),
    };
    let scenario: ScenarioConfig = table
        .try_into()
        .map_err(|e| format!("invalid scenario config: {e}"))?;
    Ok((mode, scenario))
}

/// Renders a config document that [`parse_config_str`] reads back
/// unchanged.
pub fn to_config_str(mode: Mode, scenario: &ScenarioConfig) -> String {
    let body = toml::to_string_pretty(scenario)
        .expect("scenario configs always serialize");
    format!("mode = \"{}\"\n\n{body}", mode.name())
}
