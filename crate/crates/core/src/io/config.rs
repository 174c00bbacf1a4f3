//! `key = value` rule configuration files.
//!
//! ```text
//! preset = config2
//! complexity_max_operations = 4
//! constants_ignored_values = 1, 0
//! ```
//!
//! A `preset` line, wherever it appears, selects the base values; the other
//! keys override it. Without a preset the base is `config1`.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{ConfigError, LoadError};
use crate::rules::RuleConfig;

pub fn load_config(path: impl AsRef<Path>) -> Result<RuleConfig, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        ConfigError::Syntax { line, message } => LoadError::Line { line, message },
        other => LoadError::Line {
            line: 0,
            message: other.to_string(),
        },
    })
}

pub fn parse_config(text: &str) -> Result<RuleConfig, ConfigError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_ascii_lowercase();
        if entries.iter().any(|(_, k, _)| *k == key) {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("`{key}` is set twice"),
            });
        }
        entries.push((i + 1, key, value.trim().to_string()));
    }

    let mut config = match entries.iter().find(|(_, k, _)| k == "preset") {
        Some((_, _, name)) => RuleConfig::preset(name)?,
        None => RuleConfig::config1(),
    };
    for (line, key, value) in &entries {
        let bad = |what: &str| ConfigError::Syntax {
            line: *line,
            message: format!("`{key}` expects {what}, got `{value}`"),
        };
        match key.as_str() {
            "preset" => {}
            "constants_ignored_values" => config.constants_ignored_values = list(value, false),
            "constants_ignored_functions" => config.constants_ignored_functions = list(value, true),
            "complexity_max_operations" => {
                config.complexity_max_operations = value.parse().map_err(|_| bad("an integer"))?
            }
            "complexity_max_nesting" => config.complexity_max_nesting = value.parse().map_err(|_| bad("an integer"))?,
            "direction_check_right_below" => {
                config.direction_check_right_below = flag(value).ok_or_else(|| bad("true or false"))?
            }
            "direction_check_sheet_order" => {
                config.direction_check_sheet_order = flag(value).ok_or_else(|| bad("true or false"))?
            }
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
    }
    config.validate()?;
    Ok(config)
}

fn list(value: &str, uppercase: bool) -> BTreeSet<String> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            let item = item.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(item);
            if uppercase {
                item.to_ascii_uppercase()
            } else {
                item.to_string()
            }
        })
        .filter(|item| !item.is_empty())
        .collect()
}

fn flag(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Renders a configuration in the file format; `parse_config` reads it back
/// unchanged.
pub fn write_config(config: &RuleConfig) -> String {
    let join = |set: &BTreeSet<String>| set.iter().cloned().collect::<Vec<_>>().join(", ");
    format!(
        "constants_ignored_values = {}\nconstants_ignored_functions = {}\ncomplexity_max_operations = {}\ncomplexity_max_nesting = {}\ndirection_check_right_below = {}\ndirection_check_sheet_order = {}\n",
        join(&config.constants_ignored_values),
        join(&config.constants_ignored_functions),
        config.complexity_max_operations,
        config.complexity_max_nesting,
        config.direction_check_right_below,
        config.direction_check_sheet_order,
    )
}
