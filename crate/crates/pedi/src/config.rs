//! Layered configuration: built-in defaults, then a TOML file, then `PEDI_*`
//! environment variables, then `--set key=value` overrides. Later layers win.
//!
//! Keys are `section.key` where the section is one of `model`, `controller`,
//! `sim`, `task` or `reward` and the key is one the matching core struct
//! accepts, e.g. `controller.kp` or `controller.gait.max_lin`. In a TOML file
//! the section is a table, so `[controller] kp = 40` and
//! `[controller.gait] max_lin = 0.5` both work. The environment form
//! upper-cases the key and writes dots as double underscores:
//! `PEDI_CONTROLLER__GAIT__MAX_LIN=0.5`.

use std::path::Path;

use pedi_core::control::{ControllerConfig, RewardWeights};
use pedi_core::model::QuadrupedModel;
use pedi_core::settings::Settings;
use pedi_core::sim::{EpisodeConfig, SimConfig};
use pedi_core::tasks::TaskSettings;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const SECTIONS: [&str; 5] = ["model", "controller", "sim", "task", "reward"];

pub const ENV_PREFIX: &str = "PEDI_";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PediConfig {
    pub model: QuadrupedModel,
    pub controller: ControllerConfig,
    pub sim: SimConfig,
    pub task: TaskSettings,
    pub reward: RewardWeights,
}

impl PediConfig {
    /// Defaults, then `file`, then matching variables from `env`, then `sets`.
    pub fn load<I>(file: Option<&Path>, env: I, sets: &[String]) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_toml(&text, &path.display().to_string())?;
        }
        cfg.apply_env(env)?;
        cfg.apply_overrides(sets)?;
        Ok(cfg)
    }

    fn section(&self, name: &str) -> Option<&dyn Settings> {
        Some(match name {
            "model" => &self.model,
            "controller" => &self.controller,
            "sim" => &self.sim,
            "task" => &self.task,
            "reward" => &self.reward,
            _ => return None,
        })
    }

    fn section_mut(&mut self, name: &str) -> Option<&mut dyn Settings> {
        Some(match name {
            "model" => &mut self.model,
            "controller" => &mut self.controller,
            "sim" => &mut self.sim,
            "task" => &mut self.task,
            "reward" => &mut self.reward,
            _ => return None,
        })
    }

    pub fn keys(&self) -> Vec<String> {
        SECTIONS
            .iter()
            .flat_map(|s| {
                self.section(s)
                    .expect("known section")
                    .keys()
                    .iter()
                    .map(move |k| format!("{s}.{k}"))
            })
            .collect()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let (section, rest) = key.split_once('.')?;
        self.section(section)?.get(rest)
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let known = self.get(key).is_some();
        if !known {
            return Err(Error::Config(self.unknown_key_message(key)));
        }
        let (section, rest) = key.split_once('.').expect("known keys are dotted");
        self.section_mut(section)
            .expect("known section")
            .set(rest, value)
            .map_err(|e| Error::Config(format!("{key}: {e}")))
    }

    fn unknown_key_message(&self, key: &str) -> String {
        let best = self
            .keys()
            .into_iter()
            .map(|k| (strsim::levenshtein(key, &k), k))
            .min();
        match best {
            Some((d, k)) if d <= 4 => format!("unknown key {key:?}; did you mean {k:?}?"),
            _ => format!("unknown key {key:?}; run `pedi config` to list keys"),
        }
    }

    /// Applies every numeric leaf of a TOML document.
    pub fn apply_toml(&mut self, text: &str, origin: &str) -> Result<()> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("{origin}: {}", e.message())))?;
        let mut leaves = Vec::new();
        flatten("", &toml::Value::Table(table), &mut leaves, origin)?;
        for (key, value) in leaves {
            self.set(&key, value).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        }
        Ok(())
    }

    /// Applies `PEDI_SECTION__KEY` variables; other `PEDI_` variables (the
    /// CLI's own flags) and unrelated ones are ignored.
    pub fn apply_env<I>(&mut self, env: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut vars: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k.contains("__"))
            .collect();
        vars.sort();
        for (name, raw) in vars {
            let key = name[ENV_PREFIX.len()..].to_ascii_lowercase().replace("__", ".");
            let value = parse_number(&raw).ok_or_else(|| Error::Config(format!("{name}: {raw:?} is not a number")))?;
            self.set(&key, value).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        Ok(())
    }

    /// Applies `key=value` strings in order.
    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<()> {
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set {s:?}: expected key=value")))?;
            let value = parse_number(raw.trim())
                .ok_or_else(|| Error::Config(format!("--set {s:?}: {:?} is not a number", raw.trim())))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Canonical TOML rendering of every key; loading it back reproduces `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in SECTIONS {
            out.push_str(&format!("[{s}]\n"));
            out.push_str(&self.section(s).expect("known section").render());
            out.push('\n');
        }
        out
    }

    pub fn model_hash(&self) -> String {
        sha256_hex(self.model.render().as_bytes())
    }

    pub fn reward_hash(&self) -> String {
        sha256_hex(self.reward.render().as_bytes())
    }

    pub fn episode_config(&self, seconds: f64) -> EpisodeConfig {
        EpisodeConfig {
            seconds,
            reward: self.reward,
            ..EpisodeConfig::default()
        }
    }
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, f64)>, origin: &str) -> Result<()> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out, origin)?;
            }
        }
        toml::Value::Integer(i) => out.push((prefix.to_string(), *i as f64)),
        toml::Value::Float(f) => out.push((prefix.to_string(), *f)),
        other => {
            return Err(Error::Config(format!(
                "{origin}: {prefix} must be a number, found {}",
                other.type_str()
            )))
        }
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_over_env_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pedi.toml");
        std::fs::write(&path, "[controller]\nkp = 30\nkd = 0.7\n[controller.gait]\nmax_lin = 0.4\n").unwrap();
        let env = vec![
            ("PEDI_CONTROLLER__KD".to_string(), "0.9".to_string()),
            ("PEDI_CONTROLLER__KP".to_string(), "35".to_string()),
            ("PEDI_SEED".to_string(), "4".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ];
        let cfg = PediConfig::load(Some(&path), env, &["controller.kp=50".to_string()]).unwrap();
        assert_eq!(cfg.controller.kp, 50.0);
        assert_eq!(cfg.controller.kd, 0.9);
        assert_eq!(cfg.controller.gait.max_lin, 0.4);
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let mut cfg = PediConfig::default();
        let msg = cfg.set("controler.kp", 1.0).unwrap_err().to_string();
        assert!(msg.contains("controller.kp"), "{msg}");
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = PediConfig::default();
        cfg.set("reward.sigma_z", 0.02).unwrap();
        cfg.set("controller.gait.max_yaw", 0.8).unwrap();
        let mut back = PediConfig::default();
        back.apply_toml(&cfg.render(), "rendered").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.model_hash(), cfg.model_hash());
    }

    #[test]
    fn non_numeric_values_are_rejected() {
        let mut cfg = PediConfig::default();
        assert!(cfg.apply_toml("[sim]\njoint_tau = \"fast\"\n", "x").is_err());
        assert!(cfg.apply_overrides(&["sim.joint_tau".to_string()]).is_err());
        assert!(cfg.apply_overrides(&["sim.joint_tau=abc".to_string()]).is_err());
    }

    #[test]
    fn invalid_value_leaves_config_unchanged() {
        let mut cfg = PediConfig::default();
        let before = cfg.clone();
        assert!(cfg.set("sim.joint_tau", -1.0).is_err());
        assert_eq!(cfg, before);
    }
}
