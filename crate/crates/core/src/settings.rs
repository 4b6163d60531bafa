//! Flat `key = value` access to numeric configuration, shared by every tunable
//! struct so front ends can override and hash configuration uniformly.

use alloc::format;
use alloc::string::String;

use crate::{Error, Result};

pub trait Settings {
    /// Every key accepted by [`Settings::set`], in canonical order.
    fn keys(&self) -> &'static [&'static str];

    fn get(&self, key: &str) -> Option<f64>;

    /// Sets `key` and re-validates the whole struct; on error nothing changes.
    fn set(&mut self, key: &str, value: f64) -> Result<()>;

    /// Canonical `key = value` rendering, one pair per line.
    fn render(&self) -> String {
        let mut s = String::new();
        for k in self.keys() {
            if let Some(v) = self.get(k) {
                s.push_str(&format!("{k} = {v:?}\n"));
            }
        }
        s
    }
}

pub(crate) fn unknown_key(key: &str) -> Error {
    Error::Config(format!("unknown key {key:?}"))
}

pub(crate) fn invalid(msg: &str) -> Error {
    Error::Config(String::from(msg))
}
