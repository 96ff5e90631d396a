use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::CorpusError;

pub const OTHER: &str = "Other";

/// Name of a location category, as configured.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IpCategory(pub String);

impl IpCategory {
    pub fn other() -> Self {
        Self(OTHER.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for IpCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Category → IP names, in display order. "Other" is always present, last
/// unless configured elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpCategoryMap {
    categories: IndexMap<String, Vec<String>>,
}

impl Default for IpCategoryMap {
    fn default() -> Self {
        let table: [(&str, &[&str]); 7] = [
            ("Cryptography", &["aes", "keymgr", "hmac", "kmac", "csrng", "edn"]),
            ("Memory", &["flash_ctrl", "otp_ctrl", "rom_ctrl"]),
            ("IO", &["spi_device", "spi_host", "pinmux"]),
            ("DeviceManager", &["rstmgr", "pwrmgr", "clkmgr", "sysrst_ctrl"]),
            ("Processor", &["otbn", "ibex"]),
            ("Debug", &["rv_dm"]),
            (OTHER, &["tlul", "xbar", "prim", "aon_timer", "alert_handler"]),
        ];
        let categories = table
            .iter()
            .map(|(c, ips)| (c.to_string(), ips.iter().map(|s| s.to_string()).collect()))
            .collect();
        Self { categories }
    }
}

impl IpCategoryMap {
    pub fn new(mut categories: IndexMap<String, Vec<String>>) -> Result<Self, CorpusError> {
        let mut seen: IndexMap<&str, &str> = IndexMap::new();
        for (cat, ips) in &categories {
            for ip in ips {
                if let Some(prev) = seen.insert(ip, cat) {
                    if prev != cat {
                        return Err(CorpusError::Config(format!(
                            "IP {ip:?} listed under both {prev:?} and {cat:?}"
                        )));
                    }
                }
            }
        }
        if !categories.contains_key(OTHER) {
            categories.insert(OTHER.to_string(), Vec::new());
        }
        Ok(Self { categories })
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let raw: IndexMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| CorpusError::Config(format!("IP categories: {e}")))?;
        Self::new(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.categories).expect("string map serializes")
    }

    pub fn categories(&self) -> impl Iterator<Item = IpCategory> + '_ {
        self.categories.keys().map(|k| IpCategory(k.clone()))
    }

    /// Position of `cat` in display order.
    pub fn order(&self, cat: &IpCategory) -> usize {
        self.categories.get_index_of(cat.as_str()).unwrap_or(usize::MAX)
    }

    pub fn ips(&self) -> impl Iterator<Item = (&str, &str)> {
        self.categories
            .iter()
            .flat_map(|(c, ips)| ips.iter().map(move |ip| (ip.as_str(), c.as_str())))
    }

    pub fn category_of_ip(&self, ip: &str) -> IpCategory {
        self.ips()
            .find(|(name, _)| *name == ip)
            .map_or_else(IpCategory::other, |(_, c)| IpCategory(c.to_string()))
    }

    /// Longest configured IP name found in `text` between boundary characters.
    fn longest_match(&self, text: &str) -> Option<&str> {
        let boundary = |c: Option<char>| c.is_none_or(|c| matches!(c, '/' | '_' | '.' | '-'));
        let mut best: Option<&str> = None;
        for (ip, _) in self.ips() {
            if best.is_some_and(|b| b.len() >= ip.len()) {
                continue;
            }
            let hit = text.match_indices(ip).any(|(at, _)| {
                boundary(text[..at].chars().next_back()) && boundary(text[at + ip.len()..].chars().next())
            });
            if hit {
                best = Some(ip);
            }
        }
        best
    }

    /// Category of the IP block a repository-relative path belongs to.
    pub fn categorize_path(&self, path: &str) -> IpCategory {
        let parts: Vec<&str> = path.split('/').collect();
        let ip_dir = match parts.as_slice() {
            ["hw", "ip", name, ..] => Some(*name),
            ["hw", top, "ip", name, ..] if top.starts_with("top_") => Some(*name),
            _ => None,
        };
        let scope = ip_dir.unwrap_or(path);
        match self.longest_match(scope) {
            Some(ip) => self.category_of_ip(ip),
            None => IpCategory::other(),
        }
    }
}
