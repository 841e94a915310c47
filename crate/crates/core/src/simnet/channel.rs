use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Tick;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelPreset {
    Telephone,
    Fax,
    Email,
    /// Vendor result-transmission software without public security review.
    DedicatedSoftware,
    /// Hand-signed protocols by post; carries only final reports.
    PostalFinal,
}

impl ChannelPreset {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelPreset::Telephone => "telephone",
            ChannelPreset::Fax => "fax",
            ChannelPreset::Email => "email",
            ChannelPreset::DedicatedSoftware => "dedicated_software",
            ChannelPreset::PostalFinal => "postal_final",
        }
    }
}

impl FromStr for ChannelPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "telephone" => ChannelPreset::Telephone,
            "fax" => ChannelPreset::Fax,
            "email" => ChannelPreset::Email,
            "dedicated_software" => ChannelPreset::DedicatedSoftware,
            "postal_final" => ChannelPreset::PostalFinal,
            other => return Err(format!("unknown channel preset {other:?}")),
        })
    }
}

impl fmt::Display for ChannelPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Security properties of one transmission path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    /// In-flight modification is impossible.
    pub integrity: bool,
    /// Forged injection in the sender's name is impossible.
    pub authenticity: bool,
    /// An adversary can hold messages back.
    pub delayable: bool,
    pub base_latency: Tick,
    #[serde(default)]
    pub preset: Option<ChannelPreset>,
    /// Reports travel as signed reports verified against the trust root.
    #[serde(default)]
    pub signed: bool,
}

impl ChannelSpec {
    pub fn preset(preset: ChannelPreset) -> ChannelSpec {
        let (integrity, authenticity, base_latency) = match preset {
            ChannelPreset::Telephone => (false, false, 20),
            ChannelPreset::Fax => (false, false, 15),
            ChannelPreset::Email => (false, false, 5),
            ChannelPreset::DedicatedSoftware => (false, false, 2),
            ChannelPreset::PostalFinal => (true, true, 2000),
        };
        ChannelSpec {
            name: preset.as_str().to_string(),
            integrity,
            authenticity,
            delayable: true,
            base_latency,
            preset: Some(preset),
            signed: false,
        }
    }

    pub fn postal() -> ChannelSpec {
        ChannelSpec::preset(ChannelPreset::PostalFinal)
    }

    pub fn finals_only(&self) -> bool {
        self.preset == Some(ChannelPreset::PostalFinal)
    }

    /// Parses the transmission notation used by tree files: a preset name with
    /// an optional `:label` (`dedicated_software:Sesam`), joined by `+` when
    /// results go over several channels at once (`email+fax`) or by `|` when
    /// any one of them may be used (`email|telephone`).
    ///
    /// A result sent over several channels at once is only modified or
    /// forged undetectably if every channel allows it; with alternatives the
    /// weakest channel decides.
    pub fn parse_notation(s: &str) -> Result<ChannelSpec, String> {
        let (parts, all): (Vec<&str>, bool) = if s.contains('+') && s.contains('|') {
            return Err(format!("channel {s:?} mixes '+' and '|'"));
        } else if s.contains('+') {
            (s.split('+').collect(), true)
        } else {
            (s.split('|').collect(), false)
        };
        let mut specs = Vec::new();
        for p in parts {
            let name = match p.split_once(':') {
                Some((_, "")) => return Err(format!("empty label in channel {s:?}")),
                Some((name, _label)) => name,
                None => p,
            };
            specs.push(ChannelSpec::preset(name.parse()?));
        }
        let first = specs[0].clone();
        let combined = if all {
            ChannelSpec {
                integrity: specs.iter().any(|c| c.integrity),
                authenticity: specs.iter().any(|c| c.authenticity),
                delayable: specs.iter().all(|c| c.delayable),
                base_latency: specs.iter().map(|c| c.base_latency).max().unwrap_or(0),
                ..first
            }
        } else {
            ChannelSpec {
                integrity: specs.iter().all(|c| c.integrity),
                authenticity: specs.iter().all(|c| c.authenticity),
                delayable: specs.iter().any(|c| c.delayable),
                base_latency: specs.iter().map(|c| c.base_latency).min().unwrap_or(0),
                ..first
            }
        };
        Ok(ChannelSpec { name: s.to_string(), ..combined })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_presets() {
        for p in [ChannelPreset::Telephone, ChannelPreset::Fax, ChannelPreset::Email, ChannelPreset::DedicatedSoftware] {
            let c = ChannelSpec::preset(p);
            assert!(!c.integrity && !c.authenticity && c.delayable, "{p}");
            assert!(!c.finals_only());
        }
        let post = ChannelSpec::postal();
        assert!(post.integrity && post.authenticity && post.delayable && post.finals_only());
    }

    #[test]
    fn notation() {
        let c = ChannelSpec::parse_notation("dedicated_software:Sesam").unwrap();
        assert_eq!(c.preset, Some(ChannelPreset::DedicatedSoftware));
        assert_eq!(c.name, "dedicated_software:Sesam");
        let c = ChannelSpec::parse_notation("email+fax").unwrap();
        assert!(!c.integrity);
        assert_eq!(c.base_latency, 15);
        let c = ChannelSpec::parse_notation("email|telephone|fax").unwrap();
        assert_eq!(c.base_latency, 5);
        assert!(ChannelSpec::parse_notation("pigeon").is_err());
        assert!(ChannelSpec::parse_notation("email+fax|telephone").is_err());
        assert!(ChannelSpec::parse_notation("dedicated_software:").is_err());
    }
}
