//! The ten resource-manager configurations compared in the evaluation.
//!
//! | name        | cache   | bandwidth | prefetch |
//! |-------------|---------|-----------|----------|
//! | baseline    | shared  | shared    | off      |
//! | equal_off   | equal   | equal     | off      |
//! | only_cache  | dynamic | shared    | off      |
//! | only_bw     | shared  | dynamic   | off      |
//! | only_pref   | shared  | shared    | dynamic  |
//! | bw_pref     | shared  | dynamic   | dynamic  |
//! | bw_cache    | dynamic | dynamic   | off      |
//! | cache_pref  | dynamic | shared    | dynamic  |
//! | cppf        | CPpf    | shared    | on       |
//! | cbp         | dynamic | dynamic   | dynamic  |

use std::fmt;
use std::str::FromStr;

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CacheMode {
    /// The LLC is shared without partitioning.
    Unmanaged,
    Equal,
    Dynamic,
    /// Prefetch-friendly applications pinned at the minimum.
    DynamicCppf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResourceMode {
    Unmanaged,
    Equal,
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrefetchMode {
    Disabled,
    Enabled,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RmConfig {
    pub name: &'static str,
    pub cache: CacheMode,
    pub bandwidth: ResourceMode,
    pub prefetch: PrefetchMode,
}

macro_rules! rms {
    ($($fn:ident => $cache:ident, $bw:ident, $pref:ident;)*) => {
        impl RmConfig {
            $(
                pub fn $fn() -> Self {
                    RmConfig {
                        name: stringify!($fn),
                        cache: CacheMode::$cache,
                        bandwidth: ResourceMode::$bw,
                        prefetch: PrefetchMode::$pref,
                    }
                }
            )*

            /// All configurations, in table order.
            pub fn all() -> Vec<RmConfig> {
                vec![$(RmConfig::$fn()),*]
            }
        }
    };
}

rms! {
    baseline => Unmanaged, Unmanaged, Disabled;
    equal_off => Equal, Equal, Disabled;
    only_cache => Dynamic, Unmanaged, Disabled;
    only_bw => Unmanaged, Dynamic, Disabled;
    only_pref => Unmanaged, Unmanaged, Dynamic;
    bw_pref => Unmanaged, Dynamic, Dynamic;
    bw_cache => Dynamic, Dynamic, Disabled;
    cache_pref => Dynamic, Unmanaged, Dynamic;
    cppf => DynamicCppf, Unmanaged, Enabled;
    cbp => Dynamic, Dynamic, Dynamic;
}

impl FromStr for RmConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        RmConfig::all()
            .into_iter()
            .find(|rm| rm.name == key)
            .ok_or_else(|| Error::UnknownRm(s.to_string()))
    }
}

impl fmt::Display for RmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}
