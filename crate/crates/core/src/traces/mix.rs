//! Workload mixes: one application per core.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{load_trace, AccessRecord, SyntheticAppSpec, SyntheticGenerator};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum TraceSource {
    Synthetic(SyntheticAppSpec),
    File(PathBuf),
}

impl TraceSource {
    /// Parses `synthetic:<inline spec>` or `trace:<path>`. Relative trace paths
    /// are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let text = text.trim();
        if let Some(spec) = text.strip_prefix("synthetic:") {
            Ok(TraceSource::Synthetic(spec.parse()?))
        } else if let Some(path) = text.strip_prefix("trace:") {
            Ok(TraceSource::File(base_dir.join(path.trim())))
        } else {
            Err(Error::InvalidMix(format!(
                "expected synthetic:<spec> or trace:<path>, got {text:?}"
            )))
        }
    }

    /// Opens a fresh stream positioned at the first record.
    pub fn open(&self) -> Result<AppStream> {
        match self {
            TraceSource::Synthetic(spec) => {
                Ok(AppStream::Synthetic(Box::new(SyntheticGenerator::new(spec.clone())?)))
            }
            TraceSource::File(path) => Ok(AppStream::Replay {
                records: Arc::new(load_trace(path, None)?.records),
                pos: 0,
            }),
        }
    }
}

/// A rewindable record stream consumed by one simulated core.
#[derive(Clone, Debug)]
pub enum AppStream {
    Synthetic(Box<SyntheticGenerator>),
    Replay {
        records: Arc<Vec<AccessRecord>>,
        pos: usize,
    },
}

impl AppStream {
    pub fn from_records(records: Vec<AccessRecord>) -> Self {
        AppStream::Replay {
            records: Arc::new(records),
            pos: 0,
        }
    }

    pub fn rewind(&mut self) {
        match self {
            AppStream::Synthetic(g) => g.rewind(),
            AppStream::Replay { pos, .. } => *pos = 0,
        }
    }
}

impl Iterator for AppStream {
    type Item = AccessRecord;

    fn next(&mut self) -> Option<AccessRecord> {
        match self {
            AppStream::Synthetic(g) => g.next(),
            AppStream::Replay { records, pos } => {
                let r = records.get(*pos).copied();
                *pos += 1;
                r
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadMix {
    pub name: String,
    /// `(app id, source)`, in core order.
    pub apps: Vec<(String, TraceSource)>,
}

impl WorkloadMix {
    pub fn new(name: impl Into<String>, apps: Vec<(String, TraceSource)>) -> Result<Self> {
        let mix = Self {
            name: name.into(),
            apps,
        };
        mix.validate()?;
        Ok(mix)
    }

    /// Convenience constructor for all-synthetic mixes; app ids are `app0..`.
    pub fn synthetic(name: impl Into<String>, specs: &[SyntheticAppSpec]) -> Result<Self> {
        Self::new(
            name,
            specs
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("app{i}"), TraceSource::Synthetic(s.clone())))
                .collect(),
        )
    }

    pub fn cores(&self) -> usize {
        self.apps.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.apps.is_empty() {
            return Err(Error::InvalidMix("mix has no applications".into()));
        }
        for (i, (id, _)) in self.apps.iter().enumerate() {
            if self.apps[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::InvalidMix(format!("duplicate app id {id:?}")));
            }
        }
        Ok(())
    }

    /// Parses a mix file: one line per core, `synthetic:<spec>` or
    /// `trace:<path>`, optionally prefixed by `<id> = `. `#` starts a comment.
    /// Synthetic apps with no explicit seed get `seed + core index`.
    pub fn parse(name: &str, text: &str, base_dir: &Path, seed: u64) -> Result<Self> {
        let mut apps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (id, body) = match line.split_once('=') {
                Some((id, rest)) if !id.contains(':') => (id.trim().to_string(), rest.trim()),
                _ => (format!("app{}", apps.len()), line),
            };
            let mut source = TraceSource::parse(body, base_dir)
                .map_err(|e| Error::InvalidMix(format!("line {}: {e}", lineno + 1)))?;
            if let TraceSource::Synthetic(spec) = &mut source {
                if !body.contains("seed=") {
                    spec.seed = seed.wrapping_add(apps.len() as u64);
                }
            }
            apps.push((id, source));
        }
        Self::new(name, apps)
    }

    pub fn load(path: &Path, seed: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "mix".into());
        Self::parse(&name, &text, path.parent().unwrap_or(Path::new(".")), seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mix_lines() {
        let text = "# two apps\nsynthetic:ws=64KiB,seed=3\nstream = synthetic:ws=8MiB,stride_fraction=1\ntrace:foo.txt\n";
        let mix = WorkloadMix::parse("m", text, Path::new("/tmp"), 100).unwrap();
        assert_eq!(mix.cores(), 3);
        assert_eq!(mix.apps[0].0, "app0");
        assert_eq!(mix.apps[1].0, "stream");
        match &mix.apps[0].1 {
            TraceSource::Synthetic(s) => assert_eq!(s.seed, 3),
            _ => panic!(),
        }
        match &mix.apps[1].1 {
            TraceSource::Synthetic(s) => assert_eq!(s.seed, 101),
            _ => panic!(),
        }
        assert_eq!(mix.apps[2].1, TraceSource::File("/tmp/foo.txt".into()));
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(WorkloadMix::parse("m", "a = synthetic:\na = synthetic:\n", Path::new("."), 0).is_err());
        assert!(WorkloadMix::parse("m", "bogus\n", Path::new("."), 0).is_err());
        assert!(WorkloadMix::parse("m", "# nothing\n", Path::new("."), 0).is_err());
    }

    #[test]
    fn replay_streams_rewind() {
        let mut s = AppStream::from_records(vec![AccessRecord::load(1, 0), AccessRecord::load(2, 64)]);
        assert_eq!(s.by_ref().count(), 2);
        s.rewind();
        assert_eq!(s.next().unwrap().address, 0);
    }
}
