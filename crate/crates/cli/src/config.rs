//! Run configuration: built-in defaults, then a `key = value` file, then flags.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use photon_field::lattice::GridSpec;
use photon_field::optimizer::PhotonContent;

use crate::CliError;

/// `(key, default)`; an empty default means unset.
pub const KEYS: [(&str, &str); 16] = [
    ("grid_n", "128"),
    ("box_length", "20pi"),
    ("mass", "0"),
    ("zero_mode", "false"),
    ("mode", "10"),
    ("count", "1"),
    ("mode2", ""),
    ("momentum", "1"),
    ("samples", "100000"),
    ("seed", "20240601"),
    ("batches", "16"),
    ("out", ""),
    ("format", "csv"),
    ("threads", ""),
    ("dump_samples", ""),
    ("baseline", "false"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|&(k, v)| (k, v.to_string())).collect(),
        }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let key = KEYS
            .iter()
            .map(|(k, _)| *k)
            .find(|k| *k == key.replace('-', "_"))
            .ok_or_else(|| config_error(key, "unknown key"))?;
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_error("config", format!("line {}: expected key = value", i + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn raw(&self, key: &'static str) -> Option<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
    }

    fn parse<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| config_error(key, format!("{v:?}: {e}")))
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.parse(key)?
            .ok_or_else(|| config_error(key, "missing value"))
    }
}

pub fn config_error(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Accepts plain numbers and multiples of pi such as `20pi` or `pi`.
fn parse_length(text: &str) -> Result<f64, String> {
    let t = text.trim().to_ascii_lowercase();
    let value = match t.strip_suffix("pi") {
        Some("") => PI,
        Some(head) => {
            head.trim_end_matches('*')
                .trim()
                .parse::<f64>()
                .map_err(|e| e.to_string())?
                * PI
        }
        None => t.parse::<f64>().map_err(|e| e.to_string())?,
    };
    Ok(value)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub mode: i64,
    pub count: u32,
    pub mode2: Option<i64>,
    pub momentum: f64,
    pub samples: u64,
    pub seed: u64,
    pub batches: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub dump_samples: Option<PathBuf>,
    pub baseline: bool,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let n: usize = s.required("grid_n")?;
        if n < 4 || !n.is_multiple_of(2) {
            return Err(config_error(
                "grid_n",
                format!("must be an even integer >= 4, got {n}"),
            ));
        }
        let box_raw = s.raw("box_length").unwrap_or("");
        let box_length = parse_length(box_raw)
            .map_err(|e| config_error("box_length", format!("{box_raw:?}: {e}")))?;
        let grid =
            GridSpec::new(n, box_length).map_err(|e| config_error("box_length", e.to_string()))?;
        let mass: f64 = s.required("mass")?;
        let mut grid = grid
            .with_mass(mass)
            .map_err(|e| config_error("mass", e.to_string()))?;
        if s.required::<bool>("zero_mode")? {
            grid = grid
                .with_zero_mode()
                .map_err(|e| config_error("zero_mode", e.to_string()))?;
        }

        let samples: u64 = s.required("samples")?;
        if samples < 2 {
            return Err(config_error("samples", "need at least 2 samples"));
        }
        let batches: u64 = s.required("batches")?;
        if batches == 0 {
            return Err(config_error("batches", "must be positive"));
        }
        let threads: Option<usize> = s.parse("threads")?;
        if threads == Some(0) {
            return Err(config_error("threads", "must be positive"));
        }
        let format = match s.raw("format").unwrap_or("") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => {
                return Err(config_error(
                    "format",
                    format!("expected csv or json, got {other:?}"),
                ))
            }
        };
        let momentum: f64 = s.required("momentum")?;
        if !(momentum.is_finite() && momentum > 0.0) {
            return Err(config_error("momentum", "must be positive"));
        }

        Ok(Self {
            grid,
            mode: s.required("mode")?,
            count: s.required("count")?,
            mode2: s.parse("mode2")?,
            momentum,
            samples,
            seed: s.required("seed")?,
            batches,
            out: s.parse("out")?,
            format,
            threads,
            dump_samples: s.parse("dump_samples")?,
            baseline: s.required("baseline")?,
        })
    }

    /// Photon content from `mode`, `count` and `mode2`; `count = 0` is the vacuum.
    pub fn content(&self) -> Result<PhotonContent, CliError> {
        let check = |key: &str, k: i64| {
            self.grid
                .check_photon_mode(k)
                .map_err(|e| config_error(key, e.to_string()))
        };
        match (self.count, self.mode2) {
            (0, None) => Ok(PhotonContent::vacuum()),
            (0, Some(_)) => Err(config_error("count", "mode2 needs count = 1")),
            (n, None) => {
                check("mode", self.mode)?;
                Ok(PhotonContent::single(self.mode, n))
            }
            (1, Some(k2)) => {
                check("mode", self.mode)?;
                check("mode2", k2)?;
                Ok(PhotonContent::pair(self.mode, k2))
            }
            (_, Some(_)) => Err(config_error(
                "count",
                "two-momentum content takes count = 1",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let cfg = RunConfig::from_settings(&Settings::default()).unwrap();
        assert_eq!(cfg.grid.n_modes(), 128);
        assert!((cfg.grid.box_length() - 20.0 * PI).abs() < 1e-12);
        assert_eq!(cfg.seed, 20_240_601);
        assert_eq!(cfg.content().unwrap(), PhotonContent::single(10, 1));
    }

    #[test]
    fn lengths() {
        assert_eq!(parse_length("pi").unwrap(), PI);
        assert_eq!(parse_length("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_length("12.5").unwrap(), 12.5);
        assert!(parse_length("xpi").is_err());
    }

    #[test]
    fn errors_name_the_key() {
        let mut s = Settings::default();
        s.set("mass", "-1").unwrap();
        match RunConfig::from_settings(&s) {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "mass"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Settings::default().set("colour", "1"),
            Err(CliError::Config { key, .. }) if key == "colour"
        ));
        let mut s = Settings::default();
        s.set("mode", "64").unwrap();
        let cfg = RunConfig::from_settings(&s).unwrap();
        assert!(matches!(cfg.content(), Err(CliError::Config { key, .. }) if key == "mode"));
    }

    #[test]
    fn file_then_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# test\ngrid_n = 64\nbox-length = 16pi  # comment\ncount = 3\n",
        )
        .unwrap();
        let mut s = Settings::default();
        s.load_file(&path).unwrap();
        s.set("count", "2").unwrap();
        let cfg = RunConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.grid.n_modes(), 64);
        assert!((cfg.grid.dp() - 0.125).abs() < 1e-15);
        assert_eq!(cfg.count, 2);
    }
}
