//! INI-style run configuration with a fixed key schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fragkit_core::kernels::{FragmentKernel, RateFunction};
use fragkit_core::quadrature::QuadratureSpec;
use fragkit_core::weights::{LogTable, Weight};

use crate::error::CliError;

const WEIGHT_KEYS: &[&str] = &["family", "p", "base", "log_base", "scale", "table", "file"];

const SCHEMA: &[(&str, &[&str])] = &[
    ("kernel", &["family", "nu", "table", "file"]),
    ("rate", &["family", "alpha", "value", "table", "file"]),
    ("weight", WEIGHT_KEYS),
    ("weight2", WEIGHT_KEYS),
    ("quadrature", &["rel_tol", "abs_tol", "max_subdivisions"]),
    ("mass", &["y_samples", "y_min", "y_max", "count"]),
    ("check", &["eta0", "y_max", "per_decade", "kappa1_decades", "margin"]),
    (
        "build",
        &[
            "eta0",
            "kappa",
            "y_max",
            "step",
            "epsilon",
            "residual_tol",
            "certificate_points",
            "validation_samples",
            "h_samples_per_unit",
            "b_samples_per_side",
        ],
    ),
    ("search", &["delta1", "delta2", "d", "b_m"]),
    (
        "simulate",
        &["x_min", "x_max", "n", "t_end", "dt", "scheme", "sample_every", "initial", "lo", "hi", "scale", "file"],
    ),
    ("compare", &["x_min", "x_max", "x_points", "y_samples", "y_min", "y_max", "count"]),
];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    base_dir: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, CliError> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| invalid(format!("config syntax: {e}")))?;
        let mut sections = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(invalid(format!("key `{k}` appears outside any [section]")));
                }
                continue;
            };
            let allowed = SCHEMA
                .iter()
                .find(|(s, _)| *s == name)
                .map(|(_, keys)| *keys)
                .ok_or_else(|| invalid(format!("unknown section [{name}]")))?;
            let mut map = BTreeMap::new();
            for (k, v) in props.iter() {
                if !allowed.contains(&k) {
                    return Err(invalid(format!("unknown key `{k}` in [{name}] (allowed: {})", allowed.join(", "))));
                }
                if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                    return Err(invalid(format!("duplicate key `{k}` in [{name}]")));
                }
            }
            if sections.insert(name.to_string(), map).is_some() {
                return Err(invalid(format!("duplicate section [{name}]")));
            }
        }
        Ok(Self { sections, base_dir })
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|m| m.get(key)).map(String::as_str)
    }

    fn require(&self, section: &str, key: &str) -> Result<&str, CliError> {
        self.get(section, key).ok_or_else(|| invalid(format!("missing `{key}` in [{section}]")))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        self.get(section, key).map_or(Ok(default), |v| parse_f64(section, key, v))
    }

    pub fn f64_req(&self, section: &str, key: &str) -> Result<f64, CliError> {
        parse_f64(section, key, self.require(section, key)?)
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        self.get(section, key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| invalid(format!("[{section}] {key} = `{v}` is not a non-negative integer")))
        })
    }

    pub fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(section, key).map(|v| parse_list(section, key, v)).transpose()
    }

    fn resolve(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Pairs from an inline `table` (flattened `a,b,a,b,...`) or a two-column
    /// CSV `file` with a header row.
    fn pairs(&self, section: &str) -> Result<Option<Vec<(f64, f64)>>, CliError> {
        match (self.get(section, "table"), self.get(section, "file")) {
            (Some(_), Some(_)) => Err(invalid(format!("[{section}] has both `table` and `file`"))),
            (Some(t), None) => {
                let flat = parse_list(section, "table", t)?;
                if flat.is_empty() || flat.len() % 2 != 0 {
                    return Err(invalid(format!("[{section}] table needs a non-empty even number of values")));
                }
                Ok(Some(flat.chunks(2).map(|c| (c[0], c[1])).collect()))
            }
            (None, Some(f)) => read_pairs(&self.resolve(f)).map(Some),
            (None, None) => Ok(None),
        }
    }

    pub fn quadrature(&self, tol_override: Option<f64>) -> Result<QuadratureSpec<f64>, CliError> {
        let mut spec = QuadratureSpec::default();
        if let Some(v) = self.get("quadrature", "rel_tol") {
            spec = spec.with_rel_tol(parse_f64("quadrature", "rel_tol", v)?);
        }
        if let Some(t) = tol_override {
            spec = spec.with_rel_tol(t);
        }
        spec.abs_tol = self.f64_or("quadrature", "abs_tol", 0.0)?;
        spec.max_subdivisions = self.usize_or("quadrature", "max_subdivisions", spec.max_subdivisions)?;
        spec.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(spec)
    }

    pub fn kernel(&self) -> Result<FragmentKernel<f64>, CliError> {
        let family = self.require("kernel", "family")?;
        let k = match family {
            "homogeneous_power" => FragmentKernel::homogeneous_power(self.f64_req("kernel", "nu")?)?,
            "homogeneous_tabulated" | "tabulated" => {
                let profile = self.pairs("kernel")?.ok_or_else(|| invalid("[kernel] tabulated family needs `table` or `file`"))?;
                FragmentKernel::homogeneous_tabulated(profile)?
            }
            "boundary_binary" => FragmentKernel::boundary_binary(),
            "concentrated" => FragmentKernel::concentrated(),
            "zero" => FragmentKernel::zero(),
            other => return Err(invalid(format!("unknown kernel family `{other}`"))),
        };
        Ok(k)
    }

    /// `[rate]`, defaulting to `a ≡ 1` when the section is absent.
    pub fn rate(&self) -> Result<RateFunction<f64>, CliError> {
        if !self.has_section("rate") {
            return Ok(RateFunction::constant(1.0)?);
        }
        let r = match self.require("rate", "family")? {
            "power" => RateFunction::power(self.f64_req("rate", "alpha")?)?,
            "constant" => RateFunction::constant(self.f64_req("rate", "value")?)?,
            "tabulated" => RateFunction::tabulated(self.pairs("rate")?.ok_or_else(|| invalid("[rate] tabulated needs `table` or `file`"))?)?,
            other => return Err(invalid(format!("unknown rate family `{other}`"))),
        };
        Ok(r)
    }

    /// Weight from `section`; `None` when the section is absent.
    pub fn weight(&self, section: &str) -> Result<Option<Weight<f64>>, CliError> {
        if !self.has_section(section) {
            return Ok(None);
        }
        let w = match self.require(section, "family")? {
            "power" => Weight::power(self.f64_req(section, "p")?)?,
            "power_shifted" => Weight::power_shifted(self.f64_req(section, "p")?)?,
            "exponential" => match (self.get(section, "base"), self.get(section, "log_base")) {
                (Some(b), None) => Weight::exponential(parse_f64(section, "base", b)?)?,
                (None, Some(l)) => Weight::exponential_log_base(parse_f64(section, "log_base", l)?)?,
                _ => return Err(invalid(format!("[{section}] exponential needs exactly one of `base`, `log_base`"))),
            },
            "super_exponential" => Weight::super_exponential(),
            "tabulated" => {
                let pairs = self.pairs(section)?.ok_or_else(|| invalid(format!("[{section}] tabulated needs `table` or `file`")))?;
                let (xs, logs) = pairs.into_iter().unzip();
                Weight::tabulated(LogTable::new(xs, logs)?)
            }
            other => return Err(invalid(format!("unknown weight family `{other}`"))),
        };
        match self.get(section, "scale") {
            Some(s) => Ok(Some(w.scaled(parse_f64(section, "scale", s)?)?)),
            None => Ok(Some(w)),
        }
    }

    /// Explicit `y_samples` list, or a geometric grid from
    /// `y_min, y_max, count`.
    pub fn samples(&self, section: &str, default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
        if let Some(list) = self.list(section, "y_samples")? {
            if list.is_empty() {
                return Err(invalid(format!("[{section}] y_samples is empty")));
            }
            return Ok(list);
        }
        let lo = self.f64_or(section, "y_min", default.0)?;
        let hi = self.f64_or(section, "y_max", default.1)?;
        let n = self.usize_or(section, "count", default.2)?;
        geometric(lo, hi, n, section)
    }

    pub fn initial_pairs(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let f = self.require("simulate", "file")?;
        read_pairs(&self.resolve(f))
    }
}

pub fn geometric(lo: f64, hi: f64, n: usize, section: &str) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(invalid(format!("[{section}] needs 0 < min < max and at least 2 points")));
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo * (r * i as f64).exp() }).collect())
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| invalid(format!("[{section}] {key} = `{v}` is not a number")))
}

fn parse_list(section: &str, key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(section, key, s))
        .collect()
}

/// Two numeric columns after a header row.
pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if rec.len() < 2 {
            return Err(invalid(format!("{}: expected two columns", path.display())));
        }
        let a = parse_f64("file", "column 1", &rec[0])?;
        let b = parse_f64("file", "column 2", &rec[1])?;
        out.push((a, b));
    }
    if out.is_empty() {
        return Err(invalid(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(Config::parse("[kernel]\nfamily = zero\ncolour = red\n", PathBuf::new()).is_err());
        assert!(Config::parse("[nope]\na = 1\n", PathBuf::new()).is_err());
        assert!(Config::parse("a = 1\n[kernel]\nfamily = zero\n", PathBuf::new()).is_err());
    }

    #[test]
    fn lists_and_tables() {
        let c = Config::parse("[kernel]\nfamily = tabulated\ntable = 0,0, 1,1\n[mass]\ny_samples = 1, 2.5,4\n", PathBuf::new()).unwrap();
        assert_eq!(c.list("mass", "y_samples").unwrap().unwrap(), vec![1.0, 2.5, 4.0]);
        let k = c.kernel().unwrap();
        assert!((k.eval(1.0, 2.0) - 0.25).abs() < 1e-15);
        let bad = Config::parse("[kernel]\nfamily = tabulated\ntable =\n", PathBuf::new()).unwrap();
        assert!(bad.kernel().is_err());
    }
}
