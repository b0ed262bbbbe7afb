//! Flat `key=value` configuration. Every key is also a `--key` flag; flags
//! win over the config file, which wins over the built-in default.

use std::collections::BTreeMap;

use escape_core::fmt::sig17;
use escape_core::Complex64;

use crate::CliError;

#[derive(Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn p(key: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { key, default, help }
}

/// Parameters shared by every subcommand and recorded in the manifest.
pub const COMMON: &[Param] = &[p("seed", "0", "seed for randomized inputs")];

pub struct Subcommand {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [Param],
}

const MODEL: [Param; 2] = [
    p("lambda", "1", "λ in f(z) = λe^z, as a, bi or a+bi"),
    p("threshold", "auto", "threshold R ≥ |λ| (auto: max(|λ|, 1))"),
];

const PROFILE_HELP: &str = "strip half-width: const:c, inverse:c (c/(1+x)) or power:c:a (c(1+x)^-a)";

pub const SUBCOMMANDS: &[Subcommand] = &[
    Subcommand {
        name: "dim",
        about: "similarity dimension s with Σ b_i^s = 1",
        params: &[p("ratios", "0.5,0.5", "contraction ratios in (0, 1)")],
    },
    Subcommand {
        name: "cylinder",
        about: "cylinder points and masses of a similarity scheme on the unit square",
        params: &[
            p("ratios", "0.3333333333333333,0.3333333333333333", "map ratios"),
            p("offsets", "0:0,0.6666666666666666:0", "map translations x:y, one per ratio"),
            p("depth", "6", "word length"),
            p("cap", "1048576", "maximum number of cylinders"),
        ],
    },
    Subcommand {
        name: "schedule",
        about: "least schedule indices for a pool of uniform stages",
        params: &[
            p("stages", "9*0.3,16*0.2,25*0.15", "stages m*b: m maps of ratio b on a grid"),
            p("eps-scale", "0.05", "c in ε(t) = c/(1 − ln t)"),
            p("cap", "1000000", "largest index searched"),
        ],
    },
    Subcommand {
        name: "render",
        about: "escape-class raster of the exponential family (PPM)",
        params: &[
            MODEL[0],
            MODEL[1],
            p("window", "-2,2,-2,2", "x0,x1,y0,y1"),
            p("size", "256x256", "WxH pixels"),
            p("rate", "n", "rate p_n: none, n, n^a or exp"),
            p("horizon", "200", "iterations per orbit"),
            p("fast-base", "1", "base radius of the fast-escaping test, or none"),
        ],
    },
    Subcommand {
        name: "classify",
        about: "escape class of a single orbit, with the orbit as CSV",
        params: &[
            MODEL[0],
            MODEL[1],
            p("z0", "1", "starting point"),
            p("rate", "n", "rate p_n: none, n, n^a or exp"),
            p("horizon", "100", "iterations"),
            p("fast-base", "1", "base radius of the fast-escaping test, or none"),
        ],
    },
    Subcommand {
        name: "phi-build",
        about: "strip profile φ from the strip lemma or the upper-bound recipe",
        params: &[
            p("kind", "lemma", "lemma (α = a0/(1+a1 x), β = b0 t^b1) or thm2"),
            p("alpha-a0", "1", "lemma: α numerator"),
            p("alpha-a1", "0", "lemma: α decay"),
            p("beta-b0", "0.5", "lemma: β factor"),
            p("beta-b1", "1", "lemma: β exponent"),
            p("x0", "0", "lemma: left end"),
            p("rate", "n", "thm2: rate p_n: n, n^a or exp"),
            p("factor", "identity", "thm2: g as identity, power:a or inverse-log"),
            p("x-max", "20", "right end of the profile"),
            p("samples", "201", "evenly spaced output abscissae"),
        ],
    },
    Subcommand {
        name: "tau",
        about: "τ(t) = ((t/4)·exp(−exp(t⁻⁵)))^{1/t}",
        params: &[p("t", "1", "argument in (0, 1]")],
    },
    Subcommand {
        name: "ahlfors",
        about: "two-sided bounds on the real part of the strip map",
        params: &[p("profile", "const:0.5", PROFILE_HELP), p("x1", "0", "left abscissa"), p("x2", "20", "right abscissa")],
    },
    Subcommand {
        name: "contour-build",
        about: "entire function from the truncated contour integral; decay along a ray",
        params: &[
            p("profile", "inverse:1", PROFILE_HELP),
            p("x-trunc", "auto", "truncation abscissa"),
            p("spacing", "0.01", "quadrature node spacing"),
            p("angle", "0.75", "ray direction as a multiple of π"),
            p("r-min", "20", "first radius"),
            p("r-max", "200", "last radius"),
            p("count", "40", "radii, log-spaced"),
        ],
    },
    Subcommand {
        name: "cover-ledger",
        about: "inequality ledger of the cover recipe on surrogate orbit data",
        params: &[
            p("n", "6", "orbit index"),
            p("rate", "n", "rate p_n: n, n^a or exp"),
            p("terms", "12", "tabulated rate terms"),
            p("x-max", "13", "right end of the profile"),
            p("factor", "identity", "g as identity, power:a or inverse-log"),
            p("orbit-len", "10", "surrogate orbit length"),
            p("c1", "0.0625", "radius factor"),
            p("c2", "8", "diameter factor"),
            p("growth-c", "1", "growth constant C"),
            p("eps", "0.001", "target ε"),
        ],
    },
    Subcommand {
        name: "besicovitch",
        about: "bounded-multiplicity subcover of random balls in the unit square",
        params: &[
            p("points", "1000", "number of centers"),
            p("r-min", "0.005", "smallest radius"),
            p("r-max", "0.15", "largest radius"),
        ],
    },
];

pub fn find(name: &str) -> Option<&'static Subcommand> {
    SUBCOMMANDS.iter().find(|s| s.name == name)
}

/// Reserved manifest keys accepted in a config file.
const SUBCOMMAND_KEY: &str = "subcommand";
const VERSION_KEY: &str = "tool_version";
const DIGEST_PREFIX: &str = "digest.";

/// Resolved values plus the canonical text of every value read so far.
pub struct Config {
    pub sub: &'static Subcommand,
    raw: BTreeMap<&'static str, String>,
    canon: BTreeMap<&'static str, String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl Config {
    pub fn new(sub: &'static Subcommand) -> Self {
        let raw = sub.params.iter().chain(COMMON).map(|p| (p.key, p.default.to_string())).collect();
        Config { sub, raw, canon: BTreeMap::new() }
    }

    fn key(&self, key: &str) -> Option<&'static str> {
        self.sub.params.iter().chain(COMMON).map(|p| p.key).find(|k| *k == key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let k = self.key(key).ok_or_else(|| usage(format!("unknown key '{key}' for {}", self.sub.name)))?;
        self.raw.insert(k, value.trim().to_string());
        Ok(())
    }

    /// Applies a config file; manifests are valid config files.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == SUBCOMMAND_KEY {
                if v != self.sub.name {
                    return Err(usage(format!("config is for '{v}', not '{}'", self.sub.name)));
                }
            } else if k != VERSION_KEY && !k.starts_with(DIGEST_PREFIX) {
                self.set(k, v)?;
            }
        }
        Ok(())
    }

    fn raw(&self, key: &'static str) -> &str {
        self.raw.get(key).map(String::as_str).expect("declared key")
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        usage(format!("--{key}: expected {what}, got '{}'", self.raw.get(key).map(String::as_str).unwrap_or("")))
    }

    fn record(&mut self, key: &'static str, canon: String) {
        self.canon.insert(key, canon);
    }

    pub fn f64(&mut self, key: &'static str) -> Result<f64, CliError> {
        let v = parse_f64(self.raw(key)).ok_or_else(|| self.bad(key, "a number"))?;
        self.record(key, sig17(v));
        Ok(v)
    }

    /// A number, or `None` for the given keyword.
    pub fn f64_or(&mut self, key: &'static str, keyword: &str) -> Result<Option<f64>, CliError> {
        if self.raw(key) == keyword {
            self.record(key, keyword.to_string());
            return Ok(None);
        }
        self.f64(key).map(Some)
    }

    pub fn usize(&mut self, key: &'static str) -> Result<usize, CliError> {
        let v: usize = self.raw(key).parse().map_err(|_| self.bad(key, "a nonnegative integer"))?;
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn u64(&mut self, key: &'static str) -> Result<u64, CliError> {
        let v: u64 = self.raw(key).parse().map_err(|_| self.bad(key, "a nonnegative integer"))?;
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn list(&mut self, key: &'static str) -> Result<Vec<f64>, CliError> {
        let v: Option<Vec<f64>> = self.raw(key).split(',').map(parse_f64).collect();
        let v = v.ok_or_else(|| self.bad(key, "comma-separated numbers"))?;
        self.record(key, v.iter().map(|x| sig17(*x)).collect::<Vec<_>>().join(","));
        Ok(v)
    }

    pub fn complex(&mut self, key: &'static str) -> Result<Complex64, CliError> {
        let z = parse_complex(self.raw(key)).ok_or_else(|| self.bad(key, "a complex number a, bi or a+bi"))?;
        self.record(key, format!("{}{}{}i", sig17(z.re), if z.im.is_sign_negative() { "" } else { "+" }, sig17(z.im)));
        Ok(z)
    }

    /// `WxH`.
    pub fn size(&mut self, key: &'static str) -> Result<(usize, usize), CliError> {
        let v = self.raw(key).split_once('x').and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)));
        let (w, h) = v.ok_or_else(|| self.bad(key, "WxH"))?;
        self.record(key, format!("{w}x{h}"));
        Ok((w, h))
    }

    /// Free-form text; parsed by the caller.
    pub fn text(&mut self, key: &'static str) -> String {
        let v = self.raw(key).to_string();
        self.record(key, v.clone());
        v
    }

    pub fn usage_error(&self, key: &str, what: &str) -> CliError {
        self.bad(key, what)
    }

    /// Manifest body: every declared key, canonical where it was read.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        self.raw
            .iter()
            .map(|(k, v)| (k.to_string(), self.canon.get(k).cloned().unwrap_or_else(|| v.clone())))
            .collect()
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `a`, `bi`, `a+bi`, `a-bi`, with `i` alone meaning `1i`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return parse_f64(&s).map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (parse_f64(&body[..i])?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => parse_f64(t)?,
    };
    Some(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.25"), Some(Complex64::new(0.25, 0.0)));
        assert_eq!(parse_complex("2i"), Some(Complex64::new(0.0, 2.0)));
        assert_eq!(parse_complex("1-0.5i"), Some(Complex64::new(1.0, -0.5)));
        assert_eq!(parse_complex("-1e-3+i"), Some(Complex64::new(-1e-3, 1.0)));
        assert_eq!(parse_complex("1e+2-2e-1i"), Some(Complex64::new(100.0, -0.2)));
        assert_eq!(parse_complex("x"), None);
    }

    #[test]
    fn file_then_flag_precedence() {
        let mut c = Config::new(find("tau").unwrap());
        c.apply_text("# comment\nsubcommand=tau\nt = 0.5\ndigest.tau.csv=00\n").unwrap();
        assert_eq!(c.f64("t").unwrap(), 0.5);
        c.set("t", "0.25").unwrap();
        assert_eq!(c.f64("t").unwrap(), 0.25);
        assert!(c.apply_text("bogus=1").is_err());
        assert!(c.apply_text("subcommand=dim").is_err());
    }

    #[test]
    fn manifest_is_canonical() {
        let mut c = Config::new(find("tau").unwrap());
        c.set("t", "1").unwrap();
        c.f64("t").unwrap();
        let m = c.manifest_entries();
        assert!(m.contains(&("t".into(), sig17(1.0))));
        assert!(m.contains(&("seed".into(), "0".into())));
    }
}
