//! Run configuration read from a flat INI-style file.
//!
//! ```text
//! # comments start with '#' or ';'
//! [map]
//! q = 0 0                  # complex values are "re im"; "re" alone means im = 0
//! r = 1 0
//! rho = 2
//! eps2_alpha = 0 0
//! eps2_beta = 0 0
//! inverse_radius = 0.5
//! alpha_term = 2 0 1 0     # repeatable "i j re im": extra term of alpha
//! beta_term = 0 3 1 0      # repeatable: extra term of the y-multiplier
//!
//! [region]
//! gamma = 0.02
//! gamma_prime = 0.05
//! r = 0.1
//! s = 0.01
//! rho_prime = 1.5
//! rho_dblprime = 1.05
//! c_eps = 1
//!
//! [grid]
//! x_min = -1.6 -1.2        # slice y = y0 of the x-plane, corners x_min, x_max
//! x_max = 0.8 1.2
//! y0 = 0 0
//! nx = 512
//! ny = 512
//! escape_radius = 50
//! max_iter = 4000
//!
//! [lavaurs]
//! alpha = -25 0            # phase used by the verification suite
//! n_list = 200 400 800 1600
//! tol = 1e-10
//! p0 = -0.08 0 0 0         # window centre, "x_re x_im y_re y_im"
//! implode_target = 0.4     # implode: alpha sends p0 to this point of the line
//! implode_alpha = ...      # implode: explicit phase, overrides the target
//! m_max = 3
//! candidate_cap = 2048
//!
//! [run]
//! seed = 0
//! fatou_points = 25
//! window_points = 20
//! ladder = 50 100 200 400 800
//! estimate_eps = 100 200 400 800   # denominators k of eps = pi/k
//! ```
//!
//! An `alpha_term` or `beta_term` line replaces the built-in list of that
//! kind; `alpha_term = none` empties it. Missing keys take the values shown.
//! Unknown sections or keys are errors.

use std::collections::BTreeMap;
use std::fmt;

use implab::julia::{EscapeClassifier, GridSpec, SliceGeometry};
use implab::lavaurs::AlphaSequence;
use implab::{c, ComplexPoint, MapParts, Monomial, PolyMap2, RegionConfig, RegionParams, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LavaursSection {
    pub alpha: C64,
    pub n_list: Vec<usize>,
    pub tol: f64,
    pub p0: ComplexPoint,
    pub implode_target: f64,
    pub implode_alpha: Option<C64>,
    pub m_max: usize,
    pub candidate_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    pub fatou_points: usize,
    pub window_points: usize,
    pub ladder: Vec<usize>,
    pub estimate_eps: Vec<usize>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub map: PolyMap2,
    pub region: RegionConfig,
    pub grid: GridSpec,
    pub lavaurs: LavaursSection,
    pub run: RunSection,
}

impl RunConfig {
    pub fn default_config() -> Self {
        Self::parse("").expect("built-in defaults are valid")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;
        build(raw)
    }

    /// The α-sequence of the verification suite.
    pub fn sequence(&self) -> Result<AlphaSequence, ConfigError> {
        AlphaSequence::new(&self.region, self.lavaurs.alpha, &self.lavaurs.n_list).map_err(|e| ConfigError(format!("[lavaurs] {e}")))
    }
}

/// Entries grouped by section; scalar keys keep their line number so
/// duplicates can be reported.
#[derive(Debug, Default)]
struct RawConfig {
    sections: BTreeMap<String, Vec<(usize, String, String)>>,
}

const SECTIONS: [&str; 5] = ["map", "region", "grid", "lavaurs", "run"];

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (k, line) in text.lines().enumerate() {
            let lineno = k + 1;
            let line = line.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return err(format!("line {lineno}: unknown section [{name}]"));
                }
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {lineno}: expected key = value"));
            };
            let Some(section) = &current else {
                return err(format!("line {lineno}: key outside of a section"));
            };
            raw.sections.entry(section.clone()).or_default().push((lineno, key.trim().to_string(), value.trim().to_string()));
        }
        Ok(raw)
    }

    fn take(&mut self, section: &str) -> Section {
        Section { name: section.to_string(), entries: self.sections.remove(section).unwrap_or_default() }
    }
}

struct Section {
    name: String,
    entries: Vec<(usize, String, String)>,
}

impl Section {
    fn scalar(&mut self, key: &str) -> Result<Option<(usize, String)>, ConfigError> {
        let mut found: Vec<(usize, String)> = Vec::new();
        self.entries.retain(|(l, k, v)| {
            if k == key {
                found.push((*l, v.clone()));
                false
            } else {
                true
            }
        });
        match found.len() {
            0 => Ok(None),
            1 => Ok(found.pop()),
            _ => err(format!("[{}] key '{key}' given more than once (line {})", self.name, found[1].0)),
        }
    }

    fn repeated(&mut self, key: &str) -> Vec<(usize, String)> {
        let mut found = Vec::new();
        self.entries.retain(|(l, k, v)| {
            if k == key {
                found.push((*l, v.clone()));
                false
            } else {
                true
            }
        });
        found
    }

    fn get<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>) -> Result<T, ConfigError> {
        match self.scalar(key)? {
            None => Ok(default),
            Some((line, v)) => parse(&v).ok_or_else(|| ConfigError(format!("line {line}: [{}] cannot parse {key} = {v}", self.name))),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.first() {
            None => Ok(()),
            Some((l, k, _)) => err(format!("line {l}: unknown key '{k}' in [{}]", self.name)),
        }
    }
}

fn numbers(v: &str) -> Option<Vec<f64>> {
    v.split_whitespace().map(|t| t.parse::<f64>().ok()).collect()
}

fn real(v: &str) -> Option<f64> {
    match numbers(v)?.as_slice() {
        [a] => Some(*a),
        _ => None,
    }
}

fn complex(v: &str) -> Option<C64> {
    match numbers(v)?.as_slice() {
        [a] => Some(c(*a, 0.0)),
        [a, b] => Some(c(*a, *b)),
        _ => None,
    }
}

fn point(v: &str) -> Option<ComplexPoint> {
    match numbers(v)?.as_slice() {
        [a, b, c2, d] => Some(ComplexPoint::new(c(*a, *b), c(*c2, *d))),
        _ => None,
    }
}

fn count(v: &str) -> Option<usize> {
    v.trim().parse().ok()
}

fn counts(v: &str) -> Option<Vec<usize>> {
    v.split_whitespace().map(|t| t.parse().ok()).collect()
}

fn monomials(lines: Vec<(usize, String)>, key: &str, default: Vec<Monomial>) -> Result<Vec<Monomial>, ConfigError> {
    if lines.is_empty() {
        return Ok(default);
    }
    if lines.len() == 1 && lines[0].1.trim() == "none" {
        return Ok(Vec::new());
    }
    lines
        .into_iter()
        .map(|(l, v)| {
            let t: Vec<&str> = v.split_whitespace().collect();
            let parsed = match t.as_slice() {
                [i, j, re, im] => match (i.parse(), j.parse(), re.parse(), im.parse()) {
                    (Ok(i), Ok(j), Ok(re), Ok(im)) => Some(Monomial::new(i, j, c(re, im))),
                    _ => None,
                },
                _ => None,
            };
            parsed.ok_or_else(|| ConfigError(format!("line {l}: {key} needs \"i j re im\"")))
        })
        .collect()
}

fn build(mut raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let d = MapParts::default();
    let mut s = raw.take("map");
    let parts = MapParts {
        q: s.get("q", d.q, complex)?,
        r: s.get("r", d.r, complex)?,
        rho: s.get("rho", d.rho, real)?,
        eps2_alpha: s.get("eps2_alpha", d.eps2_alpha, complex)?,
        eps2_beta: s.get("eps2_beta", d.eps2_beta, complex)?,
        inverse_radius: s.get("inverse_radius", d.inverse_radius, real)?,
        alpha_extra: monomials(s.repeated("alpha_term"), "alpha_term", d.alpha_extra.clone())?,
        beta_extra: monomials(s.repeated("beta_term"), "beta_term", d.beta_extra.clone())?,
    };
    s.finish()?;
    let map = PolyMap2::new(parts).map_err(|e| ConfigError(format!("[map] {e}")))?;

    let d = RegionParams::default();
    let mut s = raw.take("region");
    let params = RegionParams {
        gamma: s.get("gamma", d.gamma, real)?,
        gamma_prime: s.get("gamma_prime", d.gamma_prime, real)?,
        r: s.get("r", d.r, real)?,
        s: s.get("s", d.s, real)?,
        rho_prime: s.get("rho_prime", d.rho_prime, real)?,
        rho_dblprime: s.get("rho_dblprime", d.rho_dblprime, real)?,
        c_eps: s.get("c_eps", d.c_eps, real)?,
    };
    s.finish()?;
    let region = RegionConfig::for_map(params, &map).map_err(|e| ConfigError(format!("[region] {e}")))?;

    let mut s = raw.take("grid");
    let x_min = s.get("x_min", c(-1.6, -1.2), complex)?;
    let x_max = s.get("x_max", c(0.8, 1.2), complex)?;
    let y0 = s.get("y0", C64::default(), complex)?;
    let nx = s.get("nx", 512, count)?;
    let ny = s.get("ny", 512, count)?;
    let escape_radius = s.get("escape_radius", 50.0, real)?;
    let max_iter = s.get("max_iter", 4000, count)?;
    s.finish()?;
    if !(x_min.re < x_max.re && x_min.im < x_max.im) {
        return err("[grid] x_min must lie below and left of x_max");
    }
    let grid = GridSpec::new(SliceGeometry::x_plane(x_min, x_max, y0), nx, ny, escape_radius, max_iter)
        .map_err(|e| ConfigError(format!("[grid] {e}")))?;
    EscapeClassifier::new(&map, C64::default(), escape_radius, max_iter).map_err(|e| ConfigError(format!("[grid] {e}")))?;

    let mut s = raw.take("lavaurs");
    let lavaurs = LavaursSection {
        alpha: s.get("alpha", c(-25.0, 0.0), complex)?,
        n_list: s.get("n_list", vec![200, 400, 800, 1600], counts)?,
        tol: s.get("tol", 1e-10, real)?,
        p0: s.get("p0", ComplexPoint::new(c(-0.08, 0.0), C64::default()), point)?,
        implode_target: s.get("implode_target", 0.4, real)?,
        implode_alpha: s.get("implode_alpha", None, |v| complex(v).map(Some))?,
        m_max: s.get("m_max", 3, count)?,
        candidate_cap: s.get("candidate_cap", 2048, count)?,
    };
    s.finish()?;
    if lavaurs.n_list.len() < 2 {
        return err("[lavaurs] n_list needs at least two entries");
    }
    if !(lavaurs.tol > 0.0 && lavaurs.tol < 1e-3) {
        return err("[lavaurs] tol must lie in (0, 1e-3)");
    }
    if lavaurs.m_max == 0 || lavaurs.candidate_cap == 0 {
        return err("[lavaurs] m_max and candidate_cap must be positive");
    }
    AlphaSequence::new(&region, lavaurs.alpha, &lavaurs.n_list).map_err(|e| ConfigError(format!("[lavaurs] {e}")))?;

    let mut s = raw.take("run");
    let run = RunSection {
        seed: s.get("seed", 0, |v| v.trim().parse().ok())?,
        fatou_points: s.get("fatou_points", 25, count)?,
        window_points: s.get("window_points", 20, count)?,
        ladder: s.get("ladder", vec![50, 100, 200, 400, 800], counts)?,
        estimate_eps: s.get("estimate_eps", vec![100, 200, 400, 800], counts)?,
    };
    s.finish()?;
    if run.fatou_points == 0 || run.window_points == 0 {
        return err("[run] point counts must be positive");
    }
    if run.ladder.len() < 2 || run.estimate_eps.is_empty() || run.estimate_eps.contains(&0) {
        return err("[run] ladder needs two entries and estimate_eps positive denominators");
    }
    if let Some(name) = raw.sections.keys().next() {
        return err(format!("unhandled section [{name}]"));
    }
    Ok(RunConfig { map, region, grid, lavaurs, run })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::default_config();
        assert_eq!(cfg.map, PolyMap2::default_regular());
        assert_eq!(cfg.grid.nx, 512);
        assert_eq!(cfg.lavaurs.n_list, vec![200, 400, 800, 1600]);
        assert_eq!(cfg.region.params, RegionParams::default());
    }

    #[test]
    fn values_are_parsed() {
        let text = "[map]\nrho = 3 # comment\nalpha_term = 2 0 0.5 0\n[grid]\nnx = 8\nny = 4\n[lavaurs]\nalpha = -20 0.5\np0 = -0.07 0 0.0001 0\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.map.rho(), 3.0);
        assert_eq!(cfg.map.parts().alpha_extra, vec![Monomial::new(2, 0, c(0.5, 0.0))]);
        assert_eq!(cfg.map.parts().beta_extra, MapParts::default().beta_extra);
        assert_eq!((cfg.grid.nx, cfg.grid.ny), (8, 4));
        assert_eq!(cfg.lavaurs.alpha, c(-20.0, 0.5));
        assert_eq!(cfg.lavaurs.p0.y, c(1e-4, 0.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            "[map]\nrho = 1.0\n",
            "[region]\ns = 0.2\n",
            "[grid]\nnx = 1\n",
            "[grid]\nescape_radius = 5\n",
            "[lavaurs]\nn_list = 200\n",
            "[lavaurs]\nn_list = 400 200\n",
            "[map]\nrho = 2\nrho = 3\n",
            "[map]\nbogus = 1\n",
            "[nowhere]\n",
            "rho = 2\n",
            "[map]\nq = a b\n",
            "[map]\nalpha_term = 1 2 3\n",
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn term_lists_can_be_cleared() {
        // Without the extra terms the map is not regular, so the grid check
        // rejects it; the parse itself must get that far.
        let e = RunConfig::parse("[map]\nalpha_term = none\nbeta_term = none\n").unwrap_err();
        assert!(e.0.contains("[grid]"), "{e}");
    }
}
