//! Plain-text scenario format.
//!
//! ```text
//! facplan-scenario 1
//! name = demo
//! rows = 2
//! cols = 2
//! years = 1
//! districts = 1
//! cell_size_km = 1
//! threshold_minutes = 120
//! budgets = 1
//!
//! [policy]
//! mode = dp0
//! mass = 0.9
//! sigma = 1
//!
//! [existing]
//!
//! [candidates]
//! all
//!
//! [advice]
//!
//! [grid friction]
//! 30 30
//! 30 x
//!
//! [grid districts]
//! 1 1
//! 1 1
//!
//! [grid population.1]
//! 5 0
//! 2 9
//! ```
//!
//! Header keys come first, then the sections in the order above. Grids are
//! row-major and whitespace separated; `x` marks an impassable friction
//! cell. Candidate entries are `row,col` (available from round 1) or
//! `row,col@t`; advice lines are `round.t = row,col row,col ...`. Lines
//! starting with `#` are comments. Saving a loaded file reproduces it
//! byte for byte when it was written by [`ScenarioFile::to_text`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Cell;

pub const FORMAT_HEADER: &str = "facplan-scenario 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// No proportional constraint.
    Dp0,
    /// Proportions from district home-birth rates.
    Dp1,
    /// Proportions from inverse postnatal-care coverage.
    Dp2,
    /// Proportions given literally.
    Explicit,
}

impl PolicyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyMode::Dp0 => "dp0",
            PolicyMode::Dp1 => "dp1",
            PolicyMode::Dp2 => "dp2",
            PolicyMode::Explicit => "explicit",
        }
    }
}

impl FromStr for PolicyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dp0" => Ok(PolicyMode::Dp0),
            "dp1" => Ok(PolicyMode::Dp1),
            "dp2" => Ok(PolicyMode::Dp2),
            "explicit" => Ok(PolicyMode::Explicit),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy `{other}` (expected dp0, dp1, dp2 or explicit)"
            ))),
        }
    }
}

impl std::fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyBlock {
    pub mode: PolicyMode,
    /// Total proportional mass shared among districts.
    pub mass: f64,
    pub sigma: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub home_birth_rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub postnatal_coverage: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub proportions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Candidates {
    /// Every passable cell, from round 1.
    All,
    /// Listed cells with the first round they may be built in.
    Listed(Vec<CandidateSite>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSite {
    pub cell: Cell,
    pub from_round: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub years: usize,
    pub districts: usize,
    pub cell_size_km: f64,
    pub threshold_minutes: f64,
    pub budgets: Vec<usize>,
    pub policy: PolicyBlock,
    pub existing: Vec<Cell>,
    pub candidates: Candidates,
    /// Advised cells per round.
    pub advice: BTreeMap<usize, Vec<Cell>>,
    /// Minutes per km; `None` marks an impassable cell.
    pub friction: Vec<Option<f64>>,
    pub district_grid: Vec<usize>,
    /// `population[t - 1]` is the grid of year `t`.
    pub population: Vec<Vec<f64>>,
}

fn schema(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        line: Some(line),
        field: field.to_string(),
        message: message.into(),
    }
}

fn semantic(field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        line: None,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(line: usize, field: &str, token: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| schema(line, field, format!("cannot parse `{token}`")))
}

fn parse_list<T: FromStr>(line: usize, field: &str, value: &str) -> Result<Vec<T>> {
    value.split_whitespace().map(|t| parse_num(line, field, t)).collect()
}

fn parse_cell(line: usize, field: &str, token: &str) -> Result<Cell> {
    let (r, c) = token
        .split_once(',')
        .ok_or_else(|| schema(line, field, format!("expected `row,col`, found `{token}`")))?;
    Ok(Cell::new(parse_num(line, field, r.trim())?, parse_num(line, field, c.trim())?))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

struct RawGrid {
    name: String,
    line: usize,
    rows: Vec<Vec<String>>,
}

impl RawGrid {
    fn dims(&self) -> (usize, usize) {
        (self.rows.len(), self.rows.first().map_or(0, Vec::len))
    }
}

#[derive(Default)]
struct Header {
    values: BTreeMap<String, (usize, String)>,
}

impl Header {
    fn take(&mut self, key: &str, section: &str) -> Result<(usize, String)> {
        self.values
            .remove(key)
            .ok_or_else(|| semantic(&format!("{section}.{key}"), "missing"))
    }

    fn take_opt(&mut self, key: &str) -> Option<(usize, String)> {
        self.values.remove(key)
    }
}

impl ScenarioFile {
    /// Parses the text format. Structural problems are reported with line
    /// numbers; [`ScenarioFile::validate`] runs afterwards.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim() == FORMAT_HEADER => {}
            Some((n, l)) => {
                return Err(schema(n, "header", format!("expected `{FORMAT_HEADER}`, found `{}`", l.trim())))
            }
            None => return Err(semantic("header", "file is empty")),
        }

        let mut section = String::from("scenario");
        let mut header = Header::default();
        let mut policy = Header::default();
        let mut existing = Vec::new();
        let mut candidates: Option<Candidates> = None;
        let mut advice = BTreeMap::new();
        let mut grids: Vec<RawGrid> = Vec::new();
        let mut seen_sections = vec![section.clone()];

        for (n, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if seen_sections.contains(&name) {
                    return Err(schema(n, &name, "section repeated"));
                }
                seen_sections.push(name.clone());
                if let Some(grid) = name.strip_prefix("grid ") {
                    grids.push(RawGrid {
                        name: grid.trim().to_string(),
                        line: n,
                        rows: Vec::new(),
                    });
                } else if !["policy", "existing", "candidates", "advice"].contains(&name.as_str()) {
                    return Err(schema(n, &name, "unknown section"));
                }
                section = name;
                continue;
            }
            match section.as_str() {
                "scenario" | "policy" => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| schema(n, &section, format!("expected `key = value`, found `{line}`")))?;
                    let target = if section == "policy" { &mut policy } else { &mut header };
                    let key = k.trim().to_string();
                    if target.values.insert(key.clone(), (n, v.trim().to_string())).is_some() {
                        return Err(schema(n, &format!("{section}.{key}"), "key repeated"));
                    }
                }
                "existing" => {
                    for token in line.split_whitespace() {
                        existing.push(parse_cell(n, "existing", token)?);
                    }
                }
                "candidates" => {
                    if line == "all" {
                        if candidates.is_some() {
                            return Err(schema(n, "candidates", "`all` cannot be combined with listed cells"));
                        }
                        candidates = Some(Candidates::All);
                        continue;
                    }
                    let list = match candidates.get_or_insert_with(|| Candidates::Listed(Vec::new())) {
                        Candidates::Listed(list) => list,
                        Candidates::All => {
                            return Err(schema(n, "candidates", "`all` cannot be combined with listed cells"))
                        }
                    };
                    for token in line.split_whitespace() {
                        let (cell, from_round) = match token.split_once('@') {
                            Some((c, t)) => (parse_cell(n, "candidates", c)?, parse_num(n, "candidates", t)?),
                            None => (parse_cell(n, "candidates", token)?, 1),
                        };
                        list.push(CandidateSite { cell, from_round });
                    }
                }
                "advice" => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| schema(n, "advice", format!("expected `round.t = cells`, found `{line}`")))?;
                    let round: usize = k
                        .trim()
                        .strip_prefix("round.")
                        .ok_or_else(|| schema(n, "advice", format!("expected `round.t`, found `{}`", k.trim())))
                        .and_then(|t| parse_num(n, "advice", t))?;
                    let cells = v
                        .split_whitespace()
                        .map(|t| parse_cell(n, "advice", t))
                        .collect::<Result<Vec<_>>>()?;
                    if advice.insert(round, cells).is_some() {
                        return Err(schema(n, "advice", format!("round {round} advised twice")));
                    }
                }
                _ => {
                    let grid = grids.last_mut().expect("grid section is open");
                    grid.rows.push(line.split_whitespace().map(str::to_string).collect());
                }
            }
        }

        let (n, name) = header.take("name", "scenario")?;
        let _ = n;
        let get = |h: &mut Header, key: &str| -> Result<(usize, String)> { h.take(key, "scenario") };
        let (n, v) = get(&mut header, "rows")?;
        let rows: usize = parse_num(n, "rows", &v)?;
        let (n, v) = get(&mut header, "cols")?;
        let cols: usize = parse_num(n, "cols", &v)?;
        let (n, v) = get(&mut header, "years")?;
        let years: usize = parse_num(n, "years", &v)?;
        let (n, v) = get(&mut header, "districts")?;
        let districts: usize = parse_num(n, "districts", &v)?;
        let (n, v) = get(&mut header, "cell_size_km")?;
        let cell_size_km: f64 = parse_num(n, "cell_size_km", &v)?;
        let (n, v) = get(&mut header, "threshold_minutes")?;
        let threshold_minutes: f64 = parse_num(n, "threshold_minutes", &v)?;
        let (n, v) = get(&mut header, "budgets")?;
        let budgets: Vec<usize> = parse_list(n, "budgets", &v)?;
        if let Some((key, (n, _))) = header.values.iter().next() {
            return Err(schema(*n, key, "unknown key"));
        }

        let (n, v) = policy.take("mode", "policy")?;
        let mode = v.parse().map_err(|e: Error| schema(n, "policy.mode", e.to_string()))?;
        let (n, v) = policy.take("mass", "policy")?;
        let mass: f64 = parse_num(n, "policy.mass", &v)?;
        let (n, v) = policy.take("sigma", "policy")?;
        let sigma: Vec<usize> = parse_list(n, "policy.sigma", &v)?;
        let mut optional = |key: &str| -> Result<Vec<f64>> {
            match policy.take_opt(key) {
                Some((n, v)) => parse_list(n, &format!("policy.{key}"), &v),
                None => Ok(Vec::new()),
            }
        };
        let home_birth_rates = optional("home_birth_rates")?;
        let postnatal_coverage = optional("postnatal_coverage")?;
        let proportions = optional("proportions")?;
        if let Some((key, (n, _))) = policy.values.iter().next() {
            return Err(schema(*n, &format!("policy.{key}"), "unknown key"));
        }

        let reference = (rows, cols);
        let mut friction = None;
        let mut district_grid = None;
        let mut population: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let friction_dims = grids.iter().find(|g| g.name == "friction").map(RawGrid::dims);
        for grid in &grids {
            if let Some((i, row)) = grid.rows.iter().enumerate().find(|(_, r)| r.len() != grid.dims().1) {
                return Err(schema(
                    grid.line + i + 1,
                    &format!("grid {}", grid.name),
                    format!("row {} has {} values, the first row has {}", i + 1, row.len(), grid.dims().1),
                ));
            }
            let dims = grid.dims();
            if dims != reference {
                let message = match friction_dims {
                    Some(fd) if grid.name != "friction" && fd == reference => format!(
                        "grid `{}` is {}x{} but grid `friction` is {}x{}",
                        grid.name, dims.0, dims.1, fd.0, fd.1
                    ),
                    _ => format!(
                        "grid `{}` is {}x{} but the header declares {}x{}",
                        grid.name, dims.0, dims.1, rows, cols
                    ),
                };
                return Err(schema(grid.line, &format!("grid {}", grid.name), message));
            }
            let field = format!("grid {}", grid.name);
            let tokens = grid.rows.iter().flatten();
            if grid.name == "friction" {
                let values = tokens
                    .map(|t| if t == "x" { Ok(None) } else { parse_num(grid.line, &field, t).map(Some) })
                    .collect::<Result<Vec<Option<f64>>>>()?;
                friction = Some(values);
            } else if grid.name == "districts" {
                district_grid = Some(tokens.map(|t| parse_num(grid.line, &field, t)).collect::<Result<Vec<usize>>>()?);
            } else if let Some(year) = grid.name.strip_prefix("population.") {
                let year: usize = parse_num(grid.line, &field, year)?;
                let values = tokens.map(|t| parse_num(grid.line, &field, t)).collect::<Result<Vec<f64>>>()?;
                population.insert(year, values);
            } else {
                return Err(schema(grid.line, &field, "unknown grid"));
            }
        }
        let friction = friction.ok_or_else(|| semantic("grid friction", "missing"))?;
        let district_grid = district_grid.ok_or_else(|| semantic("grid districts", "missing"))?;
        let expected: Vec<usize> = (1..=years).collect();
        let found: Vec<usize> = population.keys().copied().collect();
        if found != expected {
            return Err(semantic(
                "grid population",
                format!("expected population grids for years 1..={years}, found {found:?}"),
            ));
        }

        let file = ScenarioFile {
            name,
            rows,
            cols,
            years,
            districts,
            cell_size_km,
            threshold_minutes,
            budgets,
            policy: PolicyBlock {
                mode,
                mass,
                sigma,
                home_birth_rates,
                postnatal_coverage,
                proportions,
            },
            existing,
            candidates: candidates.unwrap_or(Candidates::All),
            advice,
            friction,
            district_grid,
            population: population.into_values().collect(),
        };
        file.validate()?;
        Ok(file)
    }

    /// Checks cross-field consistency: grid sizes, id ranges, list lengths.
    pub fn validate(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if self.rows == 0 || self.cols == 0 {
            return Err(semantic("rows", "grid must have at least one cell"));
        }
        if self.years == 0 {
            return Err(semantic("years", "at least one year is required"));
        }
        if self.districts == 0 {
            return Err(semantic("districts", "at least one district is required"));
        }
        if self.budgets.len() != self.years {
            return Err(semantic(
                "budgets",
                format!("{} budgets for {} years", self.budgets.len(), self.years),
            ));
        }
        if !(self.cell_size_km.is_finite() && self.cell_size_km > 0.0) {
            return Err(semantic("cell_size_km", "must be positive"));
        }
        if !(self.threshold_minutes.is_finite() && self.threshold_minutes >= 0.0) {
            return Err(semantic("threshold_minutes", "must be non-negative"));
        }
        if self.friction.len() != n || self.district_grid.len() != n {
            return Err(semantic("grid", format!("grids must have {n} cells")));
        }
        if let Some(i) = self.friction.iter().position(|m| m.is_some_and(|m| !(m.is_finite() && m >= 0.0))) {
            return Err(semantic(
                "grid friction",
                format!("cell {} has a negative or non-finite cost", Cell::from_index(i, self.cols)),
            ));
        }
        if let Some(i) = self.district_grid.iter().position(|&d| d == 0 || d > self.districts) {
            return Err(semantic(
                "grid districts",
                format!(
                    "cell {} has district {} outside 1..={}",
                    Cell::from_index(i, self.cols),
                    self.district_grid[i],
                    self.districts
                ),
            ));
        }
        if self.population.len() != self.years {
            return Err(semantic("grid population", format!("expected {} years", self.years)));
        }
        for (t, year) in self.population.iter().enumerate() {
            if year.len() != n {
                return Err(semantic(&format!("grid population.{}", t + 1), format!("expected {n} cells")));
            }
            if let Some(i) = year.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(semantic(
                    &format!("grid population.{}", t + 1),
                    format!("cell {} is negative or non-finite", Cell::from_index(i, self.cols)),
                ));
            }
        }
        let r = self.districts;
        let p = &self.policy;
        if !(p.mass.is_finite() && p.mass > 0.0 && p.mass <= 1.0) {
            return Err(semantic("policy.mass", format!("{} is outside (0, 1]", p.mass)));
        }
        let mut sorted = p.sigma.clone();
        sorted.sort_unstable();
        if sorted != (1..=r).collect::<Vec<_>>() {
            return Err(semantic("policy.sigma", format!("{:?} is not a permutation of 1..={r}", p.sigma)));
        }
        for (key, list) in [
            ("home_birth_rates", &p.home_birth_rates),
            ("postnatal_coverage", &p.postnatal_coverage),
            ("proportions", &p.proportions),
        ] {
            if !list.is_empty() && list.len() != r {
                return Err(semantic(
                    &format!("policy.{key}"),
                    format!("{} values for {r} districts", list.len()),
                ));
            }
        }
        let in_grid = |c: &Cell| c.row < self.rows && c.col < self.cols;
        if let Some(c) = self.existing.iter().find(|c| !in_grid(c)) {
            return Err(semantic("existing", format!("cell {c} is outside the grid")));
        }
        if let Candidates::Listed(list) = &self.candidates {
            for site in list {
                if !in_grid(&site.cell) {
                    return Err(semantic("candidates", format!("cell {} is outside the grid", site.cell)));
                }
                if site.from_round == 0 || site.from_round > self.years {
                    return Err(semantic(
                        "candidates",
                        format!("cell {} becomes available in round {} of {}", site.cell, site.from_round, self.years),
                    ));
                }
            }
        }
        for (&round, cells) in &self.advice {
            if round == 0 || round > self.years {
                return Err(semantic("advice", format!("round {round} is outside 1..={}", self.years)));
            }
            if let Some(c) = cells.iter().find(|c| !in_grid(c)) {
                return Err(semantic("advice", format!("cell {c} is outside the grid")));
            }
        }
        Ok(())
    }

    /// Canonical text encoding.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "{FORMAT_HEADER}");
        let _ = writeln!(w, "name = {}", self.name);
        let _ = writeln!(w, "rows = {}", self.rows);
        let _ = writeln!(w, "cols = {}", self.cols);
        let _ = writeln!(w, "years = {}", self.years);
        let _ = writeln!(w, "districts = {}", self.districts);
        let _ = writeln!(w, "cell_size_km = {}", self.cell_size_km);
        let _ = writeln!(w, "threshold_minutes = {}", self.threshold_minutes);
        let _ = writeln!(w, "budgets = {}", join(&self.budgets));

        let p = &self.policy;
        let _ = writeln!(w, "\n[policy]");
        let _ = writeln!(w, "mode = {}", p.mode);
        let _ = writeln!(w, "mass = {}", p.mass);
        let _ = writeln!(w, "sigma = {}", join(&p.sigma));
        for (key, list) in [
            ("home_birth_rates", &p.home_birth_rates),
            ("postnatal_coverage", &p.postnatal_coverage),
            ("proportions", &p.proportions),
        ] {
            if !list.is_empty() {
                let _ = writeln!(w, "{key} = {}", join(list));
            }
        }

        let _ = writeln!(w, "\n[existing]");
        if !self.existing.is_empty() {
            let _ = writeln!(w, "{}", join(&self.existing));
        }

        let _ = writeln!(w, "\n[candidates]");
        match &self.candidates {
            Candidates::All => {
                let _ = writeln!(w, "all");
            }
            Candidates::Listed(list) => {
                for site in list {
                    if site.from_round == 1 {
                        let _ = writeln!(w, "{}", site.cell);
                    } else {
                        let _ = writeln!(w, "{}@{}", site.cell, site.from_round);
                    }
                }
            }
        }

        let _ = writeln!(w, "\n[advice]");
        for (round, cells) in &self.advice {
            let _ = writeln!(w, "round.{round} = {}", join(cells));
        }

        let grid = |w: &mut String, name: &str, cells: Vec<String>| {
            let _ = writeln!(w, "\n[grid {name}]");
            for row in cells.chunks(self.cols) {
                let _ = writeln!(w, "{}", row.join(" "));
            }
        };
        grid(
            w,
            "friction",
            self.friction
                .iter()
                .map(|m| m.map_or_else(|| "x".to_string(), |m| m.to_string()))
                .collect(),
        );
        grid(w, "districts", self.district_grid.iter().map(usize::to_string).collect());
        for (t, year) in self.population.iter().enumerate() {
            grid(w, &format!("population.{}", t + 1), year.iter().map(f64::to_string).collect());
        }
        out
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }
}
