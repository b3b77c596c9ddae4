//! Travel-time isochrones over a friction raster and the multi-year
//! population coverage objective.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, Element, ElementId, Selection};
use crate::objective::{MarginalEvaluator, SetFunction};

pub const DEFAULT_THRESHOLD_MINUTES: f64 = 120.0;

/// Per-cell walking cost in minutes per kilometre. Impassable cells cannot
/// be entered or left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionGrid {
    pub rows: usize,
    pub cols: usize,
    pub cell_minutes: Vec<f64>,
    pub cell_size_km: f64,
    pub passable: Vec<bool>,
}

impl FrictionGrid {
    pub fn new(rows: usize, cols: usize, cell_minutes: Vec<f64>) -> Result<Self> {
        let passable = vec![true; rows * cols];
        Self::with_mask(rows, cols, cell_minutes, passable, 1.0)
    }

    pub fn uniform(rows: usize, cols: usize, minutes: f64) -> Self {
        FrictionGrid {
            rows,
            cols,
            cell_minutes: vec![minutes; rows * cols],
            cell_size_km: 1.0,
            passable: vec![true; rows * cols],
        }
    }

    pub fn with_mask(
        rows: usize,
        cols: usize,
        cell_minutes: Vec<f64>,
        passable: Vec<bool>,
        cell_size_km: f64,
    ) -> Result<Self> {
        let grid = FrictionGrid {
            rows,
            cols,
            cell_minutes,
            cell_size_km,
            passable,
        };
        grid.check()?;
        Ok(grid)
    }

    fn check(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if self.cell_minutes.len() != n || self.passable.len() != n {
            return Err(Error::Validation(format!(
                "friction grid expects {n} cells, found {} costs and {} mask entries",
                self.cell_minutes.len(),
                self.passable.len()
            )));
        }
        if !(self.cell_size_km.is_finite() && self.cell_size_km > 0.0) {
            return Err(Error::Validation(format!(
                "cell size must be positive, got {}",
                self.cell_size_km
            )));
        }
        for (i, (&m, &ok)) in self.cell_minutes.iter().zip(&self.passable).enumerate() {
            if ok && !(m.is_finite() && m >= 0.0) {
                return Err(Error::Validation(format!(
                    "friction at cell {} is {m}; passable cells need a finite non-negative cost",
                    Cell::from_index(i, self.cols)
                )));
            }
        }
        Ok(())
    }

    pub fn set_impassable(&mut self, cell: Cell) {
        let i = cell.index(self.cols);
        self.passable[i] = false;
    }

    pub fn is_passable(&self, cell: Cell) -> bool {
        self.passable[cell.index(self.cols)]
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }
}

/// Population per cell for each planning year; `per_year[t - 1]` is year `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub rows: usize,
    pub cols: usize,
    pub per_year: Vec<Vec<f64>>,
}

impl PopulationSeries {
    pub fn new(rows: usize, cols: usize, per_year: Vec<Vec<f64>>) -> Result<Self> {
        for (t, year) in per_year.iter().enumerate() {
            if year.len() != rows * cols {
                return Err(Error::Validation(format!(
                    "population year {} has {} cells, expected {}",
                    t + 1,
                    year.len(),
                    rows * cols
                )));
            }
            if let Some(i) = year.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::Validation(format!(
                    "population year {} at cell {} is {}; weights must be non-negative",
                    t + 1,
                    Cell::from_index(i, cols),
                    year[i]
                )));
            }
        }
        Ok(PopulationSeries { rows, cols, per_year })
    }

    pub fn years(&self) -> usize {
        self.per_year.len()
    }

    pub fn weight(&self, year: usize, cell: usize) -> f64 {
        self.per_year[year - 1][cell]
    }
}

/// Isochrone of one candidate: the covered cells, or an empty set when the
/// candidate itself is impassable.
#[derive(Clone, Debug)]
pub struct Isochrone {
    pub cells: FixedBitSet,
    pub warning: Option<String>,
}

#[derive(Clone, Copy, PartialEq)]
struct Minutes(f64);

impl Eq for Minutes {}

impl PartialOrd for Minutes {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Minutes {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest travel time in minutes from `origin` to every cell, pruned at
/// `limit` (cells further away stay at infinity).
pub fn travel_times(friction: &FrictionGrid, origin: Cell, limit: f64) -> Vec<f64> {
    let (rows, cols) = (friction.rows, friction.cols);
    let mut dist = vec![f64::INFINITY; rows * cols];
    if !friction.contains(origin) || !friction.is_passable(origin) {
        return dist;
    }
    let start = origin.index(cols);
    dist[start] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Minutes(0.0), start)));
    while let Some(Reverse((Minutes(d), i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let (r, c) = ((i / cols) as isize, (i % cols) as isize);
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                    continue;
                }
                let j = nr as usize * cols + nc as usize;
                if !friction.passable[j] {
                    continue;
                }
                let step = if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let cost = (friction.cell_minutes[i] + friction.cell_minutes[j]) / 2.0
                    * friction.cell_size_km
                    * step;
                let nd = d + cost;
                if nd <= limit && nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Reverse((Minutes(nd), j)));
                }
            }
        }
    }
    dist
}

/// Cells reachable from `candidate` within `threshold_minutes`.
pub fn compute_covered(friction: &FrictionGrid, candidate: Cell, threshold_minutes: f64) -> Isochrone {
    let mut cells = FixedBitSet::with_capacity(friction.rows * friction.cols);
    if !friction.contains(candidate) || !friction.is_passable(candidate) {
        return Isochrone {
            cells,
            warning: Some(format!("candidate {candidate} is impassable; it covers nothing")),
        };
    }
    for (i, d) in travel_times(friction, candidate, threshold_minutes).into_iter().enumerate() {
        if d <= threshold_minutes {
            cells.insert(i);
        }
    }
    Isochrone { cells, warning: None }
}

/// Precomputed isochrones for every candidate site plus the population
/// forecast and the coverage of already existing facilities.
#[derive(Clone, Debug)]
pub struct CoverageModel {
    pub rows: usize,
    pub cols: usize,
    pub threshold_minutes: f64,
    candidates: Vec<Cell>,
    lookup: HashMap<Cell, usize>,
    covered: Arc<Vec<FixedBitSet>>,
    population: Arc<PopulationSeries>,
    existing: FixedBitSet,
    warnings: Vec<String>,
}

impl CoverageModel {
    /// Builds isochrones for all `candidates` in parallel.
    pub fn build(
        friction: &FrictionGrid,
        population: PopulationSeries,
        candidates: &[Cell],
        threshold_minutes: f64,
    ) -> Result<Self> {
        friction.check()?;
        if population.rows != friction.rows || population.cols != friction.cols {
            return Err(Error::Validation(format!(
                "population grid is {}x{} but friction grid is {}x{}",
                population.rows, population.cols, friction.rows, friction.cols
            )));
        }
        if let Some(c) = candidates.iter().find(|c| !friction.contains(**c)) {
            return Err(Error::Validation(format!(
                "candidate {c} lies outside the {}x{} grid",
                friction.rows, friction.cols
            )));
        }
        let isochrones: Vec<Isochrone> = candidates
            .par_iter()
            .map(|&c| compute_covered(friction, c, threshold_minutes))
            .collect();
        let warnings = isochrones.iter().filter_map(|i| i.warning.clone()).collect();
        let covered = isochrones.into_iter().map(|i| i.cells).collect();
        Self::from_sets(friction.rows, friction.cols, candidates.to_vec(), covered, population)
            .map(|mut m| {
                m.threshold_minutes = threshold_minutes;
                m.warnings = warnings;
                m
            })
    }

    /// Builds a model from explicit covered sets, e.g. hand-made fixtures.
    pub fn from_sets(
        rows: usize,
        cols: usize,
        candidates: Vec<Cell>,
        covered: Vec<FixedBitSet>,
        population: PopulationSeries,
    ) -> Result<Self> {
        if candidates.len() != covered.len() {
            return Err(Error::Validation(format!(
                "{} candidates but {} covered sets",
                candidates.len(),
                covered.len()
            )));
        }
        if population.rows != rows || population.cols != cols {
            return Err(Error::Validation(format!(
                "population grid is {}x{} but the model is {rows}x{cols}",
                population.rows, population.cols
            )));
        }
        let mut lookup = HashMap::with_capacity(candidates.len());
        for (i, &c) in candidates.iter().enumerate() {
            if lookup.insert(c, i).is_some() {
                return Err(Error::Validation(format!("candidate {c} listed twice")));
            }
        }
        let covered = covered
            .into_iter()
            .map(|mut s| {
                s.grow(rows * cols);
                s
            })
            .collect();
        Ok(CoverageModel {
            rows,
            cols,
            threshold_minutes: DEFAULT_THRESHOLD_MINUTES,
            candidates,
            lookup,
            covered: Arc::new(covered),
            population: Arc::new(population),
            existing: FixedBitSet::with_capacity(rows * cols),
            warnings: Vec::new(),
        })
    }

    /// Marks the coverage of facilities that already exist before planning.
    pub fn with_existing(mut self, friction: &FrictionGrid, existing: &[Cell]) -> Self {
        let mut union = FixedBitSet::with_capacity(self.rows * self.cols);
        for &c in existing {
            let iso = compute_covered(friction, c, self.threshold_minutes);
            if let Some(w) = iso.warning {
                self.warnings.push(format!("existing facility: {w}"));
            }
            union.union_with(&iso.cells);
        }
        self.existing = union;
        self
    }

    /// Marks an explicit set of cells as covered before planning.
    pub fn with_existing_cells(mut self, cells: &FixedBitSet) -> Self {
        let mut union = cells.clone();
        union.grow(self.rows * self.cols);
        self.existing = union;
        self
    }

    /// Same isochrones under a different population forecast.
    pub fn with_population(&self, population: PopulationSeries) -> Result<Self> {
        if population.rows != self.rows || population.cols != self.cols {
            return Err(Error::Validation("population grid does not match the model".into()));
        }
        let mut next = self.clone();
        next.population = Arc::new(population);
        Ok(next)
    }

    pub fn years(&self) -> usize {
        self.population.years()
    }

    pub fn candidates(&self) -> &[Cell] {
        &self.candidates
    }

    pub fn candidate_index(&self, cell: Cell) -> Option<usize> {
        self.lookup.get(&cell).copied()
    }

    pub fn covered(&self, candidate: usize) -> &FixedBitSet {
        &self.covered[candidate]
    }

    pub fn covered_by_cell(&self, cell: Cell) -> Option<&FixedBitSet> {
        self.candidate_index(cell).map(|i| &self.covered[i])
    }

    pub fn existing(&self) -> &FixedBitSet {
        &self.existing
    }

    pub fn population(&self) -> &PopulationSeries {
        &self.population
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Value contributed by existing facilities alone, summed over years.
    pub fn baseline(&self) -> f64 {
        (1..=self.years()).map(|t| self.year_sum(t, &self.existing)).sum()
    }

    fn year_sum(&self, year: usize, cells: &FixedBitSet) -> f64 {
        let w = &self.population.per_year[year - 1];
        cells.ones().fold(0.0, |acc, c| acc + w[c])
    }

    /// Covered population per year for facilities given as `(candidate index, build round)`.
    pub fn yearly_values(&self, sites: &[(usize, usize)]) -> Vec<f64> {
        let mut union = self.existing.clone();
        (1..=self.years())
            .map(|year| {
                for &(cand, round) in sites {
                    if round == year {
                        union.union_with(&self.covered[cand]);
                    }
                }
                self.year_sum(year, &union)
            })
            .collect()
    }

    /// Total covered population over all years.
    pub fn value_of_sites(&self, sites: &[(usize, usize)]) -> f64 {
        self.yearly_values(sites).iter().sum()
    }
}

/// The coverage objective over a concrete element set: each element is a
/// (candidate site, build round) pair.
#[derive(Clone, Debug)]
pub struct CoverageObjective {
    model: Arc<CoverageModel>,
    sites: HashMap<ElementId, (usize, usize)>,
}

impl CoverageObjective {
    pub fn new(model: Arc<CoverageModel>, elements: &[Element]) -> Result<Self> {
        let mut sites = HashMap::with_capacity(elements.len());
        for e in elements {
            let cand = model.candidate_index(e.cell).ok_or_else(|| {
                Error::Validation(format!("element {} sits on {} which is not a candidate", e.id, e.cell))
            })?;
            if e.round == 0 || e.round > model.years() {
                return Err(Error::Validation(format!(
                    "element {} is built in round {} but the forecast covers {} years",
                    e.id,
                    e.round,
                    model.years()
                )));
            }
            sites.insert(e.id, (cand, e.round));
        }
        Ok(CoverageObjective { model, sites })
    }

    pub fn model(&self) -> &CoverageModel {
        &self.model
    }

    pub fn baseline(&self) -> f64 {
        self.model.baseline()
    }

    /// Total covered population of a per-round selection, existing coverage included.
    pub fn objective_f(&self, selection: &Selection) -> f64 {
        self.value(&selection.all())
    }

    /// `f(base + extra) - f(base)`.
    pub fn marginal_gain(&self, base: &Selection, extra: ElementId) -> f64 {
        let mut ev = self.evaluator();
        ev.insert_all(&base.all());
        ev.gain(extra)
    }

    fn site(&self, id: ElementId) -> Option<(usize, usize)> {
        self.sites.get(&id).copied()
    }
}

impl SetFunction for CoverageObjective {
    fn value(&self, set: &[ElementId]) -> f64 {
        let mut sites: Vec<(usize, usize)> = set.iter().filter_map(|&id| self.site(id)).collect();
        sites.sort_unstable();
        sites.dedup();
        self.model.value_of_sites(&sites)
    }

    fn evaluator(&self) -> Box<dyn MarginalEvaluator<'_> + '_> {
        let unions = vec![self.model.existing.clone(); self.model.years()];
        let value = self.model.baseline();
        Box::new(CoverageEvaluator {
            objective: self,
            unions,
            value,
            members: Vec::new(),
        })
    }
}

/// Keeps one cumulative covered-cell union per year so that a gain costs
/// `O(|covered(e)| · years)` regardless of the current selection size.
struct CoverageEvaluator<'a> {
    objective: &'a CoverageObjective,
    unions: Vec<FixedBitSet>,
    value: f64,
    members: Vec<ElementId>,
}

impl<'a> CoverageEvaluator<'a> {
    fn delta(&self, cand: usize, round: usize) -> f64 {
        let model = &self.objective.model;
        let years = model.years();
        let mut gain = 0.0;
        for cell in model.covered[cand].ones() {
            // Unions grow with the year, so once a cell is covered it stays covered.
            for year in round..=years {
                if self.unions[year - 1].contains(cell) {
                    break;
                }
                gain += model.population.per_year[year - 1][cell];
            }
        }
        gain
    }
}

impl<'a> MarginalEvaluator<'a> for CoverageEvaluator<'a> {
    fn gain(&self, e: ElementId) -> f64 {
        if self.members.contains(&e) {
            return 0.0;
        }
        match self.objective.site(e) {
            Some((cand, round)) => self.delta(cand, round),
            None => 0.0,
        }
    }

    fn insert(&mut self, e: ElementId) {
        if self.members.contains(&e) {
            return;
        }
        if let Some((cand, round)) = self.objective.site(e) {
            self.value += self.delta(cand, round);
            let covered = &self.objective.model.covered[cand];
            for union in &mut self.unions[round - 1..] {
                union.union_with(covered);
            }
        }
        self.members.push(e);
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn members(&self) -> &[ElementId] {
        &self.members
    }

    fn fork(&self) -> Box<dyn MarginalEvaluator<'a> + 'a> {
        Box::new(CoverageEvaluator {
            objective: self.objective,
            unions: self.unions.clone(),
            value: self.value,
            members: self.members.clone(),
        })
    }
}

/// Cells within Manhattan distance `radius` of `center`, clipped to the grid.
pub fn manhattan_ball(rows: usize, cols: usize, center: Cell, radius: usize) -> FixedBitSet {
    let mut set = FixedBitSet::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if r.abs_diff(center.row) + c.abs_diff(center.col) <= radius {
                set.insert(r * cols + c);
            }
        }
    }
    set
}
