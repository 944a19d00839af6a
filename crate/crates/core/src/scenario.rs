//! Ground-truth world: base-station placement, the daily time grid, and the
//! per-(station, period) spectrum and CPU-cycle processes that the planner
//! has to estimate.
//!
//! Spectrum availability is modelled as a probability per (station, period).
//! With [`Realization::PerWorld`] one probability is drawn at generation time
//! and every arrival is a Bernoulli trial in it; with
//! [`Realization::PerDraw`] a fresh probability is drawn before each trial.

use crate::error::{check_index, Error, Result};
use crate::geometry::Point3;
use crate::rng::{stream, streams};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// `T_d`, the number of periods per day.
    #[serde(rename = "t_d")]
    pub num_periods: usize,
    pub period_duration: f64,
    /// Wall-clock offset (seconds since midnight) at which period 0 begins.
    pub origin: f64,
}

impl TimeGrid {
    pub fn new(num_periods: usize, period_duration: f64, origin: f64) -> Result<Self> {
        if num_periods == 0 {
            return Err(Error::config("time grid needs at least one period"));
        }
        if !(period_duration.is_finite() && period_duration > 0.0) {
            return Err(Error::config("period duration must be positive"));
        }
        Ok(Self { num_periods, period_duration, origin })
    }

    pub fn cycle(&self) -> f64 {
        self.num_periods as f64 * self.period_duration
    }

    /// Period active at `wall` seconds. The day is cyclic.
    pub fn period_at(&self, wall: f64) -> usize {
        let slot = ((wall - self.origin) / self.period_duration).floor() as i64;
        slot.rem_euclid(self.num_periods as i64) as usize
    }

    /// Start of period `period` in the first cycle.
    pub fn period_start(&self, period: usize) -> f64 {
        self.origin + period as f64 * self.period_duration
    }

    /// End of the occurrence of the period that is active at `wall`.
    pub fn period_end_after(&self, wall: f64) -> f64 {
        let slot = ((wall - self.origin) / self.period_duration).floor();
        self.origin + (slot + 1.0) * self.period_duration
    }

    /// Seconds from `wall` until `period` is active; zero if it already is.
    pub fn wait_until(&self, period: usize, wall: f64) -> f64 {
        if self.period_at(wall) == period {
            return 0.0;
        }
        let cycle = self.cycle();
        let phase = (wall - self.period_start(period)).rem_euclid(cycle);
        cycle - phase
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    #[default]
    Gaussian,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Realization {
    #[default]
    PerWorld,
    PerDraw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProfile {
    pub kind: SpectrumKind,
    /// `μ_i(t_d)` per period.
    pub mean: Vec<f64>,
    /// `σ_i(t_d)` per period.
    pub std: Vec<f64>,
    /// Poisson variant only: idle-channel events per period.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub poisson_rate: Vec<f64>,
    /// Poisson variant only: channel count the idle events are capped at.
    #[serde(default = "default_channels")]
    pub channels: u32,
    /// Availability probability realized at generation time, per period.
    pub realized: Vec<f64>,
}

fn default_channels() -> u32 {
    10
}

impl SpectrumProfile {
    pub fn gaussian(mean: Vec<f64>, std: Vec<f64>) -> Self {
        let realized = mean.iter().map(|m| m.clamp(0.0, 1.0)).collect();
        Self {
            kind: SpectrumKind::Gaussian,
            mean,
            std,
            poisson_rate: Vec::new(),
            channels: default_channels(),
            realized,
        }
    }

    pub fn poisson(mean: Vec<f64>, std: Vec<f64>, channels: u32) -> Self {
        let poisson_rate = mean.iter().map(|&m| poisson_rate_for_mean(m, channels)).collect();
        let realized = mean.iter().map(|m| m.clamp(0.0, 1.0)).collect();
        Self { kind: SpectrumKind::Poisson, mean, std, poisson_rate, channels, realized }
    }

    pub fn num_periods(&self) -> usize {
        self.mean.len()
    }

    /// Draws one availability probability for `period` from the profile's
    /// distribution. Always in `[0, 1]`.
    pub fn draw_probability<R: Rng + ?Sized>(&self, period: usize, rng: &mut R) -> f64 {
        match self.kind {
            SpectrumKind::Gaussian => {
                let (mu, sigma) = (self.mean[period], self.std[period]);
                if sigma <= 0.0 {
                    return mu.clamp(0.0, 1.0);
                }
                let normal = Normal::new(mu, sigma).expect("finite gaussian parameters");
                normal.sample(rng).clamp(0.0, 1.0)
            }
            SpectrumKind::Poisson => {
                let rate = self.poisson_rate[period];
                let n = self.channels.max(1) as f64;
                if rate <= 0.0 {
                    return 0.0;
                }
                let events: f64 = Poisson::new(rate).expect("positive rate").sample(rng);
                events.min(n) / n
            }
        }
    }

    /// Expected value of [`draw_probability`](Self::draw_probability).
    pub fn expected_probability(&self, period: usize) -> f64 {
        match self.kind {
            SpectrumKind::Gaussian => clamped_normal_mean(self.mean[period], self.std[period]),
            SpectrumKind::Poisson => {
                capped_poisson_mean(self.poisson_rate[period], self.channels) / self.channels.max(1) as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CpuFamily {
    Exponential,
    #[default]
    TruncatedNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpuProfile {
    pub family: CpuFamily,
    /// Mean available CPU-cycle duration per period, seconds.
    pub mean: Vec<f64>,
    /// Standard deviation for the truncated-normal family, seconds.
    pub dispersion: Vec<f64>,
}

impl CpuProfile {
    pub fn sample<R: Rng + ?Sized>(&self, period: usize, rng: &mut R) -> f64 {
        let mean = self.mean[period];
        if mean <= 0.0 {
            return 0.0;
        }
        match self.family {
            CpuFamily::Exponential => Exp::new(1.0 / mean).expect("positive rate").sample(rng),
            CpuFamily::TruncatedNormal => {
                let sd = self.dispersion[period];
                if sd <= 0.0 {
                    return mean;
                }
                let normal = Normal::new(mean, sd).expect("finite normal parameters");
                // Rejection keeps the shape; the fallback only triggers for
                // means many deviations below zero.
                for _ in 0..64 {
                    let x = normal.sample(rng);
                    if x >= 0.0 {
                        return x;
                    }
                }
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    #[serde(rename = "pos")]
    pub position: Point3,
    pub spectrum: SpectrumProfile,
    pub cpu: CpuProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub stations: Vec<BaseStation>,
    pub grid: TimeGrid,
    /// `S_b`, at cruise altitude.
    pub start: Point3,
    /// `S_e`, at cruise altitude.
    pub goal: Point3,
    pub seed: u64,
    /// Width and height of the placement square, meters.
    pub region: [f64; 2],
    pub cruise_altitude: f64,
    pub realization: Realization,
    /// Wall-clock seconds at which the mission starts.
    #[serde(default)]
    pub launch: f64,
}

impl World {
    /// A hand-built world; the region is the bounding box of all points.
    pub fn from_stations(
        stations: Vec<BaseStation>,
        grid: TimeGrid,
        start: Point3,
        goal: Point3,
        cruise_altitude: f64,
    ) -> Result<Self> {
        let points = stations.iter().map(|s| s.position).chain([start, goal]);
        let region = points.fold([0.0f64, 0.0f64], |r, p| [r[0].max(p.x), r[1].max(p.y)]);
        let launch = grid.origin;
        let world = Self {
            stations,
            grid,
            start,
            goal,
            seed: 0,
            region,
            cruise_altitude,
            realization: Realization::PerWorld,
            launch,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn num_stations(&self) -> usize {
        self.stations.len()
    }

    pub fn num_periods(&self) -> usize {
        self.grid.num_periods
    }

    /// Point the swarm hovers at while served by `bs`.
    pub fn hover_point(&self, bs: usize) -> Point3 {
        self.stations[bs].position.at_altitude(self.cruise_altitude)
    }

    pub fn check_arm(&self, bs: usize, period: usize) -> Result<()> {
        check_index("station", bs, self.num_stations())?;
        check_index("period", period, self.num_periods())
    }

    /// Long-run probability that an arrival at (`bs`, `period`) finds a
    /// spectrum hole.
    pub fn availability(&self, bs: usize, period: usize) -> f64 {
        let spectrum = &self.stations[bs].spectrum;
        match self.realization {
            Realization::PerWorld => spectrum.realized[period],
            Realization::PerDraw => spectrum.expected_probability(period),
        }
    }

    /// `θ*` over every (station, period) arm.
    pub fn best_availability(&self) -> f64 {
        (0..self.num_stations())
            .flat_map(|bs| (0..self.num_periods()).map(move |p| (bs, p)))
            .map(|(bs, p)| self.availability(bs, p))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stations.is_empty() {
            return Err(Error::config("world has no stations"));
        }
        if self.start == self.goal {
            return Err(Error::config("start and goal coincide"));
        }
        TimeGrid::new(self.grid.num_periods, self.grid.period_duration, self.grid.origin)?;
        let t_d = self.num_periods();
        for (i, s) in self.stations.iter().enumerate() {
            if s.id != i {
                return Err(Error::config(format!("station ids must be contiguous, found {} at {i}", s.id)));
            }
            let sp = &s.spectrum;
            let lens = [sp.mean.len(), sp.std.len(), sp.realized.len(), s.cpu.mean.len(), s.cpu.dispersion.len()];
            if lens.iter().any(|&l| l != t_d) || (sp.kind == SpectrumKind::Poisson && sp.poisson_rate.len() != t_d) {
                return Err(Error::config(format!("station {i} profiles must have {t_d} periods")));
            }
            if sp.realized.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::config(format!("station {i} availability outside [0, 1]")));
            }
            let p = s.position;
            if !(0.0..=self.region[0]).contains(&p.x) || !(0.0..=self.region[1]).contains(&p.y) {
                return Err(Error::config(format!("station {i} lies outside the region")));
            }
        }
        Ok(())
    }
}

/// Bernoulli draw: does an arrival at (`bs`, `period`) find idle spectrum?
pub fn sample_spectrum_available<R: Rng + ?Sized>(
    world: &World,
    bs: usize,
    period: usize,
    rng: &mut R,
) -> Result<bool> {
    world.check_arm(bs, period)?;
    let spectrum = &world.stations[bs].spectrum;
    let p = match world.realization {
        Realization::PerWorld => spectrum.realized[period],
        Realization::PerDraw => spectrum.draw_probability(period, rng),
    };
    Ok(rng.random::<f64>() < p)
}

/// Available CPU-cycle duration offered by `bs` on an arrival in `period`.
pub fn sample_cpu_cycles<R: Rng + ?Sized>(world: &World, bs: usize, period: usize, rng: &mut R) -> Result<f64> {
    world.check_arm(bs, period)?;
    Ok(world.stations[bs].cpu.sample(period, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    #[default]
    PerPeriod,
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub kind: SpectrumKind,
    pub realization: Realization,
    /// Number of stations drawn from `high_mean`; the rest use `low_mean`.
    /// `None` draws every station from the union of both ranges.
    pub high_count: Option<usize>,
    pub high_mean: [f64; 2],
    pub low_mean: [f64; 2],
    /// Nominal σ; each station (or station-period) is scaled by U(0.5, 1.5).
    pub std: f64,
    pub sigma: SigmaMode,
    /// Availability lost at the busiest period of the day.
    pub peak_drop: f64,
    pub channels: u32,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            kind: SpectrumKind::Gaussian,
            realization: Realization::PerWorld,
            high_count: None,
            high_mean: [0.82, 0.95],
            low_mean: [0.2, 0.5],
            std: 0.05,
            sigma: SigmaMode::PerPeriod,
            peak_drop: 0.2,
            channels: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpuConfig {
    pub family: CpuFamily,
    /// Number of stations with `rich_mean` CPU time; the rest get
    /// `poor_mean`. `None` draws every station uniformly between the two.
    pub rich_count: Option<usize>,
    pub rich_mean: f64,
    pub poor_mean: f64,
    /// Truncated-normal deviation as a fraction of the mean.
    pub dispersion: f64,
    /// Fraction of CPU time lost at the busiest period of the day.
    pub peak_drop: f64,
}

impl Default for CpuConfig {
    fn default() -> Self {
        Self {
            family: CpuFamily::TruncatedNormal,
            rich_count: None,
            rich_mean: 600.0,
            poor_mean: 180.0,
            dispersion: 0.25,
            peak_drop: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_stations: usize,
    pub num_periods: usize,
    pub period_duration: f64,
    pub origin: f64,
    /// Wall-clock seconds at mission start; the grid origin when unset.
    pub launch: Option<f64>,
    /// Width and height of the placement square, meters.
    pub region: [f64; 2],
    pub station_altitude: f64,
    pub cruise_altitude: f64,
    /// Horizontal start; defaults to the middle of the west edge.
    pub start: Option<[f64; 2]>,
    /// Horizontal goal; defaults to the middle of the east edge.
    pub goal: Option<[f64; 2]>,
    pub spectrum: SpectrumConfig,
    pub cpu: CpuConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_stations: 5,
            num_periods: 3,
            period_duration: 8.0 * 3600.0,
            origin: 0.0,
            launch: None,
            region: [8000.0, 8000.0],
            station_altitude: 30.0,
            cruise_altitude: 120.0,
            start: None,
            goal: None,
            spectrum: SpectrumConfig::default(),
            cpu: CpuConfig::default(),
        }
    }
}

/// CPU provision of the stations singled out by a [`ResourceMix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpuLevel {
    /// Half of the required work per access on average.
    Half,
    /// The full required work per access on average.
    Large,
}

/// Resource-availability mixes used in the evaluation: how many stations
/// have high spectrum availability and how many are CPU-rich.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceMix {
    pub high_spectrum: usize,
    pub cpu_rich: usize,
    pub cpu_level: CpuLevel,
}

impl ResourceMix {
    /// The four standard mixes (1..=4) for a network of `num_stations`.
    /// Networks of 10 stations use the larger counts; everything else uses
    /// the 5-station counts, capped at the station count.
    pub fn standard(num_stations: usize, scenario: u8) -> Result<Self> {
        let (few, many) = if num_stations >= 10 { (5, 7) } else { (2, 5) };
        let (high_spectrum, cpu_rich, cpu_level) = match scenario {
            1 => (few, few, CpuLevel::Half),
            2 => (few, many, CpuLevel::Half),
            3 => (many, few, CpuLevel::Large),
            4 => (many, many, CpuLevel::Large),
            other => return Err(Error::config(format!("resource mix must be 1..=4, got {other}"))),
        };
        Ok(Self { high_spectrum: high_spectrum.min(num_stations), cpu_rich: cpu_rich.min(num_stations), cpu_level })
    }
}

impl ScenarioConfig {
    /// Applies a resource mix, sizing CPU means against `required_work`.
    pub fn with_mix(mut self, mix: ResourceMix, required_work: f64) -> Self {
        self.spectrum.high_count = Some(mix.high_spectrum);
        self.cpu.rich_count = Some(mix.cpu_rich);
        self.cpu.rich_mean = match mix.cpu_level {
            CpuLevel::Half => 0.5 * required_work,
            CpuLevel::Large => required_work,
        };
        self.cpu.poor_mean = 0.15 * required_work;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_stations == 0 {
            return Err(Error::config("num_stations must be at least 1"));
        }
        let [w, h] = self.region;
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(Error::config("region must have positive width and height"));
        }
        TimeGrid::new(self.num_periods, self.period_duration, self.origin)?;
        let s = &self.spectrum;
        for (name, [lo, hi]) in [("high_mean", s.high_mean), ("low_mean", s.low_mean)] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::config(format!("spectrum.{name} must be an ordered range inside [0, 1]")));
            }
        }
        if s.std < 0.0 || !(0.0..=1.0).contains(&s.peak_drop) || s.channels == 0 {
            return Err(Error::config("spectrum std/peak_drop/channels out of range"));
        }
        if s.high_count.is_some_and(|k| k > self.num_stations)
            || self.cpu.rich_count.is_some_and(|k| k > self.num_stations)
        {
            return Err(Error::config("high/rich station counts exceed num_stations"));
        }
        let c = &self.cpu;
        if c.rich_mean < 0.0 || c.poor_mean < 0.0 || c.dispersion < 0.0 || !(0.0..=1.0).contains(&c.peak_drop) {
            return Err(Error::config("cpu means, dispersion and peak_drop must be non-negative"));
        }
        let (start, goal) = self.endpoints();
        if start == goal {
            return Err(Error::config("start and goal coincide"));
        }
        Ok(())
    }

    fn endpoints(&self) -> (Point3, Point3) {
        let [w, h] = self.region;
        let start = self.start.unwrap_or([0.0, h / 2.0]);
        let goal = self.goal.unwrap_or([w, h / 2.0]);
        (Point3::new(start[0], start[1], self.cruise_altitude), Point3::new(goal[0], goal[1], self.cruise_altitude))
    }
}

/// Daily load shape: 0 at period 0, 1 at mid-day.
fn load_shape(period: usize, num_periods: usize) -> f64 {
    if num_periods <= 1 {
        return 0.0;
    }
    (1.0 - (2.0 * PI * period as f64 / num_periods as f64).cos()) / 2.0
}

/// Random subset of `k` station ids.
fn pick_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<bool> {
    let mut ids: Vec<usize> = (0..n).collect();
    // Partial Fisher-Yates.
    for i in 0..k.min(n) {
        let j = rng.random_range(i..n);
        ids.swap(i, j);
    }
    let mut mask = vec![false; n];
    for &id in &ids[..k.min(n)] {
        mask[id] = true;
    }
    mask
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Builds the ground-truth world for `config`. Deterministic in `seed`.
pub fn generate_world(config: &ScenarioConfig, seed: u64) -> Result<World> {
    config.validate()?;
    let mut rng = stream(seed, streams::WORLD);
    let n = config.num_stations;
    let t_d = config.num_periods;
    let [w, h] = config.region;
    let grid = TimeGrid::new(t_d, config.period_duration, config.origin)?;
    let (start, goal) = config.endpoints();

    let positions: Vec<Point3> = (0..n)
        .map(|_| Point3::new(rng.random_range(0.0..=w), rng.random_range(0.0..=h), config.station_altitude))
        .collect();

    let sc = &config.spectrum;
    let high = match sc.high_count {
        Some(k) => pick_subset(n, k, &mut rng).into_iter().map(Some).collect(),
        None => vec![None; n],
    };
    let cc = &config.cpu;
    let rich = match cc.rich_count {
        Some(k) => pick_subset(n, k, &mut rng).into_iter().map(Some).collect(),
        None => vec![None; n],
    };

    let mut stations = Vec::with_capacity(n);
    for id in 0..n {
        let base_sp = match high[id] {
            Some(true) => uniform(&mut rng, sc.high_mean),
            Some(false) => uniform(&mut rng, sc.low_mean),
            None => uniform(&mut rng, [sc.low_mean[0].min(sc.high_mean[0]), sc.high_mean[1].max(sc.low_mean[1])]),
        };
        let shared_sigma = sc.std * rng.random_range(0.5..=1.5);
        let mut mean = Vec::with_capacity(t_d);
        let mut std = Vec::with_capacity(t_d);
        for p in 0..t_d {
            let jitter = rng.random_range(-0.02..=0.02);
            mean.push((base_sp - sc.peak_drop * load_shape(p, t_d) + jitter).clamp(0.0, 1.0));
            std.push(match sc.sigma {
                SigmaMode::Shared => shared_sigma,
                SigmaMode::PerPeriod => sc.std * rng.random_range(0.5..=1.5),
            });
        }
        let mut spectrum = match sc.kind {
            SpectrumKind::Gaussian => SpectrumProfile::gaussian(mean, std),
            SpectrumKind::Poisson => SpectrumProfile::poisson(mean, std, sc.channels),
        };
        spectrum.realized = (0..t_d).map(|p| spectrum.draw_probability(p, &mut rng)).collect();

        let base_cpu = match rich[id] {
            Some(true) => cc.rich_mean * rng.random_range(0.9..=1.1),
            Some(false) => cc.poor_mean * rng.random_range(0.9..=1.1),
            None => uniform(&mut rng, [cc.poor_mean.min(cc.rich_mean), cc.rich_mean.max(cc.poor_mean)]),
        };
        let cpu_mean: Vec<f64> = (0..t_d).map(|p| base_cpu * (1.0 - cc.peak_drop * load_shape(p, t_d))).collect();
        let cpu = CpuProfile {
            family: cc.family,
            dispersion: cpu_mean.iter().map(|m| m * cc.dispersion).collect(),
            mean: cpu_mean,
        };
        stations.push(BaseStation { id, position: positions[id], spectrum, cpu });
    }

    let world = World {
        stations,
        grid,
        start,
        goal,
        seed,
        region: config.region,
        cruise_altitude: config.cruise_altitude,
        realization: sc.realization,
        launch: config.launch.unwrap_or(config.origin),
    };
    world.validate()?;
    Ok(world)
}

/// `E[min(X, n)]` for `X ~ Poisson(rate)`.
fn capped_poisson_mean(rate: f64, channels: u32) -> f64 {
    let n = channels.max(1);
    if rate <= 0.0 {
        return 0.0;
    }
    let ln_rate = rate.ln();
    let mut ln_fact = 0.0;
    let mut below = 0.0; // P(X < n)
    let mut partial = 0.0; // Σ_{k<n} k P(k)
    for k in 0..n {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        let pk = (-rate + k as f64 * ln_rate - ln_fact).exp();
        below += pk;
        partial += k as f64 * pk;
    }
    partial + n as f64 * (1.0 - below).max(0.0)
}

/// Poisson rate whose capped idle-channel fraction has mean `target`.
pub fn poisson_rate_for_mean(target: f64, channels: u32) -> f64 {
    let n = channels.max(1) as f64;
    let target = target.clamp(0.0, 1.0);
    if target <= 0.0 {
        return 0.0;
    }
    let mut hi = 8.0 * n;
    while capped_poisson_mean(hi, channels) / n < target && hi < 1.0e4 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if capped_poisson_mean(mid, channels) / n < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `E[clamp(X, 0, 1)]` for `X ~ N(mu, sigma²)`.
fn clamped_normal_mean(mu: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return mu.clamp(0.0, 1.0);
    }
    // E[max(X - a, 0)] = (mu - a) Φ(z) + σ φ(z), z = (mu - a) / σ
    let excess = |a: f64| {
        let z = (mu - a) / sigma;
        (mu - a) * normal_cdf(z) + sigma * (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
    };
    (excess(0.0) - excess(1.0)).clamp(0.0, 1.0)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Complementary error function, Numerical Recipes `erfcc` (|ε| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn single_station_world(spectrum: SpectrumProfile, cpu: CpuProfile, realization: Realization) -> World {
        let t_d = spectrum.num_periods();
        World {
            stations: vec![BaseStation { id: 0, position: Point3::new(10.0, 10.0, 30.0), spectrum, cpu }],
            grid: TimeGrid::new(t_d, 3600.0, 0.0).unwrap(),
            start: Point3::new(0.0, 0.0, 120.0),
            goal: Point3::new(100.0, 0.0, 120.0),
            seed: 0,
            region: [100.0, 100.0],
            cruise_altitude: 120.0,
            realization,
            launch: 0.0,
        }
    }

    fn cpu(family: CpuFamily, mean: f64, dispersion: f64) -> CpuProfile {
        CpuProfile { family, mean: vec![mean], dispersion: vec![dispersion] }
    }

    #[test]
    fn generates_requested_shape() {
        let config = ScenarioConfig { num_stations: 5, num_periods: 3, ..Default::default() };
        let world = generate_world(&config, 7).unwrap();
        assert_eq!(world.num_stations(), 5);
        assert_eq!(world.grid.num_periods, 3);
        assert!(world.stations.iter().enumerate().all(|(i, s)| s.id == i));
    }

    #[test]
    fn degenerate_region_is_rejected() {
        let config = ScenarioConfig { num_stations: 1, region: [0.0, 0.0], ..Default::default() };
        assert!(matches!(generate_world(&config, 1), Err(Error::Config(_))));
        let config = ScenarioConfig { num_stations: 0, ..Default::default() };
        assert!(matches!(generate_world(&config, 1), Err(Error::Config(_))));
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let config = ScenarioConfig { num_stations: 10, ..Default::default() };
        let a = generate_world(&config, 7).unwrap();
        let b = generate_world(&config, 7).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = generate_world(&config, 8).unwrap();
        assert_ne!(a.stations[0].position, c.stations[0].position);
    }

    #[test]
    fn snapshot_uses_stable_field_names() {
        let world = generate_world(&ScenarioConfig::default(), 3).unwrap();
        let v = serde_json::to_value(&world).unwrap();
        let s0 = &v["stations"][0];
        for key in ["id", "pos"] {
            assert!(s0.get(key).is_some(), "missing {key}");
        }
        assert!(s0["spectrum"]["mean"].is_array());
        assert!(s0["spectrum"]["std"].is_array());
        assert!(s0["cpu"]["mean"].is_array());
        assert_eq!(v["grid"]["t_d"], 3);
        for key in ["start", "goal", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: World = serde_json::from_value(v).unwrap();
        assert_eq!(back, world);
    }

    #[test]
    fn degenerate_spectrum_profiles_are_certain() {
        let mut rng = stream(1, 9);
        for (mu, expect) in [(1.0, true), (0.0, false)] {
            for realization in [Realization::PerWorld, Realization::PerDraw] {
                let w = single_station_world(
                    SpectrumProfile::gaussian(vec![mu], vec![0.0]),
                    cpu(CpuFamily::Exponential, 1.0, 0.0),
                    realization,
                );
                assert!((0..1000).all(|_| sample_spectrum_available(&w, 0, 0, &mut rng).unwrap() == expect));
            }
        }
    }

    #[test]
    fn per_draw_frequency_matches_configured_mean() {
        let w = single_station_world(
            SpectrumProfile::gaussian(vec![0.8], vec![0.05]),
            cpu(CpuFamily::Exponential, 1.0, 0.0),
            Realization::PerDraw,
        );
        let mut rng = stream(2, 9);
        let hits = (0..100_000).filter(|_| sample_spectrum_available(&w, 0, 0, &mut rng).unwrap()).count();
        let freq = hits as f64 / 1e5;
        assert!((freq - 0.8).abs() <= 0.01, "frequency {freq}");
    }

    #[test]
    fn per_world_frequency_matches_realized_probability() {
        let config = ScenarioConfig { num_stations: 4, num_periods: 2, ..Default::default() };
        let world = generate_world(&config, 11).unwrap();
        let mut rng = stream(3, 9);
        let draws = 20_000;
        for bs in 0..4 {
            for p in 0..2 {
                let prob = world.availability(bs, p);
                let hits = (0..draws).filter(|_| sample_spectrum_available(&world, bs, p, &mut rng).unwrap()).count();
                let se = (prob * (1.0 - prob) / draws as f64).sqrt();
                assert!((hits as f64 / draws as f64 - prob).abs() <= 3.0 * se + 1e-12);
            }
        }
    }

    #[test]
    fn out_of_range_arms_are_bounds_errors() {
        let world = generate_world(&ScenarioConfig::default(), 1).unwrap();
        let mut rng = stream(0, 0);
        assert!(matches!(sample_spectrum_available(&world, 5, 0, &mut rng), Err(Error::Bounds { .. })));
        assert!(matches!(sample_cpu_cycles(&world, 0, 3, &mut rng), Err(Error::Bounds { .. })));
    }

    #[test]
    fn exponential_cpu_mean() {
        let w = single_station_world(
            SpectrumProfile::gaussian(vec![1.0], vec![0.0]),
            cpu(CpuFamily::Exponential, 1200.0, 0.0),
            Realization::PerWorld,
        );
        let mut rng = stream(4, 9);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_cpu_cycles(&w, 0, 0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 1200.0).abs() <= 0.02 * 1200.0, "mean {mean}");
    }

    #[test]
    fn cpu_point_masses() {
        let mut rng = stream(5, 9);
        let zero = cpu(CpuFamily::Exponential, 0.0, 0.0);
        assert!((0..100).all(|_| zero.sample(0, &mut rng) == 0.0));
        let point = cpu(CpuFamily::TruncatedNormal, 1800.0, 0.0);
        assert!((0..100).all(|_| point.sample(0, &mut rng) == 1800.0));
    }

    #[test]
    fn truncated_normal_is_nonnegative_and_centered() {
        let profile = cpu(CpuFamily::TruncatedNormal, 600.0, 150.0);
        let mut rng = stream(6, 9);
        let xs: Vec<f64> = (0..10_000).map(|_| profile.sample(0, &mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 600.0).abs() <= 0.05 * 600.0);
    }

    #[test]
    fn poisson_rate_matches_mean() {
        for target in [0.1, 0.5, 0.8, 0.95] {
            let rate = poisson_rate_for_mean(target, 10);
            assert!((capped_poisson_mean(rate, 10) / 10.0 - target).abs() < 1e-9);
        }
        let profile = SpectrumProfile::poisson(vec![0.8], vec![0.05], 10);
        let mut rng = stream(7, 9);
        let n = 50_000;
        let mean = (0..n).map(|_| profile.draw_probability(0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.8).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn clamped_normal_expectation() {
        assert!((clamped_normal_mean(0.5, 0.05) - 0.5).abs() < 1e-6);
        // Strong clamping pulls the mean inward.
        assert!(clamped_normal_mean(0.98, 0.1) < 0.98);
        let mut rng = stream(8, 9);
        let profile = SpectrumProfile::gaussian(vec![0.95], vec![0.1]);
        let mc = (0..200_000).map(|_| profile.draw_probability(0, &mut rng)).sum::<f64>() / 2e5;
        assert!((mc - profile.expected_probability(0)).abs() < 3e-3);
    }

    #[test]
    fn time_grid_wraps_and_waits() {
        let grid = TimeGrid::new(3, 100.0, 0.0).unwrap();
        assert_eq!(grid.period_at(0.0), 0);
        assert_eq!(grid.period_at(150.0), 1);
        assert_eq!(grid.period_at(299.9), 2);
        assert_eq!(grid.period_at(300.0), 0);
        assert_eq!(grid.wait_until(1, 150.0), 0.0);
        assert!((grid.wait_until(2, 150.0) - 50.0).abs() < 1e-12);
        assert!((grid.wait_until(0, 150.0) - 150.0).abs() < 1e-12);
        assert!((grid.period_end_after(150.0) - 200.0).abs() < 1e-12);
        assert!(TimeGrid::new(0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn resource_mix_counts() {
        let m = ResourceMix::standard(7, 2).unwrap();
        assert_eq!((m.high_spectrum, m.cpu_rich, m.cpu_level), (2, 5, CpuLevel::Half));
        let m = ResourceMix::standard(10, 4).unwrap();
        assert_eq!((m.high_spectrum, m.cpu_rich), (7, 7));
        assert!(ResourceMix::standard(5, 0).is_err());
        let cfg = ScenarioConfig { num_stations: 7, ..Default::default() }.with_mix(m, 1800.0);
        let world = generate_world(&cfg, 3).unwrap();
        let high = world.stations.iter().filter(|s| s.spectrum.mean[0] > 0.7).count();
        assert_eq!(high, 7);
        let rich = world.stations.iter().filter(|s| s.cpu.mean[0] > 1000.0).count();
        assert_eq!(rich, 7);
    }

    proptest::proptest! {
        #[test]
        fn realized_probabilities_stay_in_unit_interval(seed in 0u64..5000, std in 0.0f64..0.6) {
            let config = ScenarioConfig {
                num_stations: 6,
                spectrum: SpectrumConfig { std, high_mean: [0.9, 1.0], ..Default::default() },
                ..Default::default()
            };
            let world = generate_world(&config, seed).unwrap();
            for s in &world.stations {
                proptest::prop_assert!(s.spectrum.realized.iter().all(|p| (0.0..=1.0).contains(p)));
                let p = s.position;
                proptest::prop_assert!(p.x >= 0.0 && p.x <= 8000.0 && p.y >= 0.0 && p.y <= 8000.0);
            }
        }
    }
}
