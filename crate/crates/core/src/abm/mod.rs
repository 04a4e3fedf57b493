//! Continuous-space SIR agent-based epidemic simulator.
//!
//! Agents random-walk on the unit torus. Each step runs, in order:
//! movement, pairwise transmission, detection (isolation), resolution
//! (death or recovery), and records the number of infected agents.
//!
//! Headings are drawn uniformly from a fixed set of equally spaced
//! directions; a table lookup replaces per-step trigonometry.

mod grid;

use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ParameterRanges, N_PARAMS};
use crate::rng::{derive_seed, Purpose, StepStream};
use crate::series::EpidemicSeries;

use grid::{torus_dist2, CellGrid};

/// Validated model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmParams {
    pub transmission_probability: f64,
    pub reinfection_probability: f64,
    pub death_probability: f64,
    /// Days.
    pub infection_period: f64,
    /// Days.
    pub detection_time: f64,
    /// Displacement per step, unit-square units.
    pub speed: f64,
    pub interaction_radius: f64,
}

impl AbmParams {
    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.transmission_probability,
            self.reinfection_probability,
            self.death_probability,
            self.infection_period,
            self.detection_time,
            self.speed,
            self.interaction_radius,
        ]
    }
}

/// Check arity and open-interval bounds and build [`AbmParams`].
pub fn validate_params(raw: &[f64]) -> Result<AbmParams> {
    if raw.len() != N_PARAMS {
        return Err(Error::WrongArity {
            expected: N_PARAMS,
            got: raw.len(),
        });
    }
    let ranges = ParameterRanges::default_ranges();
    for (i, &v) in raw.iter().enumerate() {
        let (lo, hi) = ranges.get(i);
        if !(v > lo && v < hi) {
            return Err(Error::OutOfRange(i + 1));
        }
    }
    Ok(AbmParams {
        transmission_probability: raw[0],
        reinfection_probability: raw[1],
        death_probability: raw[2],
        infection_period: raw[3],
        detection_time: raw[4],
        speed: raw[5],
        interaction_radius: raw[6],
    })
}

/// Default conversion: 41 days correspond to 1000 steps.
pub const DEFAULT_STEPS_PER_DAY: f64 = 1000.0 / 41.0;

pub fn days_to_steps(days: f64, steps_per_day: f64) -> u64 {
    ((days * steps_per_day).round() as u64).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub population_size: u32,
    pub initial_infected: u32,
    pub horizon_steps: u32,
    pub steps_per_day: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            initial_infected: 5,
            horizon_steps: 2000,
            steps_per_day: DEFAULT_STEPS_PER_DAY,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_infected == 0 || self.initial_infected > self.population_size {
            return Err(Error::InvalidSimConfig(format!(
                "initial_infected must be in 1..={}, got {}",
                self.population_size, self.initial_infected
            )));
        }
        if self.horizon_steps == 0 {
            return Err(Error::InvalidSimConfig("horizon_steps must be >= 1".into()));
        }
        if !(self.steps_per_day.is_finite() && self.steps_per_day > 0.0) {
            return Err(Error::InvalidSimConfig(format!(
                "steps_per_day must be positive, got {}",
                self.steps_per_day
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Susceptible,
    Infected,
    Recovered,
    Dead,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub position: [f64; 2],
    pub heading: f64,
    pub status: Status,
    /// Step at which the current infection began.
    pub infected_since: Option<u64>,
    /// Detected and immobilised; still infectious.
    pub isolated: bool,
}

/// Per-compartment head count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Census {
    pub susceptible: u32,
    pub infected: u32,
    pub recovered: u32,
    pub dead: u32,
}

impl Census {
    pub fn total(&self) -> u32 {
        self.susceptible + self.infected + self.recovered + self.dead
    }
}

/// Stepwise simulation state. [`simulate`] is the usual entry point; this
/// type exposes intermediate agent states for inspection.
#[derive(Debug)]
pub struct Simulation {
    params: AbmParams,
    seed: u64,
    step: u64,
    detection_steps: u64,
    infection_steps: u64,
    agents: Vec<AgentState>,
    positions: Vec<[f64; 2]>,
    /// Buckets every non-dead agent.
    grid: CellGrid,
    /// Indices of currently infected agents.
    infected: Vec<u32>,
    /// Non-dead agent count.
    alive: usize,
    fresh: Vec<u32>,
    newly: Vec<bool>,
}

impl Simulation {
    pub fn new(params: AbmParams, cfg: &SimConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.population_size as usize;
        let init = StepStream::new(seed, 0);
        let agents = (0..n as u32)
            .map(|i| {
                let infected = i < cfg.initial_infected;
                AgentState {
                    position: [
                        init.uniform(i, Purpose::PositionX),
                        init.uniform(i, Purpose::PositionY),
                    ],
                    heading: TAU * init.uniform(i, Purpose::Heading),
                    status: if infected { Status::Infected } else { Status::Susceptible },
                    infected_since: infected.then_some(0),
                    isolated: false,
                }
            })
            .collect::<Vec<_>>();
        let positions: Vec<[f64; 2]> = agents.iter().map(|a| a.position).collect();
        let mut grid = CellGrid::new(CellGrid::side_for(params.interaction_radius, n), n);
        for (i, &p) in positions.iter().enumerate() {
            grid.insert(i as u32, p);
        }
        Ok(Self {
            params,
            seed,
            step: 0,
            detection_steps: days_to_steps(params.detection_time, cfg.steps_per_day),
            infection_steps: days_to_steps(params.infection_period, cfg.steps_per_day),
            agents,
            positions,
            grid,
            infected: (0..cfg.initial_infected).collect(),
            alive: n,
            fresh: Vec::with_capacity(n),
            newly: vec![false; n],
        })
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn census(&self) -> Census {
        let mut c = Census::default();
        for a in &self.agents {
            match a.status {
                Status::Susceptible => c.susceptible += 1,
                Status::Infected => c.infected += 1,
                Status::Recovered => c.recovered += 1,
                Status::Dead => c.dead += 1,
            }
        }
        c
    }

    /// Advance one step and return the infected count.
    pub fn step(&mut self) -> u32 {
        self.step += 1;
        let rs = StepStream::new(self.seed, self.step);

        self.movement(&rs);
        self.transmission(&rs);
        self.progress(&rs);
        self.infected.len() as u32
    }

    fn movement(&mut self, rs: &StepStream) {
        let speed = self.params.speed;
        let table = heading_table();
        for (i, a) in self.agents.iter_mut().enumerate() {
            if a.status == Status::Dead || a.isolated {
                continue;
            }
            let k = (rs.bits(i as u32, Purpose::Heading) >> (64 - HEADING_BITS)) as usize;
            let [c, s] = table[k];
            a.heading = k as f64 * (TAU / HEADINGS as f64);
            a.position = [wrap_unit(a.position[0] + speed * c), wrap_unit(a.position[1] + speed * s)];
            self.positions[i] = a.position;
            self.grid.update(i as u32, a.position);
        }
    }

    fn transmission(&mut self, rs: &StepStream) {
        let n_targets = self.alive - self.infected.len();
        if self.infected.is_empty() || n_targets == 0 {
            return;
        }

        let r2 = self.params.interaction_radius * self.params.interaction_radius;
        let beta = self.params.transmission_probability;
        let reinfect = self.params.reinfection_probability;
        let agents = &self.agents;
        let positions = &self.positions;
        let grid = &self.grid;
        let newly = &mut self.newly;
        let fresh = &mut self.fresh;
        fresh.clear();

        // Drive the search from the smaller side; draws are keyed by the
        // (infector, target) pair so both directions agree.
        if self.infected.len() <= n_targets {
            for &i in &self.infected {
                let pi = positions[i as usize];
                grid.visit_near(pi, |j| {
                    let p = match agents[j as usize].status {
                        Status::Susceptible => beta,
                        Status::Recovered => reinfect,
                        _ => return true,
                    };
                    if !newly[j as usize]
                        && torus_dist2(pi, positions[j as usize]) <= r2
                        && rs.pair_uniform(i, j) < p
                    {
                        newly[j as usize] = true;
                        fresh.push(j);
                    }
                    true
                });
            }
            for &j in fresh.iter() {
                newly[j as usize] = false;
            }
        } else {
            for (j, a) in agents.iter().enumerate() {
                let p = match a.status {
                    Status::Susceptible => beta,
                    Status::Recovered => reinfect,
                    _ => continue,
                };
                let j = j as u32;
                let pj = a.position;
                let mut hit = false;
                grid.visit_near(pj, |i| {
                    if agents[i as usize].status == Status::Infected
                        && torus_dist2(pj, positions[i as usize]) <= r2
                        && rs.pair_uniform(i, j) < p
                    {
                        hit = true;
                        return false;
                    }
                    true
                });
                if hit {
                    fresh.push(j);
                }
            }
        }

        let t = self.step;
        for &j in fresh.iter() {
            let a = &mut self.agents[j as usize];
            a.status = Status::Infected;
            a.infected_since = Some(t);
            a.isolated = false;
            self.infected.push(j);
        }
    }

    /// Detection and resolution of current infections.
    fn progress(&mut self, rs: &StepStream) {
        let t = self.step;
        let agents = &mut self.agents;
        let grid = &mut self.grid;
        let alive = &mut self.alive;
        let (detection, resolution) = (self.detection_steps, self.infection_steps);
        let death_p = self.params.death_probability;
        self.infected.retain(|&i| {
            let a = &mut agents[i as usize];
            let since = a.infected_since.expect("infected agents carry an onset step");
            let duration = t - since;
            if duration >= detection {
                a.isolated = true;
            }
            if duration < resolution {
                return true;
            }
            if rs.uniform(i, Purpose::Death) < death_p {
                a.status = Status::Dead;
                grid.remove(i);
                *alive -= 1;
            } else {
                a.status = Status::Recovered;
            }
            a.infected_since = None;
            a.isolated = false;
            false
        });
    }
}

const HEADING_BITS: u32 = 12;
const HEADINGS: usize = 1 << HEADING_BITS;



fn heading_table() -> &'static [[f64; 2]; HEADINGS] {
    static TABLE: OnceLock<Box<[[f64; 2]; HEADINGS]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[0.0; 2]; HEADINGS]);
        for (k, e) in t.iter_mut().enumerate() {
            let (s, c) = (TAU * k as f64 / HEADINGS as f64).sin_cos();
            *e = [c, s];
        }
        t
    })
}

/// Wrap onto [0,1). Displacements are below one unit per step, so a single
/// shift suffices.
#[inline]
fn wrap_unit(v: f64) -> f64 {
    let w = if v < 0.0 {
        v + 1.0
    } else if v >= 1.0 {
        v - 1.0
    } else {
        v
    };
    // Adding 1 to a tiny negative value rounds to exactly 1.0.
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Run a full simulation and return the per-step infected counts.
pub fn simulate(params: &AbmParams, cfg: &SimConfig, seed: u64) -> Result<EpidemicSeries> {
    let mut sim = Simulation::new(*params, cfg, seed)?;
    let horizon = cfg.horizon_steps as usize;
    let mut counts = Vec::with_capacity(horizon);
    while counts.len() < horizon {
        let infected = sim.step();
        counts.push(infected);
        if infected == 0 {
            // Nothing can change the counts once the infection is extinct.
            counts.resize(horizon, 0);
        }
    }
    Ok(EpidemicSeries::new(counts))
}

/// Seed for the simulation that plays the role of observed data.
pub fn reference_seed(master_seed: u64) -> u64 {
    derive_seed(&[master_seed, 0x5EED_0F_DA7A])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::REFERENCE_TRUE_VALUES;

    fn small_cfg(horizon: u32) -> SimConfig {
        SimConfig {
            population_size: 200,
            initial_infected: 5,
            horizon_steps: horizon,
            steps_per_day: DEFAULT_STEPS_PER_DAY,
        }
    }

    #[test]
    fn validates_reference_values() {
        let p = validate_params(&REFERENCE_TRUE_VALUES).unwrap();
        assert_eq!(p.infection_period, 30.0);
        assert_eq!(p.to_vector(), REFERENCE_TRUE_VALUES.to_vec());
    }

    #[test]
    fn rejects_out_of_range_entries() {
        let e = validate_params(&[1.5, 0.1, 0.1, 10.0, 5.0, 0.1, 0.1]).unwrap_err();
        assert!(matches!(e, Error::OutOfRange(1)));
        let e = validate_params(&[0.5, 0.5, 0.5, 42.0, 5.0, 0.5, 0.5]).unwrap_err();
        assert!(matches!(e, Error::OutOfRange(4)));
        let e = validate_params(&[0.5, 0.5, 0.5, 10.0, 0.0, 0.5, 0.5]).unwrap_err();
        assert!(matches!(e, Error::OutOfRange(5)));
        let e = validate_params(&[0.5, f64::NAN, 0.5, 10.0, 5.0, 0.5, 0.5]).unwrap_err();
        assert!(matches!(e, Error::OutOfRange(2)));
        let e = validate_params(&[0.5; 6]).unwrap_err();
        assert!(matches!(e, Error::WrongArity { expected: 7, got: 6 }));
    }

    #[test]
    fn day_step_conversion() {
        assert_eq!(days_to_steps(41.0, DEFAULT_STEPS_PER_DAY), 1000);
        assert_eq!(days_to_steps(30.0, DEFAULT_STEPS_PER_DAY), 732);
        assert_eq!(days_to_steps(14.0, DEFAULT_STEPS_PER_DAY), 341);
        assert_eq!(days_to_steps(0.01, DEFAULT_STEPS_PER_DAY), 1);
    }

    #[test]
    fn sim_config_rules() {
        assert!(SimConfig::default().validate().is_ok());
        let mut c = SimConfig::default();
        c.initial_infected = 0;
        assert!(c.validate().is_err());
        c.initial_infected = 501;
        assert!(c.validate().is_err());
        c.initial_infected = 500;
        assert!(c.validate().is_ok());
        c.horizon_steps = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn no_contact_limit_decays_to_zero() {
        let mut p = validate_params(&REFERENCE_TRUE_VALUES).unwrap();
        p.speed = f64::MIN_POSITIVE;
        p.interaction_radius = f64::MIN_POSITIVE;
        let s = simulate(&p, &small_cfg(2000), 3).unwrap();
        assert!(s.counts.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(s.counts[0], 5);
        // All initial infections resolve at 732 steps.
        assert_eq!(s.counts[730], 5);
        assert_eq!(s.counts[731], 0);
        assert_eq!(*s.counts.last().unwrap(), 0);
    }

    #[test]
    fn certain_death_is_absorbing() {
        let mut p = validate_params(&REFERENCE_TRUE_VALUES).unwrap();
        p.death_probability = 1.0f64.next_down();
        p.reinfection_probability = f64::MIN_POSITIVE;
        p.infection_period = 5.0;
        let cfg = small_cfg(1500);
        let mut sim = Simulation::new(p, &cfg, 9).unwrap();
        for _ in 0..cfg.horizon_steps {
            sim.step();
        }
        let c = sim.census();
        assert_eq!(c.infected, 0);
        assert_eq!(c.recovered, 0);
        assert_eq!(c.susceptible + c.dead, cfg.population_size);
        assert!(c.dead >= cfg.initial_infected);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = validate_params(&REFERENCE_TRUE_VALUES).unwrap();
        let a = simulate(&p, &small_cfg(800), 42).unwrap();
        let b = simulate(&p, &small_cfg(800), 42).unwrap();
        let c = simulate(&p, &small_cfg(800), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 800);
    }

    #[test]
    fn agent_invariants_hold_every_step() {
        let p = validate_params(&[0.9, 0.3, 0.2, 6.0, 2.0, 0.03, 0.05]).unwrap();
        let cfg = small_cfg(400);
        let mut sim = Simulation::new(p, &cfg, 5).unwrap();
        for _ in 0..cfg.horizon_steps {
            let infected = sim.step();
            let census = sim.census();
            assert_eq!(census.total(), cfg.population_size);
            assert_eq!(census.infected, infected);
            for a in sim.agents() {
                assert!((0.0..1.0).contains(&a.position[0]));
                assert!((0.0..1.0).contains(&a.position[1]));
                assert_eq!(a.infected_since.is_some(), a.status == Status::Infected);
                assert!(!a.isolated || a.status == Status::Infected);
            }
        }
    }

    #[test]
    fn fully_infected_start_never_grows() {
        let mut p = validate_params(&[0.9, 0.3, 0.2, 6.0, 2.0, 0.03, 0.05]).unwrap();
        p.reinfection_probability = f64::MIN_POSITIVE;
        let cfg = SimConfig {
            population_size: 150,
            initial_infected: 150,
            horizon_steps: 600,
            steps_per_day: DEFAULT_STEPS_PER_DAY,
        };
        let s = simulate(&p, &cfg, 1).unwrap();
        assert!(s.counts.windows(2).all(|w| w[1] <= w[0]));
    }
}
