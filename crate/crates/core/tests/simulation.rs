use abmcal::abm::{simulate, validate_params, SimConfig, Simulation, Status};
use abmcal::params::REFERENCE_TRUE_VALUES;
use abmcal::series::EpidemicSeries;
use proptest::prelude::*;

fn cfg(pop: u32, horizon: u32) -> SimConfig {
    SimConfig {
        population_size: pop,
        initial_infected: 3.min(pop),
        horizon_steps: horizon,
        ..SimConfig::default()
    }
}

fn params() -> impl Strategy<Value = Vec<f64>> {
    (
        0.01..0.99f64,
        0.01..0.99f64,
        0.01..0.99f64,
        0.5..40.0f64,
        0.5..40.0f64,
        0.0005..0.05f64,
        0.005..0.1f64,
    )
        .prop_map(|(a, b, c, d, e, f, g)| vec![a, b, c, d, e, f, g])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn horizon_prefixes_agree(p in params(), seed in any::<u64>(), k in 1u32..400) {
        let p = validate_params(&p).unwrap();
        let long = simulate(&p, &cfg(80, 400), seed).unwrap();
        let short = simulate(&p, &cfg(80, k), seed).unwrap();
        prop_assert_eq!(&long.counts[..k as usize], &short.counts[..]);
    }

    #[test]
    fn census_is_conserved(p in params(), seed in any::<u64>()) {
        let c = cfg(60, 300);
        let mut sim = Simulation::new(validate_params(&p).unwrap(), &c, seed).unwrap();
        for _ in 0..300 {
            let infected = sim.step();
            let census = sim.census();
            prop_assert_eq!(census.total(), 60);
            prop_assert_eq!(census.infected, infected);
            for a in sim.agents() {
                prop_assert!((0.0..1.0).contains(&a.position[0]) && (0.0..1.0).contains(&a.position[1]));
                prop_assert_eq!(a.infected_since.is_some(), a.status == Status::Infected);
            }
        }
    }
}

#[test]
fn series_round_trips_through_csv_and_json() {
    let p = validate_params(&REFERENCE_TRUE_VALUES).unwrap();
    let s = simulate(&p, &cfg(200, 2000), 4).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    assert_eq!(EpidemicSeries::read_csv(&buf[..]).unwrap(), s);
    assert_eq!(EpidemicSeries::from_json(&s.to_json()).unwrap(), s);
}
