use abmcal::engine::*;
use abmcal::params::ParameterVector;
use abmcal::sampling::{generate_pool_random, SamplerKind};
use abmcal::surrogate::SurrogateKind;

fn small() -> CalibrationConfig {
    let mut cfg = CalibrationConfig::desk();
    cfg.sim.population_size = 150;
    cfg.batch_size = 10;
    cfg.abm_min_budget = 30;
    cfg.abm_max_budget = 80;
    cfg.pool_size = 300;
    cfg.params_to_calibrate = vec![1, 2, 3];
    cfg
}

#[test]
fn parallel_and_serial_batches_agree() {
    for strategy in [SeedStrategy::Common, SeedStrategy::PerSample] {
        let cfg = CalibrationConfig {
            seed_strategy: strategy,
            ..small()
        };
        let reference = reference_series(&ParameterVector::reference(), &cfg).unwrap();
        let space = cfg.search_space().unwrap();
        let batch = generate_pool_random(24, &space, 5, SamplerKind::Random).unwrap().vectors().to_vec();
        let par = evaluate_minibatch(&batch, &reference, &cfg, 4).unwrap();
        let ser = evaluate_minibatch_serial(&batch, &reference, &cfg, 4).unwrap();
        assert_eq!(par, ser);
        assert_eq!(par.len(), 24);
    }
}

#[test]
fn per_sample_seeds_differ_by_slot() {
    let cfg = CalibrationConfig {
        seed_strategy: SeedStrategy::PerSample,
        ..small()
    };
    assert_ne!(sample_seed(&cfg, 0, 0), sample_seed(&cfg, 0, 1));
    assert_ne!(sample_seed(&cfg, 0, 0), sample_seed(&cfg, 1, 0));
    let common = small();
    assert_eq!(sample_seed(&common, 0, 0), sample_seed(&common, 7, 3));
}

#[test]
fn runs_respect_budgets_and_replay() {
    let reference = reference_series(&ParameterVector::reference(), &small()).unwrap();
    let methods = [
        (SamplerKind::Random, SurrogateKind::None),
        (SamplerKind::Sobol, SurrogateKind::None),
        (SamplerKind::SurrogateRandom, SurrogateKind::GradientBoosted),
        (SamplerKind::SurrogateSobol, SurrogateKind::LinearSvm),
    ];
    for (s, k) in methods {
        for threshold in [0.005, -1.0] {
            let cfg = CalibrationConfig {
                ks_threshold: threshold,
                ..small().with_method(s, k)
            };
            let a = Calibrator::new(cfg.clone(), reference.clone()).unwrap().run().unwrap();
            let b = Calibrator::new(cfg.clone(), reference.clone()).unwrap().run().unwrap();
            assert_eq!(a.result.to_json(), b.result.to_json());
            assert_eq!(a.db, b.db);
            let r = &a.result;
            assert_eq!(r.evaluations_used, r.batches_used * cfg.batch_size);
            assert!(r.evaluations_used <= cfg.abm_max_budget);
            assert!(r.evaluations_used >= cfg.abm_min_budget);
            assert!(r.best_statistic_trace.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*r.best_statistic_trace.last().unwrap(), r.best_statistic);
            assert_eq!(a.db.len(), r.evaluations_used);
            match r.terminated_by {
                Termination::KsThresholdMet => assert!(r.best_statistic <= threshold),
                Termination::MaxBudgetExhausted => assert_eq!(r.evaluations_used, cfg.abm_max_budget),
            }
            for s in a.db.samples() {
                assert_eq!(s.label.is_positive(), s.statistic <= r.critical_value);
            }
        }
    }
}

#[test]
fn persisted_run_db_reloads() {
    let cfg = small();
    let reference = reference_series(&ParameterVector::reference(), &cfg).unwrap();
    let run = Calibrator::new(cfg, reference).unwrap().run().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db.jsonl");
    run.db.persist(&path).unwrap();
    assert_eq!(GroundTruthDb::load(&path).unwrap(), run.db);
    assert_eq!(best_candidate(&run.db).unwrap().1, run.result.best_statistic);
}

#[test]
fn reference_of_wrong_length_is_rejected() {
    let cfg = small();
    let short = abmcal::EpidemicSeries::new(vec![1; 10]);
    assert!(Calibrator::new(cfg, short).is_err());
}
