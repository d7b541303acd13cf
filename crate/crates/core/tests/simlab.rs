use survey_di::simlab::{run_sim1, run_sim2, write_summary_csv, MonteCarloSummary, Scenario, Sim1Config, Sim2Config};

fn small_sim1(scenario: Scenario, seed: u64) -> Sim1Config {
    let mut c = Sim1Config::new(scenario, 40, seed);
    c.population_size = 5_000;
    c.sample_size = 200;
    c.strata = [900, 600];
    c
}

fn bits(s: &MonteCarloSummary) -> Vec<u64> {
    s.rows
        .iter()
        .flat_map(|r| [r.bias, r.se, r.rmse, r.var_rel_bias.unwrap_or(0.0)])
        .map(f64::to_bits)
        .collect()
}

#[test]
fn identical_config_gives_identical_summary() {
    for sc in Scenario::ALL {
        let a = run_sim1(&small_sim1(sc, 11)).unwrap();
        let b = run_sim1(&small_sim1(sc, 11)).unwrap();
        assert_eq!(bits(&a), bits(&b));
        let other = run_sim1(&small_sim1(sc, 12)).unwrap();
        assert_ne!(bits(&a), bits(&other));
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let c1 = small_sim1(Scenario::III, 5);
    let mut c2 = Sim2Config::new(300, 30, 5);
    c2.population_size = 3_000;
    c2.big_data_size = 1_500;
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (run_sim1(&c1).unwrap(), run_sim2(&c2).unwrap()))
    };
    let (s1, t1) = run(1);
    let (s4, t4) = run(4);
    assert_eq!(bits(&s1), bits(&s4));
    assert_eq!(bits(&t1), bits(&t4));
}

#[test]
fn table_shapes() {
    let mut rows = 0;
    for sc in Scenario::ALL {
        let s = run_sim1(&small_sim1(sc, 3)).unwrap();
        assert_eq!(s.rows.len(), 4);
        rows += s.rows.len();
        for r in &s.rows {
            assert!((r.rmse.powi(2) - r.bias.powi(2) - r.se.powi(2)).abs() < 1e-12);
        }
    }
    assert_eq!(rows, 12);
    let mut summaries = Vec::new();
    for n in [200, 400] {
        let mut c = Sim2Config::new(n, 10, 3);
        c.population_size = 3_000;
        c.big_data_size = 1_500;
        summaries.push(run_sim2(&c).unwrap());
    }
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &summaries).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 10);
}

#[test]
fn scenario_one_regdi_tracks_pdi() {
    let s = run_sim1(&small_sim1(Scenario::I, 8)).unwrap();
    assert!(s.max_pdi_regdi_gap.unwrap() < 1e-9);
}
