mod common;

use rand::Rng;

use common::{rng, small_population_with_sample};
use survey_di::calibration::{regdi_total, ControlSpec};
use survey_di::mismeasure::{fit_measurement_model, two_step_regdi};

#[test]
fn noiseless_lines_are_recovered() {
    let mut r = rng(301);
    for _ in 0..500 {
        let b0 = r.random_range(-5.0..5.0);
        let b1 = r.random_range(0.2..3.0) * if r.random::<bool>() { 1.0 } else { -1.0 };
        let n = r.random_range(2..40);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let y_star: Vec<f64> = y.iter().map(|v| b0 + b1 * v).collect();
        let d: Vec<f64> = (0..n).map(|_| r.random_range(1.0..50.0)).collect();
        let m = fit_measurement_model(&d, &y, &y_star).unwrap();
        assert!((m.beta0 - b0).abs() < 1e-10, "{} vs {b0}", m.beta0);
        assert!((m.beta1 - b1).abs() < 1e-10, "{} vs {b1}", m.beta1);
    }
}

#[test]
fn two_step_without_measurement_error_is_regdi() {
    let mut r = rng(302);
    for _ in 0..50 {
        let (pop, s) = small_population_with_sample(&mut r);
        let delta = s.gather(&pop.delta);
        if delta.iter().filter(|&&d| d == 1).count() < 2 {
            continue;
        }
        let y = s.gather(&pop.y);
        let y_matched: Vec<f64> = y.iter().zip(&delta).map(|(&v, &d)| if d == 1 { v } else { f64::NAN }).collect();
        let bd = pop.totals();
        let two = two_step_regdi(&s, &y, &delta, &y_matched, &bd).unwrap();
        let reg = regdi_total(&s, &y, &ControlSpec::standard(&delta, &y, &bd).unwrap()).unwrap();
        assert!((two.report.total - reg.total).abs() <= 1e-9 * reg.total.abs().max(1.0));
        assert!((two.model.beta1 - 1.0).abs() < 1e-10);
    }
}
