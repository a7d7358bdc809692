use seqscm::config::{STUDIES_DAY, STUDIES_EVENING, STUDIES_FULL, STUDIES_NONE};
use seqscm::noise::derive_noise;
use seqscm::samplers::{EmpiricalSampler, Sampler};
use seqscm::transitions::{hours_combine, TransitionRule};

const N: u64 = 100_000;

fn dummy() -> Sampler {
    Sampler::Empirical(EmpiricalSampler::fit(&[0.0]).unwrap())
}

/// Frequency within 4.5 binomial standard errors of p.
fn close(freq: f64, p: f64) -> bool {
    (freq - p).abs() <= 4.5 * (p * (1.0 - p) / N as f64).sqrt() + 1e-12
}

#[test]
fn education_advances_at_study_type_rates() {
    // Layout: [education code, studies].
    let rule = TransitionRule::Education {
        own: 0,
        studies: 1,
        p_advance: [0.95, 0.1, 0.05, 0.0],
        max_code: 15.0,
    };
    for (s, p) in [(STUDIES_FULL, 0.95), (STUDIES_DAY, 0.1), (STUDIES_EVENING, 0.05), (STUDIES_NONE, 0.0)] {
        let prev = [8.0, s as f64];
        let up = (0..N)
            .filter(|&i| rule.step(&dummy(), &prev, &prev, &mut derive_noise(1, i, 4, 3)).unwrap() == 9.0)
            .count();
        assert!(close(up as f64 / N as f64, p), "studies {s}: {up}");
    }
    let top = [15.0, STUDIES_FULL as f64];
    for i in 0..1000 {
        assert_eq!(rule.step(&dummy(), &top, &top, &mut derive_noise(2, i, 4, 3)).unwrap(), 15.0);
    }
}

#[test]
fn hours_convex_combination_is_clipped() {
    assert_eq!(hours_combine(160.0, 200.0, 0.5), 168.0);
    assert_eq!(hours_combine(40.0, 20.0, 0.5), 30.0);
    assert_eq!(hours_combine(2.0, -30.0, 0.5), 0.0);
}

#[test]
fn stay_or_redraw_frequencies() {
    // Redraws come from a sampler that never returns the current value.
    let redraw = Sampler::Empirical(EmpiricalSampler::fit(&[1.0, 2.0]).unwrap());
    let rule = TransitionRule::StayOrRedraw {
        own: 0,
        p_stay: 0.9,
        full_time: Some((1, 0.5)),
        forced_redraw: Some(7.0),
    };
    let count = |prev: [f64; 2]| {
        (0..N)
            .filter(|&i| rule.step(&redraw, &prev, &prev, &mut derive_noise(3, i, 5, 2)).unwrap() == prev[0])
            .count() as f64
            / N as f64
    };
    assert!(close(count([0.0, STUDIES_NONE as f64]), 0.9));
    assert!(close(count([0.0, STUDIES_FULL as f64]), 0.45));
    assert_eq!(count([7.0, STUDIES_NONE as f64]), 0.0);
}

#[test]
fn marital_moves_follow_matrix_row() {
    // Layout: [marital, age, studies]; codes 0 married, 1 never, 2 widowed.
    let matrix = vec![vec![0.9, 0.0, 0.1], vec![0.2, 0.8, 0.0], vec![0.05, 0.0, 0.95]];
    let rule = TransitionRule::Marital {
        own: 0,
        age: 1,
        studies: 2,
        matrix,
        married: 0,
        widowed: Some(2),
        marriage_age_factors: Vec::new(),
        widowed_age_factors: Vec::new(),
        full_time_marriage_factor: 0.5,
    };
    let freq = |prev: [f64; 3]| {
        let mut c = [0usize; 3];
        for i in 0..N {
            c[rule.step(&dummy(), &prev, &prev, &mut derive_noise(4, i, 6, 2)).unwrap() as usize] += 1;
        }
        c.map(|k| k as f64 / N as f64)
    };
    let f = freq([1.0, 30.0, STUDIES_NONE as f64]);
    assert!(close(f[0], 0.2) && close(f[1], 0.8) && f[2] == 0.0, "{f:?}");
    let f = freq([1.0, 30.0, STUDIES_FULL as f64]);
    assert!(close(f[0], 0.1) && close(f[1], 0.9), "{f:?}");
}

#[test]
fn age_increments_and_constants_hold() {
    let prev = [41.0, 3.0];
    let inc = TransitionRule::Increment { own: 0 };
    let keep = TransitionRule::Constant { own: 1 };
    let mut noise = derive_noise(0, 0, 0, 2);
    assert_eq!(inc.step(&dummy(), &prev, &prev, &mut noise).unwrap(), 42.0);
    assert_eq!(keep.step(&dummy(), &prev, &prev, &mut noise).unwrap(), 3.0);
}
