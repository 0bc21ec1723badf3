//! Agreement with values produced by the COCO reference implementation
//! (`tools/gen_bbob_probes.py`).

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajsel_bbob::{ProblemId, ProblemInstance};

struct Probe {
    id: ProblemId,
    index: usize,
    x: Vec<f64>,
    f: f64,
}

fn probes() -> Vec<Probe> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/bbob_probe_values.csv");
    let mut rdr = csv::Reader::from_path(path).expect("golden file");
    rdr.records()
        .map(|rec| {
            let rec = rec.unwrap();
            let num = |i: usize| rec[i].parse::<usize>().unwrap();
            let dim = num(2);
            let x = (0..dim).map(|k| rec[4 + k].parse().unwrap()).collect();
            Probe {
                id: ProblemId::new(num(0), num(1), dim),
                index: num(3),
                x,
                f: rec[rec.len() - 1].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn probe_values_match_reference() {
    let probes = probes();
    assert!(probes.len() > 2000);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for p in &probes {
        let inst = ProblemInstance::new(p.id).unwrap();
        let got = inst.value(&p.x).unwrap();
        let rel = (got - p.f).abs() / p.f.abs().max(1.0);
        worst = worst.max(rel);
        if rel > 1e-6 {
            failures.push(format!("{} probe {}: got {got}, want {}", p.id, p.index, p.f));
        }
    }
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
    eprintln!("worst relative deviation {worst:e}");
}

#[test]
fn optimum_matches_reference() {
    // probe 0 is the reference optimum location; its value is the reference f_opt
    for p in probes().iter().filter(|p| p.index == 0) {
        let inst = ProblemInstance::new(p.id).unwrap();
        assert!((inst.f_opt() - p.f).abs() < 1e-12, "{}", p.id);
        for (a, b) in inst.x_opt().iter().zip(&p.x) {
            assert!((a - b).abs() < 1e-9, "{}: {:?} vs {:?}", p.id, inst.x_opt(), p.x);
        }
    }
}

#[test]
fn minimization_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for f in 1..=24 {
        for i in 1..=5 {
            let inst = ProblemInstance::new(ProblemId::new(f, i, 5)).unwrap();
            for _ in 0..1000 {
                let x: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..=5.0)).collect();
                let v = inst.value(&x).unwrap();
                assert!(v >= inst.f_opt() - 1e-9, "f{f} i{i} {v} < {}", inst.f_opt());
            }
        }
    }
}

proptest! {
    #[test]
    fn evaluation_is_reproducible(f in 1usize..=24, i in 1usize..=5,
                                  x in proptest::collection::vec(-5.0f64..5.0, 5)) {
        let a = ProblemInstance::new(ProblemId::new(f, i, 5)).unwrap();
        let b = ProblemInstance::new(ProblemId::new(f, i, 5)).unwrap();
        prop_assert_eq!(a.value(&x).unwrap().to_bits(), b.value(&x).unwrap().to_bits());
    }
}
