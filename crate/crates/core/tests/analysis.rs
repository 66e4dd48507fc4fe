use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;

use eedi::analysis::{
    aggregate, ci95_halfwidth, lambda_vs_distance, optimize_lambda, pearson, sweep_blocklengths, ExperimentRecord,
    LambdaGrid, Simulator, SweepPlan,
};
use eedi::channel::{LinkConfig, WdmConfig};
use eedi::metrics::{self, EnergySeries};
use eedi::shaping::{AmplitudeAlphabet, SymbolSequence};
use eedi::Result;

const EPS: f64 = metrics::DEFAULT_EPSILON;

fn plan(blocklengths: Vec<usize>, seeds: Vec<u64>, symbols: usize) -> SweepPlan {
    let mut wdm = WdmConfig::reference(-2.0);
    wdm.num_channels = 3;
    SweepPlan {
        alphabet: AmplitudeAlphabet::qam64_reference(),
        blocklengths,
        seeds,
        symbols_per_channel: symbols,
        link: LinkConfig::reference(4),
        wdm,
        lambdas: vec![0.9, 0.99],
        epsilon: EPS,
        edi_windows: vec![101],
    }
}

/// Records whose SNR is an exact affine function of EEDI at `planted`,
/// plus an optional deterministic perturbation.
fn planted(planted: f64, wobble: f64) -> (Vec<ExperimentRecord>, Vec<EnergySeries<f64>>) {
    let p = plan(vec![10, 30, 100, 300, 1000, 3000], vec![1, 2, 3], 8192);
    let mut records = Vec::new();
    let mut energies = Vec::new();
    for (i, (n, seed)) in p.jobs().into_iter().enumerate() {
        let e = p.central_energies(n, seed).unwrap();
        let x = metrics::eedi_from_energies(&e, planted, EPS).unwrap().value;
        let noise = wobble * ((i * 7919) % 13) as f64 / 13.0;
        records.push(ExperimentRecord {
            blocklength: n,
            distance_km: 320.0,
            launch_power_dbm: -2.0,
            seed,
            effective_snr_db: 20.0 - 0.05 * x + noise,
            eedi: vec![],
            edi: vec![],
            kurtosis: 0.0,
        });
        energies.push(e);
    }
    (records, energies)
}

#[test]
fn planted_optimum_is_recovered() {
    let (records, energies) = planted(0.9, 0.0);
    let curve = optimize_lambda(&records, &energies, &LambdaGrid::default(), EPS).unwrap();
    assert_eq!(curve.lambda_star, 0.9);
    assert!(curve.rp_star > 1.0 - 1e-9, "{}", curve.rp_star);
    assert!(curve.rp_star >= curve.abs_rp[0]);
    assert!(curve.rp_star >= *curve.abs_rp.last().unwrap());
    assert!(curve.abs_rp.iter().all(|&r| r <= curve.rp_star));
}

#[test]
fn grid_refinement_is_consistent() {
    let (records, energies) = planted(0.95, 0.02);
    let coarse = LambdaGrid { lo: 0.6, hi: 1.0, step: 1e-3 };
    let fine = LambdaGrid::default();
    let a = optimize_lambda(&records, &energies, &coarse, EPS).unwrap();
    let b = optimize_lambda(&records, &energies, &fine, EPS).unwrap();
    assert!((a.lambda_star - b.lambda_star).abs() < 5e-3, "{} vs {}", a.lambda_star, b.lambda_star);
    assert!(b.rp_star >= a.rp_star - 1e-12);
}

#[test]
fn optimization_is_deterministic() {
    let (records, energies) = planted(0.8, 0.05);
    let grid = LambdaGrid { lo: 0.6, hi: 1.0, step: 1e-3 };
    let a = optimize_lambda(&records, &energies, &grid, EPS).unwrap();
    let b = optimize_lambda(&records, &energies, &grid, EPS).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lambda_grid.len(), a.abs_rp.len());
}

#[test]
fn lambda_points_are_sorted_by_distance() {
    let (records, energies) = planted(0.9, 0.0);
    let grid = LambdaGrid { lo: 0.6, hi: 1.0, step: 1e-2 };
    let c = optimize_lambda(&records, &energies, &grid, EPS).unwrap();
    let points = lambda_vs_distance(&[(480.0, c.clone()), (160.0, c)]);
    assert_eq!(points.len(), 2);
    assert_eq!(points[0].distance_km, 160.0);
    assert!((points[0].one_minus_lambda_star - (1.0 - points[0].lambda_star)).abs() < 1e-15);
}

struct Counting(AtomicUsize);

impl Simulator for Counting {
    fn effective_snr_db(&self, channels: &[SymbolSequence<f64>], _seed: u64) -> Result<f64> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Ok(15.0 + channels.len() as f64)
    }
}

#[test]
fn one_job_gives_one_complete_record() {
    let p = plan(vec![10], vec![4], 4096);
    let sim = Counting(AtomicUsize::new(0));
    let sweep = sweep_blocklengths(&p, &sim).unwrap();
    assert_eq!(sim.0.load(Ordering::SeqCst), 1);
    assert_eq!(sweep.records.len(), 1);
    let r = &sweep.records[0];
    assert_eq!((r.blocklength, r.seed), (10, 4));
    assert_eq!(r.effective_snr_db, 18.0);
    assert_eq!(r.eedi.len(), 2);
    assert_eq!(r.edi.len(), 1);
    assert!(r.eedi.iter().all(|&(_, v)| v > 0.0));
    assert!(r.kurtosis > 1.0);
    assert_eq!(sweep.energies[0], p.central_energies(10, 4).unwrap());
}

#[test]
fn short_blocks_have_lower_eedi() {
    let p = plan(vec![10, 10_000], (0..8).collect(), 20_000);
    let sim = Counting(AtomicUsize::new(0));
    let sweep = sweep_blocklengths(&p, &sim).unwrap();
    let mean_at = |n: usize| {
        let v: Vec<f64> = sweep.records.iter().filter(|r| r.blocklength == n).map(|r| r.eedi[1].1).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean_at(10) < mean_at(10_000));
}

#[test]
fn ci_uses_student_t() {
    // t_{0.975, 9} = 2.262157
    let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let sd = (xs.iter().map(|x| (x - 4.5) * (x - 4.5)).sum::<f64>() / 9.0).sqrt();
    let expected = 2.262157 * sd / 10f64.sqrt();
    assert!((ci95_halfwidth(&xs) - expected).abs() < 1e-5);

    let (records, _) = planted(0.9, 0.0);
    let summary = aggregate(&records);
    assert_eq!(summary.len(), 6);
    assert!(summary.windows(2).all(|w| w[0].blocklength < w[1].blocklength));
}

fn spread(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

proptest! {
    #[test]
    fn pearson_is_affine_invariant(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        b in -100.0f64..100.0,
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(spread(&x) > 0.1 && spread(&y) > 0.1);
        let r = pearson(&x, &y).unwrap();
        let moved: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r2 = pearson(&moved, &y).unwrap();
        prop_assert!((r2 - a.signum() * r).abs() < 1e-12, "{} vs {}", r2, r);
    }
}
