//! Blocklength sweeps, metric/SNR correlation and forgetting-factor search.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::channel::{self, LinkConfig, WdmConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, EnergySeries};
use crate::scalar::Real;
use crate::shaping::{derive_seed, generate_shaped_symbols, AmplitudeAlphabet, SymbolSequence};

/// Seed tag of the amplifier noise; data streams use the channel index.
const ASE_SEED_TAG: u64 = 1 << 20;

/// Sample Pearson correlation coefficient.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!("series lengths {} and {} differ", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("{} pairs, need at least 3", x.len())));
    }
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// One transmission: Tx-side metrics of the central channel and the
/// effective SNR it experienced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub blocklength: usize,
    pub distance_km: f64,
    pub launch_power_dbm: f64,
    pub seed: u64,
    pub effective_snr_db: f64,
    /// `(lambda, EEDI)` pairs.
    pub eedi: Vec<(f64, f64)>,
    /// `(W, EDI)` pairs.
    pub edi: Vec<(usize, f64)>,
    pub kurtosis: f64,
}

/// Everything a blocklength sweep needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub alphabet: AmplitudeAlphabet,
    pub blocklengths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub symbols_per_channel: usize,
    pub link: LinkConfig,
    pub wdm: WdmConfig,
    pub lambdas: Vec<f64>,
    pub epsilon: f64,
    pub edi_windows: Vec<usize>,
}

impl SweepPlan {
    /// Canonical job order: blocklength-major, then seed.
    pub fn jobs(&self) -> Vec<(usize, u64)> {
        self.blocklengths
            .iter()
            .flat_map(|&n| self.seeds.iter().map(move |&s| (n, s)))
            .collect()
    }

    /// Symbol streams of every WDM channel for one job. Channel `k` draws
    /// from `derive_seed(seed, k)`.
    pub fn channel_symbols(&self, n: usize, seed: u64) -> Result<Vec<SymbolSequence<f64>>> {
        (0..self.wdm.num_channels)
            .map(|k| self.symbols_for(n, derive_seed(seed, k as u64)))
            .collect()
    }

    /// Central-channel symbol stream of one job, without the other channels.
    pub fn central_symbols(&self, n: usize, seed: u64) -> Result<SymbolSequence<f64>> {
        self.symbols_for(n, derive_seed(seed, self.wdm.central_index() as u64))
    }

    fn symbols_for(&self, n: usize, seed: u64) -> Result<SymbolSequence<f64>> {
        let blocks = self.symbols_per_channel.div_ceil(n);
        let mut seq = generate_shaped_symbols(&self.alphabet, n, blocks, seed)?;
        seq.truncate(self.symbols_per_channel);
        Ok(seq)
    }

    /// Tx energy series of the central channel, regenerated from the seed.
    pub fn central_energies(&self, n: usize, seed: u64) -> Result<EnergySeries<f64>> {
        metrics::symbol_energies(&self.central_symbols(n, seed)?.symbols)
    }

    pub fn ase_seed(seed: u64) -> u64 {
        derive_seed(seed, ASE_SEED_TAG)
    }
}

/// Source of effective-SNR values for a set of channel streams.
pub trait Simulator: Sync {
    fn effective_snr_db(&self, channels: &[SymbolSequence<f64>], seed: u64) -> Result<f64>;
}

/// Split-step fiber link followed by the coherent receiver.
#[derive(Debug, Clone)]
pub struct FiberSimulator {
    pub link: LinkConfig,
    pub wdm: WdmConfig,
}

impl Simulator for FiberSimulator {
    fn effective_snr_db(&self, channels: &[SymbolSequence<f64>], seed: u64) -> Result<f64> {
        Ok(channel::simulate(channels, &self.link, &self.wdm, seed)?.effective_snr_db)
    }
}

/// Records in canonical job order plus the Tx energy series each record
/// was measured on.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub records: Vec<ExperimentRecord>,
    pub energies: Vec<EnergySeries<f64>>,
}

fn run_job(plan: &SweepPlan, simulator: &dyn Simulator, n: usize, seed: u64) -> Result<(ExperimentRecord, EnergySeries<f64>)> {
    let channels = plan.channel_symbols(n, seed)?;
    let central = &channels[plan.wdm.central_index()];
    let energies = metrics::symbol_energies(&central.symbols)?;
    let eedi = plan
        .lambdas
        .iter()
        .map(|&l| Ok((l, metrics::eedi_from_energies(&energies, l, plan.epsilon)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let edi = plan
        .edi_windows
        .iter()
        .map(|&w| Ok((w, metrics::edi_from_energies(&energies, w)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let kurtosis = metrics::kurtosis(&central.symbols)?.value;
    let snr = simulator.effective_snr_db(&channels, SweepPlan::ase_seed(seed))?;
    let record = ExperimentRecord {
        blocklength: n,
        distance_km: plan.link.total_length_km(),
        launch_power_dbm: plan.wdm.launch_power_dbm,
        seed,
        effective_snr_db: snr,
        eedi,
        edi,
        kurtosis,
    };
    Ok((record, energies))
}

/// Runs every `(blocklength, seed)` job. Jobs execute in parallel; results
/// are returned in canonical order regardless of completion order.
pub fn sweep_blocklengths(plan: &SweepPlan, simulator: &dyn Simulator) -> Result<Sweep> {
    if plan.blocklengths.is_empty() || plan.seeds.is_empty() {
        return Err(Error::InsufficientData("sweep needs blocklengths and seeds".into()));
    }
    let results: Vec<_> = plan
        .jobs()
        .into_par_iter()
        .map(|(n, seed)| run_job(plan, simulator, n, seed))
        .collect::<Result<_>>()?;
    let (records, energies) = results.into_iter().unzip();
    Ok(Sweep { records, energies })
}

/// Per-blocklength aggregate across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlocklengthSummary {
    pub blocklength: usize,
    pub runs: usize,
    pub mean_snr_db: f64,
    /// Half-width of the 95% Student-t confidence interval of the mean.
    pub ci_halfwidth_db: f64,
    pub mean_eedi: Vec<(f64, f64)>,
    pub mean_edi: Vec<(usize, f64)>,
    pub mean_kurtosis: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// 95% confidence half-width of the mean of `xs`; 0 for a single sample.
pub fn ci95_halfwidth(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let n = xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975);
    t * sd / n.sqrt()
}

/// Groups records by blocklength (ascending) preserving record order inside
/// each group.
fn group_by_blocklength<'a, I>(items: I) -> BTreeMap<usize, Vec<usize>>
where
    I: IntoIterator<Item = &'a ExperimentRecord>,
{
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in items.into_iter().enumerate() {
        groups.entry(r.blocklength).or_default().push(i);
    }
    groups
}

pub fn aggregate(records: &[ExperimentRecord]) -> Vec<BlocklengthSummary> {
    group_by_blocklength(records)
        .into_iter()
        .map(|(n, idx)| {
            let snr: Vec<f64> = idx.iter().map(|&i| records[i].effective_snr_db).collect();
            let first = &records[idx[0]];
            let mean_eedi = first
                .eedi
                .iter()
                .enumerate()
                .map(|(j, &(l, _))| (l, mean(&idx.iter().map(|&i| records[i].eedi[j].1).collect::<Vec<_>>())))
                .collect();
            let mean_edi = first
                .edi
                .iter()
                .enumerate()
                .map(|(j, &(w, _))| (w, mean(&idx.iter().map(|&i| records[i].edi[j].1).collect::<Vec<_>>())))
                .collect();
            BlocklengthSummary {
                blocklength: n,
                runs: idx.len(),
                mean_snr_db: mean(&snr),
                ci_halfwidth_db: ci95_halfwidth(&snr),
                mean_eedi,
                mean_edi,
                mean_kurtosis: mean(&idx.iter().map(|&i| records[i].kurtosis).collect::<Vec<_>>()),
            }
        })
        .collect()
}

/// Exhaustive forgetting-factor grid `lo, lo + step, ...` strictly below `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self { lo: 0.6, hi: 1.0, step: 1e-4 }
    }
}

impl LambdaGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step - 1e-9).ceil().max(0.0) as usize;
        (0..count)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e12).round() / 1e12)
            .filter(|&l| l < self.hi)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(Error::Validation {
                path: "analysis.grid_lo".into(),
                message: "grid must satisfy 0 <= lo < hi <= 1".into(),
            });
        }
        if !(self.step > 0.0) {
            return Err(Error::Validation { path: "analysis.grid_step".into(), message: "must be positive".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    /// Grid points at which EEDI was computable for every record.
    pub lambda_grid: Vec<f64>,
    pub abs_rp: Vec<f64>,
    pub lambda_star: f64,
    pub rp_star: f64,
}

/// |r_p| between per-blocklength mean EEDI and mean SNR at one lambda, or
/// `None` when some sequence is too short for that lambda.
fn correlation_at(
    records: &[ExperimentRecord],
    energies: &[EnergySeries<f64>],
    groups: &BTreeMap<usize, Vec<usize>>,
    lambda: f64,
    epsilon: f64,
) -> Result<Option<f64>> {
    let mut eedi = Vec::with_capacity(energies.len());
    for e in energies {
        match metrics::eedi_from_energies(e, lambda, epsilon) {
            Ok(m) => eedi.push(m.value),
            Err(Error::InsufficientLength { .. }) => return Ok(None),
            Err(err) => return Err(err),
        }
    }
    let mut x = Vec::with_capacity(groups.len());
    let mut y = Vec::with_capacity(groups.len());
    for idx in groups.values() {
        x.push(mean(&idx.iter().map(|&i| eedi[i]).collect::<Vec<_>>()));
        y.push(mean(&idx.iter().map(|&i| records[i].effective_snr_db).collect::<Vec<_>>()));
    }
    match pearson(&x, &y) {
        Ok(r) => Ok(Some(r.abs())),
        Err(Error::UndefinedCorrelation(_)) => Ok(Some(0.0)),
        Err(err) => Err(err),
    }
}

/// Exhaustive search for the forgetting factor maximising |r_p| between
/// EEDI and effective SNR. EEDI is recomputed from the stored Tx energy
/// series; no channel simulation happens here. Ties go to the smaller lambda.
pub fn optimize_lambda(
    records: &[ExperimentRecord],
    energies: &[EnergySeries<f64>],
    grid: &LambdaGrid,
    epsilon: f64,
) -> Result<CorrelationCurve> {
    grid.validate()?;
    if records.len() != energies.len() {
        return Err(Error::InvalidParameter(format!(
            "{} records but {} energy series",
            records.len(),
            energies.len()
        )));
    }
    let groups = group_by_blocklength(records);
    if groups.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct blocklengths, need at least 3",
            groups.len()
        )));
    }
    let points = grid.points();
    let evaluated: Vec<Option<f64>> = points
        .par_iter()
        .map(|&l| correlation_at(records, energies, &groups, l, epsilon))
        .collect::<Result<_>>()?;

    let mut lambda_grid = Vec::new();
    let mut abs_rp = Vec::new();
    for (l, r) in points.into_iter().zip(evaluated) {
        if let Some(r) = r {
            lambda_grid.push(l);
            abs_rp.push(r);
        }
    }
    let mut best = None::<usize>;
    for (i, &r) in abs_rp.iter().enumerate() {
        if best.is_none_or(|b| r > abs_rp[b]) {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| {
        Error::InsufficientData("no grid point is computable for the stored sequences".into())
    })?;
    Ok(CorrelationCurve { lambda_star: lambda_grid[best], rp_star: abs_rp[best], lambda_grid, abs_rp })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistancePoint {
    pub distance_km: f64,
    pub lambda_star: f64,
    pub one_minus_lambda_star: f64,
    pub rp_star: f64,
}

/// Optimal forgetting factor per distance, sorted by distance.
pub fn lambda_vs_distance(curves: &[(f64, CorrelationCurve)]) -> Vec<DistancePoint> {
    let mut points: Vec<DistancePoint> = curves
        .iter()
        .map(|(d, c)| DistancePoint {
            distance_km: *d,
            lambda_star: c.lambda_star,
            one_minus_lambda_star: 1.0 - c.lambda_star,
            rp_star: c.rp_star,
        })
        .collect();
    points.sort_by(|a, b| a.distance_km.total_cmp(&b.distance_km));
    points
}

/// Whether `1 - lambda*` never increases with distance.
pub fn decay_rate_non_increasing(points: &[DistancePoint]) -> bool {
    points.windows(2).all(|w| w[1].one_minus_lambda_star <= w[0].one_minus_lambda_star)
}

/// Sweeps the plan once per distance (spans = distance / span length) and
/// optimizes lambda for each.
pub fn distance_study(
    plan: &SweepPlan,
    distances_km: &[f64],
    grid: &LambdaGrid,
    make_simulator: &dyn Fn(&LinkConfig, &WdmConfig) -> Box<dyn Simulator>,
) -> Result<Vec<(f64, Sweep, CorrelationCurve)>> {
    distances_km
        .iter()
        .map(|&d| {
            let spans = (d / plan.link.span_length_km).round() as usize;
            if spans == 0 || ((spans as f64 * plan.link.span_length_km) - d).abs() > 1e-6 {
                return Err(Error::Validation {
                    path: "analysis.distances_km".into(),
                    message: format!("{d} km is not a whole number of spans"),
                });
            }
            let mut p = plan.clone();
            p.link.num_spans = spans;
            let sim = make_simulator(&p.link, &p.wdm);
            let sweep = sweep_blocklengths(&p, sim.as_ref())?;
            let curve = optimize_lambda(&sweep.records, &sweep.energies, grid, p.epsilon)?;
            Ok((d, sweep, curve))
        })
        .collect()
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn eedi_column(lambda: f64) -> String {
    format!("eedi_{lambda}")
}

fn edi_column(window: usize) -> String {
    format!("edi_w{window}")
}

/// Writes one row per record. EEDI and EDI columns follow the order of the
/// first record.
pub fn write_records_csv<W: Write>(writer: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["blocklength", "distance_km", "launch_power_dbm", "seed", "effective_snr_db", "kurtosis"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(first) = records.first() {
        header.extend(first.eedi.iter().map(|&(l, _)| eedi_column(l)));
        header.extend(first.edi.iter().map(|&(win, _)| edi_column(win)));
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.blocklength.to_string(),
            fmt_f64(r.distance_km),
            fmt_f64(r.launch_power_dbm),
            r.seed.to_string(),
            fmt_f64(r.effective_snr_db),
            fmt_f64(r.kurtosis),
        ];
        row.extend(r.eedi.iter().map(|&(_, v)| fmt_f64(v)));
        row.extend(r.edi.iter().map(|&(_, v)| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(value: &str, column: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("column `{column}`: cannot parse `{value}`")))
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let fixed = ["blocklength", "distance_km", "launch_power_dbm", "seed", "effective_snr_db", "kurtosis"];
    if header.len() < fixed.len() || header[..fixed.len()] != fixed {
        return Err(Error::Parse(format!("unexpected records header {header:?}")));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let mut rec = ExperimentRecord {
            blocklength: parse_field(get(0), "blocklength")?,
            distance_km: parse_field(get(1), "distance_km")?,
            launch_power_dbm: parse_field(get(2), "launch_power_dbm")?,
            seed: parse_field(get(3), "seed")?,
            effective_snr_db: parse_field(get(4), "effective_snr_db")?,
            kurtosis: parse_field(get(5), "kurtosis")?,
            eedi: Vec::new(),
            edi: Vec::new(),
        };
        for (i, name) in header.iter().enumerate().skip(fixed.len()) {
            if let Some(l) = name.strip_prefix("eedi_") {
                rec.eedi.push((parse_field(l, name)?, parse_field(get(i), name)?));
            } else if let Some(w) = name.strip_prefix("edi_w") {
                rec.edi.push((parse_field(w, name)?, parse_field(get(i), name)?));
            } else {
                return Err(Error::Parse(format!("unknown records column `{name}`")));
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_curve_csv<W: Write>(writer: W, curve: &CorrelationCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lambda", "abs_rp"])?;
    for (l, r) in curve.lambda_grid.iter().zip(&curve.abs_rp) {
        w.write_record([fmt_f64(*l), fmt_f64(*r)])?;
    }
    w.flush()?;
    Ok(())
}

/// Scalar summary written next to the sweep outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub lambda_star: f64,
    pub rp_star: f64,
    pub distance_km: f64,
    pub per_blocklength: Vec<BlocklengthSummary>,
}

/// Rows of the blocklength figure: SNR with confidence half-width, EEDI at
/// `lambda_star` in dB, and EDI in dB shifted to meet EEDI at the largest
/// blocklength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlocklengthFigureRow {
    pub n: usize,
    pub snr_db: f64,
    pub ci_halfwidth_db: f64,
    pub eedi_db: f64,
    pub edi_db_shifted: f64,
}

pub fn blocklength_figure(
    records: &[ExperimentRecord],
    energies: &[EnergySeries<f64>],
    lambda_star: f64,
    epsilon: f64,
    edi_window: usize,
) -> Result<(Vec<BlocklengthFigureRow>, f64)> {
    let groups = group_by_blocklength(records);
    let mut rows = Vec::with_capacity(groups.len());
    let mut edi_db = Vec::with_capacity(groups.len());
    for (&n, idx) in &groups {
        let eedi: Vec<f64> = idx
            .iter()
            .map(|&i| metrics::eedi_from_energies(&energies[i], lambda_star, epsilon).map(|m| m.value))
            .collect::<Result<_>>()?;
        let edi: Vec<f64> = idx
            .iter()
            .map(|&i| metrics::edi_from_energies(&energies[i], edi_window).map(|m| m.value))
            .collect::<Result<_>>()?;
        let snr: Vec<f64> = idx.iter().map(|&i| records[i].effective_snr_db).collect();
        rows.push(BlocklengthFigureRow {
            n,
            snr_db: mean(&snr),
            ci_halfwidth_db: ci95_halfwidth(&snr),
            eedi_db: 10.0 * mean(&eedi).log10(),
            edi_db_shifted: 0.0,
        });
        edi_db.push(10.0 * mean(&edi).log10());
    }
    let shift = match (rows.last(), edi_db.last()) {
        (Some(r), Some(e)) => r.eedi_db - e,
        _ => 0.0,
    };
    for (row, e) in rows.iter_mut().zip(edi_db) {
        row.edi_db_shifted = e + shift;
    }
    Ok((rows, shift))
}
