//! Probabilistic amplitude shaping front end.
//!
//! Amplitudes are produced by a constant composition distribution matcher
//! (CCDM) realised as exact lexicographic ranking/unranking of multiset
//! permutations over big integers. In-phase and quadrature amplitudes come
//! from independent bit streams; signs are uniform and independent.

use std::io::{Read, Write};

use num_bigint::BigUint;
use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// Stream identifiers used to split one seed into independent generators.
const STREAM_BITS_I: u64 = 0;
const STREAM_BITS_Q: u64 = 1;
const STREAM_SIGNS: u64 = 2;

/// Shaped amplitude levels together with their target probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeAlphabet {
    levels: Vec<f64>,
    probabilities: Vec<f64>,
}

impl AmplitudeAlphabet {
    pub fn new(levels: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidAlphabet("no levels".into()));
        }
        if levels.len() != probabilities.len() {
            return Err(Error::InvalidAlphabet(format!(
                "{} levels but {} probabilities",
                levels.len(),
                probabilities.len()
            )));
        }
        if levels.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidAlphabet("levels must be positive and finite".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidAlphabet("levels must be strictly increasing".into()));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidAlphabet("probabilities must be non-negative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::InvalidAlphabet(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { levels, probabilities })
    }

    /// Amplitudes {1, 3, 5, 7} with probabilities [0.4, 0.3, 0.2, 0.1]:
    /// one quadrature of shaped 64-QAM.
    pub fn qam64_reference() -> Self {
        Self::new(vec![1.0, 3.0, 5.0, 7.0], vec![0.4, 0.3, 0.2, 0.1])
            .expect("reference alphabet is valid")
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Entropy of the amplitude distribution in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.probabilities
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }
}

/// Exact per-level counts of one CCDM block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    counts: Vec<usize>,
    blocklength: usize,
}

impl Composition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let blocklength = counts.iter().sum();
        if counts.is_empty() {
            return Err(Error::InvalidParameter("composition has no levels".into()));
        }
        Ok(Self { counts, blocklength })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn blocklength(&self) -> usize {
        self.blocklength
    }

    /// Number of distinct sequences with this composition,
    /// `n! / prod(counts_i!)`, computed exactly.
    pub fn num_sequences(&self) -> BigUint {
        ccdm_num_sequences(self)
    }

    /// Number of bits one block carries: `floor(log2(num_sequences))`.
    pub fn num_bits(&self) -> usize {
        let total = self.num_sequences();
        (total.bits() - 1) as usize
    }

    /// Matching rate in bits per amplitude.
    pub fn rate(&self) -> f64 {
        if self.blocklength == 0 {
            return 0.0;
        }
        self.num_bits() as f64 / self.blocklength as f64
    }
}

/// One CCDM output block, stored as indices into the alphabet levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmplitudeBlock {
    indices: Vec<usize>,
}

impl AmplitudeBlock {
    pub fn from_indices(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Amplitude values of this block under `alphabet`.
    pub fn levels(&self, alphabet: &AmplitudeAlphabet) -> Vec<f64> {
        self.indices.iter().map(|&i| alphabet.levels[i]).collect()
    }

    /// Per-level histogram with `num_levels` bins.
    pub fn counts(&self, num_levels: usize) -> Vec<usize> {
        let mut counts = vec![0; num_levels];
        for &i in &self.indices {
            if i < num_levels {
                counts[i] += 1;
            }
        }
        counts
    }
}

/// Complex baseband symbol stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence<T> {
    pub symbols: Vec<Complex<T>>,
    /// CCDM blocklength that produced the stream (0 when unknown).
    pub blocklength: usize,
    pub seed: u64,
}

impl<T: Real> SymbolSequence<T> {
    pub fn new(symbols: Vec<Complex<T>>) -> Self {
        Self { symbols, blocklength: 0, seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.symbols.truncate(len);
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_symbols_csv(writer, &self.symbols)
    }
}

/// Largest-remainder apportionment of `n` amplitudes to the alphabet
/// probabilities. Ties in the remainder go to the lower level index.
pub fn compute_composition(alphabet: &AmplitudeAlphabet, n: usize) -> Result<Composition> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
    }
    let targets: Vec<f64> = alphabet.probabilities.iter().map(|&p| p * n as f64).collect();
    let mut counts: Vec<usize> = targets.iter().map(|&t| (t + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut remaining = n.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..targets.len()).collect();
    let remainder = |i: usize| (targets[i] - counts[i] as f64).max(0.0);
    // remainders quantised so float noise cannot break ties; the stable
    // sort keeps lower indices first among equal remainders
    let keys: Vec<i64> = order.iter().map(|&i| (remainder(i) * 1e9).round() as i64).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(keys[i]));
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    Composition::new(counts)
}

/// Multinomial coefficient `n! / prod(counts_i!)` in arbitrary precision.
pub fn ccdm_num_sequences(composition: &Composition) -> BigUint {
    let mut total = BigUint::one();
    let mut placed: u64 = 0;
    for &c in &composition.counts {
        for t in 1..=c as u64 {
            placed += 1;
            total *= placed;
            total /= t;
        }
    }
    total
}

fn bits_to_biguint(bits: &[bool]) -> BigUint {
    let mut bytes = Vec::with_capacity(bits.len().div_ceil(8));
    let lead = bits.len() % 8;
    let mut acc = 0u8;
    for (i, &b) in bits.iter().enumerate() {
        acc = (acc << 1) | b as u8;
        let consumed = i + 1;
        if consumed == lead || (consumed > lead && (consumed - lead) % 8 == 0) {
            bytes.push(acc);
            acc = 0;
        }
    }
    if bytes.is_empty() {
        return BigUint::zero();
    }
    BigUint::from_bytes_be(&bytes)
}

fn biguint_to_bits(value: &BigUint, len: usize) -> Vec<bool> {
    (0..len).map(|i| value.bit((len - 1 - i) as u64)).collect()
}

/// Maps `bits` (most significant first) to the multiset permutation of that
/// lexicographic rank.
pub fn ccdm_encode(bits: &[bool], composition: &Composition) -> Result<AmplitudeBlock> {
    let mut remaining_total = ccdm_num_sequences(composition);
    let k = (remaining_total.bits() - 1) as usize;
    if bits.len() != k {
        return Err(Error::InputLength { expected: k, got: bits.len() });
    }
    let mut index = bits_to_biguint(bits);
    let mut counts = composition.counts.clone();
    let n = composition.blocklength;
    let mut out = Vec::with_capacity(n);

    for pos in 0..n {
        let left = (n - pos) as u64;
        let mut chosen = None;
        for (level, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            // sequences starting with `level`
            let with_prefix = &remaining_total * c as u64 / left;
            if index < with_prefix {
                remaining_total = with_prefix;
                chosen = Some(level);
                break;
            }
            index -= with_prefix;
        }
        let level = chosen.expect("rank below multinomial total always resolves");
        counts[level] -= 1;
        out.push(level);
    }
    Ok(AmplitudeBlock { indices: out })
}

/// Inverse of [`ccdm_encode`].
pub fn ccdm_decode(block: &AmplitudeBlock, composition: &Composition) -> Result<Vec<bool>> {
    let num_levels = composition.counts.len();
    if block.indices.len() != composition.blocklength
        || block.counts(num_levels) != composition.counts
        || block.indices.iter().any(|&i| i >= num_levels)
    {
        return Err(Error::InvalidBlock(format!(
            "histogram {:?} differs from composition {:?}",
            block.counts(num_levels),
            composition.counts
        )));
    }
    let mut remaining_total = ccdm_num_sequences(composition);
    let k = (remaining_total.bits() - 1) as usize;
    let mut counts = composition.counts.clone();
    let n = composition.blocklength;
    let mut rank = BigUint::zero();

    for (pos, &level) in block.indices.iter().enumerate() {
        let left = (n - pos) as u64;
        for &c in counts.iter().take(level) {
            if c > 0 {
                rank += &remaining_total * c as u64 / left;
            }
        }
        remaining_total = &remaining_total * counts[level] as u64 / left;
        counts[level] -= 1;
    }
    if rank.bits() as usize > k {
        return Err(Error::RankOutOfRange { bits: k });
    }
    Ok(biguint_to_bits(&rank, k))
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.random::<bool>()).collect()
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent 64-bit seed from `seed` for sub-task `tag`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = stream_rng(seed, tag.wrapping_add(1 << 32));
    rng.random()
}

/// Concatenates `num_blocks` CCDM blocks per quadrature from seeded random
/// bits and attaches uniform random signs.
pub fn generate_shaped_symbols<T: Real>(
    alphabet: &AmplitudeAlphabet,
    n: usize,
    num_blocks: usize,
    seed: u64,
) -> Result<SymbolSequence<T>> {
    if num_blocks == 0 {
        return Err(Error::InvalidParameter("num_blocks must be at least 1".into()));
    }
    let composition = compute_composition(alphabet, n)?;
    let k = composition.num_bits();
    let levels: Vec<T> = alphabet.levels.iter().map(|&a| T::of(a)).collect();

    let amplitudes = |stream: u64| -> Result<Vec<T>> {
        let mut rng = stream_rng(seed, stream);
        let mut out = Vec::with_capacity(n * num_blocks);
        for _ in 0..num_blocks {
            let bits = random_bits(&mut rng, k);
            let block = ccdm_encode(&bits, &composition)?;
            out.extend(block.indices.iter().map(|&i| levels[i]));
        }
        Ok(out)
    };
    let in_phase = amplitudes(STREAM_BITS_I)?;
    let quadrature = amplitudes(STREAM_BITS_Q)?;

    let mut signs = stream_rng(seed, STREAM_SIGNS);
    let symbols = in_phase
        .into_iter()
        .zip(quadrature)
        .map(|(a_i, a_q)| {
            let s_i = if signs.random::<bool>() { a_i } else { -a_i };
            let s_q = if signs.random::<bool>() { a_q } else { -a_q };
            Complex::new(s_i, s_q)
        })
        .collect();

    Ok(SymbolSequence { symbols, blocklength: n, seed })
}

#[derive(Serialize, Deserialize)]
struct SymbolRow {
    index: usize,
    re: f64,
    im: f64,
}

/// Writes `index,re,im` rows with a header.
pub fn write_symbols_csv<T: Real, W: Write>(writer: W, symbols: &[Complex<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (index, s) in symbols.iter().enumerate() {
        w.serialize(SymbolRow { index, re: s.re.as_f64(), im: s.im.as_f64() })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `index,re,im` CSV back into symbols, ordered by row.
pub fn read_symbols_csv<T: Real, R: Read>(reader: R) -> Result<Vec<Complex<T>>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize::<SymbolRow>() {
        let row = row?;
        out.push(Complex::new(T::of(row.re), T::of(row.im)));
    }
    Ok(out)
}
