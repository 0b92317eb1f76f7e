//! Random channel generation, effective-channel composition, and uplink
//! simulation.
//!
//! Generated channels are IID Rayleigh with the Frobenius norms pinned
//! exactly per realization: `‖H0‖² = E0·M·K`, `‖H1‖² = M·N`, `‖H2‖² = N·K`.
//! Pinning per realization (rather than in expectation) keeps every
//! downstream test deterministic.

use crate::error::Error;
use crate::linalg::{standard_complex_gaussian, CMatrix, C64};
use crate::orthogonalizer::RsConfig;
use crate::rng::{stream_rng, CHANNEL_STREAM, NOISE_STREAM};
use crate::Result;

/// The channel triple `(H0, H1, H2)` for an `M`-antenna base station, `K`
/// users and an `N`-element surface, with normalized direct-channel power
/// `E0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    m: usize,
    k: usize,
    n: usize,
    e0: f64,
    h0: CMatrix,
    h1: CMatrix,
    h2: CMatrix,
}

impl ChannelSet {
    /// Builds a channel set from explicit matrices, checking dimensions only
    /// (callers providing fixtures own the normalization).
    pub fn from_parts(h0: CMatrix, h1: CMatrix, h2: CMatrix, e0: f64) -> Result<Self> {
        let (m, k) = (h0.nrows(), h0.ncols());
        let n = h1.ncols();
        if m <= k || k == 0 {
            return Err(Error::InvalidDims(format!("need M > K >= 1, got M={m}, K={k}")));
        }
        if h1.nrows() != m || h2.nrows() != n || h2.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "expected H1 {}x{} and H2 {}x{}, got {}x{} and {}x{}",
                m,
                n,
                n,
                k,
                h1.nrows(),
                h1.ncols(),
                h2.nrows(),
                h2.ncols()
            )));
        }
        if e0 < 0.0 || !e0.is_finite() {
            return Err(Error::InvalidDims(format!("E0 must be finite and >= 0, got {e0}")));
        }
        Ok(Self { m, k, n, e0, h0, h1, h2 })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    /// Direct channel, `M × K`.
    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    /// Base-station-to-surface channel, `M × N`.
    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    /// Surface-to-user channel, `N × K`.
    pub fn h2(&self) -> &CMatrix {
        &self.h2
    }
}

/// Received pilot/data block from the uplink simulator.
#[derive(Debug, Clone)]
pub struct RxBlock {
    /// Received samples, `M × slots`.
    pub samples: CMatrix,
    /// Per-entry complex noise power `N0`.
    pub noise_power: f64,
    /// Symbol energy `Es` the transmitted block was scaled with.
    pub symbol_energy: f64,
}

/// Draws an IID Rayleigh channel set with the Frobenius invariants enforced
/// exactly on this realization. Deterministic given `seed`.
pub fn generate_iid_rayleigh(
    m: usize,
    k: usize,
    n: usize,
    e0: f64,
    seed: u64,
) -> Result<ChannelSet> {
    if m <= k || k == 0 {
        return Err(Error::InvalidDims(format!("need M > K >= 1, got M={m}, K={k}")));
    }
    if n == 0 {
        return Err(Error::InvalidDims("need N >= 1".into()));
    }
    if e0 < 0.0 || !e0.is_finite() {
        return Err(Error::InvalidDims(format!("E0 must be finite and >= 0, got {e0}")));
    }
    let mut rng = stream_rng(seed, CHANNEL_STREAM);
    let h0 = rescale_to_power(
        standard_complex_gaussian(m, k, &mut rng),
        e0 * (m * k) as f64,
    );
    let h1 = rescale_to_power(standard_complex_gaussian(m, n, &mut rng), (m * n) as f64);
    let h2 = rescale_to_power(standard_complex_gaussian(n, k, &mut rng), (n * k) as f64);
    ChannelSet::from_parts(h0, h1, h2, e0)
}

/// Rescales so `‖a‖²_fro` equals `target_sq` exactly (zero target gives the
/// zero matrix).
fn rescale_to_power(a: CMatrix, target_sq: f64) -> CMatrix {
    let cur = a.norm_squared();
    if target_sq == 0.0 || cur == 0.0 {
        return CMatrix::zeros(a.nrows(), a.ncols());
    }
    let s = (target_sq / cur).sqrt();
    a.map(|z| z * s)
}

/// Effective channel `H = H0 + H1·Θ·H2` for the given surface configuration.
pub fn effective_channel(cs: &ChannelSet, theta: &RsConfig) -> Result<CMatrix> {
    if theta.n() != cs.n() {
        return Err(Error::DimensionMismatch(format!(
            "surface has {} elements, channel set expects {}",
            theta.n(),
            cs.n()
        )));
    }
    Ok(match theta {
        RsConfig::Ris { phases } => {
            let scaled = scale_rows_by(&cs.h2, phases.iter().map(|&p| C64::new(p.cos(), p.sin())));
            &cs.h0 + &cs.h1 * scaled
        }
        RsConfig::Aris { gains } => {
            let scaled = scale_rows_by(&cs.h2, gains.iter().copied());
            &cs.h0 + &cs.h1 * scaled
        }
        RsConfig::Fris { theta } => &cs.h0 + &cs.h1 * theta * &cs.h2,
    })
}

/// Left-multiplies by a diagonal: row `i` of `a` scaled by the `i`-th weight.
fn scale_rows_by(a: &CMatrix, weights: impl Iterator<Item = C64>) -> CMatrix {
    let mut out = a.clone();
    for (i, w) in weights.enumerate() {
        for j in 0..out.ncols() {
            out[(i, j)] *= w;
        }
    }
    out
}

/// Simulates `Y = H·S + N` with IID complex Gaussian noise of per-entry
/// variance `n0`; `n0 = 0` returns the exact product.
pub fn simulate_uplink(h: &CMatrix, s: &CMatrix, n0: f64, seed: u64) -> Result<RxBlock> {
    if h.ncols() != s.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{} but symbol block has {} rows",
            h.nrows(),
            h.ncols(),
            s.nrows()
        )));
    }
    if n0 < 0.0 || !n0.is_finite() {
        return Err(Error::InvalidDims(format!("N0 must be finite and >= 0, got {n0}")));
    }
    let mut samples = h * s;
    if n0 > 0.0 {
        let mut rng = stream_rng(seed, NOISE_STREAM);
        let noise = standard_complex_gaussian(h.nrows(), s.ncols(), &mut rng);
        let sigma = n0.sqrt();
        samples += noise.map(|z| z * sigma);
    }
    Ok(RxBlock {
        samples,
        noise_power: n0,
        symbol_energy: 1.0,
    })
}

/// Post-processed SNR per user after matched filtering: `β·Es/N0`.
pub fn post_snr(beta: f64, es: f64, n0: f64) -> f64 {
    beta * es / n0
}
