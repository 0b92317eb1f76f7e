//! Pilot-based protocols by which the base station estimates the quantities
//! it needs, computes the surface configuration, and "forwards" it.
//!
//! The diagonal-surface protocol estimates the direct channel (surface off,
//! `K` user pilots) and then the cascade matrix one element at a time (`N·K`
//! pilots), never observing `H1` or `H2` individually — everything flows
//! through [`effective_channel`] and [`simulate_uplink`]. The full-matrix
//! protocol additionally has the surface itself transmit `N` pilots and then
//! recovers the surface-to-user channel in blocks of `M` elements.
//!
//! Estimators are plain least squares (received block times the inverse of
//! the known pilot matrix), with a best rank-1 truncation for the cascade
//! columns. Noise left correlated by the direct-channel cancellation is not
//! whitened; the report's residual carries the consequence.

use crate::channel::{effective_channel, simulate_uplink, ChannelSet};
use crate::error::Error;
use crate::linalg::{left_pinv, vec, CMatrix, C64};
use crate::orthogonalizer::{
    min_elements, relative_residual, solve_aris_for_matrix, solve_fris_for_matrix, RsConfig,
    SurfaceKind, TargetChannel,
};
use crate::rng::derive_seed;
use crate::Result;

const TAG_H0: u64 = 0xE0;
const TAG_CASCADE: u64 = 0xE1;
const TAG_FRIS_H1: u64 = 0xE2;
const TAG_FRIS_H2: u64 = 0xE3;

/// Reciprocal-condition floor for the per-block inversion of the estimated
/// base-station-to-surface channel.
const BLOCK_RCOND_FLOOR: f64 = 1e-10;

/// Known pilot setup shared by every protocol step.
#[derive(Debug, Clone)]
pub struct PilotPlan {
    pilot_matrix: CMatrix,
    n0: f64,
    es: f64,
}

impl PilotPlan {
    /// `K × K` invertible pilot matrix, noise power and symbol energy.
    pub fn new(pilot_matrix: CMatrix, n0: f64, es: f64) -> Result<Self> {
        if pilot_matrix.nrows() != pilot_matrix.ncols() || pilot_matrix.nrows() == 0 {
            return Err(Error::InvalidDims(format!(
                "pilot matrix must be square and nonempty, got {}x{}",
                pilot_matrix.nrows(),
                pilot_matrix.ncols()
            )));
        }
        if pilot_matrix.clone().try_inverse().is_none() {
            return Err(Error::InvalidDims("pilot matrix must be invertible".into()));
        }
        if n0 < 0.0 || !n0.is_finite() {
            return Err(Error::InvalidDims(format!("N0 must be finite and >= 0, got {n0}")));
        }
        if !(es > 0.0) || !es.is_finite() {
            return Err(Error::InvalidDims(format!("Es must be finite and > 0, got {es}")));
        }
        Ok(Self { pilot_matrix, n0, es })
    }

    /// Identity pilots for `k` users.
    pub fn identity(k: usize, n0: f64, es: f64) -> Result<Self> {
        Self::new(CMatrix::identity(k, k), n0, es)
    }

    pub fn pilot_matrix(&self) -> &CMatrix {
        &self.pilot_matrix
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn k(&self) -> usize {
        self.pilot_matrix.nrows()
    }

    /// Transmitted user pilot block `√Es·P`.
    fn tx_block(&self) -> CMatrix {
        let amp = self.es.sqrt();
        self.pilot_matrix.map(|z| z * amp)
    }

    /// Inverse of the transmitted block, for least-squares estimation.
    fn tx_block_inv(&self) -> CMatrix {
        self.tx_block()
            .try_inverse()
            .expect("invertibility checked at construction")
    }
}

/// Pilot budget of a protocol: an exact count for the surfaces with a
/// defined scheme, a lower bound for the phase-only baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotCount {
    Exact(usize),
    LowerBound(usize),
}

impl PilotCount {
    pub fn value(&self) -> usize {
        match self {
            PilotCount::Exact(v) | PilotCount::LowerBound(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PilotCount::Exact(_))
    }
}

/// Pilot slots needed per surface kind: `(N+1)·K` for the diagonal surface,
/// `(1 + ⌈N/M⌉)·K + N` for the full-matrix surface, and at least
/// `M·K + N·(M+K)` for independent estimation with a phase-only surface.
pub fn pilot_count(kind: SurfaceKind, m: usize, k: usize, n: usize) -> PilotCount {
    match kind {
        SurfaceKind::Aris => PilotCount::Exact((n + 1) * k),
        SurfaceKind::Fris => PilotCount::Exact((1 + n.div_ceil(m)) * k + n),
        SurfaceKind::Ris => PilotCount::LowerBound(m * k + n * (m + k)),
    }
}

/// Which quantities a protocol run estimated.
#[derive(Debug, Clone)]
pub enum EstimatedQuantities {
    /// The `MK × N` cascade matrix (diagonal-surface protocol).
    Aris { cascade_hat: CMatrix },
    /// Both hop channels (full-matrix-surface protocol).
    Fris { h1_hat: CMatrix, h2_hat: CMatrix },
}

/// Everything a completed protocol run produced.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub h0_hat: CMatrix,
    pub quantities: EstimatedQuantities,
    pub config: RsConfig,
    pub pilot_slots_used: usize,
    /// `‖achieved − √β·Ũ‖ / ‖√β·Ũ‖` against the *true* channels.
    pub residual: f64,
}

/// Step 1 of both protocols: surface off, `K` user pilots, least-squares
/// estimate `Ĥ0 = Y·(√Es·P)⁻¹`. Exact when `N0 = 0`.
pub fn estimate_h0(cs: &ChannelSet, plan: &PilotPlan, seed: u64) -> Result<CMatrix> {
    check_plan_dims(cs, plan)?;
    let off = RsConfig::Aris {
        gains: vec![C64::new(0.0, 0.0); cs.n()],
    };
    let h = effective_channel(cs, &off)?;
    let rx = simulate_uplink(&h, &plan.tx_block(), plan.n0(), derive_seed(seed, &[TAG_H0]))?;
    Ok(rx.samples * plan.tx_block_inv())
}

/// Step 2 of the diagonal-surface protocol: activate one element at a time,
/// cancel the estimated direct channel, and take the best rank-1
/// approximation of each element's response. Returns the `MK × N` cascade
/// estimate; uses `N·K` pilot slots.
pub fn aris_estimate_cascade(
    cs: &ChannelSet,
    h0_hat: &CMatrix,
    plan: &PilotPlan,
    seed: u64,
) -> Result<CMatrix> {
    check_plan_dims(cs, plan)?;
    if h0_hat.shape() != (cs.m(), cs.k()) {
        return Err(Error::DimensionMismatch(format!(
            "direct-channel estimate is {}x{}, expected {}x{}",
            h0_hat.nrows(),
            h0_hat.ncols(),
            cs.m(),
            cs.k()
        )));
    }
    let (m, k, n) = (cs.m(), cs.k(), cs.n());
    let tx = plan.tx_block();
    let tx_inv = plan.tx_block_inv();
    let cancel = h0_hat * &tx;
    let mut cascade = CMatrix::zeros(m * k, n);
    for element in 0..n {
        let mut gains = vec![C64::new(0.0, 0.0); n];
        gains[element] = C64::new(1.0, 0.0);
        let h = effective_channel(cs, &RsConfig::Aris { gains })?;
        let rx = simulate_uplink(&h, &tx, plan.n0(), derive_seed(seed, &[TAG_CASCADE, element as u64]))?;
        let response = (rx.samples - &cancel) * &tx_inv;
        let rank1 = best_rank_one(&response);
        cascade.column_mut(element).copy_from(&vec(&rank1).column(0));
    }
    Ok(cascade)
}

/// Best rank-1 approximation (dominant singular triple).
fn best_rank_one(a: &CMatrix) -> CMatrix {
    let svd = nalgebra::SVD::new(a.clone(), true, true);
    let (idx, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.partial_cmp(y.1).expect("finite singular values"))
        .expect("nonempty singular spectrum");
    let u = svd.u.as_ref().expect("svd with u").column(idx).into_owned();
    let v_row = svd.v_t.as_ref().expect("svd with v_t").row(idx).into_owned();
    (u * v_row).map(|z| z * sigma)
}

/// Full-matrix-surface step 2: the surface transmits `N` orthogonal pilots;
/// least-squares estimate of the `M × N` hop `H1`. Uses `N` slots.
pub fn fris_estimate_h1(cs: &ChannelSet, plan: &PilotPlan, seed: u64) -> Result<CMatrix> {
    let amp = plan.es().sqrt();
    let pilots = CMatrix::identity(cs.n(), cs.n()).map(|z| z * amp);
    let rx = simulate_uplink(cs.h1(), &pilots, plan.n0(), derive_seed(seed, &[TAG_FRIS_H1]))?;
    Ok(rx.samples.map(|z| z / amp))
}

/// Full-matrix-surface step 3: fix each group of `M` elements to one,
/// cancel the direct channel, and invert the corresponding `M × M` block of
/// the `H1` estimate (left pseudo-inverse for the cropped last block).
/// Returns the `N × K` estimate of `H2`; uses `⌈N/M⌉·K` slots.
pub fn fris_estimate_h2(
    cs: &ChannelSet,
    h0_hat: &CMatrix,
    h1_hat: &CMatrix,
    plan: &PilotPlan,
    seed: u64,
) -> Result<CMatrix> {
    check_plan_dims(cs, plan)?;
    if h1_hat.shape() != (cs.m(), cs.n()) {
        return Err(Error::DimensionMismatch(format!(
            "H1 estimate is {}x{}, expected {}x{}",
            h1_hat.nrows(),
            h1_hat.ncols(),
            cs.m(),
            cs.n()
        )));
    }
    let (m, k, n) = (cs.m(), cs.k(), cs.n());
    let blocks = n.div_ceil(m);
    let tx = plan.tx_block();
    let tx_inv = plan.tx_block_inv();
    let cancel = h0_hat * &tx;
    let mut h2_hat = CMatrix::zeros(n, k);
    for block in 0..blocks {
        let start = block * m;
        let width = m.min(n - start);
        let h1_block = h1_hat.columns(start, width).into_owned();
        let rcond = block_rcond(&h1_block);
        if rcond < BLOCK_RCOND_FLOOR {
            return Err(Error::IllConditionedBlock {
                block: block + 1,
                rcond,
            });
        }
        let mut theta = CMatrix::zeros(n, n);
        for i in start..start + width {
            theta[(i, i)] = C64::new(1.0, 0.0);
        }
        let h = effective_channel(cs, &RsConfig::Fris { theta })?;
        let rx = simulate_uplink(&h, &tx, plan.n0(), derive_seed(seed, &[TAG_FRIS_H2, block as u64]))?;
        let observed = (rx.samples - &cancel) * &tx_inv;
        let h2_block = left_pinv(&h1_block)? * observed;
        h2_hat.rows_mut(start, width).copy_from(&h2_block);
    }
    Ok(h2_hat)
}

fn block_rcond(a: &CMatrix) -> f64 {
    let svd = nalgebra::SVD::new(a.clone(), false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smax == 0.0 {
        0.0
    } else {
        smin / smax
    }
}

/// Runs the full protocol for the requested surface kind: estimates, solves
/// for the configuration from the estimates alone, applies it to the true
/// channels, and accounts every pilot slot.
pub fn end_to_end_configure(
    cs: &ChannelSet,
    kind: SurfaceKind,
    target: &TargetChannel,
    plan: &PilotPlan,
    seed: u64,
) -> Result<EstimationReport> {
    let required = min_elements(kind, cs.m(), cs.k())?;
    if cs.n() < required {
        return Err(Error::InfeasibleN {
            n: cs.n(),
            required,
        });
    }
    let desired = target.matrix();
    let (h0_hat, quantities, config, slots) = match kind {
        SurfaceKind::Aris => {
            let h0_hat = estimate_h0(cs, plan, seed)?;
            let cascade_hat = aris_estimate_cascade(cs, &h0_hat, plan, seed)?;
            let gains = solve_aris_for_matrix(&cascade_hat, &h0_hat, &desired)?;
            let slots = cs.k() + cs.n() * cs.k();
            (
                h0_hat,
                EstimatedQuantities::Aris { cascade_hat },
                RsConfig::Aris { gains },
                slots,
            )
        }
        SurfaceKind::Fris => {
            let h0_hat = estimate_h0(cs, plan, seed)?;
            let h1_hat = fris_estimate_h1(cs, plan, seed)?;
            let h2_hat = fris_estimate_h2(cs, &h0_hat, &h1_hat, plan, seed)?;
            let theta = solve_fris_for_matrix(&h0_hat, &h1_hat, &h2_hat, &desired)?;
            let slots = cs.k() + cs.n() + cs.n().div_ceil(cs.m()) * cs.k();
            (
                h0_hat,
                EstimatedQuantities::Fris { h1_hat, h2_hat },
                RsConfig::Fris { theta },
                slots,
            )
        }
        SurfaceKind::Ris => unreachable!("min_elements rejects the phase-only surface"),
    };
    debug_assert_eq!(slots, pilot_count(kind, cs.m(), cs.k(), cs.n()).value());
    let achieved = effective_channel(cs, &config)?;
    Ok(EstimationReport {
        h0_hat,
        quantities,
        config,
        pilot_slots_used: slots,
        residual: relative_residual(&achieved, &desired),
    })
}

fn check_plan_dims(cs: &ChannelSet, plan: &PilotPlan) -> Result<()> {
    if plan.k() != cs.k() {
        return Err(Error::DimensionMismatch(format!(
            "pilot matrix is for {} users, channel set has {}",
            plan.k(),
            cs.k()
        )));
    }
    Ok(())
}
