//! Structured text (JSON) serialization for fixtures and forwarded
//! configurations.
//!
//! Field names are part of the format:
//!
//! - channel set: `{"m", "k", "n", "e0", "h0", "h1", "h2"}`
//! - surface config: `{"kind": "ris", "phases": [..]}`,
//!   `{"kind": "aris", "gains": [[re, im], ..]}`, or
//!   `{"kind": "fris", "theta": <matrix>}`
//! - estimation report: `{"h0_hat", "cascade_hat"` or `"h1_hat"/"h2_hat",
//!   "config", "pilot_slots_used", "residual"}`
//!
//! Matrices are nested arrays of `[re, im]` pairs in row order.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::Error;
use crate::estimation::{EstimatedQuantities, EstimationReport};
use crate::linalg::{CMatrix, C64};
use crate::orthogonalizer::RsConfig;
use crate::Result;

type MatrixRows = Vec<Vec<[f64; 2]>>;

fn matrix_to_rows(a: &CMatrix) -> MatrixRows {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_rows(rows: &MatrixRows, what: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Parse(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{what}: ragged or empty rows")));
    }
    let mut m = CMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Parse(format!("{what}: non-finite entry at ({i},{j})")));
            }
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

#[derive(Serialize, Deserialize)]
struct ChannelSetDto {
    m: usize,
    k: usize,
    n: usize,
    e0: f64,
    h0: MatrixRows,
    h1: MatrixRows,
    h2: MatrixRows,
}

/// Serializes a channel set to the documented JSON schema.
pub fn channel_set_to_json(cs: &ChannelSet) -> String {
    let dto = ChannelSetDto {
        m: cs.m(),
        k: cs.k(),
        n: cs.n(),
        e0: cs.e0(),
        h0: matrix_to_rows(cs.h0()),
        h1: matrix_to_rows(cs.h1()),
        h2: matrix_to_rows(cs.h2()),
    };
    serde_json::to_string_pretty(&dto).expect("channel set serialization")
}

/// Parses a channel set, validating declared against actual dimensions.
pub fn channel_set_from_json(text: &str) -> Result<ChannelSet> {
    let dto: ChannelSetDto =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("channel set: {e}")))?;
    let h0 = matrix_from_rows(&dto.h0, "h0")?;
    let h1 = matrix_from_rows(&dto.h1, "h1")?;
    let h2 = matrix_from_rows(&dto.h2, "h2")?;
    if h0.shape() != (dto.m, dto.k) || h1.shape() != (dto.m, dto.n) || h2.shape() != (dto.n, dto.k)
    {
        return Err(Error::Parse(
            "declared dimensions do not match matrix shapes".into(),
        ));
    }
    ChannelSet::from_parts(h0, h1, h2, dto.e0)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RsConfigDto {
    Ris { phases: Vec<f64> },
    Aris { gains: Vec<[f64; 2]> },
    Fris { theta: MatrixRows },
}

/// Serializes a surface configuration (the "forwarded" message).
pub fn rs_config_to_json(config: &RsConfig) -> String {
    let dto = match config {
        RsConfig::Ris { phases } => RsConfigDto::Ris {
            phases: phases.clone(),
        },
        RsConfig::Aris { gains } => RsConfigDto::Aris {
            gains: gains.iter().map(|g| [g.re, g.im]).collect(),
        },
        RsConfig::Fris { theta } => RsConfigDto::Fris {
            theta: matrix_to_rows(theta),
        },
    };
    serde_json::to_string_pretty(&dto).expect("config serialization")
}

/// Parses a surface configuration.
pub fn rs_config_from_json(text: &str) -> Result<RsConfig> {
    let dto: RsConfigDto =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("surface config: {e}")))?;
    Ok(match dto {
        RsConfigDto::Ris { phases } => {
            if phases.iter().any(|p| !p.is_finite()) {
                return Err(Error::Parse("phases must be finite".into()));
            }
            RsConfig::Ris { phases }
        }
        RsConfigDto::Aris { gains } => RsConfig::Aris {
            gains: gains.iter().map(|&[re, im]| C64::new(re, im)).collect(),
        },
        RsConfigDto::Fris { theta } => {
            let theta = matrix_from_rows(&theta, "theta")?;
            if theta.nrows() != theta.ncols() {
                return Err(Error::Parse("theta must be square".into()));
            }
            RsConfig::Fris { theta }
        }
    })
}

#[derive(Serialize, Deserialize)]
struct EstimationReportDto {
    h0_hat: MatrixRows,
    #[serde(skip_serializing_if = "Option::is_none")]
    cascade_hat: Option<MatrixRows>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h1_hat: Option<MatrixRows>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h2_hat: Option<MatrixRows>,
    config: RsConfigDto,
    pilot_slots_used: usize,
    residual: f64,
}

/// Serializes a protocol run report.
pub fn estimation_report_to_json(report: &EstimationReport) -> String {
    let (cascade_hat, h1_hat, h2_hat) = match &report.quantities {
        EstimatedQuantities::Aris { cascade_hat } => (Some(matrix_to_rows(cascade_hat)), None, None),
        EstimatedQuantities::Fris { h1_hat, h2_hat } => {
            (None, Some(matrix_to_rows(h1_hat)), Some(matrix_to_rows(h2_hat)))
        }
    };
    let config: RsConfigDto = match &report.config {
        RsConfig::Ris { phases } => RsConfigDto::Ris {
            phases: phases.clone(),
        },
        RsConfig::Aris { gains } => RsConfigDto::Aris {
            gains: gains.iter().map(|g| [g.re, g.im]).collect(),
        },
        RsConfig::Fris { theta } => RsConfigDto::Fris {
            theta: matrix_to_rows(theta),
        },
    };
    let dto = EstimationReportDto {
        h0_hat: matrix_to_rows(&report.h0_hat),
        cascade_hat,
        h1_hat,
        h2_hat,
        config,
        pilot_slots_used: report.pilot_slots_used,
        residual: report.residual,
    };
    serde_json::to_string_pretty(&dto).expect("report serialization")
}

/// Parses a protocol run report.
pub fn estimation_report_from_json(text: &str) -> Result<EstimationReport> {
    let dto: EstimationReportDto =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))?;
    let h0_hat = matrix_from_rows(&dto.h0_hat, "h0_hat")?;
    let quantities = match (&dto.cascade_hat, &dto.h1_hat, &dto.h2_hat) {
        (Some(cascade), None, None) => EstimatedQuantities::Aris {
            cascade_hat: matrix_from_rows(cascade, "cascade_hat")?,
        },
        (None, Some(h1), Some(h2)) => EstimatedQuantities::Fris {
            h1_hat: matrix_from_rows(h1, "h1_hat")?,
            h2_hat: matrix_from_rows(h2, "h2_hat")?,
        },
        _ => {
            return Err(Error::Parse(
                "report must carry either cascade_hat or h1_hat/h2_hat".into(),
            ))
        }
    };
    let config_json = serde_json::to_string(&dto.config).expect("round-trip");
    let config = rs_config_from_json(&config_json)?;
    Ok(EstimationReport {
        h0_hat,
        quantities,
        config,
        pilot_slots_used: dto.pilot_slots_used,
        residual: dto.residual,
    })
}
