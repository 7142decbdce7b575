use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(v − mean) / std` with the population standard deviation; all zeros when
/// the values do not vary.
pub fn zscore_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Invalid("cannot normalize an empty score list".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 || values.iter().all(|&v| v == values[0]) {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

/// Raw scores of one candidate from both experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertScores {
    pub passage_id: String,
    pub openqa: f64,
    pub coherence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedScores {
    pub openqa: f64,
    pub coherence: f64,
    pub s_final: f64,
}

/// Z-scores each expert over every candidate of every row, then sums them.
/// The output mirrors the shape of the input.
pub fn normalize_experts(rows: &[Vec<ExpertScores>]) -> Result<Vec<Vec<NormalizedScores>>> {
    let flat: Vec<&ExpertScores> = rows.iter().flatten().collect();
    if flat.is_empty() {
        return Ok(rows.iter().map(|_| Vec::new()).collect());
    }
    let zo = zscore_normalize(&flat.iter().map(|s| s.openqa).collect::<Vec<_>>())?;
    let zc = zscore_normalize(&flat.iter().map(|s| s.coherence).collect::<Vec<_>>())?;
    let mut k = 0;
    Ok(rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|_| {
                    let n = NormalizedScores {
                        openqa: zo[k],
                        coherence: zc[k],
                        s_final: zo[k] + zc[k],
                    };
                    k += 1;
                    n
                })
                .collect()
        })
        .collect())
}

/// Final scores closer than this are a tie; rescaling an expert moves
/// s_final by rounding noise only, which must not change the choice.
pub const TIE_EPS: f64 = 1e-9;

/// Index of the chosen candidate per row (`None` for rows without any):
/// highest `s_final`, ties (within [`TIE_EPS`]) to the smaller passage id.
pub fn select_final(rows: &[Vec<ExpertScores>]) -> Result<Vec<Option<usize>>> {
    let normalized = normalize_experts(rows)?;
    Ok(rows
        .iter()
        .zip(&normalized)
        .map(|(row, z)| {
            let best = z.iter().map(|s| s.s_final).fold(f64::NEG_INFINITY, f64::max);
            (0..row.len())
                .filter(|&i| z[i].s_final >= best - TIE_EPS)
                .min_by(|&a, &b| row[a].passage_id.cmp(&row[b].passage_id))
        })
        .collect())
}
