//! Evaluating the inequality, the Venn-area argument, and the angle scan.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::lhv::{
    lhv_p_same, model_from_triplet_distribution, validate_triplet_weights, TripletWeights,
};
use crate::quantum::{basis_from_angle, bell_record, make_phi_plus, CorrelationRecord};
use crate::{BellError, Result, Setting, PROB_TOL};

/// Returns the Bell sum and whether it respects `sum >= 1`.
pub fn bell_sum_check(record: &CorrelationRecord) -> Result<(f64, bool)> {
    for (name, p) in ["p_same_ab", "p_same_ac", "p_same_bc"]
        .iter()
        .zip(record.pairs())
    {
        if !p.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
            return Err(BellError::InvalidArgument(format!(
                "{name} = {p} is not a probability"
            )));
        }
    }
    let sum: f64 = record.pairs().iter().sum();
    Ok((sum, sum >= 1.0 - PROB_TOL))
}

/// Region masses of the area proof for a distribution over triplets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VennAreas {
    /// a = b
    pub dashed: f64,
    /// a = c
    pub gray: f64,
    /// a ≠ b and a ≠ c
    pub dotted: f64,
    /// a = b and a = c
    pub overlap: f64,
    /// Mass left uncovered by the three regions; zero up to rounding.
    pub residual: f64,
}

pub fn venn_decomposition(weights: &TripletWeights) -> Result<VennAreas> {
    validate_triplet_weights(weights)?;
    let mut areas = VennAreas {
        dashed: 0.0,
        gray: 0.0,
        dotted: 0.0,
        overlap: 0.0,
        residual: 0.0,
    };
    for (t, &w) in weights {
        let ab = t.a == t.b;
        let ac = t.a == t.c;
        if ab {
            areas.dashed += w;
        }
        if ac {
            areas.gray += w;
        }
        if ab && ac {
            areas.overlap += w;
        }
        if !ab && !ac {
            areas.dotted += w;
        }
    }
    let total: f64 = weights.values().sum();
    areas.residual = total - (areas.dashed + areas.gray - areas.overlap) - areas.dotted;
    Ok(areas)
}

/// Each inequality of the area argument, evaluated term by term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VennChain {
    pub record: CorrelationRecord,
    pub areas: VennAreas,
    /// dashed + gray + dotted
    pub region_sum: f64,
    /// P_same(B,C) >= dotted
    pub bc_covers_dotted: bool,
    /// P_same sum >= dashed + gray + dotted
    pub sum_covers_regions: bool,
    /// dashed + gray + dotted >= 1
    pub regions_cover_circle: bool,
}

impl VennChain {
    pub fn holds(&self) -> bool {
        self.bc_covers_dotted && self.sum_covers_regions && self.regions_cover_circle
    }
}

/// Runs the area argument: correlations come from the hidden-variable
/// model built from `weights`, regions from direct counting.
pub fn venn_bound_chain(weights: &TripletWeights) -> Result<VennChain> {
    let areas = venn_decomposition(weights)?;
    let model = model_from_triplet_distribution(weights)?;
    let [ab, ac, bc] = Setting::BELL_PAIRS.map(|(x, y)| lhv_p_same(&model, x, y));
    let record = CorrelationRecord::new(ab, ac, bc);
    let region_sum = areas.dashed + areas.gray + areas.dotted;
    Ok(VennChain {
        record,
        areas,
        region_sum,
        bc_covers_dotted: record.p_same_bc >= areas.dotted - PROB_TOL,
        sum_covers_regions: record.bell_sum >= region_sum - PROB_TOL,
        regions_cover_circle: region_sum >= 1.0 - PROB_TOL,
    })
}

pub fn venn_bound_check(weights: &TripletWeights) -> Result<bool> {
    Ok(venn_bound_chain(weights)?.holds())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub theta_a: f64,
    pub theta_b: f64,
    pub theta_c: f64,
    pub bell_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub grid: Vec<ScanPoint>,
    pub min_sum: f64,
    /// (θ_A, θ_B, θ_C) in radians at the first minimum encountered.
    pub argmin: (f64, f64, f64),
}

/// Angles `0, step, 2·step, …` below 360°, in radians. A step of 360° or
/// more gives the single angle 0.
pub fn degree_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !step_deg.is_finite() || step_deg <= 0.0 {
        return Err(BellError::InvalidArgument(format!(
            "grid step must be a positive number of degrees, got {step_deg}"
        )));
    }
    let n = (360.0 / step_deg).ceil().max(1.0) as usize;
    Ok((0..n)
        .map(|k| k as f64 * step_deg)
        .filter(|&d| d < 360.0)
        .map(f64::to_radians)
        .collect())
}

fn scan_points(pairs: impl Iterator<Item = (f64, f64)>) -> Result<ScanResult> {
    let phi = make_phi_plus();
    let a = basis_from_angle(0.0, "A")?;
    let mut grid = Vec::new();
    for (tb, tc) in pairs {
        let b = basis_from_angle(tb, "B")?;
        let c = basis_from_angle(tc, "C")?;
        let r = bell_record(&phi, &a, &b, &c)?;
        grid.push(ScanPoint {
            theta_a: 0.0,
            theta_b: tb,
            theta_c: tc,
            bell_sum: r.bell_sum,
        });
    }
    let best = grid
        .iter()
        .copied()
        .reduce(|best, p| if p.bell_sum < best.bell_sum { p } else { best })
        .ok_or_else(|| BellError::InvalidArgument("angle grid is empty".into()))?;
    Ok(ScanResult {
        min_sum: best.bell_sum,
        argmin: (best.theta_a, best.theta_b, best.theta_c),
        grid,
    })
}

/// Evaluates the Bell sum of |Φ⁺⟩ for θ_A = 0 and every (θ_B, θ_C) in
/// `theta_grid × theta_grid`. Only angle differences matter, so fixing
/// θ_A loses nothing.
pub fn scan_angles(theta_grid: &[f64]) -> Result<ScanResult> {
    if theta_grid.is_empty() {
        return Err(BellError::InvalidArgument("angle grid is empty".into()));
    }
    if let Some(bad) = theta_grid.iter().find(|t| !t.is_finite()) {
        return Err(BellError::InvalidArgument(format!(
            "grid angle {bad} is not finite"
        )));
    }
    scan_points(
        theta_grid
            .iter()
            .flat_map(|&tb| theta_grid.iter().map(move |&tc| (tb, tc))),
    )
}

/// Re-scans a square of ±`half_width_deg` around the incumbent minimum at
/// `step_deg` resolution.
pub fn refine_minimum(coarse: &ScanResult, half_width_deg: f64, step_deg: f64) -> Result<ScanResult> {
    if !(step_deg > 0.0 && half_width_deg >= 0.0) {
        return Err(BellError::InvalidArgument(
            "refinement needs a positive step and non-negative width".into(),
        ));
    }
    let (_, tb, tc) = coarse.argmin;
    let n = (half_width_deg / step_deg).round() as i64;
    let offsets: Vec<f64> = (-n..=n)
        .map(|k| (k as f64 * step_deg).to_radians())
        .collect();
    scan_points(
        offsets
            .iter()
            .flat_map(|&db| offsets.iter().map(move |&dc| (tb + db, tc + dc))),
    )
}

/// Writes `theta_b_deg,theta_c_deg,bell_sum` rows.
pub fn write_scan_csv<W: Write>(result: &ScanResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_b_deg", "theta_c_deg", "bell_sum"])?;
    for p in &result.grid {
        w.write_record([
            p.theta_b.to_degrees().to_string(),
            p.theta_c.to_degrees().to_string(),
            p.bell_sum.to_string(),
        ])?;
    }
    w.flush().map_err(|e| BellError::Csv(e.into()))?;
    Ok(())
}

pub fn write_scan_csv_file(result: &ScanResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| BellError::io(path, e))?;
    write_scan_csv(result, std::io::BufWriter::new(file))
}
