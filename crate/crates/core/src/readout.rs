//! Series-FET readout chain.
//!
//! Each qubit sits above one segment of a FET channel. Segment `i` carries
//!
//! ```text
//! I = Λ [G_i' (V_i − V_{i−1}) − ½ η_i (V_i² − V_{i−1}²)] / (1 + Θ (V_i − V_{i−1}))
//! ```
//!
//! with `G_i' = V_g − V_th − ΔV_th,i`. The chain is solved by shooting: guess
//! the common current, march node voltages from the source (`V_0 = 0`) and
//! bisect on the drain mismatch `V_N − V_D`. Segments are indexed from 1 at the
//! source to `N` at the drain in reports, from 0 in slices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{E_PER_AF_VOLTS, EPS0_AF_PER_NM};

pub const DRAIN_TOLERANCE: f64 = 1e-10;
pub const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FetSegment {
    /// `V_g − V_th` (V).
    pub overdrive: f64,
    /// `1 + ζ`.
    pub eta: f64,
    /// Threshold shift from the qubit state (V).
    pub dvth: f64,
}

impl FetSegment {
    pub fn effective_overdrive(&self) -> f64 {
        self.overdrive - self.dvth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetChainProblem {
    /// A/V².
    pub lambda: f64,
    /// 1/V.
    pub theta: f64,
    pub segments: Vec<FetSegment>,
    /// V.
    pub v_d: f64,
}

/// Reduced parameters of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentModel {
    pub lambda: f64,
    pub theta: f64,
    pub overdrive: f64,
    pub eta: f64,
}

impl FetChainProblem {
    /// `n` identical segments.
    pub fn uniform(n: usize, overdrive: f64, theta: f64, v_d: f64) -> Self {
        Self {
            lambda: 1.0,
            theta,
            segments: vec![FetSegment { overdrive, eta: 1.0, dvth: 0.0 }; n],
            v_d,
        }
    }

    /// Reference readout device: 8 segments, `V_g − V_th = 2 V`, `Θ = 0.3 V⁻¹`.
    pub fn fig2_default() -> Self {
        Self::uniform(8, 2.0, 0.3, 1.5)
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segment(&self, i: usize) -> SegmentModel {
        let s = self.segments[i];
        SegmentModel { lambda: self.lambda, theta: self.theta, overdrive: s.effective_overdrive(), eta: s.eta }
    }

    pub fn with_v_d(&self, v_d: f64) -> Self {
        Self { v_d, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.segments.is_empty() {
            bad.push("at least one segment required".to_string());
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            bad.push(format!("lambda must be > 0 (got {})", self.lambda));
        }
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            bad.push(format!("theta must be >= 0 (got {})", self.theta));
        }
        if !(self.v_d >= 0.0) || !self.v_d.is_finite() {
            bad.push(format!("v_d must be >= 0 (got {})", self.v_d));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.effective_overdrive() > 0.0) {
                bad.push(format!("segment {}: G - dVth = {} must be > 0", i + 1, s.effective_overdrive()));
            }
            if !(s.eta > 0.0) || !s.eta.is_finite() {
                bad.push(format!("segment {}: eta must be > 0 (got {})", i + 1, s.eta));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(bad.join("; ")))
        }
    }
}

/// Forward current of one segment.
pub fn segment_current(seg: &SegmentModel, v_lo: f64, v_hi: f64) -> f64 {
    let x = v_hi - v_lo;
    let g = seg.overdrive - seg.eta * v_lo;
    seg.lambda * x * (g - 0.5 * seg.eta * x) / (1.0 + seg.theta * x)
}

/// Drop at the current maximum of the rising branch.
pub fn apex_drop(seg: &SegmentModel, v_lo: f64) -> f64 {
    let g = seg.overdrive - seg.eta * v_lo;
    if g <= 0.0 {
        return 0.0;
    }
    if seg.theta == 0.0 {
        return g / seg.eta;
    }
    let (eta, th) = (seg.eta, seg.theta);
    // (√(η² + 2Θηg) − η)/(Θη), written without cancellation
    2.0 * g / (eta + (eta * eta + 2.0 * th * eta * g).sqrt())
}

/// Largest current the segment can carry when its source side sits at `v_lo`.
pub fn capacity(seg: &SegmentModel, v_lo: f64) -> f64 {
    let x = apex_drop(seg, v_lo);
    if x == 0.0 { 0.0 } else { segment_current(seg, v_lo, v_lo + x) }
}

/// Drain-side voltage of a segment carrying `current`, on the rising branch.
pub fn segment_step(seg: &SegmentModel, v_lo: f64, current: f64) -> Result<f64> {
    if !(current >= 0.0) {
        return Err(Error::InvalidInput(format!("current {current} must be >= 0")));
    }
    if current == 0.0 {
        return Ok(v_lo);
    }
    let g = seg.overdrive - seg.eta * v_lo;
    let b = seg.lambda * g - current * seg.theta;
    let disc = b * b - 2.0 * seg.eta * seg.lambda * current;
    if b <= 0.0 || disc < 0.0 {
        return Err(Error::CapacityExceeded { current, capacity: capacity(seg, v_lo) });
    }
    Ok(v_lo + 2.0 * current / (b + disc.sqrt()))
}

enum March {
    Reached(Vec<f64>),
    /// 0-based index of the segment that could not carry the current.
    Failed(usize),
}

fn march(prob: &FetChainProblem, current: f64) -> March {
    let mut v = Vec::with_capacity(prob.n_segments() + 1);
    v.push(0.0);
    for i in 0..prob.n_segments() {
        match segment_step(&prob.segment(i), v[i], current) {
            Ok(next) => v.push(next),
            Err(_) => return March::Failed(i),
        }
    }
    March::Reached(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSolution {
    /// A.
    pub current: f64,
    /// `V_0 = 0, V_1, …, V_N` (V).
    pub voltages: Vec<f64>,
    pub converged: bool,
    /// `|V_N − V_D|` (V).
    pub residual: f64,
    /// Largest `|I_segment − I| / I` over the segments.
    pub current_mismatch: f64,
    pub iterations: usize,
}

/// Solves for the common current and the node voltages.
pub fn solve_chain(prob: &FetChainProblem) -> Result<ChainSolution> {
    prob.validate()?;
    if prob.v_d == 0.0 {
        return Ok(ChainSolution {
            current: 0.0,
            voltages: vec![0.0; prob.n_segments() + 1],
            converged: true,
            residual: 0.0,
            current_mismatch: 0.0,
            iterations: 0,
        });
    }
    let mut lo = 0.0;
    let mut hi = capacity(&prob.segment(0), 0.0);
    let mut iterations = 0;
    let mut binding = 0;
    while iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        match march(prob, mid) {
            March::Reached(v) if v[prob.n_segments()] <= prob.v_d => lo = mid,
            March::Reached(_) => hi = mid,
            March::Failed(i) => {
                binding = i;
                hi = mid;
            }
        }
    }
    let voltages = match march(prob, lo) {
        March::Reached(v) => v,
        March::Failed(i) => return Err(Error::Saturation { v_d: prob.v_d, segment: i + 1 }),
    };
    let residual = (voltages[prob.n_segments()] - prob.v_d).abs();
    if residual >= DRAIN_TOLERANCE {
        // the admissible currents never reach V_D
        if let March::Failed(i) = march(prob, hi) {
            binding = i;
        }
        return Err(Error::Saturation { v_d: prob.v_d, segment: binding + 1 });
    }
    let current_mismatch = (0..prob.n_segments())
        .map(|i| {
            let ii = segment_current(&prob.segment(i), voltages[i], voltages[i + 1]);
            ((ii - lo) / lo).abs()
        })
        .fold(0.0, f64::max);
    Ok(ChainSolution { current: lo, voltages, converged: true, residual, current_mismatch, iterations })
}

/// Threshold shift applied to the qubit whose state changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdShift {
    /// Fraction of `V_g − V_th`.
    pub fraction: f64,
    /// `+1` reduces the overdrive.
    pub sign: f64,
}

impl Default for ThresholdShift {
    fn default() -> Self {
        Self { fraction: 0.1, sign: 1.0 }
    }
}

impl ThresholdShift {
    fn apply(&self, prob: &FetChainProblem, qubit: usize) -> FetChainProblem {
        let mut p = prob.clone();
        let s = &mut p.segments[qubit - 1];
        s.dvth += self.sign * self.fraction * s.overdrive;
        p
    }
}

/// Order-of-magnitude threshold shift `e d_q / (ε_ox ε₀ A)` (V) of one
/// electron at depth `d_q` (nm) under a gate of area `area` (nm²).
pub fn threshold_shift_estimate(d_q: f64, eps_ox: f64, area: f64) -> f64 {
    E_PER_AF_VOLTS * d_q / (eps_ox * EPS0_AF_PER_NM * area)
}

/// One point of a sweep; `ratio` is `None` when a chain saturated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub x: f64,
    pub ratio: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    /// 1-based qubit label of the trace.
    pub qubit: usize,
    pub points: Vec<SweepPoint>,
}

pub fn default_vd_grid() -> Vec<f64> {
    (1..=40).map(|k| k as f64 / 20.0).collect()
}

/// `|I_i − I_0| / I_0` versus `V_D` with only qubit `shifted` (1-based) changed.
pub fn ratio_sweep_fig2a(base: &FetChainProblem, shifted: usize, shift: ThresholdShift, grid: &[f64]) -> Result<SweepCurve> {
    base.validate()?;
    if shifted == 0 || shifted > base.n_segments() {
        return Err(Error::InvalidInput(format!("qubit {shifted} outside 1..={}", base.n_segments())));
    }
    let moved = shift.apply(base, shifted);
    moved.validate()?;
    let points = grid
        .iter()
        .map(|&v_d| {
            let i0 = solve_chain(&base.with_v_d(v_d));
            let ii = solve_chain(&moved.with_v_d(v_d));
            match (i0, ii) {
                (Ok(a), Ok(b)) if a.current > 0.0 => SweepPoint {
                    x: v_d,
                    ratio: Some((b.current - a.current).abs() / a.current),
                    note: None,
                },
                (Ok(_), Ok(_)) => SweepPoint { x: v_d, ratio: None, note: Some("zero reference current".into()) },
                (Err(e), _) => SweepPoint { x: v_d, ratio: None, note: Some(format!("reference: {e}")) },
                (_, Err(e)) => SweepPoint { x: v_d, ratio: None, note: Some(format!("shifted: {e}")) },
            }
        })
        .collect();
    Ok(SweepCurve { qubit: shifted, points })
}

/// One `N` of the distinguishability sweep: ratios for traces `i = 1, N/2, N−1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinguishRow {
    pub n: usize,
    pub traces: Vec<(usize, Option<f64>)>,
}

/// `|I_i − I_{i+1}| / I_0` for chains of 2..=`max_n` copies of `segment`.
pub fn distinguish_sweep_fig2b(
    segment: FetSegment,
    lambda: f64,
    theta: f64,
    v_d: f64,
    max_n: usize,
    shift: ThresholdShift,
) -> Result<Vec<DistinguishRow>> {
    if max_n < 2 {
        return Err(Error::InvalidInput("max_n must be >= 2".into()));
    }
    let mut rows = Vec::with_capacity(max_n - 1);
    for n in 2..=max_n {
        let base = FetChainProblem { lambda, theta, segments: vec![segment; n], v_d };
        base.validate()?;
        let i0 = solve_chain(&base).ok().map(|s| s.current);
        let mut labels = vec![1, n / 2, n - 1];
        labels.dedup();
        let traces = labels
            .into_iter()
            .map(|i| {
                let a = solve_chain(&shift.apply(&base, i)).ok().map(|s| s.current);
                let b = solve_chain(&shift.apply(&base, i + 1)).ok().map(|s| s.current);
                let r = match (a, b, i0) {
                    (Some(a), Some(b), Some(i0)) if i0 > 0.0 => Some((a - b).abs() / i0),
                    _ => None,
                };
                (i, r)
            })
            .collect();
        rows.push(DistinguishRow { n, traces });
    }
    Ok(rows)
}

/// Copy of `base` with `η_i = 1 + ζ_i`, `ζ_i ~ U[−σ, σ]` drawn from ChaCha8 seeded by `seed`.
pub fn random_substrate(base: &FetChainProblem, seed: u64, sigma: f64) -> Result<FetChainProblem> {
    if !(sigma >= 0.0) || !(sigma < 1.0) {
        return Err(Error::InvalidInput(format!("sigma = {sigma} must be in [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = base.clone();
    for s in &mut p.segments {
        let zeta = if sigma == 0.0 { 0.0 } else { rng.random_range(-sigma..=sigma) };
        s.eta = 1.0 + zeta;
    }
    Ok(p)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.10e}")).unwrap_or_default()
}

/// CSV with a `v_d` column and one `ratio_i<k>` column per curve. All curves
/// must share the grid.
pub fn fig2a_csv(curves: &[SweepCurve]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["v_d".to_string()];
    header.extend(curves.iter().map(|c| format!("ratio_i{}", c.qubit)));
    w.write_record(&header)?;
    let len = curves.first().map_or(0, |c| c.points.len());
    if curves.iter().any(|c| c.points.len() != len) {
        return Err(Error::InvalidInput("curves do not share a grid".into()));
    }
    for k in 0..len {
        let mut rec = vec![format!("{:.4}", curves[0].points[k].x)];
        rec.extend(curves.iter().map(|c| fmt_opt(c.points[k].ratio)));
        w.write_record(&rec)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// CSV with columns `n, ratio_first, ratio_middle, ratio_last` plus the
/// 1-based qubit labels of the three traces.
pub fn fig2b_csv(rows: &[DistinguishRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["n", "i_first", "ratio_first", "i_middle", "ratio_middle", "i_last", "ratio_last"])?;
    for r in rows {
        let n = r.n;
        let find = |i: usize| r.traces.iter().find(|t| t.0 == i).and_then(|t| t.1);
        let idx = [1, n / 2, n - 1];
        let mut rec = vec![n.to_string()];
        for i in idx {
            rec.push(i.to_string());
            rec.push(fmt_opt(find(i)));
        }
        w.write_record(&rec)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).map_err(|e| Error::InvalidInput(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(overdrive: f64, eta: f64, theta: f64) -> SegmentModel {
        SegmentModel { lambda: 1.0, theta, overdrive, eta }
    }

    #[test]
    fn hand_evaluated_current() {
        let s = seg(2.0, 1.0, 0.0);
        assert!((segment_current(&s, 0.0, 0.1) - 0.195).abs() < 1e-15);
        assert_eq!(segment_current(&s, 0.3, 0.3), 0.0);
    }

    #[test]
    fn step_inverts_current() {
        let s = seg(2.0, 1.1, 0.3);
        assert_eq!(segment_step(&s, 0.2, 0.0).unwrap(), 0.2);
        for i in [1e-6, 0.01, 0.3, 0.9 * capacity(&s, 0.2)] {
            let v = segment_step(&s, 0.2, i).unwrap();
            // forward form rounds through absolute voltages: error ~ ε·V/ΔV
            let tol = 1e-14 * (1.0 + v / (v - 0.2));
            let r = ((segment_current(&s, 0.2, v) - i) / i).abs();
            assert!(r < tol, "{i} {r}");
        }
    }

    #[test]
    fn current_above_apex_is_rejected() {
        let s = seg(2.0, 1.0, 0.3);
        let cap = capacity(&s, 0.0);
        // apex current from the quadratic: with Θ = 0.3, g = 2 → x* = (√2.2 − 1)/0.3
        let x = (2.2f64.sqrt() - 1.0) / 0.3;
        let hand = x * (2.0 - 0.5 * x) / (1.0 + 0.3 * x);
        assert!((cap - hand).abs() < 1e-14);
        assert!(matches!(segment_step(&s, 0.0, cap * 1.001), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn single_segment_chain() {
        let prob = FetChainProblem::uniform(1, 2.0, 0.3, 0.7);
        let sol = solve_chain(&prob).unwrap();
        let direct = segment_current(&prob.segment(0), 0.0, 0.7);
        assert!(((sol.current - direct) / direct).abs() < 1e-12);
    }

    #[test]
    fn lambda_scales_out_exactly() {
        let p1 = FetChainProblem::uniform(4, 2.0, 0.3, 1.0);
        let p2 = FetChainProblem { lambda: 2.0, ..p1.clone() };
        let (a, b) = (solve_chain(&p1).unwrap(), solve_chain(&p2).unwrap());
        assert_eq!(a.voltages, b.voltages);
        assert_eq!(b.current, 2.0 * a.current);
    }

    #[test]
    fn saturation_names_a_segment() {
        let prob = FetChainProblem::uniform(2, 1.0, 0.3, 5.0);
        assert!(matches!(solve_chain(&prob), Err(Error::Saturation { segment: 1..=2, .. })));
    }

    #[test]
    fn zero_shift_gives_zero_ratio() {
        let base = FetChainProblem::fig2_default();
        let c = ratio_sweep_fig2a(&base, 8, ThresholdShift { fraction: 0.0, sign: 1.0 }, &[0.5, 1.0]).unwrap();
        assert!(c.points.iter().all(|p| p.ratio == Some(0.0)));
    }

    #[test]
    fn substrate_draws_are_reproducible() {
        let base = FetChainProblem::fig2_default();
        assert_eq!(random_substrate(&base, 3, 0.0).unwrap(), base);
        let a = random_substrate(&base, 3, 0.1).unwrap();
        assert_eq!(a, random_substrate(&base, 3, 0.1).unwrap());
        assert!(a.segments.iter().all(|s| (s.eta - 1.0).abs() <= 0.1));
        assert_ne!(a, random_substrate(&base, 4, 0.1).unwrap());
    }

    #[test]
    fn threshold_estimate_magnitude() {
        // one electron 1 nm deep under a 10 nm x 10 nm gate in SiO2
        let v = threshold_shift_estimate(1.0, 4.0, 100.0);
        assert!((v - 0.045237).abs() < 1e-5);
    }
}
