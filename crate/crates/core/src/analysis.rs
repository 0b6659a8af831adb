//! Fixed points of `lambda`, phase classification and the critical curve.
//!
//! Fixed points of `lambda` are exactly the critical points of `phi`, since
//! `phi'(c) = logit(lambda(c)) - logit(c)`. `phi'''` is strictly decreasing
//! on `(0, 1)`, so `phi''` is unimodal and has at most two roots; they cut
//! `(0, 1)` into at most three pieces on which `phi'` is monotone, and each
//! piece holds at most one root of `phi'`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::ModelParams;
use crate::numeric::{bisect, logit};

/// Tolerance on `|lambda'(c*) - 1|` separating attractors from repellors.
pub const CLASSIFICATION_TOL: f64 = 1e-9;

/// Fixed points closer than this are reported as one (saddle-node merge).
pub const MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointKind {
    Attractor,
    Repellor,
    Inflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub c: f64,
    pub lambda_prime: f64,
    pub kind: FixedPointKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    HighTemperature,
    LowTemperature,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub fixed_points: Vec<FixedPoint>,
    pub phase: Phase,
}

impl PhaseReport {
    pub fn attractors(&self) -> impl Iterator<Item = &FixedPoint> {
        self.fixed_points
            .iter()
            .filter(|f| f.kind == FixedPointKind::Attractor)
    }

    /// The single fixed point of a high-temperature or critical parameter
    /// set; `None` when the fixed point is not unique.
    pub fn unique_fixed_point(&self) -> Option<f64> {
        match self.fixed_points.as_slice() {
            [only] => Some(only.c),
            _ => None,
        }
    }
}

fn classify(lambda_prime: f64) -> FixedPointKind {
    if lambda_prime < 1.0 - CLASSIFICATION_TOL {
        FixedPointKind::Attractor
    } else if lambda_prime > 1.0 + CLASSIFICATION_TOL {
        FixedPointKind::Repellor
    } else {
        FixedPointKind::Inflection
    }
}

/// All solutions of `lambda(c) = c` in `(0, 1)`, ascending.
pub fn find_fixed_points(params: &ModelParams) -> Vec<FixedPoint> {
    let p = params.p();
    // phi' > 0 below p and phi' < 0 above lambda(1): every root is inside.
    let lo = 0.5 * p;
    let hi = 0.5 * (1.0 + params.lambda_unchecked(1.0));

    let edge = f64::EPSILON;
    let cbar = bisect(|c| params.phi_third(c), edge, 1.0 - edge);
    let mut breaks = vec![lo];
    if params.phi_second(cbar) > 0.0 {
        let r1 = bisect(|c| params.phi_second(c), edge, cbar);
        let r2 = bisect(|c| params.phi_second(c), cbar, 1.0 - edge);
        breaks.extend([r1, r2].into_iter().filter(|&r| r > lo && r < hi));
    }
    breaks.push(hi);

    let f = |c: f64| params.phi_prime(c);
    let mut roots: Vec<f64> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            roots.push(a);
        } else if fb == 0.0 {
            roots.push(b);
        } else if (fa > 0.0) != (fb > 0.0) {
            roots.push(bisect(f, a, b));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();

    let mut out: Vec<FixedPoint> = Vec::with_capacity(roots.len());
    let mut i = 0;
    while i < roots.len() {
        let mut j = i + 1;
        while j < roots.len() && roots[j] - roots[j - 1] <= MERGE_TOL {
            j += 1;
        }
        let cluster = &roots[i..j];
        let c = cluster[cluster.len() / 2];
        let lambda_prime = params
            .lambda_derivative(c, 1)
            .expect("fixed point inside [0, 1]");
        let kind = if cluster.len() > 1 {
            FixedPointKind::Inflection
        } else {
            classify(lambda_prime)
        };
        out.push(FixedPoint {
            c,
            lambda_prime,
            kind,
        });
        i = j;
    }
    debug_assert!(!out.is_empty() && out.len() <= 3);
    out
}

pub fn classify_phase(params: &ModelParams) -> PhaseReport {
    let fixed_points = find_fixed_points(params);
    let attractors = fixed_points
        .iter()
        .filter(|f| f.kind == FixedPointKind::Attractor)
        .count();
    let phase = if fixed_points.len() == 1 && attractors == 1 {
        Phase::HighTemperature
    } else if attractors >= 2 {
        Phase::LowTemperature
    } else {
        Phase::Degenerate
    };
    PhaseReport {
        fixed_points,
        phase,
    }
}

/// `sup_{c in [0,1]} lambda'(c)`, by a grid scan refined with golden-section
/// search around the best grid point.
pub fn sup_lambda_prime(params: &ModelParams) -> f64 {
    let d1 = |c: f64| params.lambda_derivative(c, 1).expect("c in [0, 1]");
    const GRID: usize = 4096;
    let (best_i, best) = (0..=GRID).map(|i| (i, d1(i as f64 / GRID as f64))).fold(
        (0, f64::NEG_INFINITY),
        |acc, x| if x.1 > acc.1 { x } else { acc },
    );
    let mut a = (best_i.saturating_sub(1)) as f64 / GRID as f64;
    let mut b = ((best_i + 1).min(GRID)) as f64 / GRID as f64;
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = b - ratio * (b - a);
        let x2 = a + ratio * (b - a);
        if d1(x1) < d1(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    best.max(d1(0.5 * (a + b)))
}

/// Exponential rate of the magnetization-cut bottleneck in the
/// low-temperature phase: `min(phi(c_low), phi(c_high)) - phi(c_saddle)`,
/// using the outermost attractors and the repellor between them.
/// `None` outside the low-temperature phase.
pub fn barrier_rate(params: &ModelParams) -> Option<f64> {
    let report = classify_phase(params);
    if report.phase != Phase::LowTemperature {
        return None;
    }
    let attractors: Vec<f64> = report.attractors().map(|f| f.c).collect();
    let (low, high) = (attractors[0], *attractors.last()?);
    let saddle = report
        .fixed_points
        .iter()
        .find(|f| f.kind != FixedPointKind::Attractor && f.c > low && f.c < high)?
        .c;
    let phi = |c| params.phi_unchecked(c);
    Some(phi(low).min(phi(high)) - phi(saddle))
}

/// Corner `(p_c, alpha1_c)` of the two-maximizer region for the `alpha2`
/// slice whose `phi'''` vanishes at `cbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub cbar: f64,
    pub p_c: f64,
    pub alpha1_c: f64,
    pub alpha2: f64,
}

impl CriticalPoint {
    pub fn params(&self, n: usize) -> Result<ModelParams> {
        ModelParams::new(n, self.p_c, self.alpha1_c, self.alpha2)
    }
}

fn corner_alpha2(cbar: f64) -> f64 {
    let q = 1.0 - cbar;
    (2.0 * cbar - 1.0) / (cbar * cbar * q * q)
}

fn corner_alpha1(cbar: f64) -> f64 {
    let q = 1.0 - cbar;
    (2.0 - 3.0 * cbar) / (cbar * q * q)
}

fn corner_p(cbar: f64) -> f64 {
    let q = 1.0 - cbar;
    let odds = cbar / q * ((4.0 * cbar - 3.0) / (2.0 * q * q)).exp();
    odds / (1.0 + odds)
}

/// The critical parameters for `cbar` in `[1/2, 2/3]`, the range in which
/// both `alpha1_c` and `alpha2` are non-negative.
pub fn critical_point(cbar: f64) -> Result<CriticalPoint> {
    if !(0.5..=2.0 / 3.0).contains(&cbar) {
        return domain(format!("cbar must lie in [1/2, 2/3], got {cbar}"));
    }
    Ok(CriticalPoint {
        cbar,
        p_c: corner_p(cbar),
        alpha1_c: corner_alpha1(cbar),
        alpha2: corner_alpha2(cbar),
    })
}

/// `cbar` for a given `alpha2 >= 0`: the root of `phi'''` in `[1/2, 1)`.
pub fn cbar_for_alpha2(alpha2: f64) -> Result<f64> {
    if !(alpha2 >= 0.0 && alpha2.is_finite()) {
        return domain(format!("alpha2 must be finite and >= 0, got {alpha2}"));
    }
    if alpha2 == 0.0 {
        return Ok(0.5);
    }
    Ok(bisect(
        |c| corner_alpha2(c) - alpha2,
        0.5,
        1.0 - f64::EPSILON,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub fixed_point_residual: f64,
    pub slope_residual: f64,
    pub second_derivative: f64,
    pub third_derivative: f64,
    pub third_derivative_closed_form: f64,
}

/// `(-6 c^2 + 6 c - 2) / (c^2 (1-c)^2)`, the value of `lambda'''` at a
/// critical fixed point `c`.
pub fn critical_third_derivative(c: f64) -> f64 {
    let q = 1.0 - c;
    (-6.0 * c * c + 6.0 * c - 2.0) / (c * c * q * q)
}

/// Checks `lambda(cbar) = cbar`, `lambda'(cbar) = 1`, `lambda''(cbar) = 0`
/// and `lambda'''(cbar) <= -8` at a critical point.
pub fn verify_criticality(cp: &CriticalPoint) -> Result<CriticalityReport> {
    const TOL: f64 = 1e-9;
    let params = cp.params(1)?;
    let c = cp.cbar;
    let report = CriticalityReport {
        fixed_point_residual: params.lambda(c)? - c,
        slope_residual: params.lambda_derivative(c, 1)? - 1.0,
        second_derivative: params.lambda_derivative(c, 2)?,
        third_derivative: params.lambda_derivative(c, 3)?,
        third_derivative_closed_form: critical_third_derivative(c),
    };
    let mut failures = Vec::new();
    if report.fixed_point_residual.abs() > TOL {
        failures.push(format!("lambda(c) - c = {:e}", report.fixed_point_residual));
    }
    if report.slope_residual.abs() > TOL {
        failures.push(format!("lambda'(c) - 1 = {:e}", report.slope_residual));
    }
    if report.second_derivative.abs() > TOL {
        failures.push(format!("lambda''(c) = {:e}", report.second_derivative));
    }
    if report.third_derivative > -8.0 + TOL {
        failures.push(format!("lambda'''(c) = {} > -8", report.third_derivative));
    }
    if (report.third_derivative - report.third_derivative_closed_form).abs() > TOL {
        failures.push(format!(
            "lambda'''(c) = {} differs from closed form {}",
            report.third_derivative, report.third_derivative_closed_form
        ));
    }
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(Error::Verification(format!(
            "criticality at cbar = {c}: {}",
            failures.join("; ")
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// Sign of `lambda''` on a grid; values within `1e-12` of zero read as zero.
pub fn second_derivative_sign_profile(params: &ModelParams, grid: &[f64]) -> Result<Vec<Sign>> {
    grid.iter()
        .map(|&c| {
            let v = params.lambda_derivative(c, 2)?;
            Ok(if v.abs() <= 1e-12 {
                Sign::Zero
            } else if v > 0.0 {
                Sign::Positive
            } else {
                Sign::Negative
            })
        })
        .collect()
}

/// Boundary of the two-maximizer region of an `alpha2` slice at one `p`.
///
/// For `alpha1` strictly between `alpha1_lower` and `alpha1_upper`, `phi`
/// has two local maximizers. `valid` is false when `p` is above the corner
/// `p_c` of the slice and no such `alpha1` exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub p: f64,
    pub alpha1_lower: f64,
    pub alpha1_upper: f64,
    pub valid: bool,
}

/// Solves for the two boundary values of `alpha1`.
///
/// With `alpha1 = m(c) = 1/(c(1-c)) - alpha2 c` the inflection points of
/// `phi` sit at `c`, and there `phi'(c) = logit(p) + h(c)` with
/// `h(c) = 1/(1-c) - logit(c) - alpha2 c^2 / 2`. `h` decreases on
/// `(0, cbar)` and increases on `(cbar, 1)`; the boundary inflection points
/// solve `h(c) = -logit(p)` on either side of `cbar`.
pub fn v_region_boundary(alpha2: f64, p: f64) -> Result<BoundarySample> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    let cbar = cbar_for_alpha2(alpha2)?;
    let h = |c: f64| 1.0 / (1.0 - c) - logit(c) - 0.5 * alpha2 * c * c;
    let m = |c: f64| 1.0 / (c * (1.0 - c)) - alpha2 * c;
    let target = -logit(p);
    let gap = target - h(cbar);
    let scale = target.abs().max(1.0);
    if gap < -1e-12 * scale {
        return Ok(BoundarySample {
            p,
            alpha1_lower: f64::NAN,
            alpha1_upper: f64::NAN,
            valid: false,
        });
    }
    if gap <= 1e-12 * scale {
        let a = m(cbar);
        return Ok(BoundarySample {
            p,
            alpha1_lower: a,
            alpha1_upper: a,
            valid: true,
        });
    }
    let g = |c: f64| h(c) - target;
    let left = bisect(g, f64::EPSILON, cbar);
    let right = bisect(g, cbar, 1.0 - f64::EPSILON);
    Ok(BoundarySample {
        p,
        alpha1_lower: m(right),
        alpha1_upper: m(left),
        valid: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub p: f64,
    pub alpha1: f64,
    pub phase: Phase,
    pub fixed_points: usize,
}

/// Classifies every `(p, alpha1)` grid point of an `alpha2` slice.
/// Rows come out row-major over `(p, alpha1)` regardless of scheduling.
pub fn phase_diagram_scan(
    alpha2: f64,
    p_grid: &[f64],
    alpha1_grid: &[f64],
) -> Result<Vec<PhaseRow>> {
    if p_grid.is_empty() || alpha1_grid.is_empty() {
        return domain("phase diagram grids must be non-empty");
    }
    let cells: Vec<(f64, f64)> = p_grid
        .iter()
        .flat_map(|&p| alpha1_grid.iter().map(move |&a1| (p, a1)))
        .collect();
    for &(p, a1) in &cells {
        ModelParams::new(1, p, a1, alpha2)?;
    }
    Ok(cells
        .par_iter()
        .map(|&(p, alpha1)| {
            let params = ModelParams::new(1, p, alpha1, alpha2).expect("validated above");
            let report = classify_phase(&params);
            PhaseRow {
                p,
                alpha1,
                phase: report.phase,
                fixed_points: report.fixed_points.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, a1: f64, a2: f64) -> ModelParams {
        ModelParams::new(1, p, a1, a2).unwrap()
    }

    #[test]
    fn no_interaction_has_single_attractor_at_p() {
        let fps = find_fixed_points(&params(0.3, 0.0, 0.0));
        assert_eq!(fps.len(), 1);
        assert!((fps[0].c - 0.3).abs() < 1e-12);
        assert_eq!(fps[0].lambda_prime, 0.0);
        assert_eq!(fps[0].kind, FixedPointKind::Attractor);
    }

    #[test]
    fn high_temperature_canonical_fixed_point() {
        let m = params(0.5, 0.5, 0.5);
        let fps = find_fixed_points(&m);
        assert_eq!(fps.len(), 1);
        // Reference root from an independent bisection on lambda(c) - c.
        assert!((fps[0].c - 0.595_397_246_435_425_4).abs() < 1e-12);
        assert!((fps[0].lambda_prime - 0.192_165_092).abs() < 1e-8);
        assert_eq!(classify_phase(&m).phase, Phase::HighTemperature);
    }

    #[test]
    fn low_temperature_canonical_fixed_points() {
        let m = params(0.05, 6.0, 0.0);
        let fps = find_fixed_points(&m);
        let cs: Vec<f64> = fps.iter().map(|f| f.c).collect();
        let kinds: Vec<FixedPointKind> = fps.iter().map(|f| f.kind).collect();
        assert_eq!(cs.len(), 3);
        assert!((cs[0] - 0.077_171_899_544_665_56).abs() < 1e-10);
        assert!((cs[1] - 0.472_161_852_964_714_3).abs() < 1e-10);
        assert!((cs[2] - 0.934_942_738_012_521_7).abs() < 1e-10);
        assert_eq!(
            kinds,
            vec![
                FixedPointKind::Attractor,
                FixedPointKind::Repellor,
                FixedPointKind::Attractor
            ]
        );
        for f in &fps {
            assert!((m.lambda(f.c).unwrap() - f.c).abs() <= 1e-12);
        }
        assert_eq!(classify_phase(&m).phase, Phase::LowTemperature);
    }

    #[test]
    fn critical_point_is_degenerate() {
        for cbar in [0.5, 0.55, 0.6, 2.0 / 3.0] {
            let cp = critical_point(cbar).unwrap();
            let report = classify_phase(&cp.params(1).unwrap());
            assert_eq!(report.phase, Phase::Degenerate, "cbar={cbar}: {report:?}");
            assert_eq!(report.fixed_points.len(), 1);
            assert!((report.fixed_points[0].c - cbar).abs() < 1e-4);
        }
    }

    #[test]
    fn critical_point_examples() {
        let cp = critical_point(0.5).unwrap();
        assert!((cp.p_c - 1.0 / (1.0 + 2f64.exp())).abs() < 1e-15);
        assert!((cp.p_c - 0.119_202_9).abs() < 1e-7);
        assert!((cp.alpha1_c - 4.0).abs() < 1e-15);
        assert_eq!(cp.alpha2, 0.0);

        let cp = critical_point(2.0 / 3.0).unwrap();
        let e = 2.0 * (-1.5f64).exp();
        assert!((cp.p_c - e / (e + 1.0)).abs() < 1e-15);
        assert!((cp.p_c - 0.30856).abs() < 1e-5);
        assert!(cp.alpha1_c.abs() < 1e-14);
        assert!((cp.alpha2 - 6.75).abs() < 1e-12);

        let cp = critical_point(0.55).unwrap();
        assert!((cp.p_c - 0.144_966_502_689_412_6).abs() < 1e-12);
        assert!((cp.alpha1_c - 3.142_536_475_869_808).abs() < 1e-12);
        assert!((cp.alpha2 - 1.632_486_480_971_331).abs() < 1e-12);

        assert!(critical_point(0.49).is_err());
        assert!(critical_point(0.7).is_err());
    }

    #[test]
    fn criticality_identities() {
        let r = verify_criticality(&critical_point(0.5).unwrap()).unwrap();
        assert!((r.third_derivative + 8.0).abs() < 1e-9);
        let r = verify_criticality(&critical_point(2.0 / 3.0).unwrap()).unwrap();
        assert!((r.third_derivative + 13.5).abs() < 1e-9);
        let r = verify_criticality(&critical_point(0.55).unwrap()).unwrap();
        assert!((r.third_derivative - critical_third_derivative(0.55)).abs() < 1e-9);
        assert!((r.third_derivative + 8.407_305_377_002_35).abs() < 1e-9);
        assert!(r.third_derivative <= -8.0);
    }

    #[test]
    fn verify_criticality_reports_off_curve_points() {
        let mut cp = critical_point(0.55).unwrap();
        cp.alpha1_c += 0.01;
        match verify_criticality(&cp) {
            Err(Error::Verification(msg)) => assert!(msg.contains("lambda'(c) - 1")),
            other => panic!("expected verification failure, got {other:?}"),
        }
    }

    #[test]
    fn second_derivative_changes_sign_at_cbar() {
        let cp = critical_point(0.55).unwrap();
        let m = cp.params(1).unwrap();
        let s = second_derivative_sign_profile(&m, &[0.55, 0.3, 0.8]).unwrap();
        assert_eq!(s, vec![Sign::Zero, Sign::Positive, Sign::Negative]);
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        for cbar in [0.5, 0.6, 0.65] {
            let cp = critical_point(cbar).unwrap();
            let m = cp.params(1).unwrap();
            let signs = second_derivative_sign_profile(&m, &grid).unwrap();
            for (c, s) in grid.iter().zip(signs) {
                if *c < cbar {
                    assert_ne!(s, Sign::Negative, "cbar={cbar} c={c}");
                } else if *c > cbar {
                    assert_ne!(s, Sign::Positive, "cbar={cbar} c={c}");
                }
            }
        }
    }

    #[test]
    fn cbar_inverts_alpha2() {
        for cbar in [0.5, 0.52, 0.6, 2.0 / 3.0, 0.8] {
            let a2 = corner_alpha2(cbar);
            assert!((cbar_for_alpha2(a2).unwrap() - cbar).abs() < 1e-12);
        }
    }

    #[test]
    fn v_region_examples() {
        let cp = critical_point(0.55).unwrap();
        let s = v_region_boundary(cp.alpha2, cp.p_c).unwrap();
        assert!(s.valid);
        assert!((s.alpha1_lower - cp.alpha1_c).abs() < 1e-6);
        assert!((s.alpha1_upper - cp.alpha1_c).abs() < 1e-6);

        let s = v_region_boundary(0.0, 0.05).unwrap();
        assert!(s.valid);
        assert!(s.alpha1_lower < 6.0 && 6.0 < s.alpha1_upper, "{s:?}");
        assert!(s.alpha1_lower > 4.0);

        let s = v_region_boundary(0.0, 0.5).unwrap();
        assert!(!s.valid);
        assert!(v_region_boundary(0.0, 1.5).is_err());
    }

    #[test]
    fn v_region_matches_maximizer_count_scan() {
        for &(a2, p) in &[(0.0, 0.05), (0.0, 0.1), (1.0, 0.08), (3.0, 0.12)] {
            let s = v_region_boundary(a2, p).unwrap();
            assert!(s.valid);
            let step = 1e-4;
            let start = s.alpha1_lower - 0.05;
            let stop = s.alpha1_upper + 0.05;
            let mut first_low = None;
            let mut last_low = None;
            let mut a1 = start;
            while a1 <= stop {
                if classify_phase(&params(p, a1, a2)).phase == Phase::LowTemperature {
                    first_low.get_or_insert(a1);
                    last_low = Some(a1);
                }
                a1 += step;
            }
            let (lo, hi) = (first_low.unwrap(), last_low.unwrap());
            assert!(
                (lo - s.alpha1_lower).abs() <= step,
                "a2={a2} p={p}: {lo} vs {s:?}"
            );
            assert!(
                (hi - s.alpha1_upper).abs() <= step,
                "a2={a2} p={p}: {hi} vs {s:?}"
            );
        }
    }

    #[test]
    fn phase_diagram_examples() {
        let rows = phase_diagram_scan(0.5, &[0.5], &[0.5]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].phase, Phase::HighTemperature);
        let rows = phase_diagram_scan(0.0, &[0.05], &[6.0]).unwrap();
        assert_eq!(rows[0].phase, Phase::LowTemperature);
        assert_eq!(rows[0].fixed_points, 3);

        let cp = critical_point(0.5).unwrap();
        let ps = [cp.p_c - 0.02, cp.p_c, cp.p_c + 0.02];
        let a1s = [cp.alpha1_c - 0.5, cp.alpha1_c];
        let rows = phase_diagram_scan(0.0, &ps, &a1s).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[0].p, rows[0].alpha1), (ps[0], a1s[0]));
        assert_eq!((rows[1].p, rows[1].alpha1), (ps[0], a1s[1]));
        for r in &rows {
            if r.p == cp.p_c && r.alpha1 == cp.alpha1_c {
                assert_eq!(r.phase, Phase::Degenerate);
            } else {
                assert_eq!(r.phase, Phase::HighTemperature, "{r:?}");
            }
        }
        assert!(phase_diagram_scan(0.0, &[], &[1.0]).is_err());
        assert!(phase_diagram_scan(0.0, &[1.2], &[1.0]).is_err());
    }

    #[test]
    fn sup_lambda_prime_high_temperature() {
        let s = sup_lambda_prime(&params(0.5, 0.5, 0.5));
        // lambda' = lambda(1-lambda)(a1 + a2 c) peaks at the right end here.
        let at_one = params(0.5, 0.5, 0.5).lambda_derivative(1.0, 1).unwrap();
        assert!(s >= at_one);
        assert!((s - 0.217_894_993_761_814).abs() < 1e-9, "{s}");
    }

    #[test]
    fn barrier_rate_low_temperature() {
        let r = barrier_rate(&params(0.05, 6.0, 0.0)).unwrap();
        let m = params(0.05, 6.0, 0.0);
        let expect =
            m.phi(0.077_171_899_544_665_56).unwrap() - m.phi(0.472_161_852_964_714_3).unwrap();
        assert!((r - expect).abs() < 1e-10);
        assert!(barrier_rate(&params(0.5, 0.5, 0.5)).is_none());
    }
}
