//! Allowed transitions of the coupled pair: frequencies as eigenvalue
//! differences, intensities as squared `I_x + S_x` matrix elements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::sci;
use crate::spinsys::{build_spin_ops, Eigensystem};

/// The single-quantum pairs `(j, k)`, upper level first.
pub const ALLOWED_PAIRS: [(usize, usize); 4] = [(1, 2), (1, 3), (2, 4), (3, 4)];
/// Zero- and double-quantum pairs.
pub const FORBIDDEN_PAIRS: [(usize, usize); 2] = [(1, 4), (2, 3)];
/// `|⟨Ψ_j|I_x+S_x|Ψ_k⟩|²` above this counts as allowed.
pub const ALLOWED_THRESHOLD: f64 = 1e-12;
pub const RULE_TOL: f64 = 1e-9;

pub const CSV_HEADER: &str = "from_level,to_level,frequency_rad_s,rel_intensity";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub from_level: usize,
    pub to_level: usize,
    #[serde(rename = "frequency_rad_s")]
    pub frequency: f64,
    pub rel_intensity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumFormat {
    Csv,
    Json,
}

/// `|⟨Ψ_j|I_x+S_x|Ψ_k⟩|²`, unnormalized.
pub fn raw_intensity(es: &Eigensystem, j: usize, k: usize) -> f64 {
    let x = build_spin_ops().total_x();
    es.matrix_element(&x, j, k).norm_sqr()
}

pub fn is_allowed(es: &Eigensystem, j: usize, k: usize) -> bool {
    raw_intensity(es, j, k) > ALLOWED_THRESHOLD
}

/// Lines in the order (1,2), (1,3), (2,4), (3,4), intensities scaled so
/// that `A₁₂ + A₁₃ = 2`.
pub fn transition_table(es: &Eigensystem) -> Vec<SpectrumLine> {
    let raw: Vec<f64> = ALLOWED_PAIRS.iter().map(|&(j, k)| raw_intensity(es, j, k)).collect();
    let scale = 2.0 / (raw[0] + raw[1]);
    ALLOWED_PAIRS
        .iter()
        .zip(raw)
        .map(|(&(j, k), a)| SpectrumLine {
            from_level: j,
            to_level: k,
            frequency: es.transition_frequency(j, k),
            rel_intensity: a * scale,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleReport {
    /// `ε₁₂ + ε₂₄` (equals `ε₁ − ε₄`).
    pub common_sum: f64,
    /// `ε₁₃ − ε₁₂`.
    pub recovered_theta: f64,
    pub violations: Vec<String>,
}

impl RuleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the combination rules among the four lines:
/// `ε₁₂ + ε₂₄ = ε₁₃ + ε₃₄`, `ε₁₃ − ε₁₂ = ε₂₄ − ε₃₄ (= θ when given)`,
/// `A₁₂ = A₂₄`, `A₁₃ = A₃₄`.
pub fn combination_rules_check(lines: &[SpectrumLine], theta: Option<f64>) -> Result<RuleReport> {
    let find = |j: usize, k: usize| {
        lines
            .iter()
            .find(|l| l.from_level == j && l.to_level == k)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("missing line ({j},{k})")))
    };
    if lines.len() != 4 {
        return Err(Error::InvalidArgument(format!("expected 4 lines, got {}", lines.len())));
    }
    let (l12, l13, l24, l34) = (find(1, 2)?, find(1, 3)?, find(2, 4)?, find(3, 4)?);
    let mut violations = Vec::new();
    let mut check = |name: &str, lhs: f64, rhs: f64| {
        if (lhs - rhs).abs() > RULE_TOL {
            violations.push(format!("{name}: {lhs} != {rhs} (diff {:e})", lhs - rhs));
        }
    };
    check("e12 + e24 = e13 + e34", l12.frequency + l24.frequency, l13.frequency + l34.frequency);
    check("e13 - e12 = e24 - e34", l13.frequency - l12.frequency, l24.frequency - l34.frequency);
    if let Some(theta) = theta {
        check("e13 - e12 = theta", l13.frequency - l12.frequency, theta);
    }
    check("A12 = A24", l12.rel_intensity, l24.rel_intensity);
    check("A13 = A34", l13.rel_intensity, l34.rel_intensity);
    Ok(RuleReport {
        common_sum: l12.frequency + l24.frequency,
        recovered_theta: l13.frequency - l12.frequency,
        violations,
    })
}

fn sorted(lines: &[SpectrumLine]) -> Vec<SpectrumLine> {
    let mut out = lines.to_vec();
    out.sort_by(|a, b| {
        a.frequency
            .total_cmp(&b.frequency)
            .then(a.from_level.cmp(&b.from_level))
            .then(a.to_level.cmp(&b.to_level))
    });
    out
}

/// CSV (header plus one row per line) or a JSON array, rows sorted by
/// ascending frequency.
pub fn export_spectrum(lines: &[SpectrumLine], format: SpectrumFormat) -> String {
    let lines = sorted(lines);
    match format {
        SpectrumFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for l in &lines {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    l.from_level,
                    l.to_level,
                    sci(l.frequency),
                    sci(l.rel_intensity)
                ));
            }
            out
        }
        SpectrumFormat::Json => {
            let mut s = serde_json::to_string_pretty(&lines).expect("lines serialize");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinsys::{diagonalize, SystemParams};

    fn lines_for(w: f64, d: f64, j: f64) -> (Eigensystem, Vec<SpectrumLine>) {
        let es = diagonalize(&SystemParams::new(w, d, j)).unwrap();
        let lines = transition_table(&es);
        (es, lines)
    }

    #[test]
    fn reference_frequencies_and_intensities() {
        // differences of (507.5, 17.5, −32.5, −492.5); 1 ± sin φ with sin φ = 0.6
        let (_, lines) = lines_for(500.0, 40.0, 30.0);
        let f: Vec<f64> = lines.iter().map(|l| l.frequency).collect();
        let a: Vec<f64> = lines.iter().map(|l| l.rel_intensity).collect();
        for (got, want) in f.iter().zip([490.0, 540.0, 510.0, 460.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        for (got, want) in a.iter().zip([1.6, 0.4, 1.6, 0.4]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn intensities_match_explicit_matrix_elements() {
        let (es, _) = lines_for(500.0, 40.0, 30.0);
        let (p, q) = (es.p, es.q);
        assert!((raw_intensity(&es, 1, 2) - ((p + q) / 2.0).powi(2)).abs() < 1e-14);
        assert!((raw_intensity(&es, 1, 3) - ((p - q) / 2.0).powi(2)).abs() < 1e-14);
        assert!((raw_intensity(&es, 2, 4) - ((p + q) / 2.0).powi(2)).abs() < 1e-14);
        assert!((raw_intensity(&es, 3, 4) - ((p - q) / 2.0).powi(2)).abs() < 1e-14);
        for (j, k) in FORBIDDEN_PAIRS {
            assert!(raw_intensity(&es, j, k) <= 1e-20);
            assert!(!is_allowed(&es, j, k));
        }
    }

    #[test]
    fn decoupled_doublets_collapse() {
        let (_, lines) = lines_for(500.0, 40.0, 0.0);
        assert_eq!(lines[0].frequency, 480.0);
        assert_eq!(lines[3].frequency, 480.0);
        assert_eq!(lines[1].frequency, 520.0);
        assert_eq!(lines[2].frequency, 520.0);
        assert!(lines.iter().all(|l| (l.rel_intensity - 1.0).abs() < 1e-14));
    }

    #[test]
    fn combination_rules() {
        let (es, lines) = lines_for(500.0, 40.0, 30.0);
        let r = combination_rules_check(&lines, Some(es.theta)).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!((r.common_sum - 1000.0).abs() < 1e-9);

        let (es, lines) = lines_for(500.0, 0.0, 30.0);
        let r = combination_rules_check(&lines, Some(es.theta)).unwrap();
        assert!(r.passed());
        assert!((r.recovered_theta - 30.0).abs() < 1e-9);

        let mut bad = lines.clone();
        bad[2].frequency += 1.0;
        let r = combination_rules_check(&bad, None).unwrap();
        assert!(!r.passed());
        assert!(r.violations.iter().any(|v| v.starts_with("e12 + e24")));
        assert!(combination_rules_check(&bad[..3], None).is_err());
    }

    #[test]
    fn csv_formatting() {
        let one = [SpectrumLine { from_level: 1, to_level: 2, frequency: 490.0, rel_intensity: 1.6 }];
        assert_eq!(
            export_spectrum(&one, SpectrumFormat::Csv),
            format!("{CSV_HEADER}\n1,2,4.90000000000e2,1.60000000000e0\n")
        );
        assert_eq!(export_spectrum(&[], SpectrumFormat::Csv), format!("{CSV_HEADER}\n"));

        let (_, lines) = lines_for(500.0, 40.0, 30.0);
        let csv = export_spectrum(&lines, SpectrumFormat::Csv);
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 4);
        let pairs: Vec<&str> = rows.iter().map(|r| &r[..3]).collect();
        assert_eq!(pairs, ["3,4", "1,2", "2,4", "1,3"]);
    }

    #[test]
    fn json_mirrors_fields() {
        let (_, lines) = lines_for(500.0, 40.0, 30.0);
        let json = export_spectrum(&lines, SpectrumFormat::Json);
        let back: Vec<SpectrumLine> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!((back[0].from_level, back[0].to_level), (3, 4));
        assert!(json.contains("\"frequency_rad_s\""));
    }

    #[test]
    fn intensity_sum_rule_and_limits() {
        for &(d, j) in &[(40.0, 30.0), (-70.0, 5.0), (0.0, 12.0), (3.0, 49.0)] {
            let (_, lines) = lines_for(600.0, d, j);
            let total: f64 = lines.iter().map(|l| l.rel_intensity).sum();
            assert!((total - 4.0).abs() < 1e-12);
        }
        let (es, lines) = lines_for(500.0, 1e6, 30.0);
        assert!(es.phi.sin() < 1e-4);
        assert!(lines.iter().all(|l| (l.rel_intensity - 1.0).abs() < 1e-4));
        let (_, lines) = lines_for(500.0, 0.0, 30.0);
        assert!(lines[1].rel_intensity.abs() < 1e-12);
        assert!(lines[3].rel_intensity.abs() < 1e-12);
    }

    #[test]
    fn frequencies_ignore_energy_offset() {
        let (mut es, lines) = lines_for(500.0, 40.0, 30.0);
        es.energies.iter_mut().for_each(|e| *e += 123.0);
        for (a, b) in transition_table(&es).iter().zip(&lines) {
            assert!((a.frequency - b.frequency).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_parity_keeps_frequency_multiset() {
        let freqs = |d| {
            let (_, l) = lines_for(500.0, d, 30.0);
            let mut f: Vec<f64> = l.iter().map(|l| l.frequency).collect();
            f.sort_by(f64::total_cmp);
            f
        };
        for (a, b) in freqs(40.0).iter().zip(freqs(-40.0)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
