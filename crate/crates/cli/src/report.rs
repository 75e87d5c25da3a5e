//! Cross-engine deviation summary.

use std::fmt::Write;

use crate::row::ResultRow;

type Getter = fn(&ResultRow) -> Option<f64>;

struct Observable {
    name: &'static str,
    theory: Getter,
    sim: Getter,
    kernel: Getter,
    /// Phases in which the observable is a finite stationary quantity.
    phases: &'static [&'static str],
}

const OBSERVABLES: [Observable; 6] = [
    Observable {
        name: "c0",
        theory: |r| r.c0_theory,
        sim: |r| r.c0_sim,
        kernel: |r| r.c0_kernel,
        phases: &["F", "O"],
    },
    Observable {
        name: "sigma",
        theory: |r| r.sigma_theory,
        sim: |r| r.sigma_sim,
        kernel: |_| None,
        phases: &["F", "O"],
    },
    Observable {
        name: "sigma_fl",
        theory: |r| r.sigma_fl_theory,
        sim: |r| r.sigma_fl_sim,
        kernel: |r| r.sigma_fl_kernel,
        phases: &["F", "O"],
    },
    Observable {
        name: "lambda",
        theory: |r| r.lambda_theory,
        sim: |r| r.lambda_sim,
        kernel: |r| r.lambda_kernel,
        phases: &["O"],
    },
    Observable {
        name: "Lambda",
        theory: |r| r.growth_theory,
        sim: |r| r.growth_sim,
        kernel: |r| r.growth_kernel,
        phases: &["F"],
    },
    Observable {
        name: "bid_staggered",
        theory: |r| r.bid_staggered_theory,
        sim: |r| r.bid_staggered_sim,
        kernel: |r| r.bid_staggered_kernel,
        phases: &["F", "O"],
    },
];

/// Largest deviation of one engine from a reference engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub observable: &'static str,
    pub pair: &'static str,
    /// Over points with a non-negligible reference value.
    pub max_relative: Option<f64>,
    pub max_absolute: f64,
    pub points: usize,
}

/// Deviations over error-free rows in the frozen and oscillating phases.
pub fn deviations(rows: &[ResultRow]) -> Vec<Deviation> {
    let usable: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.error.is_none() && matches!(r.phase.as_deref(), Some("F" | "O")))
        .collect();
    let mut out = Vec::new();
    for obs in &OBSERVABLES {
        let pairs: [(&'static str, Getter, Getter); 3] = [
            ("sim vs theory", obs.sim, obs.theory),
            ("kernels vs theory", obs.kernel, obs.theory),
            ("sim vs kernels", obs.sim, obs.kernel),
        ];
        for (pair, value, reference) in pairs {
            let mut dev = Deviation {
                observable: obs.name,
                pair,
                max_relative: None,
                max_absolute: 0.0,
                points: 0,
            };
            for r in usable.iter().filter(|r| obs.phases.contains(&r.phase.as_deref().unwrap_or(""))) {
                let (Some(x), Some(y)) = (value(r), reference(r)) else {
                    continue;
                };
                dev.points += 1;
                let abs = (x - y).abs();
                dev.max_absolute = dev.max_absolute.max(abs);
                if y.abs() > 1e-9 {
                    let rel = abs / y.abs();
                    dev.max_relative = Some(dev.max_relative.map_or(rel, |m: f64| m.max(rel)));
                }
            }
            if dev.points > 0 {
                out.push(dev);
            }
        }
    }
    out
}

pub fn render(rows: &[ResultRow]) -> String {
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let mut s = String::new();
    let _ = writeln!(s, "summary over {} points ({failed} failed):", rows.len());
    let devs = deviations(rows);
    if devs.is_empty() {
        let _ = writeln!(s, "  no comparable F/O points");
    }
    for d in devs {
        let rel = d
            .max_relative
            .map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"));
        let _ = writeln!(
            s,
            "  {:<14} {:<18} max rel {rel:<10} max abs {:.4e}  (n={})",
            d.observable, d.pair, d.max_absolute, d.points
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excludes_failed_and_anomalous_rows() {
        let good = ResultRow {
            phase: Some("O".into()),
            c0_theory: Some(0.5),
            c0_sim: Some(0.55),
            ..Default::default()
        };
        let anomalous = ResultRow {
            phase: Some("A".into()),
            c0_theory: Some(1.0),
            c0_sim: Some(0.1),
            ..Default::default()
        };
        let failed = ResultRow {
            error: Some("boom".into()),
            ..good.clone()
        };
        let devs = deviations(&[good, anomalous, failed]);
        assert_eq!(devs.len(), 1);
        assert_eq!(devs[0].points, 1);
        assert!((devs[0].max_relative.unwrap() - 0.1).abs() < 1e-12);
    }
}
