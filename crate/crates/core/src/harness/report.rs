use std::fmt::Write as _;

use serde::Serialize;

use super::{fit_exponent, ExperimentConfig, ExponentFit, ResultTable, TruthSource};
use crate::rates::{rate_exponent, RateOutcome, ScaleBase};
use crate::stats::spearman;

pub const CSV_HEADER: &str = "scale,delta_n,delta_prime_n,mse,bias_sq,variance,stderr,regime,theory_exponent";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub fit: Option<ExponentFit>,
    pub fit_error: Option<String>,
    pub theoretical_exponent: Option<f64>,
    pub expected_slope: Option<f64>,
    pub slope_tolerance: f64,
    pub scale_base: ScaleBase,
    pub strip_log: bool,
    pub truth: f64,
    pub truth_source: TruthSource,
    pub spearman_abs_bias_vs_delta_prime: Option<f64>,
    pub rules: Vec<RuleOutcome>,
    pub passed: bool,
}

impl Summary {
    pub fn rule(&self, name: &str) -> Option<&RuleOutcome> {
        self.rules.iter().find(|r| r.name == name)
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

pub fn summarize(table: &ResultTable, cfg: &ExperimentConfig) -> Summary {
    let mut rules = Vec::new();

    let worst = table
        .rows
        .iter()
        .map(|r| (r.mse - (r.bias_sq + r.variance)).abs() / r.mse.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    rules.push(RuleOutcome {
        name: "mse_decomposition".into(),
        passed: worst <= 1e-12,
        detail: format!("max relative gap {worst:e}"),
    });

    let first = table.rows[0].regime;
    let single = table.rows.iter().all(|r| r.regime == first);
    rules.push(RuleOutcome {
        name: "single_regime".into(),
        passed: single,
        detail: table.rows.iter().map(|r| r.regime.as_str()).collect::<Vec<_>>().join(","),
    });

    let rate = if single { rate_exponent(&cfg.smoothness, first) } else { RateOutcome::NoTheoreticalRate };
    let (theory, log_factor) = match rate {
        RateOutcome::Rate { exponent, base, log_factor } if base == table.scale_base => (Some(exponent), log_factor),
        _ => (None, false),
    };
    let strip_log = cfg.strip_log.unwrap_or(log_factor);
    let (fit, fit_error) = match fit_exponent(table, table.scale_base, strip_log) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    if let (Some(f), Some(e)) = (&fit, theory) {
        let gap = (f.slope + e).abs();
        rules.push(RuleOutcome {
            name: "slope_within_tolerance".into(),
            passed: gap <= cfg.slope_tolerance,
            detail: format!("slope {:.4} vs {:.4}, tolerance {}", f.slope, -e, cfg.slope_tolerance),
        });
    }

    let spearman_bias = if distinct(table.rows.iter().map(|r| r.delta_prime_n)) >= 3 {
        let dp: Vec<f64> = table.rows.iter().map(|r| r.delta_prime_n).collect();
        let bias: Vec<f64> = table.rows.iter().map(|r| r.bias_sq.sqrt()).collect();
        let rho = spearman(&dp, &bias);
        rules.push(RuleOutcome {
            name: "bias_tracks_asynchrony".into(),
            passed: rho >= 0.8,
            detail: format!("spearman {rho:.3}"),
        });
        Some(rho)
    } else {
        None
    };

    let passed = rules.iter().all(|r| r.passed);
    Summary {
        fit,
        fit_error,
        theoretical_exponent: theory,
        expected_slope: theory.map(|e| -e),
        slope_tolerance: cfg.slope_tolerance,
        scale_base: table.scale_base,
        strip_log,
        truth: table.truth,
        truth_source: table.truth_source,
        spearman_abs_bias_vs_delta_prime: spearman_bias,
        rules,
        passed,
    }
}

/// Log-log scatter of MSE against scale with the fitted line.
pub fn render_svg(table: &ResultTable, fit: Option<&ExponentFit>, strip_log: bool) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let xform = |v: f64| if strip_log { v / v.ln() } else { v };
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.mse > 0.0)
        .map(|r| (xform(r.scale).ln(), r.mse.ln()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.1).max(0.1);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = span(|p| p.0);
    let (y0, y1) = span(|p| p.1);
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = h - m,
        r = w - m
    );
    let label = match (table.scale_base, strip_log) {
        (ScaleBase::Horizon, false) => "log T",
        (ScaleBase::Horizon, true) => "log (T / log T)",
        (ScaleBase::Count, false) => "log n",
        (ScaleBase::Count, true) => "log (n / log n)",
    };
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{label}</text>"#, w / 2.0, h - 20.0);
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {})">log MSE</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (x, y) in &pts {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#, px(*x), py(*y));
    }
    if let Some(f) = fit {
        let (ya, yb) = (f.intercept + f.slope * x0, f.intercept + f.slope * x1);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="2"/>"#,
            px(x0),
            py(ya),
            px(x1),
            py(yb)
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="14">slope {:.3}</text>"#, w - m - 120.0, m - 20.0, f.slope);
    }
    svg.push_str("</svg>\n");
    svg
}
