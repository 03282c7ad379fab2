//! Acceptance criteria of the lab, one function per criterion.
//!
//! Each criterion runs at its full size and returns a verdict, a one-line
//! summary and an exact serialization of every number it produced, which
//! the determinism criterion compares across runs.

use std::time::Instant;

use serde::Serialize;
use wigner_lab::experiment::drivers::{
    delocalization_stats, gap_stats, haar_entry_stats, level_repulsion_stats, local_law_stats,
    resolvent_route_comparison,
};
use wigner_lab::resolvent::m_sc;
use wigner_lab::spectral::{PhiConfig, PhiIndex};
use wigner_lab::stats::{
    clt_projection_experiment, coefficient_distributions, four_moment_compare, CltThresholds,
    IndexRule, NormalizationKind, TestReport, VectorRule,
};
use wigner_lab::{Complex64, Group, SmoothFunctional, WignerSpec};

pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    /// Every number the criterion produced, serialized exactly.
    pub fingerprint: String,
}

fn outcome<T: Serialize>(reports: &[&TestReport], summary: String, data: &T) -> Outcome {
    Outcome {
        pass: reports.iter().all(|r| r.pass),
        summary,
        fingerprint: serde_json::to_string(data).unwrap(),
    }
}

fn fmt(r: &TestReport) -> String {
    format!("{:.4}/{:.4}", r.statistic, r.threshold)
}

pub fn coefficient_universality() -> Outcome {
    let n = 200;
    let mut reports = Vec::new();
    let mut data = Vec::new();
    for (k, spec) in [
        WignerSpec::goe(n).unwrap(),
        WignerSpec::matched_goe(n).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let rs = coefficient_distributions(
            &spec,
            IndexRule::Middle,
            &[2, 1],
            NormalizationKind::Adhoc,
            2000,
            1000 + k as u64,
            0.05,
        )
        .unwrap();
        for r in rs {
            data.push(r.samples);
            reports.push(r.ks);
        }
    }
    let summary = format!(
        "KS u[100,2] goe {} matched {}; u[100,1] vs half-normal goe {} matched {}",
        fmt(&reports[0]),
        fmt(&reports[2]),
        fmt(&reports[1]),
        fmt(&reports[3])
    );
    outcome(
        &reports.iter().collect::<Vec<_>>(),
        summary,
        &(reports.clone(), data),
    )
}

pub fn projection_clt() -> Outcome {
    let n = 200;
    let mut reports = Vec::new();
    let mut data = Vec::new();
    let mut parts = Vec::new();
    for (k, spec) in [
        WignerSpec::goe(n).unwrap(),
        WignerSpec::matched_goe(n).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let r = clt_projection_experiment(
            &spec,
            IndexRule::Middle,
            &VectorRule::Flat,
            NormalizationKind::Random,
            1000,
            2000 + k as u64,
            CltThresholds::default(),
            false,
        )
        .unwrap();
        parts.push(format!(
            "{} KS {} |mean| {} |var-1| {}",
            spec.name(),
            fmt(&r.ks),
            fmt(&r.mean),
            fmt(&r.variance)
        ));
        reports.extend(r.reports());
        data.push(r.samples);
    }
    outcome(
        &reports.iter().collect::<Vec<_>>(),
        parts.join("; "),
        &(reports.clone(), data),
    )
}

pub fn four_moment() -> Outcome {
    let n = 100;
    let phi = PhiConfig::new(vec![PhiIndex {
        i: n / 2,
        p: 1,
        q: 1,
    }])
    .unwrap();
    let g = SmoothFunctional::GaussianBump {
        center: vec![0.0, 1.0, 0.0],
        width: 2.0,
    };
    let r = four_moment_compare(
        &WignerSpec::goe(n).unwrap(),
        &WignerSpec::matched_goe(n).unwrap(),
        &phi,
        &g,
        2000,
        3000,
        false,
    )
    .unwrap();
    let summary = format!(
        "|mean goe {:.5} - matched {:.5}| = {:.5} vs 3 SE {:.5}",
        r.details["mean_a"], r.details["mean_b"], r.statistic, r.threshold
    );
    outcome(&[&r], summary, &r)
}

pub fn resolvent_routes() -> Outcome {
    let c =
        resolvent_route_comparison(&WignerSpec::goe(50).unwrap(), 100, 4000, 1e-6, 1e-8).unwrap();
    let summary = format!(
        "{}/100 pairs agree within 1e-8; worst relative disagreement {:.2e}",
        c.report.details["agreeing"], c.report.statistic
    );
    outcome(&[&c.report], summary, &c)
}

pub fn semicircle_transform() -> Outcome {
    let c = |re, im| Complex64::new(re, im);
    let mut worst = 0.0f64;
    let mut branch_ok = true;
    for a in 0..10 {
        for b in 0..10 {
            let z = c(
                -3.0 + 6.0 * a as f64 / 9.0,
                1e-3 * 1e4f64.powf(b as f64 / 9.0),
            );
            let m = m_sc(z).unwrap();
            worst = worst.max((m * m + z * m + 1.0).norm());
            branch_ok &= m.im > 0.0;
        }
    }
    let e1 = (m_sc(c(0.0, 2.0)).unwrap() - c(0.0, 2f64.sqrt() - 1.0)).norm();
    let e2 = (m_sc(c(0.0, 1.0)).unwrap() - c(0.0, (5f64.sqrt() - 1.0) / 2.0)).norm();
    let r = TestReport::new("m_sc", worst.max(e1).max(e2), 1e-12);
    let summary = format!(
        "grid identity residual {worst:.2e}, point errors {e1:.2e} {e2:.2e}, branch Im m > 0: {branch_ok}"
    );
    Outcome {
        pass: r.pass && branch_ok,
        summary,
        fingerprint: serde_json::to_string(&(worst, e1, e2)).unwrap(),
    }
}

pub fn local_law() -> Outcome {
    let l = local_law_stats(
        &WignerSpec::goe(500).unwrap(),
        Complex64::new(0.1, 0.1),
        50,
        6000,
        0.15,
        0.95,
    )
    .unwrap();
    let summary = format!(
        "{:.0}% of seeds within 0.15 (need >= 95%); mean deviation {:.3}, max {:.3}",
        100.0 * (1.0 - l.report.statistic),
        l.report.details["mean_deviation"],
        l.report.details["max_deviation"]
    );
    outcome(&[&l.report], summary, &l)
}

pub fn level_repulsion() -> Outcome {
    let n = 100;
    let s = level_repulsion_stats(
        &WignerSpec::goe(n).unwrap(),
        Complex64::new(0.0, 0.0),
        1,
        2,
        500,
        7000,
        (n as f64).powi(-2),
        0.95,
        1e-8,
    )
    .unwrap();
    let summary = format!(
        "{:.1}% of seeds with margin > n^-2 (need >= 95%); inverse vs spectral worst {:.2e} over {} nonsingular draws",
        100.0 * (1.0 - s.margin_report.statistic),
        s.agreement_report.statistic,
        500 - s.agreement_report.excluded
    );
    outcome(&[&s.margin_report, &s.agreement_report], summary, &s)
}

pub fn gap_consistency() -> Outcome {
    let n = 100;
    let g = gap_stats(
        &WignerSpec::goe(n).unwrap(),
        500,
        8000,
        (n as f64).powi(-2),
        0.02,
    )
    .unwrap();
    let summary = format!(
        "{:.1}% of seeds with bulk min gap <= n^-2 (allowed 2%); mean bulk gap {:.3}",
        100.0 * g.report.statistic,
        g.report.details["mean_bulk_gap"]
    );
    outcome(&[&g.report], summary, &g)
}

pub fn delocalization() -> Outcome {
    let d = delocalization_stats(&WignerSpec::goe(400).unwrap(), 100, 9000, 7.0, 0.95).unwrap();
    let summary = format!(
        "{:.0}% of seeds with sqrt(n) sup|u| <= 7 (need >= 95%); largest {:.3}",
        100.0 * (1.0 - d.report.statistic),
        d.report.details["max_scaled_sup"]
    );
    outcome(&[&d.report], summary, &d)
}

pub fn haar_reference() -> Outcome {
    let h = haar_entry_stats(Group::Orthogonal, 100, 10_000, 10_000, 1, 1, 0.03).unwrap();
    let summary = format!(
        "KS {}; E[n u^2] = {:.4}, |. - 1| {:.4} vs 3 SE {:.4}",
        fmt(&h.ks),
        h.second_moment.details["mean"],
        h.second_moment.statistic,
        h.second_moment.threshold
    );
    outcome(&[&h.ks, &h.second_moment], summary, &h)
}

pub type Criterion = (&'static str, fn() -> Outcome);

pub const CRITERIA: [Criterion; 10] = [
    ("coefficient universality", coefficient_universality),
    ("projection CLT", projection_clt),
    ("four-moment indistinguishability", four_moment),
    ("resolvent route equivalence", resolvent_routes),
    ("semicircle transform", semicircle_transform),
    ("local law", local_law),
    ("level repulsion and inverse", level_repulsion),
    ("gap consistency", gap_consistency),
    ("delocalization", delocalization),
    ("Haar reference", haar_reference),
];

pub fn line(k: usize, name: &str, pass: bool, secs: f64, summary: &str) {
    println!(
        "criterion {k:>2} {} {name}: {summary} [{secs:.1}s]",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Run criteria 1 to 10 on a pool of `threads` workers.
pub fn run_all(threads: usize, print: bool) -> Vec<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        CRITERIA
            .iter()
            .enumerate()
            .map(|(k, (name, f))| {
                let t = Instant::now();
                let o = f();
                if print {
                    line(k + 1, name, o.pass, t.elapsed().as_secs_f64(), &o.summary);
                }
                o
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass_and_repeat() {
        for f in [semicircle_transform, resolvent_routes] {
            let (a, b) = (f(), f());
            assert!(a.pass, "{}", a.summary);
            assert_eq!(a.fingerprint, b.fingerprint);
        }
    }
}
