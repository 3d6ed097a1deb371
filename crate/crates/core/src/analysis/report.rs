use std::fmt::Write;

use super::finality::FinalityReport;
use super::game::FictitiousPlayTrace;
use super::hessian::WitnessReport;

pub fn finality_text(r: &FinalityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[finality]");
    let _ = writeln!(s, "lifecycles = {}", r.lifecycles);
    let _ = writeln!(s, "geometric_pairs = {}", r.geometric_pairs);
    let _ = writeln!(s, "max_geometric_error = {:e}", r.max_geometric_error);
    let _ = writeln!(s, "status = {}", if r.passed() { "pass" } else { "fail" });
    for c in &r.counterexamples {
        let _ = writeln!(s, "counterexample sigma={} d={} : {}", c.sigma, c.d, c.detail);
    }
    s
}

pub fn witness_text(r: &WitnessReport) -> String {
    let mut s = String::new();
    let g = &r.grid;
    let _ = writeln!(s, "[nonconvexity]");
    let _ = writeln!(s, "grid_sigma = [{}, {}]", g.sigma.0, g.sigma.1);
    let _ = writeln!(s, "grid_q = [{}, {}]", g.q.0, g.q.1);
    let _ = writeln!(s, "points_per_axis = {}", g.points);
    let _ = writeln!(s, "negative_points = {}", r.negative_points);
    let _ = writeln!(s, "excluded_points = {}", r.excluded.len());
    match &r.witness {
        Some(w) => {
            let _ = writeln!(s, "witness_sigma = {}", w.sigma);
            let _ = writeln!(s, "witness_q = {}", w.q);
            let _ = writeln!(s, "hessian = [{:e}, {:e}; {:e}, {:e}]", w.a, w.b, w.b, w.c);
            let _ = writeln!(s, "determinant = {:e}", w.determinant());
        }
        None => {
            let _ = writeln!(s, "witness = none");
        }
    }
    s
}

pub fn trace_text(t: &FictitiousPlayTrace) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[exploitability]");
    let _ = writeln!(s, "iterations = {}", t.exploitability.len());
    for (i, e) in t.exploitability.iter().enumerate() {
        let _ = writeln!(s, "{}\t{:e}", i + 1, e);
    }
    for (p, m) in t.profile.iter().enumerate() {
        let probs: Vec<String> = m.probs().iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(s, "player_{p} = [{}]", probs.join(", "));
    }
    s
}
