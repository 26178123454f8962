//! Implementations of the CLI subcommands: each returns a JSON document and
//! an exit code (0 pass, 1 tolerance failure).

use serde::Deserialize;
use serde_json::{json, Value};

use fracjac_core::degree::{degree_boundary, degree_changevar, PreimageFinder};
use fracjac_core::error::{Error, Result};
use fracjac_core::jacobian::{jacobian_pairing, PairingMode};
use fracjac_core::lipset::LipschitzSet;
use fracjac_core::maps::MapR2;
use fracjac_core::measures::{flat_norm, AtomicMeasure, MatchEdge};
use fracjac_core::mollifier::{ExtensionField, Mollifier};
use fracjac_core::norms;
use fracjac_core::testfn::{SmoothTestFn, TestFunction};
use fracjac_core::trace;
use fracjac_core::verify::{self, ExperimentReport, ReportInputs};
use fracjac_core::{Domain, VectorField};

use crate::config::VerifyConfig;

pub fn parse_point(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!("expected x,y - got {s:?}")));
    }
    let x = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("bad coordinate {:?}", parts[0])))?;
    let y = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("bad coordinate {:?}", parts[1])))?;
    Ok([x, y])
}

pub fn cmd_norm(
    field: &str,
    domain: &str,
    s: f64,
    p: f64,
    alpha: Option<f64>,
) -> Result<(Value, i32)> {
    let u = VectorField::from_spec(field)?;
    let dom = Domain::from_spec(domain)?;
    let start = std::time::Instant::now();
    let seminorm = norms::fractional_seminorm(&u, &dom, s, p)?;
    let lp = norms::lp_norm(&u, &dom, p)?;
    let mut out = json!({
        "field": field,
        "domain": domain,
        "s": s,
        "p": p,
        "value": seminorm,
        "lp_norm": lp,
        "sobolev_norm": lp + seminorm,
        "resolution": dom.resolution,
        "runtime_ms": start.elapsed().as_millis() as u64,
    });
    if let Some(a) = alpha {
        out["alpha"] = json!(a);
        out["holder_norm"] = json!(norms::holder_norm(&u, &dom, a)?);
    }
    Ok((out, 0))
}

pub fn cmd_pairing(field: &str, domain: &str, test: &str, mode: &str) -> Result<(Value, i32)> {
    let u = VectorField::from_spec(field)?;
    let dom = Domain::from_spec(domain)?;
    let psi = TestFunction::from_spec(test)?;
    psi.as_smooth()?.check_support(&dom)?;
    let out = match mode {
        "divergence" => {
            let v = jacobian_pairing(&u, &psi, &dom, PairingMode::Divergence)?;
            json!({ "field": field, "test": test, "mode": "divergence", "value": v })
        }
        "direct" => {
            let v = jacobian_pairing(&u, &psi, &dom, PairingMode::Direct)?;
            json!({ "field": field, "test": test, "mode": "direct", "value": v })
        }
        "both" => {
            let div = jacobian_pairing(&u, &psi, &dom, PairingMode::Divergence)?;
            let dir = jacobian_pairing(&u, &psi, &dom, PairingMode::Direct)?;
            json!({
                "field": field,
                "test": test,
                "divergence": div,
                "direct": dir,
                "gap": (div - dir).abs(),
                "rel_gap": (div - dir).abs() / (1.0 + dir.abs()),
            })
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "mode must be divergence|direct|both, got {other:?}"
            )))
        }
    };
    Ok((out, 0))
}

pub fn cmd_degree(field: &str, domain: &str, a: [f64; 2], method: &str) -> Result<(Value, i32)> {
    let u = VectorField::from_spec(field)?;
    let dom = Domain::from_spec(domain)?;
    let report_json = |r: &fracjac_core::degree::DegreeReport| {
        json!({
            "degree": r.degree,
            "raw": r.raw,
            "method": r.method,
            "min_abs_det": if r.min_abs_det.is_finite() { json!(r.min_abs_det) } else { Value::Null },
            "dist_to_boundary_image": r.dist_to_boundary_image,
            "non_integer": r.non_integer,
        })
    };
    match method {
        "preimage" => {
            let r = PreimageFinder::new(&u, &dom).degree(&a)?;
            Ok((json!({ "target": a, "preimage": report_json(&r) }), 0))
        }
        "boundary" => {
            let r = degree_boundary(&u, &dom, &a)?;
            Ok((json!({ "target": a, "boundary": report_json(&r) }), 0))
        }
        "all" => {
            let pre = PreimageFinder::new(&u, &dom).degree(&a)?;
            let bdy = degree_boundary(&u, &dom, &a)?;
            let bump_r = 0.15 * dom.diameter() / 2.0;
            let psi = SmoothTestFn::bump(a, bump_r, 1.0);
            let cv = degree_changevar(&u, &dom, &psi);
            let psi_mass = psi.integral.unwrap();
            let raw_gap = (bdy.raw - pre.degree as f64).abs();
            let cv_expected = pre.degree as f64 * psi_mass;
            let cv_gap = (cv - cv_expected).abs();
            let cv_rel = cv_gap / cv_expected.abs().max(psi_mass);
            let agree = raw_gap < 1e-2 && cv_rel < 0.02;
            Ok((
                json!({
                    "target": a,
                    "preimage": report_json(&pre),
                    "boundary": report_json(&bdy),
                    "changevar": { "value": cv, "bump_integral": psi_mass,
                                   "expected": cv_expected, "rel_gap": cv_rel },
                    "agreement": { "raw_gap": raw_gap, "changevar_rel_gap": cv_rel,
                                   "pass": agree },
                }),
                if agree { 0 } else { 1 },
            ))
        }
        other => Err(Error::InvalidParameter(format!(
            "method must be preimage|boundary|all, got {other:?}"
        ))),
    }
}

#[derive(Deserialize)]
struct AtomJson {
    x: [f64; 2],
    sign: i8,
}

pub fn cmd_flatnorm(atoms_path: &str, domain: &str, scale: f64) -> Result<(Value, i32)> {
    let text = std::fs::read_to_string(atoms_path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {atoms_path}: {e}")))?;
    let atoms: Vec<AtomJson> = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("bad atoms JSON: {e}")))?;
    let dom = Domain::from_spec(domain)?;
    let mu = AtomicMeasure::new(atoms.iter().map(|a| (a.x, a.sign)).collect(), scale);
    let res = flat_norm(&mu, &dom);
    let matching: Vec<Value> = res
        .matching
        .iter()
        .map(|e| match e {
            MatchEdge::Pair { pos, neg } => json!({ "pos": pos, "neg": neg }),
            MatchEdge::PosToBoundary { pos } => json!({ "pos": pos, "neg": "BOUNDARY" }),
            MatchEdge::NegToBoundary { neg } => json!({ "pos": "BOUNDARY", "neg": neg }),
        })
        .collect();
    Ok((
        json!({
            "atoms": atoms.len(),
            "scale": scale,
            "value": res.value,
            "matching": matching,
            "certificate_gap": res.certificate_gap,
        }),
        0,
    ))
}

pub fn cmd_trace(
    field: &str,
    domain: &str,
    a: [f64; 2],
    slab: [f64; 2],
    dump: Option<&str>,
    kernel_pts: usize,
) -> Result<(Value, i32)> {
    let u = VectorField::from_spec(field)?;
    let dom = Domain::from_spec(domain)?;
    let ext = ExtensionField::new(u, Mollifier::standard(), dom, kernel_pts);
    let out = trace::trace_level_set(&ext, &a, slab[0], slab[1])?;
    let curves_json: Vec<Value> = out
        .curves
        .iter()
        .map(|c| {
            json!({
                "vertices": c.vertices,
                "length": c.length,
                "endpoints": c.endpoints.map(|(s, e)| vec![endpoint_json(s), endpoint_json(e)]),
                "closed": c.endpoints.is_none(),
            })
        })
        .collect();
    if let Some(path) = dump {
        std::fs::write(path, serde_json::to_string_pretty(&curves_json).unwrap())
            .map_err(|e| Error::InvalidParameter(format!("cannot write {path}: {e}")))?;
    }
    Ok((
        json!({
            "target": a,
            "slab": slab,
            "curves": out.curves.len(),
            "total_length": out.total_length(),
            "warnings": out.warnings,
            "dumped": dump,
        }),
        0,
    ))
}

fn endpoint_json(e: trace::EndpointClass) -> Value {
    match e {
        trace::EndpointClass::Bottom { sign } => json!({ "class": "bottom", "sign": sign }),
        trace::EndpointClass::Top { sign } => json!({ "class": "top", "sign": sign }),
        trace::EndpointClass::Lateral => json!({ "class": "lateral" }),
    }
}

pub fn cmd_extend(
    field: &str,
    domain: &str,
    t: f64,
    probe: [f64; 2],
    kernel_pts: usize,
) -> Result<(Value, i32)> {
    let u = VectorField::from_spec(field)?;
    let dom = Domain::from_spec(domain)?;
    let ext = ExtensionField::new(u, Mollifier::standard(), dom, kernel_pts);
    let v = ext.value(&probe, t)?;
    let jet = ext.jet(&probe, t)?;
    Ok((
        json!({
            "field": field,
            "t": t,
            "probe": probe,
            "value": v,
            "grad_x": [[jet.grad_x.get(0,0), jet.grad_x.get(0,1)],
                       [jet.grad_x.get(1,0), jet.grad_x.get(1,1)]],
            "dt": jet.dt,
        }),
        0,
    ))
}

/// Builds a test function for a domain when the config omits one: a bump
/// centered in the domain with radius 0.3 of the half-diameter.
fn default_bump(dom: &Domain) -> TestFunction {
    let (lo, hi) = dom.bbox();
    TestFunction::bump(
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
        0.3 * (hi[0] - lo[0]),
        1.0,
    )
}

pub fn run_verify(experiment: &str, cfg: &VerifyConfig) -> Result<ExperimentReport> {
    let u = VectorField::from_spec(&cfg.field)?;
    let dom = Domain::from_spec(&cfg.domain)?;
    let seed = cfg.seed.unwrap_or(42);
    let psi = match &cfg.test {
        Some(t) => TestFunction::from_spec(t)?,
        None => default_bump(&dom),
    };
    let f_map = match &cfg.f_map {
        Some(f) => MapR2::from_spec(f)?,
        None => MapR2::identity(),
    };
    match experiment {
        "weak_coarea" | "weak_chain" => {
            let wc = verify::WeakConfig {
                samples: cfg.samples.unwrap_or(5000),
                seed,
                tolerance_rel: cfg.tolerance_rel.unwrap_or(0.02),
                ..Default::default()
            };
            if experiment == "weak_coarea" {
                verify::weak_coarea_experiment(&u, &psi, &dom, &wc)
            } else {
                verify::weak_chain_experiment(&u, &f_map, &psi, &dom, &wc)
            }
        }
        "strong_chain" => verify::strong_chain_experiment(
            &u,
            &f_map,
            &psi,
            &dom,
            cfg.tolerance_rel.unwrap_or(1e-3),
        ),
        "strong_coarea" => {
            let sc = verify::StrongCoareaConfig {
                samples: cfg.samples.unwrap_or(4000),
                dictionary: cfg.dictionary.unwrap_or(256),
                seed,
                overlap_tol: cfg.tolerance_rel.unwrap_or(0.05),
            };
            verify::strong_coarea_experiment(&u, &dom, &sc)
        }
        "holder_chain" => {
            let set = match &cfg.lipset {
                Some(spec) => LipschitzSet::from_spec(spec, &dom)?,
                None => {
                    let (lo, hi) = dom.bbox();
                    LipschitzSet::circle(
                        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
                        0.25 * (hi[0] - lo[0]),
                        256,
                        &dom,
                    )?
                }
            };
            let hc = verify::HolderChainConfig {
                eps_seq: cfg.eps_seq.clone().unwrap_or(vec![0.08, 0.04, 0.02, 0.01]),
                samples: cfg.samples.unwrap_or(2000),
                seed,
                tolerance_rel: cfg.tolerance_rel.unwrap_or(0.03),
                holder_exponent_check: cfg.alpha.unwrap_or(0.55),
                ..Default::default()
            };
            verify::holder_chain_experiment(&u, &f_map, &set, &dom, &hc)
        }
        "ua_continuity" => {
            let w = match &cfg.perturbation {
                Some(spec) => VectorField::from_spec(spec)?,
                None => VectorField::perturbation(1.0),
            };
            let uc = verify::UaContinuityConfig {
                eps_seq: cfg.eps_seq.clone().unwrap_or(vec![0.2, 0.1, 0.05, 0.025]),
                s: cfg.s.unwrap_or(0.8),
                p: cfg.p.unwrap_or(3.0),
                ball_radius: cfg.ball_radius.unwrap_or(1.5),
                samples: cfg.samples.unwrap_or(24),
                seed,
            };
            verify::ua_continuity_experiment(&u, &w, &dom, &uc)
        }
        "stability" => {
            let w = match &cfg.perturbation {
                Some(spec) => VectorField::from_spec(spec)?,
                None => VectorField::perturbation(1.0),
            };
            let alpha = cfg.alpha.unwrap_or(0.75);
            let eps_seq = cfg.eps_seq.clone().unwrap_or(vec![0.1, 0.01, 0.001]);
            let start = std::time::Instant::now();
            let mut rows = Vec::new();
            for &eps in &eps_seq {
                let v = VectorField::add_scaled(&u, &w, eps);
                let r = verify::stability_experiment(&u, &v, &psi, &dom, alpha)?;
                rows.push((eps, r));
            }
            let spread = |pick: fn(&verify::StabilityRatios) -> f64| -> f64 {
                let vals: Vec<f64> = rows.iter().map(|(_, r)| pick(r)).collect();
                let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mn = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                mx / mn.max(1e-300)
            };
            let spreads = [
                spread(|r| r.ratio_w_n1n),
                spread(|r| r.ratio_w_nn1),
                spread(|r| r.ratio_holder),
            ];
            let passed = spreads.iter().all(|&s| s <= 2.0);
            Ok(ExperimentReport {
                experiment: "stability".into(),
                inputs: ReportInputs {
                    field: Some(cfg.field.clone()),
                    domain: Some(cfg.domain.clone()),
                    test: cfg.test.clone(),
                    ..Default::default()
                },
                lhs: spreads.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                rhs: 1.0,
                abs_gap: 0.0,
                rel_gap: 0.0,
                mc_stderr: None,
                skip_fraction: None,
                tolerance: 2.0,
                passed,
                seed,
                runtime_ms: Some(start.elapsed().as_millis() as u64),
                extra: serde_json::json!({
                    "sweep": rows.iter().map(|(eps, r)| serde_json::json!({
                        "eps": eps, "gap": r.gap,
                        "ratio_w_n1n": r.ratio_w_n1n,
                        "ratio_w_nn1": r.ratio_w_nn1,
                        "ratio_holder": r.ratio_holder,
                    })).collect::<Vec<_>>(),
                    "ratio_spreads": spreads,
                }),
            })
        }
        "coarea_extension" => {
            let slab = cfg.slab.unwrap_or([0.05, 0.15]);
            let start = std::time::Instant::now();
            let ext = ExtensionField::new(u.clone(), Mollifier::standard(), dom.clone(), 20);
            let chk = trace::coarea_extension_check(
                &ext,
                slab[0],
                slab[1],
                cfg.samples.unwrap_or(2000),
                12,
                seed,
            )?;
            let tol = cfg.tolerance_rel.unwrap_or(0.05);
            let passed = (chk.lhs - chk.rhs).abs() <= 3.0 * chk.mc_stderr + tol * chk.rhs
                && chk.skip_fraction <= 0.1;
            Ok(ExperimentReport {
                experiment: "coarea_extension".into(),
                inputs: ReportInputs {
                    field: Some(cfg.field.clone()),
                    domain: Some(cfg.domain.clone()),
                    samples: Some(cfg.samples.unwrap_or(2000)),
                    ..Default::default()
                },
                lhs: chk.lhs,
                rhs: chk.rhs,
                abs_gap: (chk.lhs - chk.rhs).abs(),
                rel_gap: (chk.lhs - chk.rhs).abs() / chk.rhs.abs().max(1e-300),
                mc_stderr: Some(chk.mc_stderr),
                skip_fraction: Some(chk.skip_fraction),
                tolerance: tol,
                passed,
                seed,
                runtime_ms: Some(start.elapsed().as_millis() as u64),
                extra: serde_json::json!({ "warnings": chk.warnings, "slab": slab }),
            })
        }
        other => Err(Error::UnknownName(format!("experiment {other:?}"))),
    }
}

/// Flat CSV rows for sweep experiments (per-eps tables).
pub fn csv_rows(report: &ExperimentReport) -> Option<String> {
    let rows = report
        .extra
        .get("per_eps")
        .or_else(|| report.extra.get("I_of_eps"))
        .or_else(|| report.extra.get("sweep"))?
        .as_array()?;
    let mut keys: Vec<String> = Vec::new();
    if let Some(first) = rows.first().and_then(|r| r.as_object()) {
        keys = first.keys().cloned().collect();
    }
    let mut out = format!("experiment,{}\n", keys.join(","));
    for row in rows {
        let obj = row.as_object()?;
        let cells: Vec<String> = keys
            .iter()
            .map(|k| obj.get(k).map(|v| v.to_string()).unwrap_or_default())
            .collect();
        out.push_str(&format!("{},{}\n", report.experiment, cells.join(",")));
    }
    Some(out)
}
