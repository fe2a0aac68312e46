use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{ExperimentConfig, ExperimentReport, Table};
use crate::cones::{
    check_norm_gap, log_apertures, search_apertures, verify_cone_field_at, verify_partial_hyperbolicity_at, ConeSpec, GridSpec,
};
use crate::estimators::{
    lyapunov_periodic, lyapunov_qr, markov_pruned_entropy, measure_index, separated_set_entropy, verify_separated, volume_growth,
    MarkovPartition,
};
use crate::homology::poly::{sturm_count, QPoly};
use crate::homology::{
    char_poly, eigenvalues, exterior_power, homological_entropy, invariant_splitting, is_hyperbolic_action, linear_entropy,
};
use crate::torus_maps::{
    from_descriptor, project, DerivedMap, DerivedParams, IsotopyParams, LinearMap, SkewParams, SkewProduct, TorusMap, TorusPoint,
};
use crate::{Error, IntMatrix};

/// Independent stream per stage, derived from the master seed.
fn rng_for(seed: u64, stage: &str) -> ChaCha8Rng {
    let h = stage.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

fn random_points(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

fn load_map(cfg: &ExperimentConfig) -> Result<Box<dyn TorusMap>, Error> {
    match cfg.read_file("map_file")? {
        Some(text) => {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Input(format!("map_file: {e}")))?;
            from_descriptor(&v)
        }
        None => Ok(Box::new(LinearMap::new(cfg.matrix()?)?)),
    }
}

fn is_linear(map: &dyn TorusMap) -> bool {
    map.descriptor().get("kind").and_then(|k| k.as_str()) == Some("linear")
}

/// Columns: unstable, center, stable bases; returns (frame, u, s).
fn eigen_frame(a: &IntMatrix) -> Result<(DMatrix<f64>, usize, usize), Error> {
    let sp = invariant_splitting(a)?;
    let cols: Vec<nalgebra::DVector<f64>> =
        sp.unstable.iter().chain(&sp.center).chain(&sp.stable).map(|v| nalgebra::DVector::from_column_slice(v)).collect();
    Ok((DMatrix::from_columns(&cols), sp.unstable.len(), sp.stable.len()))
}

fn default_iterations(u: usize, configured: usize) -> usize {
    match (configured, u) {
        (0, 1) => 10,
        (0, _) => 5,
        (n, _) => n,
    }
}

fn log_moduli_desc(a: &IntMatrix) -> Result<Vec<f64>, Error> {
    Ok(eigenvalues(a)?.moduli.iter().map(|m| m.ln()).collect())
}

pub(super) fn homology(cfg: &ExperimentConfig, r: &mut ExperimentReport) -> Result<(), Error> {
    let a = cfg.matrix()?;
    let tol = cfg.positive("tol")?;
    let h = r.time("homology", || homological_entropy(&a))?;
    let mut t = Table::new(&["k", "spectral_radius", "log_radius"]);
    for (k, rad) in &h.per_k_radius {
        t.push([k.to_string(), rad.to_string(), rad.ln().to_string()]);
    }
    r.tables.insert("per_k".into(), t);
    r.exact("linear_part", &a);
    r.exact("homology", &h);
    let gap = (h.h_h - h.linear_entropy).abs();
    r.verdict("1", "hH equals linear entropy", gap <= tol, format!("hH = {:.10}, linear entropy = {:.10}", h.h_h, h.linear_entropy));
    r.verdict("1", "u0 equals unstable index", h.u0 == h.unstable_index, format!("u0 = {}, unstable index = {}", h.u0, h.unstable_index));

    let trials: usize = cfg.parse("oracle_trials")?;
    if trials > 0 {
        let mut rng = rng_for(cfg.seed()?, "exterior-oracle");
        let (worst_sp, all_exact) = r.time("exterior_oracle", || -> Result<(f64, bool), Error> {
            let mut worst = 0.0_f64;
            let mut exact = true;
            for i in 0..trials {
                let d = 3 + i % 3;
                let m = IntMatrix::random_unimodular(d, 8, &mut rng);
                let n = IntMatrix::random_unimodular(d, 8, &mut rng);
                let moduli = eigenvalues(&m)?.moduli;
                for k in 1..=d {
                    let sp = crate::homology::spectral_radius(&exterior_power(&m, k)?)?;
                    let prod: f64 = moduli[..k].iter().product();
                    worst = worst.max((sp - prod).abs() / prod.max(1.0));
                    exact &= exterior_power(&m.mul(&n), k)? == exterior_power(&m, k)?.mul(&exterior_power(&n, k)?);
                }
            }
            Ok((worst, exact))
        })?;
        r.estimate("exterior_oracle", json!({ "trials": trials, "worst_relative_error": worst_sp, "multiplicative": all_exact }));
        r.verdict(
            "2",
            "exterior powers: spectral radius and multiplicativity",
            worst_sp <= 1e-6 && all_exact,
            format!("{trials} matrices, worst relative error {worst_sp:.2e}, multiplicative = {all_exact}"),
        );
    }
    Ok(())
}

pub(super) fn baseline(cfg: &ExperimentConfig, r: &mut ExperimentReport) -> Result<(), Error> {
    let a = cfg.matrix()?;
    if !is_hyperbolic_action(&a) {
        return Err(Error::Input("baseline needs a hyperbolic matrix".into()));
    }
    let seed = cfg.seed()?;
    let tol = cfg.positive("tol")?;
    let h = homological_entropy(&a)?;
    r.exact("linear_part", &a);
    r.exact("homology", &h);
    r.verdict("1", "hH equals linear entropy", (h.h_h - h.linear_entropy).abs() <= 1e-9, format!("hH = {:.10}", h.h_h));
    let map = LinearMap::new(a.clone())?;
    let d = a.dim();

    let (n, eps, samples) = (cfg.parse::<usize>("entropy.n")?, cfg.positive("entropy.epsilon")?, cfg.parse::<usize>("entropy.samples")?);
    let est = r.time("entropy", || separated_set_entropy(&map, n, eps, samples, seed))?;
    let separated = r.time("entropy_verify", || verify_separated(&map, &est.set, n, eps));
    let mut t = Table::new(&["n", "epsilon", "count", "rate"]);
    t.push([est.n.to_string(), est.epsilon.to_string(), est.count.to_string(), format!("{:.6}", est.rate)]);
    r.tables.insert("entropy".into(), t);
    r.verdict(
        "4",
        "separated set is a verified lower bound",
        separated,
        format!("count {} at n = {n}, eps = {eps}: rate {:.4} (exact {:.4})", est.count, est.rate, h.linear_entropy),
    );
    r.estimate("entropy", &est);

    let expected = log_moduli_desc(&a)?;
    let mut rng = rng_for(seed, "lyapunov-points");
    let pts = random_points(&mut rng, d, cfg.parse("lyapunov.points")?);
    let (ln, burn) = (cfg.parse::<usize>("lyapunov.n")?, cfg.parse::<usize>("lyapunov.burn_in")?);
    let mut worst = 0.0_f64;
    let mut t = Table::new(&["point", "index", "exponent", "expected"]);
    let mut ests = Vec::new();
    r.time("lyapunov", || -> Result<(), Error> {
        for (i, p) in pts.iter().enumerate() {
            let e = lyapunov_qr(&map, &TorusPoint(p.clone()), ln, burn, seed.wrapping_add(i as u64))?;
            for (j, (x, y)) in e.exponents.iter().zip(&expected).enumerate() {
                worst = worst.max((x - y).abs());
                t.push([i.to_string(), j.to_string(), x.to_string(), y.to_string()]);
            }
            worst = worst.max(e.sum().abs());
            ests.push(e);
        }
        Ok(())
    })?;
    r.tables.insert("lyapunov".into(), t);
    r.estimate("lyapunov", &ests);
    r.verdict("3", "Lyapunov spectrum matches log moduli", worst <= tol, format!("worst deviation {worst:.2e} over {} orbits", pts.len()));

    let u = h.unstable_index;
    if u == 1 || u == 2 {
        let sp = invariant_splitting(&a)?;
        let iters = default_iterations(u, cfg.parse("volume.iterations")?);
        let base = TorusPoint(random_points(&mut rng_for(seed, "volume-base"), d, 1).remove(0));
        let v = r.time("volume", || {
            volume_growth(&map, &base, &sp.unstable[..u], cfg.positive("volume.radius")?, iters, cfg.parse("volume.max_vertices")?)
        })?;
        let exact = h.per_k_radius[&u].ln();
        let vt = cfg.positive("volume.tol")? * u as f64;
        let mut t = Table::new(&["iteration", "vertices", "log_volume"]);
        for (i, (nv, lv)) in v.vertices.iter().zip(&v.log_volumes).enumerate() {
            t.push([i.to_string(), nv.to_string(), lv.to_string()]);
        }
        r.tables.insert("volume".into(), t);
        r.verdict(
            "6",
            "volume growth matches log sp of the u-th exterior power",
            (v.chi - exact).abs() < vt && !v.partial,
            format!("chi_{u} = {:.4}, exact {exact:.4}, tolerance {vt}", v.chi),
        );
        r.estimate("volume", &v);
    } else {
        r.estimate("volume", json!({ "skipped": format!("unstable index {u} is not 1 or 2") }));
    }
    Ok(())
}

pub(super) fn volume(cfg: &ExperimentConfig, r: &mut ExperimentReport) -> Result<(), Error> {
    let map = load_map(cfg)?;
    let a = map.linear_part().clone();
    let h = homological_entropy(&a)?;
    let configured: usize = cfg.parse("u")?;
    let u = if configured == 0 { h.unstable_index } else { configured };
    if !(u == 1 || u == 2) {
        return Err(Error::Input(format!("volume growth needs u in {{1, 2}}, got {u}")));
    }
    let sp = invariant_splitting(&a)?;
    if sp.unstable.len() < u {
        return Err(Error::Input(format!("linear part has only {} expanding directions", sp.unstable.len())));
    }
    r.exact("linear_part", &a);
    r.exact("homology", &h);
    let exact = h.per_k_radius[&u].ln();
    r.exact("log_sp_exterior_u", exact);
    let seed = cfg.seed()?;
    let bases = random_points(&mut rng_for(seed, "volume-base"), a.dim(), cfg.parse("base_points")?);
    let iters = default_iterations(u, cfg.parse("iterations")?);
    let (radius, budget) = (cfg.positive("radius")?, cfg.parse::<usize>("max_vertices")?);
    let mut t = Table::new(&["base", "chi", "iterations", "vertices", "partial"]);
    let mut ests = Vec::new();
    r.time("volume", || -> Result<(), Error> {
        for (i, b) in bases.iter().enumerate() {
            let v = volume_growth(map.as_ref(), &TorusPoint(b.clone()), &sp.unstable[..u], radius, iters, budget)?;
            t.push([i.to_string(), v.chi.to_string(), v.iterations.to_string(), v.vertices.last().copied().unwrap_or(0).to_string(), v.partial.to_string()]);
            ests.push(v);
        }
        Ok(())
    })?;
    let chi = ests.iter().map(|v| v.chi).fold(f64::NEG_INFINITY, f64::max);
    let partial = ests.iter().any(|v| v.partial);
    r.tables.insert("volume".into(), t);
    r.estimate("volume", &ests);
    r.estimate("chi_max", chi);
    let vt = cfg.positive("tol")? * u as f64;
    r.verdict(
        "6",
        "volume growth matches log sp of the u-th exterior power",
        (chi - exact).abs() < vt && !partial,
        format!("max chi_{u} = {chi:.4} over {} disks, exact {exact:.4}, tolerance {vt}", ests.len()),
    );
    Ok(())
}

pub(super) fn lyapunov(cfg: &ExperimentConfig, r: &mut ExperimentReport) -> Result<(), Error> {
    let map = load_map(cfg)?;
    let a = map.linear_part().clone();
    let seed = cfg.seed()?;
    let tol = cfg.positive("tol")?;
    let pts = random_points(&mut rng_for(seed, "lyapunov-points"), a.dim(), cfg.parse("points")?);
    let (n, burn) = (cfg.parse::<usize>("n")?, cfg.parse::<usize>("burn_in")?);
    let mut ests = Vec::new();
    r.time("lyapunov", || -> Result<(), Error> {
        for (i, p) in pts.iter().enumerate() {
            ests.push(lyapunov_qr(map.as_ref(), &TorusPoint(p.clone()), n, burn, seed.wrapping_add(i as u64))?);
        }
        Ok(())
    })?;
    let mut t = Table::new(&["point", "index", "exponent"]);
    for (i, e) in ests.iter().enumerate() {
        for (j, x) in e.exponents.iter().enumerate() {
            t.push([i.to_string(), j.to_string(), x.to_string()]);
        }
    }
    r.tables.insert("lyapunov".into(), t);
    r.exact("linear_part", &a);
    if is_linear(map.as_ref()) {
        let expected = log_moduli_desc(&a)?;
        r.exact("log_moduli", &expected);
        let worst = ests
            .iter()
            .flat_map(|e| e.exponents.iter().zip(&expected).map(|(x, y)| (x - y).abs()).chain([e.sum().abs()]))
            .fold(0.0, f64::max);
        r.verdict("3", "Lyapunov spectrum matches log moduli", worst <= tol, format!("worst deviation {worst:.2e}"));
    } else {
        let worst = ests.iter().map(|e| (e.sum() - e.log_det_average).abs()).fold(0.0, f64::max);
        r.verdict("3", "exponent sum equals mean log|det|", worst <= tol, format!("worst deviation {worst:.2e}"));
    }
    r.estimate("lyapunov", &ests);
    Ok(())
}

pub(super) fn cones(cfg: &ExperimentConfig, r: &mut ExperimentReport) -> Result<(), Error> {
    let map = load_map(cfg)?;
    let a = map.linear_part().clone();
    let d = a.dim();
    let (frame, u, s) = eigen_frame(&a)?;
    if u == 0 || s == 0 {
        return Err(Error::Input("the cone check needs expanding and contracting directions".into()));
    }
    let gamma = cfg.positive("gamma")?;
    let u_core: Vec<usize> = (0..u).collect();
    let s_core: Vec<usize> = (d - s..d).collect();
    let uc = ConeSpec::new(d, &u_core, &[], gamma, gamma)?.with_frame(frame.clone())?;
    let sc = ConeSpec::new(d, &s_core, &[], gamma, gamma)?.with_frame(frame)?;
    let seed = cfg.seed()?;
    let mut grid = GridSpec::uniform(d, cfg.parse("grid")?);
    grid.seed = seed;
    let mut pts = grid.points()?;
    let mut rng = rng_for(seed, "cone-samples");
    for _ in 0..cfg.parse::<usize>("nonlinear_samples")? {
        match map.sample_nonlinear(&mut rng) {
            Some(p) => pts.push(project(&p)),
            None => break,
        }
    }
    let n: usize = cfg.parse("n")?;
    let rep = r.time("cones", || verify_partial_hyperbolicity_at(map.as_ref(), &uc, &sc, n, &pts, cfg.parse("directions")?, seed))?;
    let tol: f64 = cfg.parse("tol")?;
    let ok = rep.pass && rep.unstable.worst_margin > tol && rep.stable.worst_margin > tol;
    r.verdict(
        "7,8",
        "u-cone forward and s-cone backward",
        ok,
        format!(
            "u: margin {:.4} stretch {:.4}; s: margin {:.4} stretch {:.4}; {} points",
            rep.unstable.worst_margin, rep.unstable.expansion_lambda, rep.stable.worst_margin, rep.stable.expansion_lambda, pts.len()
        ),
    );
    r.estimate("cones", &rep);
    Ok(())
}

pub(super) fn thm_b(cfg: &ExperimentConfig, r: &mut ExperimentReport) -> Result<(), Error> {
    let seed = cfg.seed()?;
    let b = cfg.inline_matrix("b")?;
    let a = cfg.inline_matrix("a")?;
    let power: u32 = cfg.parse("power")?;
    let p = cfg.floats("p")?;
    if p.len() != 2 {
        return Err(Error::Input("p needs two coordinates".into()));
    }
    let delta = cfg.positive("delta")?;
    let params = SkewParams { b: b.clone(), power, fiber: IsotopyParams::new(a.clone(), cfg.positive("k")?), p: [p[0], p[1]], delta };
    let f = r.time("construct", || SkewProduct::new(params))?;
    r.exact("descriptor", f.descriptor());
    r.exact("linear_part", f.linear_part());
    let tol = cfg.positive("tol")?;

    let h = homological_entropy(f.linear_part())?;
    let (hb, ha) = (linear_entropy(&b)?, linear_entropy(&a)?);
    let expected = power as f64 * hb + ha;
    r.exact("homology", &h);
    r.exact("expected_hH", expected);
    r.verdict(
        "7",
        "exact hH(F) = N log λB + log λA with index 2",
        (h.h_h - expected).abs() <= tol && h.argmax_set == [2] && h.u0 == 2,
        format!("hH = {:.10}, N log λB + log λA = {expected:.10}, argmax {:?}", h.h_h, h.argmax_set),
    );

    let sm = f.family().summary()?;
    let log_n = (sm.branches as f64).ln();
    r.exact("fiber", &sm);
    r.verdict(
        "7",
        "fiber horseshoe certificate log n > h(A) + K",
        sm.certificate.full_shift && log_n > sm.required,
        format!("log {} = {log_n:.4} > {:.4}, full shift = {}", sm.branches, sm.required, sm.certificate.full_shift),
    );

    let partition = match cfg.path("partition_file") {
        Some(path) => MarkovPartition::from_path(&path)?,
        None => MarkovPartition::cat(),
    };
    if partition.matrix() != &b {
        return Err(Error::Input("the Markov partition is for a different base matrix".into()));
    }
    let depth: usize = cfg.parse("depth")?;
    let budget = cfg.positive("epsilon_budget")?;
    let mut t = Table::new(&["depth", "delta", "cells", "surviving", "entropy"]);
    let bounds = r.time("markov", || (0..=depth).map(|k| markov_pruned_entropy(&partition, [p[0], p[1]], delta, k)).collect::<Result<Vec<_>, _>>())?;
    for m in &bounds {
        t.push([m.depth.to_string(), m.delta.to_string(), m.cells.to_string(), m.surviving.to_string(), m.entropy.map_or("none".into(), |e| e.to_string())]);
    }
    r.tables.insert("markov".into(), t);
    let last = bounds.last().and_then(|m| m.entropy);
    let deficit = last.map(|e| power as f64 * (hb - e));
    r.estimate("markov", &bounds);
    r.verdict(
        "7",
        "pruned Markov bound for Bᴺ within the entropy budget",
        deficit.is_some_and(|x| x < budget),
        match last {
            Some(e) => format!("N·h(B|Λδ) ≥ {:.4}, N log λB = {:.4}, loss {:.4} < {budget}", power as f64 * e, power as f64 * hb, deficit.unwrap_or(0.0)),
            None => "pruned subshift is empty".into(),
        },
    );

    let y_bound = cfg.positive("y_bound")?;
    let norm_samples: usize = cfg.parse("norm_samples")?;
    let (yn, yi, xn) = r.time("block_norms", || f.block_norms(norm_samples, &mut rng_for(seed, "block-norms")));
    let gap = check_norm_gap(hb.exp(), power, y_bound, y_bound)?;
    r.estimate("block_norms", json!({ "y": yn, "y_inverse": yi, "x": xn }));
    r.estimate("norm_gap", &gap);
    r.verdict(
        "7",
        "norm gap (‖Y‖ + 1, ‖Y⁻¹‖ < λᴺ/100)",
        yn <= y_bound && yi <= y_bound && gap.pass,
        format!("max ‖Y‖ = {yn:.3}, max ‖Y⁻¹‖ = {yi:.3} ≤ {y_bound}; λᴺ = {:.1}, slacks {:.2}, {:.2}", gap.lambda_n, gap.slack_y, gap.slack_y_inv),
    );

    let (bf, _, _) = eigen_frame(&b)?;
    let mut frame = DMatrix::identity(4, 4);
    frame.view_mut((0, 0), (2, 2)).copy_from(&bf);
    let template = ConeSpec::new(4, &[0], &[1], 1.0, 1.0)?.with_frame(frame)?;
    let directions: usize = cfg.parse("directions")?;
    let mut rng = rng_for(seed, "tube-samples");
    let mut coarse = GridSpec::uniform(4, cfg.parse("aperture_grid")?).points()?;
    coarse.extend((0..500).filter_map(|_| f.sample_nonlinear(&mut rng)).map(|x| project(&x)));
    let choice = r.time("aperture_search", || search_apertures(&f, &template, 1, &coarse, directions, seed, &log_apertures(-6, 3)))?;
    match choice {
        None => r.verdict("7", "u-cone invariance", false, "no aperture pair passes on the search points".into()),
        Some(c) => {
            let cone = template.with_apertures(c.gamma1, c.gamma2)?;
            let mut pts = GridSpec::uniform(4, cfg.parse("grid")?).points()?;
            pts.extend((0..cfg.parse::<usize>("tube_samples")?).filter_map(|_| f.sample_nonlinear(&mut rng)).map(|x| project(&x)));
            let rep = r.time("cones", || verify_cone_field_at(&f, &cone, 1, &pts, directions, seed))?;
            r.verdict(
                "7",
                "u-cone invariance",
                rep.invariant && rep.expanding,
                format!(
                    "γ1 = {:.4}, γ2 = {:.4}: margin {:.4}, expansion {:.1} over {} points",
                    c.gamma1, c.gamma2, rep.worst_margin, rep.expansion_lambda, rep.points_tested
                ),
            );
            r.estimate("apertures", json!({ "gamma1": c.gamma1, "gamma2": c.gamma2, "search_points": coarse.len() }));
            r.estimate("cones", &rep);
        }
    }

    let lin = LinearMap::new(f.linear_part().clone())?;
    let mut rng = rng_for(seed, "outside-tube");
    let mut worst = 0.0_f64;
    let checks: usize = cfg.parse("spot_checks")?;
    let mut done = 0;
    while done < checks {
        let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let dx = x[0] - p[0] - (x[0] - p[0]).round();
        let dy = x[1] - p[1] - (x[1] - p[1]).round();
        if dx.hypot(dy) < delta {
            continue;
        }
        let (u, v) = (f.lift(&x), lin.lift(&x));
        let scale = v.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
        worst = worst.max(u.iter().zip(&v).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max) / scale);
        done += 1;
    }
    r.verdict("7", "linear outside the tube", worst <= 1e-12, format!("{checks} points, worst relative difference {worst:.2e}"));

    let ltol = cfg.positive("lyapunov.tol")?;
    let pts = random_points(&mut rng_for(seed, "lyapunov-points"), 4, cfg.parse("lyapunov.points")?);
    let ln: usize = cfg.parse("lyapunov.n")?;
    let mut ests = Vec::new();
    r.time("lyapunov", || -> Result<(), Error> {
        for (i, x) in pts.iter().enumerate() {
            ests.push(lyapunov_qr(&f, &TorusPoint(x.clone()), ln, 100, seed.wrapping_add(i as u64))?);
        }
        Ok(())
    })?;
    let idx: Vec<_> = ests.iter().map(|e| measure_index(e, ltol)).collect();
    r.verdict(
        "7",
        "Lyapunov index 2 where defined",
        idx.iter().all(|m| m.undecided || m.u == 2),
        format!("indices {:?}", idx.iter().map(|m| if m.undecided { "undecided".to_string() } else { m.u.to_string() }).collect::<Vec<_>>()),
    );
    r.estimate("lyapunov", &ests);
    r.estimate("not_certified", "h_top(F) > hH(F) is argued from the component checks, not estimated");
    Ok(())
}

/// Whether n exceeds every real root of `a`'s characteristic polynomial, decided in exact
/// rational arithmetic.
fn exceeds_spectrum(a: &IntMatrix, n: usize) -> bool {
    let p = QPoly::from_descending_int(&char_poly(a));
    let x = BigRational::from_integer(BigInt::from(n));
    let cauchy = p.0.iter().map(|c| c.abs()).fold(BigRational::zero(), |m, c| if c > m { c } else { m });
    let hi = BigRational::from_integer(BigInt::from(1)) + cauchy / p.lead().abs();
    !p.eval(&x).is_zero() && sturm_count(&p, &x, &hi) == 0
}

pub(super) fn thm_c(cfg: &ExperimentConfig, r: &mut ExperimentReport) -> Result<(), Error> {
    let seed = cfg.seed()?;
    let a4 = cfg.inline_matrix("a4")?;
    let params = DerivedParams {
        a4: a4.clone(),
        branches: cfg.parse("branches")?,
        lap_width: cfg.positive("lap_width")?,
        chi_inner: cfg.positive("chi_inner")?,
        chi_outer: cfg.positive("chi_outer")?,
        kappa: cfg.positive("kappa")?,
        gamma: cfg.positive("gamma")?,
        m4: cfg.positive("m4")?,
        m1: cfg.positive("m1")?,
        rate_margin: cfg.positive("rate_margin")?,
        strong_rates: None,
    };
    let f = r.time("construct", || DerivedMap::new(params))?;
    let k = f.constants();
    let lam4 = k.eigenvalues[3];
    r.exact("descriptor", f.descriptor());
    r.exact("linear_part", f.linear_part());
    r.exact("eigenvalues", k.eigenvalues);

    let h = homological_entropy(&a4)?;
    r.exact("homology", &h);
    r.verdict(
        "8",
        "exact hH = log λ4 with u0 = 1",
        (h.h_h - lam4.ln()).abs() <= 1e-9 && h.u0 == 1 && h.argmax_set == [1],
        format!("hH = {:.10}, log λ4 = {:.10}, argmax {:?}", h.h_h, lam4.ln(), h.argmax_set),
    );

    let cert = f.certificate();
    let n = f.params().branches;
    let exact_gap = exceeds_spectrum(&a4, n);
    r.exact("certificate", cert);
    r.exact("n_exceeds_spectrum", exact_gap);
    r.verdict(
        "8",
        "h_top(f|Wc) ≥ log n > hH",
        cert.full_shift && exact_gap,
        format!("full {n}-shift = {}, n > λ4 = {lam4:.6} decided exactly = {exact_gap}; log n = {:.4}", cert.full_shift, (n as f64).ln()),
    );

    let gamma = f.params().gamma;
    let basis = f.basis();
    let uc = ConeSpec::new(4, &[3], &[], gamma, gamma)?.with_frame(basis.clone())?;
    let sc = ConeSpec::new(4, &[0], &[], gamma, gamma)?.with_frame(basis)?;
    let mut pts = GridSpec::uniform(4, cfg.parse("grid")?).points()?;
    let mut rng = rng_for(seed, "chart-samples");
    for i in 0..cfg.parse::<usize>("chart_samples")? {
        let c = f.sample_chart(&mut rng, i);
        pts.push(project(&f.embed(&c)));
    }
    let n_cone: usize = cfg.parse("cone_n")?;
    let rep = r.time("cones", || verify_partial_hyperbolicity_at(&f, &uc, &sc, n_cone, &pts, cfg.parse("directions")?, seed))?;
    r.verdict(
        "8",
        "E4 cone forward and E1 cone backward",
        rep.pass,
        format!(
            "u: margin {:.4} stretch {:.3}; s: margin {:.4} stretch {:.3}; {} points",
            rep.unstable.worst_margin, rep.unstable.expansion_lambda, rep.stable.worst_margin, rep.stable.expansion_lambda, pts.len()
        ),
    );
    r.estimate("cones", &rep);

    let tol = cfg.positive("tol")?;
    let mut rng = rng_for(seed, "horseshoe-words");
    let (words, len, repeats) = (cfg.parse::<usize>("words")?, cfg.parse::<usize>("word_length")?, cfg.parse::<usize>("repeats")?);
    let mut t = Table::new(&["word", "exponents", "positive"]);
    let mut positive = Vec::new();
    r.time("lyapunov", || -> Result<(), Error> {
        for w in 0..words {
            let word: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
            let orbit = f.horseshoe_orbit(&word)?;
            let jacs: Vec<DMatrix<f64>> = orbit.iter().map(|c| f.jacobian(&f.embed(c))).collect();
            let e = lyapunov_periodic(&jacs, repeats, seed.wrapping_add(w as u64))?;
            let pos = e.exponents.iter().filter(|&&x| x > tol).count();
            let text: Vec<String> = e.exponents.iter().map(|x| format!("{x:.6}")).collect();
            t.push([format!("{word:?}"), text.join(" "), pos.to_string()]);
            positive.push(pos);
        }
        Ok(())
    })?;
    r.tables.insert("horseshoe_lyapunov".into(), t);
    r.estimate("horseshoe_positive_exponents", &positive);
    r.verdict(
        "8",
        "two positive exponents on horseshoe orbits",
        !positive.is_empty() && positive.iter().all(|&p| p >= 2),
        format!("positive exponent counts {positive:?}"),
    );

    let lin = LinearMap::new(a4)?;
    let mut rng = rng_for(seed, "outside-orbits");
    let steps: usize = cfg.parse("outside_steps")?;
    let (mut worst, mut compared, mut stayed) = (0.0_f64, 0usize, 0usize);
    for _ in 0..cfg.parse::<usize>("outside_points")? {
        let mut x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let mut outside = true;
        for _ in 0..steps {
            let fx = f.lift(&x);
            if f.chart(&x).norm() >= k.support_radius {
                let lx = lin.lift(&x);
                let scale = lx.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
                worst = worst.max(fx.iter().zip(&lx).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max) / scale);
                compared += 1;
            } else {
                outside = false;
            }
            x = project(&fx);
        }
        stayed += outside as usize;
    }
    r.estimate("outside", json!({ "steps_compared": compared, "orbits_never_inside": stayed }));
    r.verdict("8", "linear away from the modified ball", worst <= 1e-12, format!("{compared} steps, worst relative difference {worst:.2e}"));
    Ok(())
}
