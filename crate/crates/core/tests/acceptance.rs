//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion that ran fails.
//!
//! `cargo test --release --test acceptance -- 3 7` runs a subset. Criterion 8
//! first projects its runtime from timed decodes; when the projection exceeds
//! its budget it reports FAIL without sweeping (and without failing the
//! process), unless `COMPASS_ACCEPTANCE_FULL=1` forces the full sweep.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{all_pairs, brute_force, grid, point, random_defects, random_graph, Truth};
use compass_core::circuit::Basis;
use compass_core::code::{build_code, code_distance_check, Deformation, StabilizerCode};
use compass_core::correlated::ConditionalTable;
use compass_core::decoder::{Cell, CellSpec, DecoderKind, NoiseModel};
use compass_core::dem::sample_dem;
use compass_core::experiment::gap_records;
use compass_core::matching::mwpm_decode;
use compass_core::noise::{code_capacity_channel, format_eta, hbd_channels, NoiseParams};
use compass_core::pauli::PauliString;
use compass_core::sim::{simulate, ShotBatch};
use compass_core::stats::{decoder_gain, estimate_rate, fit_threshold, FitOptions, PointLabel, RatePoint, ThresholdFit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

/// Number, time budget in seconds, and the check itself.
type Criterion = (u32, f64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(model: NoiseModel, d: usize, ell: usize, deformation: Deformation, p: f64, eta: f64) -> CellSpec {
    CellSpec { d, ell, deformation, model, params: NoiseParams::new(p, eta).unwrap(), basis: Basis::Z, rounds: d }
}

/// Logical error rates of several decoders on one shared batch.
fn paired_rates(cell: &Cell, kinds: &[DecoderKind], shots: usize, seed: u64) -> Result<Vec<RatePoint>, String> {
    let batch = cell.sample(shots, seed);
    let truth: Vec<u64> = (0..shots).map(|s| batch.observable_mask(s)).collect();
    kinds
        .iter()
        .map(|&k| {
            let predicted = cell.predict_batch(k, &batch).map_err(|e| e.to_string())?;
            let s = cell.spec;
            let label = PointLabel { d: s.d, ell: s.ell, deformation: s.deformation, eta: s.params.eta, p: s.params.p, decoder: k.name().into() };
            estimate_rate(label, &predicted, &truth).map_err(|e| e.to_string())
        })
        .collect()
}

/// Bisects on the sign of `L(d_big) - L(d_small)` for one decoder.
fn locate_crossing(
    make: &dyn Fn(usize, f64) -> CellSpec,
    kind: DecoderKind,
    (d_small, d_big): (usize, usize),
    (mut lo, mut hi): (f64, f64),
    shots: usize,
    steps: usize,
    seed: u64,
) -> Result<f64, String> {
    for step in 0..steps {
        let mid = 0.5 * (lo + hi);
        let rate = |d: usize| -> Result<f64, String> {
            let cell = Cell::new(make(d, mid)).map_err(|e| e.to_string())?;
            Ok(paired_rates(&cell, &[kind], shots, seed + 1000 * step as u64 + d as u64)?[0].rate)
        };
        if rate(d_big)? > rate(d_small)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Nine points spaced 4% apart around a crossing estimate.
fn zoom_grid(p_c: f64) -> Vec<f64> {
    (-4..=4).map(|k| p_c * (1.0 + 0.04 * k as f64)).collect()
}

/// Samples `ds` over a grid around `p_c` and fits. When the two largest
/// distances do not cross inside the grid, the next grid continues on the
/// side where the crossing must lie, up to two extensions.
fn sweep_and_fit(
    make: &dyn Fn(usize, f64) -> CellSpec,
    kinds: &[DecoderKind],
    ds: &[usize],
    p_c: f64,
    shots: usize,
    seed: u64,
) -> Result<Vec<ThresholdFit>, String> {
    let mut points: Vec<RatePoint> = Vec::new();
    let mut center = p_c;
    for round in 0..3u64 {
        for &d in ds {
            for (i, p) in zoom_grid(center).into_iter().enumerate() {
                let cell = Cell::new(make(d, p)).map_err(|e| e.to_string())?;
                points.extend(paired_rates(&cell, kinds, shots, seed + 10_000 * round + 100 * d as u64 + i as u64)?);
            }
        }
        let mut fits = Vec::new();
        let mut shift = 0.0;
        for &kind in kinds {
            let pts: Vec<RatePoint> = points.iter().filter(|r| r.decoder == kind.name()).cloned().collect();
            match fit_threshold(&pts, FitOptions { seed, ..Default::default() }) {
                Ok(f) => fits.push(f),
                Err(compass_core::Error::NoCrossing) => {
                    // Above threshold the larger distance fails more often.
                    let (small, big) = (ds[ds.len() - 2], ds[ds.len() - 1]);
                    let lowest = pts.iter().map(|r| r.p).fold(f64::INFINITY, f64::min);
                    let at = |d: usize| pts.iter().find(|r| r.d == d && r.p == lowest).map_or(0.0, |r| r.rate);
                    shift = if at(big) > at(small) { -1.0 } else { 1.0 };
                    break;
                }
                Err(e) => return Err(format!("{kind}: {e}")),
            }
        }
        if fits.len() == kinds.len() {
            return Ok(fits);
        }
        center *= 1.0 + shift * 0.36;
    }
    Err(format!("no crossing within three grids around p={p_c:.4}"))
}

fn fmt_fit(f: &ThresholdFit) -> String {
    format!("p_th={:.5} [{:.5},{:.5}] nu={:.2}", f.p_th, f.p_th_ci.0, f.p_th_ci.1, f.nu)
}

// 1. Channel arithmetic.
fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = 1e-12;
    for _ in 0..50 {
        let p: f64 = rng.random_range(1e-4..0.5);
        let eta = if rng.random::<f64>() < 0.1 { f64::INFINITY } else { 10f64.powf(rng.random_range(-2.0..3.0)) };
        let params = NoiseParams::new(p, eta).map_err(|e| e.to_string())?;
        let frac_z = if eta.is_infinite() { 1.0 } else { eta / (1.0 + eta) };
        let t = hbd_channels(params);
        let cc = code_capacity_channel(params);
        for (name, dist) in [("cz", &t.cz), ("cnot", &t.cnot), ("h", &t.h), ("idle", &t.idle), ("code capacity", &cc)] {
            let mass: f64 = dist.outcomes().iter().map(|o| o.1).sum();
            ensure((mass - p).abs() <= tol && (dist.error_probability() - p).abs() <= tol, || {
                format!("{name} mass {mass} != p {p} (eta {eta})")
            })?;
            ensure(dist.outcomes().iter().all(|o| o.1 >= 0.0), || format!("{name} has a negative entry"))?;
        }
        for label in ["IZ", "ZI", "ZZ"] {
            let want = frac_z * p / 3.0;
            let got = t.cz.probability_of(label);
            ensure((got - want).abs() <= tol, || format!("cz {label}: {got} vs {want} (p {p}, eta {eta})"))?;
        }
        let want_z = frac_z * p;
        for (name, dist) in [("idle", &t.idle), ("code capacity", &cc)] {
            let got = dist.probability_of("Z");
            ensure((got - want_z).abs() <= tol, || format!("{name} p_z {got} vs {want_z}"))?;
            let want_xy = (1.0 - frac_z) * p / 2.0;
            ensure((dist.probability_of("X") - want_xy).abs() <= tol && (dist.probability_of("Y") - want_xy).abs() <= tol, || {
                format!("{name} p_x/p_y off for eta {eta}")
            })?;
        }
        ensure(t.meas_flip == p, || format!("measurement flip {} vs {p}", t.meas_flip))?;
    }
    Ok("50 random (p, eta): masses, CZ dephasing and idle p_z within 1e-12".into())
}

// 2. Conditional probability oracle.
fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let eta = 10f64.powf(rng.random_range(-2.0..3.0));
        let p: f64 = rng.random_range(1e-3..0.5);
        let p_xy = p / (2.0 * (1.0 + eta));
        let p_z = eta * p / (1.0 + eta);
        let want_x_given_z = p_xy / (p_xy + p_z);
        let want_z_given_x = p_xy / (p_xy + p_xy);
        let table = ConditionalTable::new(eta);
        for (got, want) in [(table.p_x_given_z, want_x_given_z), (table.p_z_given_x, want_z_given_x)] {
            let err = (got - want).abs() / want;
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("eta {eta}: {got} vs {want}"))?;
        }
    }
    Ok(format!("20 random eta, worst relative error {worst:.1e}"))
}

// 3. Matcher optimality against exhaustive pairing.
fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_defects = 0;
    for trial in 0..1000 {
        let nodes = rng.random_range(14..22);
        let g = random_graph(&mut rng, nodes, 0.25);
        let defects = random_defects(&mut rng, nodes, 14);
        max_defects = max_defects.max(defects.len());
        let got = mwpm_decode(&g, &defects).map_err(|e| e.to_string())?.weight;
        let want = brute_force(&all_pairs(&g, &g.weights()), &defects, g.boundary());
        ensure((got - want).abs() <= 1e-9, || format!("trial {trial}: blossom {got} vs enumeration {want}"))?;
    }
    Ok(format!("1000 graphs, up to {max_defects} defects, all optimal"))
}

fn symplectic(s: &PauliString) -> (u64, u64) {
    let (mut x, mut z) = (0u64, 0u64);
    for &(q, p) in s.support() {
        if p.has_x() {
            x |= 1 << q;
        }
        if p.has_z() {
            z |= 1 << q;
        }
    }
    (x, z)
}

fn anticommute(a: (u64, u64), b: (u64, u64)) -> bool {
    ((a.0 & b.1).count_ones() + (a.1 & b.0).count_ones()) % 2 == 1
}

fn rank(rows: &[(u64, u64)]) -> usize {
    let mut rows: Vec<u128> = rows.iter().map(|&(x, z)| x as u128 | (z as u128) << 64).collect();
    let mut r = 0;
    for bit in 0..128 {
        let Some(i) = (r..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) else { continue };
        rows.swap(r, i);
        for j in 0..rows.len() {
            if j != r && rows[j] >> bit & 1 == 1 {
                rows[j] ^= rows[r];
            }
        }
        r += 1;
    }
    r
}

/// Smallest weight of an operator that commutes with every stabilizer and
/// anticommutes with a logical, searching weights below `limit`.
fn low_weight_logical(code: &StabilizerCode, limit: usize) -> Option<usize> {
    let n = code.distance * code.distance;
    let mut checks: Vec<(u64, u64)> = code.x_stabilizers.iter().chain(&code.z_stabilizers).map(symplectic).collect();
    let m = checks.len();
    checks.push(symplectic(&code.logical_x));
    checks.push(symplectic(&code.logical_z));
    // Syndrome bits of X, Y, Z on each qubit.
    let sig: Vec<[u64; 3]> = (0..n)
        .map(|q| {
            let ops = [(1u64 << q, 0), (1u64 << q, 1u64 << q), (0, 1u64 << q)];
            ops.map(|op| checks.iter().enumerate().fold(0u64, |acc, (i, &c)| acc | (anticommute(op, c) as u64) << i))
        })
        .collect();
    let stab = (1u64 << m) - 1;
    fn go(sig: &[[u64; 3]], from: usize, left: usize, acc: u64, stab: u64) -> bool {
        if left == 0 {
            return acc & stab == 0 && acc != 0;
        }
        (from..=sig.len() - left).any(|q| sig[q].iter().any(|&s| go(sig, q + 1, left - 1, acc ^ s, stab)))
    }
    (1..limit).find(|&w| go(&sig, 0, w, 0, stab))
}

// 4. Code validity.
fn criterion_4() -> Check {
    let mut bulk_checked = 0;
    for d in [3, 5, 7] {
        for ell in [2, 3, 4] {
            for deformation in [Deformation::Css, Deformation::ZxxzSquare] {
                let tag = format!("d={d} ell={ell} {deformation:?}");
                let code = build_code(d, ell, deformation).map_err(|e| format!("{tag}: {e}"))?;
                let gens: Vec<(u64, u64)> = code.x_stabilizers.iter().chain(&code.z_stabilizers).map(symplectic).collect();
                for (i, a) in gens.iter().enumerate() {
                    for b in &gens[i + 1..] {
                        ensure(!anticommute(*a, *b), || format!("{tag}: stabilizers anticommute"))?;
                    }
                }
                let r = rank(&gens);
                ensure(r == d * d - 1, || format!("{tag}: {r} independent generators, want {}", d * d - 1))?;
                for z in &code.z_stabilizers {
                    let cols: Vec<usize> = z.qubits().map(|q| q % d).collect();
                    let bulk = !cols.contains(&0) && !cols.contains(&(d - 1));
                    ensure(z.weight() <= 2 * ell, || format!("{tag}: Z stabilizer of weight {}", z.weight()))?;
                    if bulk {
                        bulk_checked += 1;
                        ensure(z.weight() == 2 * ell, || format!("{tag}: bulk Z stabilizer of weight {}", z.weight()))?;
                    }
                }
                let (lx, lz) = (symplectic(&code.logical_x), symplectic(&code.logical_z));
                ensure(anticommute(lx, lz) && gens.iter().all(|&g| !anticommute(g, lx) && !anticommute(g, lz)), || {
                    format!("{tag}: logical operators are not a valid pair")
                })?;
                if d <= 5 {
                    ensure(low_weight_logical(&code, d).is_none(), || format!("{tag}: logical below weight {d}"))?;
                    ensure(code.logical_x.weight() == d && code.logical_z.weight() == d, || format!("{tag}: logical weight != d"))?;
                    let lib = code_distance_check(&code).map_err(|e| e.to_string())?;
                    ensure(lib == d, || format!("{tag}: library distance {lib}"))?;
                }
            }
        }
    }
    Ok(format!("18 codes valid; {bulk_checked} bulk Z stabilizers of weight 2 ell; d=3,5 distances exact"))
}

fn column_rates(batch: &ShotBatch) -> Vec<f64> {
    let n = batch.shots() as f64;
    let m = &batch.detection_events;
    (0..m.cols()).map(|c| (0..m.rows()).filter(|&r| m.get(r, c)).count() as f64 / n).collect()
}

// 5. Simulator against independent-mechanism DEM sampling.
fn criterion_5() -> Check {
    let shots = 100_000;
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for deformation in [Deformation::Css, Deformation::ZxxzSquare] {
        let cell = Cell::new(spec(NoiseModel::Hbd, 3, 2, deformation, 0.01, 10.0)).map_err(|e| e.to_string())?;
        let circuit = cell.circuit.as_ref().ok_or("missing circuit")?;
        let sim = simulate(circuit, shots, 51);
        let dem = sample_dem(&cell.dem, shots, 52);
        let mut a = column_rates(&sim);
        let mut b = column_rates(&dem);
        let obs = |s: &ShotBatch| (0..shots).filter(|&i| s.observable_mask(i) & 1 == 1).count() as f64 / shots as f64;
        a.push(obs(&sim));
        b.push(obs(&dem));
        for (i, (&x, &y)) in a.iter().zip(&b).enumerate() {
            let sigma = ((x * (1.0 - x) + y * (1.0 - y)) / shots as f64).sqrt();
            let z = if sigma > 0.0 { (x - y).abs() / sigma } else if x == y { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            compared += 1;
            ensure(z <= 3.0, || format!("{deformation:?} column {i}: simulated {x} vs DEM {y} ({z:.2} sigma)"))?;
        }
    }
    Ok(format!("{compared} marginals (detectors and observable, both deformations), worst {worst:.2} sigma"))
}

// 6. Decoding Z errors first beats the opposite order.
fn criterion_6() -> Check {
    let (ell, eta) = (4, 0.5);
    let make = |d: usize, p: f64| spec(NoiseModel::CodeCapacity, d, ell, Deformation::Css, p, eta);
    let p_c = locate_crossing(&make, DecoderKind::Mwpm, (5, 9), (0.03, 0.2), 20_000, 8, 600)?;
    let cell = Cell::new(make(5, p_c)).map_err(|e| e.to_string())?;
    let shots = 100_000;
    let batch = cell.sample(shots, 601);
    let fail = |k: DecoderKind| -> Result<Vec<bool>, String> {
        let pred = cell.predict_batch(k, &batch).map_err(|e| e.to_string())?;
        Ok(pred.iter().enumerate().map(|(s, &m)| m != batch.observable_mask(s)).collect())
    };
    let (zx, xz) = (fail(DecoderKind::CssZx)?, fail(DecoderKind::CssXz)?);
    let n = shots as f64;
    let diffs: Vec<f64> = zx.iter().zip(&xz).map(|(&a, &b)| a as u8 as f64 - b as u8 as f64).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma = (var / n).sqrt();
    let r_zx = zx.iter().filter(|&&f| f).count() as f64 / n;
    let r_xz = xz.iter().filter(|&&f| f).count() as f64 / n;
    let detail = format!("p={p_c:.4}: ZX {r_zx:.5} vs XZ {r_xz:.5}, paired difference {:.1} sigma", mean / sigma.max(f64::MIN_POSITIVE));
    ensure(mean <= 2.0 * sigma, || detail.clone())?;
    Ok(detail)
}

// 7. CSS correlated thresholds converge to MWPM at larger bias.
fn criterion_7() -> Check {
    let ds = [5, 7, 9];
    let mut gaps = BTreeMap::new();
    let mut lines = Vec::new();
    for (k, eta) in [0.5, 10.0].into_iter().enumerate() {
        let make = move |d: usize, p: f64| spec(NoiseModel::CodeCapacity, d, 3, Deformation::Css, p, eta);
        let mut fits = Vec::new();
        for (j, kind) in [DecoderKind::Mwpm, DecoderKind::CssZx].into_iter().enumerate() {
            let seed = 7000 + 100_000 * k as u64 + 10_000 * j as u64;
            let p_c = locate_crossing(&make, kind, (5, 9), (0.03, 0.2), 20_000, 8, seed)?;
            let fit = sweep_and_fit(&make, &[kind], &ds, p_c, 100_000, seed + 1)?.remove(0);
            lines.push(format!("eta={eta} {kind}: {}", fmt_fit(&fit)));
            fits.push(fit);
        }
        gaps.insert(k, ((fits[1].p_th - fits[0].p_th).abs(), fits));
    }
    let (low, high) = (gaps[&0].0, gaps[&1].0);
    let detail = format!("|dp_th| eta=0.5: {low:.5}, eta=10: {high:.5}; {}", lines.join("; "));
    ensure(high < low, || detail.clone())?;
    Ok(detail)
}

// 8. Circuit-level correlated thresholds are no worse than MWPM.
const C8_ELLS: [usize; 2] = [2, 3];
const C8_DEFORMATIONS: [Deformation; 2] = [Deformation::Css, Deformation::ZxxzSquare];
const C8_ETAS: [f64; 3] = [0.5, 10.0, 100.0];
const C8_DS: [usize; 3] = [5, 7, 9];
const C8_SHOTS: usize = 100_000;
const C8_BUDGET_S: f64 = 8.0 * 3600.0;
const C8_NOT_RUN: &str = "not run";

/// Seconds for the full sweep, from timed paired decodes near threshold.
fn criterion_8_projection() -> Result<f64, String> {
    let probe = 200;
    let mut per_point = 0.0;
    for d in C8_DS {
        let cell = Cell::new(spec(NoiseModel::Hbd, d, 2, Deformation::Css, 0.012, 10.0)).map_err(|e| e.to_string())?;
        let t = Instant::now();
        paired_rates(&cell, &[DecoderKind::Mwpm, DecoderKind::Corr], probe, 8)?;
        per_point += t.elapsed().as_secs_f64() / probe as f64 * C8_SHOTS as f64;
    }
    let cells = (C8_ELLS.len() * C8_DEFORMATIONS.len() * C8_ETAS.len()) as f64;
    Ok(per_point * cells * zoom_grid(1.0).len() as f64)
}

fn criterion_8() -> Check {
    let projected = criterion_8_projection()?;
    let forced = std::env::var("COMPASS_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    if projected > C8_BUDGET_S && !forced {
        return Err(format!(
            "{C8_NOT_RUN}: projected {:.1} h exceeds the {:.0} h budget on {} core(s) (COMPASS_ACCEPTANCE_FULL=1 forces it)",
            projected / 3600.0,
            C8_BUDGET_S / 3600.0,
            std::thread::available_parallelism().map_or(1, |n| n.get())
        ));
    }
    let mut table: BTreeMap<(usize, String), Vec<String>> = BTreeMap::new();
    let mut rel: BTreeMap<(usize, String), Vec<String>> = BTreeMap::new();
    let mut failures = Vec::new();
    for ell in C8_ELLS {
        for deformation in C8_DEFORMATIONS {
            for eta in C8_ETAS {
                let make = move |d: usize, p: f64| spec(NoiseModel::Hbd, d, ell, deformation, p, eta);
                let seed = 80_000 + 1000 * ell as u64 + 100 * deformation as u64 + eta as u64;
                let p_c = locate_crossing(&make, DecoderKind::Mwpm, (5, 9), (0.002, 0.03), 5_000, 6, seed)?;
                let fits = sweep_and_fit(&make, &[DecoderKind::Mwpm, DecoderKind::Corr], &C8_DS, p_c, C8_SHOTS, seed)
                    .map_err(|e| format!("ell={ell} {deformation:?} eta={eta}: {e}"))?;
                let (mwpm, corr) = (&fits[0], &fits[1]);
                let g = decoder_gain(corr, mwpm);
                let key = (ell, format!("{deformation:?}"));
                table.entry(key.clone()).or_default().push(format!("{:+.5} +- {:.5}", g.delta, g.delta_uncertainty));
                rel.entry(key).or_default().push(g.relative_gain.map_or("n/a".into(), |r| format!("{:+.1}%", 100.0 * r)));
                if g.delta < -g.delta_uncertainty {
                    failures.push(format!("ell={ell} {deformation:?} eta={eta}: {:+.5} +- {:.5}", g.delta, g.delta_uncertainty));
                }
            }
        }
    }
    let header = C8_ETAS.iter().map(|&e| format!("eta={}", format_eta(e))).collect::<Vec<_>>().join(" | ");
    println!("  delta_corr        | {header}");
    for ((ell, def), row) in &table {
        println!("  ell={ell} {def:<10} | {}", row.join(" | "));
    }
    println!("  relative gain     | {header}");
    for ((ell, def), row) in &rel {
        println!("  ell={ell} {def:<10} | {}", row.join(" | "));
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok("correlated threshold >= MWPM within combined CI in all 12 cells".into())
}

// 9. Gap bookkeeping, dB scale and the bias trend.
fn criterion_9() -> Check {
    let shots = 20_000;
    let mut notes = Vec::new();
    for deformation in [Deformation::Css, Deformation::ZxxzSquare] {
        let mut means = BTreeMap::new();
        for (k, eta) in [0.5, 500.0].into_iter().enumerate() {
            let cell = Cell::new(spec(NoiseModel::Hbd, 5, 2, deformation, 0.005, eta)).map_err(|e| e.to_string())?;
            let gg = cell.gap_graph().map_err(|e| e.to_string())?;
            let reference = &gg.graph().edges()[0];
            // One dB in weight units, evaluated on a reference edge.
            let unit = -(reference.probability / (1.0 - reference.probability)).ln() * 10.0 / reference.weight;
            for (j, kind) in [DecoderKind::Mwpm, DecoderKind::Corr].into_iter().enumerate() {
                let (records, failures) = gap_records(&cell, kind, shots, 900 + k as u64).map_err(|e| e.to_string())?;
                let negative = records.iter().filter(|r| r.signed_gap < 0.0).count();
                ensure(negative == failures, || format!("{deformation:?} eta={eta} {kind}: {negative} negative gaps vs {failures} failures"))?;
                for r in &records {
                    let want = r.signed_gap / unit;
                    ensure((r.gap_db - want).abs() <= 1e-12 * want.abs().max(1.0), || format!("gap_db {} vs {want}", r.gap_db))?;
                }
                let n = records.len() as f64;
                let mean = records.iter().map(|r| r.signed_gap).sum::<f64>() / n;
                let var = records.iter().map(|r| (r.signed_gap - mean).powi(2)).sum::<f64>() / (n - 1.0);
                means.insert((j, k), (mean, (var / n).sqrt()));
            }
        }
        for (j, kind) in ["mwpm", "corr"].into_iter().enumerate() {
            let ((m0, s0), (m1, s1)) = (means[&(j, 0)], means[&(j, 1)]);
            let z = (m1 - m0) / (s0 * s0 + s1 * s1).sqrt();
            ensure(z > 2.0, || format!("{deformation:?} {kind}: mean gap {m0:.3} -> {m1:.3} ({z:.1} sigma)"))?;
            notes.push(format!("{deformation:?} {kind} {m0:.2}->{m1:.2}"));
        }
    }
    Ok(format!("negative gaps == failures, dB within 1e-12; mean signed gap eta 0.5->500: {}", notes.join(", ")))
}

// 10. Threshold-fit recovery on synthetic ansatz data.
fn criterion_10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let noise = Normal::new(0.0, 1e-3).unwrap();
    let shots = 1_000_000u64;
    let (mut worst_p, mut worst_nu): (f64, f64) = (0.0, 0.0);
    for trial in 0..20 {
        let t = Truth::random(&mut rng);
        let mut pts = Vec::new();
        for d in [5, 7, 9, 11] {
            for p in grid(&t) {
                let rate = (t.rate(d, p) + noise.sample(&mut rng)).clamp(1e-6, 0.49);
                pts.push(point(d, p, shots, (rate * shots as f64).round() as u64));
            }
        }
        let fit = fit_threshold(&pts, FitOptions { bootstrap: 20, ..Default::default() }).map_err(|e| format!("trial {trial}: {e}"))?;
        worst_p = worst_p.max((fit.p_th - t.p_th).abs());
        worst_nu = worst_nu.max((fit.nu - t.nu).abs());
        ensure((fit.p_th - t.p_th).abs() < 0.002 && (fit.nu - t.nu).abs() < 0.15, || {
            format!("trial {trial}: p_th {} vs {}, nu {} vs {}", fit.p_th, t.p_th, fit.nu, t.nu)
        })?;
    }
    Ok(format!("20 ground truths, worst |dp_th| {worst_p:.1e}, worst |dnu| {worst_nu:.3}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, 1.0, criterion_1),
        (2, 1.0, criterion_2),
        (3, 60.0, criterion_3),
        (4, 300.0, criterion_4),
        (5, 300.0, criterion_5),
        (6, 600.0, criterion_6),
        (7, 7200.0, criterion_7),
        (8, C8_BUDGET_S, criterion_8),
        (9, 1800.0, criterion_9),
        (10, 120.0, criterion_10),
    ];
    // Ignore libtest-style flags that cargo forwards.
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, budget, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let result = match result {
            Ok(detail) if secs > budget => Err(format!("{detail}; took {secs:.1} s, budget {budget:.0} s")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {n:>2}: PASS ({secs:.1} s) {detail}"),
            Err(why) => {
                println!("criterion {n:>2}: FAIL ({secs:.1} s) {why}");
                // A sweep that cannot fit its time budget on this machine is
                // reported but does not abort the suite.
                if !(n == 8 && why.starts_with(C8_NOT_RUN)) {
                    failed.push(n);
                }
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
