//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

// `!(r <= tol)` is deliberate: a NaN residual must fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;
use std::time::Instant;

use dilatox::axioms::{linearity_residual, sphere_witness, LimitCheck};
use dilatox::driver::{emit, run, Format, Payload, Report, RunConfig, Task};
use dilatox::menelaos::{euclidean_center_closed_form, paper_iteration, IterationOptions};
use dilatox::models::SphereModel;
use dilatox::sampling::Sampler;
use dilatox::semigroup::{
    normalize_word, random_word, verify_normal_form, CanonicalElement, DilatationMap, Word,
};
use dilatox::{coord_residual, make_dilatation_structure, ModelDescriptor, Point, Scalar};

const SEED: u64 = 20_240_601;

fn group_models() -> Vec<ModelDescriptor> {
    let mut out = Vec::new();
    for dim in 1..=3 {
        for p in ["1", "2", "inf"] {
            out.push(ModelDescriptor::parse_flag(&format!("euclidean:dim={dim},p={p}")).unwrap());
        }
    }
    out.push(ModelDescriptor::Heisenberg {});
    out.push(ModelDescriptor::parse_flag("step2:dim1=3,dim2=2,bracket_seed=7").unwrap());
    out
}

fn label(desc: &ModelDescriptor) -> String {
    make_dilatation_structure(desc).unwrap().structure().label()
}

type Outcome = Result<String, String>;

fn axiom_report(desc: &ModelDescriptor) -> Result<Report, String> {
    let mut config = RunConfig::new(desc.clone(), Task::CheckAxioms);
    config.seed = SEED;
    config.samples = 10_000;
    config.tol = 1e-10;
    config.grid = 5;
    run(&config).map_err(|e| format!("{}: {e}", label(desc)))
}

fn axioms_payload(r: &Report) -> &dilatox::driver::AxiomsPayload {
    match &r.payload {
        Payload::CheckAxioms(p) => p,
        _ => unreachable!("check-axioms report"),
    }
}

/// Pointwise axiom suite on every group model.
fn criterion_1(reports: &[Report], elapsed: f64) -> Outcome {
    let mut worst = 0.0_f64;
    for r in reports {
        let p = axioms_payload(r);
        let ids: Vec<&str> = p.checks.iter().map(|c| c.axiom.as_str()).collect();
        for want in [
            "A1",
            "A2",
            "linearity",
            "norm-a",
            "norm-b",
            "norm-c",
            "norm-d",
        ] {
            if !ids.contains(&want) {
                return Err(format!("{}: missing check {want}", r.model_label));
            }
        }
        for c in &p.checks {
            if c.samples < 10_000 && c.axiom != "norm-a" {
                return Err(format!(
                    "{} {}: only {} samples",
                    r.model_label, c.axiom, c.samples
                ));
            }
            if !(c.max_residual <= 1e-10) {
                return Err(format!(
                    "{} {}: residual {:e}",
                    r.model_label, c.axiom, c.max_residual
                ));
            }
            worst = worst.max(c.max_residual);
        }
    }
    if elapsed > 60.0 {
        return Err(format!("runtime {elapsed:.1} s > 60 s"));
    }
    Ok(format!(
        "{} models, max residual {worst:.2e}, {elapsed:.1} s",
        reports.len()
    ))
}

/// Limit checks on a 5³ grid; A3 constant on homogeneous models; sphere A3
/// of order 2.
fn criterion_2(reports: &[Report], sphere: &Report) -> Outcome {
    let mut a3_spread = 0.0_f64;
    for r in reports {
        for l in &axioms_payload(r).limits {
            if l.cases != 125 || l.converged != l.cases || !l.pass {
                return Err(format!(
                    "{} {:?}: {}/{} converged, failures {:?}",
                    r.model_label, l.check, l.converged, l.cases, l.failures
                ));
            }
            if l.check == LimitCheck::A3 {
                if !(l.max_spread <= 1e-9) {
                    return Err(format!("{} A3 spread {:e}", r.model_label, l.max_spread));
                }
                a3_spread = a3_spread.max(l.max_spread);
            }
        }
    }
    let a3 = axioms_payload(sphere)
        .limits
        .iter()
        .find(|l| l.check == LimitCheck::A3)
        .ok_or("sphere A3 missing")?;
    if a3.converged != a3.cases {
        return Err(format!(
            "sphere A3: {}/{} converged",
            a3.converged, a3.cases
        ));
    }
    let orders: Vec<f64> = a3.orders.iter().flatten().copied().collect();
    if orders.is_empty() || orders.iter().any(|o| (o - 2.0).abs() > 0.3) {
        return Err(format!("sphere A3 orders {orders:?}"));
    }
    Ok(format!(
        "max A3 spread {a3_spread:.1e}, sphere A3 orders {:.2}..{:.2}",
        orders.iter().copied().fold(f64::INFINITY, f64::min),
        orders.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    ))
}

/// Menelaos centres on every linear model.
fn criterion_3() -> Outcome {
    let (mut agree, mut verify, mut gap, mut inv) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut cases = 0;
    for desc in group_models() {
        let model = make_dilatation_structure(&desc).unwrap();
        let s = model.structure();
        let mut sampler = Sampler::new(SEED ^ 0x3);
        for k in 0..100 {
            let mut config = RunConfig::new(desc.clone(), Task::Menelaos);
            config.seed = SEED + k;
            config.points = 100;
            config.inputs.x = Some(sampler.point(s));
            config.inputs.y = Some(sampler.point(s));
            config.inputs.eps = Some(sampler.coefficient(0.1, 0.9));
            config.inputs.mu = Some(sampler.coefficient(0.1, 0.9));
            let report = run(&config).map_err(|e| format!("{}: {e}", s.label()))?;
            let Payload::Menelaos(p) = &report.payload else {
                unreachable!("menelaos report")
            };
            let trace = p.trace.as_ref().ok_or("no iteration trace")?;
            let rate = trace.eps.compose(trace.mu).value();
            let gap_err = trace
                .gap_ratios()
                .iter()
                .map(|r| (r - rate).abs() / rate)
                .fold(0.0, f64::max);
            let inv_r = p
                .invariance
                .as_ref()
                .map_or(f64::INFINITY, |c| c.max_residual);
            agree = agree.max(p.agreement);
            verify = verify.max(p.menelaos.max_residual);
            gap = gap.max(gap_err);
            inv = inv.max(inv_r);
            if p.menelaos.samples != 100 {
                return Err(format!("verified on {} points", p.menelaos.samples));
            }
            if !(p.agreement <= 1e-9
                && p.menelaos.max_residual <= 1e-9
                && gap_err <= 1e-10
                && inv_r <= 1e-9)
            {
                return Err(format!(
                    "{} case {k}: agreement {:e}, menelaos {:e}, gap law {gap_err:e}, invariance {inv_r:e}",
                    s.label(),
                    p.agreement,
                    p.menelaos.max_residual
                ));
            }
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} cases, agreement {agree:.1e}, menelaos {verify:.1e}, gap law {gap:.1e}, invariance {inv:.1e}"
    ))
}

/// Euclidean closed form and the worked case.
fn criterion_4() -> Outcome {
    let mut worst = 0.0_f64;
    let mut sampler = Sampler::new(SEED ^ 0x4);
    for k in 0..1000 {
        let desc = ModelDescriptor::parse_flag(&format!("euclidean:dim={}", 1 + k % 3)).unwrap();
        let model = make_dilatation_structure(&desc).unwrap();
        let s = model.structure();
        let (x, y) = (sampler.point(s), sampler.point(s));
        let eps = sampler.coefficient(0.05, 0.95);
        let mu = sampler.coefficient(0.05, 0.95);
        // Geometric convergence at rate εμ: budget the iterations for the
        // default tolerance instead of the default cap.
        let rate = eps.compose(mu).value();
        let opts = IterationOptions {
            max_iter: 50 + (1e-13f64.ln() / rate.ln()).ceil() as usize,
            ..IterationOptions::default()
        };
        let trace = paper_iteration(s, &x, &y, eps, mu, &opts).map_err(|e| e.to_string())?;
        let closed = euclidean_center_closed_form(&x, &y, eps, mu).map_err(|e| e.to_string())?;
        let r = coord_residual(&trace.w, &closed);
        if !(r <= 1e-10) {
            return Err(format!("case {k}: residual {r:e}"));
        }
        worst = worst.max(r);
    }
    let model = make_dilatation_structure(&ModelDescriptor::parse_flag("euclidean:dim=1").unwrap())
        .unwrap();
    let half = Scalar::new(0.5).unwrap();
    let p = |v: f64| Point::new(vec![v]).unwrap();
    let w = paper_iteration(
        model.structure(),
        &p(0.0),
        &p(1.0),
        half,
        half,
        &IterationOptions::default(),
    )
    .map_err(|e| e.to_string())?
    .w
    .coords()[0];
    if !((w - 1.0 / 3.0).abs() <= 1e-12) {
        return Err(format!("worked case gives {w}"));
    }
    Ok(format!(
        "1000 cases, max residual {worst:.1e}, worked case w = {w:.15}"
    ))
}

/// Normalization of random words on the linear models.
fn criterion_5() -> Outcome {
    const COEFFS: [f64; 6] = [0.5, 2.0, 0.25, 4.0, 0.75, 4.0 / 3.0];
    let models: Vec<ModelDescriptor> = [
        "euclidean:dim=1",
        "euclidean:dim=2",
        "euclidean:dim=3,p=inf",
        "heisenberg",
        "step2:dim1=3,dim2=2,bracket_seed=7",
    ]
    .iter()
    .map(|f| ModelDescriptor::parse_flag(f).unwrap())
    .collect();
    let mut sampler = Sampler::new(SEED ^ 0x5);
    let (mut dil, mut trans, mut worst, mut pair_worst) = (0, 0, 0.0_f64, 0.0_f64);
    for k in 0..500 {
        let model = make_dilatation_structure(&models[k % models.len()]).unwrap();
        let s = model.structure();
        let g = model.group().expect("linear model");
        let mut two_factor_pair = None;
        let word = match k % 4 {
            // Two factors with inverse coefficients: a left translation.
            0 => {
                let (x, y) = (sampler.point(s), sampler.point(s));
                let e = Scalar::new(COEFFS[(k / 4) % COEFFS.len()]).unwrap();
                two_factor_pair = Some((x.clone(), y.clone(), e));
                Word::new(vec![
                    DilatationMap {
                        center: x,
                        coeff: e,
                    },
                    DilatationMap {
                        center: y,
                        coeff: e.inv(),
                    },
                ])
            }
            // A random word followed by its inverse.
            1 => {
                let len = 1 + (k / 4) % 4;
                let w = random_word(s, &mut sampler, len, &COEFFS).map_err(|e| e.to_string())?;
                let mut f = w.factors().to_vec();
                f.extend(w.inverse().factors().iter().cloned());
                Word::new(f)
            }
            // Random words of length 1..=8.
            _ => {
                let len = 1 + (k * 7 + 3) % 8;
                random_word(s, &mut sampler, len, &COEFFS)
            }
        }
        .map_err(|e| e.to_string())?;

        let nf = normalize_word(s, &word, 1e-8).map_err(|e| format!("word {word}: {e}"))?;
        let probes: Vec<Point> = (0..20).map(|_| sampler.point(s)).collect();
        let check = verify_normal_form(s, &word, &nf, &probes, 1e-8).map_err(|e| e.to_string())?;
        if !check.pass {
            return Err(format!("word {word}: residual {:e}", check.max_residual));
        }
        worst = worst.max(check.max_residual);
        let prod = word.coefficient_product();
        match (&nf, prod.is_unit()) {
            (CanonicalElement::Dilatation { coeff, .. }, false) => {
                if (coeff.value() - prod.value()).abs() > 1e-12 * prod.value() {
                    return Err(format!(
                        "word {word}: coefficient {coeff} vs product {prod}"
                    ));
                }
                dil += 1;
            }
            (CanonicalElement::LeftTranslation { .. } | CanonicalElement::Identity, true) => {
                trans += 1;
            }
            _ => return Err(format!("word {word} (product {prod}) normalizes to {nf}")),
        }
        if let Some((x, y, e)) = two_factor_pair {
            // x δ_ε(x⁻¹ y) y⁻¹, from the group operations.
            let expect = (|| {
                let d = g.dilation(e, &g.mul(&g.inv(&x)?, &y)?)?;
                g.mul(&g.mul(&x, &d)?, &g.inv(&y)?)
            })()
            .map_err(|e| e.to_string())?;
            let got = match &nf {
                CanonicalElement::LeftTranslation { g } => g.clone(),
                CanonicalElement::Identity => g.identity(),
                other => return Err(format!("pair word {word} gives {other}")),
            };
            let r = coord_residual(&got, &expect);
            if !(r <= 1e-12) {
                return Err(format!("pair word {word}: translation off by {r:e}"));
            }
            pair_worst = pair_worst.max(r);
        }
    }
    Ok(format!(
        "500 words ({dil} dilatations, {trans} translations/identity), max residual {worst:.1e}, pair translations {pair_worst:.1e}"
    ))
}

/// The sphere satisfies the metric axioms but not linearity.
fn criterion_6(sphere: &Report) -> Outcome {
    let p = axioms_payload(sphere);
    let by_id = |id: &str| {
        p.checks
            .iter()
            .find(|c| c.axiom == id)
            .ok_or(format!("missing {id}"))
    };
    for id in ["A1", "A2"] {
        let c = by_id(id)?;
        if !c.pass {
            return Err(format!("sphere {id} residual {:e}", c.max_residual));
        }
    }
    for l in &p.limits {
        if !l.pass {
            return Err(format!("sphere {:?} failed: {:?}", l.check, l.failures));
        }
    }
    let lin = by_id("linearity")?;
    let model = SphereModel::unit();
    let w = sphere_witness(&model);
    let witness_r =
        linearity_residual(&model, &w.x, &w.u, &w.v, w.eps, w.mu).map_err(|e| e.to_string())?;
    if lin.pass || !(witness_r >= 1e-3) {
        return Err(format!(
            "linearity pass={} witness residual {witness_r:e}",
            lin.pass
        ));
    }
    let nc = p
        .negative_control
        .as_ref()
        .ok_or("no Menelaos negative control")?;
    if nc.pass {
        return Err(format!(
            "Menelaos identity holds on the witness ({:e})",
            nc.max_residual
        ));
    }
    if sphere.pass {
        return Err("sphere report passes".into());
    }
    Ok(format!(
        "A1/A2/A3/A4 pass; linearity witness {witness_r:.3e}, Menelaos residual {:.3e}",
        nc.max_residual
    ))
}

/// Identical configurations give identical bytes.
fn criterion_7() -> Outcome {
    let heis = ModelDescriptor::Heisenberg {};
    let mut configs = vec![
        RunConfig::new(heis.clone(), Task::CheckAxioms),
        RunConfig::new(
            ModelDescriptor::parse_flag("sphere").unwrap(),
            Task::CheckAxioms,
        ),
        RunConfig::new(heis.clone(), Task::Tangent),
        RunConfig::new(heis.clone(), Task::Menelaos),
        RunConfig::new(heis, Task::Normalize),
    ];
    configs[3].inputs.y = Some(Point::new(vec![0.2, -0.1, 0.05]).unwrap());
    configs[4].inputs.word = Some(
        "D(0.1;0;0;0.5) D(0;0.2;0.1;2) D(0;0;0.3;0.25)"
            .parse()
            .unwrap(),
    );
    for c in &mut configs {
        c.seed = SEED;
        c.samples = 500;
    }
    for c in &configs {
        let a = run(c)
            .and_then(|r| emit(&r, Format::Json))
            .map_err(|e| e.to_string())?;
        let b = run(c)
            .and_then(|r| emit(&r, Format::Json))
            .map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{:?} report differs between runs", c.task));
        }
    }
    Ok(format!("{} configurations byte-identical", configs.len()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let reports: Result<Vec<Report>, String> = group_models().iter().map(axiom_report).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let sphere = axiom_report(&ModelDescriptor::parse_flag("sphere").unwrap());

    let outcomes: Vec<(&str, Outcome)> = vec![
        (
            "axiom suite",
            reports
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|r| criterion_1(r, elapsed)),
        ),
        (
            "tangent limits",
            match (&reports, &sphere) {
                (Ok(r), Ok(s)) => criterion_2(r, s),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            },
        ),
        ("menelaos reproduction", criterion_3()),
        ("euclidean closed form", criterion_4()),
        ("semigroup closure", criterion_5()),
        (
            "negative control",
            sphere.as_ref().map_err(Clone::clone).and_then(criterion_6),
        ),
        ("determinism", criterion_7()),
    ];

    let mut ok = true;
    for (i, (name, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                ok = false;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
