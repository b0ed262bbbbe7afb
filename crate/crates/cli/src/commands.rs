//! One function per subcommand. Each reads its keys from the config and
//! returns printed results plus named output files.

use std::f64::consts::PI;
use std::sync::Arc;

use escape_core::cover::{ball_multiplicity, besicovitch_cover, thm2_cover_recipe, OrbitData, RecipeParams};
use escape_core::escape::{classify_orbit, render_partition, EscapeClass, FastCriterion, RateSequence, Window, CLASS_NAMES};
use escape_core::fmt::{huge17, sig17};
use escape_core::ifs::{cylinder_measure, limit_set_points, schedule_indices, similarity_dimension, Scheme, SchemeSequence, Square};
use escape_core::logtransform::ClassBModel;
use escape_core::strip::{
    ahlfors_lower, ahlfors_upper, build_phi, build_phi_ln, build_phi_thm2, contour_function_build, tau, tau_tiny, IdentityFactor,
    InverseLogFactor, PowerFactor, StripProfile, TinyFactor,
};
use escape_core::{Complex64, Error, Tiny};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::CliError;

#[derive(Default)]
pub struct Outcome {
    /// `key=value` lines for stdout.
    pub lines: Vec<(String, String)>,
    pub files: Vec<(String, Vec<u8>)>,
    /// Set when a computed check failed; outputs are still written.
    pub failed_check: Option<String>,
}

impl Outcome {
    fn line(&mut self, k: &str, v: impl Into<String>) {
        self.lines.push((k.to_string(), v.into()));
    }

    fn file(&mut self, name: &str, body: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), body.into()));
    }
}

pub fn dispatch(cfg: &mut Config) -> Result<Outcome, CliError> {
    match cfg.sub.name {
        "dim" => dim(cfg),
        "cylinder" => cylinder(cfg),
        "schedule" => schedule(cfg),
        "render" => render(cfg),
        "classify" => classify(cfg),
        "phi-build" => phi_build(cfg),
        "tau" => tau_cmd(cfg),
        "ahlfors" => ahlfors(cfg),
        "contour-build" => contour(cfg),
        "cover-ledger" => cover_ledger(cfg),
        "besicovitch" => besicovitch(cfg),
        other => unreachable!("subcommand {other} has no handler"),
    }
}

fn dim(cfg: &mut Config) -> Result<Outcome, CliError> {
    let b = cfg.list("ratios")?;
    let s = similarity_dimension(&b)?;
    let residual = b.iter().map(|x| x.powf(s)).sum::<f64>() - 1.0;
    let mut o = Outcome::default();
    o.line("s", sig17(s));
    o.line("residual", sig17(residual));
    o.file("dim.csv", format!("quantity,value\ns,{}\nresidual,{}\n", sig17(s), sig17(residual)));
    Ok(o)
}

fn parse_offsets(cfg: &mut Config, n: usize) -> Result<Vec<Complex64>, CliError> {
    let raw = cfg.text("offsets");
    let offs: Option<Vec<Complex64>> = raw
        .split(',')
        .map(|t| {
            let (x, y) = t.split_once(':')?;
            Some(Complex64::new(x.trim().parse().ok()?, y.trim().parse().ok()?))
        })
        .collect();
    match offs {
        Some(v) if v.len() == n => Ok(v),
        _ => Err(cfg.usage_error("offsets", &format!("{n} comma-separated x:y pairs"))),
    }
}

fn cylinder(cfg: &mut Config) -> Result<Outcome, CliError> {
    let ratios = cfg.list("ratios")?;
    let offsets = parse_offsets(cfg, ratios.len())?;
    let depth = cfg.usize("depth")?;
    let cap = cfg.u64("cap")?;
    let parts: Vec<(f64, Complex64)> = ratios.into_iter().zip(offsets).collect();
    let seq = SchemeSequence::repeat(Scheme::similarities(&parts, Square::unit())?, depth.max(1))?;
    let pts = limit_set_points(&seq, depth, cap)?;
    let mut csv = String::from("word,re,im,mass\n");
    let mut total = 0.0;
    for (z, code) in &pts {
        let m = cylinder_measure(&seq, code)?;
        total += m;
        let word: Vec<String> = code.0.iter().map(|j| j.to_string()).collect();
        csv.push_str(&format!("{},{},{},{}\n", word.join("."), sig17(z.re), sig17(z.im), sig17(m)));
    }
    let mut o = Outcome::default();
    o.line("cylinders", pts.len().to_string());
    o.line("mass_sum", sig17(total));
    o.file("cylinder.csv", csv);
    Ok(o)
}

/// `m` maps of ratio `b`, translated onto a `k × k` grid of the unit square.
fn uniform_stage(m: usize, b: f64) -> Result<Scheme, Error> {
    let k = (1..).find(|k| k * k >= m).expect("finite");
    let step = if k > 1 { (1.0 - b) / (k - 1) as f64 } else { 0.0 };
    let parts: Vec<(f64, Complex64)> = (0..m).map(|i| (b, Complex64::new((i % k) as f64 * step, (i / k) as f64 * step))).collect();
    Scheme::similarities(&parts, Square::unit())
}

fn schedule(cfg: &mut Config) -> Result<Outcome, CliError> {
    let raw = cfg.text("stages");
    let stages: Option<Vec<(usize, f64)>> = raw
        .split(',')
        .map(|t| {
            let (m, b) = t.split_once('*')?;
            Some((m.trim().parse().ok()?, b.trim().parse().ok()?))
        })
        .collect();
    let stages = stages.ok_or_else(|| cfg.usage_error("stages", "comma-separated m*b entries"))?;
    let c = cfg.f64("eps-scale")?;
    let cap = cfg.usize("cap")?;
    let eps = move |t: f64| if t > 0.0 { c / (1.0 - t.ln()) } else { 0.0 };
    let stats = stages.iter().map(|&(m, b)| uniform_stage(m, b).map(|s| s.stats())).collect::<Result<Vec<_>, _>>()?;
    let ns = schedule_indices(&stats, &eps, cap)?;
    let mut csv = String::from("stage,m,b,s,ln_d,n\n");
    for (i, ((m, b), st)) in stages.iter().zip(&stats).enumerate() {
        let n = ns.get(i).map_or(String::new(), |n| n.to_string());
        csv.push_str(&format!("{},{m},{},{},{},{n}\n", i + 1, sig17(*b), sig17(st.gamma), sig17(st.ln_d)));
    }
    let mut o = Outcome::default();
    o.line("schedule", ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    o.file("schedule.csv", csv);
    Ok(o)
}

fn model(cfg: &mut Config) -> Result<ClassBModel, CliError> {
    let lambda = cfg.complex("lambda")?;
    let r = cfg.f64_or("threshold", "auto")?.unwrap_or(lambda.norm().max(1.0));
    Ok(ClassBModel::exponential(lambda, r)?)
}

/// `p_n` from `n`, `n^a` or `exp`; `none` is handled by the caller.
fn rate_fn(cfg: &Config, spec: &str) -> Result<Box<dyn Fn(usize) -> f64>, CliError> {
    match spec {
        "n" => Ok(Box::new(|n| n as f64)),
        "exp" => Ok(Box::new(|n| (n as f64).exp())),
        s => match s.strip_prefix("n^").and_then(|a| a.parse::<f64>().ok()).filter(|a| *a > 0.0) {
            Some(a) => Ok(Box::new(move |n| (n as f64).powf(a))),
            None => Err(cfg.usage_error("rate", "none, n, n^a with a > 0, or exp")),
        },
    }
}

fn rate(cfg: &mut Config, len: usize) -> Result<Option<RateSequence>, CliError> {
    let spec = cfg.text("rate");
    if spec == "none" {
        return Ok(None);
    }
    Ok(Some(RateSequence::from_fn(rate_fn(cfg, &spec)?, len)))
}

fn fast(cfg: &mut Config) -> Result<Option<FastCriterion>, CliError> {
    Ok(cfg.f64_or("fast-base", "none")?.map(FastCriterion::new))
}

fn render(cfg: &mut Config) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let w = cfg.list("window")?;
    if w.len() != 4 {
        return Err(cfg.usage_error("window", "x0,x1,y0,y1"));
    }
    let win = Window::new(w[0], w[1], w[2], w[3])?;
    let (width, height) = cfg.size("size")?;
    let horizon = cfg.usize("horizon")?;
    let rate = rate(cfg, horizon)?;
    let fast = fast(cfg)?;
    let raster = render_partition(&m, &win, width, height, rate.as_ref(), horizon, fast)?;
    let mut o = Outcome::default();
    for (name, count) in CLASS_NAMES.iter().zip(raster.histogram()) {
        o.line(&format!("pixels.{name}"), count.to_string());
    }
    o.file("render.ppm", raster.to_ppm());
    Ok(o)
}

fn classify(cfg: &mut Config) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let z0 = cfg.complex("z0")?;
    let horizon = cfg.usize("horizon")?;
    let rate = rate(cfg, horizon)?;
    let fast = fast(cfg)?;
    let v = classify_orbit(&m, z0, rate.as_ref(), horizon, fast)?;
    let mut o = Outcome::default();
    o.line("class", v.class.name());
    match &v.class {
        EscapeClass::Bounded { center, radius } => {
            o.line("center_re", sig17(center.re));
            o.line("center_im", sig17(center.im));
            o.line("radius", sig17(*radius));
        }
        EscapeClass::FastEscaping { shift } => o.line("shift", shift.to_string()),
        _ => {}
    }
    o.line("horizon", v.horizon.to_string());
    o.line("violations", v.violations.len().to_string());
    if let Some(n) = v.record.lost_at {
        o.line("argument_lost_at", n.to_string());
    }
    o.file("orbit.csv", v.record.to_csv());
    Ok(o)
}

fn factor(cfg: &mut Config) -> Result<Arc<dyn TinyFactor>, CliError> {
    let spec = cfg.text("factor");
    match spec.as_str() {
        "identity" => Ok(Arc::new(IdentityFactor)),
        "inverse-log" => Ok(Arc::new(InverseLogFactor)),
        s => match s.strip_prefix("power:").and_then(|a| a.parse::<f64>().ok()).filter(|a| *a > 0.0) {
            Some(a) => Ok(Arc::new(PowerFactor(a))),
            None => Err(cfg.usage_error("factor", "identity, power:a with a > 0, or inverse-log")),
        },
    }
}

/// Strictly increasing rate terms `p_1..p_len`.
fn rate_terms(cfg: &mut Config, len: usize) -> Result<Vec<f64>, CliError> {
    let spec = cfg.text("rate");
    let f = rate_fn(cfg, &spec)?;
    Ok((1..=len).map(f).collect())
}

fn phi_build(cfg: &mut Config) -> Result<Outcome, CliError> {
    let kind = cfg.text("kind");
    let x_max = cfg.f64("x-max")?;
    let samples = cfg.usize("samples")?;
    let mut o = Outcome::default();
    let prof = match kind.as_str() {
        "lemma" => {
            let (a0, a1) = (cfg.f64("alpha-a0")?, cfg.f64("alpha-a1")?);
            let (b0, b1) = (cfg.f64("beta-b0")?, cfg.f64("beta-b1")?);
            let x0 = cfg.f64("x0")?;
            if !(a0 > 0.0 && a1 >= 0.0 && b0 > 0.0 && b1 > 0.0) {
                return Err(Error::Precondition("need a0 > 0, a1 ≥ 0, b0 > 0, b1 > 0".into()).into());
            }
            let alpha = move |x: f64| a0 / (1.0 + a1 * (x - x0));
            // Plain floats keep dyadic values exact; logs take over past underflow.
            match build_phi(alpha, move |t: f64| b0 * t.powf(b1), x0, x_max) {
                Ok(p) => {
                    o.line("beta_domain", "f64");
                    p
                }
                Err(Error::Precondition(_)) => {
                    o.line("beta_domain", "log");
                    build_phi_ln(alpha, move |l| b0.ln() + b1 * l, x0, x_max)?
                }
                Err(e) => return Err(e.into()),
            }
        }
        "thm2" => {
            let g = factor(cfg)?;
            let len = (x_max.max(2.0).ceil() as usize) + 2;
            let p = rate_terms(cfg, len)?;
            build_phi_thm2(g, &p, x_max)?
        }
        _ => return Err(cfg.usage_error("kind", "lemma or thm2")),
    };
    let orbit_len = prof.orbit().map_or(0, |(xs, _)| xs.len());
    o.line("orbit_points", orbit_len.to_string());
    o.line("neg_ln_phi_at_x_max", huge17(prof.phi_tiny(x_max).neg_ln()));
    o.file("phi.csv", prof.to_csv(x_max, samples));
    Ok(o)
}

fn tau_cmd(cfg: &mut Config) -> Result<Outcome, CliError> {
    let t = cfg.f64("t")?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Precondition(format!("τ needs t ∈ (0, 1], got {t}")).into());
    }
    let ln = tau_tiny(Tiny::from_f64(t).expect("positive")).neg_ln();
    let value = tau(t).map(|v| v.value()).unwrap_or(0.0);
    let mut o = Outcome::default();
    o.line("tau", sig17(value));
    o.line("neg_ln_tau", huge17(ln));
    o.file("tau.csv", format!("t,tau,neg_ln_tau\n{},{},{}\n", sig17(t), sig17(value), huge17(ln)));
    Ok(o)
}

fn profile(cfg: &mut Config) -> Result<StripProfile, CliError> {
    let spec = cfg.text("profile");
    let nums: Option<Vec<f64>> = spec.split(':').skip(1).map(|t| t.parse().ok()).collect();
    let bad = || cfg.usage_error("profile", "const:c, inverse:c or power:c:a with c, a > 0");
    let nums = nums.filter(|v| v.iter().all(|x: &f64| *x > 0.0 && x.is_finite())).ok_or_else(bad)?;
    let p = match (spec.split(':').next(), nums.as_slice()) {
        (Some("const"), &[c]) => StripProfile::from_fn(0.0, move |_| c),
        (Some("inverse"), &[c]) => StripProfile::from_fn(0.0, move |x| c / (1.0 + x)),
        (Some("power"), &[c, a]) => StripProfile::from_fn(0.0, move |x| c * (1.0 + x).powf(-a)),
        _ => return Err(bad()),
    };
    Ok(p?)
}

fn ahlfors(cfg: &mut Config) -> Result<Outcome, CliError> {
    let prof = profile(cfg)?;
    let (x1, x2) = (cfg.f64("x1")?, cfg.f64("x2")?);
    let lo = ahlfors_lower(&prof, x1, x2)?;
    let hi = ahlfors_upper(&prof, x1, x2)?;
    let mut o = Outcome::default();
    o.line("integral", sig17(lo.integral));
    o.line("lower", sig17(lo.value));
    o.line("lower_applicable", lo.applicable.to_string());
    o.line("upper", sig17(hi.value));
    o.file(
        "ahlfors.csv",
        format!(
            "bound,value,integral,applicable\nlower,{},{},{}\nupper,{},{},{}\n",
            sig17(lo.value),
            sig17(lo.integral),
            lo.applicable,
            sig17(hi.value),
            sig17(hi.integral),
            hi.applicable
        ),
    );
    Ok(o)
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn contour(cfg: &mut Config) -> Result<Outcome, CliError> {
    let prof = profile(cfg)?;
    let x_trunc = cfg.f64_or("x-trunc", "auto")?;
    let spacing = cfg.f64("spacing")?;
    let angle = cfg.f64("angle")? * PI;
    let (r0, r1) = (cfg.f64("r-min")?, cfg.f64("r-max")?);
    let count = cfg.usize("count")?;
    if !(r0 > 0.0 && r1 > r0 && count >= 2) {
        return Err(Error::Precondition("need 0 < r-min < r-max and count ≥ 2".into()).into());
    }
    let f = contour_function_build(&prof, x_trunc, spacing)?;
    let mut csv = String::from("r,re,im,ln_abs_f\n");
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..count {
        let r = r0 * (r1 / r0).powf(i as f64 / (count - 1) as f64);
        let v = f.eval(Complex64::from_polar(r, angle))?;
        let l = v.norm().ln();
        csv.push_str(&format!("{},{},{},{}\n", sig17(r), sig17(v.re), sig17(v.im), sig17(l)));
        xs.push(r.ln());
        ys.push(l);
    }
    let (disk, off) = f.normalization_report();
    let mut o = Outcome::default();
    o.line("x_trunc", sig17(f.x_trunc));
    o.line("scale", sig17(f.scale));
    o.line("decay_exponent", sig17(slope(&xs, &ys)));
    o.line("max_abs_unit_circle", sig17(disk));
    o.line("max_abs_off_strip", sig17(off));
    o.file("contour.csv", csv);
    Ok(o)
}

fn cover_ledger(cfg: &mut Config) -> Result<Outcome, CliError> {
    let n = cfg.usize("n")?;
    let terms = cfg.usize("terms")?;
    let p = rate_terms(cfg, terms)?;
    let x_max = cfg.f64("x-max")?;
    let g = factor(cfg)?;
    let orbit_len = cfg.usize("orbit-len")?;
    let params = RecipeParams { c1: cfg.f64("c1")?, c2: cfg.f64("c2")?, growth_c: cfg.f64("growth-c")?, eps: cfg.f64("eps")? };
    let prof = build_phi_thm2(g.clone(), &p, x_max)?;
    let cov = thm2_cover_recipe(&prof, g.as_ref(), &OrbitData::surrogate(orbit_len), &p, n, &params)?;
    let failing: Vec<&str> = cov.rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    let mut o = Outcome::default();
    o.line("rows", cov.rows.len().to_string());
    o.line("ok", cov.ok().to_string());
    o.line("ln_delta", cov.delta.ln_text());
    o.line("ln_balls", cov.n_balls.ln_text());
    o.line("ln_ball_diam", cov.ball_diam.ln_text());
    if !failing.is_empty() {
        o.line("failing", failing.join(","));
        o.failed_check = Some(format!("ledger rows failed: {}", failing.join(",")));
    }
    o.file("ledger.csv", cov.to_csv());
    Ok(o)
}

fn besicovitch(cfg: &mut Config) -> Result<Outcome, CliError> {
    let count = cfg.usize("points")?;
    let (r0, r1) = (cfg.f64("r-min")?, cfg.f64("r-max")?);
    let seed = cfg.u64("seed")?;
    if !(r0 > 0.0 && r1 >= r0) {
        return Err(Error::Precondition("need 0 < r-min ≤ r-max".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Complex64> = (0..count).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
    let radii: Vec<f64> = (0..count).map(|_| if r1 > r0 { rng.gen_range(r0..r1) } else { r0 }).collect();
    let sel = besicovitch_cover(&pts, &radii)?;
    let mult = ball_multiplicity(&pts, &radii, &sel)?;
    let mut csv = String::from("index,re,im,radius\n");
    for &j in &sel {
        csv.push_str(&format!("{j},{},{},{}\n", sig17(pts[j].re), sig17(pts[j].im), sig17(radii[j])));
    }
    let mut o = Outcome::default();
    o.line("selected", sel.len().to_string());
    o.line("multiplicity", mult.to_string());
    o.file("besicovitch.csv", csv);
    Ok(o)
}
