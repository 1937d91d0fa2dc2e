//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Run with: cargo test --test acceptance -- --nocapture

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use fieldlint::numeric::{
    action_box, classical_action_rate, electrostatic_config, kg_em_residual, lorentz_force,
    orthogonality_check, yukawa_radial_derivative, yukawa_t00, yukawa_t00_closed, BoxSpec,
    FieldAssignment, FieldConfig, FourVector,
};
use fieldlint::scenario::{Catalog, ScenarioOptions};
use fieldlint::{
    canonicalize, charge_degree_audit, check_requirements, derive_em_equation, dimension_of,
    divergence, euler_lagrange, gauge_check, infer_dimensions, on_shell_reduce, parse, parse_expr,
    parse_expr_in, poly_degree, rat, render, stress_energy, Assumption, Expr, FieldDecl, Index,
    Parity, Reality, VariationTarget, Verdict,
};

fn criterion(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n} ({name}): {}{}",
        if pass { "PASS" } else { "FAIL" },
        if detail.is_empty() {
            String::new()
        } else {
            format!("  [{detail}]")
        }
    );
    assert!(pass, "acceptance criterion {n} ({name}) failed: {detail}");
}

fn scenario_file(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn model(name: &str) -> fieldlint::LagrangianModel {
    parse(&scenario_file(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn criterion_01_symbolic_goldens() {
    let mut all = true;
    let mut detail = String::new();
    let cases: Vec<(&str, Box<dyn Fn() -> bool>)> = vec![
        (
            "free scalar equation",
            Box::new(|| {
                let m = model("kg_free_real.lagr");
                let eq = euler_lagrange(&m, &VariationTarget::field("phi")).unwrap();
                let golden = parse_expr_in("d_{mu}(d^{mu}(phi)) + m^2*phi", &m).unwrap();
                eq.matches(&golden).unwrap()
            }),
        ),
        (
            "linear coupling survivor then zero",
            Box::new(|| {
                let m = model("kg_real_interaction.lagr");
                let eq = euler_lagrange(&m, &VariationTarget::field("phi")).unwrap();
                let survivor = parse_expr_in("e*d_{mu}(A^{mu})*phi", &m).unwrap();
                let visible = eq.matches(&survivor).unwrap();
                let gauged = m.with_assumption(Assumption::LorenzGauge);
                let eq = euler_lagrange(&gauged, &VariationTarget::field("phi")).unwrap();
                visible && eq.lhs.is_zero_literal()
            }),
        ),
        (
            "interacting scalar equation",
            Box::new(|| {
                let m = model("kg_em_complex.lagr");
                let eq = euler_lagrange(&m, &VariationTarget::conj("phi")).unwrap();
                let golden = parse_expr_in(
                    "d_{mu}(d^{mu}(phi)) + 2*i*e*A^{mu}*d_{mu}(phi) + m^2*phi",
                    &m,
                )
                .unwrap();
                eq.matches(&golden).unwrap()
            }),
        ),
        (
            "potential equation with quadratic charge term",
            Box::new(|| {
                let m = model("em_kg_full.lagr");
                let eq = derive_em_equation(&m).unwrap();
                let golden = parse_expr_in(
                    "d_{nu}(d^{mu}(A^{nu})) - d_{nu}(d^{nu}(A^{mu})) \
                     + 4*pi*i*e*(conj(phi)*d^{mu}(phi) - d^{mu}(conj(phi))*phi) \
                     - 8*pi*e^2*A^{mu}*conj(phi)*phi",
                    &m,
                )
                .unwrap();
                // The quadratic-charge monomial must be present verbatim:
                // subtracting it must remove the bare-potential content.
                let quad = parse_expr_in("-8*pi*e^2*A^{mu}*conj(phi)*phi", &m).unwrap();
                let without = canonicalize(&eq.lhs.clone().minus(quad)).unwrap();
                let rendered_full = render(&eq.lhs);
                let has_term = rendered_full.contains("8*pi*e^2*A^{mu}*conj(phi)*phi");
                let removed = !render(&without).contains("A^{mu}*conj(phi)*phi");
                eq.matches(&golden).unwrap() && has_term && removed
            }),
        ),
        (
            "stress-energy tensor of the free scalar",
            Box::new(|| {
                let m = model("kg_free_real.lagr");
                let t = stress_energy(&m, "phi").unwrap();
                let golden = parse_expr_in(
                    "d^{mu}(phi)*d^{nu}(phi) - 1/2*d_{alpha}(phi)*d^{alpha}(phi)*g^{mu nu} \
                     + 1/2*m^2*phi^2*g^{mu nu}",
                    &m,
                )
                .unwrap();
                t == golden
            }),
        ),
        (
            "first-order spinor equation",
            Box::new(|| {
                let m = model("dirac_free.lagr");
                let eq = euler_lagrange(&m, &VariationTarget::field("psibar")).unwrap();
                let golden = parse_expr_in("i*gamma^{mu}*d_{mu}(psi) - m*psi", &m).unwrap();
                eq.matches(&golden).unwrap()
            }),
        ),
    ];
    for (name, case) in cases {
        let start = Instant::now();
        let ok = case();
        let elapsed = start.elapsed();
        if !ok || elapsed.as_secs_f64() >= 1.0 {
            all = false;
            detail = format!("{name}: ok={ok} elapsed={elapsed:?}");
            break;
        }
    }
    criterion(1, "symbolic goldens", all, &detail);
}

#[test]
fn criterion_02_dimension_table() {
    let kg = model("kg_free_real.lagr");
    let kg_table = infer_dimensions(&kg).unwrap();
    let phi_ok = kg_table.get("phi") == Some(&rat(-1, 1));

    let dirac = model("dirac_free.lagr");
    let dirac_table = infer_dimensions(&dirac).unwrap();
    let psi_ok = dirac_table.get("psi") == Some(&rat(-3, 2));

    let phi2 = parse_expr_in("phi^2", &kg).unwrap();
    let phi2_ok = dimension_of(&phi2, &kg_table, &kg.constants).unwrap().0 == rat(-2, 1);
    let flag_ok = check_requirements(&kg).checks.iter().any(|c| {
        c.name == "probability_density_phi"
            && c.witness
                .as_deref()
                .unwrap_or("")
                .contains("cannot represent")
    });

    let barpsi = parse_expr_in("psibar*psi", &dirac).unwrap();
    let barpsi_ok = dimension_of(&barpsi, &dirac_table, &dirac.constants)
        .unwrap()
        .0
        == rat(-3, 1);

    let kgc = model("kg_free_complex.lagr");
    let kgc_table = infer_dimensions(&kgc).unwrap();
    let j = parse_expr_in("i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)", &kgc).unwrap();
    let j_ok = dimension_of(&j, &kgc_table, &kgc.constants).unwrap().0 == rat(-3, 1);

    // Every density term of every catalog model is a scalar of [L^-4].
    let mut terms_ok = true;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "lagr") {
            continue;
        }
        let m = parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let report = check_requirements(&m);
        for c in &report.checks {
            if (c.name.contains("_dimension") || c.name.contains("_scalar"))
                && c.name.starts_with("term")
                && c.verdict == Verdict::Fail
            {
                terms_ok = false;
            }
        }
    }

    let pass = phi_ok && psi_ok && phi2_ok && flag_ok && barpsi_ok && j_ok && terms_ok;
    criterion(
        2,
        "dimension table",
        pass,
        &format!("phi={phi_ok} psi={psi_ok} phi2={phi2_ok} flag={flag_ok} barpsi={barpsi_ok} j={j_ok} terms={terms_ok}"),
    );
}

/// A random symmetric rank-2 expression in the free indices (mu, nu).
fn random_symmetric(rng: &mut StdRng, fields: &[fieldlint::FieldRef]) -> Expr {
    let mu = Index::down("mu");
    let nu = Index::down("nu");
    let mut pieces = Vec::new();
    let n = rng.gen_range(1..=3);
    for k in 0..n {
        let c = Expr::ratio(rng.gen_range(1..=5), rng.gen_range(1..=3))
            .minus(Expr::int(if rng.gen_bool(0.5) { 0 } else { 1 }));
        let x = &fields[rng.gen_range(0..fields.len())];
        let y = &fields[rng.gen_range(0..fields.len())];
        let shape = rng.gen_range(0..4);
        let sym = match shape {
            // X_,mu Y_,nu + X_,nu Y_,mu
            0 => Expr::sum(vec![
                Expr::product(vec![
                    Expr::field_d(x, vec![mu.clone()]),
                    Expr::field_d(y, vec![nu.clone()]),
                ]),
                Expr::product(vec![
                    Expr::field_d(x, vec![nu.clone()]),
                    Expr::field_d(y, vec![mu.clone()]),
                ]),
            ]),
            // X_,mu,nu (second derivatives commute)
            1 => Expr::product(vec![
                Expr::field_d(x, vec![mu.clone(), nu.clone()]),
                Expr::field(y),
            ]),
            // g_mu nu times a scalar
            2 => Expr::product(vec![
                Expr::metric(mu.clone(), nu.clone()),
                Expr::field(x),
                Expr::field(y),
            ]),
            // X_,mu X_,nu
            _ => Expr::product(vec![
                Expr::field_d(x, vec![mu.clone()]),
                Expr::field_d(x, vec![nu.clone()]),
            ]),
        };
        // Distinguish the pieces with different scalar weights.
        let weight = Expr::int(rng.gen_range(1..=4) * if k % 2 == 0 { 1 } else { -1 });
        pieces.push(Expr::product(vec![weight, c, sym]));
    }
    Expr::sum(pieces)
}

#[test]
fn criterion_03_antisymmetric_cancellation() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let phi = FieldDecl::scalar("phi", Reality::Real);
    let chi = FieldDecl::scalar("chi", Reality::Real);
    let fields = vec![phi, chi];
    let f = FieldDecl::tensor2("F", Parity::Antisymmetric);
    let mut pass = true;
    for _ in 0..100 {
        let s = random_symmetric(&mut rng, &fields);
        let contracted = Expr::product(vec![
            Expr::field_idx(&f, vec![Index::up("mu"), Index::up("nu")]),
            s,
        ]);
        let c = canonicalize(&contracted).unwrap();
        if !c.is_zero_literal() {
            pass = false;
            break;
        }
    }
    let elapsed = start.elapsed();
    criterion(
        3,
        "antisymmetric x symmetric cancellation",
        pass && elapsed.as_secs_f64() < 5.0,
        &format!("100 cases in {elapsed:?}"),
    );
}

#[test]
fn criterion_04_gauge_audit() {
    let maxwellian = model("em_current_ext.lagr");
    let eq = derive_em_equation(&maxwellian).unwrap();
    let current_only_passes = gauge_check(&eq).unwrap().pass;

    let charged = model("em_kg_full.lagr");
    let eq = derive_em_equation(&charged).unwrap();
    let verdict = gauge_check(&eq).unwrap();
    let mut decls = charged.fields.clone();
    decls.push(FieldDecl::scalar("chi", Reality::Real));
    let expected = parse_expr(
        "-8*pi*e^2*d^{mu}(chi)*conj(phi)*phi",
        &decls,
        &charged.constants,
    )
    .unwrap();
    let witness_exact = verdict.witness == expected;

    criterion(
        4,
        "gauge audit",
        current_only_passes && !verdict.pass && witness_exact,
        &format!(
            "maxwellian pass={current_only_passes}, charged witness: {}",
            render(&verdict.witness)
        ),
    );
}

#[test]
fn criterion_05_electrostatic_contradiction() {
    let spot = kg_em_residual(&electrostatic_config(1.0, 1.0, 0.1), 1.0, 1.0).unwrap();
    let spot_ok = (spot.re - 0.01).abs() <= 1e-12 && spot.im.abs() <= 1e-12;
    let mut worst = 0.0_f64;
    for m in [0.1, 1.0, 10.0] {
        for u in [-1.0, -0.1, 0.0, 0.1, 1.0] {
            let r = kg_em_residual(&electrostatic_config(m, 1.0, u), m, 1.0).unwrap();
            worst = worst.max((r.re - u * u).abs()).max(r.im.abs());
        }
    }
    criterion(
        5,
        "electrostatic residual is U^2",
        spot_ok && worst <= 1e-12,
        &format!("spot={:.2e}, worst deviation={worst:.2e}", spot.re),
    );
}

#[test]
fn criterion_06_plane_wave_action() {
    let m = model("kg_free_complex.lagr");
    let b = BoxSpec {
        lx: 1.0,
        ly: 1.0,
        lz: 1.0,
        duration: 1.0,
    };
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let mass = 1.0_f64;
    let mut on_shell_ok = true;
    for _ in 0..20 {
        let p = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let p2 = p.iter().map(|x| x * x).sum::<f64>();
        let energy = (p2 + mass * mass).sqrt();
        let cfg = FieldConfig::new()
            .assign(
                "phi",
                FieldAssignment::PlaneWave {
                    energy,
                    momentum: p,
                },
            )
            .constant("m", mass);
        let rate = action_box(&m, &cfg, &b, true).unwrap();
        if rate.abs() > 1e-12 {
            on_shell_ok = false;
        }
    }
    let mut off_shell_ok = true;
    for _ in 0..20 {
        let p = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let p2 = p.iter().map(|x| x * x).sum::<f64>();
        let energy = rng.gen_range(0.5..4.0);
        let cfg = FieldConfig::new()
            .assign(
                "phi",
                FieldAssignment::PlaneWave {
                    energy,
                    momentum: p,
                },
            )
            .constant("m", mass);
        let rate = action_box(&m, &cfg, &b, true).unwrap();
        let want = (energy * energy - p2 - mass * mass) / (2.0 * energy);
        if (rate - want).abs() > 1e-12 * want.abs().max(1.0) {
            off_shell_ok = false;
        }
    }
    let classical = classical_action_rate(mass, 0.0).unwrap();
    let classical_ok = (classical + mass).abs() <= 1e-12 && classical != 0.0;
    criterion(
        6,
        "plane-wave action",
        on_shell_ok && off_shell_ok && classical_ok,
        &format!("on_shell={on_shell_ok} off_shell={off_shell_ok} classical={classical}"),
    );
}

#[test]
fn criterion_07_yukawa_energy_density() {
    let g = 4.0 * PI;
    let spot = yukawa_t00(g, 1.0, 1.0).unwrap();
    let spot_ok = (spot - 0.3383382).abs() < 1e-6;
    let mut worst = 0.0_f64;
    for m in [0.0, 1.0, 5.0] {
        for i in 0..50 {
            let r = 0.1 + (20.0 - 0.1) * (i as f64) / 49.0;
            let sym = yukawa_t00(g, m, r).unwrap();
            let closed = yukawa_t00_closed(g, m, r).unwrap();
            worst = worst.max((sym - closed).abs() / closed.abs().max(f64::MIN_POSITIVE));
        }
    }
    criterion(
        7,
        "yukawa energy density",
        spot_ok && worst <= 1e-12,
        &format!("spot={spot:.7}, worst relative deviation={worst:.2e}"),
    );
}

#[test]
fn criterion_08_mass_scaling() {
    let m = model("kg_free_real.lagr");
    let t = stress_energy(&m, "phi").unwrap();
    let kg_deg = poly_degree(&t, "m").unwrap();

    let v = FieldDecl::vector("u", Reality::Real);
    let dust = Expr::product(vec![
        Expr::constant("mu_dens"),
        Expr::power(Expr::constant("gamma_rel"), -1),
        Expr::field_idx(&v, vec![Index::up("mu")]),
        Expr::field_idx(&v, vec![Index::up("nu")]),
    ]);
    let dust_deg = poly_degree(&dust, "mu_dens").unwrap();
    criterion(
        8,
        "mass scaling degrees",
        kg_deg == 2 && dust_deg == 1,
        &format!("scalar degree {kg_deg}, dust degree {dust_deg}"),
    );
}

#[test]
fn criterion_09_orthogonality() {
    let dphi = yukawa_radial_derivative(4.0 * PI, 1.0, 1.0).unwrap();
    let f = FourVector::new(0.0, 0.0, 0.0, dphi);
    let gamma = 1.25;
    let v = FourVector::new(gamma, 0.0, 0.0, -gamma * 0.6);
    let product = orthogonality_check(&f, &v).unwrap();
    let yukawa_ok = (product - (-0.5518192)).abs() <= 1e-6 && product.abs() > 1e-3;

    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    let mut lorentz_ok = true;
    for _ in 0..100 {
        let mut fmat = [[0.0; 4]; 4];
        for mu in 0..4 {
            for nu in (mu + 1)..4 {
                let val = rng.gen_range(-2.0..2.0);
                fmat[mu][nu] = val;
                fmat[nu][mu] = -val;
            }
        }
        let speed: [f64; 3] = [
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        ];
        let v2 = speed.iter().map(|x| x * x).sum::<f64>();
        let gamma = 1.0 / (1.0 - v2).sqrt();
        let vel = FourVector::new(gamma, gamma * speed[0], gamma * speed[1], gamma * speed[2]);
        let c = rng.gen_range(0.1..3.0);
        let j = FourVector::new(c * vel[0], c * vel[1], c * vel[2], c * vel[3]);
        let force = lorentz_force(&fmat, &j);
        if orthogonality_check(&force, &vel).unwrap().abs() > 1e-12 {
            lorentz_ok = false;
            break;
        }
    }
    criterion(
        9,
        "orthogonality",
        yukawa_ok && lorentz_ok,
        &format!("yukawa f.v={product:.7}, lorentz sweep ok={lorentz_ok}"),
    );
}

#[test]
fn criterion_10_on_shell_conservation() {
    let kg = model("kg_free_complex.lagr");
    let eq = euler_lagrange(&kg, &VariationTarget::conj("phi")).unwrap();
    let eq_conj = euler_lagrange(&kg, &VariationTarget::field("phi")).unwrap();
    let j = parse_expr_in("i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)", &kg).unwrap();
    let kg_ok = on_shell_reduce(&divergence(&j).unwrap(), &[eq, eq_conj])
        .unwrap()
        .is_zero_literal();

    let dirac = model("dirac_free.lagr");
    let eq = euler_lagrange(&dirac, &VariationTarget::field("psibar")).unwrap();
    let eq_bar = euler_lagrange(&dirac, &VariationTarget::field("psi")).unwrap();
    let j = parse_expr_in("psibar*gamma^{mu}*psi", &dirac).unwrap();
    let dirac_ok = on_shell_reduce(&divergence(&j).unwrap(), &[eq, eq_bar])
        .unwrap()
        .is_zero_literal();
    criterion(
        10,
        "on-shell current conservation",
        kg_ok && dirac_ok,
        &format!("scalar={kg_ok} dirac={dirac_ok}"),
    );
}

#[test]
fn criterion_11_full_catalog_via_cli() {
    let start = Instant::now();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_fieldlint"))
        .args(["scenario", "--all"])
        .output()
        .expect("run fieldlint");
    let elapsed = start.elapsed();
    let pass = out.status.code() == Some(0) && elapsed.as_secs_f64() < 10.0;
    criterion(
        11,
        "full catalog via CLI",
        pass,
        &format!("exit={:?} elapsed={elapsed:?}", out.status.code()),
    );
}

#[test]
fn full_catalog_runs_green_in_process() {
    let cat = Catalog::builtin();
    let opts = ScenarioOptions::default();
    let mut ok = true;
    for id in cat.list() {
        let report = cat.run(&id, &opts).unwrap();
        if !report.passed() {
            eprintln!("{}", report.to_text(false));
            ok = false;
        }
    }
    let out1 = charge_degree_audit(&model("pauli_weisskopf_int.lagr"), "e").unwrap();
    assert!(out1.mixed_flag);
    assert!(ok, "catalog has failing scenarios");
}
