//! The acceptance gate: one test per shipping criterion, each printing a
//! single PASS/FAIL line. Every criterion re-derives its inputs from
//! scratch so the tests are independent and individually reproducible.

use ecs_core::verifier::{
    self, TOL_BETA_FLOW, TOL_CONSTANT_SPLIT, TOL_GAUGE, TOL_HEAT, TOL_IDENTITY, TOL_LAMBERT,
    TOL_MOMENTUM, TOL_ORACLE_BETA, TOL_ORACLE_KINETIC, TOL_PHASES, TOL_PHI_PRODUCT, TOL_PHI_SLOPE,
};
use ecs_core::{
    Configuration, CouplingFamily, FdScheme, IdentityKind, ModulusParams, PairTables, SweepGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const GRID_LAMBDAS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];
const GRID_QS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];
const GRID_SEED: u64 = 42;
const GRID_SEPARATION: f64 = 0.1;
const CONFIGS_PER_CELL: usize = 20;

struct Cell {
    index: u64,
    n: usize,
    m: usize,
    lambda: f64,
    q: f64,
}

fn grid_cells() -> Vec<Cell> {
    let mut cells = Vec::new();
    let mut index = 0u64;
    for n in 1..=5 {
        for m in 0..=n {
            for lambda in GRID_LAMBDAS {
                for q in GRID_QS {
                    cells.push(Cell {
                        index,
                        n,
                        m,
                        lambda,
                        q,
                    });
                    index += 1;
                }
            }
        }
    }
    cells
}

fn cell_configs(cell: &Cell) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED);
    rng.set_stream(cell.index);
    (0..CONFIGS_PER_CELL)
        .map(|_| {
            Configuration::sample(cell.n, cell.m, GRID_SEPARATION, &mut rng)
                .expect("grid sampling succeeds")
        })
        .collect()
}

fn verdict(number: u32, name: &str, ok: bool) {
    println!("criterion {number} ({name}): {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {number} ({name}) failed");
}

#[test]
fn criterion_01_symmetric_identity_on_the_grid() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for cell in grid_cells() {
        let p = ModulusParams::from_q(cell.q).unwrap();
        for cfg in cell_configs(&cell) {
            let r = verifier::verify_main(&cfg, cell.lambda, &p).unwrap();
            worst = worst.max(r.relative);
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= TOL_IDENTITY && elapsed.as_secs() < 120;
    println!("  worst relative {worst:.3e}, elapsed {elapsed:.2?}");
    verdict(1, "symmetric-family identity over the full grid", ok);
}

#[test]
fn criterion_02_dual_identity_on_the_grid() {
    let mut worst: f64 = 0.0;
    for cell in grid_cells() {
        let p = ModulusParams::from_q(cell.q).unwrap();
        for cfg in cell_configs(&cell) {
            let r = verifier::verify_dual(&cfg, cell.lambda, &p).unwrap();
            worst = worst.max(r.relative);
        }
    }
    println!("  worst relative {worst:.3e}");
    verdict(2, "dual-family identity over the full grid", worst <= TOL_IDENTITY);
}

#[test]
fn criterion_03_momentum_cancellation_on_the_grid() {
    let mut worst: f64 = 0.0;
    for cell in grid_cells() {
        let p = ModulusParams::from_q(cell.q).unwrap();
        for cfg in cell_configs(&cell) {
            for family in [CouplingFamily::Main, CouplingFamily::Dual] {
                let r = verifier::verify_momentum(&cfg, family, cell.lambda, &p).unwrap();
                worst = worst.max(r.residual);
            }
        }
    }
    println!("  worst raw residual {worst:.3e}");
    verdict(3, "total momentum cancels for both families", worst <= TOL_MOMENTUM);
}

#[test]
fn criterion_04_scalar_relations_across_moduli() {
    let mut worst_by_kind = std::collections::HashMap::new();
    for i in 1..=9 {
        let p = ModulusParams::from_q(i as f64 / 10.0).unwrap();
        for r in verifier::verify_scalar_relations(&p).unwrap() {
            let slot = worst_by_kind.entry(r.case.kind).or_insert(0.0f64);
            *slot = slot.max(r.relative);
        }
    }
    let within = |kind: IdentityKind, tol: f64| worst_by_kind.get(&kind).copied().unwrap_or(1.0) <= tol;
    let ok = within(IdentityKind::PhiSlope, TOL_PHI_SLOPE)
        && within(IdentityKind::PhiProduct, TOL_PHI_PRODUCT)
        && within(IdentityKind::BetaFlow, TOL_BETA_FLOW)
        && within(IdentityKind::LambertSum, TOL_LAMBERT)
        && within(IdentityKind::ConstantSplit, TOL_CONSTANT_SPLIT);
    for (kind, worst) in &worst_by_kind {
        println!("  {kind}: worst relative {worst:.3e}");
    }
    verdict(4, "scalar relations hold on the argument grid", ok);
}

#[test]
fn criterion_05_constant_forms_agree_and_vanish_when_balanced() {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for q in GRID_QS {
        let p = ModulusParams::from_q(q).unwrap();
        for lambda in GRID_LAMBDAS {
            for n in 0..=8 {
                for m in 0..=8 {
                    let r = verifier::verify_constant_forms(n, m, lambda, &p);
                    worst = worst.max(r.relative);
                    ok &= r.pass;
                }
                let c = ecs_core::const_c_nm(n, n, lambda, &p);
                ok &= c.primary == 0.0 && c.lambert == 0.0;
            }
        }
    }
    println!("  worst relative {worst:.3e}");
    verdict(5, "constant forms agree; balanced constants vanish exactly", ok);
}

#[test]
fn criterion_06_heat_flow_identity() {
    let mut worst: f64 = 0.0;
    for q in [0.3, 0.6] {
        let p = ModulusParams::from_q(q).unwrap();
        for lambda in [1.0, 2.0] {
            for i in 0..20 {
                let x = 0.25 + i as f64 * (6.0 - 0.25) / 19.0;
                let r = verifier::verify_heat_equation(lambda, x, &p).unwrap();
                worst = worst.max(r.relative);
            }
        }
    }
    println!("  worst relative {worst:.3e}");
    verdict(6, "single-pair heat-flow identity", worst <= TOL_HEAT);
}

#[test]
fn criterion_07_trigonometric_limit_eigenvalue() {
    let p = ModulusParams::from_q(0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED);
    let mut worst_rel: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    for n in 1..=6 {
        for lambda in GRID_LAMBDAS {
            let g = CouplingFamily::Main.coupling(lambda).unwrap();
            let nf = n as f64;
            let target = lambda * lambda * nf * (nf * nf - 1.0) / 12.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for _ in 0..20 {
                let cfg = Configuration::sample(n, 0, GRID_SEPARATION, &mut rng).unwrap();
                let h = PairTables::new(&cfg, &p).unwrap().apply_h(&g, &p);
                let scale = h.scale().max(target.abs()).max(1.0);
                worst_rel = worst_rel.max((h.value - target).abs() / scale);
                lo = lo.min(h.value);
                hi = hi.max(h.value);
            }
            worst_spread = worst_spread.max(hi - lo);
        }
    }
    println!("  worst relative {worst_rel:.3e}, worst spread {worst_spread:.3e}");
    let ok = worst_rel <= 1e-9 && worst_spread <= 1e-9;
    verdict(7, "trigonometric limit reproduces the eigenvalue", ok);
}

#[test]
fn criterion_08_oracle_concordance_on_random_cases() {
    let scheme = FdScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    let mut worst_h: f64 = 0.0;
    let mut worst_b: f64 = 0.0;
    for trial in 0..100 {
        let family = if trial % 2 == 0 {
            CouplingFamily::Main
        } else {
            CouplingFamily::Dual
        };
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(0..=n);
        let lambda = [0.5, 1.0, 1.6, 2.5][rng.gen_range(0..4)];
        let q = [0.2, 0.45, 0.7][rng.gen_range(0..3)];
        let p = ModulusParams::from_q(q).unwrap();
        let cfg = Configuration::sample(n, m, 0.15, &mut rng).unwrap();
        let rh = verifier::verify_oracle_kinetic(&cfg, family, lambda, &p, &scheme).unwrap();
        let rb = verifier::verify_oracle_beta_flow(&cfg, family, lambda, &p, &scheme).unwrap();
        worst_h = worst_h.max(rh.relative);
        worst_b = worst_b.max(rb.relative);
    }
    println!("  worst kinetic relative {worst_h:.3e}, worst beta relative {worst_b:.3e}");
    let ok = worst_h <= TOL_ORACLE_KINETIC && worst_b <= TOL_ORACLE_BETA;
    verdict(8, "finite-difference oracle concordance on 100 cases", ok);
}

#[test]
fn criterion_09_gauge_shift_collapses() {
    let mut worst: f64 = 0.0;
    for q in [0.0, 0.25, 0.5, 0.75] {
        let p = ModulusParams::from_q(q).unwrap();
        for lambda in GRID_LAMBDAS {
            for n in 0..=5 {
                for m in 0..=5 {
                    let r = verifier::verify_gauge_shift(n, m, lambda, &p);
                    worst = worst.max(r.relative);
                }
            }
        }
    }
    println!("  worst relative {worst:.3e}");
    verdict(9, "gauge-shifted constants collapse to closed forms", worst <= TOL_GAUGE);
}

#[test]
fn criterion_10_correlation_phase_reductions() {
    let mut worst: f64 = 0.0;
    for n in 0..=10 {
        for m in 0..=10 {
            for lambda in GRID_LAMBDAS {
                let r = verifier::verify_phases(n, m, lambda);
                worst = worst.max(r.relative);
            }
        }
    }
    println!("  worst relative {worst:.3e}");
    verdict(10, "correlation phases reduce to family forms", worst <= TOL_PHASES);
}

#[test]
fn criterion_11_sweeps_are_reproducible() {
    let grid = SweepGrid {
        n_max: 3,
        configs_per_cell: 5,
        ..SweepGrid::default()
    };
    let a = serde_json::to_string(&ecs_core::sweep(&grid)).unwrap();
    let b = serde_json::to_string(&ecs_core::sweep(&grid)).unwrap();
    let ok = a == b && !a.is_empty();
    verdict(11, "identical seeds give byte-identical reports", ok);
}
