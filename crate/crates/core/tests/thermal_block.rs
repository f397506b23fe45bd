mod common;

use mor_core::errest::{bound_sweep, riesz_offline, CoercivityModel};
use mor_core::fom::{assemble_thermal_block, fom_solve, ThermalBlock};
use mor_core::numkit::solve;
use mor_core::rb::{greedy, load_rom, project, rom_solve, save_rom, GreedyOptions};

use common::{augmented_basis, direct_thermal_matrix};

#[test]
fn affine_operator_matches_deformed_grid_assembly() {
    for (n, s2) in [(8, 5.0), (17, 0.3), (32, 10.0)] {
        let tb = assemble_thermal_block(n, 1.0, s2).unwrap();
        for mu in [0.1, 0.2, 0.3, 0.5, 0.7, 0.9] {
            let affine = tb.system.assemble_matrix(&[mu]).unwrap().to_dense();
            let direct = direct_thermal_matrix(&tb, mu);
            let diff = affine.max_abs_diff(&direct);
            assert!(diff <= 1e-10 * direct.max_abs(), "n = {n}, mu = {mu}: {diff:e}");
        }
    }
}

#[test]
fn solution_matches_deformed_grid_solve() {
    let tb = assemble_thermal_block(12, 1.0, 4.0).unwrap();
    for mu in [0.25, 0.6] {
        let direct = direct_thermal_matrix(&tb, mu);
        // the flux boundary x = 0 does not move, so the load is μ-independent
        let f = tb.system.assemble_rhs(&[mu]).unwrap();
        let want = solve(&direct, &f).unwrap();
        let got = fom_solve(&tb.system, &[mu]).unwrap().coefficients;
        let scale = want.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn greedy_rom_survives_save_and_load() {
    let tb = assemble_thermal_block(16, 1.0, 5.0).unwrap();
    let sys = &tb.system;
    let training = ThermalBlock::training_domain().uniform_grid(30);
    let est = mor_core::errest::ResidualEstimator::new(sys, &[0.5]).unwrap();
    let r = greedy(sys, &training, &GreedyOptions::default(), &est).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_rom(&r.rom, dir.path()).unwrap();
    let loaded = load_rom(dir.path()).unwrap();
    for mu in ThermalBlock::training_domain().uniform_grid(9) {
        let a = rom_solve(&r.rom, &mu).unwrap();
        let b = rom_solve(&loaded, &mu).unwrap();
        assert_eq!(a, b);
        assert_eq!(r.rom.lift(&a.coefficients).unwrap(), loaded.lift(&b.coefficients).unwrap());
    }
}

#[test]
fn bounds_hold_for_every_basis_size_and_contrast() {
    for s2 in [0.2, 1.0, 20.0] {
        let tb = assemble_thermal_block(10, 1.0, s2).unwrap();
        let sys = &tb.system;
        let model = CoercivityModel::new(sys, &[0.5]).unwrap();
        let mus = ThermalBlock::training_domain().uniform_grid(15);
        for extra in [0, 2, 6] {
            let basis = augmented_basis(sys, &[0.45], extra, 9);
            let rom = project(sys, &basis).unwrap();
            let off = riesz_offline(sys, &basis).unwrap();
            for rec in bound_sweep(&off, &model, sys, &rom, &mus).unwrap() {
                assert!(rec.effectivity >= 1.0 - 1e-10, "s2 = {s2}, N = {}: {rec:?}", basis.n());
                assert!(rec.delta_s >= rec.output_error);
            }
        }
    }
}
