mod common;

use common::experiment;
use noma_fbc::output::{write_energy_csv, write_infeasibility_csv};
use noma_fbc::sim::{
    dbm_to_watts, energy_sweep, estimate_infeasibility, sample_channel, shannon_baseline, AxisKind, ChannelModel,
    CompensatedSum, Condition, EnergyTable, Fading, Scheme, SNR_LOSS_FACTOR,
};
use noma_fbc::noma::solve_noma;

fn weak_channel() -> ChannelModel {
    ChannelModel { noise_power: 1e-6, ..ChannelModel::default() }
}

fn mean_of(t: &EnergyTable, value: f64, scheme: Scheme) -> f64 {
    t.rows.iter().find(|r| r.sweep_value == value && r.scheme == scheme).unwrap().mean_energy.unwrap()
}

#[test]
fn default_channel_mean_gain() {
    let c = ChannelModel::default();
    assert!((c.mean_gain() - 1e9).abs() < 1e-3);
    assert!((dbm_to_watts(40.0) - 10.0).abs() < 1e-12);
    assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
}

#[test]
fn rayleigh_power_has_unit_mean() {
    let c = ChannelModel::default();
    let mean = c.mean_gain();
    let (mut s1, mut s2) = (CompensatedSum::default(), CompensatedSum::default());
    let n = 100_000;
    for r in 0..n {
        let (h1, h2) = sample_channel(&c, 99, r);
        s1.add(h1 / mean);
        s2.add(h2 / mean);
    }
    assert!((s1.value() / n as f64 - 1.0).abs() < 0.02);
    assert!((s2.value() / n as f64 - 1.0).abs() < 0.02);
}

#[test]
fn sampling_is_a_pure_function_of_seed_and_stream() {
    let c = ChannelModel::default();
    assert_eq!(sample_channel(&c, 5, 17), sample_channel(&c, 5, 17));
    assert_ne!(sample_channel(&c, 5, 17), sample_channel(&c, 5, 18));
    assert_ne!(sample_channel(&c, 5, 17), sample_channel(&c, 6, 17));
    let flat = ChannelModel { fading: Fading::None, ..c };
    assert_eq!(sample_channel(&flat, 5, 17), (c.mean_gain(), c.mean_gain()));
}

#[test]
fn seeded_runs_are_identical() {
    let mut cfg = experiment(AxisKind::D1, vec![256.0, 640.0], vec![Scheme::Noma, Scheme::Tdma], 3000);
    cfg.channel = weak_channel();
    let a = energy_sweep(&cfg, false).unwrap();
    let b = energy_sweep(&cfg, false).unwrap();
    assert_eq!(a, b);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_energy_csv(&mut x, &a).unwrap();
    write_energy_csv(&mut y, &b).unwrap();
    assert_eq!(x, y);
    cfg.seed += 1;
    assert_ne!(energy_sweep(&cfg, false).unwrap().rows, a.rows);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut cfg = experiment(AxisKind::PMaxDbm, vec![20.0, 30.0], vec![Scheme::Noma, Scheme::Tdma], 9000);
    cfg.channel = weak_channel();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (energy_sweep(&cfg, false).unwrap(), estimate_infeasibility(&cfg).unwrap()))
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn common_random_numbers_across_points() {
    let cfg = experiment(AxisKind::D1, vec![256.0, 384.0, 640.0], vec![Scheme::Noma], 20);
    let t = energy_sweep(&cfg, true).unwrap();
    assert_eq!(t.records.len(), 60);
    for chunk in t.records.chunks(3) {
        assert!(chunk.iter().all(|r| r.h1 == chunk[0].h1 && r.h2 == chunk[0].h2));
        assert!(chunk.iter().all(|r| r.realization == chunk[0].realization));
    }
}

#[test]
fn infeasibility_weakly_decreasing_in_budget_and_deadline() {
    let mut cfg = experiment(
        AxisKind::PMaxDbm,
        vec![20.0, 25.0, 30.0, 35.0, 40.0],
        vec![Scheme::Noma, Scheme::Tdma, Scheme::ShannonNoma],
        20_000,
    );
    cfg.channel = weak_channel();
    let t = estimate_infeasibility(&cfg).unwrap();
    for scheme in &cfg.schemes {
        let p: Vec<f64> = t.rows.iter().filter(|r| r.scheme == *scheme).map(|r| r.probability).collect();
        assert!(p.windows(2).all(|w| w[1] <= w[0]), "{scheme:?}: {p:?}");
        assert!(p[0] > 0.0);
    }
    cfg.axis.kind = AxisKind::D1;
    cfg.axis.values = vec![256.0, 384.0, 640.0];
    cfg.base.p_max = dbm_to_watts(20.0);
    let t = estimate_infeasibility(&cfg).unwrap();
    for scheme in &cfg.schemes {
        let p: Vec<f64> = t.rows.iter().filter(|r| r.scheme == *scheme).map(|r| r.probability).collect();
        assert!(p.windows(2).all(|w| w[1] <= w[0]), "{scheme:?}: {p:?}");
    }
    for r in &t.rows {
        let want = (r.probability * (1.0 - r.probability) / r.realizations as f64).sqrt();
        assert_eq!(r.std_error, want);
    }
}

#[test]
fn default_channel_is_nearly_always_feasible() {
    let cfg = experiment(AxisKind::PMaxDbm, vec![35.0], vec![Scheme::Noma, Scheme::Tdma, Scheme::Hybrid], 20_000);
    let t = estimate_infeasibility(&cfg).unwrap();
    for r in &t.rows {
        assert!(r.probability <= 4e-6 + 3.0 * r.std_error, "{r:?}");
    }
}

#[test]
fn noma_energy_decreasing_in_first_deadline() {
    let mut cfg = experiment(AxisKind::D1, vec![256.0, 320.0, 384.0, 512.0, 640.0], vec![Scheme::Noma, Scheme::Tdma], 2000);
    cfg.condition = Condition::H1LessH2;
    let t = energy_sweep(&cfg, true).unwrap();
    let means: Vec<f64> = cfg.axis.values.iter().map(|&v| mean_of(&t, v, Scheme::Noma)).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    for chunk in t.records.chunks(5) {
        let e: Vec<f64> = chunk.iter().map(|r| r.energies[0].unwrap()).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]));
        assert!(chunk[0].h1 < chunk[0].h2);
    }
    assert!(mean_of(&t, 640.0, Scheme::Noma) < mean_of(&t, 640.0, Scheme::Tdma));
    let row = t.rows.iter().find(|r| r.scheme == Scheme::Noma).unwrap();
    assert!(row.admitted < 2000 && row.admitted > 800);
    assert_eq!(row.feasible + row.excluded, row.admitted);
}

#[test]
fn shannon_baseline_underestimates_energy() {
    let cfg = experiment(AxisKind::D1, vec![256.0, 384.0, 640.0], vec![Scheme::Noma, Scheme::ShannonNoma], 1000);
    let t = energy_sweep(&cfg, true).unwrap();
    let mut compared = 0;
    for r in &t.records {
        if let (Some(f), Some(s)) = (r.energies[0], r.energies[1]) {
            assert!(s < f, "{r:?}");
            compared += 1;
        }
    }
    assert!(compared > 2900);
}

#[test]
fn shannon_baseline_function_matches_sweep() {
    let cfg = experiment(AxisKind::D1, vec![384.0], vec![Scheme::ShannonNoma], 5);
    let t = energy_sweep(&cfg, true).unwrap();
    for r in &t.records {
        let s = cfg.point(384.0).unwrap().scenario.with_gains(r.h1, r.h2);
        let want = shannon_baseline(&s).unwrap().energy().unwrap();
        let got = r.energies[0].unwrap();
        assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
    }
}

#[test]
fn hybrid_never_worse_than_its_endpoints() {
    let cfg = experiment(AxisKind::D1, vec![256.0, 640.0], vec![Scheme::Noma, Scheme::Tdma, Scheme::Hybrid], 12);
    let t = energy_sweep(&cfg, true).unwrap();
    for r in &t.records {
        let h = r.energies[2].unwrap();
        for e in r.energies[..2].iter().flatten() {
            assert!(h <= e + 1e-9 * e, "{r:?}");
        }
    }
}

#[test]
fn snr_loss_scales_means() {
    let mut cfg = experiment(AxisKind::D1, vec![256.0], vec![Scheme::Noma], 200);
    let plain = energy_sweep(&cfg, false).unwrap();
    cfg.snr_loss = true;
    let lossy = energy_sweep(&cfg, false).unwrap();
    let (a, b) = (plain.rows[0].mean_energy.unwrap(), lossy.rows[0].mean_energy.unwrap());
    assert!((b / a - SNR_LOSS_FACTOR).abs() < 1e-12);
    assert!((SNR_LOSS_FACTOR - 10f64.powf(0.025)).abs() < 1e-15);
}

#[test]
fn packet_axis_scales_bits() {
    let cfg = experiment(AxisKind::Packets, vec![1.0, 2.0, 3.0], vec![Scheme::Noma], 300);
    let p = cfg.point(3.0).unwrap();
    assert_eq!(p.scenario.user1.bits, 768);
    assert_eq!(p.scenario.user2.bits, 768);
    let t = energy_sweep(&cfg, false).unwrap();
    let e: Vec<f64> = t.rows.iter().map(|r| r.mean_energy.unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn flat_channel_matches_single_solve() {
    let mut cfg = experiment(AxisKind::D1, vec![400.0], vec![Scheme::Noma], 7);
    cfg.channel.fading = Fading::None;
    let t = energy_sweep(&cfg, false).unwrap();
    let g = cfg.channel.mean_gain();
    let mut s = cfg.base.with_gains(g, g);
    s.user1.deadline = 400;
    let want = solve_noma(&s).unwrap().energy().unwrap();
    assert!((t.rows[0].mean_energy.unwrap() - want).abs() <= 1e-12 * want);
}

#[test]
fn invalid_experiments_rejected() {
    let mut cfg = experiment(AxisKind::D1, vec![256.0], vec![Scheme::Noma], 10);
    cfg.realizations = 0;
    assert!(energy_sweep(&cfg, false).is_err());
    let mut cfg = experiment(AxisKind::D1, vec![256.5], vec![Scheme::Noma], 10);
    assert!(estimate_infeasibility(&cfg).is_err());
    cfg.axis.values.clear();
    assert!(estimate_infeasibility(&cfg).is_err());
    let cfg = experiment(AxisKind::D1, vec![256.0], vec![], 10);
    assert!(energy_sweep(&cfg, false).is_err());
}

#[test]
fn compensated_sum_keeps_small_terms() {
    let mut s = CompensatedSum::default();
    s.add(1e16);
    for _ in 0..10_000 {
        s.add(1.0);
    }
    s.add(-1e16);
    assert_eq!(s.value(), 10_000.0);
}

#[test]
fn infeasibility_csv_layout() {
    let mut cfg = experiment(AxisKind::PMaxDbm, vec![10.0], vec![Scheme::Noma], 100);
    cfg.channel = weak_channel();
    let t = estimate_infeasibility(&cfg).unwrap();
    let mut out = Vec::new();
    write_infeasibility_csv(&mut out, &t).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sweep_value,scheme,infeasible_probability,std_error,realizations,seed");
    assert!(lines.next().unwrap().starts_with("10,noma,"));
}
