//! Acceptance gate: runs the ten release criteria and prints one PASS/FAIL
//! line for each. Exits non-zero if any criterion fails.
//!
//! `cargo test --release --test acceptance -- 3 5` runs only criteria 3 and 5.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use memsim::clonal::ops::apply_mortality;
use memsim::clonal::{ClonalConfig, ClonalWorld, Rise};
use memsim::scenario::{bundled, bundled_names, resolve, Scenario};
use memsim::shape::ShapeValue;
use memsim::spatial::{sense_and_move, ChemicalField, ChemicalParams, SpatialRecord, Torus};
use memsim::stats::wilcoxon_signed_rank;
use memsim_cli::{run_scenario, write_run, Replicate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "homeostasis", homeostasis),
    (2, "peak-comparison verdicts", table_verdicts),
    (3, "signed-rank oracle", wilcoxon_oracle),
    (4, "mortality law", mortality_law),
    (5, "diffusion conservation", diffusion_conservation),
    (6, "cone chemotaxis", cone_chemotaxis),
    (7, "emergent vs residual floors", spatial_validation),
    (8, "polyclonal memory", polyclonal_memory),
    (9, "determinism", determinism),
    (10, "performance", performance),
];

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, check) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "[{}] {id:>2} {name}: {} ({secs:.1} s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

fn repo_scenario(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(file)
}

fn load(name_or_path: &str, overrides: &[(&str, &str)]) -> Scenario {
    let ov: Vec<(String, String)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    resolve(name_or_path, &ov).unwrap_or_else(|e| panic!("{name_or_path}: {e}"))
}

fn spatial_records(s: &Scenario) -> Vec<SpatialRecord> {
    run_scenario(s)
        .unwrap()
        .replicates
        .into_iter()
        .map(|r| match r {
            Replicate::Spatial(r) => r,
            Replicate::Clonal(_) => panic!("expected a spatial scenario"),
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

// 1 ------------------------------------------------------------------------

fn homeostasis() -> Verdict {
    const WINDOW: usize = 60;
    let mut recovered = 0;
    let mut worst = (0usize, 0usize);
    for seed in 0..20u64 {
        let config = ClonalConfig {
            injections: Vec::new(),
            ..ClonalConfig::default()
        };
        let mut w = ClonalWorld::new(config, seed).unwrap();
        let mut pop = Vec::with_capacity(600);
        for g in 0..600u32 {
            match g {
                100 => w.add_newborns(2000),
                300 => w.cull(0.5),
                _ => {}
            }
            pop.push(w.step().rise_count as f64);
        }
        // Back inside the band within the window and still there at its end.
        let back = |at: usize| {
            let pre = mean(&pop[at - 50..at]);
            let inside = |p: f64| (p - pre).abs() <= 0.1 * pre;
            (at..at + WINDOW)
                .find(|&g| pop[g..at + WINDOW].iter().all(|&p| inside(p)))
                .map(|g| g - at)
        };
        if let (Some(a), Some(b)) = (back(100), back(300)) {
            recovered += 1;
            worst = (worst.0.max(a), worst.1.max(b));
        }
    }
    verdict(
        recovered >= 19,
        format!(
            "{recovered}/20 seeds back within 10% (slowest: spike {} gens, cull {} gens)",
            worst.0, worst.1
        ),
    )
}

// 2 ------------------------------------------------------------------------

fn table_verdicts() -> Verdict {
    let mut wrong = Vec::new();
    let mut lines = Vec::new();
    for s in bundled().into_iter().filter(|s| s.clonal.is_some()) {
        let theory = s.name.split('-').next().unwrap().to_owned();
        let small = s.name.ends_with("smallgap");
        let expect = match theory.as_str() {
            "none" | "network" => false,
            "emergent" | "residual" => small,
            _ => true,
        };
        let r = run_scenario(&s).unwrap().summary().unwrap().unwrap();
        let ok = r.significant_99 == expect && (!r.significant_99 || r.ratio < 0.95);
        if !ok {
            wrong.push(s.name.clone());
        }
        lines.push(format!("{}:p={:.2e},r={:.3}", s.name, r.p_value, r.ratio));
    }
    let detail = if wrong.is_empty() {
        format!("12/12 rows match [{}]", lines.join(" "))
    } else {
        format!("mismatch in {wrong:?} [{}]", lines.join(" "))
    };
    verdict(wrong.is_empty(), detail)
}

// 3 ------------------------------------------------------------------------

/// Average ranks of |d|, written independently of the library.
fn oracle_ranks(mags: &[f64]) -> Vec<f64> {
    mags.iter()
        .map(|&m| {
            let below = mags.iter().filter(|&&x| x < m).count() as f64;
            let equal = mags.iter().filter(|&&x| x == m).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided p by visiting every one of the 2^n sign assignments.
fn oracle_p(pairs: &[(f64, f64)]) -> f64 {
    let d: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| b - a)
        .filter(|d| *d != 0.0)
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    let ranks = oracle_ranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let total: f64 = ranks.iter().sum();
    let centre = total / 2.0;
    let w: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let observed = (w - centre).abs();
    let n = d.len();
    let mut extreme = 0u64;
    for mask in 0u32..(1 << n) {
        let s: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if (s - centre).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / f64::from(1u32 << n)
}

fn wilcoxon_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(5..=12);
        // small integer ranges force ties and zero differences
        let span = if rng.random_bool(0.5) { 6.0 } else { 1000.0 };
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let a = (rng.random::<f64>() * span).floor();
                (a, (rng.random::<f64>() * span).floor())
            })
            .collect();
        let got = wilcoxon_signed_rank(&pairs).unwrap().p_value;
        worst = worst.max((got - oracle_p(&pairs)).abs());
    }
    verdict(
        worst <= 1e-12,
        format!("200 fixtures, max |p - oracle| = {worst:.1e}"),
    )
}

// 4 ------------------------------------------------------------------------

fn mortality_law() -> Verdict {
    const DR: u32 = 30;
    const TRIALS: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for a in [1, 15, 30, 60, 120] {
        let closed = if a <= DR as i32 {
            f64::from(a) / (2.0 * f64::from(DR))
        } else {
            1.0 - f64::from(DR) / (2.0 * f64::from(a))
        };
        let mut pop = vec![
            Rise {
                value: ShapeValue::wrapped(0.0, 10_000.0),
                age: a,
            };
            TRIALS
        ];
        apply_mortality(&mut pop, DR, &mut rng);
        let freq = 1.0 - pop.len() as f64 / TRIALS as f64;
        worst = worst.max((freq - closed).abs());
        parts.push(format!("a={a}:{freq:.4}/{closed:.4}"));
    }
    verdict(
        worst <= 0.005,
        format!("max error {worst:.4} [{}]", parts.join(" ")),
    )
}

// 5 ------------------------------------------------------------------------

fn diffusion_conservation() -> Verdict {
    let torus = Torus::new(256, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seeded = |params: ChemicalParams, rng: &mut ChaCha8Rng| {
        let mut f = ChemicalField::new(torus, params);
        for _ in 0..5000 {
            let at = rng.random_range(0..torus.len() as u32);
            f.secrete(at, rng.random::<f64>() * 100.0);
        }
        f
    };

    let mut f = seeded(
        ChemicalParams {
            diffusion: 0.5,
            decay: 0.0,
        },
        &mut rng,
    );
    let start = f.total();
    for _ in 0..1000 {
        f.diffuse_step();
    }
    let drift = (f.total() - start).abs() / start;

    let mut g = seeded(
        ChemicalParams {
            diffusion: 0.5,
            decay: 0.01,
        },
        &mut rng,
    );
    let mut worst_step = 0.0f64;
    for _ in 0..1000 {
        let before = g.total();
        g.diffuse_step();
        let expect = 0.99 * before;
        worst_step = worst_step.max((g.total() - expect).abs() / expect);
    }
    verdict(
        drift <= 1e-9 && worst_step <= 1e-9,
        format!("lambda=0 drift {drift:.1e}; lambda=0.01 worst per-step error {worst_step:.1e}"),
    )
}

// 6 ------------------------------------------------------------------------

fn cone_chemotaxis() -> Verdict {
    let torus = Torus::new(128, 128).unwrap();
    let source = torus.index(64, 64);
    let mut field = ChemicalField::new(
        torus,
        ChemicalParams {
            diffusion: 0.0,
            decay: 0.0,
        },
    );
    for p in 0..torus.len() as u32 {
        field.secrete(p, 200.0 - f64::from(torus.chebyshev(p, source)));
    }
    let mut misses = Vec::new();
    let mut runs = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for d in 1..=50i32 {
            // a straight, a diagonal and an off-axis start at distance d
            for (dx, dy) in [(d, 0), (-d, -d), (d / 2, -d)] {
                let mut pos = torus.offset(source, dx, dy);
                let mut ticks = 0;
                while pos != source && ticks < 200 {
                    pos = sense_and_move(&field, pos, 1e-6, &mut rng);
                    ticks += 1;
                }
                runs += 1;
                if ticks != d {
                    misses.push((seed, d, dx, dy, ticks));
                }
            }
        }
    }
    verdict(
        misses.is_empty(),
        format!(
            "{}/{runs} walks reached the source in exactly D ticks {misses:?}",
            runs - misses.len()
        ),
    )
}

// 7 ------------------------------------------------------------------------

/// Antigen summed over the first 40 ticks after an injection tick.
fn burden(rec: &SpatialRecord, at: usize) -> f64 {
    rec.rows[at..at + 40]
        .iter()
        .map(|r| r.antigen.iter().sum::<u64>() as f64)
        .sum()
}

fn spatial_validation() -> Verdict {
    let run = |file: &str| spatial_records(&load(repo_scenario(file).to_str().unwrap(), &[]));
    let (none, emergent, residual) = (
        run("spatial-none.toml"),
        run("spatial-emergent.toml"),
        run("spatial-residual.toml"),
    );
    let floor = |recs: &[SpatialRecord]| {
        mean(
            &recs
                .iter()
                .map(|r| r.rows[549].antibodies[0] as f64)
                .collect::<Vec<_>>(),
        )
    };
    let ratio = |recs: &[SpatialRecord]| {
        let primary: f64 = recs.iter().map(|r| burden(r, 50)).sum();
        let secondary: f64 = recs.iter().map(|r| burden(r, 550)).sum();
        secondary / primary
    };
    let (fe, fr) = (floor(&emergent), floor(&residual));
    let (rn, re) = (ratio(&none), ratio(&emergent));
    let floors_ok = fe * 100.0 <= fr && fr > 0.0;
    let secondary_ok = re < 1.0 && re < rn;
    verdict(
        floors_ok && secondary_ok,
        format!(
            "antibody floor emergent {fe:.1} vs residual {fr:.1}; secondary/primary burden emergent {re:.3} vs none {rn:.3}"
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn polyclonal_memory() -> Verdict {
    const BASE: usize = 549;
    const AFTER: usize = 750;
    let on = spatial_records(&load("polyclonal", &[]));
    let off = spatial_records(&load(
        "polyclonal",
        &[("spatial.theory.il15_secretion", "0")],
    ));
    let growth = |r: &SpatialRecord| {
        r.rows[AFTER].memory_specific[1] as f64 / (r.rows[BASE].memory_specific[1] as f64).max(1.0)
    };
    let naive = |r: &SpatialRecord| {
        r.rows[AFTER].naive_unrelated as f64 / r.rows[BASE].naive_unrelated as f64
    };
    let on_ok = on.iter().filter(|r| growth(r) >= 1.5).count();
    let off_ok = off.iter().filter(|r| growth(r) <= 1.1).count();
    let naive_ok = on.iter().filter(|r| naive(r) <= 1.1).count();
    let min_on = on.iter().map(growth).fold(f64::INFINITY, f64::min);
    let max_off = off.iter().map(growth).fold(0.0, f64::max);
    let max_naive = on.iter().map(naive).fold(0.0, f64::max);
    verdict(
        on_ok >= 18 && off_ok >= 18 && naive_ok >= 18,
        format!(
            "anti-B growth >= 1.5x in {on_ok}/20 (min {min_on:.2}); IL-15 off <= 1.1x in {off_ok}/20 (max {max_off:.2}); unrelated naive <= 1.1x in {naive_ok}/20 (max {max_naive:.3})"
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let mut differing = Vec::new();
    let mut count = 0;
    for name in bundled_names() {
        let s = load(name, &[("run.plots", "false")]);
        let outputs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
            .map(|_| {
                let tmp = tempfile::tempdir().unwrap();
                let dir = write_run(&run_scenario(&s).unwrap(), tmp.path()).unwrap();
                csv_files(&dir)
            })
            .collect();
        count += outputs[0].len();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(name);
        }
    }
    verdict(
        differing.is_empty(),
        format!("13 scenarios, {count} CSV files byte-identical across two runs; differing: {differing:?}"),
    )
}

// 10 -----------------------------------------------------------------------

fn performance() -> Verdict {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());

    let mut slowest = Duration::ZERO;
    for s in bundled().into_iter().filter(|s| s.clonal.is_some()) {
        let config = s.clonal.unwrap();
        let start = Instant::now();
        memsim::clonal::run_clonal(&config, 1).unwrap();
        slowest = slowest.max(start.elapsed());
    }

    let big = load(repo_scenario("spatial-perf.toml").to_str().unwrap(), &[]);
    let cfg = big.spatial.clone().unwrap();
    let agents = cfg.recruits_per_tick as usize * cfg.naive_lifespan as usize;
    let start = Instant::now();
    let rec = memsim::spatial::run_spatial(&cfg, big.run.seed).unwrap();
    let spatial = start.elapsed();
    let last = rec.rows.last().map_or(0, |r| r.naive + r.memory);

    let ok = slowest <= Duration::from_secs(3)
        && spatial <= Duration::from_secs(300)
        && agents >= 1_000_000;
    verdict(
        ok,
        format!(
            "clonal slowest replicate {:.2} s; {agents} agents ({last} at end) on {}x{} for {} ticks in {:.1} s on {threads} thread(s)",
            slowest.as_secs_f64(),
            cfg.width,
            cfg.height,
            cfg.total_ticks,
            spatial.as_secs_f64()
        ),
    )
}
