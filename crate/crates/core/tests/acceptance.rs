//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sketchbench_core::agm::{agreement, random_workload};
use sketchbench_core::lbgraph::{exhaustive_specs, random_specs, sweep_equivalence, Layout};
use sketchbench_core::overlap::{
    self, attack, instances_on, support_pairs, BlockProtocol, Answer, OneWayProtocol, PrefixTruncation,
};
use sketchbench_core::protocols::{self, Constant, MinDegree};
use sketchbench_core::reduction::{self, build_context, ContextOptions, ReductionContext};
use sketchbench_core::setfam::{
    choose_partition, common_block, message_partitions, pigeonhole_floor_holds, sample_family,
    verify_record, SetFamily,
};
use sketchbench_core::SketchProtocol;

type Verdict = (bool, String);

fn lb_equivalence() -> Verdict {
    let mut specs = exhaustive_specs(36, 2, 0).unwrap();
    let exhaustive = specs.len();
    specs.extend(random_specs(49, 3, 500, 1).unwrap());
    specs.extend(random_specs(64, 3, 500, 2).unwrap());
    let s = sweep_equivalence(&specs).unwrap();
    (
        s.checked == specs.len() && s.held == s.checked,
        format!(
            "{}/{} specs ({exhaustive} exhaustive at n=36, 500 each at n=49,64; {} in C1)",
            s.held, s.checked, s.c1
        ),
    )
}

fn drop_one_bit_protocol() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [7, 8, 9] {
        let s = 4;
        let p = BlockProtocol::new(m, s).unwrap();
        let report = overlap::sweep(&p, m, s);
        // every message, not just the longest, is exactly s - 1 bits
        let exact = support_pairs(m, s).par_iter().all(|(a, b)| {
            instances_on(m, a, b).iter().all(|i| {
                p.alice_encode(&i.x).len() == s - 1 && p.bob_encode(&i.y).len() == s - 1
            })
        });
        ok &= report.all_correct() && exact && report.instances > 0;
        parts.push(format!("({m},{s}): {}/{}", report.correct, report.instances));
    }
    (ok, format!("{}; messages exactly 3 bits", parts.join(", ")))
}

fn attack_discrimination() -> Verdict {
    let (m, s) = (9, 4);
    let sound = attack(&BlockProtocol::new(m, s).unwrap(), m, s).is_none();
    let weak = PrefixTruncation { keep: s - 2 };
    let found = attack(&weak, m, s);
    let confirmed = found.as_ref().is_some_and(|c| {
        let (yes, no) = (c.yes_instance(), c.no_instance());
        c.replay(&weak)
            && yes.answer() == Answer::Yes
            && no.answer() == Answer::No
            && overlap::run(&weak, &yes).ok() == overlap::run(&weak, &no).ok()
    });
    (
        sound && confirmed,
        format!(
            "drop-one-bit: {}; {}-bit truncation: {}",
            if sound { "no counterexample" } else { "counterexample found" },
            s - 2,
            if confirmed { "replayed counterexample" } else { "no verified counterexample" }
        ),
    )
}

fn toy_context() -> ReductionContext {
    build_context(&MinDegree { k: 2 }, 6, 3, 2, 0, &ContextOptions::default()).unwrap()
}

fn simulation_fidelity(sweep: &reduction::ReductionSweep) -> Verdict {
    (
        sweep.fidelity_ok == sweep.instances && sweep.instances > 0,
        format!(
            "{}/{} instances bit-identical at (m,s,k)=(6,3,2)",
            sweep.fidelity_ok, sweep.instances
        ),
    )
}

fn semantic_correspondence(sweep: &reduction::ReductionSweep) -> Verdict {
    (
        sweep.compat_ok == sweep.instances && sweep.instances > 0,
        format!("{}/{} compatible graphs match the answer", sweep.compat_ok, sweep.instances),
    )
}

fn set_families() -> Verdict {
    let mut emitted = 0;
    let mut verified = 0;
    for (n, d, eps, target, seed) in [
        (256, 3, 0.9, 10, 0),
        (1024, 5, 0.5, 16, 1),
        (4096, 7, 0.6, 24, 2),
        (4096, 9, 0.5, 32, 3),
    ] {
        let w: Vec<usize> = Layout::new(n).unwrap().w_nodes().collect();
        let f = sample_family(&w, d, eps, target, seed, 200_000).unwrap();
        emitted += 1;
        let bound = (eps * d as f64 / 2.0).floor() as usize;
        // independent pairwise check
        let pairwise = f.members.iter().enumerate().all(|(i, x)| {
            f.members[i + 1..]
                .iter()
                .all(|y| x.iter().filter(|v| y.contains(v)).count() <= bound)
        });
        verified += usize::from(pairwise && f.verify().is_ok());
    }

    let mut runs = 0;
    let mut floor = 0;
    for (name, n, k) in [("min-degree", 36, 2), ("constant", 36, 2), ("parity", 49, 3), ("hash:2", 36, 2)] {
        let protocol = protocols::by_name(name, n, k).unwrap();
        let layout = Layout::new(n).unwrap();
        let w: Vec<usize> = layout.w_nodes().collect();
        let family = SetFamily::complete(&w, 2 * k - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = sketchbench_core::lbgraph::random_partition(&w, k, &mut rng).unwrap();
        for v in layout.v_nodes() {
            let parts = message_partitions(protocol.as_ref(), v, &family, &a, &b, &layout, k).unwrap();
            let common = common_block(&parts, &family, &a, &b);
            runs += 1;
            floor += usize::from(pigeonhole_floor_holds(common.len(), family.len(), protocol.max_bits()));
        }
    }
    (
        verified == emitted && floor == runs,
        format!("{verified}/{emitted} sampled families pairwise-bounded; pigeonhole floor {floor}/{runs}"),
    )
}

fn separated_pairs() -> Verdict {
    let mut records = 0;
    let mut ok = 0;
    for (name, n, k, seed) in [("min-degree", 36, 2, 0), ("constant", 36, 2, 1), ("min-degree", 49, 3, 2), ("parity", 36, 2, 3)] {
        let protocol = protocols::by_name(name, n, k).unwrap();
        let layout = Layout::new(n).unwrap();
        let w: Vec<usize> = layout.w_nodes().collect();
        let family = SetFamily::complete(&w, 2 * k - 1);
        let Ok(choice) = choose_partition(protocol.as_ref(), &family, &layout, k, 8, seed) else {
            continue;
        };
        for r in choice.good.values() {
            records += 1;
            ok += usize::from(verify_record(protocol.as_ref(), r, &choice.a, &choice.b, &layout, k).is_ok());
        }
    }
    (records > 0 && ok == records, format!("{ok}/{records} records re-verify"))
}

fn agm_agreement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let graphs: Vec<_> = (0..200)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            (random_workload(&mut rng, 64, k), k)
        })
        .collect();
    let r = agreement(&graphs, 0.05, 0).unwrap();
    (
        r.runs == 200 && r.rate() >= 0.95 && r.within_budget == r.runs,
        format!(
            "agreement {}/{} ({:.1}%), {} connected; within budget {}/{}; longest sketch {} bits",
            r.agreed,
            r.runs,
            100.0 * r.rate(),
            r.oracle_connected,
            r.within_budget,
            r.runs,
            r.max_sketch_bits
        ),
    )
}

fn communication(runs: &[(String, reduction::ReductionSweep)]) -> Verdict {
    let total: usize = runs.iter().map(|(_, s)| s.instances).sum();
    let ok: usize = runs.iter().map(|(_, s)| s.communication_ok).sum();
    let names: Vec<&str> = runs.iter().map(|(n, _)| n.as_str()).collect();
    (
        total > 0 && ok == total,
        format!("{ok}/{total} runs exact and within bound ({})", names.join(", ")),
    )
}

fn main() -> ExitCode {
    let toy = toy_context();
    let all = overlap::valid_instances(6, 3);
    let toy_sweep = reduction::sweep(&all, &toy, &MinDegree { k: 2 }).unwrap();

    let mut comm_runs = vec![("min-degree (6,3,2)".to_string(), toy_sweep.clone())];
    let constant = Constant::default();
    let ctx = build_context(&constant, 6, 3, 2, 0, &ContextOptions::default()).unwrap();
    comm_runs.push(("constant (6,3,2)".into(), reduction::sweep(&all, &ctx, &constant).unwrap()));
    let mixed: Vec<_> = overlap::valid_instances(7, 3).into_iter().step_by(11).collect();
    let p = MinDegree { k: 2 };
    let ctx = build_context(&p, 7, 3, 2, 3, &ContextOptions::default()).unwrap();
    comm_runs.push(("min-degree (7,3,2)".into(), reduction::sweep(&mixed, &ctx, &p).unwrap()));

    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("lower-bound graph equivalence", Box::new(lb_equivalence)),
        ("drop-one-bit protocol", Box::new(drop_one_bit_protocol)),
        ("attack soundness and discrimination", Box::new(attack_discrimination)),
        ("simulation fidelity", Box::new(|| simulation_fidelity(&toy_sweep))),
        ("semantic correspondence", Box::new(|| semantic_correspondence(&toy_sweep))),
        ("set-family property", Box::new(set_families)),
        ("separated-pair records", Box::new(separated_pairs)),
        ("AGM upper bound", Box::new(agm_agreement)),
        ("communication accounting", Box::new(|| communication(&comm_runs))),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "{} {}. {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
