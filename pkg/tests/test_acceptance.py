"""Acceptance gate: one test per release criterion, one PASS/FAIL line each.

The two scheduler-optimum criteria repeat a full-size estimation experiment
100 times and take several minutes apiece; everything else is fast. Run
with `pytest tests/test_acceptance.py -v -s` to watch progress.
"""

import itertools
import json
import math
import os
import random
import shutil
from pathlib import Path

import schedsmc as s
from oracles import true_probability
from schedsmc.bulk import compile_model, compile_property, seeds_for_range, simulate_batch
from schedsmc.cli import main
from schedsmc.formulas import evaluate
from schedsmc.tracehash import HashConfig, absorb_value, init_hash
from test_formulas import formula_corpus, oracle_verdict, oracle_verdicts

WORKERS = min(os.cpu_count() or 1, 8)
CONFIG = s.HashConfig()
FIG2 = s.parse_model(s.example_path("fig2.mdp").read_text())
FIG2_PROP = s.parse_property(s.example_path("fig2.prop").read_text())

GENERAL_OPTIMUM = 0.5 * 0.9**4  # 0.32805, by exhaustive chain computation
MEMORYLESS_OPTIMUM = 0.1 * 0.9**4  # 0.06561, best of the two memoryless choices

FAIR_COIN = s.parse_model(
    """
    var x : [0..1] init 0 ;
    [flip] x=0 -> 0.5 : (x'=1) + 0.5 : (x'=0) ;
    [stay] x=1 -> 1 : (x'=1) ;
    """
)
FAIR_COIN_PROP = s.parse_property("X (x=1)")

CHAIN06 = s.parse_model(
    """
    var x : [0..1] init 0 ;
    [flip] x=0 -> 0.6 : (x'=1) + 0.4 : (x'=0) ;
    [stay] x=1 -> 1 : (x'=1) ;
    """
)
CHAIN06_PROP = s.parse_property("X (x=1)")


def report(number: int, name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {number} ({name}): {'PASS' if ok else 'FAIL'} [{detail}]")


def _extremum_repetitions(mode: s.SchedulerMode, target: float, label: str) -> tuple[int, list[float]]:
    hits = 0
    maxima = []
    for seed in range(1, 101):
        run = s.RunConfig(master_seed=seed, workers=WORKERS, scheduler_mode=mode)
        result = s.estimate_extrema(FIG2, FIG2_PROP, 0.01, 0.01, 300, run)
        maxima.append(result.p_hat_max)
        if abs(result.p_hat_max - target) <= 0.02:
            hits += 1
        if seed % 20 == 0:
            print(f"  [{label}] {seed}/100 repetitions, {hits} within tolerance so far")
    return hits, maxima


def test_criterion_1_general_scheduler_optimum():
    hits, maxima = _extremum_repetitions(s.SchedulerMode.GENERAL, GENERAL_OPTIMUM, "general")
    ok = hits >= 95
    report(1, "fig2 general optimum 0.32805 +/- 0.02 in >= 95/100 runs", ok,
           f"hits={hits}/100, median max={sorted(maxima)[50]:.5f}")
    assert ok


def test_criterion_2_memoryless_optimum():
    hits, maxima = _extremum_repetitions(s.SchedulerMode.MEMORYLESS, MEMORYLESS_OPTIMUM, "memoryless")
    ok = hits >= 95
    report(2, "fig2 memoryless optimum 0.06561 +/- 0.02 in >= 95/100 runs", ok,
           f"hits={hits}/100, median max={sorted(maxima)[50]:.5f}")
    assert ok


def test_criterion_3_sample_size_formulas():
    single = s.chernoff_single_N(0.01, 0.01)
    multi = s.chernoff_multi_N(0.01, 0.01, 300, two_sided=True)
    band_ok = True
    worst = 0.0
    for m in (1, 10, 100, 1000, 10_000):
        exact = s.chernoff_multi_N(0.01, 0.01, m, two_sided=True)
        approx = math.log(m) / math.log(1.0002) + 26472
        worst = max(worst, abs(exact - approx))
        band_ok = band_ok and abs(exact - approx) <= 50
    ok = single == 26492 and multi == 54986 and band_ok
    report(3, "sample sizes: N(0.01,0.01)=26492, N(...,300)=54986, log band", ok,
           f"single={single}, multi300={multi}, worst band gap={worst:.1f}")
    assert ok


def test_criterion_4_hash_oracle_equivalence():
    rng = random.Random(160914)
    moduli = [13, 97, 1000003, s.DEFAULT_MODULUS, 2305843009213693951]
    mismatches = 0
    for _ in range(10_000):
        m = rng.choice(moduli)
        sigma = rng.randrange(0, 1 << 64)
        widths = [rng.randrange(1, 16) for _ in range(rng.randrange(1, 6))]
        values = [rng.randrange(0, 1 << w) for w in widths]
        t = init_hash(sigma, HashConfig(m))
        concatenated = sigma
        for w, v in zip(widths, values):
            t = absorb_value(t, v, w)
            concatenated = concatenated * (1 << w) + v
        if t.value != concatenated % m:
            mismatches += 1
    ok = mismatches == 0
    report(4, "incremental hash == arbitrary-precision mod on 10^4 triples", ok, f"mismatches={mismatches}")
    assert ok


def test_criterion_5_bounded_ltl_brute_force():
    two_state = (s.VariableDecl.create("x", 0, 1, 0),)
    mismatches = 0
    checked = 0
    for f in formula_corpus(50):
        verdicts, full_length = oracle_verdicts(f)
        for length in range(1, 9):
            for trace in itertools.product([(0,), (1,)], repeat=length):
                expected = oracle_verdict(f, trace, verdicts, full_length)
                if evaluate(f, trace, two_state) != expected:
                    mismatches += 1
                checked += 1
    ok = mismatches == 0 and checked == 50 * 510
    report(5, "monitor == enumerate-all-completions oracle on 50 formulas", ok,
           f"checked={checked}, mismatches={mismatches}")
    assert ok


def test_criterion_6_sprt_calibration():
    spec = s.HypothesisSpec(s.Hypothesis.H0, 0.5, 0.05, 0.01, 0.01, 1)
    accepts = 0
    for seed in range(1, 101):
        run = s.RunConfig(master_seed=seed, workers=1)
        if s.hypothesis_test_multi(CHAIN06, CHAIN06_PROP, spec, run).accepted:
            accepts += 1
    ok = accepts >= 97
    report(6, "SPRT accepts true H0 (p=0.6 >= 0.55) in >= 97/100 runs", ok, f"accepts={accepts}/100")
    assert ok


def test_criterion_7_multi_test_error_control():
    # corrected bound: 50 repetitions of the fig2 experiment at eps=delta=0.05,
    # M=20; a repetition fails if any scheduler's estimate strays more than
    # eps from that scheduler's exact chain probability
    epsilon = 0.05
    bad_reps = 0
    for seed in range(1, 51):
        run = s.RunConfig(master_seed=seed, workers=WORKERS)
        result = s.estimate_extrema(FIG2, FIG2_PROP, epsilon, 0.05, 20, run)
        for row in result.per_scheduler:
            truth = true_probability(FIG2, FIG2_PROP, row.sigma, s.SchedulerMode.GENERAL, CONFIG)
            if abs(row.p_hat - truth) > epsilon:
                bad_reps += 1
                break
    corrected_ok = bad_reps / 50 <= 0.10

    # negative control: reusing the single-test sample size across M=1000
    # schedulers must produce at least one out-of-bounds estimate. A fair-coin
    # chain keeps every scheduler at the maximum-variance point p=0.5.
    n_single = s.chernoff_single_N(epsilon, 0.05)
    cm = compile_model(FAIR_COIN, CONFIG)
    cp = compile_property(FAIR_COIN_PROP, FAIR_COIN)
    violations = 0
    for index, sigma in enumerate(s.draw_scheduler_ids(424242, 1000)):
        seeds = seeds_for_range(424242, index, 0, n_single, CONFIG)
        outcome = simulate_batch(cm, cp, sigma, s.SchedulerMode.GENERAL, seeds)
        if abs(outcome.truecount / n_single - 0.5) > epsilon:
            violations += 1
    negative_ok = violations >= 1

    ok = corrected_ok and negative_ok
    report(7, "multi-test error control vs uncorrected negative control", ok,
           f"corrected bad reps={bad_reps}/50 (allowed 5), uncorrected violations={violations}/1000 (need >= 1)")
    assert ok


def test_criterion_8_parallel_invariance(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    shutil.copy(s.example_path("fig2.mdp"), tmp_path / "fig2.mdp")
    shutil.copy(s.example_path("fig2.prop"), tmp_path / "fig2.prop")

    def load_normalized(path: str) -> dict:
        payload = json.loads(Path(path).read_text())
        payload.pop("wall_clock_seconds")
        payload["parameters"].pop("jobs")
        return payload

    ok = True
    details = []

    for jobs in ("1", "8"):
        code = main(["estimate", "--model", "fig2.mdp", "--property", "fig2.prop",
                     "--epsilon", "0.1", "--delta", "0.1", "--schedulers", "10",
                     "--seed", "42", "--jobs", jobs, "--output", f"est-{jobs}.json",
                     "--cdf", f"est-{jobs}.csv"])
        ok = ok and code == 0
    est_same = load_normalized("est-1.json") == load_normalized("est-8.json")
    csv_same = Path("est-1.csv").read_text() == Path("est-8.csv").read_text()
    details.append(f"estimate={est_same and csv_same}")

    for jobs in ("1", "8"):
        code = main(["check", "--model", "fig2.mdp", "--property", "fig2.prop",
                     "--hypothesis", "geq", "--threshold", "0.3", "--theta", "0.02",
                     "--alpha", "0.01", "--beta", "0.01", "--schedulers", "50",
                     "--seed", "7", "--jobs", jobs, "--output", f"chk-{jobs}.json"])
        ok = ok and code == 0
    chk_same = load_normalized("chk-1.json") == load_normalized("chk-8.json")
    details.append(f"check={chk_same}")

    sim_outputs = []
    import io
    from contextlib import redirect_stdout

    for _ in range(2):
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            code = main(["simulate", "--model", "fig2.mdp", "--property", "fig2.prop",
                         "--sigma", "11", "--prob-seed", "3"])
        ok = ok and code == 0
        sim_outputs.append(buffer.getvalue())
    sim_same = sim_outputs[0] == sim_outputs[1]
    details.append(f"simulate={sim_same}")

    code = main(["cdf", "est-1.json", "--output", "conv.csv"])
    cdf_same = code == 0 and Path("conv.csv").read_text() == Path("est-1.csv").read_text()
    details.append(f"cdf={cdf_same}")

    ok = ok and est_same and csv_same and chk_same and sim_same and cdf_same
    report(8, "identical results for --jobs 1 vs --jobs 8, all subcommands", ok, ", ".join(details))
    assert ok
