"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The heavy shared state
(a pool of models over 5 seeds at both training sizes) is built once per
module; total runtime is a few minutes on two cores.
"""

import json
import time

import numpy as np
import pytest
from scipy.special import expit

from perfbound import boundary as bnd
from perfbound import campaign, gpc, sampling, scenario
from perfbound.gpc import TrainingSet
from perfbound.sampling import Method, ParameterBox
from perfbound.scenario import Outcome, PhysicsConfig, ScenarioParams

SEEDS = (101, 102, 103, 104, 105)
POOL_MASTER = 9000

BOX = ParameterBox.default()
CFG = PhysicsConfig()
GRID = bnd.GridSpec(BOX)


def _report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num} ({name}): {status}  {detail}".rstrip())
    return ok


def _pool_seed(tag):
    return campaign.derive_seed(POOL_MASTER, tag)


def _make_training(method, n_total, seed):
    spec = sampling.DesignSpec(method, n_total, seed)
    samples = sampling.sample(BOX, spec)
    labeled = sampling.label_with_oracle(samples)
    train_idx, test_idx = sampling.split_indices(spec)
    training = TrainingSet.from_labeled([labeled[i] for i in train_idx], BOX)
    test = [labeled[i] for i in test_idx]
    return training, test


@pytest.fixture(scope="module")
def pool():
    """Models, boundaries and grid entropies for {LHC, MC} x {100, 1000}
    x 5 seeds. Hyperparameters are tuned once per training-set size and
    reused, isolating the data-density effect the criteria measure."""
    timing = {}
    t0 = time.perf_counter()
    tr90, _ = _make_training(Method.LATIN_HYPERCUBE, 100, _pool_seed("theta90"))
    theta90 = gpc.optimize_hyperparams(tr90, restarts=4, seed=1)
    timing["theta90"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tr900, _ = _make_training(Method.LATIN_HYPERCUBE, 1000, _pool_seed("theta900"))
    theta900 = gpc.optimize_hyperparams(tr900, restarts=2, seed=1, max_nm_iter=60)
    timing["theta900"] = time.perf_counter() - t0

    entries = {}
    t_fit = {}
    for seed in SEEDS:
        for method, mname in (
            (Method.LATIN_HYPERCUBE, "lhc"),
            (Method.MONTE_CARLO, "mc"),
        ):
            for n_total, theta in ((100, theta90), (1000, theta900)):
                training, test = _make_training(
                    method, n_total, _pool_seed(f"{mname}{n_total}s{seed}")
                )
                t0 = time.perf_counter()
                model = gpc.laplace_fit(training, theta)
                t_fit[(mname, n_total, seed)] = time.perf_counter() - t0
                probs = bnd.grid_probabilities(model, GRID)
                est = bnd.extract_boundary(model, GRID, probs=probs)
                entries[(mname, n_total, seed)] = {
                    "model": model,
                    "test": test,
                    "boundary": est,
                    "entropy": bnd.mean_predictive_entropy(probs),
                }
    timing["fits"] = t_fit
    return {"entries": entries, "theta90": theta90, "theta900": theta900,
            "timing": timing}


def test_criterion_1_reference_scenarios():
    t0 = time.perf_counter()
    collide = scenario.simulate(ScenarioParams(47.27, 15.76, 11.36), CFG)
    avoid = scenario.simulate(ScenarioParams(46.97, 15.30, 13.33), CFG)
    near = abs(scenario.oracle_margin(ScenarioParams(47.25, 15.5, 12.25), CFG))
    elapsed = time.perf_counter() - t0
    ok = (
        collide.outcome is Outcome.COLLISION
        and avoid.outcome is Outcome.NO_COLLISION
        and near < 0.5
        and elapsed < 1.0
    )
    assert _report(
        1,
        "reference boundary scenarios",
        ok,
        f"margin={near:.3f} m, {elapsed:.2f}s",
    )


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    n = 10_000
    rng = np.random.default_rng(424242)
    pts = rng.uniform(BOX.lowers, BOX.uppers, size=(n, 3))
    traces = scenario.simulate_batch(pts, CFG)
    margins = scenario.oracle_margin_batch(pts, CFG)
    band = 2.0 * CFG.dt * (70.0 / 3.6)
    disagreements = []
    for margin, trace in zip(margins, traces):
        expected = Outcome.COLLISION if margin < 0 else Outcome.NO_COLLISION
        if trace.outcome is not expected:
            disagreements.append(margin)
    elapsed = time.perf_counter() - t0
    agree_frac = 1.0 - len(disagreements) / n
    in_band = all(abs(m) <= band for m in disagreements)
    ok = agree_frac >= 0.999 and in_band and elapsed < 30.0
    assert _report(
        2,
        "simulate vs closed-form oracle",
        ok,
        f"agreement={agree_frac:.4%}, {len(disagreements)} disagreements "
        f"(band {band:.3f} m), {elapsed:.1f}s",
    )


def test_criterion_3_gpc_numerical_correctness(pool):
    # (a) stationarity on every trained model
    worst_residual = 0.0
    for entry in pool["entries"].values():
        model = entry["model"]
        K = gpc.kernel_matrix(model.training.X, model.training.X, model.kernel)
        K[np.diag_indices_from(K)] += model.kernel.jitter
        residual = float(np.max(np.abs(model.f_hat - K @ model.grad)))
        worst_residual = max(worst_residual, residual)
    stationary = worst_residual < 1e-6

    # (b) quadrature vs 1e6-sample Monte Carlo integration
    rng = np.random.default_rng(2024)
    worst_quad = 0.0
    for _ in range(20):
        mu = rng.uniform(-6.0, 6.0)
        var = rng.uniform(0.0, 9.0)
        quad = float(gpc._gauss_hermite_sigmoid(np.array([mu]), np.array([var]))[0])
        mc = float(expit(mu + np.sqrt(var) * rng.standard_normal(1_000_000)).mean())
        worst_quad = max(worst_quad, abs(quad - mc))
    quad_ok = worst_quad < 1e-3

    # (c) label-flip complementarity
    ref = pool["entries"][("lhc", 100, SEEDS[0])]["model"]
    flipped = gpc.laplace_fit(
        TrainingSet(ref.training.X, -ref.training.y, BOX), ref.kernel
    )
    queries = np.random.default_rng(77).random((200, 3))
    _, _, p_pos = ref.predict_batch(queries)
    _, _, p_neg = flipped.predict_batch(queries)
    worst_comp = float(np.max(np.abs(p_pos + p_neg - 1.0)))
    comp_ok = worst_comp < 1e-10

    ok = stationary and quad_ok and comp_ok
    assert _report(
        3,
        "GPC numerical correctness",
        ok,
        f"residual={worst_residual:.2e}, quad-vs-MC={worst_quad:.2e}, "
        f"complementarity={worst_comp:.2e}",
    )


def test_criterion_4_classification_quality(pool):
    timing = pool["timing"]
    small = pool["entries"][("lhc", 100, SEEDS[0])]
    large = pool["entries"][("lhc", 1000, SEEDS[0])]
    m_small = gpc.evaluate(small["model"], small["test"])
    m_large = gpc.evaluate(large["model"], large["test"])
    correct_small = len(small["test"]) - m_small.n_misclassified
    correct_large = len(large["test"]) - m_large.n_misclassified
    train_time = (
        timing["theta90"]
        + timing["theta900"]
        + timing["fits"][("lhc", 100, SEEDS[0])]
        + timing["fits"][("lhc", 1000, SEEDS[0])]
    )
    ok = correct_small >= 8 and correct_large >= 95 and train_time < 300.0
    assert _report(
        4,
        "classification quality",
        ok,
        f"90-pt model {correct_small}/10, 900-pt model {correct_large}/100, "
        f"training {train_time:.0f}s",
    )


def test_criterion_5_boundary_convergence(pool):
    entries = pool["entries"]
    wins = 0
    details = []
    for i, seed in enumerate(SEEDS):
        seed_next = SEEDS[(i + 1) % len(SEEDS)]
        d_small_large = bnd.boundary_distance(
            entries[("lhc", 100, seed)]["boundary"],
            entries[("lhc", 1000, seed)]["boundary"],
            "normalized",
        )
        d_large_large = bnd.boundary_distance(
            entries[("lhc", 1000, seed)]["boundary"],
            entries[("lhc", 1000, seed_next)]["boundary"],
            "normalized",
        )
        wins += d_small_large > d_large_large
        details.append(f"{d_small_large:.3f}>{d_large_large:.3f}")
    ok = wins >= 4
    assert _report(
        5,
        "boundary estimates tighten with data",
        ok,
        f"{wins}/5 replications ({', '.join(details)})",
    )


def test_criterion_6_sampling_method_comparison(pool):
    entries = pool["entries"]
    d_lhc = [
        bnd.boundary_distance(
            entries[("lhc", 100, s)]["boundary"],
            entries[("lhc", 1000, s)]["boundary"],
            "normalized",
        )
        for s in SEEDS
    ]
    d_mc = [
        bnd.boundary_distance(
            entries[("mc", 100, s)]["boundary"],
            entries[("mc", 1000, s)]["boundary"],
            "normalized",
        )
        for s in SEEDS
    ]
    ok = float(np.median(d_lhc)) <= float(np.median(d_mc))
    assert _report(
        6,
        "LHC beats MC on sparse data",
        ok,
        f"median LHC={np.median(d_lhc):.3f} vs MC={np.median(d_mc):.3f}",
    )


def test_criterion_7_confidence_growth(pool):
    entries = pool["entries"]
    failures = []
    for seed in SEEDS:
        for mname in ("lhc", "mc"):
            e_small = entries[(mname, 100, seed)]["entropy"]
            e_large = entries[(mname, 1000, seed)]["entropy"]
            if not e_large < e_small:
                failures.append((mname, seed, e_small, e_large))
    ok = not failures
    spread = [
        f"{entries[(m, 100, s)]['entropy']:.3f}->{entries[(m, 1000, s)]['entropy']:.3f}"
        for m in ("lhc", "mc")
        for s in SEEDS[:2]
    ]
    assert _report(
        7,
        "mean predictive entropy decreases with data",
        ok,
        f"e.g. {', '.join(spread)}" + (f"; failures={failures}" if failures else ""),
    )


def test_criterion_8_lhc_properties():
    strat_ok = True
    improve_ok = True
    for n in (10, 90, 900):
        design = sampling.latin_hypercube(BOX, n, seed=31337)
        unit = BOX.to_unit(design.points)
        for dim in range(BOX.ndim):
            if sorted(np.floor(unit[:, dim] * n).astype(int)) != list(range(n)):
                strat_ok = False
        unopt = sampling.latin_hypercube(BOX, n, seed=31337, minimax_iters=0)
        crit_opt = sampling.minimax_criterion(design.points, BOX)
        crit_unopt = sampling.minimax_criterion(unopt.points, BOX)
        if crit_opt > crit_unopt:
            improve_ok = False
    ok = strat_ok and improve_ok
    assert _report(
        8,
        "LHC stratification and minimax improvement",
        ok,
        f"stratification={'exact' if strat_ok else 'BROKEN'}, "
        f"criterion never worsened={improve_ok}",
    )


def test_criterion_9_campaign_determinism(tmp_path):
    config = {
        "master_seed": 7,
        "datasets": [
            {"name": "MC40", "method": "monte_carlo", "n_total": 40},
            {"name": "LHC40", "method": "latin_hypercube", "n_total": 40},
        ],
        "grid_resolution": [15, 15, 15],
        "restarts": 2,
        "max_nm_iter": 60,
        "minimax_iters": 2000,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    outputs = []
    for run in ("a", "b"):
        cfg = campaign.CampaignConfig.from_file(config_path, out_dir=tmp_path / run)
        campaign.cmd_report(cfg)
        outputs.append(
            {
                p.name: p.read_bytes()
                for p in sorted((tmp_path / run).iterdir())
            }
        )
    same_names = outputs[0].keys() == outputs[1].keys()
    identical = same_names and all(
        outputs[0][name] == outputs[1][name] for name in outputs[0]
    )
    assert _report(
        9,
        "byte-identical campaign rerun",
        identical,
        f"{len(outputs[0])} artifacts compared",
    )
