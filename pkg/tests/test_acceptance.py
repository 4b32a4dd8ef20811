"""The nine package-level acceptance checks.

Each test prints one PASS/FAIL line (visible under ``pytest -v -s`` and in
failure output) and then asserts.  The shared fixture trains both engine
modes over ten seeds on the iris data at the documented thresholds, which
are also the package defaults: tau1=0.07, tau2=0.01, alpha=0.04, beta=4.
"""

import json
import statistics
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import oracles
from ghsom import cli
from ghsom.adaptive import place_generated_unit, update_wd
from ghsom.data import Dataset, Sample, load_iris
from ghsom.errors import ModelFormatError
from ghsom.evaluate import class_purity, hierarchy_qe, model_criterion
from ghsom.growth import GhsomParams, insert_row_or_column, train_hierarchy
from ghsom.model_io import load_model, model_bytes, to_payload
from ghsom.service import create_app
from ghsom.som import MapGrid, Schedules, find_bmu, layer0_stats

SEEDS = range(10)


def report(num: int, ok: bool, detail: str) -> None:
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num} failed: {detail}"


def train_pair(dataset, seed):
    plain = GhsomParams()
    steered = GhsomParams()
    steered.interactive.enabled = True
    return (train_hierarchy(dataset, plain, seed),
            train_hierarchy(dataset, steered, seed))


@pytest.fixture(scope="module")
def iris():
    return load_iris()


@pytest.fixture(scope="module")
def sweep(iris):
    """{seed: (traditional, interactive)} hierarchies, plus wall times."""
    out = {}
    times = []
    for seed in SEEDS:
        t0 = time.monotonic()
        out[seed] = train_pair(iris, seed)
        times.append(time.monotonic() - t0)
    out["times"] = times
    return out


def test_criterion_1_quantization_error_ordering(sweep, iris):
    trad, inter = [], []
    for seed in SEEDS:
        t, i = sweep[seed]
        trad.append(hierarchy_qe(t, iris).leaf_unit_mean_qe_orig)
        inter.append(hierarchy_qe(i, iris).leaf_unit_mean_qe_orig)
    med_t = statistics.median(trad)
    med_i = statistics.median(inter)
    slowest = max(sweep["times"]) / 2  # each entry timed a pair of runs
    ok = (med_i < med_t) and (0.6 <= med_t <= 1.4) and slowest < 30
    report(1, ok,
           f"median leaf-unit mean QE traditional={med_t:.4f} (band 0.6..1.4), "
           f"interactive={med_i:.4f}, slowest run ~{slowest:.1f}s")


def test_criterion_2_model_criterion_ordering(sweep, iris):
    wins = 0
    pairs = []
    for seed in SEEDS:
        t, i = sweep[seed]
        ct = model_criterion(t, iris)
        ci = model_criterion(i, iris)
        pairs.append((seed, round(ct, 2), round(ci, 2)))
        if ci < ct:
            wins += 1
    ok = wins >= 8
    report(2, ok,
           f"interactive scored lower on {wins}/10 seeds "
           f"(need 8); (seed, traditional, interactive): {pairs}")


def test_criterion_3_setosa_separability(sweep, iris):
    worst = 1.0
    for seed in SEEDS:
        for h in sweep[seed]:
            hists, _ = class_purity(h, iris, layer=1)
            in_majority = 0
            for hist in hists.values():
                majority = max(sorted(hist), key=lambda lb: hist[lb])
                if majority == "Setosa":
                    in_majority += hist.get("Setosa", 0)
            worst = min(worst, in_majority / 50.0)
    ok = worst >= 0.95
    report(3, ok, f"lowest Setosa-in-Setosa-majority fraction over "
                  f"10 seeds x 2 modes = {worst:.3f} (need >= 0.95)")


def test_criterion_4_policy_degeneracy(iris):
    flat_alpha = True
    for seed in (0, 1, 2):
        p = GhsomParams()
        p.interactive.enabled = True
        p.interactive.alpha = 1.0
        flat_alpha &= train_hierarchy(iris, p, seed).depth() == 1

    flat_tau2 = True
    for seed in (0, 1, 2):
        p = GhsomParams()
        p.growth.tau2 = None
        flat_tau2 &= train_hierarchy(iris, p, seed).depth() == 1

    base = train_hierarchy(iris, GhsomParams(), seed=5)
    p = GhsomParams()
    p.interactive.enabled = False
    p.interactive.alpha = 0.9
    p.interactive.beta = 17.0
    off = train_hierarchy(iris, p, seed=5)
    pay_a, pay_b = to_payload(base), to_payload(off)
    del pay_a["params"], pay_b["params"]
    inert = json.dumps(pay_a, sort_keys=True) == json.dumps(pay_b, sort_keys=True)
    bitwise = model_bytes(train_hierarchy(iris, GhsomParams(), seed=5)) == \
        model_bytes(base)

    ok = flat_alpha and flat_tau2 and inert and bitwise
    report(4, ok,
           f"alpha=1 flat={flat_alpha}, tau2=off flat={flat_tau2}, "
           f"disabled policy inert={inert}, equal-seed bitwise={bitwise}")


def test_criterion_5_oracle_equivalence():
    rng = np.random.default_rng(55)
    bmu_ok = 0
    for _ in range(1000):
        rows, cols, d = rng.integers(1, 5), rng.integers(1, 5), rng.integers(1, 6)
        g = MapGrid(0, int(rows), int(cols), 1, None,
                    rng.uniform(0, 1, (int(rows), int(cols), int(d))))
        x = rng.uniform(0, 1, int(d))
        ref = oracles.brute_bmu(
            [(u.row, u.col, [float(v) for v in u.weight])
             for u in g.iter_units()], [float(v) for v in x])
        bmu_ok += find_bmu(g, x) == ref

    from ghsom.som import assign_and_score
    score_ok = True
    for trial in range(20):
        rows, cols, d = 3, 3, 4
        g = MapGrid(0, rows, cols, 1, None, rng.uniform(0, 1, (rows, cols, d)))
        samples = [Sample(i, rng.uniform(0, 1, d), None) for i in range(30)]
        assign_and_score(g, samples)
        unit_list = [(u.row, u.col, [float(v) for v in u.weight])
                     for u in g.iter_units()]
        want = oracles.brute_assignments(
            unit_list, [[float(v) for v in s.features] for s in samples])
        per_unit = {}
        for i, coords in want.items():
            per_unit.setdefault(coords, []).append(samples[i].features)
        for u in g.iter_units():
            rows_for = per_unit.get((u.row, u.col), [])
            qe = oracles.brute_unit_qe([float(v) for v in u.weight],
                                       [[float(x) for x in r] for r in rows_for])
            score_ok &= abs(u.qe - qe) < 1e-9
            mean = qe / len(rows_for) if rows_for else 0.0
            score_ok &= abs(u.mqe - mean) < 1e-9
        want_mqe = oracles.brute_map_mqe(
            [(u.qe, len(u.assigned)) for u in g.iter_units()])
        score_ok &= abs(g.mqe_map - want_mqe) < 1e-9

    feats = rng.uniform(0, 5, (40, 3))
    m0, mqe0, qe0 = layer0_stats(feats)
    bm0, bmqe0, bqe0 = oracles.brute_layer0([[float(v) for v in r] for r in feats])
    layer0_ok = (max(abs(a - b) for a, b in zip(m0, bm0)) < 1e-9
                 and abs(mqe0 - bmqe0) < 1e-9 and abs(qe0 - bqe0) < 1e-9)

    wd_ok = True
    still = np.array([0.3, 0.7])
    for gamma in (0.5, 0.9, 0.99):
        wd = 0.8
        for k in range(1, 41):
            wd = update_wd(wd, still, still, gamma)
            want = oracles.wd_zero_movement(0.8, gamma, k)
            wd_ok &= abs(wd - want) < 1e-12

    ok = bmu_ok == 1000 and score_ok and layer0_ok and wd_ok
    report(5, ok,
           f"find_bmu exact {bmu_ok}/1000, qe/mqe/mqe_M within 1e-9: "
           f"{score_ok}, layer0 within 1e-9: {layer0_ok}, "
           f"WD decay within 1e-12: {wd_ok}")


def test_criterion_6_growth_bounds_and_termination():
    rng = np.random.default_rng(66)
    failures = []
    for trial in range(200):
        n = 2 + int(298 * rng.random() ** 2)
        d = int(rng.integers(1, 9))
        feats = rng.uniform(0, 1, (n, d))
        if rng.random() < 0.05:
            feats[:] = feats[0]  # degenerate: all rows identical
        ds = Dataset(f"r{trial}", [f"f{j}" for j in range(d)], feats, None,
                     "minmax", np.zeros(d), np.ones(d))
        p = GhsomParams()
        p.growth.tau1 = float(rng.uniform(0.05, 0.6))
        p.growth.tau2 = None if rng.random() < 0.2 else float(rng.uniform(0.02, 0.4))
        p.growth.max_depth = int(rng.integers(1, 5))
        p.growth.max_map_units = int(rng.choice([4, 6, 9, 16, 25, 36]))
        p.growth.growth_mode = str(rng.choice(
            ["row_column", "row_column", "unit_level", "hybrid"]))
        p.schedules = Schedules(epochs=2)
        p.interactive.enabled = bool(rng.random() < 0.5)
        p.interactive.alpha = float(rng.uniform(0.01, 1.0))
        p.interactive.beta = float(rng.uniform(0.5, 8.0))
        h = train_hierarchy(ds, p, seed=trial)
        try:
            h.validate_tree()
        except Exception as exc:
            failures.append((trial, f"tree: {exc}"))
            continue
        if h.depth() > p.growth.max_depth:
            failures.append((trial, "depth over cap"))
        for g in h.maps.values():
            if g.rows * g.cols > p.growth.max_map_units:
                failures.append((trial, f"map {g.map_id} over unit cap"))
    ok = not failures
    report(6, ok, f"200 random datasets halted; violations: {failures[:5]}"
           if failures else "200 random datasets halted within caps, "
                            "trees well-formed")


def test_criterion_7_persistence(tmp_path, capsys):
    model = tmp_path / "m.ghsom"
    code = cli.main(["train", "--iris", "--seed", "2",
                     "--out", str(model), "--format", "json"])
    trained = json.loads(capsys.readouterr().out)
    assert code == 0
    code = cli.main(["eval", "--model", str(model), "--iris",
                     "--format", "json"])
    scored = json.loads(capsys.readouterr().out)
    assert code == 0
    keys = ("depth", "n_maps", "n_units", "n_leaf_units", "total_qe",
            "mean_qe", "leaf_unit_mean_qe", "mean_qe_orig",
            "leaf_unit_mean_qe_orig", "criterion")
    mismatched = [k for k in keys if trained[k] != scored[k]]

    raw = bytearray(model.read_bytes())
    k = raw.find(b'"qe0"') + 10
    raw[k] = raw[k] ^ 1
    tampered = tmp_path / "t.ghsom"
    tampered.write_bytes(bytes(raw))
    try:
        load_model(str(tampered))
        rejected = False
    except ModelFormatError:
        rejected = True

    ok = not mismatched and rejected
    report(7, ok, f"eval-after-reload mismatches: {mismatched or 'none'}; "
                  f"tampered file rejected: {rejected}")


def test_criterion_8_insertion_geometry():
    checks = {}

    g = MapGrid(0, 2, 2, 1, None,
                np.array([[[0.0, 0.0], [4.0, 8.0]],
                          [[2.0, 2.0], [6.0, 2.0]]]))
    insert_row_or_column(g, (0, 0), (0, 1), None)
    checks["row pair adds column"] = (g.rows, g.cols) == (2, 3)
    checks["column average exact"] = (
        np.array_equal(g.unit_at(0, 1).weight, np.array([2.0, 4.0]))
        and np.array_equal(g.unit_at(1, 1).weight, np.array([4.0, 2.0])))

    g = MapGrid(0, 2, 2, 1, None,
                np.array([[[0.0, 0.0], [4.0, 8.0]],
                          [[2.0, 2.0], [6.0, 2.0]]]))
    insert_row_or_column(g, (0, 1), (1, 1), None)
    checks["column pair adds row"] = (g.rows, g.cols) == (3, 2)
    checks["row average exact"] = (
        np.array_equal(g.unit_at(1, 0).weight, np.array([1.0, 1.0]))
        and np.array_equal(g.unit_at(1, 1).weight, np.array([5.0, 5.0])))

    g = MapGrid(0, 2, 2, 1, None,
                np.array([[[0.0, 0.0], [4.0, 8.0]],
                          [[2.0, 2.0], [6.0, 2.0]]]))
    for u in g.iter_units():
        u.wd = 1.0 if (u.row, u.col) == (0, 0) else 0.1
    place_generated_unit(g, [(0, 0), (1, 1)], None)
    checks["diagonal bridges a row"] = (g.rows, g.cols) == (3, 2)
    checks["bridged unit is pair average"] = np.array_equal(
        g.unit_at(1, 0).weight, np.array([3.0, 1.0]))

    ok = all(checks.values())
    report(8, ok, "; ".join(f"{name}: {'ok' if v else 'BAD'}"
                            for name, v in checks.items()))


CSV = "\n".join(
    ["x,y,label"]
    + [f"{0.05 + i * 0.015},{0.1 + i * 0.01},a" for i in range(7)]
    + [f"{0.9 - i * 0.012},{0.85 - i * 0.014},b" for i in range(7)]
    + [f"{0.5 + i * 0.01},{0.05 + i * 0.012},c" for i in range(7)]
) + "\n"


def _random_command(rng, tree):
    """One plausible command against the current tree document."""
    roll = rng.random()
    if tree is None or roll < 0.15:
        return {"kind": "start_train",
                "payload": {"seed": int(rng.integers(0, 100))}}
    cells = []
    for m in tree["maps"]:
        for row in m["units"]:
            for cell in row:
                if cell is not None:
                    cells.append((m["map_id"], cell))
    mid, cell = cells[int(rng.integers(0, len(cells)))]
    unit = [cell["row"], cell["col"]]
    if roll < 0.35:
        return {"kind": "expand_unit",
                "target": {"map": mid, "unit": unit}}
    if roll < 0.5:
        return {"kind": "prune_subtree",
                "target": {"map": mid, "unit": unit}}
    if roll < 0.7:
        return {"kind": "recluster_map", "target": {"map": mid},
                "payload": {"seed": int(rng.integers(0, 50))}}
    if roll < 0.85:
        return {"kind": "set_params",
                "payload": {"tau1": float(np.round(rng.uniform(0.1, 0.5), 3))}}
    return {"kind": "undo"}


def test_criterion_9_event_sourcing():
    rng = np.random.default_rng(99)
    with TestClient(create_app()) as client:
        def export(sid):
            r = client.get(f"/session/{sid}/export")
            return r.status_code, r.content

        bad = []
        for trial in range(50):
            r = client.post("/session", json={
                "dataset": {"csv": CSV, "name": "mix", "label_column": "label"},
                "params": {"tau1": 0.3, "tau2": 0.05},
                "seed": int(rng.integers(0, 1000))})
            sid = r.json()["session_id"]
            client.post(f"/session/{sid}/command",
                        json={"kind": "start_train"})
            for _ in range(int(rng.integers(2, 6))):
                tree = client.get(f"/session/{sid}/tree").json()["tree"]
                client.post(f"/session/{sid}/command",
                            json=_random_command(rng, tree))
            final = export(sid)
            log = client.get(f"/session/{sid}/log").json()

            r = client.post("/session", json={
                "dataset": log["initial"]["dataset"],
                "params": log["initial"]["params"],
                "seed": log["initial"]["seed"]})
            rid = r.json()["session_id"]
            for cmd in log["commands"]:
                rr = client.post(f"/session/{rid}/command", json=cmd)
                if rr.status_code != 200:
                    bad.append((trial, cmd["kind"], rr.status_code))
            if export(rid) != final:
                bad.append((trial, "export mismatch", None))
        ok = not bad
        report(9, ok, "50 replayed sessions reproduced their exports "
                      "byte for byte" if ok else f"failures: {bad[:5]}")
