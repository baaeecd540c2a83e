"""End-to-end smoke test for the heatstat Python module.

Builds nothing itself: expects `cargo build -p heatstat-python` (or
--release) to have produced the cdylib. Copies it under the import name
`heatstat.so` in a scratch directory, imports it, and exercises the
exact engine, the sampler, the closed-form two-level system, and the
three-level effective temperature against independent expectations.

Run from the repository root:

    cargo build -p heatstat-python
    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    names = ["libheatstat.so", "libheatstat.dylib", "heatstat.dll"]
    candidates = [
        REPO / "target" / profile / name
        for profile in ("release", "debug")
        for name in names
    ]
    for path in candidates:
        if path.exists():
            return path
    sys.exit(
        "cdylib not found; run `cargo build -p heatstat-python` first\n"
        "looked in: " + ", ".join(str(c) for c in candidates)
    )


def import_heatstat():
    lib = locate_cdylib()
    scratch = Path(tempfile.mkdtemp(prefix="heatstat_smoke_"))
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    shutil.copy2(lib, scratch / f"heatstat{suffix}")
    sys.path.insert(0, str(scratch))
    import heatstat

    return heatstat


CHECKS = []


def check(name):
    def register(fn):
        CHECKS.append((name, fn))
        return fn

    return register


hs = import_heatstat()


def qubit_spec(measurements=3, beta=1.2):
    energies = [-1.0, 1.0]
    obs = hs.Observable.qubit(0.6, 0.8)
    init = hs.InitialState.gibbs(beta, energies)
    waits = hs.Waits.atoms([(0.4, 0.3), (1.1, 0.7)])
    return hs.ProtocolSpec(energies, obs, init, waits, measurements)


@check("char_fn normalization and fluctuation relation")
def _():
    spec = qubit_spec()
    g0 = hs.char_fn(spec, 0.0 + 0.0j)
    assert abs(g0 - 1.0) < 1e-12, g0
    value, deviation = hs.fluctuation_check(spec)
    assert deviation < 1e-10, (value, deviation)


@check("heat distribution sums to one and matches moments")
def _():
    spec = qubit_spec()
    support, probs = hs.heat_distribution(spec)
    assert abs(sum(probs) - 1.0) < 1e-12
    m1, m2 = hs.heat_moments(spec, 2)
    assert abs(m1 - sum(q * p for q, p in zip(support, probs))) < 1e-10
    assert abs(m2 - sum(q * q * p for q, p in zip(support, probs))) < 1e-10


@check("conditional table agrees with brute-force enumeration")
def _():
    spec = qubit_spec(measurements=2)
    fast = hs.conditional_table(spec)
    slow = hs.enumerate_conditional_table(spec)
    for row_f, row_s in zip(fast, slow):
        for a, b in zip(row_f, row_s):
            assert abs(a - b) < 1e-12
    for col in range(2):
        assert abs(sum(row[col] for row in fast) - 1.0) < 1e-12


@check("unitality audit passes on a small instance")
def _():
    deviation, mass, visited = hs.unitality_check(qubit_spec(measurements=4))
    assert deviation < 1e-10
    assert visited > 0
    assert all(abs(m - 1.0) < 1e-10 for m in mass)


@check("two-level closed form matches the generic engine")
def _():
    energies = [-1.0, 1.0]
    a, b = 0.6, 0.8
    init = hs.InitialState.gibbs(0.7, energies)
    waits = hs.Waits.atoms([(0.5, 0.4), (1.3, 0.6)])
    closed = hs.TwoLevelSystem(1.0, a, b, init, waits, 4)
    spec = hs.ProtocolSpec(
        energies, hs.Observable.qubit(a, b), init, waits, 4
    )
    for k in range(-20, 21):
        u = 0.25 * k + 0.0j
        assert abs(closed.char_fn(u) - hs.char_fn(spec, u)) < 1e-10
    assert abs(closed.moment(1) - hs.heat_moments(spec, 1)[0]) < 1e-9
    assert 0.0 < closed.mixing_weight < 1.0


@check("sampler is deterministic and near the exact law")
def _():
    spec = qubit_spec()
    first = hs.sample(spec, 20000, seed=42)
    second = hs.sample(spec, 20000, seed=42)
    assert first.heat_counts == second.heat_counts
    assert first.conditional_counts == second.conditional_counts
    assert sum(first.heat_counts) == 20000
    for count, prob in zip(first.heat_counts, first.exact_probabilities):
        sigma = math.sqrt(max(prob * (1 - prob) * 20000, 1.0))
        assert abs(count - prob * 20000) < 6 * sigma
    mean = first.jarzynski_mean
    err = first.jarzynski_std_error
    assert mean is not None and err is not None
    assert abs(mean - 1.0) < 5 * err + 1e-9


@check("identity observable freezes the dynamics")
def _():
    energies = [-1.0, 0.5, 2.0]
    spec = hs.ProtocolSpec(
        energies,
        hs.Observable.identity(3),
        hs.InitialState.gibbs(1.0, energies),
        hs.Waits.deterministic(0.8),
        5,
    )
    support, probs = hs.heat_distribution(spec)
    assert support == [0.0]
    assert abs(probs[0] - 1.0) < 1e-12
    # A diagonal observable freezes through structure, not time scale:
    # every level is its own block.
    assert hs.classify_regime(spec) == "partial"
    blocks, _, _ = hs.block_structure(spec)
    assert blocks == [[0], [1], [2]]


@check("generic qubit mixes to the uniform limit")
def _():
    spec = qubit_spec(measurements=200)
    assert hs.classify_regime(spec) == "infinite_temperature"
    blocks, block_of_outcome, block_of_level = hs.block_structure(spec)
    assert blocks == [[0, 1]]
    assert block_of_outcome == [0, 0] and block_of_level == [0, 0]
    report = hs.thermalization_report(spec, [1, 10, 50, 200])
    assert report.block_count == 1
    assert report.deviations[-1][1] < 1e-6
    assert all(abs(w - 0.5) < 1e-9 for w in report.limiting_weights)
    g_inf = hs.limiting_char_fn(spec, 0.3 + 0.0j)
    g_200 = hs.char_fn(spec, 0.3 + 0.0j)
    assert abs(g_inf - g_200) < 1e-8


@check("zeno escape decays like 1/m")
def _():
    obs = hs.Observable.qubit(1 / math.sqrt(2), 1 / math.sqrt(2))
    slope, intercept, points = hs.zeno_scan(
        [-1.0, 1.0], obs, 1.0, [10, 30, 100, 300, 1000]
    )
    assert abs(slope + 1.0) < 0.1, slope
    assert len(points) == 5
    assert hs.zeno_escape([-1.0, 1.0], obs, 1.0, 1000) < 1e-2


@check("three-level effective temperature hits its anchors")
def _():
    energies = [-2.0, 0.0, 1.0]
    weights = hs.ensemble_weights(energies, 0.0, 1.5)
    assert abs(sum(weights) - 1.0) < 1e-12
    beta_eff, candidates, multiple = hs.solve_beta_eff(energies, 0.0, 1.5)
    assert abs(beta_eff - 1.5) < 1e-8 and not multiple
    bar = hs.asymptotic_beta_bar(energies)
    golden = (1 + math.sqrt(5)) / 2
    assert abs(bar + math.log(golden)) < 1e-12
    plateau, _, _ = hs.solve_beta_eff(energies, 50.0, 2.0)
    assert abs(plateau - bar) < 1e-3
    slope = hs.beta_eff_slope(energies)
    assert abs(slope + 1 / math.sqrt(42)) < 1e-12
    rows = hs.sweep_beta_eff(energies, [0.0, 1.0], [0.0, 5.0])
    assert len(rows) == 4
    for beta, alpha, value, note in rows:
        if alpha == 0.0:
            assert value is not None and abs(value - beta) < 1e-8, (beta, note)


@check("invalid inputs raise ValueError")
def _():
    for build in (
        lambda: hs.Observable.qubit(1.0, 1.0),
        lambda: hs.InitialState.explicit([0.3, 0.3]),
        lambda: hs.Waits.atoms([(-1.0, 1.0)]),
        lambda: hs.ProtocolSpec(
            [-1.0, 1.0],
            hs.Observable.identity(3),
            hs.InitialState.gibbs(1.0, [-1.0, 1.0]),
            hs.Waits.deterministic(1.0),
            1,
        ),
    ):
        try:
            build()
        except ValueError:
            continue
        raise AssertionError(f"{build} did not raise")


def main():
    print(f"heatstat {hs.__version__} from {locate_cdylib()}")
    failures = []
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report and keep going
            failures.append((name, exc))
            print(f"FAIL {name}: {exc!r}")
        else:
            print(f"ok   {name}")
    if failures:
        sys.exit(f"{len(failures)} of {len(CHECKS)} checks failed")
    print(f"all {len(CHECKS)} checks passed")


if __name__ == "__main__":
    main()
