"""Acceptance criteria 1-10.  Each test records a pass/fail line shown in the terminal summary."""

import time

import numpy as np

from darwinscope.approx import fit_ghz
from darwinscope.darwinism import mutual_information, pointer_from_decomposition, redundancy
from darwinscope.fixtures import build_fixture
from darwinscope.ghz import detect_ghz, etut_scan, fine_grain, match_decompositions, random_ghz
from darwinscope.hilbert import (
    DensityOperator,
    HermitianObservable,
    PureState,
    SystemLayout,
    dual_vector,
    embed_product,
    partial_trace,
    random_orthonormal,
    random_state,
    schmidt,
    von_neumann_entropy,
)
from darwinscope.partitions import (
    Partition,
    Relation,
    all_partitions,
    classify_relative,
    is_comparable,
    sufficient_condition,
)

from conftest import ghz_vector, record


def state_of(dec):
    return PureState.from_vector(dec.layout, dec.state_vector())


def random_partition(n, rng, min_blocks=1, fixed_first=False):
    while True:
        labels = rng.integers(0, n, size=n)
        if fixed_first:
            labels[1:] = np.where(labels[1:] == labels[0], (labels[0] + 1) % n, labels[1:])
        blocks = {}
        for s, lab in enumerate(labels, 1):
            blocks.setdefault(int(lab), []).append(s)
        p = Partition(tuple(tuple(b) for b in blocks.values()), n, 1 if fixed_first else None)
        if p.n >= min_blocks:
            return p


def test_criterion_01_ambiguity(ambiguity):
    t0 = time.perf_counter()
    residuals = []
    for key in ("A", "B"):
        found = detect_ghz(ambiguity.state, ambiguity.partitions[key])
        assert found is not None and found.n_branches == 4
        m = match_decompositions(found, ambiguity.decompositions[key])
        assert m is not None
        residuals.append(m.max_residual)
    a, b = ambiguity.partitions["A"], ambiguity.partitions["B"]
    kinds = (classify_relative(b, a, system_fixed=True).kind, classify_relative(a, b, system_fixed=True).kind)
    elapsed = time.perf_counter() - t0
    ok = max(residuals) <= 1e-8 and kinds == (Relation.NONLOCAL_OVERLAP,) * 2 and elapsed < 5
    record(1, ok, f"max_residual={max(residuals):.2e} relation=NonlocalOverlap both ways time={elapsed:.2f}s")
    assert ok


def etut_case(idx):
    """Seeded random GHZ-like state: system + 5-6 environment qubits, 2..4 branches."""
    rng = np.random.default_rng(1000 + idx)
    k = 2 + idx % 3
    n_env = 5 + (idx // 3) % 2
    sys_dim = 2 if k == 2 else 4
    lay = SystemLayout((sys_dim,) + (2,) * n_env)
    if k == 2:
        ref = Partition.parse("S:" + "|".join(str(s) for s in range(1, n_env + 2)), n_env + 1)
    elif n_env == 6:
        ref = Partition.parse("S:1|2,3|4,5|6,7", 7)
    else:
        ref = Partition.parse("S:1|2,3|4,5,6", 6)
    return random_ghz(lay, ref, k, rng)


def test_criterion_02_etut_brute_force():
    t0 = time.perf_counter()
    violations = enumerated = comparable = 0
    for idx in range(50):
        dec = etut_case(idx)
        rep = etut_scan(state_of(dec), dec.partition, match_tol=1e-6, seed=idx)
        assert rep.reference is not None
        violations += len(rep.violations)
        enumerated += rep.enumerated
        comparable += rep.comparable
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 600
    record(2, ok, f"states=50 enumerated={enumerated} comparable={comparable} violations={violations} time={elapsed:.1f}s")
    assert ok


def test_criterion_03_factorized_states():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    detections = checks = 0
    for _ in range(200):
        n = int(rng.integers(4, 7))
        lay = SystemLayout(tuple(int(d) for d in rng.integers(2, 4, size=n)))
        a = random_partition(n, rng, min_blocks=3)
        factors = [random_orthonormal(lay.dim_of(f), 1, rng)[:, 0] for f in a.fractions]
        st_ = PureState(lay, embed_product(lay, a.fractions, factors))
        found = 0
        while found < 20:
            b = random_partition(n, rng, min_blocks=3)
            if not is_comparable(b, a):
                continue
            found += 1
            checks += 1
            detections += detect_ghz(st_, b, tol=1e-8) is not None
    elapsed = time.perf_counter() - t0
    ok = detections == 0 and elapsed < 300
    record(3, ok, f"states=200 checks={checks} detections={detections} time={elapsed:.1f}s")
    assert ok


def test_criterion_04_sufficient_condition():
    t0 = time.perf_counter()
    parts = [p for p in all_partitions(6) if p.n >= 3]
    pairs = failures = held = 0
    for a in parts:
        for b in parts:
            pairs += 1
            if sufficient_condition(a, b):
                held += 1
                failures += not is_comparable(b, a)
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 60
    record(4, ok, f"pairs={pairs} sufficient={held} failures={failures} time={elapsed:.1f}s")
    assert ok


def test_criterion_05_footnote():
    fx = build_fixture("footnote-overlap")
    rows = {k: a for k, _, a, _ in fx.check()}
    flags = (rows["pair_covers_A_B"], rows["pair_covers_B_A"], rows["A_comparable_to_B"], rows["B_comparable_to_A"])
    ok = flags == (False, False, False, False)
    record(5, ok, f"pair_covers={flags[0]},{flags[1]} comparable={flags[2]},{flags[3]}")
    assert ok


def test_criterion_06_comdec():
    fx = build_fixture("comdec")
    found = {key: detect_ghz(fx.state, p, tol=1e-8) for key, p in fx.partitions.items()}
    ok = found["A"] is None and found["B"] is None and found["merged"] is not None
    record(6, ok, f"A=none B=none merged={found['merged'].n_branches if found['merged'] else 'none'} branches")
    assert ok


def local_unitary(state, rng):
    u = np.ones((1, 1))
    for d in state.dims:
        u = np.kron(u, random_orthonormal(d, d, rng))
    return PureState.from_vector(state.layout, u @ state.amplitudes)


def finest_forms(state, candidates, seed):
    """Finest-grained GHZ-like decomposition reached from every candidate partition where detection succeeds."""
    forms = []
    for part in candidates:
        dec = detect_ghz(state, part, seed=seed)
        if dec is not None:
            forms.append(fine_grain(state, dec, seed=seed))
    return forms


def random_coarsening(part, rng):
    """Merge random environment fractions of ``part`` (at least two environment fractions remain)."""
    out = part
    for _ in range(int(rng.integers(0, max(1, out.n - 2)))):
        env = out.environment_ids
        if len(env) <= 2:
            break
        i, j = sorted(int(x) for x in rng.choice(env, size=2, replace=False))
        out = out.merge(i, j)
    return out


def test_criterion_07_redundancy(ambiguity):
    r_amb = redundancy(ambiguity.state, pointer_from_decomposition(ambiguity.decompositions["A"])).r_delta
    finest_ok = True
    for n_e in range(2, 7):
        st_ = PureState(SystemLayout.qubits(n_e + 1), ghz_vector(n_e + 1))
        pointer = HermitianObservable.computational((1,), 2)
        finest_ok &= redundancy(st_, pointer).r_delta == n_e
        finest = Partition.parse("S:" + "|".join(map(str, range(1, n_e + 2))))
        dec = random_ghz(SystemLayout.qubits(n_e + 1), finest, 2, np.random.default_rng(n_e))
        finest_ok &= redundancy(state_of(dec), pointer_from_decomposition(dec)).r_delta == n_e

    rng = np.random.default_rng(7)
    pairs = applicable = mismatches = 0
    for trial in range(40):
        if trial % 4 == 0:
            # two GHZ-like forms on non-comparable partitions; R0 R0' = N_e, so a mismatch is allowed
            st_ = local_unitary(ambiguity.state, rng)
            cands = [Partition.parse("S:1|2,3|4,5"), Partition.parse("S:1|2,4|3,5")]
        else:
            n_env = int(rng.integers(3, 9))
            lay = SystemLayout((2,) + (2,) * n_env)
            ref = random_partition(n_env + 1, rng, min_blocks=3, fixed_first=True)
            st_ = state_of(random_ghz(lay, ref, 2, rng))
            cands = [ref] + [random_coarsening(ref, rng) for _ in range(4)]
        n_sys = st_.layout.n_systems
        cands += [random_partition(n_sys, rng, min_blocks=3, fixed_first=True) for _ in range(6)]
        forms = finest_forms(st_, cands, seed=trial)
        n_env_sys = n_sys - 1
        r0 = [redundancy(st_, pointer_from_decomposition(f)).r_delta for f in forms]
        for i in range(len(forms)):
            for j in range(i + 1, len(forms)):
                pairs += 1
                if r0[i] * r0[j] > n_env_sys:
                    applicable += 1
                    mismatches += match_decompositions(forms[i], forms[j], tol=1e-6) is None
    ok = r_amb == 2 and finest_ok and mismatches == 0 and applicable > 0
    record(7, ok, f"R0(ambiguity)={r_amb} finest R0=n_e:{finest_ok} pairs={pairs} R0R0'>N_e={applicable} mismatches={mismatches}")
    assert ok


def completed_basis(v, rng):
    """Orthonormal basis whose first columns are the orthonormal columns of ``v`` (up to phase)."""
    q, _ = np.linalg.qr(np.hstack([v, random_orthonormal(v.shape[0], v.shape[0], rng)]))
    return q[:, : v.shape[0]]


def test_criterion_08_mutual_information():
    worst = 0.0
    rng = np.random.default_rng(8)
    for k in (2, 3, 4):
        lay = SystemLayout((k, k, k + 1, 2 * k))
        dec = random_ghz(lay, Partition.parse("S:1|2|3|4"), k, rng, coefficients=np.ones(k))
        st_ = state_of(dec)
        s_obs = pointer_from_decomposition(dec)
        for fid in (2, 3, 4):
            f_obs = HermitianObservable.from_basis((fid,), completed_basis(dec.vectors[fid - 1], rng))
            worst = max(worst, abs(mutual_information(st_, s_obs, f_obs) - np.log2(k)))
    ghz = PureState(SystemLayout.qubits(3), ghz_vector(3))
    extra = random_state(SystemLayout((3,)), rng)
    prod = PureState(SystemLayout((2, 2, 2, 3)), np.kron(ghz.amplitudes, extra.amplitudes))
    zero = abs(mutual_information(prod, HermitianObservable.computational((1,), 2), HermitianObservable.computational((4,), 3)))
    ok = worst <= 1e-9 and zero <= 1e-9
    record(8, ok, f"max|I-log2 k|={worst:.2e} I(product fraction)={zero:.2e}")
    assert ok


def test_criterion_09_imperfect_correlation():
    t0 = time.perf_counter()
    fine = Partition.parse("S:1|2,3|4,5|6,7")
    coarse = Partition.parse("S:1|2,3,4,5|6,7")
    lay = SystemLayout((4, 2, 2, 2, 2, 2, 2))
    worst_excess = worst_consistency = 0.0
    monotone = True
    for fam in range(6):
        rng = np.random.default_rng(900 + fam)
        dec = random_ghz(lay, fine, 2 + fam % 2, rng)
        b = dec.branch_vectors()
        chi = random_state(lay, rng).amplitudes
        chi = chi - b @ np.linalg.lstsq(b, chi, rcond=None)[0]
        chi /= np.linalg.norm(chi)
        ref = type(dec)(lay, coarse, dec.coefficients,
                        (dec.vectors[0], np.stack([np.kron(dec.vectors[1][:, i], dec.vectors[2][:, i]) for i in range(dec.n_branches)], axis=1), dec.vectors[3]),
                        True)
        eps_s = []
        for d in (1e-2, 1e-3, 1e-4):
            st_ = PureState.from_vector(lay, np.sqrt(1 - d) * dec.state_vector() + np.sqrt(d) * chi)
            res = fit_ghz(st_, coarse, reference=ref, restarts=4, seed=fam)
            worst_excess = max(worst_excess, res.delta2 - d)
            worst_consistency = max(worst_consistency, res.epsilon.consistency_error())
            eps_s.append(res.epsilon.max_abs_eps_s_diag)
        monotone &= all(x > y for x, y in zip(eps_s, eps_s[1:]))
    elapsed = time.perf_counter() - t0
    ok = worst_excess <= 1e-8 and monotone and worst_consistency <= 1e-8
    record(9, ok, f"families=6 max(delta2_fit - delta2_injected)={worst_excess:.2e} eps_s monotone={monotone} "
                  f"consistency={worst_consistency:.2e} time={elapsed:.1f}s")
    assert ok


def test_criterion_10_core_numerics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst_schmidt = worst_add = worst_dual = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        lay = SystemLayout.qubits(n)
        st_ = random_state(lay, rng)
        cut = [int(s) for s in rng.choice(np.arange(1, n + 1), size=int(rng.integers(1, n)), replace=False)]
        r = schmidt(st_, cut)
        worst_schmidt = max(worst_schmidt, float(np.linalg.norm(r.reconstruct(lay) - st_.amplitudes)))
        a = int(rng.integers(1, min(n, 5) + 1))
        b = int(rng.integers(1, min(n, 5) + 1))
        rho_a = partial_trace(st_, list(range(1, a + 1))) if a < n else DensityOperator.from_state(st_)
        other = random_state(SystemLayout.qubits(b + 1), rng)
        rho_b = partial_trace(other, list(range(1, b + 1)))
        add = von_neumann_entropy(rho_a.kron(rho_b)) - von_neumann_entropy(rho_a) - von_neumann_entropy(rho_b)
        worst_add = max(worst_add, abs(add))
        dim = 2 ** int(rng.integers(1, min(n, 6) + 1))
        k = int(rng.integers(1, min(dim, 8) + 1))
        while True:
            # precondition: Gram determinant of the normalized set above 1e-12
            vecs = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
            vecs /= np.linalg.norm(vecs, axis=0)
            if abs(np.linalg.det(vecs.conj().T @ vecs)) > 1e-12:
                break
        i = int(rng.integers(0, k))
        v = dual_vector(vecs, i)
        if k > 1:
            worst_dual = max(worst_dual, max(abs(np.vdot(v, vecs[:, j])) for j in range(k) if j != i))
    elapsed = time.perf_counter() - t0
    ok = worst_schmidt <= 1e-9 and worst_add <= 1e-9 and worst_dual <= 1e-10 and elapsed < 120
    record(10, ok, f"instances=1000 schmidt={worst_schmidt:.1e} additivity={worst_add:.1e} dual={worst_dual:.1e} time={elapsed:.1f}s")
    assert ok
