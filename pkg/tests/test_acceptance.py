"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import time
from contextlib import contextmanager
from fractions import Fraction
from math import ceil

import numpy as np
import pytest

from termsim.engine import EngineConfig, base_2k, lac, lm, run_layer, simulate
from termsim.numeric import (
    WORD_MIN,
    booth_encode,
    positional_encode,
    quantize_array,
    reconstruct,
    term_counts,
    term_table,
)
from termsim.pe import (
    BUCKETS,
    concat_groups_array,
    pe_process_group,
    pe_process_groups,
    reduce_groups_array,
    step4_concat_groups,
    step5_reduce,
)
from termsim.policy import ALL_POLICIES, PolicyKind as P, geomean, policy_report
from termsim.profiles import benchmark_suite
from termsim.workload import (
    Layer,
    LayerShape,
    Network,
    PrecisionProfile,
    gen_synthetic,
    reference_conv,
)
from oracles import naive_psum
from toys import TOY_ACTS_3B, TOY_BASE, TOY_LAC, TOY_LM, TOY_WEIGHTS_3B, toy_layer

pytestmark = pytest.mark.acceptance

ALL_WORDS = np.arange(WORD_MIN, -WORD_MIN, dtype=np.int64)


@contextmanager
def criterion(capsys, number, title):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        with capsys.disabled():
            print(f"\ncriterion {number} FAIL: {title}: {type(exc).__name__}: {exc}")
        raise
    with capsys.disabled():
        print(f"\ncriterion {number} PASS: {title} ({time.perf_counter() - start:.2f}s)")


def random_network(seed, rng, layers=3):
    pa, pw = (int(p) for p in rng.integers(2, 17, 2))
    shapes = [
        LayerShape(int(rng.integers(1, 40)), 6, 6, int(rng.integers(1, 20)), 3, 3),
        LayerShape(int(rng.integers(1, 24)), 5, 7, int(rng.integers(1, 12)), 2, 3, stride=2),
        LayerShape(int(rng.integers(1, 64)), 1, 1, int(rng.integers(1, 30)), 1, 1),
    ][:layers]
    out = []
    for i, shape in enumerate(shapes):
        density = float(rng.uniform(0.05, 1.0))
        acts = gen_synthetic(shape.activation_shape, density, pa, seed=(seed, i, 0),
                             distribution=("uniform", "laplace")[i % 2])
        wts = gen_synthetic(shape.weight_shape, float(rng.uniform(0.2, 1.0)), pw, seed=(seed, i, 1))
        out.append(Layer(f"l{i}", shape, acts, wts))
    return Network(f"random{seed}", tuple(out), PrecisionProfile((pa,) * len(out), pw))


def test_criterion_1_worked_example(capsys):
    with criterion(capsys, 1, "worked example: LAC 16/6, LM 16/9 over bit-parallel"):
        start = time.perf_counter()
        layer = toy_layer()
        base = run_layer(layer, TOY_BASE).total_cycles
        lac_report = run_layer(layer, TOY_LAC)
        assert (base, lac_report.groups, lac_report.total_cycles) == (16, 1, 6)
        assert Fraction(base, lac_report.total_cycles) == Fraction(16, 6)
        assert f"{float(Fraction(16, 6)):.2f}" == "2.67"

        small = toy_layer(TOY_ACTS_3B, TOY_WEIGHTS_3B, precision=3)
        base_small = run_layer(small, TOY_BASE).total_cycles
        lm_cycles = run_layer(small, TOY_LM, (3, 3)).total_cycles
        assert (base_small, lm_cycles) == (16, 9)
        assert Fraction(base_small, lm_cycles) == Fraction(16, 9)
        assert f"{float(Fraction(16, 9)):.2f}" == "1.78"
        for lay in (layer, small):
            ref = reference_conv(lay.shape, lay.activations, lay.weights).reshape(4, -1)
            for cfg in (TOY_BASE, TOY_LAC):
                assert np.array_equal(run_layer(lay, cfg).per_layer[0].outputs, ref)
        assert time.perf_counter() - start < 1.0


def test_criterion_2_datapath_exactness(capsys):
    with criterion(capsys, 2, "PE accumulator equals direct multiply-accumulate over 1e5 groups"):
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        n = 100_000
        a = rng.integers(WORD_MIN, -WORD_MIN, (n, 16))
        w = rng.integers(WORD_MIN, -WORD_MIN, (n, 16))
        # a fifth of the lanes zero, so absent term lists are exercised too
        a[rng.random((n, 16)) < 0.2] = 0
        a[:16] = WORD_MIN
        w[:16] = WORD_MIN
        direct = np.einsum("gl,gl->g", a, w)
        for encoding in ("booth", "positional"):
            acc, cycles = pe_process_groups(a, w, encoding)
            assert np.array_equal(acc, direct), encoding
            expected = (term_counts(a, encoding) * term_counts(w, encoding)).max(axis=1)
            assert np.array_equal(cycles, expected)
        for g in rng.choice(n, 1500, replace=False).tolist() + list(range(4)):
            acts = [booth_encode(int(v)) for v in a[g]]
            wts = [booth_encode(int(v)) for v in w[g]]
            assert pe_process_group(acts, wts)[0] == int(direct[g])
            acts = [positional_encode(int(v)) for v in a[g]]
            wts = [positional_encode(int(v)) for v in w[g]]
            assert pe_process_group(acts, wts)[0] == int(direct[g])
        assert time.perf_counter() - start < 60


def boundary_histograms():
    rows = [np.full(BUCKETS, 16), np.full(BUCKETS, -16), np.zeros(BUCKETS, int)]
    for j in range(BUCKETS):
        for v in range(-16, 17):
            row = np.zeros(BUCKETS, int)
            row[j] = v
            rows.append(row)
    alt = np.where(np.arange(BUCKETS) % 2 == 0, 16, -16)
    rows += [alt, -alt]
    for k in range(1, 17):
        rows += [np.where(np.arange(BUCKETS) % 2 == 0, k, -k), np.where(np.arange(BUCKETS) % 2, k, -k)]
        rows += [np.where(np.arange(BUCKETS) % 6 == r, k, -k) for r in range(6)]
    return np.stack(rows).astype(np.int64)


def test_criterion_3_adder_tree(capsys):
    with criterion(capsys, 3, "concatenation adder tree equals shift-add over 1e6 histograms"):
        rng = np.random.default_rng(3)
        weights = np.int64(1) << np.arange(BUCKETS, dtype=np.int64)
        uniform = rng.integers(-16, 17, (700_000, BUCKETS))
        sparse = rng.integers(-16, 17, (300_000, BUCKETS)) * (rng.random((300_000, BUCKETS)) < 0.15)
        hist = np.concatenate([uniform, sparse, boundary_histograms()])
        assert len(hist) >= 1_000_000
        for chunk in np.array_split(hist, 10):
            got = reduce_groups_array(concat_groups_array(chunk))
            assert np.array_equal(got, chunk @ weights)
        boundary = boundary_histograms()
        sample = np.concatenate([boundary, hist[rng.choice(len(hist), 3000, replace=False)]])
        for row in sample.tolist():
            assert step5_reduce(step4_concat_groups(row)) == naive_psum(row)
        assert naive_psum([-16] * BUCKETS) == -16 * (2 ** 32 - 1)


def test_criterion_4_encoding_properties(capsys):
    with criterion(capsys, 4, "exhaustive encoding properties over all 16-bit words"):
        start = time.perf_counter()
        for v in ALL_WORDS.tolist():
            assert reconstruct(booth_encode(v)) == v
            assert reconstruct(positional_encode(v)) == v
        for encoding in ("booth", "positional"):
            table = term_table(encoding)
            idx = ALL_WORDS & 0xFFFF
            mags, signs, counts = table.magnitudes[idx], table.signs[idx], table.counts[idx]
            live = np.arange(table.width) < counts[:, None]
            terms = np.where(live, np.where(signs == 1, -1, 1) * (np.int64(1) << mags), 0)
            assert np.array_equal(terms.sum(axis=1), ALL_WORDS)
        booth = term_counts(ALL_WORDS, "booth")
        assert np.all(booth <= term_counts(ALL_WORDS, "positional"))
        for p in range(1, 17):
            counts = term_counts(quantize_array(ALL_WORDS, p), "booth")
            assert counts.max() <= ceil((p + 1) / 2), p
        assert time.perf_counter() - start < 60


def test_criterion_5_engine_agreement(capsys):
    with criterion(capsys, 5, "BASE, LM and LAC checksums agree on 20 random multi-layer workloads"):
        rng = np.random.default_rng(5)
        cfgs = [base_2k(), lm(8), lm(16), lac(128), lac(512),
                EngineConfig("LAC", filters=8, encoding="positional")]
        for seed in range(20):
            net = random_network(seed, rng)
            comp = simulate(net, cfgs)
            expected = sum(int(reference_conv(l.shape, l.activations, l.weights).sum())
                           for l in net.layers)
            assert {r.checksum for r in comp.reports} == {expected}, seed
            for k, layer in enumerate(net.layers):
                per_layer = {r.per_layer[k].checksum for r in comp.reports}
                assert per_layer == {comp.oracle_checksums[layer.name]}


def test_criterion_6_policy_dominance(capsys):
    with criterion(capsys, 6, "policy dominance chain and realized LAC <= At+Wt on 60 seeds"):
        rng = np.random.default_rng(6)
        for seed in range(60):
            net = random_network(1000 + seed, rng, layers=int(rng.integers(1, 4)))
            report = policy_report(net, ALL_POLICIES)
            comp = simulate(net, [lac(128), lac(1024)], with_potential=True)
            for layer in [l.name for l in net.layers]:
                s = {p: report.layer_ratio(layer, p).speedup for p in ALL_POLICIES}
                assert s[P.A_W] >= s[P.A] and s[P.AP_WP] >= s[P.AP]
                assert s[P.AB_WB] >= s[P.AB] and s[P.AT_WT] >= s[P.AT]
                assert s[P.AT] >= s[P.AB] and s[P.AT_WT] >= s[P.AB_WB]
                for cfg in ("LAC_128", "LAC_1K"):
                    assert comp.speedup(cfg, layer) <= comp.potentials[layer]
            for cfg in ("LAC_128", "LAC_1K"):
                assert comp.speedup(cfg) <= comp.potentials["total"]


def test_criterion_7_scaling_trend(capsys):
    with criterion(capsys, 7, "LAC_1K > LAC_512 > LAC_256 > LAC_128 > 1 with sublinear scaling"):
        names = ["LAC_128", "LAC_256", "LAC_512", "LAC_1K"]
        cfgs = [lac(128), lac(256), lac(512), lac(1024)]
        per_network = []
        for net in benchmark_suite(seed=0):
            comp = simulate(net, cfgs)
            speedups = [comp.speedup(n) for n in names]
            per_network.append(speedups)
            assert all(a < b for a, b in zip(speedups, speedups[1:])), net.name
            assert all(b < 2 * a for a, b in zip(speedups, speedups[1:])), net.name
        means = [geomean(col) for col in zip(*per_network)]
        with capsys.disabled():
            print("\n  geomean speedup vs BASE_2K: "
                  + ", ".join(f"{n} {m:.2f}" for n, m in zip(names, means)))
        assert means[0] > 1
        assert all(a < b < 2 * a for a, b in zip(means, means[1:]))
