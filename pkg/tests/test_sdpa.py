from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from bcd_pep.certificate import (
    bordered_exact, dual_matrix_exact, lambda_schedule, schedule_from_lambda, to_float,
)
from bcd_pep.sdpa import SdpaFormatError, build_sdp, read_sdpa, schedule_point, write_sdpa


def test_dimensions():
    m = build_sdp(0, 1)
    assert (m.num_vars, m.block_sizes) == (2, (3, -3))
    m = build_sdp(1, 2)
    assert (m.num_vars, m.block_sizes) == (5, (6, -9))
    assert m.objective == (0.0, 0.0, 0.0, 0.0, 1.0)


def test_constant_matrix_smallest_case():
    # S = [[2l, 1-l, l], [1-l, 1, 1-l], [l, 1-l, t]]: the constant part is nonzero
    m = build_sdp(0, 1)
    F0 = m.block_matrices(0)
    assert np.array_equal(F0[0], -np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=float))
    assert np.array_equal(F0[1], -np.diag([0.0, 0.0, 1.0]))
    F1 = m.block_matrices(1)
    assert np.array_equal(F1[0], [[2, -1, 1], [-1, 0, -1], [1, -1, 0]])
    assert np.array_equal(F1[1], np.diag([1.0, 1.0, -1.0]))
    F2 = m.block_matrices(2)
    assert np.array_equal(F2[0], np.diag([0.0, 0.0, 1.0]))


def test_materialize_reproduces_certificate():
    for N, p in [(0, 1), (1, 2), (3, 3)]:
        s = lambda_schedule(N, p)
        S = to_float(bordered_exact(dual_matrix_exact(s), s.tau, s.t))
        blocks = build_sdp(N, p).materialize(schedule_point(s))
        # lambda is rounded before the affine map, so agreement is to a few ulps
        assert np.allclose(blocks[0], S, rtol=0, atol=4e-16)
        assert np.allclose(np.diag(blocks[1]), [float(v) for v in s.lam + s.tau], rtol=0, atol=1e-16)


def test_affine_in_lambda():
    # for any lambda the model reproduces the exactly assembled S, rounded once
    rng = np.random.default_rng(0)
    N, p = 2, 2
    m = build_sdp(N, p)
    for _ in range(100):
        lam = [Fraction(v).limit_denominator(10**6)
               for v in np.sort(rng.uniform(0, 1, (N + 1) * p))]
        t = Fraction(int(rng.integers(1, 100)), 100)
        s = schedule_from_lambda(N, p, lam, t)
        S = to_float(bordered_exact(dual_matrix_exact(s), s.tau, s.t))
        got = m.materialize([float(v) for v in lam] + [float(t)])[0]
        assert np.allclose(got, S, rtol=0, atol=4e-16)


def test_schedule_feasible_and_slack():
    for N in range(4):
        for p in range(1, 4):
            s = lambda_schedule(N, p)
            m = build_sdp(N, p)
            assert m.feasibility_slack(schedule_point(s)) >= -1e-8
            # lowering t makes the point infeasible
            y = schedule_point(s)
            y[-1] -= 1e-3
            assert m.feasibility_slack(y) < 0


def test_round_trip(tmp_path):
    for N in range(3):
        for p in range(1, 4):
            m = build_sdp(N, p)
            path = tmp_path / f"m_{N}_{p}.dat-s"
            write_sdpa(m, path)
            assert read_sdpa(path) == m


def test_file_layout(tmp_path):
    path = tmp_path / "m.dat-s"
    write_sdpa(build_sdp(1, 2), path)
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith('"')]
    body = lines[len(comments):]
    assert body[:3] == ["5", "2", "6 -9"]
    assert body[3] == "0 0 0 0 1"
    assert '"N: 1' in comments and '"p: 2' in comments
    for ln in body[4:]:
        v, b, r, c, _ = ln.split()
        assert int(r) <= int(c)


def test_reader_accepts_punctuation(tmp_path):
    path = tmp_path / "m.dat-s"
    path.write_text("* a comment\n1 =mdim\n1\n{2}\n{1.0}\n0,1,1,1,1.0\n1 1 1 2 2.0\n\n")
    m = read_sdpa(path)
    assert m.num_vars == 1 and m.block_sizes == (2,)
    assert m.entries == ((0, 1, 1, 1, 1.0), (1, 1, 1, 2, 2.0))


def test_reader_swaps_lower_triangle(tmp_path):
    path = tmp_path / "m.dat-s"
    path.write_text("1\n1\n2\n1\n1 1 2 1 3.0\n")
    assert read_sdpa(path).entries == ((1, 1, 1, 2, 3.0),)


@pytest.mark.parametrize("text,lineno,fieldname", [
    ("", 1, "number of variables"),
    ("x\n1\n2\n1\n", 1, "number of variables"),
    ("1\n2\n3\n1\n", 3, "block sizes"),
    ("2\n1\n3\n1\n", 4, "objective vector"),
    ("1\n1\n3\n1\n1 1 1\n", 5, "entry"),
    ("1\n1\n3\n1\n2 1 1 1 1.0\n", 5, "variable"),
    ("1\n1\n3\n1\n1 2 1 1 1.0\n", 5, "block"),
    ("1\n1\n3\n1\n1 1 4 1 1.0\n", 5, "row"),
    ("1\n1\n-3\n1\n1 1 1 2 1.0\n", 5, "column"),
    ("1\n1\n3\n1\n1 1 1 1 abc\n", 5, "value"),
])
def test_reader_errors(tmp_path, text, lineno, fieldname):
    path = tmp_path / "bad.dat-s"
    path.write_text(text)
    with pytest.raises(SdpaFormatError) as info:
        read_sdpa(path)
    assert info.value.lineno == lineno
    assert info.value.fieldname == fieldname


def test_validation():
    with pytest.raises(ValueError):
        build_sdp(-1, 1)
    with pytest.raises(ValueError):
        build_sdp(0, 2).materialize([0.5])
