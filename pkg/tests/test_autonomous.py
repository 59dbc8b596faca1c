import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from angval.autonomous import (
    QuadConfig,
    SchurSpec,
    admissible_sets,
    angular_value_irrational,
    angular_value_resonant_4d,
    column_echelon,
    ellipse_speed,
    integral_for_set,
    rational_approximation,
    rational_independence_gate,
    symmetry_check,
    w_infinity,
)
from angval.continuous import angular_integral
from angval.errors import (
    InvalidBlock,
    NotCoprime,
    RankDeficient,
    RationalityDetected,
)
from angval.grassmann import Subspace, metric_d2, subspace_from_spanning
from angval.linalg import ComplexBlock, RealBlock

SQRT2 = math.sqrt(2.0)


def a4_spec(omega2=1 / SQRT2, rho1=1 / 3, rho2=1 / 4):
    # two spiral blocks; real parts chosen decreasing so the ordering
    # invariant holds and the plateaus are trivial
    return SchurSpec(
        (
            ComplexBlock(beta=0.0, omega=1.0, rho=rho1),
            ComplexBlock(beta=-1.0, omega=omega2, rho=rho2),
        )
    )


def e(i, d=4):
    v = np.zeros((d, 1))
    v[i, 0] = 1.0
    return v


# ---------------------------------------------------------------- SchurSpec


def test_spec_assembly_and_flow():
    spec = SchurSpec((ComplexBlock(0.5, 2.0, 0.3), RealBlock(-1.0)))
    assert spec.dim == 3
    assert spec.complex_labels == (1,)
    a = spec.matrix()
    assert np.allclose(a[:2, :2], [[0.5, -2.0 / 0.3], [0.6, 0.5]])
    assert a[2, 2] == -1.0
    for t in (0.0, 0.37, 2.0):
        assert np.max(np.abs(spec.flow(t) - expm(t * a))) < 1e-10


def test_spec_rejects_increasing_real_parts():
    with pytest.raises(InvalidBlock):
        SchurSpec((RealBlock(0.0), ComplexBlock(1.0, 1.0, 0.5)))


def test_isolated_real_parts_flag():
    assert a4_spec().has_isolated_real_parts()
    shared = SchurSpec((RealBlock(0.0), ComplexBlock(0.0, 1.0, 0.5)))
    assert not shared.has_isolated_real_parts()


# ----------------------------------------------------------- echelon / Winf


def test_echelon_pivot_widths_on_coordinate_planes():
    spec = a4_spec()
    ech = column_echelon(e(0), spec)
    assert ech.pivots == (0,) and ech.widths == (1,)

    ech = column_echelon(np.hstack([e(0), e(1)]), spec)
    assert ech.pivots == (0,) and ech.widths == (2,)

    ech = column_echelon(np.hstack([e(0), e(2)]), spec)
    assert ech.pivots == (0, 1) and ech.widths == (1, 1)


def test_echelon_invariant_under_column_mixing():
    rng = np.random.default_rng(0)
    spec = a4_spec()
    w = rng.standard_normal((4, 2))
    ref = column_echelon(w, spec)
    for _ in range(5):
        g = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
        ech = column_echelon(w @ g, spec)
        assert ech.pivots == ref.pivots and ech.widths == ref.widths


def test_echelon_preserves_span():
    rng = np.random.default_rng(1)
    spec = SchurSpec(
        (ComplexBlock(1.0, 1.0, 0.5), RealBlock(0.0), ComplexBlock(-1.0, 2.0, 0.9))
    )
    w = rng.standard_normal((5, 3))
    ech = column_echelon(w, spec)
    v = subspace_from_spanning(w)
    u = subspace_from_spanning(ech.echelon)
    assert metric_d2(v, u) < 1e-9


def test_echelon_rank_deficient():
    spec = a4_spec()
    w = np.hstack([e(0), e(0)])
    with pytest.raises(RankDeficient):
        column_echelon(w, spec)


def test_w_infinity_keeps_plateau_supported_basis():
    spec = a4_spec()
    w = np.hstack([e(0), e(2)])
    assert np.allclose(w_infinity(w, spec), w)


def test_w_infinity_real_plateau_kept_in_full():
    spec = SchurSpec((RealBlock(1.0), RealBlock(1.0), ComplexBlock(0.0, 1.0, 0.5)))
    w = np.array([[1.0], [1.0], [0.0], [0.0]])
    assert np.allclose(w_infinity(w, spec), w)


def test_w_infinity_requires_isolated_real_parts():
    spec = SchurSpec((RealBlock(0.0), ComplexBlock(0.0, 1.0, 0.5)))
    with pytest.raises(InvalidBlock):
        w_infinity(np.eye(3)[:, :1], spec)


def test_w_infinity_decay_of_projector_distance():
    # d2(e^{tA}V, e^{tA}Vinf) should decay like e^{-t} for the gap-1 spec
    rng = np.random.default_rng(2)
    spec = a4_spec()
    w = rng.standard_normal((4, 2))
    winf = w_infinity(w, spec)
    ts = np.linspace(0.0, 20.0, 41)
    dists = []
    for t in ts:
        f = spec.flow(t)
        dists.append(
            metric_d2(subspace_from_spanning(f @ w), subspace_from_spanning(f @ winf))
        )
    dists = np.array(dists)
    assert dists[-1] < 1e-6
    mask = dists > 1e-10
    slope = np.polyfit(ts[mask], np.log(dists[mask]), 1)[0]
    assert slope < -0.8


# ------------------------------------------------------------- admissibles


def test_admissible_sets_match_known_4d_listing():
    spec = a4_spec()
    assert admissible_sets(1, spec) == [(1,), (2,)]
    assert admissible_sets(2, spec, maximal_only=True) == [(1, 2)]
    assert admissible_sets(3, spec) == [(1,), (2,)]
    # the unfiltered s=2 family also contains the trivial set
    assert admissible_sets(2, spec) == [(), (1, 2)]


def _all_specs_up_to(dmax):
    # every real/complex block pattern with total dimension <= dmax
    for k in range(1, dmax + 1):
        for kinds in itertools.product((1, 2), repeat=k):
            if sum(kinds) > dmax:
                continue
            blocks = []
            for i, dim in enumerate(kinds):
                beta = float(-i)
                if dim == 1:
                    blocks.append(RealBlock(beta))
                else:
                    blocks.append(ComplexBlock(beta, 1.0 + i, 0.5))
            yield SchurSpec(tuple(blocks))


def test_admissible_sets_complement_symmetry_exhaustive():
    for spec in _all_specs_up_to(8):
        d = spec.dim
        for s in range(1, d):
            assert admissible_sets(s, spec) == admissible_sets(d - s, spec)


# ------------------------------------------------------------ ellipse speed


def test_ellipse_speed_values():
    blk = ComplexBlock(0.0, 0.8, 0.25)
    assert abs(ellipse_speed(0.0, blk) - 0.25 * 0.8) < 1e-15
    assert abs(ellipse_speed(math.pi / 2, blk) - 0.8 / 0.25) < 1e-12
    tau = np.linspace(0, 3, 17)
    assert np.max(np.abs(ellipse_speed(tau, blk) - ellipse_speed(tau + math.pi, blk))) < 1e-12
    flat = ComplexBlock(0.0, 0.8, 1.0)
    assert np.max(np.abs(ellipse_speed(tau, flat) - 0.8)) < 1e-15


def test_ellipse_speed_mean_is_omega():
    mid = (np.arange(2048) + 0.5) * (math.pi / 2048)
    for rho in (1.0, 0.5, 0.1):
        blk = ComplexBlock(0.0, 1.3, rho)
        assert abs(float(ellipse_speed(mid, blk).mean()) - 1.3) < 1e-8


def test_ellipse_speed_rejects_real_block():
    with pytest.raises(InvalidBlock):
        ellipse_speed(0.0, RealBlock(1.0))


# -------------------------------------------------------------------- gate


def test_gate_detects_simple_ratio():
    verdict = rational_independence_gate([1.0, 0.5])
    assert not verdict.independent
    assert verdict.witnesses == ((0, 1, 1, 2),)


def test_gate_passes_sqrt2_ratio():
    assert rational_independence_gate([1.0, 1 / SQRT2]).independent
    assert rational_independence_gate([1.0, 1 / SQRT2], qmax=10**6).independent


def test_gate_single_frequency_independent():
    assert rational_independence_gate([0.7]).independent


def test_rational_approximation_recovers_fractions():
    assert rational_approximation(float(3) / 7, qmax=20, tol=1e-9) == (3, 7)
    assert rational_approximation(1 / SQRT2, qmax=20, tol=1e-9) is None


def test_rationality_error_carries_witnesses():
    spec = a4_spec(omega2=0.5)
    with pytest.raises(RationalityDetected) as exc:
        angular_value_irrational(2, spec)
    assert exc.value.witnesses == [(1, 2, 1, 2)]


# --------------------------------------------------------- irrational value


def test_headline_two_frequency_value():
    res = angular_value_irrational(2, a4_spec())
    assert abs(res.value - 1.2693394) < 1e-5
    assert res.argmax_set == (1, 2)
    assert res.error < 1e-6


def test_single_width_sets_give_max_omega_exactly():
    spec = a4_spec()
    for s in (1, 3):
        res = angular_value_irrational(s, spec)
        assert res.value == 1.0
        assert res.error == 0.0


def test_all_real_spec_gives_zero():
    spec = SchurSpec((RealBlock(1.0), RealBlock(0.0), RealBlock(-2.0)))
    res = angular_value_irrational(1, spec)
    assert res.value == 0.0


def test_lower_bound_on_random_specs():
    rng = np.random.default_rng(5)
    for _ in range(100):
        omegas = rng.uniform(0.2, 3.0, size=2)
        rhos = rng.uniform(0.05, 1.0, size=2)
        spec = SchurSpec(
            (
                ComplexBlock(0.0, omegas[0], rhos[0]),
                ComplexBlock(-1.0, omegas[1], rhos[1]),
            )
        )
        res = angular_value_irrational(
            2, spec, QuadConfig(panels=512), override_gate=True
        )
        assert res.value >= max(omegas) - 1e-8


def test_set_inclusion_monotonicity():
    rng = np.random.default_rng(6)
    spec = SchurSpec(
        (
            ComplexBlock(0.0, 1.0, 0.4),
            ComplexBlock(-1.0, rng.uniform(0.3, 2.0), 0.7),
            ComplexBlock(-2.0, rng.uniform(0.3, 2.0), 0.2),
        )
    )
    quad = QuadConfig(panels=512, panels_3d=128)
    singles = [integral_for_set(spec, (j,), quad).value for j in (1, 2, 3)]
    pair = integral_for_set(spec, (1, 2), quad).value
    triple = integral_for_set(spec, (1, 2, 3), quad).value
    assert pair >= max(singles[0], singles[1]) - 1e-9
    assert triple >= pair - 2e-3  # 3d rule is coarser than the 2d one


def block_lines(a, b):
    # one line in each 2x2 block: the stratum whose echelon form has two
    # width-1 pivots, which is where the angular value is attained
    w = np.zeros((4, 2))
    w[0, 0], w[1, 0] = math.cos(a), math.sin(a)
    w[2, 1], w[3, 1] = math.cos(b), math.sin(b)
    return Subspace(w)


def test_time_average_matches_quadrature():
    # short-horizon version of the ergodic consistency check
    spec = a4_spec()
    want = angular_value_irrational(2, spec).value
    got = angular_integral(spec.system(), block_lines(0.3, 1.1), 0.0, 2000.0, 0.01)
    assert abs(got / 2000.0 - want) < 5e-2


def test_generic_plane_average_decays():
    # a fully generic plane has a width-2 pivot in the leading block, falls
    # into the invariant block plane, and averages to zero
    spec = a4_spec()
    rng = np.random.default_rng(7)
    v0 = subspace_from_spanning(rng.standard_normal((4, 2)))
    got = angular_integral(spec.system(), v0, 0.0, 2000.0, 0.01) / 2000.0
    assert got < 1e-2


# ----------------------------------------------------------- resonant value


def test_resonant_constant_speeds():
    res = angular_value_resonant_4d(1.0, 1, 2, rho1=1.0, rho2=1.0)
    assert abs(res.value - 1.0) < 1e-12
    assert np.max(np.abs(res.l_values - 1.0)) < 1e-12


def test_resonant_lower_bound():
    for (p, q) in ((1, 1), (1, 2), (2, 3), (7, 10)):
        res = angular_value_resonant_4d(1.0, p, q, rho1=1 / 3, rho2=1 / 4)
        omega2 = p / q
        assert res.value >= max(1.0, omega2) - 1e-8


def test_resonant_dominates_irrational_formula():
    res = angular_value_resonant_4d(1.0, 1, 2, rho1=1 / 3, rho2=1 / 4)
    irr = angular_value_irrational(2, a4_spec(omega2=0.5), override_gate=True)
    assert res.value >= irr.value - 1e-3


def test_resonant_rejects_bad_orders():
    with pytest.raises(NotCoprime):
        angular_value_resonant_4d(1.0, 2, 4, 0.5, 0.5)
    with pytest.raises(ValueError):
        angular_value_resonant_4d(1.0, 0, 3, 0.5, 0.5)
    with pytest.raises(ValueError):
        angular_value_resonant_4d(0.0, 1, 2, 0.5, 0.5)


def test_resonant_grid_shape_and_argmax_location():
    res = angular_value_resonant_4d(1.0, 1, 3, 0.5, 0.9, t_points=180)
    assert len(res.t_values) == 180 and len(res.l_values) == 180
    assert 0.0 <= res.t_argmax < 2 * math.pi
    assert res.value >= res.l_values.max()


# ---------------------------------------------------------------- symmetry


def test_symmetry_check_on_4d_spec():
    spec = a4_spec()
    assert symmetry_check(1, spec)
    assert symmetry_check(2, spec)


def test_symmetry_check_all_real():
    spec = SchurSpec((RealBlock(1.0), RealBlock(0.0)))
    assert symmetry_check(1, spec)
