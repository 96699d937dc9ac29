import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xyresponse import correlators as cr
from xyresponse.correlators import (
    Conventions,
    contraction_table,
    correlator_set,
    dispersion,
    g_contraction,
    majorana_expectation,
    spontaneous_magnetization,
    thermal_factor,
    transverse_magnetization,
    use_conventions,
    x_string,
    xx_correlator,
    xz_correlator,
    yy_correlator,
    zx_correlator,
    zz_correlator,
)
from xyresponse.errors import ConvergenceFailure, InvalidParameters
from xyresponse.oracle import OracleConfig, ground_state_info, oracle_contraction, oracle_correlators
from xyresponse.params import INF, ModelParams

# exact-diagonalization values (even-parity ground state / Gibbs state)
ED_N10 = dict(sz=0.4531534582502042, xx=-0.7592755244857289, yy=-0.11237997525572047, zz=0.12002069207013898)
ED_N8_THERMAL_R2 = dict(sz=0.9161645111106022, xx=0.1266338495977335, yy=-0.022393277082052396, zz=0.8428089225305179)


def test_dispersion_values():
    assert dispersion(0.0, ModelParams(0.5, 1.0)) == 0.0
    assert np.allclose(dispersion(np.linspace(0, math.pi, 7), ModelParams(1.0, 0.0)), 1.0)
    assert dispersion(0.0, ModelParams(0.3, 1.7)) == pytest.approx(0.7)


def test_dispersion_matches_spectrum():
    # many-body levels rebuilt from single modes reproduce the full ED spectrum
    p = ModelParams(0.4, 0.7, size=8)
    from xyresponse.oracle import build_hamiltonian

    ed = np.linalg.eigvalsh(build_hamiltonian(OracleConfig(8, 0.4, 0.7)))
    assert np.allclose(cr.free_fermion_spectrum(p), ed, atol=1e-10)
    # phi = pi/2 is a periodic-grid mode at N = 8: adding a pair costs 4 w
    assert 4 * dispersion(math.pi / 2, p) == pytest.approx(4 * 0.8062257748298548)


def test_thermal_factor():
    assert thermal_factor(2.0, 0.0) == 1.0
    assert thermal_factor(0.0, 0.0) == 1.0
    assert thermal_factor(0.0, 0.5) == 0.0
    assert thermal_factor(1.0, 0.5) == pytest.approx(0.76159415595, abs=1e-10)
    with pytest.raises(InvalidParameters):
        thermal_factor(-1.0, 0.5)


def test_zero_field_ising_contraction_is_a_shift():
    t = contraction_table(ModelParams(1.0, 0.0), kmax=4)
    vals = {k: t(k) for k in range(-4, 5)}
    nonzero = [k for k, v in vals.items() if abs(v) > 1e-10]
    assert len(nonzero) == 1
    assert abs(vals[nonzero[0]]) == pytest.approx(1.0, abs=1e-10)


def test_contraction_large_field():
    assert abs(g_contraction(0, ModelParams(0.5, 1e3))) == pytest.approx(1.0, abs=1e-6)
    assert g_contraction(0, ModelParams(0.5, 1e3)) < 0


def test_contraction_against_oracle():
    cfg = OracleConfig(8, 0.4, 0.8)
    p = ModelParams(0.4, 0.8, size=8)
    for k in range(-3, 4):
        assert g_contraction(k, p) == pytest.approx(oracle_contraction(cfg, k), abs=1e-10)
    assert g_contraction(1, p) == pytest.approx(0.6998980953041718, abs=1e-12)


def test_contraction_bounded():
    t = contraction_table(ModelParams(0.3, 0.95, 0.2), kmax=16)
    assert np.all(np.abs(t.values) <= 1 + 1e-12)
    assert t.kmax >= 16


def test_transverse_magnetization_examples():
    assert transverse_magnetization(ModelParams(0.5, 1e3)) == pytest.approx(1.0, abs=1e-6)
    assert transverse_magnetization(ModelParams(0.0, 0.0)) == pytest.approx(0.0, abs=1e-10)
    assert transverse_magnetization(ModelParams(0.4, 0.7, size=10)) == pytest.approx(ED_N10["sz"], abs=1e-8)


def test_transverse_magnetization_increases_with_field():
    hs = np.linspace(0.0, 2.0, 21)
    sz = [transverse_magnetization(ModelParams(0.5, h)) for h in hs]
    assert np.all(np.diff(sz) > 0)


def test_zero_field_ising_correlators():
    p = ModelParams(1.0, 0.0)
    for r in (1, 2, 3, 4):
        assert xx_correlator(r, p) == pytest.approx((-1) ** r, abs=1e-10)
    assert zz_correlator(3, p) == pytest.approx(0.0, abs=1e-8)
    assert zz_correlator(1, ModelParams(0.5, 1e3)) == pytest.approx(1.0, abs=1e-6)


def test_correlators_against_frozen_oracle():
    c = correlator_set(1, ModelParams(0.4, 0.7, size=10))
    for k, v in ED_N10.items():
        assert getattr(c, k) == pytest.approx(v, abs=1e-8)
    assert c.mx == c.xz == c.zx == 0.0
    t = correlator_set(2, ModelParams(0.5, 1.5, 0.5, size=8))
    for k, v in ED_N8_THERMAL_R2.items():
        assert getattr(t, k) == pytest.approx(v, abs=1e-8)


@pytest.mark.parametrize("N", [6, 8, 10])
@pytest.mark.parametrize("gamma", [0.3, 0.5, 1.0])
@pytest.mark.parametrize("h", [0.3, 1.0, 1.7])
@pytest.mark.parametrize("T", [0.0, 0.5])
def test_oracle_equivalence_grid(N, gamma, h, T):
    p = ModelParams(gamma, h, T, N)
    cfg = OracleConfig(N, gamma, h, T)
    for r in (1, 2):
        a = correlator_set(r, p).as_dict()
        b = oracle_correlators(cfg, r).as_dict()
        for k in a:
            assert a[k] == pytest.approx(b[k], abs=1e-8), k


def test_thermal_zero_modes_at_critical_field():
    # h = 1 puts an exact zero mode on the periodic grid; gamma = 0 makes many
    for gamma, h in [(0.5, 1.0), (0.0, 0.5), (0.0, 1.0)]:
        p = ModelParams(gamma, h, 0.3, 8)
        cfg = OracleConfig(8, gamma, h, 0.3)
        for r in (1, 3):
            a, b = correlator_set(r, p).as_dict(), oracle_correlators(cfg, r).as_dict()
            assert max(abs(a[k] - b[k]) for k in a) < 1e-10


def test_ground_energy_matches_sector_energy():
    for N in (4, 6, 8, 10):
        cfg = OracleConfig(N, 0.5, 1.0)
        assert ground_state_info(cfg).energy == pytest.approx(cr.sector_energy(cfg.params), abs=1e-10)


def test_finite_chain_approaches_thermodynamic_limit():
    p_inf, p_n = ModelParams(0.5, 0.5), ModelParams(0.5, 0.5, size=2000)
    for r in (1, 2, 3, 4):
        a, b = correlator_set(r, p_inf).as_dict(), correlator_set(r, p_n).as_dict()
        assert max(abs(a[k] - b[k]) for k in a) < 1e-6


def test_small_temperature_limit():
    for h in (0.5, 1.6):
        a = correlator_set(2, ModelParams(0.5, h)).as_dict()
        b = correlator_set(2, ModelParams(0.5, h, 1e-6)).as_dict()
        assert max(abs(a[k] - b[k]) for k in a) < 1e-5


def test_cluster_decomposition_ordered_phase():
    p = ModelParams(0.5, 0.5)
    m2 = spontaneous_magnetization(p.with_(sector="broken")) ** 2
    gaps = [abs(xx_correlator(r, p) - m2) for r in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-8


def test_infinite_separation_limits():
    dis = correlator_set(INF, ModelParams(0.4, 1.5))
    assert abs(dis.xx) < 1e-8 and abs(dis.yy) < 1e-8
    assert dis.zz == pytest.approx(dis.sz**2, abs=1e-8)
    ordered = correlator_set(INF, ModelParams(0.4, 0.5))
    assert ordered.xx > 0.5
    assert ordered.mx == 0.0
    with pytest.raises(InvalidParameters):
        correlator_set(INF, ModelParams(0.4, 0.5, size=10))


def test_spontaneous_magnetization_examples():
    assert spontaneous_magnetization(ModelParams(1.0, 0.0, sector="broken")) == pytest.approx(1.0, abs=1e-10)
    g, hf = 0.4, math.sqrt(0.84)
    # product state at the factorizing field: sin^2(theta) = 2 gamma / (1 + gamma)
    assert spontaneous_magnetization(ModelParams(g, hf, sector="broken")) == pytest.approx(
        math.sqrt(2 * g / (1 + g)), abs=1e-8
    )
    assert spontaneous_magnetization(ModelParams(0.5, 1.2)) == 0.0


def test_spontaneous_magnetization_against_closed_form():
    for g, h in [(0.5, 0.5), (0.4, 0.9), (0.8, 0.3)]:
        exact = math.sqrt(2 * math.sqrt(g) * (1 - h * h) ** 0.25 / (1 + g))
        assert spontaneous_magnetization(ModelParams(g, h, sector="broken")) == pytest.approx(exact, abs=1e-8)


def test_spontaneous_magnetization_vanishes_toward_critical_field():
    ms = [spontaneous_magnetization(ModelParams(0.5, h, sector="broken")) for h in (0.8, 0.9, 0.95, 0.98)]
    assert all(b < a for a, b in zip(ms, ms[1:]))
    assert ms[-1] > 0


def test_spontaneous_magnetization_unconverged_close_to_critical_field():
    # correlation length ~ 10^3 exceeds the r = 512 doubling cap
    with pytest.raises(ConvergenceFailure):
        spontaneous_magnetization(ModelParams(0.5, 0.999, sector="broken"))


def test_xz_at_factorizing_field_is_product():
    g, hf = 0.4, math.sqrt(0.84)
    p = ModelParams(g, hf, sector="broken")
    mx, sz = math.sqrt(2 * g / (1 + g)), math.sqrt((1 - g) / (1 + g))
    assert xz_correlator(1, p) == pytest.approx(mx * sz, abs=1e-8)
    assert zx_correlator(1, p) == pytest.approx(-mx * sz, abs=1e-8)
    assert zx_correlator(2, p) == pytest.approx(mx * sz, abs=1e-8)


def test_xz_large_separation_factorizes():
    p = ModelParams(0.5, 0.6, sector="broken")
    m, sz = spontaneous_magnetization(p), transverse_magnetization(p.symmetric())
    assert xz_correlator(40, p) == pytest.approx(m * sz, abs=1e-7)
    assert xz_correlator(INF, p) == pytest.approx(m * sz, abs=1e-12)


def test_xz_requires_broken_sector():
    with pytest.raises(InvalidParameters):
        xz_correlator(1, ModelParams(0.5, 0.6))


def test_majorana_strings_reproduce_toeplitz():
    t = contraction_table(ModelParams(0.4, 0.7), kmax=8)
    for r in (1, 2, 5):
        assert majorana_expectation(t, x_string(0, r)) == pytest.approx(cr._xx(t, r), abs=1e-12)


def test_x_string_skips_sigma_z():
    assert x_string(0, 2) == [("B", 0), ("A", 1), ("B", 1), ("A", 2)]
    assert x_string(0, 2, skip=(1,)) == [("B", 0), ("A", 2)]
    with pytest.raises(ValueError):
        x_string(0, 2, skip=(2,))


def test_odd_chain_rejected():
    with pytest.raises(InvalidParameters):
        correlator_set(1, ModelParams(0.5, 0.5, size=7))


def test_separation_validated():
    with pytest.raises(InvalidParameters):
        correlator_set(0, ModelParams(0.5, 0.5))
    with pytest.raises(InvalidParameters):
        correlator_set(8, ModelParams(0.5, 0.5, size=8))


def test_corrupted_convention_is_visible():
    p = ModelParams(0.4, 0.7, size=10)
    with use_conventions(Conventions(pairing_sign=-1.0)):
        bad = correlator_set(1, p)
    assert abs(bad.xx - ED_N10["xx"]) > 1e-3
    assert correlator_set(1, p).xx == pytest.approx(ED_N10["xx"], abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.0, 1.0),
    st.floats(0.0, 2.5),
    st.sampled_from([0.0, 0.05, 0.5, 2.0]),
    st.sampled_from([4, 6, 12, INF]),
    st.integers(1, 3),
)
def test_correlators_bounded(gamma, h, T, N, r):
    c = correlator_set(r, ModelParams(gamma, h, T, N))
    for v in c.as_dict().values():
        assert -1 - 1e-10 <= v <= 1 + 1e-10
