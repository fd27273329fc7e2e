import math

import numpy as np
import pytest

from sqdforge.benchstats import (
    DEFAULT_ZETA_LADDER,
    EnergyError,
    Reaction,
    ReactionTable,
    SampleDiagnostics,
    StatProfile,
    ccsd_param_count,
    energy_errors,
    reaction_energy_errors,
    sample_diagnostics,
    stat_profile,
    subspace_plan,
)
from sqdforge.errors import ConfigurationError, MissingDataError, ShapeError
from sqdforge.lucj import SampleSet

from _oracles import quantile_positions


# --------------------------------------------------------- ccsd_param_count


def test_ccsd_count_no_virtuals():
    assert ccsd_param_count(3, 3, 3) == 1
    assert ccsd_param_count(2, 2, 2) == 1


def test_ccsd_count_unrestricted_example():
    assert ccsd_param_count(2, 1, 3) == 9


def test_ccsd_count_closed_shell_example():
    assert ccsd_param_count(1, 1, 2) == 2


def test_ccsd_count_closed_shell_matches_comb_form():
    for n, m in ((2, 5), (3, 7), (4, 10)):
        v = m - n
        expected = 1 + n * v + math.comb(n, 2) * math.comb(v, 2)
        assert ccsd_param_count(n, n, m) == expected


def test_ccsd_count_spin_swap_symmetric():
    assert ccsd_param_count(3, 1, 5) == ccsd_param_count(1, 3, 5)


def test_ccsd_count_rejects_overfilled():
    with pytest.raises(ConfigurationError):
        ccsd_param_count(4, 1, 3)


# ------------------------------------------------------------ subspace_plan


def test_plan_identity_fraction():
    assert subspace_plan(100, (1.0,)) == [100]


def test_plan_default_ladder():
    assert subspace_plan(9) == [3, 5, 9, 18, 36]
    assert DEFAULT_ZETA_LADDER == (0.25, 0.50, 1.00, 2.00, 4.00)


def test_plan_clamps_to_full_dimension():
    assert subspace_plan(9, full_dim=20) == [3, 5, 9, 18, 20]


def test_plan_floor_is_one():
    assert subspace_plan(1, (0.25,)) == [1]


def test_plan_validation():
    with pytest.raises(ConfigurationError):
        subspace_plan(0)
    with pytest.raises(ConfigurationError):
        subspace_plan(5, (0.5, -1.0))


# ------------------------------------------------------- sample_diagnostics


def test_diag_uniform_baseline_small():
    samples = SampleSet(entries={"1010": 1}, n_shots=1, M=2)
    diag = sample_diagnostics(samples, 1, 1, 2)
    assert diag.p_unif == pytest.approx(0.25)


def test_diag_uniform_baseline_brute_force():
    m, n_alpha, n_beta = 3, 2, 1
    hits = 0
    for word in range(4**m):
        text = format(word, f"0{2 * m}b")
        if text[:m].count("1") == n_alpha and text[m:].count("1") == n_beta:
            hits += 1
    samples = SampleSet(entries={}, n_shots=0, M=m)
    diag = sample_diagnostics(samples, n_alpha, n_beta, m)
    assert diag.p_unif == pytest.approx(hits / 4**m)


def test_diag_all_correct():
    samples = SampleSet(entries={"1010": 3, "0101": 2}, n_shots=5, M=2)
    diag = sample_diagnostics(samples, 1, 1, 2)
    assert diag.p_hw == 1.0
    assert diag.f_sz == 0.0


def test_diag_alpha_correct_beta_never():
    samples = SampleSet(entries={"1000": 4}, n_shots=4, M=2)
    diag = sample_diagnostics(samples, 1, 1, 2)
    assert diag.f_sz == 1.0
    assert diag.p_hw == 0.0


def test_diag_weighted_mix():
    # "1100" has the right total electron count but both halves are wrong,
    # so it must not count toward p_hw.
    entries = {"1010": 3, "1100": 1}
    samples = SampleSet(entries=entries, n_shots=4, M=2)
    diag = sample_diagnostics(samples, 1, 1, 2)
    assert diag.p_hw == pytest.approx(0.75)
    assert diag.f_sz == pytest.approx(0.75 - 0.75)


def test_diag_wrong_orbital_count():
    samples = SampleSet(entries={"1010": 1}, n_shots=1, M=2)
    with pytest.raises(ShapeError):
        sample_diagnostics(samples, 1, 1, 3)


def test_diag_field_ranges_enforced():
    with pytest.raises(ConfigurationError):
        SampleDiagnostics(p_hw=1.2, p_unif=0.5, f_sz=0.0)
    with pytest.raises(ConfigurationError):
        SampleDiagnostics(p_hw=0.5, p_unif=0.5, f_sz=-1.5)


# ----------------------------------------------------------- energy tables


def test_energy_errors_self_reference():
    energies = {"h2o": {"hf": -76.0, "fci": -76.2}, "nh3": {"hf": -56.1, "fci": -56.3}}
    table = energy_errors(energies, "fci")
    for species in energies:
        assert table[species]["fci"] == EnergyError(0.0, 0.0)


def test_energy_errors_hand_values():
    energies = {"a": {"x": -1.0, "ref": -1.5}, "b": {"x": -2.0, "ref": -1.8}}
    table = energy_errors(energies, "ref")
    assert table["a"]["x"].signed == pytest.approx(0.5)
    assert table["a"]["x"].absolute == pytest.approx(0.5)
    assert table["b"]["x"].signed == pytest.approx(-0.2)
    assert table["b"]["x"].absolute == pytest.approx(0.2)


def test_energy_errors_sign_convention():
    table = energy_errors({"s": {"x": -0.9, "ref": -1.0}}, "ref")
    assert table["s"]["x"].signed > 0


def test_energy_errors_missing_reference():
    with pytest.raises(MissingDataError) as info:
        energy_errors({"a": {"x": -1.0}}, "ref")
    assert info.value.species == "a"
    assert info.value.method == "ref"


def test_reaction_identity_is_zero():
    table = ReactionTable(
        reactions=(
            Reaction(id="r1", reaction_class="ISO", reactants=(("a", 1),), products=(("a", 1),)),
        )
    )
    energies = {"a": {"x": -3.0, "y": -2.5, "ref": -2.9}}
    per_reaction, class_means = reaction_energy_errors(table, energies, "ref")
    for method, value in per_reaction["r1"].items():
        assert value == pytest.approx(0.0)
    assert class_means["ISO"]["x"] == pytest.approx(0.0)


def test_reaction_atomization_hand_value():
    table = ReactionTable(
        reactions=(
            Reaction(
                id="tae_ab",
                reaction_class="TAE",
                reactants=(("ab", 1),),
                products=(("a", 1), ("b", 1)),
            ),
        )
    )
    energies = {
        "ab": {"x": -10.00, "ref": -10.05},
        "a": {"x": -4.00, "ref": -4.01},
        "b": {"x": -5.00, "ref": -5.02},
    }
    per_reaction, class_means = reaction_energy_errors(table, energies, "ref")
    expected = (-10.00 + 10.05) - (-4.00 + 4.01) - (-5.00 + 5.02)
    assert per_reaction["tae_ab"]["x"] == pytest.approx(expected, abs=1e-12)
    assert class_means["TAE"]["x"] == pytest.approx(abs(expected), abs=1e-12)


def test_reaction_stoichiometry_scales():
    table = ReactionTable(
        reactions=(
            Reaction(id="dimer", reaction_class="SN", reactants=(("a", 2),), products=(("a2", 1),)),
        )
    )
    energies = {"a": {"x": -1.0, "ref": -1.1}, "a2": {"x": -2.0, "ref": -2.0}}
    per_reaction, _ = reaction_energy_errors(table, energies, "ref")
    assert per_reaction["dimer"]["x"] == pytest.approx(2 * 0.1 - 0.0, abs=1e-12)


def test_reaction_missing_species():
    table = ReactionTable(
        reactions=(
            Reaction(id="r", reaction_class="BDE", reactants=(("a", 1),), products=(("b", 1),)),
        )
    )
    with pytest.raises(MissingDataError):
        reaction_energy_errors(table, {"a": {"x": -1.0, "ref": -1.0}}, "ref")


def test_reaction_missing_method_cell():
    table = ReactionTable(
        reactions=(
            Reaction(id="r", reaction_class="HAT", reactants=(("a", 1),), products=(("b", 1),)),
        )
    )
    energies = {"a": {"x": -1.0, "ref": -1.0}, "b": {"ref": -2.0}}
    with pytest.raises(MissingDataError) as info:
        reaction_energy_errors(table, energies, "ref")
    assert info.value.species == "b"
    assert info.value.method == "x"


def test_reaction_validation():
    with pytest.raises(ConfigurationError):
        Reaction(id="r", reaction_class="XYZ", reactants=(("a", 1),), products=(("b", 1),))
    with pytest.raises(ConfigurationError):
        Reaction(id="r", reaction_class="TAE", reactants=(), products=(("b", 1),))
    with pytest.raises(ConfigurationError):
        Reaction(id="r", reaction_class="TAE", reactants=(("a", 0),), products=(("b", 1),))
    ok = Reaction(id="r", reaction_class="TAE", reactants=(("a", 1),), products=(("b", 1),))
    with pytest.raises(ConfigurationError):
        ReactionTable(reactions=(ok, ok))


# ------------------------------------------------------------ stat_profile


def test_profile_constant_list():
    profile = stat_profile([0.7, 0.7, 0.7])
    assert profile.median == 0.7
    assert profile.iqr == 0.0
    assert profile.max_w == 0.7
    assert profile.min_w == 0.7
    assert profile.outliers == ()


def test_profile_whisker_formula():
    values = [0.0006, 0.0006, 0.003, 0.0056, 0.0056]
    profile = stat_profile(values)
    assert profile.q1 == pytest.approx(0.0006)
    assert profile.q3 == pytest.approx(0.0056)
    assert profile.max_w == pytest.approx(0.0131)
    assert profile.min_w == pytest.approx(-0.0069)


def test_profile_eleven_points_vs_oracle():
    rng = np.random.default_rng(13)
    values = rng.normal(size=11)
    profile = stat_profile(values)
    q1, med, q3 = quantile_positions(values)
    np.testing.assert_allclose(profile.q1, q1, atol=1e-14)
    np.testing.assert_allclose(profile.median, med, atol=1e-14)
    np.testing.assert_allclose(profile.q3, q3, atol=1e-14)


def test_profile_random_vectors_vs_oracle():
    rng = np.random.default_rng(29)
    for _ in range(20):
        values = rng.normal(size=int(rng.integers(1, 40)))
        profile = stat_profile(values)
        q1, med, q3 = quantile_positions(values)
        np.testing.assert_allclose((profile.q1, profile.median, profile.q3), (q1, med, q3), atol=1e-13)


def test_profile_permutation_invariant():
    rng = np.random.default_rng(31)
    values = rng.normal(size=15)
    base = stat_profile(values)
    shuffled = stat_profile(rng.permutation(values))
    assert base == shuffled


def test_profile_scale_equivariant():
    rng = np.random.default_rng(37)
    values = rng.normal(size=12)
    c = 2.5
    base = stat_profile(values)
    scaled = stat_profile(c * values)
    np.testing.assert_allclose(scaled.median, c * base.median, atol=1e-12)
    np.testing.assert_allclose(scaled.q1, c * base.q1, atol=1e-12)
    np.testing.assert_allclose(scaled.q3, c * base.q3, atol=1e-12)
    np.testing.assert_allclose(scaled.iqr, c * base.iqr, atol=1e-12)
    np.testing.assert_allclose(scaled.max_w, c * base.max_w, atol=1e-12)
    np.testing.assert_allclose(scaled.min_w, c * base.min_w, atol=1e-12)
    np.testing.assert_allclose(scaled.outliers, tuple(c * o for o in base.outliers), atol=1e-12)


def test_profile_outliers_exact_set():
    values = [0.0, 1.0, 2.0, 3.0, 100.0, -50.0]
    profile = stat_profile(values)
    expected = tuple(
        sorted(v for v in values if v < profile.min_w or v > profile.max_w)
    )
    assert profile.outliers == expected
    assert 100.0 in profile.outliers
    assert -50.0 in profile.outliers


def test_profile_empty_rejected():
    with pytest.raises(ConfigurationError):
        stat_profile([])


def test_profile_invariants_enforced():
    with pytest.raises(ConfigurationError):
        StatProfile(median=0.0, q1=1.0, q3=2.0, iqr=1.0, max_w=3.5, min_w=-0.5, outliers=())
    with pytest.raises(ConfigurationError):
        StatProfile(median=1.5, q1=1.0, q3=2.0, iqr=5.0, max_w=9.5, min_w=-6.5, outliers=())
