import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_scl
from polarflip.channel import ChannelConfig, frame_rng, llr, modulate, noiseless_llr
from polarflip.construction import build_code_spec
from polarflip.encoder import assemble_u, encode
from polarflip.metrics import e_metric
from polarflip.scl import PC_PENALTY, Status, count_cnp, pc_check, pm_update, scl_decode


def noisy_frame(spec, ebno, seed, frame):
    rng = frame_rng(seed, frame)
    payload = rng.integers(0, 2, spec.K).astype(np.uint8)
    u = assemble_u(payload, spec)
    sigma2 = ChannelConfig(ebno, spec.rate).sigma2
    y = modulate(encode(payload, spec)) + np.sqrt(sigma2) * rng.standard_normal(spec.N)
    return payload, u, llr(y, sigma2)


@given(st.floats(-1e3, 0) | st.floats(0, 1e3), st.integers(0, 1), st.floats(0, 100))
def test_pm_update_oracle(lam, bit, pm):
    hard = 1 if lam < 0 else 0
    expected = pm + abs(lam) if bit != hard and lam != 0 else pm
    assert pm_update(pm, lam, bit) == expected
    assert pm_update(pm, lam, bit) >= pm


def test_cnp_convention():
    assert count_cnp(280, 4) == 1118
    assert count_cnp(10, 4) == 38
    assert count_cnp([280, 10], 4) == 1156
    assert count_cnp(1, 4) == 2 and count_cnp(0, 4) == 0
    assert count_cnp(280, 8) == 2 + 4 + 8 * 278
    assert count_cnp(280, 1) == 280


@pytest.mark.parametrize("L", [2, 4])
def test_brute_force_equivalence_n16(L):
    spec = build_code_spec(16, 6, 0, 0, L)
    frames = 500 if L == 2 else 150
    for f in range(frames):
        _, _, lam = noisy_frame(spec, 1.0, 11, f)
        out = scl_decode(lam, spec, check_pc=False)
        ref = brute_force_scl(lam, spec.frozen_mask, L)
        assert [p for p, _ in ref["paths"]] == [tuple(r) for r in out.decisions.tolist()]
        np.testing.assert_allclose(out.pms, [pm for _, pm in ref["paths"]], rtol=1e-12, atol=1e-12)
        for i in range(16):
            row = out.pm_trace[i]
            np.testing.assert_allclose(np.sort(row[~np.isnan(row)]), ref["trace"][i], rtol=1e-12, atol=1e-12)
            cands = ref["candidates"][i]
            if cands is None:
                assert np.isnan(out.e_values[i])
            else:
                assert out.e_values[i] == pytest.approx(e_metric(cands[:L], cands[L:]), abs=1e-9)


def test_brute_force_equivalence_with_flips():
    spec = build_code_spec(16, 7, 0, 0, 2)
    domain = np.flatnonzero(spec.metric_domain)
    rng = np.random.default_rng(5)
    for f in range(200):
        _, _, lam = noisy_frame(spec, 1.0, 12, f)
        flip = tuple(sorted(rng.choice(domain, rng.integers(1, 3), replace=False).tolist()))
        out = scl_decode(lam, spec, flip_set=flip, check_pc=False)
        ref = brute_force_scl(lam, spec.frozen_mask, 2, flip)
        assert [p for p, _ in ref["paths"]] == [tuple(r) for r in out.decisions.tolist()]
        np.testing.assert_allclose(out.pms, [pm for _, pm in ref["paths"]], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("N,K,n_crc,n_pc", [(64, 24, 8, 3), (256, 120, 16, 4), (512, 256, 16, 8)])
def test_noiseless_roundtrip(N, K, n_crc, n_pc):
    spec = build_code_spec(N, K, n_crc, n_pc, 4)
    rng = np.random.default_rng(N)
    for _ in range(1000):
        payload = rng.integers(0, 2, K).astype(np.uint8)
        out = scl_decode(noiseless_llr(encode(payload, spec)), spec)
        assert out.status is Status.CRC_PASS
        assert np.array_equal(out.u_hat[spec.payload_positions], payload)
        assert out.cnp == count_cnp(spec.nonfrozen.size, 4)


SPEC = build_code_spec(512, 256, 16, 8, 4)


def test_pm_monotonic_along_decoding():
    for f in range(40):
        _, _, lam = noisy_frame(SPEC, 1.5, 3, f)
        out = scl_decode(lam, SPEC, check_pc=False)
        best_so_far = np.nanmin(out.pm_trace, axis=1)
        assert (np.diff(best_so_far) >= -1e-12).all()
        worst = np.nanmax(out.pm_trace, axis=1)
        assert (worst >= best_so_far).all()
        assert (out.pms >= 0).all()


def test_flip_complementarity():
    domain = np.flatnonzero(SPEC.flip_candidates)
    rng = np.random.default_rng(4)
    for f in range(40):
        _, _, lam = noisy_frame(SPEC, 1.5, 4, f)
        j = int(rng.choice(domain))
        base = scl_decode(lam, SPEC, check_pc=False)
        flipped = scl_decode(lam, SPEC, flip_set=(j,), check_pc=False)
        np.testing.assert_array_equal(base.pm_trace[:j], flipped.pm_trace[:j])
        kept, other = base.pm_trace[j], flipped.pm_trace[j]
        assert np.nanmax(kept) <= np.nanmin(other)
        # together they are the 2L candidates, so E at j is unchanged
        assert base.e_values[j] == pytest.approx(flipped.e_values[j])
        assert not np.array_equal(base.decisions[:, : j + 1], flipped.decisions[:, : j + 1])


def test_e_values_positive_and_only_on_metric_domain():
    for f in range(40):
        _, _, lam = noisy_frame(SPEC, 1.0, 5, f)
        flip = (int(np.flatnonzero(SPEC.flip_candidates)[f]),)
        for out in (scl_decode(lam, SPEC), scl_decode(lam, SPEC, flip_set=flip)):
            e = out.e_values[: out.breakpoint + 1]
            defined = ~np.isnan(e)
            assert np.array_equal(defined, SPEC.metric_domain[: out.breakpoint + 1])
            assert (e[defined] >= 0).all()


def test_pc_early_termination_is_sound():
    seen = 0
    for f in range(300):
        _, u, lam = noisy_frame(SPEC, 1.0, 6, f)
        out = scl_decode(lam, SPEC)
        stop = out.breakpoint
        if out.status is Status.PC_EARLY_TERMINATION:
            seen += 1
            assert stop in SPEC.pc_positions
            assert not pc_check(out.decisions, stop, SPEC)
            assert not (out.decisions[:, : stop + 1] == u[: stop + 1]).all(axis=1).any()
            nonfrozen_seen = int((~SPEC.frozen_mask[: stop + 1]).sum())
            assert out.visited == nonfrozen_seen
            assert out.cnp == count_cnp(nonfrozen_seen, 4)
        else:
            # checks only act at PC bits; with retain they never alter the list
            plain = scl_decode(lam, SPEC, check_pc=False)
            assert stop == SPEC.N - 1
            assert np.array_equal(out.decisions, plain.decisions)
            assert np.array_equal(out.pms, plain.pms)
    assert seen > 10


def test_without_pc_checks_attempt_runs_to_the_end():
    for f in range(50):
        _, _, lam = noisy_frame(SPEC, 1.0, 6, f)
        out = scl_decode(lam, SPEC, check_pc=False)
        assert out.status is not Status.PC_EARLY_TERMINATION
        assert out.breakpoint == SPEC.N - 1 and out.cnp == 1118


def test_penalize_policy_marks_violating_paths():
    for f in range(60):
        _, _, lam = noisy_frame(SPEC, 1.5, 7, f)
        out = scl_decode(lam, SPEC, pc_policy="penalize")
        if out.status is Status.PC_EARLY_TERMINATION:
            continue
        for row, pm in zip(out.decisions, out.pms):
            if not pc_check(row, SPEC.N - 1, SPEC):
                assert pm >= PC_PENALTY


def test_crc_pass_selects_smallest_metric_passing_path():
    spec = build_code_spec(512, 256, 24, 0, 4)
    for f in range(60):
        _, _, lam = noisy_frame(spec, 1.5, 8, f)
        out = scl_decode(lam, spec)
        if out.status is Status.CRC_PASS:
            assert out.crc_ok[out.best]
            assert out.pms[out.best] == out.pms[out.crc_ok].min()
        else:
            assert out.pms[out.best] == out.pms.min()


@pytest.mark.parametrize(
    "flip",
    [(5, 3), (0,), (600,)],
)
def test_invalid_flip_sets_rejected(flip):
    with pytest.raises(ValueError):
        scl_decode(np.ones(512), SPEC, flip_set=flip)


def test_flips_in_a_prime_or_frozen_rejected():
    with pytest.raises(ValueError):
        scl_decode(np.ones(512), SPEC, flip_set=(int(SPEC.a_prime[0]),))
    with pytest.raises(ValueError):
        scl_decode(np.ones(512), SPEC, flip_set=(int(np.flatnonzero(SPEC.frozen_mask)[0]),))


def test_trace_lines_are_json_per_visited_bit():
    _, _, lam = noisy_frame(SPEC, 1.5, 9, 0)
    out = scl_decode(lam, SPEC, check_pc=False)
    lines = [json.loads(s) for s in out.trace_lines(SPEC)]
    assert len(lines) == SPEC.nonfrozen.size
    assert lines[0]["bit"] == SPEC.nonfrozen[0] + 1 and lines[0]["e"] is None
    assert len(lines[-1]["pms"]) == 4
