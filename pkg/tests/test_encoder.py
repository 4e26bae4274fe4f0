import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import crc_long_division, kron_generator
from polarflip.construction import build_code_spec, default_crc_poly
from polarflip.encoder import (
    assemble_u,
    bit_reversal,
    compute_crc,
    crc_matrix,
    crc_syndrome,
    encode,
    polar_transform,
)


@pytest.mark.parametrize("N", [1, 2, 4, 8])
def test_transform_matches_generator_matrix_exhaustively(N):
    G = kron_generator(N)
    for bits in itertools.product((0, 1), repeat=N):
        u = np.array(bits, dtype=np.uint8)
        assert np.array_equal(polar_transform(u), (u @ G) % 2)


def test_transform_matches_generator_matrix_n16_batch():
    G = kron_generator(16)
    u = np.random.default_rng(0).integers(0, 2, (2000, 16)).astype(np.uint8)
    assert np.array_equal(polar_transform(u), (u.astype(np.int64) @ G) % 2)


def test_transform_is_an_involution():
    u = np.random.default_rng(1).integers(0, 2, (50, 64)).astype(np.uint8)
    assert np.array_equal(polar_transform(polar_transform(u)), u)


def test_transform_rejects_bad_length():
    with pytest.raises(ValueError):
        polar_transform(np.zeros(12, np.uint8))


def test_bit_reversal():
    assert bit_reversal(8).tolist() == [0, 4, 2, 6, 1, 5, 3, 7]


@pytest.mark.parametrize("n_crc", [4, 8, 11, 16, 24])
@given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=80))
def test_crc_matches_long_division(n_crc, bits):
    poly = default_crc_poly(n_crc)
    assert compute_crc(bits, poly).tolist() == crc_long_division(bits, poly)


@given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=60))
def test_crc_codeword_has_zero_remainder(bits):
    poly = default_crc_poly(16)
    word = list(bits) + compute_crc(bits, poly).tolist()
    reg = np.array(word, dtype=np.uint8)
    for k in range(len(bits)):
        if reg[k]:
            reg[k : k + 17] ^= np.array(poly, dtype=np.uint8)
    assert not reg.any()


def test_crc_matrix_is_linear_form_of_crc():
    poly = default_crc_poly(24)
    rng = np.random.default_rng(2)
    G = crc_matrix(40, poly)
    for _ in range(50):
        p = rng.integers(0, 2, 40).astype(np.uint8)
        assert np.array_equal((p @ G) & 1, compute_crc(p, poly))
    p = rng.integers(0, 2, (5, 40)).astype(np.uint8)
    crc = np.array([compute_crc(r, poly) for r in p])
    assert not crc_syndrome(p, crc, poly).any()
    crc[2, 3] ^= 1
    assert crc_syndrome(p, crc, poly).any(axis=1).tolist() == [False, False, True, False, False]


@pytest.mark.parametrize("cfg", [(64, 28, 4, 3, 4), (512, 256, 16, 8, 4), (256, 120, 8, 0, 2)])
def test_assemble_u_places_every_role(cfg):
    spec = build_code_spec(*cfg)
    rng = np.random.default_rng(3)
    for _ in range(20):
        payload = rng.integers(0, 2, spec.K).astype(np.uint8)
        u = assemble_u(payload, spec)
        assert not u[spec.frozen_mask].any()
        assert np.array_equal(u[spec.payload_positions], payload)
        for pc in spec.pc_bits:
            assert u[pc.position] == np.bitwise_xor.reduce(u[list(pc.protected)])
        if spec.n_crc:
            assert np.array_equal(u[spec.crc_positions], compute_crc(payload, spec.crc_poly))
        assert np.array_equal(encode(payload, spec), polar_transform(u))


def test_assemble_u_rejects_wrong_payload_length():
    spec = build_code_spec(64, 28, 4, 3, 4)
    with pytest.raises(ValueError):
        assemble_u(np.zeros(27, np.uint8), spec)
