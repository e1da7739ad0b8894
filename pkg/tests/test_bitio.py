import pytest
from hypothesis import given, strategies as st

from sdcomp.bitio import BitReader, BitWriter, se_bits, ue_bits
from sdcomp.errors import RegionDecodeError


@pytest.mark.parametrize("v, bits", [
    (0, "1"),
    (1, "010"),
    (2, "011"),
    (3, "00100"),
    (6, "00111"),
    (7, "0001000"),
    (63, "0000001000000"),
    (64, "0000001000001"),
])
def test_ue_vectors(v, bits):
    assert ue_bits(v) == bits


@pytest.mark.parametrize("v, k", [(0, 0), (1, 1), (-1, 2), (2, 3), (-2, 4), (100, 199), (-100, 200)])
def test_se_maps_to_ue(v, k):
    assert se_bits(v) == ue_bits(k)


def test_ue_rejects_negative():
    with pytest.raises(ValueError):
        ue_bits(-1)


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=50))
def test_ue_roundtrip(values):
    bw = BitWriter()
    for v in values:
        bw.ue(v)
    br = BitReader(bw.getvalue())
    assert [br.ue() for _ in values] == values
    br.expect_padding()


@given(st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=50))
def test_se_roundtrip(values):
    bw = BitWriter()
    for v in values:
        bw.se(v)
    br = BitReader(bw.getvalue())
    assert [br.se() for _ in values] == values


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_ue_prefix_free(a, b):
    if a != b:
        sa, sb = ue_bits(a), ue_bits(b)
        assert not sa.startswith(sb) and not sb.startswith(sa)


def test_reader_exhaustion_is_structured():
    with pytest.raises(RegionDecodeError):
        BitReader(b"\x00").ue()
    with pytest.raises(RegionDecodeError):
        BitReader(b"").ue()
    # 7 zeros, then '1' as the last bit: the 7-bit suffix is missing
    with pytest.raises(RegionDecodeError):
        BitReader(b"\x01").ue()


def test_padding_check():
    br = BitReader(b"\x80\x00")
    assert br.ue() == 0
    with pytest.raises(RegionDecodeError):
        br.expect_padding()
